use serde::{Deserialize, Serialize};

use super::LinkError;
use crate::gf2::BitString;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MsgType {
    BasisSift = 1,
    EcParity = 2,
    EvTag = 3,
    PaSeed = 4,
    /// Bob's detection announcement (unauthenticated, unencrypted).
    KeySift = 5,
}

impl MsgType {
    pub fn from_byte(b: u8) -> Option<MsgType> {
        Some(match b {
            1 => MsgType::BasisSift,
            2 => MsgType::EcParity,
            3 => MsgType::EvTag,
            4 => MsgType::PaSeed,
            5 => MsgType::KeySift,
            _ => return None,
        })
    }
}

/// A classical message and its (possibly empty) authentication tag.
///
/// Wire layout: `u32` LE payload bit length, type byte, payload bytes
/// (bit 0 = MSB of the first byte), `u16` LE tag bit length, tag bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageFrame {
    pub msg_type: MsgType,
    pub payload: BitString,
    pub tag: BitString,
}

impl MessageFrame {
    pub fn new(msg_type: MsgType, payload: BitString, tag: BitString) -> Self {
        MessageFrame { msg_type, payload, tag }
    }

    pub fn encode(&self) -> Result<Vec<u8>, LinkError> {
        let plen = u32::try_from(self.payload.len())
            .map_err(|_| LinkError::Malformed(format!("payload of {} bits too long", self.payload.len())))?;
        let tlen = u16::try_from(self.tag.len())
            .map_err(|_| LinkError::Malformed(format!("tag of {} bits too long", self.tag.len())))?;
        let payload = self.payload.to_bytes();
        let tag = self.tag.to_bytes();
        let mut out = Vec::with_capacity(7 + payload.len() + tag.len());
        out.extend_from_slice(&plen.to_le_bytes());
        out.push(self.msg_type as u8);
        out.extend_from_slice(&payload);
        out.extend_from_slice(&tlen.to_le_bytes());
        out.extend_from_slice(&tag);
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> Result<MessageFrame, LinkError> {
        let short = || LinkError::Malformed("frame truncated".into());
        let plen = u32::from_le_bytes(buf.get(0..4).ok_or_else(short)?.try_into().expect("4 bytes")) as usize;
        let msg_type = MsgType::from_byte(*buf.get(4).ok_or_else(short)?)
            .ok_or_else(|| LinkError::Malformed(format!("unknown message type {}", buf[4])))?;
        let pbytes = plen.div_ceil(8);
        let p_end = 5 + pbytes;
        let payload = BitString::from_bytes(buf.get(5..p_end).ok_or_else(short)?, plen)
            .map_err(|e| LinkError::Malformed(e.to_string()))?;
        let tlen =
            u16::from_le_bytes(buf.get(p_end..p_end + 2).ok_or_else(short)?.try_into().expect("2 bytes")) as usize;
        let t_end = p_end + 2 + tlen.div_ceil(8);
        let tag = BitString::from_bytes(buf.get(p_end + 2..t_end).ok_or_else(short)?, tlen)
            .map_err(|e| LinkError::Malformed(e.to_string()))?;
        if t_end != buf.len() {
            return Err(LinkError::Malformed(format!("{} trailing bytes", buf.len() - t_end)));
        }
        Ok(MessageFrame { msg_type, payload, tag })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout() {
        let f = MessageFrame::new(
            MsgType::EvTag,
            BitString::parse("101").unwrap(),
            BitString::parse("1000000001").unwrap(),
        );
        let bytes = f.encode().unwrap();
        assert_eq!(bytes, vec![3, 0, 0, 0, 3, 0b1010_0000, 10, 0, 0b1000_0000, 0b0100_0000]);
        assert_eq!(MessageFrame::decode(&bytes).unwrap(), f);
    }

    #[test]
    fn rejects_garbage() {
        assert!(MessageFrame::decode(&[]).is_err());
        assert!(MessageFrame::decode(&[0, 0, 0, 0, 9, 0, 0]).is_err());
        assert!(MessageFrame::decode(&[0, 0, 0, 0, 1, 0, 0, 7]).is_err());
        assert!(MessageFrame::decode(&[1, 0, 0, 0, 1, 0b0100_0000, 0, 0]).is_err());
        let empty = MessageFrame::new(MsgType::PaSeed, BitString::zeros(0), BitString::zeros(0));
        assert_eq!(MessageFrame::decode(&empty.encode().unwrap()).unwrap(), empty);
    }
}
