use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Gf2Error;

const WORD_BITS: usize = 64;

/// An ordered string of bits with an explicit length.
///
/// Bit `i` lives in word `i / 64` at bit position `i % 64` (least significant
/// first), so a `BitString` doubles as a GF(2) polynomial whose coefficient
/// of `x^i` is bit `i`. Bits past `len` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = BitString {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        s.clear_tail();
        s
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = BitString::zeros(0);
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Parses a string of `0`/`1` characters. Whitespace and `_` are skipped.
    pub fn parse(text: &str) -> Result<Self, Gf2Error> {
        let mut s = BitString::zeros(0);
        for c in text.chars() {
            match c {
                '0' => s.push(false),
                '1' => s.push(true),
                '_' => {}
                c if c.is_whitespace() => {}
                other => return Err(Gf2Error::InvalidBitChar(other)),
            }
        }
        Ok(s)
    }

    /// Builds a string from packed words; bits beyond `len` are dropped.
    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        let mut words = words;
        words.resize(words_for(len), 0);
        let mut s = BitString { len, words };
        s.clear_tail();
        s
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let words = (0..words_for(len)).map(|_| rng.gen::<u64>()).collect();
        BitString::from_words(words, len)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if bit {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % WORD_BITS == 0 {
            self.words.push(0);
        }
        self.len += 1;
        if bit {
            let i = self.len - 1;
            self.words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        if self.len % WORD_BITS == 0 {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn parity(&self) -> bool {
        self.words.iter().fold(0u64, |acc, w| acc ^ w).count_ones() & 1 == 1
    }

    /// Elementwise XOR of two equal-length strings.
    pub fn xor(&self, other: &BitString) -> Result<BitString, Gf2Error> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &BitString) -> Result<(), Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitString) -> Result<bool, Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        let acc = self
            .words
            .iter()
            .zip(&other.words)
            .fold(0u64, |acc, (a, b)| acc ^ (a & b));
        Ok(acc.count_ones() & 1 == 1)
    }

    /// Parity of `self[offset + j] & other[j]` over all `j < other.len()`.
    ///
    /// Panics if the window runs past the end of `self`.
    pub fn dot_at(&self, offset: usize, other: &BitString) -> bool {
        assert!(offset + other.len <= self.len, "window out of range");
        let shift = offset % WORD_BITS;
        let base = offset / WORD_BITS;
        let mut acc = 0u64;
        for (k, &w) in other.words.iter().enumerate() {
            let lo = self.words[base + k] >> shift;
            let hi = if shift == 0 {
                0
            } else {
                self.words.get(base + k + 1).map_or(0, |&x| x << (WORD_BITS - shift))
            };
            acc ^= (lo | hi) & w;
        }
        acc.count_ones() & 1 == 1
    }

    /// Copies `len` bits starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        let shift = start % WORD_BITS;
        let base = start / WORD_BITS;
        let words = (0..words_for(len))
            .map(|k| {
                let lo = self.words[base + k] >> shift;
                let hi = if shift == 0 {
                    0
                } else {
                    self.words.get(base + k + 1).map_or(0, |&x| x << (WORD_BITS - shift))
                };
                lo | hi
            })
            .collect();
        BitString::from_words(words, len)
    }

    pub fn reversed(&self) -> BitString {
        let mut out = BitString::zeros(self.len);
        for i in 0..self.len {
            if self.get(i) {
                out.set(self.len - 1 - i, true);
            }
        }
        out
    }

    /// Keeps the bits at the given positions, in order.
    pub fn select(&self, positions: &[usize]) -> BitString {
        let mut out = BitString::zeros(positions.len());
        for (k, &p) in positions.iter().enumerate() {
            if self.get(p) {
                out.set(k, true);
            }
        }
        out
    }

    /// Packs the bits into bytes, bit 0 in the most significant bit of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        bytes
    }

    /// Inverse of [`BitString::to_bytes`]. Padding bits must be zero.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self, Gf2Error> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Gf2Error::Truncated {
                needed: len.div_ceil(8),
                available: bytes.len(),
            });
        }
        let mut s = BitString::zeros(len);
        for i in 0..len {
            if bytes[i / 8] & (0x80 >> (i % 8)) != 0 {
                s.set(i, true);
            }
        }
        if len % 8 != 0 {
            let pad_mask = 0xffu8 >> (len % 8);
            if bytes[len / 8] & pad_mask != 0 {
                return Err(Gf2Error::NonZeroPadding);
            }
        }
        Ok(s)
    }

    /// Length as little-endian u64, then the packed bytes.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.len.div_ceil(8));
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        out.extend_from_slice(&self.to_bytes());
        out
    }

    /// Reads one serialized string from the front of `buf`, returning it with
    /// the number of bytes consumed.
    pub fn deserialize(buf: &[u8]) -> Result<(Self, usize), Gf2Error> {
        if buf.len() < 8 {
            return Err(Gf2Error::Truncated {
                needed: 8,
                available: buf.len(),
            });
        }
        let len = u64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let len = usize::try_from(len).map_err(|_| Gf2Error::TooLong(len))?;
        let nbytes = len.div_ceil(8);
        if buf.len() < 8 + nbytes {
            return Err(Gf2Error::Truncated {
                needed: 8 + nbytes,
                available: buf.len(),
            });
        }
        let s = BitString::from_bytes(&buf[8..8 + nbytes], len)?;
        Ok((s, 8 + nbytes))
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString({self})")
        } else {
            write!(f, "BitString(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString::from_bools(iter)
    }
}

// Serde form: {"len": n, "hex": "..."} using the wire byte order.
#[derive(Serialize, Deserialize)]
struct BitStringRepr {
    len: usize,
    hex: String,
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        BitStringRepr {
            len: self.len,
            hex: self.to_hex(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = BitStringRepr::deserialize(deserializer)?;
        if repr.hex.len() % 2 != 0 {
            return Err(D::Error::custom("odd-length hex"));
        }
        let bytes = (0..repr.hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&repr.hex[i..i + 2], 16))
            .collect::<Result<Vec<u8>, _>>()
            .map_err(D::Error::custom)?;
        BitString::from_bytes(&bytes, repr.len).map_err(D::Error::custom)
    }
}
