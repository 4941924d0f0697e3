use std::io::{ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::{Duration, Instant};

use super::{LinkError, MessageFrame, MsgType};

/// An ordered, reliable duplex channel carrying frames.
pub trait Link {
    fn send(&mut self, frame: &MessageFrame) -> Result<(), LinkError>;
    fn recv(&mut self) -> Result<MessageFrame, LinkError>;
}

impl<L: Link + ?Sized> Link for &mut L {
    fn send(&mut self, frame: &MessageFrame) -> Result<(), LinkError> {
        (**self).send(frame)
    }

    fn recv(&mut self) -> Result<MessageFrame, LinkError> {
        (**self).recv()
    }
}

impl<L: Link + ?Sized> Link for Box<L> {
    fn send(&mut self, frame: &MessageFrame) -> Result<(), LinkError> {
        (**self).send(frame)
    }

    fn recv(&mut self) -> Result<MessageFrame, LinkError> {
        (**self).recv()
    }
}

/// In-process endpoint; frames travel as encoded bytes.
pub struct MemLink {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

pub fn in_memory_pair() -> (MemLink, MemLink) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (MemLink { tx: a_tx, rx: a_rx }, MemLink { tx: b_tx, rx: b_rx })
}

impl Link for MemLink {
    fn send(&mut self, frame: &MessageFrame) -> Result<(), LinkError> {
        self.tx.send(frame.encode()?).map_err(|_| LinkError::Disconnected)
    }

    fn recv(&mut self) -> Result<MessageFrame, LinkError> {
        let bytes = self.rx.recv().map_err(|_| LinkError::Disconnected)?;
        MessageFrame::decode(&bytes)
    }
}

/// Stream endpoint: each frame is preceded by its `u32` LE byte length.
pub struct TcpLink {
    stream: TcpStream,
}

/// Bob's side: accept one connection on an already bound listener.
pub fn tcp_accept(listener: &TcpListener) -> Result<TcpLink, LinkError> {
    let (stream, _) = listener.accept()?;
    stream.set_nodelay(true)?;
    Ok(TcpLink { stream })
}

/// Alice's side: connect, retrying until `timeout` while Bob starts up.
pub fn tcp_connect<A: ToSocketAddrs>(addr: A, timeout: Duration) -> Result<TcpLink, LinkError> {
    let start = Instant::now();
    loop {
        match TcpStream::connect(&addr) {
            Ok(stream) => {
                stream.set_nodelay(true)?;
                return Ok(TcpLink { stream });
            }
            Err(e) if start.elapsed() < timeout && e.kind() == ErrorKind::ConnectionRefused => {
                std::thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

impl Link for TcpLink {
    fn send(&mut self, frame: &MessageFrame) -> Result<(), LinkError> {
        let bytes = frame.encode()?;
        let len = u32::try_from(bytes.len()).map_err(|_| LinkError::Malformed("frame too long".into()))?;
        let io = |e: std::io::Error| match e.kind() {
            ErrorKind::BrokenPipe | ErrorKind::ConnectionReset => LinkError::Disconnected,
            _ => LinkError::Io(e),
        };
        self.stream.write_all(&len.to_le_bytes()).map_err(io)?;
        self.stream.write_all(&bytes).map_err(io)?;
        Ok(())
    }

    fn recv(&mut self) -> Result<MessageFrame, LinkError> {
        let io = |e: std::io::Error| match e.kind() {
            ErrorKind::UnexpectedEof | ErrorKind::ConnectionReset => LinkError::Disconnected,
            _ => LinkError::Io(e),
        };
        let mut len = [0u8; 4];
        self.stream.read_exact(&mut len).map_err(io)?;
        let mut buf = vec![0u8; u32::from_le_bytes(len) as usize];
        self.stream.read_exact(&mut buf).map_err(io)?;
        MessageFrame::decode(&buf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultTarget {
    Payload,
    Tag,
}

/// Flips one bit of every outgoing frame of a given type, in the payload or
/// in the tag. Frames without bits in the chosen field pass unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub msg_type: MsgType,
    pub target: FaultTarget,
    pub bit: usize,
}

pub struct FaultyLink<L> {
    inner: L,
    fault: FaultSpec,
    pub injected: usize,
}

impl<L: Link> FaultyLink<L> {
    pub fn new(inner: L, fault: FaultSpec) -> Self {
        FaultyLink {
            inner,
            fault,
            injected: 0,
        }
    }
}

impl<L: Link> Link for FaultyLink<L> {
    fn send(&mut self, frame: &MessageFrame) -> Result<(), LinkError> {
        if frame.msg_type != self.fault.msg_type {
            return self.inner.send(frame);
        }
        let mut f = frame.clone();
        let field = match self.fault.target {
            FaultTarget::Payload => &mut f.payload,
            FaultTarget::Tag => &mut f.tag,
        };
        if !field.is_empty() {
            field.flip(self.fault.bit % field.len());
            self.injected += 1;
        }
        self.inner.send(&f)
    }

    fn recv(&mut self) -> Result<MessageFrame, LinkError> {
        self.inner.recv()
    }
}
