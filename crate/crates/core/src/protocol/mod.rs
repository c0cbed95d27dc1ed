//! Binary wire protocol.
//!
//! A connection starts with the 5-byte preamble `"SAIL", 0x01`, sent by the
//! client and echoed by the server. After that both directions carry framed
//! messages: opcode (1 byte), body length (u32 LE), body. All integers are
//! little-endian. Requests and responses strictly alternate.

mod messages;
mod views;

use std::io::{self, Read, Write};

use thiserror::Error;

pub use messages::{
    opcode, CategoryTable, Compression, ErrorCode, Handshake, Request, Response, MAX_RESOLUTION,
};
pub use views::{
    decode_blocks, frame_overhead, pack_views, unpack_views, view_bytes, ViewBlock, VIEW_BLOCK_HEADER_LEN,
};

pub const MAGIC: [u8; 4] = *b"SAIL";
pub const VERSION: u8 = 1;
pub const PREAMBLE: [u8; 5] = [b'S', b'A', b'I', b'L', VERSION];
pub const DEFAULT_PORT: u16 = 8085;
/// Largest accepted message body.
pub const MAX_BODY: usize = 64 << 20;
/// Opcode byte plus body length.
pub const MESSAGE_HEADER_LEN: usize = 5;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated input: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("body of {0} bytes exceeds the 64 MiB limit")]
    Oversized(usize),
    #[error("unknown opcode {0:#04x}")]
    UnknownOpcode(u8),
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error("view {view}: expected {expected} bytes, found {actual}")]
    LengthMismatch { view: u8, expected: usize, actual: usize },
    #[error("view {0} appears twice")]
    DuplicateView(u8),
    #[error("unknown view id {0}")]
    UnknownView(u8),
    #[error("unknown compression mode {0}")]
    UnknownCompression(u8),
    #[error("gzip inflate failed: {0}")]
    Inflate(String),
    #[error(transparent)]
    Io(io::Error),
}

impl ProtocolError {
    pub fn is_truncation(&self) -> bool {
        matches!(self, ProtocolError::Truncated { .. })
    }

    pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        ProtocolError::Malformed { what, detail: detail.into() }
    }
}

impl From<io::Error> for ProtocolError {
    fn from(e: io::Error) -> Self {
        // a short read on a stream is a truncated message
        if e.kind() == io::ErrorKind::UnexpectedEof {
            ProtocolError::Truncated { needed: 1, available: 0 }
        } else {
            ProtocolError::Io(e)
        }
    }
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

/// One framed message. The opcode is kept as a raw byte so that unknown
/// opcodes survive decoding and can be rejected by the dispatcher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub opcode: u8,
    pub body: Vec<u8>,
}

impl WireMessage {
    pub fn new(opcode: u8, body: Vec<u8>) -> Self {
        WireMessage { opcode, body }
    }

    pub fn encoded_len(&self) -> usize {
        MESSAGE_HEADER_LEN + self.body.len()
    }
}

pub fn encode_message(opcode: u8, body: &[u8]) -> Result<Vec<u8>> {
    if body.len() > MAX_BODY {
        return Err(ProtocolError::Oversized(body.len()));
    }
    let mut out = Vec::with_capacity(MESSAGE_HEADER_LEN + body.len());
    out.push(opcode);
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(body);
    Ok(out)
}

/// Decodes one message from the front of `bytes`, returning it with the
/// number of bytes consumed.
pub fn decode_message(bytes: &[u8]) -> Result<(WireMessage, usize)> {
    let mut c = Cursor::new(bytes);
    let opcode = c.u8()?;
    let len = c.u32()? as usize;
    if len > MAX_BODY {
        return Err(ProtocolError::Oversized(len));
    }
    let body = c.bytes(len)?.to_vec();
    Ok((WireMessage { opcode, body }, c.position()))
}

pub fn write_message(w: &mut impl Write, msg: &WireMessage) -> Result<()> {
    if msg.body.len() > MAX_BODY {
        return Err(ProtocolError::Oversized(msg.body.len()));
    }
    let mut header = [0u8; MESSAGE_HEADER_LEN];
    header[0] = msg.opcode;
    header[1..].copy_from_slice(&(msg.body.len() as u32).to_le_bytes());
    w.write_all(&header)?;
    w.write_all(&msg.body)?;
    w.flush()?;
    Ok(())
}

/// Reads one message. `Ok(None)` means the peer closed the stream cleanly
/// at a message boundary.
pub fn read_message(r: &mut impl Read) -> Result<Option<WireMessage>> {
    let mut opcode = [0u8; 1];
    loop {
        match r.read(&mut opcode) {
            Ok(0) => return Ok(None),
            Ok(_) => break,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let mut len = [0u8; 4];
    read_exact_counted(r, &mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_BODY {
        return Err(ProtocolError::Oversized(len));
    }
    let mut body = vec![0u8; len];
    read_exact_counted(r, &mut body)?;
    Ok(Some(WireMessage { opcode: opcode[0], body }))
}

fn read_exact_counted(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => return Err(ProtocolError::Truncated { needed: buf.len(), available: filled }),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

pub fn write_preamble(w: &mut impl Write) -> Result<()> {
    w.write_all(&PREAMBLE)?;
    w.flush()?;
    Ok(())
}

pub fn check_preamble(bytes: &[u8]) -> Result<()> {
    let mut c = Cursor::new(bytes);
    let magic: [u8; 4] = c.bytes(4)?.try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(ProtocolError::BadMagic(magic));
    }
    match c.u8()? {
        VERSION => Ok(()),
        v => Err(ProtocolError::UnsupportedVersion(v)),
    }
}

pub fn read_preamble(r: &mut impl Read) -> Result<()> {
    let mut buf = [0u8; PREAMBLE.len()];
    read_exact_counted(r, &mut buf)?;
    check_preamble(&buf)
}

/// Bounds-checked little-endian reader over a byte slice.
pub(crate) struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(ProtocolError::Truncated { needed: n, available: self.remaining() });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.bytes(N)?.try_into().expect("length checked"))
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    /// u16 length followed by UTF-8.
    pub(crate) fn string(&mut self) -> Result<String> {
        let n = self.u16()? as usize;
        let raw = self.bytes(n)?;
        String::from_utf8(raw.to_vec()).map_err(|e| ProtocolError::malformed("string", e.to_string()))
    }

    pub(crate) fn finish(self, what: &'static str) -> Result<()> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(ProtocolError::malformed(what, format!("{n} trailing bytes"))),
        }
    }
}

/// Appends a u16-length-prefixed string, cutting it at a character boundary
/// when longer than 65535 bytes.
pub(crate) fn put_string(out: &mut Vec<u8>, s: &str) {
    let mut end = s.len().min(u16::MAX as usize);
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    out.extend_from_slice(&(end as u16).to_le_bytes());
    out.extend_from_slice(&s.as_bytes()[..end]);
}
