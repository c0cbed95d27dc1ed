//! Packing of rendered views into a frame payload: a count byte followed by
//! one block per view in ascending view id order.

use std::io::{Read, Write};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;

use crate::render::{FlowField, FrameViews, ViewKind};

use super::{Compression, Cursor, ProtocolError, Result};

/// view id, compression, uncompressed length, payload length.
pub const VIEW_BLOCK_HEADER_LEN: usize = 10;

/// One view as carried on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewBlock {
    pub view_id: u8,
    pub compression: Compression,
    pub uncompressed_len: u32,
    pub payload: Vec<u8>,
}

impl ViewBlock {
    pub fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.view_id);
        out.push(self.compression as u8);
        out.extend_from_slice(&self.uncompressed_len.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
    }

    fn decode(c: &mut Cursor) -> Result<Self> {
        let view_id = c.u8()?;
        let compression = Compression::from_u8(c.u8()?)?;
        let uncompressed_len = c.u32()?;
        let payload_len = c.u32()? as usize;
        if compression == Compression::Raw && payload_len != uncompressed_len as usize {
            return Err(ProtocolError::LengthMismatch {
                view: view_id,
                expected: uncompressed_len as usize,
                actual: payload_len,
            });
        }
        let payload = c.bytes(payload_len)?.to_vec();
        Ok(ViewBlock { view_id, compression, uncompressed_len, payload })
    }

    /// The uncompressed view bytes.
    pub fn inflate(&self) -> Result<Vec<u8>> {
        let expected = self.uncompressed_len as usize;
        match self.compression {
            Compression::Raw => Ok(self.payload.clone()),
            Compression::Gzip => {
                let mut out = Vec::with_capacity(expected);
                // read one byte past the declared size to detect oversized streams
                GzDecoder::new(self.payload.as_slice())
                    .take(expected as u64 + 1)
                    .read_to_end(&mut out)
                    .map_err(|e| ProtocolError::Inflate(e.to_string()))?;
                if out.len() != expected {
                    return Err(ProtocolError::LengthMismatch { view: self.view_id, expected, actual: out.len() });
                }
                Ok(out)
            }
        }
    }
}

/// Wire bytes of one view: bytes as rendered, flow as little-endian f32 pairs.
pub fn view_bytes(views: &FrameViews, kind: ViewKind) -> Option<Vec<u8>> {
    match kind {
        ViewKind::Flow => views.flow.as_ref().map(|f| f.data.iter().flat_map(|v| v.to_le_bytes()).collect()),
        k => views.bytes(k).cloned(),
    }
}

fn gzip(data: &[u8]) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::with_capacity(data.len() / 4 + 64), flate2::Compression::fast());
    enc.write_all(data).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

/// Serializes every present view of `views`.
pub fn pack_views(views: &FrameViews, compression: Compression) -> Result<Vec<u8>> {
    let mut blocks = Vec::new();
    for kind in ViewKind::ALL {
        let Some(raw) = view_bytes(views, kind) else { continue };
        let expected = kind.byte_len(views.width, views.height);
        if raw.len() != expected {
            return Err(ProtocolError::LengthMismatch { view: kind.id(), expected, actual: raw.len() });
        }
        let uncompressed_len = u32::try_from(raw.len()).map_err(|_| ProtocolError::Oversized(raw.len()))?;
        let payload = match compression {
            Compression::Raw => raw,
            Compression::Gzip => gzip(&raw),
        };
        blocks.push(ViewBlock { view_id: kind.id(), compression, uncompressed_len, payload });
    }
    let mut out = Vec::with_capacity(1 + blocks.iter().map(|b| VIEW_BLOCK_HEADER_LEN + b.payload.len()).sum::<usize>());
    out.push(blocks.len() as u8);
    for b in &blocks {
        b.encode(&mut out);
    }
    Ok(out)
}

/// Splits a packed frame into its blocks without inflating them. Rejects
/// unknown and repeated view ids.
pub fn decode_blocks(bytes: &[u8]) -> Result<Vec<ViewBlock>> {
    let mut c = Cursor::new(bytes);
    let count = c.u8()?;
    let mut seen = 0u8;
    let mut blocks = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let b = ViewBlock::decode(&mut c)?;
        let kind = ViewKind::from_id(b.view_id).ok_or(ProtocolError::UnknownView(b.view_id))?;
        let bit = 1 << (kind.id() - 1);
        if seen & bit != 0 {
            return Err(ProtocolError::DuplicateView(b.view_id));
        }
        seen |= bit;
        blocks.push(b);
    }
    c.finish("packed views")?;
    Ok(blocks)
}

/// Packed length minus payload bytes, i.e. the framing cost of a frame.
pub fn frame_overhead(bytes: &[u8]) -> Result<usize> {
    let payload: usize = decode_blocks(bytes)?.iter().map(|b| b.payload.len()).sum();
    Ok(bytes.len() - payload)
}

/// Inverse of [`pack_views`] for a `width × height` frame.
pub fn unpack_views(bytes: &[u8], width: u32, height: u32) -> Result<FrameViews> {
    let mut views = FrameViews::empty(width, height);
    for block in decode_blocks(bytes)? {
        let kind = ViewKind::from_id(block.view_id).expect("checked by decode_blocks");
        let expected = kind.byte_len(width, height);
        if block.uncompressed_len as usize != expected {
            return Err(ProtocolError::LengthMismatch {
                view: block.view_id,
                expected,
                actual: block.uncompressed_len as usize,
            });
        }
        let raw = block.inflate()?;
        match kind {
            ViewKind::Main => views.main = Some(raw),
            ViewKind::Category => views.category = Some(raw),
            ViewKind::Object => views.object = Some(raw),
            ViewKind::Depth => views.depth = Some(raw),
            ViewKind::Flow => {
                let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
                views.flow = Some(FlowField { width, height, data });
            }
        }
    }
    Ok(views)
}
