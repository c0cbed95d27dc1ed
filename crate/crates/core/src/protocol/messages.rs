//! Typed requests and responses and their body layouts.

use crate::render::ViewMask;

use super::{put_string, Cursor, ProtocolError, Result, WireMessage, MAX_BODY};

pub mod opcode {
    pub const REGISTER: u8 = 0x01;
    pub const CHANGE_SCENE: u8 = 0x02;
    pub const GET_FRAME: u8 = 0x03;
    pub const SET_POSITION: u8 = 0x04;
    pub const SET_ROTATION: u8 = 0x05;
    pub const TOGGLE_FOLLOW: u8 = 0x06;
    pub const DELETE: u8 = 0x07;
    /// Responses carry the request opcode with the high bit set.
    pub const REPLY: u8 = 0x80;
    pub const ERROR: u8 = 0xFF;
}

/// Largest accepted width or height.
pub const MAX_RESOLUTION: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum Compression {
    #[default]
    Raw = 0,
    Gzip = 1,
}

impl Compression {
    pub fn from_u8(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Compression::Raw),
            1 => Ok(Compression::Gzip),
            b => Err(ProtocolError::UnknownCompression(b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handshake {
    pub width: u32,
    pub height: u32,
    pub view_mask: ViewMask,
    pub compression: Compression,
}

impl Handshake {
    pub fn new(width: u32, height: u32, view_mask: ViewMask, compression: Compression) -> Self {
        Handshake { width, height, view_mask, compression }
    }

    /// Upper bound of a packed frame for this session, including worst-case
    /// gzip expansion.
    pub fn max_frame_len(&self) -> usize {
        self.view_mask
            .kinds()
            .map(|k| {
                let raw = k.byte_len(self.width, self.height);
                super::VIEW_BLOCK_HEADER_LEN + raw + raw / 1024 + 64
            })
            .sum::<usize>()
            + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(ProtocolError::malformed("handshake", detail));
        if self.width == 0 || self.height == 0 || self.width > MAX_RESOLUTION || self.height > MAX_RESOLUTION {
            return bad(format!("resolution {}x{} outside 1..={MAX_RESOLUTION}", self.width, self.height));
        }
        if self.view_mask.is_empty() || !self.view_mask.is_valid() {
            return bad(format!("view mask {:#04x}", self.view_mask.0));
        }
        if self.max_frame_len() > MAX_BODY {
            return bad(format!("frames at {}x{} would exceed the message limit", self.width, self.height));
        }
        Ok(())
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.push(self.view_mask.0);
        out.push(self.compression as u8);
    }

    fn decode(c: &mut Cursor) -> Result<Self> {
        let width = c.u32()?;
        let height = c.u32()?;
        let view_mask = ViewMask(c.u8()?);
        let compression = Compression::from_u8(c.u8()?)?;
        let h = Handshake { width, height, view_mask, compression };
        h.validate()?;
        Ok(h)
    }
}

/// `(category id, name)` pairs in ascending id order.
pub type CategoryTable = Vec<(u8, String)>;

fn put_categories(out: &mut Vec<u8>, table: &CategoryTable) -> Result<()> {
    let n = u16::try_from(table.len()).map_err(|_| ProtocolError::malformed("category table", "too many entries"))?;
    out.extend_from_slice(&n.to_le_bytes());
    for (id, name) in table {
        out.push(*id);
        put_string(out, name);
    }
    Ok(())
}

fn get_categories(c: &mut Cursor) -> Result<CategoryTable> {
    let n = c.u16()?;
    (0..n).map(|_| Ok((c.u8()?, c.string()?))).collect()
}

fn put_vec3(out: &mut Vec<u8>, v: [f32; 3]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn get_vec3(c: &mut Cursor) -> Result<[f32; 3]> {
    Ok([c.f32()?, c.f32()?, c.f32()?])
}

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Register(Handshake),
    ChangeScene(u8),
    GetFrame,
    SetPosition([f32; 3]),
    /// Euler angles in degrees, applied yaw (y), then pitch (x), then roll (z).
    SetRotation([f32; 3]),
    ToggleFollow,
    Delete,
}

impl Request {
    pub fn opcode(&self) -> u8 {
        match self {
            Request::Register(_) => opcode::REGISTER,
            Request::ChangeScene(_) => opcode::CHANGE_SCENE,
            Request::GetFrame => opcode::GET_FRAME,
            Request::SetPosition(_) => opcode::SET_POSITION,
            Request::SetRotation(_) => opcode::SET_ROTATION,
            Request::ToggleFollow => opcode::TOGGLE_FOLLOW,
            Request::Delete => opcode::DELETE,
        }
    }

    pub fn to_message(&self) -> WireMessage {
        let mut body = Vec::new();
        match self {
            Request::Register(h) => h.encode(&mut body),
            Request::ChangeScene(i) => body.push(*i),
            Request::SetPosition(v) | Request::SetRotation(v) => put_vec3(&mut body, *v),
            Request::GetFrame | Request::ToggleFollow | Request::Delete => {}
        }
        WireMessage::new(self.opcode(), body)
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self> {
        let mut c = Cursor::new(&msg.body);
        let req = match msg.opcode {
            opcode::REGISTER => Request::Register(Handshake::decode(&mut c)?),
            opcode::CHANGE_SCENE => Request::ChangeScene(c.u8()?),
            opcode::GET_FRAME => Request::GetFrame,
            opcode::SET_POSITION => Request::SetPosition(get_vec3(&mut c)?),
            opcode::SET_ROTATION => Request::SetRotation(get_vec3(&mut c)?),
            opcode::TOGGLE_FOLLOW => Request::ToggleFollow,
            opcode::DELETE => Request::Delete,
            op => return Err(ProtocolError::UnknownOpcode(op)),
        };
        c.finish("request body")?;
        Ok(req)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ErrorCode {
    BadRequest = 1,
    UnknownScene = 2,
    Internal = 3,
}

impl ErrorCode {
    pub fn from_u8(b: u8) -> Result<Self> {
        match b {
            1 => Ok(ErrorCode::BadRequest),
            2 => Ok(ErrorCode::UnknownScene),
            3 => Ok(ErrorCode::Internal),
            b => Err(ProtocolError::malformed("error response", format!("unknown code {b}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Registered { agent_id: u32, scenes: Vec<String>, categories: CategoryTable },
    SceneChanged(CategoryTable),
    /// Packed views, see [`super::pack_views`].
    Frame(Vec<u8>),
    PositionSet,
    RotationSet,
    /// New follow state.
    FollowToggled(bool),
    Deleted,
    Error { code: ErrorCode, message: String },
}

impl Response {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Response::Error { code, message: message.into() }
    }

    pub fn opcode(&self) -> u8 {
        let request = match self {
            Response::Registered { .. } => opcode::REGISTER,
            Response::SceneChanged(_) => opcode::CHANGE_SCENE,
            Response::Frame(_) => opcode::GET_FRAME,
            Response::PositionSet => opcode::SET_POSITION,
            Response::RotationSet => opcode::SET_ROTATION,
            Response::FollowToggled(_) => opcode::TOGGLE_FOLLOW,
            Response::Deleted => opcode::DELETE,
            Response::Error { .. } => return opcode::ERROR,
        };
        request | opcode::REPLY
    }

    pub fn to_message(&self) -> Result<WireMessage> {
        let mut body = Vec::new();
        match self {
            Response::Registered { agent_id, scenes, categories } => {
                body.extend_from_slice(&agent_id.to_le_bytes());
                let n = u8::try_from(scenes.len())
                    .map_err(|_| ProtocolError::malformed("scene list", "more than 255 scenes"))?;
                body.push(n);
                for s in scenes {
                    put_string(&mut body, s);
                }
                put_categories(&mut body, categories)?;
            }
            Response::SceneChanged(t) => put_categories(&mut body, t)?,
            Response::Frame(packed) => body.extend_from_slice(packed),
            Response::FollowToggled(on) => body.push(u8::from(*on)),
            Response::Error { code, message } => {
                body.push(*code as u8);
                put_string(&mut body, message);
            }
            Response::PositionSet | Response::RotationSet | Response::Deleted => {}
        }
        if body.len() > MAX_BODY {
            return Err(ProtocolError::Oversized(body.len()));
        }
        Ok(WireMessage::new(self.opcode(), body))
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self> {
        const REGISTERED: u8 = opcode::REGISTER | opcode::REPLY;
        const SCENE_CHANGED: u8 = opcode::CHANGE_SCENE | opcode::REPLY;
        const FRAME: u8 = opcode::GET_FRAME | opcode::REPLY;
        const POSITION_SET: u8 = opcode::SET_POSITION | opcode::REPLY;
        const ROTATION_SET: u8 = opcode::SET_ROTATION | opcode::REPLY;
        const FOLLOW_TOGGLED: u8 = opcode::TOGGLE_FOLLOW | opcode::REPLY;
        const DELETED: u8 = opcode::DELETE | opcode::REPLY;

        let mut c = Cursor::new(&msg.body);
        let resp = match msg.opcode {
            REGISTERED => {
                let agent_id = c.u32()?;
                let n = c.u8()?;
                let scenes = (0..n).map(|_| c.string()).collect::<Result<_>>()?;
                let categories = get_categories(&mut c)?;
                Response::Registered { agent_id, scenes, categories }
            }
            SCENE_CHANGED => Response::SceneChanged(get_categories(&mut c)?),
            FRAME => Response::Frame(c.bytes(c.remaining())?.to_vec()),
            POSITION_SET => Response::PositionSet,
            ROTATION_SET => Response::RotationSet,
            FOLLOW_TOGGLED => match c.u8()? {
                0 => Response::FollowToggled(false),
                1 => Response::FollowToggled(true),
                b => return Err(ProtocolError::malformed("follow state", format!("{b}"))),
            },
            DELETED => Response::Deleted,
            opcode::ERROR => {
                let code = ErrorCode::from_u8(c.u8()?)?;
                Response::Error { code, message: c.string()? }
            }
            op => return Err(ProtocolError::UnknownOpcode(op)),
        };
        c.finish("response body")?;
        Ok(resp)
    }
}
