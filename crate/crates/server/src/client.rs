//! Minimal blocking client for the wire protocol, used by the integration
//! tests and handy for scripting against a running server.

use std::io::{BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};

use anyhow::{anyhow, bail, Context};
use vizenv_core::protocol::{
    read_message, read_preamble, unpack_views, write_message, write_preamble, CategoryTable, Handshake, Request,
    Response, WireMessage,
};
use vizenv_core::render::FrameViews;

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    handshake: Option<Handshake>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    pub agent_id: u32,
    pub scenes: Vec<String>,
    pub categories: CategoryTable,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> anyhow::Result<Self> {
        let stream = TcpStream::connect(addr).context("connecting")?;
        stream.set_nodelay(true)?;
        let mut client =
            Client { reader: BufReader::new(stream.try_clone()?), writer: BufWriter::new(stream), handshake: None };
        write_preamble(&mut client.writer)?;
        read_preamble(&mut client.reader).context("reading the server preamble")?;
        Ok(client)
    }

    /// Sends a raw message and returns the raw reply.
    pub fn exchange(&mut self, msg: &WireMessage) -> anyhow::Result<WireMessage> {
        write_message(&mut self.writer, msg)?;
        read_message(&mut self.reader)?.ok_or_else(|| anyhow!("server closed the connection"))
    }

    pub fn request(&mut self, req: &Request) -> anyhow::Result<Response> {
        let reply = self.exchange(&req.to_message())?;
        Ok(Response::from_message(&reply)?)
    }

    fn expect(&mut self, req: &Request) -> anyhow::Result<Response> {
        match self.request(req)? {
            Response::Error { code, message } => bail!("server error {code:?}: {message}"),
            r => Ok(r),
        }
    }

    pub fn register(&mut self, handshake: Handshake) -> anyhow::Result<Registration> {
        match self.expect(&Request::Register(handshake))? {
            Response::Registered { agent_id, scenes, categories } => {
                self.handshake = Some(handshake);
                Ok(Registration { agent_id, scenes, categories })
            }
            r => bail!("unexpected reply {r:?}"),
        }
    }

    pub fn change_scene(&mut self, index: u8) -> anyhow::Result<CategoryTable> {
        match self.expect(&Request::ChangeScene(index))? {
            Response::SceneChanged(t) => Ok(t),
            r => bail!("unexpected reply {r:?}"),
        }
    }

    /// Packed frame bytes as sent by the server.
    pub fn get_frame_raw(&mut self) -> anyhow::Result<Vec<u8>> {
        match self.expect(&Request::GetFrame)? {
            Response::Frame(bytes) => Ok(bytes),
            r => bail!("unexpected reply {r:?}"),
        }
    }

    pub fn get_frame(&mut self) -> anyhow::Result<FrameViews> {
        let h = self.handshake.ok_or_else(|| anyhow!("not registered"))?;
        let raw = self.get_frame_raw()?;
        Ok(unpack_views(&raw, h.width, h.height)?)
    }

    pub fn set_position(&mut self, p: [f32; 3]) -> anyhow::Result<()> {
        match self.expect(&Request::SetPosition(p))? {
            Response::PositionSet => Ok(()),
            r => bail!("unexpected reply {r:?}"),
        }
    }

    pub fn set_rotation(&mut self, euler_deg: [f32; 3]) -> anyhow::Result<()> {
        match self.expect(&Request::SetRotation(euler_deg))? {
            Response::RotationSet => Ok(()),
            r => bail!("unexpected reply {r:?}"),
        }
    }

    pub fn toggle_follow(&mut self) -> anyhow::Result<bool> {
        match self.expect(&Request::ToggleFollow)? {
            Response::FollowToggled(on) => Ok(on),
            r => bail!("unexpected reply {r:?}"),
        }
    }

    pub fn delete(mut self) -> anyhow::Result<()> {
        match self.expect(&Request::Delete)? {
            Response::Deleted => Ok(()),
            r => bail!("unexpected reply {r:?}"),
        }
    }
}
