//! Per-agent session state and request dispatch.

use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};
use std::sync::Arc;

use vizenv_core::math::{Quat, Vec3};
use vizenv_core::protocol::{
    pack_views, CategoryTable, ErrorCode, Handshake, ProtocolError, Request, Response, WireMessage,
};
use vizenv_core::render::{render_views, CameraIntrinsics};
use vizenv_core::scene::{category_table, Pose, Scene};

use crate::host::SceneHost;

/// State shared by every connection of one server.
pub struct Shared {
    pub scenes: Vec<Arc<SceneHost>>,
    next_agent_id: AtomicU32,
    live_sessions: AtomicUsize,
}

impl Shared {
    pub fn new(scenes: Vec<Arc<SceneHost>>) -> Self {
        Shared { scenes, next_agent_id: AtomicU32::new(1), live_sessions: AtomicUsize::new(0) }
    }

    pub fn live_sessions(&self) -> usize {
        self.live_sessions.load(Ordering::Acquire)
    }

    fn scene_names(&self) -> Vec<String> {
        self.scenes.iter().map(|s| s.name().to_string()).collect()
    }
}

/// A registered agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSession {
    pub agent_id: u32,
    pub handshake: Handshake,
    pub scene_index: usize,
    pub follow: bool,
}

/// Connection-level state: `None` until REGISTER succeeds.
pub struct Connection<'a> {
    shared: &'a Shared,
    pub session: Option<AgentSession>,
}

fn categories(scene: &Scene) -> CategoryTable {
    category_table(scene).into_iter().collect()
}

fn bad_request(message: impl Into<String>) -> Response {
    Response::error(ErrorCode::BadRequest, message)
}

fn finite(v: [f32; 3]) -> Option<[f64; 3]> {
    v.iter().all(|x| x.is_finite()).then(|| v.map(f64::from))
}

impl<'a> Connection<'a> {
    pub fn new(shared: &'a Shared) -> Self {
        Connection { shared, session: None }
    }

    /// Decodes and handles one message. The flag is true when the server
    /// should close the connection after sending the response.
    pub fn handle_message(&mut self, msg: &WireMessage) -> (Response, bool) {
        match Request::from_message(msg) {
            Ok(req) => self.handle_request(req),
            Err(ProtocolError::UnknownOpcode(op)) => (bad_request(format!("unknown opcode {op:#04x}")), false),
            Err(e) => (bad_request(e.to_string()), false),
        }
    }

    pub fn handle_request(&mut self, req: Request) -> (Response, bool) {
        let Some(session) = self.session.as_mut() else {
            return match req {
                Request::Register(h) => (self.register(h), false),
                _ => (bad_request("agent is not registered"), false),
            };
        };
        let host = &self.shared.scenes[session.scene_index];
        let id = session.agent_id;
        let response = match req {
            Request::Register(_) => bad_request("agent is already registered"),
            Request::ChangeScene(i) => {
                let i = usize::from(i);
                if i >= self.shared.scenes.len() {
                    Response::error(ErrorCode::UnknownScene, format!("scene index {i} out of range"))
                } else {
                    host.remove_agent(id);
                    let target = &self.shared.scenes[i];
                    match target.add_agent(id) {
                        Ok(()) => {
                            log::info!("agent {id} moved to scene {}", target.name());
                            session.scene_index = i;
                            session.follow = true;
                            Response::SceneChanged(categories(target.latest().scene()))
                        }
                        Err(e) => {
                            // keep the agent somewhere it can still render
                            let _ = host.add_agent(id);
                            Response::error(ErrorCode::Internal, e.to_string())
                        }
                    }
                }
            }
            Request::GetFrame => render_frame(host, session),
            Request::SetPosition(p) => match finite(p) {
                None => bad_request("position must be finite"),
                Some(p) => {
                    let p = Vec3::from(p);
                    let follow = session.follow;
                    host.update(|w| {
                        if follow {
                            w.set_mover_position(p);
                            Ok(())
                        } else {
                            let orientation = w.agent(id).map(|a| a.pose.orientation).unwrap_or(Quat::IDENTITY);
                            w.set_agent_pose(id, Pose::new(p, orientation))
                        }
                    })
                    .map_or_else(|e| Response::error(ErrorCode::Internal, e.to_string()), |()| Response::PositionSet)
                }
            },
            Request::SetRotation(e) => match finite(e) {
                None => bad_request("rotation must be finite"),
                Some(e) => {
                    let q = Quat::from_euler_deg(e);
                    let follow = session.follow;
                    host.update(|w| {
                        if follow {
                            w.set_mover_orientation(q);
                            Ok(())
                        } else {
                            let position = w.agent(id).map(|a| a.pose.position).unwrap_or(Vec3::ZERO);
                            w.set_agent_pose(id, Pose::new(position, q))
                        }
                    })
                    .map_or_else(|e| Response::error(ErrorCode::Internal, e.to_string()), |()| Response::RotationSet)
                }
            },
            Request::ToggleFollow => {
                let follow = !session.follow;
                match host.update(|w| w.set_follow(id, follow)) {
                    Ok(()) => {
                        session.follow = follow;
                        Response::FollowToggled(follow)
                    }
                    Err(e) => Response::error(ErrorCode::Internal, e.to_string()),
                }
            }
            Request::Delete => {
                self.close();
                return (Response::Deleted, true);
            }
        };
        (response, false)
    }

    fn register(&mut self, h: Handshake) -> Response {
        if let Err(e) = h.validate() {
            return bad_request(e.to_string());
        }
        let agent_id = self.shared.next_agent_id.fetch_add(1, Ordering::AcqRel);
        let host = &self.shared.scenes[0];
        if let Err(e) = host.add_agent(agent_id) {
            return Response::error(ErrorCode::Internal, e.to_string());
        }
        self.shared.live_sessions.fetch_add(1, Ordering::AcqRel);
        log::info!(
            "agent {agent_id} registered at {}x{} (views {:#04x}, {:?}) in scene {}",
            h.width,
            h.height,
            h.view_mask.0,
            h.compression,
            host.name()
        );
        self.session = Some(AgentSession { agent_id, handshake: h, scene_index: 0, follow: true });
        Response::Registered {
            agent_id,
            scenes: self.shared.scene_names(),
            categories: categories(host.latest().scene()),
        }
    }

    /// Unregisters the agent, if any. Safe to call more than once.
    pub fn close(&mut self) {
        if let Some(s) = self.session.take() {
            self.shared.scenes[s.scene_index].remove_agent(s.agent_id);
            self.shared.live_sessions.fetch_sub(1, Ordering::AcqRel);
            log::info!("agent {} removed", s.agent_id);
        }
    }
}

impl Drop for Connection<'_> {
    fn drop(&mut self) {
        self.close();
    }
}

fn render_frame(host: &SceneHost, session: &AgentSession) -> Response {
    let snapshot = host.latest();
    let Some(agent) = snapshot.agent(session.agent_id) else {
        return Response::error(ErrorCode::Internal, "agent missing from snapshot");
    };
    let h = &session.handshake;
    let frame = CameraIntrinsics::for_camera(&snapshot.scene().camera, h.width, h.height)
        .and_then(|intr| render_views(&snapshot, &agent.kinematics, &intr, h.view_mask));
    match frame {
        Ok(views) => match pack_views(&views, h.compression) {
            Ok(packed) => Response::Frame(packed),
            Err(e) => Response::error(ErrorCode::Internal, e.to_string()),
        },
        Err(e) => Response::error(ErrorCode::Internal, e.to_string()),
    }
}
