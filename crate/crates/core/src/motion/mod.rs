//! Fixed-tick kinematic simulation of a scene.
//!
//! Each tick, behaviors update body velocities, then positions and
//! orientations are integrated (semi-implicit Euler with an exact
//! exponential-map rotation step). There is no gravity, friction or
//! collision. The mover advances along its waypoint cycle and following
//! agents copy its pose.

pub mod behavior;
mod waypoint;

use std::sync::Arc;

use thiserror::Error;

pub use behavior::{
    behavior_seed, poltergeist_update, wander_update, BehaviorConfig, BehaviorState, PoltergeistParams,
    PoltergeistState, RotateParams, WanderParams, WanderState,
};
pub use waypoint::{waypoint_kinematics, waypoint_pose};

use crate::math::{Quat, Vec3};
use crate::scene::{take_snapshot, AgentSnapshot, BodySnapshot, Kinematics, Pose, Scene, Snapshot};

pub const DEFAULT_DT: f64 = 1.0 / 60.0;

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("agent {0} already exists")]
    DuplicateAgent(u32),
    #[error("no agent {0}")]
    UnknownAgent(u32),
}

/// The mutable kinematic part of a dynamic body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub pose: Pose,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

impl BodyState {
    /// One semi-implicit Euler step with the current velocities.
    pub fn integrate(&mut self, dt: f64) {
        self.pose.position += self.linear_velocity * dt;
        let turn = Quat::from_rotation_vector(self.angular_velocity * dt);
        self.pose.orientation = (turn * self.pose.orientation).normalized();
    }
}

#[derive(Debug, Clone)]
pub struct Body {
    pub object_index: usize,
    pub instance_id: u32,
    pub state: BodyState,
    pub behaviors: Vec<BehaviorState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoverMode {
    Waypoints,
    /// Placed by a client; the waypoint clock is frozen.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoverState {
    pub kinematics: Kinematics,
    pub mode: MoverMode,
    /// Position in the waypoint cycle, in `[0, total_time)`.
    pub clock: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub agent_id: u32,
    pub follow: bool,
    pub pose: Pose,
}

/// Copies the mover pose into every following agent.
pub fn apply_follow(mover_pose: Pose, agents: &mut [AgentState]) {
    for a in agents.iter_mut().filter(|a| a.follow) {
        a.pose = mover_pose;
    }
}

#[derive(Debug, Clone)]
pub struct World {
    scene: Arc<Scene>,
    bodies: Vec<Body>,
    mover: MoverState,
    agents: Vec<AgentState>,
    tick: u64,
    time: f64,
    dt: f64,
}

impl World {
    pub fn new(scene: Arc<Scene>, seed: u64, dt: f64) -> Result<World, MotionError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(MotionError::BadTimeStep(dt));
        }
        let bodies = scene
            .objects
            .iter()
            .enumerate()
            .filter_map(|(object_index, o)| {
                let rb = o.rigidbody.as_ref()?;
                let behaviors = o
                    .behaviors
                    .iter()
                    .enumerate()
                    .map(|(slot, b)| {
                        let local = match b {
                            BehaviorConfig::Poltergeist(p) => p.seed,
                            BehaviorConfig::Wander(w) => w.seed,
                            BehaviorConfig::Rotate(_) => 0,
                        };
                        BehaviorState::new(b, behavior_seed(seed, o.instance_id, local, slot))
                    })
                    .collect();
                Some(Body {
                    object_index,
                    instance_id: o.instance_id,
                    state: BodyState {
                        pose: o.pose,
                        linear_velocity: rb.linear_velocity,
                        angular_velocity: rb.angular_velocity,
                    },
                    behaviors,
                })
            })
            .collect();
        let mover = MoverState {
            kinematics: waypoint_kinematics(&scene.mover, 0.0),
            mode: MoverMode::Waypoints,
            clock: 0.0,
        };
        Ok(World { scene, bodies, mover, agents: Vec::new(), tick: 0, time: 0.0, dt })
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn body_mut(&mut self, instance_id: u32) -> Option<&mut Body> {
        self.bodies.iter_mut().find(|b| b.instance_id == instance_id)
    }

    pub fn mover(&self) -> &MoverState {
        &self.mover
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, agent_id: u32) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.agent_id == agent_id)
    }

    fn agent_mut(&mut self, agent_id: u32) -> Result<&mut AgentState, MotionError> {
        self.agents.iter_mut().find(|a| a.agent_id == agent_id).ok_or(MotionError::UnknownAgent(agent_id))
    }

    /// Adds an agent that follows the mover.
    pub fn add_agent(&mut self, agent_id: u32) -> Result<(), MotionError> {
        if self.agent(agent_id).is_some() {
            return Err(MotionError::DuplicateAgent(agent_id));
        }
        self.agents.push(AgentState { agent_id, follow: true, pose: self.mover.kinematics.pose });
        Ok(())
    }

    pub fn remove_agent(&mut self, agent_id: u32) -> bool {
        let before = self.agents.len();
        self.agents.retain(|a| a.agent_id != agent_id);
        before != self.agents.len()
    }

    pub fn set_follow(&mut self, agent_id: u32, follow: bool) -> Result<(), MotionError> {
        let mover_pose = self.mover.kinematics.pose;
        let agent = self.agent_mut(agent_id)?;
        agent.follow = follow;
        if follow {
            agent.pose = mover_pose;
        }
        Ok(())
    }

    pub fn set_agent_pose(&mut self, agent_id: u32, pose: Pose) -> Result<(), MotionError> {
        self.agent_mut(agent_id)?.pose = pose;
        Ok(())
    }

    /// Moves the mover to `position` and takes it off the waypoint cycle.
    pub fn set_mover_position(&mut self, position: Vec3) {
        self.mover.kinematics.pose.position = position;
        self.detach_mover();
    }

    pub fn set_mover_orientation(&mut self, orientation: Quat) {
        self.mover.kinematics.pose.orientation = orientation;
        self.detach_mover();
    }

    fn detach_mover(&mut self) {
        self.mover.mode = MoverMode::External;
        self.mover.kinematics.linear_velocity = Vec3::ZERO;
        self.mover.kinematics.angular_velocity = Vec3::ZERO;
        apply_follow(self.mover.kinematics.pose, &mut self.agents);
    }

    /// Puts the mover back on its waypoint cycle where it left off.
    pub fn resume_waypoints(&mut self) {
        self.mover.mode = MoverMode::Waypoints;
        self.mover.kinematics = waypoint_kinematics(&self.scene.mover, self.mover.clock);
        apply_follow(self.mover.kinematics.pose, &mut self.agents);
    }

    pub fn step(&mut self) {
        step_world(self, self.dt);
    }

    fn agent_kinematics(&self, a: &AgentState) -> Kinematics {
        if a.follow {
            Kinematics { pose: a.pose, ..self.mover.kinematics }
        } else {
            Kinematics::at_rest(a.pose)
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        take_snapshot(
            &self.scene,
            self.bodies.iter().map(|b| BodySnapshot {
                object_index: b.object_index,
                instance_id: b.instance_id,
                pose: b.state.pose,
                linear_velocity: b.state.linear_velocity,
                angular_velocity: b.state.angular_velocity,
                center: b.state.pose.position,
            }),
            self.mover.kinematics,
            self.agents.iter().map(|a| AgentSnapshot {
                agent_id: a.agent_id,
                follow: a.follow,
                kinematics: self.agent_kinematics(a),
            }),
            self.tick,
            self.time,
        )
    }
}

/// Advances the world by one tick of length `dt`.
pub fn step_world(world: &mut World, dt: f64) {
    for body in &mut world.bodies {
        for behavior in &mut body.behaviors {
            behavior.update(&mut body.state, dt);
        }
        body.state.integrate(dt);
    }
    if world.mover.mode == MoverMode::Waypoints {
        let total = world.scene.mover.total_time;
        world.mover.clock = (world.mover.clock + dt).rem_euclid(total);
        if world.mover.clock >= total {
            world.mover.clock = 0.0;
        }
        world.mover.kinematics = waypoint_kinematics(&world.scene.mover, world.mover.clock);
    }
    apply_follow(world.mover.kinematics.pose, &mut world.agents);
    world.tick += 1;
    world.time += dt;
}
