use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{Pose, Scene};
use crate::math::Vec3;

/// Pose plus world-frame velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kinematics {
    pub pose: Pose,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

impl Kinematics {
    pub fn at_rest(pose: Pose) -> Self {
        Self { pose, ..Self::default() }
    }
}

/// State of one dynamic object at the snapshot tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodySnapshot {
    pub object_index: usize,
    pub instance_id: u32,
    pub pose: Pose,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
    /// Point the angular velocity turns about (the object origin).
    pub center: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSnapshot {
    pub agent_id: u32,
    pub follow: bool,
    pub kinematics: Kinematics,
}

/// Immutable copy of everything that moves, taken at one simulation tick.
#[derive(Debug, Clone)]
pub struct Snapshot {
    tick: u64,
    time: f64,
    scene: Arc<Scene>,
    bodies: Vec<BodySnapshot>,
    slots: Vec<Option<u32>>,
    mover: Kinematics,
    agents: Vec<AgentSnapshot>,
}

/// Copies the given dynamic state into a new [`Snapshot`]. Static objects are
/// read from the scene itself and have no entry in the body table.
pub fn take_snapshot(
    scene: &Arc<Scene>,
    bodies: impl IntoIterator<Item = BodySnapshot>,
    mover: Kinematics,
    agents: impl IntoIterator<Item = AgentSnapshot>,
    tick: u64,
    tick_time: f64,
) -> Snapshot {
    debug_assert!(tick_time >= 0.0);
    let bodies: Vec<BodySnapshot> = bodies.into_iter().collect();
    let mut slots = vec![None; scene.objects.len()];
    for (i, b) in bodies.iter().enumerate() {
        slots[b.object_index] = Some(i as u32);
    }
    let mut agents: Vec<AgentSnapshot> = agents.into_iter().collect();
    agents.sort_by_key(|a| a.agent_id);
    Snapshot { tick, time: tick_time, scene: Arc::clone(scene), bodies, slots, mover, agents }
}

impl Snapshot {
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn bodies(&self) -> &[BodySnapshot] {
        &self.bodies
    }

    pub fn mover(&self) -> Kinematics {
        self.mover
    }

    pub fn agents(&self) -> &[AgentSnapshot] {
        &self.agents
    }

    pub fn agent(&self, agent_id: u32) -> Option<&AgentSnapshot> {
        self.agents.binary_search_by_key(&agent_id, |a| a.agent_id).ok().map(|i| &self.agents[i])
    }

    pub fn body(&self, object_index: usize) -> Option<&BodySnapshot> {
        self.slots.get(object_index).copied().flatten().map(|i| &self.bodies[i as usize])
    }

    /// Pose and velocities of any scene object; static objects are at rest.
    pub fn object_kinematics(&self, object_index: usize) -> Kinematics {
        match self.body(object_index) {
            Some(b) => Kinematics { pose: b.pose, linear_velocity: b.linear_velocity, angular_velocity: b.angular_velocity },
            None => Kinematics::at_rest(self.scene.objects[object_index].pose),
        }
    }

    /// Stable hash of the snapshot contents.
    pub fn content_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.scene.name.hash(&mut h);
        self.tick.hash(&mut h);
        hash_f64(&mut h, self.time);
        for b in &self.bodies {
            b.object_index.hash(&mut h);
            b.instance_id.hash(&mut h);
            hash_pose(&mut h, &b.pose);
            hash_vec(&mut h, b.linear_velocity);
            hash_vec(&mut h, b.angular_velocity);
            hash_vec(&mut h, b.center);
        }
        hash_kinematics(&mut h, &self.mover);
        for a in &self.agents {
            a.agent_id.hash(&mut h);
            a.follow.hash(&mut h);
            hash_kinematics(&mut h, &a.kinematics);
        }
        h.finish()
    }
}

fn hash_f64(h: &mut impl Hasher, v: f64) {
    v.to_bits().hash(h);
}

fn hash_vec(h: &mut impl Hasher, v: Vec3) {
    v.to_array().iter().for_each(|&c| hash_f64(h, c));
}

fn hash_pose(h: &mut impl Hasher, p: &Pose) {
    hash_vec(h, p.position);
    let q = p.orientation;
    [q.w, q.x, q.y, q.z].iter().for_each(|&c| hash_f64(h, c));
}

fn hash_kinematics(h: &mut impl Hasher, k: &Kinematics) {
    hash_pose(h, &k.pose);
    hash_vec(h, k.linear_velocity);
    hash_vec(h, k.angular_velocity);
}
