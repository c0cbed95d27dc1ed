//! Per-object movement behaviors: random impulses ("poltergeist"), random
//! waypoint seeking ("wander"), and constant spin ("rotate").

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BodyState;
use crate::math::Vec3;

/// Events closer than this to the clock count as due.
const CLOCK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BehaviorConfig {
    Poltergeist(PoltergeistParams),
    Wander(WanderParams),
    Rotate(RotateParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoltergeistParams {
    /// Range of the linear velocity change per kick, m/s.
    pub force_impulse: [f64; 2],
    /// Range of the angular velocity change per kick, rad/s.
    pub torque_impulse: [f64; 2],
    /// Range of the delay between kicks, seconds.
    pub interval: [f64; 2],
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WanderParams {
    pub waypoints: Vec<Vec3>,
    pub speed: f64,
    /// Range of the delay between target switches, seconds.
    pub interval: [f64; 2],
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotateParams {
    /// World-frame spin axis.
    pub axis: Vec3,
    pub angular_speed_deg: f64,
}

fn check_range(name: &str, r: [f64; 2], positive_min: bool) -> Result<(), String> {
    let ok = r[0].is_finite() && r[1].is_finite() && r[0] >= 0.0 && r[0] <= r[1];
    if !ok {
        return Err(format!("{name} range {r:?} must satisfy 0 <= min <= max"));
    }
    if positive_min && r[0] <= 0.0 {
        return Err(format!("{name} minimum must be positive"));
    }
    Ok(())
}

impl BehaviorConfig {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            BehaviorConfig::Poltergeist(p) => {
                check_range("force_impulse", p.force_impulse, false)?;
                check_range("torque_impulse", p.torque_impulse, false)?;
                check_range("interval", p.interval, true)
            }
            BehaviorConfig::Wander(w) => {
                if w.waypoints.len() < 2 {
                    return Err("wander needs at least two waypoints".into());
                }
                if w.waypoints.iter().any(|p| !p.is_finite()) {
                    return Err("wander waypoint is not finite".into());
                }
                if !(w.speed.is_finite() && w.speed > 0.0) {
                    return Err("wander speed must be positive".into());
                }
                check_range("interval", w.interval, true)
            }
            BehaviorConfig::Rotate(r) => {
                if r.axis.try_normalize().is_none() {
                    return Err("rotate axis must be nonzero".into());
                }
                if !r.angular_speed_deg.is_finite() {
                    return Err("rotate speed must be finite".into());
                }
                Ok(())
            }
        }
    }
}

impl RotateParams {
    pub fn angular_velocity(&self) -> Vec3 {
        let axis = crate::scene::unitize(self.axis).unwrap_or(Vec3::Y);
        axis * self.angular_speed_deg.to_radians()
    }
}

fn sample_range(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..=r[1])
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Mixes the world seed, instance id, per-behavior seed and slot into one
/// RNG seed (splitmix64 finalizer).
pub fn behavior_seed(world_seed: u64, instance_id: u32, behavior_seed: u64, slot: usize) -> u64 {
    let mut z = world_seed ^ (u64::from(instance_id) << 32) ^ behavior_seed.rotate_left(17) ^ (slot as u64);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct PoltergeistState {
    rng: ChaCha8Rng,
    elapsed: f64,
    next_kick: f64,
    kicks: u64,
}

impl PoltergeistState {
    pub fn new(params: &PoltergeistParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next_kick = sample_range(&mut rng, params.interval);
        Self { rng, elapsed: 0.0, next_kick, kicks: 0 }
    }

    pub fn kicks(&self) -> u64 {
        self.kicks
    }

    pub fn next_kick(&self) -> f64 {
        self.next_kick
    }
}

/// Advances the kick clock by `dt`; every kick that falls due adds a random
/// direction × magnitude to both velocities. Returns the number of kicks.
pub fn poltergeist_update(body: &mut BodyState, params: &PoltergeistParams, state: &mut PoltergeistState, dt: f64) -> u32 {
    state.elapsed += dt;
    let mut fired = 0;
    while state.next_kick <= state.elapsed + CLOCK_EPS {
        let dv = random_unit(&mut state.rng) * sample_range(&mut state.rng, params.force_impulse);
        let dw = random_unit(&mut state.rng) * sample_range(&mut state.rng, params.torque_impulse);
        body.linear_velocity += dv;
        body.angular_velocity += dw;
        state.kicks += 1;
        fired += 1;
        state.next_kick += sample_range(&mut state.rng, params.interval);
    }
    fired
}

#[derive(Debug, Clone)]
pub struct WanderState {
    rng: ChaCha8Rng,
    elapsed: f64,
    next_switch: f64,
    target: usize,
    switches: u64,
}

impl WanderState {
    pub fn new(params: &WanderParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = if params.waypoints.len() > 1 { rng.gen_range(0..params.waypoints.len()) } else { 0 };
        let next_switch = sample_range(&mut rng, params.interval);
        Self { rng, elapsed: 0.0, next_switch, target, switches: 0 }
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn switches(&self) -> u64 {
        self.switches
    }
}

/// Points the body at its current target waypoint at constant speed,
/// re-drawing the target whenever the switch interval elapses. Within one
/// step of the target the body snaps onto it and stops.
pub fn wander_update(body: &mut BodyState, params: &WanderParams, state: &mut WanderState, dt: f64) {
    state.elapsed += dt;
    while state.next_switch <= state.elapsed + CLOCK_EPS {
        state.target = state.rng.gen_range(0..params.waypoints.len());
        state.switches += 1;
        state.next_switch += sample_range(&mut state.rng, params.interval);
    }
    let target = params.waypoints[state.target];
    let to_target = target - body.pose.position;
    let dist = to_target.norm();
    if dist < params.speed * dt || dist == 0.0 {
        body.pose.position = target;
        body.linear_velocity = Vec3::ZERO;
    } else {
        body.linear_velocity = to_target * (params.speed / dist);
    }
}

#[derive(Debug, Clone)]
pub enum BehaviorState {
    Poltergeist(PoltergeistParams, PoltergeistState),
    Wander(WanderParams, WanderState),
    Rotate(RotateParams),
}

impl BehaviorState {
    pub fn new(config: &BehaviorConfig, seed: u64) -> Self {
        match config {
            BehaviorConfig::Poltergeist(p) => BehaviorState::Poltergeist(p.clone(), PoltergeistState::new(p, seed)),
            BehaviorConfig::Wander(w) => BehaviorState::Wander(w.clone(), WanderState::new(w, seed)),
            BehaviorConfig::Rotate(r) => BehaviorState::Rotate(r.clone()),
        }
    }

    pub fn update(&mut self, body: &mut BodyState, dt: f64) {
        match self {
            BehaviorState::Poltergeist(p, s) => {
                poltergeist_update(body, p, s, dt);
            }
            BehaviorState::Wander(w, s) => wander_update(body, w, s, dt),
            BehaviorState::Rotate(r) => body.angular_velocity = r.angular_velocity(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Pose;

    fn body_at(p: Vec3) -> BodyState {
        BodyState { pose: Pose::new(p, Default::default()), linear_velocity: Vec3::ZERO, angular_velocity: Vec3::ZERO }
    }

    fn polter(force: [f64; 2], torque: [f64; 2], interval: [f64; 2]) -> PoltergeistParams {
        PoltergeistParams { force_impulse: force, torque_impulse: torque, interval, seed: 3 }
    }

    #[test]
    fn zero_magnitude_kicks_change_nothing() {
        let p = polter([0.0, 0.0], [0.0, 0.0], [0.1, 0.5]);
        let mut s = PoltergeistState::new(&p, 1);
        let mut b = body_at(Vec3::ZERO);
        for _ in 0..6000 {
            poltergeist_update(&mut b, &p, &mut s, 1.0 / 60.0);
        }
        assert!(s.kicks() > 0);
        assert_eq!(b.linear_velocity, Vec3::ZERO);
        assert_eq!(b.angular_velocity, Vec3::ZERO);
    }

    #[test]
    fn unit_interval_gives_one_kick_per_second() {
        let p = polter([1.0, 1.0], [0.0, 0.0], [1.0, 1.0]);
        let mut s = PoltergeistState::new(&p, 9);
        let mut b = body_at(Vec3::ZERO);
        let mut per_step = Vec::new();
        for _ in 0..600 {
            per_step.push(poltergeist_update(&mut b, &p, &mut s, 1.0 / 60.0));
        }
        assert_eq!(s.kicks(), 10);
        let kick_steps: Vec<usize> = (0..600).filter(|&i| per_step[i] > 0).collect();
        assert_eq!(kick_steps, (1..=10).map(|k| k * 60 - 1).collect::<Vec<_>>());
    }

    #[test]
    fn kicks_are_reproducible_and_have_sampled_magnitude() {
        let p = polter([0.5, 2.0], [1.0, 1.5], [0.2, 0.7]);
        let run = || {
            let mut s = PoltergeistState::new(&p, 42);
            let mut b = body_at(Vec3::ZERO);
            let mut trace = Vec::new();
            for _ in 0..300 {
                let before = b.linear_velocity;
                if poltergeist_update(&mut b, &p, &mut s, 1.0 / 60.0) == 1 {
                    let dv = (b.linear_velocity - before).norm();
                    assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&dv), "{dv}");
                }
                trace.push((b.linear_velocity, b.angular_velocity));
            }
            trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn wander_heads_for_target() {
        let w = WanderParams { waypoints: vec![Vec3::new(10.0, 0.0, 0.0)], speed: 2.0, interval: [5.0, 5.0], seed: 0 };
        let mut s = WanderState::new(&w, 0);
        let mut b = body_at(Vec3::ZERO);
        wander_update(&mut b, &w, &mut s, 1.0 / 60.0);
        assert!((b.linear_velocity - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn wander_at_target_is_zero_velocity() {
        let t = Vec3::new(1.0, 0.0, 2.0);
        let w = WanderParams { waypoints: vec![t], speed: 1.0, interval: [5.0, 5.0], seed: 0 };
        let mut s = WanderState::new(&w, 0);
        let mut b = body_at(t);
        b.linear_velocity = Vec3::X;
        wander_update(&mut b, &w, &mut s, 0.1);
        assert_eq!(b.linear_velocity, Vec3::ZERO);

        let mut near = body_at(t - Vec3::new(0.05, 0.0, 0.0));
        wander_update(&mut near, &w, &mut s, 0.1);
        assert_eq!(near.pose.position, t);
        assert_eq!(near.linear_velocity, Vec3::ZERO);
    }

    #[test]
    fn wander_schedule_is_reproducible() {
        let w = WanderParams {
            waypoints: vec![Vec3::ZERO, Vec3::X, Vec3::Z, Vec3::new(1.0, 0.0, 1.0)],
            speed: 0.5,
            interval: [0.3, 1.2],
            seed: 5,
        };
        let schedule = |seed| {
            let mut s = WanderState::new(&w, seed);
            let mut b = body_at(Vec3::ZERO);
            (0..600)
                .map(|_| {
                    wander_update(&mut b, &w, &mut s, 1.0 / 60.0);
                    s.target()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(schedule(8), schedule(8));
        assert_ne!(schedule(8), schedule(9));
    }

    #[test]
    fn validation() {
        let bad = BehaviorConfig::Poltergeist(polter([2.0, 1.0], [0.0, 0.0], [1.0, 1.0]));
        assert!(bad.validate().is_err());
        let bad = BehaviorConfig::Poltergeist(polter([0.0, 1.0], [0.0, 0.0], [0.0, 1.0]));
        assert!(bad.validate().is_err());
        let bad = BehaviorConfig::Wander(WanderParams { waypoints: vec![Vec3::ZERO], speed: 1.0, interval: [1.0, 1.0], seed: 0 });
        assert!(bad.validate().is_err());
        let bad = BehaviorConfig::Rotate(RotateParams { axis: Vec3::ZERO, angular_speed_deg: 1.0 });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn behavior_json_shape() {
        let b: BehaviorConfig =
            serde_json::from_str(r#"{"kind":"rotate","axis":[0,2,0],"angular_speed_deg":180}"#).unwrap();
        let BehaviorConfig::Rotate(r) = b else { panic!() };
        assert!((r.angular_velocity() - Vec3::new(0.0, std::f64::consts::PI, 0.0)).norm() < 1e-12);
    }
}
