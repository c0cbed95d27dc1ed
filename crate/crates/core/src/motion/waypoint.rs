//! Cyclic waypoint controller for the mover.
//!
//! `N` waypoints give `N` segments of equal duration `total_time / N`; the
//! last segment runs from the final waypoint back to the first.

use crate::math::{angular_velocity, Quat};
use crate::scene::{Kinematics, MoverConfig, Pose};

struct Segment {
    from: Pose,
    to: Pose,
    /// Fraction of the segment covered, in [0, 1].
    s: f64,
    duration: f64,
}

impl Segment {
    fn pose(&self) -> Pose {
        if self.from == self.to || self.s == 0.0 {
            return self.from;
        }
        Pose {
            position: self.from.position.lerp(self.to.position, self.s),
            orientation: self.from.orientation.nlerp(self.to.orientation, self.s),
        }
    }
}

fn segment(cfg: &MoverConfig, t: f64) -> Segment {
    let n = cfg.waypoints.len();
    let duration = cfg.total_time / n as f64;
    let mut local = t.rem_euclid(cfg.total_time);
    if local >= cfg.total_time {
        local = 0.0;
    }
    let i = ((local / duration).floor() as usize).min(n - 1);
    let s = ((local - i as f64 * duration) / duration).clamp(0.0, 1.0);
    Segment { from: cfg.waypoints[i], to: cfg.waypoints[(i + 1) % n], s, duration }
}

/// Mover pose at time `t` (any `t >= 0`, taken modulo the cycle).
pub fn waypoint_pose(cfg: &MoverConfig, t: f64) -> Pose {
    segment(cfg, t).pose()
}

/// Pose plus the time derivative of [`waypoint_pose`] at `t`.
pub fn waypoint_kinematics(cfg: &MoverConfig, t: f64) -> Kinematics {
    let seg = segment(cfg, t);
    let pose = seg.pose();
    let linear_velocity = (seg.to.position - seg.from.position) / seg.duration;

    // d/ds of normalize(u(s)), u = (1-s) q0 + s q1
    let q0 = seg.from.orientation;
    let q1 = if q0.dot(seg.to.orientation) < 0.0 { -seg.to.orientation } else { seg.to.orientation };
    let u = q0 * (1.0 - seg.s) + q1 * seg.s;
    let du = q1 - q0;
    let q = pose.orientation;
    let dq_ds: Quat = (du - q * q.dot(du)) * (1.0 / u.norm());
    let angular = angular_velocity(q, dq_ds * (1.0 / seg.duration));

    Kinematics { pose, linear_velocity, angular_velocity: angular }
}
