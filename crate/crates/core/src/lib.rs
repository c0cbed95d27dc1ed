//! Core of a headless visual environment: scene model and catalog, fixed-tick
//! kinematics, a software renderer producing pixel-aligned annotated views
//! (color, depth, category, instance, analytic optical flow), the binary wire
//! protocol used to stream them, and flow/segmentation evaluation tools.

pub mod eval;
pub mod math;
pub mod motion;
pub mod protocol;
pub mod render;
pub mod scene;
