use crate::math::{Mat3, Quat, Vec3};
use crate::scene::{CameraDefaults, Pose};

use super::RenderError;

/// Pinhole intrinsics. Pixel `(i, j)` has its center at `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub near: f64,
    pub far: f64,
}

impl CameraIntrinsics {
    /// Square pixels, principal point at the image center, focal length from
    /// the vertical field of view.
    pub fn from_fov(width: u32, height: u32, vertical_fov_deg: f64, near: f64, far: f64) -> Result<Self, RenderError> {
        if !(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0) {
            return Err(RenderError::BadIntrinsics(format!("fov {vertical_fov_deg} outside (0, 180)")));
        }
        let fy = (height as f64 / 2.0) / (vertical_fov_deg.to_radians() / 2.0).tan();
        let intr = CameraIntrinsics {
            width,
            height,
            fx: fy,
            fy,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            near,
            far,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn for_camera(defaults: &CameraDefaults, width: u32, height: u32) -> Result<Self, RenderError> {
        Self::from_fov(width, height, defaults.vertical_fov_deg, defaults.near, defaults.far)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let ok = self.width >= 1
            && self.height >= 1
            && self.fx > 0.0
            && self.fy > 0.0
            && self.near > 0.0
            && self.near < self.far
            && self.far.is_finite();
        if ok {
            Ok(())
        } else {
            Err(RenderError::BadIntrinsics(format!("{self:?}")))
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Camera-space point on the ray through pixel-plane coordinates `(u, v)`
    /// at depth `z`.
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx * z, (v - self.cy) / self.fy * z, z)
    }
}

/// Projects a camera-space point (x right, y down, z forward) to pixel-plane
/// coordinates.
pub fn project(p: Vec3, intr: &CameraIntrinsics) -> Result<(f64, f64), RenderError> {
    if p.z <= 0.0 || !p.is_finite() {
        return Err(RenderError::NotProjectable);
    }
    Ok((intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy))
}

/// Rigid transform between the world and the camera frame of an agent pose.
///
/// The agent's body frame looks down −z with +y up; camera space is the
/// image-aligned frame (x right, y down, z forward), a half-turn about x.
#[derive(Debug, Clone, Copy)]
pub struct CameraFrame {
    /// Camera space → world rotation.
    pub rotation: Quat,
    world_to_camera: Mat3,
    pub origin: Vec3,
}

const FLIP_YZ: Quat = Quat::new(0.0, 1.0, 0.0, 0.0);

impl CameraFrame {
    pub fn new(pose: &Pose) -> Self {
        let rotation = pose.orientation * FLIP_YZ;
        Self { rotation, world_to_camera: rotation.to_mat3().transpose(), origin: pose.position }
    }

    pub fn to_camera(&self, world: Vec3) -> Vec3 {
        self.world_to_camera * (world - self.origin)
    }

    pub fn to_world(&self, camera: Vec3) -> Vec3 {
        self.rotation.rotate(camera) + self.origin
    }

    /// Rotates a free vector (velocity, axis) from world into camera space.
    pub fn vector_to_camera(&self, v: Vec3) -> Vec3 {
        self.world_to_camera * v
    }

    pub fn world_to_camera_matrix(&self) -> Mat3 {
        self.world_to_camera
    }
}
