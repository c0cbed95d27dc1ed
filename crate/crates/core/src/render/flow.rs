//! Analytic optical flow (the instantaneous image motion field) and its
//! visualizations.

use std::io::{self, Read, Write};

use crate::math::{round_to_byte, Vec3};
use crate::scene::{Kinematics, Snapshot};

use super::camera::{CameraFrame, CameraIntrinsics};
use super::raster::GBuffer;

/// Dense flow in pixels per second, x right and y down. Row-major,
/// interleaved `(v_x, v_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl FlowField {
    pub fn zeros(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![0.0; 2 * width as usize * height as usize] }
    }

    pub fn at(&self, i: usize) -> (f32, f32) {
        (self.data[2 * i], self.data[2 * i + 1])
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Copy with every vector multiplied by `s` (e.g. a frame interval, to get
    /// pixels per frame).
    pub fn scaled(&self, s: f32) -> FlowField {
        FlowField { width: self.width, height: self.height, data: self.data.iter().map(|v| v * s).collect() }
    }
}

/// Image-plane velocity of a camera-space point `p` moving at `p_dot`.
pub fn image_velocity(p: Vec3, p_dot: Vec3, fx: f64, fy: f64) -> (f64, f64) {
    let z2 = p.z * p.z;
    (fx * (p_dot.x * p.z - p.x * p_dot.z) / z2, fy * (p_dot.y * p.z - p.y * p_dot.z) / z2)
}

/// Camera-space velocity of a camera-space point `p` that moves with world
/// velocity `world_velocity`, seen by a camera with the given kinematics.
pub fn camera_space_velocity(p: Vec3, world_velocity: Vec3, frame: &CameraFrame, camera: &Kinematics) -> Vec3 {
    let relative = frame.vector_to_camera(world_velocity - camera.linear_velocity);
    let spin = frame.vector_to_camera(camera.angular_velocity);
    relative - spin.cross(p)
}

/// Per-pixel motion field of the snapshot as seen by a camera with the given
/// pose and velocities. Background pixels are exactly zero.
pub fn compute_flow(g: &GBuffer, snapshot: &Snapshot, camera: &Kinematics, intr: &CameraIntrinsics) -> FlowField {
    let frame = CameraFrame::new(&camera.pose);
    let mut flow = FlowField::zeros(g.width, g.height);
    let objects: Vec<Kinematics> =
        (0..snapshot.scene().objects.len()).map(|i| snapshot.object_kinematics(i)).collect();
    let moving_camera = camera.linear_velocity != Vec3::ZERO || camera.angular_velocity != Vec3::ZERO;

    for i in 0..g.instance_id.len() {
        if !g.is_covered(i) {
            continue;
        }
        let body = &objects[g.object_index[i] as usize];
        let still = body.linear_velocity == Vec3::ZERO && body.angular_velocity == Vec3::ZERO;
        if still && !moving_camera {
            continue;
        }
        let p = g.point[i];
        let world = frame.to_world(p);
        let world_velocity = body.linear_velocity + body.angular_velocity.cross(world - body.pose.position);
        let p_dot = camera_space_velocity(p, world_velocity, &frame, camera);
        let (vx, vy) = image_velocity(p, p_dot, intr.fx, intr.fy);
        flow.data[2 * i] = vx as f32;
        flow.data[2 * i + 1] = vy as f32;
    }
    flow
}

/// HSV rendering of a flow field: hue = direction, saturation = 1, value =
/// magnitude relative to the frame maximum. Output is BGR bytes.
pub fn flow_to_hsv(flow: &FlowField) -> Vec<u8> {
    let n = flow.pixel_count();
    let magnitude = |i: usize| {
        let (x, y) = flow.at(i);
        f64::from(x).hypot(f64::from(y))
    };
    let max = (0..n).map(magnitude).fold(0.0, f64::max);
    let mut out = vec![0u8; 3 * n];
    if max <= 0.0 {
        return out;
    }
    for (i, px) in out.chunks_exact_mut(3).enumerate() {
        let (x, y) = flow.at(i);
        let mut hue = f64::from(y).atan2(f64::from(x)).to_degrees();
        if hue < 0.0 {
            hue += 360.0;
        }
        if hue >= 360.0 {
            hue -= 360.0;
        }
        let value = (magnitude(i) / max).min(1.0);
        let [r, g, b] = hsv_to_rgb(hue, 1.0, value);
        px.copy_from_slice(&[round_to_byte(b * 255.0), round_to_byte(g * 255.0), round_to_byte(r * 255.0)]);
    }
    out
}

/// `h` in degrees `[0, 360)`, `s` and `v` in `[0, 1]`; returns RGB in `[0, 1]`.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

const FLO_MAGIC: &[u8; 4] = b"PIEH";

/// Writes the `.flo` interchange layout: `PIEH`, width and height as
/// little-endian 32-bit integers, then interleaved little-endian f32 pairs.
pub fn write_flo(flow: &FlowField, mut w: impl Write) -> io::Result<()> {
    w.write_all(FLO_MAGIC)?;
    w.write_all(&flow.width.to_le_bytes())?;
    w.write_all(&flow.height.to_le_bytes())?;
    let mut buf = Vec::with_capacity(flow.data.len() * 4);
    for v in &flow.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_flo(mut r: impl Read) -> io::Result<FlowField> {
    let mut header = [0u8; 12];
    r.read_exact(&mut header)?;
    if &header[..4] != FLO_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a .flo file"));
    }
    let width = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    let height = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes"));
    let n = 2 * width as usize * height as usize;
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Ok(FlowField { width, height, data })
}
