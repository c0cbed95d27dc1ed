//! Software renderer producing the five pixel-aligned views of an agent
//! camera: shaded color, category, instance, optical flow and depth.
//!
//! Every view of a frame is derived from one [`GBuffer`] rasterized from one
//! [`Snapshot`], so the views always agree with each other.

mod camera;
mod flow;
mod raster;
mod views;

use std::fmt;

use thiserror::Error;

pub use camera::{project, CameraFrame, CameraIntrinsics};
pub use flow::{
    camera_space_velocity, compute_flow, flow_to_hsv, hsv_to_rgb, image_velocity, read_flo, write_flo, FlowField,
};
pub use raster::{rasterize, rasterize_with, GBuffer, BACKGROUND};
pub use views::{decode_instance, depth_byte, encode_instance, render_category, render_depth, render_instance, shade_main};

use crate::scene::{Kinematics, Snapshot};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("point is at or behind the camera plane")]
    NotProjectable,
    #[error("instance id {0} is not in the scene")]
    UnknownInstance(u32),
    #[error("invalid camera intrinsics: {0}")]
    BadIntrinsics(String),
}

/// The five view kinds, numbered as on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum ViewKind {
    Main = 1,
    Category = 2,
    Object = 3,
    Flow = 4,
    Depth = 5,
}

impl ViewKind {
    pub const ALL: [ViewKind; 5] = [ViewKind::Main, ViewKind::Category, ViewKind::Object, ViewKind::Flow, ViewKind::Depth];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<ViewKind> {
        ViewKind::ALL.get(usize::from(id).wrapping_sub(1)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ViewKind::Main => "main",
            ViewKind::Category => "category",
            ViewKind::Object => "object",
            ViewKind::Flow => "flow",
            ViewKind::Depth => "depth",
        }
    }

    /// Uncompressed payload size for a `width × height` frame.
    pub fn byte_len(self, width: u32, height: u32) -> usize {
        let px = width as usize * height as usize;
        match self {
            ViewKind::Main | ViewKind::Object => 3 * px,
            ViewKind::Category | ViewKind::Depth => px,
            ViewKind::Flow => 8 * px,
        }
    }

    fn bit(self) -> u8 {
        1 << (self.id() - 1)
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of requested views; bit `k - 1` stands for view id `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ViewMask(pub u8);

impl ViewMask {
    pub const NONE: ViewMask = ViewMask(0);
    pub const ALL: ViewMask = ViewMask(0b1_1111);

    pub fn only(kind: ViewKind) -> Self {
        ViewMask(kind.bit())
    }

    pub fn with(self, kind: ViewKind) -> Self {
        ViewMask(self.0 | kind.bit())
    }

    pub fn contains(self, kind: ViewKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 & Self::ALL.0 == 0
    }

    /// True when no bits outside the five views are set.
    pub fn is_valid(self) -> bool {
        self.0 & !Self::ALL.0 == 0
    }

    pub fn kinds(self) -> impl Iterator<Item = ViewKind> {
        ViewKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }
}

/// The requested views of one frame. Byte images are row-major; `main` and
/// `object` are 3 bytes per pixel in BGR order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameViews {
    pub width: u32,
    pub height: u32,
    pub main: Option<Vec<u8>>,
    pub category: Option<Vec<u8>>,
    pub object: Option<Vec<u8>>,
    pub flow: Option<FlowField>,
    pub depth: Option<Vec<u8>>,
}

impl FrameViews {
    pub fn empty(width: u32, height: u32) -> Self {
        FrameViews { width, height, ..Default::default() }
    }

    pub fn mask(&self) -> ViewMask {
        ViewKind::ALL
            .into_iter()
            .filter(|k| self.bytes(*k).is_some() || (*k == ViewKind::Flow && self.flow.is_some()))
            .fold(ViewMask::NONE, ViewMask::with)
    }

    /// Byte view for the given kind (not flow, which is floating point).
    pub fn bytes(&self, kind: ViewKind) -> Option<&Vec<u8>> {
        match kind {
            ViewKind::Main => self.main.as_ref(),
            ViewKind::Category => self.category.as_ref(),
            ViewKind::Object => self.object.as_ref(),
            ViewKind::Depth => self.depth.as_ref(),
            ViewKind::Flow => None,
        }
    }
}

/// Renders the requested views for an agent camera with the given pose and
/// velocities. Nothing is rasterized when no view is requested.
pub fn render_views(
    snapshot: &Snapshot,
    agent: &Kinematics,
    intr: &CameraIntrinsics,
    requested: ViewMask,
) -> Result<FrameViews, RenderError> {
    intr.validate()?;
    let mut out = FrameViews::empty(intr.width, intr.height);
    if requested.is_empty() {
        return Ok(out);
    }
    let shading = requested.contains(ViewKind::Main);
    let g = rasterize_with(snapshot, &agent.pose, intr, shading);
    let scene = snapshot.scene();
    if shading {
        out.main = Some(shade_main(&g, &scene.light));
    }
    if requested.contains(ViewKind::Category) {
        out.category = Some(render_category(&g, scene)?);
    }
    if requested.contains(ViewKind::Object) {
        out.object = Some(render_instance(&g));
    }
    if requested.contains(ViewKind::Flow) {
        out.flow = Some(compute_flow(&g, snapshot, agent, intr));
    }
    if requested.contains(ViewKind::Depth) {
        out.depth = Some(render_depth(&g, intr.near, intr.far));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::math::{Quat, Vec3};
    use crate::motion::World;
    use crate::scene::{load_scene, Pose};

    fn snapshot_of(doc: &str) -> Snapshot {
        let scene = Arc::new(load_scene(doc).unwrap());
        World::new(scene, 0, 1.0 / 60.0).unwrap().snapshot()
    }

    fn intr(w: u32, h: u32) -> CameraIntrinsics {
        CameraIntrinsics::from_fov(w, h, 60.0, 0.1, 20.0).unwrap()
    }

    const BOX_AT_3: &str = r#"{"name":"b","categories":[{"id":4,"name":"box"}],"objects":[
        {"name":"b","primitive":{"kind":"box","size":[1,1,1]},"pose":{"position":[0,0,-3]},"category":4,"static":true}]}"#;

    #[test]
    fn empty_scene_is_background() {
        let snap = snapshot_of(r#"{"name":"e","objects":[]}"#);
        let g = rasterize(&snap, &Pose::default(), &intr(32, 24));
        assert_eq!(g.covered_count(), 0);
    }

    #[test]
    fn box_on_axis_matches_ray_cast() {
        let snap = snapshot_of(BOX_AT_3);
        let i = intr(64, 48);
        let g = rasterize(&snap, &Pose::default(), &i);
        // ray through the center pixel hits the front face z = -2.5, i.e. depth 2.5
        let center = 24 * 64 + 32;
        let p = g.point[center];
        let ray = i.unproject(32.5, 24.5, 1.0);
        let t = 2.5 / ray.z;
        assert!((p - ray * t).norm() < 1e-9);
        assert!((g.normal[center] - Vec3::Z).norm() < 1e-9);

        // covered pixels form one centered block: half-width 0.5 at depth 2.5
        let half_px = i.fx * 0.5 / 2.5;
        let cols: Vec<usize> = (0..64).filter(|&x| g.is_covered(24 * 64 + x)).collect();
        assert_eq!(cols.len(), cols.last().unwrap() - cols[0] + 1);
        assert!(((cols.len() as f64) - 2.0 * half_px).abs() <= 1.0);
        assert!(((cols[0] + cols[cols.len() - 1] + 1) as f64 / 2.0 - 32.0).abs() <= 0.5);
    }

    #[test]
    fn nearer_surface_wins() {
        let doc = r#"{"name":"q","objects":[
            {"name":"far","id":9,"primitive":{"kind":"plane","size":[2,2]},"pose":{"position":[0.5,0,-4],"euler_deg":[90,0,0]},"static":true},
            {"name":"near","id":3,"primitive":{"kind":"plane","size":[1,1]},"pose":{"position":[0,0,-2],"euler_deg":[90,0,0]},"static":true}]}"#;
        let snap = snapshot_of(doc);
        let g = rasterize(&snap, &Pose::default(), &intr(64, 48));
        let center = 24 * 64 + 32;
        assert_eq!(g.instance_id[center], 3);
        assert!(g.instance_id.contains(&9));
    }

    #[test]
    fn near_plane_clips() {
        // camera inside the box: the back faces are still drawn, never nearer than `near`
        let snap = snapshot_of(BOX_AT_3);
        let pose = Pose::new(Vec3::new(0.0, 0.0, -3.0), Quat::IDENTITY);
        let i = intr(32, 24);
        let g = rasterize(&snap, &pose, &i);
        assert_eq!(g.covered_count(), 32 * 24);
        assert!(g.point.iter().all(|p| p.z >= i.near && p.z <= i.far));
    }

    #[test]
    fn requested_views_only() {
        let snap = snapshot_of(BOX_AT_3);
        let agent = Kinematics::at_rest(Pose::default());
        let i = intr(16, 12);
        let all = render_views(&snap, &agent, &i, ViewMask::ALL).unwrap();
        assert_eq!(all.mask(), ViewMask::ALL);
        assert_eq!(all.main.as_ref().unwrap().len(), 16 * 12 * 3);
        assert_eq!(all.category.as_ref().unwrap().len(), 16 * 12);
        assert_eq!(all.object.as_ref().unwrap().len(), 16 * 12 * 3);
        assert_eq!(all.flow.as_ref().unwrap().data.len(), 16 * 12 * 2);
        assert_eq!(all.depth.as_ref().unwrap().len(), 16 * 12);

        let depth = render_views(&snap, &agent, &i, ViewMask::only(ViewKind::Depth)).unwrap();
        assert_eq!(depth.mask(), ViewMask::only(ViewKind::Depth));
        assert_eq!(depth.depth, all.depth);

        let none = render_views(&snap, &agent, &i, ViewMask::NONE).unwrap();
        assert_eq!(none, FrameViews::empty(16, 12));
    }

    #[test]
    fn category_zero_reads_as_background() {
        let doc = r#"{"name":"u","objects":[
            {"name":"b","primitive":{"kind":"box","size":[1,1,1]},"pose":{"position":[0,0,-3]},"static":true}]}"#;
        let snap = snapshot_of(doc);
        let v = render_views(&snap, &Kinematics::at_rest(Pose::default()), &intr(16, 12), ViewMask::ALL).unwrap();
        assert!(v.category.unwrap().iter().all(|&c| c == 0));
        assert!(v.object.unwrap().iter().any(|&b| b != 0));
    }

    #[test]
    fn unknown_instance_is_an_error() {
        let snap = snapshot_of(BOX_AT_3);
        let mut g = rasterize(&snap, &Pose::default(), &intr(16, 12));
        let i = g.instance_id.iter().position(|&id| id != 0).unwrap();
        g.instance_id[i] = 77;
        assert_eq!(render_category(&g, snap.scene()), Err(RenderError::UnknownInstance(77)));
    }

    #[test]
    fn view_mask_bits() {
        assert_eq!(ViewMask::only(ViewKind::Main).0, 1);
        assert_eq!(ViewMask::only(ViewKind::Depth).0, 16);
        assert!(!ViewMask(0x20).is_valid());
        assert_eq!(ViewKind::from_id(4), Some(ViewKind::Flow));
        assert_eq!(ViewKind::from_id(0), None);
        assert_eq!(ViewKind::from_id(6), None);
        assert_eq!(ViewMask::ALL.kinds().count(), 5);
    }
}
