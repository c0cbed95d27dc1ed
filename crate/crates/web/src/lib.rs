//! Browser demo: renders any of the five views of a built-in scene into an
//! RGBA buffer for a canvas, lets the page steer the camera, and compares the
//! analytic flow with the block-matching baseline on the current frame pair.

use std::sync::Arc;

use vizenv_core::eval::{endpoint_error, estimate_flow_blockmatch, BlockMatchParams, GrayImage, Mask};
use vizenv_core::math::Vec3;
use vizenv_core::motion::{World, DEFAULT_DT};
use vizenv_core::render::{
    decode_instance, flow_to_hsv, render_views, CameraIntrinsics, FrameViews, ViewKind, ViewMask,
};
use vizenv_core::scene::{builtin_scene, builtin_scene_names, Kinematics, Pose};
use wasm_bindgen::prelude::*;

/// Names of the built-in scenes, newline separated.
#[wasm_bindgen]
pub fn scene_names() -> String {
    builtin_scene_names().join("\n")
}

#[wasm_bindgen]
pub struct Demo {
    world: World,
    intr: CameraIntrinsics,
    follow: bool,
    /// Free camera, used when not following the mover.
    camera: Pose,
}

/// Result of [`Demo::compare_flow`], in pixels per frame over the pixels
/// covered by objects.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy)]
pub struct FlowComparison {
    pub blockmatch_median_epe: f64,
    pub blockmatch_mean_epe: f64,
    pub mean_flow_magnitude: f64,
    pub pixels: u32,
}

fn bad(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Deterministic bright color for a label.
fn label_color(id: u32) -> [u8; 3] {
    if id == 0 {
        return [0, 0, 0];
    }
    let mut h = id.wrapping_mul(0x9E37_79B9);
    h ^= h >> 15;
    h = h.wrapping_mul(0x85EB_CA6B);
    h ^= h >> 13;
    [(h & 0xFF) as u8 | 0x40, ((h >> 8) & 0xFF) as u8 | 0x40, ((h >> 16) & 0xFF) as u8 | 0x40]
}

fn rgba_from_bgr(bgr: &[u8]) -> Vec<u8> {
    bgr.chunks_exact(3).flat_map(|p| [p[2], p[1], p[0], 255]).collect()
}

fn rgba_from_gray(gray: &[u8]) -> Vec<u8> {
    gray.iter().flat_map(|&g| [g, g, g, 255]).collect()
}

impl Demo {
    fn camera_kinematics(&self, snap: &vizenv_core::scene::Snapshot) -> Kinematics {
        if self.follow {
            snap.mover()
        } else {
            Kinematics::at_rest(self.camera)
        }
    }

    fn views(&self, mask: ViewMask) -> Result<FrameViews, String> {
        let snap = self.world.snapshot();
        render_views(&snap, &self.camera_kinematics(&snap), &self.intr, mask).map_err(|e| e.to_string())
    }

    /// RGBA image of one view; `view` is main, category, object, flow or depth.
    pub fn render_rgba(&self, view: &str) -> Result<Vec<u8>, String> {
        let kind = ViewKind::ALL.into_iter().find(|k| k.name() == view).ok_or_else(|| format!("unknown view {view:?}"))?;
        let v = self.views(ViewMask::only(kind))?;
        Ok(match kind {
            ViewKind::Main => rgba_from_bgr(v.main.as_deref().unwrap_or_default()),
            ViewKind::Depth => rgba_from_gray(v.depth.as_deref().unwrap_or_default()),
            ViewKind::Category => v
                .category
                .unwrap_or_default()
                .iter()
                .flat_map(|&c| {
                    let [r, g, b] = label_color(u32::from(c) + 1000);
                    if c == 0 { [0, 0, 0, 255] } else { [r, g, b, 255] }
                })
                .collect(),
            ViewKind::Object => v
                .object
                .unwrap_or_default()
                .chunks_exact(3)
                .flat_map(|p| {
                    let [r, g, b] = label_color(decode_instance([p[0], p[1], p[2]]));
                    [r, g, b, 255]
                })
                .collect(),
            ViewKind::Flow => rgba_from_bgr(&flow_to_hsv(v.flow.as_ref().ok_or("flow missing")?)),
        })
    }

    pub fn compare(&self) -> Result<FlowComparison, String> {
        let snap = self.world.snapshot();
        let camera = self.camera_kinematics(&snap);
        let v0 = render_views(&snap, &camera, &self.intr, ViewMask::ALL).map_err(|e| e.to_string())?;
        let mut next = self.world.clone();
        next.step();
        let snap1 = next.snapshot();
        let camera1 = if self.follow { snap1.mover() } else { camera };
        let v1 = render_views(&snap1, &camera1, &self.intr, ViewMask::only(ViewKind::Main)).map_err(|e| e.to_string())?;

        let (w, h) = (self.intr.width, self.intr.height);
        let per_frame = v0.flow.as_ref().ok_or("flow missing")?.scaled(self.world.dt() as f32);
        let covered = Mask::new(w, h, v0.depth.as_deref().unwrap_or_default().iter().map(|&d| d > 0).collect())
            .map_err(|e| e.to_string())?;
        let a = GrayImage::from_bgr(v0.main.as_deref().unwrap_or_default(), w, h).map_err(|e| e.to_string())?;
        let b = GrayImage::from_bgr(v1.main.as_deref().unwrap_or_default(), w, h).map_err(|e| e.to_string())?;
        let estimate = estimate_flow_blockmatch(&a, &b, &BlockMatchParams::default()).map_err(|e| e.to_string())?;
        let stats = endpoint_error(&estimate, &per_frame, Some(&covered)).map_err(|e| e.to_string())?;
        let magnitude = (0..per_frame.pixel_count())
            .filter(|&i| covered.data[i])
            .map(|i| {
                let (x, y) = per_frame.at(i);
                f64::from(x).hypot(f64::from(y))
            })
            .sum::<f64>()
            / stats.count as f64;
        Ok(FlowComparison {
            blockmatch_median_epe: stats.median,
            blockmatch_mean_epe: stats.mean,
            mean_flow_magnitude: magnitude,
            pixels: stats.count as u32,
        })
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(scene: &str, width: u32, height: u32) -> Result<Demo, JsError> {
        let scene = Arc::new(builtin_scene(scene).map_err(bad)?);
        let intr = CameraIntrinsics::for_camera(&scene.camera, width, height).map_err(bad)?;
        let world = World::new(scene, 0, DEFAULT_DT).map_err(bad)?;
        let camera = world.mover().kinematics.pose;
        Ok(Demo { world, intr, follow: true, camera })
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.intr.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.intr.height
    }

    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.world.time()
    }

    #[wasm_bindgen(getter)]
    pub fn follow(&self) -> bool {
        self.follow
    }

    /// Advances the simulation by `ticks` fixed steps.
    pub fn step(&mut self, ticks: u32) {
        for _ in 0..ticks {
            self.world.step();
        }
    }

    /// RGBA pixels of the named view, ready for `ImageData`.
    pub fn render(&self, view: &str) -> Result<Vec<u8>, JsError> {
        self.render_rgba(view).map_err(|e| JsError::new(&e))
    }

    /// Follows the scene's mover, or detaches into a free camera that starts
    /// at the current viewpoint.
    pub fn set_follow(&mut self, follow: bool) {
        if self.follow && !follow {
            self.camera = self.world.mover().kinematics.pose;
        }
        self.follow = follow;
    }

    /// Places the free camera (detaching it from the mover). Angles in
    /// degrees: yaw about +y, then pitch about x.
    pub fn set_camera(&mut self, x: f64, y: f64, z: f64, yaw_deg: f64, pitch_deg: f64) {
        self.follow = false;
        self.camera = Pose::from_euler_deg(Vec3::new(x, y, z), [pitch_deg, yaw_deg, 0.0]);
    }

    /// Moves the free camera along its own axes: `forward` along the view
    /// direction, `right` sideways, and turns it by `yaw_deg`.
    pub fn nudge(&mut self, forward: f64, right: f64, yaw_deg: f64) {
        self.set_follow(false);
        let q = self.camera.orientation;
        let fwd = q.rotate(-Vec3::Z);
        let side = q.rotate(Vec3::X);
        let turn = vizenv_core::math::Quat::from_axis_angle(Vec3::Y, yaw_deg.to_radians());
        self.camera = Pose::new(self.camera.position + fwd * forward + side * right, (turn * q).normalized());
    }

    /// Block matching on this tick and the next versus the analytic flow.
    pub fn compare_flow(&self) -> Result<FlowComparison, JsError> {
        self.compare().map_err(|e| JsError::new(&e))
    }
}
