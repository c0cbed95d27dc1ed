//! Z-buffered triangle rasterization into a per-pixel G-buffer.

use crate::math::Vec3;
use crate::scene::{Pose, Snapshot};

use super::camera::{CameraFrame, CameraIntrinsics};

pub const BACKGROUND: u32 = u32::MAX;

/// Per-pixel surface record shared by every view of one frame.
///
/// A pixel is covered when `instance_id != 0`; the remaining fields are only
/// meaningful on covered pixels. `point` is in camera space (x right, y down,
/// z forward), `normal` in world space. `normal` and `albedo` are empty when
/// rasterized without shading.
#[derive(Debug, Clone, PartialEq)]
pub struct GBuffer {
    pub width: u32,
    pub height: u32,
    pub instance_id: Vec<u32>,
    /// Index into the scene's object list, [`BACKGROUND`] when uncovered.
    pub object_index: Vec<u32>,
    pub point: Vec<Vec3>,
    pub normal: Vec<Vec3>,
    pub albedo: Vec<[u8; 3]>,
}

impl GBuffer {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        GBuffer {
            width,
            height,
            instance_id: vec![0; n],
            object_index: vec![BACKGROUND; n],
            point: vec![Vec3::ZERO; n],
            normal: vec![Vec3::ZERO; n],
            albedo: vec![[0; 3]; n],
        }
    }

    pub fn is_covered(&self, i: usize) -> bool {
        self.instance_id[i] != 0
    }

    pub fn covered_count(&self) -> usize {
        self.instance_id.iter().filter(|&&id| id != 0).count()
    }
}

/// Rasterizes every object of the snapshot as seen from `agent_pose`.
pub fn rasterize(snapshot: &Snapshot, agent_pose: &Pose, intr: &CameraIntrinsics) -> GBuffer {
    rasterize_with(snapshot, agent_pose, intr, true)
}

struct Target<'a> {
    intr: &'a CameraIntrinsics,
    depth: Vec<f64>,
    object: Vec<u32>,
    triangle: Vec<u32>,
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    inv_z: f64,
}

/// As [`rasterize`]; `shading = false` skips normals and albedo, which only
/// the color view needs.
pub fn rasterize_with(snapshot: &Snapshot, agent_pose: &Pose, intr: &CameraIntrinsics, shading: bool) -> GBuffer {
    let n = intr.pixel_count();
    let camera = CameraFrame::new(agent_pose);
    let scene = snapshot.scene();
    let mut target = Target {
        intr,
        depth: vec![f64::INFINITY; n],
        object: vec![BACKGROUND; n],
        triangle: vec![0; n],
    };

    let mut camera_vertices: Vec<Vec<Vec3>> = Vec::with_capacity(scene.objects.len());
    for (oi, object) in scene.objects.iter().enumerate() {
        let pose = snapshot.object_kinematics(oi).pose;
        let verts: Vec<Vec3> =
            object.mesh.vertices.iter().map(|&v| camera.to_camera(pose.transform_point(v))).collect();
        for (ti, tri) in object.mesh.triangles.iter().enumerate() {
            let corners = tri.map(|i| verts[i as usize]);
            draw_triangle(&mut target, corners, oi as u32, ti as u32);
        }
        camera_vertices.push(verts);
    }

    let (empty_normal, empty_albedo) = if shading { (vec![Vec3::ZERO; n], vec![[0; 3]; n]) } else { (Vec::new(), Vec::new()) };
    let mut g = GBuffer {
        width: intr.width,
        height: intr.height,
        instance_id: vec![0; n],
        object_index: std::mem::take(&mut target.object),
        point: vec![Vec3::ZERO; n],
        normal: empty_normal,
        albedo: empty_albedo,
    };
    let w = intr.width as usize;
    for i in 0..n {
        let oi = g.object_index[i];
        if oi == BACKGROUND {
            continue;
        }
        let object = &scene.objects[oi as usize];
        let z = target.depth[i].clamp(intr.near, intr.far);
        let (px, py) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
        let p = intr.unproject(px, py, z);
        g.instance_id[i] = object.instance_id;
        g.point[i] = p;
        if shading {
            let tri = object.mesh.triangles[target.triangle[i] as usize];
            let verts = &camera_vertices[oi as usize];
            let bary = barycentric(p, tri.map(|k| verts[k as usize]));
            let local_n = tri
                .iter()
                .zip(bary)
                .fold(Vec3::ZERO, |acc, (&k, b)| acc + object.mesh.normals[k as usize] * b);
            let orientation = snapshot.object_kinematics(oi as usize).pose.orientation;
            g.normal[i] = orientation.rotate(local_n).try_normalize().unwrap_or(Vec3::Y);
            g.albedo[i] = object.material.albedo;
        }
    }
    g
}

/// Barycentric coordinates of `p` (assumed on the triangle's plane).
fn barycentric(p: Vec3, [a, b, c]: [Vec3; 3]) -> [f64; 3] {
    let n = (b - a).cross(c - a);
    let area = n.norm_squared();
    if area <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let wa = (c - b).cross(p - b).dot(n) / area;
    let wb = (a - c).cross(p - c).dot(n) / area;
    [wa, wb, 1.0 - wa - wb]
}

fn draw_triangle(target: &mut Target, corners: [Vec3; 3], object: u32, triangle: u32) {
    let intr = target.intr;
    let near = intr.near;
    if corners.iter().all(|v| v.z < near) || corners.iter().all(|v| v.z > intr.far) {
        return;
    }

    // clip against the near plane
    let mut poly: [Vec3; 4] = [Vec3::ZERO; 4];
    let mut count = 0;
    for k in 0..3 {
        let a = corners[k];
        let b = corners[(k + 1) % 3];
        let (ina, inb) = (a.z >= near, b.z >= near);
        if ina {
            poly[count] = a;
            count += 1;
        }
        if ina != inb {
            let t = (near - a.z) / (b.z - a.z);
            let mut q = a.lerp(b, t);
            q.z = near;
            poly[count] = q;
            count += 1;
        }
    }
    if count < 3 {
        return;
    }

    let screen: Vec<ScreenVertex> = poly[..count]
        .iter()
        .map(|p| ScreenVertex {
            x: intr.fx * p.x / p.z + intr.cx,
            y: intr.fy * p.y / p.z + intr.cy,
            inv_z: 1.0 / p.z,
        })
        .collect();
    for k in 1..count - 1 {
        fill(target, [screen[0], screen[k], screen[k + 1]], object, triangle);
    }
}

fn edge(a: ScreenVertex, b: ScreenVertex, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

fn fill(target: &mut Target, mut v: [ScreenVertex; 3], object: u32, triangle: u32) {
    let intr = target.intr;
    let mut area = edge(v[0], v[1], v[2].x, v[2].y);
    if !area.is_finite() || area.abs() < 1e-12 {
        return;
    }
    if area < 0.0 {
        v.swap(1, 2);
        area = -area;
    }
    let (w, h) = (intr.width as i64, intr.height as i64);
    let min_x = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let x0 = ((min_x - 0.5).ceil() as i64).max(0);
    let x1 = ((max_x - 0.5).floor() as i64).min(w - 1);
    let y0 = ((min_y - 0.5).ceil() as i64).max(0);
    let y1 = ((max_y - 0.5).floor() as i64).min(h - 1);
    if x0 > x1 || y0 > y1 {
        return;
    }

    // edge k is opposite vertex k
    let e = [(v[1], v[2]), (v[2], v[0]), (v[0], v[1])];
    let step_x = e.map(|(a, b)| -(b.y - a.y));
    let inv_area = 1.0 / area;
    let far = intr.far;

    for py in y0..=y1 {
        let cy = py as f64 + 0.5;
        let cx = x0 as f64 + 0.5;
        let mut wv = e.map(|(a, b)| edge(a, b, cx, cy));
        let row = (py * w) as usize;
        for px in x0..=x1 {
            if wv[0] >= 0.0 && wv[1] >= 0.0 && wv[2] >= 0.0 {
                let inv_z = (wv[0] * v[0].inv_z + wv[1] * v[1].inv_z + wv[2] * v[2].inv_z) * inv_area;
                let z = 1.0 / inv_z;
                let i = row + px as usize;
                if z < target.depth[i] && z <= far {
                    target.depth[i] = z;
                    target.object[i] = object;
                    target.triangle[i] = triangle;
                }
            }
            for k in 0..3 {
                wv[k] += step_x[k];
            }
        }
    }
}
