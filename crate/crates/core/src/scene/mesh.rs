//! Triangle meshes: procedural primitives and Wavefront OBJ import.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::math::Vec3;

pub const CYLINDER_SEGMENTS: usize = 32;
pub const SPHERE_STACKS: usize = 16;
pub const SPHERE_SLICES: usize = 32;

/// Indexed triangle mesh in object-local coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub normals: Vec<Vec3>,
}

impl Mesh {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.triangles.is_empty() {
            return Err(SceneError::validation("mesh has no triangles"));
        }
        if self.normals.len() != self.vertices.len() {
            return Err(SceneError::validation(format!(
                "mesh has {} vertices but {} normals",
                self.vertices.len(),
                self.normals.len()
            )));
        }
        let n = self.vertices.len() as u32;
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(SceneError::validation(format!("triangle {t:?} indexes past {n} vertices")));
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err(SceneError::validation("mesh vertex is not finite"));
        }
        if self.normals.iter().any(|v| (v.norm() - 1.0).abs() > 1e-4) {
            return Err(SceneError::validation("mesh normal is not unit length"));
        }
        Ok(())
    }

    fn push(&mut self, p: Vec3, n: Vec3) -> u32 {
        self.vertices.push(p);
        self.normals.push(n);
        (self.vertices.len() - 1) as u32
    }

    fn empty() -> Mesh {
        Mesh { vertices: Vec::new(), triangles: Vec::new(), normals: Vec::new() }
    }
}

/// Procedural primitive, as written in scene files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Primitive {
    /// Axis-aligned box centered on the origin.
    Box { size: [f64; 3] },
    /// Rectangle in the local xz plane facing +y.
    Plane { size: [f64; 2] },
    /// Cylinder along local y, centered on the origin.
    Cylinder { radius: f64, height: f64 },
    Sphere { radius: f64 },
}

impl Primitive {
    pub fn validate(&self) -> Result<(), SceneError> {
        let dims: Vec<f64> = match self {
            Primitive::Box { size } => size.to_vec(),
            Primitive::Plane { size } => size.to_vec(),
            Primitive::Cylinder { radius, height } => vec![*radius, *height],
            Primitive::Sphere { radius } => vec![*radius],
        };
        if dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            Ok(())
        } else {
            Err(SceneError::validation(format!("primitive {self:?} needs positive finite dimensions")))
        }
    }

    pub fn build(&self) -> Mesh {
        match *self {
            Primitive::Box { size } => box_mesh(Vec3::from(size) * 0.5),
            Primitive::Plane { size } => plane_mesh(size[0] * 0.5, size[1] * 0.5),
            Primitive::Cylinder { radius, height } => cylinder_mesh(radius, height * 0.5),
            Primitive::Sphere { radius } => sphere_mesh(radius),
        }
    }
}

fn quad(mesh: &mut Mesh, corners: [Vec3; 4], normal: Vec3) {
    let i: Vec<u32> = corners.iter().map(|&c| mesh.push(c, normal)).collect();
    mesh.triangles.push([i[0], i[1], i[2]]);
    mesh.triangles.push([i[0], i[2], i[3]]);
}

fn box_mesh(h: Vec3) -> Mesh {
    let mut m = Mesh::empty();
    let (x, y, z) = (h.x, h.y, h.z);
    let v = Vec3::new;
    // counter-clockwise seen from outside
    quad(&mut m, [v(x, -y, z), v(x, -y, -z), v(x, y, -z), v(x, y, z)], Vec3::X);
    quad(&mut m, [v(-x, -y, -z), v(-x, -y, z), v(-x, y, z), v(-x, y, -z)], -Vec3::X);
    quad(&mut m, [v(-x, y, z), v(x, y, z), v(x, y, -z), v(-x, y, -z)], Vec3::Y);
    quad(&mut m, [v(-x, -y, -z), v(x, -y, -z), v(x, -y, z), v(-x, -y, z)], -Vec3::Y);
    quad(&mut m, [v(-x, -y, z), v(x, -y, z), v(x, y, z), v(-x, y, z)], Vec3::Z);
    quad(&mut m, [v(x, -y, -z), v(-x, -y, -z), v(-x, y, -z), v(x, y, -z)], -Vec3::Z);
    m
}

fn plane_mesh(hx: f64, hz: f64) -> Mesh {
    let mut m = Mesh::empty();
    let v = Vec3::new;
    quad(&mut m, [v(-hx, 0.0, hz), v(hx, 0.0, hz), v(hx, 0.0, -hz), v(-hx, 0.0, -hz)], Vec3::Y);
    m
}

fn cylinder_mesh(r: f64, hh: f64) -> Mesh {
    let mut m = Mesh::empty();
    let n = CYLINDER_SEGMENTS;
    let ring: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();

    let side: Vec<(u32, u32)> = ring
        .iter()
        .map(|&(c, s)| {
            let normal = Vec3::new(c, 0.0, -s);
            let b = m.push(Vec3::new(r * c, -hh, -r * s), normal);
            let t = m.push(Vec3::new(r * c, hh, -r * s), normal);
            (b, t)
        })
        .collect();
    for k in 0..n {
        let (b0, t0) = side[k];
        let (b1, t1) = side[(k + 1) % n];
        m.triangles.push([b0, b1, t1]);
        m.triangles.push([b0, t1, t0]);
    }

    for (y, normal) in [(hh, Vec3::Y), (-hh, -Vec3::Y)] {
        let center = m.push(Vec3::new(0.0, y, 0.0), normal);
        let rim: Vec<u32> = ring.iter().map(|&(c, s)| m.push(Vec3::new(r * c, y, -r * s), normal)).collect();
        for k in 0..n {
            let (a, b) = (rim[k], rim[(k + 1) % n]);
            if y > 0.0 {
                m.triangles.push([center, a, b]);
            } else {
                m.triangles.push([center, b, a]);
            }
        }
    }
    m
}

fn sphere_mesh(r: f64) -> Mesh {
    let mut m = Mesh::empty();
    let (stacks, slices) = (SPHERE_STACKS, SPHERE_SLICES);
    for i in 0..=stacks {
        let phi = PI * i as f64 / stacks as f64;
        for j in 0..=slices {
            let theta = TAU * j as f64 / slices as f64;
            let n = Vec3::new(phi.sin() * theta.cos(), phi.cos(), -phi.sin() * theta.sin());
            m.push(n * r, n);
        }
    }
    let row = (slices + 1) as u32;
    for i in 0..stacks as u32 {
        for j in 0..slices as u32 {
            let a = i * row + j;
            let b = a + row;
            if i != 0 {
                m.triangles.push([a, b, a + 1]);
            }
            if i + 1 != stacks as u32 {
                m.triangles.push([a + 1, b, b + 1]);
            }
        }
    }
    m
}

/// Parses a triangulated Wavefront OBJ (positions and optional normals).
///
/// Faces with more than three corners are fan-triangulated. Faces without
/// normal references get their flat face normal.
pub fn parse_obj(text: &str) -> Result<Mesh, SceneError> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut normals: Vec<Vec3> = Vec::new();
    let mut mesh = Mesh::empty();
    let mut corner_index: HashMap<(usize, usize), u32> = HashMap::new();

    let err = |line: usize, message: String| SceneError::Obj { line, message };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut fields = content.split_whitespace();
        let Some(tag) = fields.next() else { continue };
        match tag {
            "v" | "vn" => {
                let nums: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>().map_err(|e| err(line, format!("bad number {f:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if nums.len() != 3 {
                    return Err(err(line, format!("`{tag}` needs three components")));
                }
                let v = Vec3::new(nums[0], nums[1], nums[2]);
                if tag == "v" {
                    positions.push(v);
                } else {
                    let n = v.try_normalize().ok_or_else(|| err(line, "zero-length normal".into()))?;
                    normals.push(n);
                }
            }
            "f" => {
                let mut corners: Vec<(usize, Option<usize>)> = Vec::new();
                for f in fields {
                    let mut parts = f.split('/');
                    let vi = resolve_index(parts.next().unwrap_or(""), positions.len())
                        .ok_or_else(|| err(line, format!("bad vertex reference {f:?}")))?;
                    let _texture = parts.next();
                    let ni = match parts.next() {
                        Some(s) if !s.is_empty() => Some(
                            resolve_index(s, normals.len())
                                .ok_or_else(|| err(line, format!("bad normal reference {f:?}")))?,
                        ),
                        _ => None,
                    };
                    corners.push((vi, ni));
                }
                if corners.len() < 3 {
                    return Err(err(line, "face needs at least three corners".into()));
                }
                for k in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[k], corners[k + 1]];
                    if tri.iter().all(|c| c.1.is_some()) {
                        let mut idx = [0u32; 3];
                        for (slot, &(vi, ni)) in idx.iter_mut().zip(tri.iter()) {
                            let ni = ni.expect("checked above");
                            *slot = *corner_index
                                .entry((vi, ni))
                                .or_insert_with(|| mesh.push(positions[vi], normals[ni]));
                        }
                        mesh.triangles.push(idx);
                    } else {
                        let p = tri.map(|c| positions[c.0]);
                        let n = (p[1] - p[0])
                            .cross(p[2] - p[0])
                            .try_normalize()
                            .ok_or_else(|| err(line, "degenerate face".into()))?;
                        let idx = p.map(|v| mesh.push(v, n));
                        mesh.triangles.push(idx);
                    }
                }
            }
            _ => {}
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

fn resolve_index(s: &str, len: usize) -> Option<usize> {
    let i: i64 = s.parse().ok()?;
    let resolved = match i {
        0 => return None,
        i if i > 0 => i as usize - 1,
        i => len.checked_sub(i.unsigned_abs() as usize)?,
    };
    (resolved < len).then_some(resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signed_volume(m: &Mesh) -> f64 {
        m.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| m.vertices[i as usize]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    #[test]
    fn primitives_are_valid() {
        let prims = [
            Primitive::Box { size: [1.0, 2.0, 3.0] },
            Primitive::Plane { size: [4.0, 2.0] },
            Primitive::Cylinder { radius: 0.5, height: 2.0 },
            Primitive::Sphere { radius: 1.5 },
        ];
        for p in prims {
            p.build().validate().unwrap();
        }
    }

    #[test]
    fn closed_primitives_wind_outward() {
        let b = Primitive::Box { size: [1.0, 2.0, 3.0] }.build();
        assert!((signed_volume(&b) - 6.0).abs() < 1e-12);
        let c = Primitive::Cylinder { radius: 1.0, height: 1.0 }.build();
        let polygon_area = 0.5 * CYLINDER_SEGMENTS as f64 * (TAU / CYLINDER_SEGMENTS as f64).sin();
        assert!((signed_volume(&c) - polygon_area).abs() < 1e-9);
        let s = Primitive::Sphere { radius: 1.0 }.build();
        let v = signed_volume(&s);
        assert!(v > 3.9 && v < 4.0 * PI / 3.0, "{v}");
    }

    #[test]
    fn tessellation_counts() {
        let c = Primitive::Cylinder { radius: 1.0, height: 1.0 }.build();
        assert_eq!(c.triangles.len(), 4 * CYLINDER_SEGMENTS);
        let s = Primitive::Sphere { radius: 1.0 }.build();
        assert_eq!(s.triangles.len(), 2 * SPHERE_SLICES * (SPHERE_STACKS - 1));
    }

    #[test]
    fn obj_with_and_without_normals() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 2\nf 1//1 2//1 3//1\nf 1 3 4\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.triangles.len(), 2);
        assert!(m.normals.iter().all(|n| (*n - Vec3::Z).norm() < 1e-12));
    }

    #[test]
    fn obj_polygon_and_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n";
        assert_eq!(parse_obj(text).unwrap().triangles.len(), 2);
    }

    #[test]
    fn obj_errors_carry_line() {
        match parse_obj("v 0 0 0\nf 1 2 3\n") {
            Err(SceneError::Obj { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("").is_err());
    }
}
