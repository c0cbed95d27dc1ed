//! Serde mirror of the scene file and conversion to and from [`Scene`].

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mesh::{parse_obj, Mesh, Primitive};
use super::{
    CameraDefaults, Category, Light, Material, MeshSource, MoverConfig, Pose, RigidBody, Scene, SceneError,
    SceneObject,
};
use crate::math::{Quat, Vec3};
use crate::motion::BehaviorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub name: String,
    #[serde(default)]
    pub categories: Vec<CategoryDocument>,
    #[serde(default)]
    pub objects: Vec<ObjectDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mover: Option<MoverDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light: Option<LightDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryDocument {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseDocument {
    pub position: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_deg: Option<[f64; 3]>,
    /// `[w, x, y, z]`; takes precedence over `euler_deg`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quat: Option<Quat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<Mesh>,
    #[serde(default = "default_albedo")]
    pub albedo: [u32; 3],
    pub pose: PoseDocument,
    #[serde(default)]
    pub category: u32,
    #[serde(default, rename = "static")]
    pub is_static: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_velocity: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub behaviors: Vec<BehaviorConfig>,
}

fn default_albedo() -> [u32; 3] {
    [200, 200, 200]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoverDocument {
    pub waypoints: Vec<PoseDocument>,
    pub total_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightDocument {
    pub direction: Vec3,
    pub ambient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDocument {
    pub near: f64,
    pub far: f64,
    pub fov_deg: f64,
}

/// Normalizes unless already unit to within rounding, so that re-loading a
/// written-back scene is exact.
pub(crate) fn unitize(v: Vec3) -> Option<Vec3> {
    let n = v.norm();
    if (n - 1.0).abs() <= 1e-12 {
        Some(v)
    } else {
        v.try_normalize()
    }
}

fn unit_quat(q: Quat) -> Option<Quat> {
    let n = q.norm();
    if !q.is_finite() || n < 1e-12 {
        None
    } else if (n - 1.0).abs() <= 1e-12 {
        Some(q)
    } else {
        Some(q.normalized())
    }
}

fn pose_from(doc: &PoseDocument) -> Result<Pose, SceneError> {
    let orientation = match (doc.quat, doc.euler_deg) {
        (Some(q), _) => unit_quat(q).ok_or_else(|| SceneError::validation("pose quaternion must be nonzero"))?,
        (None, Some(e)) => Quat::from_euler_deg(e),
        (None, None) => Quat::IDENTITY,
    };
    Ok(Pose { position: doc.position, orientation })
}

fn pose_to(p: &Pose) -> PoseDocument {
    PoseDocument { position: p.position, euler_deg: None, quat: Some(p.orientation) }
}

pub(crate) fn from_document(doc: SceneDocument, base: Option<&Path>) -> Result<Scene, SceneError> {
    let categories = doc
        .categories
        .iter()
        .map(|c| {
            let id = u8::try_from(c.id)
                .ok()
                .filter(|&id| id != 0)
                .ok_or_else(|| SceneError::validation(format!("category id {} outside [1, 255]", c.id)))?;
            Ok(Category { id, name: c.name.clone() })
        })
        .collect::<Result<Vec<_>, SceneError>>()?;

    let mut objects = Vec::with_capacity(doc.objects.len());
    for (index, o) in doc.objects.into_iter().enumerate() {
        let what = format!("object {:?}", o.name);
        let (source, mesh) = match (&o.primitive, &o.obj_file, &o.mesh) {
            (Some(p), None, None) => {
                p.validate()?;
                (MeshSource::Primitive(p.clone()), p.build())
            }
            (None, Some(file), None) => {
                let path = base.map(|b| b.join(file)).unwrap_or_else(|| file.into());
                let text =
                    std::fs::read_to_string(&path).map_err(|source| SceneError::Io { path: path.clone(), source })?;
                (MeshSource::Inline, parse_obj(&text)?)
            }
            (None, None, Some(m)) => (MeshSource::Inline, m.clone()),
            _ => {
                return Err(SceneError::validation(format!(
                    "{what}: exactly one of primitive, obj_file, mesh is required"
                )))
            }
        };
        let albedo = o.albedo.map(|c| u8::try_from(c).ok());
        let [Some(b), Some(g), Some(r)] = albedo else {
            return Err(SceneError::validation(format!("{what}: albedo channels must be in [0, 255]")));
        };
        let category_id = u8::try_from(o.category)
            .map_err(|_| SceneError::validation(format!("{what}: unknown category {}", o.category)))?;
        let rigidbody = o.mass.map(|mass| RigidBody {
            mass,
            linear_velocity: o.velocity.unwrap_or_default(),
            angular_velocity: o.angular_velocity.unwrap_or_default(),
        });
        if rigidbody.is_none() && (o.velocity.is_some() || o.angular_velocity.is_some()) {
            return Err(SceneError::validation(format!("{what}: velocities need a mass")));
        }
        objects.push(SceneObject {
            instance_id: o.id.unwrap_or(index as u32 + 1),
            name: o.name,
            source,
            mesh: Arc::new(mesh),
            material: Material { albedo: [b, g, r] },
            pose: pose_from(&o.pose)?,
            category_id,
            is_static: o.is_static,
            rigidbody,
            behaviors: o.behaviors,
        });
    }

    let mover = match doc.mover {
        Some(m) => MoverConfig {
            waypoints: m.waypoints.iter().map(pose_from).collect::<Result<_, _>>()?,
            total_time: m.total_time,
        },
        None => MoverConfig { waypoints: vec![Pose::default()], total_time: 1.0 },
    };
    let light = match doc.light {
        Some(l) => Light {
            direction: unitize(l.direction).ok_or_else(|| SceneError::validation("light direction is zero"))?,
            ambient: l.ambient,
        },
        None => Light { direction: unitize(Vec3::new(-0.3, -1.0, -0.5)).expect("nonzero"), ambient: 0.25 },
    };
    let camera = doc
        .camera
        .map(|c| CameraDefaults { near: c.near, far: c.far, vertical_fov_deg: c.fov_deg })
        .unwrap_or_default();

    Ok(Scene { name: doc.name, objects, categories, mover, light, camera })
}

pub(crate) fn to_document(scene: &Scene) -> SceneDocument {
    SceneDocument {
        name: scene.name.clone(),
        categories: scene
            .categories
            .iter()
            .map(|c| CategoryDocument { id: c.id.into(), name: c.name.clone() })
            .collect(),
        objects: scene
            .objects
            .iter()
            .map(|o| {
                let (primitive, mesh) = match &o.source {
                    MeshSource::Primitive(p) => (Some(p.clone()), None),
                    MeshSource::Inline => (None, Some((*o.mesh).clone())),
                };
                ObjectDocument {
                    name: o.name.clone(),
                    id: Some(o.instance_id),
                    primitive,
                    obj_file: None,
                    mesh,
                    albedo: o.material.albedo.map(u32::from),
                    pose: pose_to(&o.pose),
                    category: o.category_id.into(),
                    is_static: o.is_static,
                    mass: o.rigidbody.map(|r| r.mass),
                    velocity: o.rigidbody.map(|r| r.linear_velocity),
                    angular_velocity: o.rigidbody.map(|r| r.angular_velocity),
                    behaviors: o.behaviors.clone(),
                }
            })
            .collect(),
        mover: Some(MoverDocument {
            waypoints: scene.mover.waypoints.iter().map(pose_to).collect(),
            total_time: scene.mover.total_time,
        }),
        light: Some(LightDocument { direction: scene.light.direction, ambient: scene.light.ambient }),
        camera: Some(CameraDocument {
            near: scene.camera.near,
            far: scene.camera.far,
            fov_deg: scene.camera.vertical_fov_deg,
        }),
    }
}
