//! Scene data model, scene-file loading and validation.
//!
//! A scene file is JSON. Each object carries a primitive (`box`, `plane`,
//! `cylinder`, `sphere`), an `obj_file`, or an inline `mesh`. Angles in files
//! are degrees; colors are `[b, g, r]` bytes.

mod catalog;
mod document;
pub mod mesh;
mod snapshot;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

pub use catalog::{builtin_scene, builtin_scene_names, builtin_scenes};
pub use document::{
    CameraDocument, CategoryDocument, LightDocument, MoverDocument, ObjectDocument, PoseDocument, SceneDocument,
};
pub(crate) use document::unitize;
pub use mesh::{parse_obj, Mesh, Primitive};
pub use snapshot::{take_snapshot, AgentSnapshot, BodySnapshot, Kinematics, Snapshot};

use crate::math::{Quat, Vec3};
use crate::motion::BehaviorConfig;

/// Largest instance id representable in the three-byte instance view.
pub const MAX_INSTANCE_ID: u32 = (1 << 24) - 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error("scene validation error: {0}")]
    Validation(String),
    #[error("OBJ line {line}: {message}")]
    Obj { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown scene {0:?}")]
    UnknownScene(String),
}

impl SceneError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        SceneError::Validation(msg.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quat) -> Self {
        Self { position, orientation }
    }

    pub fn from_euler_deg(position: Vec3, euler_deg: [f64; 3]) -> Self {
        Self { position, orientation: Quat::from_euler_deg(euler_deg) }
    }

    /// Maps an object-local point into the world.
    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.orientation.rotate(p) + self.position
    }

    pub fn inverse_transform_point(&self, p: Vec3) -> Vec3 {
        self.orientation.conjugate().rotate(p - self.position)
    }

    pub fn is_valid(&self) -> bool {
        self.position.is_finite() && self.orientation.is_finite() && (self.orientation.norm() - 1.0).abs() <= 1e-6
    }
}

/// Flat albedo, stored in blue-green-red byte order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Material {
    pub albedo: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub id: u8,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBody {
    pub mass: f64,
    pub linear_velocity: Vec3,
    /// World-frame, axis × rad/s, about the object's origin.
    pub angular_velocity: Vec3,
}

/// Where an object's mesh came from; kept so a scene can be written back.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Primitive(Primitive),
    Inline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub instance_id: u32,
    pub name: String,
    pub source: MeshSource,
    pub mesh: Arc<Mesh>,
    pub material: Material,
    pub pose: Pose,
    pub category_id: u8,
    pub is_static: bool,
    pub rigidbody: Option<RigidBody>,
    pub behaviors: Vec<BehaviorConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoverConfig {
    pub waypoints: Vec<Pose>,
    pub total_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Light {
    /// Unit vector along which light travels.
    pub direction: Vec3,
    pub ambient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraDefaults {
    pub near: f64,
    pub far: f64,
    pub vertical_fov_deg: f64,
}

impl Default for CameraDefaults {
    fn default() -> Self {
        Self { near: 0.1, far: 50.0, vertical_fov_deg: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub objects: Vec<SceneObject>,
    pub categories: Vec<Category>,
    pub mover: MoverConfig,
    pub light: Light,
    pub camera: CameraDefaults,
}

impl Scene {
    pub fn object_by_instance(&self, instance_id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.instance_id == instance_id)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let mut cat_ids = HashSet::new();
        for c in &self.categories {
            if c.id == 0 {
                return Err(SceneError::validation("category id 0 is reserved for background"));
            }
            if c.name.trim().is_empty() {
                return Err(SceneError::validation(format!("category {} has an empty name", c.id)));
            }
            if !cat_ids.insert(c.id) {
                return Err(SceneError::validation(format!("duplicate category id {}", c.id)));
            }
        }

        let mut ids = HashSet::new();
        for o in &self.objects {
            let what = format!("object {:?}", o.name);
            if o.instance_id == 0 || o.instance_id > MAX_INSTANCE_ID {
                return Err(SceneError::validation(format!(
                    "{what}: instance id {} outside [1, 2^24-1]",
                    o.instance_id
                )));
            }
            if !ids.insert(o.instance_id) {
                return Err(SceneError::validation(format!("duplicate instance id {}", o.instance_id)));
            }
            if o.category_id != 0 && !cat_ids.contains(&o.category_id) {
                return Err(SceneError::validation(format!("{what}: unknown category {}", o.category_id)));
            }
            if !o.pose.is_valid() {
                return Err(SceneError::validation(format!("{what}: invalid pose")));
            }
            o.mesh.validate()?;
            match (&o.rigidbody, o.is_static) {
                (Some(_), true) => {
                    return Err(SceneError::validation(format!("{what}: static objects cannot have a rigidbody")));
                }
                (None, false) => {
                    return Err(SceneError::validation(format!("{what}: moving objects need a mass")));
                }
                _ => {}
            }
            if o.is_static && !o.behaviors.is_empty() {
                return Err(SceneError::validation(format!("{what}: static objects cannot have behaviors")));
            }
            if let Some(rb) = &o.rigidbody {
                if !(rb.mass.is_finite() && rb.mass > 0.0) {
                    return Err(SceneError::validation(format!("{what}: mass must be positive")));
                }
                if !rb.linear_velocity.is_finite() || !rb.angular_velocity.is_finite() {
                    return Err(SceneError::validation(format!("{what}: velocities must be finite")));
                }
            }
            for b in &o.behaviors {
                b.validate().map_err(|e| SceneError::validation(format!("{what}: {e}")))?;
            }
        }

        let m = &self.mover;
        if m.waypoints.is_empty() {
            return Err(SceneError::validation("mover needs at least one waypoint"));
        }
        if !(m.total_time.is_finite() && m.total_time > 0.0) {
            return Err(SceneError::validation("mover total_time must be positive"));
        }
        if m.waypoints.iter().any(|w| !w.is_valid()) {
            return Err(SceneError::validation("mover waypoint has an invalid pose"));
        }

        let l = &self.light;
        if (l.direction.norm() - 1.0).abs() > 1e-6 || !(0.0..=1.0).contains(&l.ambient) {
            return Err(SceneError::validation("light needs a unit direction and ambient in [0, 1]"));
        }
        let c = &self.camera;
        if !(c.near > 0.0 && c.near < c.far && c.far.is_finite()) {
            return Err(SceneError::validation("camera needs 0 < near < far"));
        }
        if !(c.vertical_fov_deg > 0.0 && c.vertical_fov_deg < 180.0) {
            return Err(SceneError::validation("camera fov must lie in (0, 180) degrees"));
        }
        Ok(())
    }

    /// Writes the scene back as a document; `load` of the result reproduces
    /// an equal scene.
    pub fn to_document(&self) -> SceneDocument {
        document::to_document(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scene documents always serialize")
    }
}

/// Parses and validates a scene description. OBJ paths resolve against the
/// working directory.
pub fn load_scene(text: &str) -> Result<Scene, SceneError> {
    load_scene_with_base(text, None)
}

/// Like [`load_scene`], resolving `obj_file` paths relative to `base`.
pub fn load_scene_with_base(text: &str, base: Option<&Path>) -> Result<Scene, SceneError> {
    let doc: SceneDocument = serde_json::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
    let scene = document::from_document(doc, base)?;
    scene.validate()?;
    Ok(scene)
}

pub fn load_scene_file(path: &Path) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io { path: path.to_owned(), source })?;
    load_scene_with_base(&text, path.parent())
}

/// Category id → name for the scene. Background (0) never appears.
pub fn category_table(scene: &Scene) -> BTreeMap<u8, String> {
    scene.categories.iter().map(|c| (c.id, c.name.clone())).collect()
}
