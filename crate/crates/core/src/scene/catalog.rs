use super::{load_scene, Scene, SceneError};

const BUILTIN: [(&str, &str); 4] = [
    ("room_simple", include_str!("../../scenes/room_simple.json")),
    ("optical", include_str!("../../scenes/optical.json")),
    ("cube", include_str!("../../scenes/cube.json")),
    ("still_life", include_str!("../../scenes/still_life.json")),
];

pub fn builtin_scene_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

/// The built-in catalog, in a fixed order.
pub fn builtin_scenes() -> Vec<Scene> {
    BUILTIN
        .iter()
        .map(|(name, text)| load_scene(text).unwrap_or_else(|e| panic!("built-in scene {name}: {e}")))
        .collect()
}

pub fn builtin_scene(name: &str) -> Result<Scene, SceneError> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| SceneError::UnknownScene(name.to_owned()))?;
    load_scene(text)
}
