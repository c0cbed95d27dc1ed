//! Per-pixel views derived from a [`GBuffer`].

use std::collections::HashMap;

use crate::math::round_to_byte;
use crate::scene::{Light, Scene};

use super::raster::GBuffer;
use super::RenderError;

/// Flat Lambert shading with an ambient floor. Output is BGR, background
/// black.
pub fn shade_main(g: &GBuffer, light: &Light) -> Vec<u8> {
    let mut out = vec![0u8; g.instance_id.len() * 3];
    let to_light = -light.direction;
    for (i, px) in out.chunks_exact_mut(3).enumerate() {
        if !g.is_covered(i) {
            continue;
        }
        let lambert = g.normal[i].dot(to_light).max(0.0);
        let k = light.ambient + lambert * (1.0 - light.ambient);
        for (c, &a) in px.iter_mut().zip(&g.albedo[i]) {
            *c = round_to_byte(f64::from(a) * k);
        }
    }
    out
}

/// Linear depth byte: 255 at `near`, 0 at `far`, background 0.
pub fn depth_byte(z: f64, near: f64, far: f64) -> u8 {
    round_to_byte(255.0 * (far - z) / (far - near))
}

pub fn render_depth(g: &GBuffer, near: f64, far: f64) -> Vec<u8> {
    (0..g.instance_id.len())
        .map(|i| if g.is_covered(i) { depth_byte(g.point[i].z, near, far) } else { 0 })
        .collect()
}

/// Category id of the covering object per pixel; background 0.
pub fn render_category(g: &GBuffer, scene: &Scene) -> Result<Vec<u8>, RenderError> {
    let table: HashMap<u32, u8> = scene.objects.iter().map(|o| (o.instance_id, o.category_id)).collect();
    g.instance_id
        .iter()
        .map(|&id| match id {
            0 => Ok(0),
            id => table.get(&id).copied().ok_or(RenderError::UnknownInstance(id)),
        })
        .collect()
}

/// Instance id as three little-endian bytes, i.e. B = low byte.
pub fn encode_instance(id: u32) -> [u8; 3] {
    [(id & 0xFF) as u8, ((id >> 8) & 0xFF) as u8, ((id >> 16) & 0xFF) as u8]
}

pub fn decode_instance(bgr: [u8; 3]) -> u32 {
    u32::from(bgr[0]) | (u32::from(bgr[1]) << 8) | (u32::from(bgr[2]) << 16)
}

pub fn render_instance(g: &GBuffer) -> Vec<u8> {
    g.instance_id.iter().flat_map(|&id| encode_instance(id)).collect()
}
