//! Writes annotated views of a scene to image files, following the mover.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use vizenv_core::motion::World;
use vizenv_core::render::{flow_to_hsv, render_views, write_flo, CameraIntrinsics, ViewMask};
use vizenv_core::scene::Scene;

#[derive(Debug, Clone)]
pub struct DumpConfig {
    pub seconds: f64,
    pub fps: f64,
    pub tick_rate: f64,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Renders `round(seconds · fps)` frames sampled at the nearest tick and
/// returns the written paths.
pub fn dump(scene: Scene, cfg: &DumpConfig) -> anyhow::Result<Vec<PathBuf>> {
    if !(cfg.seconds > 0.0 && cfg.fps > 0.0 && cfg.tick_rate > 0.0) {
        bail!("seconds, fps and tick rate must be positive");
    }
    let frames = (cfg.seconds * cfg.fps).round() as u64;
    let intr = CameraIntrinsics::for_camera(&scene.camera, cfg.width, cfg.height)?;
    let mut world = World::new(Arc::new(scene), cfg.seed, 1.0 / cfg.tick_rate)?;
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;

    let mut written = Vec::new();
    for k in 0..frames {
        let tick = (k as f64 * cfg.tick_rate / cfg.fps).round() as u64;
        while world.tick() < tick {
            world.step();
        }
        let snap = world.snapshot();
        let v = render_views(&snap, &snap.mover(), &intr, ViewMask::ALL)?;
        let path = |suffix: &str| cfg.out_dir.join(format!("t{tick:06}_{suffix}"));
        let (w, h) = (cfg.width, cfg.height);
        let flow = v.flow.as_ref().expect("requested");

        let images: [(&str, png::ColorType, Vec<u8>); 5] = [
            ("main.png", png::ColorType::Rgb, bgr_to_rgb(v.main.as_deref().expect("requested"))),
            ("depth.png", png::ColorType::Grayscale, v.depth.clone().expect("requested")),
            ("category.png", png::ColorType::Grayscale, v.category.clone().expect("requested")),
            ("object.png", png::ColorType::Rgb, bgr_to_rgb(v.object.as_deref().expect("requested"))),
            ("flow_hsv.png", png::ColorType::Rgb, bgr_to_rgb(&flow_to_hsv(flow))),
        ];
        for (suffix, color, data) in images {
            let p = path(suffix);
            write_png(&p, w, h, color, &data)?;
            written.push(p);
        }
        let p = path("flow.flo");
        let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        let mut out = BufWriter::new(f);
        write_flo(flow, &mut out)?;
        out.flush()?;
        written.push(p);
    }
    Ok(written)
}

fn bgr_to_rgb(bgr: &[u8]) -> Vec<u8> {
    bgr.chunks_exact(3).flat_map(|p| [p[2], p[1], p[0]]).collect()
}

pub fn write_png(path: &Path, width: u32, height: u32, color: png::ColorType, data: &[u8]) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width, height);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header()?;
    w.write_image_data(data)?;
    w.finish()?;
    Ok(())
}
