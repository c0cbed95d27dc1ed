//! Timing harness comparing analytic engine flow with the block-matching
//! baseline across resolutions.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::motion::{World, DEFAULT_DT};
use crate::render::{render_views, CameraIntrinsics, ViewKind, ViewMask};
use crate::scene::Scene;

use super::{estimate_flow_blockmatch, BlockMatchParams, EvalError, GrayImage};

pub const DEFAULT_RESOLUTIONS: [(u32, u32); 6] =
    [(160, 120), (256, 192), (320, 240), (512, 384), (640, 480), (800, 600)];

pub const ENGINE_METHOD: &str = "engine_flow";
pub const BLOCKMATCH_METHOD: &str = "block_matching";

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub width: u32,
    pub height: u32,
    pub method: String,
    pub mean_s: f64,
    /// Half-width of the 95% confidence interval of the mean.
    pub ci95_s: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub resolutions: Vec<(u32, u32)>,
    pub samples: usize,
    /// Leading runs discarded before timing.
    pub warmup: usize,
    pub seed: u64,
    pub params: BlockMatchParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
            samples: 100,
            warmup: 5,
            seed: 0,
            params: BlockMatchParams::default(),
        }
    }
}

/// Sample mean and Student-t 95% half-width.
pub fn mean_ci95(samples: &[f64]) -> Result<(f64, f64), EvalError> {
    let n = samples.len();
    if n < 2 {
        return Err(EvalError::BadParams(format!("need at least 2 samples, got {n}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| EvalError::Bench(e.to_string()))?
        .inverse_cdf(0.975);
    Ok((mean, t * (var / n as f64).sqrt()))
}

fn record(width: u32, height: u32, method: &str, samples: &[f64]) -> Result<TimingRecord, EvalError> {
    let (mean_s, ci95_s) = mean_ci95(samples)?;
    Ok(TimingRecord { width, height, method: method.to_string(), mean_s, ci95_s, n: samples.len() })
}

fn bench_err(e: impl std::fmt::Display) -> EvalError {
    EvalError::Bench(e.to_string())
}

/// Times, per resolution, (a) analytic flow rendered from the latest
/// snapshot and (b) block matching on the color views of two consecutive
/// ticks. The camera follows the scene's mover. Rendering the color inputs
/// of the baseline is not timed.
pub fn benchmark_flow(scene: Arc<Scene>, cfg: &BenchConfig) -> Result<Vec<TimingRecord>, EvalError> {
    if cfg.samples < 2 {
        return Err(EvalError::BadParams("samples must be at least 2".into()));
    }
    cfg.params.validate()?;
    let runs = cfg.warmup + cfg.samples;
    let mut out = Vec::with_capacity(2 * cfg.resolutions.len());

    for &(w, h) in &cfg.resolutions {
        let intr = CameraIntrinsics::for_camera(&scene.camera, w, h).map_err(bench_err)?;

        let mut world = World::new(scene.clone(), cfg.seed, DEFAULT_DT).map_err(bench_err)?;
        let mut engine = Vec::with_capacity(runs);
        for _ in 0..runs {
            let snap = world.snapshot();
            let start = Instant::now();
            let views = render_views(&snap, &snap.mover(), &intr, ViewMask::only(ViewKind::Flow)).map_err(bench_err)?;
            engine.push(start.elapsed().as_secs_f64());
            std::hint::black_box(views);
            world.step();
        }

        let mut world = World::new(scene.clone(), cfg.seed, DEFAULT_DT).map_err(bench_err)?;
        let main = |world: &World| -> Result<Vec<u8>, EvalError> {
            let snap = world.snapshot();
            let v = render_views(&snap, &snap.mover(), &intr, ViewMask::only(ViewKind::Main)).map_err(bench_err)?;
            Ok(v.main.expect("requested"))
        };
        let mut prev = main(&world)?;
        let mut matching = Vec::with_capacity(runs);
        for _ in 0..runs {
            world.step();
            let next = main(&world)?;
            let start = Instant::now();
            let a = GrayImage::from_bgr(&prev, w, h)?;
            let b = GrayImage::from_bgr(&next, w, h)?;
            let flow = estimate_flow_blockmatch(&a, &b, &cfg.params)?;
            matching.push(start.elapsed().as_secs_f64());
            std::hint::black_box(flow);
            prev = next;
        }

        out.push(record(w, h, ENGINE_METHOD, &engine[cfg.warmup..])?);
        out.push(record(w, h, BLOCKMATCH_METHOD, &matching[cfg.warmup..])?);
    }
    Ok(out)
}

pub fn to_csv(records: &[TimingRecord]) -> String {
    let mut s = String::from("resolution,method,mean_s,ci95_s,n\n");
    for r in records {
        let _ = writeln!(s, "{}x{},{},{:.9},{:.9},{}", r.width, r.height, r.method, r.mean_s, r.ci95_s, r.n);
    }
    s
}

pub fn format_table(records: &[TimingRecord]) -> String {
    let mut s = format!("{:<10} {:<15} {:>12} {:>12} {:>5}\n", "resolution", "method", "mean (ms)", "±95% (ms)", "n");
    for r in records {
        let _ = writeln!(
            s,
            "{:<10} {:<15} {:>12.3} {:>12.3} {:>5}",
            format!("{}x{}", r.width, r.height),
            r.method,
            r.mean_s * 1e3,
            r.ci95_s * 1e3,
            r.n
        );
    }
    s
}
