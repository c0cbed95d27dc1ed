//! Command-line front end: `serve`, `dump` and `bench`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use vizenv_core::eval::{benchmark_flow, format_table, to_csv, BenchConfig, BlockMatchParams, DEFAULT_RESOLUTIONS};
use vizenv_core::scene::{builtin_scene, builtin_scene_names, load_scene_file, Scene};

use crate::dump::{dump, DumpConfig};
use crate::server::{start, ServerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vizenv", version, about = "Headless visual environment: frame server, frame dumper and flow benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve scenes to remote agents over TCP.
    Serve(ServeArgs),
    /// Render annotated views of a scene to PNG and .flo files.
    Dump(DumpArgs),
    /// Time analytic flow against block matching across resolutions.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TCP port to listen on.
    #[arg(long, env = "VIZENV_PORT", default_value_t = 8085)]
    pub port: u16,
    /// Address to bind.
    #[arg(long, default_value = "0.0.0.0")]
    pub bind: IpAddr,
    /// Simulation ticks per second.
    #[arg(long, default_value_t = 60.0, value_parser = positive)]
    pub tick_rate: f64,
    /// Scene JSON files to serve instead of the built-in catalog.
    #[arg(long = "scene", value_name = "FILE")]
    pub scenes: Vec<PathBuf>,
    /// Seed for scene behaviors.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    /// Built-in scene name or path to a scene JSON file.
    #[arg(long, default_value = "optical")]
    pub scene: String,
    /// Simulated duration to sample.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub seconds: f64,
    /// Frames written per simulated second.
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    pub fps: f64,
    /// Simulation ticks per second.
    #[arg(long, default_value_t = 60.0, value_parser = positive)]
    pub tick_rate: f64,
    /// Image size as WIDTHxHEIGHT.
    #[arg(long, default_value = "256x192")]
    pub resolution: Resolution,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Built-in scene name or path to a scene JSON file.
    #[arg(long, default_value = "optical")]
    pub scene: String,
    /// Timed samples per resolution and method.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    /// Untimed warm-up runs before sampling.
    #[arg(long, default_value_t = 5)]
    pub warmup: u64,
    /// Comma-separated WIDTHxHEIGHT list.
    #[arg(long, value_delimiter = ',')]
    pub resolutions: Vec<Resolution>,
    /// Also write the CSV report to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub block_size: u32,
    #[arg(long, default_value_t = 4)]
    pub search_radius: u32,
    #[arg(long, default_value_t = 3)]
    pub pyramid_levels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<u32>().ok().filter(|&n| n >= 1);
        match (parse(w), parse(h)) {
            (Some(width), Some(height)) => Ok(Resolution { width, height }),
            _ => Err(format!("invalid resolution {s:?}")),
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

/// A built-in scene by name, otherwise a scene file.
pub fn resolve_scene(name: &str) -> anyhow::Result<Scene> {
    if builtin_scene_names().contains(&name) {
        return Ok(builtin_scene(name)?);
    }
    let path = Path::new(name);
    if path.exists() {
        return load_scene_file(path).with_context(|| format!("loading {name}"));
    }
    anyhow::bail!("unknown scene {name:?} (built-ins: {})", builtin_scene_names().join(", "))
}

pub fn run_serve(args: ServeArgs) -> anyhow::Result<()> {
    let scenes = if args.scenes.is_empty() {
        ServerConfig::default().scenes
    } else {
        args.scenes
            .iter()
            .map(|p| load_scene_file(p).with_context(|| format!("loading {}", p.display())))
            .collect::<anyhow::Result<_>>()?
    };
    let handle = start(ServerConfig { bind: args.bind, port: args.port, tick_rate: args.tick_rate, seed: args.seed, scenes })?;
    handle.wait();
    Ok(())
}

pub fn run_dump(args: DumpArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let scene = resolve_scene(&args.scene)?;
    let cfg = DumpConfig {
        seconds: args.seconds,
        fps: args.fps,
        tick_rate: args.tick_rate,
        width: args.resolution.width,
        height: args.resolution.height,
        seed: args.seed,
        out_dir: args.out,
    };
    let files = dump(scene, &cfg)?;
    writeln!(out, "wrote {} files to {}", files.len(), cfg.out_dir.display())?;
    Ok(())
}

pub fn run_bench(args: BenchArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let scene = resolve_scene(&args.scene)?;
    let resolutions = if args.resolutions.is_empty() {
        DEFAULT_RESOLUTIONS.to_vec()
    } else {
        args.resolutions.iter().map(|r| (r.width, r.height)).collect()
    };
    let cfg = BenchConfig {
        resolutions,
        samples: args.samples as usize,
        warmup: args.warmup as usize,
        seed: args.seed,
        params: BlockMatchParams {
            block_size: args.block_size,
            search_radius: args.search_radius,
            pyramid_levels: args.pyramid_levels,
        },
    };
    let records = benchmark_flow(Arc::new(scene), &cfg)?;
    let csv = to_csv(&records);
    if let Some(path) = &args.csv {
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    write!(out, "{csv}\n{}", format_table(&records))?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Serve(a) => run_serve(a),
        Command::Dump(a) => run_dump(a, out),
        Command::Bench(a) => run_bench(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
