//! `freespace` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Standard output is
//! line-oriented `key=value` text.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::augment::{augment, AugmentMode};
use crate::bev::{bev_slice_render, occupancy_to_bev, visibility_to_bev, write_bev, BevMap};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::io::{read_object, read_occupancy, read_poses, read_sweep, read_visibility, write_occupancy, write_sweep, write_visibility, Sweep, OCCUPANCY_MAGIC, VISIBILITY_MAGIC};
use crate::occupancy::{build_temporal_occupancy, OccupancyGrid, OccupancyParams};
use crate::parallel::available_workers;
use crate::raycast::compute_visibility;
use crate::synth::BeamPattern;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Pose timestamps within this many seconds of a sweep's timestamp match it.
const POSE_MATCH_TOLERANCE: f64 = 1e-6;

type Real = f64;

#[derive(Debug, Parser)]
#[command(name = "freespace", version, about = "LiDAR visibility raycasting, occupancy fusion and augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the visibility volume of one sweep and write a VVOL file.
    Visibility {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        workers: Option<u64>,
    },
    /// Fuse time-ordered sweeps into a log-odds occupancy grid (OVOL file).
    Occupancy {
        /// Sweep files or glob patterns, expanded in lexicographic order.
        #[arg(long, num_args = 1.., required = true)]
        sweeps: Vec<String>,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        workers: Option<u64>,
    },
    /// Insert virtual objects into a scene sweep.
    Augment {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        objects: Vec<PathBuf>,
        #[arg(long, value_parser = parse_mode)]
        mode: AugmentMode,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Report destination (default: standard output).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        workers: Option<u64>,
    },
    /// Convert a VVOL or OVOL volume to a BEVF map, optionally rendering one channel as PGM.
    Bev {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, requires = "render_out")]
        render_channel: Option<usize>,
        #[arg(long, requires = "render_channel")]
        render_out: Option<PathBuf>,
    },
    /// Time visibility computation on a synthetic 32-beam sweep.
    Bench {
        #[arg(long, default_value_t = 30_000)]
        points: usize,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        iters: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        workers: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_mode(s: &str) -> std::result::Result<AugmentMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, A>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = write!(stderr, "{}", err.render());
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            EXIT_DATA
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig<Real>> {
    path.map_or_else(|| Ok(EngineConfig::default()), EngineConfig::load)
}

fn workers(requested: Option<u64>) -> usize {
    requested.map_or_else(available_workers, |w| w as usize)
}

fn emit(stdout: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(stdout, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Visibility {
            sweep,
            config,
            out,
            workers: w,
        } => {
            let cfg = load_config(config.as_deref())?;
            let sweep: Sweep<Real> = read_sweep(&sweep)?;
            let vis = compute_visibility(&sweep, &cfg.grid, workers(w));
            write_visibility(&out, &vis)?;
            emit(stdout, vis.census())
        }
        Command::Occupancy {
            sweeps,
            poses,
            config,
            out,
            workers: w,
        } => {
            let cfg = load_config(config.as_deref())?;
            let paths = expand_sweep_args(&sweeps)?;
            let stamped = read_poses::<Real>(&poses)?;
            let mut loaded = Vec::with_capacity(paths.len());
            let mut matched = Vec::with_capacity(paths.len());
            for path in &paths {
                let sweep: Sweep<Real> = read_sweep(path)?;
                let pose = stamped
                    .iter()
                    .find(|p| (p.timestamp - sweep.timestamp).abs() <= POSE_MATCH_TOLERANCE)
                    .ok_or_else(|| {
                        Error::argument(format!("no pose for sweep {} at t={}", path.display(), sweep.timestamp))
                    })?;
                matched.push(pose.pose);
                loaded.push(sweep);
            }
            let grid = build_temporal_occupancy(&loaded, &matched, &cfg.grid, cfg.occupancy, workers(w))?;
            write_occupancy(&out, &grid)?;
            let (mut occupied, mut free, mut unknown) = (0usize, 0usize, 0usize);
            for &l in grid.logodds() {
                match l.partial_cmp(&0.0) {
                    Some(std::cmp::Ordering::Greater) => occupied += 1,
                    Some(std::cmp::Ordering::Less) => free += 1,
                    _ => unknown += 1,
                }
            }
            emit(stdout, format!("sweeps={} unknown={unknown} free={free} occupied={occupied}", loaded.len()))
        }
        Command::Augment {
            scene,
            objects,
            mode,
            config,
            out,
            report,
            workers: w,
        } => {
            let cfg = load_config(config.as_deref())?;
            let scene: Sweep<Real> = read_sweep(&scene)?;
            let objects = objects.iter().map(read_object::<Real>).collect::<Result<Vec<_>>>()?;
            let (augmented, rep) = augment(&scene, &objects, mode, &cfg.grid, cfg.cull_drop_fraction, workers(w))?;
            write_sweep(&out, &augmented)?;
            match report {
                Some(path) => std::fs::write(&path, rep.to_string()).map_err(|e| Error::io(&path, e))?,
                None => write!(stdout, "{rep}").map_err(|e| Error::io("<stdout>", e))?,
            }
            emit(
                stdout,
                format!(
                    "mode={mode} output_points={} scene_points_removed={} objects_dropped={}",
                    rep.output_points,
                    rep.scene_points_removed,
                    rep.objects_dropped.len()
                ),
            )
        }
        Command::Bev {
            input,
            out,
            render_channel,
            render_out,
        } => {
            let map = load_bev_source(&input)?;
            write_bev(&out, &map)?;
            if let (Some(channel), Some(path)) = (render_channel, render_out) {
                bev_slice_render(&map, channel, &path)?;
            }
            let [w, h, c] = map.shape();
            emit(stdout, format!("width={w} height={h} channels={c}"))
        }
        Command::Bench {
            points,
            iters,
            config,
            workers: w,
            seed,
        } => {
            let cfg = load_config(config.as_deref())?;
            let workers = workers(w);
            let summary = bench(points, iters as usize, &cfg, workers, seed);
            emit(stdout, summary)
        }
    }
}

/// Timing statistics of [`bench`], in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSummary {
    pub points: usize,
    pub iters: usize,
    pub workers: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub min_ms: f64,
}

impl std::fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "points={} iters={} workers={} mean_ms={:.3} std_ms={:.3} min_ms={:.3}",
            self.points, self.iters, self.workers, self.mean_ms, self.std_ms, self.min_ms
        )
    }
}

/// Runs visibility computation `iters` times on a synthetic sweep from the
/// sensor at the grid's world origin.
pub fn bench(points: usize, iters: usize, cfg: &EngineConfig<Real>, workers: usize, seed: u64) -> BenchSummary {
    let sweep = BeamPattern::default().sweep::<Real>(points, [0.0; 3], seed);
    let mut times = Vec::with_capacity(iters);
    for _ in 0..iters {
        let start = Instant::now();
        let vis = compute_visibility(&sweep, &cfg.grid, workers);
        times.push(start.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(vis);
    }
    let n = times.len().max(1) as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    BenchSummary {
        points,
        iters,
        workers,
        mean_ms: mean,
        std_ms: var.sqrt(),
        min_ms: times.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

fn load_bev_source(path: &Path) -> Result<BevMap> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let magic = data.get(..4).unwrap_or_default();
    if magic == VISIBILITY_MAGIC {
        Ok(visibility_to_bev(&read_visibility::<Real>(path)?))
    } else if magic == OCCUPANCY_MAGIC {
        let (header, values) = read_occupancy(path)?;
        let grid = header.grid::<f32>()?;
        let occ = OccupancyGrid::from_logodds(grid, OccupancyParams::default(), values)?;
        Ok(occupancy_to_bev(&occ))
    } else {
        Err(Error::parse(path, 0, "expected a VVOL or OVOL file"))
    }
}

fn expand_sweep_args(args: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for arg in args {
        if arg.contains(['*', '?', '[']) {
            let pattern = glob::glob(arg).map_err(|e| Error::argument(format!("bad glob {arg:?}: {e}")))?;
            let mut matched: Vec<PathBuf> = pattern.filter_map(std::result::Result::ok).collect();
            if matched.is_empty() {
                return Err(Error::argument(format!("no sweep files match {arg:?}")));
            }
            matched.sort();
            out.extend(matched);
        } else {
            out.push(PathBuf::from(arg));
        }
    }
    Ok(out)
}
