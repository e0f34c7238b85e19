//! Command-line interface: argument parsing, subcommand dispatch, and
//! exit-code mapping (0 success, 1 validation problem, 2 I/O failure).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use usrecon_core::mapprep::{self, DEFAULT_PROBABILITY_SIGMA};
use usrecon_core::metrics::{self, SurfaceMask};
use usrecon_core::recon::{self, Method, ReconConfig};
use usrecon_core::simulate;
use usrecon_core::{BeamDirectionMap, ScalarVolume};

use crate::bundle::{load_bundle, save_bundle};
use crate::config::load_spec;
use crate::error::{AppError, EXIT_VALIDATION};
use crate::slice::{extract_slice, write_pgm, SliceAxis};
use crate::volume_file::{load_scalar, load_vector, load_volume, save_volume, VolumePayload};

#[derive(Debug, Parser)]
#[command(
    name = "usrecon",
    version,
    about = "Angle-weighted 3D ultrasound volume reconstruction toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive the surface probability and gradient direction maps from a
    /// binary label volume.
    PrepMaps {
        /// Ground-truth label volume (nonzero = solid).
        #[arg(long)]
        label: PathBuf,
        /// Gaussian width (in voxels) of the probability falloff.
        #[arg(long, default_value_t = DEFAULT_PROBABILITY_SIGMA)]
        sigma: f64,
        /// Output probability volume (f32).
        #[arg(long)]
        out_prob: PathBuf,
        /// Output gradient direction volume (vec3f32).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Synthesize a tracked frame bundle by sweeping a virtual probe over a
    /// phantom label volume.
    Simulate {
        /// TOML sweep specification.
        #[arg(long)]
        spec: PathBuf,
        /// Phantom label volume (nonzero = solid).
        #[arg(long)]
        phantom: PathBuf,
        /// Master random seed; every run with the same inputs and seed is
        /// byte-identical.
        #[arg(long)]
        seed: u64,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fuse a tracked frame bundle into a volume.
    Reconstruct {
        /// Input frame bundle directory.
        #[arg(long)]
        bundle: PathBuf,
        /// Surface probability volume; also defines the output grid.
        #[arg(long)]
        prob: PathBuf,
        /// Surface gradient direction volume (vec3f32).
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Aif)]
        method: MethodArg,
        /// Replace the angle weight by its reciprocal where it exceeds beta.
        #[arg(long)]
        compensate: bool,
        /// Enhancement gain.
        #[arg(long, default_value_t = ReconConfig::default().alpha)]
        alpha: f64,
        /// Angle-weight floor for compensation.
        #[arg(long, default_value_t = ReconConfig::default().beta)]
        beta: f64,
        /// Hole-filling search radius in voxels; 0 disables filling.
        #[arg(long, default_value_t = ReconConfig::default().hole_fill_radius)]
        hole_fill_radius: f64,
        /// Output reconstructed volume (f32).
        #[arg(long)]
        out: PathBuf,
        /// Optional visiting-score volume (f32).
        #[arg(long)]
        out_count: Option<PathBuf>,
        /// Optional visited-mask volume (u8, pre-hole-fill).
        #[arg(long)]
        out_visited: Option<PathBuf>,
    },
    /// Score reconstructed volumes against a ground-truth label volume.
    Metrics {
        /// Ground-truth label volume; the scored surface band is its
        /// dilated boundary.
        #[arg(long)]
        mask: PathBuf,
        /// Completeness threshold: a number in [0, 255], or "otsu" to
        /// derive it from the first listed volume.
        #[arg(long, default_value = "otsu")]
        threshold: String,
        /// Optional visited-mask volume restricting the contrast regions.
        #[arg(long)]
        visited: Option<PathBuf>,
        /// Volumes to score, as name=path.
        #[arg(value_name = "NAME=PATH", required = true)]
        volumes: Vec<String>,
    },
    /// Export one axis-aligned plane of a volume as a binary PGM image.
    ExportSlice {
        #[arg(long)]
        vol: PathBuf,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Plane index along the chosen axis.
        #[arg(long)]
        index: usize,
        /// Output PGM file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Baseline,
    Aif,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Baseline => Method::Baseline,
            MethodArg::Aif => Method::Aif,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

impl From<AxisArg> for SliceAxis {
    fn from(a: AxisArg) -> SliceAxis {
        match a {
            AxisArg::X => SliceAxis::X,
            AxisArg::Y => SliceAxis::Y,
            AxisArg::Z => SliceAxis::Z,
        }
    }
}

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code. Errors are printed to stderr; `--help`/`--version` go to
/// stdout and exit 0.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), AppError> {
    match command {
        Command::PrepMaps {
            label,
            sigma,
            out_prob,
            out_dir,
        } => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(AppError::invalid("--sigma must be positive and finite"));
            }
            let label = load_scalar(&label)?;
            let prob = mapprep::make_probability_map(&label, sigma)?;
            let dir = mapprep::make_gradient_map(&prob)?;
            save_volume(&out_prob, &VolumePayload::F32(prob))?;
            save_volume(&out_dir, &VolumePayload::Vec3F32(dir))?;
            Ok(())
        }
        Command::Simulate {
            spec,
            phantom,
            seed,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let label = load_scalar(&phantom)?;
            let set = simulate::make_sweep(&spec.sweep, &label, &spec.params, seed)?;
            save_bundle(&out, &set)?;
            Ok(())
        }
        Command::Reconstruct {
            bundle,
            prob,
            dir,
            method,
            compensate,
            alpha,
            beta,
            hole_fill_radius,
            out,
            out_count,
            out_visited,
        } => {
            let frames = load_bundle(&bundle)?;
            let prob = load_scalar(&prob)?;
            let dir = load_vector(&dir)?;
            let cfg = ReconConfig {
                method: method.into(),
                alpha,
                beta,
                compensate,
                hole_fill_radius,
            };
            cfg.validate()?;
            let meta = *prob.meta();
            if dir.meta() != &meta {
                return Err(AppError::invalid(
                    "--prob and --dir volumes must share dims, spacing, and origin",
                ));
            }
            let bmap = BeamDirectionMap::for_geometry(frames.geometry());
            let stage = match cfg.method {
                Method::Baseline => recon::distribute_baseline(&frames, &bmap, &meta)?,
                Method::Aif => {
                    recon::distribute_aif(&frames, &prob, &dir, &bmap, &meta, &cfg)?
                }
            };
            let filled = recon::fill_holes(&stage, cfg.hole_fill_radius);
            save_volume(&out, &VolumePayload::F32(filled))?;
            if let Some(path) = out_count {
                save_volume(&path, &VolumePayload::F32(stage.count))?;
            }
            if let Some(path) = out_visited {
                let visited = ScalarVolume::from_data(
                    meta,
                    stage.visited.iter().map(|&v| f64::from(u8::from(v))).collect(),
                )
                .expect("visited length matches the grid");
                save_volume(&path, &VolumePayload::U8(visited))?;
            }
            Ok(())
        }
        Command::Metrics {
            mask,
            threshold,
            visited,
            volumes,
        } => {
            let label = load_scalar(&mask)?;
            let mask = SurfaceMask::from_label(&label);
            let mut named: Vec<(String, ScalarVolume)> = Vec::with_capacity(volumes.len());
            for entry in &volumes {
                let (name, path) = entry.split_once('=').ok_or_else(|| {
                    AppError::invalid(format!(
                        "volume argument {entry:?} is not of the form name=path"
                    ))
                })?;
                if name.is_empty() {
                    return Err(AppError::invalid(format!(
                        "volume argument {entry:?} has an empty name"
                    )));
                }
                named.push((name.to_string(), load_scalar(path.as_ref())?));
            }
            let visited_mask = match &visited {
                Some(path) => Some(load_visited(path)?),
                None => None,
            };
            let threshold = resolve_threshold(&threshold, &named)?;
            let refs: Vec<(&str, &ScalarVolume)> =
                named.iter().map(|(n, v)| (n.as_str(), v)).collect();
            let reports =
                metrics::compare(&refs, &mask, threshold, visited_mask.as_deref())?;
            print_metrics_table(threshold, &reports);
            Ok(())
        }
        Command::ExportSlice {
            vol,
            axis,
            index,
            out,
        } => {
            let payload = load_volume(&vol)?;
            let image = extract_slice(&payload, axis.into(), index)?;
            write_pgm(&out, &image)?;
            Ok(())
        }
    }
}

/// Loads a u8 0/1 volume as a boolean mask.
fn load_visited(path: &std::path::Path) -> Result<Vec<bool>, AppError> {
    let vol = load_scalar(path)?;
    Ok(vol.data().iter().map(|&v| v >= 0.5).collect())
}

fn resolve_threshold(
    raw: &str,
    named: &[(String, ScalarVolume)],
) -> Result<f64, AppError> {
    if raw == "otsu" {
        let (_, first) = named.first().expect("clap enforces at least one volume");
        return Ok(metrics::otsu_threshold(first));
    }
    let value: f64 = raw.parse().map_err(|_| {
        AppError::invalid(format!(
            "--threshold must be \"otsu\" or a number, found {raw:?}"
        ))
    })?;
    if !(0.0..=255.0).contains(&value) {
        return Err(AppError::invalid("--threshold must lie in [0, 255]"));
    }
    Ok(value)
}

fn print_metrics_table(threshold: f64, reports: &[(String, metrics::MetricsReport)]) {
    let name_width = reports
        .iter()
        .map(|(n, _)| n.len())
        .chain(std::iter::once("volume".len()))
        .max()
        .unwrap_or(6);
    println!("threshold {threshold:.6}");
    println!(
        "{:<name_width$}  {:>12}  {:>12}  {:>12}  {:>12}  {:>12}",
        "volume", "surf_mean", "bg_mean", "contrast", "cnr", "completeness"
    );
    for (name, r) in reports {
        println!(
            "{name:<name_width$}  {:>12.6}  {:>12.6}  {:>12.6}  {:>12.6}  {:>12.6}",
            r.surface_mean, r.background_mean, r.contrast_ratio, r.cnr, r.completeness
        );
    }
}
