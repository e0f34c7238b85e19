//! Declarative TOML configuration for the simulator.
//!
//! A spec file names the frame geometry, the sweep trajectory (a parametric
//! arc or an explicit pose list — exactly one), optional pose jitter, and
//! optional reflection-parameter overrides:
//!
//! ```toml
//! [geometry]
//! width = 64
//! height = 64
//! pixel_spacing = [0.5, 0.5]
//! probe = "linear"            # or "phased" (+ apex_offset)
//!
//! [sweep.arc]
//! center = [16.0, 16.0, 16.0]
//! axis = [0.0, 0.0, 1.0]
//! radius = 40.0
//! start_angle_deg = -45.0
//! end_angle_deg = 45.0
//! frames = 60
//!
//! [reflection]                # optional; omitted fields keep defaults
//! noise_sigma = 0.0
//! ```
//!
//! Angles are written in degrees and converted to radians on load.

use std::path::Path;

use serde::Deserialize;
use usrecon_core::simulate::{ReflectionParams, SweepSpec};
use usrecon_core::{FrameGeometry, ProbeKind, RigidPose};

use crate::error::{AppError, FormatError};
use crate::fs_util::read_file;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    geometry: GeometryTable,
    sweep: SweepTable,
    reflection: Option<ReflectionTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryTable {
    width: usize,
    height: usize,
    pixel_spacing: [f64; 2],
    probe: String,
    #[serde(default)]
    apex_offset: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepTable {
    arc: Option<ArcTable>,
    #[serde(default, rename = "pose")]
    poses: Vec<PoseTable>,
    #[serde(default)]
    jitter_sigma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcTable {
    center: [f64; 3],
    axis: [f64; 3],
    radius: f64,
    start_angle_deg: f64,
    end_angle_deg: f64,
    frames: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseTable {
    /// Full 4×4 matrix, row-major, 16 numbers.
    matrix: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReflectionTable {
    z1: Option<f64>,
    z2: Option<f64>,
    base_intensity: Option<f64>,
    noise_sigma: Option<f64>,
    shadow_attenuation: Option<f64>,
    surface_smear: Option<f64>,
}

/// Everything a `simulate` run needs besides the phantom and the seed.
#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub sweep: SweepSpec,
    pub params: ReflectionParams,
}

/// Reads and validates a simulator spec file.
pub fn load_spec(path: &Path) -> Result<SimulationSpec, AppError> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| FormatError::parse(path, 1, "spec is not valid UTF-8"))?;
    let file: SpecFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start].lines().count());
        FormatError::parse(path, line, e.message().to_string())
    })?;

    let g = &file.geometry;
    let probe_kind = match g.probe.as_str() {
        "linear" => ProbeKind::Linear,
        "phased" => ProbeKind::Phased,
        other => {
            return Err(AppError::invalid(format!(
                "unknown probe kind {other:?} (expected \"linear\" or \"phased\")"
            )))
        }
    };
    let geometry = FrameGeometry::new(
        g.width,
        g.height,
        g.pixel_spacing,
        probe_kind,
        g.apex_offset,
    )?;

    let sweep = match (&file.sweep.arc, file.sweep.poses.as_slice()) {
        (Some(arc), []) => SweepSpec::arc(
            geometry,
            arc.center,
            arc.axis,
            arc.radius,
            arc.start_angle_deg.to_radians(),
            arc.end_angle_deg.to_radians(),
            arc.frames,
        )?,
        (None, poses) if !poses.is_empty() => {
            let mut parsed = Vec::with_capacity(poses.len());
            for (i, p) in poses.iter().enumerate() {
                if p.matrix.len() != 16 {
                    return Err(AppError::invalid(format!(
                        "[[sweep.pose]] {i}: matrix must have 16 numbers, found {}",
                        p.matrix.len()
                    )));
                }
                let mut m = [[0.0; 4]; 4];
                for r in 0..4 {
                    m[r].copy_from_slice(&p.matrix[4 * r..4 * r + 4]);
                }
                parsed.push(RigidPose::new(m).map_err(|e| {
                    AppError::invalid(format!("[[sweep.pose]] {i}: {e}"))
                })?);
            }
            SweepSpec::new(geometry, parsed)?
        }
        (Some(_), _) => {
            return Err(AppError::invalid(
                "spec gives both [sweep.arc] and [[sweep.pose]]; choose one",
            ))
        }
        (None, _) => {
            return Err(AppError::invalid(
                "spec needs either [sweep.arc] or at least one [[sweep.pose]]",
            ))
        }
    };
    let sweep = sweep.with_jitter(file.sweep.jitter_sigma)?;

    let mut params = ReflectionParams::default();
    if let Some(r) = &file.reflection {
        if let Some(v) = r.z1 {
            params.z1 = v;
        }
        if let Some(v) = r.z2 {
            params.z2 = v;
        }
        if let Some(v) = r.base_intensity {
            params.base_intensity = v;
        }
        if let Some(v) = r.noise_sigma {
            params.noise_sigma = v;
        }
        if let Some(v) = r.shadow_attenuation {
            params.shadow_attenuation = v;
        }
        if let Some(v) = r.surface_smear {
            params.surface_smear = v;
        }
    }
    params.validate()?;

    Ok(SimulationSpec { sweep, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_spec(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.toml");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        (dir, path)
    }

    const ARC_SPEC: &str = r#"
[geometry]
width = 8
height = 6
pixel_spacing = [0.5, 0.5]
probe = "linear"

[sweep]
jitter_sigma = 0.25

[sweep.arc]
center = [4.0, 4.0, 4.0]
axis = [0.0, 0.0, 1.0]
radius = 10.0
start_angle_deg = -45.0
end_angle_deg = 45.0
frames = 5

[reflection]
noise_sigma = 0.0
base_intensity = 500.0
"#;

    #[test]
    fn arc_spec_parses_and_lowers() {
        let (_dir, path) = write_spec(ARC_SPEC);
        let spec = load_spec(&path).unwrap();
        assert_eq!(spec.sweep.poses().len(), 5);
        assert_eq!(spec.sweep.geometry().width(), 8);
        assert_eq!(spec.sweep.jitter_sigma(), 0.25);
        assert_eq!(spec.params.noise_sigma, 0.0);
        assert_eq!(spec.params.base_intensity, 500.0);
        // Unspecified reflection fields keep their defaults.
        assert_eq!(spec.params.z1, ReflectionParams::default().z1);
        // Angles arrive in radians: the middle pose's beam is +Y.
        let mid = &spec.sweep.poses()[2];
        let beam = mid.rotate_vector([0.0, 1.0, 0.0]);
        assert!((beam[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_pose_list_parses() {
        let (_dir, path) = write_spec(
            r#"
[geometry]
width = 4
height = 4
pixel_spacing = [1.0, 1.0]
probe = "phased"
apex_offset = 2.0

[[sweep.pose]]
matrix = [1.0, 0.0, 0.0, 5.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -2.0, 0.0, 0.0, 0.0, 1.0]
"#,
        );
        let spec = load_spec(&path).unwrap();
        assert_eq!(spec.sweep.poses().len(), 1);
        assert_eq!(spec.sweep.poses()[0].translation(), [5.0, 0.0, -2.0]);
        assert_eq!(spec.sweep.geometry().apex_offset(), 2.0);
    }

    #[test]
    fn arc_and_poses_together_is_rejected() {
        let (_dir, path) = write_spec(
            r#"
[geometry]
width = 4
height = 4
pixel_spacing = [1.0, 1.0]
probe = "linear"

[sweep.arc]
center = [0.0, 0.0, 0.0]
axis = [0.0, 0.0, 1.0]
radius = 5.0
start_angle_deg = 0.0
end_angle_deg = 10.0
frames = 2

[[sweep.pose]]
matrix = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]
"#,
        );
        let err = load_spec(&path).unwrap_err();
        assert!(err.to_string().contains("choose one"));
    }

    #[test]
    fn missing_trajectory_is_rejected() {
        let (_dir, path) = write_spec(
            r#"
[geometry]
width = 4
height = 4
pixel_spacing = [1.0, 1.0]
probe = "linear"

[sweep]
jitter_sigma = 0.0
"#,
        );
        assert!(load_spec(&path).is_err());
    }

    #[test]
    fn unknown_keys_are_parse_errors_with_line() {
        let (_dir, path) = write_spec(
            r#"
[geometry]
width = 4
height = 4
pixel_spacing = [1.0, 1.0]
probe = "linear"
frequency_mhz = 5.0

[sweep.arc]
center = [0.0, 0.0, 0.0]
axis = [0.0, 0.0, 1.0]
radius = 5.0
start_angle_deg = 0.0
end_angle_deg = 10.0
frames = 2
"#,
        );
        match load_spec(&path).unwrap_err() {
            AppError::Format(FormatError::Parse { line, .. }) => assert!(line > 0),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn short_pose_matrix_is_rejected() {
        let (_dir, path) = write_spec(
            r#"
[geometry]
width = 4
height = 4
pixel_spacing = [1.0, 1.0]
probe = "linear"

[[sweep.pose]]
matrix = [1.0, 0.0, 0.0]
"#,
        );
        let err = load_spec(&path).unwrap_err();
        assert!(err.to_string().contains("16 numbers"));
    }

    #[test]
    fn bad_probe_kind_is_rejected() {
        let (_dir, path) = write_spec(
            r#"
[geometry]
width = 4
height = 4
pixel_spacing = [1.0, 1.0]
probe = "curvilinear"

[[sweep.pose]]
matrix = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]
"#,
        );
        let err = load_spec(&path).unwrap_err();
        assert!(err.to_string().contains("probe kind"));
    }
}
