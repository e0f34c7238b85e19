//! Frame bundle format: a directory holding tracked 2D frames.
//!
//! `<bundle>/manifest.txt` is line-oriented ASCII:
//!
//! ```text
//! USBUNDLE 1
//! width <W>
//! height <H>
//! frames <N>
//! pixel_spacing <sx> <sy>
//! probe <linear|phased>
//! apex_offset <mm>
//! pose 0 <m00> <m01> ... <m33>
//! pose 1 ...
//! ```
//!
//! Pose lines carry the full 4×4 matrix, row-major, floats in shortest
//! round-trip notation. Pixel data lives beside the manifest as
//! `frame_0000.raw`, `frame_0001.raw`, … — raw `W·H` bytes, row-major.
//!
//! On load, every pose's rotation block must be orthonormal to 1e-4 (looser
//! than the in-memory 1e-6 bound, to absorb text round-trip error) and every
//! frame file must exist with exactly `W·H` bytes.

use std::path::{Path, PathBuf};

use usrecon_core::recon::Frame;
use usrecon_core::{FrameGeometry, ProbeKind, RigidPose, TrackedFrameSet};

use crate::error::FormatError;
use crate::fs_util::{ensure_dir, read_file, write_atomic};

pub const BUNDLE_MAGIC: &str = "USBUNDLE 1";
pub const MANIFEST_NAME: &str = "manifest.txt";

/// Orthonormality tolerance applied to poses read from disk.
pub const LOAD_POSE_TOL: f64 = 1e-4;

fn frame_file_name(index: usize) -> String {
    format!("frame_{index:04}.raw")
}

/// Writes a frame set as a bundle directory. Frame files are written before
/// the manifest so a complete manifest implies complete frames; every file
/// is written atomically.
pub fn save_bundle(dir: &Path, set: &TrackedFrameSet) -> Result<(), FormatError> {
    ensure_dir(dir)?;
    let geom = set.geometry();
    for (i, frame) in set.frames().iter().enumerate() {
        write_atomic(&dir.join(frame_file_name(i)), &frame.data)?;
    }
    let mut manifest = String::new();
    manifest.push_str(BUNDLE_MAGIC);
    manifest.push('\n');
    manifest.push_str(&format!("width {}\n", geom.width()));
    manifest.push_str(&format!("height {}\n", geom.height()));
    manifest.push_str(&format!("frames {}\n", set.frames().len()));
    let [sx, sy] = geom.pixel_spacing();
    manifest.push_str(&format!("pixel_spacing {sx} {sy}\n"));
    let probe = match geom.probe_kind() {
        ProbeKind::Linear => "linear",
        ProbeKind::Phased => "phased",
    };
    manifest.push_str(&format!("probe {probe}\n"));
    manifest.push_str(&format!("apex_offset {}\n", geom.apex_offset()));
    for (i, frame) in set.frames().iter().enumerate() {
        manifest.push_str(&format!("pose {i}"));
        for row in frame.pose.matrix() {
            for v in row {
                manifest.push_str(&format!(" {v}"));
            }
        }
        manifest.push('\n');
    }
    write_atomic(&dir.join(MANIFEST_NAME), manifest.as_bytes())
}

/// Reads a bundle directory back into a validated frame set.
pub fn load_bundle(dir: &Path) -> Result<TrackedFrameSet, FormatError> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let bytes = read_file(&manifest_path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| FormatError::parse(&manifest_path, 1, "manifest is not valid UTF-8"))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, magic) = lines
        .next()
        .ok_or_else(|| FormatError::parse(&manifest_path, 1, "empty manifest"))?;
    if magic != BUNDLE_MAGIC {
        return Err(FormatError::parse(
            &manifest_path,
            1,
            format!("bad magic {magic:?}, expected {BUNDLE_MAGIC:?}"),
        ));
    }

    let width: usize = parse_keyed(&manifest_path, lines.next(), "width")?;
    let height: usize = parse_keyed(&manifest_path, lines.next(), "height")?;
    let frame_count: usize = parse_keyed(&manifest_path, lines.next(), "frames")?;
    let (sx, sy) = {
        let (line_no, body) = keyed_body(&manifest_path, lines.next(), "pixel_spacing")?;
        let mut it = body.split(' ');
        let sx = parse_token(&manifest_path, line_no, it.next(), "pixel_spacing")?;
        let sy = parse_token(&manifest_path, line_no, it.next(), "pixel_spacing")?;
        if it.next().is_some() {
            return Err(FormatError::parse(
                &manifest_path,
                line_no,
                "pixel_spacing: trailing tokens",
            ));
        }
        (sx, sy)
    };
    let probe_kind = {
        let (line_no, body) = keyed_body(&manifest_path, lines.next(), "probe")?;
        match body {
            "linear" => ProbeKind::Linear,
            "phased" => ProbeKind::Phased,
            other => {
                return Err(FormatError::parse(
                    &manifest_path,
                    line_no,
                    format!("unknown probe kind {other:?}"),
                ))
            }
        }
    };
    let apex_offset: f64 = parse_keyed(&manifest_path, lines.next(), "apex_offset")?;

    let geometry = FrameGeometry::new(width, height, [sx, sy], probe_kind, apex_offset)
        .map_err(|e| FormatError::parse(&manifest_path, 2, e.to_string()))?;

    let mut frames = Vec::with_capacity(frame_count);
    for i in 0..frame_count {
        let (line_no, line) = lines.next().ok_or_else(|| {
            FormatError::parse(
                &manifest_path,
                8 + i,
                format!("expected 'pose {i}', found end of manifest"),
            )
        })?;
        let pose = parse_pose_line(&manifest_path, line_no, line, i)?;
        let data = load_frame_data(dir, i, geometry.pixel_count())?;
        frames.push(Frame { pose, data });
    }
    if let Some((line_no, line)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(FormatError::parse(
            &manifest_path,
            line_no,
            format!("unexpected trailing line {line:?}"),
        ));
    }

    TrackedFrameSet::new(geometry, frames)
        .map_err(|e| FormatError::parse(&manifest_path, 4, e.to_string()))
}

fn load_frame_data(dir: &Path, index: usize, expected: usize) -> Result<Vec<u8>, FormatError> {
    let path: PathBuf = dir.join(frame_file_name(index));
    if !path.exists() {
        return Err(FormatError::MissingFrame { path });
    }
    let data = read_file(&path)?;
    if data.len() != expected {
        return Err(FormatError::FrameSize {
            path,
            index,
            expected,
            found: data.len(),
        });
    }
    Ok(data)
}

fn parse_pose_line(
    path: &Path,
    line_no: usize,
    line: &str,
    index: usize,
) -> Result<RigidPose, FormatError> {
    let prefix = format!("pose {index} ");
    let body = line.strip_prefix(&prefix).ok_or_else(|| {
        FormatError::parse(
            path,
            line_no,
            format!("expected 'pose {index} <16 numbers>', found {line:?}"),
        )
    })?;
    let mut values = [0.0f64; 16];
    let mut it = body.split(' ');
    for v in &mut values {
        *v = parse_token(path, line_no, it.next(), "pose")?;
    }
    if it.next().is_some() {
        return Err(FormatError::parse(path, line_no, "pose: trailing tokens"));
    }
    let mut matrix = [[0.0; 4]; 4];
    for r in 0..4 {
        matrix[r].copy_from_slice(&values[4 * r..4 * r + 4]);
    }
    RigidPose::with_tolerance(matrix, LOAD_POSE_TOL)
        .map_err(|source| FormatError::BadPose { index, source })
}

fn keyed_body<'a>(
    path: &Path,
    line: Option<(usize, &'a str)>,
    key: &str,
) -> Result<(usize, &'a str), FormatError> {
    let (line_no, line) = line
        .ok_or_else(|| FormatError::parse(path, 0, format!("missing '{key}' line")))?;
    let body = line
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix(' '))
        .ok_or_else(|| {
            FormatError::parse(path, line_no, format!("expected '{key} ...', found {line:?}"))
        })?;
    Ok((line_no, body))
}

fn parse_keyed<T: std::str::FromStr>(
    path: &Path,
    line: Option<(usize, &str)>,
    key: &str,
) -> Result<T, FormatError> {
    let (line_no, body) = keyed_body(path, line, key)?;
    body.parse().map_err(|_| {
        FormatError::parse(path, line_no, format!("{key}: cannot parse {body:?}"))
    })
}

fn parse_token<T: std::str::FromStr>(
    path: &Path,
    line_no: usize,
    token: Option<&str>,
    key: &str,
) -> Result<T, FormatError> {
    let token = token.ok_or_else(|| {
        FormatError::parse(path, line_no, format!("{key}: too few values"))
    })?;
    token.parse().map_err(|_| {
        FormatError::parse(path, line_no, format!("{key}: cannot parse {token:?}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn sample_set() -> TrackedFrameSet {
        let geometry =
            FrameGeometry::new(3, 2, [0.4, 0.3], ProbeKind::Phased, 1.25).unwrap();
        let pose_a = RigidPose::identity();
        let pose_b = RigidPose::from_axis_angle(
            [0.3, -1.0, 0.2],
            0.7,
            [4.25, -1.5, 0.0625],
        )
        .unwrap();
        TrackedFrameSet::new(
            geometry,
            vec![
                Frame {
                    pose: pose_a,
                    data: vec![0, 10, 20, 30, 40, 250],
                },
                Frame {
                    pose: pose_b,
                    data: vec![255, 254, 3, 2, 1, 0],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample_set();
        save_bundle(dir.path(), &set).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        assert_eq!(loaded.geometry(), set.geometry());
        assert_eq!(loaded.frames().len(), set.frames().len());
        for (a, b) in loaded.frames().iter().zip(set.frames()) {
            assert_eq!(a.data, b.data);
            // Shortest round-trip float printing makes poses exactly equal,
            // comfortably inside the 1e-12 contract.
            for r in 0..4 {
                for c in 0..4 {
                    assert_eq!(
                        a.pose.matrix()[r][c].to_bits(),
                        b.pose.matrix()[r][c].to_bits()
                    );
                }
            }
        }
    }

    #[test]
    fn missing_frame_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &sample_set()).unwrap();
        fs::remove_file(dir.path().join("frame_0001.raw")).unwrap();
        match load_bundle(dir.path()) {
            Err(FormatError::MissingFrame { path }) => {
                assert!(path.to_string_lossy().ends_with("frame_0001.raw"));
            }
            other => panic!("expected MissingFrame, got {other:?}"),
        }
    }

    #[test]
    fn wrong_frame_size_reports_expected_and_found() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &sample_set()).unwrap();
        fs::write(dir.path().join("frame_0000.raw"), [1, 2, 3]).unwrap();
        match load_bundle(dir.path()) {
            Err(FormatError::FrameSize {
                index,
                expected,
                found,
                ..
            }) => {
                assert_eq!((index, expected, found), (0, 6, 3));
            }
            other => panic!("expected FrameSize, got {other:?}"),
        }
    }

    #[test]
    fn non_orthonormal_pose_cites_frame_index() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &sample_set()).unwrap();
        let manifest_path = dir.path().join(MANIFEST_NAME);
        let text = fs::read_to_string(&manifest_path).unwrap();
        // Scale frame 1's rotation so ||R^T R - I|| is about 0.1.
        let mangled: String = text
            .lines()
            .map(|l| {
                if l.starts_with("pose 1 ") {
                    let nums: Vec<f64> = l["pose 1 ".len()..]
                        .split(' ')
                        .map(|t| t.parse().unwrap())
                        .collect();
                    let mut out = String::from("pose 1");
                    for (i, v) in nums.iter().enumerate() {
                        let scaled = if i % 4 != 3 && i < 12 { v * 1.05 } else { *v };
                        out.push_str(&format!(" {scaled}"));
                    }
                    out
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n";
        fs::write(&manifest_path, mangled).unwrap();
        match load_bundle(dir.path()) {
            Err(FormatError::BadPose { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected BadPose, got {other:?}"),
        }
    }

    #[test]
    fn pose_loads_tolerate_text_rounding_within_1e4() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &sample_set()).unwrap();
        let manifest_path = dir.path().join(MANIFEST_NAME);
        let text = fs::read_to_string(&manifest_path).unwrap();
        // Truncate every pose number to 6 significant digits; the rotation
        // deviation this introduces (~1e-6) must still load.
        let mangled: String = text
            .lines()
            .map(|l| {
                if let Some(rest) = l.strip_prefix("pose ") {
                    let mut it = rest.splitn(2, ' ');
                    let idx = it.next().unwrap();
                    let nums = it.next().unwrap();
                    let rounded: Vec<String> = nums
                        .split(' ')
                        .map(|t| format!("{:.6}", t.parse::<f64>().unwrap()))
                        .collect();
                    format!("pose {idx} {}", rounded.join(" "))
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n";
        fs::write(&manifest_path, mangled).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        for (a, b) in loaded.frames().iter().zip(sample_set().frames()) {
            for r in 0..3 {
                assert!((a.pose.matrix()[r][3] - b.pose.matrix()[r][3]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn manifest_frame_count_must_match_pose_lines() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &sample_set()).unwrap();
        let manifest_path = dir.path().join(MANIFEST_NAME);
        let text = fs::read_to_string(&manifest_path).unwrap();
        let truncated: String = text
            .lines()
            .filter(|l| !l.starts_with("pose 1"))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n";
        fs::write(&manifest_path, truncated).unwrap();
        assert!(matches!(
            load_bundle(dir.path()),
            Err(FormatError::Parse { .. })
        ));
    }

    #[test]
    fn missing_manifest_is_io() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_bundle(dir.path()),
            Err(FormatError::Io { .. })
        ));
    }
}
