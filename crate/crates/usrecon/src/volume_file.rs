//! Single-file volume format: a five-line ASCII header followed by a raw
//! little-endian payload in x-fastest order.
//!
//! ```text
//! USVOL 1
//! dims <dx> <dy> <dz>
//! spacing <sx> <sy> <sz>
//! origin <ox> <oy> <oz>
//! elem <u8|f32|vec3f32>
//! <payload bytes>
//! ```
//!
//! Header floats are printed in Rust's shortest round-trip notation, so a
//! save/load cycle reproduces them bit-exactly. Payloads are `u8` (one
//! byte per voxel), `f32` (4 bytes), or `vec3f32` (12 bytes, x/y/z
//! interleaved per voxel).

use std::path::Path;

use usrecon_core::{ScalarVolume, VectorVolume, VolumeMeta};

use crate::error::FormatError;
use crate::fs_util::{read_file, write_atomic};

pub const VOLUME_MAGIC: &str = "USVOL 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    U8,
    F32,
    Vec3F32,
}

impl ElementType {
    pub fn name(self) -> &'static str {
        match self {
            ElementType::U8 => "u8",
            ElementType::F32 => "f32",
            ElementType::Vec3F32 => "vec3f32",
        }
    }

    pub fn byte_size(self) -> usize {
        match self {
            ElementType::U8 => 1,
            ElementType::F32 => 4,
            ElementType::Vec3F32 => 12,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "u8" => Some(ElementType::U8),
            "f32" => Some(ElementType::F32),
            "vec3f32" => Some(ElementType::Vec3F32),
            _ => None,
        }
    }
}

/// A loaded volume, tagged with its on-disk element type.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumePayload {
    /// Integer intensities; values are whole numbers in [0, 255].
    U8(ScalarVolume),
    F32(ScalarVolume),
    Vec3F32(VectorVolume),
}

impl VolumePayload {
    pub fn element_type(&self) -> ElementType {
        match self {
            VolumePayload::U8(_) => ElementType::U8,
            VolumePayload::F32(_) => ElementType::F32,
            VolumePayload::Vec3F32(_) => ElementType::Vec3F32,
        }
    }

    pub fn meta(&self) -> &VolumeMeta {
        match self {
            VolumePayload::U8(v) | VolumePayload::F32(v) => v.meta(),
            VolumePayload::Vec3F32(v) => v.meta(),
        }
    }
}

fn header(meta: &VolumeMeta, elem: ElementType) -> String {
    format!(
        "{VOLUME_MAGIC}\ndims {} {} {}\nspacing {} {} {}\norigin {} {} {}\nelem {}\n",
        meta.dims[0],
        meta.dims[1],
        meta.dims[2],
        meta.spacing[0],
        meta.spacing[1],
        meta.spacing[2],
        meta.origin[0],
        meta.origin[1],
        meta.origin[2],
        elem.name()
    )
}

/// Serializes and writes a volume atomically (temp file + rename).
pub fn save_volume(path: &Path, payload: &VolumePayload) -> Result<(), FormatError> {
    let meta = payload.meta();
    let elem = payload.element_type();
    let mut bytes = header(meta, elem).into_bytes();
    bytes.reserve(meta.voxel_count() * elem.byte_size());
    match payload {
        VolumePayload::U8(vol) => {
            for &v in vol.data() {
                bytes.push(quantize_u8(v));
            }
        }
        VolumePayload::F32(vol) => {
            for &v in vol.data() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        VolumePayload::Vec3F32(vol) => {
            for v in vol.data() {
                for c in v {
                    bytes.extend_from_slice(&(*c as f32).to_le_bytes());
                }
            }
        }
    }
    write_atomic(path, &bytes)
}

/// Clamp to [0, 255] and round half away from zero.
pub fn quantize_u8(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Reads and parses any volume file.
pub fn load_volume(path: &Path) -> Result<VolumePayload, FormatError> {
    let bytes = read_file(path)?;
    let (meta, elem, payload) = parse_header(path, &bytes)?;
    let expected = meta.voxel_count() * elem.byte_size();
    if payload.len() != expected {
        return Err(FormatError::PayloadSize {
            path: path.into(),
            expected,
            found: payload.len(),
        });
    }
    Ok(match elem {
        ElementType::U8 => {
            let data = payload.iter().map(|&b| b as f64).collect();
            VolumePayload::U8(
                ScalarVolume::from_data(meta, data).expect("length checked above"),
            )
        }
        ElementType::F32 => {
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            VolumePayload::F32(
                ScalarVolume::from_data(meta, data).expect("length checked above"),
            )
        }
        ElementType::Vec3F32 => {
            let data = payload
                .chunks_exact(12)
                .map(|c| {
                    [
                        f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64,
                        f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64,
                        f32::from_le_bytes([c[8], c[9], c[10], c[11]]) as f64,
                    ]
                })
                .collect();
            VolumePayload::Vec3F32(
                VectorVolume::from_data(meta, data).expect("length checked above"),
            )
        }
    })
}

/// Loads a file that must contain scalar data (u8 or f32).
pub fn load_scalar(path: &Path) -> Result<ScalarVolume, FormatError> {
    match load_volume(path)? {
        VolumePayload::U8(v) | VolumePayload::F32(v) => Ok(v),
        VolumePayload::Vec3F32(_) => Err(FormatError::parse(
            path,
            5,
            "expected a scalar volume (u8 or f32), found vec3f32",
        )),
    }
}

/// Loads a file that must contain vector data.
pub fn load_vector(path: &Path) -> Result<VectorVolume, FormatError> {
    match load_volume(path)? {
        VolumePayload::Vec3F32(v) => Ok(v),
        other => Err(FormatError::parse(
            path,
            5,
            format!(
                "expected a vec3f32 volume, found {}",
                other.element_type().name()
            ),
        )),
    }
}

/// Splits the five header lines off the byte stream and parses them.
fn parse_header<'a>(
    path: &Path,
    bytes: &'a [u8],
) -> Result<(VolumeMeta, ElementType, &'a [u8]), FormatError> {
    let mut rest = bytes;
    let mut lines = Vec::with_capacity(5);
    for line_no in 1..=5usize {
        let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| {
            FormatError::parse(path, line_no, "unexpected end of header")
        })?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| FormatError::parse(path, line_no, "header is not valid UTF-8"))?;
        lines.push(line);
        rest = &rest[nl + 1..];
    }
    if lines[0] != VOLUME_MAGIC {
        return Err(FormatError::parse(
            path,
            1,
            format!("bad magic {:?}, expected {VOLUME_MAGIC:?}", lines[0]),
        ));
    }
    let dims = parse_triplet::<usize>(path, 2, lines[1], "dims")?;
    let spacing = parse_triplet::<f64>(path, 3, lines[2], "spacing")?;
    let origin = parse_triplet::<f64>(path, 4, lines[3], "origin")?;
    let meta = VolumeMeta::new(dims, spacing, origin)
        .map_err(|e| FormatError::parse(path, 2, e.to_string()))?;
    let elem_str = lines[4]
        .strip_prefix("elem ")
        .ok_or_else(|| FormatError::parse(path, 5, "expected 'elem <type>'"))?;
    let elem = ElementType::parse(elem_str).ok_or_else(|| {
        FormatError::parse(path, 5, format!("unknown element type {elem_str:?}"))
    })?;
    Ok((meta, elem, rest))
}

fn parse_triplet<T: std::str::FromStr>(
    path: &Path,
    line_no: usize,
    line: &str,
    key: &str,
) -> Result<[T; 3], FormatError> {
    let body = line.strip_prefix(key).and_then(|s| s.strip_prefix(' '));
    let Some(body) = body else {
        return Err(FormatError::parse(
            path,
            line_no,
            format!("expected '{key} <a> <b> <c>'"),
        ));
    };
    let mut parts = body.split(' ');
    let mut out: Vec<T> = Vec::with_capacity(3);
    for _ in 0..3 {
        let token = parts.next().ok_or_else(|| {
            FormatError::parse(path, line_no, format!("{key}: expected three values"))
        })?;
        out.push(token.parse().map_err(|_| {
            FormatError::parse(path, line_no, format!("{key}: cannot parse {token:?}"))
        })?);
    }
    if parts.next().is_some() {
        return Err(FormatError::parse(
            path,
            line_no,
            format!("{key}: trailing tokens"),
        ));
    }
    out.try_into()
        .map_err(|_| FormatError::parse(path, line_no, "internal triplet error"))
}
