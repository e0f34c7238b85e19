//! Orthogonal slice extraction and binary PGM (P5) export.
//!
//! Slices are taken perpendicular to one grid axis: Z slices are (x, y)
//! images with y as rows, Y slices are (x, z) images with z as rows, and
//! X slices are (y, z) images with z as rows. `u8` volumes are copied
//! verbatim; `f32` volumes are linearly mapped so the volume-wide minimum
//! and maximum land on 0 and 255 (a constant volume maps to all zeros).

use std::path::Path;

use crate::error::{AppError, FormatError};
use crate::fs_util::write_atomic;
use crate::volume_file::{quantize_u8, VolumePayload};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    X,
    Y,
    Z,
}

/// An 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Pulls one plane out of a volume as an 8-bit image.
pub fn extract_slice(
    payload: &VolumePayload,
    axis: SliceAxis,
    index: usize,
) -> Result<SliceImage, AppError> {
    let vol = match payload {
        VolumePayload::U8(v) | VolumePayload::F32(v) => v,
        VolumePayload::Vec3F32(_) => {
            return Err(AppError::invalid(
                "cannot export a slice of a vec3f32 volume",
            ))
        }
    };
    let dims = vol.meta().dims;
    let axis_len = match axis {
        SliceAxis::X => dims[0],
        SliceAxis::Y => dims[1],
        SliceAxis::Z => dims[2],
    };
    if index >= axis_len {
        return Err(AppError::invalid(format!(
            "slice index {index} out of range (axis has {axis_len} planes)"
        )));
    }
    let to_u8: Box<dyn Fn(f64) -> u8> = match payload {
        VolumePayload::U8(_) => Box::new(|v| v as u8),
        _ => {
            let min = vol.data().iter().fold(f64::INFINITY, |m, &v| m.min(v));
            let max = vol.max_value();
            let scale = if max > min { 255.0 / (max - min) } else { 0.0 };
            Box::new(move |v| quantize_u8((v - min) * scale))
        }
    };
    let (width, height) = match axis {
        SliceAxis::X => (dims[1], dims[2]),
        SliceAxis::Y => (dims[0], dims[2]),
        SliceAxis::Z => (dims[0], dims[1]),
    };
    let mut pixels = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let value = match axis {
                SliceAxis::X => vol.get(index, col, row),
                SliceAxis::Y => vol.get(col, index, row),
                SliceAxis::Z => vol.get(col, row, index),
            };
            pixels.push(to_u8(value));
        }
    }
    Ok(SliceImage {
        width,
        height,
        pixels,
    })
}

/// Writes the image as a binary PGM (magic `P5`, maxval 255).
pub fn write_pgm(path: &Path, image: &SliceImage) -> Result<(), FormatError> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    bytes.extend_from_slice(&image.pixels);
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use usrecon_core::{ScalarVolume, VectorVolume, VolumeMeta};

    fn ramp_meta() -> VolumeMeta {
        VolumeMeta::new([4, 3, 2], [1.0; 3], [0.0; 3]).unwrap()
    }

    /// voxel (x, y, z) = x + 10y + 100z, values stay in u8 range.
    fn ramp() -> ScalarVolume {
        let meta = ramp_meta();
        let mut vol = ScalarVolume::zeros(meta);
        for z in 0..2 {
            for y in 0..3 {
                for x in 0..4 {
                    vol.set(x, y, z, (x + 10 * y + 100 * z) as f64);
                }
            }
        }
        vol
    }

    #[test]
    fn u8_z_slice_copies_the_plane_verbatim() {
        let image = extract_slice(&VolumePayload::U8(ramp()), SliceAxis::Z, 1).unwrap();
        assert_eq!((image.width, image.height), (4, 3));
        let expected: Vec<u8> = (0..3)
            .flat_map(|y| (0..4).map(move |x| (x + 10 * y + 100) as u8))
            .collect();
        assert_eq!(image.pixels, expected);
    }

    #[test]
    fn x_and_y_slices_use_z_as_rows() {
        let vol = VolumePayload::U8(ramp());
        let x_img = extract_slice(&vol, SliceAxis::X, 2).unwrap();
        assert_eq!((x_img.width, x_img.height), (3, 2));
        assert_eq!(x_img.pixels[0], 2); // (y=0, z=0)
        assert_eq!(x_img.pixels[3], 102); // (y=0, z=1)
        let y_img = extract_slice(&vol, SliceAxis::Y, 1).unwrap();
        assert_eq!((y_img.width, y_img.height), (4, 2));
        assert_eq!(y_img.pixels[1], 11); // (x=1, z=0)
        assert_eq!(y_img.pixels[4], 110); // (x=0, z=1)
    }

    #[test]
    fn f32_maps_volume_min_max_to_full_range() {
        let meta = VolumeMeta::new([2, 1, 2], [1.0; 3], [0.0; 3]).unwrap();
        let vol =
            ScalarVolume::from_data(meta, vec![-5.0, 0.0, 5.0, 15.0]).unwrap();
        // Read the z=0 plane; the scale still comes from the whole volume.
        let image =
            extract_slice(&VolumePayload::F32(vol), SliceAxis::Z, 0).unwrap();
        assert_eq!(image.pixels, vec![0, 64]);
    }

    #[test]
    fn constant_f32_volume_maps_to_zeros() {
        let meta = VolumeMeta::cube(2, 1.0).unwrap();
        let vol = ScalarVolume::filled(meta, 7.5);
        let image =
            extract_slice(&VolumePayload::F32(vol), SliceAxis::Z, 0).unwrap();
        assert!(image.pixels.iter().all(|&p| p == 0));
    }

    #[test]
    fn out_of_range_index_is_a_validation_error() {
        let err = extract_slice(&VolumePayload::U8(ramp()), SliceAxis::Z, 2).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_VALIDATION);
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn vector_volumes_are_rejected() {
        let meta = VolumeMeta::cube(2, 1.0).unwrap();
        let payload = VolumePayload::Vec3F32(VectorVolume::zeros(meta));
        assert!(extract_slice(&payload, SliceAxis::X, 0).is_err());
    }

    #[test]
    fn pgm_header_and_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slice.pgm");
        let image = SliceImage {
            width: 3,
            height: 2,
            pixels: vec![0, 128, 255, 1, 2, 3],
        };
        write_pgm(&path, &image).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..9], b"P5\n3 2\n25");
        assert_eq!(&bytes[bytes.len() - 6..], &[0, 128, 255, 1, 2, 3]);
    }
}
