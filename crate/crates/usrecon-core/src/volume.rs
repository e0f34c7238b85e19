//! Scalar and vector voxel grids.
//!
//! Storage order is x fastest, then y, then z. Element semantics are
//! per-use: labels in {0, 1}, probabilities in [0, 1], intensities in
//! [0, 255], counts ≥ 0.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::VolumeMeta;
use crate::math::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VolumeError {
    #[error("data length {found} does not match voxel count {expected}")]
    DataLength { expected: usize, found: usize },
}

/// A voxel grid of scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume {
    meta: VolumeMeta,
    data: Vec<f64>,
}

impl ScalarVolume {
    pub fn zeros(meta: VolumeMeta) -> Self {
        Self {
            data: vec![0.0; meta.voxel_count()],
            meta,
        }
    }

    pub fn filled(meta: VolumeMeta, value: f64) -> Self {
        Self {
            data: vec![value; meta.voxel_count()],
            meta,
        }
    }

    pub fn from_data(meta: VolumeMeta, data: Vec<f64>) -> Result<Self, VolumeError> {
        if data.len() != meta.voxel_count() {
            return Err(VolumeError::DataLength {
                expected: meta.voxel_count(),
                found: data.len(),
            });
        }
        Ok(Self { meta, data })
    }

    pub fn meta(&self) -> &VolumeMeta {
        &self.meta
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.meta.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: f64) {
        let i = self.meta.index(x, y, z);
        self.data[i] = value;
    }

    /// Clamped lookup: coordinates are clamped to the grid, which gives
    /// every filter edge-replication behavior at the borders.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize, z: isize) -> f64 {
        let d = self.meta.dims;
        let cx = x.clamp(0, d[0] as isize - 1) as usize;
        let cy = y.clamp(0, d[1] as isize - 1) as usize;
        let cz = z.clamp(0, d[2] as isize - 1) as usize;
        self.get(cx, cy, cz)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }
}

/// A voxel grid of 3-vectors; each entry is unit length or exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorVolume {
    meta: VolumeMeta,
    data: Vec<Vec3>,
}

impl VectorVolume {
    pub fn zeros(meta: VolumeMeta) -> Self {
        Self {
            data: vec![[0.0; 3]; meta.voxel_count()],
            meta,
        }
    }

    pub fn from_data(meta: VolumeMeta, data: Vec<Vec3>) -> Result<Self, VolumeError> {
        if data.len() != meta.voxel_count() {
            return Err(VolumeError::DataLength {
                expected: meta.voxel_count(),
                found: data.len(),
            });
        }
        Ok(Self { meta, data })
    }

    pub fn meta(&self) -> &VolumeMeta {
        &self.meta
    }

    pub fn data(&self) -> &[Vec3] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Vec3] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> Vec3 {
        self.data[self.meta.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: Vec3) {
        let i = self.meta.index(x, y, z);
        self.data[i] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_data_checks_length() {
        let meta = VolumeMeta::cube(2, 1.0).unwrap();
        assert!(ScalarVolume::from_data(meta, vec![0.0; 8]).is_ok());
        assert_eq!(
            ScalarVolume::from_data(meta, vec![0.0; 7]),
            Err(VolumeError::DataLength {
                expected: 8,
                found: 7
            })
        );
        assert!(VectorVolume::from_data(meta, vec![[0.0; 3]; 9]).is_err());
    }

    #[test]
    fn storage_order_is_x_fastest() {
        let meta = VolumeMeta::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        let mut vol = ScalarVolume::zeros(meta);
        vol.set(1, 0, 0, 1.0);
        vol.set(0, 1, 0, 2.0);
        vol.set(0, 0, 1, 3.0);
        assert_eq!(vol.data()[1], 1.0);
        assert_eq!(vol.data()[2], 2.0);
        assert_eq!(vol.data()[4], 3.0);
    }

    #[test]
    fn clamped_lookup_replicates_edges() {
        let meta = VolumeMeta::new([2, 2, 1], [1.0; 3], [0.0; 3]).unwrap();
        let mut vol = ScalarVolume::zeros(meta);
        vol.set(0, 0, 0, 5.0);
        vol.set(1, 1, 0, 7.0);
        assert_eq!(vol.get_clamped(-3, -1, 0), 5.0);
        assert_eq!(vol.get_clamped(4, 2, 9), 7.0);
    }
}
