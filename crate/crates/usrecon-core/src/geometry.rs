//! Rigid transforms, probe beam geometry, and the pixel→voxel index mapping
//! used by the distribution step.
//!
//! Image coordinate convention: X = columns (lateral), Y = rows (depth),
//! the image plane is the z = 0 plane of frame coordinates. With this
//! convention a linear probe's beam direction is the +Y axis.

use alloc::vec::Vec;
use thiserror::Error;

use crate::math::{self, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("pose rotation block is not orthonormal (max |R^T R - I| entry = {deviation:e}, tolerance {tolerance:e})")]
    NonOrthonormal { deviation: f64, tolerance: f64 },
    #[error("pose last row must be exactly (0, 0, 0, 1)")]
    BadLastRow,
    #[error("invalid frame geometry: {0}")]
    InvalidFrameGeometry(&'static str),
    #[error("invalid volume meta: {0}")]
    InvalidVolumeMeta(&'static str),
}

/// A 4×4 homogeneous rigid transform, row-major, translation in millimeters.
///
/// The rotation block is orthonormal to 1e-6 and the last row is exactly
/// (0, 0, 0, 1); both are checked on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    matrix: [[f64; 4]; 4],
}

/// Default orthonormality tolerance for [`RigidPose::new`].
pub const POSE_ORTHONORMAL_TOL: f64 = 1e-6;

impl RigidPose {
    /// Validates the rotation block to the default 1e-6 tolerance.
    pub fn new(matrix: [[f64; 4]; 4]) -> Result<Self, GeometryError> {
        Self::with_tolerance(matrix, POSE_ORTHONORMAL_TOL)
    }

    /// Validates the rotation block to a caller-chosen tolerance. File
    /// loaders use a looser 1e-4 bound to absorb text round-trip error.
    pub fn with_tolerance(matrix: [[f64; 4]; 4], tolerance: f64) -> Result<Self, GeometryError> {
        if matrix[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(GeometryError::BadLastRow);
        }
        let deviation = orthonormality_deviation(&matrix);
        if !(deviation < tolerance) {
            return Err(GeometryError::NonOrthonormal {
                deviation,
                tolerance,
            });
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self {
            matrix: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
        }
    }

    /// Builds a pose from a 3×3 rotation block and a translation.
    pub fn from_parts(rotation: [[f64; 3]; 3], translation: Vec3) -> Result<Self, GeometryError> {
        let mut m = [[0.0; 4]; 4];
        for r in 0..3 {
            m[r][..3].copy_from_slice(&rotation[r]);
            m[r][3] = translation[r];
        }
        m[3] = [0.0, 0.0, 0.0, 1.0];
        Self::new(m)
    }

    /// Rotation about `axis` by `angle` radians (Rodrigues), then translation.
    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Result<Self, GeometryError> {
        let a = math::normalize(axis).ok_or(GeometryError::InvalidFrameGeometry(
            "rotation axis must be nonzero",
        ))?;
        let (s, c) = (math::sin(angle), math::cos(angle));
        let t = 1.0 - c;
        let (x, y, z) = (a[0], a[1], a[2]);
        let rotation = [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ];
        Self::from_parts(rotation, translation)
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.matrix
    }

    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        [
            [m[0][0], m[0][1], m[0][2]],
            [m[1][0], m[1][1], m[1][2]],
            [m[2][0], m[2][1], m[2][2]],
        ]
    }

    pub fn translation(&self) -> Vec3 {
        [self.matrix[0][3], self.matrix[1][3], self.matrix[2][3]]
    }

    /// Applies the full transform to a point (rotation + translation).
    #[inline]
    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        let m = &self.matrix;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + m[0][3],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + m[1][3],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2] + m[2][3],
        ]
    }

    /// Applies only the rotation block (free vectors ignore translation).
    #[inline]
    pub fn rotate_vector(&self, d: Vec3) -> Vec3 {
        let m = &self.matrix;
        [
            m[0][0] * d[0] + m[0][1] * d[1] + m[0][2] * d[2],
            m[1][0] * d[0] + m[1][1] * d[1] + m[1][2] * d[2],
            m[2][0] * d[0] + m[2][1] * d[1] + m[2][2] * d[2],
        ]
    }
}

fn orthonormality_deviation(m: &[[f64; 4]; 4]) -> f64 {
    // Max absolute entry of R^T R - I.
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let mut rtr = 0.0;
            for k in 0..3 {
                rtr += m[k][i] * m[k][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = math::abs(rtr - target);
            if dev > worst {
                worst = dev;
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    /// Parallel beams along +Y (depth).
    Linear,
    /// Fan of beams diverging from a virtual apex above the image top edge.
    Phased,
}

/// Per-frame image geometry: size in pixels, physical pixel spacing, probe
/// model. `apex_offset` is the distance (mm) of the virtual apex above the
/// first image row along −Y; it is only meaningful for phased probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGeometry {
    width: usize,
    height: usize,
    pixel_spacing: [f64; 2],
    probe_kind: ProbeKind,
    apex_offset: f64,
}

impl FrameGeometry {
    pub fn new(
        width: usize,
        height: usize,
        pixel_spacing: [f64; 2],
        probe_kind: ProbeKind,
        apex_offset: f64,
    ) -> Result<Self, GeometryError> {
        if width < 1 || height < 1 {
            return Err(GeometryError::InvalidFrameGeometry(
                "width and height must be at least 1",
            ));
        }
        if !(pixel_spacing[0] > 0.0 && pixel_spacing[0].is_finite())
            || !(pixel_spacing[1] > 0.0 && pixel_spacing[1].is_finite())
        {
            return Err(GeometryError::InvalidFrameGeometry(
                "pixel spacing must be positive and finite",
            ));
        }
        if !(apex_offset >= 0.0 && apex_offset.is_finite()) {
            return Err(GeometryError::InvalidFrameGeometry(
                "apex offset must be nonnegative and finite",
            ));
        }
        Ok(Self {
            width,
            height,
            pixel_spacing,
            probe_kind,
            apex_offset,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_spacing(&self) -> [f64; 2] {
        self.pixel_spacing
    }

    pub fn probe_kind(&self) -> ProbeKind {
        self.probe_kind
    }

    pub fn apex_offset(&self) -> f64 {
        self.apex_offset
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Per-pixel unit beam direction in image coordinates, W×H, row-major.
///
/// Precomputed once per geometry; for a fixed imaging depth the map never
/// changes between frames.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamDirectionMap {
    width: usize,
    height: usize,
    dirs: Vec<Vec3>,
}

impl BeamDirectionMap {
    /// Builds the map for a geometry. Linear probes get (0, 1, 0)
    /// everywhere; phased probes get normalize(pixel − apex) with the apex
    /// at (W·sx/2, −apex_offset, 0). A pixel coinciding with the apex
    /// (degenerate configs only) falls back to (0, 1, 0).
    pub fn for_geometry(geom: &FrameGeometry) -> Self {
        let [sx, sy] = geom.pixel_spacing();
        let (w, h) = (geom.width(), geom.height());
        let mut dirs = Vec::with_capacity(w * h);
        match geom.probe_kind() {
            ProbeKind::Linear => {
                dirs.resize(w * h, [0.0, 1.0, 0.0]);
            }
            ProbeKind::Phased => {
                let apex = [w as f64 * sx / 2.0, -geom.apex_offset(), 0.0];
                for row in 0..h {
                    for col in 0..w {
                        let pixel = [col as f64 * sx, row as f64 * sy, 0.0];
                        let dir = math::normalize(math::sub(pixel, apex)).unwrap_or([0.0, 1.0, 0.0]);
                        dirs.push(dir);
                    }
                }
            }
        }
        Self {
            width: w,
            height: h,
            dirs,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dir(&self, col: usize, row: usize) -> Vec3 {
        self.dirs[row * self.width + col]
    }

    pub fn dirs(&self) -> &[Vec3] {
        &self.dirs
    }
}

/// Axis-aligned voxel grid layout: dims in voxels, spacing in mm/voxel, and
/// the world position of voxel (0, 0, 0)'s center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeMeta {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl VolumeMeta {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self, GeometryError> {
        if dims.iter().any(|&d| d < 1) {
            return Err(GeometryError::InvalidVolumeMeta("all dims must be at least 1"));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(GeometryError::InvalidVolumeMeta(
                "all spacings must be positive and finite",
            ));
        }
        if origin.iter().any(|&o| !o.is_finite()) {
            return Err(GeometryError::InvalidVolumeMeta("origin must be finite"));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// Isotropic grid with its origin at the world origin.
    pub fn cube(dim: usize, spacing: f64) -> Result<Self, GeometryError> {
        Self::new([dim, dim, dim], [spacing; 3], [0.0; 3])
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Linear index, x fastest, then y, then z.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    /// Inverse of [`VolumeMeta::index`].
    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.dims[0];
        let rest = index / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn voxel_center(&self, voxel: [usize; 3]) -> Vec3 {
        [
            self.origin[0] + voxel[0] as f64 * self.spacing[0],
            self.origin[1] + voxel[1] as f64 * self.spacing[1],
            self.origin[2] + voxel[2] as f64 * self.spacing[2],
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing[0].min(self.spacing[1]).min(self.spacing[2])
    }
}

/// World position (mm) of pixel (col, row) on a posed frame: the image
/// plane is z = 0 in frame coordinates, so this is pose · (col·sx, row·sy, 0).
#[inline]
pub fn pixel_to_world(col: usize, row: usize, geom: &FrameGeometry, pose: &RigidPose) -> Vec3 {
    let [sx, sy] = geom.pixel_spacing();
    pose.transform_point([col as f64 * sx, row as f64 * sy, 0.0])
}

/// Nearest voxel for a world point, or `None` when outside the grid.
///
/// Per axis: `round((p - origin) / spacing)` with round-half-away-from-zero.
/// Out-of-bounds is an expected outcome (the pixel is skipped), not an error.
#[inline]
pub fn world_to_voxel(point: Vec3, meta: &VolumeMeta) -> Option<[usize; 3]> {
    let mut voxel = [0usize; 3];
    for k in 0..3 {
        let idx = math::round((point[k] - meta.origin[k]) / meta.spacing[k]);
        if !(idx >= 0.0 && idx < meta.dims[k] as f64) {
            return None;
        }
        voxel[k] = idx as usize;
    }
    Some(voxel)
}

/// Beam direction carried into world coordinates: R·d, renormalized.
/// Translation is ignored; directions are free vectors.
#[inline]
pub fn transform_direction(pose: &RigidPose, d: Vec3) -> Vec3 {
    let rotated = pose.rotate_vector(d);
    math::normalize(rotated).unwrap_or(rotated)
}
