//! Bone-surface probability and gradient map preparation.
//!
//! Emulates a surface estimator from a binary label volume: a 3D Sobel
//! extracts the boundary, a Gaussian spreads it to model estimation
//! uncertainty, and max-normalization turns it into a probability in
//! [0, 1]. The gradient map is the normalized 3D Sobel gradient of the
//! probability; on the approach side it points against the outward surface
//! normal, i.e. along a perpendicularly incoming beam.
//!
//! All filters replicate edge voxels at the borders and are evaluated as
//! cross-correlations.

use alloc::vec::Vec;
use thiserror::Error;

use crate::math;
use crate::volume::{ScalarVolume, VectorVolume};

/// Standard deviation (voxels) used for the probability map when nothing
/// else is requested.
pub const DEFAULT_PROBABILITY_SIGMA: f64 = 10.0;

/// Gradient magnitudes below this become exact zero vectors ("no surface").
pub const GRADIENT_ZERO_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("volume dims {dims:?} too small for a 3-tap filter (all dims must be >= 3)")]
    DimsTooSmall { dims: [usize; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn unit(self) -> [isize; 3] {
        match self {
            Axis::X => [1, 0, 0],
            Axis::Y => [0, 1, 0],
            Axis::Z => [0, 0, 1],
        }
    }
}

/// One separable pass: cross-correlate `taps` (centered) along `axis`,
/// replicating edges.
fn correlate_axis(vol: &ScalarVolume, axis: Axis, taps: &[f64]) -> ScalarVolume {
    let meta = *vol.meta();
    let radius = (taps.len() / 2) as isize;
    let step = axis.unit();
    let [dx, dy, dz] = meta.dims;
    let mut out = Vec::with_capacity(meta.voxel_count());
    for z in 0..dz as isize {
        for y in 0..dy as isize {
            for x in 0..dx as isize {
                let mut acc = 0.0;
                for (i, &w) in taps.iter().enumerate() {
                    let t = i as isize - radius;
                    acc += w
                        * vol.get_clamped(x + t * step[0], y + t * step[1], z + t * step[2]);
                }
                out.push(acc);
            }
        }
    }
    ScalarVolume::from_data(meta, out).expect("length preserved by construction")
}

/// Separable 3D Sobel along one axis: derivative taps (−1, 0, 1) on `axis`,
/// smoothing taps (1, 2, 1) on the other two. Output is signed and points
/// toward increasing input.
pub fn sobel3d_axis(vol: &ScalarVolume, axis: Axis) -> Result<ScalarVolume, FilterError> {
    let dims = vol.meta().dims;
    if dims.iter().any(|&d| d < 3) {
        return Err(FilterError::DimsTooSmall { dims });
    }
    const DERIV: [f64; 3] = [-1.0, 0.0, 1.0];
    const SMOOTH: [f64; 3] = [1.0, 2.0, 1.0];
    let mut out = vol.clone();
    for pass_axis in Axis::ALL {
        let taps = if pass_axis == axis { &DERIV } else { &SMOOTH };
        out = correlate_axis(&out, pass_axis, taps);
    }
    Ok(out)
}

/// Per-voxel magnitude of the three Sobel responses.
pub fn boundary_magnitude(label: &ScalarVolume) -> Result<ScalarVolume, FilterError> {
    let gx = sobel3d_axis(label, Axis::X)?;
    let gy = sobel3d_axis(label, Axis::Y)?;
    let gz = sobel3d_axis(label, Axis::Z)?;
    let mut out = ScalarVolume::zeros(*label.meta());
    for (i, o) in out.data_mut().iter_mut().enumerate() {
        let (x, y, z) = (gx.data()[i], gy.data()[i], gz.data()[i]);
        *o = math::sqrt(x * x + y * y + z * z);
    }
    Ok(out)
}

/// Separable Gaussian blur, kernel radius ceil(3σ), each 1D kernel
/// normalized to sum 1.
pub fn gaussian3d(vol: &ScalarVolume, sigma: f64) -> ScalarVolume {
    assert!(
        sigma > 0.0 && sigma.is_finite(),
        "gaussian3d requires sigma > 0"
    );
    let radius = math::ceil(3.0 * sigma) as usize;
    let mut taps = Vec::with_capacity(2 * radius + 1);
    let mut sum = 0.0;
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        let w = math::exp(-(d * d) / (2.0 * sigma * sigma));
        taps.push(w);
        sum += w;
    }
    for w in &mut taps {
        *w /= sum;
    }
    let mut out = vol.clone();
    for axis in Axis::ALL {
        out = correlate_axis(&out, axis, &taps);
    }
    out
}

/// Scales so the maximum becomes 1; an all-zero (or non-positive) volume
/// stays all zeros.
pub fn max_normalize(vol: &ScalarVolume) -> ScalarVolume {
    let max = vol.max_value();
    let mut out = ScalarVolume::zeros(*vol.meta());
    if max > 0.0 {
        for (o, &v) in out.data_mut().iter_mut().zip(vol.data()) {
            *o = v / max;
        }
    }
    out
}

/// Full probability-map pipeline: boundary magnitude → Gaussian(σ) →
/// max-normalize. The result is in [0, 1] with max exactly 1 for any
/// non-empty label.
pub fn make_probability_map(label: &ScalarVolume, sigma: f64) -> Result<ScalarVolume, FilterError> {
    Ok(max_normalize(&gaussian3d(&boundary_magnitude(label)?, sigma)))
}

/// Normalized 3D Sobel gradient of the probability map. Vectors are unit
/// length or exactly zero where the gradient magnitude is below
/// [`GRADIENT_ZERO_EPS`].
pub fn make_gradient_map(prob: &ScalarVolume) -> Result<VectorVolume, FilterError> {
    let gx = sobel3d_axis(prob, Axis::X)?;
    let gy = sobel3d_axis(prob, Axis::Y)?;
    let gz = sobel3d_axis(prob, Axis::Z)?;
    let mut out = VectorVolume::zeros(*prob.meta());
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let g = [gx.data()[i], gy.data()[i], gz.data()[i]];
        let mag = math::norm(g);
        *v = if mag < GRADIENT_ZERO_EPS {
            [0.0; 3]
        } else {
            [g[0] / mag, g[1] / mag, g[2] / mag]
        };
    }
    Ok(out)
}
