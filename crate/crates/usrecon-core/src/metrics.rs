//! Quantitative comparison of reconstructed volumes against simulator
//! ground truth: bone-surface contrast, contrast-to-noise ratio, and
//! boundary completeness.
//!
//! The surface region is defined by a [`SurfaceMask`] built from the
//! ground-truth label (its boundary, dilated by one voxel so both sides of
//! the interface count). The background is everything else; where a
//! visited mask is supplied, both regions are restricted to visited voxels
//! so unfilled holes deflate no method unfairly. All reductions use
//! compensated summation, making results independent of iteration order to
//! well below 1e-9.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::VolumeMeta;
use crate::math;
use crate::volume::ScalarVolume;

/// Floor added to denominators so noiseless and empty-background cases
/// stay finite.
pub const METRICS_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("region '{0}' contains no voxels to measure")]
    EmptyRegion(&'static str),
    #[error("mask length {found} does not match the volume meta ({expected} voxels)")]
    MaskLength { expected: usize, found: usize },
    #[error("volume dims do not match the mask dims")]
    DimsMismatch,
}

/// Ground-truth surface voxels: the label boundary dilated by one voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMask {
    meta: VolumeMeta,
    mask: Vec<bool>,
}

impl SurfaceMask {
    pub fn new(meta: VolumeMeta, mask: Vec<bool>) -> Result<Self, MetricsError> {
        if mask.len() != meta.voxel_count() {
            return Err(MetricsError::MaskLength {
                expected: meta.voxel_count(),
                found: mask.len(),
            });
        }
        Ok(Self { meta, mask })
    }

    /// Boundary voxels (any face neighbor on the other side of the
    /// interface) dilated by one voxel in the full 26-neighborhood.
    pub fn from_label(label: &ScalarVolume) -> Self {
        let meta = *label.meta();
        let [dx, dy, dz] = meta.dims;
        let inside =
            |x: usize, y: usize, z: usize| label.get(x, y, z) >= 0.5;
        let mut boundary = vec![false; meta.voxel_count()];
        for z in 0..dz {
            for y in 0..dy {
                for x in 0..dx {
                    let here = inside(x, y, z);
                    const FACE_NEIGHBORS: [[isize; 3]; 6] = [
                        [-1, 0, 0],
                        [1, 0, 0],
                        [0, -1, 0],
                        [0, 1, 0],
                        [0, 0, -1],
                        [0, 0, 1],
                    ];
                    for [ox, oy, oz] in FACE_NEIGHBORS {
                        let (nx, ny, nz) =
                            (x as isize + ox, y as isize + oy, z as isize + oz);
                        if nx < 0
                            || ny < 0
                            || nz < 0
                            || nx >= dx as isize
                            || ny >= dy as isize
                            || nz >= dz as isize
                        {
                            continue;
                        }
                        if inside(nx as usize, ny as usize, nz as usize) != here {
                            boundary[meta.index(x, y, z)] = true;
                            break;
                        }
                    }
                }
            }
        }
        let mut mask = vec![false; meta.voxel_count()];
        for z in 0..dz {
            for y in 0..dy {
                for x in 0..dx {
                    'dilate: for oz in -1isize..=1 {
                        for oy in -1isize..=1 {
                            for ox in -1isize..=1 {
                                let (nx, ny, nz) =
                                    (x as isize + ox, y as isize + oy, z as isize + oz);
                                if nx < 0
                                    || ny < 0
                                    || nz < 0
                                    || nx >= dx as isize
                                    || ny >= dy as isize
                                    || nz >= dz as isize
                                {
                                    continue;
                                }
                                if boundary[meta.index(nx as usize, ny as usize, nz as usize)] {
                                    mask[meta.index(x, y, z)] = true;
                                    break 'dilate;
                                }
                            }
                        }
                    }
                }
            }
        }
        Self { meta, mask }
    }

    pub fn meta(&self) -> &VolumeMeta {
        &self.meta
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn true_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// One volume's worth of quality numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub surface_mean: f64,
    pub background_mean: f64,
    pub contrast_ratio: f64,
    pub cnr: f64,
    pub completeness: f64,
}

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum
    }
}

fn check_dims(vol: &ScalarVolume, mask: &SurfaceMask) -> Result<(), MetricsError> {
    if vol.meta().dims != mask.meta.dims {
        return Err(MetricsError::DimsMismatch);
    }
    Ok(())
}

struct RegionStats {
    mean: f64,
    var: f64,
}

/// Two-pass compensated mean/variance over the selected voxels.
fn region_stats<F: Fn(usize) -> bool>(
    vol: &ScalarVolume,
    select: F,
    name: &'static str,
) -> Result<RegionStats, MetricsError> {
    let mut sum = Kahan::default();
    let mut n = 0usize;
    for (idx, &v) in vol.data().iter().enumerate() {
        if select(idx) {
            sum.add(v);
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricsError::EmptyRegion(name));
    }
    let mean = sum.total() / n as f64;
    let mut sq = Kahan::default();
    for (idx, &v) in vol.data().iter().enumerate() {
        if select(idx) {
            let d = v - mean;
            sq.add(d * d);
        }
    }
    Ok(RegionStats {
        mean,
        var: sq.total() / n as f64,
    })
}

fn surface_and_background(
    vol: &ScalarVolume,
    mask: &SurfaceMask,
    visited: Option<&[bool]>,
) -> Result<(RegionStats, RegionStats), MetricsError> {
    check_dims(vol, mask)?;
    let is_visited = |idx: usize| visited.map_or(true, |v| v[idx]);
    let surface = region_stats(vol, |idx| mask.mask[idx] && is_visited(idx), "surface")?;
    let background =
        region_stats(vol, |idx| !mask.mask[idx] && is_visited(idx), "background")?;
    Ok((surface, background))
}

fn contrast_from_stats(surface: &RegionStats, background: &RegionStats) -> (f64, f64) {
    let floor = if background.mean > METRICS_EPS {
        background.mean
    } else {
        METRICS_EPS
    };
    let contrast_ratio = surface.mean / floor;
    let cnr =
        (surface.mean - background.mean) / math::sqrt(surface.var + background.var + METRICS_EPS);
    (contrast_ratio, cnr)
}

/// Surface-to-background contrast ratio and contrast-to-noise ratio.
///
/// Both regions are restricted to visited voxels when `visited` is given;
/// pass `None` to measure over the full grid.
pub fn contrast(
    vol: &ScalarVolume,
    mask: &SurfaceMask,
    visited: Option<&[bool]>,
) -> Result<(f64, f64), MetricsError> {
    let (surface, background) = surface_and_background(vol, mask, visited)?;
    Ok(contrast_from_stats(&surface, &background))
}

/// Fraction of surface voxels at or above `threshold` — how much of the
/// ground-truth boundary the volume actually shows.
pub fn completeness(
    vol: &ScalarVolume,
    mask: &SurfaceMask,
    threshold: f64,
) -> Result<f64, MetricsError> {
    check_dims(vol, mask)?;
    let mut total = 0usize;
    let mut hit = 0usize;
    for (idx, &v) in vol.data().iter().enumerate() {
        if mask.mask[idx] {
            total += 1;
            if v >= threshold {
                hit += 1;
            }
        }
    }
    if total == 0 {
        return Err(MetricsError::EmptyRegion("surface"));
    }
    Ok(hit as f64 / total as f64)
}

/// Full report for one volume.
pub fn report(
    vol: &ScalarVolume,
    mask: &SurfaceMask,
    threshold: f64,
    visited: Option<&[bool]>,
) -> Result<MetricsReport, MetricsError> {
    let (surface, background) = surface_and_background(vol, mask, visited)?;
    let (contrast_ratio, cnr) = contrast_from_stats(&surface, &background);
    Ok(MetricsReport {
        surface_mean: surface.mean,
        background_mean: background.mean,
        contrast_ratio,
        cnr,
        completeness: completeness(vol, mask, threshold)?,
    })
}

/// One report per named volume, in input order. All volumes share the
/// mask, threshold, and optional visited restriction.
pub fn compare(
    volumes: &[(&str, &ScalarVolume)],
    mask: &SurfaceMask,
    threshold: f64,
    visited: Option<&[bool]>,
) -> Result<Vec<(String, MetricsReport)>, MetricsError> {
    let mut out = Vec::with_capacity(volumes.len());
    for (name, vol) in volumes {
        out.push((String::from(*name), report(vol, mask, threshold, visited)?));
    }
    Ok(out)
}

/// Otsu's threshold over a 256-bin histogram of the clamped, rounded
/// intensities. Returns `t + 0.5` where `t` maximizes the between-class
/// variance, so `v >= threshold` selects exactly the bins above `t`; ties
/// resolve to the smallest `t`.
pub fn otsu_threshold(vol: &ScalarVolume) -> f64 {
    let mut hist = [0u64; 256];
    for &v in vol.data() {
        let bin = math::round(v.clamp(0.0, 255.0)) as usize;
        hist[bin] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_mean: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &n)| i as f64 * n as f64)
        .sum::<f64>()
        / total as f64;
    let mut best_t = 0usize;
    let mut best_var = f64::MIN;
    let mut w0 = 0.0f64;
    let mut sum0 = 0.0f64;
    for t in 0..255 {
        w0 += hist[t] as f64 / total as f64;
        sum0 += t as f64 * hist[t] as f64 / total as f64;
        let w1 = 1.0 - w0;
        if w0 <= 0.0 || w1 <= 0.0 {
            continue;
        }
        let mean0 = sum0 / w0;
        let mean1 = (total_mean - sum0) / w1;
        let between = w0 * w1 * (mean0 - mean1) * (mean0 - mean1);
        if between > best_var {
            best_var = between;
            best_t = t;
        }
    }
    best_t as f64 + 0.5
}
