//! Synthetic phantoms and tracked multi-angle sweeps with angle-dependent
//! reflection, shadowing, and speckle — ground truth for validating the
//! reconstruction quantitatively.
//!
//! The forward model is deliberately minimal: each beam is ray-marched
//! through the label volume in steps of the smallest voxel spacing, and a
//! background→solid transition reflects `cos θ · R² · I_i` where θ is the
//! incidence angle against the local surface normal and R the impedance
//! reflection coefficient. Later entries along the same beam are attenuated
//! by a fixed fraction per crossing (shadowing); exit faces are silent
//! (bone absorbs strongly). Speckle is additive zero-mean Gaussian — a
//! simplification of multiplicative Rayleigh speckle that is sufficient
//! for contrast metrics. No refraction, no multiple scattering.
//!
//! All randomness flows from one explicit seed; each frame draws from its
//! own ChaCha stream, so serial and parallel synthesis agree bit-for-bit.

use alloc::vec;
use alloc::vec::Vec;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{
    pixel_to_world, transform_direction, world_to_voxel, BeamDirectionMap, FrameGeometry,
    RigidPose, VolumeMeta,
};
use crate::mapprep::{self, FilterError};
use crate::math::{self, Vec3};
use crate::recon::{Frame, TrackedFrameSet};
use crate::volume::{ScalarVolume, VectorVolume};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error("invalid reflection params: {0}")]
    InvalidParams(&'static str),
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(&'static str),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Acoustic model constants. `z1`/`z2` are the impedances on either side
/// of an interface (relative units), `base_intensity` the incident beam
/// intensity, `shadow_attenuation` the transmission fraction surviving
/// each surface crossing, and `noise_sigma` the additive speckle standard
/// deviation. `surface_smear` phenomenologically thickens oblique echoes
/// across `round(surface_smear · (1 − cos θ))` extra rows on each side;
/// 0 disables it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionParams {
    pub z1: f64,
    pub z2: f64,
    pub base_intensity: f64,
    pub noise_sigma: f64,
    pub shadow_attenuation: f64,
    pub surface_smear: f64,
}

impl Default for ReflectionParams {
    /// Soft tissue (1.63 MRayl) against cortical bone (7.8 MRayl).
    fn default() -> Self {
        Self {
            z1: 1.63,
            z2: 7.8,
            base_intensity: 220.0,
            noise_sigma: 2.0,
            shadow_attenuation: 0.1,
            surface_smear: 0.0,
        }
    }
}

impl ReflectionParams {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if !(self.z1 > 0.0 && self.z1.is_finite()) || !(self.z2 > 0.0 && self.z2.is_finite()) {
            return Err(SimulateError::InvalidParams(
                "impedances must be positive and finite",
            ));
        }
        if !(self.base_intensity >= 0.0 && self.base_intensity.is_finite()) {
            return Err(SimulateError::InvalidParams(
                "base intensity must be >= 0 and finite",
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SimulateError::InvalidParams(
                "noise sigma must be >= 0 and finite",
            ));
        }
        if !(self.shadow_attenuation >= 0.0 && self.shadow_attenuation <= 1.0) {
            return Err(SimulateError::InvalidParams(
                "shadow attenuation must be in [0, 1]",
            ));
        }
        if !(self.surface_smear >= 0.0 && self.surface_smear.is_finite()) {
            return Err(SimulateError::InvalidParams(
                "surface smear must be >= 0 and finite",
            ));
        }
        Ok(())
    }

    /// Intensity reflection coefficient R² = ((z2 − z1)/(z2 + z1))².
    pub fn reflection_coefficient_sq(&self) -> f64 {
        let r = (self.z2 - self.z1) / (self.z2 + self.z1);
        r * r
    }
}

/// Echo intensity of a single interface hit: cos θ · R² · I_i.
/// Strictly increasing in `cos_theta` whenever R² and I_i are positive.
#[inline]
pub fn reflected_intensity(cos_theta: f64, params: &ReflectionParams) -> f64 {
    cos_theta * params.reflection_coefficient_sq() * params.base_intensity
}

/// Solid phantom shapes, evaluated at voxel centers in world millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhantomShape {
    /// Strict interior: |p − center| < radius (radius 0 is empty).
    Sphere { center: Vec3, radius: f64 },
    /// All points with normal · p ≥ offset.
    HalfSpace { normal: Vec3, offset: f64 },
    /// A flat slab whose top surface carries two triangular ridges —
    /// a stand-in for adjacent spinous processes with the gap between.
    TwinRidge(TwinRidgeParams),
}

/// Twin-ridge geometry, constant along z. The slab occupies y ≥
/// `base_depth`; each ridge raises the surface toward the probe (−y) by up
/// to `ridge_height`, tapering linearly to zero over `ridge_half_width` on
/// either side of its crest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinRidgeParams {
    pub base_depth: f64,
    pub ridge_height: f64,
    pub ridge_half_width: f64,
    pub ridge_centers: [f64; 2],
}

impl PhantomShape {
    fn contains(&self, p: Vec3) -> bool {
        match *self {
            PhantomShape::Sphere { center, radius } => {
                let d = math::sub(p, center);
                math::dot(d, d) < radius * radius
            }
            PhantomShape::HalfSpace { normal, offset } => math::dot(normal, p) >= offset,
            PhantomShape::TwinRidge(t) => {
                let mut rise = 0.0f64;
                for cx in t.ridge_centers {
                    let tent = 1.0 - math::abs(p[0] - cx) / t.ridge_half_width;
                    if tent > rise {
                        rise = tent;
                    }
                }
                p[1] >= t.base_depth - t.ridge_height * rise
            }
        }
    }
}

/// Rasterizes a shape into a binary label volume (1 inside, 0 outside).
pub fn make_phantom(shape: &PhantomShape, meta: &VolumeMeta) -> ScalarVolume {
    let mut vol = ScalarVolume::zeros(*meta);
    let [dx, dy, dz] = meta.dims;
    for z in 0..dz {
        for y in 0..dy {
            for x in 0..dx {
                if shape.contains(meta.voxel_center([x, y, z])) {
                    vol.set(x, y, z, 1.0);
                }
            }
        }
    }
    vol
}

/// Unit surface directions of a binary label: the normalized gradient,
/// nonzero only near the boundary and pointing into the solid.
pub fn surface_normals(label: &ScalarVolume) -> Result<VectorVolume, FilterError> {
    mapprep::make_gradient_map(label)
}

/// Deterministic standard-normal stream: Box–Muller over ChaCha8, one
/// stream per (seed, stream id) pair.
pub struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Uniform draw in (0, 1] (never 0, so the log below is finite).
    fn uniform_open(&mut self) -> f64 {
        const TWO_NEG_53: f64 = 1.0 / 9007199254740992.0;
        ((self.rng.next_u64() >> 11) + 1) as f64 * TWO_NEG_53
    }

    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        const TWO_NEG_53: f64 = 1.0 / 9007199254740992.0;
        let u1 = self.uniform_open();
        let u2 = (self.rng.next_u64() >> 11) as f64 * TWO_NEG_53;
        let r = math::sqrt(-2.0 * math::ln(u1));
        let phi = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * math::sin(phi));
        r * math::cos(phi)
    }
}

/// A sweep: one image geometry plus the probe pose per frame. Optional
/// tracking jitter perturbs the *recorded* translations with N(0, σ²)
/// while frames are still synthesized from the true poses.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    geometry: FrameGeometry,
    poses: Vec<RigidPose>,
    jitter_sigma: f64,
}

impl SweepSpec {
    pub fn new(geometry: FrameGeometry, poses: Vec<RigidPose>) -> Result<Self, SimulateError> {
        if poses.is_empty() {
            return Err(SimulateError::InvalidSpec("at least one pose required"));
        }
        Ok(Self {
            geometry,
            poses,
            jitter_sigma: 0.0,
        })
    }

    /// Arc trajectory: `frame_count` poses spread over [start_angle,
    /// end_angle] (radians) on a circle of `radius` around `center`,
    /// rotating about `axis`. Every frame's beams point at `center`
    /// through the middle of the image top edge; angles are measured from
    /// a fixed reference direction perpendicular to the axis.
    pub fn arc(
        geometry: FrameGeometry,
        center: Vec3,
        axis: Vec3,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        frame_count: usize,
    ) -> Result<Self, SimulateError> {
        if frame_count < 1 {
            return Err(SimulateError::InvalidSpec("at least one frame required"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SimulateError::InvalidSpec(
                "arc radius must be positive and finite",
            ));
        }
        if !(start_angle.is_finite() && end_angle.is_finite()) {
            return Err(SimulateError::InvalidSpec("arc angles must be finite"));
        }
        let a = math::normalize(axis)
            .ok_or(SimulateError::InvalidSpec("arc axis must be nonzero"))?;
        // Reference direction perpendicular to the axis; beams at angle 0
        // point along it.
        let seed_dir = if math::abs(math::dot(a, [0.0, 1.0, 0.0])) < 0.9 {
            [0.0, 1.0, 0.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let u = math::normalize(math::sub(seed_dir, math::scale(a, math::dot(seed_dir, a))))
            .expect("seed direction is not parallel to the axis");
        let v = math::cross(a, u);
        let half_width = (geometry.width() - 1) as f64 / 2.0 * geometry.pixel_spacing()[0];
        let mut poses = Vec::with_capacity(frame_count);
        for k in 0..frame_count {
            let frac = if frame_count == 1 {
                0.0
            } else {
                k as f64 / (frame_count - 1) as f64
            };
            let angle = start_angle + (end_angle - start_angle) * frac;
            let d = math::add(
                math::scale(u, math::cos(angle)),
                math::scale(v, math::sin(angle)),
            );
            // Image axes in world space: depth along the beam, z along the
            // arc axis, x completing a right-handed frame.
            let x_w = math::cross(d, a);
            let rotation = [
                [x_w[0], d[0], a[0]],
                [x_w[1], d[1], a[1]],
                [x_w[2], d[2], a[2]],
            ];
            let translation = math::sub(
                math::sub(center, math::scale(d, radius)),
                math::scale(x_w, half_width),
            );
            poses.push(
                RigidPose::from_parts(rotation, translation)
                    .expect("arc pose is orthonormal by construction"),
            );
        }
        Self::new(geometry, poses)
    }

    /// Enables recorded-pose translation jitter with the given standard
    /// deviation (mm). Zero disables it.
    pub fn with_jitter(mut self, sigma: f64) -> Result<Self, SimulateError> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(SimulateError::InvalidSpec(
                "jitter sigma must be >= 0 and finite",
            ));
        }
        self.jitter_sigma = sigma;
        Ok(self)
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    pub fn poses(&self) -> &[RigidPose] {
        &self.poses
    }

    pub fn jitter_sigma(&self) -> f64 {
        self.jitter_sigma
    }
}

/// Synthesizes one frame by marching every column's beam through the label.
///
/// The beam starts at the column's row-0 pixel and advances in steps of the
/// smallest voxel spacing up to the image depth. A background→solid
/// transition writes `transmission · reflected_intensity` at the nearest
/// pixel row (brightest echo wins on collision) using cos θ = |beam ·
/// normal| at the entered voxel, then scales transmission by the shadow
/// fraction. Finally speckle is added per pixel in row-major order and the
/// image is clamped and rounded to 8 bits.
pub fn synthesize_frame(
    label: &ScalarVolume,
    normals: &VectorVolume,
    pose: &RigidPose,
    geom: &FrameGeometry,
    bmap: &BeamDirectionMap,
    params: &ReflectionParams,
    noise: &mut GaussianSource,
) -> Vec<u8> {
    let meta = label.meta();
    let (w, h) = (geom.width(), geom.height());
    let sy = geom.pixel_spacing()[1];
    let step = meta.min_spacing();
    let depth = (h - 1) as f64 * sy;
    let n_steps = math::ceil(depth / step) as usize;
    let mut image = vec![0.0f64; w * h];
    for col in 0..w {
        let start = pixel_to_world(col, 0, geom, pose);
        let dir = transform_direction(pose, bmap.dir(col, 0));
        let mut transmission = 1.0;
        let mut prev_voxel = world_to_voxel(start, meta);
        let mut prev_inside = is_solid(label, prev_voxel);
        for k in 1..=n_steps {
            let t = k as f64 * step;
            let p = math::add(start, math::scale(dir, t));
            let voxel = world_to_voxel(p, meta);
            let inside = is_solid(label, voxel);
            if inside && !prev_inside {
                let cos_theta = incidence_cosine(dir, normals, voxel, prev_voxel);
                let echo = transmission * reflected_intensity(cos_theta, params);
                // The interface lies between this sample and the previous
                // one; the echo is attributed to the last sample on the
                // approach side of the crossing.
                let row = math::round((t - step) / sy);
                deposit(&mut image, w, h, col, row, echo, cos_theta, params);
                transmission *= params.shadow_attenuation;
            }
            prev_voxel = voxel;
            prev_inside = inside;
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for px in image {
        let mut v = px + params.noise_sigma * noise.next_gaussian();
        v = v.clamp(0.0, 255.0);
        out.push(math::round(v) as u8);
    }
    out
}

fn is_solid(label: &ScalarVolume, voxel: Option<[usize; 3]>) -> bool {
    voxel.map_or(false, |[x, y, z]| label.get(x, y, z) >= 0.5)
}

/// |beam · normal| at the entered voxel, falling back to the previous
/// (outside) voxel where the gradient vanishes. With no normal on either
/// side (grid borders, degenerate grazing entries) there is no resolvable
/// interface and no specular return.
fn incidence_cosine(
    dir: Vec3,
    normals: &VectorVolume,
    entered: Option<[usize; 3]>,
    previous: Option<[usize; 3]>,
) -> f64 {
    for voxel in [entered, previous].into_iter().flatten() {
        let n = normals.get(voxel[0], voxel[1], voxel[2]);
        if math::dot(n, n) > 0.0 {
            let c = math::abs(math::dot(dir, n));
            return if c > 1.0 { 1.0 } else { c };
        }
    }
    0.0
}

/// Writes an echo at (col, row), optionally smeared across extra rows for
/// oblique hits; colliding echoes keep the brighter value.
fn deposit(
    image: &mut [f64],
    w: usize,
    h: usize,
    col: usize,
    row: f64,
    echo: f64,
    cos_theta: f64,
    params: &ReflectionParams,
) {
    let half = math::round(params.surface_smear * (1.0 - cos_theta)) as isize;
    let center = row as isize;
    for r in center - half..=center + half {
        if r >= 0 && (r as usize) < h && row >= 0.0 {
            let idx = r as usize * w + col;
            if echo > image[idx] {
                image[idx] = echo;
            }
        }
    }
}

/// Synthesizes the whole sweep: one frame per pose, deterministic in
/// `seed`. Frame `i` draws jitter first, then speckle, from stream `i`.
pub fn make_sweep(
    spec: &SweepSpec,
    label: &ScalarVolume,
    params: &ReflectionParams,
    seed: u64,
) -> Result<TrackedFrameSet, SimulateError> {
    params.validate()?;
    let normals = surface_normals(label)?;
    let bmap = BeamDirectionMap::for_geometry(&spec.geometry);
    let mut frames = Vec::with_capacity(spec.poses.len());
    for (i, true_pose) in spec.poses.iter().enumerate() {
        let mut noise = GaussianSource::new(seed, i as u64);
        let recorded = if spec.jitter_sigma > 0.0 {
            let mut t = true_pose.translation();
            for c in &mut t {
                *c += spec.jitter_sigma * noise.next_gaussian();
            }
            RigidPose::from_parts(true_pose.rotation(), t)
                .expect("jitter keeps the rotation block unchanged")
        } else {
            *true_pose
        };
        let data = synthesize_frame(
            label,
            &normals,
            true_pose,
            &spec.geometry,
            &bmap,
            params,
            &mut noise,
        );
        frames.push(Frame {
            pose: recorded,
            data,
        });
    }
    Ok(TrackedFrameSet::new(spec.geometry, frames)
        .expect("sweep frames are sized by construction"))
}
