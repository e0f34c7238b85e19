//! Scalar and 3-vector helpers over `libm` (the crate is `no_std`).

pub use libm::{ceil, cos, exp, fabs as abs, log as ln, sin, sqrt};

/// Round half away from zero. `libm::round` implements exactly this rule,
/// which is fixed so that voxel assignment is reproducible bit-for-bit
/// across implementations.
pub use libm::round;

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(v: Vec3) -> f64 {
    sqrt(dot(v, v))
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(v: Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Normalize to unit length; returns `None` for (near-)zero input.
#[inline]
pub fn normalize(v: Vec3) -> Option<Vec3> {
    let n = norm(v);
    if n < 1e-12 {
        None
    } else {
        Some([v[0] / n, v[1] / n, v[2] / n])
    }
}
