//! Closed-form helpers for 2x2 real matrices.

use nalgebra::{Matrix2, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Eigenvalues of a real 2x2 matrix as (re, im) pairs, larger real part first.
pub fn eigenvalues(m: &Mat2) -> [(f64, f64); 2] {
    let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let disc = half_diff * half_diff + m[(0, 1)] * m[(1, 0)];
    if disc >= 0.0 {
        let s = disc.sqrt();
        [(half_tr + s, 0.0), (half_tr - s, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [(half_tr, s), (half_tr, -s)]
    }
}

/// Real parts of the eigenvalues, descending.
pub fn eigen_real_parts(m: &Mat2) -> [f64; 2] {
    let ev = eigenvalues(m);
    [ev[0].0, ev[1].0]
}

pub fn spectral_abscissa(m: &Mat2) -> f64 {
    eigen_real_parts(m)[0]
}

pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

/// Matrix exponential of a 2x2 matrix via the Cayley-Hamilton closed form
/// `exp(M) = e^t (c(s) I + S(s) (M - t I))`, `t = tr(M)/2`.
#[inline]
pub fn expm2(m: &Mat2) -> Mat2 {
    let (t, rest) = expm2_split(m);
    rest * t.exp()
}

/// `exp(M) = e^t R` with `t = tr(M)/2`; returns `(t, R)`. Lets callers that
/// only track logarithms skip the scalar exponential.
#[inline]
pub fn expm2_split(m: &Mat2) -> (f64, Mat2) {
    let t = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let d = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let s2 = d * d + m[(0, 1)] * m[(1, 0)];
    let (c, sh) = if s2.abs() < 1e-8 {
        // Taylor in s2 up to second order; error O(s2^3)
        (
            1.0 + s2 / 2.0 + s2 * s2 / 24.0,
            1.0 + s2 / 6.0 + s2 * s2 / 120.0,
        )
    } else if s2 > 0.0 {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        let s = (-s2).sqrt();
        let (sin, cos) = s.sin_cos();
        (cos, sin / s)
    };
    (
        t,
        Mat2::new(c + sh * d, sh * m[(0, 1)], sh * m[(1, 0)], c - sh * d),
    )
}
