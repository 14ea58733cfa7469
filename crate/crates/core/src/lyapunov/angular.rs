//! Polar decomposition of `du = A u dt + B u dW`.
//!
//! With `u = r (cos t, sin t)` the Ito equations are
//!
//! ```text
//! d log r = (q1 + (q4^2 - q2^2)/2) dt + q2 dW
//! dt      = (q3 - q2 q4) dt + q4 dW
//! ```
//!
//! where `q1, q2` are the radial and `q3, q4` the tangential components of
//! `A e_r` and `B e_r`.

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::linearize::{LinearSde, NoiseKind};

/// Coefficients `(k_cc, k_cs, k_ss)` of `k_cc cos^2 + k_cs cos sin + k_ss sin^2`.
pub type QuadraticTrig = [f64; 3];

#[inline]
fn eval_quad(k: &QuadraticTrig, c: f64, s: f64) -> f64 {
    k[0] * c * c + k[1] * c * s + k[2] * s * s
}

/// Values of the angular coefficients at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularSample {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    /// Exact derivative of `q4`.
    pub dq4: f64,
}

impl AngularSample {
    /// Ito drift of the angle.
    #[inline]
    pub fn angular_drift(&self) -> f64 {
        self.q3 - self.q2 * self.q4
    }

    /// Drift of `log r`, the integrand of the exponent.
    #[inline]
    pub fn radial_rate(&self) -> f64 {
        self.q1 + 0.5 * (self.q4 * self.q4 - self.q2 * self.q2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularCoefficients {
    pub a: Mat2,
    pub b: Mat2,
    pub q1: QuadraticTrig,
    pub q2: QuadraticTrig,
    pub q3: QuadraticTrig,
    pub q4: QuadraticTrig,
    /// `q5 = k_s sin 2t + k_c cos 2t`, stored as `(k_s, k_c)`.
    pub q5: [f64; 2],
}

/// Build the angular coefficients of a one-Wiener linear system.
pub fn angular_coeffs(sys: &LinearSde) -> Result<AngularCoefficients> {
    if sys.noise != NoiseKind::OneWiener {
        return Err(Error::UnsupportedNoise);
    }
    Ok(AngularCoefficients::from_matrices(sys.a, sys.b))
}

impl AngularCoefficients {
    pub fn from_matrices(a: Mat2, b: Mat2) -> Self {
        let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        let (b11, b12, b21, b22) = (b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]);
        Self {
            a,
            b,
            q1: [a11, a12 + a21, a22],
            q2: [b11, b12 + b21, b22],
            q3: [a21, a22 - a11, -a12],
            q4: [b21, b22 - b11, -b12],
            q5: [-(b12 + b21), -(b22 - b11)],
        }
    }

    #[inline]
    pub fn at(&self, theta: f64) -> AngularSample {
        let (s, c) = theta.sin_cos();
        let (s2, c2) = (2.0 * s * c, c * c - s * s);
        let q4 = &self.q4;
        AngularSample {
            q1: eval_quad(&self.q1, c, s),
            q2: eval_quad(&self.q2, c, s),
            q3: eval_quad(&self.q3, c, s),
            q4: eval_quad(q4, c, s),
            q5: self.q5[0] * s2 + self.q5[1] * c2,
            // d/dt of k_cc c^2 + k_cs c s + k_ss s^2
            dq4: (q4[2] - q4[0]) * s2 + q4[1] * c2,
        }
    }

    /// `min |q4|` over the whole circle. `q4 = m + R cos(2t - phi)` so the
    /// minimum is `|m| - R` when positive and zero otherwise.
    pub fn min_abs_q4(&self) -> f64 {
        let [kcc, kcs, kss] = self.q4;
        let mean = 0.5 * (kcc + kss);
        let amp = (0.25 * (kcc - kss).powi(2) + 0.25 * kcs * kcs).sqrt();
        (mean.abs() - amp).max(0.0)
    }

    /// Minimum `|q4|` a density method accepts.
    pub const Q4_THRESHOLD: f64 = 1e-8;

    pub fn check_nondegenerate(&self) -> Result<()> {
        let min_q4 = self.min_abs_q4();
        if min_q4 <= Self::Q4_THRESHOLD {
            return Err(Error::DegenerateDiffusion { min_q4 });
        }
        Ok(())
    }
}
