//! Affine volatility around an equilibrium and the linearized system
//! `du = A u dt + B u dW`.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::models::{Equilibrium, ModelDefinition, ModelKind, RESIDUAL_TOL};

/// How the two volatility components are driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// One scalar Wiener process shared by both components.
    OneWiener,
    /// Independent Wiener processes: component `i` is driven by `W_i`.
    TwoWiener,
}

/// Volatility slopes `b_ij` anchored at an equilibrium:
/// `g_i(s) = b_i1 x + b_i2 y + c_i` with `c_i = -b_i1 x_e - b_i2 y_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub slopes: Mat2,
    pub anchor: Equilibrium,
}

impl NoiseSpec {
    pub fn new(slopes: Mat2, anchor: Equilibrium) -> Self {
        Self { slopes, anchor }
    }

    /// `c = (c_1, c_2)`.
    pub fn offsets(&self) -> Vec2 {
        let b = &self.slopes;
        let e = self.anchor.state;
        Vec2::new(
            -b[(0, 0)] * e.x - b[(0, 1)] * e.y,
            -b[(1, 0)] * e.x - b[(1, 1)] * e.y,
        )
    }

    /// Evaluate `g(s)`. Vanishes exactly at the anchor.
    #[inline]
    pub fn volatility(&self, s: Vec2) -> Vec2 {
        let b = &self.slopes;
        let c = self.offsets();
        Vec2::new(
            (b[(0, 0)] * s.x + b[(0, 1)] * s.y) + c.x,
            (b[(1, 0)] * s.x + b[(1, 1)] * s.y) + c.y,
        )
    }

    /// The volatility as a closure.
    pub fn make_volatility(&self) -> impl Fn(Vec2) -> Vec2 + '_ {
        move |s| self.volatility(s)
    }
}

/// `B = [[alpha, -beta], [beta, alpha]]`.
pub fn rotational_slopes(alpha: f64, beta: f64) -> Mat2 {
    Mat2::new(alpha, -beta, beta, alpha)
}

/// Slopes used when a configuration leaves them out.
pub fn default_slopes(kind: ModelKind) -> Mat2 {
    match kind {
        ModelKind::KuznetsovTaylor => Mat2::new(10.0, -2.0, 2.0, 10.0),
        _ => rotational_slopes(DEFAULT_ALPHA, DEFAULT_BETA),
    }
}

pub const DEFAULT_ALPHA: f64 = 3.0;
pub const DEFAULT_BETA: f64 = -2.0;

/// Independent volatilities `sigma_i (x_i - x_ie) dW_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalNoiseSpec {
    pub sigma1: f64,
    pub sigma2: f64,
}

impl DiagonalNoiseSpec {
    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self> {
        for (name, s) in [("sigma1", sigma1), ("sigma2", sigma2)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!("{name} must be >= 0, got {s}")));
            }
        }
        Ok(Self { sigma1, sigma2 })
    }

    pub fn slopes(&self) -> Mat2 {
        Mat2::new(self.sigma1, 0.0, 0.0, self.sigma2)
    }
}

/// Linear SDE `du = A u dt + B u dW` around the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSde {
    pub a: Mat2,
    pub b: Mat2,
    pub noise: NoiseKind,
}

impl LinearSde {
    pub fn new(a: Mat2, b: Mat2, noise: NoiseKind) -> Self {
        Self { a, b, noise }
    }

    pub fn one_wiener(a: Mat2, b: Mat2) -> Self {
        Self::new(a, b, NoiseKind::OneWiener)
    }

    pub fn two_wiener(a: Mat2, b: Mat2) -> Self {
        Self::new(a, b, NoiseKind::TwoWiener)
    }

    pub fn is_deterministic(&self) -> bool {
        self.b.iter().all(|&v| v == 0.0)
    }
}

fn check_fresh(model: &ModelDefinition, eq: &Equilibrium) -> Result<()> {
    let residual = model.residual(eq.state);
    if residual > RESIDUAL_TOL || eq.residual > RESIDUAL_TOL {
        return Err(Error::StaleEquilibrium {
            residual: residual.max(eq.residual),
            threshold: RESIDUAL_TOL,
        });
    }
    Ok(())
}

/// One-Wiener linearization: `A = J(eq)`, `B = noise.slopes`.
pub fn linearize_at(
    model: &ModelDefinition,
    eq: &Equilibrium,
    noise: &NoiseSpec,
) -> Result<LinearSde> {
    check_fresh(model, eq)?;
    Ok(LinearSde::one_wiener(
        model.jacobian_at(eq.state)?,
        noise.slopes,
    ))
}

/// Two-Wiener linearization with `B = diag(sigma1, sigma2)`.
pub fn make_diagonal_system(
    model: &ModelDefinition,
    eq: &Equilibrium,
    d: &DiagonalNoiseSpec,
) -> Result<LinearSde> {
    check_fresh(model, eq)?;
    DiagonalNoiseSpec::new(d.sigma1, d.sigma2)?;
    Ok(LinearSde::two_wiener(
        model.jacobian_at(eq.state)?,
        d.slopes(),
    ))
}
