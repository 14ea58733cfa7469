//! Stationary density of the angle process and the exponent it induces.
//!
//! The stationary Fokker-Planck equation of the angle integrates once to a
//! constant flux
//!
//! ```text
//! J = mu p - (q4^2 p)'/2,   mu = q3 - q2 q4.
//! ```
//!
//! Its periodic solution is `p = K/(D q4^2) (1 + eta int_0^t D)` with
//! `D(t) = exp(-2 int_0^t mu/q4^2)` and `eta = (D(T) - 1)/int_0^T D`, `T` the
//! period; equivalently `q4^2 p(t) ~ int_t^(t+T) D(s)/D(t) ds`. The grid scheme discretizes the same relation with a backward
//! difference:
//!
//! ```text
//! p(i) = (p0 + q4(i)^2 p(i-1)/(2h)) F(i),  F(i) = 2h/(2h c(i) + q4(i)^2),
//! c = -q3 + q2 q4 + q4 q4'.
//! ```
//!
//! [`FluxForm::Printed`] swaps in the alternative transcription that uses
//! `q3 - q2 q4 - q4 q5` inside `D` and `q4 q5` in place of `q4 q4'` in `F`.
//! The two coincide whenever `b11 = b22`.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use super::angular::{AngularCoefficients, AngularSample};
use super::{Diagnostics, LyapunovMethod, LyapunovResult};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::linearize::LinearSde;

pub const DEFAULT_GRID_N: usize = 2000;

/// Domain of the angle. The coefficients are `pi`-periodic, so the density on
/// the circle is the projective density repeated twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Period {
    #[default]
    Full,
    Projective,
}

impl Period {
    pub fn length(self) -> f64 {
        match self {
            Period::Full => TAU,
            Period::Projective => PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMethod {
    ClosedForm,
    GridScheme,
    Histogram,
    /// The rotational-noise `g(theta)` formula evaluated as written.
    RotationalVerbatim,
}

impl DensityMethod {
    pub fn name(self) -> &'static str {
        match self {
            DensityMethod::ClosedForm => "closed_form",
            DensityMethod::GridScheme => "grid_scheme",
            DensityMethod::Histogram => "histogram",
            DensityMethod::RotationalVerbatim => "rotational_verbatim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxForm {
    /// Zero-divergence flux of the angle's Fokker-Planck equation.
    #[default]
    Derived,
    /// Alternative transcription with `q5` standing in for `q4'`.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    pub grid_n: usize,
    pub period: Period,
    pub flux: FluxForm,
    /// Origin of the grid; nodes are `offset + i h`.
    pub offset: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            grid_n: DEFAULT_GRID_N,
            period: Period::Full,
            flux: FluxForm::Derived,
            offset: 0.0,
        }
    }
}

impl DensityOptions {
    pub fn with_grid_n(grid_n: usize) -> Self {
        Self {
            grid_n,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grid_n < 8 {
            return Err(Error::Domain(format!(
                "grid size must be at least 8, got {}",
                self.grid_n
            )));
        }
        if !self.offset.is_finite() {
            return Err(Error::Domain("grid offset is not finite".into()));
        }
        Ok(())
    }

    fn h(&self) -> f64 {
        self.period.length() / self.grid_n as f64
    }

    fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.grid_n)
            .map(|i| self.offset + i as f64 * h)
            .collect()
    }
}

/// Density values on `N + 1` equispaced nodes covering one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDensity {
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub period: Period,
    pub method: DensityMethod,
}

impl PhaseDensity {
    /// Number of cells.
    pub fn n(&self) -> usize {
        self.p.len() - 1
    }

    pub fn h(&self) -> f64 {
        self.period.length() / self.n() as f64
    }

    /// Trapezoid rule of `f(theta) p(theta)` over the period.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let vals: Vec<f64> = self
            .theta
            .iter()
            .zip(&self.p)
            .map(|(&t, &p)| f(t) * p)
            .collect();
        trapezoid(&vals, self.h())
    }

    pub fn total_mass(&self) -> f64 {
        trapezoid(&self.p, self.h())
    }

    /// `|p(N) - p(0)|` relative to the largest value.
    pub fn endpoint_gap(&self) -> f64 {
        let max = self.p.iter().cloned().fold(0.0, f64::max);
        (self.p[self.n()] - self.p[0]).abs() / max
    }

    pub fn min_value(&self) -> f64 {
        self.p.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `theta,p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "theta,p")?;
        for (t, p) in self.theta.iter().zip(&self.p) {
            writeln!(w, "{t:.16e},{p:.16e}")?;
        }
        Ok(())
    }

    fn normalized(mut self) -> Result<Self> {
        let mass = self.total_mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Numerical(format!("density mass is {mass}")));
        }
        for v in &mut self.p {
            *v /= mass;
        }
        Ok(self)
    }
}

fn trapezoid(vals: &[f64], h: f64) -> f64 {
    let n = vals.len() - 1;
    let inner: f64 = vals.iter().sum();
    h * (inner - 0.5 * (vals[0] + vals[n]))
}

// 5-point Gauss-Legendre on [0, 1]
const GL_X: [f64; 5] = [
    0.046_910_077_030_668_004,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_6,
    0.953_089_922_969_332,
];
const GL_W: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_45,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

fn gl(f: impl Fn(f64) -> f64, a: f64, len: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..5 {
        acc += GL_W[k] * f(a + len * GL_X[k]);
    }
    acc * len
}

/// Integrand `2 num / q4^2` of the exponent of `D`.
fn log_weight(form: FluxForm, s: &AngularSample) -> f64 {
    let num = match form {
        FluxForm::Derived => s.angular_drift(),
        FluxForm::Printed => s.angular_drift() - s.q4 * s.q5,
    };
    2.0 * num / (s.q4 * s.q4)
}

/// Closed-form density with the default options.
pub fn stationary_density_closed(sys: &LinearSde, grid_n: usize) -> Result<PhaseDensity> {
    let q = super::angular::angular_coeffs(sys)?;
    stationary_density_closed_with(&q, &DensityOptions::with_grid_n(grid_n))
}

/// `log(e^a + e^b)`.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Closed-form density, evaluated as the window integral
/// `q4^2 p(t) ~ int_t^(t+T) exp(phi(t) - phi(s)) ds` with `phi = -log D`.
///
/// Working with `log` of the window integral keeps strongly drifting systems
/// (where `phi` changes by hundreds over a period) free of overflow and of
/// the cancellation in `1 - int_0^t D / int_0^T D`. Adjacent windows differ
/// by one cell at each end, which gives a recurrence with positive
/// coefficients: backward when `phi(T) >= 0`, forward otherwise. The cell
/// integrals use Gauss-Legendre panels.
pub fn stationary_density_closed_with(
    q: &AngularCoefficients,
    opts: &DensityOptions,
) -> Result<PhaseDensity> {
    opts.validate()?;
    q.check_nondegenerate()?;
    let n = opts.grid_n;
    let h = opts.h();
    let theta = opts.nodes();
    let w = |t: f64| log_weight(opts.flux, &q.at(t));

    let mut phi = vec![0.0; n + 1];
    for i in 0..n {
        phi[i + 1] = phi[i] + gl(w, theta[i], h);
    }
    let phi_end = phi[n];
    // log of c_i = int over cell i of exp(phi_i - phi(s))
    let log_cell: Vec<f64> = (0..n)
        .map(|i| {
            let t0 = theta[i];
            gl(|t| (-gl(w, t0, t - t0)).exp(), t0, h).ln()
        })
        .collect();
    // window at the origin: int_0^T exp(phi_0 - phi(s)) ds
    let log_m0 = log_cell
        .iter()
        .zip(&phi)
        .fold(f64::NEG_INFINITY, |acc, (lc, f)| log_add_exp(acc, lc - f));

    let mut log_m = vec![0.0; n + 1];
    if phi_end >= 0.0 {
        // M_i = c_i (1 - e^-phiT) + e^(phi_i - phi_i+1) M_i+1
        let log_keep = (-(-phi_end).exp_m1()).ln();
        log_m[n] = log_m0;
        for i in (0..n).rev() {
            log_m[i] = log_add_exp(log_cell[i] + log_keep, log_m[i + 1] - (phi[i + 1] - phi[i]));
        }
    } else {
        // the backward window int_(t-T)^t, which is e^phiT times the forward one:
        // N_i+1 = e^(phi_i+1 - phi_i) (N_i + c_i (1 - e^phiT))
        let log_keep = (-phi_end.exp_m1()).ln();
        log_m[0] = phi_end + log_m0;
        for i in 0..n {
            let grow = phi[i + 1] - phi[i];
            log_m[i + 1] = grow + log_add_exp(log_m[i], log_cell[i] + log_keep);
        }
    }
    let log_p: Vec<f64> = (0..=n)
        .map(|i| log_m[i] - 2.0 * q.at(theta[i]).q4.abs().ln())
        .collect();
    let top = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p: Vec<f64> = log_p.iter().map(|l| (l - top).exp()).collect();
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("closed-form density is not finite".into()));
    }
    PhaseDensity {
        theta,
        p,
        period: opts.period,
        method: DensityMethod::ClosedForm,
    }
    .normalized()
}

/// Grid-scheme density with the default options.
pub fn stationary_density_grid(sys: &LinearSde, grid_n: usize) -> Result<PhaseDensity> {
    let q = super::angular::angular_coeffs(sys)?;
    stationary_density_grid_with(&q, &DensityOptions::with_grid_n(grid_n))
}

/// Backward-difference recurrence. Its two free constants, the flux `p0` and
/// the seed `p(0)`, enter affinely, so `p(i) = p0 alpha(i) + p(0) beta(i)` and
/// periodicity `p(N) = p(0)` is solved exactly. The pair is kept with a
/// running log-scale to survive large growth factors.
pub fn stationary_density_grid_with(
    q: &AngularCoefficients,
    opts: &DensityOptions,
) -> Result<PhaseDensity> {
    opts.validate()?;
    q.check_nondegenerate()?;
    let n = opts.grid_n;
    let h = opts.h();
    let theta = opts.nodes();

    let mut alpha = vec![0.0; n + 1];
    let mut beta = vec![0.0; n + 1];
    let mut scale = vec![0.0f64; n + 1];
    beta[0] = 1.0;
    for i in 1..=n {
        let s = q.at(theta[i]);
        let shear = match opts.flux {
            FluxForm::Derived => s.q4 * s.dq4,
            FluxForm::Printed => s.q4 * s.q5,
        };
        let c = -s.q3 + s.q2 * s.q4 + shear;
        let q4sq = s.q4 * s.q4;
        let f = 2.0 * h / (2.0 * h * c + q4sq);
        let k = q4sq / (2.0 * h);
        let mut l = scale[i - 1];
        let mut a = f * (-l).exp() + f * k * alpha[i - 1];
        let mut b = f * k * beta[i - 1];
        let m = a.abs().max(b.abs());
        if !(1e-100..=1e100).contains(&m) && m > 0.0 {
            a /= m;
            b /= m;
            l += m.ln();
        }
        alpha[i] = a;
        beta[i] = b;
        scale[i] = l;
    }
    if alpha[n] == 0.0 || !alpha[n].is_finite() {
        return Err(Error::Numerical("periodicity solve is singular".into()));
    }
    // p0 alpha(N) + beta(N) = 1 in unscaled terms
    let kappa = ((-scale[n]).exp() - beta[n]) / alpha[n];
    let top = scale.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = (0..=n)
        .map(|i| (kappa * alpha[i] + beta[i]) * (scale[i] - top).exp())
        .collect();
    p[n] = p[0];
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("grid recurrence overflowed".into()));
    }
    let max = p.iter().cloned().fold(0.0, f64::max);
    if p.iter().any(|&v| v < -1e-9 * max) {
        return Err(Error::Numerical(
            "grid recurrence produced negative density; refine the grid".into(),
        ));
    }
    for v in &mut p {
        *v = v.max(0.0);
    }
    PhaseDensity {
        theta,
        p,
        period: opts.period,
        method: DensityMethod::GridScheme,
    }
    .normalized()
}

/// `lambda = int (q1 + (q4^2 - q2^2)/2) p` by the trapezoid rule.
pub fn lyapunov_from_density(q: &AngularCoefficients, p: &PhaseDensity) -> LyapunovResult {
    let lambda = p.integrate(|t| q.at(t).radial_rate());
    let method = match p.method {
        DensityMethod::ClosedForm | DensityMethod::RotationalVerbatim => LyapunovMethod::ClosedForm,
        DensityMethod::GridScheme => LyapunovMethod::Grid,
        DensityMethod::Histogram => LyapunovMethod::MonteCarlo,
    };
    LyapunovResult {
        lambda,
        method,
        diagnostics: Diagnostics {
            grid_n: Some(p.n()),
            ..Diagnostics::default()
        },
    }
}

/// Relative spread of the Fokker-Planck flux `mu p - (q4^2 p)'/2` across a
/// periodic density: `std(J) / max(|mean J|, mean |mu p|)`. Derivatives use
/// 5-point periodic central differences.
pub fn flux_residual(q: &AngularCoefficients, p: &PhaseDensity) -> f64 {
    let n = p.n();
    let h = p.h();
    let samples: Vec<AngularSample> = p.theta[..n].iter().map(|&t| q.at(t)).collect();
    let m: Vec<f64> = (0..n)
        .map(|i| samples[i].q4 * samples[i].q4 * p.p[i])
        .collect();
    let at = |i: isize| m[i.rem_euclid(n as isize) as usize];
    let mut flux = Vec::with_capacity(n);
    let mut drift_mag = 0.0;
    for i in 0..n {
        let j = i as isize;
        let dm = (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * h);
        let mu_p = samples[i].angular_drift() * p.p[i];
        drift_mag += mu_p.abs();
        flux.push(mu_p - 0.5 * dm);
    }
    let mean = flux.iter().sum::<f64>() / n as f64;
    let var = flux.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n as f64;
    var.sqrt() / mean.abs().max(drift_mag / n as f64)
}

/// The rotational-noise density formula, evaluated as written, with a flag
/// telling whether it is periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct VerbatimDensity {
    pub density: PhaseDensity,
    /// `|p(2 pi) - p(0)| / max p` after normalization.
    pub periodicity_gap: f64,
    pub periodic: bool,
}

/// `g(t) = exp(((a21 - a12 - alpha beta) t + (a11 - a22) cos 2t / 2
/// + (a21 - a12) sin 2t / 2) / beta^2) / beta^2` on `[0, 2 pi]`, normalized.
///
/// Only periodic when `a21 - a12 = alpha beta`; callers should prefer the
/// closed-form or grid density whenever `periodic` is false.
pub fn rotational_density_verbatim(
    a: &Mat2,
    alpha: f64,
    beta: f64,
    grid_n: usize,
) -> Result<VerbatimDensity> {
    let opts = DensityOptions::with_grid_n(grid_n);
    opts.validate()?;
    if beta == 0.0 || !beta.is_finite() || !alpha.is_finite() {
        return Err(Error::Domain(format!("beta must be non-zero, got {beta}")));
    }
    let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let b2 = beta * beta;
    let theta = opts.nodes();
    let expo: Vec<f64> = theta
        .iter()
        .map(|&t| {
            ((a21 - a12 - alpha * beta) * t
                + 0.5 * (a11 - a22) * (2.0 * t).cos()
                + 0.5 * (a21 - a12) * (2.0 * t).sin())
                / b2
        })
        .collect();
    let top = expo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p = expo.iter().map(|e| (e - top).exp() / b2).collect();
    let density = PhaseDensity {
        theta,
        p,
        period: Period::Full,
        method: DensityMethod::RotationalVerbatim,
    }
    .normalized()?;
    let periodicity_gap = density.endpoint_gap();
    Ok(VerbatimDensity {
        periodic: periodicity_gap <= 1e-6,
        density,
        periodicity_gap,
    })
}

/// Exponent for `B = [[alpha, -beta], [beta, alpha]]` from the `cos 2t` and
/// `sin 2t` moments of a density:
/// `(a11 + a22 + beta^2 - alpha^2)/2 + (a11 - a22) D2/2 + (a21 + a12) E2/2`.
pub fn rotational_lambda(a: &Mat2, alpha: f64, beta: f64, p: &PhaseDensity) -> f64 {
    let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    // the moments are pi-periodic, so a projective density gives the same values
    let d2 = p.integrate(|t| (2.0 * t).cos());
    let e2 = p.integrate(|t| (2.0 * t).sin());
    0.5 * (a11 + a22 + beta * beta - alpha * alpha)
        + 0.5 * (a11 - a22) * d2
        + 0.5 * (a21 + a12) * e2
}
