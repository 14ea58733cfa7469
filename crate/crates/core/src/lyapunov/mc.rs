//! Monte-Carlo estimate of the top exponent from the growth of `log |u|`.
//!
//! Paths are advanced with a one-step Magnus exponential of the Stratonovich
//! form `du = C u dt + B u o dW`, `C = A - B^2/2`:
//!
//! ```text
//! u <- exp(C h + B dW + [C, B] h dV / (2 sqrt 3)) u
//! ```
//!
//! where `dV ~ N(0, h)` is independent of `dW` and samples the time integral
//! of the Brownian path exactly. The radius is renormalized as the path runs
//! and the logarithms are summed. The first part of every path is discarded
//! so the angle forgets its initial value, and Richardson extrapolation
//! `2 lambda(h) - lambda(2h)` over a coupled coarse path removes the leading
//! step-size bias, which is noticeable on strongly sheared systems.
//!
//! Two-Wiener systems use `B_1 dW_1 + B_2 dW_2` with `B_i` the `i`-th row of
//! `B`; the Levy area between the two processes is dropped.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::density::{DensityMethod, Period, PhaseDensity};
use super::{Diagnostics, LyapunovMethod, LyapunovResult};
use crate::error::{Error, Result};
use crate::linalg::{commutator, expm2_split, Mat2, Vec2};
use crate::linearize::{LinearSde, NoiseKind};
use crate::simulate::RngState;

const INV_2_SQRT3: f64 = 0.288_675_134_594_812_9;
/// Fine steps between radius renormalizations.
const RENORM_EVERY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub h: f64,
    pub horizon: f64,
    pub paths: usize,
    /// Fraction of the horizon discarded before averaging.
    pub burn_in: f64,
    /// Richardson extrapolation against a coupled path with step `2h`.
    pub extrapolate: bool,
    pub initial_radius: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            horizon: 50.0,
            paths: 10_000,
            burn_in: 0.1,
            extrapolate: true,
            initial_radius: 1.0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Domain("at least one path is required".into()));
        }
        if !(self.h > 0.0
            && self.horizon > self.h
            && self.h.is_finite()
            && self.horizon.is_finite())
        {
            return Err(Error::Domain(format!(
                "need 0 < h < horizon, got h = {}, horizon = {}",
                self.h, self.horizon
            )));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::Domain(format!(
                "burn-in fraction must be in [0, 1), got {}",
                self.burn_in
            )));
        }
        if !(self.initial_radius > 0.0 && self.initial_radius.is_finite()) {
            return Err(Error::Domain("initial radius must be positive".into()));
        }
        Ok(())
    }

    /// Total and discarded step counts, both even so coarse steps line up.
    fn step_counts(&self) -> (usize, usize) {
        let total = ((self.horizon / self.h).round() as usize).max(2) & !1;
        let burn = ((self.burn_in * total as f64).round() as usize) & !1;
        (total, burn.min(total - 2))
    }
}

/// Brownian data of one step: increments and the independent normals that
/// sample the time integral of each Wiener process.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Draw {
    dw: [f64; 2],
    dv: [f64; 2],
}

/// Magnus integrator for a linear system.
#[derive(Debug, Clone)]
pub(crate) struct MagnusStepper {
    c: Mat2,
    b: [Mat2; 2],
    k: [Mat2; 2],
    noises: usize,
}

impl MagnusStepper {
    pub(crate) fn new(sys: &LinearSde) -> Self {
        let (b, noises) = match sys.noise {
            NoiseKind::OneWiener => ([sys.b, Mat2::zeros()], 1),
            NoiseKind::TwoWiener => {
                let mut b1 = Mat2::zeros();
                let mut b2 = Mat2::zeros();
                b1.set_row(0, &sys.b.row(0));
                b2.set_row(1, &sys.b.row(1));
                ([b1, b2], 2)
            }
        };
        let c = sys.a - 0.5 * (b[0] * b[0] + b[1] * b[1]);
        let k = [commutator(&c, &b[0]), commutator(&c, &b[1])];
        Self { c, b, k, noises }
    }

    #[inline]
    pub(crate) fn draw(&self, rng: &mut RngState, sqrt_h: f64) -> Draw {
        let mut d = Draw::default();
        for j in 0..self.noises {
            let (z1, z2) = rng.gauss_pair();
            d.dw[j] = sqrt_h * z1;
            d.dv[j] = sqrt_h * z2;
        }
        d
    }

    #[inline]
    pub(crate) fn omega(&self, d: &Draw, h: f64) -> Mat2 {
        let mut m = self.c * h;
        for j in 0..self.noises {
            m += self.b[j] * d.dw[j] + self.k[j] * (h * d.dv[j] * INV_2_SQRT3);
        }
        m
    }

    /// Exponent over two consecutive steps of size `h` from their draws.
    #[inline]
    pub(crate) fn omega_coarse(&self, a: &Draw, b: &Draw, h: f64) -> Mat2 {
        let mut m = self.c * (2.0 * h);
        for j in 0..self.noises {
            let dw = a.dw[j] + b.dw[j];
            // time integrals of W over each step, then over both
            let ia = 0.5 * h * (a.dw[j] + a.dv[j] * 2.0 * INV_2_SQRT3);
            let ib = 0.5 * h * (b.dw[j] + b.dv[j] * 2.0 * INV_2_SQRT3);
            let i10 = ia + ib + h * a.dw[j];
            m += self.b[j] * dw + self.k[j] * (0.5 * (2.0 * i10 - 2.0 * h * dw));
        }
        m
    }
}

/// A unit vector together with the accumulated log of its dropped norm.
#[derive(Debug, Clone, Copy)]
struct Radial {
    u: Vec2,
    log_r: f64,
}

impl Radial {
    fn new(u: Vec2) -> Self {
        let mut r = Self { u, log_r: 0.0 };
        r.renormalize();
        r.log_r = 0.0;
        r
    }

    #[inline]
    fn apply(&mut self, omega: &Mat2) {
        let (t, m) = expm2_split(omega);
        self.u = m * self.u;
        self.log_r += t;
    }

    #[inline]
    fn renormalize(&mut self) {
        let n = self.u.norm();
        self.log_r += n.ln();
        self.u /= n;
    }
}

fn initial_direction(rng: &mut RngState, radius: f64) -> Vec2 {
    let (s, c) = (TAU * rng.uniform()).sin_cos();
    Vec2::new(radius * c, radius * s)
}

/// Per-path exponent estimates, in path order.
pub fn lyapunov_mc_samples(sys: &LinearSde, cfg: &McConfig, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let stepper = MagnusStepper::new(sys);
    let (total, burn) = cfg.step_counts();
    let h = cfg.h;
    let sqrt_h = h.sqrt();
    let span = (total - burn) as f64 * h;
    let samples = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = RngState::with_stream(seed, path);
            let u0 = initial_direction(&mut rng, cfg.initial_radius);
            let mut fine = Radial::new(u0);
            let mut coarse = fine;
            let mut prev = Draw::default();
            for n in 0..total {
                if n == burn {
                    fine.renormalize();
                    fine.log_r = 0.0;
                    coarse.renormalize();
                    coarse.log_r = 0.0;
                }
                let d = stepper.draw(&mut rng, sqrt_h);
                fine.apply(&stepper.omega(&d, h));
                if cfg.extrapolate {
                    if n % 2 == 1 {
                        coarse.apply(&stepper.omega_coarse(&prev, &d, h));
                    } else {
                        prev = d;
                    }
                }
                if n % RENORM_EVERY == RENORM_EVERY - 1 {
                    fine.renormalize();
                    if cfg.extrapolate {
                        coarse.renormalize();
                    }
                }
            }
            fine.renormalize();
            let lf = fine.log_r / span;
            if cfg.extrapolate {
                coarse.renormalize();
                2.0 * lf - coarse.log_r / span
            } else {
                lf
            }
        })
        .collect();
    Ok(samples)
}

/// Mean of the per-path estimates with its standard error.
pub fn lyapunov_mc(sys: &LinearSde, cfg: &McConfig, seed: u64) -> Result<LyapunovResult> {
    let samples = lyapunov_mc_samples(sys, cfg, seed)?;
    let (mean, se) = mean_and_se(&samples);
    if !mean.is_finite() {
        return Err(Error::Numerical(
            "Monte-Carlo exponent is not finite".into(),
        ));
    }
    Ok(LyapunovResult {
        lambda: mean,
        method: LyapunovMethod::MonteCarlo,
        diagnostics: Diagnostics {
            paths: Some(cfg.paths),
            std_error: Some(se),
            step: Some(cfg.h),
            horizon: Some(cfg.horizon),
            ..Diagnostics::default()
        },
    })
}

pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Histogram of the angle over all paths after burn-in, on `bins` cells of
/// the chosen period. Nodes sit at cell centers.
pub fn angle_histogram(
    sys: &LinearSde,
    cfg: &McConfig,
    bins: usize,
    period: Period,
    seed: u64,
) -> Result<PhaseDensity> {
    cfg.validate()?;
    if bins < 8 {
        return Err(Error::Domain(format!("need at least 8 bins, got {bins}")));
    }
    let stepper = MagnusStepper::new(sys);
    let (total, burn) = cfg.step_counts();
    let sqrt_h = cfg.h.sqrt();
    let len = period.length();
    let counts = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = RngState::with_stream(seed, path);
            let mut r = Radial::new(initial_direction(&mut rng, 1.0));
            let mut counts = vec![0u64; bins];
            for n in 0..total {
                let d = stepper.draw(&mut rng, sqrt_h);
                r.apply(&stepper.omega(&d, cfg.h));
                r.renormalize();
                if n >= burn {
                    let t = r.u.y.atan2(r.u.x).rem_euclid(len);
                    counts[((t / len * bins as f64) as usize).min(bins - 1)] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let width = len / bins as f64;
    let total_count: u64 = counts.iter().sum();
    let mut p: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (total_count as f64 * width))
        .collect();
    p.push(p[0]);
    let theta = (0..=bins).map(|i| (i as f64 + 0.5) * width).collect();
    Ok(PhaseDensity {
        theta,
        p,
        period,
        method: DensityMethod::Histogram,
    })
}
