//! Top Lyapunov exponent of `du = A u dt + B u dW`.
//!
//! Three estimators are available: the closed-form stationary angle density,
//! a backward-difference grid scheme for the same density, and Monte-Carlo
//! averaging of `log |u|`. [`lyapunov`] picks between them and falls back to
//! Monte-Carlo when the angular diffusion vanishes somewhere.

pub mod angular;
pub mod density;
pub mod mc;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::spectral_abscissa;
use crate::linearize::{LinearSde, NoiseKind};

pub use angular::{angular_coeffs, AngularCoefficients, AngularSample};
pub use density::{
    flux_residual, lyapunov_from_density, rotational_density_verbatim, rotational_lambda,
    stationary_density_closed, stationary_density_closed_with, stationary_density_grid,
    stationary_density_grid_with, DensityMethod, DensityOptions, FluxForm, Period, PhaseDensity,
    VerbatimDensity, DEFAULT_GRID_N,
};
pub use mc::{angle_histogram, lyapunov_mc, lyapunov_mc_samples, McConfig};
pub use sweep::{alpha_grid, sign_changes, sweep_alpha, Sweep, SweepRow};

/// How an exponent was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovMethod {
    ClosedForm,
    Grid,
    MonteCarlo,
    DeterministicEig,
}

impl LyapunovMethod {
    pub fn name(self) -> &'static str {
        match self {
            LyapunovMethod::ClosedForm => "closed_form",
            LyapunovMethod::Grid => "grid",
            LyapunovMethod::MonteCarlo => "monte_carlo",
            LyapunovMethod::DeterministicEig => "deterministic_eig",
        }
    }
}

impl fmt::Display for LyapunovMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The estimator a caller asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Closed form for one-Wiener noise, Monte-Carlo otherwise.
    #[default]
    Auto,
    ClosedForm,
    Grid,
    MonteCarlo,
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "closed_form" | "closed" => Ok(MethodChoice::ClosedForm),
            "grid" => Ok(MethodChoice::Grid),
            "monte_carlo" | "mc" => Ok(MethodChoice::MonteCarlo),
            other => Err(Error::Domain(format!("unknown Lyapunov method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub grid_n: Option<usize>,
    pub paths: Option<usize>,
    pub std_error: Option<f64>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    /// Set when the requested method was replaced by another one.
    pub note: Option<String>,
}

impl fmt::Display for Diagnostics {
    /// Space-separated `key=value` pairs, free of commas.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(n) = self.grid_n {
            parts.push(format!("N={n}"));
        }
        if let Some(p) = self.paths {
            parts.push(format!("paths={p}"));
        }
        if let Some(se) = self.std_error {
            parts.push(format!("se={se:.3e}"));
        }
        if let Some(h) = self.step {
            parts.push(format!("h={h}"));
        }
        if let Some(t) = self.horizon {
            parts.push(format!("T={t}"));
        }
        if let Some(n) = &self.note {
            parts.push(format!("note={}", n.replace([',', ' '], "_")));
        }
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovResult {
    pub lambda: f64,
    pub method: LyapunovMethod,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LyapunovOptions {
    pub density: DensityOptions,
    pub mc: McConfig,
    pub seed: u64,
}

/// Noise-free exponent: the largest real part of the eigenvalues of `A`.
pub fn deterministic_eig(sys: &LinearSde) -> LyapunovResult {
    LyapunovResult {
        lambda: spectral_abscissa(&sys.a),
        method: LyapunovMethod::DeterministicEig,
        diagnostics: Diagnostics::default(),
    }
}

/// Estimate the exponent with the requested method.
///
/// `B = 0` always yields [`deterministic_eig`]. Density methods need
/// one-Wiener noise; an explicit request on a two-Wiener system is an error,
/// while `Auto` goes to Monte-Carlo. A density method that meets vanishing
/// angular diffusion falls back to Monte-Carlo with a warning.
pub fn lyapunov(
    sys: &LinearSde,
    choice: MethodChoice,
    opts: &LyapunovOptions,
) -> Result<LyapunovResult> {
    if sys.is_deterministic() {
        return Ok(deterministic_eig(sys));
    }
    let density_method = match (choice, sys.noise) {
        (MethodChoice::MonteCarlo, _) | (MethodChoice::Auto, NoiseKind::TwoWiener) => None,
        (MethodChoice::Auto | MethodChoice::ClosedForm, NoiseKind::OneWiener) => Some(false),
        (MethodChoice::Grid, NoiseKind::OneWiener) => Some(true),
        (_, NoiseKind::TwoWiener) => return Err(Error::UnsupportedNoise),
    };
    let Some(grid) = density_method else {
        return lyapunov_mc(sys, &opts.mc, opts.seed);
    };
    let q = angular_coeffs(sys)?;
    let density = if grid {
        stationary_density_grid_with(&q, &opts.density)
    } else {
        stationary_density_closed_with(&q, &opts.density)
    };
    match density {
        Ok(p) => Ok(lyapunov_from_density(&q, &p)),
        Err(Error::DegenerateDiffusion { min_q4 }) => {
            warn!("angular diffusion vanishes (min |q4| = {min_q4:.3e}); using Monte-Carlo");
            let mut r = lyapunov_mc(sys, &opts.mc, opts.seed)?;
            r.diagnostics.note = Some(format!(
                "fallback from degenerate diffusion min|q4|={min_q4:.3e}"
            ));
            Ok(r)
        }
        Err(e) => Err(e),
    }
}
