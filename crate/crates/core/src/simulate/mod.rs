//! Trajectory integration with the Euler scheme and the second-order Euler
//! scheme.
//!
//! Both schemes are written per component `i`:
//!
//! ```text
//! euler   x_i' = x_i + f_i h + g_i G_i
//! euler2  x_i' = euler + g_i d_i g_i (G_i^2 - h)/2
//!                + [f_i d_i f_i + g_i^2 d_ii f_i / 2] h^2/2
//!                + [g_i d_i f_i + f_i d_i g_i + g_i^2 d_ii g_i / 2] h G_i/2
//! ```
//!
//! where `d_i` differentiates with respect to the component's own coordinate
//! only. [`Scheme::Euler2Cross`] replaces the own-component derivatives with
//! the full generator terms (simplified weak order-2 Taylor scheme) for
//! comparison.
//!
//! One-Wiener systems draw a single increment per step shared by both
//! components; two-Wiener systems draw an independent pair.

pub mod rng;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::linearize::{LinearSde, NoiseKind, NoiseSpec};
use crate::models::ModelDefinition;

pub use rng::{box_muller, RngState, GENERATOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Euler2,
    /// Euler2 with cross-partial generator terms. The Levy-area correction
    /// between distinct Wiener processes is omitted.
    Euler2Cross,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Euler2 => "euler2",
            Scheme::Euler2Cross => "euler2-cross",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "euler2" => Ok(Scheme::Euler2),
            "euler2-cross" => Ok(Scheme::Euler2Cross),
            other => Err(Error::Domain(format!("unknown scheme `{other}`"))),
        }
    }
}

/// A 2-D Ito system `dx = f(x) dt + g(x) dW` with the derivative data the
/// schemes need.
pub trait SdeSystem: Sync {
    fn noise(&self) -> NoiseKind;
    fn drift(&self, s: Vec2) -> Vec2;
    fn drift_jacobian(&self, s: Vec2) -> Mat2;
    fn diffusion(&self, s: Vec2) -> Vec2;
    fn diffusion_jacobian(&self, s: Vec2) -> Mat2;

    /// Hessians of `f_1`, `f_2`. Central differences of the Jacobian unless
    /// overridden.
    fn drift_hessians(&self, s: Vec2) -> [Mat2; 2] {
        fd_hessians(|p| self.drift_jacobian(p), s)
    }

    fn diffusion_hessians(&self, s: Vec2) -> [Mat2; 2] {
        fd_hessians(|p| self.diffusion_jacobian(p), s)
    }
}

fn fd_hessians(jac: impl Fn(Vec2) -> Mat2, s: Vec2) -> [Mat2; 2] {
    let mut hs = [Mat2::zeros(); 2];
    for c in 0..2 {
        let h = 1e-5 * (1.0 + s[c].abs());
        let mut sp = s;
        let mut sm = s;
        sp[c] += h;
        sm[c] -= h;
        let d = (jac(sp) - jac(sm)) / (2.0 * h);
        for (i, hi) in hs.iter_mut().enumerate() {
            for r in 0..2 {
                hi[(r, c)] = d[(i, r)];
            }
        }
    }
    hs
}

/// A registered model with affine volatility anchored at an equilibrium, or
/// the plain ODE when `noise` is `None`.
#[derive(Debug, Clone)]
pub struct ModelSystem {
    pub model: ModelDefinition,
    pub noise: Option<NoiseSpec>,
    pub kind: NoiseKind,
}

impl ModelSystem {
    pub fn new(model: ModelDefinition, noise: NoiseSpec, kind: NoiseKind) -> Self {
        Self {
            model,
            noise: Some(noise),
            kind,
        }
    }

    pub fn deterministic(model: ModelDefinition) -> Self {
        Self {
            model,
            noise: None,
            kind: NoiseKind::OneWiener,
        }
    }
}

impl SdeSystem for ModelSystem {
    fn noise(&self) -> NoiseKind {
        self.kind
    }

    fn drift(&self, s: Vec2) -> Vec2 {
        self.model.drift(s)
    }

    fn drift_jacobian(&self, s: Vec2) -> Mat2 {
        self.model.jacobian(s)
    }

    fn drift_hessians(&self, s: Vec2) -> [Mat2; 2] {
        self.model.hessians(s)
    }

    fn diffusion(&self, s: Vec2) -> Vec2 {
        self.noise.map_or(Vec2::zeros(), |n| n.volatility(s))
    }

    fn diffusion_jacobian(&self, _s: Vec2) -> Mat2 {
        self.noise.map_or(Mat2::zeros(), |n| n.slopes)
    }

    fn diffusion_hessians(&self, _s: Vec2) -> [Mat2; 2] {
        [Mat2::zeros(); 2]
    }
}

impl SdeSystem for LinearSde {
    fn noise(&self) -> NoiseKind {
        self.noise
    }

    fn drift(&self, s: Vec2) -> Vec2 {
        self.a * s
    }

    fn drift_jacobian(&self, _s: Vec2) -> Mat2 {
        self.a
    }

    fn drift_hessians(&self, _s: Vec2) -> [Mat2; 2] {
        [Mat2::zeros(); 2]
    }

    fn diffusion(&self, s: Vec2) -> Vec2 {
        self.b * s
    }

    fn diffusion_jacobian(&self, _s: Vec2) -> Mat2 {
        self.b
    }

    fn diffusion_hessians(&self, _s: Vec2) -> [Mat2; 2] {
        [Mat2::zeros(); 2]
    }
}

/// Euler step. `dw[i]` is the Wiener increment seen by component `i`
/// (both entries equal for one-Wiener systems).
#[inline]
pub fn step_euler<S: SdeSystem + ?Sized>(sys: &S, s: Vec2, h: f64, dw: Vec2) -> Vec2 {
    let f = sys.drift(s);
    let g = sys.diffusion(s);
    Vec2::new(s.x + f.x * h + g.x * dw.x, s.y + f.y * h + g.y * dw.y)
}

/// Second-order Euler step with own-component derivatives.
pub fn step_euler2<S: SdeSystem + ?Sized>(sys: &S, s: Vec2, h: f64, dw: Vec2) -> Vec2 {
    let f = sys.drift(s);
    let g = sys.diffusion(s);
    let jf = sys.drift_jacobian(s);
    let jg = sys.diffusion_jacobian(s);
    let hf = sys.drift_hessians(s);
    let hg = sys.diffusion_hessians(s);
    let mut out = s;
    for i in 0..2 {
        let gi = g[i];
        let fi = f[i];
        let df = jf[(i, i)];
        let dg = jg[(i, i)];
        let ddf = hf[i][(i, i)];
        let ddg = hg[i][(i, i)];
        let w = dw[i];
        out[i] = s[i]
            + fi * h
            + gi * w
            + gi * dg * (w * w - h) / 2.0
            + (fi * df + 0.5 * gi * gi * ddf) * h * h / 2.0
            + (gi * df + fi * dg + 0.5 * gi * gi * ddg) * h * w / 2.0;
    }
    out
}

/// Simplified weak order-2 Taylor step with the full generator terms.
pub fn step_euler2_cross<S: SdeSystem + ?Sized>(sys: &S, s: Vec2, h: f64, dw: Vec2) -> Vec2 {
    let f = sys.drift(s);
    let g = sys.diffusion(s);
    let jf = sys.drift_jacobian(s);
    let jg = sys.diffusion_jacobian(s);
    let hf = sys.drift_hessians(s);
    let hg = sys.diffusion_hessians(s);
    // noise correlation between the components' Wiener processes
    let rho = |k: usize, l: usize| match sys.noise() {
        NoiseKind::OneWiener => 1.0,
        NoiseKind::TwoWiener => f64::from(u8::from(k == l)),
    };
    // second-order generator part: 1/2 sum_kl g_k g_l rho_kl d_kl
    let second = |hess: &Mat2| {
        let mut acc = 0.0;
        for k in 0..2 {
            for l in 0..2 {
                acc += g[k] * g[l] * rho(k, l) * hess[(k, l)];
            }
        }
        0.5 * acc
    };
    let mut out = s;
    for i in 0..2 {
        let mut milstein = 0.0;
        let mut mixed_drift = 0.0;
        for j in 0..2 {
            milstein += g[j] * jg[(i, j)] * (dw[j] * dw[i] - rho(j, i) * h);
            mixed_drift += g[j] * jf[(i, j)] * dw[j];
        }
        let l0_f = f[0] * jf[(i, 0)] + f[1] * jf[(i, 1)] + second(&hf[i]);
        let l0_g = f[0] * jg[(i, 0)] + f[1] * jg[(i, 1)] + second(&hg[i]);
        out[i] = s[i]
            + f[i] * h
            + g[i] * dw[i]
            + 0.5 * milstein
            + 0.5 * l0_f * h * h
            + 0.5 * (mixed_drift + l0_g * dw[i]) * h;
    }
    out
}

#[inline]
pub fn step<S: SdeSystem + ?Sized>(scheme: Scheme, sys: &S, s: Vec2, h: f64, dw: Vec2) -> Vec2 {
    match scheme {
        Scheme::Euler => step_euler(sys, s, h, dw),
        Scheme::Euler2 => step_euler2(sys, s, h, dw),
        Scheme::Euler2Cross => step_euler2_cross(sys, s, h, dw),
    }
}

/// Draw the per-component Wiener increments for one step.
#[inline]
pub fn increments(noise: NoiseKind, rng: &mut RngState, sqrt_h: f64) -> Vec2 {
    match noise {
        NoiseKind::OneWiener => {
            let g = sqrt_h * rng.gauss();
            Vec2::new(g, g)
        }
        NoiseKind::TwoWiener => {
            let (z1, z2) = rng.gauss_pair();
            Vec2::new(sqrt_h * z1, sqrt_h * z2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub h: f64,
    pub steps: usize,
    pub initial_state: Vec2,
    pub scheme: Scheme,
}

impl SimConfig {
    pub const DEFAULT_H: f64 = 0.01;
    pub const DEFAULT_STEPS: usize = 5000;

    pub fn new(h: f64, steps: usize, initial_state: Vec2, scheme: Scheme) -> Result<Self> {
        let cfg = Self {
            h,
            steps,
            initial_state,
            scheme,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Domain(format!(
                "step size must be > 0, got {}",
                self.h
            )));
        }
        if !self.initial_state.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("initial state is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec2>,
    pub seed: u64,
    pub scheme: Scheme,
    pub generator: &'static str,
    /// Index of the first non-finite state; the trajectory stops before it.
    pub blow_up: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Vec2 {
        *self
            .states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// CSV with header `n,t,x,y`; 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,t,x,y")?;
        for (n, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            writeln!(w, "{n},{t:.16e},{:.16e},{:.16e}", s.x, s.y)?;
        }
        Ok(())
    }
}

/// Integrate `sys` from `cfg.initial_state` for `cfg.steps` steps. `steps = 0`
/// yields the initial state only.
pub fn simulate<S: SdeSystem + ?Sized>(sys: &S, cfg: &SimConfig, seed: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let mut rng = RngState::new(seed);
    let sqrt_h = cfg.h.sqrt();
    let mut times = Vec::with_capacity(cfg.steps + 1);
    let mut states = Vec::with_capacity(cfg.steps + 1);
    times.push(0.0);
    states.push(cfg.initial_state);
    let mut s = cfg.initial_state;
    let mut blow_up = None;
    for n in 1..=cfg.steps {
        let dw = increments(sys.noise(), &mut rng, sqrt_h);
        s = step(cfg.scheme, sys, s, cfg.h, dw);
        if !(s.x.is_finite() && s.y.is_finite()) {
            blow_up = Some(n);
            break;
        }
        times.push(n as f64 * cfg.h);
        states.push(s);
    }
    Ok(Trajectory {
        times,
        states,
        seed,
        scheme: cfg.scheme,
        generator: GENERATOR,
        blow_up,
    })
}
