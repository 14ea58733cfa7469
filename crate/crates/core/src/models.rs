//! Deterministic tumor-immune vector fields.
//!
//! Two models carry closed-form equilibria:
//!
//! * Kuznetsov-Taylor (`x` effector cells, `y` tumor cells)
//!   ```text
//!   x' = a1 - a2 x + a3 x y
//!   y' = b1 y (1 - b2 y) - x y
//!   ```
//! * Bell (`x` tumor cells, `y` effector cells)
//!   ```text
//!   x' = x (a1 - a2 y)
//!   y' = (b1 x - b3) y - b2 x + b4
//!   ```
//!
//! The remaining registered variants instantiate the general family
//! `x' = x (h1(x) - h2(x) y)`, `y' = (h3(x) - h4(x)) y + h5(x)` with the
//! literal h-function table. They are experimental: no reference values exist
//! for them and their equilibria come from a multi-start Newton search.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Accepted equilibria must satisfy `max |f_i| <= RESIDUAL_TOL`.
pub const RESIDUAL_TOL: f64 = 1e-9;

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_STEP_TOL: f64 = 1e-12;
/// Refinement of a closed-form equilibrium may move it at most this much
/// (relative to `max(1, |state|)`).
const REFINE_MOVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    KuznetsovTaylor,
    Bell,
    Volterra,
    Stepanova,
    VladarGonzalez,
    Exponential,
    Logistic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::KuznetsovTaylor,
        ModelKind::Bell,
        ModelKind::Volterra,
        ModelKind::Stepanova,
        ModelKind::VladarGonzalez,
        ModelKind::Exponential,
        ModelKind::Logistic,
    ];

    /// Registry name.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::KuznetsovTaylor => "kuznetsov-taylor",
            ModelKind::Bell => "bell",
            ModelKind::Volterra => "volterra",
            ModelKind::Stepanova => "stepanova",
            ModelKind::VladarGonzalez => "vladar-gonzalez",
            ModelKind::Exponential => "exponential",
            ModelKind::Logistic => "logistic",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))
    }

    /// Parameter names in storage order.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::KuznetsovTaylor => &["a1", "a2", "a3", "b1", "b2"],
            ModelKind::Bell => &["a1", "a2", "b1", "b2", "b3", "b4"],
            ModelKind::Volterra => &["a1", "a2", "b1", "b2", "b3"],
            ModelKind::Stepanova => &["a1", "b", "b1", "b2", "b4"],
            ModelKind::VladarGonzalez => &["K", "b1", "b2", "b3"],
            ModelKind::Exponential => &["b1", "b2", "b3"],
            ModelKind::Logistic => &["a1", "b1", "b2", "b3"],
        }
    }

    /// Default parameter values. For Kuznetsov-Taylor and Bell these are the
    /// reference parameter sets; the experimental variants get unit rates.
    pub fn default_values(self) -> &'static [f64] {
        match self {
            ModelKind::KuznetsovTaylor => &[0.1181, 0.3747, 0.01184, 1.636, 0.002],
            ModelKind::Bell => &[2.5, 1.0, 1.0, 0.4, 0.95, 2.0],
            ModelKind::Volterra => &[1.0, 1.0, 1.0, 1.0, 1.0],
            ModelKind::Stepanova => &[1.0, 1.0, 1.0, 1.0, 1.0],
            ModelKind::VladarGonzalez => &[10.0, 1.0, 1.0, 1.0],
            ModelKind::Exponential => &[1.0, 1.0, 1.0],
            ModelKind::Logistic => &[1.0, 1.0, 1.0, 1.0],
        }
    }

    pub fn is_experimental(self) -> bool {
        !matches!(self, ModelKind::KuznetsovTaylor | ModelKind::Bell)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named scalar parameter record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParameters(BTreeMap<String, f64>);

impl ModelParameters {
    pub fn defaults(kind: ModelKind) -> Self {
        Self(
            kind.parameter_names()
                .iter()
                .zip(kind.default_values())
                .map(|(n, v)| (n.to_string(), *v))
                .collect(),
        )
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl FromIterator<(String, f64)> for ModelParameters {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumLabel {
    P1,
    P2,
    Numeric(usize),
}

impl fmt::Display for EquilibriumLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriumLabel::P1 => f.write_str("P1"),
            EquilibriumLabel::P2 => f.write_str("P2"),
            EquilibriumLabel::Numeric(i) => write!(f, "E{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumMethod {
    /// Closed form, unchanged by Newton refinement.
    ClosedForm,
    /// Moved (by at most round-off for closed forms) during Newton refinement.
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub state: Vec2,
    /// `max |f_i(state)|`.
    pub residual: f64,
    pub label: EquilibriumLabel,
    pub method: EquilibriumMethod,
}

/// Outcome of the equilibrium search, including equilibria that do not exist
/// for the given parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub equilibria: Vec<Equilibrium>,
    /// `(label, reason)` for closed-form equilibria reported absent.
    pub absent: Vec<(EquilibriumLabel, String)>,
}

impl EquilibriumReport {
    pub fn get(&self, label: EquilibriumLabel) -> Option<&Equilibrium> {
        self.equilibria.iter().find(|e| e.label == label)
    }
}

/// A named 2-D drift field with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDefinition {
    kind: ModelKind,
    params: ModelParameters,
    p: [f64; 6],
}

impl ModelDefinition {
    pub fn new(kind: ModelKind, params: ModelParameters) -> Result<Self> {
        let mut p = [0.0; 6];
        for (slot, name) in p.iter_mut().zip(kind.parameter_names()) {
            let v = params.get(name).ok_or_else(|| Error::InvalidParameter {
                name: name.to_string(),
                reason: "missing".into(),
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: name.to_string(),
                    reason: format!("not finite ({v})"),
                });
            }
            *slot = v;
        }
        if let Some((name, _)) = params
            .iter()
            .find(|(n, _)| !kind.parameter_names().contains(n))
        {
            return Err(Error::InvalidParameter {
                name: name.to_string(),
                reason: format!("not a parameter of {kind}"),
            });
        }
        let def = Self { kind, params, p };
        def.check_positivity()?;
        Ok(def)
    }

    pub fn with_defaults(kind: ModelKind) -> Self {
        Self::new(kind, ModelParameters::defaults(kind)).expect("default parameters are valid")
    }

    /// Registry lookup with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(Self::with_defaults(ModelKind::from_name(name)?))
    }

    /// Copy with one parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.set(name, value);
        Self::new(self.kind, params)
    }

    fn check_positivity(&self) -> Result<()> {
        let positive: &[&str] = match self.kind {
            ModelKind::KuznetsovTaylor => &["a2", "b1", "b2"],
            ModelKind::Bell => &["a2", "b3"],
            ModelKind::VladarGonzalez => &["K"],
            _ => &[],
        };
        for name in positive {
            let v = self.params.get(name).unwrap_or(0.0);
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: name.to_string(),
                    reason: format!("must be > 0, got {v}"),
                });
            }
        }
        if self.kind == ModelKind::KuznetsovTaylor && self.p[2] < 0.0 {
            return Err(Error::InvalidParameter {
                name: "a3".into(),
                reason: format!("immune response must be >= 0, got {}", self.p[2]),
            });
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    /// Parameter by name; panics on names outside the model's list.
    pub fn param(&self, name: &str) -> f64 {
        let idx = self
            .kind
            .parameter_names()
            .iter()
            .position(|n| *n == name)
            .unwrap_or_else(|| panic!("{name} is not a parameter of {}", self.kind));
        self.p[idx]
    }

    /// Drift `(f1, f2)` at `state`.
    pub fn eval_drift(&self, state: Vec2) -> Result<Vec2> {
        check_finite(state)?;
        let f = self.drift(state);
        if f.iter().all(|v| v.is_finite()) {
            Ok(f)
        } else {
            Err(Error::Domain(format!(
                "{} drift is not finite at ({}, {})",
                self.kind, state.x, state.y
            )))
        }
    }

    /// Unchecked drift for inner loops.
    #[inline]
    pub fn drift(&self, s: Vec2) -> Vec2 {
        let p = &self.p;
        let (x, y) = (s.x, s.y);
        match self.kind {
            ModelKind::KuznetsovTaylor => {
                let [a1, a2, a3, b1, b2, _] = *p;
                Vec2::new(a1 - a2 * x + a3 * x * y, b1 * y * (1.0 - b2 * y) - x * y)
            }
            ModelKind::Bell => {
                let [a1, a2, b1, b2, b3, b4] = *p;
                Vec2::new(x * (a1 - a2 * y), (b1 * x - b3) * y - b2 * x + b4)
            }
            ModelKind::Volterra => {
                let [a1, a2, b1, b2, b3, _] = *p;
                Vec2::new(x * (a1 - a2 * x * y), (b3 * x - b2) * y - b1 * x)
            }
            ModelKind::Stepanova => {
                let [a1, b, b1, b2, b4, _] = *p;
                Vec2::new(x * (a1 - y), (b1 * x - b) * y - b2 * x + b4)
            }
            ModelKind::VladarGonzalez => {
                let [k, b1, b2, b3, _, _] = *p;
                Vec2::new(
                    x * ((k / x).ln() - y),
                    (b1 * x - (b2 + b3 * x * x)) * y + 1.0,
                )
            }
            ModelKind::Exponential => {
                let [b1, b2, b3, _, _, _] = *p;
                Vec2::new(x * (1.0 - y), (b1 * x - (b2 + b3 * x * x)) * y + 1.0)
            }
            ModelKind::Logistic => {
                let [a1, b1, b2, b3, _, _] = *p;
                Vec2::new(x - a1 - x * y, (b1 * x - (b2 + b3 * x * x)) * y + 1.0)
            }
        }
    }

    /// Analytic Jacobian `J[i][j] = df_i/dx_j`.
    pub fn jacobian_at(&self, state: Vec2) -> Result<Mat2> {
        check_finite(state)?;
        Ok(self.jacobian(state))
    }

    #[inline]
    pub fn jacobian(&self, s: Vec2) -> Mat2 {
        let p = &self.p;
        let (x, y) = (s.x, s.y);
        match self.kind {
            ModelKind::KuznetsovTaylor => {
                let [_, a2, a3, b1, b2, _] = *p;
                Mat2::new(-a2 + a3 * y, a3 * x, -y, b1 - 2.0 * b1 * b2 * y - x)
            }
            ModelKind::Bell => {
                let [a1, a2, b1, b2, b3, _] = *p;
                Mat2::new(a1 - a2 * y, -a2 * x, b1 * y - b2, b1 * x - b3)
            }
            ModelKind::Volterra => {
                let [a1, a2, b1, b2, b3, _] = *p;
                Mat2::new(a1 - 2.0 * a2 * x * y, -a2 * x * x, b3 * y - b1, b3 * x - b2)
            }
            ModelKind::Stepanova => {
                let [a1, b, b1, b2, _, _] = *p;
                Mat2::new(a1 - y, -x, b1 * y - b2, b1 * x - b)
            }
            ModelKind::VladarGonzalez => {
                let [k, b1, b2, b3, _, _] = *p;
                Mat2::new(
                    (k / x).ln() - 1.0 - y,
                    -x,
                    (b1 - 2.0 * b3 * x) * y,
                    b1 * x - b2 - b3 * x * x,
                )
            }
            ModelKind::Exponential | ModelKind::Logistic => {
                let (b1, b2, b3) = if self.kind == ModelKind::Exponential {
                    (p[0], p[1], p[2])
                } else {
                    (p[1], p[2], p[3])
                };
                Mat2::new(
                    1.0 - y,
                    -x,
                    (b1 - 2.0 * b3 * x) * y,
                    b1 * x - b2 - b3 * x * x,
                )
            }
        }
    }

    /// Hessians of `f1` and `f2`.
    pub fn hessians(&self, s: Vec2) -> [Mat2; 2] {
        let p = &self.p;
        let (x, y) = (s.x, s.y);
        let sym = |xx: f64, xy: f64, yy: f64| Mat2::new(xx, xy, xy, yy);
        match self.kind {
            ModelKind::KuznetsovTaylor => {
                let [_, _, a3, b1, b2, _] = *p;
                [sym(0.0, a3, 0.0), sym(0.0, -1.0, -2.0 * b1 * b2)]
            }
            ModelKind::Bell => {
                let [_, a2, b1, _, _, _] = *p;
                [sym(0.0, -a2, 0.0), sym(0.0, b1, 0.0)]
            }
            ModelKind::Volterra => {
                let [_, a2, _, _, b3, _] = *p;
                [sym(-2.0 * a2 * y, -2.0 * a2 * x, 0.0), sym(0.0, b3, 0.0)]
            }
            ModelKind::Stepanova => {
                let b1 = p[2];
                [sym(0.0, -1.0, 0.0), sym(0.0, b1, 0.0)]
            }
            ModelKind::VladarGonzalez => {
                let [_, b1, _, b3, _, _] = *p;
                [
                    sym(-1.0 / x, -1.0, 0.0),
                    sym(-2.0 * b3 * y, b1 - 2.0 * b3 * x, 0.0),
                ]
            }
            ModelKind::Exponential | ModelKind::Logistic => {
                let (b1, b3) = if self.kind == ModelKind::Exponential {
                    (p[0], p[2])
                } else {
                    (p[1], p[3])
                };
                [
                    sym(0.0, -1.0, 0.0),
                    sym(-2.0 * b3 * y, b1 - 2.0 * b3 * x, 0.0),
                ]
            }
        }
    }

    /// `max |f_i(state)|`, infinite when the drift is not finite.
    pub fn residual(&self, state: Vec2) -> f64 {
        let f = self.drift(state);
        let r = f.x.abs().max(f.y.abs());
        if r.is_nan() {
            f64::INFINITY
        } else {
            r
        }
    }

    /// Equilibria of the drift. Kuznetsov-Taylor and Bell use closed forms
    /// (refined by Newton); other variants use a multi-start Newton search on
    /// `[0, 10]^2`.
    pub fn find_equilibria(&self) -> Result<EquilibriumReport> {
        match self.kind {
            ModelKind::KuznetsovTaylor => self.kt_equilibria(),
            ModelKind::Bell => self.bell_equilibria(),
            _ => Ok(EquilibriumReport {
                equilibria: self.numeric_equilibria(),
                absent: Vec::new(),
            }),
        }
    }

    /// Equilibrium by label (`P1`/`P2`) or index into the search result.
    pub fn equilibrium(&self, label: EquilibriumLabel) -> Result<Equilibrium> {
        let report = self.find_equilibria()?;
        let found = match label {
            EquilibriumLabel::Numeric(i) => report.equilibria.get(i).copied(),
            _ => report.get(label).copied(),
        };
        found.ok_or_else(|| {
            let reason = report
                .absent
                .iter()
                .find(|(l, _)| *l == label)
                .map(|(_, r)| r.clone())
                .unwrap_or_else(|| "not found".into());
            Error::Domain(format!("equilibrium {label} of {}: {reason}", self.kind))
        })
    }

    fn kt_equilibria(&self) -> Result<EquilibriumReport> {
        let [a1, a2, a3, b1, b2, _] = self.p;
        let mut equilibria =
            vec![self.refine_closed_form(Vec2::new(a1 / a2, 0.0), EquilibriumLabel::P1)?];
        let mut absent = Vec::new();
        // y2 is the smaller root of a3 b1 b2 y^2 - b1 (a3 + a2 b2) y + (a2 b1 - a1) = 0
        // and x2 = b1 (1 - b2 y2) from y' = 0 with y != 0.
        let delta = b1 * b1 * (b2 * a2 - a3).powi(2) + 4.0 * b1 * b2 * a1 * a3;
        if a3 == 0.0 {
            absent.push((
                EquilibriumLabel::P2,
                "a3 = 0: the closed form for P2 is singular".to_string(),
            ));
        } else if delta < 0.0 {
            absent.push((
                EquilibriumLabel::P2,
                format!("discriminant Delta = {delta:e} < 0"),
            ));
        } else {
            let sq = delta.sqrt();
            let x2 = (-b1 * (b2 * a2 - a3) + sq) / (2.0 * a3);
            let y2 = (b1 * (b2 * a2 + a3) - sq) / (2.0 * b1 * b2 * a3);
            equilibria.push(self.refine_closed_form(Vec2::new(x2, y2), EquilibriumLabel::P2)?);
        }
        Ok(EquilibriumReport { equilibria, absent })
    }

    fn bell_equilibria(&self) -> Result<EquilibriumReport> {
        let [a1, a2, b1, b2, b3, b4] = self.p;
        let det = a1 * b1 - a2 * b2;
        if det == 0.0 {
            return Err(Error::DegenerateParameters(
                "a1*b1 - a2*b2 = 0: Bell P2 is undefined".into(),
            ));
        }
        let p1 = Vec2::new(0.0, b4 / b3);
        let p2 = Vec2::new((a1 * b3 - a2 * b4) / det, a1 / a2);
        Ok(EquilibriumReport {
            equilibria: vec![
                self.refine_closed_form(p1, EquilibriumLabel::P1)?,
                self.refine_closed_form(p2, EquilibriumLabel::P2)?,
            ],
            absent: Vec::new(),
        })
    }

    fn refine_closed_form(&self, guess: Vec2, label: EquilibriumLabel) -> Result<Equilibrium> {
        let refined = self
            .newton(guess)
            .ok_or_else(|| Error::Numerical(format!("Newton refinement of {label} diverged")))?;
        let moved = (refined - guess).amax();
        if moved > REFINE_MOVE_TOL * guess.amax().max(1.0) {
            return Err(Error::Numerical(format!(
                "closed-form {label} moved by {moved:e} under refinement"
            )));
        }
        let residual = self.residual(refined);
        if residual > RESIDUAL_TOL {
            return Err(Error::Numerical(format!(
                "{label} residual {residual:e} exceeds {RESIDUAL_TOL:e}"
            )));
        }
        let method = if refined == guess {
            EquilibriumMethod::ClosedForm
        } else {
            EquilibriumMethod::Refined
        };
        Ok(Equilibrium {
            state: refined,
            residual,
            label,
            method,
        })
    }

    /// Damped Newton with step clipping. Returns `None` when the iteration
    /// leaves the drift's domain or stalls.
    pub fn newton(&self, start: Vec2) -> Option<Vec2> {
        let mut x = start;
        let mut res = self.residual(x);
        if !res.is_finite() {
            return None;
        }
        for _ in 0..NEWTON_MAX_ITER {
            if res == 0.0 {
                return Some(x);
            }
            let step = self.jacobian(x).lu().solve(&(-self.drift(x)))?;
            if !step.iter().all(|v| v.is_finite()) {
                return None;
            }
            let max_step = 1.0 + x.amax();
            let mut step = if step.amax() > max_step {
                step * (max_step / step.amax())
            } else {
                step
            };
            // backtrack until the residual does not grow
            let mut accepted = None;
            for _ in 0..30 {
                let trial = x + step;
                let r = self.residual(trial);
                if r.is_finite() && r <= res {
                    accepted = Some((trial, r));
                    break;
                }
                step *= 0.5;
            }
            let (next, r) = accepted?;
            let moved = (next - x).amax();
            x = next;
            res = r;
            if moved < NEWTON_STEP_TOL * (1.0 + x.amax()) {
                return Some(x);
            }
        }
        (res <= RESIDUAL_TOL).then_some(x)
    }

    fn numeric_equilibria(&self) -> Vec<Equilibrium> {
        const STARTS: usize = 12;
        const SPAN: f64 = 10.0;
        let mut found: Vec<Vec2> = Vec::new();
        for i in 0..STARTS {
            for j in 0..STARTS {
                let start = Vec2::new(
                    (i as f64 + 0.5) * SPAN / STARTS as f64,
                    (j as f64 + 0.5) * SPAN / STARTS as f64,
                );
                let Some(root) = self.newton(start) else {
                    continue;
                };
                if self.residual(root) > RESIDUAL_TOL {
                    continue;
                }
                if !found
                    .iter()
                    .any(|f| (f - root).amax() < 1e-6 * (1.0 + root.amax()))
                {
                    found.push(root);
                }
            }
        }
        found.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        found
            .into_iter()
            .enumerate()
            .map(|(i, state)| Equilibrium {
                state,
                residual: self.residual(state),
                label: EquilibriumLabel::Numeric(i),
                method: EquilibriumMethod::Refined,
            })
            .collect()
    }
}

fn check_finite(state: Vec2) -> Result<()> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "state ({}, {}) is not finite",
            state.x, state.y
        )))
    }
}
