//! Quadratic Lyapunov functions `V(u) = (w1 u1^2 + w2 u2^2)/2` for linear
//! SDEs and the verdicts built on them.
//!
//! For `du = A u dt + B u dW` the generator applied to `V` is a quadratic form
//!
//! ```text
//! LV = c11 u1^2 + c12 u1 u2 + c22 u2^2
//! c11 = w1 a11 + (w1 b11^2 + w2 b21^2)/2
//! c22 = w2 a22 + (w1 b12^2 + w2 b22^2)/2
//! c12 = w1 (a12 + b11 b12) + w2 (a21 + b21 b22)
//! ```
//!
//! and is the same for one shared or two independent Wiener processes, since
//! `V` has no mixed second derivative. `LV <= -u'Qu` with `Q` positive
//! definite gives mean-square stability.

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::linearize::{make_diagonal_system, DiagonalNoiseSpec, LinearSde};
use crate::lyapunov::mc::{mean_and_se, MagnusStepper};
use crate::lyapunov::{lyapunov, LyapunovMethod, LyapunovOptions, LyapunovResult, MethodChoice};
use crate::models::{Equilibrium, ModelDefinition, ModelKind};
use crate::simulate::RngState;

/// Relative size below which the cross coefficient counts as cancelled.
pub const CROSS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub omega1: f64,
    pub omega2: f64,
}

impl QuadraticForm {
    pub fn new(omega1: f64, omega2: f64) -> Result<Self> {
        for (name, w) in [("omega1", omega1), ("omega2", omega2)] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("weights must be positive, got {w}"),
                });
            }
        }
        Ok(Self { omega1, omega2 })
    }

    pub fn unit() -> Self {
        Self {
            omega1: 1.0,
            omega2: 1.0,
        }
    }

    pub fn eval(&self, u: Vec2) -> f64 {
        0.5 * (self.omega1 * u.x * u.x + self.omega2 * u.y * u.y)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            omega1: self.omega1 * k,
            omega2: self.omega2 * k,
        }
    }
}

/// `LV(u)` for the linear system.
pub fn apply_lv(sys: &LinearSde, v: &QuadraticForm, u: Vec2) -> f64 {
    let (a, b) = (&sys.a, &sys.b);
    let (w1, w2) = (v.omega1, v.omega2);
    let au = a * u;
    let g1 = b[(0, 0)] * u.x + b[(0, 1)] * u.y;
    let g2 = b[(1, 0)] * u.x + b[(1, 1)] * u.y;
    au.x * w1 * u.x + au.y * w2 * u.y + 0.5 * (g1 * g1 * w1 + g2 * g2 * w2)
}

/// Coefficients `(c11, c12, c22)` of `LV` and the magnitude of the terms
/// summed into `c12`.
fn lv_coefficients(sys: &LinearSde, v: &QuadraticForm) -> (f64, f64, f64, f64) {
    let (a, b) = (&sys.a, &sys.b);
    let (w1, w2) = (v.omega1, v.omega2);
    let c11 = w1 * a[(0, 0)] + 0.5 * (w1 * b[(0, 0)].powi(2) + w2 * b[(1, 0)].powi(2));
    let c22 = w2 * a[(1, 1)] + 0.5 * (w1 * b[(0, 1)].powi(2) + w2 * b[(1, 1)].powi(2));
    let terms = [
        w1 * a[(0, 1)],
        w1 * b[(0, 0)] * b[(0, 1)],
        w2 * a[(1, 0)],
        w2 * b[(1, 0)] * b[(1, 1)],
    ];
    let c12 = terms.iter().sum();
    let scale = terms.iter().map(|t| t.abs()).sum();
    (c11, c12, c22, scale)
}

/// `-LV = q1 u1^2 + q2 u2^2 - cross u1 u2 = u'Qu`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub omega: QuadraticForm,
    pub q1: f64,
    pub q2: f64,
    /// Coefficient of `u1 u2` in `LV`.
    pub cross: f64,
    pub q: Mat2,
    pub valid: bool,
    /// Why the certificate fails, when it does.
    pub reason: Option<String>,
}

impl Certificate {
    pub fn from_lv(sys: &LinearSde, omega: QuadraticForm) -> Self {
        let (c11, c12, c22, scale) = lv_coefficients(sys, &omega);
        let (q1, q2) = (-c11, -c22);
        let cross = if c12.abs() <= CROSS_TOL * scale {
            0.0
        } else {
            c12
        };
        let q = Mat2::new(q1, -cross / 2.0, -cross / 2.0, q2);
        let mut reasons = Vec::new();
        if q1 <= 0.0 {
            reasons.push(format!("q1 = {q1:.6e} is not positive"));
        }
        if q2 <= 0.0 {
            reasons.push(format!("q2 = {q2:.6e} is not positive"));
        }
        if cross != 0.0 {
            reasons.push(format!("cross term {cross:.6e} does not vanish"));
        }
        Self {
            omega,
            q1,
            q2,
            cross,
            q,
            valid: reasons.is_empty(),
            reason: (!reasons.is_empty()).then(|| reasons.join("; ")),
        }
    }

    /// The `LV` numbers at `omega`, rejected for `reason`.
    fn invalid(sys: &LinearSde, omega: QuadraticForm, reason: String) -> Self {
        Self {
            valid: false,
            reason: Some(reason),
            ..Self::from_lv(sys, omega)
        }
    }
}

/// Search the weights `w1/w2` that cancel the cross term.
///
/// `c12 = w1 k1 + w2 k2` with `k1 = a12 + b11 b12`, `k2 = a21 + b21 b22`.
/// Opposite signs fix the ratio `-k2/k1`; both zero leave an interval of
/// admissible ratios from the diagonal conditions, of which `1` is preferred.
pub fn certificate_search(sys: &LinearSde) -> Certificate {
    let (a, b) = (&sys.a, &sys.b);
    let k1 = a[(0, 1)] + b[(0, 0)] * b[(0, 1)];
    let k2 = a[(1, 0)] + b[(1, 0)] * b[(1, 1)];
    let tol = CROSS_TOL * (a.abs().max() + b.abs().max().powi(2)).max(f64::MIN_POSITIVE);
    let k1 = if k1.abs() <= tol { 0.0 } else { k1 };
    let k2 = if k2.abs() <= tol { 0.0 } else { k2 };
    let unit = QuadraticForm::unit();
    if k1 * k2 < 0.0 {
        let ratio = -k2 / k1;
        return Certificate::from_lv(
            sys,
            QuadraticForm {
                omega1: ratio,
                omega2: 1.0,
            },
        );
    }
    if k1 != 0.0 || k2 != 0.0 {
        return Certificate::invalid(
            sys,
            unit,
            format!("no positive weights cancel the cross term (k1 = {k1:.6e}, k2 = {k2:.6e})"),
        );
    }
    // r = w1/w2 must satisfy r P > b21^2/2 and R > r b12^2/2
    let p = -(a[(0, 0)] + 0.5 * b[(0, 0)].powi(2));
    let r = -(a[(1, 1)] + 0.5 * b[(1, 1)].powi(2));
    if p <= 0.0 || r <= 0.0 {
        // no ratio helps; report the unit weights
        return Certificate::from_lv(sys, unit);
    }
    let lo = 0.5 * b[(1, 0)].powi(2) / p;
    let hi = if b[(0, 1)] == 0.0 {
        f64::INFINITY
    } else {
        2.0 * r / b[(0, 1)].powi(2)
    };
    let ratio = if lo < 1.0 && 1.0 < hi {
        1.0
    } else if lo < hi {
        if hi.is_finite() {
            (lo.max(f64::MIN_POSITIVE) * hi).sqrt()
        } else {
            2.0 * lo
        }
    } else {
        return Certificate::from_lv(sys, unit);
    };
    Certificate::from_lv(
        sys,
        QuadraticForm {
            omega1: ratio,
            omega2: 1.0,
        },
    )
}

/// Weight ratio used for the Bell certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightRatio {
    /// `w1/w2 = (b1 y2 - b2)/(x2 a2)`, which removes the cross term.
    #[default]
    Cancelling,
    /// `w1/w2 = (b1 y2 - b2)/(a2 y2)`.
    Printed,
}

/// The Bell certificate at an equilibrium with diagonal noise, both from the
/// `LV` expansion and from the alternative closed forms
/// `q1 = w1 (a2 y2 - a1 - s1^2)`, `q2 = w2 (b3 - b1 y2 - s2^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellCertificate {
    pub certificate: Certificate,
    pub ratio_mode: WeightRatio,
    pub printed_q1: f64,
    pub printed_q2: f64,
    /// `a2 y2 - a1 = 0`, where the first diagonal reduces to its noise part.
    pub boundary: bool,
}

pub fn bell_certificate(
    model: &ModelDefinition,
    eq: &Equilibrium,
    sigma1: f64,
    sigma2: f64,
    mode: WeightRatio,
) -> Result<BellCertificate> {
    if model.kind() != ModelKind::Bell {
        return Err(Error::Domain(format!(
            "Bell certificate needs the bell model, got {}",
            model.name()
        )));
    }
    let d = DiagonalNoiseSpec::new(sigma1, sigma2)?;
    let sys = make_diagonal_system(model, eq, &d)?;
    let [a1, a2, b1, b2, b3] = ["a1", "a2", "b1", "b2", "b3"].map(|n| model.param(n));
    let (x2, y2) = (eq.state.x, eq.state.y);
    let num = b1 * y2 - b2;
    let den = match mode {
        WeightRatio::Cancelling => x2 * a2,
        WeightRatio::Printed => a2 * y2,
    };
    let unit = QuadraticForm::unit();
    let first_gap = a2 * y2 - a1;
    let boundary = first_gap.abs() <= 1e-12 * a1.abs().max(1.0);
    let printed = |w1: f64, w2: f64| {
        (
            w1 * (first_gap - sigma1 * sigma1),
            w2 * (b3 - b1 * y2 - sigma2 * sigma2),
        )
    };
    if num <= 0.0 || den <= 0.0 {
        let (pq1, pq2) = printed(1.0, 1.0);
        return Ok(BellCertificate {
            certificate: Certificate::invalid(
                &sys,
                unit,
                format!(
                    "no positive weight ratio: b1 y2 - b2 = {num:.6e}, denominator = {den:.6e}"
                ),
            ),
            ratio_mode: mode,
            printed_q1: pq1,
            printed_q2: pq2,
            boundary,
        });
    }
    let omega = QuadraticForm::new(num / den, 1.0)?;
    let certificate = Certificate::from_lv(&sys, omega);
    let (printed_q1, printed_q2) = printed(omega.omega1, omega.omega2);
    Ok(BellCertificate {
        certificate,
        ratio_mode: mode,
        printed_q1,
        printed_q2,
        boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    MeanSquareStable,
    AsymptoticallyStable,
    StableInProbability,
    Unstable,
    Inconclusive,
}

impl VerdictKind {
    pub fn name(self) -> &'static str {
        match self {
            VerdictKind::MeanSquareStable => "mean_square_stable",
            VerdictKind::AsymptoticallyStable => "asymptotically_stable",
            VerdictKind::StableInProbability => "stable_in_probability",
            VerdictKind::Unstable => "unstable",
            VerdictKind::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub kind: VerdictKind,
    /// The best certificate found, valid or not.
    pub certificate: Certificate,
    /// The exponent, when the certificate did not settle the question.
    pub lyapunov: Option<LyapunovResult>,
    pub notes: Vec<String>,
}

/// Decide stability: a valid certificate gives mean-square stability;
/// otherwise the sign of the top exponent decides. A Monte-Carlo exponent
/// within three standard errors of zero is inconclusive.
pub fn classify(
    sys: &LinearSde,
    v: Option<QuadraticForm>,
    opts: &LyapunovOptions,
) -> Result<StabilityVerdict> {
    let mut notes = Vec::new();
    let certificate = match v {
        Some(v) => {
            let c = Certificate::from_lv(sys, v);
            if c.valid {
                c
            } else {
                notes.push(format!(
                    "given weights fail: {}",
                    c.reason.as_deref().unwrap_or("")
                ));
                certificate_search(sys)
            }
        }
        None => certificate_search(sys),
    };
    if certificate.valid {
        return Ok(StabilityVerdict {
            kind: VerdictKind::MeanSquareStable,
            certificate,
            lyapunov: None,
            notes,
        });
    }
    let lambda = lyapunov(sys, MethodChoice::Auto, opts)?;
    let uncertainty = match lambda.method {
        LyapunovMethod::MonteCarlo => 3.0 * lambda.diagnostics.std_error.unwrap_or(f64::INFINITY),
        _ => 1e-12,
    };
    let kind = if lambda.lambda < -uncertainty {
        VerdictKind::AsymptoticallyStable
    } else if lambda.lambda > uncertainty {
        VerdictKind::Unstable
    } else if semidefinite(&certificate) {
        VerdictKind::StableInProbability
    } else {
        VerdictKind::Inconclusive
    };
    Ok(StabilityVerdict {
        kind,
        certificate,
        lyapunov: Some(lambda),
        notes,
    })
}

/// `LV <= 0` everywhere with `LV` not identically zero.
fn semidefinite(c: &Certificate) -> bool {
    let q = &c.q;
    q.iter().all(|v| v.is_finite())
        && q[(0, 0)] >= 0.0
        && q[(1, 1)] >= 0.0
        && q[(0, 0)] * q[(1, 1)] - q[(0, 1)] * q[(1, 0)] >= 0.0
        && q.iter().any(|&v| v != 0.0)
}

impl StabilityVerdict {
    /// One `key = value` block headed by `[label]`.
    pub fn report(&self, label: &str) -> String {
        let mut s = String::new();
        let c = &self.certificate;
        let _ = writeln!(s, "[{label}]");
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(
            s,
            "omega = ({:.6e}, {:.6e})",
            c.omega.omega1, c.omega.omega2
        );
        let _ = writeln!(s, "q1 = {:.6e}", c.q1);
        let _ = writeln!(s, "q2 = {:.6e}", c.q2);
        let _ = writeln!(s, "cross = {:.6e}", c.cross);
        let _ = writeln!(s, "certificate_valid = {}", c.valid);
        if let Some(r) = &c.reason {
            let _ = writeln!(s, "certificate_reason = {r}");
        }
        if let Some(l) = &self.lyapunov {
            let _ = writeln!(s, "lambda = {:.6e}", l.lambda);
            let _ = writeln!(s, "lambda_method = {}", l.method);
            let diag = l.diagnostics.to_string();
            if !diag.is_empty() {
                let _ = writeln!(s, "lambda_diag = {diag}");
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note = {n}");
        }
        s
    }
}

impl BellCertificate {
    /// Lines appended to a verdict block.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let mode = match self.ratio_mode {
            WeightRatio::Cancelling => "cancelling",
            WeightRatio::Printed => "printed",
        };
        let _ = writeln!(s, "bell_ratio = {mode}");
        let _ = writeln!(s, "bell_q1_lv = {:.6e}", self.certificate.q1);
        let _ = writeln!(s, "bell_q2_lv = {:.6e}", self.certificate.q2);
        let _ = writeln!(s, "bell_cross_lv = {:.6e}", self.certificate.cross);
        let _ = writeln!(s, "bell_q1_closed = {:.6e}", self.printed_q1);
        let _ = writeln!(s, "bell_q2_closed = {:.6e}", self.printed_q2);
        let _ = writeln!(s, "bell_certificate_valid = {}", self.certificate.valid);
        if self.boundary {
            let _ = writeln!(
                s,
                "note = a2*y2 - a1 = 0 here, so the first diagonal is -w1*sigma1^2 (closed form) \
                 or -w1*sigma1^2/2 (LV): never positive, the claimed condition q1 > 0 cannot hold"
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConfig {
    pub h: f64,
    pub paths: usize,
    pub t_early: f64,
    pub t_late: f64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            paths: 10_000,
            t_early: 1.0,
            t_late: 5.0,
        }
    }
}

/// Fitted decay rate of `E|u|^2` between two times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRate {
    pub rate: f64,
    pub std_error: f64,
    pub m_early: f64,
    pub m_late: f64,
}

impl MomentRate {
    /// Negative with three standard errors to spare.
    pub fn decays(&self) -> bool {
        self.rate + 3.0 * self.std_error < 0.0
    }
}

/// `rate = ln(m(t_late)/m(t_early)) / (t_late - t_early)` from Monte-Carlo
/// second moments, started at `u = (1, 1)/sqrt 2`; the standard error comes
/// from the delta method.
pub fn second_moment_rate(sys: &LinearSde, cfg: &MomentConfig, seed: u64) -> Result<MomentRate> {
    if cfg.paths < 2 || !(cfg.h > 0.0) || !(0.0 < cfg.t_early && cfg.t_early < cfg.t_late) {
        return Err(Error::Domain("bad second-moment configuration".into()));
    }
    let stepper = MagnusStepper::new(sys);
    let n_early = (cfg.t_early / cfg.h).round() as usize;
    let n_late = (cfg.t_late / cfg.h).round() as usize;
    let sqrt_h = cfg.h.sqrt();
    let pairs: Vec<(f64, f64)> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = RngState::with_stream(seed, path);
            let mut u = Vec2::new(1.0, 1.0) / 2f64.sqrt();
            let mut early = 0.0;
            for n in 1..=n_late {
                let d = stepper.draw(&mut rng, sqrt_h);
                u = crate::linalg::expm2(&stepper.omega(&d, cfg.h)) * u;
                if n == n_early {
                    early = u.norm_squared();
                }
            }
            (early, u.norm_squared())
        })
        .collect();
    let e: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let l: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (m1, _) = mean_and_se(&e);
    let (m2, _) = mean_and_se(&l);
    let n = pairs.len() as f64;
    let cov = |x: &[f64], mx: f64, y: &[f64], my: f64| {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / (n - 1.0)
    };
    let var_log = cov(&l, m2, &l, m2) / (m2 * m2) + cov(&e, m1, &e, m1) / (m1 * m1)
        - 2.0 * cov(&e, m1, &l, m2) / (m1 * m2);
    let span = cfg.t_late - cfg.t_early;
    Ok(MomentRate {
        rate: (m2 / m1).ln() / span,
        std_error: (var_log.max(0.0) / n).sqrt() / span,
        m_early: m1,
        m_late: m2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearize::rotational_slopes;
    use crate::models::EquilibriumLabel;

    fn bell_p2() -> (ModelDefinition, Equilibrium) {
        let m = ModelDefinition::with_defaults(ModelKind::Bell);
        let e = m.equilibrium(EquilibriumLabel::P2).unwrap();
        (m, e)
    }

    #[test]
    fn lv_examples() {
        let v = QuadraticForm::unit();
        let sys = LinearSde::two_wiener(Mat2::identity() * -1.0, Mat2::zeros());
        assert_eq!(apply_lv(&sys, &v, Vec2::zeros()), 0.0);
        assert_eq!(apply_lv(&sys, &v, Vec2::new(1.0, 0.0)), -1.0);
        let sys = LinearSde::two_wiener(Mat2::zeros(), Mat2::new(0.3, 0.0, 0.0, 0.0));
        assert!((apply_lv(&sys, &v, Vec2::new(1.0, 0.0)) - 0.045).abs() < 1e-15);
    }

    #[test]
    fn lv_coefficients_reproduce_lv() {
        let sys = LinearSde::one_wiener(
            Mat2::new(0.3, -1.2, 0.8, -0.5),
            Mat2::new(0.4, 0.7, -0.2, 1.1),
        );
        let v = QuadraticForm::new(1.7, 0.4).unwrap();
        let (c11, c12, c22, _) = lv_coefficients(&sys, &v);
        for u in [
            Vec2::new(1.0, 0.0),
            Vec2::new(-0.3, 2.0),
            Vec2::new(1.5, 1.5),
        ] {
            let lv = c11 * u.x * u.x + c12 * u.x * u.y + c22 * u.y * u.y;
            assert!((lv - apply_lv(&sys, &v, u)).abs() < 1e-12);
            let c = Certificate::from_lv(&sys, v);
            assert!((-u.dot(&(c.q * u)) - lv).abs() < 1e-12);
        }
    }

    #[test]
    fn hurwitz_diagonal_is_mean_square_stable() {
        let sys = LinearSde::one_wiener(Mat2::new(-1.0, 0.0, 0.0, -2.0), Mat2::zeros());
        let v = classify(&sys, None, &LyapunovOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::MeanSquareStable);
        assert_eq!(v.certificate.omega, QuadraticForm::unit());
        assert_eq!((v.certificate.q1, v.certificate.q2), (1.0, 2.0));
    }

    #[test]
    fn zero_system_is_inconclusive() {
        let sys = LinearSde::one_wiener(Mat2::zeros(), Mat2::zeros());
        let v = classify(&sys, None, &LyapunovOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::Inconclusive);
        assert_eq!(v.lyapunov.unwrap().lambda, 0.0);
    }

    #[test]
    fn bell_p1_alpha_zero_is_unstable() {
        let m = ModelDefinition::with_defaults(ModelKind::Bell);
        let p1 = m.equilibrium(EquilibriumLabel::P1).unwrap();
        let sys = crate::linearize::linearize_at(
            &m,
            &p1,
            &crate::linearize::NoiseSpec::new(rotational_slopes(0.0, -2.0), p1),
        )
        .unwrap();
        let v = classify(&sys, None, &LyapunovOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::Unstable);
    }

    #[test]
    fn bell_p2_boundary() {
        let (m, p2) = bell_p2();
        let b = bell_certificate(&m, &p2, 0.0, 0.0, WeightRatio::Cancelling).unwrap();
        assert!(b.boundary);
        assert_eq!(b.certificate.cross, 0.0);
        assert!(b.certificate.q1.abs() < 1e-12);
        assert!(!b.certificate.valid);
        let b = bell_certificate(&m, &p2, 0.1, 0.1, WeightRatio::Cancelling).unwrap();
        let w1 = b.certificate.omega.omega1;
        assert!((b.certificate.q1 + 0.5 * w1 * 0.01).abs() < 1e-12);
        assert!((b.printed_q1 + w1 * 0.01).abs() < 1e-12);
        assert!(!b.certificate.valid);
        assert!(b.report().contains("cannot hold"));
        // the alternative ratio leaves a cross term
        let p = bell_certificate(&m, &p2, 0.1, 0.1, WeightRatio::Printed).unwrap();
        assert!(p.certificate.cross.abs() > 1e-3);
    }

    #[test]
    fn shifted_bell_drift_is_certified() {
        let (m, p2) = bell_p2();
        let mut sys =
            make_diagonal_system(&m, &p2, &DiagonalNoiseSpec::new(0.1, 0.1).unwrap()).unwrap();
        sys.a[(0, 0)] = -0.3;
        let v = classify(&sys, None, &LyapunovOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::MeanSquareStable);
        assert!(v.certificate.q1 > 0.0 && v.certificate.q2 > 0.0);
    }

    #[test]
    fn large_noise_destroys_certificate() {
        let (m, p2) = bell_p2();
        let b = bell_certificate(&m, &p2, 2.0, 0.1, WeightRatio::Cancelling).unwrap();
        assert!(b.certificate.q1 < 0.0);
        assert!(!b.certificate.valid);
    }

    #[test]
    fn certificate_scaling() {
        let sys = LinearSde::two_wiener(
            Mat2::new(-1.0, 0.5, -0.8, -0.7),
            Mat2::new(0.2, 0.0, 0.0, 0.3),
        );
        let c = certificate_search(&sys);
        assert!(c.valid, "{:?}", c.reason);
        let scaled = Certificate::from_lv(&sys, c.omega.scaled(1e6));
        assert!(scaled.valid);
        assert!((scaled.q1 / c.q1 - 1e6).abs() < 1e-3);
    }

    #[test]
    fn same_sign_coupling_has_no_certificate() {
        let sys = LinearSde::two_wiener(Mat2::new(-1.0, 0.5, 0.5, -1.0), Mat2::zeros());
        let c = certificate_search(&sys);
        assert!(!c.valid);
        // still stable through the exponent
        let v = classify(&sys, None, &LyapunovOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::AsymptoticallyStable);
    }

    #[test]
    fn wrong_model_rejected() {
        let m = ModelDefinition::with_defaults(ModelKind::KuznetsovTaylor);
        let e = m.equilibrium(EquilibriumLabel::P1).unwrap();
        assert!(bell_certificate(&m, &e, 0.1, 0.1, WeightRatio::Cancelling).is_err());
        assert!(QuadraticForm::new(0.0, 1.0).is_err());
    }

    #[test]
    fn moment_rate_of_scalar_geometric_motion() {
        // E|u|^2 = e^{(2a + s^2) t} for du = a u dt + s u dW
        let sys = LinearSde::two_wiener(Mat2::identity() * -1.0, Mat2::identity() * 0.3);
        let cfg = MomentConfig {
            h: 1e-2,
            paths: 2000,
            ..MomentConfig::default()
        };
        let r = second_moment_rate(&sys, &cfg, 1).unwrap();
        assert!(
            (r.rate + 1.91).abs() < 4.0 * r.std_error + 0.01,
            "{} +- {}",
            r.rate,
            r.std_error
        );
        assert!(r.decays());
    }

    #[test]
    fn report_block() {
        let sys = LinearSde::one_wiener(Mat2::zeros(), Mat2::zeros());
        let v = classify(&sys, None, &LyapunovOptions::default()).unwrap();
        let text = v.report("P1");
        assert!(text.starts_with("[P1]\nkind = inconclusive\n"));
        assert!(text.contains("lambda_method = deterministic_eig"));
    }
}
