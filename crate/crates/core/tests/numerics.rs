//! Integrators and Monte-Carlo estimators against exact solutions.

use stochstab::linalg::{expm2, Mat2, Vec2};
use stochstab::linearize::{rotational_slopes, LinearSde, NoiseKind, NoiseSpec};
use stochstab::lyapunov::{lyapunov_mc, McConfig};
use stochstab::models::{EquilibriumLabel, ModelDefinition, ModelKind};
use stochstab::simulate::{simulate, ModelSystem, Scheme, SimConfig};
use stochstab::stability::{second_moment_rate, MomentConfig};

fn mc_config(paths: usize, horizon: f64) -> McConfig {
    McConfig {
        h: 1e-2,
        horizon,
        paths,
        ..McConfig::default()
    }
}

#[test]
fn mc_does_not_depend_on_thread_count() {
    let sys = LinearSde::one_wiener(
        Mat2::new(-1.0, 2.0, -0.5, 0.3),
        Mat2::new(0.4, -1.0, 0.7, 0.2),
    );
    let cfg = mc_config(64, 5.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| lyapunov_mc(&sys, &cfg, 9).unwrap().lambda)
    };
    assert_eq!(run(1).to_bits(), run(3).to_bits());
}

#[test]
fn mc_recovers_isotropic_exponent() {
    let (a, alpha, beta) = (-1.0, 1.0, 2.0);
    let sys = LinearSde::one_wiener(Mat2::identity() * a, rotational_slopes(alpha, beta));
    let r = lyapunov_mc(&sys, &mc_config(400, 20.0), 1).unwrap();
    let se = r.diagnostics.std_error.unwrap();
    let exact = a + 0.5 * (beta * beta - alpha * alpha);
    assert!(
        (r.lambda - exact).abs() < 4.0 * se + 1e-3,
        "{} +- {se} vs {exact}",
        r.lambda
    );
}

#[test]
fn second_moment_rate_of_isotropic_system() {
    // d|u|^2 = (2a + alpha^2 + beta^2) |u|^2 dt + martingale
    let (a, alpha, beta) = (-3.0, 1.0, 1.0);
    let sys = LinearSde::one_wiener(Mat2::identity() * a, rotational_slopes(alpha, beta));
    let cfg = MomentConfig {
        paths: 4000,
        h: 1e-3,
        ..MomentConfig::default()
    };
    let m = second_moment_rate(&sys, &cfg, 5).unwrap();
    let exact = 2.0 * a + alpha * alpha + beta * beta;
    assert!(
        (m.rate - exact).abs() < 4.0 * m.std_error + 1e-2,
        "{} +- {} vs {exact}",
        m.rate,
        m.std_error
    );
    assert!(m.decays());
}

/// Zero-noise error at `t = 1` for each step size.
fn ode_errors(a: Mat2, scheme: Scheme, hs: &[f64]) -> Vec<f64> {
    let sys = LinearSde::one_wiener(a, Mat2::zeros());
    let u0 = Vec2::new(1.0, 0.5);
    let exact = expm2(&a) * u0;
    hs.iter()
        .map(|&h| {
            let steps = (1.0 / h).round() as usize;
            let cfg = SimConfig::new(h, steps, u0, scheme).unwrap();
            (simulate(&sys, &cfg, 0).unwrap().last() - exact).norm()
        })
        .collect()
}

fn observed_order(errs: &[f64]) -> f64 {
    (errs[0] / errs[errs.len() - 1]).log2() / (errs.len() - 1) as f64
}

#[test]
fn deterministic_orders() {
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let coupled = Mat2::new(-0.5, 1.0, -1.0, -0.2);
    let decoupled = Mat2::new(-0.5, 0.0, 0.0, 0.7);
    let p1 = observed_order(&ode_errors(coupled, Scheme::Euler, &hs));
    assert!((p1 - 1.0).abs() < 0.15, "euler order {p1}");
    // euler2 keeps only each component's own derivatives
    let p2 = observed_order(&ode_errors(decoupled, Scheme::Euler2, &hs));
    assert!((p2 - 2.0).abs() < 0.15, "euler2 order {p2}");
    let p2c = observed_order(&ode_errors(coupled, Scheme::Euler2Cross, &hs));
    assert!((p2c - 2.0).abs() < 0.15, "euler2-cross order {p2c}");
}

#[test]
fn same_seed_same_path() {
    let model = ModelDefinition::with_defaults(ModelKind::Bell);
    let eq = model.equilibrium(EquilibriumLabel::P1).unwrap();
    let sys = ModelSystem::new(
        model,
        NoiseSpec::new(rotational_slopes(0.3, -0.5), eq),
        NoiseKind::OneWiener,
    );
    let start = eq.state + Vec2::new(0.05, 0.05);
    let cfg = SimConfig::new(0.01, 500, start, Scheme::Euler2).unwrap();
    let a = simulate(&sys, &cfg, 7).unwrap();
    let b = simulate(&sys, &cfg, 7).unwrap();
    let c = simulate(&sys, &cfg, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.states, c.states);
}

#[test]
fn anchored_equilibria_stay_put() {
    for (kind, label) in [
        (ModelKind::Bell, EquilibriumLabel::P1),
        (ModelKind::Bell, EquilibriumLabel::P2),
        (ModelKind::KuznetsovTaylor, EquilibriumLabel::P1),
    ] {
        let model = ModelDefinition::with_defaults(kind);
        let eq = model.equilibrium(label).unwrap();
        let sys = ModelSystem::new(
            model,
            NoiseSpec::new(Mat2::new(1.0, -2.0, 2.0, 1.0), eq),
            NoiseKind::OneWiener,
        );
        for scheme in [Scheme::Euler, Scheme::Euler2] {
            let cfg = SimConfig::new(0.01, 1000, eq.state, scheme).unwrap();
            let traj = simulate(&sys, &cfg, 3).unwrap();
            let drift = (traj.last() - eq.state).norm();
            assert!(
                drift < 1e-10 * (1.0 + eq.state.norm()),
                "{kind:?} {label} {scheme}: moved {drift}"
            );
        }
    }
}

#[test]
fn blow_up_truncates_the_trajectory() {
    let sys = LinearSde::one_wiener(Mat2::identity() * 400.0, Mat2::zeros());
    let cfg = SimConfig::new(0.5, 1000, Vec2::new(1.0, 1.0), Scheme::Euler).unwrap();
    let traj = simulate(&sys, &cfg, 0).unwrap();
    let n = traj.blow_up.expect("must overflow");
    assert_eq!(traj.len(), n);
    assert!(traj
        .states
        .iter()
        .all(|s| s.x.is_finite() && s.y.is_finite()));
}
