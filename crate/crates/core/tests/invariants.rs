//! Property tests: derivatives, the generator, certificates and the
//! stationary angle density under symmetries of the linear system.

use proptest::prelude::*;

use stochstab::linalg::{spectral_abscissa, Mat2, Vec2};
use stochstab::linearize::{rotational_slopes, LinearSde};
use stochstab::lyapunov::{
    angular_coeffs, flux_residual, lyapunov, lyapunov_from_density, stationary_density_closed,
    LyapunovOptions, MethodChoice,
};
use stochstab::models::{ModelDefinition, ModelKind};
use stochstab::stability::{apply_lv, classify, Certificate, QuadraticForm, VerdictKind};

fn mat(range: f64) -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(-range..range).prop_map(|[a, b, c, d]| Mat2::new(a, b, c, d))
}

fn rotation(phi: f64) -> Mat2 {
    let (s, c) = phi.sin_cos();
    Mat2::new(c, -s, s, c)
}

fn fd_jacobian(model: &ModelDefinition, s: Vec2) -> Mat2 {
    let h = 1e-6;
    let mut j = Mat2::zeros();
    for k in 0..2 {
        let mut e = Vec2::zeros();
        e[k] = h;
        let d = (model.drift(s + e) - model.drift(s - e)) / (2.0 * h);
        j[(0, k)] = d.x;
        j[(1, k)] = d.y;
    }
    j
}

/// Generator of `V = u' W u / 2` for `du = A u dt + B u dW`, built from the
/// gradient and Hessian of `V` directly.
fn generator_oracle(a: &Mat2, b: &Mat2, w: (f64, f64), u: Vec2) -> f64 {
    let hess = Mat2::new(w.0, 0.0, 0.0, w.1);
    let grad = hess * u;
    let g = b * u;
    grad.dot(&(a * u)) + 0.5 * (g.transpose() * hess * g)[(0, 0)]
}

fn closed_lambda(sys: &LinearSde) -> f64 {
    let q = angular_coeffs(sys).unwrap();
    let p = stationary_density_closed(sys, 2000).unwrap();
    lyapunov_from_density(&q, &p).lambda
}

/// Linear systems whose angular diffusion stays away from zero.
fn nondegenerate() -> impl Strategy<Value = LinearSde> {
    (mat(1.5), mat(1.5))
        .prop_map(|(a, b)| LinearSde::one_wiener(a, b))
        .prop_filter("angular diffusion too small", |sys| {
            angular_coeffs(sys)
                .map(|q| q.min_abs_q4() >= 0.2)
                .unwrap_or(false)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobian_matches_finite_differences(
        kt in any::<bool>(),
        x in 0.05f64..5.0,
        y in 0.05f64..5.0,
    ) {
        let kind = if kt { ModelKind::KuznetsovTaylor } else { ModelKind::Bell };
        let model = ModelDefinition::with_defaults(kind);
        let s = Vec2::new(x, y);
        let exact = model.jacobian(s);
        let fd = fd_jacobian(&model, s);
        let scale = 1.0 + exact.abs().max();
        prop_assert!((exact - fd).abs().max() < 1e-6 * scale, "{exact} vs {fd}");
        // quadratic drifts: the Jacobian changes linearly along any direction
        let [h1, h2] = model.hessians(s);
        let d = Vec2::new(0.3, -0.7);
        let dj = model.jacobian(s + d) - exact;
        prop_assert!(((h1 * d).transpose() - dj.row(0)).abs().max() < 1e-9 * scale);
        prop_assert!(((h2 * d).transpose() - dj.row(1)).abs().max() < 1e-9 * scale);
    }

    #[test]
    fn equilibria_have_small_residuals(
        f in prop::array::uniform5(0.5f64..2.0),
    ) {
        let base = ModelKind::KuznetsovTaylor;
        let mut model = ModelDefinition::with_defaults(base);
        for (name, k) in base.parameter_names().iter().zip(f) {
            model = model.with_param(name, model.param(name) * k).unwrap();
        }
        let rep = model.find_equilibria().unwrap();
        prop_assert!(!rep.equilibria.is_empty());
        for e in &rep.equilibria {
            prop_assert!(e.residual < 1e-9, "{} residual {}", e.label, e.residual);
        }
    }

    #[test]
    fn lv_matches_generator(
        a in mat(3.0),
        b in mat(3.0),
        w1 in 0.1f64..10.0,
        w2 in 0.1f64..10.0,
        u in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let sys = LinearSde::one_wiener(a, b);
        let v = QuadraticForm::new(w1, w2).unwrap();
        let u = Vec2::new(u[0], u[1]);
        let got = apply_lv(&sys, &v, u);
        let want = generator_oracle(&a, &b, (w1, w2), u);
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
    }

    #[test]
    fn certificate_scales_with_weights(
        a in mat(3.0),
        b in mat(3.0),
        w1 in 0.1f64..10.0,
        w2 in 0.1f64..10.0,
        k in 0.01f64..100.0,
    ) {
        let sys = LinearSde::one_wiener(a, b);
        let v = QuadraticForm::new(w1, w2).unwrap();
        let c = Certificate::from_lv(&sys, v);
        let ck = Certificate::from_lv(&sys, v.scaled(k));
        let tol = 1e-9 * k * (1.0 + c.q1.abs() + c.q2.abs() + c.cross.abs());
        prop_assert!((ck.q1 - k * c.q1).abs() <= tol);
        prop_assert!((ck.q2 - k * c.q2).abs() <= tol);
        prop_assert!((ck.cross - k * c.cross).abs() <= tol);
        prop_assert_eq!(ck.valid, c.valid);
    }

    #[test]
    fn hurwitz_drift_without_noise_is_never_unstable(a in mat(3.0)) {
        prop_assume!(spectral_abscissa(&a) < -1e-3);
        let sys = LinearSde::one_wiener(a, Mat2::zeros());
        let v = classify(&sys, None, &LyapunovOptions::default()).unwrap();
        prop_assert!(v.kind != VerdictKind::Unstable && v.kind != VerdictKind::Inconclusive, "{}", v.kind);
    }

    #[test]
    fn valid_certificate_means_negative_exponent(
        d in prop::array::uniform2(0.5f64..4.0),
        da in mat(0.5),
        rot in (-1.0f64..1.0, 1.0f64..2.0),
        db in mat(0.3),
    ) {
        let a = Mat2::new(-d[0], 0.0, 0.0, -d[1]) + da;
        let sys = LinearSde::one_wiener(a, rotational_slopes(rot.0, rot.1) + db);
        prop_assume!(angular_coeffs(&sys).map(|q| q.min_abs_q4() >= 0.2).unwrap_or(false));
        let v = classify(&sys, None, &LyapunovOptions::default()).unwrap();
        prop_assume!(v.kind == VerdictKind::MeanSquareStable);
        prop_assert!(closed_lambda(&sys) < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn density_is_a_periodic_probability(sys in nondegenerate()) {
        let q = angular_coeffs(&sys).unwrap();
        let p = stationary_density_closed(&sys, 2000).unwrap();
        prop_assert!((p.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(p.min_value() > 0.0);
        prop_assert!(p.endpoint_gap() < 1e-9, "gap {}", p.endpoint_gap());
        prop_assert!(flux_residual(&q, &p) < 1e-3, "flux {}", flux_residual(&q, &p));
    }

    #[test]
    fn exponent_is_invariant_under_rotation_and_reflection(sys in nondegenerate(), phi in 0.0f64..6.3) {
        let base = closed_lambda(&sys);
        let r = rotation(phi);
        let rotated = LinearSde::one_wiener(r * sys.a * r.transpose(), r * sys.b * r.transpose());
        let s = Mat2::new(1.0, 0.0, 0.0, -1.0);
        let reflected = LinearSde::one_wiener(s * sys.a * s, s * sys.b * s);
        let tol = 1e-5 * (1.0 + base.abs());
        prop_assert!((closed_lambda(&rotated) - base).abs() < tol, "rotated {} vs {base}", closed_lambda(&rotated));
        prop_assert!((closed_lambda(&reflected) - base).abs() < tol);
    }

    #[test]
    fn exponent_scales_with_time(sys in nondegenerate(), c in 0.2f64..5.0) {
        let base = closed_lambda(&sys);
        let scaled = LinearSde::one_wiener(sys.a * c, sys.b * c.sqrt());
        prop_assert!((closed_lambda(&scaled) - c * base).abs() < 1e-7 * c * (1.0 + base.abs()));
    }

    #[test]
    fn isotropic_exponent_is_exact(a in -2.0f64..2.0, alpha in -2.0f64..2.0, beta in 0.3f64..2.0) {
        let sys = LinearSde::one_wiener(Mat2::identity() * a, rotational_slopes(alpha, beta));
        let exact = a + 0.5 * (beta * beta - alpha * alpha);
        let got = lyapunov(&sys, MethodChoice::ClosedForm, &LyapunovOptions::default()).unwrap().lambda;
        prop_assert!((got - exact).abs() < 1e-9, "{got} vs {exact}");
    }
}
