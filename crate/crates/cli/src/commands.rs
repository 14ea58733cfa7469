//! The five subcommands. Each writes its files through a [`Recorder`] and
//! prints a short report on standard output.

use std::fmt::Write as _;

use stochstab::linalg::{eigen_real_parts, Mat2};
use stochstab::linearize::{linearize_at, LinearSde, NoiseKind, NoiseSpec};
use stochstab::lyapunov::{
    alpha_grid, angular_coeffs, lyapunov, sign_changes, stationary_density_closed_with,
    sweep_alpha, MethodChoice,
};
use stochstab::models::{Equilibrium, ModelKind};
use stochstab::simulate::{simulate, ModelSystem};
use stochstab::stability::{
    bell_certificate, classify, second_moment_rate, QuadraticForm, VerdictKind,
};

use crate::config::{NoiseForm, Resolved};
use crate::error::CliError;
use crate::manifest::Recorder;
use crate::plot::LinePlot;

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn noise_kind(noise: &NoiseForm) -> NoiseKind {
    match noise {
        NoiseForm::Diagonal { .. } => NoiseKind::TwoWiener,
        _ => NoiseKind::OneWiener,
    }
}

/// The linearization `du = A u dt + B u dW` at `eq` under the configured noise.
fn linear_system(r: &Resolved, eq: &Equilibrium) -> Result<LinearSde, CliError> {
    let one = linearize_at(&r.model, eq, &NoiseSpec::new(r.noise.slopes(), *eq))?;
    Ok(LinearSde::new(one.a, one.b, noise_kind(&r.noise)))
}

pub fn equilibria(r: &Resolved, rec: &mut Recorder) -> Result<String, CliError> {
    let report = r.model.find_equilibria()?;
    let mut csv = String::from("label,x,y,residual,eig_re1,eig_re2\n");
    let mut out = String::new();
    for e in &report.equilibria {
        let [re1, re2] = eigen_real_parts(&r.model.jacobian(e.state));
        let _ = writeln!(
            csv,
            "{},{:.16e},{:.16e},{:.6e},{:.16e},{:.16e}",
            e.label, e.state.x, e.state.y, e.residual, re1, re2
        );
        let _ = writeln!(
            out,
            "{}: x = {:.6}, y = {:.6}, residual = {:.1e}, Re(eig) = ({:.6}, {:.6})",
            e.label, e.state.x, e.state.y, e.residual, re1, re2
        );
    }
    for (label, reason) in &report.absent {
        rec.warn(format!("{label} absent: {reason}"));
    }
    rec.write("equilibria.csv", csv.as_bytes())?;
    Ok(out)
}

pub fn simulate_cmd(r: &Resolved, rec: &mut Recorder) -> Result<String, CliError> {
    let eq = r.model.equilibrium(r.equilibrium)?;
    let slopes = r.noise.slopes();
    let sys = if r.sim.deterministic || slopes == Mat2::zeros() {
        ModelSystem::deterministic(r.model.clone())
    } else {
        ModelSystem::new(
            r.model.clone(),
            NoiseSpec::new(slopes, eq),
            noise_kind(&r.noise),
        )
    };
    let cfg = r.sim.config([eq.state.x, eq.state.y])?;
    rec.seed(r.seed);
    let traj = simulate(&sys, &cfg, r.seed)?;
    if let Some(n) = traj.blow_up {
        rec.truncated = true;
        rec.warn(format!(
            "trajectory left the finite range at step {n}; output stops at step {}",
            n - 1
        ));
    }
    rec.write("traj.csv", &csv_bytes(|w| traj.write_csv(w)))?;

    let n: Vec<f64> = (0..traj.len()).map(|i| i as f64).collect();
    let xs: Vec<f64> = traj.states.iter().map(|s| s.x).collect();
    let ys: Vec<f64> = traj.states.iter().map(|s| s.y).collect();
    let what = if sys.noise.is_none() { "ODE" } else { "SDE" };
    let title = |v: &str| format!("{} {} at {}: {v}", r.model.name(), what, r.equilibrium);
    for (file, t, xl, yl, px, py) in [
        ("x_vs_n.svg", title("x(n)"), "n", "x", &n, &xs),
        ("y_vs_n.svg", title("y(n)"), "n", "y", &n, &ys),
        ("phase.svg", title("(x(n), y(n))"), "x", "y", &xs, &ys),
    ] {
        let svg = LinePlot {
            title: &t,
            x_label: xl,
            y_label: yl,
            xs: px,
            ys: py,
            zero_line: false,
        }
        .render();
        rec.write(file, svg.as_bytes())?;
    }
    let last = traj.last();
    Ok(format!(
        "{} {what} from ({:.6}, {:.6}), {} rows, scheme {}, seed {}; final state ({:.6e}, {:.6e})\n",
        r.model.name(),
        cfg.initial_state.x,
        cfg.initial_state.y,
        traj.len(),
        cfg.scheme,
        r.seed,
        last.x,
        last.y
    ))
}

pub fn lyapunov_cmd(r: &Resolved, rec: &mut Recorder) -> Result<String, CliError> {
    let eq = r.model.equilibrium(r.equilibrium)?;
    let sys = linear_system(r, &eq)?;
    rec.seed(r.seed);
    let mut out = String::new();
    let mut csv = String::from("method,lambda,diag\n");
    for &choice in &r.lyapunov_methods {
        let res = lyapunov(&sys, choice, &r.lyapunov)?;
        if let Some(note) = &res.diagnostics.note {
            rec.warn(format!("{}: {note}", res.method));
        }
        let _ = writeln!(
            out,
            "lambda[{}] = {:.10e}  {}",
            res.method, res.lambda, res.diagnostics
        );
        let _ = writeln!(
            csv,
            "{},{:.16e},{}",
            res.method, res.lambda, res.diagnostics
        );
    }
    rec.write("lyapunov.csv", csv.as_bytes())?;
    if r.write_density {
        if sys.noise != NoiseKind::OneWiener || sys.is_deterministic() {
            rec.warn("no stationary angle density for this noise; density.csv skipped".into());
        } else {
            let q = angular_coeffs(&sys)?;
            match stationary_density_closed_with(&q, &r.lyapunov.density) {
                Ok(p) => rec.write("density.csv", &csv_bytes(|w| p.write_csv(w)))?,
                Err(stochstab::Error::DegenerateDiffusion { min_q4 }) => rec.warn(format!(
                    "angular diffusion vanishes (min |q4| = {min_q4:.3e}); density.csv skipped"
                )),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(out)
}

pub fn sweep_cmd(r: &Resolved, rec: &mut Recorder) -> Result<String, CliError> {
    let eq = r.model.equilibrium(r.equilibrium)?;
    let s = &r.sweep;
    let alphas = alpha_grid(s.alpha_min, s.alpha_max, s.step)?;
    if s.method == MethodChoice::MonteCarlo {
        rec.seed(r.seed);
    }
    let sweep = sweep_alpha(&r.model, &eq, s.beta, &alphas, s.method, &r.lyapunov)?;
    for row in &sweep.rows {
        if let Err(reason) = &row.outcome {
            rec.warnings
                .push(format!("alpha = {}: {reason}", row.alpha));
        }
    }
    rec.write("sweep.csv", &csv_bytes(|w| sweep.write_csv(w)))?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = sweep
        .rows
        .iter()
        .filter_map(|row| row.lambda().map(|l| (row.alpha, l)))
        .unzip();
    let title = format!(
        "{} at {}: lambda(alpha), beta = {}",
        r.model.name(),
        r.equilibrium,
        s.beta
    );
    let svg = LinePlot {
        title: &title,
        x_label: "alpha",
        y_label: "lambda",
        xs: &xs,
        ys: &ys,
        zero_line: true,
    }
    .render();
    rec.write("lambda_vs_alpha.svg", svg.as_bytes())?;
    let crossings = sign_changes(&sweep);
    let list: Vec<String> = crossings.iter().map(|a| format!("{a:.4}")).collect();
    Ok(format!(
        "{} points ({} failed), beta = {}\nsign changes at alpha = [{}]\n",
        sweep.rows.len(),
        sweep.failures(),
        s.beta,
        list.join(", ")
    ))
}

pub fn stability_cmd(r: &Resolved, rec: &mut Recorder) -> Result<String, CliError> {
    let report = r.model.find_equilibria()?;
    for (label, reason) in &report.absent {
        rec.warn(format!("{label} absent: {reason}"));
    }
    let omega = r
        .omega
        .map(|[w1, w2]| QuadraticForm::new(w1, w2))
        .transpose()?;
    rec.seed(r.seed);
    let mut text = String::new();
    for eq in &report.equilibria {
        let sys = linear_system(r, eq)?;
        let verdict = classify(&sys, omega, &r.lyapunov)?;
        text.push_str(&verdict.report(&eq.label.to_string()));
        if let (ModelKind::Bell, NoiseForm::Diagonal { sigma1, sigma2 }) = (r.model.kind(), r.noise)
        {
            let bell = bell_certificate(&r.model, eq, sigma1, sigma2, r.ratio)?;
            text.push_str(&bell.report());
        }
        if verdict.kind == VerdictKind::MeanSquareStable {
            let m = second_moment_rate(&sys, &r.moments, r.seed)?;
            let _ = writeln!(text, "moment_rate = {:.6e}", m.rate);
            let _ = writeln!(text, "moment_rate_se = {:.6e}", m.std_error);
            let _ = writeln!(text, "moment_decays = {}", m.decays());
            if !m.decays() {
                rec.warn(format!(
                    "{}: certificate says mean-square stable but the simulated second moment does not decay \
                     (rate {:.3e} +- {:.1e})",
                    eq.label, m.rate, m.std_error
                ));
            }
        }
        text.push('\n');
    }
    rec.write("stability.txt", text.as_bytes())?;
    Ok(text)
}
