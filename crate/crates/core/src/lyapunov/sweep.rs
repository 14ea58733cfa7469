//! Exponent as a function of the volatility parameter `alpha` with
//! `B = [[alpha, -beta], [beta, alpha]]`.

use std::io::{self, Write};

use rayon::prelude::*;

use super::{lyapunov, LyapunovOptions, LyapunovResult, MethodChoice};
use crate::error::{Error, Result};
use crate::linearize::{linearize_at, rotational_slopes, NoiseSpec};
use crate::models::{Equilibrium, ModelDefinition};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    /// The estimate, or the reason this point failed.
    pub outcome: std::result::Result<LyapunovResult, String>,
}

impl SweepRow {
    pub fn lambda(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|r| r.lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub beta: f64,
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    /// CSV with header `alpha,lambda,method,diag`. Failed points keep their
    /// row with an empty `lambda`, method `failed` and the reason in `diag`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "alpha,lambda,method,diag")?;
        for row in &self.rows {
            match &row.outcome {
                Ok(r) => writeln!(
                    w,
                    "{:.6},{:.16e},{},{}",
                    row.alpha, r.lambda, r.method, r.diagnostics
                )?,
                Err(reason) => {
                    writeln!(w, "{:.6},,failed,{}", row.alpha, reason.replace(',', ";"))?
                }
            }
        }
        Ok(())
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

/// `min, min + step, ...` up to `max` inclusive (within half a step).
pub fn alpha_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && min.is_finite() && max.is_finite() && max >= min) {
        return Err(Error::Domain(format!(
            "bad alpha range [{min}, {max}] with step {step}"
        )));
    }
    let count = ((max - min) / step + 0.5).floor() as usize;
    Ok((0..=count).map(|i| min + i as f64 * step).collect())
}

/// Evaluate the exponent at every `alpha`. Points are independent and run in
/// parallel; rows keep the order of `alphas`. Every point uses the same seed.
pub fn sweep_alpha(
    model: &ModelDefinition,
    eq: &Equilibrium,
    beta: f64,
    alphas: &[f64],
    choice: MethodChoice,
    opts: &LyapunovOptions,
) -> Result<Sweep> {
    // staleness does not depend on alpha; report it once
    linearize_at(
        model,
        eq,
        &NoiseSpec::new(rotational_slopes(0.0, beta), *eq),
    )?;
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let noise = NoiseSpec::new(rotational_slopes(alpha, beta), *eq);
            let outcome = linearize_at(model, eq, &noise)
                .and_then(|sys| lyapunov(&sys, choice, opts))
                .map_err(|e| e.to_string());
            if let Err(reason) = &outcome {
                log::warn!("alpha = {alpha}: {reason}");
            }
            SweepRow { alpha, outcome }
        })
        .collect();
    Ok(Sweep { beta, rows })
}

/// Locations where the exponent changes sign, by linear interpolation between
/// adjacent successful samples. A sample that is exactly zero counts once.
pub fn sign_changes(sweep: &Sweep) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = sweep
        .rows
        .iter()
        .filter_map(|r| r.lambda().map(|l| (r.alpha, l)))
        .collect();
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let ((a0, l0), (a1, l1)) = (w[0], w[1]);
        if l0 == 0.0 {
            if out.last() != Some(&a0) {
                out.push(a0);
            }
        } else if l0 * l1 < 0.0 {
            out.push(a0 - l0 * (a1 - a0) / (l1 - l0));
        }
    }
    if let Some(&(a, l)) = pts.last() {
        if l == 0.0 && out.last() != Some(&a) {
            out.push(a);
        }
    }
    out
}
