//! Run configuration: a TOML file with top-level keys and `[section]` tables.
//!
//! ```toml
//! model = "bell"              # kuznetsov-taylor | bell | volterra | ...
//! equilibrium = "P2"          # P1 | P2 | index into the equilibrium list
//! out = "out/bell-p2"
//!
//! [params]                    # overrides of the default parameters
//! a1 = 2.5
//!
//! [noise]                     # exactly one form
//! alpha = 3.0                 # B = [[alpha, -beta], [beta, alpha]]
//! beta = -2.0
//! # slopes = [[10.0, -2.0], [2.0, 10.0]]
//! # sigma = [0.1, 0.1]        # independent noises sigma_i (x_i - x_i*) dW_i
//!
//! [sim]
//! h = 0.01
//! steps = 5000
//! seed = 42
//! scheme = "euler2"           # euler | euler2 | euler2-cross
//! offset = [0.01, 0.01]       # start = equilibrium + offset, or give `start`
//! deterministic = false       # true drops the noise (ODE)
//!
//! [lyapunov]
//! methods = ["closed_form", "grid", "monte_carlo"]
//! grid_n = 2000
//! paths = 10000
//! horizon = 50.0
//! h = 0.001
//! density = true              # write density.csv
//!
//! [sweep]
//! alpha_min = -4.0
//! alpha_max = 4.0
//! step = 0.05
//! beta = -2.0
//! method = "grid"
//!
//! [stability]
//! omega = [1.0, 1.0]          # optional fixed weights
//! ratio = "cancelling"        # cancelling | printed (Bell certificate)
//! moment_paths = 10000
//! ```
//!
//! Every run echoes the fully resolved configuration (all defaults filled in)
//! into its manifest, so the echo alone reproduces the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochstab::linalg::Mat2;
use stochstab::linearize::{default_slopes, DEFAULT_ALPHA, DEFAULT_BETA};
use stochstab::lyapunov::{DensityOptions, LyapunovOptions, McConfig, MethodChoice};
use stochstab::models::{EquilibriumLabel, ModelDefinition, ModelKind, ModelParameters};
use stochstab::simulate::{Scheme, SimConfig};
use stochstab::stability::{MomentConfig, WeightRatio};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub equilibrium: Option<String>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub sim: SimBlock,
    #[serde(default)]
    pub lyapunov: LyapunovBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub stability: StabilityBlock,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub slopes: Option<[[f64; 2]; 2]>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub h: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub scheme: Option<String>,
    pub start: Option<[f64; 2]>,
    pub offset: Option<[f64; 2]>,
    pub deterministic: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovBlock {
    pub methods: Option<Vec<String>>,
    pub grid_n: Option<usize>,
    pub paths: Option<usize>,
    pub horizon: Option<f64>,
    pub h: Option<f64>,
    pub burn_in: Option<f64>,
    pub extrapolate: Option<bool>,
    pub density: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub step: Option<f64>,
    pub beta: Option<f64>,
    pub method: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityBlock {
    pub omega: Option<[f64; 2]>,
    pub ratio: Option<String>,
    pub moment_paths: Option<usize>,
    pub moment_h: Option<f64>,
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseForm {
    Slopes(Mat2),
    Rotational { alpha: f64, beta: f64 },
    Diagonal { sigma1: f64, sigma2: f64 },
}

impl NoiseForm {
    pub fn slopes(&self) -> Mat2 {
        match *self {
            NoiseForm::Slopes(b) => b,
            NoiseForm::Rotational { alpha, beta } => {
                stochstab::linearize::rotational_slopes(alpha, beta)
            }
            NoiseForm::Diagonal { sigma1, sigma2 } => Mat2::new(sigma1, 0.0, 0.0, sigma2),
        }
    }
}

/// A configuration with every default applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: ModelDefinition,
    pub equilibrium: EquilibriumLabel,
    pub out: PathBuf,
    pub noise: NoiseForm,
    pub seed: u64,
    pub sim: SimConfigParts,
    pub lyapunov_methods: Vec<MethodChoice>,
    pub lyapunov: LyapunovOptions,
    pub write_density: bool,
    pub sweep: SweepParts,
    pub omega: Option<[f64; 2]>,
    pub ratio: WeightRatio,
    pub moments: MomentConfig,
    /// The configuration that reproduces this run.
    pub echo: RunConfig,
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfigParts {
    pub h: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub start: Option<[f64; 2]>,
    pub offset: [f64; 2],
    pub deterministic: bool,
}

impl SimConfigParts {
    pub fn config(&self, anchor: [f64; 2]) -> Result<SimConfig, CliError> {
        let start = self
            .start
            .unwrap_or([anchor[0] + self.offset[0], anchor[1] + self.offset[1]]);
        Ok(SimConfig::new(
            self.h,
            self.steps,
            stochstab::linalg::Vec2::new(start[0], start[1]),
            self.scheme,
        )?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepParts {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub step: f64,
    pub beta: f64,
    pub method: MethodChoice,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
}

pub fn parse_label(s: &str) -> Result<EquilibriumLabel, CliError> {
    match s {
        "P1" | "p1" => Ok(EquilibriumLabel::P1),
        "P2" | "p2" => Ok(EquilibriumLabel::P2),
        other => {
            let digits = other.strip_prefix('E').unwrap_or(other);
            digits
                .parse::<usize>()
                .map(EquilibriumLabel::Numeric)
                .map_err(|_| CliError::Input(format!("bad equilibrium selector `{other}`")))
        }
    }
}

fn method_name(m: MethodChoice) -> &'static str {
    match m {
        MethodChoice::Auto => "auto",
        MethodChoice::ClosedForm => "closed_form",
        MethodChoice::Grid => "grid",
        MethodChoice::MonteCarlo => "monte_carlo",
    }
}

fn resolve_noise(block: &NoiseBlock, kind: ModelKind) -> Result<NoiseForm, CliError> {
    let rotational = block.alpha.is_some() || block.beta.is_some();
    let forms = [block.slopes.is_some(), rotational, block.sigma.is_some()];
    match forms.iter().filter(|&&f| f).count() {
        0 => Ok(NoiseForm::Slopes(default_slopes(kind))),
        1 => {
            if let Some(s) = block.slopes {
                Ok(NoiseForm::Slopes(Mat2::new(
                    s[0][0], s[0][1], s[1][0], s[1][1],
                )))
            } else if let Some([s1, s2]) = block.sigma {
                stochstab::linearize::DiagonalNoiseSpec::new(s1, s2)?;
                Ok(NoiseForm::Diagonal {
                    sigma1: s1,
                    sigma2: s2,
                })
            } else {
                Ok(NoiseForm::Rotational {
                    alpha: block.alpha.unwrap_or(DEFAULT_ALPHA),
                    beta: block.beta.unwrap_or(DEFAULT_BETA),
                })
            }
        }
        _ => Err(CliError::Input(
            "[noise] must give exactly one of `slopes`, `alpha`/`beta`, `sigma`".into(),
        )),
    }
}

fn echo_noise(noise: &NoiseForm) -> NoiseBlock {
    match *noise {
        NoiseForm::Slopes(b) => NoiseBlock {
            slopes: Some([[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]]),
            ..NoiseBlock::default()
        },
        NoiseForm::Rotational { alpha, beta } => NoiseBlock {
            alpha: Some(alpha),
            beta: Some(beta),
            ..NoiseBlock::default()
        },
        NoiseForm::Diagonal { sigma1, sigma2 } => NoiseBlock {
            sigma: Some([sigma1, sigma2]),
            ..NoiseBlock::default()
        },
    }
}

pub fn resolve(cfg: &RunConfig, over: &Overrides) -> Result<Resolved, CliError> {
    let model_name = over
        .model
        .clone()
        .or_else(|| cfg.model.clone())
        .unwrap_or_else(|| "kuznetsov-taylor".into());
    let kind = ModelKind::from_name(&model_name)?;
    let mut params = ModelParameters::defaults(kind);
    for (k, v) in &cfg.params {
        params.set(k, *v);
    }
    let model = ModelDefinition::new(kind, params)?;
    let eq_name = cfg.equilibrium.clone().unwrap_or_else(|| "P1".into());
    let equilibrium = parse_label(&eq_name)?;
    let out = over
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let noise = resolve_noise(&cfg.noise, kind)?;
    let seed = over.seed.or(cfg.sim.seed).unwrap_or(42);

    let s = &cfg.sim;
    let scheme_name = s.scheme.clone().unwrap_or_else(|| "euler2".into());
    if s.start.is_some() && s.offset.is_some() {
        return Err(CliError::Input(
            "[sim] takes `start` or `offset`, not both".into(),
        ));
    }
    let sim = SimConfigParts {
        h: s.h.unwrap_or(SimConfig::DEFAULT_H),
        steps: s.steps.unwrap_or(SimConfig::DEFAULT_STEPS),
        scheme: scheme_name.parse()?,
        start: s.start,
        offset: if s.start.is_some() {
            [0.0, 0.0]
        } else {
            s.offset.unwrap_or([0.01, 0.01])
        },
        deterministic: s.deterministic.unwrap_or(false),
    };
    if !(sim.h > 0.0 && sim.h.is_finite()) {
        return Err(CliError::Input(format!(
            "[sim] h must be > 0, got {}",
            sim.h
        )));
    }

    let l = &cfg.lyapunov;
    let method_names = l.methods.clone().unwrap_or_else(|| vec!["auto".into()]);
    let lyapunov_methods = method_names
        .iter()
        .map(|m| m.parse::<MethodChoice>())
        .collect::<Result<Vec<_>, _>>()?;
    if lyapunov_methods.is_empty() {
        return Err(CliError::Input("[lyapunov] methods is empty".into()));
    }
    let mc_default = McConfig::default();
    let mc = McConfig {
        h: l.h.unwrap_or(mc_default.h),
        horizon: l.horizon.unwrap_or(mc_default.horizon),
        paths: l.paths.unwrap_or(mc_default.paths),
        burn_in: l.burn_in.unwrap_or(mc_default.burn_in),
        extrapolate: l.extrapolate.unwrap_or(mc_default.extrapolate),
        initial_radius: 1.0,
    };
    mc.validate()?;
    let density = DensityOptions::with_grid_n(l.grid_n.unwrap_or(DensityOptions::default().grid_n));
    let lyapunov = LyapunovOptions { density, mc, seed };
    let write_density = l.density.unwrap_or(true);

    let w = &cfg.sweep;
    let beta_default = match noise {
        NoiseForm::Rotational { beta, .. } => beta,
        _ => DEFAULT_BETA,
    };
    let sweep = SweepParts {
        alpha_min: w.alpha_min.unwrap_or(-4.0),
        alpha_max: w.alpha_max.unwrap_or(4.0),
        step: w.step.unwrap_or(0.05),
        beta: w.beta.unwrap_or(beta_default),
        method: w.method.as_deref().unwrap_or("grid").parse()?,
    };
    stochstab::lyapunov::alpha_grid(sweep.alpha_min, sweep.alpha_max, sweep.step)?;

    let st = &cfg.stability;
    let ratio = match st.ratio.as_deref().unwrap_or("cancelling") {
        "cancelling" => WeightRatio::Cancelling,
        "printed" => WeightRatio::Printed,
        other => return Err(CliError::Input(format!("unknown weight ratio `{other}`"))),
    };
    if let Some([w1, w2]) = st.omega {
        stochstab::stability::QuadraticForm::new(w1, w2)?;
    }
    let moments = MomentConfig {
        paths: st.moment_paths.unwrap_or(MomentConfig::default().paths),
        h: st.moment_h.unwrap_or(MomentConfig::default().h),
        ..MomentConfig::default()
    };

    let echo = RunConfig {
        model: Some(kind.name().into()),
        equilibrium: Some(eq_name),
        out: Some(out.clone()),
        params: model
            .params()
            .iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        noise: echo_noise(&noise),
        sim: SimBlock {
            h: Some(sim.h),
            steps: Some(sim.steps),
            seed: Some(seed),
            scheme: Some(sim.scheme.name().into()),
            start: sim.start,
            offset: sim.start.is_none().then_some(sim.offset),
            deterministic: Some(sim.deterministic),
        },
        lyapunov: LyapunovBlock {
            methods: Some(
                lyapunov_methods
                    .iter()
                    .map(|m| method_name(*m).into())
                    .collect(),
            ),
            grid_n: Some(density.grid_n),
            paths: Some(mc.paths),
            horizon: Some(mc.horizon),
            h: Some(mc.h),
            burn_in: Some(mc.burn_in),
            extrapolate: Some(mc.extrapolate),
            density: Some(write_density),
        },
        sweep: SweepBlock {
            alpha_min: Some(sweep.alpha_min),
            alpha_max: Some(sweep.alpha_max),
            step: Some(sweep.step),
            beta: Some(sweep.beta),
            method: Some(method_name(sweep.method).into()),
        },
        stability: StabilityBlock {
            omega: st.omega,
            ratio: Some(
                match ratio {
                    WeightRatio::Cancelling => "cancelling",
                    WeightRatio::Printed => "printed",
                }
                .into(),
            ),
            moment_paths: Some(moments.paths),
            moment_h: Some(moments.h),
        },
    };

    Ok(Resolved {
        model,
        equilibrium,
        out,
        noise,
        seed,
        sim,
        lyapunov_methods,
        lyapunov,
        write_density,
        sweep,
        omega: st.omega,
        ratio,
        moments,
        echo,
    })
}
