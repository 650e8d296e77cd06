//! Seeded simulation experiments comparing FDR thresholding against the
//! fixed threshold `t*(p, n)` on a sparse weak-`ℓp` configuration.
//!
//! Every replicate draws its noise once; all estimators and all rates `q`
//! are evaluated on that same draw, so ratios are paired.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::FdrBoundary;
use crate::error::{Error, Result};
use crate::estimators::{foster_george_index, Method};
use crate::io::read_vector;
use crate::risk::{mean_and_se, ReplicateDraw};
use crate::spaces::{sim_least_favorable, t_star, ConfigLabel, Configuration};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EstimatorTag {
    StepUp,
    StepDown,
    PenalizedR(f64),
    FosterGeorge,
    FixedTStar,
}

impl EstimatorTag {
    pub fn name(&self) -> String {
        match self {
            EstimatorTag::StepUp => "step_up".into(),
            EstimatorTag::StepDown => "step_down".into(),
            EstimatorTag::PenalizedR(r) => format!("penalized_r{r}"),
            EstimatorTag::FosterGeorge => "foster_george".into(),
            EstimatorTag::FixedTStar => "fixed_t_star".into(),
        }
    }

    fn method(&self) -> Option<Method> {
        match *self {
            EstimatorTag::StepUp => Some(Method::StepUp),
            EstimatorTag::StepDown => Some(Method::StepDown),
            EstimatorTag::PenalizedR(r) => Some(Method::PenalizedR(r)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConfigKind {
    SimLeastFavorable,
    Null,
    File(PathBuf),
}

fn default_p() -> f64 {
    1.5
}
fn default_q_list() -> Vec<f64> {
    vec![0.01, 0.05, 0.25, 0.40, 0.50, 0.75, 0.99]
}
fn default_estimators() -> Vec<EstimatorTag> {
    vec![
        EstimatorTag::StepUp,
        EstimatorTag::PenalizedR(2.0),
        EstimatorTag::StepDown,
    ]
}
fn default_replicates() -> usize {
    100
}
fn default_seed() -> u64 {
    1
}
fn default_r() -> f64 {
    2.0
}
fn default_config() -> ConfigKind {
    ConfigKind::SimLeastFavorable
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q_list")]
    pub q_list: Vec<f64>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorTag>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_r")]
    pub loss_exponent: f64,
    #[serde(default = "default_config")]
    pub config_kind: ConfigKind,
    /// Use `n^{-1/2}` instead of `n^{1/2}` in the simulation configuration.
    #[serde(default)]
    pub printed_exponent: bool,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidSpec(format!("{field}: {msg}"))
}

impl ExperimentSpec {
    /// Defaults for everything except `n`.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            p: default_p(),
            q_list: default_q_list(),
            estimators: default_estimators(),
            replicates: default_replicates(),
            seed: default_seed(),
            loss_exponent: default_r(),
            config_kind: default_config(),
            printed_exponent: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", format!("must be at least 2, got {}", self.n)));
        }
        if !(self.p > 0.0 && self.p < 2.0) {
            return Err(invalid("p", format!("must lie in (0, 2), got {}", self.p)));
        }
        if self.q_list.is_empty() {
            return Err(invalid("q_list", "must not be empty"));
        }
        for (i, &q) in self.q_list.iter().enumerate() {
            if !(q > 0.0 && q < 1.0) {
                return Err(invalid(
                    &format!("q_list[{i}]"),
                    format!("must lie in (0, 1), got {q}"),
                ));
            }
        }
        if self.replicates < 2 {
            return Err(invalid(
                "replicates",
                format!("must be at least 2, got {}", self.replicates),
            ));
        }
        if !(self.loss_exponent > 0.0 && self.loss_exponent <= 2.0) {
            return Err(invalid(
                "loss_exponent",
                format!("must lie in (0, 2], got {}", self.loss_exponent),
            ));
        }
        for (i, e) in self.estimators.iter().enumerate() {
            if let EstimatorTag::PenalizedR(r) = e {
                if !(*r > 0.0 && *r <= 2.0) {
                    return Err(invalid(
                        &format!("estimators[{i}]"),
                        format!("penalty exponent must lie in (0, 2], got {r}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The means vector; relative file paths resolve against `base`.
    pub fn configuration(&self, base: Option<&Path>) -> Result<Configuration> {
        match &self.config_kind {
            ConfigKind::SimLeastFavorable => {
                sim_least_favorable(self.n, self.p, self.printed_exponent)
            }
            ConfigKind::Null => Ok(Configuration::null(self.n)),
            ConfigKind::File(path) => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let values = read_vector(&full)?;
                if values.len() != self.n {
                    return Err(invalid(
                        "config_kind",
                        format!(
                            "{} holds {} values but n = {}",
                            full.display(),
                            values.len(),
                            self.n
                        ),
                    ));
                }
                Configuration::new(values, ConfigLabel::UserFile, None)
            }
        }
    }
}

/// One estimator measured against the `t*` reference on paired replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedStat {
    pub estimator: String,
    /// Mean loss divided by `n`.
    pub mse: f64,
    pub mse_se: f64,
    /// Mean loss over mean reference loss.
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_se: f64,
    pub mean_of_ratios: f64,
    pub mean_of_ratios_se: f64,
}

impl PairedStat {
    fn new(name: String, a: &[f64], b: &[f64], n: usize) -> Self {
        let m = a.len() as f64;
        let (mean_a, se_a) = mean_and_se(a);
        let (mean_b, _) = mean_and_se(b);
        let ratio = mean_a / mean_b;
        let resid_ss: f64 = a.iter().zip(b).map(|(x, y)| (x - ratio * y).powi(2)).sum();
        let ratio_se = (resid_ss / (m * (m - 1.0))).sqrt() / mean_b;
        let ratios: Vec<f64> = a.iter().zip(b).map(|(x, y)| x / y).collect();
        let (mor, mor_se) = mean_and_se(&ratios);
        let nf = n as f64;
        Self {
            estimator: name,
            mse: mean_a / nf,
            mse_se: se_a / nf,
            ratio,
            ratio_se,
            mean_of_ratios: mor,
            mean_of_ratios_se: mor_se,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n: usize,
    pub q: f64,
    pub ratio_step_up: Option<f64>,
    pub se_step_up: Option<f64>,
    pub ratio_penalized: Option<f64>,
    pub se_penalized: Option<f64>,
    pub ratio_step_down: Option<f64>,
    pub se_step_down: Option<f64>,
    /// Every boundary-based estimator in the spec, in spec order.
    pub details: Vec<PairedStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStat {
    pub t_star: f64,
    pub mse: f64,
    pub mse_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub provenance: Provenance,
    pub reference: ReferenceStat,
    pub rows: Vec<Table1Row>,
    /// Rates not depending on `q`.
    pub fixed: Vec<PairedStat>,
}

pub const RNG_DESCRIPTION: &str =
    "ChaCha8 seeded by seed_from_u64(seed), stream = replicate index; \
u = ((w >> 11) + 0.5) / 2^53 per 64-bit output w; z = inverse normal CDF of u";

struct ReplicateLosses {
    reference: f64,
    fixed: Vec<f64>,
    /// `[q][method]`
    by_q: Vec<Vec<f64>>,
}

fn simulate(spec: &ExperimentSpec, mu: &[f64]) -> Result<(f64, Vec<ReplicateLosses>)> {
    let t_ref = t_star(spec.p, spec.n)?;
    let boundaries = spec
        .q_list
        .iter()
        .map(|&q| FdrBoundary::new(spec.n, q))
        .collect::<Result<Vec<_>>>()?;
    let methods: Vec<Method> = spec.estimators.iter().filter_map(|e| e.method()).collect();
    let fixed: Vec<EstimatorTag> = spec
        .estimators
        .iter()
        .copied()
        .filter(|e| e.method().is_none())
        .collect();
    let r = spec.loss_exponent;
    let seed = spec.seed;
    let losses = (0..spec.replicates as u64)
        .into_par_iter()
        .map(|i| {
            let draw = ReplicateDraw::sample(mu, r, seed, i);
            let fixed = fixed
                .iter()
                .map(|e| match e {
                    EstimatorTag::FosterGeorge => {
                        draw.loss_keep_top(foster_george_index(draw.sorted().magnitudes(), 1.0))
                    }
                    _ => draw.loss_hard(t_ref),
                })
                .collect();
            let by_q = boundaries
                .iter()
                .map(|b| methods.iter().map(|&m| draw.loss_method(b, m)).collect())
                .collect();
            ReplicateLosses {
                reference: draw.loss_hard(t_ref),
                fixed,
                by_q,
            }
        })
        .collect();
    Ok((t_ref, losses))
}

/// Runs the experiment and assembles paired ratios against `t*`.
pub fn run_experiment(spec: &ExperimentSpec, base: Option<&Path>) -> Result<ExperimentResults> {
    spec.validate()?;
    let config = spec.configuration(base)?;
    let (t_ref, losses) = simulate(spec, &config.values)?;
    let n = spec.n;
    let reference: Vec<f64> = losses.iter().map(|l| l.reference).collect();
    let (ref_mean, ref_se) = mean_and_se(&reference);

    let method_tags: Vec<EstimatorTag> = spec
        .estimators
        .iter()
        .copied()
        .filter(|e| e.method().is_some())
        .collect();
    let fixed_tags: Vec<EstimatorTag> = spec
        .estimators
        .iter()
        .copied()
        .filter(|e| e.method().is_none())
        .collect();

    let rows = spec
        .q_list
        .iter()
        .enumerate()
        .map(|(qi, &q)| {
            let details: Vec<PairedStat> = method_tags
                .iter()
                .enumerate()
                .map(|(mi, tag)| {
                    let a: Vec<f64> = losses.iter().map(|l| l.by_q[qi][mi]).collect();
                    PairedStat::new(tag.name(), &a, &reference, n)
                })
                .collect();
            let pick = |want: fn(&EstimatorTag) -> bool| {
                method_tags
                    .iter()
                    .position(want)
                    .map(|i| (details[i].ratio, details[i].ratio_se))
            };
            let up = pick(|e| matches!(e, EstimatorTag::StepUp));
            let pen = pick(|e| matches!(e, EstimatorTag::PenalizedR(_)));
            let down = pick(|e| matches!(e, EstimatorTag::StepDown));
            Table1Row {
                n,
                q,
                ratio_step_up: up.map(|v| v.0),
                se_step_up: up.map(|v| v.1),
                ratio_penalized: pen.map(|v| v.0),
                se_penalized: pen.map(|v| v.1),
                ratio_step_down: down.map(|v| v.0),
                se_step_down: down.map(|v| v.1),
                details,
            }
        })
        .collect();

    let fixed = fixed_tags
        .iter()
        .enumerate()
        .map(|(fi, tag)| {
            let a: Vec<f64> = losses.iter().map(|l| l.fixed[fi]).collect();
            PairedStat::new(tag.name(), &a, &reference, n)
        })
        .collect();

    Ok(ExperimentResults {
        provenance: Provenance {
            tool: "sparsefdr".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            rng: RNG_DESCRIPTION.into(),
            spec: spec.clone(),
        },
        reference: ReferenceStat {
            t_star: t_ref,
            mse: ref_mean / n as f64,
            mse_se: ref_se / n as f64,
        },
        rows,
        fixed,
    })
}

/// Step-up, penalized (`r = 2`) and step-down ratios for each `q` in the spec.
pub fn run_table1(spec: &ExperimentSpec) -> Result<Vec<Table1Row>> {
    Ok(run_experiment(spec, None)?.rows)
}

/// Foster–George penalty against `t*` on the simulation configuration.
pub fn run_foster_george(n: usize, p: f64, replicates: usize, seed: u64) -> Result<PairedStat> {
    let spec = ExperimentSpec {
        q_list: vec![0.5],
        estimators: vec![EstimatorTag::FosterGeorge],
        replicates,
        seed,
        p,
        ..ExperimentSpec::new(n)
    };
    let mut res = run_experiment(&spec, None)?;
    Ok(res.fixed.remove(0))
}

/// Pretty JSON with a trailing newline; identical inputs give identical bytes.
pub fn results_json(results: &ExperimentResults) -> Result<String> {
    let mut s = serde_json::to_string_pretty(results)
        .map_err(|e| Error::Data(format!("cannot serialise results: {e}")))?;
    s.push('\n');
    Ok(s)
}
