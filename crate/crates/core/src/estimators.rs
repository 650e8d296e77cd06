//! Data-driven threshold selection and the hard/soft thresholding rules.
//!
//! All selectors work on the magnitudes `|y|_(1) ≥ |y|_(2) ≥ ... ≥ |y|_(n)`
//! compared against a decreasing boundary `t_1 > t_2 > ... > t_n`.

use serde::{Deserialize, Serialize};

use crate::boundary::{check_exponent, pow_r, FdrBoundary};
use crate::error::{check_len, domain, Result};
use crate::gauss::quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    StepUp,
    StepDown,
    PenalizedR(f64),
}

impl Method {
    fn validate(self) -> Result<()> {
        match self {
            Method::PenalizedR(r) => check_exponent(r),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    pub k_hat: usize,
    /// `t_{k̂}`, or `t_1` when nothing is selected.
    pub t_hat: f64,
    /// `S_0, ..., S_n` for the penalized selector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub mu_hat: Vec<f64>,
    pub selection: SelectionResult,
    /// Indices with `|y_i| ≥ t̂`, in increasing order.
    pub discoveries: Vec<usize>,
}

/// Magnitudes sorted in decreasing order, remembering where each came from.
#[derive(Debug, Clone)]
pub struct SortedMagnitudes {
    magnitudes: Vec<f64>,
    order: Vec<usize>,
}

impl SortedMagnitudes {
    pub fn new(y: &[f64]) -> Self {
        let mut pairs: Vec<(f64, usize)> = y.iter().map(|v| v.abs()).zip(0..).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (magnitudes, order) = pairs.into_iter().unzip();
        Self { magnitudes, order }
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// `|y|_(1), ..., |y|_(n)`.
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// `order[j]` is the original index of `|y|_(j+1)`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of magnitudes `≥ t`.
    pub fn count_at_least(&self, t: f64) -> usize {
        self.magnitudes.partition_point(|&m| m >= t)
    }
}

/// Largest `k` with `|y|_(k) ≥ t_k`, or 0.
pub fn step_up_index(sorted: &[f64], thresholds: &[f64]) -> usize {
    (1..=sorted.len().min(thresholds.len()))
        .rev()
        .find(|&k| sorted[k - 1] >= thresholds[k - 1])
        .unwrap_or(0)
}

/// One less than the first `l` with `|y|_(l) < t_l`, or `n` if there is none.
pub fn step_down_index(sorted: &[f64], thresholds: &[f64]) -> usize {
    let n = sorted.len().min(thresholds.len());
    (1..=n)
        .find(|&l| sorted[l - 1] < thresholds[l - 1])
        .map_or(n, |l| l - 1)
}

/// `S_k = Σ_{l>k} |y|_(l)^r + Σ_{l≤k} t_l^r` for `k = 0..=n`.
pub fn penalized_objective(sorted: &[f64], thresholds: &[f64], r: f64) -> Vec<f64> {
    let n = sorted.len().min(thresholds.len());
    let mut trace = Vec::with_capacity(n + 1);
    let mut s: f64 = sorted[..n].iter().map(|&y| pow_r(y, r)).sum();
    trace.push(s);
    for k in 0..n {
        s += pow_r(thresholds[k], r) - pow_r(sorted[k], r);
        trace.push(s);
    }
    trace
}

/// Global minimiser of `S_k`, ties going to the smallest `k`.
pub fn penalized_index(sorted: &[f64], thresholds: &[f64], r: f64) -> usize {
    let n = sorted.len().min(thresholds.len());
    let mut s = 0.0;
    let mut best = 0.0;
    let mut k_best = 0;
    // track S_k − S_0 so the starting sum is never needed
    for k in 0..n {
        s += pow_r(thresholds[k], r) - pow_r(sorted[k], r);
        if s < best {
            best = s;
            k_best = k + 1;
        }
    }
    k_best
}

fn argmin_first(trace: &[f64]) -> usize {
    let mut k_best = 0;
    for (k, &s) in trace.iter().enumerate() {
        if s < trace[k_best] {
            k_best = k;
        }
    }
    k_best
}

fn t_hat(b: &FdrBoundary, k_hat: usize) -> f64 {
    b.t(k_hat.max(1))
}

fn select_sorted(sorted: &SortedMagnitudes, b: &FdrBoundary, method: Method) -> SelectionResult {
    let y = sorted.magnitudes();
    let t = b.thresholds();
    let (k_hat, objective_trace) = match method {
        Method::StepUp => (step_up_index(y, t), None),
        Method::StepDown => (step_down_index(y, t), None),
        Method::PenalizedR(r) => {
            let trace = penalized_objective(y, t, r);
            (argmin_first(&trace), Some(trace))
        }
    };
    SelectionResult {
        method,
        k_hat,
        t_hat: t_hat(b, k_hat),
        objective_trace,
    }
}

/// Selects `k̂` with the given rule.
pub fn select(y: &[f64], b: &FdrBoundary, method: Method) -> Result<SelectionResult> {
    check_len(b.n(), y.len())?;
    method.validate()?;
    Ok(select_sorted(&SortedMagnitudes::new(y), b, method))
}

/// Step-up FDR index `k̂_F`.
pub fn select_step_up(y: &[f64], b: &FdrBoundary) -> Result<SelectionResult> {
    select(y, b, Method::StepUp)
}

/// Step-down FDR index `k̂_G`.
pub fn select_step_down(y: &[f64], b: &FdrBoundary) -> Result<SelectionResult> {
    select(y, b, Method::StepDown)
}

/// Penalized index `k̂_r`, with the objective trace attached.
pub fn select_penalized(y: &[f64], b: &FdrBoundary, r: f64) -> Result<SelectionResult> {
    select(y, b, Method::PenalizedR(r))
}

/// Hard thresholding at the selected `t̂`.
pub fn estimate(y: &[f64], b: &FdrBoundary, method: Method) -> Result<ThresholdEstimate> {
    let selection = select(y, b, method)?;
    let (mu_hat, discoveries) = if selection.k_hat == 0 {
        (vec![0.0; y.len()], Vec::new())
    } else {
        let mu_hat = hard_threshold(y, selection.t_hat);
        let discoveries = (0..y.len()).filter(|&i| mu_hat[i] != 0.0).collect();
        (mu_hat, discoveries)
    };
    Ok(ThresholdEstimate {
        mu_hat,
        selection,
        discoveries,
    })
}

/// `y_i 1{|y_i| ≥ t}`.
pub fn hard_threshold(y: &[f64], t: f64) -> Vec<f64> {
    y.iter()
        .map(|&v| if v.abs() >= t { v } else { 0.0 })
        .collect()
}

/// `sgn(y_i) (|y_i| − t)_+`.
pub fn soft_threshold(y: &[f64], t: f64) -> Vec<f64> {
    y.iter()
        .map(|&v| v.signum() * (v.abs() - t).max(0.0))
        .map(|v| if v == 0.0 { 0.0 } else { v })
        .collect()
}

/// `σ √(2 log n)`.
pub fn universal_threshold(n: usize, sigma: f64) -> Result<f64> {
    if n < 2 {
        return Err(domain(format!("universal threshold needs n >= 2, got {n}")));
    }
    check_sigma(sigma)?;
    Ok(sigma * (2.0 * (n as f64).ln()).sqrt())
}

/// `σ z(α/2n)`.
pub fn bonferroni_threshold(n: usize, alpha: f64, sigma: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("bonferroni threshold needs n >= 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    check_sigma(sigma)?;
    Ok(sigma * quantile(alpha / (2.0 * n as f64))?)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("sigma must be positive, got {sigma}")))
    }
}

/// False discoveries over discoveries, 0 when nothing is discovered.
pub fn empirical_fdr(estimate: &ThresholdEstimate, truth: &[f64]) -> Result<f64> {
    check_len(estimate.mu_hat.len(), truth.len())?;
    let r = estimate.discoveries.len();
    if r == 0 {
        return Ok(0.0);
    }
    let v = estimate
        .discoveries
        .iter()
        .filter(|&&i| truth[i] == 0.0)
        .count();
    Ok(v as f64 / r as f64)
}

/// `median(|x − median(x)|) / 0.6745`.
pub fn mad_scale(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(domain("MAD scale of an empty sample"));
    }
    let med = median(x.to_vec());
    Ok(median(x.iter().map(|v| (v - med).abs()).collect()) / 0.6745)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Index chosen by the penalty `Σ_{j≤k} 2σ² log(n/j)`, i.e. the `r = 2`
/// penalized rule with boundary `σ √(2 log(n/j))`.
pub fn foster_george_index(sorted: &[f64], sigma: f64) -> usize {
    let n = sorted.len() as f64;
    let mut s = 0.0;
    let mut best = 0.0;
    let mut k_best = 0;
    for (k, &y) in sorted.iter().enumerate() {
        s += 2.0 * sigma * sigma * (n / (k + 1) as f64).ln() - y * y;
        if s < best {
            best = s;
            k_best = k + 1;
        }
    }
    k_best
}

/// Foster–George estimate: keep the `k̂` largest magnitudes.
/// Returns `(k̂, μ̂)`.
pub fn foster_george_estimate(y: &[f64], sigma: f64) -> Result<(usize, Vec<f64>)> {
    check_sigma(sigma)?;
    let sorted = SortedMagnitudes::new(y);
    let k = foster_george_index(sorted.magnitudes(), sigma);
    let mut mu_hat = vec![0.0; y.len()];
    for &i in &sorted.order()[..k] {
        mu_hat[i] = y[i];
    }
    Ok((k, mu_hat))
}
