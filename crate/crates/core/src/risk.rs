//! Scalar risk kernels for hard thresholding and Monte Carlo estimates of
//! vector risk.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{check_exponent, pow_r, FdrBoundary};
use crate::error::{check_len, domain, Result};
use crate::estimators::{
    penalized_index, step_down_index, step_up_index, Method, SortedMagnitudes,
};
use crate::gauss::{cdf, phi, upper_tail};
use crate::quadrature::{integrate, integrate_split};
use crate::rng::ReplicateStream;
use crate::spaces::Configuration;

/// Beyond this many standard deviations the Gaussian weight is below the
/// smallest positive double.
const GAUSS_CUTOFF: f64 = 40.0;
const QUAD_TOL: f64 = 1e-13;

/// `ρ_H(t, μ) = D + E`: the bias from killing `μ` plus the error from
/// keeping noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskDecomposition {
    pub d: f64,
    pub e: f64,
    pub total: f64,
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("threshold must be positive, got {t}")))
    }
}

/// `P(|μ + Z| < t)`, evaluated on whichever side avoids cancellation.
fn prob_inside(t: f64, mu: f64) -> f64 {
    let (a, b) = (-t - mu, t - mu);
    if a > 0.0 {
        upper_tail(a) - upper_tail(b)
    } else {
        cdf(b) - cdf(a)
    }
}

/// `∫_{u>a} |u|^r φ(u) du`.
fn tail_abs_moment(a: f64, r: f64) -> f64 {
    if r == 2.0 {
        return a * phi(a) + upper_tail(a);
    }
    if a >= GAUSS_CUTOFF {
        return 0.0;
    }
    let f = |u: f64| pow_r(u.abs(), r) * phi(u);
    let lo = a.max(-GAUSS_CUTOFF);
    if lo < 0.0 {
        integrate_split(f, &[lo, 0.0, GAUSS_CUTOFF], QUAD_TOL)
    } else {
        // keep the tolerance relative to the size of the tail
        let scale = phi(lo).max(f64::MIN_POSITIVE) * QUAD_TOL.max(1e-3 * f64::EPSILON);
        integrate(f, lo, GAUSS_CUTOFF, scale.min(QUAD_TOL))
    }
}

/// `c_r = E|Z|^r`.
pub fn abs_moment(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain(format!("moment order must be positive, got {r}")));
    }
    Ok(2.0 * tail_abs_moment(0.0, r))
}

/// Exact risk of hard thresholding `μ + Z` at `t` under `|·|^r` loss.
pub fn hard_risk_exact(t: f64, mu: f64, r: f64) -> Result<RiskDecomposition> {
    check_threshold(t)?;
    check_exponent(r)?;
    let d = pow_r(mu.abs(), r) * prob_inside(t, mu);
    let e = tail_abs_moment(t - mu, r) + tail_abs_moment(t + mu, r);
    Ok(RiskDecomposition { d, e, total: d + e })
}

/// `ξ(t, μ) = t[φ(t−μ) + φ(t+μ)] + Φ̃(t−μ) + Φ(−t−μ)`, the covariance
/// `E[Z (η_H(μ+Z, t) − μ)]`.
pub fn covariance_kernel_xi(t: f64, mu: f64) -> Result<f64> {
    check_threshold(t)?;
    Ok(t * (phi(t - mu) + phi(t + mu)) + upper_tail(t - mu) + cdf(-t - mu))
}

/// `ψ_r(a) = E|a + Z|^r − |a|^r − E|Z|^r`.
pub fn psi_r(a: f64, r: f64) -> Result<f64> {
    check_exponent(r)?;
    if r == 2.0 || a == 0.0 {
        return Ok(0.0);
    }
    let f = |z: f64| pow_r((a + z).abs(), r) * phi(z);
    let mut pts = vec![-GAUSS_CUTOFF, GAUSS_CUTOFF];
    if a.abs() < GAUSS_CUTOFF {
        pts.push(-a);
    }
    let moment = integrate_split(f, &pts, QUAD_TOL);
    Ok(moment - pow_r(a.abs(), r) - abs_moment(r)?)
}

/// `ξ_r(t, μ)`: the inner integral `∫_{|y|<t} (|y−μ|^r − |y|^r + |μ|^r) φ(y−μ) dy`
/// plus twice the outer term `E(μ, t)`.
pub fn xi_r(t: f64, mu: f64, r: f64) -> Result<f64> {
    check_threshold(t)?;
    check_exponent(r)?;
    if r == 2.0 {
        return Ok(2.0 * covariance_kernel_xi(t, mu)?);
    }
    Ok(xi_r_quadrature(t, mu, r))
}

fn xi_r_quadrature(t: f64, mu: f64, r: f64) -> f64 {
    let m_r = pow_r(mu.abs(), r);
    let f = |y: f64| (pow_r((y - mu).abs(), r) - pow_r(y.abs(), r) + m_r) * phi(y - mu);
    let mut pts = vec![-t, 0.0, t];
    if mu.abs() < t {
        pts.push(mu);
    }
    let inner = integrate_split(f, &pts, QUAD_TOL);
    let outer = tail_abs_moment(t - mu, r) + tail_abs_moment(t + mu, r);
    inner + 2.0 * outer
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub mean_loss: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub loss_exponent: f64,
    pub estimator: String,
    pub seed: u64,
}

impl RiskReport {
    pub fn from_losses(losses: &[f64], r: f64, estimator: impl Into<String>, seed: u64) -> Self {
        let (mean, se) = mean_and_se(losses);
        Self {
            mean_loss: mean,
            std_error: se,
            replicates: losses.len(),
            loss_exponent: r,
            estimator: estimator.into(),
            seed,
        }
    }
}

/// Sample mean and its standard error `sd / √m`.
pub fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// One noisy draw `y = μ + z` with the magnitudes sorted, set up so the loss
/// of keeping the `m` largest `|y|` costs O(1).
#[derive(Debug, Clone)]
pub struct ReplicateDraw {
    y: Vec<f64>,
    sorted: SortedMagnitudes,
    base: f64,
    gain: Vec<f64>,
}

impl ReplicateDraw {
    /// Draws `z` from replicate stream `replicate` of `seed`.
    pub fn sample(mu: &[f64], r: f64, seed: u64, replicate: u64) -> Self {
        let mut stream = ReplicateStream::new(seed, replicate);
        let y: Vec<f64> = mu.iter().map(|m| m + stream.normal()).collect();
        Self::from_observation(mu, y, r)
    }

    pub fn from_observation(mu: &[f64], y: Vec<f64>, r: f64) -> Self {
        let sorted = SortedMagnitudes::new(&y);
        let base = mu.iter().map(|m| pow_r(m.abs(), r)).sum();
        let mut gain = Vec::with_capacity(y.len() + 1);
        let mut acc = 0.0;
        gain.push(acc);
        for &i in sorted.order() {
            acc += pow_r((y[i] - mu[i]).abs(), r) - pow_r(mu[i].abs(), r);
            gain.push(acc);
        }
        Self {
            y,
            sorted,
            base,
            gain,
        }
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sorted(&self) -> &SortedMagnitudes {
        &self.sorted
    }

    /// `Σ|μ̂ − μ|^r` when exactly the `m` largest magnitudes are kept.
    pub fn loss_keep_top(&self, m: usize) -> f64 {
        self.base + self.gain[m]
    }

    /// Loss of hard thresholding at `t`.
    pub fn loss_hard(&self, t: f64) -> f64 {
        self.loss_keep_top(self.sorted.count_at_least(t))
    }

    /// Loss of the thresholding estimator selected by `method`.
    pub fn loss_method(&self, b: &FdrBoundary, method: Method) -> f64 {
        let mags = self.sorted.magnitudes();
        let t = b.thresholds();
        let k = match method {
            Method::StepUp => step_up_index(mags, t),
            Method::StepDown => step_down_index(mags, t),
            Method::PenalizedR(r) => penalized_index(mags, t, r),
        };
        if k == 0 {
            self.loss_keep_top(0)
        } else {
            self.loss_hard(b.t(k))
        }
    }
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < 2 {
        return Err(domain(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    Ok(())
}

fn losses<F>(replicates: usize, f: F) -> Vec<f64>
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    (0..replicates as u64).into_par_iter().map(f).collect()
}

fn method_tag(method: Method) -> String {
    match method {
        Method::StepUp => "step_up".into(),
        Method::StepDown => "step_down".into(),
        Method::PenalizedR(r) => format!("penalized_r{r}"),
    }
}

/// Monte Carlo estimate of `E‖μ̂ − μ‖_r^r` for an FDR-boundary estimator.
pub fn mc_risk(
    config: &Configuration,
    b: &FdrBoundary,
    method: Method,
    r: f64,
    replicates: usize,
    seed: u64,
) -> Result<RiskReport> {
    check_len(b.n(), config.len())?;
    check_exponent(r)?;
    check_replicates(replicates)?;
    if let Method::PenalizedR(rp) = method {
        check_exponent(rp)?;
    }
    let mu = &config.values;
    let l = losses(replicates, |i| {
        ReplicateDraw::sample(mu, r, seed, i).loss_method(b, method)
    });
    Ok(RiskReport::from_losses(&l, r, method_tag(method), seed))
}

/// Monte Carlo estimate of the risk of hard thresholding at a fixed `t`.
pub fn mc_risk_fixed(
    config: &Configuration,
    t: f64,
    r: f64,
    replicates: usize,
    seed: u64,
) -> Result<RiskReport> {
    check_threshold(t)?;
    check_exponent(r)?;
    check_replicates(replicates)?;
    let mu = &config.values;
    let l = losses(replicates, |i| {
        let mut stream = ReplicateStream::new(seed, i);
        mu.iter()
            .map(|&m| {
                let y = m + stream.normal();
                let est = if y.abs() >= t { y } else { 0.0 };
                pow_r((est - m).abs(), r)
            })
            .sum()
    });
    Ok(RiskReport::from_losses(&l, r, format!("fixed_t{t}"), seed))
}
