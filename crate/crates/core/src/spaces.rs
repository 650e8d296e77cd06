//! Sparsity balls, the configurations used to probe them, and the
//! benchmarks (fixed thresholds, minimax risk, complexity) attached to them.

use serde::{Deserialize, Serialize};

use crate::boundary::{check_exponent, FdrBoundary};
use crate::error::{check_len, domain, Error, Result};
use crate::estimators::{hard_threshold, penalized_objective, SortedMagnitudes};

/// Relative slack allowed in membership inequalities, so that a vector
/// written to text and read back keeps its membership.
const MEMBERSHIP_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallKind {
    L0,
    StrongLp,
    WeakLp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBall {
    pub kind: BallKind,
    /// Ignored for `L0`.
    pub p: f64,
    pub eta: f64,
    pub n: usize,
}

impl ParameterBall {
    pub fn new(kind: BallKind, p: f64, eta: f64, n: usize) -> Result<Self> {
        let ball = Self { kind, p, eta, n };
        ball.validate()?;
        Ok(ball)
    }

    pub fn l0(eta: f64, n: usize) -> Result<Self> {
        Self::new(BallKind::L0, 0.0, eta, n)
    }

    pub fn strong(p: f64, eta: f64, n: usize) -> Result<Self> {
        Self::new(BallKind::StrongLp, p, eta, n)
    }

    pub fn weak(p: f64, eta: f64, n: usize) -> Result<Self> {
        Self::new(BallKind::WeakLp, p, eta, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain("ball dimension must be positive"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(domain(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if self.kind != BallKind::L0 && !(self.p > 0.0 && self.p < 2.0) {
            return Err(domain(format!("p must lie in (0, 2), got {}", self.p)));
        }
        Ok(())
    }

    /// `η` for `L0`, `η^p` otherwise: the fraction of "large" coordinates.
    pub fn eta_power(&self) -> f64 {
        match self.kind {
            BallKind::L0 => self.eta,
            _ => self.eta.powf(self.p),
        }
    }

    /// `τ_η² = 2 log(1/η)` or `2 log(η^{-p})`.
    pub fn tau_squared(&self) -> f64 {
        -2.0 * self.eta_power().ln()
    }

    /// Sparsity index: `nη` for `L0`, `nη^p τ_η^{-p}` otherwise.
    pub fn k_n(&self) -> f64 {
        let n = self.n as f64;
        match self.kind {
            BallKind::L0 => n * self.eta,
            _ => n * self.eta_power() * self.tau_squared().powf(-self.p / 2.0),
        }
    }

    /// `nη` for `L0`, `nη^p τ_η^p` otherwise.
    pub fn k_n_prime(&self) -> f64 {
        let n = self.n as f64;
        match self.kind {
            BallKind::L0 => n * self.eta,
            _ => n * self.eta_power() * self.tau_squared().powf(self.p / 2.0),
        }
    }

    fn label(&self) -> String {
        match self.kind {
            BallKind::L0 => format!("l0[eta={}, n={}]", self.eta, self.n),
            BallKind::StrongLp => format!("lp[p={}, eta={}, n={}]", self.p, self.eta, self.n),
            BallKind::WeakLp => format!("weak-lp[p={}, eta={}, n={}]", self.p, self.eta, self.n),
        }
    }
}

/// `η n^{1/p} k^{-1/p}`, the weak-ball envelope at rank `k`.
fn envelope(ball: &ParameterBall, k: usize) -> f64 {
    ball.eta * (ball.n as f64 / k as f64).powf(1.0 / ball.p)
}

pub fn membership(ball: &ParameterBall, mu: &[f64]) -> Result<bool> {
    check_len(ball.n, mu.len())?;
    let slack = 1.0 + MEMBERSHIP_RTOL;
    let n = ball.n as f64;
    Ok(match ball.kind {
        BallKind::L0 => {
            let nonzero = mu.iter().filter(|&&m| m != 0.0).count();
            nonzero as f64 <= ball.eta * n * slack
        }
        BallKind::StrongLp => {
            let mean: f64 = mu.iter().map(|m| m.abs().powf(ball.p)).sum::<f64>() / n;
            mean <= ball.eta_power() * slack
        }
        BallKind::WeakLp => {
            let sorted = SortedMagnitudes::new(mu);
            sorted
                .magnitudes()
                .iter()
                .enumerate()
                .all(|(j, &m)| m <= envelope(ball, j + 1) * slack)
        }
    })
}

/// Fails with `NotMember` unless `mu` lies in the ball.
pub fn require_membership(ball: &ParameterBall, mu: &[f64]) -> Result<()> {
    if membership(ball, mu)? {
        Ok(())
    } else {
        Err(Error::NotMember(ball.label()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConfigLabel {
    UserFile,
    Extremal,
    TwoPointAlpha(f64),
    WinsorizedAlpha(f64),
    SimLeastFavorable,
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub values: Vec<f64>,
    pub label: ConfigLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<ParameterBall>,
}

impl Configuration {
    /// Attaches `ball` after checking membership.
    pub fn new(values: Vec<f64>, label: ConfigLabel, ball: Option<ParameterBall>) -> Result<Self> {
        if let Some(b) = &ball {
            require_membership(b, &values)?;
        }
        Ok(Self {
            values,
            label,
            ball,
        })
    }

    pub fn null(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            label: ConfigLabel::Null,
            ball: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn expect_kind(ball: &ParameterBall, kind: BallKind) -> Result<()> {
    if ball.kind == kind {
        Ok(())
    } else {
        Err(domain(format!(
            "expected a {kind:?} ball, got {:?}",
            ball.kind
        )))
    }
}

/// `μ̄_k = η n^{1/p} k^{-1/p}`.
pub fn extremal_sequence(ball: &ParameterBall) -> Result<Configuration> {
    expect_kind(ball, BallKind::WeakLp)?;
    let values = (1..=ball.n).map(|k| envelope(ball, k)).collect();
    Ok(Configuration {
        values,
        label: ConfigLabel::Extremal,
        ball: Some(*ball),
    })
}

/// `floor(ηn)` entries at `t[k_n] + α`, the rest zero.
pub fn two_point_config(
    b: &FdrBoundary,
    ball: &ParameterBall,
    alpha: f64,
) -> Result<Configuration> {
    expect_kind(ball, BallKind::L0)?;
    check_len(ball.n, b.n())?;
    let k_n = (ball.eta * ball.n as f64 * (1.0 + MEMBERSHIP_RTOL)).floor() as usize;
    if k_n == 0 {
        return Err(domain("two-point configuration needs floor(eta n) >= 1"));
    }
    let level = b.t(k_n) + alpha;
    if !(level > 0.0) {
        return Err(domain(format!(
            "t[k_n] + alpha must be positive, got {level}"
        )));
    }
    let mut values = vec![0.0; ball.n];
    values[..k_n].iter_mut().for_each(|v| *v = level);
    Configuration::new(values, ConfigLabel::TwoPointAlpha(alpha), Some(*ball))
}

/// `min(μ̄_l, t[k_n] + α)` with `k_n = nη^p τ_η^{-p}`.
pub fn winsorized_config(
    b: &FdrBoundary,
    ball: &ParameterBall,
    alpha: f64,
) -> Result<Configuration> {
    expect_kind(ball, BallKind::WeakLp)?;
    check_len(ball.n, b.n())?;
    let level = b.threshold_at(ball.k_n())? + alpha;
    if !(level > 0.0) {
        return Err(domain(format!(
            "t[k_n] + alpha must be positive, got {level}"
        )));
    }
    let values = (1..=ball.n).map(|k| envelope(ball, k).min(level)).collect();
    Configuration::new(values, ConfigLabel::WinsorizedAlpha(alpha), Some(*ball))
}

/// `t*(p, n) = √((2 − p) log n)`.
pub fn t_star(p: f64, n: usize) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(domain(format!("p must lie in (0, 2), got {p}")));
    }
    if n < 2 {
        return Err(domain("t* needs n >= 2"));
    }
    Ok(((2.0 - p) * (n as f64).ln()).sqrt())
}

/// Simulation configuration `μ_k = min(n^{e} k^{-1/p}, t*(p, n))`.
///
/// The exponent `e` is `+1/2`, which puts the plateau at the optimal
/// threshold for the weak ball of radius `η = n^{1/2 − 1/p}`; with
/// `printed_exponent` set it is `−1/2` instead.
pub fn sim_least_favorable(n: usize, p: f64, printed_exponent: bool) -> Result<Configuration> {
    let cap = t_star(p, n)?;
    let e = if printed_exponent { -0.5 } else { 0.5 };
    let nf = n as f64;
    let scale = nf.powf(e);
    let values = (1..=n)
        .map(|k| (scale * (k as f64).powf(-1.0 / p)).min(cap))
        .collect();
    let eta = nf.powf(e - 1.0 / p);
    let ball = ParameterBall::weak(p, eta, n).ok();
    Configuration::new(values, ConfigLabel::SimLeastFavorable, ball)
}

/// `τ_η`, the best fixed threshold for the ball.
pub fn optimal_fixed_threshold(ball: &ParameterBall) -> Result<f64> {
    ball.validate()?;
    let limit = (-0.5f64).exp();
    if ball.eta >= limit {
        return Err(domain(format!(
            "eta must be below e^(-1/2), got {}",
            ball.eta
        )));
    }
    Ok(ball.tau_squared().sqrt())
}

/// Leading term of the minimax `ℓ_r` risk over the ball.
pub fn minimax_risk(ball: &ParameterBall, r: f64) -> Result<f64> {
    ball.validate()?;
    check_exponent(r)?;
    let n = ball.n as f64;
    let tau2 = ball.tau_squared();
    match ball.kind {
        BallKind::L0 => Ok(n * ball.eta * tau2.powf(r / 2.0)),
        BallKind::StrongLp | BallKind::WeakLp => {
            let p = ball.p;
            if p >= r {
                return Err(domain(format!(
                    "minimax risk needs p < r, got p={p}, r={r}"
                )));
            }
            let strong = n * ball.eta_power() * tau2.powf((r - p) / 2.0);
            Ok(match ball.kind {
                BallKind::WeakLp => r / (r - p) * strong,
                _ => strong,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    pub value: f64,
    pub k_opt: usize,
    pub mu0: Vec<f64>,
}

/// `K(μ0, μ; r) = min_k Σ_{l>k} |μ|_(l)^r + Σ_{l≤k} t_l^r`.
pub fn theoretical_complexity(b: &FdrBoundary, mu: &[f64], r: f64) -> Result<ComplexityResult> {
    check_len(b.n(), mu.len())?;
    check_exponent(r)?;
    let sorted = SortedMagnitudes::new(mu);
    let trace = penalized_objective(sorted.magnitudes(), b.thresholds(), r);
    let mut k_opt = 0;
    for (k, &s) in trace.iter().enumerate() {
        if s < trace[k_opt] {
            k_opt = k;
        }
    }
    let mu0 = if k_opt == 0 {
        vec![0.0; mu.len()]
    } else {
        hard_threshold(mu, b.t(k_opt))
    };
    Ok(ComplexityResult {
        value: trace[k_opt].max(0.0),
        k_opt,
        mu0,
    })
}

/// `Σ_{l≤k_n} t_l^r` with `k_n = floor(ηn)`: the largest complexity over
/// the `L0` ball.
pub fn l0_complexity_ceiling(b: &FdrBoundary, ball: &ParameterBall, r: f64) -> Result<f64> {
    expect_kind(ball, BallKind::L0)?;
    let k_n = (ball.eta * ball.n as f64 * (1.0 + MEMBERSHIP_RTOL)).floor() as usize;
    b.penalty_sum(k_n.min(b.n()), r)
}
