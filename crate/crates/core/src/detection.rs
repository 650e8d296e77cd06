//! Mean exceedance counts over the FDR boundary and the quantities derived
//! from them: the mean discovery number, its sandwich bounds, bi-threshold
//! power curves and true positive rates.
//!
//! Everything here is in noise units: the boundary is `z(qk/2n)` and the
//! means are divided by the boundary's noise scale.

use serde::{Deserialize, Serialize};

use crate::boundary::FdrBoundary;
use crate::error::{domain, Result};
use crate::estimators::SortedMagnitudes;
use crate::gauss::{cdf, upper_tail};
use crate::spaces::{require_membership, BallKind, ParameterBall};

const RESIDUAL_RTOL: f64 = 1e-9;
const POWER_ONE: f64 = 1.0 - 1e-14;

/// Power of the two-sided test at threshold `t` against mean `μ`:
/// `Φ̃(t − μ) + Φ(−t − μ)`.
#[inline]
pub fn exceedance_prob(t: f64, mu: f64) -> f64 {
    upper_tail(t - mu) + cdf(-t - mu)
}

fn standardized(b: &FdrBoundary, mu: &[f64]) -> Vec<f64> {
    let s = b.noise_scale();
    mu.iter().map(|m| m / s).collect()
}

fn m_at(t: f64, mu: &[f64]) -> f64 {
    mu.iter().map(|&m| exceedance_prob(t, m)).sum()
}

/// `M(k; μ) = Σ_l P(|μ_l + Z| ≥ t_k)`.
pub fn exceedance_mean(b: &FdrBoundary, mu: &[f64], k: f64) -> Result<f64> {
    let t = b.standard_threshold_at(k)?;
    Ok(m_at(t, &standardized(b, mu)))
}

/// `∂M/∂k = (q/n) Σ_l e^{−μ_l²/2} cosh(t_k μ_l)`.
pub fn exceedance_mean_derivative(b: &FdrBoundary, mu: &[f64], k: f64) -> Result<f64> {
    let t = b.standard_threshold_at(k)?;
    let sum: f64 = standardized(b, mu)
        .iter()
        .map(|&m| {
            let h = -0.5 * m * m;
            0.5 * ((h + t * m).exp() + (h - t * m).exp())
        })
        .sum();
    Ok(b.q() / b.n() as f64 * sum)
}

/// Smallest `k ∈ (0, n]` solving `M(k; μ) = k`, or 0 when there is none
/// (in particular for `μ = 0`).
pub fn mean_discovery_number(b: &FdrBoundary, mu: &[f64]) -> Result<f64> {
    let mu = standardized(b, mu);
    if mu.iter().all(|&m| m == 0.0) {
        return Ok(0.0);
    }
    let n = b.n() as f64;
    let excess = |k: f64| -> Result<f64> { Ok(m_at(b.standard_threshold_at(k)?, &mu) - k) };
    if excess(n)? >= 0.0 {
        return Ok(n);
    }
    // M(k)/k falls strictly, so walk down geometrically until it exceeds one
    let mut hi = n;
    let mut lo = n;
    let floor = 1e-280 * n / b.q();
    loop {
        lo *= 0.5;
        if lo < floor {
            return Ok(0.0);
        }
        if excess(lo)? > 0.0 {
            break;
        }
        hi = lo;
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..200 {
        k = 0.5 * (lo + hi);
        let g = excess(k)?;
        if g.abs() <= RESIDUAL_RTOL * k.max(1.0) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if g > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
    }
    Ok(k)
}

/// Constants fixed by the standing assumptions. `b1`, `b2`, `b3` are free
/// and only carried along.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub q_prime: f64,
    pub q_doubleprime: f64,
}

impl AssumptionConstants {
    /// `b4 = (1 − q)/4`, `q' = (1 + q)/2`, `q'' = (1 − q)/2`, with
    /// `b1 = b2 = 1`, `b3 = 1/2`.
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(domain(format!("q must lie in [0, 1), got {q}")));
        }
        Ok(Self {
            b1: 1.0,
            b2: 1.0,
            b3: 0.5,
            b4: (1.0 - q) / 4.0,
            q_prime: (q + 1.0) / 2.0,
            q_doubleprime: (1.0 - q) / 2.0,
        })
    }

    /// `α_n = 1/(b4 τ_η)`.
    pub fn alpha_n(&self, tau_eta: f64) -> f64 {
        1.0 / (self.b4 * tau_eta)
    }
}

/// Proof constants with no numerical role.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionConstantsNote {
    pub b5: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryBounds {
    pub k_mean: f64,
    pub k_minus: f64,
    pub k_plus: f64,
    pub alpha_n: f64,
    pub k_n: f64,
    /// Undefined when `1 − q − d_n ≤ 0`.
    pub kappa_n: Option<f64>,
    pub tau_eta: f64,
    pub constants: AssumptionConstants,
}

/// `c₀` in `d_n = 2c₀/τ_η`.
const C0: f64 = 1.0;

/// Bounds `k_−(μ) ≤ k(μ) ≤ k_+(μ)` around the mean discovery number.
pub fn discovery_bounds(
    b: &FdrBoundary,
    ball: &ParameterBall,
    mu: &[f64],
) -> Result<DiscoveryBounds> {
    require_membership(ball, mu)?;
    let q = b.q();
    let constants = AssumptionConstants::new(q)?;
    let tau_eta = ball.tau_squared().sqrt();
    let k_n = ball.k_n();
    let alpha_n = constants.alpha_n(tau_eta);
    let ak = alpha_n * k_n;
    let k_mean = mean_discovery_number(b, mu)?;
    let k_minus = if k_mean >= 2.0 * ak { k_mean - ak } else { 0.0 };
    let k_plus = k_mean.max(ak) + ak;
    let denom = match ball.kind {
        BallKind::L0 => 1.0 - q,
        _ => 1.0 - q - 2.0 * C0 / tau_eta,
    };
    let kappa_n = (denom > 0.0).then(|| (alpha_n + 1.0 / denom) * k_n);
    Ok(DiscoveryBounds {
        k_mean,
        k_minus,
        k_plus,
        alpha_n,
        k_n,
        kappa_n,
        tau_eta,
        constants,
    })
}

/// `g_{ν,k}(π) = p_ν(p_k⁻¹(π))`: the power at threshold `t_ν` against the
/// mean that threshold `t_k` detects with probability `π`.
pub fn bi_threshold(b: &FdrBoundary, nu: f64, k: f64, pi: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < k) {
        return Err(domain(format!(
            "bi-threshold needs 0 < nu < k, got nu={nu}, k={k}"
        )));
    }
    let t_k = b.standard_threshold_at(k)?;
    let t_nu = b.standard_threshold_at(nu)?;
    let floor = b.q() * k / b.n() as f64;
    if !(pi >= floor * (1.0 - 1e-12) && pi <= 1.0) {
        return Err(domain(format!(
            "pi must lie in [qk/n, 1] = [{floor}, 1], got {pi}"
        )));
    }
    if pi >= POWER_ONE {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, t_k + 40.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if exceedance_prob(t_k, mid) < pi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(exceedance_prob(t_nu, 0.5 * (lo + hi)))
}

/// `q̃_n`: `q` for the `ℓ0` ball; `3q/2` or `(1+q)/2` for `ℓp` balls.
pub fn q_tilde(q: f64, kind: BallKind) -> f64 {
    match kind {
        BallKind::L0 => q,
        _ if q <= 0.5 => 1.5 * q,
        _ => (1.0 + q) / 2.0,
    }
}

/// Average power at threshold `t_ν` over the `⌊k'_n⌋` largest means.
pub fn true_positive_rate(
    b: &FdrBoundary,
    ball: &ParameterBall,
    mu: &[f64],
    nu: f64,
) -> Result<f64> {
    let k_prime = ball.k_n_prime();
    if k_prime < 1.0 {
        return Err(domain(format!("k'_n must be at least 1, got {k_prime}")));
    }
    let t = b.standard_threshold_at(nu)?;
    let sorted = SortedMagnitudes::new(&standardized(b, mu));
    let m = (k_prime.floor() as usize).min(sorted.len());
    let sum: f64 = sorted.magnitudes()[..m]
        .iter()
        .map(|&v| exceedance_prob(t, v))
        .sum();
    Ok(sum / m as f64)
}

/// `δ_p(ε) = p ε ∫_ε^1 w^{p−2} dw`.
pub fn delta_p(epsilon: f64, p: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(p > 0.0 && p <= 2.0) {
        return Err(domain(format!("p must lie in (0, 2], got {p}")));
    }
    if p == 1.0 {
        Ok(-epsilon * epsilon.ln())
    } else {
        Ok(p * epsilon * (1.0 - epsilon.powf(p - 1.0)) / (p - 1.0))
    }
}

/// Bennett-type bound `exp(−M h(k/M)/4)`, `h(x) = min(|x−1|, |x−1|²)`, on
/// `P(N ≥ k)` (for `k > M`) or `P(N ≤ k)` (for `k < M`).
pub fn bennett_tail(m: f64, k: f64) -> Result<f64> {
    if !(m > 0.0) || !(k >= 0.0) {
        return Err(domain(format!(
            "bennett bound needs M > 0 and k >= 0, got M={m}, k={k}"
        )));
    }
    if k == m {
        return Err(domain("bennett bound is degenerate at k = M"));
    }
    let d = (k / m - 1.0).abs();
    Ok((-0.25 * m * d.min(d * d)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ReplicateStream;
    use crate::spaces::extremal_sequence;
    use proptest::prelude::*;

    #[test]
    fn null_exceedance_is_qk() {
        let b = FdrBoundary::new(2, 0.1).unwrap();
        assert!((exceedance_mean(&b, &[0.0, 0.0], 1.0).unwrap() - 0.1).abs() < 1e-15);
        let b = FdrBoundary::new(10_000, 0.05).unwrap();
        let mu = vec![0.0; 10_000];
        for k in [0.5, 1.0, 12.0, 377.7, 10_000.0] {
            let m = exceedance_mean(&b, &mu, k).unwrap();
            assert!((m - 0.05 * k).abs() <= 1e-11 * k);
            assert!((exceedance_mean_derivative(&b, &mu, k).unwrap() - 0.05).abs() < 1e-12);
        }
        assert!(exceedance_mean(&b, &mu, 0.0).is_err());
        assert_eq!(mean_discovery_number(&b, &mu).unwrap(), 0.0);
    }

    #[test]
    fn single_large_mean() {
        let b = FdrBoundary::new(10_000, 0.05).unwrap();
        let mut mu = vec![0.0; 10_000];
        mu[0] = 10.0;
        let m = exceedance_mean(&b, &mu, 1.0).unwrap();
        assert!((m - 1.05).abs() < 1e-3);
        let k = mean_discovery_number(&b, &mu).unwrap();
        assert!((k - 1.0 / (1.0 - 0.049_995)).abs() < 1e-3);
        let resid = exceedance_mean(&b, &mu, k).unwrap() - k;
        assert!(resid.abs() <= 1e-8 * k.max(1.0));
    }

    #[test]
    fn l0_ceiling_for_huge_spikes() {
        let (n, k_n, q) = (10_000, 10, 0.05);
        let b = FdrBoundary::new(n, q).unwrap();
        let mut mu = vec![0.0; n];
        mu[..k_n].iter_mut().for_each(|v| *v = 50.0);
        let k = mean_discovery_number(&b, &mu).unwrap();
        let ceiling = k_n as f64 / (1.0 - (1.0 - k_n as f64 / n as f64) * q);
        assert!(k <= ceiling + 1e-6);
        assert!((k - ceiling).abs() < 1e-6);
    }

    #[test]
    fn figure_configuration_bounds() {
        let n = 10_000;
        let b = FdrBoundary::new(n, 0.05).unwrap();
        let ball = ParameterBall::l0(1e-3, n).unwrap();
        let mut mu = vec![0.0; n];
        mu[..10].iter_mut().for_each(|v| *v = 5.21);
        let db = discovery_bounds(&b, &ball, &mu).unwrap();
        assert!((db.tau_eta - (2.0 * 1000f64.ln()).sqrt()).abs() < 1e-12);
        assert!((db.constants.b4 - 0.2375).abs() < 1e-15);
        assert!(db.k_minus <= db.k_mean && db.k_mean <= db.k_plus);
        assert!(db.k_plus - db.k_minus <= 3.0 * db.alpha_n * db.k_n + 1e-12);
        assert_eq!(db.k_minus, 0.0);
        assert!(db.kappa_n.is_some());

        let mut bad = mu.clone();
        bad[10] = 1.0;
        assert!(discovery_bounds(&b, &ball, &bad).is_err());
    }

    #[test]
    fn alpha_at_zero_rate() {
        let c = AssumptionConstants::new(0.0).unwrap();
        assert_eq!(c.b4, 0.25);
        let tau = (2.0 * 1e4f64.ln()).sqrt();
        assert!((tau - 4.291_932_052_578_694).abs() < 1e-12);
        assert!((c.alpha_n(tau) - 0.931_981_203_569_312_1).abs() < 1e-12);
        assert_eq!(c.q_prime + c.q_doubleprime, 1.0);
    }

    #[test]
    fn bi_threshold_endpoints_and_convexity() {
        let b = FdrBoundary::new(1000, 0.2).unwrap();
        let (nu, k) = (5.0, 50.0);
        let lo = 0.2 * k / 1000.0;
        let g0 = bi_threshold(&b, nu, k, lo).unwrap();
        assert!((g0 - 0.2 * nu / 1000.0).abs() < 1e-12);
        assert_eq!(bi_threshold(&b, nu, k, 1.0).unwrap(), 1.0);
        assert!(bi_threshold(&b, nu, k, 0.5 * lo).is_err());
        assert!(bi_threshold(&b, k, nu, 0.5).is_err());

        let grid: Vec<f64> = (0..=400)
            .map(|j| lo + (1.0 - lo) * j as f64 / 400.0)
            .collect();
        let g: Vec<f64> = grid
            .iter()
            .map(|&p| bi_threshold(&b, nu, k, p).unwrap())
            .collect();
        for w in g.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            assert!(w[2] >= w[1]);
        }
    }

    #[test]
    fn true_positive_rate_cases() {
        let n = 1000;
        let b = FdrBoundary::new(n, 0.1).unwrap();
        let ball = ParameterBall::l0(0.01, n).unwrap();
        let zero = vec![0.0; n];
        let r = true_positive_rate(&b, &ball, &zero, 3.0).unwrap();
        assert!((r - 0.1 * 3.0 / n as f64).abs() < 1e-14);

        let mut big = zero.clone();
        big[..10].iter_mut().for_each(|v| *v = 30.0);
        assert!((true_positive_rate(&b, &ball, &big, 3.0).unwrap() - 1.0).abs() < 1e-12);

        // lower bound whenever k(μ) > ν
        let mut mu = zero.clone();
        mu[..10].iter_mut().for_each(|v| *v = 3.0);
        let k = mean_discovery_number(&b, &mu).unwrap();
        for nu in [1.0, 2.0, 0.9 * k] {
            assert!(k > nu);
            let rate = true_positive_rate(&b, &ball, &mu, nu).unwrap();
            assert!(rate >= (1.0 - q_tilde(0.1, BallKind::L0)) * nu / ball.k_n_prime());
        }

        let tiny = ParameterBall::l0(1e-4, n).unwrap();
        assert!(true_positive_rate(&b, &tiny, &zero, 1.0).is_err());
    }

    #[test]
    fn delta_and_bennett() {
        assert!((delta_p(0.1, 2.0).unwrap() - 0.18).abs() < 1e-15);
        let e = (-1.0f64).exp();
        assert!((delta_p(e, 1.0).unwrap() - e).abs() < 1e-15);
        for p in [0.5f64, 1.5, 2.0] {
            for j in 1..100 {
                let eps = j as f64 / 100.0;
                let bound = p / (p - 1.0).abs() * eps.powf(p.min(1.0));
                assert!(delta_p(eps, p).unwrap() <= bound + 1e-15);
            }
        }
        assert!(delta_p(0.0, 1.0).is_err());

        assert!((bennett_tail(10.0, 20.0).unwrap() - (-2.5f64).exp()).abs() < 1e-15);
        assert!((bennett_tail(10.0, 11.0).unwrap() - (-0.025f64).exp()).abs() < 1e-12);
        assert!(bennett_tail(10.0, 10.0).is_err());
    }

    #[test]
    fn bennett_bound_holds_for_bernoulli_sums() {
        // N = Σ Bernoulli(p_i) with mean M
        let probs: Vec<f64> = (0..200)
            .map(|i| 0.02 + 0.1 * (i % 7) as f64 / 7.0)
            .collect();
        let m: f64 = probs.iter().sum();
        let draws = 100_000;
        let mut counts = Vec::with_capacity(draws);
        let mut s = ReplicateStream::new(2024, 0);
        for _ in 0..draws {
            counts.push(probs.iter().filter(|&&p| s.uniform() < p).count() as f64);
        }
        for factor in [0.5, 0.7, 1.3, 1.6, 2.0] {
            let k = factor * m;
            let freq = if k > m {
                counts.iter().filter(|&&c| c >= k).count()
            } else {
                counts.iter().filter(|&&c| c <= k).count()
            } as f64
                / draws as f64;
            assert!(freq <= bennett_tail(m, k).unwrap(), "k={k}");
        }
    }

    #[test]
    fn derivative_bound_on_extremal_sequence() {
        let n = 100_000;
        let p = 1.0;
        let eta = 1e-3;
        let ball = ParameterBall::weak(p, eta, n).unwrap();
        let b = FdrBoundary::new(n, 0.2).unwrap();
        let bar = extremal_sequence(&ball).unwrap().values;
        let eps = eta * ball.tau_squared().sqrt();
        for a in [1.0, 1.5, 2.0, 3.0] {
            let d = exceedance_mean_derivative(&b, &bar, a * ball.k_n()).unwrap();
            assert!(d >= 0.2 * (1.0 - eps.powf(p)));
        }
    }

    fn mixed_means() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(prop_oneof![3 => Just(0.0), 1 => -6.0f64..6.0], 20..200)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn derivative_matches_finite_difference(mu in mixed_means(), frac in 0.02f64..0.95, q in 0.05f64..0.6) {
            let b = FdrBoundary::new(mu.len(), q).unwrap();
            let k = frac * mu.len() as f64;
            let h = 1e-4 * k;
            let fd = (exceedance_mean(&b, &mu, k + h).unwrap() - exceedance_mean(&b, &mu, k - h).unwrap()) / (2.0 * h);
            let d = exceedance_mean_derivative(&b, &mu, k).unwrap();
            prop_assert!(((fd - d) / d).abs() <= 1e-5);
        }

        #[test]
        fn ratio_decreasing_and_monotone_in_mu(mu in mixed_means(), q in 0.05f64..0.6, scale in 1.0f64..2.0) {
            let n = mu.len();
            let b = FdrBoundary::new(n, q).unwrap();
            let bigger: Vec<f64> = mu.iter().map(|m| m * scale).collect();
            let mut prev = f64::INFINITY;
            for j in 1..=40 {
                let k = n as f64 * j as f64 / 40.0;
                let m = exceedance_mean(&b, &mu, k).unwrap();
                prop_assert!(m / k <= prev * (1.0 + 1e-12));
                prev = m / k;
                prop_assert!(exceedance_mean(&b, &bigger, k).unwrap() >= m * (1.0 - 1e-12));
            }
            let k0 = mean_discovery_number(&b, &mu).unwrap();
            let k1 = mean_discovery_number(&b, &bigger).unwrap();
            prop_assert!(k1 >= k0 - 1e-6);
            if k0 > 0.0 {
                let resid = exceedance_mean(&b, &mu, k0).unwrap() - k0;
                prop_assert!(resid.abs() <= 1e-8 * k0.max(1.0));
            }
        }
    }
}
