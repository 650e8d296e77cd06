//! The FDR quantile boundary `k ↦ t_k = σ z(qk/2n)` and the penalty sums
//! built from it.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::gauss::{phi, quantile};

/// Boundary for `n` coordinates at FDR control rate `q`.
///
/// Thresholds for integer `k` are computed once at construction; real `k`
/// is evaluated on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoundaryParams", into = "BoundaryParams")]
pub struct FdrBoundary {
    n: usize,
    q: f64,
    noise_scale: f64,
    /// `thresholds[k - 1] = t_k`, already multiplied by the noise scale.
    thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct BoundaryParams {
    n: usize,
    q: f64,
    #[serde(default = "unit")]
    noise_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<BoundaryParams> for FdrBoundary {
    type Error = crate::Error;

    fn try_from(p: BoundaryParams) -> Result<Self> {
        FdrBoundary::with_noise_scale(p.n, p.q, p.noise_scale)
    }
}

impl From<FdrBoundary> for BoundaryParams {
    fn from(b: FdrBoundary) -> Self {
        BoundaryParams {
            n: b.n,
            q: b.q,
            noise_scale: b.noise_scale,
        }
    }
}

impl FdrBoundary {
    pub fn new(n: usize, q: f64) -> Result<Self> {
        Self::with_noise_scale(n, q, 1.0)
    }

    pub fn with_noise_scale(n: usize, q: f64, noise_scale: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain("boundary needs n >= 1"));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(domain(format!("FDR rate q must lie in (0, 1), got {q}")));
        }
        if !(noise_scale > 0.0 && noise_scale.is_finite()) {
            return Err(domain(format!(
                "noise scale must be positive, got {noise_scale}"
            )));
        }
        let denom = 2.0 * n as f64;
        let thresholds = (1..=n)
            .map(|k| quantile(q * k as f64 / denom).map(|z| noise_scale * z))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            q,
            noise_scale,
            thresholds,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// `t_k` for integer `1 ≤ k ≤ n`. Panics outside that range.
    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        self.thresholds[k - 1]
    }

    /// `(t_1, ..., t_n)`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    fn check_real_index(&self, k: f64) -> Result<()> {
        if k > 0.0 && k <= self.n as f64 {
            Ok(())
        } else {
            Err(domain(format!(
                "boundary index must lie in (0, {}], got {k}",
                self.n
            )))
        }
    }

    /// `t_k` for real `k ∈ (0, n]`.
    pub fn threshold_at(&self, k: f64) -> Result<f64> {
        self.check_real_index(k)?;
        Ok(self.noise_scale * self.standard_threshold_at(k)?)
    }

    /// `z(qk/2n)`, the boundary in noise units.
    pub fn standard_threshold_at(&self, k: f64) -> Result<f64> {
        self.check_real_index(k)?;
        quantile(self.q * k / (2.0 * self.n as f64))
    }

    /// `∂t_k/∂k = −σ q / (2n φ(z_k))`.
    pub fn threshold_derivative(&self, k: f64) -> Result<f64> {
        let z = self.standard_threshold_at(k)?;
        Ok(-self.noise_scale * self.q / (2.0 * self.n as f64 * phi(z)))
    }

    fn check_integer_index(&self, k: usize) -> Result<()> {
        if k <= self.n {
            Ok(())
        } else {
            Err(domain(format!("index {k} exceeds n = {}", self.n)))
        }
    }

    /// `Σ_{l=1}^k t_l^r`; zero for `k = 0`.
    pub fn penalty_sum(&self, k: usize, r: f64) -> Result<f64> {
        self.check_integer_index(k)?;
        check_exponent(r)?;
        Ok(self.thresholds[..k].iter().map(|t| t.powf(r)).sum())
    }

    /// Prefix sums `P[k] = Σ_{l≤k} t_l^r` for `k = 0..=n`.
    pub fn penalty_prefix(&self, r: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n + 1);
        let mut acc = 0.0;
        out.push(acc);
        for t in &self.thresholds {
            acc += pow_r(*t, r);
            out.push(acc);
        }
        out
    }

    /// Variable penalty factor `λ_{k,n} = (1/2k) Σ_{l≤k} z²(lq/2n)`.
    pub fn lambda_kn(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(domain("lambda_kn needs k >= 1"));
        }
        self.check_integer_index(k)?;
        let s2 = self.noise_scale * self.noise_scale;
        let sum: f64 = self.thresholds[..k].iter().map(|t| t * t / s2).sum();
        Ok(sum / (2.0 * k as f64))
    }
}

#[inline]
pub(crate) fn pow_r(x: f64, r: f64) -> f64 {
    if r == 2.0 {
        x * x
    } else if r == 1.0 {
        x
    } else {
        x.powf(r)
    }
}

pub(crate) fn check_exponent(r: f64) -> Result<()> {
    if r > 0.0 && r <= 2.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "loss exponent r must lie in (0, 2], got {r}"
        )))
    }
}

/// Foster–George penalty `Σ_{j=1}^k 2 log(n/j)`.
pub fn foster_george_penalty(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(domain(format!("k = {k} exceeds n = {n}")));
    }
    let nf = n as f64;
    Ok((1..=k).map(|j| 2.0 * (nf / j as f64).ln()).sum())
}

/// `2k log(n/k)`, taken as zero at `k = 0`.
pub fn two_k_log_nk_penalty(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(domain(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let kf = k as f64;
    Ok(2.0 * kf * (n as f64 / kf).ln())
}
