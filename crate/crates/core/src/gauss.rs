//! Standard normal density, tails and quantiles.
//!
//! Everything downstream works with the upper tail `Φ̃(x) = 1 − Φ(x)` and its
//! inverse `z(η)`, so both are computed directly in the tail rather than via
//! `1 − Φ`. The upper tail stays accurate (relative to its own size) out to
//! `x ≈ 38`, where it reaches the bottom of the double-precision range.

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Beyond this point the upper tail is evaluated from its continued fraction.
const CF_SWITCH: f64 = 8.0;
const CF_DEPTH: usize = 64;

/// Standard normal density.
#[inline]
pub fn phi(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ̃(x) / φ(x)` for `x > 0`, from Laplace's continued fraction
/// `1 / (x + 1/(x + 2/(x + 3/(x + ...))))`.
fn tail_ratio_cf(x: f64) -> f64 {
    let mut acc = x;
    for k in (1..=CF_DEPTH).rev() {
        acc = x + k as f64 / acc;
    }
    1.0 / acc
}

/// Upper tail probability `Φ̃(x) = P(Z > x)`.
pub fn upper_tail(x: f64) -> f64 {
    if x > CF_SWITCH {
        phi(x) * tail_ratio_cf(x)
    } else if x < -CF_SWITCH {
        1.0 - phi(x) * tail_ratio_cf(-x)
    } else {
        0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Lower distribution function `Φ(x)`.
#[inline]
pub fn cdf(x: f64) -> f64 {
    upper_tail(-x)
}

/// Mills' ratio `y Φ̃(y) / φ(y)` for `y > 0`.
pub fn mills_ratio(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(domain(format!("mills ratio needs y > 0, got {y}")));
    }
    let ratio = if y > CF_SWITCH {
        tail_ratio_cf(y)
    } else {
        upper_tail(y) / phi(y)
    };
    Ok(y * ratio)
}

/// Upper quantile `z(η) = Φ̃⁻¹(η)` for `0 < η < 1`.
///
/// Seeded with Wichura's AS 241 rational approximation, then polished by
/// Newton steps on `log Φ̃` inside a shrinking bracket. Any step that leaves
/// the bracket is replaced by bisection.
pub fn quantile(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(domain(format!("quantile needs 0 < eta < 1, got {eta}")));
    }
    if eta > 0.5 {
        // 1 - eta is exact here.
        return Ok(-upper_quantile_lower_half(1.0 - eta));
    }
    Ok(upper_quantile_lower_half(eta))
}

/// `z(η)` for `0 < η ≤ 1/2`, so the result is `≥ 0`.
fn upper_quantile_lower_half(eta: f64) -> f64 {
    if eta == 0.5 {
        return 0.0;
    }
    let log_eta = eta.ln();
    let mut lo = 0.0_f64;
    let mut hi = 40.0_f64;
    let mut x = -as241(eta);
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..100 {
        let tail = upper_tail(x);
        if tail > eta {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = if tail > 0.0 {
            // Newton on g(x) = log Φ̃(x) - log η, g'(x) = -φ(x)/Φ̃(x).
            let ratio = if x > CF_SWITCH {
                tail_ratio_cf(x)
            } else {
                tail / phi(x)
            };
            x + (tail.ln() - log_eta) * ratio
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.max(1.0) || hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    x
}

/// Wichura (1988) AS 241, `Φ⁻¹(p)` to about 1e-16 relative accuracy.
fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_049e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// A standard normal variate from a uniform `u ∈ (0, 1)` by inversion.
#[inline]
pub fn normal_from_uniform(u: f64) -> f64 {
    // Φ⁻¹(u) = -z(u)
    -quantile(u).expect("uniform draw must lie strictly inside (0, 1)")
}

/// Defects of the two leading-order expansions of `z(η)` for small `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileDiagnostics {
    pub eta: f64,
    pub z: f64,
    /// `sqrt(2 log η⁻¹) − z`
    pub r1: f64,
    /// `2 log η⁻¹ − log log η⁻¹ − z²`
    pub r2: f64,
}

/// Evaluates `z(η)` together with its expansion defects, for `0 < η ≤ 0.01`.
pub fn quantile_diagnostics(eta: f64) -> Result<QuantileDiagnostics> {
    if !(eta > 0.0 && eta <= 0.01) {
        return Err(domain(format!(
            "quantile diagnostics need 0 < eta <= 0.01, got {eta}"
        )));
    }
    let z = quantile(eta)?;
    let log_inv = -eta.ln();
    Ok(QuantileDiagnostics {
        eta,
        z,
        r1: (2.0 * log_inv).sqrt() - z,
        r2: 2.0 * log_inv - log_inv.ln() - z * z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values below were computed with 40-digit arithmetic
    // (erfc and root finding in mpmath).

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn density_values() {
        assert!((phi(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert!(rel(phi(3.0), 0.004_431_848_411_938_007) < 1e-14);
        assert_eq!(phi(3.0), phi(-3.0));
    }

    #[test]
    fn upper_tail_matches_reference() {
        let cases = [
            (0.0, 0.5),
            (1.95996, 0.025_000_232_877_630_949),
            (4.0, 3.167_124_183_311_992e-5),
            (-3.0, 0.998_650_101_968_369_9),
            (1e-3, 0.499_601_057_786_088_9),
            (8.0, 6.220_960_574_271_784e-16),
            (8.5, 9.479_534_822_203_318e-18),
            (12.0, 1.776_482_112_077_679e-33),
            (20.0, 2.753_624_118_606_234e-89),
            (37.0, 5.725_571_222_524_577e-300),
        ];
        for (x, want) in cases {
            assert!(rel(upper_tail(x), want) < 1e-12, "x={x}: {}", upper_tail(x));
        }
    }

    #[test]
    fn tail_is_continuous_at_switch() {
        let below = 0.5 * erfc(CF_SWITCH * std::f64::consts::FRAC_1_SQRT_2);
        let above = phi(CF_SWITCH) * tail_ratio_cf(CF_SWITCH);
        assert!(rel(above, below) < 1e-12);
    }

    #[test]
    fn quantile_matches_reference() {
        let cases = [
            (0.5, 0.0),
            (0.025, 1.959_963_984_540_054_2),
            (3e-5, 4.012_810_811_118_254),
            (0.01, 2.326_347_874_040_841),
            (1e-6, 4.753_424_308_822_899),
            (0.1, 1.281_551_565_544_600_4),
            (1e-300, 37.047_096_299_361_2),
        ];
        for (eta, want) in cases {
            let got = quantile(eta).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "eta={eta}: {got}"
            );
        }
        assert!((quantile(0.975).unwrap() + 1.959_963_984_540_054_2).abs() < 1e-12);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for eta in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(quantile(eta).is_err());
        }
    }

    #[test]
    fn mills_ratio_values() {
        assert!((mills_ratio(1.0).unwrap() - 0.655).abs() < 1e-3);
        assert!((mills_ratio(0.01).unwrap() - 0.012_433_764_712_490_347).abs() < 1e-12);
        let m6 = mills_ratio(6.0).unwrap();
        assert!(m6 > 0.97 && m6 < 1.0);
        assert!(mills_ratio(0.0).is_err());
        assert!(mills_ratio(-1.0).is_err());
    }

    #[test]
    fn mills_ratio_increasing() {
        let mut prev = 0.0;
        for i in 1..=4000 {
            let m = mills_ratio(i as f64 * 0.01).unwrap();
            assert!(m > prev && m < 1.0);
            prev = m;
        }
    }

    #[test]
    fn diagnostics_brackets() {
        let d = quantile_diagnostics(0.01).unwrap();
        assert!((d.r2 - 2.271_266_315_113_94).abs() < 1e-9);
        assert!((1.8..=3.0).contains(&d.r2));
        let d = quantile_diagnostics(1e-6).unwrap();
        assert!((0.0..=1.5).contains(&d.r1));
        assert!((d.r1 - 0.503_097_460_934_033).abs() < 1e-9);
        let d = quantile_diagnostics(1e-3).unwrap();
        assert!((1.8..=3.0).contains(&d.r2));
        assert!(quantile_diagnostics(0.02).is_err());
    }

    #[test]
    fn normal_from_uniform_is_lower_quantile() {
        assert!((normal_from_uniform(0.025) + 1.959_963_984_540_054_2).abs() < 1e-12);
        assert_eq!(normal_from_uniform(0.5), 0.0);
    }
}
