//! The J-function: mutual information between an equiprobable bit and a
//! consistent Gaussian LLR `N(σ²/2, σ²)`, and its inverse.
//!
//! The exact function is tabulated once per process from adaptive quadrature.
//! The table stores `g(σ) = ln(1 − J(σ))` together with `g'(σ)` and
//! interpolates with cubic Hermite segments, which keeps relative accuracy in
//! the saturated tail where EXIT thresholds are decided. The inverse solves
//! the same interpolant, so `J(J⁻¹(i)) = i` to rounding.

use std::f64::consts::LN_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::quadrature::{AdaptiveIntegrator, GaussRule};
use super::NumericsError;

/// Largest argument accepted by the saturating inverse.
pub const MAX_INFORMATION: f64 = 1.0 - 1e-12;

const TABLE_STEP: f64 = 0.01;
const TABLE_MAX_SIGMA: f64 = 30.0;

/// Which realisation of J the EXIT machinery uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JModel {
    /// Quadrature-exact J, tabulated.
    #[default]
    Exact,
    /// Three-piece polynomial/exponential fit of ten Brink, Kramer and
    /// Ashikhmin (2004) with its closed-form inverse.
    TenBrink,
}

impl JModel {
    #[inline]
    pub fn j(self, sigma: f64) -> f64 {
        match self {
            JModel::Exact => j(sigma),
            JModel::TenBrink => ten_brink_j(sigma),
        }
    }

    /// Inverse clamped to `[0, MAX_INFORMATION]`.
    #[inline]
    pub fn j_inv(self, info: f64) -> f64 {
        match self {
            JModel::Exact => j_inv(info),
            JModel::TenBrink => ten_brink_j_inv(info),
        }
    }
}

/// Checked J-function.
pub fn j_function(sigma: f64) -> Result<f64, NumericsError> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(NumericsError::Domain(format!(
            "J-function argument must be finite and nonnegative, got {sigma}"
        )));
    }
    Ok(j(sigma))
}

/// Checked inverse J-function, defined on `[0, 1)`.
pub fn j_inverse(info: f64) -> Result<f64, NumericsError> {
    if !(0.0..1.0).contains(&info) {
        return Err(NumericsError::Domain(format!(
            "inverse J-function needs 0 <= I < 1, got {info}"
        )));
    }
    Ok(j_inv(info))
}

/// Exact J for `sigma >= 0` (negative inputs are treated as zero).
#[inline]
pub fn j(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    -table().log_survival(sigma).exp_m1()
}

/// Exact inverse, saturating at `MAX_INFORMATION`.
#[inline]
pub fn j_inv(info: f64) -> f64 {
    if info <= 0.0 || info.is_nan() {
        return 0.0;
    }
    table().inverse((-info.min(MAX_INFORMATION)).ln_1p())
}

/// `1 − J(σ)` and `dJ/dσ` by direct quadrature, independent of the table.
///
/// `1 − J = E[log₂(1 + e^{−L})]`, `L = σ²/2 + σ t`, `t ~ N(0, 1)`.
pub fn j_quadrature(sigma: f64) -> (f64, f64) {
    if sigma <= 0.0 {
        return (1.0, 0.0);
    }
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let softplus_neg = |l: f64| (-l).max(0.0) + (-l.abs()).exp().ln_1p();
    let surv = |t: f64| {
        let l = 0.5 * sigma * sigma + sigma * t;
        phi(t) * softplus_neg(l) / LN_2
    };
    let deriv = |t: f64| {
        let l = 0.5 * sigma * sigma + sigma * t;
        // 1 / (1 + e^{L}) written to avoid overflow
        let s = if l > 0.0 {
            let e = (-l).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + l.exp())
        };
        phi(t) * (sigma + t) * s / LN_2
    };
    // Mass of both integrands sits near t = -σ/2 once σ is large.
    let lo = (-0.5 * sigma - 12.0).min(-12.0);
    let hi = 12.0;
    let rough = GaussRule::legendre(20);
    let panels = 64;
    let s0 = rough.integrate_composite(surv, lo, hi, panels);
    let d0 = rough.integrate_composite(deriv, lo, hi, panels);
    let fine = |scale: f64| {
        AdaptiveIntegrator::new((scale.abs() * 1e-12).max(1e-300)).with_max_intervals(100_000)
    };
    let s = fine(s0).integrate(surv, lo, hi).unwrap_or(s0);
    let d = fine(d0).integrate(deriv, lo, hi).unwrap_or(d0);
    (s, d)
}

struct JTable {
    /// `g(σ_k) = ln(1 − J(σ_k))`, strictly decreasing for k ≥ 1.
    g: Vec<f64>,
    /// `g'(σ_k)`.
    dg: Vec<f64>,
}

fn table() -> &'static JTable {
    static TABLE: OnceLock<JTable> = OnceLock::new();
    TABLE.get_or_init(JTable::build)
}

impl JTable {
    fn build() -> Self {
        let n = (TABLE_MAX_SIGMA / TABLE_STEP).round() as usize + 1;
        let mut g = Vec::with_capacity(n);
        let mut dg = Vec::with_capacity(n);
        for k in 0..n {
            let sigma = k as f64 * TABLE_STEP;
            let (surv, dj) = j_quadrature(sigma);
            g.push(surv.ln());
            dg.push(-dj / surv);
        }
        JTable { g, dg }
    }

    fn log_survival(&self, sigma: f64) -> f64 {
        let last = self.g.len() - 1;
        let pos = sigma / TABLE_STEP;
        if pos >= last as f64 {
            return self.g[last] + self.dg[last] * (sigma - last as f64 * TABLE_STEP);
        }
        let k = pos as usize;
        let t = pos - k as f64;
        self.hermite(k, t)
    }

    #[inline]
    fn hermite(&self, k: usize, t: f64) -> f64 {
        let (y0, y1) = (self.g[k], self.g[k + 1]);
        let (m0, m1) = (self.dg[k] * TABLE_STEP, self.dg[k + 1] * TABLE_STEP);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    #[inline]
    fn hermite_slope(&self, k: usize, t: f64) -> f64 {
        let (y0, y1) = (self.g[k], self.g[k + 1]);
        let (m0, m1) = (self.dg[k] * TABLE_STEP, self.dg[k + 1] * TABLE_STEP);
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1
    }

    /// Solves `g(σ) = target` for `target <= 0`.
    fn inverse(&self, target: f64) -> f64 {
        if target >= 0.0 {
            return 0.0;
        }
        let last = self.g.len() - 1;
        if target <= self.g[last] {
            return last as f64 * TABLE_STEP + (target - self.g[last]) / self.dg[last];
        }
        // first index with g[k] <= target
        let k1 = self.g.partition_point(|&v| v > target);
        let k = k1 - 1;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut t = (self.g[k] - target) / (self.g[k] - self.g[k1]);
        for _ in 0..60 {
            let f = self.hermite(k, t) - target;
            if f > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let slope = self.hermite_slope(k, t);
            let mut next = t - f / slope;
            if !(next > lo && next < hi) || slope >= 0.0 {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() < 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        (k as f64 + t) * TABLE_STEP
    }
}

const TB_SIGMA_STAR: f64 = 1.6363;
const TB_I_STAR: f64 = 0.3646;

/// Ten Brink's three-piece approximation of J, clamped to `[0, 1]`.
pub fn ten_brink_j(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        0.0
    } else if sigma <= TB_SIGMA_STAR {
        (-0.0421061 * sigma.powi(3) + 0.209252 * sigma * sigma - 0.00640081 * sigma).max(0.0)
    } else if sigma < 10.0 {
        1.0 - (0.00181491 * sigma.powi(3) - 0.142675 * sigma * sigma - 0.0822054 * sigma
            + 0.0549608)
            .exp()
    } else {
        1.0
    }
}

/// Closed-form inverse paired with [`ten_brink_j`].
pub fn ten_brink_j_inv(info: f64) -> f64 {
    if info <= 0.0 || info.is_nan() {
        return 0.0;
    }
    let i = info.min(MAX_INFORMATION);
    if i <= TB_I_STAR {
        1.09542 * i * i + 0.214217 * i + 2.33727 * i.sqrt()
    } else {
        -0.706692 * (0.386013 * (1.0 - i)).ln() + 1.75017 * i
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        assert_eq!(j_function(0.0).unwrap(), 0.0);
        assert!((j_function(1e6).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(j_inverse(0.0).unwrap(), 0.0);
        assert!(j_function(-0.1).is_err());
        assert!(j_function(f64::NAN).is_err());
        assert!(j_inverse(1.0).is_err());
        assert!(j_inverse(-1e-3).is_err());
    }

    #[test]
    fn table_matches_direct_quadrature_off_grid() {
        for &s in &[0.013, 0.5, 1.234_567, 2.0, 3.3, 7.77, 12.345] {
            let (surv, _) = j_quadrature(s);
            let direct = 1.0 - surv;
            assert!(
                (j(s) - direct).abs() < 1e-11,
                "sigma={s}: {} vs {direct}",
                j(s)
            );
            // relative accuracy of the survival in the tail
            let rel = ((1.0 - j(s)) - surv).abs() / surv;
            if s > 2.0 {
                assert!(rel < 1e-6, "sigma={s} rel={rel}");
            }
        }
    }

    #[test]
    fn round_trips() {
        let x = j_inverse(j_function(1.7).unwrap()).unwrap();
        assert!((x - 1.7).abs() < 1e-5);
        for k in 1..1000 {
            let i = k as f64 / 1000.0;
            let s = j_inv(i);
            assert!((j(s) - i).abs() < 1e-12, "i={i}");
        }
        let i = 1.0 - 1e-10;
        assert!((j(j_inv(i)) - i).abs() < 1e-13);
    }

    #[test]
    fn ten_brink_tracks_exact() {
        for k in 0..=100 {
            let s = k as f64 * 0.1;
            assert!((ten_brink_j(s) - j(s)).abs() < 2e-3, "sigma={s}");
        }
        for k in 1..100 {
            let i = k as f64 / 100.0;
            assert!((ten_brink_j(ten_brink_j_inv(i)) - i).abs() < 5e-3, "i={i}");
        }
    }
}
