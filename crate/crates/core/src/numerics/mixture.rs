//! Equal-variance Gaussian mixtures and their differential entropy.

use std::f64::consts::{E, LN_2, PI};
use std::sync::OnceLock;

use super::quadrature::{AdaptiveIntegrator, GaussRule};
use super::NumericsError;

/// A mixture of Gaussians sharing one variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    means: Vec<f64>,
    weights: Vec<f64>,
    variance: f64,
}

impl GaussianMixture {
    pub fn new(components: Vec<(f64, f64)>, variance: f64) -> Result<Self, NumericsError> {
        if components.is_empty() {
            return Err(NumericsError::InvalidMixture("no components".into()));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(NumericsError::InvalidMixture(format!(
                "variance must be positive, got {variance}"
            )));
        }
        let (means, weights): (Vec<f64>, Vec<f64>) = components.into_iter().unzip();
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite())
            || means.iter().any(|m| !m.is_finite())
        {
            return Err(NumericsError::InvalidMixture(
                "weights must be nonnegative and finite".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(NumericsError::InvalidMixture(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(GaussianMixture {
            means,
            weights,
            variance,
        })
    }

    /// Uniform mixture over `means`.
    pub fn uniform(means: &[f64], variance: f64) -> Result<Self, NumericsError> {
        let w = 1.0 / means.len().max(1) as f64;
        Self::new(means.iter().map(|&m| (m, w)).collect(), variance)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Natural log of the density at `y`, evaluated with a max shift.
    pub fn ln_pdf(&self, y: f64) -> f64 {
        let inv2v = 0.5 / self.variance;
        let mut best = f64::NEG_INFINITY;
        for (&m, &w) in self.means.iter().zip(&self.weights) {
            if w > 0.0 {
                best = best.max(-(y - m) * (y - m) * inv2v);
            }
        }
        let mut acc = 0.0;
        for (&m, &w) in self.means.iter().zip(&self.weights) {
            acc += w * (-(y - m) * (y - m) * inv2v - best).exp();
        }
        best + acc.ln() - 0.5 * (2.0 * PI * self.variance).ln()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    /// Expectation of `f(Y)` with Gauss–Hermite nodes per component.
    pub fn expect_hermite<F: Fn(f64) -> f64>(&self, rule: &GaussRule, f: F) -> f64 {
        let sd = self.variance.sqrt();
        let mut acc = 0.0;
        for (&m, &w) in self.means.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
                inner += wx * f(m + sd * x);
            }
            acc += w * inner;
        }
        acc
    }
}

/// Entropy of a single Gaussian with this variance, in bits.
pub fn gaussian_entropy_bits(variance: f64) -> f64 {
    0.5 * (2.0 * PI * E * variance).log2()
}

fn hermite_rule(n: usize) -> &'static GaussRule {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [16, 32, 64, 128, 256]
            .iter()
            .map(|&n| GaussRule::hermite_normal(n))
            .collect()
    });
    let idx = match n {
        16 => 0,
        32 => 1,
        64 => 2,
        128 => 3,
        _ => 4,
    };
    &rules[idx]
}

/// Differential entropy `h(Y)` in bits.
///
/// Gauss–Hermite nodes per component are doubled until two successive
/// estimates agree to 1e-8. If that never happens the density is integrated
/// with adaptive Gauss–Legendre over `[min mean − 10σ, max mean + 10σ]`.
pub fn mixture_entropy(mix: &GaussianMixture) -> Result<f64, NumericsError> {
    const TOL: f64 = 1e-8;
    let mut prev = f64::NAN;
    for n in [16, 32, 64, 128, 256] {
        let h = -mix.expect_hermite(hermite_rule(n), |y| mix.ln_pdf(y)) / LN_2;
        if (h - prev).abs() < TOL {
            return Ok(h);
        }
        prev = h;
    }
    let sd = mix.variance.sqrt();
    let lo = mix.means.iter().cloned().fold(f64::INFINITY, f64::min) - 10.0 * sd;
    let hi = mix.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0 * sd;
    let panels = ((hi - lo) / sd).ceil().min(10_000.0) as usize;
    let integ = AdaptiveIntegrator::new(TOL * LN_2)
        .with_initial_panels(panels)
        .with_max_intervals(200_000);
    let nats = integ.integrate(
        |y| {
            let lp = mix.ln_pdf(y);
            -lp.exp() * lp
        },
        lo,
        hi,
    )?;
    Ok(nats / LN_2)
}

/// Entropy with a fixed 24-node Gauss–Hermite rule per component; for
/// optimizer seeding where ~1e-5 accuracy is plenty.
pub fn mixture_entropy_fast(mix: &GaussianMixture) -> f64 {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    let rule = RULE.get_or_init(|| GaussRule::hermite_normal(24));
    -mix.expect_hermite(rule, |y| mix.ln_pdf(y)) / LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_is_gaussian_entropy() {
        for v in [0.01, 1.0, 7.5] {
            let m = GaussianMixture::uniform(&[0.3], v).unwrap();
            assert!((mixture_entropy(&m).unwrap() - gaussian_entropy_bits(v)).abs() < 1e-6);
        }
        let m = GaussianMixture::uniform(&[0.0], 1.0).unwrap();
        assert!((mixture_entropy(&m).unwrap() - 2.0471).abs() < 1e-4);
    }

    #[test]
    fn separated_pair_adds_one_bit() {
        let m = GaussianMixture::uniform(&[-10.0, 10.0], 1.0).unwrap();
        let h = mixture_entropy(&m).unwrap();
        assert!((h - (1.0 + gaussian_entropy_bits(1.0))).abs() < 1e-3);
    }

    #[test]
    fn hermite_agrees_with_legendre_on_tight_mixture() {
        let means = [-2.1, -1.3, -0.2, 0.25, 0.9, 1.9];
        let m = GaussianMixture::uniform(&means, 0.0025).unwrap();
        let h = mixture_entropy(&m).unwrap();
        let integ = AdaptiveIntegrator::new(1e-11).with_initial_panels(200);
        let nats = integ
            .integrate(
                |y| {
                    let lp = m.ln_pdf(y);
                    -lp.exp() * lp
                },
                -3.0,
                3.0,
            )
            .unwrap();
        assert!((h - nats / LN_2).abs() < 1e-7, "{h} vs {}", nats / LN_2);
    }

    #[test]
    fn rejects_bad_mixtures() {
        assert!(GaussianMixture::new(vec![], 1.0).is_err());
        assert!(GaussianMixture::new(vec![(0.0, 0.5)], 1.0).is_err());
        assert!(GaussianMixture::new(vec![(0.0, 1.0)], 0.0).is_err());
        assert!(GaussianMixture::new(vec![(0.0, 1.5), (1.0, -0.5)], 1.0).is_err());
    }
}
