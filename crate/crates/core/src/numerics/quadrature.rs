//! Gauss–Legendre and Gauss–Hermite rules plus an adaptive composite
//! integrator.

use std::f64::consts::PI;

use super::NumericsError;

/// Nodes and weights of an n-point quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gauss–Legendre rule on [-1, 1].
    ///
    /// Nodes come from Newton iteration on the three-term Legendre recurrence,
    /// started at the Chebyshev approximation of each root.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Gauss–Hermite rule normalised for expectations under N(0, 1):
    /// `E[f(Z)] ≈ Σ w_i f(x_i)` with `Σ w_i = 1`.
    pub fn hermite_normal(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        // Physicists' Hermite roots via Newton on the orthonormal recurrence,
        // then rescaled by sqrt(2) for the standard normal weight.
        let half = n.div_ceil(2);
        let nf = n as f64;
        // positive roots, largest first
        let mut roots: Vec<f64> = Vec::with_capacity(half);
        let mut root_weights: Vec<f64> = Vec::with_capacity(half);
        let mut z = 0.0;
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * roots[0],
                3 => 1.91 * z - 0.91 * roots[1],
                _ => 2.0 * z - roots[i - 2],
            };
            for _ in 0..200 {
                let (p, d) = hermite_orthonormal(n, z);
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-14 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, pp) = hermite_orthonormal(n, z);
            roots.push(z);
            root_weights.push(2.0 / (pp * pp));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for (i, (&r, &w)) in roots.iter().zip(&root_weights).enumerate() {
            nodes[i] = -r;
            nodes[n - 1 - i] = r;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        let sqrt_pi = PI.sqrt();
        for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
            *x *= std::f64::consts::SQRT_2;
            *w /= sqrt_pi;
        }
        GaussRule { nodes, weights }
    }

    /// Applies the rule to `f` on [a, b] (Legendre rules only).
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule with `panels` equal sub-intervals.
    pub fn integrate_composite<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        panels: usize,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + h * k as f64;
                self.integrate(&f, lo, lo + h)
            })
            .sum()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Orthonormal Hermite polynomial value and derivative (physicists' weight).
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    let pim4 = PI.powf(-0.25);
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    let pp = (2.0 * n as f64).sqrt() * p2;
    (p1, pp)
}

/// Adaptive composite Gauss–Legendre integration.
///
/// Each interval is accepted once the rule on the whole interval and the sum
/// over its two halves agree within the interval's share of `abs_tol`.
#[derive(Debug, Clone)]
pub struct AdaptiveIntegrator {
    rule: GaussRule,
    pub abs_tol: f64,
    pub max_depth: usize,
    pub max_intervals: usize,
    /// Equal panels the range is cut into before any refinement; features
    /// narrower than a panel that no node touches cannot be found.
    pub initial_panels: usize,
}

impl Default for AdaptiveIntegrator {
    fn default() -> Self {
        Self::new(1e-8)
    }
}

impl AdaptiveIntegrator {
    pub fn new(abs_tol: f64) -> Self {
        AdaptiveIntegrator {
            rule: GaussRule::legendre(15),
            abs_tol,
            max_depth: 40,
            max_intervals: 20_000,
            initial_panels: 8,
        }
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }

    pub fn with_initial_panels(mut self, panels: usize) -> Self {
        self.initial_panels = panels.max(1);
        self
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64, NumericsError> {
        if a == b {
            return Ok(0.0);
        }
        let total_width = (b - a).abs();
        let h = (b - a) / self.initial_panels as f64;
        let mut stack: Vec<(f64, f64, f64, usize)> = (0..self.initial_panels)
            .map(|k| {
                let lo = a + h * k as f64;
                let hi = if k + 1 == self.initial_panels {
                    b
                } else {
                    lo + h
                };
                (lo, hi, self.rule.integrate(&f, lo, hi), 0usize)
            })
            .collect();
        let mut acc = 0.0;
        let mut err_acc = 0.0;
        let mut accepted = 0usize;
        let mut failed = false;
        while let Some((lo, hi, whole, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = self.rule.integrate(&f, lo, mid);
            let right = self.rule.integrate(&f, mid, hi);
            let diff = (left + right - whole).abs();
            let share = self.abs_tol * (hi - lo).abs() / total_width;
            if diff <= share.max(f64::EPSILON * (left + right).abs()) || depth >= self.max_depth {
                if depth >= self.max_depth && diff > share {
                    failed = true;
                }
                acc += left + right;
                err_acc += diff;
                accepted += 1;
            } else {
                stack.push((lo, mid, left, depth + 1));
                stack.push((mid, hi, right, depth + 1));
            }
            if accepted + stack.len() > self.max_intervals {
                return Err(NumericsError::Quadrature {
                    estimate: acc,
                    error_estimate: f64::INFINITY,
                    intervals: accepted + stack.len(),
                });
            }
        }
        if failed || !acc.is_finite() {
            return Err(NumericsError::Quadrature {
                estimate: acc,
                error_estimate: err_acc,
                intervals: accepted,
            });
        }
        Ok(acc)
    }
}
