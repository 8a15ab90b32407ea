//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Sized for the degree-distribution programs: tens of variables and a few
//! hundred constraints.

use super::NumericsError;

const PIVOT_EPS: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// `maximize c·x` subject to `A x <= b`, `E x = f`, `x >= lower`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub inequalities: Vec<(Vec<f64>, f64)>,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub lower_bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            LpOutcome::Infeasible => None,
        }
    }
}

impl LinearProgram {
    /// Program over `n` variables with zero lower bounds and no constraints.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            lower_bounds: vec![0.0; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn less_eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.inequalities.push((row, rhs));
        self
    }

    pub fn greater_eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.inequalities
            .push((row.into_iter().map(|v| -v).collect(), -rhs));
        self
    }

    pub fn equal(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.equalities.push((row, rhs));
        self
    }

    fn validate(&self) -> Result<(), NumericsError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(NumericsError::MalformedProgram("no variables".into()));
        }
        if self.lower_bounds.len() != n {
            return Err(NumericsError::MalformedProgram(format!(
                "{} lower bounds for {n} variables",
                self.lower_bounds.len()
            )));
        }
        for (k, (row, rhs)) in self.inequalities.iter().chain(&self.equalities).enumerate() {
            if row.len() != n {
                return Err(NumericsError::MalformedProgram(format!(
                    "constraint {k} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(NumericsError::MalformedProgram(format!(
                    "constraint {k} is not finite"
                )));
            }
        }
        if self
            .objective
            .iter()
            .chain(&self.lower_bounds)
            .any(|v| !v.is_finite())
        {
            return Err(NumericsError::MalformedProgram(
                "objective or bounds not finite".into(),
            ));
        }
        Ok(())
    }

    /// Largest violation of any constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let ineq = self.inequalities.iter().map(|(r, b)| dot(r) - b);
        let eq = self.equalities.iter().map(|(r, b)| (dot(r) - b).abs());
        let lb = self.lower_bounds.iter().zip(x).map(|(l, v)| l - v);
        ineq.chain(eq).chain(lb).fold(0.0, f64::max)
    }
}

/// Solves the program to an optimal vertex.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome, NumericsError> {
    lp.validate()?;
    let n = lp.num_vars();
    let shift = |row: &[f64], rhs: f64| {
        rhs - row
            .iter()
            .zip(&lp.lower_bounds)
            .map(|(a, l)| a * l)
            .sum::<f64>()
    };

    let m_ineq = lp.inequalities.len();
    let m = m_ineq + lp.equalities.len();
    // columns: structural | one slack per inequality | artificials
    let n_slack = m_ineq;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut needs_artificial = Vec::with_capacity(m);
    for (k, (row, b)) in lp.inequalities.iter().enumerate() {
        let r = shift(row, *b);
        let mut t = vec![0.0; n + n_slack];
        t[..n].copy_from_slice(row);
        t[n + k] = 1.0;
        if r < 0.0 {
            t.iter_mut().for_each(|v| *v = -*v);
            rhs.push(-r);
            needs_artificial.push(true);
        } else {
            rhs.push(r);
            needs_artificial.push(false);
        }
        rows.push(t);
    }
    for (row, b) in &lp.equalities {
        let r = shift(row, *b);
        let mut t = vec![0.0; n + n_slack];
        t[..n].copy_from_slice(row);
        if r < 0.0 {
            t.iter_mut().for_each(|v| *v = -*v);
            rhs.push(-r);
        } else {
            rhs.push(r);
        }
        needs_artificial.push(true);
        rows.push(t);
    }
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let width = n + n_slack + n_art;
    let mut tab = Tableau {
        a: Vec::with_capacity(m),
        rhs,
        basis: Vec::with_capacity(m),
        width,
        blocked: vec![false; width],
    };
    let mut art_col = n + n_slack;
    for (k, mut row) in rows.into_iter().enumerate() {
        row.resize(width, 0.0);
        if needs_artificial[k] {
            row[art_col] = 1.0;
            tab.basis.push(art_col);
            art_col += 1;
        } else {
            tab.basis.push(n + k);
        }
        tab.a.push(row);
    }

    let max_iter = 50 * (width + m).max(100);
    if n_art > 0 {
        let mut phase1 = vec![0.0; width];
        phase1[n + n_slack..].iter_mut().for_each(|c| *c = -1.0);
        tab.run(&phase1, max_iter)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(&b, _)| b >= n + n_slack)
            .map(|(_, v)| *v)
            .sum();
        let scale = 1.0 + tab.rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if infeasibility > FEAS_TOL * scale {
            return Ok(LpOutcome::Infeasible);
        }
        tab.evict_artificials(n + n_slack);
        for c in n + n_slack..width {
            tab.blocked[c] = true;
        }
    }
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    tab.run(&cost, max_iter)?;

    let mut x = lp.lower_bounds.clone();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] += tab.rhs[i].max(0.0);
        }
    }
    let violation = lp.max_violation(&x);
    let scale = 1.0 + x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if violation > 1e-7 * scale {
        return Err(NumericsError::MalformedProgram(format!(
            "simplex terminated with constraint violation {violation:e}"
        )));
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOutcome::Optimal(LpSolution { x, objective }))
}

struct Tableau {
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    blocked: Vec<bool>,
}

impl Tableau {
    /// Maximizes `cost · z` from the current basic feasible solution.
    fn run(&mut self, cost: &[f64], max_iter: usize) -> Result<(), NumericsError> {
        for _ in 0..max_iter {
            // Bland: first improving column
            let entering = (0..self.width).find(|&j| {
                if self.blocked[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .zip(&self.a)
                        .map(|(&b, row)| cost[b] * row[j])
                        .sum::<f64>();
                reduced > PIVOT_EPS
            });
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.a.iter().enumerate() {
                let coef = row[col];
                if coef > PIVOT_EPS {
                    let ratio = self.rhs[i].max(0.0) / coef;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14
                                || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(NumericsError::Unbounded);
            };
            self.pivot(row, col);
        }
        Err(NumericsError::IterationLimit(max_iter))
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        self.a[r].iter_mut().for_each(|v| *v /= p);
        self.rhs[r] /= p;
        let pivot_row = self.a[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c];
            if f != 0.0 {
                for (v, pv) in self.a[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.a[i][c] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        self.basis[r] = c;
    }

    /// Pivots zero-valued artificials out of the basis; drops redundant rows.
    fn evict_artificials(&mut self, first_art: usize) {
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] >= first_art {
                let col =
                    (0..first_art).find(|&j| !self.basis.contains(&j) && self.a[i][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.a.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(lp: &LinearProgram) -> LpSolution {
        lp_solve(lp).unwrap().optimal().unwrap()
    }

    #[test]
    fn single_bound() {
        let lp = LinearProgram::new(vec![1.0]).less_eq(vec![1.0], 3.0);
        let s = solve(&lp);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_equality() {
        let lp = LinearProgram::new(vec![1.0, 1.0])
            .less_eq(vec![1.0, 1.0], 1.0)
            .equal(vec![1.0, -1.0], 0.0);
        let s = solve(&lp);
        assert!((s.x[0] - 0.5).abs() < 1e-12 && (s.x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let lp = LinearProgram::new(vec![1.0])
            .less_eq(vec![1.0], 1.0)
            .greater_eq(vec![1.0], 2.0);
        assert_eq!(lp_solve(&lp).unwrap(), LpOutcome::Infeasible);
        let lp = LinearProgram::new(vec![1.0, 0.0]).less_eq(vec![-1.0, 1.0], 1.0);
        assert!(matches!(lp_solve(&lp), Err(NumericsError::Unbounded)));
    }

    #[test]
    fn shifted_lower_bounds_and_negative_rhs() {
        // maximize -x - y, x + y >= 3, x >= 1, y >= 0.5
        let mut lp = LinearProgram::new(vec![-1.0, -1.0]).greater_eq(vec![1.0, 1.0], 3.0);
        lp.lower_bounds = vec![1.0, 0.5];
        let s = solve(&lp);
        assert!((s.objective + 3.0).abs() < 1e-12);
        assert!(lp.max_violation(&s.x) < 1e-12);
    }

    #[test]
    fn rejects_ragged_rows() {
        let lp = LinearProgram::new(vec![1.0, 1.0]).less_eq(vec![1.0], 1.0);
        assert!(matches!(
            lp_solve(&lp),
            Err(NumericsError::MalformedProgram(_))
        ));
    }

    #[test]
    fn redundant_equalities() {
        let lp = LinearProgram::new(vec![1.0, 2.0])
            .equal(vec![1.0, 1.0], 1.0)
            .equal(vec![2.0, 2.0], 2.0);
        let s = solve(&lp);
        assert!((s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling instance under Dantzig's rule.
        let lp = LinearProgram::new(vec![0.75, -150.0, 0.02, -6.0])
            .less_eq(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .less_eq(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .less_eq(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = solve(&lp);
        assert!((s.objective - 0.05).abs() < 1e-9);
    }
}
