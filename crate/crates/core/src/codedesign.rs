//! Variable-node degree distributions and their LP-based design.

//!
//! Each user's `λ` is found by a linear program that keeps the EXIT tunnel
//! of that user open while the partner's distribution is held fixed; the
//! two users are optimized alternately.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constellation::{LevelOrder, UserConstellation};
use crate::exit::{
    exit_cv, exit_vc, exit_vc_degree, exit_vs, joint_trajectory, LevelChannelContext, LevelExit,
    SvMetric, User,
};
use crate::numerics::{lp_solve, JModel, LinearProgram, LpOutcome, NumericsError};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),
    #[error("design rate {0} is not positive")]
    NonPositiveRate(f64),
    #[error("no degree distribution satisfies the EXIT constraints (binding at I = {binding:?})")]
    Infeasible { binding: Vec<f64> },
    #[error("no candidate distribution for user {user:?} passed the joint trajectory check")]
    NoConvergentDesign { user: User },
    #[error("every check-degree candidate failed: {0}")]
    AllCandidatesFailed(String),
    #[error("invalid design parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Constellation(#[from] crate::constellation::ConstellationError),
}

const SUM_TOL: f64 = 1e-9;

#[derive(Deserialize)]
struct RawDistribution {
    lambda: BTreeMap<usize, f64>,
    dc: usize,
}

impl TryFrom<RawDistribution> for DegreeDistribution {
    type Error = DesignError;
    fn try_from(r: RawDistribution) -> Result<Self, DesignError> {
        DegreeDistribution::new(r.lambda, r.dc)
    }
}

/// Edge-perspective `λ(x) = Σ λ_j x^{j−1}` with a concentrated check degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct DegreeDistribution {
    lambda: BTreeMap<usize, f64>,
    dc: usize,
}

impl DegreeDistribution {
    /// Validates and drops zero entries.
    pub fn new(lambda: BTreeMap<usize, f64>, dc: usize) -> Result<Self, DesignError> {
        if dc < 2 {
            return Err(DesignError::InvalidDistribution(format!(
                "check degree {dc} < 2"
            )));
        }
        if lambda.keys().any(|&j| j < 2) {
            return Err(DesignError::InvalidDistribution(
                "variable degrees must be >= 2".into(),
            ));
        }
        if lambda.values().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(DesignError::InvalidDistribution(
                "negative or non-finite fraction".into(),
            ));
        }
        let total: f64 = lambda.values().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(DesignError::InvalidDistribution(format!(
                "fractions sum to {total}"
            )));
        }
        let lambda = lambda.into_iter().filter(|&(_, v)| v > 0.0).collect();
        Ok(DegreeDistribution { lambda, dc })
    }

    /// Builds from `(degree, fraction)` pairs after renormalizing, for LP
    /// output and rounded tables whose sums are off by a few ulps or digits.
    pub fn normalized(pairs: &[(usize, f64)], dc: usize) -> Result<Self, DesignError> {
        let total: f64 = pairs.iter().map(|p| p.1.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(DesignError::InvalidDistribution(
                "all fractions are zero".into(),
            ));
        }
        let mut lambda = BTreeMap::new();
        for &(j, v) in pairs {
            *lambda.entry(j).or_insert(0.0) += v.max(0.0) / total;
        }
        let s: f64 = lambda.values().sum();
        if let Some(v) = lambda.values_mut().next_back() {
            *v += 1.0 - s;
        }
        Self::new(lambda, dc)
    }

    /// `λ(x) = x^{j−1}`.
    pub fn regular(j: usize, dc: usize) -> Result<Self, DesignError> {
        Self::new(BTreeMap::from([(j, 1.0)]), dc)
    }

    pub fn lambda(&self) -> &BTreeMap<usize, f64> {
        &self.lambda
    }

    pub fn dc(&self) -> usize {
        self.dc
    }

    pub fn max_degree(&self) -> usize {
        self.lambda.keys().next_back().copied().unwrap_or(2)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lambda.iter().map(|(&j, &v)| (j, v))
    }

    /// `Σ λ_j / j`.
    pub fn inverse_mean(&self) -> f64 {
        self.iter().map(|(j, v)| v / j as f64).sum()
    }

    pub fn with_dc(&self, dc: usize) -> Result<Self, DesignError> {
        Self::new(self.lambda.clone(), dc)
    }
}

/// Node-perspective fractions `L_j = (λ_j/j) / Σ_i λ_i/i`.
pub fn node_perspective(dd: &DegreeDistribution) -> BTreeMap<usize, f64> {
    let norm = dd.inverse_mean();
    dd.iter().map(|(j, v)| (j, v / j as f64 / norm)).collect()
}

/// `1 − (1/d_c) / Σ_j λ_j/j`.
pub fn design_rate(dd: &DegreeDistribution) -> Result<f64, DesignError> {
    let r = 1.0 - (1.0 / dd.dc as f64) / dd.inverse_mean();
    if r <= 1e-12 {
        return Err(DesignError::NonPositiveRate(r));
    }
    Ok(r)
}

/// How the target user's `I_SV` is tied to its own progress in the LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvAssumption {
    /// The partner contributes nothing: `I_SV` stays at its value for
    /// `I_VS = 0`. Pessimistic; every resulting design converges.
    Silent,
    /// For each target operating point the partner runs to its own fixed
    /// point given the target's `I_VS`, and the resulting partner `I_VS`
    /// sets the target's `I_SV`.
    PartnerFixedPoint,
    /// The joint trajectory of the current pair is run once; the target's
    /// `I_SV` is tabulated against its own `I_CV` along it and held at the
    /// last value beyond the trajectory's end.
    PartnerTrajectory,
    /// The partner is assumed to have the same `I_CV` as the target.
    SameProgress,
}

/// Parameters of the LP design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub v_max: usize,
    /// Grid step on the target's `I_VC` axis.
    pub delta: f64,
    /// Openness margins tried in order until the closed-loop check passes.
    pub margins: Vec<f64>,
    /// LP re-solves per margin; the target's own `λ` enters the profile.
    pub inner_iters: usize,
    /// Maximum alternation rounds.
    pub rounds: usize,
    /// Alternation stops once neither rate improves by more than this.
    pub rate_tol: f64,
    /// Iteration budget of the trajectory check.
    pub max_iters: usize,
    /// State-node information metric used when building the design channel.
    pub sv_metric: SvMetric,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            v_max: 50,
            delta: 0.01,
            margins: vec![1e-4, 1e-3, 3e-3, 1e-2, 2e-2],
            inner_iters: 4,
            rounds: 20,
            rate_tol: 1e-4,
            max_iters: 2000,
            sv_metric: SvMetric::Exact,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<(), DesignError> {
        if self.v_max < 3 {
            return Err(DesignError::InvalidParameter(format!(
                "v_max = {} < 3",
                self.v_max
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 0.1) {
            return Err(DesignError::InvalidParameter(format!(
                "delta = {} not in (0, 0.1]",
                self.delta
            )));
        }
        if self.margins.is_empty() || self.margins.iter().any(|&m| !(m > 0.0)) {
            return Err(DesignError::InvalidParameter(
                "margins must be positive".into(),
            ));
        }
        if self.rounds == 0 {
            return Err(DesignError::InvalidParameter("rounds must be >= 1".into()));
        }
        Ok(())
    }
}

/// What the LP for one user sees.
#[derive(Debug, Clone)]
pub struct DesignContext<'a> {
    pub exit: &'a LevelExit,
    pub target: User,
    pub partner: &'a DegreeDistribution,
    pub dc: usize,
    pub config: &'a DesignConfig,
}

/// Partner's least fixed point when the target sends `I_VS = v`, starting
/// the iteration from `start` (a lower bound). Returns the partner's
/// `(I_CV, I_VS)`.
fn partner_fixed_point(ctx: &DesignContext<'_>, v: f64, start: f64) -> (f64, f64) {
    let jm = ctx.exit.jm;
    let p = ctx.target.other();
    let i_sv = ctx.exit.sv(p, v);
    let mut i_cv = start;
    for _ in 0..ctx.config.max_iters {
        let i_vc = exit_vc(jm, ctx.partner, i_cv, i_sv);
        let next = exit_cv(jm, ctx.partner.dc(), i_vc);
        if (next - i_cv).abs() < 1e-12 {
            i_cv = next;
            break;
        }
        i_cv = next;
    }
    (i_cv, exit_vs(jm, ctx.partner, i_cv))
}

/// `I_SV` of the target at each grid point of its `I_VC` axis.
pub fn sv_profile(
    ctx: &DesignContext<'_>,
    grid: &[f64],
    assumption: SvAssumption,
    own: Option<&DegreeDistribution>,
) -> Vec<f64> {
    let jm = ctx.exit.jm;
    match (assumption, own) {
        (SvAssumption::Silent, _) | (_, None) => vec![ctx.exit.sv(ctx.target, 0.0); grid.len()],
        (SvAssumption::SameProgress, Some(_)) => grid
            .iter()
            .map(|&x| {
                ctx.exit
                    .sv(ctx.target, exit_vs(jm, ctx.partner, exit_cv(jm, ctx.dc, x)))
            })
            .collect(),
        (SvAssumption::PartnerTrajectory, Some(own)) => {
            let (a, b) = match ctx.target {
                User::One => (own, ctx.partner),
                User::Two => (ctx.partner, own),
            };
            let tr = joint_trajectory(ctx.exit, a, b, ctx.config.max_iters);
            let k = ctx.target.index();
            // (I_CV of the target before a step, I_SV it receives in that step)
            let pts: Vec<(f64, f64)> = tr
                .trace
                .windows(2)
                .map(|w| (w[0][k].i_cv, w[1][k].i_sv))
                .collect();
            grid.iter()
                .map(|&x| {
                    let c = exit_cv(jm, ctx.dc, x);
                    match pts.iter().position(|p| p.0 > c) {
                        Some(0) => pts[0].1,
                        Some(i) => {
                            let (c0, s0) = pts[i - 1];
                            let (c1, s1) = pts[i];
                            s0 + (s1 - s0) * (c - c0) / (c1 - c0)
                        }
                        None => pts.last().map_or(0.0, |p| p.1),
                    }
                })
                .collect()
        }
        (SvAssumption::PartnerFixedPoint, Some(own)) => {
            let mut start = 0.0;
            grid.iter()
                .map(|&x| {
                    let i_cv = exit_cv(jm, ctx.dc, x);
                    let v = exit_vs(jm, own, i_cv);
                    let (p_cv, u) = partner_fixed_point(ctx, v, start);
                    start = p_cv;
                    ctx.exit.sv(ctx.target, u)
                })
                .collect()
        }
    }
}

fn design_grid(delta: f64) -> Vec<f64> {
    let n = (1.0 / delta).round() as usize;
    (0..n).map(|k| k as f64 * delta).collect()
}

/// Solves the rate-maximizing LP against a fixed `I_SV` profile.
///
/// Maximizes `Σ λ_j/j` subject to
/// `Σ_j λ_j J(√((j−1)J⁻¹(I_CV)² + J⁻¹(I_SV)²)) ≥ x + margin` at every grid
/// point `x` of the target's `I_VC` axis, with `I_CV` the check output for
/// input `x`, plus `Σ λ_j = 1` and `λ_j ≥ 0`.
pub fn solve_lambda_lp(
    ctx: &DesignContext<'_>,
    grid: &[f64],
    profile: &[f64],
    margin: f64,
) -> Result<DegreeDistribution, DesignError> {
    let jm = ctx.exit.jm;
    let degrees: Vec<usize> = (2..=ctx.config.v_max).collect();
    let objective: Vec<f64> = degrees.iter().map(|&j| 1.0 / j as f64).collect();
    let mut lp = LinearProgram::new(objective).equal(vec![1.0; degrees.len()], 1.0);
    let mut binding = Vec::new();
    for (&x, &sv) in grid.iter().zip(profile) {
        let i_cv = exit_cv(jm, ctx.dc, x);
        let row: Vec<f64> = degrees
            .iter()
            .map(|&j| exit_vc_degree(jm, j, i_cv, sv))
            .collect();
        let rhs = (x + margin).min(1.0);
        if row.iter().cloned().fold(f64::NEG_INFINITY, f64::max) < rhs {
            binding.push(x);
        }
        lp = lp.greater_eq(row, rhs);
    }
    match lp_solve(&lp)? {
        LpOutcome::Optimal(sol) => {
            let pairs: Vec<(usize, f64)> = degrees
                .iter()
                .zip(&sol.x)
                .filter(|(_, &v)| v > 1e-10)
                .map(|(&j, &v)| (j, v))
                .collect();
            DegreeDistribution::normalized(&pairs, ctx.dc)
        }
        LpOutcome::Infeasible => Err(DesignError::Infeasible { binding }),
    }
}

fn passes(ctx: &DesignContext<'_>, own: &DegreeDistribution) -> bool {
    let (a, b) = match ctx.target {
        User::One => (own, ctx.partner),
        User::Two => (ctx.partner, own),
    };
    joint_trajectory(ctx.exit, a, b, ctx.config.max_iters).converged
}

/// Rate-maximizing `λ` for the target user with the partner held fixed.
///
/// With [`SvAssumption::PartnerFixedPoint`] the profile depends on the
/// target's own `λ`, so the LP is re-solved a few times starting from
/// `current` (or from the silent-partner solution). Every LP solution is
/// checked with the joint trajectory; the highest-rate one that converges
/// is returned. Margins from the configuration are tried in order until a
/// candidate passes. `current`, when it passes, is itself a candidate, so
/// the rate never drops below it.
pub fn optimize_lambda(
    ctx: &DesignContext<'_>,
    assumption: SvAssumption,
    current: Option<&DegreeDistribution>,
) -> Result<DegreeDistribution, DesignError> {
    ctx.config.validate()?;
    let grid = design_grid(ctx.config.delta);
    let rate_of = |d: &DegreeDistribution| design_rate(d).unwrap_or(f64::NEG_INFINITY);
    let mut best: Option<(f64, DegreeDistribution)> = current
        .filter(|c| c.dc() == ctx.dc && passes(ctx, c))
        .map(|c| (rate_of(c), c.clone()));
    let mut last_err = None;
    for &margin in &ctx.config.margins {
        let mut own = match assumption {
            SvAssumption::Silent => None,
            _ => current.cloned(),
        };
        let iters = if assumption == SvAssumption::Silent {
            1
        } else {
            ctx.config.inner_iters.max(1) + 1
        };
        let mut found = false;
        for _ in 0..iters {
            let profile = sv_profile(ctx, &grid, assumption, own.as_ref());
            let cand = match solve_lambda_lp(ctx, &grid, &profile, margin) {
                Ok(c) => c,
                Err(e) => {
                    last_err = Some(e);
                    break;
                }
            };
            if passes(ctx, &cand) {
                found = true;
                let r = rate_of(&cand);
                if best.as_ref().is_none_or(|(br, _)| r > *br) {
                    best = Some((r, cand.clone()));
                }
            }
            if own.as_ref() == Some(&cand) {
                break;
            }
            own = Some(cand);
        }
        if found {
            break;
        }
    }
    match (best, last_err) {
        (Some((_, d)), _) => Ok(d),
        (None, Some(e)) => Err(e),
        (None, None) => Err(DesignError::NoConvergentDesign { user: ctx.target }),
    }
}

/// One designed pair for one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDesign {
    pub lambdas: [DegreeDistribution; 2],
    pub rates: [f64; 2],
    pub rounds: usize,
}

impl PairDesign {
    pub fn sum_rate(&self) -> f64 {
        self.rates[0] + self.rates[1]
    }
}

/// Alternating optimization of both users' `λ` for one stage.
///
/// Each round re-solves the LP of both users against the partner's `λ`
/// from the previous round, with the partner assumed to progress at the
/// same `I_CV` as the target. Rounds stop when neither rate moves by more
/// than `rate_tol`. The resulting pair is then checked with the joint
/// trajectory; on failure the next margin is tried, warm-started from the
/// last pair. Without `init` the first round starts from the
/// silent-partner designs.
pub fn alternating_design(
    exit: &LevelExit,
    dcs: [usize; 2],
    config: &DesignConfig,
    init: Option<[DegreeDistribution; 2]>,
) -> Result<PairDesign, DesignError> {
    config.validate()?;
    let dummy = DegreeDistribution::regular(2, 2)?;
    fn ctx_for<'a>(
        exit: &'a LevelExit,
        u: User,
        partner: &'a DegreeDistribution,
        dcs: [usize; 2],
        config: &'a DesignConfig,
    ) -> DesignContext<'a> {
        DesignContext {
            exit,
            target: u,
            partner,
            dc: dcs[u.index()],
            config,
        }
    }
    let mut pair = match init {
        Some(p) => [p[0].with_dc(dcs[0])?, p[1].with_dc(dcs[1])?],
        None => [
            optimize_lambda(
                &ctx_for(exit, User::One, &dummy, dcs, config),
                SvAssumption::Silent,
                None,
            )?,
            optimize_lambda(
                &ctx_for(exit, User::Two, &dummy, dcs, config),
                SvAssumption::Silent,
                None,
            )?,
        ],
    };
    let grid = design_grid(config.delta);
    let mut rounds = 0;
    let mut last_err = None;
    for &margin in &config.margins {
        let mut rates = [design_rate(&pair[0])?, design_rate(&pair[1])?];
        for _ in 0..config.rounds {
            rounds += 1;
            let mut next = pair.clone();
            for u in User::BOTH {
                let k = u.index();
                let ctx = ctx_for(exit, u, &pair[u.other().index()], dcs, config);
                let profile = sv_profile(&ctx, &grid, SvAssumption::SameProgress, Some(&pair[k]));
                match solve_lambda_lp(&ctx, &grid, &profile, margin) {
                    Ok(d) => next[k] = d,
                    Err(e) => last_err = Some(e),
                }
            }
            let new_rates = [design_rate(&next[0])?, design_rate(&next[1])?];
            let moved = new_rates
                .iter()
                .zip(&rates)
                .any(|(a, b)| (a - b).abs() > config.rate_tol);
            pair = next;
            rates = new_rates;
            if !moved {
                break;
            }
        }
        if joint_trajectory(exit, &pair[0], &pair[1], config.max_iters).converged {
            return Ok(PairDesign {
                lambdas: pair,
                rates,
                rounds,
            });
        }
    }
    Err(last_err.unwrap_or(DesignError::NoConvergentDesign { user: User::One }))
}

/// EXIT model of one stage as seen by the design LP.
pub fn design_exit(
    c1: &UserConstellation,
    c2: &UserConstellation,
    noise_var: f64,
    order: LevelOrder,
    stage: usize,
    jm: JModel,
    config: &DesignConfig,
) -> Result<LevelExit, DesignError> {
    let mut ctx = LevelChannelContext::new(c1, c2, noise_var, order, stage)?;
    ctx.metric = config.sv_metric;
    Ok(LevelExit::new(jm, &ctx)?)
}

/// Tries equal check degrees for both users over `dc_range` and keeps the
/// best sum rate; ties go to the smaller degree.
pub fn select_dc(
    exit: &LevelExit,
    dc_range: std::ops::RangeInclusive<usize>,
    config: &DesignConfig,
) -> Result<(usize, PairDesign), DesignError> {
    let mut best: Option<(usize, PairDesign)> = None;
    let mut failures = Vec::new();
    for dc in dc_range {
        match alternating_design(exit, [dc, dc], config, None) {
            Ok(d) => {
                if best
                    .as_ref()
                    .is_none_or(|(_, b)| d.sum_rate() > b.sum_rate() + 1e-12)
                {
                    best = Some((dc, d));
                }
            }
            Err(e) => failures.push(format!("d_c = {dc}: {e}")),
        }
    }
    best.ok_or_else(|| DesignError::AllCandidatesFailed(failures.join("; ")))
}

/// JSON record of one user's code at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDesign {
    pub user: usize,
    pub level: usize,
    pub dsnr_db: f64,
    pub constellation: String,
    pub d_c: usize,
    pub lambda: BTreeMap<usize, f64>,
    pub design_rate: f64,
}

impl LevelDesign {
    pub fn new(
        user: usize,
        level: usize,
        dsnr_db: f64,
        constellation: &str,
        dd: &DegreeDistribution,
    ) -> Result<Self, DesignError> {
        Ok(LevelDesign {
            user,
            level,
            dsnr_db,
            constellation: constellation.to_string(),
            d_c: dd.dc(),
            lambda: dd.lambda().clone(),
            design_rate: design_rate(dd)?,
        })
    }

    pub fn distribution(&self) -> Result<DegreeDistribution, DesignError> {
        DegreeDistribution::new(self.lambda.clone(), self.d_c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{named_pair, per_level_capacities, NamedConstellation};
    use crate::snr::noise_variance;

    fn mc_exit(snr: f64, stage: usize) -> LevelExit {
        let (a, b) = named_pair(NamedConstellation::Mc);
        let ctx = LevelChannelContext::natural(&a, &b, noise_variance(snr), stage).unwrap();
        LevelExit::new(JModel::Exact, &ctx).unwrap()
    }

    #[test]
    fn node_perspective_small_cases() {
        let dd = DegreeDistribution::regular(2, 4).unwrap();
        assert_eq!(node_perspective(&dd), BTreeMap::from([(2, 1.0)]));
        let dd = DegreeDistribution::new(BTreeMap::from([(2, 0.5), (3, 0.5)]), 4).unwrap();
        let l = node_perspective(&dd);
        assert!((l[&2] - 0.6).abs() < 1e-15);
        assert!((l[&3] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rates() {
        let dd = DegreeDistribution::regular(2, 20).unwrap();
        assert!((design_rate(&dd).unwrap() - 0.9).abs() < 1e-12);
        let dd = DegreeDistribution::regular(2, 2).unwrap();
        assert!(matches!(
            design_rate(&dd),
            Err(DesignError::NonPositiveRate(_))
        ));
    }

    #[test]
    fn validation() {
        assert!(DegreeDistribution::new(BTreeMap::from([(1, 1.0)]), 4).is_err());
        assert!(DegreeDistribution::new(BTreeMap::from([(2, 0.7)]), 4).is_err());
        assert!(DegreeDistribution::new(BTreeMap::from([(2, 1.2), (3, -0.2)]), 4).is_err());
        assert!(DegreeDistribution::regular(3, 1).is_err());
        let dd = DegreeDistribution::normalized(
            &[(2, 0.3609), (3, 0.4311), (34, 0.1771), (35, 0.0309)],
            6,
        )
        .unwrap();
        assert!((dd.lambda().values().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_shape() {
        let dd = DegreeDistribution::new(BTreeMap::from([(2, 0.25), (7, 0.75)]), 5).unwrap();
        let s = serde_json::to_string(&dd).unwrap();
        assert_eq!(s, r#"{"lambda":{"2":0.25,"7":0.75},"dc":5}"#);
        let back: DegreeDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, dd);
        assert!(
            serde_json::from_str::<DegreeDistribution>(r#"{"lambda":{"2":0.5},"dc":5}"#).is_err()
        );
    }

    #[test]
    fn silent_design_converges_and_is_below_capacity() {
        let exit = mc_exit(10.0, 0);
        let cfg = DesignConfig::default();
        let dummy = DegreeDistribution::regular(2, 2).unwrap();
        let ctx = DesignContext {
            exit: &exit,
            target: User::One,
            partner: &dummy,
            dc: 6,
            config: &cfg,
        };
        let d = optimize_lambda(&ctx, SvAssumption::Silent, None).unwrap();
        let r = design_rate(&d).unwrap();
        // Bounded by the interference-as-noise information of the level.
        assert!(r > 0.3 && r < exit.sv(User::One, 0.0), "{r}");
    }

    #[test]
    fn hopeless_channel_is_infeasible_or_tiny() {
        let exit = mc_exit(-20.0, 0);
        let cfg = DesignConfig::default();
        let dummy = DegreeDistribution::regular(2, 2).unwrap();
        let ctx = DesignContext {
            exit: &exit,
            target: User::One,
            partner: &dummy,
            dc: 6,
            config: &cfg,
        };
        match optimize_lambda(&ctx, SvAssumption::Silent, None) {
            Err(DesignError::Infeasible { binding }) => assert!(!binding.is_empty()),
            Err(e) => panic!("unexpected {e}"),
            Ok(d) => assert!(design_rate(&d).map_or(true, |r| r < 0.05)),
        }
    }

    #[test]
    fn symmetric_channel_gives_symmetric_pair_below_capacity() {
        let (a, b) = named_pair(NamedConstellation::Mc);
        let cfg = DesignConfig::default();
        let nv = noise_variance(18.0);
        let exit = design_exit(&a, &b, nv, LevelOrder::natural(2), 1, JModel::Exact, &cfg).unwrap();
        let d = alternating_design(&exit, [10, 10], &cfg, None).unwrap();
        assert_eq!(d.lambdas[0], d.lambdas[1]);
        let cap = per_level_capacities(&a, &b, nv, &LevelOrder::natural(2)).unwrap()[1];
        assert!(d.sum_rate() < cap, "{} vs {cap}", d.sum_rate());
        assert!(d.sum_rate() > 0.8 * cap);
        assert!(joint_trajectory(&exit, &d.lambdas[0], &d.lambdas[1], cfg.max_iters).converged);
    }

    #[test]
    fn config_json_defaults_metric() {
        let mut v = serde_json::to_value(DesignConfig::default()).unwrap();
        v.as_object_mut().unwrap().remove("sv_metric");
        let c: DesignConfig = serde_json::from_value(v).unwrap();
        assert_eq!(c.sv_metric, SvMetric::Exact);
    }

    #[test]
    fn config_validation() {
        let c = DesignConfig {
            delta: 0.2,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = DesignConfig {
            v_max: 2,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
