//! EXIT analysis of one bit-level of the joint two-user decoder.
//!
//! Messages are tracked by their mutual information with the code bits
//! under the Gaussian approximation. Four quantities per user:
//! check-to-variable `I_CV`, variable-to-check `I_VC`, variable-to-state
//! `I_VS` and state-to-variable `I_SV`. The state node couples the users:
//! the information it sends to one user depends on the channel and on the
//! other user's `I_VS`.

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::Serialize;

use crate::codedesign::{node_perspective, DegreeDistribution};
use crate::constellation::{
    decompose_levels, ConstellationError, LevelDecomposition, LevelOrder, UserConstellation,
};
use crate::numerics::quadrature::GaussRule;
use crate::numerics::{JModel, NumericsError};

/// Both users' `I_VC` must reach this for a trajectory to count as converged.
pub const CONVERGENCE_LEVEL: f64 = 1.0 - 1e-4;

/// Default iteration budget of [`joint_trajectory`].
pub const DEFAULT_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum User {
    One,
    Two,
}

impl User {
    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }

    pub const BOTH: [User; 2] = [User::One, User::Two];
}

/// `Σ_j λ_j J(√((j−1) J⁻¹(I_CV)² + J⁻¹(I_SV)²))`.
pub fn exit_vc(jm: JModel, lambda: &DegreeDistribution, i_cv: f64, i_sv: f64) -> f64 {
    let scv = jm.j_inv(i_cv);
    let ssv = jm.j_inv(i_sv);
    lambda
        .iter()
        .map(|(j, v)| v * jm.j(((j - 1) as f64 * scv * scv + ssv * ssv).sqrt()))
        .sum()
}

/// Single-degree term of [`exit_vc`], the LP coefficient of `λ_j`.
pub fn exit_vc_degree(jm: JModel, j: usize, i_cv: f64, i_sv: f64) -> f64 {
    let scv = jm.j_inv(i_cv);
    let ssv = jm.j_inv(i_sv);
    jm.j(((j - 1) as f64 * scv * scv + ssv * ssv).sqrt())
}

/// `Σ_j L_j J(√j J⁻¹(I_CV))` with node-perspective fractions `L_j`.
pub fn exit_vs(jm: JModel, lambda: &DegreeDistribution, i_cv: f64) -> f64 {
    let s = jm.j_inv(i_cv);
    node_perspective(lambda)
        .into_iter()
        .map(|(j, l)| l * jm.j((j as f64).sqrt() * s))
        .sum()
}

/// `1 − J(√(d_c − 1) J⁻¹(1 − I_VC))`.
pub fn exit_cv(jm: JModel, dc: usize, i_vc: f64) -> f64 {
    1.0 - jm.j(((dc - 1) as f64).sqrt() * jm.j_inv(1.0 - i_vc))
}

/// Mean `m` of the consistent Gaussian state input implied by `I_VS`.
pub fn coupling_mean(jm: JModel, i_vs: f64) -> f64 {
    let s = jm.j_inv(i_vs);
    0.5 * s * s
}

/// Nodes per Gaussian component for the two-dimensional `F` integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FQuadrature {
    pub y_nodes: usize,
    pub vs_nodes: usize,
}

impl Default for FQuadrature {
    fn default() -> Self {
        FQuadrature {
            y_nodes: 64,
            vs_nodes: 48,
        }
    }
}

/// How the state node's output is mapped to mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvMetric {
    /// `½J(√(2F₀₀)) + ½J(√(2F₀₁))`: the mean of the output LLR read through
    /// the J-function, as if the LLR were consistent Gaussian.
    #[default]
    GaussianMean,
    /// `1 − E[log₂(1 + e^{−f})]` of the actual output LLR.
    Exact,
}

/// Channel seen by one stage of successive decoding.
///
/// The bits of earlier stages are known; the bits of later stages are
/// unknown interference.
#[derive(Debug, Clone)]
pub struct LevelChannelContext {
    pub decompositions: [LevelDecomposition; 2],
    pub noise_var: f64,
    pub order: LevelOrder,
    pub stage: usize,
    pub quadrature: FQuadrature,
    pub metric: SvMetric,
}

/// Received means for one realization of the earlier-stage bits, split by
/// the target user's bit `a` and the other user's bit `b`: `means[a][b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub means: [[Vec<f64>; 2]; 2],
}

impl LevelChannelContext {
    pub fn new(
        c1: &UserConstellation,
        c2: &UserConstellation,
        noise_var: f64,
        order: LevelOrder,
        stage: usize,
    ) -> Result<Self, ConstellationError> {
        if c1.levels() != c2.levels() {
            return Err(ConstellationError::LevelMismatch(c1.levels(), c2.levels()));
        }
        order.validate(c1.levels())?;
        if stage >= c1.levels() {
            return Err(ConstellationError::InvalidOrder(format!(
                "stage {stage} out of range for {} levels",
                c1.levels()
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(NumericsError::Domain(format!(
                "noise variance must be positive, got {noise_var}"
            ))
            .into());
        }
        Ok(LevelChannelContext {
            decompositions: [decompose_levels(c1)?, decompose_levels(c2)?],
            noise_var,
            order,
            stage,
            quadrature: FQuadrature::default(),
            metric: SvMetric::default(),
        })
    }

    /// Natural order, stage `level`.
    pub fn natural(
        c1: &UserConstellation,
        c2: &UserConstellation,
        noise_var: f64,
        level: usize,
    ) -> Result<Self, ConstellationError> {
        Self::new(c1, c2, noise_var, LevelOrder::natural(c1.levels()), level)
    }

    pub fn levels(&self) -> usize {
        self.decompositions[0].levels()
    }

    fn level_of(&self, user: User, stage: usize) -> usize {
        match user {
            User::One => self.order.user1[stage],
            User::Two => self.order.user2[stage],
        }
    }

    fn amp(&self, user: User, stage: usize) -> f64 {
        self.decompositions[user.index()].amplitudes()[self.level_of(user, stage)]
    }

    /// Level amplitude of `user` decoded at this stage.
    pub fn amplitude(&self, user: User) -> f64 {
        self.amp(user, self.stage)
    }

    /// All `4^stage` equiprobable realizations of earlier-stage bits, seen
    /// from `target`.
    pub fn realizations(&self, target: User) -> Vec<Realization> {
        let other = target.other();
        let earlier: Vec<f64> = (0..self.stage)
            .flat_map(|s| [self.amp(User::One, s), self.amp(User::Two, s)])
            .collect();
        let later: Vec<f64> = (self.stage + 1..self.levels())
            .flat_map(|s| [self.amp(User::One, s), self.amp(User::Two, s)])
            .collect();
        let signed_sum = |amps: &[f64], bits: usize| -> f64 {
            amps.iter()
                .enumerate()
                .map(|(j, &a)| if bits >> j & 1 == 0 { a } else { -a })
                .sum()
        };
        let interference: Vec<f64> = (0..1usize << later.len())
            .map(|bits| signed_sum(&later, bits))
            .collect();
        let (at, ao) = (self.amplitude(target), self.amplitude(other));
        (0..1usize << earlier.len())
            .map(|bits| {
                let base = signed_sum(&earlier, bits);
                let group = |a: usize, b: usize| -> Vec<f64> {
                    let x = base + if a == 0 { at } else { -at } + if b == 0 { ao } else { -ao };
                    interference.iter().map(|i| x + i).collect()
                };
                Realization {
                    means: [[group(0, 0), group(0, 1)], [group(1, 0), group(1, 1)]],
                }
            })
            .collect()
    }
}

fn hermite(n: usize) -> &'static GaussRule {
    static RULES: OnceLock<std::sync::Mutex<Vec<(usize, &'static GaussRule)>>> = OnceLock::new();
    let rules = RULES.get_or_init(Default::default);
    let mut guard = rules.lock().expect("rule cache poisoned");
    if let Some(&(_, r)) = guard.iter().find(|(k, _)| *k == n) {
        return r;
    }
    let r: &'static GaussRule = Box::leak(Box::new(GaussRule::hermite_normal(n)));
    guard.push((n, r));
    r
}

#[inline]
fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `ln Σ_μ exp(−(y−μ)²/2σ²)` without the common normalization.
#[inline]
fn log_sum(y: f64, means: &[f64], inv2v: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for &m in means {
        best = best.max(-(y - m) * (y - m) * inv2v);
    }
    let acc: f64 = means
        .iter()
        .map(|&m| (-(y - m) * (y - m) * inv2v - best).exp())
        .sum();
    best + acc.ln()
}

/// State-node output LLR toward the target user.
///
/// `ls[a][b]` are the channel log-likelihoods for target bit `a` and other
/// bit `b`; `vs` is the other user's LLR, positive favouring bit 0.
#[inline]
pub fn state_llr(ls: &[[f64; 2]; 2], vs: f64) -> f64 {
    if vs == f64::INFINITY {
        return ls[0][0] - ls[1][0];
    }
    if vs == f64::NEG_INFINITY {
        return ls[0][1] - ls[1][1];
    }
    logaddexp(vs + ls[0][0], ls[0][1]) - logaddexp(vs + ls[1][0], ls[1][1])
}

/// Channel log-likelihoods at `y`, weighted by the quadrature.
#[derive(Debug, Clone)]
struct YNode {
    weight: f64,
    ls: [[f64; 2]; 2],
}

/// Precomputed `y` nodes for `F_{0b}` of one realization.
#[derive(Debug, Clone)]
struct FTable {
    nodes: [Vec<YNode>; 2],
}

impl FTable {
    fn new(r: &Realization, noise_var: f64, rule: &GaussRule) -> Self {
        let sd = noise_var.sqrt();
        let inv2v = 0.5 / noise_var;
        let nodes = [0usize, 1].map(|b| {
            let comps = &r.means[0][b];
            let w0 = 1.0 / comps.len() as f64;
            comps
                .iter()
                .flat_map(|&mu| {
                    rule.nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(move |(&t, &w)| (mu + sd * t, w * w0))
                })
                .map(|(y, weight)| YNode {
                    weight,
                    ls: [
                        [
                            log_sum(y, &r.means[0][0], inv2v),
                            log_sum(y, &r.means[0][1], inv2v),
                        ],
                        [
                            log_sum(y, &r.means[1][0], inv2v),
                            log_sum(y, &r.means[1][1], inv2v),
                        ],
                    ],
                })
                .collect()
        });
        FTable { nodes }
    }

    /// `F_{0b}(m) = E[f(y, vs)]`, `y` from the `(0, b)` mixture and
    /// `vs ~ N(±m, 2m)`.
    fn f_mean(&self, b: usize, m: f64, vs_rule: &GaussRule) -> f64 {
        self.expect(b, m, vs_rule, |l| l)
    }

    /// `E[g(f(y, vs))]` under the `(0, b)` densities.
    fn expect<G: Fn(f64) -> f64>(&self, b: usize, m: f64, vs_rule: &GaussRule, g: G) -> f64 {
        let nodes = &self.nodes[b];
        if m <= 0.0 {
            return nodes
                .iter()
                .map(|n| n.weight * g(state_llr(&n.ls, 0.0)))
                .sum();
        }
        let mean = if b == 0 { m } else { -m };
        let sd = (2.0 * m).sqrt();
        let mut acc = 0.0;
        for n in nodes {
            let mut inner = 0.0;
            for (&t, &w) in vs_rule.nodes.iter().zip(&vs_rule.weights) {
                inner += w * g(state_llr(&n.ls, mean + sd * t));
            }
            acc += n.weight * inner;
        }
        acc
    }

    /// State-to-variable information of this realization.
    fn information(&self, jm: JModel, metric: SvMetric, m: f64, vs_rule: &GaussRule) -> f64 {
        match metric {
            SvMetric::GaussianMean => {
                sv_from_means(jm, self.f_mean(0, m, vs_rule), self.f_mean(1, m, vs_rule))
            }
            SvMetric::Exact => {
                // log2(1 + e^{-l}) written to avoid overflow
                let loss =
                    |l: f64| ((-l).max(0.0) + (-l.abs()).exp().ln_1p()) / std::f64::consts::LN_2;
                1.0 - 0.5 * (self.expect(0, m, vs_rule, loss) + self.expect(1, m, vs_rule, loss))
            }
        }
    }
}

/// Per-realization `F_{0b}(m)` for the messages toward `target`.
pub fn f_means_per_realization(
    ctx: &LevelChannelContext,
    target: User,
    b_other: u8,
    m: f64,
) -> Result<Vec<f64>, NumericsError> {
    if !(m >= 0.0) {
        return Err(NumericsError::Domain(format!(
            "coupling mean must be >= 0, got {m}"
        )));
    }
    let yr = hermite(ctx.quadrature.y_nodes);
    let vr = hermite(ctx.quadrature.vs_nodes);
    Ok(ctx
        .realizations(target)
        .iter()
        .map(|r| FTable::new(r, ctx.noise_var, yr).f_mean(b_other as usize, m, vr))
        .collect())
}

/// `F_{0b}(m)` averaged over the earlier-stage realizations.
pub fn f_means(
    ctx: &LevelChannelContext,
    target: User,
    b_other: u8,
    m: f64,
) -> Result<f64, NumericsError> {
    let v = f_means_per_realization(ctx, target, b_other, m)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// The state-to-variable information for one realization's two means.
fn sv_from_means(jm: JModel, f00: f64, f01: f64) -> f64 {
    0.5 * jm.j((2.0 * f00.max(0.0)).sqrt()) + 0.5 * jm.j((2.0 * f01.max(0.0)).sqrt())
}

/// `I_SV` toward `target`, averaged over realizations. With the default
/// metric this is `½J(√(2F₀₀(m))) + ½J(√(2F₀₁(m)))`.
pub fn exit_sv(
    jm: JModel,
    ctx: &LevelChannelContext,
    target: User,
    m: f64,
) -> Result<f64, NumericsError> {
    if !(m >= 0.0) {
        return Err(NumericsError::Domain(format!(
            "coupling mean must be >= 0, got {m}"
        )));
    }
    let yr = hermite(ctx.quadrature.y_nodes);
    let vr = hermite(ctx.quadrature.vs_nodes);
    let r = ctx.realizations(target);
    Ok(r.iter()
        .map(|r| FTable::new(r, ctx.noise_var, yr).information(jm, ctx.metric, m, vr))
        .sum::<f64>()
        / r.len() as f64)
}

/// `I_SV` toward one user tabulated against the other user's `I_VS`.
#[derive(Debug, Clone)]
pub struct SvProfile {
    values: Vec<f64>,
}

impl SvProfile {
    pub const DEFAULT_POINTS: usize = 513;

    pub fn build(
        jm: JModel,
        ctx: &LevelChannelContext,
        target: User,
    ) -> Result<Self, NumericsError> {
        Self::with_points(jm, ctx, target, Self::DEFAULT_POINTS)
    }

    pub fn with_points(
        jm: JModel,
        ctx: &LevelChannelContext,
        target: User,
        points: usize,
    ) -> Result<Self, NumericsError> {
        let points = points.max(2);
        let yr = hermite(ctx.quadrature.y_nodes);
        let vr = hermite(ctx.quadrature.vs_nodes);
        let tables: Vec<FTable> = ctx
            .realizations(target)
            .iter()
            .map(|r| FTable::new(r, ctx.noise_var, yr))
            .collect();
        let values = (0..points)
            .map(|k| {
                let u = k as f64 / (points - 1) as f64;
                let m = coupling_mean(jm, u);
                tables
                    .iter()
                    .map(|t| t.information(jm, ctx.metric, m, vr))
                    .sum::<f64>()
                    / tables.len() as f64
            })
            .collect();
        Ok(SvProfile { values })
    }

    /// Linear interpolation in the other user's `I_VS`.
    pub fn eval(&self, i_vs_other: f64) -> f64 {
        let n = self.values.len() - 1;
        let x = i_vs_other.clamp(0.0, 1.0) * n as f64;
        let k = (x as usize).min(n - 1);
        let t = x - k as f64;
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Both users' state-node transfer curves for one stage.
#[derive(Debug, Clone)]
pub struct LevelExit {
    pub jm: JModel,
    pub profiles: [SvProfile; 2],
}

impl LevelExit {
    pub fn new(jm: JModel, ctx: &LevelChannelContext) -> Result<Self, NumericsError> {
        Ok(LevelExit {
            jm,
            profiles: [
                SvProfile::build(jm, ctx, User::One)?,
                SvProfile::build(jm, ctx, User::Two)?,
            ],
        })
    }

    /// `I_SV` toward `target` when the other user sends `I_VS = i_vs_other`.
    pub fn sv(&self, target: User, i_vs_other: f64) -> f64 {
        self.profiles[target.index()].eval(i_vs_other)
    }
}

/// The four tracked informations of one user.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ExitState {
    pub i_cv: f64,
    pub i_vc: f64,
    pub i_vs: f64,
    pub i_sv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub converged: bool,
    /// `trace[t][k]` is user `k`'s state after iteration `t`; entry 0 is the
    /// all-zero start.
    pub trace: Vec<[ExitState; 2]>,
}

impl Trajectory {
    pub fn last(&self) -> [ExitState; 2] {
        *self.trace.last().expect("trace holds the start state")
    }

    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }

    /// Rows `iteration,user,I_CV,I_VC,I_VS,I_SV`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,user,I_CV,I_VC,I_VS,I_SV\n");
        for (t, st) in self.trace.iter().enumerate() {
            for (k, e) in st.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{t},{},{:.12},{:.12},{:.12},{:.12}",
                    k + 1,
                    e.i_cv,
                    e.i_vc,
                    e.i_vs,
                    e.i_sv
                );
            }
        }
        s
    }
}

/// One Jacobi step: both users update from the same previous state.
pub fn exit_step(
    exit: &LevelExit,
    dds: [&DegreeDistribution; 2],
    prev: &[ExitState; 2],
) -> [ExitState; 2] {
    let jm = exit.jm;
    [User::One, User::Two].map(|u| {
        let k = u.index();
        let o = u.other().index();
        let i_sv = exit.sv(u, prev[o].i_vs);
        let i_vc = exit_vc(jm, dds[k], prev[k].i_cv, i_sv);
        let i_cv = exit_cv(jm, dds[k].dc(), i_vc);
        let i_vs = exit_vs(jm, dds[k], i_cv);
        ExitState {
            i_cv,
            i_vc,
            i_vs,
            i_sv,
        }
    })
}

/// Iterates the coupled recursion from zero information.
///
/// Stops when both users' `I_VC` reach [`CONVERGENCE_LEVEL`], when no
/// quantity moves by more than 1e-12, or after `max_iters` steps.
pub fn joint_trajectory(
    exit: &LevelExit,
    lambda1: &DegreeDistribution,
    lambda2: &DegreeDistribution,
    max_iters: usize,
) -> Trajectory {
    let mut trace = vec![[ExitState::default(); 2]];
    let mut converged = false;
    for _ in 0..max_iters {
        let prev = *trace.last().expect("nonempty");
        let next = exit_step(exit, [lambda1, lambda2], &prev);
        trace.push(next);
        if next.iter().all(|s| s.i_vc >= CONVERGENCE_LEVEL) {
            converged = true;
            break;
        }
        let moved = prev.iter().zip(&next).any(|(a, b)| {
            (b.i_cv - a.i_cv).abs() > 1e-12
                || (b.i_vc - a.i_vc).abs() > 1e-12
                || (b.i_vs - a.i_vs).abs() > 1e-12
                || (b.i_sv - a.i_sv).abs() > 1e-12
        });
        if !moved {
            break;
        }
    }
    Trajectory { converged, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{named_pair, NamedConstellation};
    use crate::numerics::jfunc::{j, j_inv};
    use crate::snr::noise_variance;
    use std::collections::BTreeMap;

    fn mc_ctx(snr: f64, stage: usize) -> LevelChannelContext {
        let (a, b) = named_pair(NamedConstellation::Mc);
        LevelChannelContext::natural(&a, &b, noise_variance(snr), stage).unwrap()
    }

    #[test]
    fn transfer_function_edge_cases() {
        let jm = JModel::Exact;
        let x = DegreeDistribution::regular(2, 6).unwrap();
        assert_eq!(exit_vc(jm, &x, 0.0, 0.0), 0.0);
        assert!((exit_vc(jm, &x, 0.0, 0.37) - 0.37).abs() < 1e-12);
        assert_eq!(exit_vs(jm, &x, 0.0), 0.0);
        assert!((exit_vs(jm, &x, 0.6) - j(2f64.sqrt() * j_inv(0.6))).abs() < 1e-15);
        assert!((exit_cv(jm, 6, 1.0) - 1.0).abs() < 1e-12);
        for i in [0.1, 0.5, 0.93] {
            assert!((exit_cv(jm, 2, i) - i).abs() < 1e-12);
        }
        let mix = DegreeDistribution::new(BTreeMap::from([(2, 0.5), (3, 0.5)]), 6).unwrap();
        let direct = 0.5 * j((j_inv(0.5).powi(2) + j_inv(0.3).powi(2)).sqrt())
            + 0.5 * j((2.0 * j_inv(0.5).powi(2) + j_inv(0.3).powi(2)).sqrt());
        assert!((exit_vc(jm, &mix, 0.5, 0.3) - direct).abs() < 1e-12);
    }

    #[test]
    fn realizations_cover_the_sum_constellation() {
        let ctx = mc_ctx(10.0, 0);
        let r = ctx.realizations(User::One);
        assert_eq!(r.len(), 1);
        let mut all: Vec<f64> = r[0].means.iter().flatten().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all.len(), 16);
        let ctx = mc_ctx(10.0, 1);
        let r = ctx.realizations(User::Two);
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|x| x.means[0][0].len() == 1));
    }

    #[test]
    fn zero_coupling_ignores_other_bit() {
        let ctx = mc_ctx(10.0, 0);
        let a = f_means(&ctx, User::One, 0, 0.0).unwrap();
        let b = f_means(&ctx, User::One, 1, 0.0).unwrap();
        assert!(a > 0.0);
        // Different y mixtures, but the same marginal: the own-bit LLR
        // averaged over the other bit is what matters at m = 0.
        let sv = exit_sv(JModel::Exact, &ctx, User::One, 0.0).unwrap();
        assert!(sv > 0.0 && sv < 1.0, "{a} {b} {sv}");
    }

    #[test]
    fn symmetric_pair_gives_symmetric_state_node() {
        let ctx = mc_ctx(10.0, 0);
        for m in [0.0, 0.7, 3.0] {
            let a = exit_sv(JModel::Exact, &ctx, User::One, m).unwrap();
            let b = exit_sv(JModel::Exact, &ctx, User::Two, m).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn state_node_is_monotone_in_coupling() {
        let ctx = mc_ctx(10.0, 0);
        let mut prev = 0.0;
        for m in [0.0, 0.1, 0.5, 1.0, 4.0, 20.0, 1e3] {
            let v = exit_sv(JModel::Exact, &ctx, User::One, m).unwrap();
            assert!(v >= prev - 1e-9, "m={m}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let mut ctx = mc_ctx(18.0, 0);
        let coarse = f_means(&ctx, User::One, 1, 2.0).unwrap();
        ctx.quadrature = FQuadrature {
            y_nodes: 128,
            vs_nodes: 96,
        };
        let fine = f_means(&ctx, User::One, 1, 2.0).unwrap();
        assert!(
            (coarse - fine).abs() < 1e-6 * fine.abs().max(1.0),
            "{coarse} vs {fine}"
        );
    }

    #[test]
    fn rejects_negative_coupling() {
        let ctx = mc_ctx(10.0, 0);
        assert!(f_means(&ctx, User::One, 0, -1.0).is_err());
    }

    #[test]
    fn profile_matches_direct_evaluation() {
        let ctx = mc_ctx(10.0, 1);
        let p = SvProfile::with_points(JModel::Exact, &ctx, User::One, 65).unwrap();
        let u: f64 = 0.5;
        let direct = exit_sv(
            JModel::Exact,
            &ctx,
            User::One,
            coupling_mean(JModel::Exact, u),
        )
        .unwrap();
        assert!((p.eval(u) - direct).abs() < 1e-12);
    }

    #[test]
    fn trajectories_are_monotone_and_symmetric() {
        let ctx = mc_ctx(10.0, 0);
        let exit = LevelExit::new(JModel::Exact, &ctx).unwrap();
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let t = joint_trajectory(&exit, &dd, &dd, 200);
        for w in t.trace.windows(2) {
            for k in 0..2 {
                assert!(w[1][k].i_vc >= w[0][k].i_vc - 1e-12);
                assert!(w[1][k].i_vs >= w[0][k].i_vs - 1e-12);
            }
            assert!((w[1][0].i_vc - w[1][1].i_vc).abs() < 1e-9);
        }
        let csv = t.to_csv();
        assert!(csv.starts_with("iteration,user,I_CV,I_VC,I_VS,I_SV\n0,1,"));
        assert_eq!(csv.lines().count(), 1 + 2 * t.trace.len());
    }
}
