//! Joint belief propagation over the two users' Tanner graphs, coupled
//! through the MAC state node, with successive cancellation across levels.

use serde::Serialize;

use crate::exit::{state_llr, LevelChannelContext, User};
use crate::ldpc::{syndrome_ok, TannerGraph};

/// Message magnitude limit applied before the tanh rule.
pub const LLR_CLAMP: f64 = 30.0;

/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 200;

/// Received-point groups of one decoding stage.
///
/// For every realization of the earlier-stage bits of both users,
/// `groups[r][a][b]` lists the noiseless received values when user 1 sends
/// `a` and user 2 sends `b` at this stage; the entries range over the
/// equiprobable bits of later stages. Realization `r` packs the earlier
/// bits as `Σ bit(s, k) << (2s + k)` for stage `s` and user index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateNodeTable {
    stage: usize,
    noise_var: f64,
    groups: Vec<[[Vec<f64>; 2]; 2]>,
}

impl StateNodeTable {
    pub fn new(ctx: &LevelChannelContext) -> Self {
        let groups = ctx
            .realizations(User::One)
            .into_iter()
            .map(|r| r.means)
            .collect();
        StateNodeTable {
            stage: ctx.stage,
            noise_var: ctx.noise_var,
            groups,
        }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn realizations(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self, realization: usize) -> &[[Vec<f64>; 2]; 2] {
        &self.groups[realization]
    }

    /// `ls[a][b] = ln Σ exp(−(y−μ)²/2σ²)` over the group of `(a, b)`, with
    /// `a` user 1's bit and `b` user 2's.
    pub fn log_likelihoods(&self, realization: usize, y: f64) -> [[f64; 2]; 2] {
        let g = &self.groups[realization];
        let inv2v = 0.5 / self.noise_var;
        let ls = |means: &[f64]| {
            let best = means
                .iter()
                .map(|&m| -(y - m) * (y - m) * inv2v)
                .fold(f64::NEG_INFINITY, f64::max);
            best + means
                .iter()
                .map(|&m| (-(y - m) * (y - m) * inv2v - best).exp())
                .sum::<f64>()
                .ln()
        };
        [[ls(&g[0][0]), ls(&g[0][1])], [ls(&g[1][0]), ls(&g[1][1])]]
    }

    /// State-to-variable LLR toward `target` given the other user's
    /// variable-to-state LLR `vs_other` (may be infinite).
    pub fn state_update(&self, realization: usize, target: User, y: f64, vs_other: f64) -> f64 {
        let ls = self.log_likelihoods(realization, y);
        state_llr(&oriented(&ls, target), vs_other)
    }
}

fn oriented(ls: &[[f64; 2]; 2], target: User) -> [[f64; 2]; 2] {
    match target {
        User::One => *ls,
        User::Two => [[ls[0][0], ls[1][0]], [ls[0][1], ls[1][1]]],
    }
}

/// Edge numbering of a Tanner graph for message passing: edges are
/// check-major, and every variable knows its edge ids.
#[derive(Debug, Clone)]
pub struct DecoderGraph {
    graph: TannerGraph,
    check_start: Vec<usize>,
    edge_var: Vec<u32>,
    var_start: Vec<usize>,
    var_edges: Vec<u32>,
}

impl DecoderGraph {
    pub fn new(graph: TannerGraph) -> Self {
        let mut check_start = vec![0];
        let mut edge_var = Vec::with_capacity(graph.edges());
        for c in 0..graph.m() {
            edge_var.extend_from_slice(graph.check_neighbors(c));
            check_start.push(edge_var.len());
        }
        let mut var_start = vec![0usize; graph.n() + 1];
        for &v in &edge_var {
            var_start[v as usize + 1] += 1;
        }
        for i in 0..graph.n() {
            var_start[i + 1] += var_start[i];
        }
        let mut fill = var_start.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        DecoderGraph {
            graph,
            check_start,
            edge_var,
            var_start,
            var_edges,
        }
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    fn var_edges(&self, v: usize) -> &[u32] {
        &self.var_edges[self.var_start[v]..self.var_start[v + 1]]
    }
}

/// Outcome for one user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserDecision {
    pub bits: Vec<u8>,
    pub syndrome_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeResult {
    pub users: [UserDecision; 2],
    pub iterations: usize,
}

impl DecodeResult {
    pub fn success(&self) -> bool {
        self.users.iter().all(|u| u.syndrome_ok)
    }
}

/// Message state of one user's graph.
struct Messages {
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    vs: Vec<f64>,
    total: Vec<f64>,
}

impl Messages {
    fn new(g: &DecoderGraph) -> Self {
        let e = g.edge_var.len();
        Messages {
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            vs: vec![0.0; g.n()],
            total: vec![0.0; g.n()],
        }
    }

    fn variable_to_state(&mut self, g: &DecoderGraph) {
        for v in 0..g.n() {
            self.vs[v] = g.var_edges(v).iter().map(|&e| self.c2v[e as usize]).sum();
        }
    }

    fn variable_update(&mut self, g: &DecoderGraph, sv: &[f64]) {
        for v in 0..g.n() {
            let t = sv[v] + self.vs[v];
            self.total[v] = t;
            for &e in g.var_edges(v) {
                self.v2c[e as usize] = t - self.c2v[e as usize];
            }
        }
    }

    fn check_update(&mut self, g: &DecoderGraph, scratch: &mut Vec<f64>) {
        for c in 0..g.graph.m() {
            let (s, e) = (g.check_start[c], g.check_start[c + 1]);
            let d = e - s;
            scratch.clear();
            scratch.extend(
                self.v2c[s..e]
                    .iter()
                    .map(|&m| (0.5 * m.clamp(-LLR_CLAMP, LLR_CLAMP)).tanh()),
            );
            // prefix products in c2v, then multiply by suffix products
            let mut acc = 1.0;
            for i in 0..d {
                self.c2v[s + i] = acc;
                acc *= scratch[i];
            }
            acc = 1.0;
            for i in (0..d).rev() {
                let p = self.c2v[s + i] * acc;
                self.c2v[s + i] = 2.0 * p.atanh();
                acc *= scratch[i];
            }
        }
    }

    fn decisions(&self) -> Vec<u8> {
        self.total.iter().map(|&l| u8::from(l <= 0.0)).collect()
    }
}

/// Flooding joint BP for one stage.
///
/// `ls[t]` are the channel log-likelihoods of position `t` (see
/// [`StateNodeTable::log_likelihoods`]). Each iteration forms the
/// variable-to-state messages, the state-to-variable messages of both
/// users, the variable and then the check updates. Decoding stops once both
/// hard decisions satisfy their checks.
pub fn joint_bp_decode(
    ls: &[[[f64; 2]; 2]],
    graphs: [&DecoderGraph; 2],
    max_iter: usize,
) -> DecodeResult {
    let n = ls.len();
    assert!(
        graphs.iter().all(|g| g.n() == n),
        "graph length differs from the observation"
    );
    let mut msgs = [Messages::new(graphs[0]), Messages::new(graphs[1])];
    let mut sv = [vec![0.0; n], vec![0.0; n]];
    let mut scratch = Vec::new();
    let mut bits = [Vec::new(), Vec::new()];
    let mut ok = [false; 2];
    let mut iterations = 0;
    for it in 1..=max_iter.max(1) {
        iterations = it;
        for k in 0..2 {
            msgs[k].variable_to_state(graphs[k]);
        }
        for t in 0..n {
            sv[0][t] = state_llr(&ls[t], msgs[1].vs[t]);
            sv[1][t] = state_llr(&oriented(&ls[t], User::Two), msgs[0].vs[t]);
        }
        for k in 0..2 {
            msgs[k].variable_update(graphs[k], &sv[k]);
            bits[k] = msgs[k].decisions();
            ok[k] = syndrome_ok(graphs[k].graph(), &bits[k]);
        }
        if ok[0] && ok[1] {
            break;
        }
        for k in 0..2 {
            msgs[k].check_update(graphs[k], &mut scratch);
        }
    }
    let [b0, b1] = bits;
    DecodeResult {
        users: [
            UserDecision {
                bits: b0,
                syndrome_ok: ok[0],
            },
            UserDecision {
                bits: b1,
                syndrome_ok: ok[1],
            },
        ],
        iterations,
    }
}

/// Per-position log-likelihoods of one stage given the earlier-stage bits
/// `earlier[s][k]` (stage `s`, user index `k`).
pub fn stage_likelihoods(
    tbl: &StateNodeTable,
    y: &[f64],
    earlier: &[[&[u8]; 2]],
) -> Vec<[[f64; 2]; 2]> {
    y.iter()
        .enumerate()
        .map(|(t, &yt)| {
            let r = earlier
                .iter()
                .enumerate()
                .map(|(s, pair)| {
                    (usize::from(pair[0][t]) << (2 * s)) | (usize::from(pair[1][t]) << (2 * s + 1))
                })
                .sum();
            tbl.log_likelihoods(r, yt)
        })
        .collect()
}

/// Successive cancellation across stages.
///
/// Stage `s` is decoded jointly with its table conditioned on the hard
/// decisions of stages `0..s`; with `genie` the true code bits
/// (`genie[s][k]`) are used instead.
pub fn sic_decode(
    y: &[f64],
    stages: &[(StateNodeTable, [DecoderGraph; 2])],
    max_iter: usize,
    genie: Option<&[[Vec<u8>; 2]]>,
) -> Vec<DecodeResult> {
    let mut results: Vec<DecodeResult> = Vec::with_capacity(stages.len());
    for (s, (tbl, graphs)) in stages.iter().enumerate() {
        let earlier: Vec<[&[u8]; 2]> = (0..s)
            .map(|p| match genie {
                Some(g) => [g[p][0].as_slice(), g[p][1].as_slice()],
                None => [
                    results[p].users[0].bits.as_slice(),
                    results[p].users[1].bits.as_slice(),
                ],
            })
            .collect();
        let ls = stage_likelihoods(tbl, y, &earlier);
        results.push(joint_bp_decode(&ls, [&graphs[0], &graphs[1]], max_iter));
    }
    results
}
