//! User constellations, their multilevel decomposition, the received sum
//! constellation and the information rates that follow from them.
//!
//! A user constellation with `L` levels is the set of `2^L` sums
//! `Σ ±a_i` of positive level amplitudes. Bit 0 on level `i` selects `+a_i`,
//! bit 1 selects `−a_i`. Levels are indexed from the largest amplitude.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::mixture::mixture_entropy_fast;
use crate::numerics::{gaussian_entropy_bits, mixture_entropy, GaussianMixture, NumericsError};

/// Slack on the unit average-power constraint. The printed constellations
/// are rounded to three decimals and overshoot unit power by up to 6e-4.
pub const POWER_TOLERANCE: f64 = 1e-3;

/// Default merge distance for coinciding sum points.
pub const DEFAULT_COLLISION_TOL: f64 = 1e-4;

const SYMMETRY_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConstellationError {
    #[error("invalid constellation: {0}")]
    Invalid(String),
    #[error("constellation cannot be split into binary levels: {0}")]
    NotDecomposable(String),
    #[error("unknown constellation name {0:?} (expected MC, SP or OPT)")]
    UnknownName(String),
    #[error("users have different numbers of levels ({0} and {1})")]
    LevelMismatch(usize, usize),
    #[error("invalid level order: {0}")]
    InvalidOrder(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("constellation optimizer did not converge; best capacity {capacity:.6}")]
    NotConverged {
        best: Box<(UserConstellation, UserConstellation)>,
        capacity: f64,
    },
}

/// `2^L` strictly increasing, zero-symmetric points with average power at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct UserConstellation {
    points: Vec<f64>,
    levels: usize,
}

impl UserConstellation {
    pub fn new(points: Vec<f64>) -> Result<Self, ConstellationError> {
        let n = points.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(ConstellationError::Invalid(format!(
                "need 2^L points with L >= 1, got {n}"
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(ConstellationError::Invalid("non-finite point".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConstellationError::Invalid(
                "points must be strictly increasing".into(),
            ));
        }
        for i in 0..n / 2 {
            if (points[i] + points[n - 1 - i]).abs() > SYMMETRY_TOL {
                return Err(ConstellationError::Invalid(format!(
                    "not symmetric about zero: {} vs {}",
                    points[i],
                    points[n - 1 - i]
                )));
            }
        }
        let c = UserConstellation {
            levels: n.trailing_zeros() as usize,
            points,
        };
        if c.power() > 1.0 + POWER_TOLERANCE {
            return Err(ConstellationError::Invalid(format!(
                "average power {} exceeds 1",
                c.power()
            )));
        }
        Ok(c)
    }

    /// Builds the constellation `{Σ ±a_i}` from level amplitudes.
    pub fn from_amplitudes(amplitudes: &[f64]) -> Result<Self, ConstellationError> {
        if amplitudes.is_empty() || amplitudes.iter().any(|&a| !(a > 0.0)) {
            return Err(ConstellationError::Invalid(
                "level amplitudes must be positive".into(),
            ));
        }
        Self::new(points_from_amplitudes(amplitudes))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Average power under uniform inputs.
    pub fn power(&self) -> f64 {
        self.points.iter().map(|p| p * p).sum::<f64>() / self.points.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ConstellationError> {
        Self::new(self.points.iter().map(|p| p * factor).collect())
    }
}

impl Serialize for UserConstellation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.points.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UserConstellation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let points = Vec::<f64>::deserialize(d)?;
        UserConstellation::new(points).map_err(serde::de::Error::custom)
    }
}

/// Sorted `{Σ ±a_i}`.
pub fn points_from_amplitudes(amplitudes: &[f64]) -> Vec<f64> {
    let mut pts = vec![0.0];
    for &a in amplitudes {
        pts = pts.iter().flat_map(|&p| [p - a, p + a]).collect();
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Per-level binary amplitude sets `{−a_i, +a_i}`, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDecomposition {
    amplitudes: Vec<f64>,
    /// Per-level rates in bits, once allocated.
    pub rates: Option<Vec<f64>>,
}

impl LevelDecomposition {
    pub fn levels(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// `(l_i, h_i) = (−a_i, a_i)`.
    pub fn level(&self, i: usize) -> (f64, f64) {
        (-self.amplitudes[i], self.amplitudes[i])
    }

    pub fn level_power(&self, i: usize) -> f64 {
        2.0 * self.amplitudes[i] * self.amplitudes[i]
    }

    /// Signal point for one bit per level; bit 0 maps to `+a_i`.
    #[inline]
    pub fn modulate(&self, bits: &[u8]) -> f64 {
        self.amplitudes
            .iter()
            .zip(bits)
            .map(|(&a, &b)| if b == 0 { a } else { -a })
            .sum()
    }

    pub fn points(&self) -> Vec<f64> {
        points_from_amplitudes(&self.amplitudes)
    }
}

/// Splits a symmetric constellation into binary levels.
///
/// The smallest amplitude is half the gap between the two largest points.
/// Peeling it off pairs every point `x` with `x − 2a`; the midpoints form a
/// constellation with one level fewer.
pub fn decompose_levels(c: &UserConstellation) -> Result<LevelDecomposition, ConstellationError> {
    let scale = c
        .points
        .iter()
        .fold(0.0_f64, |m, p| m.max(p.abs()))
        .max(1.0);
    let tol = 1e-7 * scale;
    let mut rest = c.points.clone();
    let mut amplitudes = Vec::with_capacity(c.levels);
    while rest.len() > 1 {
        let n = rest.len();
        let a = 0.5 * (rest[n - 1] - rest[n - 2]);
        if !(a > tol) {
            return Err(ConstellationError::NotDecomposable(
                "zero level amplitude".into(),
            ));
        }
        let mut pool = rest;
        let mut mids = Vec::with_capacity(n / 2);
        while let Some(top) = pool.pop() {
            let partner = top - 2.0 * a;
            let pos = pool
                .iter()
                .rposition(|&x| (x - partner).abs() <= tol)
                .ok_or_else(|| {
                    ConstellationError::NotDecomposable(format!("no partner for point {top}"))
                })?;
            pool.remove(pos);
            mids.push(top - a);
        }
        mids.reverse();
        amplitudes.push(a);
        rest = mids;
    }
    if rest[0].abs() > tol {
        return Err(ConstellationError::NotDecomposable("nonzero centre".into()));
    }
    amplitudes.sort_by(|x, y| y.total_cmp(x));
    let recon = points_from_amplitudes(&amplitudes);
    let worst = recon
        .iter()
        .zip(&c.points)
        .map(|(r, p)| (r - p).abs())
        .fold(0.0, f64::max);
    if worst > ROUND_TRIP_TOL.max(tol) {
        return Err(ConstellationError::NotDecomposable(format!(
            "re-summation misses points by {worst:e}"
        )));
    }
    Ok(LevelDecomposition {
        amplitudes,
        rates: None,
    })
}

/// Distinct received noiseless values with integer multiplicities out of `4^L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumConstellation {
    atoms: Vec<(f64, u64)>,
    total: u64,
    tol: f64,
}

impl SumConstellation {
    pub fn atoms(&self) -> &[(f64, u64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Common denominator of the atom weights.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn values(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.0).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|a| a.1 as f64 / self.total as f64)
            .collect()
    }

    pub fn mixture(&self, noise_var: f64) -> Result<GaussianMixture, NumericsError> {
        let t = self.total as f64;
        GaussianMixture::new(
            self.atoms.iter().map(|&(v, k)| (v, k as f64 / t)).collect(),
            noise_var,
        )
    }
}

/// All `4^L` pairwise sums with values closer than `tol` merged.
///
/// Clusters are grown along the sorted sums, so a chain of near neighbours
/// merges into one atom placed at the cluster mean.
pub fn sum_constellation(
    c1: &UserConstellation,
    c2: &UserConstellation,
    tol: f64,
) -> Result<SumConstellation, ConstellationError> {
    if c1.levels != c2.levels {
        return Err(ConstellationError::LevelMismatch(c1.levels, c2.levels));
    }
    let mut sums: Vec<f64> = c1
        .points
        .iter()
        .flat_map(|&a| c2.points.iter().map(move |&b| a + b))
        .collect();
    sums.sort_by(f64::total_cmp);
    let mut atoms: Vec<(f64, u64)> = Vec::new();
    let mut acc = 0.0;
    let mut last = f64::NEG_INFINITY;
    for &s in &sums {
        match atoms.last_mut() {
            Some((v, k)) if s - last <= tol => {
                acc += s;
                *k += 1;
                *v = acc / *k as f64;
            }
            _ => {
                acc = s;
                atoms.push((s, 1));
            }
        }
        last = s;
    }
    Ok(SumConstellation {
        atoms,
        total: sums.len() as u64,
        tol,
    })
}

/// `I(Y; X₁, X₂) = h(Y) − h(Z)` for uniform inputs, clamped at zero.
pub fn sum_capacity(sc: &SumConstellation, noise_var: f64) -> Result<f64, ConstellationError> {
    if !(noise_var > 0.0) {
        return Err(NumericsError::Domain(format!(
            "noise variance must be positive, got {noise_var}"
        ))
        .into());
    }
    let h = mixture_entropy(&sc.mixture(noise_var)?)?;
    Ok((h - gaussian_entropy_bits(noise_var)).max(0.0))
}

/// Sum capacity of a user pair with the default collision tolerance.
pub fn pair_capacity(
    c1: &UserConstellation,
    c2: &UserConstellation,
    noise_var: f64,
) -> Result<f64, ConstellationError> {
    sum_capacity(
        &sum_constellation(c1, c2, DEFAULT_COLLISION_TOL)?,
        noise_var,
    )
}

/// Which level of each user is decoded at each stage.
///
/// Stage `s` decodes level `user1[s]` of user 1 jointly with level
/// `user2[s]` of user 2. Levels are indexed as in [`LevelDecomposition`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelOrder {
    pub user1: Vec<usize>,
    pub user2: Vec<usize>,
}

impl LevelOrder {
    pub fn natural(levels: usize) -> Self {
        LevelOrder {
            user1: (0..levels).collect(),
            user2: (0..levels).collect(),
        }
    }

    pub fn reversed(levels: usize) -> Self {
        LevelOrder {
            user1: (0..levels).rev().collect(),
            user2: (0..levels).rev().collect(),
        }
    }

    pub fn new(user1: Vec<usize>, user2: Vec<usize>) -> Result<Self, ConstellationError> {
        let o = LevelOrder { user1, user2 };
        o.validate(o.user1.len())?;
        Ok(o)
    }

    pub fn stages(&self) -> usize {
        self.user1.len()
    }

    pub fn validate(&self, levels: usize) -> Result<(), ConstellationError> {
        for (name, perm) in [("user1", &self.user1), ("user2", &self.user2)] {
            let mut seen = vec![false; levels];
            if perm.len() != levels {
                return Err(ConstellationError::InvalidOrder(format!(
                    "{name} lists {} levels, expected {levels}",
                    perm.len()
                )));
            }
            for &l in perm {
                if l >= levels || std::mem::replace(&mut seen[l], true) {
                    return Err(ConstellationError::InvalidOrder(format!(
                        "{name} is not a permutation of 0..{levels}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Received noiseless values for every combination of the bits still
/// undecided after `stage` stages, grouped by the decided bits.
///
/// Returns one group of means per realization of the decided bits.
pub(crate) fn conditional_groups(
    d1: &LevelDecomposition,
    d2: &LevelDecomposition,
    order: &LevelOrder,
    decided: usize,
) -> Vec<Vec<f64>> {
    let l = d1.levels();
    let known: Vec<(usize, usize)> = (0..decided)
        .flat_map(|s| [(0, order.user1[s]), (1, order.user2[s])])
        .collect();
    let free: Vec<(usize, usize)> = (decided..l)
        .flat_map(|s| [(0, order.user1[s]), (1, order.user2[s])])
        .collect();
    let amp = |(u, lev): (usize, usize)| {
        if u == 0 {
            d1.amplitudes[lev]
        } else {
            d2.amplitudes[lev]
        }
    };
    (0..1usize << known.len())
        .map(|kb| {
            let base: f64 = known
                .iter()
                .enumerate()
                .map(|(j, &k)| if kb >> j & 1 == 0 { amp(k) } else { -amp(k) })
                .sum();
            (0..1usize << free.len())
                .map(|fb| {
                    base + free
                        .iter()
                        .enumerate()
                        .map(|(j, &k)| if fb >> j & 1 == 0 { amp(k) } else { -amp(k) })
                        .sum::<f64>()
                })
                .collect()
        })
        .collect()
}

/// `I(Y; U₁ₛ, U₂ₛ | earlier stages)` for every stage of `order`.
///
/// Each term is `h(Y | earlier) − h(Y | earlier, this stage)`, with the
/// conditional entropies averaged over the uniformly distributed
/// realizations of the conditioning bits.
pub fn per_level_capacities(
    c1: &UserConstellation,
    c2: &UserConstellation,
    noise_var: f64,
    order: &LevelOrder,
) -> Result<Vec<f64>, ConstellationError> {
    if c1.levels != c2.levels {
        return Err(ConstellationError::LevelMismatch(c1.levels, c2.levels));
    }
    if !(noise_var > 0.0) {
        return Err(NumericsError::Domain(format!(
            "noise variance must be positive, got {noise_var}"
        ))
        .into());
    }
    order.validate(c1.levels)?;
    let d1 = decompose_levels(c1)?;
    let d2 = decompose_levels(c2)?;
    let l = c1.levels;
    let hz = gaussian_entropy_bits(noise_var);
    let mut cond_h = Vec::with_capacity(l + 1);
    for s in 0..l {
        let groups = conditional_groups(&d1, &d2, order, s);
        let mut acc = 0.0;
        for g in &groups {
            acc += mixture_entropy(&GaussianMixture::uniform(g, noise_var)?)?;
        }
        cond_h.push(acc / groups.len() as f64);
    }
    cond_h.push(hz);
    Ok(cond_h.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect())
}

/// Constellations printed in the literature for `L = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NamedConstellation {
    /// Both users use the same unit-power 4-PAM; many sums coincide.
    Mc,
    /// Superposition: user 1 is a scaled-down copy nested between user 2's points.
    Sp,
    /// Numerically optimized pair.
    Opt,
}

impl FromStr for NamedConstellation {
    type Err = ConstellationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MC" => Ok(Self::Mc),
            "SP" => Ok(Self::Sp),
            "OPT" => Ok(Self::Opt),
            _ => Err(ConstellationError::UnknownName(s.to_string())),
        }
    }
}

impl fmt::Display for NamedConstellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mc => "MC",
            Self::Sp => "SP",
            Self::Opt => "OPT",
        })
    }
}

fn sym4(p: f64, q: f64) -> UserConstellation {
    UserConstellation::new(vec![-q, -p, p, q]).expect("tabulated constellation is valid")
}

/// Unit-power uniform 4-PAM, `{±1, ±3}/√5`.
fn pam4() -> UserConstellation {
    let a = 1.0 / 5f64.sqrt();
    sym4(a, 3.0 * a)
}

/// The tabulated pairs. MC and SP are built from exact 4-PAM (printed as
/// ±0.447, ±1.342, and a quarter of that for SP's first user); OPT is the
/// printed points verbatim.
pub fn named_pair(name: NamedConstellation) -> (UserConstellation, UserConstellation) {
    match name {
        NamedConstellation::Mc => (pam4(), pam4()),
        NamedConstellation::Sp => (
            pam4().scaled(0.25).expect("scaling down keeps power"),
            pam4(),
        ),
        NamedConstellation::Opt => (sym4(0.519, 1.316), sym4(0.150, 1.406)),
    }
}

pub fn named_constellation(
    name: &str,
) -> Result<(UserConstellation, UserConstellation), ConstellationError> {
    Ok(named_pair(name.parse()?))
}

/// JSON form `{"user1": [...], "user2": [...], "L": n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationPair {
    pub user1: UserConstellation,
    pub user2: UserConstellation,
    #[serde(rename = "L")]
    pub levels: usize,
}

impl ConstellationPair {
    pub fn new(
        user1: UserConstellation,
        user2: UserConstellation,
    ) -> Result<Self, ConstellationError> {
        if user1.levels != user2.levels {
            return Err(ConstellationError::LevelMismatch(
                user1.levels,
                user2.levels,
            ));
        }
        Ok(ConstellationPair {
            levels: user1.levels,
            user1,
            user2,
        })
    }

    /// Parses and checks that `L` agrees with the point counts.
    pub fn from_json(s: &str) -> Result<Self, ConstellationError> {
        let p: ConstellationPair =
            serde_json::from_str(s).map_err(|e| ConstellationError::Invalid(e.to_string()))?;
        if p.user1.levels != p.levels || p.user2.levels != p.levels {
            return Err(ConstellationError::Invalid(format!(
                "L = {} does not match {} and {} points",
                p.levels,
                p.user1.points.len(),
                p.user2.points.len()
            )));
        }
        Ok(p)
    }
}

/// Search settings for [`optimize_constellations`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Grid points per shape angle when seeding.
    pub grid: usize,
    /// Number of best grid points refined with the fast entropy.
    pub starts: usize,
    /// Number of refined candidates polished with the exact entropy.
    pub polish: usize,
    pub max_sweeps: usize,
    /// Sweeps stop once the capacity gain of a full sweep falls below this.
    pub tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid: 20,
            starts: 24,
            polish: 3,
            max_sweeps: 60,
            tol: 1e-9,
        }
    }
}

/// Free parameters of one user: a radius `ρ ≤ 1` (root power) and
/// `L − 1` hyperspherical angles giving the amplitude direction.
fn amplitudes_from(rho: f64, angles: &[f64]) -> Vec<f64> {
    let mut amps = Vec::with_capacity(angles.len() + 1);
    let mut r = rho;
    for &t in angles {
        amps.push(r * t.cos());
        r *= t.sin();
    }
    amps.push(r);
    amps
}

const ANGLE_EPS: f64 = 1e-4;

/// Parameter vector layout: `[ρ₁, angles₁…, ρ₂, angles₂…]`.
struct Search {
    l: usize,
    noise_var: f64,
}

impl Search {
    fn dim(&self) -> usize {
        2 * self.l
    }

    fn bounds(&self, k: usize) -> (f64, f64) {
        if k.is_multiple_of(self.l) {
            (0.05, 1.0)
        } else {
            (ANGLE_EPS, self.angle_max() - ANGLE_EPS)
        }
    }

    /// With two levels, angles past π/4 only swap the level amplitudes.
    fn angle_max(&self) -> f64 {
        if self.l == 2 {
            std::f64::consts::FRAC_PI_4
        } else {
            std::f64::consts::FRAC_PI_2
        }
    }

    fn amps(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let l = self.l;
        (
            amplitudes_from(x[0], &x[1..l]),
            amplitudes_from(x[l], &x[l + 1..2 * l]),
        )
    }

    fn mixture(&self, x: &[f64]) -> GaussianMixture {
        let (a1, a2) = self.amps(x);
        let p1 = points_from_amplitudes(&a1);
        let p2 = points_from_amplitudes(&a2);
        let sums: Vec<f64> = p1
            .iter()
            .flat_map(|&a| p2.iter().map(move |&b| a + b))
            .collect();
        GaussianMixture::uniform(&sums, self.noise_var).expect("finite means")
    }

    fn fast(&self, x: &[f64]) -> f64 {
        mixture_entropy_fast(&self.mixture(x))
    }

    fn exact(&self, x: &[f64]) -> f64 {
        mixture_entropy(&self.mixture(x)).unwrap_or_else(|_| self.fast(x))
    }

    fn pair(
        &self,
        x: &[f64],
    ) -> Result<(UserConstellation, UserConstellation), ConstellationError> {
        let (a1, a2) = self.amps(x);
        // Rounding can push the power a hair above one.
        let fit = |a: Vec<f64>| {
            let p: f64 = a.iter().map(|v| v * v).sum();
            let s = if p > 1.0 { 1.0 / p.sqrt() } else { 1.0 };
            a.into_iter().map(|v| v * s).collect::<Vec<_>>()
        };
        Ok((
            UserConstellation::from_amplitudes(&fit(a1))?,
            UserConstellation::from_amplitudes(&fit(a2))?,
        ))
    }

    fn eval(&self, x: &[f64], exact: bool) -> f64 {
        if exact {
            self.exact(x)
        } else {
            self.fast(x)
        }
    }

    /// Range of `t` keeping `x + t d` inside the box.
    fn feasible_steps(&self, x: &[f64], d: &[f64]) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..self.dim() {
            if d[k].abs() < 1e-15 {
                continue;
            }
            let (a, b) = self.bounds(k);
            let (t1, t2) = ((a - x[k]) / d[k], (b - x[k]) / d[k]);
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
        (lo.min(0.0), hi.max(0.0))
    }

    /// Golden-section maximization of `x + t d` over `t ∈ [lo, hi]`;
    /// moves `x` only on improvement.
    fn line_max(
        &self,
        x: &mut [f64],
        d: &[f64],
        (mut a, mut b): (f64, f64),
        best: f64,
        exact: bool,
    ) -> f64 {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let x0 = x.to_vec();
        let at = |x: &mut [f64], t: f64| {
            for k in 0..x.len() {
                x[k] = x0[k] + t * d[k];
            }
            self.eval(x, exact)
        };
        let width = b - a;
        let mut c = b - INV_PHI * (b - a);
        let mut e = a + INV_PHI * (b - a);
        let mut fc = at(x, c);
        let mut fe = at(x, e);
        while b - a > 1e-8 * width.max(1e-300) && b - a > 1e-10 {
            if fc >= fe {
                b = e;
                e = c;
                fe = fc;
                c = b - INV_PHI * (b - a);
                fc = at(x, c);
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + INV_PHI * (b - a);
                fe = at(x, e);
            }
        }
        let (t, f) = if fc >= fe { (c, fc) } else { (e, fe) };
        if f > best {
            at(x, t);
            f
        } else {
            x.copy_from_slice(&x0);
            best
        }
    }

    /// Coordinate ascent with Powell direction updates: after each sweep of
    /// the current directions the net displacement is searched and replaces
    /// the direction that gained most. Returns the final entropy and whether
    /// the sweep gain dropped below `tol`.
    fn refine(&self, mut x: Vec<f64>, cfg: &OptimizerConfig, exact: bool) -> (Vec<f64>, f64, bool) {
        let n = self.dim();
        let axes = |k: usize| {
            let mut d = vec![0.0; n];
            d[k] = 1.0;
            d
        };
        let mut dirs: Vec<Vec<f64>> = (0..n).map(axes).collect();
        let mut f = self.eval(&x, exact);
        for sweep in 0..cfg.max_sweeps {
            if sweep % (2 * n) == 0 {
                dirs = (0..n).map(axes).collect();
            }
            let start = x.clone();
            let before = f;
            let mut biggest = (0.0, 0);
            for (i, d) in dirs.iter().enumerate() {
                let prev = f;
                let range = self.feasible_steps(&x, d);
                f = self.line_max(&mut x, d, range, f, exact);
                if f - prev > biggest.0 {
                    biggest = (f - prev, i);
                }
            }
            let disp: Vec<f64> = x.iter().zip(&start).map(|(a, b)| a - b).collect();
            if disp.iter().any(|v| v.abs() > 1e-12) {
                let (lo, hi) = self.feasible_steps(&x, &disp);
                f = self.line_max(&mut x, &disp, (lo.max(-1.0), hi.min(2.0)), f, exact);
                dirs[biggest.1] = disp;
            }
            if f - before < cfg.tol {
                return (x, f, true);
            }
        }
        (x, f, false)
    }

    fn seeds(&self, cfg: &OptimizerConfig) -> Vec<Vec<f64>> {
        let l = self.l;
        let n = if l <= 2 { cfg.grid } else { cfg.grid.min(6) };
        let (lo, hi) = (ANGLE_EPS, self.angle_max() - ANGLE_EPS);
        let grid_angle = |i: usize| lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        let per_user = l - 1;
        let shapes = n.pow(per_user as u32);
        let shape = |mut idx: usize| -> Vec<f64> {
            (0..per_user)
                .map(|_| {
                    let a = grid_angle(idx % n);
                    idx /= n;
                    a
                })
                .collect()
        };
        // Swapping the users leaves the capacity unchanged, so only
        // unordered shape pairs are seeded.
        let mut seeds = Vec::with_capacity(shapes * (shapes + 1) / 2 + 1);
        for i in 0..shapes {
            for j in i..shapes {
                let mut x = vec![1.0; 2 * l];
                x[1..l].copy_from_slice(&shape(i));
                x[l + 1..].copy_from_slice(&shape(j));
                seeds.push(x);
            }
        }
        // Identical uniform PAM for both users keeps the result above that
        // baseline even when the grid misses its basin.
        let pam = pam_angles(l);
        let mut x = vec![1.0; 2 * l];
        x[1..l].copy_from_slice(&pam);
        x[l + 1..].copy_from_slice(&pam);
        seeds.push(x);
        seeds
    }
}

/// Hyperspherical angles of uniform `2^L`-PAM amplitudes `2^{L−1−i}`.
fn pam_angles(l: usize) -> Vec<f64> {
    let amps: Vec<f64> = (0..l).map(|i| (1u64 << (l - 1 - i)) as f64).collect();
    let mut angles = Vec::with_capacity(l - 1);
    let mut tail: f64 = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    for &a in &amps[..l - 1] {
        let t = (a / tail).clamp(-1.0, 1.0).acos();
        angles.push(t.clamp(ANGLE_EPS, std::f64::consts::FRAC_PI_2 - ANGLE_EPS));
        tail = (tail * tail - a * a).max(0.0).sqrt();
    }
    angles
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Maximizes the sum capacity over user pairs with uniform inputs, at most
/// `2^L` points per user and average power at most one per user.
pub fn optimize_constellations(
    noise_var: f64,
    levels: usize,
) -> Result<(UserConstellation, UserConstellation), ConstellationError> {
    optimize_constellations_with(noise_var, levels, &OptimizerConfig::default())
}

pub fn optimize_constellations_with(
    noise_var: f64,
    levels: usize,
    cfg: &OptimizerConfig,
) -> Result<(UserConstellation, UserConstellation), ConstellationError> {
    if levels == 0 {
        return Err(ConstellationError::Invalid("L must be at least 1".into()));
    }
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(NumericsError::Domain(format!(
            "noise variance must be positive, got {noise_var}"
        ))
        .into());
    }
    let search = Search {
        l: levels,
        noise_var,
    };
    let hz = gaussian_entropy_bits(noise_var);

    let mut scored: Vec<(f64, Vec<f64>)> = search
        .seeds(cfg)
        .into_par_iter()
        .map(|x| (search.fast(&x), x))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| lexicographic(&a.1, &b.1)));
    // The PAM seed is always refined alongside the best grid points.
    let pam = scored
        .iter()
        .position(|(_, x)| x[1..levels] == pam_angles(levels)[..])
        .map(|i| scored[i].1.clone());
    let mut starts: Vec<Vec<f64>> = scored
        .into_iter()
        .take(cfg.starts.max(1))
        .map(|s| s.1)
        .collect();
    if let Some(p) = pam {
        if !starts.contains(&p) {
            starts.push(p);
        }
    }

    // Cheap refinement of every start, then exact polishing of the best few.
    let mut rough: Vec<(Vec<f64>, f64, bool)> = starts
        .into_par_iter()
        .map(|x| search.refine(x, cfg, false))
        .collect();
    rough.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| lexicographic(&a.0, &b.0)));
    let refined: Vec<(Vec<f64>, f64, bool)> = rough
        .into_iter()
        .take(cfg.polish.max(1))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(x, _, _)| search.refine(x, cfg, true))
        .collect();
    let (x, h, converged) = refined
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lexicographic(&b.0, &a.0)))
        .expect("at least one start");
    let pair = search.pair(&x)?;
    // Label the users so that user 1 has the smaller largest point.
    let pair = if pair.0.points.last() > pair.1.points.last() {
        (pair.1, pair.0)
    } else {
        pair
    };
    if !converged {
        return Err(ConstellationError::NotConverged {
            best: Box::new(pair),
            capacity: (h - hz).max(0.0),
        });
    }
    Ok(pair)
}
