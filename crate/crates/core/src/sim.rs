//! Monte-Carlo BER harness.
//!
//! Each frame draws fresh messages for every user and stage, encodes,
//! modulates through the level decompositions, adds noise and runs
//! successive joint decoding. Randomness comes from one ChaCha stream per
//! `(master seed, SNR index, frame index)`, so reports do not depend on the
//! number of worker threads.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codedesign::DegreeDistribution;
use crate::constellation::{
    decompose_levels, ConstellationError, LevelDecomposition, LevelOrder, UserConstellation,
};
use crate::decoder::{sic_decode, DecoderGraph, StateNodeTable, DEFAULT_MAX_ITER};
use crate::exit::LevelChannelContext;
use crate::ldpc::{peg_construct, quantize_degrees, EncoderState, LdpcError, TannerGraph};
use crate::snr::noise_variance;

/// Frames decoded per parallel batch. Fixed so the stopping point does not
/// depend on the thread count.
const BATCH: usize = 16;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Ldpc(#[from] LdpcError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One user's code at one decoding stage.
#[derive(Debug, Clone)]
pub struct LevelCode {
    pub graph: DecoderGraph,
    pub encoder: EncoderState,
}

impl LevelCode {
    pub fn new(graph: TannerGraph) -> Self {
        let encoder = EncoderState::new(&graph);
        LevelCode {
            graph: DecoderGraph::new(graph),
            encoder,
        }
    }

    /// Quantizes `dd` at blocklength `n` and builds the graph by PEG.
    pub fn construct(n: usize, dd: &DegreeDistribution, seed: u64) -> Result<Self, SimError> {
        let (var, chk) = quantize_degrees(n, dd)?;
        Ok(Self::new(peg_construct(&var, &chk, seed)?))
    }
}

/// Channel constellations plus the codes of both users.
///
/// `codes[k][s]` is user `k`'s code at decoding stage `s`; it is carried
/// on level `order[k][s]` of that user's constellation.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub constellations: [UserConstellation; 2],
    pub order: LevelOrder,
    pub codes: [Vec<LevelCode>; 2],
}

impl SimSetup {
    pub fn new(
        constellations: [UserConstellation; 2],
        order: LevelOrder,
        codes: [Vec<LevelCode>; 2],
    ) -> Result<Self, SimError> {
        let levels = constellations[0].levels();
        if constellations[1].levels() != levels {
            return Err(
                ConstellationError::LevelMismatch(levels, constellations[1].levels()).into(),
            );
        }
        order.validate(levels)?;
        if codes.iter().any(|c| c.len() != levels) {
            return Err(SimError::Config(format!("need {levels} codes per user")));
        }
        let n = codes[0][0].graph.n();
        if codes.iter().flatten().any(|c| c.graph.n() != n) {
            return Err(SimError::Config(
                "all codes must share one blocklength".into(),
            ));
        }
        Ok(SimSetup {
            constellations,
            order,
            codes,
        })
    }

    pub fn levels(&self) -> usize {
        self.constellations[0].levels()
    }

    pub fn n(&self) -> usize {
        self.codes[0][0].graph.n()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub snr_db: Vec<f64>,
    /// Frame budget per SNR point.
    pub frames: usize,
    /// Stop a point once this many frames were in error.
    pub frame_errors: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Condition later stages on the true instead of the decoded bits.
    pub genie: bool,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            snr_db: vec![10.0],
            frames: 1000,
            frame_errors: 100,
            max_iter: DEFAULT_MAX_ITER,
            seed: 1,
            genie: false,
            threads: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.snr_db.is_empty() {
            return Err(SimError::Config("snr_db must not be empty".into()));
        }
        if self.frames == 0 {
            return Err(SimError::Config("frames must be >= 1".into()));
        }
        if self.frame_errors == 0 {
            return Err(SimError::Config("frame_errors must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(SimError::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sum of the level signals of each user; code bit 0 maps to `+a_i`.
/// `words[k][s]` is user `k`'s codeword at stage `s`.
pub fn transmit(
    words: &[Vec<Vec<u8>>; 2],
    decomps: &[LevelDecomposition; 2],
    order: &LevelOrder,
) -> Result<[Vec<f64>; 2], SimError> {
    let levels = decomps[0].levels();
    let n = words[0].first().map_or(0, Vec::len);
    if words
        .iter()
        .any(|w| w.len() != levels || w.iter().any(|c| c.len() != n))
    {
        return Err(SimError::Config(format!(
            "expected {levels} codewords of length {n} per user"
        )));
    }
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for k in 0..2 {
        let perm = if k == 0 { &order.user1 } else { &order.user2 };
        for (s, word) in words[k].iter().enumerate() {
            let a = decomps[k].amplitudes()[perm[s]];
            for (x, &b) in out[k].iter_mut().zip(word) {
                *x += if b == 0 { a } else { -a };
            }
        }
    }
    Ok(out)
}

/// `y = x + z` with `z ~ N(0, noise_var)` drawn from `rng`.
pub fn awgn<R: Rng>(x: &[f64], noise_var: f64, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, noise_var.sqrt()).expect("noise variance is positive");
    x.iter().map(|&v| v + normal.sample(rng)).collect()
}

/// Random stream of one frame.
pub fn frame_rng(seed: u64, snr_index: usize, frame: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) | frame as u64);
    rng
}

/// Error counts of one user at one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub bit_errors: u64,
    pub bits: u64,
    pub frame_errors: u64,
    pub frames: u64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.bit_errors += o.bit_errors;
        self.bits += o.bits;
        self.frame_errors += o.frame_errors;
        self.frames += o.frames;
    }
}

/// Statistics of one user at one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    /// 1-based user index.
    pub user: usize,
    /// 1-based decoding stage.
    pub level: usize,
    #[serde(flatten)]
    pub counts: Counts,
    pub ber: f64,
    pub fer: f64,
    /// 95% Wilson interval of the BER.
    pub ber_ci: (f64, f64),
}

impl ComponentStats {
    fn new(user: usize, level: usize, counts: Counts) -> Self {
        ComponentStats {
            user,
            level,
            counts,
            ber: ratio(counts.bit_errors, counts.bits),
            fer: ratio(counts.frame_errors, counts.frames),
            ber_ci: wilson(counts.bit_errors, counts.bits),
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub snr_db: f64,
    pub frames: u64,
    /// Frames with at least one information-bit error anywhere.
    pub frame_errors: u64,
    pub components: Vec<ComponentStats>,
    /// Mean of the component BERs.
    pub avg_ber: f64,
}

impl PointReport {
    fn new(snr_db: f64, frames: u64, frame_errors: u64, components: Vec<ComponentStats>) -> Self {
        let avg_ber =
            components.iter().map(|c| c.ber).sum::<f64>() / components.len().max(1) as f64;
        PointReport {
            snr_db,
            frames,
            frame_errors,
            components,
            avg_ber,
        }
    }

    pub fn total_bit_errors(&self) -> u64 {
        self.components.iter().map(|c| c.counts.bit_errors).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub points: Vec<PointReport>,
    /// Wall-clock time; excluded from equality checks by callers that
    /// compare runs.
    pub runtime_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    snr_db: f64,
    user: String,
    level: String,
    ber: f64,
    fer: f64,
    frames: u64,
    bit_errors: u64,
    bits: u64,
    frame_errors: u64,
}

impl BerReport {
    /// CSV with one row per component and one `avg` row per SNR point.
    pub fn to_csv(&self) -> Result<String, SimError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            for c in &p.components {
                w.serialize(CsvRow {
                    snr_db: p.snr_db,
                    user: c.user.to_string(),
                    level: c.level.to_string(),
                    ber: c.ber,
                    fer: c.fer,
                    frames: c.counts.frames,
                    bit_errors: c.counts.bit_errors,
                    bits: c.counts.bits,
                    frame_errors: c.counts.frame_errors,
                })?;
            }
            w.serialize(CsvRow {
                snr_db: p.snr_db,
                user: "avg".into(),
                level: "avg".into(),
                ber: p.avg_ber,
                fer: ratio(p.frame_errors, p.frames),
                frames: p.frames,
                bit_errors: p.total_bit_errors(),
                bits: p.components.iter().map(|c| c.counts.bits).sum(),
                frame_errors: p.frame_errors,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| SimError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Inverse of [`BerReport::to_csv`]; the runtime is not stored.
    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let mut points: Vec<PointReport> = Vec::new();
        let mut comps = Vec::new();
        for row in csv::Reader::from_reader(text.as_bytes()).deserialize() {
            let row: CsvRow = row?;
            if row.user == "avg" {
                points.push(PointReport::new(
                    row.snr_db,
                    row.frames,
                    row.frame_errors,
                    std::mem::take(&mut comps),
                ));
                continue;
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| SimError::Config(format!("bad index {s}")))
            };
            comps.push(ComponentStats::new(
                parse(&row.user)?,
                parse(&row.level)?,
                Counts {
                    bit_errors: row.bit_errors,
                    bits: row.bits,
                    frame_errors: row.frame_errors,
                    frames: row.frames,
                },
            ));
        }
        Ok(BerReport {
            points,
            runtime_s: 0.0,
        })
    }
}

/// Per-frame outcome: counts for `[user][stage]`.
type FrameCounts = Vec<[Counts; 2]>;

fn simulate_frame(
    setup: &SimSetup,
    decomps: &[LevelDecomposition; 2],
    stages: &[(StateNodeTable, [DecoderGraph; 2])],
    noise_var: f64,
    cfg: &SimConfig,
    mut rng: ChaCha8Rng,
) -> FrameCounts {
    let levels = setup.levels();
    let mut msgs: [Vec<Vec<u8>>; 2] = [Vec::new(), Vec::new()];
    let mut words: [Vec<Vec<u8>>; 2] = [Vec::new(), Vec::new()];
    for k in 0..2 {
        for s in 0..levels {
            let enc = &setup.codes[k][s].encoder;
            let m: Vec<u8> = (0..enc.k()).map(|_| rng.random_range(0..2u8)).collect();
            words[k].push(enc.encode(&m).expect("message length matches"));
            msgs[k].push(m);
        }
    }
    let x = transmit(&words, decomps, &setup.order).expect("codeword shapes match");
    let sum: Vec<f64> = x[0].iter().zip(&x[1]).map(|(a, b)| a + b).collect();
    let y = awgn(&sum, noise_var, &mut rng);
    let genie: Option<Vec<[Vec<u8>; 2]>> = cfg.genie.then(|| {
        (0..levels)
            .map(|s| [words[0][s].clone(), words[1][s].clone()])
            .collect()
    });
    let results = sic_decode(&y, stages, cfg.max_iter, genie.as_deref());
    (0..levels)
        .map(|s| {
            [0, 1].map(|k| {
                let enc = &setup.codes[k][s].encoder;
                let decoded = enc.extract(&results[s].users[k].bits);
                let errs = decoded
                    .iter()
                    .zip(&msgs[k][s])
                    .filter(|(a, b)| a != b)
                    .count() as u64;
                Counts {
                    bit_errors: errs,
                    bits: enc.k() as u64,
                    frame_errors: u64::from(errs > 0),
                    frames: 1,
                }
            })
        })
        .collect()
}

fn run_point(
    setup: &SimSetup,
    cfg: &SimConfig,
    snr_index: usize,
    snr_db: f64,
) -> Result<PointReport, SimError> {
    let [c1, c2] = &setup.constellations;
    let noise_var = noise_variance(snr_db);
    let decomps = [decompose_levels(c1)?, decompose_levels(c2)?];
    let stages: Vec<(StateNodeTable, [DecoderGraph; 2])> = (0..setup.levels())
        .map(|s| {
            let ctx = LevelChannelContext::new(c1, c2, noise_var, setup.order.clone(), s)?;
            Ok((
                StateNodeTable::new(&ctx),
                [
                    setup.codes[0][s].graph.clone(),
                    setup.codes[1][s].graph.clone(),
                ],
            ))
        })
        .collect::<Result<_, ConstellationError>>()?;
    let levels = setup.levels();
    let mut totals = vec![[Counts::default(); 2]; levels];
    let (mut frames, mut frame_errors) = (0u64, 0u64);
    let mut next = 0usize;
    'outer: while next < cfg.frames {
        let end = (next + BATCH).min(cfg.frames);
        let batch: Vec<FrameCounts> = (next..end)
            .into_par_iter()
            .map(|f| {
                simulate_frame(
                    setup,
                    &decomps,
                    &stages,
                    noise_var,
                    cfg,
                    frame_rng(cfg.seed, snr_index, f),
                )
            })
            .collect();
        next = end;
        for fc in batch {
            frames += 1;
            let mut bad = false;
            for (tot, c) in totals.iter_mut().zip(&fc) {
                for k in 0..2 {
                    tot[k].add(&c[k]);
                    bad |= c[k].bit_errors > 0;
                }
            }
            frame_errors += u64::from(bad);
            if frame_errors >= cfg.frame_errors as u64 {
                break 'outer;
            }
        }
    }
    let components = (0..2)
        .flat_map(|k| (0..levels).map(move |s| (k, s)))
        .map(|(k, s)| ComponentStats::new(k + 1, s + 1, totals[s][k]))
        .collect();
    Ok(PointReport::new(snr_db, frames, frame_errors, components))
}

/// Simulates every SNR point of `cfg`.
pub fn run_ber(setup: &SimSetup, cfg: &SimConfig) -> Result<BerReport, SimError> {
    cfg.validate()?;
    let start = Instant::now();
    let work = || -> Result<Vec<PointReport>, SimError> {
        cfg.snr_db
            .iter()
            .enumerate()
            .map(|(i, &snr)| run_point(setup, cfg, i, snr))
            .collect()
    };
    let points = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| SimError::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    Ok(BerReport {
        points,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// [`run_ber`] plus CSV output at `out`.
pub fn sweep_snr(setup: &SimSetup, cfg: &SimConfig, out: &Path) -> Result<BerReport, SimError> {
    let report = run_ber(setup, cfg)?;
    std::fs::write(out, report.to_csv()?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{named_pair, NamedConstellation};

    fn toy_setup() -> SimSetup {
        let (a, b) = named_pair(NamedConstellation::Opt);
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let codes = [0u64, 1].map(|k| {
            (0..2)
                .map(|s| LevelCode::construct(200, &dd, 10 * k + s).unwrap())
                .collect()
        });
        SimSetup::new(
            [a, b],
            LevelOrder::new(vec![1, 0], vec![0, 1]).unwrap(),
            codes,
        )
        .unwrap()
    }

    #[test]
    fn all_zero_words_hit_the_top_point() {
        let (a, b) = named_pair(NamedConstellation::Mc);
        let d = [decompose_levels(&a).unwrap(), decompose_levels(&b).unwrap()];
        let words = [vec![vec![0u8; 5]; 2], vec![vec![0u8; 5]; 2]];
        let x = transmit(&words, &d, &LevelOrder::natural(2)).unwrap();
        assert!(x[0].iter().all(|&v| (v - 1.342).abs() < 1e-3));
        assert!(transmit(
            &[vec![vec![0u8; 5]; 1], vec![vec![0u8; 5]; 2]],
            &d,
            &LevelOrder::natural(2)
        )
        .is_err());
    }

    #[test]
    fn bpsk_samples_are_exact() {
        let c = UserConstellation::new(vec![-1.0, 1.0]).unwrap();
        let d = [decompose_levels(&c).unwrap(), decompose_levels(&c).unwrap()];
        let words = [vec![vec![0, 1, 1, 0]], vec![vec![1, 1, 0, 0]]];
        let x = transmit(&words, &d, &LevelOrder::natural(1)).unwrap();
        assert_eq!(x[0], vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn noise_statistics() {
        let mut rng = frame_rng(3, 0, 0);
        let y = awgn(&vec![0.0; 1_000_000], 0.25, &mut rng);
        let var = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        assert!((var - 0.25).abs() < 0.0025);
        let tiny = awgn(&[0.5, -1.0], 1e-12, &mut rng);
        assert!((tiny[0] - 0.5).abs() < 1e-5 && (tiny[1] + 1.0).abs() < 1e-5);
        let (mut r1, mut r2) = (frame_rng(7, 1, 2), frame_rng(7, 1, 2));
        assert_eq!(awgn(&[0.0; 8], 1.0, &mut r1), awgn(&[0.0; 8], 1.0, &mut r2));
        assert_ne!(
            awgn(&[0.0; 8], 1.0, &mut frame_rng(7, 1, 3)),
            awgn(&[0.0; 8], 1.0, &mut frame_rng(7, 1, 2))
        );
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson(5, 1000);
        assert!(lo < 0.005 && 0.005 < hi);
        assert_eq!(wilson(0, 0), (0.0, 1.0));
        assert!(wilson(0, 100).0 < 1e-12);
    }

    #[test]
    fn report_is_thread_independent_and_csv_round_trips() {
        let setup = toy_setup();
        let mut cfg = SimConfig {
            snr_db: vec![14.0],
            frames: 40,
            frame_errors: 10,
            max_iter: 30,
            seed: 11,
            genie: false,
            threads: Some(1),
        };
        let a = run_ber(&setup, &cfg).unwrap();
        cfg.threads = Some(3);
        let b = run_ber(&setup, &cfg).unwrap();
        assert_eq!(a.points, b.points);
        let back = BerReport::from_csv(&a.to_csv().unwrap()).unwrap();
        assert_eq!(back.points, a.points);
        let p = &a.points[0];
        for c in &p.components {
            assert_eq!(c.ber, c.counts.bit_errors as f64 / c.counts.bits as f64);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = SimConfig::default();
        c.snr_db.clear();
        assert!(c.validate().is_err());
        let c = SimConfig {
            frames: 0,
            ..SimConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
