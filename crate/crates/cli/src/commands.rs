use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gmac_core::codedesign::{alternating_design, design_exit, select_dc, LevelDesign, PairDesign};
use gmac_core::constellation::{
    named_pair, optimize_constellations_with, pair_capacity, per_level_capacities,
    ConstellationError, ConstellationPair, LevelOrder, NamedConstellation, OptimizerConfig,
    UserConstellation,
};
use gmac_core::exit::joint_trajectory;
use gmac_core::ldpc::{peg_construct, quantize_degrees, EncoderState, TannerGraph};
use gmac_core::sim::{sweep_snr, LevelCode, SimSetup};
use gmac_core::snr::noise_variance;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{
    CapacityConfig, ConstructConfig, DesignFileConfig, OptimizeConfig, OrderSpec, SimulateConfig,
};
use crate::CliError;

fn write(
    out: &Path,
    name: &str,
    contents: &str,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    fs::write(out.join(name), contents)
        .map_err(|e| CliError::Failure(format!("writing {name}: {e}")))?;
    outputs.push(name.to_string());
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn numeric(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

/// Gaussian-input sum capacity `½ log₂(1 + 2/σ²)` of the real two-user MAC.
fn gaussian_bound(noise_var: f64) -> f64 {
    0.5 * (1.0 + 2.0 / noise_var).log2()
}

pub fn capacity(cfg: &CapacityConfig, base: &Path, out: &Path) -> Result<Vec<String>, CliError> {
    if cfg.snr_db.is_empty() {
        return Err(CliError::Usage("snr_db: must not be empty".into()));
    }
    let (c1, c2) = cfg.constellation.resolve(base)?;
    let order = OrderSpec::resolve(cfg.order.as_ref(), c1.levels())?;
    let mut csv = String::from("snr_db,sum_capacity");
    for i in 1..=c1.levels() {
        let _ = write!(csv, ",level_{i}");
    }
    csv.push_str(",gaussian_bound\n");
    for &snr in &cfg.snr_db {
        let nv = noise_variance(snr);
        let sum = pair_capacity(&c1, &c2, nv).map_err(numeric)?;
        let levels = per_level_capacities(&c1, &c2, nv, &order).map_err(numeric)?;
        let _ = write!(csv, "{snr},{sum:.6}");
        for c in levels {
            let _ = write!(csv, ",{c:.6}");
        }
        let _ = writeln!(csv, ",{:.6}", gaussian_bound(nv));
    }
    let mut outputs = Vec::new();
    write(out, "capacity.csv", &csv, &mut outputs)?;
    Ok(outputs)
}

pub fn optimize(cfg: &OptimizeConfig, quick: bool, out: &Path) -> Result<Vec<String>, CliError> {
    if cfg.levels == 0 || cfg.levels > 4 {
        return Err(CliError::Usage(format!(
            "levels: {} not in 1..=4",
            cfg.levels
        )));
    }
    let nv = noise_variance(cfg.snr_db);
    let mut ocfg = OptimizerConfig::default();
    if quick {
        ocfg.grid = 10;
        ocfg.starts = 8;
        ocfg.polish = 2;
    }
    let (pair, converged) = match optimize_constellations_with(nv, cfg.levels, &ocfg) {
        Ok(p) => (p, true),
        Err(ConstellationError::NotConverged { best, .. }) => (*best, false),
        Err(e) => return Err(numeric(e)),
    };
    let capacity = pair_capacity(&pair.0, &pair.1, nv).map_err(numeric)?;
    let mut reference = serde_json::Map::new();
    if cfg.levels == 2 {
        for name in [NamedConstellation::Mc, NamedConstellation::Sp] {
            let (a, b) = named_pair(name);
            reference.insert(
                name.to_string(),
                json!(pair_capacity(&a, &b, nv).map_err(numeric)?),
            );
        }
    }
    let doc = json!({
        "user1": pair.0,
        "user2": pair.1,
        "L": cfg.levels,
        "snr_db": cfg.snr_db,
        "capacity": capacity,
        "converged": converged,
        "reference": reference,
    });
    let mut outputs = Vec::new();
    write(out, "constellation.json", &pretty(&doc), &mut outputs)?;
    if !converged {
        return Err(CliError::Failure(
            "optimizer did not converge; best point written".into(),
        ));
    }
    Ok(outputs)
}

/// Output of `design`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignBundle {
    pub constellation: String,
    pub pair: ConstellationPair,
    pub dsnr_db: f64,
    pub order: LevelOrder,
    pub sum_capacity: f64,
    pub level_capacities: Vec<f64>,
    pub sum_rate: f64,
    pub stages: Vec<StageDesign>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDesign {
    /// 1-based decoding stage.
    pub stage: usize,
    pub capacity: f64,
    pub sum_rate: f64,
    /// Empty when the stage could not be designed.
    pub codes: Vec<LevelDesign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn design(cfg: &DesignFileConfig, base: &Path, out: &Path) -> Result<Vec<String>, CliError> {
    cfg.design
        .validate()
        .map_err(|e| CliError::Usage(format!("design: {e}")))?;
    let (c1, c2) = cfg.constellation.resolve(base)?;
    let levels = c1.levels();
    let order = OrderSpec::resolve(cfg.order.as_ref(), levels)?;
    if let Some(d) = &cfg.d_c {
        if d.len() != levels || d.iter().flatten().any(|&x| x < 2) {
            return Err(CliError::Usage(format!(
                "d_c: need {levels} pairs of degrees >= 2"
            )));
        }
    }
    let [lo, hi] = cfg.d_c_range;
    if lo < 2 || lo > hi {
        return Err(CliError::Usage("d_c_range: need 2 <= lo <= hi".into()));
    }
    let nv = noise_variance(cfg.dsnr_db);
    let caps = per_level_capacities(&c1, &c2, nv, &order).map_err(numeric)?;
    let label = cfg.constellation.label();
    let mut outputs = Vec::new();
    let mut stages = Vec::new();
    for (s, &cap) in caps.iter().enumerate() {
        let exit = design_exit(&c1, &c2, nv, order.clone(), s, cfg.j_model, &cfg.design)
            .map_err(numeric)?;
        let result: Result<PairDesign, _> = match &cfg.d_c {
            Some(d) => alternating_design(&exit, d[s], &cfg.design, None),
            None => select_dc(&exit, lo..=hi, &cfg.design).map(|(_, p)| p),
        };
        match result {
            Ok(p) => {
                let tr =
                    joint_trajectory(&exit, &p.lambdas[0], &p.lambdas[1], cfg.design.max_iters);
                write(
                    out,
                    &format!("exit_stage{}.csv", s + 1),
                    &tr.to_csv(),
                    &mut outputs,
                )?;
                let codes = p
                    .lambdas
                    .iter()
                    .enumerate()
                    .map(|(k, dd)| LevelDesign::new(k + 1, s + 1, cfg.dsnr_db, &label, dd))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(numeric)?;
                stages.push(StageDesign {
                    stage: s + 1,
                    capacity: cap,
                    sum_rate: p.sum_rate(),
                    codes,
                    error: None,
                });
            }
            Err(e) => stages.push(StageDesign {
                stage: s + 1,
                capacity: cap,
                sum_rate: 0.0,
                codes: Vec::new(),
                error: Some(e.to_string()),
            }),
        }
    }
    let bundle = DesignBundle {
        constellation: label,
        pair: ConstellationPair::new(c1.clone(), c2.clone()).map_err(numeric)?,
        dsnr_db: cfg.dsnr_db,
        order,
        sum_capacity: caps.iter().sum(),
        level_capacities: caps,
        sum_rate: stages.iter().map(|s| s.sum_rate).sum(),
        stages,
    };
    write(out, "design.json", &pretty(&bundle), &mut outputs)?;
    let failed: Vec<String> = bundle
        .stages
        .iter()
        .filter_map(|s| s.error.as_ref().map(|e| format!("stage {}: {e}", s.stage)))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Failure(failed.join("; ")));
    }
    Ok(outputs)
}

/// Per-code entry of `construct.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructedCode {
    pub user: usize,
    pub stage: usize,
    pub file: String,
    pub n: usize,
    pub m: usize,
    pub rank: usize,
    pub k: usize,
    pub seed: u64,
    pub design_rate: f64,
    pub realized_rate: f64,
    pub girth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructReport {
    pub n: usize,
    pub seed: u64,
    pub codes: Vec<ConstructedCode>,
}

/// Seed of one code, derived from the run seed.
pub fn code_seed(seed: u64, stage: usize, user: usize) -> u64 {
    seed.wrapping_mul(1000)
        .wrapping_add((16 * stage + user) as u64)
}

pub fn construct(cfg: &ConstructConfig, base: &Path, out: &Path) -> Result<Vec<String>, CliError> {
    let path = base.join(&cfg.design);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("design {}: {e}", path.display())))?;
    let bundle: DesignBundle = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("design {}: {e}", path.display())))?;
    if cfg.n < 100 {
        return Err(CliError::Usage(format!("n: {} < 100", cfg.n)));
    }
    let mut outputs = Vec::new();
    let mut codes = Vec::new();
    for st in &bundle.stages {
        if st.codes.is_empty() {
            return Err(CliError::Failure(format!(
                "stage {} has no design",
                st.stage
            )));
        }
        for code in &st.codes {
            let dd = code.distribution().map_err(numeric)?;
            let (var, chk) = quantize_degrees(cfg.n, &dd).map_err(numeric)?;
            let seed = code_seed(cfg.seed, st.stage, code.user);
            let g = peg_construct(&var, &chk, seed).map_err(numeric)?;
            let enc = EncoderState::new(&g);
            let file = format!("user{}_stage{}.txt", code.user, st.stage);
            write(out, &file, &g.to_text(), &mut outputs)?;
            codes.push(ConstructedCode {
                user: code.user,
                stage: st.stage,
                file,
                n: g.n(),
                m: g.m(),
                rank: enc.rank(),
                k: enc.k(),
                seed,
                design_rate: code.design_rate,
                realized_rate: enc.rate(),
                girth: g.girth(),
            });
        }
    }
    let report = ConstructReport {
        n: cfg.n,
        seed: cfg.seed,
        codes,
    };
    write(out, "construct.json", &pretty(&report), &mut outputs)?;
    Ok(outputs)
}

/// Loads the codes written by `construct` as `codes[user][stage]`.
pub fn load_codes(dir: &Path, levels: usize) -> Result<[Vec<LevelCode>; 2], CliError> {
    let path = dir.join("construct.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("graphs {}: {e}", path.display())))?;
    let report: ConstructReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut codes: [Vec<Option<LevelCode>>; 2] = [vec![None; levels], vec![None; levels]];
    for c in &report.codes {
        if !(1..=2).contains(&c.user) || !(1..=levels).contains(&c.stage) {
            return Err(CliError::Usage(format!(
                "graphs: code user {} stage {} out of range",
                c.user, c.stage
            )));
        }
        let text = fs::read_to_string(dir.join(&c.file))
            .map_err(|e| CliError::Usage(format!("graphs {}: {e}", c.file)))?;
        let g = TannerGraph::from_text(&text)
            .map_err(|e| CliError::Usage(format!("graphs {}: {e}", c.file)))?;
        codes[c.user - 1][c.stage - 1] = Some(LevelCode::new(g));
    }
    let [a, b] = codes;
    let collect = |v: Vec<Option<LevelCode>>| -> Result<Vec<LevelCode>, CliError> {
        v.into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| CliError::Usage(format!("graphs: need {levels} stages per user")))
    };
    Ok([collect(a)?, collect(b)?])
}

pub fn simulate(cfg: &SimulateConfig, base: &Path, out: &Path) -> Result<Vec<String>, CliError> {
    cfg.sim
        .validate()
        .map_err(|e| CliError::Usage(format!("sim: {e}")))?;
    let (c1, c2): (UserConstellation, UserConstellation) = cfg.channel.resolve(base)?;
    let levels = c1.levels();
    let order = OrderSpec::resolve(cfg.order.as_ref(), levels)?;
    let codes = load_codes(&base.join(&cfg.graphs), levels)?;
    let setup =
        SimSetup::new([c1, c2], order, codes).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut outputs = Vec::new();
    let report = sweep_snr(&setup, &cfg.sim, &out.join("ber.csv")).map_err(numeric)?;
    outputs.push("ber.csv".into());
    write(out, "ber.json", &pretty(&report), &mut outputs)?;
    Ok(outputs)
}
