//! JSON configuration files of the subcommands.

use std::path::{Path, PathBuf};

use gmac_core::codedesign::DesignConfig;
use gmac_core::constellation::{
    named_constellation, ConstellationPair, LevelOrder, UserConstellation,
};
use gmac_core::numerics::JModel;
use gmac_core::sim::SimConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A constellation pair given by name, inline, or as a file written by
/// `optimize-constellation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstellationSpec {
    Named(String),
    File { file: PathBuf },
    Inline(ConstellationPair),
}

impl ConstellationSpec {
    pub fn resolve(&self, base: &Path) -> Result<(UserConstellation, UserConstellation), CliError> {
        match self {
            ConstellationSpec::Named(n) => {
                named_constellation(n).map_err(|e| CliError::Usage(format!("constellation: {e}")))
            }
            ConstellationSpec::Inline(p) => Ok((p.user1.clone(), p.user2.clone())),
            ConstellationSpec::File { file } => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    CliError::Usage(format!("constellation.file {}: {e}", path.display()))
                })?;
                let p = ConstellationPair::from_json(&text).map_err(|e| {
                    CliError::Usage(format!("constellation.file {}: {e}", path.display()))
                })?;
                Ok((p.user1, p.user2))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ConstellationSpec::Named(n) => n.to_ascii_uppercase(),
            ConstellationSpec::File { file } => file.display().to_string(),
            ConstellationSpec::Inline(_) => "custom".into(),
        }
    }
}

/// `"natural"`, `"reversed"` or an explicit `{user1, user2}` permutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Named(String),
    Explicit(LevelOrder),
}

impl OrderSpec {
    pub fn resolve(spec: Option<&OrderSpec>, levels: usize) -> Result<LevelOrder, CliError> {
        let order = match spec {
            None => LevelOrder::natural(levels),
            Some(OrderSpec::Named(n)) => match n.as_str() {
                "natural" => LevelOrder::natural(levels),
                "reversed" => LevelOrder::reversed(levels),
                other => return Err(CliError::Usage(format!("order: unknown order `{other}`"))),
            },
            Some(OrderSpec::Explicit(o)) => o.clone(),
        };
        order
            .validate(levels)
            .map_err(|e| CliError::Usage(format!("order: {e}")))?;
        Ok(order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    pub constellation: ConstellationSpec,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub order: Option<OrderSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub snr_db: f64,
    #[serde(default = "two")]
    pub levels: usize,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFileConfig {
    pub constellation: ConstellationSpec,
    pub dsnr_db: f64,
    #[serde(default)]
    pub order: Option<OrderSpec>,
    /// Check degrees `[user 1, user 2]` per stage. When absent, equal check
    /// degrees are searched over `d_c_range`.
    #[serde(default)]
    pub d_c: Option<Vec<[usize; 2]>>,
    #[serde(default = "default_dc_range")]
    pub d_c_range: [usize; 2],
    #[serde(default)]
    pub j_model: JModel,
    #[serde(default)]
    pub design: DesignConfig,
}

fn default_dc_range() -> [usize; 2] {
    [4, 20]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructConfig {
    /// Design bundle written by `design`.
    pub design: PathBuf,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "one")]
    pub seed: u64,
}

fn default_n() -> usize {
    10_000
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Constellations used on the channel; may differ from the design's.
    pub channel: ConstellationSpec,
    #[serde(default)]
    pub order: Option<OrderSpec>,
    /// Output directory of `construct`.
    pub graphs: PathBuf,
    #[serde(default)]
    pub sim: SimConfig,
}

/// Reads and parses a config, reporting the offending field on failure.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_parse_in_all_forms() {
        let c: CapacityConfig =
            serde_json::from_str(r#"{"constellation": "MC", "snr_db": [10]}"#).unwrap();
        assert_eq!(c.constellation, ConstellationSpec::Named("MC".into()));
        let c: CapacityConfig =
            serde_json::from_str(r#"{"constellation": {"file": "opt.json"}, "snr_db": [10]}"#)
                .unwrap();
        assert!(matches!(c.constellation, ConstellationSpec::File { .. }));
        let c: CapacityConfig = serde_json::from_str(
            r#"{"constellation": {"user1": [-1, 1], "user2": [-0.5, 0.5], "L": 1}, "snr_db": [0]}"#,
        )
        .unwrap();
        assert!(matches!(c.constellation, ConstellationSpec::Inline(_)));
        let err = serde_json::from_str::<CapacityConfig>(r#"{"constellation": "MC", "snr": [10]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("snr"), "{err}");
    }

    #[test]
    fn orders_resolve() {
        assert_eq!(OrderSpec::resolve(None, 2).unwrap(), LevelOrder::natural(2));
        let o: OrderSpec = serde_json::from_str(r#"{"user1": [1, 0], "user2": [0, 1]}"#).unwrap();
        assert_eq!(OrderSpec::resolve(Some(&o), 2).unwrap().user1, vec![1, 0]);
        assert!(OrderSpec::resolve(Some(&OrderSpec::Named("zigzag".into())), 2).is_err());
        assert!(OrderSpec::resolve(Some(&o), 3).is_err());
    }
}
