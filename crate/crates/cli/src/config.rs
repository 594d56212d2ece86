//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::Failure;

pub const DEFAULT_WIDTH: f64 = 0.005;
pub const DEFAULT_RETAINED: usize = 4;
pub const DEFAULT_OUTPUT_DIR: &str = "ccm_out";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub elements: Vec<ElementConfig>,
    #[serde(default)]
    pub retained_modes: Retained,
    pub analyses: Vec<Analysis>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub thresholds: Thresholds,
}

/// One dipole; lengths in wavelengths.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementConfig {
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    pub x_position: f64,
    /// Mesh segments; chosen from the length when absent.
    #[serde(default)]
    pub segments: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Isolated,
    Coupled,
    Validate,
    Perturbation,
    Pairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Relative size below which a mutual modal power counts as zero.
    #[serde(default = "default_pair_select")]
    pub pair_select: f64,
    /// Relative tolerance within which two coupling entries count as the
    /// same peak when fixing the sign of a displayed column.
    #[serde(default = "default_sign_match")]
    pub sign_match: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            pair_select: default_pair_select(),
            sign_match: default_sign_match(),
        }
    }
}

/// A mode count for every element, or one count per element.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Retained {
    All(ModeCount),
    PerElement(Vec<ModeCount>),
}

impl Default for Retained {
    fn default() -> Self {
        Retained::All(ModeCount::Count(DEFAULT_RETAINED))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ModeCount {
    Count(usize),
    /// Every mode of the element's mesh.
    Keyword(FullKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FullKeyword {
    Full,
}

impl ModeCount {
    fn resolve(self, available: usize) -> usize {
        match self {
            ModeCount::Count(k) => k,
            ModeCount::Keyword(FullKeyword::Full) => available,
        }
    }
}

impl Retained {
    /// Mode counts per element given each element's basis size.
    pub fn resolve(&self, basis_counts: &[usize]) -> Result<Vec<usize>, Failure> {
        let counts: Vec<usize> = match self {
            Retained::All(c) => basis_counts.iter().map(|&n| c.resolve(n)).collect(),
            Retained::PerElement(list) => {
                if list.len() != basis_counts.len() {
                    return Err(Failure::config(format!(
                        "retained_modes lists {} counts for {} elements",
                        list.len(),
                        basis_counts.len()
                    )));
                }
                list.iter().zip(basis_counts).map(|(c, &n)| c.resolve(n)).collect()
            }
        };
        if counts.contains(&0) {
            return Err(Failure::config("retained_modes must be at least 1"));
        }
        Ok(counts)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|f| f.context(path.display().to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Failure::config(e.to_string()))?;
        cfg.analyses.sort();
        cfg.analyses.dedup();
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), Failure> {
        if self.elements.is_empty() {
            return Err(Failure::config("at least one element is required"));
        }
        let t = self.thresholds;
        if !(t.pair_select > 0.0 && t.pair_select < 1.0) {
            return Err(Failure::config("thresholds.pair_select must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&t.sign_match) {
            return Err(Failure::config("thresholds.sign_match must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn wants(&self, analysis: Analysis) -> bool {
        self.analyses.contains(&analysis)
    }
}

fn default_width() -> f64 {
    DEFAULT_WIDTH
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

fn default_pair_select() -> f64 {
    ccm_core::coupled::DEFAULT_PAIR_THRESHOLD
}

fn default_sign_match() -> f64 {
    1e-6
}
