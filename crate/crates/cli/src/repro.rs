//! The fixed set of reference experiments regenerated by `ccm tables`.

use std::path::{Path, PathBuf};

use ccm_core::coupled::{couple_n, CoupledResult};
use ccm_core::mom::{ArrayLayout, WireDipole};

use crate::config::RunConfig;
use crate::pipeline::{self, coupled_eigs_table, coupling_table, isolated_labels, perturbation_table};
use crate::table::{format_number, Table};
use crate::Failure;

pub const DEFAULT_DIR: &str = "paper_repro";

/// Isolated dipole lengths of the single-element table.
pub const LENGTHS: [f64; 3] = [0.3, 0.5, 0.7];
/// Second-element lengths of the two-element combos; the first is 0.5.
pub const COMBOS: [(&str, f64); 3] = [("combo1", 0.3), ("combo2", 0.5), ("combo3", 0.7)];
pub const PAIR_SPACING: f64 = 0.3;
pub const FIVE_SPACING: f64 = 0.4;
const MODES: usize = 4;
const SIGN_MATCH: f64 = 1e-6;

fn config(lengths: &[f64], spacing: f64, retained: usize) -> RunConfig {
    let elements: Vec<String> = lengths
        .iter()
        .enumerate()
        .map(|(i, l)| format!(r#"{{"length": {l}, "x_position": {}}}"#, i as f64 * spacing))
        .collect();
    RunConfig::parse(&format!(
        r#"{{"elements": [{}], "retained_modes": {retained}, "analyses": ["coupled"]}}"#,
        elements.join(", ")
    ))
    .expect("built-in configuration is valid")
}

pub fn combo(length_b: f64) -> Result<CoupledResult, Failure> {
    let s = pipeline::study(&config(&[0.5, length_b], PAIR_SPACING, MODES), true)?;
    Ok(s.coupled.expect("coupled study"))
}

/// Five identical half-wave dipoles, each contributing only its mode `mode`
/// (0-based).
pub fn five_element(mode: usize) -> Result<CoupledResult, Failure> {
    let d = WireDipole::with_default_mesh(0.5, crate::config::DEFAULT_WIDTH, 0.0)
        .map_err(|e| Failure::module(e.to_string()))?;
    let layout = ArrayLayout::uniform(d, 5, FIVE_SPACING).map_err(|e| Failure::module(e.to_string()))?;
    let blocks = ccm_core::mom::assemble_array(&layout).map_err(|e| Failure::module(e.to_string()))?;
    let cfg = config(&[0.5; 5], FIVE_SPACING, mode + 1);
    let s = pipeline::study_blocks(layout, &blocks, &cfg, false)?;
    let picked = s
        .isolated
        .iter()
        .map(|m| m.select(&[mode]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::module(e.to_string()))?;
    couple_n(&picked, &s.blocks).map_err(|e| Failure::module(e.to_string()))
}

fn isolated_eigenvalues() -> Result<Table, Failure> {
    let mut t = Table::new(
        std::iter::once("length".to_string()).chain((1..=MODES).map(|n| format!("lambda_{n}"))),
    );
    for l in LENGTHS {
        let s = pipeline::study(&config(&[l], 0.0, MODES), false)?;
        t.push(
            std::iter::once(l)
                .chain(s.isolated[0].lambdas().iter().copied())
                .map(format_number)
                .collect(),
        );
    }
    Ok(t)
}

/// Writes every reproduction table into `dir`, returning the paths in order.
pub fn write_all(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut tables: Vec<(String, Table)> = vec![("isolated_eigenvalues.csv".into(), isolated_eigenvalues()?)];

    let mut eigs = Table::new(["combo", "mode", "lambda_c", "association", "delta_lambda"]);
    let mut shifts = Table::new(["combo", "element", "mode", "lambda_isolated", "lambda_c", "delta_lambda"]);
    for (name, length_b) in COMBOS {
        let c = combo(length_b)?;
        for r in coupled_eigs_table(&c).into_rows() {
            eigs.push(std::iter::once(name.to_string()).chain(r).collect());
        }
        for r in perturbation_table(&c).into_rows() {
            shifts.push(std::iter::once(name.to_string()).chain(r).collect());
        }
        let labels = isolated_labels(&c.coupling.block_sizes);
        tables.push((format!("coupling_{name}.csv"), coupling_table(&c, SIGN_MATCH, &labels)?));
    }
    tables.push(("coupled_eigenvalues.csv".into(), eigs));
    tables.push(("perturbation.csv".into(), shifts));

    for mode in [0, 1] {
        let c = five_element(mode)?;
        let labels: Vec<String> = isolated_labels(&[1; 5])
            .into_iter()
            .map(|l| format!("{}{}", &l[..1], mode + 1))
            .collect();
        tables.push((
            format!("five_element_mode{}.csv", mode + 1),
            coupling_table(&c, SIGN_MATCH, &labels)?,
        ));
    }

    std::fs::create_dir_all(dir).map_err(|e| Failure::module(format!("creating {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, table) in tables {
        let path = dir.join(name);
        table.write(&path)?;
        written.push(path);
    }
    Ok(written)
}
