//! Runs the configured analyses and renders their tables.

use std::path::{Path, PathBuf};

use ccm_core::cma::{self, ModeSet};
use ccm_core::coupled::{
    self, element_label, normalize_display_tied, perturbation, select_coupled_pairs,
    CoupledResult,
};
use ccm_core::mom::{assemble_array, mesh, ArrayLayout, BlockImpedance, WireDipole};
use ccm_core::oracle::{full_coupled_modes, match_modes};
use ccm_core::Error;

use crate::config::{Analysis, ElementConfig, RunConfig};
use crate::table::{format_number, row, Table};
use crate::Failure;

pub const DEFAULT_TOL_EIG: f64 = 1e-3;
pub const DEFAULT_TOL_SIM: f64 = 0.99;

/// Oracle agreement every subspace mode must reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest relative eigenvalue error.
    pub eig: f64,
    /// Smallest current similarity.
    pub sim: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eig: DEFAULT_TOL_EIG,
            sim: DEFAULT_TOL_SIM,
        }
    }
}

fn dipole(i: usize, e: &ElementConfig) -> Result<WireDipole, Failure> {
    let d = match e.segments {
        Some(s) => WireDipole::new(e.length, e.width, e.x_position, s),
        None => WireDipole::with_default_mesh(e.length, e.width, e.x_position),
    };
    d.map_err(|err| Failure::module(format!("element {}: {err}", element_label(i))))
}

pub fn layout(cfg: &RunConfig) -> Result<ArrayLayout, Failure> {
    let dipoles = cfg
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| dipole(i, e))
        .collect::<Result<Vec<_>, _>>()?;
    ArrayLayout::new(dipoles).map_err(|e| match e {
        Error::Overlap { a, b, .. } => Failure::module(format!(
            "elements {} and {} overlap",
            element_label(a),
            element_label(b)
        )),
        other => Failure::module(other.to_string()),
    })
}

/// Everything computed for one configuration.
#[derive(Debug, Clone)]
pub struct Study {
    pub layout: ArrayLayout,
    /// The pencil every solve used (regularized once if needed).
    pub blocks: BlockImpedance,
    pub isolated: Vec<ModeSet>,
    pub coupled: Option<CoupledResult>,
}

/// Assembles the array, finds each element's retained modes and, if
/// `couple` is set, the coupled modes.
pub fn study(cfg: &RunConfig, couple: bool) -> Result<Study, Failure> {
    let layout = layout(cfg)?;
    let blocks = assemble_array(&layout).map_err(|e| Failure::module(format!("assembly: {e}")))?;
    study_blocks(layout, &blocks, cfg, couple)
}

/// [`study`] on already assembled (possibly modified) blocks.
pub fn study_blocks(
    layout: ArrayLayout,
    blocks: &BlockImpedance,
    cfg: &RunConfig,
    couple: bool,
) -> Result<Study, Failure> {
    if couple && blocks.element_count() < 2 {
        return Err(Failure::module("coupled analyses need at least two elements"));
    }
    let retained = cfg.retained_modes.resolve(&blocks.sizes())?;
    let (blocks, _) = blocks
        .regularized()
        .map_err(|e| Failure::module(format!("radiation matrix: {e}")))?;
    let isolated = retained
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (r, x) = blocks.self_block(i);
            cma::isolated_modes(r, x, k)
                .map_err(|e| Failure::module(format!("element {}: {e}", element_label(i))))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let coupled = if couple {
        Some(coupled::couple_n(&isolated, &blocks).map_err(|e| Failure::module(format!("coupled modes: {e}")))?)
    } else {
        None
    };
    Ok(Study {
        layout,
        blocks,
        isolated,
        coupled,
    })
}

/// One compared mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub label: String,
    pub lambda_c: f64,
    pub lambda_full: f64,
    pub eig_rel_err: f64,
    pub current_similarity: f64,
    pub pass: bool,
}

/// Subspace modes against the full-space oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tolerances: Tolerances,
    pub rows: Vec<ValidationRow>,
    /// Set when some mode found no partner at all.
    pub unmatched: Option<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.unmatched.is_none() && self.rows.iter().all(|r| r.pass)
    }

    /// `Err(Failure::Validation)` unless every mode passed.
    pub fn check(&self) -> Result<(), Failure> {
        if let Some(reason) = &self.unmatched {
            return Err(Failure::Validation(reason.clone()));
        }
        let failed: Vec<&str> = self.rows.iter().filter(|r| !r.pass).map(|r| r.label.as_str()).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::Validation(format!(
                "{} of {} modes outside tol_eig {} / tol_sim {}: {}",
                failed.len(),
                self.rows.len(),
                self.tolerances.eig,
                self.tolerances.sim,
                failed.join(" ")
            )))
        }
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "mode",
            "label",
            "lambda_c",
            "lambda_full",
            "eig_rel_err",
            "current_similarity",
            "status",
        ]);
        for (j, r) in self.rows.iter().enumerate() {
            t.push(vec![
                (j + 1).to_string(),
                r.label.clone(),
                format_number(r.lambda_c),
                format_number(r.lambda_full),
                format_number(r.eig_rel_err),
                format_number(r.current_similarity),
                if r.pass { "pass" } else { "fail" }.to_string(),
            ]);
        }
        t
    }
}

/// Compares `coupled` with the full coupled eigenproblem of `reference`.
pub fn validate(
    coupled: &CoupledResult,
    reference: &BlockImpedance,
    tolerances: Tolerances,
) -> Result<ValidationReport, Failure> {
    let full = full_coupled_modes(reference, reference.total_size())
        .map_err(|e| Failure::module(format!("full-space oracle: {e}")))?;
    let labels = coupled.labels();
    let found = match match_modes(coupled, &full, reference) {
        Ok(m) => m,
        Err(Error::AmbiguousMatch { mode, similarity }) => {
            return Ok(ValidationReport {
                tolerances,
                rows: Vec::new(),
                unmatched: Some(format!(
                    "coupled mode {} has no full-space partner (best similarity {similarity:.4})",
                    labels[mode]
                )),
            })
        }
        Err(e) => return Err(Failure::module(format!("mode matching: {e}"))),
    };
    let rows = found
        .pairs
        .iter()
        .zip(found.eig_rel_err.iter().zip(&found.current_similarity))
        .map(|(&(s, f), (&err, &sim))| ValidationRow {
            label: labels[s].clone(),
            lambda_c: coupled.lambdas_c[s],
            lambda_full: full.lambdas()[f],
            eig_rel_err: err,
            current_similarity: sim,
            pass: err <= tolerances.eig && sim >= tolerances.sim,
        })
        .collect();
    Ok(ValidationReport {
        tolerances,
        rows,
        unmatched: None,
    })
}

/// Labels `A1`, `A2`, …, `B1`, … of the retained isolated modes.
pub fn isolated_labels(block_sizes: &[usize]) -> Vec<String> {
    block_sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| (1..=k).map(move |n| format!("{}{n}", element_label(i))))
        .collect()
}

pub fn isolated_table(isolated: &[ModeSet]) -> Table {
    let mut t = Table::new(["element", "mode", "lambda", "p_r", "p_x"]);
    for (i, m) in isolated.iter().enumerate() {
        for n in 0..m.k() {
            t.push(row(
                [element_label(i), (n + 1).to_string()],
                &[m.lambdas()[n], m.p_r()[n], m.p_x()[n]],
            ));
        }
    }
    t
}

pub fn coupled_eigs_table(c: &CoupledResult) -> Table {
    let delta: Vec<Option<f64>> = {
        let p = perturbation(c);
        let ranks = c.ranks();
        (0..c.k())
            .map(|j| {
                p.iter()
                    .find(|q| q.element == c.association[j] && q.mode == ranks[j])
                    .map(|q| q.delta_lambda)
            })
            .collect()
    };
    let mut t = Table::new(["mode", "lambda_c", "association", "delta_lambda"]);
    for (j, label) in c.labels().into_iter().enumerate() {
        t.push(vec![
            (j + 1).to_string(),
            format_number(c.lambdas_c[j]),
            label,
            delta[j].map(format_number).unwrap_or_default(),
        ]);
    }
    t
}

/// Display-normalized coupling matrix; rows are isolated modes, columns
/// coupled modes.
pub fn coupling_table(c: &CoupledResult, sign_match: f64, row_labels: &[String]) -> Result<Table, Failure> {
    let display = normalize_display_tied(&c.coupling.m, sign_match)
        .map_err(|e| Failure::module(format!("coupling matrix: {e}")))?;
    let mut t = Table::new(std::iter::once("mode".to_string()).chain(c.labels()));
    for (i, label) in row_labels.iter().enumerate() {
        let values: Vec<f64> = display.row(i).iter().copied().collect();
        t.push(row([label.clone()], &values));
    }
    Ok(t)
}

/// Coupled eigencurrents sampled at every mesh node, each mode scaled to
/// unit peak magnitude over the whole array.
pub fn currents_table(c: &CoupledResult, layout: &ArrayLayout) -> Table {
    let mut samples: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    let mut offset = 0;
    for (i, d) in layout.elements().iter().enumerate() {
        let basis = mesh(d);
        for s in 0..=d.segments() {
            let z = -0.5 * d.length() + s as f64 * d.segment_length();
            let values = (0..c.k())
                .map(|j| {
                    let col = c.currents_c.column(j);
                    basis.evaluate(&col.as_slice()[offset..offset + basis.count], z)
                })
                .collect();
            samples.push((i, z, values));
        }
        offset += basis.count;
    }
    let peaks: Vec<f64> = (0..c.k())
        .map(|j| samples.iter().fold(0.0f64, |m, s| m.max(s.2[j].abs())))
        .collect();
    let mut t = Table::new(["element".to_string(), "z".to_string()].into_iter().chain(c.labels()));
    for (i, z, values) in samples {
        let scaled: Vec<f64> = std::iter::once(z)
            .chain(values.iter().zip(&peaks).map(|(v, p)| if *p > 0.0 { v / p } else { 0.0 }))
            .collect();
        t.push(row([element_label(i)], &scaled));
    }
    t
}

pub fn perturbation_table(c: &CoupledResult) -> Table {
    let mut t = Table::new(["element", "mode", "lambda_isolated", "lambda_c", "delta_lambda"]);
    for p in perturbation(c) {
        t.push(row(
            [element_label(p.element), (p.mode + 1).to_string()],
            &[p.lambda_isolated, p.lambda_c, p.delta_lambda],
        ));
    }
    t
}

pub fn pairs_table(c: &CoupledResult, threshold: f64) -> Result<Table, Failure> {
    let pairs = select_coupled_pairs(&c.power, threshold)
        .map_err(|e| Failure::module(format!("pair selection: {e}")))?;
    let off = c.power.offsets();
    let mut t = Table::new(["mode_i", "mode_j", "p_r", "p_x"]);
    for p in pairs {
        let (i, j) = (off[p.block_i] + p.mode_i, off[p.block_j] + p.mode_j);
        t.push(row(
            [
                format!("{}{}", element_label(p.block_i), p.mode_i + 1),
                format!("{}{}", element_label(p.block_j), p.mode_j + 1),
            ],
            &[c.power.p_rc.get(i, j), c.power.p_xc.get(i, j)],
        ));
    }
    Ok(t)
}

/// Files written by [`run`] and the validation verdict, if requested.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub written: Vec<PathBuf>,
    pub validation: Option<ValidationReport>,
}

/// Runs every configured analysis, writing its CSV files into `out`.
pub fn run(cfg: &RunConfig, out: &Path, tolerances: Tolerances) -> Result<RunOutcome, Failure> {
    let mut outcome = RunOutcome {
        written: Vec::new(),
        validation: None,
    };
    if cfg.analyses.is_empty() {
        return Ok(outcome);
    }
    let couple = cfg.analyses.iter().any(|&a| a != Analysis::Isolated);
    let study = study(cfg, couple)?;

    let mut tables: Vec<(&str, Table)> = Vec::new();
    if cfg.wants(Analysis::Isolated) {
        tables.push(("isolated_modes.csv", isolated_table(&study.isolated)));
    }
    if let Some(c) = &study.coupled {
        if cfg.wants(Analysis::Coupled) {
            let labels = isolated_labels(&c.coupling.block_sizes);
            tables.push(("coupled_eigs.csv", coupled_eigs_table(c)));
            tables.push(("coupling_matrix.csv", coupling_table(c, cfg.thresholds.sign_match, &labels)?));
            tables.push(("mode_currents.csv", currents_table(c, &study.layout)));
        }
        if cfg.wants(Analysis::Perturbation) {
            tables.push(("perturbation.csv", perturbation_table(c)));
        }
        if cfg.wants(Analysis::Pairs) {
            tables.push(("coupled_pairs.csv", pairs_table(c, cfg.thresholds.pair_select)?));
        }
        if cfg.wants(Analysis::Validate) {
            let report = validate(c, &study.blocks, tolerances)?;
            tables.push(("validation.csv", report.table()));
            outcome.validation = Some(report);
        }
    }

    std::fs::create_dir_all(out)
        .map_err(|e| Failure::module(format!("creating {}: {e}", out.display())))?;
    for (name, table) in tables {
        let path = out.join(name);
        table.write(&path)?;
        outcome.written.push(path);
    }
    Ok(outcome)
}
