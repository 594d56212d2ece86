//! Coupled characteristic modes by projection onto isolated-mode subspaces.
//!
//! Each element `i` contributes its `k_i` dominant isolated eigencurrents
//! `I_i`. Stacking them block-diagonally gives `I^uc`, and the coupled modes
//! are sought as `I^c = I^uc M`. Projecting the coupled characteristic
//! equation onto `I^uc` gives the reduced `k × k` problem
//!
//! ```text
//! P_Xc M = P_Rc M Λ^c,   P_{R,ij} = I_iᵀ R_ij I_j,   P_{X,ij} = I_iᵀ X_ij I_j,
//! ```
//!
//! whose eigenvectors form the modal coupling matrix `M`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::cma::{self, ModeSet};
use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};
use crate::mom::BlockImpedance;

/// Relative threshold standing in for "nonzero" in pair selection.
pub const DEFAULT_PAIR_THRESHOLD: f64 = 1e-4;

/// Relative tolerance under which two blocks' contributions to a coupled
/// mode count as equal for association.
pub const ASSOCIATION_TIE_TOLERANCE: f64 = 1e-6;

/// Peak magnitude of a display-normalized coupling column.
pub const DISPLAY_PEAK: f64 = 1000.0;

/// Reduced modal power matrices of a coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPower {
    pub block_sizes: Vec<usize>,
    pub p_rc: SymMatrix,
    pub p_xc: SymMatrix,
}

impl BlockPower {
    pub fn offsets(&self) -> Vec<usize> {
        offsets(&self.block_sizes)
    }

    /// Off-diagonal block `(i, j)` of `P_Rc` and `P_Xc`.
    pub fn block(&self, i: usize, j: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let off = self.offsets();
        let shape = (self.block_sizes[i], self.block_sizes[j]);
        (
            self.p_rc.as_matrix().view((off[i], off[j]), shape).into_owned(),
            self.p_xc.as_matrix().view((off[i], off[j]), shape).into_owned(),
        )
    }

    /// Largest relative off-diagonal entry inside any diagonal block.
    pub fn diagonal_block_error(&self) -> f64 {
        let off = self.offsets();
        let mut worst: f64 = 0.0;
        for (b, &size) in self.block_sizes.iter().enumerate() {
            for m in [&self.p_rc, &self.p_xc] {
                for i in 0..size {
                    for j in 0..size {
                        if i == j {
                            continue;
                        }
                        let (gi, gj) = (off[b] + i, off[b] + j);
                        let scale = (m.get(gi, gi).abs() * m.get(gj, gj).abs()).sqrt();
                        let v = m.get(gi, gj).abs();
                        worst = worst.max(if scale > 0.0 { v / scale } else { v });
                    }
                }
            }
        }
        worst
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect()
}

fn check_modes(isolated: &[ModeSet], blocks: &BlockImpedance) -> Result<()> {
    if isolated.len() != blocks.element_count() {
        return Err(Error::DimensionMismatch {
            expected: blocks.element_count(),
            found: isolated.len(),
        });
    }
    for (modes, size) in isolated.iter().zip(blocks.sizes()) {
        if modes.n() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                found: modes.n(),
            });
        }
    }
    Ok(())
}

/// `I_iᵀ R_ij I_j`, where self blocks carry the shift their isolated solve used.
fn radiation_power(isolated: &[ModeSet], blocks: &BlockImpedance, i: usize, j: usize) -> Result<DMatrix<f64>> {
    let shift = if i == j { isolated[i].shift() } else { 0.0 };
    let r = blocks.block(i, j).r;
    linalg::shifted_bilinear(isolated[i].currents(), &r, shift, isolated[j].currents())
}

/// `P_Rc` and `P_Xc` as congruences of the block-diagonal isolated currents
/// with the full block `R^c` and `X^c`.
pub fn block_power(isolated: &[ModeSet], blocks: &BlockImpedance) -> Result<BlockPower> {
    check_modes(isolated, blocks)?;
    let sizes: Vec<usize> = isolated.iter().map(ModeSet::k).collect();
    let off = offsets(&sizes);
    let k: usize = sizes.iter().sum();
    let mut p_r = DMatrix::zeros(k, k);
    let mut p_x = DMatrix::zeros(k, k);
    for i in 0..isolated.len() {
        for j in i..isolated.len() {
            let z = blocks.block(i, j);
            let (vi, vj) = (isolated[i].currents(), isolated[j].currents());
            let pr = radiation_power(isolated, blocks, i, j)?;
            let px = linalg::bilinear(vi, &z.x, vj)?;
            p_r.view_mut((off[i], off[j]), (sizes[i], sizes[j])).copy_from(&pr);
            p_x.view_mut((off[i], off[j]), (sizes[i], sizes[j])).copy_from(&px);
            if i != j {
                p_r.view_mut((off[j], off[i]), (sizes[j], sizes[i]))
                    .copy_from(&pr.transpose());
                p_x.view_mut((off[j], off[i]), (sizes[j], sizes[i]))
                    .copy_from(&px.transpose());
            }
        }
    }
    Ok(BlockPower {
        block_sizes: sizes,
        p_rc: SymMatrix::from_matrix(p_r)?,
        p_xc: SymMatrix::from_matrix(p_x)?,
    })
}

/// One isolated-mode pair flagged as coupled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ModePair {
    pub block_i: usize,
    pub mode_i: usize,
    pub block_j: usize,
    pub mode_j: usize,
}

/// Isolated-mode pairs `(i, p) × (j, q)`, `i < j`, whose cross power
/// `max(|P_R,ij(p, q)|, |P_X,ij(p, q)|)` reaches `threshold` times the largest
/// such value in the same off-diagonal block.
pub fn select_coupled_pairs(bp: &BlockPower, threshold: f64) -> Result<Vec<ModePair>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pair threshold {threshold} must lie in (0, 1)"
        )));
    }
    let mut pairs = Vec::new();
    let n = bp.block_sizes.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let (pr, px) = bp.block(i, j);
            let mag = pr.zip_map(&px, |a, b| a.abs().max(b.abs()));
            let peak = mag.max();
            if peak <= 0.0 {
                continue;
            }
            for p in 0..mag.nrows() {
                for q in 0..mag.ncols() {
                    if mag[(p, q)] >= threshold * peak {
                        pairs.push(ModePair {
                            block_i: i,
                            mode_i: p,
                            block_j: j,
                            mode_j: q,
                        });
                    }
                }
            }
        }
    }
    Ok(pairs)
}

/// Modal coupling matrix; column `j` expresses coupled mode `j` in isolated
/// mode coordinates, rows grouped by element.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub block_sizes: Vec<usize>,
    pub m: DMatrix<f64>,
    pub display_m: DMatrix<f64>,
}

/// Scales each column so its peak magnitude is exactly [`DISPLAY_PEAK`] and
/// its first peak entry is positive.
pub fn normalize_display(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    normalize_display_tied(m, 0.0)
}

/// Like [`normalize_display`], but entries within `tie` (relative) of the
/// column peak count as peaks too, and the topmost of them becomes `+1000`.
/// Keeps the sign of even/odd columns, whose two peaks agree only to
/// rounding, independent of that rounding.
pub fn normalize_display_tied(m: &DMatrix<f64>, tie: f64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&tie) {
        return Err(Error::InvalidArgument(format!("tie tolerance {tie} outside [0, 1)")));
    }
    let mut out = m.clone();
    for (c, mut col) in out.column_iter_mut().enumerate() {
        let peak = col.amax();
        if peak == 0.0 || !peak.is_finite() {
            return Err(Error::ZeroColumn(c));
        }
        let at = col
            .iter()
            .position(|v| v.abs() >= peak * (1.0 - tie))
            .expect("the peak itself qualifies");
        let scale = DISPLAY_PEAK / col[at];
        for v in col.iter_mut() {
            *v = (*v * scale).clamp(-DISPLAY_PEAK, DISPLAY_PEAK);
        }
        col[at] = DISPLAY_PEAK;
    }
    Ok(out)
}

/// Coupled characteristic modes of an array.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledResult {
    /// Coupled eigenvalues, ascending in magnitude.
    pub lambdas_c: Vec<f64>,
    pub coupling: CouplingMatrix,
    /// `blockdiag(I_1 … I_N) M`, one coupled current per column.
    pub currents_c: DMatrix<f64>,
    /// Element each coupled mode is associated with.
    pub association: Vec<usize>,
    pub uncoupled: Vec<ModeSet>,
    pub power: BlockPower,
}

impl CoupledResult {
    pub fn k(&self) -> usize {
        self.lambdas_c.len()
    }

    /// Rank (0-based) of every mode within its association group.
    pub fn ranks(&self) -> Vec<usize> {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        self.association
            .iter()
            .map(|a| {
                let r = seen.entry(*a).or_insert(0);
                *r += 1;
                *r - 1
            })
            .collect()
    }

    /// Labels like `A1`, `B3`: element letter and 1-based rank.
    pub fn labels(&self) -> Vec<String> {
        self.association
            .iter()
            .zip(self.ranks())
            .map(|(&a, r)| format!("{}{}", element_label(a), r + 1))
            .collect()
    }

    /// Coupled eigenvalues associated with `element`, ascending in magnitude.
    pub fn lambdas_for(&self, element: usize) -> Vec<f64> {
        self.lambdas_c
            .iter()
            .zip(&self.association)
            .filter(|(_, &a)| a == element)
            .map(|(l, _)| *l)
            .collect()
    }

    /// `‖P_Xc m − λ P_Rc m‖ / ((‖P_Xc‖_F + |λ| ‖P_Rc‖_F) ‖m‖)` per column.
    pub fn reduced_residuals(&self) -> Vec<f64> {
        let (px, pr) = (&self.power.p_xc, &self.power.p_rc);
        let (xf, rf) = (px.frobenius_norm(), pr.frobenius_norm());
        (0..self.k())
            .map(|j| {
                let m = self.coupling.m.column(j);
                let lam = self.lambdas_c[j];
                let res = px.as_matrix() * m - pr.as_matrix() * m * lam;
                res.norm() / ((xf + lam.abs() * rf) * m.norm())
            })
            .collect()
    }
}

/// `A`, `B`, … for the first 26 elements, then `E27`, `E28`, ….
pub fn element_label(element: usize) -> String {
    if element < 26 {
        char::from(b'A' + element as u8).to_string()
    } else {
        format!("E{}", element + 1)
    }
}

/// Block-diagonal stack of the isolated currents.
pub fn uncoupled_basis(isolated: &[ModeSet]) -> DMatrix<f64> {
    let rows: usize = isolated.iter().map(ModeSet::n).sum();
    let cols: usize = isolated.iter().map(ModeSet::k).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for m in isolated {
        out.view_mut((r0, c0), (m.n(), m.k())).copy_from(m.currents());
        r0 += m.n();
        c0 += m.k();
    }
    out
}

/// Assigns each coupled mode to the element holding the largest coefficient
/// of its coupling column. When several elements tie (within
/// [`ASSOCIATION_TIE_TOLERANCE`]), modes sharing the same tied set are
/// handed out in ascending `|λ^c|` order, first element first.
fn associate(m: &DMatrix<f64>, sizes: &[usize], lambdas: &[f64]) -> Vec<usize> {
    let off = offsets(sizes);
    let mut association = vec![0; m.ncols()];
    let mut ties: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for j in 0..m.ncols() {
        let col = m.column(j);
        let peaks: Vec<f64> = sizes
            .iter()
            .zip(&off)
            .map(|(&s, &o)| col.rows(o, s).amax())
            .collect();
        let top = peaks.iter().copied().fold(0.0, f64::max);
        let candidates: Vec<usize> = peaks
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= top * (1.0 - ASSOCIATION_TIE_TOLERANCE))
            .map(|(i, _)| i)
            .collect();
        if candidates.len() == 1 {
            association[j] = candidates[0];
        } else {
            ties.entry(candidates).or_default().push(j);
        }
    }
    for (candidates, mut cols) in ties {
        cols.sort_by(|&a, &b| {
            lambdas[a]
                .abs()
                .total_cmp(&lambdas[b].abs())
                .then(lambdas[a].total_cmp(&lambdas[b]))
                .then(a.cmp(&b))
        });
        for (n, j) in cols.into_iter().enumerate() {
            association[j] = candidates[n % candidates.len()];
        }
    }
    association
}

fn solve_reduced(isolated: &[ModeSet], power: BlockPower) -> Result<CoupledResult> {
    let threshold = -linalg::PSD_TOLERANCE * power.p_rc.frobenius_norm();
    let min_eig = power.p_rc.min_eigenvalue()?;
    if min_eig < threshold {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min_eig,
            threshold,
        });
    }
    let gep = linalg::generalized_eig(&power.p_xc, &power.p_rc, 0.0)?;
    let m = gep.vectors;
    let association = associate(&m, &power.block_sizes, &gep.lambdas);
    let currents_c = uncoupled_basis(isolated) * &m;
    let display_m = normalize_display(&m)?;
    Ok(CoupledResult {
        lambdas_c: gep.lambdas,
        coupling: CouplingMatrix {
            block_sizes: power.block_sizes.clone(),
            m,
            display_m,
        },
        currents_c,
        association,
        uncoupled: isolated.to_vec(),
        power,
    })
}

/// Coupled modes of a two-element array from `k` modes of `a` and `l` of `b`.
pub fn couple_two(a: &ModeSet, b: &ModeSet, blocks: &BlockImpedance) -> Result<CoupledResult> {
    if blocks.element_count() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: blocks.element_count(),
        });
    }
    let isolated = [a.clone(), b.clone()];
    check_modes(&isolated, blocks)?;

    // P_Zc = I_ucᵀ Z^c I_uc, written out per block
    let (ia, ib) = (a.currents(), b.currents());
    let z_ab = blocks.block(0, 1);
    let p_r_aa = radiation_power(&isolated, blocks, 0, 0)?;
    let p_x_aa = linalg::bilinear(ia, &blocks.block(0, 0).x, ia)?;
    let p_r_ab = linalg::bilinear(ia, &z_ab.r, ib)?;
    let p_x_ab = linalg::bilinear(ia, &z_ab.x, ib)?;
    let p_r_bb = radiation_power(&isolated, blocks, 1, 1)?;
    let p_x_bb = linalg::bilinear(ib, &blocks.block(1, 1).x, ib)?;

    let (k, l) = (a.k(), b.k());
    let stack = |aa: &DMatrix<f64>, ab: &DMatrix<f64>, bb: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(k + l, k + l);
        out.view_mut((0, 0), (k, k)).copy_from(aa);
        out.view_mut((0, k), (k, l)).copy_from(ab);
        out.view_mut((k, 0), (l, k)).copy_from(&ab.transpose());
        out.view_mut((k, k), (l, l)).copy_from(bb);
        out
    };
    let power = BlockPower {
        block_sizes: vec![k, l],
        p_rc: SymMatrix::from_matrix(stack(&p_r_aa, &p_r_ab, &p_r_bb))?,
        p_xc: SymMatrix::from_matrix(stack(&p_x_aa, &p_x_ab, &p_x_bb))?,
    };
    solve_reduced(&isolated, power)
}

/// Coupled modes of an `N`-element array from the retained modes of each element.
pub fn couple_n(isolated: &[ModeSet], blocks: &BlockImpedance) -> Result<CoupledResult> {
    if isolated.len() < 2 {
        return Err(Error::InvalidArgument(
            "coupling needs at least two elements".into(),
        ));
    }
    let power = block_power(isolated, blocks)?;
    solve_reduced(isolated, power)
}

/// Isolated modes of every element of `blocks`, keeping `retained[i]` modes
/// of element `i`.
pub fn isolated_sets(blocks: &BlockImpedance, retained: &[usize]) -> Result<Vec<ModeSet>> {
    if retained.len() != blocks.element_count() {
        return Err(Error::DimensionMismatch {
            expected: blocks.element_count(),
            found: retained.len(),
        });
    }
    retained
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (r, x) = blocks.self_block(i);
            cma::isolated_modes(r, x, k)
        })
        .collect()
}

/// Regularizes the array once, then runs isolated analysis and
/// [`couple_n`] on the shared pencil. Returns the regularized blocks too,
/// so oracle comparisons can use the same pencil.
pub fn couple_array(
    blocks: &BlockImpedance,
    retained: &[usize],
) -> Result<(CoupledResult, BlockImpedance)> {
    let (blocks, _) = blocks.regularized()?;
    let isolated = isolated_sets(&blocks, retained)?;
    Ok((couple_n(&isolated, &blocks)?, blocks))
}

/// Eigenvalue shift of one coupled mode relative to its isolated partner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub element: usize,
    /// 0-based rank within the association group.
    pub mode: usize,
    pub lambda_c: f64,
    pub lambda_isolated: f64,
    pub delta_lambda: f64,
}

/// `δλ = |λ^c − λ|` for each coupled mode, pairing the `r`-th mode of an
/// association group with the `r`-th isolated mode of that element. Modes
/// ranked beyond the element's retained count have no partner and are left out.
pub fn perturbation(coupled: &CoupledResult) -> Vec<Perturbation> {
    coupled
        .association
        .iter()
        .zip(coupled.ranks())
        .zip(&coupled.lambdas_c)
        .filter_map(|((&element, mode), &lambda_c)| {
            let iso = coupled.uncoupled.get(element)?.lambdas().get(mode).copied()?;
            Some(Perturbation {
                element,
                mode,
                lambda_c,
                lambda_isolated: iso,
                delta_lambda: (lambda_c - iso).abs(),
            })
        })
        .collect()
}
