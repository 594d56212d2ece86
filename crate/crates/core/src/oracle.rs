//! Brute-force reference: the dense coupled eigenproblem on the whole array,
//! and the metrics comparing subspace predictions against it.

use nalgebra::{DMatrix, DVector};

use crate::cma::{self, ModeSet};
use crate::coupled::CoupledResult;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mom::BlockImpedance;

/// Below this similarity a subspace mode is considered to have no partner.
pub const MIN_MATCH_SIMILARITY: f64 = 0.5;

/// The `k` dominant modes of the full coupled system `X^c I = λ R^c I`.
pub fn full_coupled_modes(blocks: &BlockImpedance, k: usize) -> Result<ModeSet> {
    let (r, x) = blocks.full()?;
    cma::isolated_modes(&r, &x, k)
}

/// Pairing of subspace modes with full-space modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMatch {
    /// `(subspace mode, full mode)`, in subspace order.
    pub pairs: Vec<(usize, usize)>,
    pub eig_rel_err: Vec<f64>,
    pub current_similarity: Vec<f64>,
}

impl ModeMatch {
    pub fn max_eig_rel_err(&self) -> f64 {
        self.eig_rel_err.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_similarity(&self) -> f64 {
        self.current_similarity.iter().copied().fold(1.0, f64::min)
    }

    pub fn mean_similarity(&self) -> f64 {
        if self.current_similarity.is_empty() {
            return 1.0;
        }
        self.current_similarity.iter().sum::<f64>() / self.current_similarity.len() as f64
    }
}

/// `|aᵀ R b| / sqrt(aᵀ R a · bᵀ R b)`, clamped to `[0, 1]`. The quadratic
/// forms are accumulated in extended precision, since higher-order modes
/// carry radiated powers far below the rounding level of `R`.
pub fn r_cosine(r: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let mut ab = DMatrix::zeros(a.len(), 2);
    ab.set_column(0, a);
    ab.set_column(1, b);
    let g = linalg::bilinear(&ab, r, &ab).expect("vectors sized to R");
    let denom = (g[(0, 0)] * g[(1, 1)]).sqrt();
    if !(denom > 0.0) {
        return 0.0;
    }
    (g[(0, 1)].abs() / denom).min(1.0)
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Greedily pairs every subspace mode with the full mode of highest
/// `R^c`-cosine, best pairs first; equal cosines go to the closer eigenvalue.
///
/// `blocks` must be the pencil both results were computed from. Fails with
/// [`Error::AmbiguousMatch`] for a subspace mode whose best remaining
/// partner falls below [`MIN_MATCH_SIMILARITY`].
pub fn match_modes(
    subspace: &CoupledResult,
    full: &ModeSet,
    blocks: &BlockImpedance,
) -> Result<ModeMatch> {
    let (r, _) = blocks.full()?;
    let n = r.n();
    if subspace.currents_c.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: subspace.currents_c.nrows(),
        });
    }
    if full.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: full.n(),
        });
    }
    let ks = subspace.k();
    if full.k() < ks {
        return Err(Error::KTooLarge {
            requested: ks,
            available: full.k(),
        });
    }
    let (r, shift) = (r.as_matrix(), full.shift());

    let s = &subspace.currents_c;
    let f = full.currents();
    let cross = linalg::shifted_bilinear(s, r, shift, f)?;
    let s_norm = linalg::shifted_bilinear(s, r, shift, s)?.diagonal();
    let f_norm = linalg::shifted_bilinear(f, r, shift, f)?.diagonal();
    let cos = DMatrix::from_fn(ks, full.k(), |i, j| {
        let denom = (s_norm[i] * f_norm[j]).sqrt();
        if denom > 0.0 {
            (cross[(i, j)].abs() / denom).min(1.0)
        } else {
            0.0
        }
    });

    let mut partner: Vec<Option<usize>> = vec![None; ks];
    let mut taken = vec![false; full.k()];
    for _ in 0..ks {
        let mut best: Option<(usize, usize)> = None;
        for i in (0..ks).filter(|&i| partner[i].is_none()) {
            for j in (0..full.k()).filter(|&j| !taken[j]) {
                let better = match best {
                    None => true,
                    Some((bi, bj)) => {
                        let (c, bc) = (cos[(i, j)], cos[(bi, bj)]);
                        c > bc
                            || (c == bc
                                && rel_err(subspace.lambdas_c[i], full.lambdas()[j])
                                    < rel_err(subspace.lambdas_c[bi], full.lambdas()[bj]))
                    }
                };
                if better {
                    best = Some((i, j));
                }
            }
        }
        let (i, j) = best.expect("unmatched modes remain");
        if cos[(i, j)] < MIN_MATCH_SIMILARITY {
            return Err(Error::AmbiguousMatch {
                mode: i,
                similarity: cos[(i, j)],
            });
        }
        partner[i] = Some(j);
        taken[j] = true;
    }

    let pairs: Vec<(usize, usize)> = partner
        .into_iter()
        .enumerate()
        .map(|(i, j)| (i, j.expect("every mode matched")))
        .collect();
    Ok(ModeMatch {
        eig_rel_err: pairs
            .iter()
            .map(|&(i, j)| rel_err(subspace.lambdas_c[i], full.lambdas()[j]))
            .collect(),
        current_similarity: pairs.iter().map(|&(i, j)| cos[(i, j)]).collect(),
        pairs,
    })
}
