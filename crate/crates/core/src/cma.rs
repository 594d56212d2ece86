//! Characteristic modes of a single body restricted to its `k` dominant modes,
//! with modal powers, modal excitation and modal-superposition solutions of
//! `Z I = V`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

/// The `k` dominant characteristic modes of one body.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    lambdas: Vec<f64>,
    currents: DMatrix<f64>,
    p_r: Vec<f64>,
    p_x: Vec<f64>,
    shift: f64,
}

impl ModeSet {
    /// Assembles a mode set from precomputed parts. `p_r` and `p_x` are
    /// recomputed from `r` and `x`.
    pub fn from_currents(
        lambdas: Vec<f64>,
        currents: DMatrix<f64>,
        r: &SymMatrix,
        x: &SymMatrix,
    ) -> Result<Self> {
        if lambdas.len() != currents.ncols() {
            return Err(Error::DimensionMismatch {
                expected: currents.ncols(),
                found: lambdas.len(),
            });
        }
        let p_r = linalg::congruence(&currents, r)?.diagonal();
        let p_x = linalg::congruence(&currents, x)?.diagonal();
        Ok(Self {
            lambdas,
            currents,
            p_r,
            p_x,
            shift: 0.0,
        })
    }

    /// Retained mode count.
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    /// Basis dimension of the body.
    pub fn n(&self) -> usize {
        self.currents.nrows()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Eigencurrents, one per column.
    pub fn currents(&self) -> &DMatrix<f64> {
        &self.currents
    }

    pub fn p_r(&self) -> &[f64] {
        &self.p_r
    }

    pub fn p_x(&self) -> &[f64] {
        &self.p_x
    }

    /// Diagonal shift the radiation matrix needed before it would factor.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// The first `k` modes.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::KTooLarge {
                requested: k,
                available: self.k(),
            });
        }
        Ok(Self {
            lambdas: self.lambdas[..k].to_vec(),
            currents: self.currents.columns(0, k).into_owned(),
            p_r: self.p_r[..k].to_vec(),
            p_x: self.p_x[..k].to_vec(),
            shift: self.shift,
        })
    }

    /// The modes at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("empty mode selection".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.k()) {
            return Err(Error::KTooLarge {
                requested: bad + 1,
                available: self.k(),
            });
        }
        Ok(Self {
            lambdas: indices.iter().map(|&i| self.lambdas[i]).collect(),
            currents: self.currents.select_columns(indices),
            p_r: indices.iter().map(|&i| self.p_r[i]).collect(),
            p_x: indices.iter().map(|&i| self.p_x[i]).collect(),
            shift: self.shift,
        })
    }

    /// Largest `|p_x − λ p_r| / |p_x|` over the retained modes.
    pub fn power_ratio_error(&self) -> f64 {
        self.p_x
            .iter()
            .zip(&self.p_r)
            .zip(&self.lambdas)
            .map(|((px, pr), lam)| {
                let scale = px.abs().max(lam.abs() * pr.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (px - lam * pr).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|I_iᵀ R I_j| / sqrt(p_r[i] p_r[j])` for `i ≠ j`.
    pub fn r_orthogonality_error(&self, r: &SymMatrix) -> Result<f64> {
        Ok(linalg::shifted_congruence(&self.currents, r, self.shift)?.max_relative_off_diagonal())
    }
}

/// The `k` smallest-`|λ|` characteristic modes of `X I = λ R I`.
pub fn isolated_modes(r: &SymMatrix, x: &SymMatrix, k: usize) -> Result<ModeSet> {
    if k == 0 || k > r.n() {
        return Err(Error::KTooLarge {
            requested: k,
            available: r.n(),
        });
    }
    let gep = linalg::generalized_eig(x, r, 0.0)?;
    let currents = gep.vectors.columns(0, k).into_owned();
    let p_r = linalg::shifted_congruence(&currents, r, gep.shift)?.diagonal();
    let p_x = linalg::congruence(&currents, x)?.diagonal();
    Ok(ModeSet {
        lambdas: gep.lambdas[..k].to_vec(),
        currents,
        p_r,
        p_x,
        shift: gep.shift,
    })
}

fn check_len(modes: &ModeSet, v: &[Complex64]) -> Result<()> {
    if v.len() != modes.n() {
        return Err(Error::DimensionMismatch {
            expected: modes.n(),
            found: v.len(),
        });
    }
    Ok(())
}

/// `e_n = I_nᵀ V`.
pub fn modal_excitation(modes: &ModeSet, v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(modes, v)?;
    Ok((0..modes.k())
        .map(|n| {
            modes
                .currents
                .column(n)
                .iter()
                .zip(v)
                .map(|(i, vi)| vi * *i)
                .sum()
        })
        .collect())
}

/// Weighting coefficients and reconstructed current of a modal solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSolution {
    pub alpha: Vec<Complex64>,
    pub excitation: Vec<Complex64>,
    pub current: Vec<Complex64>,
}

/// Solves `Z I = V` by modal superposition over the retained modes:
/// `α_n = e_n / (p_r,n (1 + jλ_n))`, `I = Σ α_n I_n`.
pub fn modal_solve(modes: &ModeSet, v: &[Complex64]) -> Result<ModalSolution> {
    let excitation = modal_excitation(modes, v)?;
    let mut alpha = Vec::with_capacity(modes.k());
    for (n, e) in excitation.iter().enumerate() {
        let p_r = modes.p_r[n];
        if !(p_r > 0.0) {
            return Err(Error::SingularModalPower { mode: n, p_r });
        }
        alpha.push(e / (p_r * Complex64::new(1.0, modes.lambdas[n])));
    }
    let current = (0..modes.n())
        .map(|row| {
            alpha
                .iter()
                .enumerate()
                .map(|(n, a)| a * modes.currents[(row, n)])
                .sum()
        })
        .collect();
    Ok(ModalSolution {
        alpha,
        excitation,
        current,
    })
}

/// Direct dense solve of `(R + jX) I = V`.
pub fn direct_solve(r: &SymMatrix, x: &SymMatrix, v: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = r.n();
    if x.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.n(),
        });
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let z = DMatrix::from_fn(n, n, |i, j| Complex64::new(r.get(i, j), x.get(i, j)));
    let rhs = DVector::from_column_slice(v);
    let sol = z.lu().solve(&rhs).ok_or(Error::ConvergenceFailure)?;
    Ok(sol.iter().copied().collect())
}
