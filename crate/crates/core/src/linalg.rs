//! Dense real symmetric linear algebra and the generalized symmetric-definite
//! eigensolver used for every characteristic mode computation.
//!
//! The pencil `X v = λ R v` (with `R` positive semidefinite) is reduced to a
//! standard symmetric problem through a Cholesky factor of `R`. Radiation
//! matrices of small antennas are numerically singular, with eigenvalues
//! spanning many decades, so every step of the reduction runs in
//! double-double arithmetic. When `R` does not factor at all the
//! factorization is taken of `R + δI` and the shift is recorded on the result.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::extended;

/// Relative threshold under which an eigenvalue of `R` counts as negative.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// Default regularization scale, multiplied by `trace(R) / n`.
pub const DEFAULT_SHIFT_SCALE: f64 = 1e-12;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// Real symmetric dense matrix.
///
/// Symmetry is enforced at construction by averaging the input with its
/// transpose, so `get(i, j) == get(j, i)` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from `n * n` row-major entries.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(n, n, entries))
    }

    /// Symmetrizes a square matrix by averaging it with its transpose.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let n = m.nrows();
        let mut inner = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (inner[(i, j)] + inner[(j, i)]);
                inner[(i, j)] = avg;
                inner[(j, i)] = avg;
            }
        }
        Ok(Self { inner })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            diag,
        )))
    }

    pub fn n(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal().iter().copied().collect()
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = SymmetricEigen::try_new(self.inner.clone(), EIG_EPS, EIG_MAX_ITER)
            .ok_or(Error::ConvergenceFailure)?;
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Largest off-diagonal magnitude relative to `sqrt(|a_ii| |a_jj|)`.
    pub fn max_relative_off_diagonal(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let scale = (self.get(i, i).abs() * self.get(j, j).abs()).sqrt();
                let off = self.get(i, j).abs();
                let rel = if scale > 0.0 { off / scale } else if off == 0.0 { 0.0 } else { f64::INFINITY };
                worst = worst.max(rel);
            }
        }
        worst
    }
}

/// Eigenpairs of the pencil `X v = λ R v`.
#[derive(Debug, Clone)]
pub struct GepResult {
    /// Eigenvalues sorted by ascending magnitude.
    pub lambdas: Vec<f64>,
    /// Unit-norm eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
    /// `v_iᵀ R v_i`, the modal radiated powers.
    pub rnorms: Vec<f64>,
    /// Diagonal shift added to `R` before factoring; zero when none was needed.
    pub shift: f64,
}

impl GepResult {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `R + shift·I`.
    pub fn solved_r(&self, r: &SymMatrix) -> SymMatrix {
        if self.shift == 0.0 {
            return r.clone();
        }
        let n = r.n();
        SymMatrix::from_matrix(r.as_matrix() + DMatrix::identity(n, n) * self.shift)
            .expect("shifted matrix stays finite")
    }

    /// `‖X v_i − λ_i R' v_i‖₂ / ((‖X‖_F + |λ_i| ‖R'‖_F) ‖v_i‖₂)` for each
    /// pair, where `R' = R + shift·I` is the pencil actually solved.
    pub fn scaled_residuals(&self, x: &SymMatrix, r: &SymMatrix) -> Vec<f64> {
        let r = self.solved_r(r);
        let (xf, rf) = (x.frobenius_norm(), r.frobenius_norm());
        (0..self.len())
            .map(|i| {
                let v = self.vectors.column(i);
                let lam = self.lambdas[i];
                let res = x.as_matrix() * v - r.as_matrix() * v * lam;
                res.norm() / ((xf + lam.abs() * rf) * v.norm())
            })
            .collect()
    }
}

/// Solves the generalized symmetric-definite eigenproblem `X v = λ R v`.
///
/// `R` must be positive semidefinite. The problem is reduced with the
/// Cholesky factor of `R`; the factorization, the reduction and the
/// symmetric eigensolve run in double-double arithmetic so that eigenpairs
/// stay accurate however badly `R` is conditioned. If `R` does not factor,
/// `R + δI` is factored instead with `δ = regularization` when positive and
/// `DEFAULT_SHIFT_SCALE * trace(R) / n` otherwise, grown tenfold until the
/// factorization succeeds. Reported `rnorms` and residuals then refer to the
/// shifted pencil.
pub fn generalized_eig(x: &SymMatrix, r: &SymMatrix, regularization: f64) -> Result<GepResult> {
    let n = r.n();
    if x.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.n(),
        });
    }

    let r_min = r.min_eigenvalue()?;
    let threshold = -PSD_TOLERANCE * r.frobenius_norm();
    if r_min < threshold {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: r_min,
            threshold,
        });
    }

    let (l, shift) = match extended::cholesky(r.as_matrix(), 0.0) {
        Some(l) => (l, 0.0),
        None => shifted_cholesky(r, regularization).ok_or(Error::NotPositiveSemidefinite {
            min_eigenvalue: r_min,
            threshold,
        })?,
    };
    let (raw_lambdas, raw_vectors) =
        extended::reduced_eig(x.as_matrix(), &l).ok_or(Error::ConvergenceFailure)?;

    let mut pairs: Vec<(f64, nalgebra::DVector<f64>)> = (0..n)
        .map(|i| {
            let mut v = raw_vectors.column(i).into_owned();
            let norm = v.norm();
            v /= norm;
            fix_sign(&mut v);
            (raw_lambdas[i], v)
        })
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        la.abs()
            .total_cmp(&lb.abs())
            .then(la.total_cmp(lb))
            .then_with(|| first_nonzero(va).total_cmp(&first_nonzero(vb)).reverse())
    });

    let mut vectors = DMatrix::zeros(n, n);
    let mut lambdas = Vec::with_capacity(n);
    for (j, (lam, v)) in pairs.into_iter().enumerate() {
        vectors.set_column(j, &v);
        lambdas.push(lam);
    }
    let rnorms = extended::shifted_bilinear(&vectors, r.as_matrix(), shift, &vectors)
        .diagonal()
        .iter()
        .copied()
        .collect();

    Ok(GepResult {
        lambdas,
        vectors,
        rnorms,
        shift,
    })
}

/// Whether `R` admits a Cholesky factorization as is.
pub fn is_factorable(r: &SymMatrix) -> bool {
    extended::cholesky(r.as_matrix(), 0.0).is_some()
}

/// Smallest shift `δ` (starting from `regularization`, or the default scale
/// when that is not positive, and growing tenfold) for which `R + δI` factors.
pub fn regularizing_shift(r: &SymMatrix, regularization: f64) -> Option<f64> {
    shifted_cholesky(r, regularization).map(|(_, s)| s)
}

fn shifted_cholesky(r: &SymMatrix, regularization: f64) -> Option<(extended::DdMatrix, f64)> {
    let n = r.n();
    let mut shift = if regularization > 0.0 {
        regularization
    } else {
        DEFAULT_SHIFT_SCALE * r.trace().abs() / n as f64
    };
    if shift <= 0.0 {
        shift = f64::MIN_POSITIVE.sqrt();
    }
    for _ in 0..40 {
        if let Some(l) = extended::cholesky(r.as_matrix(), shift) {
            return Some((l, shift));
        }
        shift *= 10.0;
    }
    None
}

/// Scales `v` so its largest-magnitude entry is positive (first such entry on ties).
pub(crate) fn fix_sign(v: &mut nalgebra::DVector<f64>) {
    let mut best = 0usize;
    let mut best_mag = -1.0;
    for (i, x) in v.iter().enumerate() {
        // entries within rounding of the maximum count as ties
        if x.abs() > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = x.abs();
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

fn first_nonzero(v: &nalgebra::DVector<f64>) -> f64 {
    v.iter().copied().find(|x| *x != 0.0).unwrap_or(0.0)
}

/// `Vᵀ A V`, accumulated in extended precision and re-symmetrized.
pub fn congruence(v: &DMatrix<f64>, a: &SymMatrix) -> Result<SymMatrix> {
    if v.nrows() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: v.nrows(),
        });
    }
    if v.ncols() == 0 {
        return Err(Error::InvalidMatrix("congruence with zero columns".into()));
    }
    SymMatrix::from_matrix(extended::bilinear(v, a.as_matrix(), v))
}

/// `Vᵀ (A + shift·I) V` with the shift applied exactly, i.e. without first
/// rounding the shifted matrix.
pub fn shifted_congruence(v: &DMatrix<f64>, a: &SymMatrix, shift: f64) -> Result<SymMatrix> {
    shifted_bilinear(v, a.as_matrix(), shift, v).and_then(SymMatrix::from_matrix)
}

/// `Vᵀ (A + shift·I) W` for square `A`, accumulated in extended precision.
pub fn shifted_bilinear(
    v: &DMatrix<f64>,
    a: &DMatrix<f64>,
    shift: f64,
    w: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if shift != 0.0 && a.nrows() != a.ncols() {
        return Err(Error::InvalidMatrix("shifted form of a rectangular block".into()));
    }
    check_bilinear(v, a, w)?;
    Ok(extended::shifted_bilinear(v, a, shift, w))
}

/// `Vᵀ A W` for a general (possibly rectangular) block `A`, accumulated in
/// extended precision.
pub fn bilinear(v: &DMatrix<f64>, a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_bilinear(v, a, w)?;
    Ok(extended::bilinear(v, a, w))
}

fn check_bilinear(v: &DMatrix<f64>, a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<()> {
    if v.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: v.nrows(),
        });
    }
    if w.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: w.nrows(),
        });
    }
    Ok(())
}
