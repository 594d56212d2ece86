//! Double-double kernels behind the eigensolver.
//!
//! Radiation matrices are numerically singular, so the pencils built from
//! them have eigenvalues spanning sixteen or more decades. Carrying the
//! factorization, the reduction and the symmetric eigensolve in ~32 digits
//! keeps every eigenpair of the (double precision) input pencil accurate,
//! which in turn makes congruent pencils give the same spectrum.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

type Dd = TwoFloat;

const ZERO: Dd = TwoFloat::from_f64(0.0);
const ONE: Dd = TwoFloat::from_f64(1.0);

/// Off-diagonal entries below this fraction of `sqrt(|a_pp a_qq|)` are
/// treated as converged.
const JACOBI_TOL: f64 = 1e-31;
const JACOBI_MAX_SWEEPS: usize = 80;

/// `a / b` to full double-double accuracy by long division on the leading
/// parts; the crate's own quotient is only good to about one `f64` ulp.
fn div(a: Dd, b: Dd) -> Dd {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    Dd::from(q1) + q2 + q3
}

/// Dense row-major matrix of double-doubles.
#[derive(Clone)]
pub(crate) struct DdMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Dd>,
}

impl DdMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub(crate) fn from_f64(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = Dd::from(m[(i, j)]);
            }
        }
        out
    }

    pub(crate) fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| f64::from(self.at(i, j)))
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Dd {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Dd) {
        self.data[i * self.cols + j] = v;
    }

    fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * *b;
                }
            }
        }
        out
    }
}

/// `Vᵀ A W` accumulated in double-double and rounded once.
pub(crate) fn bilinear(v: &DMatrix<f64>, a: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    shifted_bilinear(v, a, 0.0, w)
}

/// `Vᵀ (A + shift·I) W` for square `A`. The shift never touches the
/// rounded entries of `A`, so it survives even when far below their ulp.
pub(crate) fn shifted_bilinear(
    v: &DMatrix<f64>,
    a: &DMatrix<f64>,
    shift: f64,
    w: &DMatrix<f64>,
) -> DMatrix<f64> {
    let wd = DdMatrix::from_f64(w);
    let mut aw = DdMatrix::from_f64(a).mul(&wd);
    if shift != 0.0 {
        for (d, x) in aw.data.iter_mut().zip(&wd.data) {
            *d += *x * shift;
        }
    }
    DdMatrix::from_f64(&v.transpose()).mul(&aw).to_f64()
}

/// Lower Cholesky factor of `A + shift·I`, or `None` when a pivot is not
/// positive.
pub(crate) fn cholesky(a: &DMatrix<f64>, shift: f64) -> Option<DdMatrix> {
    let n = a.nrows();
    let mut l = DdMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = Dd::from(a[(j, j)]) + shift;
        for k in 0..j {
            let ljk = l.at(j, k);
            d -= ljk * ljk;
        }
        if !(d > 0.0) || !d.hi().is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in (j + 1)..n {
            let mut s = Dd::from(a[(i, j)]);
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k);
            }
            l.set(i, j, div(s, djj));
        }
    }
    Some(l)
}

/// Solves `L Y = B` in place.
fn solve_lower(l: &DdMatrix, b: &mut DdMatrix) {
    let n = l.rows;
    for c in 0..b.cols {
        for i in 0..n {
            let mut s = b.at(i, c);
            for k in 0..i {
                s -= l.at(i, k) * b.at(k, c);
            }
            b.set(i, c, div(s, l.at(i, i)));
        }
    }
}

/// Solves `Lᵀ Y = B` in place.
fn solve_lower_transpose(l: &DdMatrix, b: &mut DdMatrix) {
    let n = l.rows;
    for c in 0..b.cols {
        for i in (0..n).rev() {
            let mut s = b.at(i, c);
            for k in (i + 1)..n {
                s -= l.at(k, i) * b.at(k, c);
            }
            b.set(i, c, div(s, l.at(i, i)));
        }
    }
}

/// Eigenpairs of `X v = λ L Lᵀ v`: unordered eigenvalues and the matching
/// eigenvectors (columns), or `None` if the eigensolve does not converge.
pub(crate) fn reduced_eig(x: &DMatrix<f64>, l: &DdMatrix) -> Option<(Vec<f64>, DMatrix<f64>)> {
    // C = L⁻¹ X L⁻ᵀ
    let mut c = DdMatrix::from_f64(x);
    solve_lower(l, &mut c);
    let mut c = c.transpose();
    solve_lower(l, &mut c);
    symmetrize(&mut c);
    let (eigs, mut vecs) = jacobi(c)?;
    solve_lower_transpose(l, &mut vecs);
    Some((eigs.iter().map(|&e| f64::from(e)).collect(), vecs.to_f64()))
}

fn symmetrize(a: &mut DdMatrix) {
    for i in 0..a.rows {
        for j in (i + 1)..a.cols {
            let m = (a.at(i, j) + a.at(j, i)) * 0.5;
            a.set(i, j, m);
            a.set(j, i, m);
        }
    }
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
fn jacobi(mut a: DdMatrix) -> Option<(Vec<Dd>, DdMatrix)> {
    let n = a.rows;
    let mut v = DdMatrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, ONE);
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a.at(p, p), a.at(q, q));
                let scale = (app.abs() * aqq.abs()).sqrt();
                if apq.abs() <= scale * JACOBI_TOL {
                    a.set(p, q, ZERO);
                    a.set(q, p, ZERO);
                    continue;
                }
                rotated = true;
                let theta = div(aqq - app, apq * 2.0);
                let t = if theta.abs() > 1e100 {
                    div(ONE, theta * 2.0)
                } else {
                    let mag = div(ONE, theta.abs() + (theta * theta + ONE).sqrt());
                    if theta < 0.0 {
                        -mag
                    } else {
                        mag
                    }
                };
                let cs = div(ONE, (t * t + ONE).sqrt());
                let sn = t * cs;
                for r in 0..n {
                    let (arp, arq) = (a.at(r, p), a.at(r, q));
                    a.set(r, p, cs * arp - sn * arq);
                    a.set(r, q, sn * arp + cs * arq);
                }
                for r in 0..n {
                    let (apr, aqr) = (a.at(p, r), a.at(q, r));
                    a.set(p, r, cs * apr - sn * aqr);
                    a.set(q, r, sn * apr + cs * aqr);
                }
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, ZERO);
                a.set(q, p, ZERO);
                for r in 0..n {
                    let (vrp, vrq) = (v.at(r, p), v.at(r, q));
                    v.set(r, p, cs * vrp - sn * vrq);
                    v.set(r, q, sn * vrp + cs * vrq);
                }
            }
        }
        if !rotated {
            return Some(((0..n).map(|i| a.at(i, i)).collect(), v));
        }
    }
    None
}
