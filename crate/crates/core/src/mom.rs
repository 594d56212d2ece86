//! Thin-wire EFIE method of moments for parallel z-directed strip dipoles.
//!
//! Every dipole is meshed into uniform segments carrying triangular (rooftop)
//! basis functions, one per interior node. Testing is Galerkin. For self terms
//! the static part of the kernel is averaged across the strip width (uniform
//! transverse current, tested by the same average), and the smooth remainder
//! uses the thin-wire offset `a = w / 4`. The plain reduced kernel with radius
//! `a` is available through [`SelfKernel::Reduced`]. Between two distinct wires
//! the axis-to-axis distance is used.
//!
//! All lengths are in wavelengths, so `k = 2π`. With `e^{jωt}` time dependence
//!
//! ```text
//! Z_mn = jη [ k ∫∫ f_m f_n G dz dz' − (1/k) ∫∫ f_m' f_n' G dz dz' ],
//! G = e^{−jkR} / (4πR),   R = sqrt((z − z')² + ρ²).
//! ```
//!
//! The static part `1/(4πR)` is integrated analytically over the source
//! segment (and, for the strip, numerically across the width); the remainder `(e^{−jkR} − 1)/(4πR)` is smooth and handled by
//! tensor Gauss–Legendre quadrature.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

/// Free-space wave impedance in ohms.
pub const ETA0: f64 = 376.730313668;

/// Wavenumber for lengths measured in wavelengths.
pub const K0: f64 = 2.0 * PI;

/// Default mesh density: segments per half wavelength of dipole length.
pub const SEGMENTS_PER_HALF_WAVELENGTH: f64 = 31.0;

/// Outer-integral subdivisions for segment pairs that touch or coincide.
const NEAR_SUBDIVISIONS: usize = 4;

// 8-point Gauss–Legendre on [-1, 1]
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// A z-directed strip dipole centered at `(x_position, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireDipole {
    length: f64,
    strip_width: f64,
    x_position: f64,
    segments: usize,
}

impl WireDipole {
    pub fn new(length: f64, strip_width: f64, x_position: f64, segments: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidDipole(format!("length {length} must be positive")));
        }
        if !(strip_width.is_finite() && strip_width > 0.0) {
            return Err(Error::InvalidDipole(format!(
                "strip width {strip_width} must be positive"
            )));
        }
        if strip_width > length / 10.0 {
            return Err(Error::InvalidDipole(format!(
                "strip width {strip_width} exceeds length/10"
            )));
        }
        if !x_position.is_finite() {
            return Err(Error::InvalidDipole("x position must be finite".into()));
        }
        if segments < 3 || segments % 2 == 0 {
            return Err(Error::InvalidDipole(format!(
                "segment count {segments} must be odd and at least 3"
            )));
        }
        Ok(Self {
            length,
            strip_width,
            x_position,
            segments,
        })
    }

    /// Dipole meshed at the default density.
    pub fn with_default_mesh(length: f64, strip_width: f64, x_position: f64) -> Result<Self> {
        Self::new(length, strip_width, x_position, default_segments(length))
    }

    /// Builds a dipole from lengths in meters at the given free-space wavelength.
    pub fn from_physical(
        length_m: f64,
        strip_width_m: f64,
        x_position_m: f64,
        segments: usize,
        wavelength_m: f64,
    ) -> Result<Self> {
        if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
            return Err(Error::InvalidDipole("wavelength must be positive".into()));
        }
        Self::new(
            length_m / wavelength_m,
            strip_width_m / wavelength_m,
            x_position_m / wavelength_m,
            segments,
        )
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn strip_width(&self) -> f64 {
        self.strip_width
    }

    pub fn x_position(&self) -> f64 {
        self.x_position
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// Equivalent wire radius of the strip.
    pub fn radius(&self) -> f64 {
        self.strip_width / 4.0
    }

    pub fn segment_length(&self) -> f64 {
        self.length / self.segments as f64
    }

    pub fn basis_count(&self) -> usize {
        self.segments - 1
    }

    /// Copy of this dipole moved to a new x position.
    pub fn at(&self, x_position: f64) -> Self {
        Self { x_position, ..*self }
    }
}

/// Odd segment count at [`SEGMENTS_PER_HALF_WAVELENGTH`] per half wavelength.
pub fn default_segments(length: f64) -> usize {
    let raw = (SEGMENTS_PER_HALF_WAVELENGTH * length / 0.5).round() as usize;
    let odd = if raw % 2 == 0 { raw + 1 } else { raw };
    odd.max(3)
}

/// Parallel dipoles placed along the x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    elements: Vec<WireDipole>,
}

impl ArrayLayout {
    pub fn new(elements: Vec<WireDipole>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument("array has no elements".into()));
        }
        for i in 0..elements.len() {
            for j in (i + 1)..elements.len() {
                check_separation(i, &elements[i], j, &elements[j])?;
            }
        }
        Ok(Self { elements })
    }

    /// `count` copies of `dipole` spaced `spacing` apart, centered on x = 0.
    pub fn uniform(dipole: WireDipole, count: usize, spacing: f64) -> Result<Self> {
        let offset = 0.5 * spacing * (count as f64 - 1.0);
        Self::new(
            (0..count)
                .map(|i| dipole.at(i as f64 * spacing - offset))
                .collect(),
        )
    }

    pub fn elements(&self) -> &[WireDipole] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

fn check_separation(ia: usize, a: &WireDipole, ib: usize, b: &WireDipole) -> Result<()> {
    let separation = (a.x_position - b.x_position).abs() - 0.5 * (a.strip_width + b.strip_width);
    if separation > 0.0 {
        Ok(())
    } else {
        Err(Error::Overlap {
            a: ia,
            b: ib,
            separation,
        })
    }
}

/// Rooftop basis functions of one dipole.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub owner: usize,
    pub count: usize,
    /// Apex coordinate of each basis function, strictly increasing.
    pub node_z: Vec<f64>,
    pub segment_length: f64,
}

impl BasisSet {
    /// Value of the basis expansion `Σ c_n f_n(z)` at `z`.
    pub fn evaluate(&self, coeffs: &[f64], z: f64) -> f64 {
        let h = self.segment_length;
        self.node_z
            .iter()
            .zip(coeffs)
            .map(|(zn, c)| c * (1.0 - (z - zn).abs() / h).max(0.0))
            .sum()
    }
}

pub fn mesh(dipole: &WireDipole) -> BasisSet {
    mesh_owned(dipole, 0)
}

pub fn mesh_owned(dipole: &WireDipole, owner: usize) -> BasisSet {
    let h = dipole.segment_length();
    let s = dipole.segments;
    // z_i = (2i − S) h / 2 keeps node_z exactly odd about 0
    let node_z = (1..s)
        .map(|i| 0.5 * (2 * i as i64 - s as i64) as f64 * h)
        .collect();
    BasisSet {
        owner,
        count: s - 1,
        node_z,
        segment_length: h,
    }
}

/// Real and reactive parts of an impedance block.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedancePair {
    pub r: DMatrix<f64>,
    pub x: DMatrix<f64>,
}

/// Integrals of the Green's function over one observation/source segment pair.
#[derive(Debug, Clone, Copy, Default)]
struct SegmentPair {
    // vector-potential terms, [obs shape][src shape]; shape 0 falls, 1 rises
    vec_re: [[f64; 2]; 2],
    vec_im: [[f64; 2]; 2],
    // scalar-potential term ∫∫ G
    sca_re: f64,
    sca_im: f64,
}

fn gauss_points(a: f64, b: f64, pieces: usize) -> Vec<(f64, f64)> {
    let width = (b - a) / pieces as f64;
    let mut out = Vec::with_capacity(8 * pieces);
    for p in 0..pieces {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            out.push((mid + 0.5 * width * t, 0.5 * width * w));
        }
    }
    out
}

/// `(e^{−jkR} − 1) / (4πR)` split into real and imaginary parts.
fn smooth_kernel(r: f64) -> (f64, f64) {
    let kr = K0 * r;
    if kr < 1e-6 {
        // series about R = 0
        (-K0 * K0 * r / (8.0 * PI), -K0 / (4.0 * PI))
    } else {
        let half = 0.5 * kr;
        let re = -2.0 * half.sin() * half.sin() / (4.0 * PI * r);
        let im = -kr.sin() / (4.0 * PI * r);
        (re, im)
    }
}

/// `ln(|c| + sqrt(c² + ρ²))`
fn log_term(c: f64, rho: f64) -> f64 {
    (c.abs() + c.hypot(rho)).ln()
}

/// Static integrals `∫ dz'/R` and `∫ (z' − z) dz'/R` over a source segment
/// spanning `[c0, c1]` relative to the observation point, averaged over the
/// transverse offset `t` between source and test points on a strip of width
/// `w`. With uniform current across the strip, `t` has the triangular density
/// `2(1 − t/w)/w` on `[0, w]`.
///
/// `asinh(c/t) = sign(c) (ln(|c| + √(c² + t²)) − ln t)`; the `ln t` part is
/// averaged in closed form (`ln w − 3/2`), leaving a smooth integrand.
fn strip_static(c0: f64, c1: f64, w: f64) -> (f64, f64) {
    let sign = |c: f64| if c == 0.0 { 0.0 } else { c.signum() };
    let (s0, s1) = (sign(c0), sign(c1));
    let pts = gauss_points(0.0, w, 8);
    let (mut j0, mut j1) = (0.0, 0.0);
    for &(t, wt) in &pts {
        let dens = 2.0 / w * (1.0 - t / w);
        j0 += wt * dens * (s1 * log_term(c1, t) - s0 * log_term(c0, t));
        j1 += wt * dens * (c1.hypot(t) - c0.hypot(t));
    }
    (j0 - (s1 - s0) * (w.ln() - 1.5), j1)
}

fn segment_pair(
    (p0, p1): (f64, f64),
    (q0, q1): (f64, f64),
    rho: f64,
    near: bool,
    strip: Option<f64>,
) -> SegmentPair {
    let (hp, hq) = (p1 - p0, q1 - q0);
    let outer = gauss_points(p0, p1, if near { NEAR_SUBDIVISIONS } else { 1 });
    let inner = gauss_points(q0, q1, 1);
    let mut out = SegmentPair::default();
    let inv4pi = 1.0 / (4.0 * PI);

    for &(z, wz) in &outer {
        let u = [(p1 - z) / hp, (z - p0) / hp];

        // static part, analytic in z'
        let (j0, j1) = if let Some(w) = strip {
            strip_static(q0 - z, q1 - z, w)
        } else {
            (
                ((q1 - z) / rho).asinh() - ((q0 - z) / rho).asinh(),
                (q1 - z).hypot(rho) - (q0 - z).hypot(rho),
            )
        };
        let s = [((q1 - z) * j0 - j1) / hq, ((z - q0) * j0 + j1) / hq];
        for i in 0..2 {
            for j in 0..2 {
                out.vec_re[i][j] += wz * u[i] * s[j] * inv4pi;
            }
        }
        out.sca_re += wz * j0 * inv4pi;

        // smooth remainder
        for &(zp, wzp) in &inner {
            let r = (z - zp).hypot(rho);
            let (gre, gim) = smooth_kernel(r);
            let w = wz * wzp;
            let v = [(q1 - zp) / hq, (zp - q0) / hq];
            for i in 0..2 {
                for j in 0..2 {
                    let f = w * u[i] * v[j];
                    out.vec_re[i][j] += f * gre;
                    out.vec_im[i][j] += f * gim;
                }
            }
            out.sca_re += w * gre;
            out.sca_im += w * gim;
        }
    }
    out
}

/// Impedance block with observation on `obs` and source on `src`, using
/// kernel offset `rho`. `strip` selects the strip-averaged static kernel for
/// self terms. Not symmetrized.
fn raw_block(obs: &WireDipole, src: &WireDipole, rho: f64, strip: Option<f64>, same_wire: bool) -> ImpedancePair {
    let (so, ss) = (obs.segments, src.segments);
    let (ho, hs) = (obs.segment_length(), src.segment_length());
    let zo = |i: usize| -0.5 * obs.length + i as f64 * ho;
    let zs = |i: usize| -0.5 * src.length + i as f64 * hs;

    let mut pairs = vec![SegmentPair::default(); so * ss];
    for s in 0..so {
        for t in 0..ss {
            let near = same_wire && s.abs_diff(t) <= 1;
            pairs[s * ss + t] = segment_pair((zo(s), zo(s + 1)), (zs(t), zs(t + 1)), rho, near, strip);
        }
    }

    // basis m lives on segment m (rising, slope +1/h) and m + 1 (falling, slope −1/h)
    let pieces = |m: usize, h: f64| [(m, 1usize, 1.0 / h), (m + 1, 0usize, -1.0 / h)];
    let (no, ns) = (so - 1, ss - 1);
    let mut r = DMatrix::zeros(no, ns);
    let mut x = DMatrix::zeros(no, ns);
    for m in 0..no {
        for n in 0..ns {
            // Z = jη T, T = k A − Φ / k
            let (mut t_re, mut t_im) = (0.0, 0.0);
            for &(s, us, ds) in &pieces(m, ho) {
                for &(t, ut, dt) in &pieces(n, hs) {
                    let p = &pairs[s * ss + t];
                    t_re += K0 * p.vec_re[us][ut] - ds * dt * p.sca_re / K0;
                    t_im += K0 * p.vec_im[us][ut] - ds * dt * p.sca_im / K0;
                }
            }
            r[(m, n)] = -ETA0 * t_im;
            x[(m, n)] = ETA0 * t_re;
        }
    }
    ImpedancePair { r, x }
}

fn check_finite(block: &ImpedancePair) -> Result<()> {
    for ((row, col), v) in block
        .r
        .iter()
        .enumerate()
        .map(|(i, v)| ((i % block.r.nrows(), i / block.r.nrows()), v))
        .chain(
            block
                .x
                .iter()
                .enumerate()
                .map(|(i, v)| ((i % block.x.nrows(), i / block.x.nrows()), v)),
        )
    {
        if !v.is_finite() {
            return Err(Error::QuadratureFailure { row, col });
        }
    }
    Ok(())
}

/// Treatment of the static self-interaction kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfKernel {
    /// Uniform current across the strip, tested by the strip average.
    #[default]
    Strip,
    /// Axis source, surface observation on a wire of radius `w / 4`.
    Reduced,
}

/// Self impedance `Z = R + jX` of one dipole.
pub fn assemble_self(dipole: &WireDipole) -> Result<(SymMatrix, SymMatrix)> {
    assemble_self_with(dipole, SelfKernel::default())
}

pub fn assemble_self_with(dipole: &WireDipole, kernel: SelfKernel) -> Result<(SymMatrix, SymMatrix)> {
    let strip = match kernel {
        SelfKernel::Strip => Some(dipole.strip_width),
        SelfKernel::Reduced => None,
    };
    let block = raw_block(dipole, dipole, dipole.radius(), strip, true);
    check_finite(&block)?;
    Ok((SymMatrix::from_matrix(block.r)?, SymMatrix::from_matrix(block.x)?))
}

/// Mutual impedance between two parallel dipoles; rows follow `a`, columns `b`.
pub fn assemble_mutual(a: &WireDipole, b: &WireDipole) -> Result<ImpedancePair> {
    check_separation(0, a, 1, b)?;
    let rho = (a.x_position - b.x_position).abs();
    let ab = raw_block(a, b, rho, None, false);
    let ba = raw_block(b, a, rho, None, false);
    // averaging both orders makes Z_ba == Z_abᵀ exactly
    let avg = |p: &DMatrix<f64>, q: &DMatrix<f64>| {
        DMatrix::from_fn(p.nrows(), p.ncols(), |i, j| 0.5 * (p[(i, j)] + q[(j, i)]))
    };
    let block = ImpedancePair {
        r: avg(&ab.r, &ba.r),
        x: avg(&ab.x, &ba.x),
    };
    check_finite(&block)?;
    Ok(block)
}

/// Block-partitioned impedance of an array.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockImpedance {
    self_r: Vec<SymMatrix>,
    self_x: Vec<SymMatrix>,
    // (i, j) with i < j
    mutual: BTreeMap<(usize, usize), ImpedancePair>,
}

impl BlockImpedance {
    /// Builds from explicit blocks. Missing mutual pairs are taken as zero.
    pub fn from_parts(
        self_blocks: Vec<(SymMatrix, SymMatrix)>,
        mutual: BTreeMap<(usize, usize), ImpedancePair>,
    ) -> Result<Self> {
        let mut self_r = Vec::with_capacity(self_blocks.len());
        let mut self_x = Vec::with_capacity(self_blocks.len());
        for (r, x) in self_blocks {
            if r.n() != x.n() {
                return Err(Error::DimensionMismatch {
                    expected: r.n(),
                    found: x.n(),
                });
            }
            self_r.push(r);
            self_x.push(x);
        }
        let n = self_r.len();
        for (&(i, j), block) in &mutual {
            if i >= j || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "mutual block ({i}, {j}) must satisfy i < j < {n}"
                )));
            }
            for m in [&block.r, &block.x] {
                if m.nrows() != self_r[i].n() {
                    return Err(Error::DimensionMismatch {
                        expected: self_r[i].n(),
                        found: m.nrows(),
                    });
                }
                if m.ncols() != self_r[j].n() {
                    return Err(Error::DimensionMismatch {
                        expected: self_r[j].n(),
                        found: m.ncols(),
                    });
                }
            }
        }
        Ok(Self {
            self_r,
            self_x,
            mutual,
        })
    }

    pub fn element_count(&self) -> usize {
        self.self_r.len()
    }

    /// Basis count `K_i` of every element.
    pub fn sizes(&self) -> Vec<usize> {
        self.self_r.iter().map(SymMatrix::n).collect()
    }

    pub fn total_size(&self) -> usize {
        self.sizes().iter().sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.sizes()
            .iter()
            .map(|s| {
                let o = acc;
                acc += s;
                o
            })
            .collect()
    }

    pub fn self_block(&self, i: usize) -> (&SymMatrix, &SymMatrix) {
        (&self.self_r[i], &self.self_x[i])
    }

    pub fn mutual_blocks(&self) -> &BTreeMap<(usize, usize), ImpedancePair> {
        &self.mutual
    }

    pub fn mutual_blocks_mut(&mut self) -> &mut BTreeMap<(usize, usize), ImpedancePair> {
        &mut self.mutual
    }

    /// Block `(i, j)` of R and X; lower blocks are transposes of upper ones.
    pub fn block(&self, i: usize, j: usize) -> ImpedancePair {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => ImpedancePair {
                r: self.self_r[i].as_matrix().clone(),
                x: self.self_x[i].as_matrix().clone(),
            },
            Ordering::Less => self.mutual.get(&(i, j)).cloned().unwrap_or_else(|| {
                let (m, n) = (self.self_r[i].n(), self.self_r[j].n());
                ImpedancePair {
                    r: DMatrix::zeros(m, n),
                    x: DMatrix::zeros(m, n),
                }
            }),
            Ordering::Greater => {
                let upper = self.block(j, i);
                ImpedancePair {
                    r: upper.r.transpose(),
                    x: upper.x.transpose(),
                }
            }
        }
    }

    /// Dense `R^c` and `X^c` of the coupled system.
    pub fn full(&self) -> Result<(SymMatrix, SymMatrix)> {
        let k = self.total_size();
        let offsets = self.offsets();
        let sizes = self.sizes();
        let mut r = DMatrix::zeros(k, k);
        let mut x = DMatrix::zeros(k, k);
        for i in 0..self.element_count() {
            for j in 0..self.element_count() {
                let b = self.block(i, j);
                r.view_mut((offsets[i], offsets[j]), (sizes[i], sizes[j]))
                    .copy_from(&b.r);
                x.view_mut((offsets[i], offsets[j]), (sizes[i], sizes[j]))
                    .copy_from(&b.x);
            }
        }
        Ok((SymMatrix::from_matrix(r)?, SymMatrix::from_matrix(x)?))
    }

    /// Copy with `δI` added to every self radiation block, where `δ` is the
    /// smallest shift (from the default scale, growing tenfold) that lets the
    /// full `R^c + δI` factor. `δ = 0` when `R^c` factors as is.
    ///
    /// Since every `R_ii` is a principal block of `R^c`, the shifted self
    /// blocks factor too, so isolated, subspace and full-space solves all
    /// see one and the same pencil.
    pub fn regularized(&self) -> Result<(Self, f64)> {
        let (r, _) = self.full()?;
        if linalg::is_factorable(&r) {
            return Ok((self.clone(), 0.0));
        }
        let shift = linalg::regularizing_shift(&r, 0.0).ok_or(Error::NotPositiveSemidefinite {
            min_eigenvalue: r.min_eigenvalue()?,
            threshold: -linalg::PSD_TOLERANCE * r.frobenius_norm(),
        })?;
        let self_r = self
            .self_r
            .iter()
            .map(|m| {
                let n = m.n();
                SymMatrix::from_matrix(m.as_matrix() + DMatrix::identity(n, n) * shift)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((
            Self {
                self_r,
                self_x: self.self_x.clone(),
                mutual: self.mutual.clone(),
            },
            shift,
        ))
    }

    /// Same self blocks with every mutual block removed.
    pub fn decoupled(&self) -> Self {
        Self {
            self_r: self.self_r.clone(),
            self_x: self.self_x.clone(),
            mutual: BTreeMap::new(),
        }
    }

    /// Same blocks listed in the given element order.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.element_count();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&o| o >= n || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::InvalidArgument("order is not a permutation".into()));
        }
        let self_blocks = order
            .iter()
            .map(|&o| (self.self_r[o].clone(), self.self_x[o].clone()))
            .collect();
        let mut mutual = BTreeMap::new();
        for a in 0..n {
            for b in (a + 1)..n {
                mutual.insert((a, b), self.block(order[a], order[b]));
            }
        }
        Self::from_parts(self_blocks, mutual)
    }
}

/// Assembles every self block and every upper mutual block of the array.
pub fn assemble_array(layout: &ArrayLayout) -> Result<BlockImpedance> {
    let elements = layout.elements();
    let self_blocks = elements
        .iter()
        .map(assemble_self)
        .collect::<Result<Vec<_>>>()?;
    let mut mutual = BTreeMap::new();
    for i in 0..elements.len() {
        for j in (i + 1)..elements.len() {
            let block = assemble_mutual(&elements[i], &elements[j]).map_err(|e| match e {
                Error::Overlap { separation, .. } => Error::Overlap {
                    a: i,
                    b: j,
                    separation,
                },
                other => other,
            })?;
            mutual.insert((i, j), block);
        }
    }
    BlockImpedance::from_parts(self_blocks, mutual)
}

/// Delta-gap excitation across the center segment: a uniform field of
/// `1 / segment_length` over that segment, tested by every basis function.
pub fn delta_gap(dipole: &WireDipole) -> Vec<f64> {
    let n = dipole.basis_count();
    let mut v = vec![0.0; n];
    // segment c spans nodes c and c + 1; it overlaps bases c − 1 and c
    let c = dipole.segments / 2;
    v[c - 1] = 0.5;
    v[c] = 0.5;
    v
}

/// Current through the delta gap, the mean of the two bases straddling it.
pub fn gap_current(dipole: &WireDipole, coeffs: &[num_complex::Complex64]) -> num_complex::Complex64 {
    let c = dipole.segments / 2;
    (coeffs[c - 1] + coeffs[c]) * 0.5
}
