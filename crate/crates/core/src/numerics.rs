//! Dense complex matrices and the handful of kernels the rest of the crate
//! needs: matrix exponential, Hermitian spectra, PSD square roots and
//! pseudo-inverses.
//!
//! Vectorization of matrices is column-stacking throughout the crate:
//! `vec(X)[i + j * rows] = X[i, j]`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default absolute-plus-relative tolerance, applied as `tol * (1 + ‖X‖)`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Shorthand for a complex number.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_err(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let cc = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == cc), "ragged rows");
        Self {
            rows: r,
            cols: cc,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Real matrix from nested rows.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn scalar(z: Complex64) -> Self {
        Self::diag(&[z])
    }

    /// `|i⟩⟨j|` in dimension `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(dim_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    fn check_same_shape(&self, rhs: &CMatrix, op: &str) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(dim_err(format!(
                "cannot {op} {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(rhs, "add")?;
        Ok(self.zip_with(rhs, |a, b| a + b))
    }

    pub fn try_sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(rhs, "subtract")?;
        Ok(self.zip_with(rhs, |a, b| a - b))
    }

    fn zip_with(&self, rhs: &CMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (r2, c2) = rhs.shape();
        CMatrix::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * rhs[(i % r2, j % c2)]
        })
    }

    /// `I_k ⊗ self`.
    pub fn ampliate(&self, k: usize) -> CMatrix {
        CMatrix::identity(k).kron(self)
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        CMatrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMatrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Assembles `[[a, b], [c, d]]`.
    pub fn from_blocks(a: &CMatrix, b: &CMatrix, cm: &CMatrix, d: &CMatrix) -> Result<CMatrix> {
        if a.rows != b.rows || cm.rows != d.rows || a.cols != cm.cols || b.cols != d.cols {
            return Err(dim_err("inconsistent block shapes"));
        }
        let mut m = CMatrix::zeros(a.rows + cm.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(0, a.cols, b);
        m.set_block(a.rows, 0, cm);
        m.set_block(a.rows, a.cols, d);
        Ok(m)
    }

    pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let mut m = CMatrix::zeros(a.rows + b.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(a.rows, a.cols, b);
        m
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Operator (spectral) norm.
    pub fn norm(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let sv = self.to_nalgebra().singular_values();
        sv.iter().copied().fold(0.0, f64::max)
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    pub fn dist(&self, rhs: &CMatrix) -> f64 {
        assert_eq!(self.shape(), rhs.shape(), "dist: shape mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Column-stacking vectorization.
    pub fn vec(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`CMatrix::vec`].
    pub fn unvec(v: &[Complex64], rows: usize, cols: usize) -> Result<CMatrix> {
        if v.len() != rows * cols {
            return Err(dim_err(format!("cannot reshape {} entries to {rows}x{cols}", v.len())));
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| v[i + j * rows]))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "mul_vec: length mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> CMatrix {
        CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// The operator impls panic on shape mismatch; fallible code paths use the
// `try_*` / `matmul` variants.
impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.try_add(rhs).expect("matrix add")
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        &self + &rhs
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.try_sub(rhs).expect("matrix sub")
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        &self - &rhs
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix mul")
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        &self * &rhs
    }
}

impl Mul<Complex64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, z: Complex64) -> CMatrix {
        self.scale(z)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        -&self
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "matrix add_assign");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "matrix sub_assign");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

fn require_square(x: &CMatrix, what: &str) -> Result<usize> {
    if !x.is_square() {
        return Err(dim_err(format!("{what} requires a square matrix, got {}x{}", x.rows, x.cols)));
    }
    Ok(x.rows)
}

fn solve(lhs: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    let lu = lhs.to_nalgebra().lu();
    let sol = lu
        .solve(&rhs.to_nalgebra())
        .ok_or_else(|| Error::Domain("singular Padé denominator".into()))?;
    Ok(CMatrix::from_nalgebra(&sol))
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
// 1-norm thresholds for the low-degree approximants (Higham 2005, table 2.3).
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

fn lin_comb(terms: &[(f64, &CMatrix)], n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    for (coef, m) in terms {
        for (o, &v) in out.data.iter_mut().zip(&m.data) {
            *o += v * *coef;
        }
    }
    out
}

/// Low-degree Padé numerator/denominator pieces `(U, V)`.
fn pade_low(a: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.rows;
    let id = CMatrix::identity(n);
    let a2 = a * a;
    let mut powers = vec![id, a2.clone()];
    while powers.len() < b.len() / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u_inner += &p.scale_real(b[2 * k + 1]);
        v += &p.scale_real(b[2 * k]);
    }
    (a * &u_inner, v)
}

fn pade13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows;
    let b = &PADE13;
    let id = CMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = lin_comb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u_lo = lin_comb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)], n);
    let u = a * &(&(&a6 * &u_hi) + &u_lo);
    let v_hi = lin_comb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v_lo = lin_comb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)], n);
    let v = &(&a6 * &v_hi) + &v_lo;
    (u, v)
}

/// Matrix exponential by scaling and squaring with a Padé approximant.
pub fn expm(x: &CMatrix) -> Result<CMatrix> {
    let n = require_square(x, "expm")?;
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    if n == 1 {
        return Ok(CMatrix::scalar(x[(0, 0)].exp()));
    }
    let norm = x.norm_one();
    if !norm.is_finite() {
        return Err(Error::Domain("expm of a non-finite matrix".into()));
    }
    for (deg, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match deg {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let (u, v) = pade_low(x, coeffs);
            return solve(&(&v - &u), &(&v + &u));
        }
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scaled = x.scale_real(0.5f64.powi(squarings as i32));
    let (u, v) = pade13(&scaled);
    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of `(X + X*)/2`.
pub fn eigh(x: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    require_square(x, "eigh")?;
    let h = x.hermitian_part().to_nalgebra();
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(x.rows, x.rows, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((vals, vecs))
}

/// Smallest eigenvalue of the Hermitian part of `x`.
pub fn min_eig_hermitian(x: &CMatrix) -> Result<f64> {
    let n = require_square(x, "min_eig_hermitian")?;
    if n == 0 {
        return Ok(0.0);
    }
    let h = x.hermitian_part().to_nalgebra();
    Ok(h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Hermitian PSD square root; eigenvalues in `[-clip_tol, 0)` are clipped to zero.
pub fn sqrtm_psd(x: &CMatrix, clip_tol: f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh(x)?;
    if let Some(&lo) = vals.first() {
        if lo < -clip_tol {
            return Err(Error::NotPsd { min_eig: lo, clip_tol });
        }
    }
    let roots: Vec<Complex64> = vals.iter().map(|&v| c(v.max(0.0).sqrt(), 0.0)).collect();
    Ok(&(&vecs * &CMatrix::diag(&roots)) * &vecs.adjoint())
}

/// Moore-Penrose pseudo-inverse; singular values at or below `cutoff` are
/// treated as zero.
pub fn pinv(x: &CMatrix, cutoff: f64) -> CMatrix {
    if x.data.is_empty() {
        return CMatrix::zeros(x.cols, x.rows);
    }
    let svd = x.to_nalgebra().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let k = svd.singular_values.len();
    let mut out = DMatrix::<Complex64>::zeros(x.cols, x.rows);
    for s in 0..k {
        let sigma = svd.singular_values[s];
        if sigma <= cutoff {
            continue;
        }
        let inv = 1.0 / sigma;
        for i in 0..x.cols {
            let vi = vt[(s, i)].conj() * inv;
            for j in 0..x.rows {
                out[(i, j)] += vi * u[(j, s)].conj();
            }
        }
    }
    CMatrix::from_nalgebra(&out)
}

/// Seeded random test matrices (entries i.i.d. complex standard normal).
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        })
    }

    pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        gaussian(n, n, rng).hermitian_part()
    }

    /// Haar-distributed unitary via QR with phase correction.
    pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        let qr = gaussian(n, n, rng).to_nalgebra().qr();
        let (q, r) = (qr.q(), qr.r());
        CMatrix::from_fn(n, n, |i, j| {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
            q[(i, j)] * phase
        })
    }

    pub fn vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
        gaussian(len, 1, rng).into_vec()
    }
}
