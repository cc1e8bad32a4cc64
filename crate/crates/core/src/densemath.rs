//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Storage is row-major. Products skip zero entries of the left factor and
//! switch to a row-sparse walk over the right factor when it is mostly
//! zeros, which is the common case for ladder operators and collision
//! unitaries. Everything else (Kronecker products, partial traces, the
//! matrix exponential, Hermitian and general eigenvalues, LU solves) is
//! plain dense code sized for dimensions up to a few hundred.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical thresholds used by density checks and solvers.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Maximum entry of ρ − ρ† for a density matrix.
    pub hermitian: f64,
    /// Maximum |Tr ρ − 1| for a density matrix.
    pub trace: f64,
    /// Minimum eigenvalue allowed for a density matrix.
    pub min_eigenvalue: f64,
    /// Pivot threshold (relative to the largest entry) below which an LU
    /// factorization is declared singular.
    pub pivot: f64,
}

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const MIN_EIGENVALUE_TOL: f64 = -1e-9;
pub const PIVOT_TOL: f64 = 1e-13;

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: HERMITIAN_TOL,
            trace: TRACE_TOL,
            min_eigenvalue: MIN_EIGENVALUE_TOL,
            pivot: PIVOT_TOL,
        }
    }
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CplxMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CplxMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CplxMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CplxMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CplxMatrix {
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CplxMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(CplxMatrix { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count");
        CplxMatrix {
            rows,
            cols,
            data: data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let v: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// Projector |v⟩⟨v| onto a (not necessarily normalized) vector.
    pub fn projector(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        CplxMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        CplxMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    /// In-place `self += z * other`.
    pub fn axpy(&mut self, z: C64, other: &CplxMatrix) {
        assert_eq!(self.dims(), other.dims(), "axpy dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += z * b;
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max entry of `self − self†`.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()))
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|z| **z != ZERO).count()
    }

    /// Matrix product.
    pub fn matmul(&self, rhs: &CplxMatrix) -> CplxMatrix {
        assert_eq!(
            self.cols,
            rhs.rows,
            "matmul dimension mismatch {:?} x {:?}",
            self.dims(),
            rhs.dims()
        );
        let (m, n, p) = (self.rows, self.cols, rhs.cols);
        let mut out = CplxMatrix::zeros(m, p);
        let sparse_rhs = rhs.count_nonzero() * 4 < rhs.data.len();
        if sparse_rhs {
            let pattern: Vec<Vec<(usize, C64)>> = (0..n)
                .map(|k| {
                    rhs.row(k)
                        .iter()
                        .enumerate()
                        .filter(|(_, z)| **z != ZERO)
                        .map(|(j, &z)| (j, z))
                        .collect()
                })
                .collect();
            for i in 0..m {
                let out_row = &mut out.data[i * p..(i + 1) * p];
                for (k, &a) in self.row(i).iter().enumerate() {
                    if a == ZERO {
                        continue;
                    }
                    for &(j, b) in &pattern[k] {
                        out_row[j] += a * b;
                    }
                }
            }
        } else {
            for i in 0..m {
                for k in 0..n {
                    let a = self.data[i * n + k];
                    if a == ZERO {
                        continue;
                    }
                    let rhs_row = &rhs.data[k * p..(k + 1) * p];
                    let out_row = &mut out.data[i * p..(i + 1) * p];
                    for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                        *o += a * b;
                    }
                }
            }
        }
        out
    }

    /// A·B − B·A.
    pub fn commutator(&self, b: &CplxMatrix) -> CplxMatrix {
        &self.matmul(b) - &b.matmul(self)
    }

    /// A·B + B·A.
    pub fn anticommutator(&self, b: &CplxMatrix) -> CplxMatrix {
        &self.matmul(b) + &b.matmul(self)
    }

    /// Column-stacked vectorization.
    pub fn vec_cols(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`CplxMatrix::vec_cols`].
    pub fn unvec_cols(v: &[C64], rows: usize, cols: usize) -> Self {
        assert_eq!(v.len(), rows * cols, "unvec length");
        Self::from_fn(rows, cols, |i, j| v[j * rows + i])
    }

    /// Matrix–vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "apply dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Checks the density-matrix thresholds.
    pub fn check_density(&self, tol: &Tolerances) -> std::result::Result<(), String> {
        if !self.is_square() {
            return Err(format!("not square: {:?}", self.dims()));
        }
        let h = self.hermiticity_error();
        if h > tol.hermitian {
            return Err(format!("hermiticity error {h:.3e}"));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tol.trace {
            return Err(format!("trace {:.12} {:+.3e}i", tr.re, tr.im));
        }
        let (vals, _) = eigh(self);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < tol.min_eigenvalue {
            return Err(format!("minimum eigenvalue {min:.3e}"));
        }
        Ok(())
    }

    pub fn is_density(&self) -> bool {
        self.check_density(&Tolerances::default()).is_ok()
    }
}

impl Index<(usize, usize)> for CplxMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CplxMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CplxMatrix {
    type Output = CplxMatrix;
    fn add(self, rhs: &CplxMatrix) -> CplxMatrix {
        assert_eq!(self.dims(), rhs.dims(), "add dimension mismatch");
        CplxMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CplxMatrix {
    type Output = CplxMatrix;
    fn sub(self, rhs: &CplxMatrix) -> CplxMatrix {
        assert_eq!(self.dims(), rhs.dims(), "sub dimension mismatch");
        CplxMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Add for CplxMatrix {
    type Output = CplxMatrix;
    fn add(self, rhs: CplxMatrix) -> CplxMatrix {
        &self + &rhs
    }
}

impl Sub for CplxMatrix {
    type Output = CplxMatrix;
    fn sub(self, rhs: CplxMatrix) -> CplxMatrix {
        &self - &rhs
    }
}

impl AddAssign<&CplxMatrix> for CplxMatrix {
    fn add_assign(&mut self, rhs: &CplxMatrix) {
        self.axpy(ONE, rhs);
    }
}

impl SubAssign<&CplxMatrix> for CplxMatrix {
    fn sub_assign(&mut self, rhs: &CplxMatrix) {
        self.axpy(-ONE, rhs);
    }
}

impl Mul for &CplxMatrix {
    type Output = CplxMatrix;
    fn mul(self, rhs: &CplxMatrix) -> CplxMatrix {
        self.matmul(rhs)
    }
}

impl Mul for CplxMatrix {
    type Output = CplxMatrix;
    fn mul(self, rhs: CplxMatrix) -> CplxMatrix {
        self.matmul(&rhs)
    }
}

impl Mul<C64> for &CplxMatrix {
    type Output = CplxMatrix;
    fn mul(self, z: C64) -> CplxMatrix {
        self.scale(z)
    }
}

impl Mul<f64> for &CplxMatrix {
    type Output = CplxMatrix;
    fn mul(self, x: f64) -> CplxMatrix {
        self.scale_real(x)
    }
}

impl Neg for &CplxMatrix {
    type Output = CplxMatrix;
    fn neg(self) -> CplxMatrix {
        self.scale_real(-1.0)
    }
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CplxMatrix, b: &CplxMatrix) -> CplxMatrix {
    let (ar, ac) = a.dims();
    let (br, bc) = b.dims();
    let mut out = CplxMatrix::zeros(ar * br, ac * bc);
    let oc = ac * bc;
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                let row = (i * br + k) * oc + j * bc;
                for l in 0..bc {
                    out.data[row + l] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Which factor of a bipartite space a partial trace keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace over one factor of a `dA·dB` square matrix.
pub fn partial_trace(m: &CplxMatrix, dims: (usize, usize), keep: Keep) -> Result<CplxMatrix> {
    let (da, db) = dims;
    if !m.is_square() || m.rows() != da * db {
        return Err(Error::Dimension(format!(
            "partial trace of {:?} with factors {}x{}",
            m.dims(),
            da,
            db
        )));
    }
    let n = da * db;
    let d = m.as_slice();
    Ok(match keep {
        Keep::A => CplxMatrix::from_fn(da, da, |i, j| (0..db).map(|k| d[(i * db + k) * n + j * db + k]).sum()),
        Keep::B => CplxMatrix::from_fn(db, db, |k, l| (0..da).map(|i| d[(i * db + k) * n + i * db + l]).sum()),
    })
}

/// Tr{op · rho}.
pub fn expectation(op: &CplxMatrix, rho: &CplxMatrix) -> C64 {
    assert_eq!(op.cols(), rho.rows(), "expectation dimension mismatch");
    assert_eq!(op.rows(), rho.cols(), "expectation dimension mismatch");
    let n = op.rows();
    let k = op.cols();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..k {
            let a = op[(i, j)];
            if a != ZERO {
                acc += a * rho[(j, i)];
            }
        }
    }
    acc
}

/// Lindblad form J(O, ρ) = O ρ O† − ½{ρ, O†O}.
pub fn lindblad_j(op: &CplxMatrix, rho: &CplxMatrix) -> CplxMatrix {
    let od = op.adjoint();
    let odo = od.matmul(op);
    let mut out = op.matmul(rho).matmul(&od);
    out.axpy(C64::new(-0.5, 0.0), &rho.matmul(&odo));
    out.axpy(C64::new(-0.5, 0.0), &odo.matmul(rho));
    out
}

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
const THETA13: f64 = 5.371920351148152;

/// Maximum dimension accepted by [`matexp`].
pub const MATEXP_MAX_DIM: usize = 1024;

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant.
pub fn matexp(m: &CplxMatrix) -> CplxMatrix {
    assert!(m.is_square(), "matexp of a non-square matrix");
    assert!(m.rows() <= MATEXP_MAX_DIM, "matexp dimension above limit");
    let n = m.rows();
    let norm = m.norm_one();
    if norm == 0.0 {
        return CplxMatrix::identity(n);
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m.scale_real(0.5f64.powi(s));
    let id = CplxMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let b = &PADE13;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| {
        let mut t = a6.scale_real(c6);
        t.axpy(C64::new(c4, 0.0), &a4);
        t.axpy(C64::new(c2, 0.0), &a2);
        t.axpy(C64::new(c0, 0.0), &id);
        t
    };
    let u_inner = &a6.matmul(&lin(b[13], b[11], b[9], 0.0)) + &lin(b[7], b[5], b[3], b[1]);
    let u = a.matmul(&u_inner);
    let v = &a6.matmul(&lin(b[12], b[10], b[8], 0.0)) + &lin(b[6], b[4], b[2], b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve_matrix(&q, &p, PIVOT_TOL).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

/// LU factorization with partial pivoting.
struct Lu {
    lu: CplxMatrix,
    perm: Vec<usize>,
}

fn lu_factor(a: &CplxMatrix, pivot_tol: f64) -> Result<Lu> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("LU of {:?}", a.dims())));
    }
    let n = a.rows();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax <= pivot_tol * scale {
            return Err(Error::Conditioning(format!(
                "pivot {pmax:.3e} at column {k} (scale {scale:.3e})"
            )));
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let t = lu[(p, j)];
                lu[(p, j)] = lu[(k, j)];
                lu[(k, j)] = t;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f == ZERO {
                continue;
            }
            for j in k + 1..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.rows();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }
}

/// Solves A·X = B.
pub fn solve_matrix(a: &CplxMatrix, b: &CplxMatrix, pivot_tol: f64) -> Result<CplxMatrix> {
    if a.rows() != b.rows() {
        return Err(Error::Dimension(format!("solve {:?} against {:?}", a.dims(), b.dims())));
    }
    let lu = lu_factor(a, pivot_tol)?;
    let (n, m) = b.dims();
    let mut out = CplxMatrix::zeros(n, m);
    for j in 0..m {
        let col: Vec<C64> = (0..n).map(|i| b[(i, j)]).collect();
        let x = lu.solve_vec(&col);
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

/// Solves A·x = b.
pub fn solve(a: &CplxMatrix, b: &[C64], pivot_tol: f64) -> Result<Vec<C64>> {
    if a.rows() != b.len() {
        return Err(Error::Dimension(format!(
            "solve {:?} against vector of {}",
            a.dims(),
            b.len()
        )));
    }
    Ok(lu_factor(a, pivot_tol)?.solve_vec(b))
}

/// Matrix inverse.
pub fn inverse(a: &CplxMatrix, pivot_tol: f64) -> Result<CplxMatrix> {
    solve_matrix(a, &CplxMatrix::identity(a.rows()), pivot_tol)
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns ascending eigenvalues and the unitary whose columns are the
/// matching eigenvectors. Only the Hermitian part of the input is used.
pub fn eigh(m: &CplxMatrix) -> (Vec<f64>, CplxMatrix) {
    assert!(m.is_square(), "eigh of a non-square matrix");
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = CplxMatrix::identity(n);
    let total = a.frobenius().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs <= 1e-300 {
                    continue;
                }
                let phase = apq / abs;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * abs);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = D·G with D = diag(1, e^{-iφ}) on (p, q).
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -s * phase.conj();
                let jqq = c * phase.conj();
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let vals = order.iter().map(|&i| a[(i, i)].re).collect();
    let vecs = CplxMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CplxMatrix, f: impl Fn(f64) -> f64) -> CplxMatrix {
    let (vals, vecs) = eigh(m);
    let fv: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
    let n = m.rows();
    CplxMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| vecs[(i, k)] * fv[k] * vecs[(j, k)].conj()).sum()
    })
}

/// Eigenvalues of a general complex matrix by Hessenberg reduction and
/// Wilkinson-shifted QR sweeps. Intended for dimensions up to ~32.
pub fn eigenvalues(m: &CplxMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("eigenvalues of {:?}", m.dims())));
    }
    let n = m.rows();
    let mut h = hessenberg(m);
    let mut out = Vec::with_capacity(n);
    let mut hi = n;
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let mut iters = 0usize;
    while hi > 0 {
        if hi == 1 {
            out.push(h[(0, 0)]);
            break;
        }
        let mut lo = hi - 1;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= f64::EPSILON * diag.max(scale * 1e-3) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            out.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            iters = 0;
            continue;
        }
        iters += 1;
        if iters > 1000 {
            return Err(Error::NumericalDegradation(
                "QR eigenvalue iteration did not converge".into(),
            ));
        }
        let a = h[(hi - 2, hi - 2)];
        let b = h[(hi - 2, hi - 1)];
        let c = h[(hi - 1, hi - 2)];
        let d = h[(hi - 1, hi - 1)];
        let tr = a + d;
        let det = a * d - b * c;
        let disc = (tr * tr * 0.25 - det).sqrt();
        let l1 = tr * 0.5 + disc;
        let l2 = tr * 0.5 - disc;
        let mut mu = if (l1 - d).norm() < (l2 - d).norm() { l1 } else { l2 };
        if iters % 11 == 10 {
            // Exceptional shift to break cycles.
            mu += C64::new(h[(hi - 1, hi - 2)].norm(), 0.0);
        }
        qr_sweep(&mut h, lo, hi, mu);
    }
    Ok(out)
}

fn hessenberg(m: &CplxMatrix) -> CplxMatrix {
    let n = m.rows();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H ← P H P with P = I − 2 v v† acting on indices k+1..n.
        for j in 0..n {
            let dot: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= 2.0 * v[i] * dot;
            }
        }
        for i in 0..n {
            let dot: C64 = (0..v.len()).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            for j in 0..v.len() {
                h[(i, k + 1 + j)] -= 2.0 * dot * v[j].conj();
            }
        }
    }
    h
}

fn qr_sweep(h: &mut CplxMatrix, lo: usize, hi: usize, mu: C64) {
    for i in lo..hi {
        h[(i, i)] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi - 1 {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (a / r, b / r) };
        for j in k..hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c.conj() * x + s.conj() * y;
            h[(k + 1, j)] = -s * x + c * y;
        }
        rots.push((k, c, s));
    }
    for (k, c, s) in rots {
        for i in lo..hi.min(k + 2 + 1).max(lo) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s;
            h[(i, k + 1)] = -x * s.conj() + y * c.conj();
        }
    }
    for i in lo..hi {
        h[(i, i)] += mu;
    }
}

/// Superoperator of X ↦ A·X on column-stacked vectors: I ⊗ A.
pub fn left_super(a: &CplxMatrix) -> CplxMatrix {
    kron(&CplxMatrix::identity(a.cols()), a)
}

/// Superoperator of X ↦ X·B on column-stacked vectors: Bᵀ ⊗ I.
pub fn right_super(b: &CplxMatrix) -> CplxMatrix {
    kron(&b.transpose(), &CplxMatrix::identity(b.rows()))
}

/// Superoperator of X ↦ J(O, X) on column-stacked vectors.
pub fn lindblad_super(op: &CplxMatrix) -> CplxMatrix {
    let odo = op.adjoint().matmul(op);
    let mut s = kron(&op.conj(), op);
    s.axpy(C64::new(-0.5, 0.0), &left_super(&odo));
    s.axpy(C64::new(-0.5, 0.0), &right_super(&odo));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sx() -> CplxMatrix {
        CplxMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    fn sminus() -> CplxMatrix {
        CplxMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0])
    }

    fn sample_density(n: usize, seed: u64) -> CplxMatrix {
        // Deterministic pseudo-random G·G† / Tr.
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = CplxMatrix::from_fn(n, n, |_, _| c(next(), next()));
        let r = g.matmul(&g.adjoint());
        let tr = r.trace();
        r.scale(ONE / tr)
    }

    #[test]
    fn kron_identities() {
        assert_eq!(
            kron(&CplxMatrix::identity(2), &CplxMatrix::identity(2)),
            CplxMatrix::identity(4)
        );
        let sz = CplxMatrix::diag_real(&[1.0, -1.0]);
        assert_eq!(
            kron(&sz, &CplxMatrix::identity(2)),
            CplxMatrix::diag_real(&[1.0, 1.0, -1.0, -1.0])
        );
    }

    #[test]
    fn kron_index_oracle() {
        let splus = sminus().transpose();
        let b = CplxMatrix::from_fn(3, 3, |i, j| if j == i + 1 { c((j as f64).sqrt(), 0.0) } else { ZERO });
        let k = kron(&splus, &b);
        assert_eq!(k.dims(), (6, 6));
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..3 {
                    for q in 0..3 {
                        assert_eq!(k[(i * 3 + p, j * 3 + q)], splus[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_cases() {
        let ra = sample_density(2, 1);
        let rb = sample_density(3, 2);
        let rho = kron(&ra, &rb);
        let pa = partial_trace(&rho, (2, 3), Keep::A).unwrap();
        let pb = partial_trace(&rho, (2, 3), Keep::B).unwrap();
        assert!((&pa - &ra).max_abs() < 1e-14);
        assert!((&pb - &rb).max_abs() < 1e-14);

        let s = 1.0 / 2f64.sqrt();
        let bell = CplxMatrix::projector(&[c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let red = partial_trace(&bell, (2, 2), Keep::A).unwrap();
        assert!((&red - &CplxMatrix::identity(2).scale_real(0.5)).max_abs() < 1e-15);

        assert!(partial_trace(&bell, (2, 3), Keep::A).is_err());
    }

    #[test]
    fn partial_trace_index_oracle() {
        let rho = sample_density(6, 7);
        let pa = partial_trace(&rho, (2, 3), Keep::A).unwrap();
        let pb = partial_trace(&rho, (2, 3), Keep::B).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..3 {
                    acc += rho[(3 * i + k, 3 * j + k)];
                }
                assert!((acc - pa[(i, j)]).norm() < 1e-15);
            }
        }
        for k in 0..3 {
            for l in 0..3 {
                let acc = rho[(k, l)] + rho[(3 + k, 3 + l)];
                assert!((acc - pb[(k, l)]).norm() < 1e-15);
            }
        }
        assert!((pa.trace() - ONE).norm() < 1e-14);
    }

    #[test]
    fn matexp_zero_is_identity() {
        assert_eq!(matexp(&CplxMatrix::zeros(3, 3)), CplxMatrix::identity(3));
    }

    #[test]
    fn matexp_matches_taylor_oracle() {
        let theta = 0.3;
        let gen = sx().scale(c(0.0, -theta / 2.0));
        let mut term = CplxMatrix::identity(2);
        let mut taylor = CplxMatrix::identity(2);
        for k in 1..30 {
            term = term.matmul(&gen).scale_real(1.0 / k as f64);
            taylor += &term;
        }
        let e = matexp(&gen);
        let closed =
            &CplxMatrix::identity(2).scale_real((theta / 2.0).cos()) - &sx().scale(c(0.0, (theta / 2.0).sin()));
        assert!((&e - &taylor).max_abs() < 1e-14);
        assert!((&e - &closed).max_abs() < 1e-14);
    }

    #[test]
    fn matexp_large_norm_inverse() {
        let a = sample_density(5, 3).scale(c(4.0, 9.0));
        let prod = matexp(&a).matmul(&matexp(&a.scale_real(-1.0)));
        assert!((&prod - &CplxMatrix::identity(5)).max_abs() < 1e-10);
    }

    #[test]
    fn lindblad_examples() {
        let g = CplxMatrix::diag_real(&[0.0, 1.0]);
        let e = CplxMatrix::diag_real(&[1.0, 0.0]);
        assert!(lindblad_j(&sminus(), &g).max_abs() < 1e-15);
        let out = lindblad_j(&sminus(), &e);
        assert!((&out - &(&g - &e)).max_abs() < 1e-15);
    }

    #[test]
    fn lindblad_term_by_term() {
        let rho = sample_density(2, 11);
        let rate = (0.7f64 + 1.0).sqrt();
        let op = sminus().scale_real(rate);
        let out = lindblad_j(&op, &rho);
        // σ₋ρσ₊ moves ρ_ee to the ground slot; σ₊σ₋ = |e⟩⟨e|.
        let r2 = rate * rate;
        let expected = CplxMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => -r2 * rho[(0, 0)],
            (1, 1) => r2 * rho[(0, 0)],
            _ => -0.5 * r2 * rho[(i, j)],
        });
        assert!((&out - &expected).max_abs() < 1e-14);
        assert!(out.trace().norm() < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let rho = sample_density(3, 5);
        assert!((expectation(&CplxMatrix::identity(3), &rho) - ONE).norm() < 1e-14);
        let sz = CplxMatrix::diag_real(&[1.0, -1.0]);
        let e = CplxMatrix::diag_real(&[1.0, 0.0]);
        assert_eq!(expectation(&sz, &e), ONE);
    }

    #[test]
    fn eigh_reconstructs() {
        let m = sample_density(6, 9).scale(c(3.0, 0.0));
        let (vals, vecs) = eigh(&m);
        let recon = CplxMatrix::from_fn(6, 6, |i, j| {
            (0..6).map(|k| vecs[(i, k)] * vals[k] * vecs[(j, k)].conj()).sum()
        });
        assert!((&recon - &m).max_abs() < 1e-12);
        let unit = vecs.adjoint().matmul(&vecs);
        assert!((&unit - &CplxMatrix::identity(6)).max_abs() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn general_eigenvalues_of_triangular_and_rotation() {
        let t = CplxMatrix::from_vec(
            3,
            3,
            vec![
                c(1.0, 1.0),
                c(2.0, 0.0),
                c(0.5, 0.0),
                ZERO,
                c(-2.0, 0.0),
                c(1.0, 3.0),
                ZERO,
                ZERO,
                c(0.25, -1.0),
            ],
        )
        .unwrap();
        let mut ev = eigenvalues(&t).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - c(-2.0, 0.0)).norm() < 1e-12);
        assert!((ev[1] - c(0.25, -1.0)).norm() < 1e-12);
        assert!((ev[2] - c(1.0, 1.0)).norm() < 1e-12);

        let rot = CplxMatrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut ev = eigenvalues(&rot).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn general_eigenvalues_match_hermitian() {
        let m = sample_density(7, 21);
        let (vals, _) = eigh(&m);
        let mut ev: Vec<f64> = eigenvalues(&m).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&ev) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_and_inverse() {
        let a = &sample_density(4, 2) + &CplxMatrix::identity(4).scale(c(0.0, 1.0));
        let inv = inverse(&a, PIVOT_TOL).unwrap();
        assert!((&a.matmul(&inv) - &CplxMatrix::identity(4)).max_abs() < 1e-12);
        assert!(inverse(&CplxMatrix::zeros(3, 3), PIVOT_TOL).is_err());
    }

    #[test]
    fn superoperators_match_products() {
        let a = sample_density(3, 4);
        let b = sample_density(3, 5);
        let x = sample_density(3, 6);
        let lv = left_super(&a).apply(&x.vec_cols());
        assert!((&CplxMatrix::unvec_cols(&lv, 3, 3) - &a.matmul(&x)).max_abs() < 1e-14);
        let rv = right_super(&b).apply(&x.vec_cols());
        assert!((&CplxMatrix::unvec_cols(&rv, 3, 3) - &x.matmul(&b)).max_abs() < 1e-14);
        let jv = lindblad_super(&a).apply(&x.vec_cols());
        assert!((&CplxMatrix::unvec_cols(&jv, 3, 3) - &lindblad_j(&a, &x)).max_abs() < 1e-14);
    }

    #[test]
    fn sparse_and_dense_products_agree() {
        let dense = sample_density(8, 1);
        let sparse = CplxMatrix::from_fn(8, 8, |i, j| if j == i + 1 { c(i as f64, 1.0) } else { ZERO });
        let ref_prod = CplxMatrix::from_fn(8, 8, |i, j| (0..8).map(|k| dense[(i, k)] * sparse[(k, j)]).sum());
        assert!((&dense.matmul(&sparse) - &ref_prod).max_abs() < 1e-14);
        let ref_prod2 = CplxMatrix::from_fn(8, 8, |i, j| (0..8).map(|k| sparse[(i, k)] * dense[(k, j)]).sum());
        assert!((&sparse.matmul(&dense) - &ref_prod2).max_abs() < 1e-14);
    }

    #[test]
    fn density_check_flags_violations() {
        let tol = Tolerances::default();
        assert!(sample_density(3, 1).check_density(&tol).is_ok());
        let neg = CplxMatrix::diag_real(&[1.5, -0.5]);
        assert!(neg.check_density(&tol).is_err());
        let untraced = CplxMatrix::diag_real(&[0.5, 0.4]);
        assert!(untraced.check_density(&tol).is_err());
    }
}
