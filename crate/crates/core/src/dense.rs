//! Dense complex linear algebra for the `n_t × n_t` temporal core.
//!
//! The temporal core `C = (i B_t)^{-1} M_t` is decomposed as
//! `C = X_t S_t X_t^{-1}` with `S_t` upper triangular, either by a complex
//! Schur form (`X_t` unitary) or by a full eigendecomposition (`S_t`
//! diagonal). The Schur form is computed by Householder reduction to
//! Hessenberg form followed by single-shift QR sweeps with Wilkinson shifts;
//! eigenvectors come from back-substitution on the triangular factor.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseRealMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest admissible `σ_min(X_t)` for the eigendecomposition route.
pub const DEFECTIVE_THRESHOLD: f64 = 1e-12;
/// Relative pivot threshold for LU factorizations.
pub const PIVOT_THRESHOLD: f64 = 1e-14;
/// QR sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 30;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct DenseComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for DenseComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:.4e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for DenseComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl DenseComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseComplexMatrix {
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
        DenseComplexMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |i, j| rows[i][j])
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_sparse(a: &SparseRealMatrix) -> Self {
        let mut m = Self::zeros(a.dim(), a.dim());
        for i in 0..a.dim() {
            for (j, v) in a.row(i) {
                m[(i, j)] = Complex64::new(v, 0.0);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        DenseComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest modulus below the diagonal.
    pub fn max_below_diagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i.min(self.cols) {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    /// Largest modulus off the diagonal.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (first, second) = self.data.split_at_mut(hi * self.cols);
        first[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut second[..self.cols]);
    }
}

impl Mul for &DenseComplexMatrix {
    type Output = DenseComplexMatrix;
    fn mul(self, rhs: &DenseComplexMatrix) -> DenseComplexMatrix {
        self.matmul(rhs)
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseComplexMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn new(a: &DenseComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                actual: a.cols(),
            });
        }
        let n = a.rows();
        let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = PIVOT_THRESHOLD * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= tol || pmax == 0.0 {
                return Err(Error::SingularMatrix {
                    index: k,
                    magnitude: pmax,
                });
            }
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == ZERO {
                    continue;
                }
                let (top, bottom) = lu.data.split_at_mut(i * n);
                let krow = &top[k * n + k + 1..k * n + n];
                for (x, y) in bottom[k + 1..n].iter_mut().zip(krow) {
                    *x -= factor * y;
                }
            }
        }
        Ok(LuFactors { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &DenseComplexMatrix) -> Result<DenseComplexMatrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.rows(),
            });
        }
        let m = b.cols();
        let mut x = DenseComplexMatrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            x.data[i * m..(i + 1) * m].copy_from_slice(b.row(p));
        }
        // forward substitution with unit lower triangle
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l == ZERO {
                    continue;
                }
                let (top, bottom) = x.data.split_at_mut(i * m);
                for (xi, xk) in bottom[..m].iter_mut().zip(&top[k * m..(k + 1) * m]) {
                    *xi -= l * xk;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                if u == ZERO {
                    continue;
                }
                let (top, bottom) = x.data.split_at_mut(k * m);
                for (xi, xk) in top[i * m..(i + 1) * m].iter_mut().zip(&bottom[..m]) {
                    *xi -= u * xk;
                }
            }
            let d = self.lu[(i, i)];
            for xi in &mut x.data[i * m..(i + 1) * m] {
                *xi /= d;
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<DenseComplexMatrix> {
        self.solve(&DenseComplexMatrix::identity(self.dim()))
    }
}

/// `A^{-1} B` by LU with partial pivoting.
pub fn dense_solve(a: &DenseComplexMatrix, b: &DenseComplexMatrix) -> Result<DenseComplexMatrix> {
    LuFactors::new(a)?.solve(b)
}

/// The temporal core `C = (i B_t)^{-1} M_t` together with `(i B_t)^{-1}`,
/// which the solver needs to form `Y_t`.
#[derive(Debug, Clone)]
pub struct TemporalCore {
    pub matrix: DenseComplexMatrix,
    /// Right factor of `Y_t = X_t^{-1} · inv_i_b`; the identity for cores
    /// built with [`TemporalCore::from_matrix`].
    pub inv_i_b: DenseComplexMatrix,
}

impl TemporalCore {
    /// Wraps an arbitrary square matrix; `Y_t` then equals `X_t^{-1}`.
    pub fn from_matrix(matrix: DenseComplexMatrix) -> Self {
        let n = matrix.rows();
        TemporalCore {
            matrix,
            inv_i_b: DenseComplexMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// `C = (i B_t)^{-1} M_t = −i B_t^{-1} M_t` via a dense LU of `B_t`.
pub fn form_temporal_core(
    mass: &SparseRealMatrix,
    derivative: &SparseRealMatrix,
) -> Result<TemporalCore> {
    if mass.dim() != derivative.dim() {
        return Err(Error::DimensionMismatch {
            expected: derivative.dim(),
            actual: mass.dim(),
        });
    }
    let b = DenseComplexMatrix::from_sparse(derivative);
    let lu = LuFactors::new(&b)?;
    let minus_i = -I;
    let matrix = lu.solve(&DenseComplexMatrix::from_sparse(mass))?.scale(minus_i);
    let inv_i_b = lu.inverse()?.scale(minus_i);
    Ok(TemporalCore { matrix, inv_i_b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionKind {
    Schur,
    Eigen,
}

/// `C = X_t S_t X_t^{-1}` with `S_t` upper triangular and
/// `Y_t = X_t^{-1} (i B_t)^{-1}`.
#[derive(Debug, Clone)]
pub struct TemporalFactors {
    pub kind: DecompositionKind,
    pub x: DenseComplexMatrix,
    pub s: DenseComplexMatrix,
    pub y: DenseComplexMatrix,
    /// `κ₂(X_t)`; exactly 1 for the Schur route.
    pub kappa2: f64,
}

impl TemporalFactors {
    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.s.diagonal()
    }

    /// `‖A − X S X^{-1}‖_F / ‖A‖_F`.
    pub fn reconstruction_error(&self, a: &DenseComplexMatrix) -> Result<f64> {
        let xs = self.x.matmul(&self.s);
        // X S X^{-1} = (X^{-H} (X S)^H)^H
        let rhs = xs.conj_transpose();
        let rec = dense_solve(&self.x.conj_transpose(), &rhs)?.conj_transpose();
        let denom = a.frobenius_norm();
        let num = a.sub(&rec).frobenius_norm();
        Ok(if denom == 0.0 { num } else { num / denom })
    }
}

/// Complex Schur form `A = Z T Z^H`.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub unitary: DenseComplexMatrix,
    pub triangular: DenseComplexMatrix,
}

/// Householder reduction to upper Hessenberg form, `A = Q H Q^H`.
fn hessenberg(a: &DenseComplexMatrix) -> (DenseComplexMatrix, DenseComplexMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = DenseComplexMatrix::identity(n);
    let mut v = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = h[(i, k)];
        }
        let vnorm: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for vi in &mut v[k + 1..n] {
            *vi /= vnorm;
        }
        // H <- (I − 2 v v^H) H
        for j in 0..n {
            let dot: Complex64 = (k + 1..n).map(|i| v[i].conj() * h[(i, j)]).sum();
            let d2 = dot * 2.0;
            for i in k + 1..n {
                h[(i, j)] -= v[i] * d2;
            }
        }
        // H <- H (I − 2 v v^H), Q <- Q (I − 2 v v^H)
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let row = &mut m.data[i * n..(i + 1) * n];
                let dot: Complex64 = (k + 1..n).map(|j| row[j] * v[j]).sum();
                let d2 = dot * 2.0;
                for j in k + 1..n {
                    row[j] -= d2 * v[j].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (q, h)
}

/// Complex Givens rotation `G = [[c, s], [−s̄, c]]` with `G [x; y] = [r; 0]`.
#[inline]
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ny = y.norm();
    if ny == 0.0 {
        return (1.0, ZERO);
    }
    let nx = x.norm();
    if nx == 0.0 {
        return (0.0, y.conj() / ny);
    }
    let rho = nx.hypot(ny);
    (nx / rho, (x / nx) * y.conj() / rho)
}

/// Rows `i`, `i+1` of `m` over columns `cols` ← `G · rows`.
#[inline]
fn rotate_rows(m: &mut DenseComplexMatrix, i: usize, c: f64, s: Complex64, cols: std::ops::Range<usize>) {
    let n = m.cols;
    let (top, bottom) = m.data.split_at_mut((i + 1) * n);
    let ri = &mut top[i * n..];
    let rj = &mut bottom[..n];
    for j in cols {
        let (a, b) = (ri[j], rj[j]);
        ri[j] = a * c + s * b;
        rj[j] = -s.conj() * a + b * c;
    }
}

/// Columns `j`, `j+1` of `m` over rows `rows` ← `cols · G^H`.
#[inline]
fn rotate_cols(m: &mut DenseComplexMatrix, j: usize, c: f64, s: Complex64, rows: std::ops::Range<usize>) {
    let n = m.cols;
    for i in rows {
        let row = &mut m.data[i * n..(i + 1) * n];
        let (a, b) = (row[j], row[j + 1]);
        row[j] = a * c + s.conj() * b;
        row[j + 1] = -s * a + b * c;
    }
}

/// Eigenvalue of the trailing 2×2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

#[inline]
fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Complex Schur decomposition `A = Z T Z^H` with `Z` unitary and `T` upper
/// triangular.
pub fn complex_schur(a: &DenseComplexMatrix) -> Result<SchurForm> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            actual: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    let (mut z, mut h) = hessenberg(a);
    if n <= 1 {
        return Ok(SchurForm {
            unitary: z,
            triangular: h,
        });
    }
    let eps = f64::EPSILON;
    let safe_min = f64::MIN_POSITIVE / eps;
    let max_sweeps = MAX_SWEEPS_PER_EIGENVALUE * n.max(10);
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut its = 0usize;
    loop {
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)];
            let mut scale = abs1(h[(lo - 1, lo - 1)]) + abs1(h[(lo, lo)]);
            if scale == 0.0 {
                if lo >= 2 {
                    scale += abs1(h[(lo - 1, lo - 2)]);
                }
                if lo < hi {
                    scale += abs1(h[(lo + 1, lo)]);
                }
            }
            if abs1(sub) <= (eps * scale).max(safe_min) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            // 1×1 block converged
            if hi == 0 {
                break;
            }
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > max_sweeps {
            return Err(Error::NoConvergence { iterations: total });
        }
        let shift = if its.is_multiple_of(10) {
            // exceptional shift
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].re.abs(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        // implicit single-shift QR sweep on rows/cols lo..=hi
        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s) = givens(x, y);
            let col_start = if k > lo { k - 1 } else { lo };
            rotate_rows(&mut h, k, c, s, col_start..n);
            rotate_cols(&mut h, k, c, s, 0..(k + 3).min(hi + 1));
            rotate_cols(&mut z, k, c, s, 0..n);
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(SchurForm {
        unitary: z,
        triangular: h,
    })
}

/// Bartels–Stewart factors: `X_t` unitary from the Schur form, `S_t` its
/// triangular factor, `Y_t = X_t^H (i B_t)^{-1}`.
pub fn schur_decompose(core: &TemporalCore) -> Result<TemporalFactors> {
    let SchurForm {
        unitary,
        triangular,
    } = complex_schur(&core.matrix)?;
    let y = unitary.conj_transpose().matmul(&core.inv_i_b);
    Ok(TemporalFactors {
        kind: DecompositionKind::Schur,
        x: unitary,
        s: triangular,
        y,
        kappa2: 1.0,
    })
}

/// Eigenvectors of an upper triangular matrix, as columns.
fn triangular_eigenvectors(t: &DenseComplexMatrix) -> DenseComplexMatrix {
    let n = t.rows();
    let eps = f64::EPSILON;
    let tnorm = t.frobenius_norm();
    let mut v = DenseComplexMatrix::zeros(n, n);
    let mut y = vec![ZERO; n];
    for k in 0..n {
        let lambda = t[(k, k)];
        let smin = (eps * lambda.norm()).max(eps * tnorm * 1e-3).max(f64::MIN_POSITIVE);
        y.iter_mut().for_each(|z| *z = ZERO);
        y[k] = ONE;
        for i in (0..k).rev() {
            let mut acc = ZERO;
            for j in i + 1..=k {
                acc += t[(i, j)] * y[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = Complex64::new(smin, 0.0);
            }
            y[i] = -acc / d;
        }
        for i in 0..=k {
            v[(i, k)] = y[i];
        }
    }
    v
}

/// Fast-diagonalization factors: eigenvector matrix `X_t` (unit columns,
/// first nonzero entry real positive), `S_t` diagonal, eigenvalues sorted by
/// real then imaginary part, `Y_t = X_t^{-1} (i B_t)^{-1}`.
pub fn eigen_decompose(core: &TemporalCore) -> Result<TemporalFactors> {
    let n = core.dim();
    let SchurForm {
        unitary,
        triangular,
    } = complex_schur(&core.matrix)?;
    let vecs = unitary.matmul(&triangular_eigenvectors(&triangular));
    let eigenvalues = triangular.diagonal();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (eigenvalues[a], eigenvalues[b]);
        za.re.total_cmp(&zb.re).then(za.im.total_cmp(&zb.im))
    });

    let mut x = DenseComplexMatrix::zeros(n, n);
    let mut diag = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        let mut v = vecs.column(src);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let phase = v
            .iter()
            .find(|z| z.norm() > f64::EPSILON * vmax)
            .map_or(ONE, |z| z.conj() / z.norm());
        for z in &mut v {
            *z = *z * phase / norm;
        }
        for (i, z) in v.into_iter().enumerate() {
            x[(i, col)] = z;
        }
        diag.push(eigenvalues[src]);
    }

    let sv = singular_values(&x);
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    if sigma_min < DEFECTIVE_THRESHOLD {
        return Err(Error::NotDiagonalizable { sigma_min });
    }
    let y = dense_solve(&x, &core.inv_i_b)?;
    Ok(TemporalFactors {
        kind: DecompositionKind::Eigen,
        x,
        s: DenseComplexMatrix::from_diagonal(&diag),
        y,
        kappa2: sigma_max / sigma_min,
    })
}

/// Singular values in descending order.
pub fn singular_values(x: &DenseComplexMatrix) -> Vec<f64> {
    if x.rows() == 0 || x.cols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = x.to_nalgebra().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `κ₂(X) = σ_max / σ_min`; `+∞` when `X` is exactly singular.
pub fn spectral_condition(x: &DenseComplexMatrix) -> f64 {
    let sv = singular_values(x);
    let (Some(&max), Some(&min)) = (sv.first(), sv.last()) else {
        return f64::INFINITY;
    };
    if min == 0.0 {
        log::warn!("spectral condition requested for an exactly singular matrix");
        return f64::INFINITY;
    }
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_temporal;
    use crate::temporal_mesh::TemporalMesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> DenseComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn unitarity_defect(q: &DenseComplexMatrix) -> f64 {
        q.conj_transpose()
            .matmul(q)
            .sub(&DenseComplexMatrix::identity(q.rows()))
            .frobenius_norm()
    }

    #[test]
    fn solve_identity_and_scalar() {
        let b = random_matrix(3, 1);
        assert_eq!(dense_solve(&DenseComplexMatrix::identity(3), &b).unwrap(), b);
        let a = DenseComplexMatrix::from_rows(&[vec![c(2.0, 0.0)]]);
        let b = DenseComplexMatrix::from_rows(&[vec![c(4.0, 0.0)]]);
        assert_eq!(dense_solve(&a, &b).unwrap()[(0, 0)], c(2.0, 0.0));
    }

    #[test]
    fn solve_random_residual() {
        let n = 8;
        let mut a = random_matrix(n, 2);
        for i in 0..n {
            a[(i, i)] += c(4.0, 0.0);
        }
        let b = random_matrix(n, 3);
        let x = dense_solve(&a, &b).unwrap();
        let res = a.matmul(&x).sub(&b).frobenius_norm();
        assert!(res <= 1e-12 * n as f64 * a.frobenius_norm() * x.frobenius_norm());
    }

    #[test]
    fn singular_solve_fails() {
        let a = DenseComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(matches!(
            dense_solve(&a, &DenseComplexMatrix::identity(2)),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn single_interval_core() {
        let h = 0.4;
        let t = assemble_temporal(&TemporalMesh::uniform(h, 1).unwrap());
        let core = form_temporal_core(&t.mass, &t.derivative).unwrap();
        assert!((core.matrix[(0, 0)] - c(0.0, -2.0 * h / 3.0)).norm() < 1e-15);
        let f = eigen_decompose(&core).unwrap();
        assert!((f.kappa2 - 1.0).abs() < 1e-15);
        assert!((f.x[(0, 0)] - ONE).norm() < 1e-15);
        assert!((f.s[(0, 0)] - c(0.0, -2.0 * h / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn core_of_equal_matrices_is_minus_i() {
        let t = assemble_temporal(&TemporalMesh::uniform(1.0, 3).unwrap());
        let core = form_temporal_core(&t.derivative, &t.derivative).unwrap();
        let expected = DenseComplexMatrix::identity(3).scale(-I);
        assert!(core.matrix.sub(&expected).frobenius_norm() < 1e-14);
    }

    #[test]
    fn core_residual_identity() {
        let t = assemble_temporal(&TemporalMesh::uniform(1.0, 2).unwrap());
        let core = form_temporal_core(&t.mass, &t.derivative).unwrap();
        let ib = DenseComplexMatrix::from_sparse(&t.derivative).scale(I);
        let m = DenseComplexMatrix::from_sparse(&t.mass);
        assert!(ib.matmul(&core.matrix).sub(&m).frobenius_norm() < 1e-14);
    }

    #[test]
    fn schur_of_identity_and_nilpotent() {
        let f = schur_decompose(&TemporalCore::from_matrix(DenseComplexMatrix::identity(4))).unwrap();
        assert!(f.s.sub(&DenseComplexMatrix::identity(4)).frobenius_norm() < 1e-15);
        assert!(unitarity_defect(&f.x) < 1e-14);
        let a = DenseComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]);
        let f = schur_decompose(&TemporalCore::from_matrix(a.clone())).unwrap();
        assert_eq!(f.s, a);
    }

    #[test]
    fn schur_random_residuals() {
        for (n, seed) in [(2, 10), (5, 11), (16, 12), (64, 13)] {
            let a = random_matrix(n, seed);
            let f = schur_decompose(&TemporalCore::from_matrix(a.clone())).unwrap();
            assert!(unitarity_defect(&f.x) <= 1e-12 * n as f64, "n = {n}");
            assert_eq!(f.s.max_below_diagonal(), 0.0);
            let rec = f.x.matmul(&f.s).matmul(&f.x.conj_transpose());
            let err = a.sub(&rec).frobenius_norm() / a.frobenius_norm();
            assert!(err <= 1e-10 * n as f64, "n = {n}: {err:e}");
            // Y = X^{-1} for a bare matrix
            let xy = f.x.matmul(&f.y);
            assert!(xy.sub(&DenseComplexMatrix::identity(n)).frobenius_norm() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn eigen_diagonal_matrix() {
        let a = DenseComplexMatrix::from_diagonal(&[c(2.0, 0.0), c(0.0, 3.0)]);
        let f = eigen_decompose(&TemporalCore::from_matrix(a)).unwrap();
        assert_eq!(f.eigenvalues(), vec![c(0.0, 3.0), c(2.0, 0.0)]);
        assert!((f.kappa2 - 1.0).abs() < 1e-14);
        // sorting by real part swaps the two unit eigenvectors
        let swap = DenseComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]);
        assert!(f.x.sub(&swap).frobenius_norm() < 1e-15);
    }

    #[test]
    fn eigen_random_residuals() {
        for (n, seed) in [(2, 20), (5, 21), (16, 22), (64, 23)] {
            let a = random_matrix(n, seed);
            let f = eigen_decompose(&TemporalCore::from_matrix(a.clone())).unwrap();
            let lhs = a.matmul(&f.x);
            let rhs = f.x.matmul(&f.s);
            let err = lhs.sub(&rhs).frobenius_norm() / a.frobenius_norm();
            assert!(err <= 1e-10 * n as f64 * f.kappa2, "n = {n}: {err:e}");
            for j in 0..n {
                let col = f.x.column(j);
                let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-13);
                assert!(col[0].im.abs() < 1e-15 && col[0].re > 0.0);
            }
            let ev = f.eigenvalues();
            assert!(ev.windows(2).all(|w| w[0].re <= w[1].re));
        }
    }

    #[test]
    fn defective_matrix_is_rejected() {
        let a = DenseComplexMatrix::from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]);
        assert!(matches!(
            eigen_decompose(&TemporalCore::from_matrix(a)),
            Err(Error::NotDiagonalizable { .. })
        ));
    }

    #[test]
    fn condition_numbers() {
        let q = schur_decompose(&TemporalCore::from_matrix(random_matrix(6, 5))).unwrap().x;
        assert!((spectral_condition(&q) - 1.0).abs() < 1e-12);
        let d = DenseComplexMatrix::from_diagonal(&[c(3.0, 0.0), c(1.0, 0.0)]);
        assert!((spectral_condition(&d) - 3.0).abs() < 1e-14);
        let j = DenseComplexMatrix::from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]);
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((spectral_condition(&j) - golden).abs() < 1e-12);
        let z = DenseComplexMatrix::zeros(2, 2);
        assert_eq!(spectral_condition(&z), f64::INFINITY);
    }
}
