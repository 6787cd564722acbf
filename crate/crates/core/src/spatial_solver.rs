//! Sparse direct solver for the shifted spatial systems
//! `K_λ = M_x + λ A_x` with complex `λ`.
//!
//! `K_λ` is complex symmetric (`K_λᵀ = K_λ`), so it is factored as
//! `P K_λ Pᵀ = L D Lᵀ` without pivoting. For `Im λ ≠ 0` the imaginary part
//! `Im λ · A_x` is definite, and for `Re λ ≥ 0` the real part is, which keeps
//! the unpivoted factorization stable. The fill-reducing permutation `P`,
//! the elimination tree and the column counts of `L` depend only on the
//! sparsity pattern; they are computed once in [`SpatialAnalysis`] and shared
//! by every factorization.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseRealMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Pivots smaller than this, relative to the diagonal entry of `K_λ`,
/// count as a breakdown.
const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug)]
struct AnalysisInner {
    n: usize,
    /// `perm[k]` is the original index eliminated at step `k`.
    perm: Vec<usize>,
    /// Upper triangle of the permuted pattern, stored by column: entries
    /// `(i, k)` with `i ≤ k` as `(i, index into mass/stiffness values)`.
    upper_ptr: Vec<usize>,
    upper: Vec<(usize, usize)>,
    mass_vals: Vec<f64>,
    stiff_vals: Vec<f64>,
    parent: Vec<Option<usize>>,
    l_ptr: Vec<usize>,
    mass: SparseRealMatrix,
    stiffness: SparseRealMatrix,
}

/// Symbolic analysis of `M_x + λ A_x`, reusable for every shift `λ`.
#[derive(Debug, Clone)]
pub struct SpatialAnalysis {
    inner: Arc<AnalysisInner>,
}

impl SpatialAnalysis {
    pub fn new(mass: &SparseRealMatrix, stiffness: &SparseRealMatrix) -> Result<Self> {
        let n = mass.dim();
        if stiffness.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: stiffness.dim(),
            });
        }
        // union pattern with values of both matrices aligned
        let mut rows: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            let mut entries: Vec<(usize, f64, f64)> = mass
                .row(i)
                .map(|(j, v)| (j, v, 0.0))
                .chain(stiffness.row(i).map(|(j, v)| (j, 0.0, v)))
                .collect();
            entries.sort_by_key(|e| e.0);
            for (j, m, a) in entries {
                match row.last_mut() {
                    Some(last) if last.0 == j => {
                        last.1 += m;
                        last.2 += a;
                    }
                    _ => row.push((j, m, a)),
                }
            }
        }
        let adjacency: Vec<Vec<usize>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().map(|e| e.0).filter(|&j| j != i).collect())
            .collect();
        let perm = minimum_degree_order(symmetrize(adjacency));
        let mut iperm = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }

        let mut mass_vals = Vec::new();
        let mut stiff_vals = Vec::new();
        let mut upper_ptr = Vec::with_capacity(n + 1);
        let mut upper = Vec::new();
        upper_ptr.push(0);
        for k in 0..n {
            let mut col: Vec<(usize, usize)> = Vec::new();
            for &(j, m, a) in &rows[perm[k]] {
                let i = iperm[j];
                if i <= k {
                    col.push((i, mass_vals.len()));
                    mass_vals.push(m);
                    stiff_vals.push(a);
                }
            }
            col.sort_by_key(|e| e.0);
            upper.extend(col);
            upper_ptr.push(upper.len());
        }

        // elimination tree and column counts of L
        let mut parent = vec![None; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &(i0, _) in &upper[upper_ptr[k]..upper_ptr[k + 1]] {
                let mut i = i0;
                while i < k && flag[i] != k {
                    if parent[i].is_none() {
                        parent[i] = Some(k);
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i].unwrap();
                }
            }
        }
        let mut l_ptr = Vec::with_capacity(n + 1);
        l_ptr.push(0);
        for k in 0..n {
            l_ptr.push(l_ptr[k] + lnz[k]);
        }

        Ok(SpatialAnalysis {
            inner: Arc::new(AnalysisInner {
                n,
                perm,
                upper_ptr,
                upper,
                mass_vals,
                stiff_vals,
                parent,
                l_ptr,
                mass: mass.clone(),
                stiffness: stiffness.clone(),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.n
    }

    /// Number of strictly lower entries in `L`.
    pub fn factor_nnz(&self) -> usize {
        *self.inner.l_ptr.last().unwrap()
    }

    /// Fill-reducing elimination order.
    pub fn permutation(&self) -> &[usize] {
        &self.inner.perm
    }

    /// Numeric `L D Lᵀ` factorization of `M_x + λ A_x`. On breakdown the
    /// error carries the offending pivot position.
    pub fn factor(&self, shift: Complex64) -> Result<SpatialFactorization> {
        let a = &*self.inner;
        let n = a.n;
        let nnz = self.factor_nnz();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![ZERO; nnz];
        let mut d = vec![ZERO; n];
        let mut y = vec![ZERO; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        let mut pattern = vec![0usize; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let mut diag_scale = 0.0;
            for &(i0, vi) in &a.upper[a.upper_ptr[k]..a.upper_ptr[k + 1]] {
                let val = shift * a.stiff_vals[vi] + a.mass_vals[vi];
                y[i0] += val;
                if i0 == k {
                    diag_scale = val.norm();
                }
                let mut len = 0;
                let mut i = i0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = a.parent[i].expect("row pattern follows the elimination tree");
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = y[k];
            y[k] = ZERO;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = ZERO;
                let start = a.l_ptr[i];
                let end = start + lnz[i];
                for p in start..end {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                dk -= l_ki * yi;
                li[end] = k;
                lx[end] = l_ki;
                lnz[i] += 1;
            }
            if !(dk.norm() > PIVOT_TOL * diag_scale) || !dk.re.is_finite() || !dk.im.is_finite() {
                return Err(Error::SingularMatrix {
                    index: k,
                    magnitude: dk.norm(),
                });
            }
            d[k] = dk;
        }
        Ok(SpatialFactorization {
            analysis: self.clone(),
            shift,
            li,
            lx,
            d,
        })
    }
}

/// Numeric factorization of `K_λ = M_x + λ A_x`; immutable and shareable
/// across threads.
#[derive(Debug, Clone)]
pub struct SpatialFactorization {
    analysis: SpatialAnalysis,
    shift: Complex64,
    li: Vec<usize>,
    lx: Vec<Complex64>,
    d: Vec<Complex64>,
}

impl SpatialFactorization {
    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Row indices of the strictly lower part of `L`, column by column.
    pub fn factor_pattern(&self) -> &[usize] {
        &self.li
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![ZERO; self.dim()];
        self.solve_into(b, &mut out)?;
        Ok(out)
    }

    /// Writes `K_λ^{-1} b` into `out`.
    pub fn solve_into(&self, b: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let a = &*self.analysis.inner;
        let n = a.n;
        for len in [b.len(), out.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        let mut x: Vec<Complex64> = a.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != ZERO {
                for p in a.l_ptr[j]..a.l_ptr[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in a.l_ptr[j]..a.l_ptr[j + 1] {
                acc -= self.lx[p] * x[self.li[p]];
            }
            x[j] = acc;
        }
        for (k, &p) in a.perm.iter().enumerate() {
            out[p] = x[k];
        }
        Ok(())
    }

    /// `K_λ v` using the original matrices.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let a = &*self.analysis.inner;
        let mut mv = a.mass.matvec_complex(v)?;
        let av = a.stiffness.matvec_complex(v)?;
        for (m, s) in mv.iter_mut().zip(av) {
            *m += self.shift * s;
        }
        Ok(mv)
    }

    /// `‖K_λ‖₁ ≤ ‖M_x‖₁ + |λ| ‖A_x‖₁`, used for residual bounds.
    pub fn norm_one_bound(&self) -> f64 {
        let a = &*self.analysis.inner;
        a.mass.norm_one() + self.shift.norm() * a.stiffness.norm_one()
    }
}

/// Factor and analyse in one go.
pub fn factor(
    mass: &SparseRealMatrix,
    stiffness: &SparseRealMatrix,
    shift: Complex64,
) -> Result<SpatialFactorization> {
    SpatialAnalysis::new(mass, stiffness)?.factor(shift)
}

fn symmetrize(mut adj: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut extra: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in adj.iter().enumerate() {
        for &j in row {
            extra[j].push(i);
        }
    }
    for (row, more) in adj.iter_mut().zip(extra) {
        row.extend(more);
        row.sort_unstable();
        row.dedup();
    }
    adj
}

/// Minimum degree ordering on the explicit elimination graph. Ties go to
/// the lowest index, so the order is deterministic.
fn minimum_degree_order(mut adj: Vec<Vec<usize>>) -> Vec<usize> {
    let n = adj.len();
    let mut queue: BTreeSet<(usize, usize)> = adj.iter().enumerate().map(|(i, a)| (a.len(), i)).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            let old = adj[u].len();
            merged.clear();
            // adj[u] ∪ nbrs \ {u, v}, both sorted
            let (a, b) = (&adj[u], &nbrs);
            let (mut p, mut q) = (0, 0);
            while p < a.len() || q < b.len() {
                let next = match (a.get(p), b.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        x
                    }
                    (Some(&x), None) => {
                        p += 1;
                        x
                    }
                    (_, Some(&y)) => {
                        q += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != v {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            queue.remove(&(old, u));
            queue.insert((adj[u].len(), u));
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_spatial;
    use crate::spatial_mesh::SpatialMesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn residual_ok(f: &SpatialFactorization, w: &[Complex64], b: &[Complex64]) -> bool {
        let kw = f.apply(w).unwrap();
        let r: Vec<Complex64> = kw.iter().zip(b).map(|(x, y)| x - y).collect();
        norm(&r) <= 1e-10 * (f.norm_one_bound() * norm(w) + norm(b))
    }

    #[test]
    fn scalar_system() {
        let mesh = SpatialMesh::structured_square(2).unwrap();
        let m = assemble_spatial(&mesh).unwrap();
        let shift = c(0.0, -2.0 / 3.0);
        let f = factor(&m.mass, &m.stiffness, shift).unwrap();
        let w = f.solve(&[c(1.0, 0.0)]).unwrap();
        let expected = c(1.0, 0.0) / c(1.0 / 8.0, -8.0 / 3.0);
        assert!((w[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn zero_shift_recovers_ones() {
        let mesh = SpatialMesh::structured_square(6).unwrap();
        let m = assemble_spatial(&mesh).unwrap();
        let f = factor(&m.mass, &m.stiffness, c(0.0, 0.0)).unwrap();
        let ones = vec![c(1.0, 0.0); m.mass.dim()];
        let b = m.mass.matvec_complex(&ones).unwrap();
        let w = f.solve(&b).unwrap();
        assert!(w.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-12));
        assert!(f.solve(&vec![c(0.0, 0.0); m.mass.dim()]).unwrap().iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn random_rhs_residual() {
        let mesh = SpatialMesh::structured_square(8).unwrap();
        let m = assemble_spatial(&mesh).unwrap();
        let f = factor(&m.mass, &m.stiffness, c(1.0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b: Vec<Complex64> = (0..m.mass.dim())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let w = f.solve(&b).unwrap();
        assert!(residual_ok(&f, &w, &b));
        assert!(f.solve(&b[1..]).is_err());
    }

    #[test]
    fn admissible_shifts_factor() {
        let mesh = SpatialMesh::structured_square(8).unwrap();
        let m = assemble_spatial(&mesh).unwrap();
        let analysis = SpatialAnalysis::new(&m.mass, &m.stiffness).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pattern: Option<Vec<usize>> = None;
        let b: Vec<Complex64> = (0..m.mass.dim()).map(|i| c(i as f64, 1.0)).collect();
        for _ in 0..100 {
            let shift = if rng.gen_bool(0.5) {
                c(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0))
            } else {
                c(rng.gen_range(0.0..10.0), 0.0)
            };
            let f = analysis.factor(shift).unwrap();
            let w = f.solve(&b).unwrap();
            assert!(residual_ok(&f, &w, &b), "shift {shift}");
            match &pattern {
                None => pattern = Some(f.factor_pattern().to_vec()),
                Some(p) => assert_eq!(p.as_slice(), f.factor_pattern()),
            }
        }
    }

    #[test]
    fn generalized_eigenvalue_shift_breaks_down() {
        // 1D: M = [1/3], A = [4] on two intervals of length 1/2, so
        // λ = −1/12 makes K singular.
        let mesh = SpatialMesh::interval(2, 1.0).unwrap();
        let m = assemble_spatial(&mesh).unwrap();
        let err = factor(&m.mass, &m.stiffness, c(-1.0 / 12.0, 0.0));
        assert!(matches!(err, Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn ordering_reduces_fill() {
        let mesh = SpatialMesh::structured_square(32).unwrap();
        let m = assemble_spatial(&mesh).unwrap();
        let analysis = SpatialAnalysis::new(&m.mass, &m.stiffness).unwrap();
        let n = m.mass.dim();
        let mut perm = analysis.permutation().to_vec();
        perm.sort_unstable();
        assert_eq!(perm, (0..n).collect::<Vec<_>>());
        // banded elimination in natural order would store about n * 31 entries
        assert!(analysis.factor_nnz() < n * 31 * 6 / 10, "fill {}", analysis.factor_nnz());
    }
}
