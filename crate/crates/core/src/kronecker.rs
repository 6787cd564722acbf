//! Direct solver for the space-time system
//!
//! ```text
//! (i B_t ⊗ M_x + M_t ⊗ A_x) ψ = f.
//! ```
//!
//! With `C = (i B_t)^{-1} M_t = X_t S_t X_t^{-1}` and
//! `Y_t = X_t^{-1} (i B_t)^{-1}` the solution is
//! `ψ = (X_t ⊗ I)(I ⊗ M_x + S_t ⊗ A_x)^{-1}(Y_t ⊗ I) f`, evaluated in four
//! steps:
//!
//! 1. decompose the temporal core,
//! 2. `g = (Y_t ⊗ I) f`,
//! 3. backward sweep `(M_x + S_t[l,l] A_x) w_l = g_l − Σ_{k>l} S_t[l,k] A_x w_k`,
//! 4. `ψ = (X_t ⊗ I) w`.
//!
//! With a Schur form (Bartels–Stewart) step 3 is sequential. With a diagonal
//! `S_t` (fast diagonalization) the sum vanishes and the `n_t` spatial
//! problems are independent. Kronecker products are never formed.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assembly::{BlockVector, SpatialMatrices, TemporalMatrices};
use crate::dense::{eigen_decompose, form_temporal_core, schur_decompose, DenseComplexMatrix, TemporalFactors};
use crate::error::{Error, Result};
use crate::spatial_solver::SpatialAnalysis;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Complex Schur form of the temporal core; sequential backward sweep.
    BartelsStewart,
    /// Eigendecomposition of the temporal core; independent spatial solves.
    FastDiagonalization,
}

impl Method {
    pub fn short_name(self) -> &'static str {
        match self {
            Method::BartelsStewart => "bs",
            Method::FastDiagonalization => "fd",
        }
    }
}

/// Solver choice plus the number of worker threads it may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverVariant {
    pub method: Method,
    pub threads: usize,
}

impl SolverVariant {
    pub fn bartels_stewart(threads: usize) -> Self {
        SolverVariant {
            method: Method::BartelsStewart,
            threads,
        }
    }

    pub fn fast_diagonalization(threads: usize) -> Self {
        SolverVariant {
            method: Method::FastDiagonalization,
            threads,
        }
    }
}

/// Wall-clock seconds spent in each solver step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepTimings {
    pub decompose: f64,
    pub transform_rhs: f64,
    pub spatial_solves: f64,
    pub transform_solution: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: BlockVector,
    /// Seconds for steps 1–4; residual evaluation is excluded.
    pub solve_seconds: f64,
    pub timings: StepTimings,
    /// `κ₂(X_t)`, 1 for Bartels–Stewart.
    pub kappa2: f64,
    /// `‖f − K ψ‖₂ / ‖f‖₂` (0 when `f = 0`).
    pub relative_residual: f64,
    pub eigenvalues: Vec<Complex64>,
}

fn check_dims(spatial: &SpatialMatrices, temporal: &TemporalMatrices, v: &BlockVector) -> Result<()> {
    let (n_x, n_t) = (spatial.mass.dim(), temporal.mass.dim());
    for (expected, actual) in [
        (n_x, spatial.stiffness.dim()),
        (n_t, temporal.derivative.dim()),
        (n_x, v.n_x()),
        (n_t, v.n_t()),
    ] {
        if expected != actual {
            return Err(Error::DimensionMismatch { expected, actual });
        }
    }
    Ok(())
}

/// `out_l = Σ_k T[l,k] v_k`, i.e. `(T ⊗ I) v`.
pub fn transform_blocks(t: &DenseComplexMatrix, v: &BlockVector) -> Result<BlockVector> {
    let n_t = v.n_t();
    if t.rows() != n_t || t.cols() != n_t {
        return Err(Error::DimensionMismatch {
            expected: n_t,
            actual: t.rows().max(t.cols()),
        });
    }
    let n_x = v.n_x();
    let mut out = BlockVector::zeros(n_x, n_t);
    if n_x == 0 {
        return Ok(out);
    }
    // Row-major n_t × n_x product T · V, split into column slabs of fixed
    // width so the result does not depend on the thread count.
    let dst = SendPtr(out.as_mut_slice().as_mut_ptr().cast::<[f64; 2]>());
    let src = v.as_slice().as_ptr().cast::<[f64; 2]>() as usize;
    let a = t.as_slice().as_ptr().cast::<[f64; 2]>() as usize;
    let slabs = n_x.div_ceil(TRANSFORM_SLAB);
    (0..slabs).into_par_iter().for_each(|s| {
        let j0 = s * TRANSFORM_SLAB;
        let width = TRANSFORM_SLAB.min(n_x - j0);
        let dst = &dst;
        // SAFETY: Complex64 is repr(C) {re, im}, layout-identical to [f64; 2].
        // Slabs cover disjoint column ranges, so the writes never alias, and
        // `t`, `v` and `out` outlive the parallel loop.
        unsafe {
            matrixmultiply::zgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                n_t,
                n_t,
                width,
                [1.0, 0.0],
                a as *const [f64; 2],
                n_t as isize,
                1,
                (src as *const [f64; 2]).add(j0),
                n_x as isize,
                1,
                [0.0, 0.0],
                dst.0.add(j0),
                n_x as isize,
                1,
            );
        }
    });
    Ok(out)
}

const TRANSFORM_SLAB: usize = 512;

struct SendPtr(*mut [f64; 2]);

// SAFETY: only used to hand disjoint column slabs to worker threads.
unsafe impl Sync for SendPtr {}

/// Matrix-free `(i B_t ⊗ M_x + M_t ⊗ A_x) v`.
pub fn apply_global(
    spatial: &SpatialMatrices,
    temporal: &TemporalMatrices,
    v: &BlockVector,
) -> Result<BlockVector> {
    check_dims(spatial, temporal, v)?;
    let (n_x, n_t) = (v.n_x(), v.n_t());
    let mut mv = BlockVector::zeros(n_x, n_t);
    let mut av = BlockVector::zeros(n_x, n_t);
    if n_x == 0 {
        return Ok(mv);
    }
    mv.as_mut_slice()
        .par_chunks_mut(n_x)
        .zip(av.as_mut_slice().par_chunks_mut(n_x))
        .enumerate()
        .for_each(|(k, (m, a))| {
            spatial.mass.matvec_complex_into(v.block(k), m);
            spatial.stiffness.matvec_complex_into(v.block(k), a);
        });
    let mut out = BlockVector::zeros(n_x, n_t);
    out.as_mut_slice()
        .par_chunks_mut(n_x)
        .enumerate()
        .for_each(|(l, block)| {
            for (k, b) in temporal.derivative.row(l) {
                let coeff = I * b;
                for (o, x) in block.iter_mut().zip(mv.block(k)) {
                    *o += coeff * x;
                }
            }
            for (k, m) in temporal.mass.row(l) {
                for (o, x) in block.iter_mut().zip(av.block(k)) {
                    *o += x * m;
                }
            }
        });
    Ok(out)
}

fn decompose(temporal: &TemporalMatrices, method: Method) -> Result<TemporalFactors> {
    let core = form_temporal_core(&temporal.mass, &temporal.derivative)?;
    match method {
        Method::BartelsStewart => schur_decompose(&core),
        Method::FastDiagonalization => eigen_decompose(&core),
    }
}

fn spatial_error(index: usize, shift: Complex64, err: Error) -> Error {
    match err {
        Error::SingularMatrix { index: pivot, .. } => Error::SpatialFactorization { index, shift, pivot },
        other => other,
    }
}

/// Solves the space-time system with the requested variant. Does not fall
/// back to Bartels–Stewart when the temporal core is not diagonalizable;
/// the caller decides.
pub fn solve(
    spatial: &SpatialMatrices,
    temporal: &TemporalMatrices,
    f: &BlockVector,
    variant: SolverVariant,
) -> Result<SolveReport> {
    check_dims(spatial, temporal, f)?;
    if variant.threads == 0 {
        return Err(Error::InvalidArgument("thread budget must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(variant.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    pool.install(|| solve_in_pool(spatial, temporal, f, variant.method))
}

fn solve_in_pool(
    spatial: &SpatialMatrices,
    temporal: &TemporalMatrices,
    f: &BlockVector,
    method: Method,
) -> Result<SolveReport> {
    let (n_x, n_t) = (f.n_x(), f.n_t());
    let start = Instant::now();

    let factors = decompose(temporal, method)?;
    let t1 = Instant::now();

    let mut g = transform_blocks(&factors.y, f)?;
    let t2 = Instant::now();

    let analysis = SpatialAnalysis::new(&spatial.mass, &spatial.stiffness)?;
    let mut w = BlockVector::zeros(n_x, n_t);
    match method {
        Method::FastDiagonalization => {
            let s = &factors.s;
            w.as_mut_slice()
                .par_chunks_mut(n_x.max(1))
                .enumerate()
                .try_for_each(|(l, block)| {
                    let shift = s[(l, l)];
                    let fac = analysis.factor(shift).map_err(|e| spatial_error(l, shift, e))?;
                    fac.solve_into(g.block(l), block)
                })?;
        }
        Method::BartelsStewart => {
            let s = &factors.s;
            let mut aw = vec![ZERO; n_x];
            for l in (0..n_t).rev() {
                let shift = s[(l, l)];
                // factors are used once and dropped to bound memory
                let fac = analysis.factor(shift).map_err(|e| spatial_error(l, shift, e))?;
                fac.solve_into(g.block(l), w.block_mut(l))?;
                if l == 0 {
                    break;
                }
                spatial.stiffness.matvec_complex_into(w.block(l), &mut aw);
                // scatter S[k,l] A_x w_l into every pending right-hand side
                let pending = &mut g.as_mut_slice()[..l * n_x];
                pending.par_chunks_mut(n_x).enumerate().for_each(|(k, gk)| {
                    let skl = s[(k, l)];
                    if skl != ZERO {
                        for (x, a) in gk.iter_mut().zip(&aw) {
                            *x -= skl * a;
                        }
                    }
                });
            }
        }
    }
    let t3 = Instant::now();

    let solution = transform_blocks(&factors.x, &w)?;
    let t4 = Instant::now();

    let residual = apply_global(spatial, temporal, &solution)?;
    let fnorm = f.norm();
    let rnorm = residual.distance(f);
    let relative_residual = if fnorm == 0.0 { rnorm } else { rnorm / fnorm };

    Ok(SolveReport {
        solution,
        solve_seconds: (t4 - start).as_secs_f64(),
        timings: StepTimings {
            decompose: (t1 - start).as_secs_f64(),
            transform_rhs: (t2 - t1).as_secs_f64(),
            spatial_solves: (t3 - t2).as_secs_f64(),
            transform_solution: (t4 - t3).as_secs_f64(),
        },
        kappa2: factors.kappa2,
        relative_residual,
        eigenvalues: factors.eigenvalues(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_spatial, assemble_temporal};
    use crate::spatial_mesh::SpatialMesh;
    use crate::temporal_mesh::TemporalMesh;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_problem() -> (SpatialMatrices, TemporalMatrices) {
        let spatial = assemble_spatial(&SpatialMesh::structured_square(2).unwrap()).unwrap();
        let temporal = assemble_temporal(&TemporalMesh::uniform(1.0, 1).unwrap());
        (spatial, temporal)
    }

    #[test]
    fn scalar_system_both_variants() {
        let (s, t) = scalar_problem();
        let f = BlockVector::from_vec(1, 1, vec![c(1.0, 0.0)]).unwrap();
        let expected = c(1.0, 0.0) / c(4.0 / 3.0, 1.0 / 16.0);
        for variant in [SolverVariant::bartels_stewart(1), SolverVariant::fast_diagonalization(1)] {
            let r = solve(&s, &t, &f, variant).unwrap();
            assert!((r.solution.as_slice()[0] - expected).norm() < 1e-15);
            assert!(r.relative_residual < 1e-15);
        }
    }

    #[test]
    fn scalar_apply() {
        let (s, t) = scalar_problem();
        let v = BlockVector::from_vec(1, 1, vec![c(1.0, 0.0)]).unwrap();
        let out = apply_global(&s, &t, &v).unwrap();
        assert!((out.as_slice()[0] - c(4.0 / 3.0, 1.0 / 16.0)).norm() < 1e-15);
        let zero = BlockVector::zeros(1, 1);
        assert_eq!(apply_global(&s, &t, &zero).unwrap(), zero);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let s = assemble_spatial(&SpatialMesh::structured_square(4).unwrap()).unwrap();
        let t = assemble_temporal(&TemporalMesh::uniform(1.0, 4).unwrap());
        let f = BlockVector::zeros(9, 4);
        for variant in [SolverVariant::bartels_stewart(1), SolverVariant::fast_diagonalization(2)] {
            let r = solve(&s, &t, &f, variant).unwrap();
            assert_eq!(r.solution.norm(), 0.0);
            assert_eq!(r.relative_residual, 0.0);
        }
    }

    #[test]
    fn transform_identity_and_diagonal() {
        let v = BlockVector::from_vec(2, 2, vec![c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0)]).unwrap();
        assert_eq!(transform_blocks(&DenseComplexMatrix::identity(2), &v).unwrap(), v);
        let d = DenseComplexMatrix::from_diagonal(&[c(2.0, 0.0), c(3.0, 0.0)]);
        let out = transform_blocks(&d, &v).unwrap();
        assert_eq!(out.block(0), &[c(2.0, 4.0), c(6.0, 8.0)]);
        assert_eq!(out.block(1), &[c(15.0, 18.0), c(21.0, 24.0)]);
        assert!(transform_blocks(&DenseComplexMatrix::identity(3), &v).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let (s, t) = scalar_problem();
        let f = BlockVector::zeros(2, 1);
        assert!(matches!(
            solve(&s, &t, &f, SolverVariant::bartels_stewart(1)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(solve(&s, &t, &BlockVector::zeros(1, 1), SolverVariant::bartels_stewart(0)).is_err());
    }
}
