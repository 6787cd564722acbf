//! Space-time errors `‖ψ − ψ_h‖_{L²(Q)}` and
//! `|ψ − ψ_h|_{H¹(Q)} = (‖∂_t(ψ − ψ_h)‖² + ‖∇_x(ψ − ψ_h)‖²)^{1/2}`, and
//! estimated orders of convergence.
//!
//! The discrete solution is `ψ_h = ψ̂_h + ψ0` where `ψ̂_h` is the tensor P1
//! function given by the coefficient vector (zero at `t = 0` and on `∂Ω`).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assembly::{BlockVector, SpatialQuadrature, TEMPORAL_QUADRATURE_POINTS};
use crate::error::{Error, Result};
use crate::problem::ExactSolution;
use crate::quadrature::gauss_legendre;
use crate::spatial_mesh::SpatialMesh;
use crate::temporal_mesh::TemporalMesh;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    pub l2: f64,
    pub h1: f64,
}

fn check_dims(coeffs: &BlockVector, mesh_x: &SpatialMesh, mesh_t: &TemporalMesh) -> Result<()> {
    for (expected, actual) in [(mesh_x.num_dofs(), coeffs.n_x()), (mesh_t.num_dofs(), coeffs.n_t())] {
        if expected != actual {
            return Err(Error::DimensionMismatch { expected, actual });
        }
    }
    Ok(())
}

/// Coefficient of `ψ̂_h` at spatial vertex `v` and temporal node `node`.
#[inline]
fn nodal(coeffs: &BlockVector, mesh_x: &SpatialMesh, v: usize, node: usize) -> Complex64 {
    match (node, mesh_x.dof_of_vertex(v)) {
        (0, _) | (_, None) => ZERO,
        (n, Some(j)) => coeffs.block(n - 1)[j],
    }
}

/// `ψ_h(x, t) = Σ c_{jl} φ_j(x) ϕ_l(t) + ψ0(x)`.
pub fn evaluate_fe<G>(
    coeffs: &BlockVector,
    psi0: G,
    mesh_x: &SpatialMesh,
    mesh_t: &TemporalMesh,
    x: &[f64],
    t: f64,
) -> Result<Complex64>
where
    G: Fn(&[f64]) -> Complex64,
{
    check_dims(coeffs, mesh_x, mesh_t)?;
    let outside = || Error::OutsideDomain(format!("x = {x:?}, t = {t}"));
    if x.len() != mesh_x.dim() {
        return Err(outside());
    }
    let (e, bary) = mesh_x.locate(x).ok_or_else(outside)?;
    let te = mesh_t.locate(t).ok_or_else(outside)?;
    let s = (t - mesh_t.breakpoints()[te]) / mesh_t.step(te);
    let mut value = psi0(x);
    for (a, &v) in mesh_x.element(e).iter().enumerate() {
        let left = nodal(coeffs, mesh_x, v, te);
        let right = nodal(coeffs, mesh_x, v, te + 1);
        value += (left * (1.0 - s) + right * s) * bary[a];
    }
    Ok(value)
}

/// Space-time `L²` and `H¹`-seminorm errors by tensor quadrature on every
/// prism `ω × (t_{e}, t_{e+1})`.
pub fn spacetime_errors(
    coeffs: &BlockVector,
    exact: &dyn ExactSolution,
    mesh_x: &SpatialMesh,
    mesh_t: &TemporalMesh,
) -> Result<ErrorPair> {
    check_dims(coeffs, mesh_x, mesh_t)?;
    if exact.dim() != mesh_x.dim() {
        return Err(Error::InvalidArgument(format!(
            "exact solution has dimension {} but the mesh has dimension {}",
            exact.dim(),
            mesh_x.dim()
        )));
    }
    let squad = SpatialQuadrature::new(mesh_x)?;
    let tquad = gauss_legendre(TEMPORAL_QUADRATURE_POINTS)?;
    let dim = mesh_x.dim();
    let nloc = dim + 1;

    let per_element: Vec<(f64, f64)> = (0..mesh_x.num_elements())
        .into_par_iter()
        .map(|el| {
            let (mut xs, mut ws) = (Vec::new(), Vec::new());
            squad.map(mesh_x, el, &mut xs, &mut ws);
            let cell = mesh_x.element(el);
            let grads = mesh_x.barycentric_gradients(el);
            let init: Vec<(Complex64, [Complex64; 2])> = xs
                .iter()
                .map(|x| (exact.initial(&x[..dim]), exact.gradient(&x[..dim], 0.0)))
                .collect();
            let (mut l2, mut h1) = (0.0, 0.0);
            let mut left = [ZERO; 3];
            let mut right = [ZERO; 3];
            for e in 0..mesh_t.num_intervals() {
                for a in 0..nloc {
                    left[a] = nodal(coeffs, mesh_x, cell[a], e);
                    right[a] = nodal(coeffs, mesh_x, cell[a], e + 1);
                }
                let t0 = mesh_t.breakpoints()[e];
                let h = mesh_t.step(e);
                let mut grad_left = [ZERO; 2];
                let mut grad_right = [ZERO; 2];
                for a in 0..nloc {
                    for k in 0..dim {
                        grad_left[k] += left[a] * grads[a][k];
                        grad_right[k] += right[a] * grads[a][k];
                    }
                }
                for (tp, tw) in tquad.points.iter().zip(&tquad.weights) {
                    let s = tp[0];
                    let t = t0 + s * h;
                    for (q, x) in xs.iter().enumerate() {
                        let lam = &squad.basis[q];
                        let mut vh = ZERO;
                        let mut dth = ZERO;
                        for a in 0..nloc {
                            vh += (left[a] * (1.0 - s) + right[a] * s) * lam[a];
                            dth += (right[a] - left[a]) * lam[a];
                        }
                        dth /= h;
                        let (v, dt, g) = exact.jet(&x[..dim], t);
                        let (v0, g0) = &init[q];
                        let w = ws[q] * tw * h;
                        l2 += w * (v - v0 - vh).norm_sqr();
                        let mut grad_err = (dt - dth).norm_sqr();
                        for k in 0..dim {
                            let gh = grad_left[k] * (1.0 - s) + grad_right[k] * s;
                            grad_err += (g[k] - g0[k] - gh).norm_sqr();
                        }
                        h1 += w * grad_err;
                    }
                }
            }
            (l2, h1)
        })
        .collect();

    let (l2, h1) = per_element
        .into_iter()
        .fold((0.0, 0.0), |acc, (a, b)| (acc.0 + a, acc.1 + b));
    Ok(ErrorPair {
        l2: l2.sqrt(),
        h1: h1.sqrt(),
    })
}

/// `eoc_J = log(e_{J−1} / e_J) / log(ratio)` for consecutive levels.
pub fn eoc(errors: &[f64], ratio: f64) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InvalidArgument("eoc needs at least two error values".into()));
    }
    if let Some(bad) = errors.iter().find(|&&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eoc needs positive finite errors, got {bad}"
        )));
    }
    if !(ratio > 1.0) {
        return Err(Error::InvalidArgument("mesh ratio must exceed 1".into()));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).ln() / ratio.ln()).collect())
}
