//! Assembly of the P1 spatial and temporal matrices and of the space-time
//! load vector.
//!
//! All matrices use the convention `row = test index, column = trial index`:
//!
//! ```text
//! M_x[k, j] = ∫_Ω φ_j φ_k dx         A_x[k, j] = ∫_Ω ∇φ_j · ∇φ_k dx
//! M_t[k, j] = ∫_0^T ϕ_j ϕ_k dt       B_t[k, j] = ∫_0^T ϕ_j' ϕ_k dt
//! ```
//!
//! Element matrices are evaluated in closed form; quadrature is only used
//! for the load vector.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, triangle_rule};
use crate::sparse::SparseRealMatrix;
use crate::spatial_mesh::SpatialMesh;
use crate::temporal_mesh::TemporalMesh;

/// Gauss points per temporal element for the load vector and error norms.
pub const TEMPORAL_QUADRATURE_POINTS: usize = 5;
/// Exactness degree of the spatial rule for the load vector and error norms.
pub const SPATIAL_QUADRATURE_DEGREE: usize = 5;

/// Complex coefficient vector of length `n_x · n_t` with the temporal index
/// outermost: the entry for temporal DOF `l` (0-based, node `t_{l+1}`) and
/// spatial DOF `j` is stored at `l · n_x + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    n_x: usize,
    n_t: usize,
    data: Vec<Complex64>,
}

impl BlockVector {
    pub fn zeros(n_x: usize, n_t: usize) -> Self {
        BlockVector {
            n_x,
            n_t,
            data: vec![Complex64::new(0.0, 0.0); n_x * n_t],
        }
    }

    pub fn from_vec(n_x: usize, n_t: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n_x * n_t {
            return Err(Error::DimensionMismatch {
                expected: n_x * n_t,
                actual: data.len(),
            });
        }
        Ok(BlockVector { n_x, n_t, data })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, l: usize) -> &[Complex64] {
        &self.data[l * self.n_x..(l + 1) * self.n_x]
    }

    pub fn block_mut(&mut self, l: usize) -> &mut [Complex64] {
        &mut self.data[l * self.n_x..(l + 1) * self.n_x]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &BlockVector) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Spatial mass and stiffness matrices restricted to interior DOFs.
#[derive(Debug, Clone)]
pub struct SpatialMatrices {
    pub mass: SparseRealMatrix,
    pub stiffness: SparseRealMatrix,
}

/// Temporal mass matrix `M_t` and derivative matrix `B_t`.
#[derive(Debug, Clone)]
pub struct TemporalMatrices {
    pub mass: SparseRealMatrix,
    pub derivative: SparseRealMatrix,
}

/// Element mass and stiffness matrices for P1 on element `e`.
fn element_matrices(mesh: &SpatialMesh, e: usize) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let mut mass = [[0.0; 3]; 3];
    let mut stiff = [[0.0; 3]; 3];
    let measure = mesh.element_measure(e);
    let grads = mesh.barycentric_gradients(e);
    let nloc = mesh.dim() + 1;
    for a in 0..nloc {
        for b in 0..nloc {
            mass[a][b] = match mesh.dim() {
                1 => measure / 6.0 * if a == b { 2.0 } else { 1.0 },
                _ => measure / 12.0 * if a == b { 2.0 } else { 1.0 },
            };
            stiff[a][b] = measure * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
        }
    }
    (mass, stiff)
}

pub fn assemble_spatial(mesh: &SpatialMesh) -> Result<SpatialMatrices> {
    let n = mesh.num_dofs();
    if n == 0 {
        return Err(Error::NoInteriorDofs);
    }
    let nloc = mesh.dim() + 1;
    let mut mass = Vec::with_capacity(mesh.num_elements() * nloc * nloc);
    let mut stiff = Vec::with_capacity(mesh.num_elements() * nloc * nloc);
    for e in 0..mesh.num_elements() {
        let (me, ae) = element_matrices(mesh, e);
        let cell = mesh.element(e);
        for a in 0..nloc {
            let Some(k) = mesh.dof_of_vertex(cell[a]) else { continue };
            for b in 0..nloc {
                let Some(j) = mesh.dof_of_vertex(cell[b]) else { continue };
                mass.push((k, j, me[a][b]));
                stiff.push((k, j, ae[a][b]));
            }
        }
    }
    Ok(SpatialMatrices {
        mass: SparseRealMatrix::from_triplets(n, &mass, true),
        stiffness: SparseRealMatrix::from_triplets(n, &stiff, true),
    })
}

/// Tridiagonal `M_t` and `B_t` for the hat functions at `t_1 … t_N`.
pub fn assemble_temporal(mesh: &TemporalMesh) -> TemporalMatrices {
    let n = mesh.num_dofs();
    let mut mass = Vec::with_capacity(4 * n);
    let mut deriv = Vec::with_capacity(4 * n);
    for e in 0..mesh.num_intervals() {
        let h = mesh.step(e);
        // local nodes t_e (DOF e − 1, absent for e = 0) and t_{e+1} (DOF e)
        let dofs = [e.checked_sub(1), Some(e)];
        let me = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        let be = [[-0.5, 0.5], [-0.5, 0.5]];
        for a in 0..2 {
            let Some(k) = dofs[a] else { continue };
            for b in 0..2 {
                let Some(j) = dofs[b] else { continue };
                mass.push((k, j, me[a][b]));
                deriv.push((k, j, be[a][b]));
            }
        }
    }
    TemporalMatrices {
        mass: SparseRealMatrix::from_triplets(n, &mass, true),
        derivative: SparseRealMatrix::from_triplets(n, &deriv, false),
    }
}

/// `∫_0^T ϕ_l dt` for every temporal DOF.
pub fn temporal_basis_integrals(mesh: &TemporalMesh) -> Vec<f64> {
    let n = mesh.num_dofs();
    (0..n)
        .map(|l| {
            let left = mesh.step(l);
            let right = if l + 1 < n { mesh.step(l + 1) } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Reference-element quadrature weights and the values of the local basis
/// functions at the quadrature points.
pub(crate) struct SpatialQuadrature {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub basis: Vec<[f64; 3]>,
}

impl SpatialQuadrature {
    pub fn new(mesh: &SpatialMesh) -> Result<Self> {
        let dim = mesh.dim();
        let (points, weights) = if dim == 1 {
            let g = gauss_legendre(SPATIAL_QUADRATURE_DEGREE.div_ceil(2).max(TEMPORAL_QUADRATURE_POINTS))?;
            (g.points, g.weights)
        } else {
            let r = triangle_rule(SPATIAL_QUADRATURE_DEGREE)?;
            (r.points, r.weights)
        };
        let basis = points
            .iter()
            .map(|p| match dim {
                1 => [1.0 - p[0], p[0], 0.0],
                _ => [1.0 - p[0] - p[1], p[0], p[1]],
            })
            .collect();
        Ok(SpatialQuadrature {
            dim,
            weights,
            basis,
        })
    }

    /// Physical points and Jacobian-scaled weights on element `e`.
    pub fn map(&self, mesh: &SpatialMesh, e: usize, xs: &mut Vec<[f64; 2]>, ws: &mut Vec<f64>) {
        xs.clear();
        ws.clear();
        let cell = mesh.element(e);
        let jac = match self.dim {
            1 => mesh.element_measure(e),
            _ => 2.0 * mesh.element_measure(e),
        };
        for (q, lam) in self.basis.iter().enumerate() {
            let mut x = [0.0; 2];
            for (a, &v) in cell.iter().enumerate() {
                let p = mesh.vertex(v);
                for k in 0..self.dim {
                    x[k] += lam[a] * p[k];
                }
            }
            xs.push(x);
            ws.push(self.weights[q] * jac);
        }
    }
}

/// Load vector `⟨f, φ_j ϕ_l⟩_{L²(Q)} − a(ψ0, φ_j ϕ_l)`.
///
/// The initial datum enters through its P1 interpolant, so the lifting term
/// is `(∫ϕ_l dt) · (A_x ψ0)_j`; the time-derivative part vanishes because
/// `ψ0` does not depend on `t`.
pub fn assemble_rhs<F, G>(
    mesh_x: &SpatialMesh,
    mesh_t: &TemporalMesh,
    source: F,
    psi0: G,
    stiffness: &SparseRealMatrix,
) -> Result<BlockVector>
where
    F: Fn(&[f64], f64) -> Complex64 + Sync,
    G: Fn(&[f64]) -> Complex64,
{
    const BOUNDARY_TOL: f64 = 1e-12;
    let n_x = mesh_x.num_dofs();
    let n_t = mesh_t.num_dofs();
    if stiffness.dim() != n_x {
        return Err(Error::DimensionMismatch {
            expected: n_x,
            actual: stiffness.dim(),
        });
    }
    let mut interior = vec![Complex64::new(0.0, 0.0); n_x];
    for v in 0..mesh_x.num_vertices() {
        let val = psi0(mesh_x.vertex(v));
        match mesh_x.dof_of_vertex(v) {
            Some(j) => interior[j] = val,
            None if val.norm() > BOUNDARY_TOL => {
                return Err(Error::NonzeroBoundaryData {
                    vertex: v,
                    value: val.norm(),
                })
            }
            None => {}
        }
    }

    let squad = SpatialQuadrature::new(mesh_x)?;
    let tquad = gauss_legendre(TEMPORAL_QUADRATURE_POINTS)?;
    let nloc = mesh_x.dim() + 1;

    // Each temporal element contributes to the DOFs at its left node (absent
    // for the first element) and at its right node.
    let contributions: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..mesh_t.num_intervals())
        .into_par_iter()
        .map(|e| {
            let t0 = mesh_t.breakpoints()[e];
            let h = mesh_t.step(e);
            let mut left = vec![Complex64::new(0.0, 0.0); n_x];
            let mut right = vec![Complex64::new(0.0, 0.0); n_x];
            let (mut xs, mut ws) = (Vec::new(), Vec::new());
            for el in 0..mesh_x.num_elements() {
                let cell = mesh_x.element(el);
                if cell.iter().all(|&v| mesh_x.dof_of_vertex(v).is_none()) {
                    continue;
                }
                squad.map(mesh_x, el, &mut xs, &mut ws);
                let mut loc_left = [Complex64::new(0.0, 0.0); 3];
                let mut loc_right = [Complex64::new(0.0, 0.0); 3];
                for (tp, tw) in tquad.points.iter().zip(&tquad.weights) {
                    let s = tp[0];
                    let t = t0 + s * h;
                    let wt = tw * h;
                    for (q, x) in xs.iter().enumerate() {
                        let fv = source(&x[..mesh_x.dim()], t) * (ws[q] * wt);
                        let lam = &squad.basis[q];
                        for a in 0..nloc {
                            let g = fv * lam[a];
                            loc_left[a] += g * (1.0 - s);
                            loc_right[a] += g * s;
                        }
                    }
                }
                for a in 0..nloc {
                    if let Some(j) = mesh_x.dof_of_vertex(cell[a]) {
                        left[j] += loc_left[a];
                        right[j] += loc_right[a];
                    }
                }
            }
            (left, right)
        })
        .collect();

    let mut rhs = BlockVector::zeros(n_x, n_t);
    for (e, (left, right)) in contributions.into_iter().enumerate() {
        if e > 0 {
            for (r, v) in rhs.block_mut(e - 1).iter_mut().zip(&left) {
                *r += v;
            }
        }
        for (r, v) in rhs.block_mut(e).iter_mut().zip(&right) {
            *r += v;
        }
    }

    if interior.iter().any(|z| z.norm() != 0.0) {
        let lift = stiffness.matvec_complex(&interior)?;
        for (l, w) in temporal_basis_integrals(mesh_t).into_iter().enumerate() {
            for (r, a) in rhs.block_mut(l).iter_mut().zip(&lift) {
                *r -= a * w;
            }
        }
    }
    Ok(rhs)
}
