#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stfem::{BlockVector, Complex64, SpatialMatrices, TemporalMatrices, TemporalMesh};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Explicit `i B_t ⊗ M_x + M_t ⊗ A_x`, temporal index outer.
pub fn global_matrix(spatial: &SpatialMatrices, temporal: &TemporalMatrices) -> DMatrix<Complex64> {
    let mx = spatial.mass.to_dense();
    let ax = spatial.stiffness.to_dense();
    let mt = temporal.mass.to_dense();
    let bt = temporal.derivative.to_dense();
    let (nx, nt) = (mx.len(), mt.len());
    DMatrix::from_fn(nx * nt, nx * nt, |r, s| {
        let (l, i) = (r / nx, r % nx);
        let (k, j) = (s / nx, s % nx);
        c(mt[l][k] * ax[i][j], bt[l][k] * mx[i][j])
    })
}

/// Reference solution by dense LU with partial pivoting.
pub fn dense_reference(spatial: &SpatialMatrices, temporal: &TemporalMatrices, f: &BlockVector) -> BlockVector {
    let a = global_matrix(spatial, temporal);
    let b = DVector::from_column_slice(f.as_slice());
    let x = a.lu().solve(&b).expect("global matrix is regular");
    BlockVector::from_vec(f.n_x(), f.n_t(), x.as_slice().to_vec()).unwrap()
}

pub fn random_block(n_x: usize, n_t: usize, seed: u64) -> BlockVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n_x * n_t)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    BlockVector::from_vec(n_x, n_t, data).unwrap()
}

pub fn relative_error(a: &BlockVector, reference: &BlockVector) -> f64 {
    a.distance(reference) / reference.norm()
}

/// Temporal mass and derivative matrices by Gauss quadrature of the hat
/// functions, entry `[l][k] = ∫ ϕ_k ϕ_l` and `∫ ϕ_k' ϕ_l`.
pub fn temporal_by_quadrature(mesh: &TemporalMesh) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let t = mesh.breakpoints();
    let n = mesh.num_dofs();
    // node l + 1 carries DOF l
    let hat = |l: usize, x: f64| -> (f64, f64) {
        let node = l + 1;
        let left = t[node - 1];
        if x >= left && x <= t[node] {
            let h = t[node] - left;
            return ((x - left) / h, 1.0 / h);
        }
        if node + 1 < t.len() && x > t[node] && x <= t[node + 1] {
            let h = t[node + 1] - t[node];
            return ((t[node + 1] - x) / h, -1.0 / h);
        }
        (0.0, 0.0)
    };
    let gauss = [
        (-(3.0f64 / 5.0).sqrt(), 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        ((3.0f64 / 5.0).sqrt(), 5.0 / 9.0),
    ];
    let mut m = vec![vec![0.0; n]; n];
    let mut b = vec![vec![0.0; n]; n];
    for e in 0..mesh.num_intervals() {
        let (a0, a1) = (t[e], t[e + 1]);
        for &(xi, w) in &gauss {
            let x = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * xi;
            let jw = 0.5 * (a1 - a0) * w;
            for l in 0..n {
                let (vl, _) = hat(l, x);
                if vl == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let (vk, dk) = hat(k, x);
                    m[l][k] += jw * vk * vl;
                    b[l][k] += jw * dk * vl;
                }
            }
        }
    }
    (m, b)
}
