//! Quadrature on the reference interval `[0, 1]` and the reference
//! triangle with vertices `(0,0)`, `(1,0)`, `(0,1)`.

use crate::error::{Error, Result};

/// Largest Gauss–Legendre rule we generate.
pub const MAX_GAUSS_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates; the second entry is unused for intervals.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Polynomials up to this total degree are integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `k`-point Gauss–Legendre rule on `[0, 1]`, exact up to degree `2k − 1`.
pub fn gauss_legendre(k: usize) -> Result<QuadratureRule> {
    if k == 0 || k > MAX_GAUSS_POINTS {
        return Err(Error::UnsupportedQuadrature(k));
    }
    let (nodes, weights) = legendre_nodes(k);
    Ok(QuadratureRule {
        points: nodes.iter().map(|&x| [0.5 * (x + 1.0), 0.0]).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        degree: 2 * k - 1,
    })
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_k`.
fn legendre_nodes(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_eval(k, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_k(x), P_k'(x))` by the three-term recurrence.
fn legendre_eval(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return (1.0, 0.0);
    }
    for n in 2..=k {
        let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Triangle rule exact to at least `degree`. Degrees up to 5 use the
/// 7-point Radon rule; higher degrees use a collapsed Gauss product rule.
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    if degree <= 5 {
        return Ok(radon7());
    }
    // Duffy map (u, v) -> (u (1 - v), v) with Jacobian (1 - v): an integrand
    // of total degree p becomes degree p in u and p + 1 in v.
    let k = (degree + 2).div_ceil(2);
    if k > MAX_GAUSS_POINTS {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    let g = gauss_legendre(k)?;
    let mut points = Vec::with_capacity(k * k);
    let mut weights = Vec::with_capacity(k * k);
    for (pu, wu) in g.points.iter().zip(&g.weights) {
        for (pv, wv) in g.points.iter().zip(&g.weights) {
            let (u, v) = (pu[0], pv[0]);
            points.push([u * (1.0 - v), v]);
            weights.push(wu * wv * (1.0 - v));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        degree: 2 * k - 2,
    })
}

fn radon7() -> QuadratureRule {
    let s = 15f64.sqrt();
    let a = (6.0 - s) / 21.0;
    let b = (6.0 + s) / 21.0;
    let wa = (155.0 - s) / 2400.0;
    let wb = (155.0 + s) / 2400.0;
    QuadratureRule {
        points: vec![
            [1.0 / 3.0, 1.0 / 3.0],
            [a, a],
            [1.0 - 2.0 * a, a],
            [a, 1.0 - 2.0 * a],
            [b, b],
            [1.0 - 2.0 * b, b],
            [b, 1.0 - 2.0 * b],
        ],
        weights: vec![9.0 / 80.0, wa, wa, wa, wb, wb, wb],
        degree: 5,
    }
}
