//! Closed-form solutions used to drive convergence studies.

use std::f64::consts::PI;

use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A wave function `ψ(x, t)` with its derivatives and the matching source
/// `f = i ∂_t ψ − Δ_x ψ`. Gradients use two slots; the second is zero for
/// `d = 1`.
pub trait ExactSolution: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], t: f64) -> Complex64;

    fn time_derivative(&self, x: &[f64], t: f64) -> Complex64;

    fn gradient(&self, x: &[f64], t: f64) -> [Complex64; 2];

    /// `Δ_x ψ` from the second derivatives.
    fn laplacian(&self, x: &[f64], t: f64) -> Complex64;

    fn source(&self, x: &[f64], t: f64) -> Complex64;

    /// `ψ0 = ψ(·, 0)`.
    fn initial(&self, x: &[f64]) -> Complex64 {
        self.value(x, 0.0)
    }

    /// Value, time derivative and gradient in one call.
    fn jet(&self, x: &[f64], t: f64) -> (Complex64, Complex64, [Complex64; 2]) {
        (self.value(x, t), self.time_derivative(x, t), self.gradient(x, t))
    }
}

/// `ψ = e^{it} sin(πx₁) sin(πx₂) sin(t x₁ x₂)` on the unit square, or
/// `ψ = e^{it} sin(πx/L) sin(t x)` on `(0, L)`. Both vanish at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    dim: usize,
    length: f64,
}

impl Manufactured {
    pub fn square() -> Self {
        Manufactured { dim: 2, length: 1.0 }
    }

    pub fn interval(length: f64) -> Self {
        Manufactured { dim: 1, length }
    }
}

impl ExactSolution for Manufactured {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], t: f64) -> Complex64 {
        let phase = Complex64::from_polar(1.0, t);
        match self.dim {
            1 => phase * (PI * x[0] / self.length).sin() * (t * x[0]).sin(),
            _ => phase * (PI * x[0]).sin() * (PI * x[1]).sin() * (t * x[0] * x[1]).sin(),
        }
    }

    fn time_derivative(&self, x: &[f64], t: f64) -> Complex64 {
        let phase = Complex64::from_polar(1.0, t);
        let (s, p) = match self.dim {
            1 => ((PI * x[0] / self.length).sin(), x[0]),
            _ => ((PI * x[0]).sin() * (PI * x[1]).sin(), x[0] * x[1]),
        };
        let (sg, cg) = (t * p).sin_cos();
        phase * s * (I * sg + p * cg)
    }

    fn gradient(&self, x: &[f64], t: f64) -> [Complex64; 2] {
        let phase = Complex64::from_polar(1.0, t);
        match self.dim {
            1 => {
                let k = PI / self.length;
                let (s, c) = (k * x[0]).sin_cos();
                let (sg, cg) = (t * x[0]).sin_cos();
                [phase * (k * c * sg + s * t * cg), Complex64::new(0.0, 0.0)]
            }
            _ => {
                let (s1, c1) = (PI * x[0]).sin_cos();
                let (s2, c2) = (PI * x[1]).sin_cos();
                let (sg, cg) = (t * x[0] * x[1]).sin_cos();
                [
                    phase * (PI * c1 * s2 * sg + s1 * s2 * cg * t * x[1]),
                    phase * (PI * s1 * c2 * sg + s1 * s2 * cg * t * x[0]),
                ]
            }
        }
    }

    fn jet(&self, x: &[f64], t: f64) -> (Complex64, Complex64, [Complex64; 2]) {
        if self.dim == 1 {
            return (self.value(x, t), self.time_derivative(x, t), self.gradient(x, t));
        }
        let phase = Complex64::from_polar(1.0, t);
        let (s1, c1) = (PI * x[0]).sin_cos();
        let (s2, c2) = (PI * x[1]).sin_cos();
        let p = x[0] * x[1];
        let (sg, cg) = (t * p).sin_cos();
        let s = s1 * s2;
        let value = phase * (s * sg);
        let dt = phase * s * Complex64::new(p * cg, sg);
        let grad = [
            phase * (PI * c1 * s2 * sg + s * cg * t * x[1]),
            phase * (PI * s1 * c2 * sg + s * cg * t * x[0]),
        ];
        (value, dt, grad)
    }

    fn laplacian(&self, x: &[f64], t: f64) -> Complex64 {
        let phase = Complex64::from_polar(1.0, t);
        match self.dim {
            1 => {
                let k = PI / self.length;
                let (s, c) = (k * x[0]).sin_cos();
                let (sg, cg) = (t * x[0]).sin_cos();
                // (S g)'' = S'' g + 2 S' g' + S g''
                phase * (-k * k * s * sg + 2.0 * k * c * t * cg - s * t * t * sg)
            }
            _ => {
                let (s1, c1) = (PI * x[0]).sin_cos();
                let (s2, c2) = (PI * x[1]).sin_cos();
                let (sg, cg) = (t * x[0] * x[1]).sin_cos();
                let d11 = -PI * PI * s1 * s2 * sg
                    + 2.0 * PI * c1 * s2 * cg * t * x[1]
                    - s1 * s2 * sg * t * t * x[1] * x[1];
                let d22 = -PI * PI * s1 * s2 * sg
                    + 2.0 * PI * s1 * c2 * cg * t * x[0]
                    - s1 * s2 * sg * t * t * x[0] * x[0];
                phase * (d11 + d22)
            }
        }
    }

    fn source(&self, x: &[f64], t: f64) -> Complex64 {
        let phase = Complex64::from_polar(1.0, t);
        match self.dim {
            1 => {
                let k = PI / self.length;
                let (s, c) = (k * x[0]).sin_cos();
                let (sg, cg) = (t * x[0]).sin_cos();
                let re = s * sg * (k * k + t * t - 1.0) - 2.0 * k * t * c * cg;
                let im = s * x[0] * cg;
                phase * Complex64::new(re, im)
            }
            _ => {
                let (s1, c1) = (PI * x[0]).sin_cos();
                let (s2, c2) = (PI * x[1]).sin_cos();
                let p = x[0] * x[1];
                let (sg, cg) = (t * p).sin_cos();
                let s = s1 * s2;
                let grad_dot = PI * (c1 * s2 * x[1] + s1 * c2 * x[0]);
                let re = s * sg * (2.0 * PI * PI + t * t * (x[0] * x[0] + x[1] * x[1]) - 1.0)
                    - 2.0 * t * cg * grad_dot;
                let im = s * p * cg;
                phase * Complex64::new(re, im)
            }
        }
    }
}

/// Source-free evolution of a Dirichlet eigenmode:
/// `ψ = a e^{iμt} φ(x)` with `−Δφ = μφ`, where `φ = sin(πx₁) sin(πx₂)` on the
/// unit square or `φ = sin(πx/L)` on `(0, L)`. Amplitude zero gives `ψ ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroSource {
    dim: usize,
    length: f64,
    amplitude: Complex64,
}

impl ZeroSource {
    pub fn square(amplitude: Complex64) -> Self {
        ZeroSource {
            dim: 2,
            length: 1.0,
            amplitude,
        }
    }

    pub fn interval(length: f64, amplitude: Complex64) -> Self {
        ZeroSource {
            dim: 1,
            length,
            amplitude,
        }
    }

    fn eigenvalue(&self) -> f64 {
        match self.dim {
            1 => (PI / self.length).powi(2),
            _ => 2.0 * PI * PI,
        }
    }

    fn mode(&self, x: &[f64]) -> (f64, [f64; 2]) {
        match self.dim {
            1 => {
                let k = PI / self.length;
                let (s, c) = (k * x[0]).sin_cos();
                (s, [k * c, 0.0])
            }
            _ => {
                let (s1, c1) = (PI * x[0]).sin_cos();
                let (s2, c2) = (PI * x[1]).sin_cos();
                (s1 * s2, [PI * c1 * s2, PI * s1 * c2])
            }
        }
    }

    fn temporal(&self, t: f64) -> Complex64 {
        self.amplitude * Complex64::from_polar(1.0, self.eigenvalue() * t)
    }
}

impl ExactSolution for ZeroSource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], t: f64) -> Complex64 {
        self.temporal(t) * self.mode(x).0
    }

    fn time_derivative(&self, x: &[f64], t: f64) -> Complex64 {
        I * self.eigenvalue() * self.value(x, t)
    }

    fn gradient(&self, x: &[f64], t: f64) -> [Complex64; 2] {
        let g = self.mode(x).1;
        let a = self.temporal(t);
        [a * g[0], a * g[1]]
    }

    fn laplacian(&self, x: &[f64], t: f64) -> Complex64 {
        -self.eigenvalue() * self.value(x, t)
    }

    fn source(&self, _x: &[f64], _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_consistency(sol: &dyn ExactSolution, t_end: f64, extent: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let x = [rng.gen_range(0.0..extent), rng.gen_range(0.0..1.0)];
            let x = &x[..sol.dim()];
            let t = rng.gen_range(0.0..t_end);
            let f = I * sol.time_derivative(x, t) - sol.laplacian(x, t);
            let src = sol.source(x, t);
            assert!((f - src).norm() <= 1e-10 * (1.0 + src.norm()), "x = {x:?}, t = {t}");
        }
    }

    /// Central differences with step 1e-6 as an independent check of the
    /// closed-form derivatives.
    fn check_finite_differences(sol: &dyn ExactSolution, extent: f64) {
        let h = 1e-6;
        let h2 = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = [rng.gen_range(0.05..extent - 0.05), rng.gen_range(0.05..0.95)];
            let x = &x[..sol.dim()];
            let t = rng.gen_range(0.1..4.9);
            let dt = (sol.value(x, t + h) - sol.value(x, t - h)) / (2.0 * h);
            assert!((dt - sol.time_derivative(x, t)).norm() < 1e-6);
            let grad = sol.gradient(x, t);
            let mut lap = Complex64::new(0.0, 0.0);
            for k in 0..sol.dim() {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                let d = (sol.value(&xp, t) - sol.value(&xm, t)) / (2.0 * h);
                assert!((d - grad[k]).norm() < 1e-6);
                xp[k] = x[k] + h2;
                xm[k] = x[k] - h2;
                lap += (sol.value(&xp, t) - 2.0 * sol.value(x, t) + sol.value(&xm, t)) / (h2 * h2);
            }
            assert!((lap - sol.laplacian(x, t)).norm() < 1e-5 * (1.0 + lap.norm()));
        }
    }

    #[test]
    fn manufactured_square_is_consistent() {
        let sol = Manufactured::square();
        check_consistency(&sol, 5.0, 1.0);
        check_finite_differences(&sol, 1.0);
        assert_eq!(sol.initial(&[0.3, 0.7]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn manufactured_interval_is_consistent() {
        let sol = Manufactured::interval(2.0);
        check_consistency(&sol, 5.0, 2.0);
        check_finite_differences(&sol, 2.0);
    }

    #[test]
    fn eigenmode_is_source_free() {
        let amp = Complex64::new(0.5, -0.25);
        for sol in [ZeroSource::square(amp), ZeroSource::interval(1.5, amp)] {
            let extent = if sol.dim() == 1 { 1.5 } else { 1.0 };
            check_consistency(&sol, 5.0, extent);
            check_finite_differences(&sol, extent);
        }
    }

    #[test]
    fn jet_matches_components() {
        let sol = Manufactured::square();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let t = rng.gen_range(0.0..5.0);
            let (v, dt, g) = sol.jet(&x, t);
            assert!((v - sol.value(&x, t)).norm() < 1e-14);
            assert!((dt - sol.time_derivative(&x, t)).norm() < 1e-14);
            let g2 = sol.gradient(&x, t);
            assert!((g[0] - g2[0]).norm() < 1e-13 && (g[1] - g2[1]).norm() < 1e-13);
        }
    }
}
