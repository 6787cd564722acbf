//! Temporal meshes `0 = t_0 < t_1 < … < t_N = T`.
//!
//! The hat functions at `t_1 … t_N` span the temporal trial space; the
//! function at `t_0` is dropped by the zero initial condition, so
//! `n_t = N`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMesh {
    breakpoints: Vec<f64>,
}

impl TemporalMesh {
    pub fn from_breakpoints(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument(
                "a temporal mesh needs at least two breakpoints".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidArgument("temporal mesh must start at t = 0".into()));
        }
        if !breakpoints.iter().all(|t| t.is_finite())
            || breakpoints.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidArgument(
                "temporal breakpoints must be finite and strictly increasing".into(),
            ));
        }
        Ok(TemporalMesh { breakpoints })
    }

    /// `t_ℓ = T ℓ / N`.
    pub fn uniform(t_end: f64, n: usize) -> Result<Self> {
        Self::graded(t_end, n, 1.0)
    }

    /// `t_ℓ = T (ℓ / N)^q`, clustering towards `t = 0` for `q > 1`.
    pub fn graded(t_end: f64, n: usize, q: f64) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidArgument("terminal time must be positive".into()));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("number of time intervals must be at least 1".into()));
        }
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::InvalidArgument("grading exponent must satisfy q >= 1".into()));
        }
        let mut breakpoints: Vec<f64> = (0..=n)
            .map(|l| {
                let s = l as f64 / n as f64;
                if q == 1.0 {
                    t_end * l as f64 / n as f64
                } else {
                    t_end * s.powf(q)
                }
            })
            .collect();
        breakpoints[n] = t_end;
        Self::from_breakpoints(breakpoints)
    }

    /// Inserts the midpoint of every interval.
    pub fn refine_bisect(&self) -> TemporalMesh {
        let mut out = Vec::with_capacity(2 * self.breakpoints.len() - 1);
        for w in self.breakpoints.windows(2) {
            out.push(w[0]);
            out.push(0.5 * (w[0] + w[1]));
        }
        out.push(self.t_end());
        TemporalMesh { breakpoints: out }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn t_end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Number of intervals `N_t`, equal to the number of temporal DOFs.
    pub fn num_intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn num_dofs(&self) -> usize {
        self.num_intervals()
    }

    /// Length of interval `e` (0-based), i.e. `t_{e+1} − t_e`.
    pub fn step(&self, e: usize) -> f64 {
        self.breakpoints[e + 1] - self.breakpoints[e]
    }

    /// `h_t`: the largest interval.
    pub fn mesh_size(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn min_step(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Interval containing `t` (the last one for `t = T`).
    pub fn locate(&self, t: f64) -> Option<usize> {
        if t < 0.0 || t > self.t_end() {
            return None;
        }
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        Some(idx.saturating_sub(1).min(self.num_intervals() - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_steps() {
        let m = TemporalMesh::uniform(5.0, 64).unwrap();
        assert_eq!(m.mesh_size(), 7.8125e-2);
        assert_eq!(m.num_dofs(), 64);
        assert_eq!(TemporalMesh::uniform(5.0, 128).unwrap().mesh_size(), 3.90625e-2);
        assert_eq!(TemporalMesh::uniform(1.0, 1).unwrap().breakpoints(), &[0.0, 1.0]);
    }

    #[test]
    fn graded_mesh_sizes() {
        let m = TemporalMesh::graded(5.0, 64, 1.5).unwrap();
        let expected = 5.0 * (1.0 - (63.0f64 / 64.0).powf(1.5));
        assert!((m.mesh_size() - expected).abs() < 1e-14);
        assert!((m.mesh_size() - 1.167e-1).abs() / 1.167e-1 < 2e-3);
        assert!((m.min_step() - 5.0 / 512.0).abs() < 1e-15);
        let ratio = m.mesh_size() / m.min_step();
        assert!((ratio - 11.95).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn q_one_is_uniform() {
        assert_eq!(
            TemporalMesh::graded(3.0, 17, 1.0).unwrap(),
            TemporalMesh::uniform(3.0, 17).unwrap()
        );
    }

    #[test]
    fn bisection() {
        let m = TemporalMesh::uniform(5.0, 64).unwrap().refine_bisect();
        assert_eq!(m, TemporalMesh::uniform(5.0, 128).unwrap());
        let g = TemporalMesh::graded(5.0, 64, 1.5).unwrap();
        let r = g.refine_bisect();
        assert_eq!(r.num_intervals(), 128);
        for (l, &t) in g.breakpoints().iter().enumerate() {
            assert_eq!(r.breakpoints()[2 * l], t);
        }
        assert_eq!(
            TemporalMesh::uniform(1.0, 1).unwrap().refine_bisect().breakpoints(),
            &[0.0, 0.5, 1.0]
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TemporalMesh::uniform(0.0, 3).is_err());
        assert!(TemporalMesh::uniform(1.0, 0).is_err());
        assert!(TemporalMesh::graded(1.0, 3, 0.5).is_err());
        assert!(TemporalMesh::from_breakpoints(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TemporalMesh::from_breakpoints(vec![0.1, 1.0]).is_err());
    }

    #[test]
    fn locate_intervals() {
        let m = TemporalMesh::uniform(1.0, 4).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.3), Some(1));
        assert_eq!(m.locate(0.25), Some(1));
        assert_eq!(m.locate(1.0), Some(3));
        assert_eq!(m.locate(1.1), None);
    }
}
