//! Conforming simplicial meshes of the spatial domain.
//!
//! Intervals for `d = 1`, triangles for `d = 2`. Degrees of freedom live on
//! the vertices that are not on the boundary (homogeneous Dirichlet data);
//! they are numbered in increasing vertex order.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMesh {
    dim: usize,
    /// Vertex coordinates, `dim` values per vertex.
    coords: Vec<f64>,
    /// Element connectivity, `dim + 1` vertex indices per element.
    cells: Vec<usize>,
    boundary: Vec<bool>,
    /// `dof_of_vertex[v]` is `Some(j)` for interior vertices.
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
}

impl SpatialMesh {
    /// Builds a mesh from raw coordinates and connectivity. Boundary flags
    /// are derived from facets that belong to exactly one element.
    pub fn from_parts(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!(
                "spatial dimension {dim} is not supported"
            )));
        }
        if !coords.len().is_multiple_of(dim) || !cells.len().is_multiple_of(dim + 1) {
            return Err(Error::InvalidArgument(
                "coordinate or connectivity array has the wrong length".into(),
            ));
        }
        let nv = coords.len() / dim;
        if let Some(&bad) = cells.iter().find(|&&v| v >= nv) {
            return Err(Error::InvalidArgument(format!("vertex index {bad} out of range")));
        }
        let mut mesh = SpatialMesh {
            dim,
            coords,
            cells,
            boundary: Vec::new(),
            dof_of_vertex: Vec::new(),
            vertex_of_dof: Vec::new(),
        };
        for e in 0..mesh.num_elements() {
            if mesh.element_measure(e) <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "element {e} has non-positive measure (orientation must be counterclockwise)"
                )));
            }
        }
        mesh.boundary = mesh.compute_boundary_flags();
        mesh.number_dofs();
        Ok(mesh)
    }

    /// Uniform `m × m` grid on the unit square, each cell split by the
    /// diagonal from its lower-left to its upper-right corner.
    pub fn structured_square(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        let h = 1.0 / m as f64;
        let idx = |row: usize, col: usize| row * (m + 1) + col;
        let mut coords = Vec::with_capacity(2 * (m + 1) * (m + 1));
        for row in 0..=m {
            for col in 0..=m {
                coords.push(col as f64 * h);
                coords.push(row as f64 * h);
            }
        }
        let mut cells = Vec::with_capacity(6 * m * m);
        for row in 0..m {
            for col in 0..m {
                let v00 = idx(row, col);
                let v10 = idx(row, col + 1);
                let v01 = idx(row + 1, col);
                let v11 = idx(row + 1, col + 1);
                cells.extend_from_slice(&[v00, v10, v11]);
                cells.extend_from_slice(&[v00, v11, v01]);
            }
        }
        Self::from_parts(2, coords, cells)
    }

    /// Uniform partition of `(0, length)` into `m` intervals.
    pub fn interval(m: usize, length: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidArgument("interval length must be positive".into()));
        }
        let coords = (0..=m).map(|i| length * i as f64 / m as f64).collect();
        let cells = (0..m).flat_map(|i| [i, i + 1]).collect();
        Self::from_parts(1, coords, cells)
    }

    /// Red refinement: triangles are split into four congruent children via
    /// edge midpoints, intervals are bisected. Midpoints are appended after
    /// the parent vertices in order of first appearance.
    pub fn refine_uniform(&self) -> SpatialMesh {
        let mut coords = self.coords.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let dim = self.dim;
        let mut mid = |a: usize, b: usize, coords: &mut Vec<f64>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let id = coords.len() / dim;
                for k in 0..dim {
                    let c = 0.5 * (coords[a * dim + k] + coords[b * dim + k]);
                    coords.push(c);
                }
                id
            })
        };
        let mut cells = Vec::with_capacity(self.cells.len() * (1 << dim));
        for e in 0..self.num_elements() {
            let c = self.element(e);
            if dim == 1 {
                let m = mid(c[0], c[1], &mut coords);
                cells.extend_from_slice(&[c[0], m, m, c[1]]);
            } else {
                let (a, b, cc) = (c[0], c[1], c[2]);
                let ab = mid(a, b, &mut coords);
                let bc = mid(b, cc, &mut coords);
                let ca = mid(cc, a, &mut coords);
                cells.extend_from_slice(&[a, ab, ca]);
                cells.extend_from_slice(&[ab, b, bc]);
                cells.extend_from_slice(&[ca, bc, cc]);
                cells.extend_from_slice(&[ab, bc, ca]);
            }
        }
        Self::from_parts(dim, coords, cells).expect("refinement preserves mesh validity")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_elements(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    /// Number of interior degrees of freedom `n_x`.
    pub fn num_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[e * k..(e + 1) * k]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn vertex_of_dof(&self, j: usize) -> usize {
        self.vertex_of_dof[j]
    }

    /// Length (d = 1) or area (d = 2) of element `e`, signed by orientation.
    pub fn element_measure(&self, e: usize) -> f64 {
        let c = self.element(e);
        match self.dim {
            1 => self.vertex(c[1])[0] - self.vertex(c[0])[0],
            _ => {
                let (p0, p1, p2) = (self.vertex(c[0]), self.vertex(c[1]), self.vertex(c[2]));
                0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
            }
        }
    }

    /// `h_x`: maximal element length (d = 1) or square root of the maximal
    /// element area (d = 2).
    pub fn mesh_size(&self) -> f64 {
        let max = (0..self.num_elements())
            .map(|e| self.element_measure(e))
            .fold(0.0, f64::max);
        match self.dim {
            1 => max,
            _ => max.sqrt(),
        }
    }

    /// Total measure of the domain.
    pub fn domain_measure(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_measure(e)).sum()
    }

    /// Finds the element containing `x` and its barycentric coordinates.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        (0..self.num_elements()).find_map(|e| {
            let bary = self.barycentric(e, x);
            let n = self.dim + 1;
            if bary[..n].iter().all(|&l| l >= -TOL) {
                Some((e, bary))
            } else {
                None
            }
        })
    }

    /// Barycentric coordinates of `x` with respect to element `e`. Only the
    /// first `dim + 1` entries are meaningful.
    pub fn barycentric(&self, e: usize, x: &[f64]) -> [f64; 3] {
        let c = self.element(e);
        match self.dim {
            1 => {
                let (a, b) = (self.vertex(c[0])[0], self.vertex(c[1])[0]);
                let s = (x[0] - a) / (b - a);
                [1.0 - s, s, 0.0]
            }
            _ => {
                let (p0, p1, p2) = (self.vertex(c[0]), self.vertex(c[1]), self.vertex(c[2]));
                let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                let l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (x[1] - p0[1])) / det;
                let l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (x[0] - p0[0]) * (p1[1] - p0[1])) / det;
                [1.0 - l1 - l2, l1, l2]
            }
        }
    }

    /// Gradients of the element's barycentric coordinates, `dim` values
    /// each, laid out as `[grad λ0, grad λ1, (grad λ2)]`.
    pub fn barycentric_gradients(&self, e: usize) -> [[f64; 2]; 3] {
        let c = self.element(e);
        match self.dim {
            1 => {
                let h = self.vertex(c[1])[0] - self.vertex(c[0])[0];
                [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]
            }
            _ => {
                let (p0, p1, p2) = (self.vertex(c[0]), self.vertex(c[1]), self.vertex(c[2]));
                let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                let g1 = [(p2[1] - p0[1]) / det, -(p2[0] - p0[0]) / det];
                let g2 = [-(p1[1] - p0[1]) / det, (p1[0] - p0[0]) / det];
                [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
            }
        }
    }

    /// Facets (vertices for d = 1, edges for d = 2) with the number of
    /// elements sharing each.
    pub fn facet_counts(&self) -> HashMap<Vec<usize>, usize> {
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for e in 0..self.num_elements() {
            let c = self.element(e);
            if self.dim == 1 {
                for &v in c {
                    *counts.entry(vec![v]).or_default() += 1;
                }
            } else {
                for (a, b) in [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])] {
                    *counts.entry(vec![a.min(b), a.max(b)]).or_default() += 1;
                }
            }
        }
        counts
    }

    /// Every facet is shared by at most two elements and every vertex is
    /// used by some element.
    pub fn is_admissible(&self) -> bool {
        let mut used = vec![false; self.num_vertices()];
        self.cells.iter().for_each(|&v| used[v] = true);
        used.iter().all(|&u| u) && self.facet_counts().values().all(|&c| c <= 2)
    }

    fn compute_boundary_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.num_vertices()];
        for (facet, count) in self.facet_counts() {
            if count == 1 {
                facet.iter().for_each(|&v| flags[v] = true);
            }
        }
        flags
    }

    fn number_dofs(&mut self) {
        self.dof_of_vertex = vec![None; self.num_vertices()];
        self.vertex_of_dof.clear();
        for v in 0..self.num_vertices() {
            if !self.boundary[v] {
                self.dof_of_vertex[v] = Some(self.vertex_of_dof.len());
                self.vertex_of_dof.push(v);
            }
        }
    }

    /// Plain-text export: `d nv ne`, vertex lines, element lines (0-based),
    /// then one line of boundary flags (`0`/`1`).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.dim, self.num_vertices(), self.num_elements());
        for v in 0..self.num_vertices() {
            let line: Vec<String> = self.vertex(v).iter().map(|c| format!("{c:.17e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        for e in 0..self.num_elements() {
            let line: Vec<String> = self.element(e).iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        let flags: Vec<&str> = self.boundary.iter().map(|&b| if b { "1" } else { "0" }).collect();
        let _ = writeln!(out, "{}", flags.join(" "));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("mesh text: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("header must be three integers")))
            .collect::<Result<_>>()?;
        let [dim, nv, ne] = header[..] else {
            return Err(bad("header must be three integers"));
        };
        let mut coords = Vec::with_capacity(nv * dim);
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| bad("truncated vertex list"))?;
            for tok in line.split_whitespace() {
                coords.push(tok.parse::<f64>().map_err(|_| bad("bad coordinate"))?);
            }
        }
        let mut cells = Vec::with_capacity(ne * (dim + 1));
        for _ in 0..ne {
            let line = lines.next().ok_or_else(|| bad("truncated element list"))?;
            for tok in line.split_whitespace() {
                cells.push(tok.parse::<usize>().map_err(|_| bad("bad vertex index"))?);
            }
        }
        let mesh = Self::from_parts(dim, coords, cells)?;
        if let Some(line) = lines.next() {
            let flags: Vec<bool> = line.split_whitespace().map(|t| t == "1").collect();
            if flags != mesh.boundary {
                return Err(bad("boundary flags disagree with the mesh topology"));
            }
        }
        Ok(mesh)
    }
}
