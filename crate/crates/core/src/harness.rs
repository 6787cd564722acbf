//! Run configuration, convergence studies and result tables.
//!
//! Configuration files are flat `key = value` text; `#` starts a comment.
//! Recognized keys:
//!
//! | key            | values                                      | default       |
//! |----------------|---------------------------------------------|---------------|
//! | `spatial`      | `square:<m>` or `interval:<m>,<L>`          | `square:32`   |
//! | `temporal`     | `uniform` or `graded:<q>` (q ≥ 1)           | `uniform`     |
//! | `T`            | terminal time, positive                     | `5`           |
//! | `nt`           | temporal elements at level 0                | `64`          |
//! | `levels`       | highest refinement level `J_max`            | `0`           |
//! | `solver`       | `bs` or `fd`                                | `fd`          |
//! | `threads`      | thread budget, positive                     | `1`           |
//! | `problem`      | `manufactured` or `zero-source[:<re>[,<im>]]` | `manufactured` |
//! | `memory_limit` | byte limit for the memory guard             | `8589934592`  |
//! | `fallback`     | retry with `bs` if `fd` reports a defective core | `false`  |
//! | `format`       | `table` or `csv`                            | `table`       |
//! | `out`          | output path, empty for stdout               | empty         |

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use log::{info, warn};
use num_complex::Complex64;

use crate::assembly::{assemble_rhs, assemble_spatial, assemble_temporal, BlockVector};
use crate::error::{Error, Result};
use crate::error_analysis::{eoc, spacetime_errors, ErrorPair};
use crate::kronecker::{solve, Method, SolveReport, SolverVariant};
use crate::problem::{ExactSolution, Manufactured, ZeroSource};
use crate::spatial_mesh::SpatialMesh;
use crate::temporal_mesh::TemporalMesh;

pub const DEFAULT_MEMORY_LIMIT: u64 = 8 << 30;

/// Complex values held at peak per unknown (right-hand side, transformed
/// right-hand side, solution, residual work vectors and slack for the
/// spatial factors).
const BYTES_PER_UNKNOWN: u64 = 8 * 16;

const CSV_HEADER: &str = "n,hx,ht,errL2,eocL2,errH1,eocH1,solve_s,kappa2";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialPreset {
    Square { m: usize },
    Interval { m: usize, length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalPreset {
    Uniform,
    Graded { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemPreset {
    Manufactured,
    ZeroSource { amplitude: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spatial: SpatialPreset,
    pub temporal: TemporalPreset,
    pub t_end: f64,
    pub nt: usize,
    pub levels: usize,
    pub method: Method,
    pub threads: usize,
    pub problem: ProblemPreset,
    pub memory_limit: u64,
    pub fallback: bool,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spatial: SpatialPreset::Square { m: 32 },
            temporal: TemporalPreset::Uniform,
            t_end: 5.0,
            nt: 64,
            levels: 0,
            method: Method::FastDiagonalization,
            threads: 1,
            problem: ProblemPreset::Manufactured,
            memory_limit: DEFAULT_MEMORY_LIMIT,
            fallback: false,
            format: OutputFormat::Table,
            out: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_num<T: FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| config_err(format!("{key}: cannot parse '{s}'")))
}

impl FromStr for SpatialPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(m) = s.strip_prefix("square:") {
            return Ok(SpatialPreset::Square {
                m: parse_num("spatial", m)?,
            });
        }
        if let Some(rest) = s.strip_prefix("interval:") {
            let (m, l) = rest
                .split_once(',')
                .ok_or_else(|| config_err(format!("spatial: expected interval:<m>,<L>, got '{s}'")))?;
            return Ok(SpatialPreset::Interval {
                m: parse_num("spatial", m)?,
                length: parse_num("spatial", l)?,
            });
        }
        Err(config_err(format!(
            "spatial: expected square:<m> or interval:<m>,<L>, got '{s}'"
        )))
    }
}

impl fmt::Display for SpatialPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialPreset::Square { m } => write!(f, "square:{m}"),
            SpatialPreset::Interval { m, length } => write!(f, "interval:{m},{length}"),
        }
    }
}

impl FromStr for TemporalPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(TemporalPreset::Uniform),
            other => match other.strip_prefix("graded:") {
                Some(q) => Ok(TemporalPreset::Graded {
                    q: parse_num("temporal", q)?,
                }),
                None => Err(config_err(format!(
                    "temporal: expected uniform or graded:<q>, got '{other}'"
                ))),
            },
        }
    }
}

impl fmt::Display for TemporalPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemporalPreset::Uniform => write!(f, "uniform"),
            TemporalPreset::Graded { q } => write!(f, "graded:{q}"),
        }
    }
}

impl FromStr for ProblemPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "manufactured" {
            return Ok(ProblemPreset::Manufactured);
        }
        if s == "zero-source" {
            return Ok(ProblemPreset::ZeroSource {
                amplitude: Complex64::new(0.0, 0.0),
            });
        }
        if let Some(a) = s.strip_prefix("zero-source:") {
            let amplitude = match a.split_once(',') {
                Some((re, im)) => Complex64::new(parse_num("problem", re)?, parse_num("problem", im)?),
                None => Complex64::new(parse_num("problem", a)?, 0.0),
            };
            return Ok(ProblemPreset::ZeroSource { amplitude });
        }
        Err(config_err(format!(
            "problem: expected manufactured or zero-source[:<re>[,<im>]], got '{s}'"
        )))
    }
}

impl fmt::Display for ProblemPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemPreset::Manufactured => write!(f, "manufactured"),
            ProblemPreset::ZeroSource { amplitude } => {
                write!(f, "zero-source:{},{}", amplitude.re, amplitude.im)
            }
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(config_err(format!("format: expected table or csv, got '{other}'"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Table => "table",
            OutputFormat::Csv => "csv",
        })
    }
}

pub fn parse_method(s: &str) -> Result<Method> {
    match s.trim() {
        "bs" => Ok(Method::BartelsStewart),
        "fd" => Ok(Method::FastDiagonalization),
        other => Err(config_err(format!("solver: expected bs or fd, got '{other}'"))),
    }
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(config_err(format!("{key}: expected true or false, got '{other}'"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "spatial" => self.spatial = value.parse()?,
            "temporal" => self.temporal = value.parse()?,
            "T" => self.t_end = parse_num("T", value)?,
            "nt" => self.nt = parse_num("nt", value)?,
            "levels" => self.levels = parse_num("levels", value)?,
            "solver" => self.method = parse_method(value)?,
            "threads" => self.threads = parse_num("threads", value)?,
            "problem" => self.problem = value.parse()?,
            "memory_limit" => self.memory_limit = parse_num("memory_limit", value)?,
            "fallback" => self.fallback = parse_bool("fallback", value)?,
            "format" => self.format = value.parse()?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            other => return Err(config_err(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Overlays the settings in `text` onto `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Parses a configuration file on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        config.merge_text(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn serialize(&self) -> String {
        let out = self
            .out
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        format!(
            "spatial = {}\ntemporal = {}\nT = {}\nnt = {}\nlevels = {}\nsolver = {}\n\
             threads = {}\nproblem = {}\nmemory_limit = {}\nfallback = {}\nformat = {}\nout = {}\n",
            self.spatial,
            self.temporal,
            self.t_end,
            self.nt,
            self.levels,
            self.method.short_name(),
            self.threads,
            self.problem,
            self.memory_limit,
            self.fallback,
            self.format,
            out
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self.spatial {
            SpatialPreset::Square { m } if m < 2 => {
                return Err(config_err("spatial: square needs m >= 2 for interior nodes"))
            }
            SpatialPreset::Interval { m, length } => {
                if m < 2 {
                    return Err(config_err("spatial: interval needs m >= 2 for interior nodes"));
                }
                if !(length > 0.0 && length.is_finite()) {
                    return Err(config_err("spatial: interval length must be positive"));
                }
            }
            _ => {}
        }
        if let TemporalPreset::Graded { q } = self.temporal {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(config_err(format!("temporal: grading exponent q = {q} must be >= 1")));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(config_err("T must be positive"));
        }
        if self.nt == 0 {
            return Err(config_err("nt must be positive"));
        }
        if self.threads == 0 {
            return Err(config_err("threads must be positive"));
        }
        if self.levels > 16 {
            return Err(config_err("levels must not exceed 16"));
        }
        if let ProblemPreset::ZeroSource { amplitude } = self.problem {
            if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
                return Err(config_err("problem: amplitude must be finite"));
            }
        }
        for level in 0..=self.levels {
            let required = self.estimated_bytes(level);
            if required > self.memory_limit {
                return Err(Error::MemoryGuard {
                    level,
                    required,
                    limit: self.memory_limit,
                });
            }
        }
        Ok(())
    }

    /// Number of unknowns `n = n_x · n_t` at refinement level `level`.
    pub fn unknowns(&self, level: usize) -> u64 {
        let scale = 1u64 << level;
        let nt = self.nt as u64 * scale;
        let nx = match self.spatial {
            SpatialPreset::Square { m } => (m as u64 * scale - 1).pow(2),
            SpatialPreset::Interval { m, .. } => m as u64 * scale - 1,
        };
        nx.saturating_mul(nt)
    }

    pub fn estimated_bytes(&self, level: usize) -> u64 {
        self.unknowns(level).saturating_mul(BYTES_PER_UNKNOWN)
    }

    pub fn variant(&self) -> SolverVariant {
        SolverVariant {
            method: self.method,
            threads: self.threads,
        }
    }

    pub fn base_meshes(&self) -> Result<(SpatialMesh, TemporalMesh)> {
        let mesh_x = match self.spatial {
            SpatialPreset::Square { m } => SpatialMesh::structured_square(m)?,
            SpatialPreset::Interval { m, length } => SpatialMesh::interval(m, length)?,
        };
        let mesh_t = match self.temporal {
            TemporalPreset::Uniform => TemporalMesh::uniform(self.t_end, self.nt)?,
            TemporalPreset::Graded { q } => TemporalMesh::graded(self.t_end, self.nt, q)?,
        };
        Ok((mesh_x, mesh_t))
    }

    /// Meshes at level `level`: spatial mesh refined and temporal mesh
    /// bisected `level` times.
    pub fn meshes(&self, level: usize) -> Result<(SpatialMesh, TemporalMesh)> {
        let (mut mesh_x, mut mesh_t) = self.base_meshes()?;
        for _ in 0..level {
            mesh_x = mesh_x.refine_uniform();
            mesh_t = mesh_t.refine_bisect();
        }
        Ok((mesh_x, mesh_t))
    }

    pub fn exact_solution(&self) -> Box<dyn ExactSolution> {
        match (self.problem, self.spatial) {
            (ProblemPreset::Manufactured, SpatialPreset::Square { .. }) => Box::new(Manufactured::square()),
            (ProblemPreset::Manufactured, SpatialPreset::Interval { length, .. }) => {
                Box::new(Manufactured::interval(length))
            }
            (ProblemPreset::ZeroSource { amplitude }, SpatialPreset::Square { .. }) => {
                Box::new(ZeroSource::square(amplitude))
            }
            (ProblemPreset::ZeroSource { amplitude }, SpatialPreset::Interval { length, .. }) => {
                Box::new(ZeroSource::interval(length, amplitude))
            }
        }
    }
}

/// One line of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub hx: f64,
    pub ht: f64,
    pub l2: f64,
    pub eoc_l2: Option<f64>,
    pub h1: f64,
    pub eoc_h1: Option<f64>,
    pub solve_seconds: f64,
    pub kappa2: f64,
}

/// Everything produced by a single-level run.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub level: usize,
    pub method: Method,
    pub n_x: usize,
    pub n_t: usize,
    pub hx: f64,
    pub ht: f64,
    pub errors: ErrorPair,
    pub report: SolveReport,
}

impl LevelResult {
    pub fn solution(&self) -> &BlockVector {
        &self.report.solution
    }

    /// The table row of this level, without orders of convergence.
    pub fn row(&self) -> ConvergenceRow {
        ConvergenceRow {
            n: self.n_x * self.n_t,
            hx: self.hx,
            ht: self.ht,
            l2: self.errors.l2,
            eoc_l2: None,
            h1: self.errors.h1,
            eoc_h1: None,
            solve_seconds: self.report.solve_seconds,
            kappa2: self.report.kappa2,
        }
    }
}

/// Builds, assembles and solves level `level` and measures the errors.
pub fn run_level(config: &RunConfig, level: usize) -> Result<LevelResult> {
    config.validate()?;
    if level > config.levels {
        let required = config.estimated_bytes(level);
        if required > config.memory_limit {
            return Err(Error::MemoryGuard {
                level,
                required,
                limit: config.memory_limit,
            });
        }
    }
    let wrap = |method: Method| {
        move |e: Error| Error::AtLevel {
            level,
            variant: method.short_name(),
            source: Box::new(e),
        }
    };
    let method = config.method;
    let (mesh_x, mesh_t) = config.meshes(level).map_err(wrap(method))?;
    let exact = config.exact_solution();
    let spatial = assemble_spatial(&mesh_x).map_err(wrap(method))?;
    let temporal = assemble_temporal(&mesh_t);
    let rhs = assemble_rhs(
        &mesh_x,
        &mesh_t,
        |x, t| exact.source(x, t),
        |x| exact.initial(x),
        &spatial.stiffness,
    )
    .map_err(wrap(method))?;

    let mut variant = config.variant();
    let report = match solve(&spatial, &temporal, &rhs, variant) {
        Err(Error::NotDiagonalizable { sigma_min })
            if config.fallback && variant.method == Method::FastDiagonalization =>
        {
            warn!(
                "level {level}: temporal core not diagonalizable (sigma_min = {sigma_min:e}), \
                 falling back to Bartels-Stewart"
            );
            variant.method = Method::BartelsStewart;
            solve(&spatial, &temporal, &rhs, variant).map_err(wrap(variant.method))?
        }
        other => other.map_err(wrap(method))?,
    };
    let errors = spacetime_errors(&report.solution, exact.as_ref(), &mesh_x, &mesh_t)
        .map_err(wrap(variant.method))?;
    info!(
        "level {level} ({}): n = {}, L2 = {:.3e}, H1 = {:.3e}, solve {:.3} s, residual {:.1e}",
        variant.method.short_name(),
        rhs.len(),
        errors.l2,
        errors.h1,
        report.solve_seconds,
        report.relative_residual
    );
    Ok(LevelResult {
        level,
        method: variant.method,
        n_x: mesh_x.num_dofs(),
        n_t: mesh_t.num_dofs(),
        hx: mesh_x.mesh_size(),
        ht: mesh_t.mesh_size(),
        errors,
        report,
    })
}

/// Runs levels `0..=config.levels` and fills in the orders of convergence.
pub fn run_convergence(config: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.levels + 1);
    for level in 0..=config.levels {
        rows.push(run_level(config, level)?.row());
    }
    fill_eoc(&mut rows)?;
    Ok(rows)
}

fn fill_eoc(rows: &mut [ConvergenceRow]) -> Result<()> {
    for j in 1..rows.len() {
        let pair = |f: fn(&ConvergenceRow) -> f64| -> Result<Option<f64>> {
            let (a, b) = (f(&rows[j - 1]), f(&rows[j]));
            Ok(if a > 0.0 && b > 0.0 {
                Some(eoc(&[a, b], 2.0)?[0])
            } else {
                None
            })
        };
        let eoc_l2 = pair(|r| r.l2)?;
        let eoc_h1 = pair(|r| r.h1)?;
        rows[j].eoc_l2 = eoc_l2;
        rows[j].eoc_h1 = eoc_h1;
    }
    Ok(())
}

/// `x` in scientific notation with `digits` digits after the point and a
/// signed two-digit exponent, e.g. `3.200e-03`.
fn sci(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.*e}", digits, x);
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Renders rows as CSV or as an aligned table in the column order
/// `n, h_x, h_t, L² error, eoc, H¹ error, eoc, solve time, κ₂`.
pub fn emit(rows: &[ConvergenceRow], format: OutputFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to emit".into()));
    }
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            let eoc = |e: Option<f64>| e.map_or_else(|| "-".to_string(), |v| sci(v, 3));
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.n,
                    sci(r.hx, 3),
                    sci(r.ht, 3),
                    sci(r.l2, 3),
                    eoc(r.eoc_l2),
                    sci(r.h1, 3),
                    eoc(r.eoc_h1),
                    sci(r.solve_seconds, 3),
                    sci(r.kappa2, 3)
                );
            }
        }
        OutputFormat::Table => {
            let _ = writeln!(
                out,
                "{:>12} {:>9} {:>9} {:>10} {:>5} {:>10} {:>5} {:>10} {:>9}",
                "n", "h_x", "h_t", "L2 error", "eoc", "H1 error", "eoc", "solve (s)", "kappa2"
            );
            let eoc = |e: Option<f64>| e.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"));
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>12} {:>9} {:>9} {:>10} {:>5} {:>10} {:>5} {:>10.2} {:>9}",
                    r.n,
                    sci(r.hx, 1),
                    sci(r.ht, 1),
                    sci(r.l2, 1),
                    eoc(r.eoc_l2),
                    sci(r.h1, 1),
                    eoc(r.eoc_h1),
                    r.solve_seconds,
                    sci(r.kappa2, 1)
                );
            }
        }
    }
    Ok(out)
}

/// Inverse of [`emit`] with [`OutputFormat::Csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse(format!("missing CSV header '{CSV_HEADER}'"))),
    }
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number '{s}'")))
    };
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.trim() == "-" {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Parse(format!("expected 9 fields, got {}: '{line}'", f.len())));
            }
            Ok(ConvergenceRow {
                n: f[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad integer '{}'", f[0])))?,
                hx: num(f[1])?,
                ht: num(f[2])?,
                l2: num(f[3])?,
                eoc_l2: opt(f[4])?,
                h1: num(f[5])?,
                eoc_h1: opt(f[6])?,
                solve_seconds: num(f[7])?,
                kappa2: num(f[8])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(l2: f64, eoc_l2: Option<f64>) -> ConvergenceRow {
        ConvergenceRow {
            n: 61504,
            hx: 4.419417382415922e-2,
            ht: 7.8125e-2,
            l2,
            eoc_l2,
            h1: 0.2412,
            eoc_h1: eoc_l2.map(|e| e / 2.0),
            solve_seconds: 0.31,
            kappa2: 229.3,
        }
    }

    #[test]
    fn sci_format() {
        assert_eq!(sci(3.2e-3, 3), "3.200e-03");
        assert_eq!(sci(229.3, 3), "2.293e+02");
        assert_eq!(sci(0.0, 3), "0.000e+00");
        assert_eq!(sci(1.0e-120, 1), "1.0e-120");
        assert_eq!(sci(f64::INFINITY, 3), "inf");
    }

    #[test]
    fn defaults_are_the_reference_preset() {
        let c = RunConfig::default();
        assert_eq!(c.unknowns(0), 61504);
        assert_eq!(c.unknowns(1), 508032);
        assert_eq!(c.unknowns(2), 4129024);
        c.validate().unwrap();
    }

    #[test]
    fn config_round_trip() {
        let text = "# study\nspatial = interval:6,2.5\ntemporal = graded:1.5\nT=3\nnt = 8\n\
                    levels = 2\nsolver = bs\nthreads = 2\nproblem = zero-source:1,-0.5\nformat=csv\nout = r.csv\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.spatial, SpatialPreset::Interval { m: 6, length: 2.5 });
        assert_eq!(c.temporal, TemporalPreset::Graded { q: 1.5 });
        assert_eq!(c.method, Method::BartelsStewart);
        assert_eq!(
            c.problem,
            ProblemPreset::ZeroSource {
                amplitude: Complex64::new(1.0, -0.5)
            }
        );
        let once = c.serialize();
        let again = RunConfig::parse(&once).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.serialize(), once);
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn config_errors() {
        for bad in [
            "spatial = disk:4",
            "temporal = graded:0.5",
            "T = -1",
            "nt = 0",
            "threads = 0",
            "solver = lu",
            "colour = blue",
            "no equals sign",
            "spatial = square:1",
            "format = json",
        ] {
            let e = RunConfig::parse(bad).unwrap_err();
            assert!(e.is_config(), "{bad}: {e}");
        }
    }

    #[test]
    fn memory_guard() {
        let c = RunConfig::parse("levels = 4").unwrap_err();
        assert!(matches!(c, Error::MemoryGuard { level: 4, .. }), "{c}");
        RunConfig::parse("levels = 3").unwrap();
        let c = RunConfig::parse("levels = 2\nmemory_limit = 1000000").unwrap_err();
        assert!(matches!(c, Error::MemoryGuard { level: 0, .. }));
        RunConfig::parse("levels = 2").unwrap();
    }

    #[test]
    fn csv_single_row() {
        let text = emit(&[row(3.2e-3, None)], OutputFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "61504,4.419e-02,7.812e-02,3.200e-03,-,2.412e-01,-,3.100e-01,2.293e+02"
        );
        assert!(emit(&[], OutputFormat::Csv).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(3.2e-3, None), row(8.1e-4, Some(1.982)), row(2.0e-4, Some(2.018))];
        let back = parse_csv(&emit(&rows, OutputFormat::Csv).unwrap()).unwrap();
        assert_eq!(back.len(), rows.len());
        let close = |a: f64, b: f64| (a - b).abs() <= 5e-4 * b.abs();
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.n, b.n);
            for (x, y) in [
                (a.hx, b.hx),
                (a.ht, b.ht),
                (a.l2, b.l2),
                (a.h1, b.h1),
                (a.solve_seconds, b.solve_seconds),
                (a.kappa2, b.kappa2),
            ] {
                assert!(close(x, y), "{x} vs {y}");
            }
            assert_eq!(a.eoc_l2.is_some(), b.eoc_l2.is_some());
            if let (Some(x), Some(y)) = (a.eoc_l2, b.eoc_l2) {
                assert!(close(x, y));
            }
        }
    }

    #[test]
    fn table_renders_dash_for_first_eoc() {
        let rows = vec![row(3.2e-3, None), row(8.1e-4, Some(1.982))];
        let text = emit(&rows, OutputFormat::Table).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains(" - "));
        assert!(lines[1].contains("3.2e-03"));
        assert!(lines[2].contains("2.0"));
    }

    #[test]
    fn zero_source_with_zero_datum_gives_zero_row() {
        let c = RunConfig::parse("spatial = square:4\nnt = 4\nT = 1\nproblem = zero-source").unwrap();
        let rows = run_convergence(&c).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 9 * 4);
        assert_eq!(rows[0].l2, 0.0);
        assert_eq!(rows[0].h1, 0.0);
        assert_eq!(rows[0].eoc_l2, None);
    }

    #[test]
    fn small_convergence_study_on_interval() {
        let c = RunConfig::parse("spatial = interval:8,1\nnt = 8\nT = 1\nlevels = 2\nsolver = bs").unwrap();
        let rows = run_convergence(&c).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![7 * 8, 15 * 16, 31 * 32]);
        assert!(rows[0].eoc_l2.is_none());
        for r in &rows[1..] {
            let (a, b) = (r.eoc_l2.unwrap(), r.eoc_h1.unwrap());
            assert!((1.6..2.4).contains(&a), "L2 eoc {a}");
            assert!((0.8..1.2).contains(&b), "H1 eoc {b}");
        }
    }
}
