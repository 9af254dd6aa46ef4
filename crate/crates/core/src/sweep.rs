//! Parameter grids, per-point evaluation of all three methods, CSV output
//! and cross-method comparison.
//!
//! Grid points are visited row-major in the declared axis order: the last
//! axis varies fastest. Values on an axis are `min + k·(max − min)/(count − 1)`.
//!
//! CSV schema `awi-sweep/1`:
//!
//! * `#`-prefixed metadata lines (tool version, schema, echoed spec);
//! * one column per swept parameter, holding the value in the spec's units;
//! * `dme_response` (Im ρ₁₂/Ω_p in units of γ₂₁⁻¹) and `p1`..`p4` from the
//!   Liouvillian steady state;
//! * with the semi-analytic method: `sa_P21 sa_P12 sa_P41 sa_P13 sa_dNp`
//!   (closed-form start probabilities), `ex_P21 ex_P12 ex_P41 ex_P13 ex_dNp`
//!   (exact jump chain) and `sa_valid`;
//! * with MCWF: `mc_P21 mc_P12 mc_P41 mc_P13 mc_dNp`, each followed by a
//!   `_se` column, and `mc_periods`;
//! * `error`: failure messages joined by `; `, empty on success.
//!
//! Unavailable values are written as `nan`.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Level;
use crate::lindblad::{populations, probe_response, steady_state};
use crate::mcwf::{derive_seed, run_ensemble, TrajectoryConfig};
use crate::periods::{empirical_stats, PeriodStats};
use crate::scheme::{validity_check, SchemeParams, Units, FIELD_NAMES};
use crate::semianalytic::{exact_period_table, period_table, PeriodTable};

pub const SCHEMA: &str = "awi-sweep/1";

/// Periods whose sign is tested and reported, as (start, end).
pub const TABLE_PAIRS: [(Level, Level); 4] =
    [(Level::Two, Level::One), (Level::One, Level::Two), (Level::Four, Level::One), (Level::One, Level::Three)];

const PAIR_TAGS: [&str; 4] = ["P21", "P12", "P41", "P13"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|k| if k + 1 == self.count { self.max } else { self.min + k as f64 * step }).collect()
    }

    fn validate(&self) -> Result<()> {
        if !FIELD_NAMES.contains(&self.name.as_str()) {
            return Err(Error::InvalidSweep(format!("`{}` is not a parameter name", self.name)));
        }
        if self.count < 2 {
            return Err(Error::InvalidSweep(format!("`{}`: count must be at least 2", self.name)));
        }
        if !(self.min < self.max) {
            return Err(Error::InvalidSweep(format!("`{}`: min must be below max", self.name)));
        }
        Ok(())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    /// `name:min:max:count`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidSweep(format!("expected name:min:max:count, got `{s}`"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let axis = SweepAxis {
            name: parts[0].to_string(),
            min: parts[1].parse().map_err(|_| bad())?,
            max: parts[2].parse().map_err(|_| bad())?,
            count: parts[3].parse().map_err(|_| bad())?,
        };
        axis.validate()?;
        Ok(axis)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.name, self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dme,
    Mcwf,
    Semianalytic,
    All,
}

impl Method {
    pub fn semianalytic(self) -> bool {
        matches!(self, Method::Semianalytic | Method::All)
    }

    pub fn mcwf(self) -> bool {
        matches!(self, Method::Mcwf | Method::All)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dme" => Ok(Method::Dme),
            "mcwf" => Ok(Method::Mcwf),
            "semianalytic" => Ok(Method::Semianalytic),
            "all" => Ok(Method::All),
            _ => Err(Error::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dme => "dme",
            Method::Mcwf => "mcwf",
            Method::Semianalytic => "semianalytic",
            Method::All => "all",
        })
    }
}

/// Ensemble settings for MCWF grid points. Times are in units of γ₂₁⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McwfSettings {
    pub trajectories: usize,
    /// `None` selects the largest admissible step at each grid point.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// Periods starting before this time are discarded.
    pub burn_in: f64,
    pub seed: u64,
}

impl Default for McwfSettings {
    fn default() -> Self {
        Self { trajectories: 200, dt: None, t_max: 500.0, burn_in: 50.0, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Base point in `units`.
    pub base: SchemeParams,
    pub units: Units,
    pub axes: Vec<SweepAxis>,
    pub method: Method,
    pub mcwf: McwfSettings,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidSweep(format!("expected one or two axes, got {}", self.axes.len())));
        }
        if self.axes.len() == 2 && self.axes[0].name == self.axes[1].name {
            return Err(Error::InvalidSweep(format!("axis `{}` given twice", self.axes[0].name)));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.method.mcwf() {
            if self.mcwf.trajectories == 0 {
                return Err(Error::InvalidConfig("trajectories must be at least 1".into()));
            }
            if !(self.mcwf.t_max > self.mcwf.burn_in) {
                return Err(Error::InvalidConfig("t_max must exceed the burn-in time".into()));
            }
        }
        Ok(())
    }

    /// Swept values of every grid point, row-major.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            let values = axis.values();
            points = points.into_iter().flat_map(|pt| values.iter().map(move |&v| [pt.clone(), vec![v]].concat())).collect();
        }
        points
    }

    /// Grid point `values` applied to the base, in γ₂₁ units.
    pub fn point_params(&self, values: &[f64]) -> Result<SchemeParams> {
        let mut p = self.base;
        for (axis, &v) in self.axes.iter().zip(values) {
            p.set(&axis.name, v)?;
        }
        p.validate()?;
        Ok(p.to_gamma21_units(self.units)?.0)
    }

    /// Metadata echo, one `key = value` per line.
    pub fn echo(&self) -> Vec<String> {
        let mut lines = vec![format!("units = {}", self.units), format!("method = {}", self.method)];
        for name in FIELD_NAMES {
            lines.push(format!("base.{name} = {}", self.base.get(name).unwrap()));
        }
        for axis in &self.axes {
            lines.push(format!("sweep = {axis}"));
        }
        if self.method.mcwf() {
            let m = &self.mcwf;
            lines.push(format!("mcwf.trajectories = {}", m.trajectories));
            lines.push(format!("mcwf.dt = {}", m.dt.map_or("auto".to_string(), |d| d.to_string())));
            lines.push(format!("mcwf.t_max = {}", m.t_max));
            lines.push(format!("mcwf.burn_in = {}", m.burn_in));
            lines.push(format!("mcwf.seed = {}", m.seed));
        }
        lines
    }
}

/// Result of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub dme_response: f64,
    pub populations: [f64; 4],
    pub semianalytic: Option<PeriodTable>,
    pub exact: Option<PeriodTable>,
    pub valid: bool,
    pub mcwf: Option<PeriodStats>,
    pub errors: Vec<String>,
}

impl SweepRow {
    pub fn sa_delta_np(&self) -> f64 {
        self.semianalytic.as_ref().map_or(f64::NAN, PeriodTable::mean_delta_np)
    }

    pub fn mc_delta_np(&self) -> (f64, f64) {
        self.mcwf.as_ref().map_or((f64::NAN, f64::NAN), |s| (s.mean_delta_np(), s.mean_delta_np_stderr()))
    }
}

/// Evaluates one grid point; solver failures are recorded, not raised.
pub fn evaluate_point(spec: &SweepSpec, index: usize, values: &[f64]) -> SweepRow {
    let mut row = SweepRow {
        values: values.to_vec(),
        dme_response: f64::NAN,
        populations: [f64::NAN; 4],
        semianalytic: None,
        exact: None,
        valid: false,
        mcwf: None,
        errors: Vec::new(),
    };
    let p = match spec.point_params(values) {
        Ok(p) => p,
        Err(e) => {
            row.errors.push(format!("params: {e}"));
            return row;
        }
    };
    match steady_state(&p) {
        Ok(rho) => {
            match probe_response(&rho, &p) {
                Ok(r) => row.dme_response = r,
                Err(e) => row.errors.push(format!("dme: {e}")),
            }
            match populations(&rho) {
                Ok(pops) => row.populations = pops,
                Err(e) => row.errors.push(format!("dme: {e}")),
            }
        }
        Err(e) => row.errors.push(format!("dme: {e}")),
    }
    if spec.method.semianalytic() {
        row.valid = validity_check(&p).holds();
        match period_table(&p) {
            Ok(t) => row.semianalytic = Some(t),
            Err(e) => row.errors.push(format!("semianalytic: {e}")),
        }
        match exact_period_table(&p) {
            Ok(t) => row.exact = Some(t),
            Err(e) => row.errors.push(format!("exact chain: {e}")),
        }
    }
    if spec.method.mcwf() {
        let m = &spec.mcwf;
        let mut cfg = TrajectoryConfig::for_params(&p, m.t_max, derive_seed(m.seed, index as u64));
        if let Some(dt) = m.dt {
            cfg.dt = dt;
        }
        match run_ensemble(&p, &cfg, m.trajectories).and_then(|t| empirical_stats(&t, m.burn_in)) {
            Ok(stats) => row.mcwf = Some(stats),
            Err(e) => row.errors.push(format!("mcwf: {e}")),
        }
    }
    row
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grid = spec.grid();
    Ok(grid.par_iter().enumerate().map(|(k, v)| evaluate_point(spec, k, v)).collect())
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        x.to_string()
    }
}

pub fn header(spec: &SweepSpec) -> Vec<String> {
    let mut cols: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    cols.extend(["dme_response", "p1", "p2", "p3", "p4"].map(String::from));
    if spec.method.semianalytic() {
        for prefix in ["sa", "ex"] {
            cols.extend(PAIR_TAGS.iter().map(|t| format!("{prefix}_{t}")));
            cols.push(format!("{prefix}_dNp"));
        }
        cols.push("sa_valid".into());
    }
    if spec.method.mcwf() {
        for tag in PAIR_TAGS.iter().chain(&["dNp"]) {
            cols.push(format!("mc_{tag}"));
            cols.push(format!("mc_{tag}_se"));
        }
        cols.push("mc_periods".into());
    }
    cols.push("error".into());
    cols
}

fn row_cells(spec: &SweepSpec, row: &SweepRow) -> Vec<String> {
    let mut cells: Vec<String> = row.values.iter().map(|&v| num(v)).collect();
    cells.push(num(row.dme_response));
    cells.extend(row.populations.iter().map(|&v| num(v)));
    if spec.method.semianalytic() {
        for table in [&row.semianalytic, &row.exact] {
            match table {
                Some(t) => {
                    cells.extend(TABLE_PAIRS.iter().map(|&(i, j)| num(t.pair(i, j))));
                    cells.push(num(t.mean_delta_np()));
                }
                None => cells.extend(std::iter::repeat("nan".to_string()).take(5)),
            }
        }
        cells.push(row.valid.to_string());
    }
    if spec.method.mcwf() {
        match &row.mcwf {
            Some(s) => {
                for &(i, j) in &TABLE_PAIRS {
                    cells.push(num(s.p_pair(i, j)));
                    cells.push(num(s.stderr_pair(i, j)));
                }
                cells.push(num(s.mean_delta_np()));
                cells.push(num(s.mean_delta_np_stderr()));
                cells.push(s.total.to_string());
            }
            None => cells.extend(std::iter::repeat("nan".to_string()).take(11)),
        }
    }
    // keep the message a single unquoted field
    cells.push(row.errors.join("; ").replace(',', ";"));
    cells
}

/// Writes metadata, header and rows. Output is a pure function of the spec
/// and the rows, so identical specs give identical bytes.
pub fn write_csv<W: Write>(out: &mut W, spec: &SweepSpec, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "# awi {}", crate::VERSION)?;
    writeln!(out, "# schema = {SCHEMA}")?;
    for line in spec.echo() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", header(spec).join(","))?;
    for row in rows {
        writeln!(out, "{}", row_cells(spec, row).join(","))?;
    }
    Ok(())
}

/// Cross-method summary over a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<SweepRow>,
    /// Fraction of points, outside the noise floor, where the DME response
    /// and the semi-analytic ⟨ΔN_p⟩ share a sign.
    pub sign_agreement_semianalytic: f64,
    /// Same for MCWF against DME, skipping points within 3σ of zero.
    pub sign_agreement_mcwf: Option<f64>,
    /// Axis-value offset between the DME and semi-analytic global maxima,
    /// and between their global minima (single-axis sweeps only).
    pub max_offset: Option<f64>,
    pub min_offset: Option<f64>,
    /// Pearson correlation of the DME and semi-analytic curves.
    pub correlation: f64,
    /// Every method finds no gain anywhere.
    pub all_nonpositive: bool,
}

/// Relative noise floor: values below this fraction of a curve's largest
/// magnitude count as zero in sign comparisons.
pub const NOISE_FLOOR: f64 = 0.01;

pub fn sign_agreement(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let scale = |v: &[f64]| v.iter().filter(|x| x.is_finite()).fold(0.0f64, |m, x| m.max(x.abs()));
    let (sa, sb) = (scale(a), scale(b));
    let mut compared = 0usize;
    let mut agree = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if !x.is_finite() || !y.is_finite() || x.abs() <= floor * sa || y.abs() <= floor * sb {
            continue;
        }
        compared += 1;
        if x.signum() == y.signum() {
            agree += 1;
        }
    }
    if compared == 0 {
        1.0
    } else {
        agree as f64 / compared as f64
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = a.iter().zip(b).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(&x, &y)| (x, y)).collect();
    let n = pairs.len() as f64;
    let (ma, mb) = (pairs.iter().map(|p| p.0).sum::<f64>() / n, pairs.iter().map(|p| p.1).sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn arg_extreme(v: &[f64], want_max: bool) -> Option<usize> {
    let cmp = |a: &&f64, b: &&f64| a.total_cmp(b);
    let finite = v.iter().enumerate().filter(|(_, x)| x.is_finite());
    if want_max {
        finite.max_by(|a, b| cmp(&a.1, &b.1)).map(|(k, _)| k)
    } else {
        finite.min_by(|a, b| cmp(&a.1, &b.1)).map(|(k, _)| k)
    }
}

pub fn compare(spec: &SweepSpec, rows: Vec<SweepRow>) -> ComparisonReport {
    let dme: Vec<f64> = rows.iter().map(|r| r.dme_response).collect();
    let sa: Vec<f64> = rows.iter().map(SweepRow::sa_delta_np).collect();
    let mc: Vec<(f64, f64)> = rows.iter().map(SweepRow::mc_delta_np).collect();

    let sign_agreement_mcwf = spec.method.mcwf().then(|| {
        let (mut compared, mut agree) = (0usize, 0usize);
        let floor = NOISE_FLOOR * dme.iter().filter(|x| x.is_finite()).fold(0.0f64, |m, x| m.max(x.abs()));
        for (&d, &(m, se)) in dme.iter().zip(&mc) {
            if d.is_finite() && m.is_finite() && m.abs() > 3.0 * se && d.abs() > floor {
                compared += 1;
                agree += usize::from(d.signum() == m.signum());
            }
        }
        if compared == 0 {
            1.0
        } else {
            agree as f64 / compared as f64
        }
    });

    let (max_offset, min_offset) = if spec.axes.len() == 1 {
        let xs: Vec<f64> = rows.iter().map(|r| r.values[0]).collect();
        let offset = |want_max| match (arg_extreme(&dme, want_max), arg_extreme(&sa, want_max)) {
            (Some(a), Some(b)) => Some((xs[a] - xs[b]).abs()),
            _ => None,
        };
        (offset(true), offset(false))
    } else {
        (None, None)
    };

    let nonpos = |v: &[f64]| v.iter().all(|x| !x.is_finite() || *x <= 0.0);
    let mc_nonpos = mc.iter().all(|&(m, se)| !m.is_finite() || m <= 3.0 * se);

    ComparisonReport {
        sign_agreement_semianalytic: sign_agreement(&dme, &sa, NOISE_FLOOR),
        sign_agreement_mcwf,
        max_offset,
        min_offset,
        correlation: pearson(&dme, &sa),
        all_nonpositive: nonpos(&dme) && nonpos(&sa) && mc_nonpos,
        rows,
    }
}

pub fn compare_methods(spec: &SweepSpec) -> Result<ComparisonReport> {
    if !spec.method.semianalytic() {
        return Err(Error::InvalidConfig("comparison needs the semianalytic or all method".into()));
    }
    Ok(compare(spec, run_sweep(spec)?))
}

/// Comparison table followed by `#`-prefixed summary lines.
pub fn write_report<W: Write>(out: &mut W, spec: &SweepSpec, report: &ComparisonReport) -> Result<()> {
    writeln!(out, "# awi {}", crate::VERSION)?;
    writeln!(out, "# schema = awi-compare/1")?;
    for line in spec.echo() {
        writeln!(out, "# {line}")?;
    }
    let mut head: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    head.extend(["dme_response", "sa_dNp", "mc_dNp", "mc_dNp_se"].map(String::from));
    writeln!(out, "{}", head.join(","))?;
    for row in &report.rows {
        let (m, se) = row.mc_delta_np();
        let mut line = String::new();
        for v in &row.values {
            write!(line, "{},", num(*v)).unwrap();
        }
        write!(line, "{},{},{},{}", num(row.dme_response), num(row.sa_delta_np()), num(m), num(se)).unwrap();
        writeln!(out, "{line}")?;
    }
    let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| v.to_string());
    writeln!(out, "# sign_agreement_semianalytic = {}", report.sign_agreement_semianalytic)?;
    writeln!(out, "# sign_agreement_mcwf = {}", opt(report.sign_agreement_mcwf))?;
    writeln!(out, "# max_offset = {}", opt(report.max_offset))?;
    writeln!(out, "# min_offset = {}", opt(report.min_offset))?;
    writeln!(out, "# correlation = {}", report.correlation)?;
    writeln!(out, "# all_nonpositive = {}", report.all_nonpositive)?;
    Ok(())
}
