//! Scenario configuration: a flat key-value text format with dotted keys,
//! sidecar CSV tables for sampled fields, validation of every closed-loop
//! hypothesis, and the bundled §-4-style parameter sets.

use crate::exosystem::ExoParams;
use crate::observer::AdaptiveGains;
use crate::pde::{Grid1D, GridField};
use crate::predictor::ControlLawParams;
use crate::{Error, Mat2, Result, Row2, Vec2};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Specification of an initial field on the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Zero,
    Const(f64),
    /// `amp·(cos(2π·turns·x) − 1)` — the §4 family, zero at both ends' data.
    CosMinusOne { amp: f64, turns: f64 },
    /// Copy the plant's initial displacement (used by the observer default).
    SameAsW0,
    /// Sidecar CSV `x,value`; linear interpolation onto the grid.
    Table { path: String, points: Vec<(f64, f64)> },
}

fn interp(points: &[(f64, f64)], x: f64) -> f64 {
    match points.iter().position(|&(px, _)| px >= x) {
        Some(0) => points[0].1,
        None => points[points.len() - 1].1,
        Some(i) => {
            let (x0, y0) = points[i - 1];
            let (x1, y1) = points[i];
            if x1 == x0 {
                y1
            } else {
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

impl FieldSpec {
    pub fn sample(&self, grid: Grid1D, w0: Option<&GridField>) -> Result<GridField> {
        Ok(match self {
            FieldSpec::Zero => GridField::zeros(grid),
            FieldSpec::Const(c) => GridField::constant(grid, *c),
            FieldSpec::CosMinusOne { amp, turns } => GridField::from_fn(grid, |x| {
                amp * ((2.0 * std::f64::consts::PI * turns * x).cos() - 1.0)
            }),
            FieldSpec::SameAsW0 => w0
                .cloned()
                .ok_or_else(|| Error::InvalidParameter("same_as_w0 is only valid for observer initials".into()))?,
            FieldSpec::Table { points, .. } => GridField::from_fn(grid, |x| interp(points, x)),
        })
    }

    fn to_text(&self) -> String {
        match self {
            FieldSpec::Zero => "zero".into(),
            FieldSpec::Const(c) => format!("const {c}"),
            FieldSpec::CosMinusOne { amp, turns } => format!("cos_minus_one {amp} {turns}"),
            FieldSpec::SameAsW0 => "same_as_w0".into(),
            FieldSpec::Table { path, .. } => format!("table {path}"),
        }
    }
}

/// In-domain disturbance profile `p₁(x)` (a 1×2 row function).
#[derive(Debug, Clone, PartialEq)]
pub enum P1Spec {
    /// Scalar polynomial in x times a fixed row direction (§4: `2x·(1,0)`).
    Poly { coeffs: Vec<f64>, dir: [f64; 2] },
    /// Sidecar CSV `x,p11,p12`; linear interpolation.
    Table { path: String, points: Vec<(f64, [f64; 2])> },
}

impl P1Spec {
    pub fn eval(&self, x: f64) -> Row2 {
        match self {
            P1Spec::Poly { coeffs, dir } => {
                let mut p = 0.0;
                for &c in coeffs.iter().rev() {
                    p = p * x + c;
                }
                Row2::new(p * dir[0], p * dir[1])
            }
            P1Spec::Table { points, .. } => {
                let p0: Vec<(f64, f64)> = points.iter().map(|&(x, v)| (x, v[0])).collect();
                let p1: Vec<(f64, f64)> = points.iter().map(|&(x, v)| (x, v[1])).collect();
                Row2::new(interp(&p0, x), interp(&p1, x))
            }
        }
    }
}

/// Every constant of the closed loop plus numerics and initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    // plant
    pub q: f64,
    pub tau: f64,
    pub p1: P1Spec,
    pub p2: Row2,
    pub p3: Row2,
    pub p4: Row2,
    // exosystem
    pub s_mat: Mat2,
    pub v0: Vec2,
    // controller / compensator
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    // adaptive gains
    pub iota: f64,
    pub k0: f64,
    pub k1: f64,
    // numerics
    pub n_cells: usize,
    pub cfl_factor: f64,
    pub t_final: f64,
    pub predictor_stride: usize,
    pub export_stride: usize,
    pub seed: u64,
    // initial data
    pub w0: FieldSpec,
    pub w1: FieldSpec,
    pub zhat0: FieldSpec,
    pub zhat_s0: FieldSpec,
    pub y1_0: FieldSpec,
    pub y2hat0: FieldSpec,
}

impl ScenarioParams {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.n_cells)
    }

    pub fn dt(&self) -> f64 {
        self.cfl_factor / self.n_cells as f64
    }

    pub fn exo(&self) -> Result<ExoParams> {
        ExoParams::new(self.s_mat, self.v0, self.p4)
    }

    pub fn gains(&self) -> Result<AdaptiveGains> {
        AdaptiveGains::new(self.iota, self.k0, self.k1)
    }

    pub fn control_law(&self) -> Result<ControlLawParams> {
        ControlLawParams::new(self.c0, self.c1, self.q)
    }

    /// Checks every Theorem 3 hypothesis plus the numeric sanity constraints;
    /// error messages name the violated hypothesis.
    pub fn validate(&self) -> Result<()> {
        self.exo()?;
        self.gains()?;
        self.control_law()?;
        if !(self.c2 > 0.0 && self.c2 < 1.0) {
            return Err(Error::Hypothesis("0 < c2 < 1".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::Hypothesis("tau >= 0".into()));
        }
        if self.n_cells < 8 {
            return Err(Error::InvalidParameter("n_cells must be at least 8".into()));
        }
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 1.0) {
            return Err(Error::InvalidParameter("cfl_factor must lie in (0, 1]".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidParameter("t_final must be positive".into()));
        }
        if self.predictor_stride == 0 || self.export_stride == 0 {
            return Err(Error::InvalidParameter("strides must be >= 1".into()));
        }
        let dt = self.dt();
        let ratio = self.tau / dt;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "tau = {} must be an integer multiple of dt = {} (delay bookkeeping)",
                self.tau, dt
            )));
        }
        Ok(())
    }

    /// Delay expressed in steps (validated to be integral).
    pub fn n_tau(&self) -> usize {
        (self.tau / self.dt()).round() as usize
    }

    /// Canonical text form — also the exact on-disk format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let row = |r: &Row2| format!("{} {}", r[0], r[1]);
        writeln!(s, "plant.q = {}", self.q).unwrap();
        writeln!(s, "plant.tau = {}", self.tau).unwrap();
        match &self.p1 {
            P1Spec::Poly { coeffs, dir } => {
                let cs: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                writeln!(s, "plant.p1.poly = {}", cs.join(" ")).unwrap();
                writeln!(s, "plant.p1.dir = {} {}", dir[0], dir[1]).unwrap();
            }
            P1Spec::Table { path, .. } => writeln!(s, "plant.p1.table = {path}").unwrap(),
        }
        writeln!(s, "plant.p2 = {}", row(&self.p2)).unwrap();
        writeln!(s, "plant.p3 = {}", row(&self.p3)).unwrap();
        writeln!(s, "plant.p4 = {}", row(&self.p4)).unwrap();
        writeln!(
            s,
            "exo.S = {} {} {} {}",
            self.s_mat[(0, 0)],
            self.s_mat[(0, 1)],
            self.s_mat[(1, 0)],
            self.s_mat[(1, 1)]
        )
        .unwrap();
        writeln!(s, "exo.v0 = {} {}", self.v0[0], self.v0[1]).unwrap();
        writeln!(s, "control.c0 = {}", self.c0).unwrap();
        writeln!(s, "control.c1 = {}", self.c1).unwrap();
        writeln!(s, "control.c2 = {}", self.c2).unwrap();
        writeln!(s, "adaptive.iota = {}", self.iota).unwrap();
        writeln!(s, "adaptive.k0 = {}", self.k0).unwrap();
        writeln!(s, "adaptive.k1 = {}", self.k1).unwrap();
        writeln!(s, "num.n_cells = {}", self.n_cells).unwrap();
        writeln!(s, "num.cfl_factor = {}", self.cfl_factor).unwrap();
        writeln!(s, "num.t_final = {}", self.t_final).unwrap();
        writeln!(s, "num.predictor_stride = {}", self.predictor_stride).unwrap();
        writeln!(s, "num.export_stride = {}", self.export_stride).unwrap();
        writeln!(s, "num.seed = {}", self.seed).unwrap();
        writeln!(s, "init.w0 = {}", self.w0.to_text()).unwrap();
        writeln!(s, "init.w1 = {}", self.w1.to_text()).unwrap();
        writeln!(s, "init.zhat = {}", self.zhat0.to_text()).unwrap();
        writeln!(s, "init.zhat_s = {}", self.zhat_s0.to_text()).unwrap();
        writeln!(s, "init.y1 = {}", self.y1_0.to_text()).unwrap();
        writeln!(s, "init.y2hat = {}", self.y2hat0.to_text()).unwrap();
        s
    }

    /// FNV-1a hash of the canonical text (stable across runs and platforms).
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_text().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Writes the scenario in canonical form.
pub fn save_scenario(s: &ScenarioParams, path: &Path) -> Result<()> {
    std::fs::write(path, s.to_text())?;
    Ok(())
}

struct RawScenario {
    entries: HashMap<String, (usize, String)>,
    dir: PathBuf,
}

impl RawScenario {
    fn get(&self, key: &str) -> Option<&(usize, String)> {
        self.entries.get(key)
    }

    fn required(&self, key: &str) -> Result<&(usize, String)> {
        self.get(key)
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("missing required field `{key}`") })
    }

    fn floats(&self, key: &str, n: usize) -> Result<Vec<f64>> {
        let (line, raw) = self.required(key)?;
        let vals: Vec<f64> = raw
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: *line, msg: format!("`{key}`: {e}") })?;
        if vals.len() != n {
            return Err(Error::Parse {
                line: *line,
                msg: format!("`{key}` expects {n} numbers, got {}", vals.len()),
            });
        }
        Ok(vals)
    }

    fn f64(&self, key: &str) -> Result<f64> {
        Ok(self.floats(key, 1)?[0])
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.get(key).is_some() { self.f64(key) } else { Ok(default) }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some((line, raw)) => raw
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse { line: *line, msg: format!("`{key}`: {e}") }),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some((line, raw)) => raw
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse { line: *line, msg: format!("`{key}`: {e}") }),
        }
    }

    fn row2(&self, key: &str) -> Result<Row2> {
        let v = self.floats(key, 2)?;
        Ok(Row2::new(v[0], v[1]))
    }

    fn field_spec_or(&self, key: &str, default: FieldSpec) -> Result<FieldSpec> {
        let (line, raw) = match self.get(key) {
            None => return Ok(default),
            Some(e) => e,
        };
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let bad = |msg: String| Error::Parse { line: *line, msg };
        let num = |t: &str| -> Result<f64> {
            t.parse::<f64>().map_err(|e| bad(format!("`{key}`: {e}")))
        };
        match toks.as_slice() {
            ["zero"] => Ok(FieldSpec::Zero),
            ["const", c] => Ok(FieldSpec::Const(num(c)?)),
            ["cos_minus_one", amp, turns] => {
                Ok(FieldSpec::CosMinusOne { amp: num(amp)?, turns: num(turns)? })
            }
            ["same_as_w0"] => Ok(FieldSpec::SameAsW0),
            ["table", path] => {
                let points = load_table_1(&self.dir.join(path), *line)?;
                Ok(FieldSpec::Table { path: (*path).to_string(), points })
            }
            _ => Err(bad(format!(
                "`{key}`: expected zero | const c | cos_minus_one amp turns | same_as_w0 | table path"
            ))),
        }
    }
}

fn load_table_rows(path: &Path, line: usize, cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line,
        msg: format!("cannot read sidecar table {}: {e}", path.display()),
    })?;
    let mut rows = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = l.split(',').map(str::trim).collect();
        if i == 0 && parts[0].parse::<f64>().is_err() {
            continue; // header row
        }
        if parts.len() != cols {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("sidecar table {} expects {cols} columns", path.display()),
            });
        }
        let vals: Vec<f64> = parts
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: i + 1, msg: format!("sidecar table: {e}") })?;
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line, msg: format!("sidecar table {} is empty", path.display()) });
    }
    rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
    Ok(rows)
}

fn load_table_1(path: &Path, line: usize) -> Result<Vec<(f64, f64)>> {
    Ok(load_table_rows(path, line, 2)?.into_iter().map(|r| (r[0], r[1])).collect())
}

fn load_table_2(path: &Path, line: usize) -> Result<Vec<(f64, [f64; 2])>> {
    Ok(load_table_rows(path, line, 3)?.into_iter().map(|r| (r[0], [r[1], r[2]])).collect())
}

/// Parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioParams> {
    let text = std::fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut entries = HashMap::new();
    for (i, l) in text.lines().enumerate() {
        let line_no = i + 1;
        let l = l.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        let (key, value) = l.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "expected `key = value`".into(),
        })?;
        let key = key.trim().to_string();
        if entries.contains_key(&key) {
            return Err(Error::Parse { line: line_no, msg: format!("duplicate key `{key}`") });
        }
        entries.insert(key, (line_no, value.trim().to_string()));
    }
    let raw = RawScenario { entries, dir };

    let p1 = if let Some((line, p)) = raw.get("plant.p1.table") {
        P1Spec::Table { path: p.clone(), points: load_table_2(&raw.dir.join(p), *line)? }
    } else {
        let (line, coeffs_raw) = raw.required("plant.p1.poly")?;
        let coeffs: Vec<f64> = coeffs_raw
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: *line, msg: format!("plant.p1.poly: {e}") })?;
        let dir = raw.floats("plant.p1.dir", 2)?;
        P1Spec::Poly { coeffs, dir: [dir[0], dir[1]] }
    };

    let s_vals = raw.floats("exo.S", 4)?;
    let v0_vals = raw.floats("exo.v0", 2)?;
    let c2 = raw.f64("control.c2")?;

    let params = ScenarioParams {
        q: raw.f64("plant.q")?,
        tau: raw.f64("plant.tau")?,
        p1,
        p2: raw.row2("plant.p2")?,
        p3: raw.row2("plant.p3")?,
        p4: raw.row2("plant.p4")?,
        s_mat: Mat2::new(s_vals[0], s_vals[1], s_vals[2], s_vals[3]),
        v0: Vec2::new(v0_vals[0], v0_vals[1]),
        c0: raw.f64("control.c0")?,
        c1: raw.f64("control.c1")?,
        c2,
        iota: raw.f64("adaptive.iota")?,
        k0: raw.f64("adaptive.k0")?,
        k1: raw.f64("adaptive.k1")?,
        n_cells: raw.usize_or("num.n_cells", 200)?,
        cfl_factor: raw.f64_or("num.cfl_factor", 0.5)?,
        t_final: raw.f64_or("num.t_final", 60.0)?,
        predictor_stride: raw.usize_or("num.predictor_stride", 1)?,
        export_stride: raw.usize_or("num.export_stride", 10)?,
        seed: raw.u64_or("num.seed", 0)?,
        w0: raw.field_spec_or("init.w0", FieldSpec::Zero)?,
        w1: raw.field_spec_or("init.w1", FieldSpec::Zero)?,
        zhat0: raw.field_spec_or("init.zhat", FieldSpec::SameAsW0)?,
        zhat_s0: raw.field_spec_or("init.zhat_s", FieldSpec::Zero)?,
        y1_0: raw.field_spec_or("init.y1", FieldSpec::Zero)?,
        y2hat0: raw.field_spec_or("init.y2hat", FieldSpec::Const(-c2))?,
    };
    params.validate()?;
    Ok(params)
}

/// The §4 parameter set at a given delay; `t_final` per the bundled defaults.
pub fn sec4(tau: f64, t_final: f64) -> ScenarioParams {
    ScenarioParams {
        q: 1.0,
        tau,
        p1: P1Spec::Poly { coeffs: vec![0.0, 2.0], dir: [1.0, 0.0] },
        p2: Row2::zeros(),
        p3: Row2::zeros(),
        p4: Row2::new(2.0, 0.0),
        s_mat: Mat2::new(0.0, 0.25, -1.0, 0.0),
        v0: Vec2::new(0.0, 2.0),
        c0: 200.0,
        c1: 1.0,
        c2: 0.1,
        iota: 1.0,
        k0: 5.0,
        k1: 10.0,
        n_cells: 200,
        cfl_factor: 0.5,
        t_final,
        predictor_stride: 1,
        export_stride: 10,
        seed: 0,
        w0: FieldSpec::CosMinusOne { amp: 10.0, turns: 1.0 },
        w1: FieldSpec::Zero,
        zhat0: FieldSpec::SameAsW0,
        zhat_s0: FieldSpec::Zero,
        y1_0: FieldSpec::Zero,
        y2hat0: FieldSpec::Const(-0.1),
    }
}

/// Bundled `sec4_tau01`: τ = 0.1, 60 s horizon.
pub fn sec4_tau01() -> ScenarioParams {
    sec4(0.1, 60.0)
}
