//! Run configuration, manifests and output writers.
//!
//! A configuration is TOML or JSON with the sections
//!
//! ```toml
//! [model]
//! alpha = 1.5
//! beta1 = 0.01   # also beta2, eta1, eta2, mu1, mu2, zeta1, zeta2, gamma1, gamma2
//! a = -1.0
//! b = 1.0
//!
//! [initial]
//! preset = "example2"   # example2 | example3 | zero
//!
//! [grid]
//! nx = 20
//!
//! [time]
//! nt = 20
//! T = 1.0
//!
//! [solver]               # optional
//! tol = 1e-14
//! max_iter = 200
//! linear_solver = "auto" # auto | dense | krylov
//!
//! [output]               # optional
//! directory = "out"
//! snapshots = [0.5, 1.0]
//! formats = ["csv", "json"]
//! ```
//!
//! A run manifest (JSON with a top-level `config` key) is accepted as well.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::harness::{example2_initial, example3_u0, example3_v0};
use crate::operators::Grid1D;
use crate::solver::{
    init_fields, run, FieldPair, LinearSolverChoice, ModelParams, RunOptions, RunOutput, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialPreset {
    /// `e^{-8}(1-x²)²` for both fields.
    #[default]
    Example2,
    /// Counter-propagating `sech` pulses.
    Example3,
    Zero,
}

impl InitialPreset {
    pub fn fields(self, grid: &Grid1D) -> Result<FieldPair> {
        match self {
            InitialPreset::Example2 => init_fields(grid, example2_initial, example2_initial),
            InitialPreset::Example3 => init_fields(grid, example3_u0, example3_v0),
            InitialPreset::Zero => Ok(FieldPair::zeros(grid.interior(), 0.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub initial: InitialPreset,
    pub nx: usize,
    pub nt: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub linear_solver: LinearSolverChoice,
    pub directory: Option<PathBuf>,
    pub snapshots: Vec<f64>,
    pub formats: Vec<OutputFormat>,
}

// The on-disk layout. Every field is optional so that validation can report
// all missing entries at once instead of stopping at the first.

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<RawModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<RawInitial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<RawGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<RawTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<RawSolver>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<RawOutput>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub alpha: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub zeta1: Option<f64>,
    pub zeta2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_mode: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInitial {
    pub preset: Option<InitialPreset>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub nx: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTime {
    pub nt: Option<usize>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSolver {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub linear_solver: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub snapshots: Option<Vec<f64>>,
    pub formats: Option<Vec<OutputFormat>>,
}

fn solver_name(c: LinearSolverChoice) -> &'static str {
    match c {
        LinearSolverChoice::Auto => "auto",
        LinearSolverChoice::Dense => "dense",
        LinearSolverChoice::Krylov => "krylov",
    }
}

impl RawConfig {
    /// Checks every field and fills defaults, collecting all problems.
    pub fn validate(&self) -> Result<RunConfig> {
        let mut errs = Vec::new();
        let m = self.model.clone().unwrap_or_default();
        if self.model.is_none() {
            errs.push("missing section [model]".to_string());
        }
        let mut need = |section: &str, name: &str, v: Option<f64>| -> f64 {
            v.unwrap_or_else(|| {
                errs.push(format!("missing {section}.{name}"));
                f64::NAN
            })
        };
        let model = ModelParams {
            alpha: need("model", "alpha", m.alpha),
            beta1: need("model", "beta1", m.beta1),
            beta2: need("model", "beta2", m.beta2),
            eta1: need("model", "eta1", m.eta1),
            eta2: need("model", "eta2", m.eta2),
            mu1: need("model", "mu1", m.mu1),
            mu2: need("model", "mu2", m.mu2),
            zeta1: need("model", "zeta1", m.zeta1),
            zeta2: need("model", "zeta2", m.zeta2),
            gamma1: need("model", "gamma1", m.gamma1),
            gamma2: need("model", "gamma2", m.gamma2),
            a: need("model", "a", m.a),
            b: need("model", "b", m.b),
            t_final: need("time", "T", self.time.as_ref().and_then(|t| t.t_final)),
            test_mode: m.test_mode.unwrap_or(false),
        };
        // only report invariant violations for fields that are present
        errs.extend(model.violations().into_iter().filter(|v| !v.contains("NaN")));

        let nx = self.grid.as_ref().and_then(|g| g.nx);
        match nx {
            None => errs.push("missing grid.nx".into()),
            Some(n) if n < 3 => errs.push(format!("grid.nx must be at least 3, got {n}")),
            _ => {}
        }
        let nt = self.time.as_ref().and_then(|t| t.nt);
        match nt {
            None => errs.push("missing time.nt".into()),
            Some(0) => errs.push("time.nt must be at least 1".into()),
            _ => {}
        }

        let s = self.solver.clone().unwrap_or_default();
        let tol = s.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            errs.push(format!("solver.tol must be positive, got {tol}"));
        }
        let max_iter = s.max_iter.unwrap_or(DEFAULT_MAX_ITER);
        if max_iter == 0 {
            errs.push("solver.max_iter must be at least 1".into());
        }
        let linear_solver = match s.linear_solver.as_deref().map(str::parse::<LinearSolverChoice>) {
            None => LinearSolverChoice::Auto,
            Some(Ok(c)) => c,
            Some(Err(e)) => {
                errs.push(format!("solver.linear_solver: {e}"));
                LinearSolverChoice::Auto
            }
        };

        let o = self.output.clone().unwrap_or_default();
        let snapshots = o.snapshots.unwrap_or_default();
        for &t in &snapshots {
            if !(t >= 0.0 && t <= model.t_final) && model.t_final.is_finite() {
                errs.push(format!("output.snapshots: {t} is outside [0, T]"));
            }
        }
        let formats = o.formats.unwrap_or_else(|| vec![OutputFormat::Csv, OutputFormat::Json]);
        if formats.is_empty() {
            errs.push("output.formats must not be empty".into());
        }
        if let Some(dir) = &o.directory {
            if let Err(e) = check_writable(dir) {
                errs.push(format!("output.directory {}: {e}", dir.display()));
            }
        }

        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        Ok(RunConfig {
            model,
            initial: self.initial.as_ref().and_then(|i| i.preset).unwrap_or_default(),
            nx: nx.unwrap_or_default(),
            nt: nt.unwrap_or_default(),
            tol,
            max_iter,
            linear_solver,
            directory: o.directory,
            snapshots,
            formats,
        })
    }
}

/// An existing directory must be writable; a missing one must have a writable ancestor.
fn check_writable(dir: &Path) -> std::result::Result<(), String> {
    let mut p = dir;
    loop {
        if p.exists() {
            let meta = std::fs::metadata(p).map_err(|e| e.to_string())?;
            if !meta.is_dir() {
                return Err("not a directory".into());
            }
            if meta.permissions().readonly() {
                return Err("not writable".into());
            }
            return Ok(());
        }
        match p.parent() {
            Some(q) if !q.as_os_str().is_empty() => p = q,
            _ => return Ok(()),
        }
    }
}

impl RunConfig {
    pub fn to_raw(&self) -> RawConfig {
        let m = &self.model;
        RawConfig {
            model: Some(RawModel {
                alpha: Some(m.alpha),
                beta1: Some(m.beta1),
                beta2: Some(m.beta2),
                eta1: Some(m.eta1),
                eta2: Some(m.eta2),
                mu1: Some(m.mu1),
                mu2: Some(m.mu2),
                zeta1: Some(m.zeta1),
                zeta2: Some(m.zeta2),
                gamma1: Some(m.gamma1),
                gamma2: Some(m.gamma2),
                a: Some(m.a),
                b: Some(m.b),
                test_mode: m.test_mode.then_some(true),
            }),
            initial: Some(RawInitial {
                preset: Some(self.initial),
            }),
            grid: Some(RawGrid { nx: Some(self.nx) }),
            time: Some(RawTime {
                nt: Some(self.nt),
                t_final: Some(m.t_final),
            }),
            solver: Some(RawSolver {
                tol: Some(self.tol),
                max_iter: Some(self.max_iter),
                linear_solver: Some(solver_name(self.linear_solver).to_string()),
            }),
            output: Some(RawOutput {
                directory: self.directory.clone(),
                snapshots: Some(self.snapshots.clone()),
                formats: Some(self.formats.clone()),
            }),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_raw()).map_err(|e| Error::Input(format!("cannot serialise config: {e}")))
    }

    pub fn grid(&self) -> Result<Grid1D> {
        self.model.grid(self.nx)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            linear_solver: self.linear_solver,
            snapshot_times: self.snapshots.clone(),
        }
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses TOML or JSON text (JSON if the first non-blank character is `{`).
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let inner = match value {
            serde_json::Value::Object(mut map) if map.contains_key("config") => map.remove("config").unwrap_or_default(),
            v => v,
        };
        serde_json::from_value(inner).map_err(|e| Error::Parse {
            line: 0,
            column: 0,
            message: e.to_string(),
        })?
    } else {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?
    };
    raw.validate()
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

// ---------------------------------------------------------------------------
// Output

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// In-memory CSV table, written in one go.
pub struct Csv {
    wtr: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        // writing into a Vec cannot fail
        let _ = wtr.write_record(header);
        Csv { wtr }
    }

    pub fn row<I: IntoIterator<Item = Cell>>(&mut self, cells: I) {
        let record: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Num(v) => fmt_num(v),
                Cell::Text(s) => s,
                Cell::Empty => String::new(),
            })
            .collect();
        let _ = self.wtr.write_record(&record);
    }

    pub fn into_string(self) -> String {
        let bytes = self.wtr.into_inner().unwrap_or_default();
        String::from_utf8(bytes).unwrap_or_default()
    }

    pub fn write(self, path: &Path) -> Result<()> {
        write_atomic(path, self.into_string().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceFlag {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub steps: usize,
    pub max_iterations: usize,
    pub median_iterations: f64,
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Present for config-driven runs; feeding the manifest back reruns them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RawConfig>,
    /// Experiment parameters for the fixed harness commands.
    #[serde(default)]
    pub parameters: serde_json::Value,
    pub timings: Vec<Timing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<IterationStats>,
    pub acceptance: Vec<AcceptanceFlag>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: "fgl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: None,
            parameters: serde_json::Value::Null,
            timings: Vec::new(),
            iterations: None,
            acceptance: Vec::new(),
            warnings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings.push(Timing {
            phase: phase.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn accept(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.acceptance.push(AcceptanceFlag {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_accepted(&self) -> bool {
        self.acceptance.iter().all(|a| a.passed)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        write_atomic(&path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(path)
    }
}

/// Snapshot table `(x, Re U, Im U, |U|, Re V, Im V, |V|)` on interior nodes.
pub fn snapshot_csv(grid: &Grid1D, f: &FieldPair) -> Csv {
    let mut csv = Csv::new(&["x", "re_u", "im_u", "abs_u", "re_v", "im_v", "abs_v"]);
    for (j, (u, v)) in f.u.iter().zip(&f.v).enumerate() {
        let cells: [f64; 7] = [grid.node(j + 1), u.re, u.im, u.norm(), v.re, v.im, v.norm()];
        csv.row(cells.into_iter().map(Cell::Num));
    }
    csv
}

pub fn energy_csv(points: &[(f64, f64)]) -> Csv {
    let mut csv = Csv::new(&["t", "W"]);
    for &(t, w) in points {
        csv.row([Cell::Num(t), Cell::Num(w)]);
    }
    csv
}

/// File name for the snapshot nearest `t`.
pub fn snapshot_name(index: usize, t: f64) -> String {
    format!("snapshot_{index:02}_t{t}.csv")
}

/// Runs a validated configuration.
pub fn run_config(cfg: &RunConfig) -> Result<(Grid1D, RunOutput)> {
    let grid = cfg.grid()?;
    let init = cfg.initial.fields(&grid)?;
    let out = run(&cfg.model, grid, cfg.nt, &init, &cfg.run_options(), |_, _| {})?;
    Ok((grid, out))
}

/// Writes snapshots, the energy trace and final fields for a finished run.
/// Returns the names of the files written.
pub fn write_run_outputs(dir: &Path, cfg: &RunConfig, grid: &Grid1D, out: &RunOutput) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    if cfg.wants(OutputFormat::Csv) {
        for (i, s) in out.snapshots.iter().enumerate() {
            let name = snapshot_name(i, s.t);
            snapshot_csv(grid, s).write(&dir.join(&name))?;
            names.push(name);
        }
        let name = "energy.csv".to_string();
        energy_csv(&out.trace.points).write(&dir.join(&name))?;
        names.push(name);
        let name = "final.csv".to_string();
        snapshot_csv(grid, &out.final_state).write(&dir.join(&name))?;
        names.push(name);
    }
    if cfg.wants(OutputFormat::Json) {
        let name = "final.json".to_string();
        let pairs = |w: &[Complex64]| w.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
        let body = serde_json::json!({
            "t": out.final_state.t,
            "x": (1..grid.nx).map(|j| grid.node(j)).collect::<Vec<_>>(),
            "u": pairs(&out.final_state.u),
            "v": pairs(&out.final_state.v),
        });
        write_atomic(&dir.join(&name), serde_json::to_string(&body)?.as_bytes())?;
        names.push(name);
    }
    Ok(names)
}
