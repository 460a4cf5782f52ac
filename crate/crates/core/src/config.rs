//! Run configuration files.
//!
//! Configs are TOML documents. Top-level keys: `command`, `seed`. Sections:
//! `[grid]`, `[time]`, `[exponent.<name>]`, `[data]` (with `[[data.mode]]`
//! entries), `[forcing]` (with `[[forcing.mode]]`), `[estimate]`, `[norm]`,
//! `[heat]`, `[solver]`, `[sweep]`, `[output]`. Every violation found is
//! reported, not just the first.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::estimates::EstimateId;
use crate::exponents::{ExponentRecipe, Profile};
use crate::random::Spectrum;
use crate::solvers::System;
use crate::timeseries::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Norm,
    Decompose,
    Verify,
    Heat,
    SolveNs,
    SolveKs,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Norm,
        Command::Decompose,
        Command::Verify,
        Command::Heat,
        Command::SolveNs,
        Command::SolveKs,
        Command::Sweep,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::Decompose => "decompose",
            Command::Verify => "verify",
            Command::Heat => "heat",
            Command::SolveNs => "solve-ns",
            Command::SolveKs => "solve-ks",
            Command::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn is_solver(&self) -> bool {
        matches!(self, Command::SolveNs | Command::SolveKs | Command::Sweep)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub n: usize,
    pub dims: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeConfig {
    Uniform { horizon: f64, intervals: usize },
    Geometric { horizon: f64, intervals: usize, ratio: f64 },
}

impl TimeConfig {
    pub fn build(&self) -> Result<TimeGrid> {
        match *self {
            TimeConfig::Uniform { horizon, intervals } => TimeGrid::uniform(horizon, intervals),
            TimeConfig::Geometric {
                horizon,
                intervals,
                ratio,
            } => TimeGrid::geometric(horizon, intervals, ratio),
        }
    }
}

/// One real mode pair a cos(k·x) per component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpec {
    pub k: [i64; 3],
    pub amplitude: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldSource {
    /// Random coefficients on lo ≤ |ξ| ≤ hi (defaults: the covered band).
    Random {
        lo: Option<f64>,
        hi: Option<f64>,
        spectrum: Spectrum,
        seed: u64,
    },
    Modes {
        modes: Vec<ModeSpec>,
    },
    Snapshot {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataConfig {
    pub source: FieldSource,
    /// Multiplies the loaded field.
    pub amplitude: f64,
    /// Solver runs only: rescale data and forcing so ‖y‖ = fraction · η.
    pub eta_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    Constant,
    ExpDecay { rate: f64 },
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::ExpDecay { rate } => (-rate * t).exp(),
        }
    }
}

/// f(t, x) = amplitude · g(t) · F(x).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcingConfig {
    pub source: FieldSource,
    pub envelope: Envelope,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateConfig {
    pub id: EstimateId,
    pub calibration: usize,
    pub holdout: usize,
    pub safety_factor: f64,
    /// Free parameters of the chosen estimate, defaults filled.
    pub params: BTreeMap<String, f64>,
    /// bernstein-iii only.
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormConfig {
    pub s: f64,
    pub r: f64,
    pub log_holder_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatConfig {
    pub s: f64,
    pub r: f64,
    pub rho: f64,
    pub rho1: f64,
    pub forcing: bool,
    pub calibration: usize,
    pub holdout: usize,
    pub safety_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSection {
    pub rho: f64,
    pub dealias: bool,
    pub eta: Option<f64>,
    pub c_fit: Option<f64>,
    pub max_iterations: usize,
    pub contraction_tolerance: f64,
    pub calibration_trials: usize,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub system: System,
    pub trials: usize,
    /// Seeds for the stability comparison; the first is the reported one.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub exponents: BTreeMap<String, ExponentRecipe>,
    pub data: DataConfig,
    pub forcing: Option<ForcingConfig>,
    pub estimate: Option<EstimateConfig>,
    pub norm: NormConfig,
    pub heat: HeatConfig,
    pub solver: SolverSection,
    pub sweep: SweepConfig,
    pub output_prefix: String,
}

impl RunConfig {
    /// Canonical JSON echo with every default filled in.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// sha256 of the canonical echo.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn exponent(&self, name: &str) -> Option<&ExponentRecipe> {
        self.exponents.get(name)
    }
}

const TOP_KEYS: &[&str] = &[
    "command", "seed", "grid", "time", "exponent", "data", "forcing", "estimate", "norm", "heat", "solver", "sweep",
    "output",
];

/// Collects violations while walking the document.
struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn err(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn table<'a>(&mut self, parent: &'a Table, key: &str, path: &str) -> Option<&'a Table> {
        match parent.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.err(format!("{path}: expected a section"));
                None
            }
        }
    }

    fn allow(&mut self, t: &Table, path: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(format!("{path}: unknown key '{k}' (allowed: {})", allowed.join(", ")));
            }
        }
    }

    fn float(&mut self, t: &Table, path: &str, key: &str, default: f64) -> f64 {
        self.opt_float(t, path, key).unwrap_or(default)
    }

    fn opt_float(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        match t.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            Value::String(s) if s == "inf" => Some(f64::INFINITY),
            other => {
                self.err(format!("{path}.{key}: expected a number, found {}", describe(other)));
                None
            }
        }
    }

    fn uint(&mut self, t: &Table, path: &str, key: &str, default: u64) -> u64 {
        match t.get(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(other) => {
                self.err(format!(
                    "{path}.{key}: expected a nonnegative integer, found {}",
                    describe(other)
                ));
                default
            }
        }
    }

    fn boolean(&mut self, t: &Table, path: &str, key: &str, default: bool) -> bool {
        match t.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.err(format!(
                    "{path}.{key}: expected true or false, found {}",
                    describe(other)
                ));
                default
            }
        }
    }

    fn string<'a>(&mut self, t: &'a Table, path: &str, key: &str) -> Option<&'a str> {
        match t.get(key)? {
            Value::String(s) => Some(s),
            other => {
                self.err(format!("{path}.{key}: expected a string, found {}", describe(other)));
                None
            }
        }
    }

    fn floats(&mut self, t: &Table, path: &str, key: &str) -> Vec<f64> {
        match t.get(key) {
            None => Vec::new(),
            Some(Value::Array(a)) => a
                .iter()
                .filter_map(|v| match v {
                    Value::Float(x) => Some(*x),
                    Value::Integer(i) => Some(*i as f64),
                    other => {
                        self.err(format!("{path}.{key}: expected numbers, found {}", describe(other)));
                        None
                    }
                })
                .collect(),
            Some(other) => {
                self.err(format!("{path}.{key}: expected an array, found {}", describe(other)));
                Vec::new()
            }
        }
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0) || !v.is_finite() {
            self.err(format!("{path}: must be positive and finite (got {v})"));
        }
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::String(s) => format!("string \"{s}\""),
        other => format!("{} {other}", other.type_str()),
    }
}

/// Line numbers (1-based) of `key =` assignments in the text, for
/// duplicate-key diagnostics.
fn assignment_lines(text: &str, key: &str) -> Vec<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .map(|rest| rest.trim_start().starts_with('='))
                .unwrap_or(false)
        })
        .map(|(i, _)| i + 1)
        .collect()
}

fn syntax_error(text: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    let msg = e.message().to_string();
    let mut out = match line {
        Some(l) => format!("line {l}: {msg}"),
        None => msg.clone(),
    };
    if let Some(key) = msg.strip_prefix("duplicate key `").and_then(|r| r.split('`').next()) {
        let lines = assignment_lines(text, key);
        if lines.len() > 1 {
            out = format!(
                "duplicate key '{key}' on lines {}",
                lines.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
            );
        }
    }
    Error::Config(vec![out])
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_as(text, None)
}

/// Parse for a known subcommand: `command` may then be omitted, and must
/// agree if present.
pub fn parse_config_as(text: &str, expected: Option<Command>) -> Result<RunConfig> {
    let doc: Table = text.parse().map_err(|e| syntax_error(text, e))?;
    let mut r = Reader { errors: Vec::new() };
    r.allow(&doc, "top level", TOP_KEYS);

    let command = match (r.string(&doc, "top level", "command"), expected) {
        (Some(c), _) => match Command::parse(c) {
            Some(cmd) => {
                if let Some(e) = expected.filter(|e| *e != cmd) {
                    r.err(format!("command: config says '{c}' but '{}' was requested", e.as_str()));
                }
                cmd
            }
            None => {
                r.err(format!(
                    "command: unknown '{c}' (expected one of {})",
                    Command::ALL.map(|c| c.as_str()).join(", ")
                ));
                expected.unwrap_or(Command::Norm)
            }
        },
        (None, Some(e)) => e,
        (None, None) => {
            r.err("command: missing".into());
            Command::Norm
        }
    };
    let seed = r.uint(&doc, "top level", "seed", 0x00f1_b1ab);

    let empty = Table::new();
    let grid_t = r.table(&doc, "grid", "grid").unwrap_or(&empty);
    r.allow(grid_t, "grid", &["n", "dims"]);
    let default_n = if command.is_solver() { 16 } else { 32 };
    let grid = GridConfig {
        n: r.uint(grid_t, "grid", "n", default_n) as usize,
        dims: r.uint(grid_t, "grid", "dims", 3) as usize,
    };
    if let Err(e) = crate::spectral::GridSpec::new(grid.n, grid.dims) {
        r.err(format!("grid: {e}"));
    }
    if command.is_solver() && grid.dims != 3 {
        r.err("grid.dims: the solvers need dims = 3".into());
    }

    let time_t = r_table(&mut r, &doc, "time");
    let time = read_time(&mut r, time_t);
    let exponents = read_exponents(&mut r, &doc, command);
    let data_t = r.table(&doc, "data", "data").unwrap_or(&empty).clone();
    let data = read_data(&mut r, &data_t, seed);
    let forcing = r
        .table(&doc, "forcing", "forcing")
        .cloned()
        .map(|t| read_forcing(&mut r, &t, seed));
    let estimate = read_estimate(&mut r, &doc, command);
    let norm_t = r.table(&doc, "norm", "norm").unwrap_or(&empty).clone();
    r.allow(&norm_t, "norm", &["s", "r", "log_holder_budget"]);
    let norm = NormConfig {
        s: r.float(&norm_t, "norm", "s", 0.5),
        r: r.float(&norm_t, "norm", "r", 1.0),
        log_holder_budget: r.uint(&norm_t, "norm", "log_holder_budget", 10_000) as usize,
    };
    if norm.r < 1.0 {
        r.err(format!("norm.r: must be at least 1 (got {})", norm.r));
    }
    let heat = read_heat(&mut r, &doc);
    let solver = read_solver(&mut r, &doc);
    let sweep = read_sweep(&mut r, &doc, seed);
    let out_t = r.table(&doc, "output", "output").unwrap_or(&empty).clone();
    r.allow(&out_t, "output", &["prefix"]);
    let output_prefix = r
        .string(&out_t, "output", "prefix")
        .unwrap_or(command.as_str())
        .to_string();

    if r.errors.is_empty() {
        Ok(RunConfig {
            command,
            seed,
            grid,
            time,
            exponents,
            data,
            forcing,
            estimate,
            norm,
            heat,
            solver,
            sweep,
            output_prefix,
        })
    } else {
        Err(Error::Config(r.errors))
    }
}

fn r_table(r: &mut Reader, doc: &Table, key: &str) -> Table {
    r.table(doc, key, key).cloned().unwrap_or_default()
}

fn read_time(r: &mut Reader, t: Table) -> TimeConfig {
    r.allow(&t, "time", &["kind", "horizon", "intervals", "ratio"]);
    let horizon = r.float(&t, "time", "horizon", 1.0);
    let intervals = r.uint(&t, "time", "intervals", 128) as usize;
    let kind = r.string(&t, "time", "kind").unwrap_or("geometric").to_string();
    let cfg = match kind.as_str() {
        "uniform" => TimeConfig::Uniform { horizon, intervals },
        "geometric" => TimeConfig::Geometric {
            horizon,
            intervals,
            ratio: r.float(&t, "time", "ratio", 1.05),
        },
        other => {
            r.err(format!("time.kind: unknown '{other}' (expected uniform or geometric)"));
            TimeConfig::Uniform { horizon, intervals }
        }
    };
    if let Err(e) = cfg.build() {
        r.err(format!("time: {e}"));
    }
    cfg
}

fn read_recipe(r: &mut Reader, t: &Table, path: &str) -> Option<ExponentRecipe> {
    r.allow(t, path, &["kind", "value", "base", "amplitude", "profile"]);
    match r.string(t, path, "kind").unwrap_or("constant") {
        "constant" => {
            let p = r.opt_float(t, path, "value");
            if p.is_none() {
                r.err(format!("{path}.value: missing"));
            }
            p.map(|p| ExponentRecipe::Constant { p })
        }
        "profiled" => {
            let base = r.float(t, path, "base", 3.0);
            let amplitude = r.float(t, path, "amplitude", 0.0);
            let name = r.string(t, path, "profile").unwrap_or("trig");
            let profile = match Profile::parse(name) {
                Some(p) => p,
                None => {
                    r.err(format!(
                        "{path}.profile: unknown '{name}' (expected trig, bump or step)"
                    ));
                    return None;
                }
            };
            Some(ExponentRecipe::Profiled {
                base,
                amplitude,
                profile,
            })
        }
        other => {
            r.err(format!(
                "{path}.kind: unknown '{other}' (expected constant or profiled)"
            ));
            None
        }
    }
}

fn read_exponents(r: &mut Reader, doc: &Table, command: Command) -> BTreeMap<String, ExponentRecipe> {
    let mut out = BTreeMap::new();
    if let Some(t) = r.table(doc, "exponent", "exponent").cloned() {
        for (name, v) in &t {
            let path = format!("exponent.{name}");
            match v {
                Value::Table(sub) => {
                    if let Some(rec) = read_recipe(r, sub, &path) {
                        out.insert(name.clone(), rec);
                    }
                }
                _ => r.err(format!("{path}: expected a section")),
            }
        }
    }
    for (name, rec) in &out {
        let (lo, hi) = recipe_bounds(rec);
        if lo <= 1.0 {
            r.err(format!("exponent.{name}: p- = {lo} must exceed 1"));
        }
        if command.is_solver() && name == "p" && !(2.0 <= lo && hi <= 6.0) {
            r.err(format!(
                "exponent.p: solver exponents need 2 <= p- <= p+ <= 6 (the global well-posedness window); got p- = {lo}, p+ = {hi}"
            ));
        }
    }
    out
}

/// Declared bounds of a recipe, before sampling.
fn recipe_bounds(rec: &ExponentRecipe) -> (f64, f64) {
    match rec {
        ExponentRecipe::Constant { p } => (*p, *p),
        ExponentRecipe::Profiled { base, amplitude, .. } => (base - amplitude.abs(), base + amplitude.abs()),
        ExponentRecipe::HolderConjugate { p1, p2 } => {
            let (a, b) = (recipe_bounds(p1), recipe_bounds(p2));
            (1.0 / (1.0 / a.0 + 1.0 / b.0), 1.0 / (1.0 / a.1 + 1.0 / b.1))
        }
    }
}

fn read_spectrum(r: &mut Reader, t: &Table, path: &str) -> Spectrum {
    match r.string(t, path, "spectrum").unwrap_or("flat") {
        "flat" => Spectrum::Flat,
        "power-law" => Spectrum::PowerLaw(r.float(t, path, "slope", -1.0)),
        other => {
            r.err(format!(
                "{path}.spectrum: unknown '{other}' (expected flat or power-law)"
            ));
            Spectrum::Flat
        }
    }
}

fn read_modes(r: &mut Reader, t: &Table, path: &str) -> Vec<ModeSpec> {
    let list = match t.get("mode") {
        Some(Value::Array(a)) => a.clone(),
        Some(_) => {
            r.err(format!("{path}.mode: expected [[{path}.mode]] entries"));
            return Vec::new();
        }
        None => {
            r.err(format!("{path}: kind = \"modes\" needs [[{path}.mode]] entries"));
            return Vec::new();
        }
    };
    let mut out = Vec::new();
    for (i, v) in list.iter().enumerate() {
        let p = format!("{path}.mode[{i}]");
        let Value::Table(m) = v else {
            r.err(format!("{p}: expected a table"));
            continue;
        };
        r.allow(m, &p, &["k", "amplitude"]);
        let k = r.floats(m, &p, "k");
        let amplitude = r.floats(m, &p, "amplitude");
        if k.len() != 3 || k.iter().any(|x| x.fract() != 0.0) {
            r.err(format!("{p}.k: expected three integers"));
            continue;
        }
        if amplitude.is_empty() {
            r.err(format!("{p}.amplitude: missing"));
            continue;
        }
        out.push(ModeSpec {
            k: [k[0] as i64, k[1] as i64, k[2] as i64],
            amplitude,
        });
    }
    out
}

fn read_source(r: &mut Reader, t: &Table, path: &str, seed: u64) -> FieldSource {
    match r.string(t, path, "kind").unwrap_or("random") {
        "random" => {
            let lo = r.opt_float(t, path, "lo");
            let hi = r.opt_float(t, path, "hi");
            if let (Some(a), Some(b)) = (lo, hi) {
                if !(a < b) {
                    r.err(format!("{path}: need lo < hi (got {a}, {b})"));
                }
            }
            FieldSource::Random {
                lo,
                hi,
                spectrum: read_spectrum(r, t, path),
                seed: r.uint(t, path, "seed", seed),
            }
        }
        "modes" => FieldSource::Modes {
            modes: read_modes(r, t, path),
        },
        "snapshot" => match r.string(t, path, "path") {
            Some(p) => FieldSource::Snapshot { path: PathBuf::from(p) },
            None => {
                r.err(format!("{path}.path: missing"));
                FieldSource::Snapshot { path: PathBuf::new() }
            }
        },
        other => {
            r.err(format!(
                "{path}.kind: unknown '{other}' (expected random, modes or snapshot)"
            ));
            FieldSource::Modes { modes: Vec::new() }
        }
    }
}

const SOURCE_KEYS: &[&str] = &[
    "kind",
    "lo",
    "hi",
    "spectrum",
    "slope",
    "seed",
    "mode",
    "path",
    "amplitude",
];

fn read_data(r: &mut Reader, t: &Table, seed: u64) -> DataConfig {
    let mut allowed = SOURCE_KEYS.to_vec();
    allowed.push("eta_fraction");
    r.allow(t, "data", &allowed);
    let source = read_source(r, t, "data", seed);
    let amplitude = r.float(t, "data", "amplitude", 1.0);
    let eta_fraction = r.opt_float(t, "data", "eta_fraction");
    if let Some(f) = eta_fraction {
        r.positive("data.eta_fraction", f);
    }
    DataConfig {
        source,
        amplitude,
        eta_fraction,
    }
}

fn read_forcing(r: &mut Reader, t: &Table, seed: u64) -> ForcingConfig {
    let mut allowed = SOURCE_KEYS.to_vec();
    allowed.extend(["envelope", "rate"]);
    r.allow(t, "forcing", &allowed);
    let source = read_source(r, t, "forcing", seed ^ 0xf0);
    let envelope = match r.string(t, "forcing", "envelope").unwrap_or("exp-decay") {
        "constant" => Envelope::Constant,
        "exp-decay" => {
            let rate = r.float(t, "forcing", "rate", 1.0);
            if !(rate >= 0.0) {
                r.err(format!("forcing.rate: must be nonnegative (got {rate})"));
            }
            Envelope::ExpDecay { rate }
        }
        other => {
            r.err(format!(
                "forcing.envelope: unknown '{other}' (expected constant or exp-decay)"
            ));
            Envelope::Constant
        }
    };
    ForcingConfig {
        source,
        envelope,
        amplitude: r.float(t, "forcing", "amplitude", 1.0),
    }
}

/// Parameters and defaults of each estimate.
pub fn estimate_defaults(id: EstimateId) -> &'static [(&'static str, f64)] {
    match id {
        EstimateId::BernsteinBall => &[("k", 1.0), ("p", 4.0), ("q", 2.0), ("lambda", 3.0)],
        EstimateId::BernsteinAnnulus => &[("k", 1.0), ("p", 2.0), ("q", 2.0), ("lambda", 2.0)],
        EstimateId::BernsteinSymbol => &[("p", 4.0), ("q", 2.0), ("lambda", 2.0)],
        EstimateId::Embedding => &[("s", 1.0), ("p1", 2.0), ("p2", 4.0), ("r1", 1.0), ("r2", 2.0)],
        EstimateId::ProductSameScale => &[("s", 2.5), ("p", 6.0), ("p1", 2.0), ("p2", 1.5)],
        EstimateId::ProductShifted => &[("s1", 2.5), ("s2", 0.5), ("p1", 2.0), ("p2", 2.0)],
        EstimateId::Holder => &[],
        EstimateId::Heat => &[],
    }
}

fn read_estimate(r: &mut Reader, doc: &Table, command: Command) -> Option<EstimateConfig> {
    let t = r.table(doc, "estimate", "estimate").cloned();
    let t = match (t, command) {
        (Some(t), _) => t,
        (None, Command::Verify) => Table::new(),
        (None, _) => return None,
    };
    let id = match r.string(&t, "estimate", "id") {
        Some(s) => match EstimateId::parse(s) {
            Some(id) => id,
            None => {
                r.err(format!(
                    "estimate.id: unknown '{s}' (expected one of {})",
                    EstimateId::ALL.map(|i| i.as_str()).join(", ")
                ));
                return None;
            }
        },
        // The CLI flag may still supply it.
        None => EstimateId::BernsteinBall,
    };
    Some(estimate_section(r, &t, id))
}

fn estimate_section(r: &mut Reader, t: &Table, id: EstimateId) -> EstimateConfig {
    let defaults = estimate_defaults(id);
    let mut allowed: Vec<&str> = vec!["id", "calibration", "holdout", "safety_factor"];
    allowed.extend(defaults.iter().map(|d| d.0));
    if id == EstimateId::BernsteinSymbol {
        allowed.push("symbol");
    }
    r.allow(t, "estimate", &allowed);
    let params = defaults
        .iter()
        .map(|&(k, d)| (k.to_string(), r.float(t, "estimate", k, d)))
        .collect();
    let symbol = r.string(t, "estimate", "symbol").unwrap_or("riesz").to_string();
    if !["riesz", "inverse-laplacian", "laplacian"].contains(&symbol.as_str()) {
        r.err(format!(
            "estimate.symbol: unknown '{symbol}' (expected riesz, inverse-laplacian or laplacian)"
        ));
    }
    let safety_factor = r.float(t, "estimate", "safety_factor", 2.0);
    r.positive("estimate.safety_factor", safety_factor);
    EstimateConfig {
        id,
        calibration: r.uint(t, "estimate", "calibration", 50) as usize,
        holdout: r.uint(t, "estimate", "holdout", 50) as usize,
        safety_factor,
        params,
        symbol,
    }
}

/// Rebuild the estimate section for another id (CLI override), keeping
/// the protocol settings.
pub fn with_estimate(cfg: &RunConfig, id: EstimateId) -> EstimateConfig {
    let mut r = Reader { errors: Vec::new() };
    let mut e = estimate_section(&mut r, &Table::new(), id);
    if let Some(old) = &cfg.estimate {
        e.calibration = old.calibration;
        e.holdout = old.holdout;
        e.safety_factor = old.safety_factor;
        if old.id == id {
            return old.clone();
        }
    }
    e
}

fn read_heat(r: &mut Reader, doc: &Table) -> HeatConfig {
    let t = r_table(r, doc, "heat");
    r.allow(
        &t,
        "heat",
        &[
            "s",
            "r",
            "rho",
            "rho1",
            "forcing",
            "calibration",
            "holdout",
            "safety_factor",
        ],
    );
    let cfg = HeatConfig {
        s: r.float(&t, "heat", "s", 0.5),
        r: r.float(&t, "heat", "r", 1.0),
        rho: r.float(&t, "heat", "rho", 1.0),
        rho1: r.float(&t, "heat", "rho1", 2.0),
        forcing: r.boolean(&t, "heat", "forcing", true),
        calibration: r.uint(&t, "heat", "calibration", 50) as usize,
        holdout: r.uint(&t, "heat", "holdout", 50) as usize,
        safety_factor: r.float(&t, "heat", "safety_factor", 2.0),
    };
    if !(cfg.rho >= 1.0 && cfg.rho1 >= cfg.rho) {
        r.err(format!(
            "heat: need rho1 >= rho >= 1 (got rho = {}, rho1 = {})",
            cfg.rho, cfg.rho1
        ));
    }
    if cfg.r < 1.0 {
        r.err(format!("heat.r: must be at least 1 (got {})", cfg.r));
    }
    cfg
}

fn read_solver(r: &mut Reader, doc: &Table) -> SolverSection {
    let t = r_table(r, doc, "solver");
    r.allow(
        &t,
        "solver",
        &[
            "rho",
            "dealias",
            "eta",
            "c_fit",
            "max_iterations",
            "contraction_tolerance",
            "calibration_trials",
            "snapshot_times",
        ],
    );
    let s = SolverSection {
        rho: r.float(&t, "solver", "rho", 2.0),
        dealias: r.boolean(&t, "solver", "dealias", false),
        eta: r.opt_float(&t, "solver", "eta"),
        c_fit: r.opt_float(&t, "solver", "c_fit"),
        max_iterations: r.uint(&t, "solver", "max_iterations", 60) as usize,
        contraction_tolerance: r.float(&t, "solver", "contraction_tolerance", 1e-10),
        calibration_trials: r.uint(&t, "solver", "calibration_trials", 12) as usize,
        snapshot_times: r.floats(&t, "solver", "snapshot_times"),
    };
    if !(s.rho >= 1.0) {
        r.err(format!("solver.rho: must be at least 1 (got {})", s.rho));
    }
    if let Some(e) = s.eta {
        r.positive("solver.eta", e);
    }
    if let Some(c) = s.c_fit {
        r.positive("solver.c_fit", c);
    }
    r.positive("solver.contraction_tolerance", s.contraction_tolerance);
    s
}

fn read_sweep(r: &mut Reader, doc: &Table, seed: u64) -> SweepConfig {
    let t = r_table(r, doc, "sweep");
    r.allow(&t, "sweep", &["system", "trials", "seeds"]);
    let system = match r.string(&t, "sweep", "system").unwrap_or("navier-stokes") {
        "navier-stokes" => System::NavierStokes,
        "keller-segel" => System::KellerSegel,
        other => {
            r.err(format!(
                "sweep.system: unknown '{other}' (expected navier-stokes or keller-segel)"
            ));
            System::NavierStokes
        }
    };
    let seeds: Vec<u64> = match t.get("seeds") {
        None => vec![seed, seed.wrapping_add(1)],
        Some(Value::Array(a)) => a
            .iter()
            .filter_map(|v| match v {
                Value::Integer(i) if *i >= 0 => Some(*i as u64),
                other => {
                    r.err(format!(
                        "sweep.seeds: expected nonnegative integers, found {}",
                        describe(other)
                    ));
                    None
                }
            })
            .collect(),
        Some(other) => {
            r.err(format!("sweep.seeds: expected an array, found {}", describe(other)));
            Vec::new()
        }
    };
    if seeds.is_empty() {
        r.err("sweep.seeds: need at least one seed".into());
    }
    SweepConfig {
        system,
        trials: r.uint(&t, "sweep", "trials", 12) as usize,
        seeds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(e)) => e,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_solver_config_fills_defaults() {
        let c = parse_config("command = \"solve-ns\"\n").unwrap();
        assert_eq!(c.command, Command::SolveNs);
        assert_eq!(c.grid.n, 16);
        assert_eq!(c.solver.rho, 2.0);
        assert!(c.canonical_json().contains("\"contraction_tolerance\""));
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn window_violation_cites_bound() {
        let e = errors(
            "command = \"solve-ks\"\n[exponent.p]\nkind = \"profiled\"\nbase = 5\namplitude = 2\nprofile = \"bump\"\n",
        );
        assert_eq!(e.len(), 1);
        assert!(e[0].contains("p+ = 7"), "{e:?}");
        assert!(e[0].contains("<= 6"));
    }

    #[test]
    fn duplicate_key_lists_lines() {
        let e = errors("command = \"norm\"\n[grid]\nn = 16\n# c\nn = 32\n");
        assert_eq!(e.len(), 1);
        assert!(e[0].contains("lines 3, 5"), "{e:?}");
    }

    #[test]
    fn collects_every_violation() {
        let e = errors(
            "command = \"verify\"\nbogus = 1\n[grid]\nn = 12\n[solver]\nrho = \"two\"\n[estimate]\nid = \"embedding\"\nq = 3\n",
        );
        assert_eq!(e.len(), 4, "{e:?}");
    }

    #[test]
    fn subcommand_fills_and_checks_command() {
        let c = parse_config_as("[grid]\nn = 16\n", Some(Command::Decompose)).unwrap();
        assert_eq!(c.command, Command::Decompose);
        let e = match parse_config_as("command = \"norm\"\n", Some(Command::Heat)) {
            Err(Error::Config(e)) => e,
            other => panic!("{other:?}"),
        };
        assert!(e[0].contains("'heat' was requested"));
    }

    #[test]
    fn malformed_number() {
        let e = errors("command = \"norm\"\n[grid]\nn = 1x6\n");
        assert!(e[0].starts_with("line 3"), "{e:?}");
    }

    #[test]
    fn modes_and_forcing() {
        let c = parse_config(
            "command = \"solve-ns\"\n[data]\nkind = \"modes\"\n[[data.mode]]\nk = [1, 0, 0]\namplitude = [0, 0.1, 0]\n[forcing]\nkind = \"random\"\nhi = 3.0\nenvelope = \"constant\"\n",
        )
        .unwrap();
        match &c.data.source {
            FieldSource::Modes { modes } => assert_eq!(modes[0].k, [1, 0, 0]),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.forcing.unwrap().envelope, Envelope::Constant);
    }
}
