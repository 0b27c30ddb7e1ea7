//! Registered scenarios: each wires the library into one reproducible
//! experiment and returns a [`Report`] with results and assertions.

mod jacobi_sphere;
mod lorentz;
mod revolution;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Config, Key};
use crate::error::{GeoError, Result};
use crate::flow::FlowParams;

/// Registered scenario names, in display order.
pub const SCENARIOS: &[&str] = &[
    "minkowski-minus-point",
    "cylinder-embedding",
    "flat-2d-leaves",
    "revolution-hausdorff",
    "revolution-distances",
    "jacobi-sphere",
    "contact-residuals",
];

type Runner = fn(&mut Ctx) -> Result<()>;

fn lookup(name: &str) -> Result<(&'static [Key], Runner)> {
    Ok(match name {
        "minkowski-minus-point" => (lorentz::MINUS_POINT_KEYS, lorentz::minus_point),
        "cylinder-embedding" => (lorentz::CYLINDER_KEYS, lorentz::cylinder),
        "flat-2d-leaves" => (lorentz::LEAVES_KEYS, lorentz::flat_leaves),
        "contact-residuals" => (lorentz::CONTACT_KEYS, lorentz::contact),
        "revolution-hausdorff" => (revolution::HAUSDORFF_KEYS, revolution::hausdorff),
        "revolution-distances" => (revolution::DISTANCE_KEYS, revolution::distances),
        "jacobi-sphere" => (jacobi_sphere::KEYS, jacobi_sphere::run),
        other => return Err(GeoError::Config(format!("unknown scenario `{other}` (registered: {})", SCENARIOS.join(", ")))),
    })
}

/// Keys accepted by `name`, after the common ones.
pub fn schema(name: &str) -> Result<&'static [Key]> {
    Ok(lookup(name)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    /// Seconds since the Unix epoch at the start of the run.
    pub timestamp: u64,
    pub elapsed_seconds: f64,
    pub parameters: BTreeMap<String, String>,
    pub results: Value,
    pub assertions: Vec<Assertion>,
    pub exit_status: i32,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.exit_status == 0
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Result value at a `/`-separated path.
    pub fn result(&self, path: &str) -> Option<&Value> {
        self.results.pointer(&format!("/{path}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Results and assertions only, for determinism checks.
    pub fn deterministic_part(&self) -> String {
        serde_json::to_string(&(&self.scenario, &self.parameters, &self.results, &self.assertions)).expect("report serializes")
    }
}

struct Plot {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// Mutable state threaded through a scenario run.
pub(crate) struct Ctx {
    pub cfg: Config,
    pub rng: ChaCha8Rng,
    results: Map<String, Value>,
    assertions: Vec<Assertion>,
    plots: Vec<Plot>,
}

impl Ctx {
    fn new(cfg: Config) -> Result<Self> {
        let rng = ChaCha8Rng::seed_from_u64(cfg.u64("seed")?);
        Ok(Self { cfg, rng, results: Map::new(), assertions: Vec::new(), plots: Vec::new() })
    }

    pub fn flow_params(&self) -> Result<FlowParams> {
        let rel = self.cfg.f64("rel_tol")?;
        let p = FlowParams {
            rel_tol: rel,
            abs_tol: rel * 1e-2,
            max_param: self.cfg.f64("max_param")?,
            boundary_margin: self.cfg.f64("boundary_margin")?,
            ..FlowParams::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn record<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or_else(|e| Value::String(format!("unserializable: {e}")));
        self.results.insert(key.to_string(), v);
    }

    pub fn check(&mut self, name: &str, expected: impl Display, actual: impl Display, pass: bool) {
        self.assertions.push(Assertion { name: name.into(), expected: expected.to_string(), actual: actual.to_string(), pass });
    }

    pub fn check_eq<T: PartialEq + Display>(&mut self, name: &str, expected: T, actual: T) {
        let pass = expected == actual;
        self.check(name, expected, actual, pass);
    }

    pub fn check_below(&mut self, name: &str, bound: f64, actual: f64) {
        self.check(name, format!("< {bound:e}"), format!("{actual:e}"), actual < bound);
    }

    pub fn check_above(&mut self, name: &str, bound: f64, actual: f64) {
        self.check(name, format!("> {bound:e}"), format!("{actual:e}"), actual > bound);
    }

    pub fn plot(&mut self, name: &str, header: &[&str], rows: Vec<Vec<f64>>) {
        self.plots.push(Plot { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows });
    }
}

fn write_plots(dir: &Path, scenario: &str, plots: &[Plot]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for p in plots {
        let path = dir.join(format!("{scenario}-{}.csv", p.name));
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{}", p.header.join(","))?;
        for row in &p.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
    }
    Ok(())
}

/// Options beyond the key-value overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub overrides: BTreeMap<String, String>,
    pub plot_dir: Option<PathBuf>,
}

/// Runs a registered scenario. Unknown names and invalid configs are usage
/// errors; failures inside the scenario become a failed assertion.
pub fn run(name: &str, opts: &RunOptions) -> Result<Report> {
    let (schema, runner) = lookup(name)?;
    let cfg = Config::resolve(schema, &opts.overrides)?;
    let parameters = cfg.values().clone();
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let started = Instant::now();
    let mut ctx = Ctx::new(cfg)?;
    if let Err(e) = runner(&mut ctx) {
        ctx.check("completed", "no error", e.to_string(), false);
    }
    if let Some(dir) = &opts.plot_dir {
        if let Err(e) = write_plots(dir, name, &ctx.plots) {
            ctx.check("plot output", "written", e.to_string(), false);
        }
    }
    let exit_status = if ctx.assertions.iter().all(|a| a.pass) { 0 } else { 1 };
    Ok(Report {
        scenario: name.to_string(),
        timestamp,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        parameters,
        results: Value::Object(ctx.results),
        assertions: ctx.assertions,
        exit_status,
    })
}

/// Runs with overrides given as `(key, value)` pairs.
pub fn run_with(name: &str, overrides: &[(&str, &str)]) -> Result<Report> {
    let overrides = overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    run(name, &RunOptions { overrides, plot_dir: None })
}
