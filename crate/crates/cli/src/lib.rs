//! Experiment harness: a flat, validated experiment description, a runner that
//! dispatches to the library, and report/CSV persistence.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bdld::evolution::{
    empirical_rate_curve, lattice_state, rate_window, sublevel_probability, window_probability,
    write_rate_curve_csv, PRACTICAL_N_CAP,
};
use bdld::ldp::{prelimit_sup_error, rate_functional, GridPath, ProbeFunction};
use bdld::markov::{
    embedded_stationary, embedded_step, fmt_real, stationary_distribution, ModelParams,
    ProbabilityVector,
};
use bdld::optimal::{
    action_of, hamiltonian_residual, sample_path as sample_optimal, solve_boundary,
    write_samples_csv,
};
use bdld::sim::{
    lln_point_experiment, lln_stationary_experiment, occupation_fractions, sample_path,
    sublevel_max_state, tilted_window_estimate, DualTilt, InitialCondition, SimConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BDLD_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "bdld-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Stationary,
    Embedded,
    Simulate,
    LlnPoint,
    LlnStationary,
    RateCurve,
    OptimalPath,
    Action,
    TiltedMc,
    HamiltonianConvergence,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

fn default_lambda() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_reps() -> usize {
    1000
}
fn default_tol() -> f64 {
    1e-12
}
fn default_grid() -> usize {
    201
}

/// One experiment. Fields not used by `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Start state for `simulate`; stationary when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(
        default,
        rename = "gammaT",
        alias = "gamma_t",
        skip_serializing_if = "Option::is_none"
    )]
    pub gamma_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Terminal values for `optimal-path`; one path table each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Path CSV for `action`; boundary data is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(kind: Kind) -> Self {
        serde_json::from_value(json!({ "kind": kind })).expect("defaults deserialize")
    }

    /// Parses JSON, or TOML when `path` ends in `.toml`.
    pub fn from_file(path: &Path) -> Result<Value, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Usage(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "toml") {
            let table: toml::Value = toml::from_str(&text)
                .map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::to_value(table).map_err(|e| RunError::Usage(e.to_string()))
        } else {
            serde_json::from_str(&text)
                .map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))
        }
    }

    pub fn from_value(value: Value) -> Result<Self, RunError> {
        let spec: Self =
            serde_json::from_value(value).map_err(|e| RunError::Usage(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    fn need<T: Copy>(&self, field: &str, value: Option<T>) -> Result<T, RunError> {
        value.ok_or_else(|| RunError::Usage(format!("{} needs field `{field}`", self.kind)))
    }

    fn n(&self) -> Result<usize, RunError> {
        self.need("n", self.n)
    }

    fn model(&self) -> Result<ModelParams<f64>, RunError> {
        ModelParams::new(self.n()?, self.lambda)
            .map_err(|e| RunError::Usage(format!("n/lambda: {e}")))
    }

    /// Per-kind checks run before anything is computed.
    pub fn validate(&self) -> Result<(), RunError> {
        let usage = |msg: String| Err(RunError::Usage(msg));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return usage(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return usage(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.reps == 0 {
            return usage("reps must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return usage(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        let unit = |field: &str, v: f64| -> Result<(), RunError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                usage(format!("{field} = {v} must lie in [0, 1]"))
            }
        };
        match self.kind {
            Kind::Stationary | Kind::Embedded => {
                self.model()?;
            }
            Kind::Simulate => {
                let p = self.model()?;
                if let Some(m) = self.initial {
                    p.check_state(m)
                        .map_err(|e| RunError::Usage(format!("initial: {e}")))?;
                }
            }
            Kind::LlnPoint => {
                self.model()?;
                unit("gamma0", self.need("gamma0", self.gamma0)?)?;
                if self.need("epsilon", self.epsilon)?.partial_cmp(&0.0)
                    != Some(std::cmp::Ordering::Greater)
                {
                    return usage("epsilon must be positive".into());
                }
            }
            Kind::LlnStationary => {
                self.model()?;
                unit("threshold", self.need("threshold", self.threshold)?)?;
                if self.times.is_empty() {
                    return usage("lln-stationary needs non-empty `times`".into());
                }
            }
            Kind::RateCurve | Kind::HamiltonianConvergence => {
                if self.ladder.is_empty() {
                    return usage(format!("{} needs a non-empty N `ladder`", self.kind));
                }
                if self.ladder.contains(&0) {
                    return usage("ladder entries must be at least 1".into());
                }
                if self.kind == Kind::RateCurve {
                    unit("gamma0", self.need("gamma0", self.gamma0)?)?;
                    unit("gammaT", self.need("gammaT", self.gamma_t)?)?;
                    self.need("half_width", self.half_width)?;
                }
            }
            Kind::OptimalPath => {
                unit("gamma0", self.need("gamma0", self.gamma0)?)?;
                if self.targets.is_empty() {
                    return usage("optimal-path needs non-empty `targets`".into());
                }
                for &g in &self.targets {
                    unit("targets", g)?;
                }
                if self.grid < 2 {
                    return usage("grid must be at least 2".into());
                }
            }
            Kind::Action => {
                if self.path.is_none() {
                    unit("gamma0", self.need("gamma0", self.gamma0)?)?;
                    unit("gammaT", self.need("gammaT", self.gamma_t)?)?;
                }
            }
            Kind::TiltedMc => {
                self.model()?;
                unit("gamma0", self.need("gamma0", self.gamma0)?)?;
                unit("gammaT", self.need("gammaT", self.gamma_t)?)?;
                self.need("half_width", self.half_width)?;
            }
        }
        Ok(())
    }

    fn sim_config(&self, initial: InitialCondition) -> Result<SimConfig, RunError> {
        Ok(SimConfig::new(self.horizon, self.seed, initial, self.reps)?)
    }
}

#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Model(bdld::Error),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Usage(m) => write!(f, "usage error: {m}"),
            RunError::Model(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<bdld::Error> for RunError {
    fn from(e: bdld::Error) -> Self {
        RunError::Model(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn verdict(name: &str, passed: bool, detail: String) -> Verdict {
    Verdict {
        name: name.to_owned(),
        passed,
        detail,
    }
}

/// A CSV table; the body is fully formatted so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    pub provenance: Provenance,
    /// Names of the tables, each written as `<name>.csv`.
    pub table_names: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `report.json` and every table into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let report_path = dir.join("report.json");
        let json = serde_json::to_string_pretty(self).map_err(|e| RunError::Io(e.into()))?;
        fs::write(&report_path, json + "\n")?;
        written.push(report_path);
        for table in &self.tables {
            let path = dir.join(format!("{}.csv", table.name));
            fs::write(&path, &table.csv)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn csv_string<F>(write: F) -> Result<String, RunError>
where
    F: FnOnce(&mut Vec<u8>) -> bdld::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn csv_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn tag(x: f64) -> String {
    format!("{x}")
}

/// Name of the path table for boundary data `(γ₀, γ_T)`.
pub fn path_table_name(gamma0: f64, gamma_t: f64) -> String {
    format!("path_g0_{}_gT_{}", tag(gamma0), tag(gamma_t))
}

struct Output {
    results: Value,
    verdicts: Vec<Verdict>,
    tables: Vec<Table>,
}

/// Runs the experiment. Identical specs give identical results and tables.
pub fn run(spec: &ExperimentSpec) -> Result<Report, RunError> {
    spec.validate()?;
    let start = Instant::now();
    let out = match spec.kind {
        Kind::Stationary => run_stationary(spec)?,
        Kind::Embedded => run_embedded(spec)?,
        Kind::Simulate => run_simulate(spec)?,
        Kind::LlnPoint => run_lln_point(spec)?,
        Kind::LlnStationary => run_lln_stationary(spec)?,
        Kind::RateCurve => run_rate_curve(spec)?,
        Kind::OptimalPath => run_optimal_path(spec)?,
        Kind::Action => run_action(spec)?,
        Kind::TiltedMc => run_tilted(spec)?,
        Kind::HamiltonianConvergence => run_hconv(spec)?,
    };
    Ok(Report {
        spec: spec.clone(),
        results: out.results,
        verdicts: out.verdicts,
        provenance: Provenance {
            seed: spec.seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_time_seconds: start.elapsed().as_secs_f64(),
        },
        table_names: out.tables.iter().map(|t| t.name.clone()).collect(),
        tables: out.tables,
    })
}

fn distribution_table(name: &str, dist: &ProbabilityVector<f64>) -> Result<Table, RunError> {
    Ok(Table {
        name: name.to_owned(),
        csv: csv_string(|b| dist.write_csv(b))?,
    })
}

fn run_stationary(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let pi = stationary_distribution(&spec.model()?)?;
    let total = pi.total();
    Ok(Output {
        results: json!({ "total": total, "mean": pi.mean() }),
        verdicts: vec![verdict(
            "normalized",
            (total - 1.0).abs() <= 1e-12,
            format!("total mass {total:.17}"),
        )],
        tables: vec![distribution_table("stationary", &pi)?],
    })
}

fn run_embedded(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let p = spec.model()?;
    let pi = embedded_stationary(&p)?;
    let stepped = embedded_step(&p, &pi)?;
    let residual = pi
        .as_slice()
        .iter()
        .zip(stepped.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Output {
        results: json!({ "invariance_residual": residual }),
        verdicts: vec![verdict(
            "invariant",
            residual <= 1e-12,
            format!("max |πP − π| = {residual:e}"),
        )],
        tables: vec![distribution_table("embedded", &pi)?],
    })
}

fn run_simulate(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let p = spec.model()?;
    let initial = spec
        .initial
        .map_or(InitialCondition::Stationary, InitialCondition::Point);
    let config = SimConfig::new(spec.horizon, spec.seed, initial, 1)?;
    let traj = sample_path(&p, &config)?;
    let occupation = occupation_fractions(&traj, p.n_states)?;
    let pi = stationary_distribution(&p)?;
    Ok(Output {
        results: json!({
            "initial_state": traj.initial_state,
            "final_state": traj.final_state(),
            "jumps": traj.num_jumps(),
            "occupation_tv_to_stationary": occupation.total_variation(&pi),
        }),
        verdicts: vec![],
        tables: vec![
            Table {
                name: "trajectory".into(),
                csv: csv_string(|b| traj.write_csv(b))?,
            },
            distribution_table("occupation", &occupation)?,
        ],
    })
}

fn run_lln_point(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let p = spec.model()?;
    let (gamma0, epsilon) = (
        spec.need("gamma0", spec.gamma0)?,
        spec.need("epsilon", spec.epsilon)?,
    );
    let config = spec.sim_config(InitialCondition::Point(lattice_state(p.n_states, gamma0)))?;
    let est = lln_point_experiment(&p, gamma0, epsilon, &config)?;
    let bound = spec.horizon / (epsilon * epsilon * p.n_states as f64);
    Ok(Output {
        results: json!({ "estimate": est, "bound": bound }),
        verdicts: vec![verdict(
            "below T/(eps^2 N)",
            est.estimate <= bound,
            format!(
                "{:.6} ± {:.6} vs bound {bound:.6}",
                est.estimate, est.stderr
            ),
        )],
        tables: vec![],
    })
}

fn run_lln_stationary(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let p = spec.model()?;
    let u = spec.need("threshold", spec.threshold)?;
    let config = spec.sim_config(InitialCondition::Stationary)?;
    let est = lln_stationary_experiment(&p, u, &spec.times, &config)?;
    let mut verdicts = Vec::new();
    let mut exact = Value::Null;
    if p.n_states <= 4 * PRACTICAL_N_CAP {
        let value = match sublevel_max_state(p.n_states, u) {
            None => 0.0,
            Some(max_state) => sublevel_probability(
                &p,
                &stationary_distribution(&p)?,
                max_state,
                &spec.times,
                spec.tol,
            )?,
        };
        let z = est.z_score(value);
        verdicts.push(verdict(
            "agrees with exact",
            z <= 3.0,
            format!("{:.6} vs exact {value:.6} ({z:.2} SE)", est.estimate),
        ));
        exact = json!(value);
    }
    Ok(Output {
        results: json!({ "estimate": est, "exact": exact }),
        verdicts,
        tables: vec![],
    })
}

fn run_rate_curve(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let ladder: Vec<ModelParams<f64>> = spec
        .ladder
        .iter()
        .map(|&n| ModelParams::new(n, spec.lambda))
        .collect::<bdld::Result<_>>()?;
    let curve = empirical_rate_curve(
        &ladder,
        spec.need("gamma0", spec.gamma0)?,
        spec.need("gammaT", spec.gamma_t)?,
        spec.horizon,
        spec.need("half_width", spec.half_width)?,
        spec.tol,
    )?;
    let gaps: Vec<f64> = curve.iter().map(|p| (p.a_n - p.i_ref).abs()).collect();
    let trend = gaps.windows(2).all(|w| w[1] < w[0]);
    Ok(Output {
        results: json!({ "points": curve, "gaps": gaps }),
        verdicts: vec![verdict(
            "gap decreasing",
            trend,
            format!("|a_N − I| = {gaps:?}"),
        )],
        tables: vec![Table {
            name: "rate_curve".into(),
            csv: csv_string(|b| write_rate_curve_csv(&curve, b))?,
        }],
    })
}

fn run_optimal_path(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let gamma0 = spec.need("gamma0", spec.gamma0)?;
    let mut paths = Vec::new();
    let mut tables = Vec::new();
    let mut worst = 0.0f64;
    for &gamma_t in &spec.targets {
        let params = solve_boundary(gamma0, gamma_t, spec.horizon, spec.lambda)?;
        let residual = hamiltonian_residual(&params, 1000)?;
        worst = worst.max(residual.gamma).max(residual.kappa);
        let action = action_of(&params)?;
        let samples = sample_optimal(&params, spec.grid)?;
        tables.push(Table {
            name: path_table_name(gamma0, gamma_t),
            csv: csv_string(|b| write_samples_csv(&samples, b))?,
        });
        paths.push(json!({ "params": params, "action": action }));
    }
    Ok(Output {
        results: json!({ "paths": paths }),
        verdicts: vec![verdict(
            "hamiltonian residual",
            worst <= 1e-8,
            format!("max residual {worst:e}"),
        )],
        tables,
    })
}

fn run_action(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let report = match &spec.path {
        Some(file) => {
            let reader = fs::File::open(file)
                .map_err(|e| RunError::Usage(format!("path {}: {e}", file.display())))?;
            rate_functional(&GridPath::read_csv(reader)?, spec.lambda)?
        }
        None => {
            let params = solve_boundary(
                spec.need("gamma0", spec.gamma0)?,
                spec.need("gammaT", spec.gamma_t)?,
                spec.horizon,
                spec.lambda,
            )?;
            action_of(&params)?
        }
    };
    Ok(Output {
        results: json!({ "action": report }),
        verdicts: vec![],
        tables: vec![],
    })
}

fn run_tilted(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let p = spec.model()?;
    let (gamma0, gamma_t) = (
        spec.need("gamma0", spec.gamma0)?,
        spec.need("gammaT", spec.gamma_t)?,
    );
    let m0 = lattice_state(p.n_states, gamma0);
    let window = rate_window(
        p.n_states,
        gamma_t,
        spec.need("half_width", spec.half_width)?,
    );
    let tilt = DualTilt(solve_boundary(gamma0, gamma_t, spec.horizon, spec.lambda)?);
    let config = spec.sim_config(InitialCondition::Point(m0))?;
    let est = tilted_window_estimate(&p, &tilt, window.clone(), &config)?;
    let mut verdicts = Vec::new();
    let mut exact = Value::Null;
    if p.n_states <= PRACTICAL_N_CAP {
        let value = window_probability(&p, m0, spec.horizon, window.clone(), spec.tol)?;
        let z = est.z_score(value);
        verdicts.push(verdict(
            "agrees with exact",
            z <= 3.0,
            format!("{:.6e} vs exact {value:.6e} ({z:.2} SE)", est.estimate),
        ));
        exact = json!(value);
    }
    Ok(Output {
        results: json!({ "estimate": est, "exact": exact, "window": [window.start(), window.end()], "start_state": m0 }),
        verdicts,
        tables: vec![],
    })
}

fn run_hconv(spec: &ExperimentSpec) -> Result<Output, RunError> {
    let f = ProbeFunction::<f64>::quadratic_well();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &n in &spec.ladder {
        let (err, argmax) = prelimit_sup_error(&f, &ModelParams::new(n, spec.lambda)?)?;
        rows.push(vec![n.to_string(), fmt_real(err), argmax.to_string()]);
        errors.push(err);
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let doubling = spec.ladder.windows(2).all(|w| w[1] == 2 * w[0]);
    let mut verdicts = Vec::new();
    if doubling && !ratios.is_empty() {
        let ok = ratios.iter().all(|r| (1.7..=2.3).contains(r));
        verdicts.push(verdict(
            "first-order convergence",
            ok,
            format!("ratios {ratios:?}"),
        ));
    }
    Ok(Output {
        results: json!({ "sup_errors": errors, "ratios": ratios }),
        verdicts,
        tables: vec![Table {
            name: "hconv".into(),
            csv: csv_rows(&["N", "sup_error", "argmax_state"], rows),
        }],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }

    pub fn gamma0(self) -> f64 {
        match self {
            Figure::Fig2 => 0.0,
            Figure::Fig3 => 0.5,
        }
    }

    pub fn targets(self) -> &'static [f64] {
        match self {
            Figure::Fig2 => &[0.1, 0.3, 0.5, 0.9],
            Figure::Fig3 => &[0.0, 0.3, 0.5, 0.7, 1.0],
        }
    }

    /// The `optimal-path` experiment behind this figure (`T = 2`, `λ = 1`).
    pub fn spec(self) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(Kind::OptimalPath);
        spec.horizon = 2.0;
        spec.gamma0 = Some(self.gamma0());
        spec.targets = self.targets().to_vec();
        spec
    }
}

/// `(file name, CSV)` pairs with columns `t,gamma`, one per curve of `figure`.
pub fn emit_figure_data(
    report: &Report,
    figure: Figure,
) -> Result<Vec<(String, String)>, RunError> {
    if report.spec.kind != Kind::OptimalPath {
        return Err(RunError::Usage(format!(
            "figure data needs an optimal-path report, got {}",
            report.spec.kind
        )));
    }
    if report.tables.is_empty() {
        return Err(RunError::Usage("report has no path tables".into()));
    }
    let gamma0 = report.spec.gamma0.unwrap_or(f64::NAN);
    figure
        .targets()
        .iter()
        .map(|&gt| {
            let name = path_table_name(figure.gamma0(), gt);
            let table = report.table(&name).ok_or_else(|| {
                RunError::Usage(format!(
                    "report (gamma0 = {gamma0}) has no curve for gamma(T) = {gt}; expected {name}"
                ))
            })?;
            let rows = table
                .csv
                .lines()
                .skip(1)
                .map(|line| line.split(',').take(2).map(str::to_owned).collect());
            Ok((
                format!("{}_gT_{}.csv", figure.name(), tag(gt)),
                csv_rows(&["t", "gamma"], rows),
            ))
        })
        .collect()
}
