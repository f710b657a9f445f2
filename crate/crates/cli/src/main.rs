use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bdld_cli::{
    emit_figure_data, run, ExperimentSpec, Figure, Kind, RunError, DEFAULT_OUT_DIR, OUT_DIR_ENV,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(
    name = "bdld",
    version,
    about = "Experiments on the symmetric linear-rate birth-death chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Number of states N
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replications
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory for report.json and CSV tables
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Truncation tolerance of the exact oracle
    #[arg(long)]
    tol: Option<f64>,
    /// JSON (or .toml) experiment file; flags override its fields
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args, Default)]
struct Boundary {
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long = "gamma-t")]
    gamma_t: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig2,
    Fig3,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::Fig2 => Figure::Fig2,
            FigureArg::Fig3 => Figure::Fig3,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Stationary law π(m) ∝ 1/m
    Stationary(#[command(flatten)] Common),
    /// Stationary law of the embedded jump chain
    Embedded(#[command(flatten)] Common),
    /// One exact trajectory
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Start state; stationary when omitted
        #[arg(long)]
        initial: Option<usize>,
    },
    /// Probability that the scaled path leaves an ε-tube around γ₀
    LlnPoint {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma0: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Probability that the stationary scaled path stays below u at given times
    LlnStationary {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        threshold: Option<f64>,
        /// Comma-separated sample times
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Empirical rates a_N from the exact oracle along an N ladder
    RateCurve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        boundary: Boundary,
        /// Comma-separated chain sizes
        #[arg(long, value_delimiter = ',')]
        ladder: Vec<usize>,
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Optimal paths from γ₀ to each target
    OptPath {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma0: Option<f64>,
        /// Comma-separated terminal values
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
        /// Sample points per path
        #[arg(long)]
        grid: Option<usize>,
        /// Preset boundary data and emit a t,gamma bundle for this figure
        #[arg(long, value_enum)]
        figure: Option<FigureArg>,
    },
    /// Action of the optimal path, or of a path read from CSV (t,gamma[,dgamma])
    Action {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        boundary: Boundary,
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Importance-sampling estimate of a rare endpoint window
    TiltedMc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        boundary: Boundary,
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Convergence of the prelimit Hamiltonian along an N ladder
    Hconv {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        ladder: Vec<usize>,
    },
}

struct Overrides(Map<String, Value>);

impl Overrides {
    fn set<T: Into<Value>>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.0.insert(key.to_owned(), v.into());
        }
    }

    fn set_list<T: Into<Value> + Clone>(&mut self, key: &str, values: &[T]) {
        if !values.is_empty() {
            self.0.insert(
                key.to_owned(),
                Value::Array(values.iter().cloned().map(Into::into).collect()),
            );
        }
    }
}

fn build_spec(
    kind: Kind,
    common: &Common,
    base: Option<ExperimentSpec>,
    fill: impl FnOnce(&mut Overrides),
) -> Result<ExperimentSpec, RunError> {
    let mut value = match (&common.spec, base) {
        (Some(file), _) => ExperimentSpec::from_file(file)?,
        (None, Some(preset)) => serde_json::to_value(preset).expect("spec serializes"),
        (None, None) => Value::Object(Map::new()),
    };
    let map = value
        .as_object_mut()
        .ok_or_else(|| RunError::Usage("spec file must hold an object".into()))?;
    let kind_value = serde_json::to_value(kind).expect("kind serializes");
    if let Some(found) = map.get("kind") {
        if *found != kind_value {
            return Err(RunError::Usage(format!(
                "spec file has kind {found}, subcommand expects {kind}"
            )));
        }
    }
    map.insert("kind".into(), kind_value);
    let mut o = Overrides(std::mem::take(map));
    o.set("n", common.n);
    o.set("lambda", common.lambda);
    o.set("horizon", common.horizon);
    o.set("seed", common.seed);
    o.set("reps", common.reps);
    o.set("tol", common.tol);
    o.set("out", common.out.as_ref().map(|p| p.display().to_string()));
    fill(&mut o);
    ExperimentSpec::from_value(Value::Object(o.0))
}

fn dispatch(cli: Cli) -> Result<bool, anyhow::Error> {
    let mut figure = None;
    let spec = match &cli.command {
        Command::Stationary(c) => build_spec(Kind::Stationary, c, None, |_| {}),
        Command::Embedded(c) => build_spec(Kind::Embedded, c, None, |_| {}),
        Command::Simulate { common, initial } => {
            build_spec(Kind::Simulate, common, None, |o| o.set("initial", *initial))
        }
        Command::LlnPoint {
            common,
            gamma0,
            epsilon,
        } => build_spec(Kind::LlnPoint, common, None, |o| {
            o.set("gamma0", *gamma0);
            o.set("epsilon", *epsilon);
        }),
        Command::LlnStationary {
            common,
            threshold,
            times,
        } => build_spec(Kind::LlnStationary, common, None, |o| {
            o.set("threshold", *threshold);
            o.set_list("times", times);
        }),
        Command::RateCurve {
            common,
            boundary,
            ladder,
            half_width,
        } => build_spec(Kind::RateCurve, common, None, |o| {
            o.set("gamma0", boundary.gamma0);
            o.set("gammaT", boundary.gamma_t);
            o.set_list("ladder", ladder);
            o.set("half_width", *half_width);
        }),
        Command::OptPath {
            common,
            gamma0,
            targets,
            grid,
            figure: fig,
        } => {
            figure = fig.map(Figure::from);
            build_spec(Kind::OptimalPath, common, figure.map(Figure::spec), |o| {
                o.set("gamma0", *gamma0);
                o.set_list("targets", targets);
                o.set("grid", *grid);
            })
        }
        Command::Action {
            common,
            boundary,
            path,
        } => build_spec(Kind::Action, common, None, |o| {
            o.set("gamma0", boundary.gamma0);
            o.set("gammaT", boundary.gamma_t);
            o.set("path", path.as_ref().map(|p| p.display().to_string()));
        }),
        Command::TiltedMc {
            common,
            boundary,
            half_width,
        } => build_spec(Kind::TiltedMc, common, None, |o| {
            o.set("gamma0", boundary.gamma0);
            o.set("gammaT", boundary.gamma_t);
            o.set("half_width", *half_width);
        }),
        Command::Hconv { common, ladder } => {
            build_spec(Kind::HamiltonianConvergence, common, None, |o| {
                o.set_list("ladder", ladder)
            })
        }
    }?;
    let report = run(&spec)?;
    let dir = spec
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    report
        .write_to(&dir)
        .with_context(|| format!("writing outputs to {}", dir.display()))?;
    if let Some(fig) = figure {
        for (name, csv) in emit_figure_data(&report, fig)? {
            let path = dir.join(&name);
            std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    for v in &report.verdicts {
        eprintln!(
            "{} {}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<RunError>() {
                Some(RunError::Usage(_)) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
