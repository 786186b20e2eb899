mod commands;
mod input;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lapnet::tolerances::Tolerances;
use serde_json::{Map, Value};

use input::{InputRecord, ModelArgs};

#[derive(Parser, Debug)]
#[command(name = "lapnet", version, about = "H2 variance analysis and gain design for linear consensus networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Out {
    /// Output file, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Network variance as a sum over Laplacian eigenvalues.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        /// Graph: `kind:N[:weight]` or an edge-list file.
        #[arg(long)]
        graph: String,
        #[arg(long, value_enum, default_value_t = Measure::Feedback)]
        measure: Measure,
        /// Also solve the full-network Lyapunov equation.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Tabulate the performance function over a λ grid.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Measure::Feedback)]
        measure: Measure,
        #[arg(long, default_value_t = 0.1)]
        lambda_min: f64,
        #[arg(long, default_value_t = 100.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Out,
    },
    /// Minimum connectivity threshold λ̃.
    Threshold {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Family::Output)]
        family: Family,
        #[arg(long)]
        scan_min: Option<f64>,
        #[arg(long)]
        scan_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
    /// State-feedback gain with λ̃(K) ≤ c.
    DesignGain {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        c: f64,
        /// Write the model with the new K to this file.
        #[arg(long)]
        save_model: Option<String>,
        #[command(flatten)]
        out: Out,
    },
    /// Observer gain with λ̃(F) ≤ c.
    DesignObserver {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        save_model: Option<String>,
        #[command(flatten)]
        out: Out,
    },
    /// Cheap-control (or cheap-sensing) performance limit.
    Floor {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Side::Control)]
        side: Side,
        /// Comma-separated ε schedule.
        #[arg(long)]
        eps: Option<String>,
        #[command(flatten)]
        out: Out,
    },
    /// Graph lower bounds next to the exact variance.
    Bounds {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        graph: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Out,
    },
    /// Path and cycle variance against N·Γ_N.
    Asymptotics {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated network sizes.
        #[arg(long, default_value = "50,100,200,400")]
        n: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Out,
    },
    /// Ratio ρ / bound over every labeled connected graph on n nodes.
    Survey {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        nodes: usize,
        /// Permit n = 7 (about 850 000 graphs).
        #[arg(long)]
        allow_large: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Out,
    },
    /// Two-level network of identical modules.
    Composite {
        #[command(flatten)]
        model: ModelArgs,
        /// Module graph G₁.
        #[arg(long)]
        g1: String,
        /// Higher-level graph G₂ over the modules.
        #[arg(long)]
        g2: String,
        /// Higher-level gain K₂; defaults to α·K₁.
        #[arg(long, value_name = "MATRIX")]
        k2: Option<String>,
        #[arg(long, default_value_t = 1.0, conflicts_with = "k2")]
        alpha: f64,
        /// Port node of each module; defaults to the last node.
        #[arg(long)]
        port: Option<usize>,
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        threshold: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Euler–Maruyama estimate of the variance, or one trajectory as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        graph: String,
        #[arg(long, value_enum, default_value_t = SimMeasure::Feedback)]
        measure: SimMeasure,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        burn_in: Option<f64>,
        /// Write one trajectory from the zero state as CSV.
        #[arg(long)]
        trajectory: bool,
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Rational fit p(λ)/q(λ) of the performance function.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Measure::Feedback)]
        measure: Measure,
        #[arg(long)]
        max_degree: usize,
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
    /// List fixtures or print one as a model file.
    Fixtures {
        #[arg(long, conflicts_with = "show")]
        list: bool,
        /// Fixture to print as model JSON.
        #[arg(long)]
        show: Option<String>,
        #[arg(long = "param", value_name = "NAME=VALUE", requires = "show")]
        params: Vec<String>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// φ with output feedback K.
    Feedback,
    /// φ̂ with state feedback K on the estimate of observer F.
    Observer,
    /// Control effort φ_u.
    Input,
    /// Estimation error ψ with observer F.
    Estimation,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMeasure {
    Feedback,
    Observer,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// A − λBKH
    Output,
    /// A − λBK, K of size p × n
    State,
    /// A − λFH
    Observer,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Control,
    Estimation,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<lapnet::Error> for CliError {
    fn from(e: lapnet::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub struct Report {
    pub command: &'static str,
    pub inputs: Vec<(&'static str, InputRecord)>,
    pub body: Value,
}

impl Report {
    pub fn new(command: &'static str, body: Value) -> Self {
        Self { command, inputs: Vec::new(), body }
    }

    pub fn input(mut self, name: &'static str, record: InputRecord) -> Self {
        self.inputs.push((name, record));
        self
    }

    fn render(&self) -> String {
        let inputs: Map<String, Value> = self
            .inputs
            .iter()
            .map(|(k, v)| (k.to_string(), serde_json::to_value(v).unwrap()))
            .collect();
        let header = serde_json::json!({
            "tool": "lapnet",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "inputs": inputs,
            "tolerances": Tolerances::default(),
        });
        let mut out = Map::new();
        out.insert("header".into(), header);
        match &self.body {
            Value::Object(fields) => out.extend(fields.clone()),
            other => {
                out.insert("result".into(), other.clone());
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(out)).unwrap();
        text.push('\n');
        text
    }
}

pub enum Output {
    Json(Report),
    Text(String),
}

fn write_out(path: &str, text: &str) -> Result<(), CliError> {
    if path == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Validation(format!("cannot write output: {e}")))
    } else {
        std::fs::write(path, text).map_err(|e| CliError::Validation(format!("cannot write {path}: {e}")))
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("LAPNET_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Validation(format!("LAPNET_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (output, path) = commands::dispatch(cli.command)?;
    let text = match output {
        Output::Json(r) => r.render(),
        Output::Text(t) => t,
    };
    write_out(&path, &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            if let CliError::Usage(_) = e {
                eprintln!("run `lapnet --help` for usage");
            }
            ExitCode::from(e.code())
        }
    }
}
