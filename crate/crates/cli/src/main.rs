use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dissext::commands::{self, CommandError, EXIT_UNDETERMINED, SCHEMA_VERSION};
use dissext::config::{self, Format, ScenarioConfig, SweepConfig};

#[derive(Parser)]
#[command(name = "dissext", version, about = "Dissipativity checks for extensions of 1-D differential operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the scenario's criterion; exit 0 dissipative, 1 not, 2 undetermined or error.
    Check(Common),
    /// Margins over a rectangle of boundary parameters.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Real range "min,max" (overrides the config's sweep block).
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        re: Option<[f64; 2]>,
        /// Imaginary range "min,max".
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        im: Option<[f64; 2]>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Cross-check the verdict against the discrete numerical range.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Mesh sizes, e.g. "64,128,256".
        #[arg(long, value_delimiter = ',')]
        meshes: Vec<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([a.parse().map_err(|e| format!("{a}: {e}"))?, b.parse().map_err(|e| format!("{b}: {e}"))?]),
        _ => Err(format!("expected MIN,MAX, got '{s}'")),
    }
}

struct Failure {
    code: &'static str,
    message: String,
}

impl From<CommandError> for Failure {
    fn from(e: CommandError) -> Self {
        Failure { code: e.code(), message: e.to_string() }
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Failure { code: "io", message: format!("{}: {e}", common.config.display()) })?;
    config::parse_config(&text).map_err(|e| Failure { code: "invalid_config", message: e.to_string() })
}

fn emit(text: &str, out: Option<PathBuf>, config: &ScenarioConfig) -> Result<(), Failure> {
    match out.or_else(|| config.output.path.clone().map(PathBuf::from)) {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| Failure { code: "io", message: format!("{}: {e}", path.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Check(common) => {
            let config = load(&common)?;
            let (code, report) = commands::run_check(&config)?;
            emit(&commands::to_json(&report), common.out, &config)?;
            Ok(code)
        }
        Command::Sweep { common, format, re, im, step } => {
            let config = load(&common)?;
            let base = config.sweep.clone();
            let axes = SweepConfig {
                re: re.or(base.as_ref().map(|b| b.re)).ok_or_else(|| missing_axis("re"))?,
                im: im.or(base.as_ref().map(|b| b.im)).ok_or_else(|| missing_axis("im"))?,
                step: step.or(base.as_ref().map(|b| b.step)).ok_or_else(|| missing_axis("step"))?,
            };
            let format = match format {
                Some(FormatArg::Csv) => Format::Csv,
                Some(FormatArg::Json) => Format::Json,
                None => config.output.format,
            };
            let result = commands::run_sweep(&config, &axes)?;
            emit(&result.render(format), common.out, &config)?;
            Ok(0)
        }
        Command::Oracle { common, meshes, tol } => {
            let mut config = load(&common)?;
            if !meshes.is_empty() {
                config.oracle.meshes = meshes;
            }
            if let Some(t) = tol {
                config.oracle.tol = t;
            }
            let (code, output) = commands::run_oracle(&config)?;
            emit(&commands::to_json(&output), common.out, &config)?;
            Ok(code)
        }
    }
}

fn missing_axis(key: &str) -> Failure {
    Failure { code: "invalid_sweep", message: format!("sweep axis '{key}' missing: pass --{key} or add a [sweep] block") }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            let body = json!({ "schema_version": SCHEMA_VERSION, "error": f.code, "message": f.message });
            eprintln!("{body}");
            ExitCode::from(EXIT_UNDETERMINED as u8)
        }
    }
}
