use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use modality::benchmark::{
    rows_to_csv, rows_to_text, run_scalability, run_benchmark, scalability_to_csv, SCALABILITY_SIZES,
};
use modality::solver::{DEFAULT_CI_RESAMPLES, LARGE_SAMPLE_WARNING};
use modality::{Error, ReadRequest, Seed, SolverOptions};

mod report;

use report::Outcome;

#[derive(Parser, Debug)]
#[command(
    name = "modality",
    version,
    about = "Critical bandwidth multimodality analysis for one-dimensional data",
    after_help = "Exit codes: 0 success, 1 usage error, 2 input or data error, 3 solver or test failure.\n\
                  MODALITY_SEED sets the default seed for resampling commands."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bandwidths, modes, decomposition and strength in one report
    Analyze(AnalyzeArgs),
    /// Run a multimodality test
    Test(TestArgs),
    /// Locate modes at a bandwidth
    Modes(ModesArgs),
    /// Split the data at the density trough
    Decompose(DecomposeArgs),
    /// Regenerate the benchmark mixtures and summarize critical bandwidths
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug)]
struct Input {
    /// Data file (.csv, .tsv, .txt, .json or .md)
    path: PathBuf,
    /// Column to read; defaults to the first mostly numeric column
    #[arg(short, long)]
    column: Option<String>,
}

impl Input {
    fn request(&self) -> ReadRequest {
        ReadRequest {
            path: self.path.clone(),
            column: self.column.clone(),
            return_all: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: Input,
    /// Modality under test
    #[arg(short, long, default_value_t = 2)]
    k: usize,
    /// Add a percentile bootstrap interval for the critical bandwidth
    #[arg(long)]
    ci: bool,
    #[arg(long, default_value_t = DEFAULT_CI_RESAMPLES)]
    resamples: usize,
    #[arg(long, env = "MODALITY_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TestMethod {
    Silverman,
    Dip,
    Excess,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    input: Input,
    #[arg(short, long, value_enum, default_value = "silverman")]
    method: TestMethod,
    /// Null hypothesis: at most this many modes (Silverman test)
    #[arg(long, default_value_t = 1)]
    mod0: usize,
    #[arg(long, default_value_t = 999)]
    resamples: usize,
    #[arg(long, env = "MODALITY_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args, Debug)]
struct ModesArgs {
    #[command(flatten)]
    input: Input,
    /// Bandwidth; defaults to the rule of thumb
    #[arg(short, long)]
    bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Suite {
    Mixtures,
    Scalability,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, value_enum, default_value = "mixtures")]
    suite: Suite,
    /// Number of seeds, run as 0..N
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Write the CSV table here
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_data_error() {
        2
    } else {
        3
    }
}

fn emit(outcome: Outcome, format: Format) -> ExitCode {
    let body = match format {
        Format::Text => outcome.text,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&outcome.json).expect("reports serialize");
            s.push('\n');
            s
        }
    };
    // A closed pipe (e.g. `| head`) is not an error for us.
    let _ = std::io::stdout().lock().write_all(body.as_bytes());
    ExitCode::from(outcome.code)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Analyze(a) => {
            let data = modality::read_data(&a.input.request())?;
            let col = data.first();
            if a.ci && col.sample.len() > LARGE_SAMPLE_WARNING && a.resamples == DEFAULT_CI_RESAMPLES {
                eprintln!(
                    "warning: {} bootstrap resamples on n = {} may be slow; consider --resamples",
                    a.resamples,
                    col.sample.len()
                );
            }
            let ci = a.ci.then_some((a.resamples, Seed(a.seed)));
            Ok(emit(report::analyze(&a.input.path, col, a.k, ci)?, a.format))
        }
        Command::Test(t) => {
            let data = modality::read_data(&t.input.request())?;
            let col = data.first();
            let outcome = match t.method {
                TestMethod::Silverman => report::silverman(col, t.mod0, t.resamples, Seed(t.seed))?,
                TestMethod::Dip => report::dip(col, t.resamples, Seed(t.seed))?,
                TestMethod::Excess => report::excess(col)?,
            };
            Ok(emit(outcome, t.format))
        }
        Command::Modes(m) => {
            let data = modality::read_data(&m.input.request())?;
            Ok(emit(report::modes(data.first(), m.bandwidth)?, m.format))
        }
        Command::Decompose(d) => {
            let data = modality::read_data(&d.input.request())?;
            Ok(emit(report::decompose(data.first())?, d.format))
        }
        Command::Benchmark(b) => {
            let opts = SolverOptions::default();
            let seeds: Vec<u64> = (0..b.seeds).collect();
            let (csv, outcome) = match b.suite {
                Suite::Mixtures => {
                    let rows = run_benchmark(&seeds, &opts)?;
                    let text = rows_to_text(&rows);
                    (rows_to_csv(&rows), Outcome::ok(text, serde_json::json!({ "rows": rows })))
                }
                Suite::Scalability => {
                    let rows = run_scalability(&SCALABILITY_SIZES, Seed(0), &opts)?;
                    let csv = scalability_to_csv(&rows);
                    (csv.clone(), Outcome::ok(csv, serde_json::json!({ "rows": rows })))
                }
            };
            if let Some(path) = &b.out {
                std::fs::write(path, csv).map_err(|e| Error::Read {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
            }
            Ok(emit(outcome, b.format))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
