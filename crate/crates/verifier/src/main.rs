use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use harmorph_verify::report::{summary_table, write_jsonl};
use harmorph_verify::{run_suite, CheckConfig, VerifyError};

#[derive(Debug, Parser)]
#[command(
    name = "harmorph-verify",
    version,
    about = "Run seeded harmonic-morphism check suites"
)]
struct Cli {
    /// Comma-separated suites: morphism, classify, curvature, torsion, theorem1, killing, all.
    #[arg(long, value_delimiter = ',')]
    suite: Option<Vec<String>>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Tolerance for checks that use finite differences.
    #[arg(long)]
    fd_tolerance: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jet_order: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print a summary table to standard output.
    #[arg(long)]
    summary: bool,
    /// JSON file with `CheckConfig` fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Cli {
    fn into_config(self) -> Result<(CheckConfig, bool), VerifyError> {
        let mut cfg = match &self.config {
            Some(path) => CheckConfig::from_file(path)?,
            None => CheckConfig::default(),
        };
        if let Some(s) = self.suite {
            cfg.suites = s;
        }
        if let Some(v) = self.tolerance {
            cfg.tolerance = v;
        }
        if let Some(v) = self.fd_tolerance {
            cfg.fd_tolerance = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.jet_order {
            cfg.jet_order = v;
        }
        if let Some(v) = self.margin {
            cfg.margin = v;
        }
        if let Some(v) = self.output {
            cfg.output_path = v.to_string_lossy().into_owned();
        }
        Ok((cfg, self.summary))
    }
}

fn run(cli: Cli) -> Result<bool, VerifyError> {
    let (cfg, summary) = cli.into_config()?;
    let reports = run_suite(&cfg)?;
    write_jsonl(Path::new(&cfg.output_path), &reports)?;
    if summary {
        print!("{}", summary_table(&reports));
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("harmorph-verify: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
