use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hcran_core::baselines::Algorithm;
use hcran_sim::acceptance::{self, Settings};
use hcran_sim::channel_io::write_channel;
use hcran_sim::config::{ExperimentConfig, Mode};
use hcran_sim::experiment::{run_experiment, summarize, write_records, Format, RunOptions};
use hcran_sim::figures::{preset, run_figure, FigureTable};

#[derive(Parser)]
#[command(name = "hcran", version, about = "Energy-efficient resource allocation experiments for H-CRAN cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML experiment file; every key is optional.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Snapshots per sweep value, overriding the config.
    #[arg(long, value_name = "N")]
    snapshots: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads; one per core when absent.
    #[arg(long, value_name = "N", default_value_t = 0)]
    workers: usize,
    /// Evaluate only this algorithm.
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<Algorithm>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write one row per snapshot.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write per-cell means and 95% intervals to this file.
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
    },
    /// Reproduce the data behind figure 3, 4, 5, 6 or 7.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(3..=7))]
        number: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite and print a summary table.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Export one channel snapshot of the configured cell.
    DumpChannel {
        #[command(flatten)]
        common: Common,
        /// Snapshot id.
        #[arg(long, default_value_t = 0)]
        snapshot: u64,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: hcran_core::Error| e.to_string())
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    report(dispatch(Cli::parse().command))
}

fn report(outcome: Result<ExitCode, Failure>) -> ExitCode {
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        if let Some(n) = self.snapshots {
            cfg.experiment.snapshots = n;
        }
        self.restrict(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn restrict(&self, cfg: &mut ExperimentConfig) -> Result<(), Failure> {
        if let Some(alg) = self.algorithm {
            if cfg.experiment.mode == Mode::Scenarios {
                return Err("--algorithm applies only to algorithm experiments".into());
            }
            cfg.experiment.algorithms = vec![alg];
        }
        Ok(())
    }

    fn format(&self) -> Format {
        match self.format {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }

    fn options(&self) -> RunOptions {
        RunOptions { workers: self.workers }
    }

    fn sink(&self) -> Result<Box<dyn Write>, Failure> {
        open(self.out.as_deref())
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| format!("cannot create {}: {e}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn dispatch(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Run { common, summary } => {
            let cfg = common.load()?;
            let rows = run_experiment(&cfg, common.options())?;
            write_records(&rows, common.format(), common.sink()?)?;
            if let Some(path) = summary {
                write_records(&summarize("run", &rows), common.format(), open(Some(&path))?)?;
            }
        }
        Command::Figure { number, common } => {
            let base = common.load()?;
            let mut series = preset(number, &base).ok_or("no preset for this figure")?;
            for s in &mut series {
                common.restrict(&mut s.config)?;
            }
            match run_figure(number, &series, common.options())? {
                FigureTable::Summary(rows) => write_records(&rows, common.format(), common.sink()?)?,
                FigureTable::Traces(rows) => write_records(&rows, common.format(), common.sink()?)?,
            }
        }
        Command::Verify { common } => {
            let defaults = Settings::default();
            let settings = Settings {
                snapshots: common.snapshots.unwrap_or(defaults.snapshots),
                seed: common.seed.unwrap_or(defaults.seed),
                workers: common.workers,
            };
            let exe = std::env::current_exe()?;
            let mut results = Vec::new();
            for id in 1..=acceptance::CRITERIA {
                let r = acceptance::criterion(id, &settings, Some(&exe));
                eprintln!("{r}");
                results.push(r);
            }
            let passed = results.iter().filter(|r| r.passed).count();
            match common.format() {
                Format::Json => write_records(&results, Format::Json, common.sink()?)?,
                Format::Csv => {
                    let mut out = common.sink()?;
                    writeln!(out, "{:<4} {:<24} {}", "id", "criterion", "result")?;
                    for r in &results {
                        writeln!(out, "{:<4} {:<24} {}", r.id, r.name, if r.passed { "pass" } else { "FAIL" })?;
                    }
                    writeln!(out, "{passed}/{} criteria pass", results.len())?;
                }
            }
            if passed != results.len() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::DumpChannel { common, snapshot } => {
            let cfg = common.load()?;
            let dep = cfg.system.deployment()?;
            let ch = dep.snapshot(cfg.experiment.seed, snapshot)?;
            write_channel(&ch, common.sink()?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
