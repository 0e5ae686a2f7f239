//! Driver behind the `sdfuzz` binary.

pub mod bench;
pub mod input;
pub mod metrics;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sdfuzz::analysis::analyze;
use sdfuzz::fuzz::{run_campaign, Ablation, CampaignConfig};
use sdfuzz::report::{CampaignReport, ReportInputs};
use sdfuzz::state::StateAnalysisConfig;
use sdfuzz::vm::Program;

use crate::bench::{run_bench, write_csvs, BenchOptions};
use crate::input::{load_abi, load_code};

#[derive(Parser, Debug)]
#[command(name = "sdfuzz", version, about = "Stateful directed fuzzing of EVM-style bytecode")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ablate {
    Code,
    State,
    Both,
}

impl Ablate {
    fn ablation(self) -> Ablation {
        match self {
            Ablate::Code => Ablation::A,
            Ablate::State => Ablation::B,
            Ablate::Both => Ablation::C,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct CampaignArgs {
    /// Seed executions before the campaign stops.
    #[arg(long, default_value_t = 2000)]
    pub max_cases: u64,
    /// Wall-clock limit in milliseconds.
    #[arg(long)]
    pub timeout: Option<u64>,
    #[arg(long, default_value_t = 0.7)]
    pub gamma: f64,
    /// Disable code-target guidance, state-target guidance, or both.
    #[arg(long, value_enum)]
    pub ablate: Option<Ablate>,
    #[arg(long, default_value_t = 5)]
    pub seq_len: usize,
    #[arg(long, default_value_t = 0.5)]
    pub crossover_prob: f64,
    /// Probability an argument is drawn from the mutation pool.
    #[arg(long, default_value_t = 0.5)]
    pub pool_prob: f64,
    /// Defaults to two per ABI function.
    #[arg(long)]
    pub population: Option<usize>,
}

impl CampaignArgs {
    fn config(&self, rng: u64) -> CampaignConfig {
        let mut c = CampaignConfig {
            max_test_cases: self.max_cases,
            population_size: self.population,
            rng_seed: rng,
            crossover_prob: self.crossover_prob,
            gamma: self.gamma,
            max_seq_len: self.seq_len,
            ablation: self.ablate.map_or(Ablation::Full, Ablate::ablation),
            timeout_ms: self.timeout,
            ..CampaignConfig::default()
        };
        c.mutation.pool_prob = self.pool_prob;
        c
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print code and state targets without fuzzing.
    Analyze {
        code: PathBuf,
        abi: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one campaign and write its report.
    Fuzz {
        code: PathBuf,
        abi: PathBuf,
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        /// Per-generation metrics as CSV.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
        /// Include wall time in the report, which makes it nondeterministic.
        #[arg(long)]
        timing: bool,
        /// Report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute the witness of one finding of a report.
    Replay { report: PathBuf, index: usize },
    /// Run every guidance configuration over a fixture suite.
    Bench {
        suite: PathBuf,
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Rng seeds 0..N per configuration.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Directory for summary.json and the CSVs.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
}

pub enum Outcome {
    Success,
    /// A replay or assertion did not hold.
    Failed,
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn execute(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Analyze { code, abi, out } => {
            let program = Program::new(load_code(&code)?);
            let abi = load_abi(&abi)?;
            let analysis = analyze(&program.cfg, &abi, &StateAnalysisConfig::default());
            for w in &analysis.warnings {
                eprintln!("warning: {w}");
            }
            write_or_print(out.as_deref(), &pretty(&analysis)?)?;
            Ok(Outcome::Success)
        }
        Command::Fuzz { code, abi, campaign, rng, metrics_out, timing, out } => {
            let program = Arc::new(Program::new(load_code(&code)?));
            let abi = load_abi(&abi)?;
            let config = campaign.config(rng);
            config.validate()?;
            let state_config = StateAnalysisConfig::default();
            let analysis = analyze(&program.cfg, &abi, &state_config);
            for w in &analysis.warnings {
                eprintln!("warning: {w}");
            }
            let outcome = run_campaign(program.clone(), &abi, &analysis, &config)?;
            if let Some(p) = &metrics_out {
                let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
                metrics::write_metrics(f, &outcome.generations)?;
            }
            let id = code.to_string_lossy();
            let inputs =
                ReportInputs { id: &id, program: &program, abi: &abi, analysis: &analysis, state_config: &state_config, config: &config };
            let report = CampaignReport::new(inputs, outcome, timing);
            for f in &report.findings {
                eprintln!("finding: {} at pc {} ({})", f.finding.bug_class, f.finding.anchor_pc, f.finding.description);
            }
            write_or_print(out.as_deref(), &report.to_json()?)?;
            Ok(Outcome::Success)
        }
        Command::Replay { report, index } => {
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let report = CampaignReport::from_json(&text)?;
            if report.replay(index)? {
                println!("reproduced");
                Ok(Outcome::Success)
            } else {
                println!("not reproduced");
                Ok(Outcome::Failed)
            }
        }
        Command::Bench { suite, campaign, seeds, out_dir, timing } => {
            let start = std::time::Instant::now();
            let base = campaign.config(0);
            base.validate()?;
            let summary = run_bench(&suite, &BenchOptions { seeds, base })?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for f in &summary.fixtures {
                for r in &f.results {
                    match r.median {
                        Some(m) => eprintln!("{} {}: median {m} generations, {}/{} reached", f.name, r.config, r.reached, r.generations.len()),
                        None => eprintln!("{} {}: generations {:?}", f.name, r.config, r.generations),
                    }
                }
            }
            for (c, s) in &summary.speedups {
                eprintln!("suite speedup of full over {c}: {s:.3}");
            }
            if timing {
                eprintln!("wall time: {} ms", start.elapsed().as_millis());
            }
            let json = pretty(&summary)?;
            if let Some(dir) = &out_dir {
                write_csvs(&summary, dir)?;
                std::fs::write(dir.join("summary.json"), &json)?;
            } else {
                print!("{json}");
            }
            Ok(Outcome::Success)
        }
    }
}

/// Parse arguments, run, and map the result onto the exit code convention:
/// 0 success, 1 failed check, 2 input error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
