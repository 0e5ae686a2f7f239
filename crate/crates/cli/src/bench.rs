//! Ablation benchmark over a suite of fixtures.
//!
//! Each fixture directory holds the contract, its ABI and an
//! `expected.json` naming the target to reach. Every guidance
//! configuration runs once per rng seed; a campaign's score is the first
//! generation in which the expected target block executed, and a miss
//! scores one more than the generations it ran.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use rayon::prelude::*;
use sdfuzz::analysis::{analyze, StaticAnalysis};
use sdfuzz::fuzz::{run_campaign, Ablation, CampaignConfig, CampaignOutcome};
use sdfuzz::state::StateAnalysisConfig;
use sdfuzz::targets::BugClass;
use sdfuzz::vm::Program;
use serde::{Deserialize, Serialize};

use crate::input::{fixture_code_path, load_abi, load_code};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub bug_class: BugClass,
    /// Restrict to the target anchored here; any target of the class otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_pc: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub seeds: u64,
    pub base: CampaignConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub config: String,
    /// Generations to target, one per rng seed.
    pub generations: Vec<u64>,
    pub reached: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
    /// Mean over seeds of each generation's average code and state
    /// distance, for as long as any seed ran.
    #[serde(skip)]
    pub trend: Vec<(u64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureResult {
    pub name: String,
    pub expected: Expected,
    pub results: Vec<ConfigResult>,
    /// Median of each ablation over the full configuration.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub speedups: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub seeds: u64,
    pub max_test_cases: u64,
    pub fixtures: Vec<FixtureResult>,
    /// Per configuration, the sum over fixtures of median generations.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub median_sums: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub speedups: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BenchSummary {
    pub fn median_sum(&self, config: Ablation) -> Option<f64> {
        self.median_sums.iter().find(|(c, _)| c == config.name()).map(|(_, v)| *v)
    }

    pub fn speedup(&self, config: Ablation) -> Option<f64> {
        self.speedups.iter().find(|(c, _)| c == config.name()).map(|(_, v)| *v)
    }
}

pub fn median(values: &[u64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] as f64 } else { (v[mid - 1] + v[mid]) as f64 / 2.0 })
}

/// Generation in which the expected target was first reached.
pub fn generations_to_target(outcome: &CampaignOutcome, expected: &Expected) -> Option<u64> {
    outcome
        .target_hits
        .iter()
        .filter(|h| h.bug_class == expected.bug_class && expected.anchor_pc.is_none_or(|pc| pc == h.anchor_pc))
        .filter_map(|h| h.generation)
        .min()
}

struct Fixture {
    name: String,
    program: Arc<Program>,
    abi: sdfuzz::abi::AbiDescriptor,
    analysis: StaticAnalysis,
    expected: Expected,
}

fn load_fixture(dir: &Path) -> Result<std::result::Result<Fixture, String>> {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let expected_path = dir.join("expected.json");
    if !expected_path.is_file() {
        return Ok(Err(format!("{name}: no expected.json, skipped")));
    }
    let Some(code_path) = fixture_code_path(dir) else {
        return Ok(Err(format!("{name}: no contract.easm or contract.hex, skipped")));
    };
    let expected: Expected = serde_json::from_str(&std::fs::read_to_string(&expected_path)?)
        .with_context(|| format!("parsing {}", expected_path.display()))?;
    let program = Arc::new(Program::new(load_code(&code_path)?));
    let abi = load_abi(&dir.join("contract.abi.json"))?;
    let analysis = analyze(&program.cfg, &abi, &StateAnalysisConfig::default());
    Ok(Ok(Fixture { name, program, abi, analysis, expected }))
}

fn fixture_dirs(suite: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(suite)
        .with_context(|| format!("reading suite {}", suite.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn run_config(f: &Fixture, ablation: Ablation, opts: &BenchOptions) -> Result<ConfigResult> {
    let outcomes: Vec<CampaignOutcome> = (0..opts.seeds)
        .into_par_iter()
        .map(|seed| {
            let config = CampaignConfig { rng_seed: seed, ablation, ..opts.base.clone() };
            run_campaign(f.program.clone(), &f.abi, &f.analysis, &config)
        })
        .collect::<sdfuzz::Result<_>>()?;
    let generations: Vec<u64> = outcomes
        .iter()
        .map(|o| generations_to_target(o, &f.expected).unwrap_or(o.generations.len() as u64 + 1))
        .collect();
    let reached = outcomes.iter().filter(|o| generations_to_target(o, &f.expected).is_some()).count();
    let longest = outcomes.iter().map(|o| o.generations.len()).max().unwrap_or(0);
    let trend = (0..longest)
        .map(|g| {
            let rows: Vec<_> = outcomes.iter().filter_map(|o| o.generations.get(g)).collect();
            let n = rows.len() as f64;
            let code = rows.iter().map(|r| r.avg_code_distance).sum::<f64>() / n;
            let state = rows.iter().map(|r| r.avg_state_distance).sum::<f64>() / n;
            (g as u64 + 1, code, state)
        })
        .collect();
    Ok(ConfigResult { config: ablation.name().into(), median: median(&generations), generations, reached, trend })
}

fn ratios(values: &[(String, Option<f64>)]) -> Vec<(String, f64)> {
    let Some(full) = values.iter().find(|(c, _)| c == Ablation::Full.name()).and_then(|(_, v)| *v) else {
        return Vec::new();
    };
    values
        .iter()
        .filter(|(c, _)| c != Ablation::Full.name())
        .filter_map(|(c, v)| v.map(|v| (c.clone(), v / full)))
        .collect()
}

pub fn run_bench(suite: &Path, opts: &BenchOptions) -> Result<BenchSummary> {
    let mut summary =
        BenchSummary { seeds: opts.seeds, max_test_cases: opts.base.max_test_cases, ..BenchSummary::default() };
    for dir in fixture_dirs(suite)? {
        let fixture = match load_fixture(&dir)? {
            Ok(f) => f,
            Err(warning) => {
                summary.warnings.push(warning);
                continue;
            }
        };
        let results =
            Ablation::ALL.iter().map(|&a| run_config(&fixture, a, opts)).collect::<Result<Vec<ConfigResult>>>()?;
        let medians: Vec<(String, Option<f64>)> = results.iter().map(|r| (r.config.clone(), r.median)).collect();
        summary.fixtures.push(FixtureResult {
            name: fixture.name,
            expected: fixture.expected,
            speedups: ratios(&medians),
            results,
        });
    }
    if !summary.fixtures.is_empty() && opts.seeds >= 2 {
        let sums: Vec<(String, Option<f64>)> = Ablation::ALL
            .iter()
            .map(|a| {
                let total = summary
                    .fixtures
                    .iter()
                    .map(|f| f.results.iter().find(|r| r.config == a.name()).and_then(|r| r.median))
                    .sum::<Option<f64>>();
                (a.name().to_string(), total)
            })
            .collect();
        summary.speedups = ratios(&sums);
        summary.median_sums = sums.into_iter().filter_map(|(c, v)| v.map(|v| (c, v))).collect();
    }
    Ok(summary)
}

/// `summary.csv` plus one distance-trend CSV per fixture and configuration.
pub fn write_csvs(summary: &BenchSummary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["fixture", "config", "runs", "reached", "median_generations", "speedup_vs_full"])?;
    for f in &summary.fixtures {
        for r in &f.results {
            let speedup = f.speedups.iter().find(|(c, _)| *c == r.config).map(|(_, v)| v.to_string());
            w.write_record([
                f.name.clone(),
                r.config.clone(),
                r.generations.len().to_string(),
                r.reached.to_string(),
                r.median.map(|m| m.to_string()).unwrap_or_default(),
                speedup.unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    for f in &summary.fixtures {
        for r in &f.results {
            let mut w = csv::Writer::from_path(dir.join(format!("{}.{}.distance.csv", f.name, r.config)))?;
            w.write_record(["generation", "avg_code_distance", "avg_state_distance"])?;
            for (g, code, state) in &r.trend {
                w.write_record([g.to_string(), code.to_string(), state.to_string()])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
