//! Monte Carlo sweeps comparing the solver modes on paired scenarios.
//!
//! Each run index `r` generates one scenario from seed `base_seed + r`. The
//! swept value is written over that scenario (for every device where the
//! parameter is per device), and every mode is solved on the result, so rows
//! sharing a run seed and value are directly comparable.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{build_assignment_problem, solve_assignment, Assignment};
use crate::joint::{solve_link, BnbStats, JointOptions, SolveError, SolverMode, DEFAULT_GRID_SEGMENTS};
use crate::model::{LinkContext, Scenario};
use crate::scenario::{generate, scenario_hash, ConfigError, GenerationConfig};

/// Caps the worker count of every sweep when set.
pub const MAX_WORKERS_ENV: &str = "GESTR_MAX_WORKERS";

pub const CSV_HEADER: &str =
    "sweep_param,sweep_value,mode,run_seed,total_gestr_suts_per_s,matched_mds,nodes_explored,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// `t_max` of every device, seconds.
    DelayTolerance,
    /// `eps_th` of every device.
    AccuracyThreshold,
    /// `p_T` of every device, Watts.
    MdTxPower,
    /// Subchannel bandwidth `W`, Hz.
    Bandwidth,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 4] = [
        SweepParameter::DelayTolerance,
        SweepParameter::AccuracyThreshold,
        SweepParameter::MdTxPower,
        SweepParameter::Bandwidth,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::DelayTolerance => "delay_tolerance",
            SweepParameter::AccuracyThreshold => "accuracy_threshold",
            SweepParameter::MdTxPower => "md_tx_power",
            SweepParameter::Bandwidth => "bandwidth",
        }
    }

    pub fn apply(&self, scenario: &mut Scenario, value: f64) {
        match self {
            SweepParameter::DelayTolerance => scenario.mobile_devices.iter_mut().for_each(|m| m.t_max = value),
            SweepParameter::AccuracyThreshold => scenario.mobile_devices.iter_mut().for_each(|m| m.eps_th = value),
            SweepParameter::MdTxPower => scenario.mobile_devices.iter_mut().for_each(|m| m.tx_power = value),
            SweepParameter::Bandwidth => scenario.radio.bandwidth = value,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown sweep parameter `{s}`"))
    }
}

fn default_modes() -> Vec<SolverMode> {
    SolverMode::ALL.to_vec()
}

fn default_grid() -> usize {
    DEFAULT_GRID_SEGMENTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub swept_parameter: SweepParameter,
    pub values: Vec<f64>,
    pub num_runs: usize,
    #[serde(default = "default_modes")]
    pub modes: Vec<SolverMode>,
    #[serde(rename = "grid_M", default = "default_grid")]
    pub grid_segments: usize,
    /// Its `seed` is the base seed of run 0.
    pub base_config: GenerationConfig,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep spec serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()).into());
        if self.values.is_empty() {
            return bad("sweep needs at least one value");
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return bad("sweep values must be finite");
        }
        if self.num_runs == 0 {
            return bad("num_runs must be at least 1");
        }
        if self.modes.is_empty() {
            return bad("need at least one mode");
        }
        if self.grid_segments == 0 {
            return bad("grid_M must be at least 1");
        }
        self.base_config.validate()?;
        Ok(())
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_config.seed.wrapping_add(run as u64)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run seed {run_seed}, {param} = {value}, mode {mode}: {source}")]
    Solve { run_seed: u64, param: SweepParameter, value: f64, mode: SolverMode, source: SolveError },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub workers: usize,
    /// Fill the `wall_ms` column. Makes output depend on timing.
    pub record_wall_time: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { workers: default_workers(), record_wall_time: false }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// `requested` limited by the environment cap, at least 1.
pub fn effective_workers(requested: usize) -> usize {
    let cap = std::env::var(MAX_WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    requested.min(cap.unwrap_or(usize::MAX)).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sweep_param: SweepParameter,
    pub sweep_value: f64,
    pub mode: SolverMode,
    pub run_seed: u64,
    pub total_gestr: f64,
    pub assignment: Assignment,
    pub stats: BnbStats,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRef {
    pub run_seed: u64,
    pub sweep_value: f64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: SweepSpec,
    /// Ordered by mode (as listed in the spec), sweep value, then run.
    pub records: Vec<RunRecord>,
    /// Ordered by run, then sweep value.
    pub scenarios: Vec<ScenarioRef>,
}

/// Solves every link of `scenario`, matches devices to subchannels and
/// returns the assignment with accumulated solver statistics.
pub fn solve_scenario(scenario: &Scenario, opts: &JointOptions) -> Result<(Assignment, BnbStats), SolveError> {
    let mut decisions = BTreeMap::new();
    let mut stats = BnbStats::default();
    for link in scenario.links() {
        let ctx = LinkContext::new(scenario, link)?;
        let solve = solve_link(&ctx, opts)?;
        stats.absorb(&solve.stats);
        decisions.insert(link, solve.decision);
    }
    let problem = build_assignment_problem(scenario, &decisions).expect("every link was solved");
    Ok((solve_assignment(&problem), stats))
}

struct RunOutput {
    records: Vec<(usize, usize, RunRecord)>,
    scenarios: Vec<ScenarioRef>,
}

fn run_one(spec: &SweepSpec, run: usize, opts: &SweepOptions) -> Result<RunOutput, ExperimentError> {
    let run_seed = spec.run_seed(run);
    let base = generate(&spec.base_config.with_seed(run_seed))?;
    let mut out = RunOutput { records: Vec::new(), scenarios: Vec::new() };
    for (vi, &value) in spec.values.iter().enumerate() {
        let mut scenario = base.clone();
        spec.swept_parameter.apply(&mut scenario, value);
        scenario.validate().map_err(|e| ConfigError::Invalid(format!("{} = {value}: {e}", spec.swept_parameter)))?;
        out.scenarios.push(ScenarioRef { run_seed, sweep_value: value, sha256: scenario_hash(&scenario) });
        for (mi, &mode) in spec.modes.iter().enumerate() {
            let started = Instant::now();
            let (assignment, stats) =
                solve_scenario(&scenario, &JointOptions::new(spec.grid_segments, mode)).map_err(|source| {
                    ExperimentError::Solve { run_seed, param: spec.swept_parameter, value, mode, source }
                })?;
            let wall_ms = opts.record_wall_time.then(|| started.elapsed().as_secs_f64() * 1e3);
            out.records.push((
                mi,
                vi,
                RunRecord {
                    sweep_param: spec.swept_parameter,
                    sweep_value: value,
                    mode,
                    run_seed,
                    total_gestr: assignment.total,
                    assignment,
                    stats,
                    wall_ms,
                },
            ));
        }
    }
    Ok(out)
}

pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Result<ExperimentResult, ExperimentError> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(opts.workers))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let outputs = pool.install(|| {
        (0..spec.num_runs).into_par_iter().map(|run| run_one(spec, run, opts)).collect::<Result<Vec<_>, _>>()
    })?;

    let mut keyed = Vec::new();
    let mut scenarios = Vec::new();
    for (run, output) in outputs.into_iter().enumerate() {
        keyed.extend(output.records.into_iter().map(|(mi, vi, rec)| ((mi, vi, run), rec)));
        scenarios.extend(output.scenarios);
    }
    keyed.sort_by_key(|(key, _)| *key);
    Ok(ExperimentResult { spec: spec.clone(), records: keyed.into_iter().map(|(_, r)| r).collect(), scenarios })
}

/// Mean total GESTR per (mode, value), in record order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_param: SweepParameter,
    pub sweep_value: f64,
    pub mode: SolverMode,
    pub num_runs: usize,
    pub mean_total_gestr: f64,
}

impl ExperimentResult {
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows: Vec<SummaryRow> = Vec::new();
        let mut sums: Vec<f64> = Vec::new();
        for r in &self.records {
            match rows.last_mut() {
                Some(last) if last.mode == r.mode && last.sweep_value.to_bits() == r.sweep_value.to_bits() => {
                    last.num_runs += 1;
                    *sums.last_mut().expect("paired with rows") += r.total_gestr;
                }
                _ => {
                    rows.push(SummaryRow {
                        sweep_param: r.sweep_param,
                        sweep_value: r.sweep_value,
                        mode: r.mode,
                        num_runs: 1,
                        mean_total_gestr: 0.0,
                    });
                    sums.push(r.total_gestr);
                }
            }
        }
        for (row, sum) in rows.iter_mut().zip(sums) {
            row.mean_total_gestr = sum / row.num_runs as f64;
        }
        rows
    }

    /// Mean total GESTR of `mode` at the `value_index`-th sweep value.
    pub fn mean(&self, mode: SolverMode, value_index: usize) -> Option<f64> {
        let value = *self.spec.values.get(value_index)?;
        self.summary()
            .into_iter()
            .find(|r| r.mode == mode && r.sweep_value.to_bits() == value.to_bits())
            .map(|r| r.mean_total_gestr)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let wall = r.wall_ms.map(|w| w.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.sweep_param,
                r.sweep_value,
                r.mode,
                r.run_seed,
                r.total_gestr,
                r.assignment.matched_mds(),
                r.stats.nodes_explored,
                wall
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("sweep_param,sweep_value,mode,num_runs,mean_total_gestr_suts_per_s\n");
        for r in self.summary() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.sweep_param, r.sweep_value, r.mode, r.num_runs, r.mean_total_gestr
            ));
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        let meta = serde_json::json!({
            "generator": concat!("gestr-core ", env!("CARGO_PKG_VERSION")),
            "spec": &self.spec,
            "scenarios": &self.scenarios,
        });
        serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"
    }
}

pub fn emit_csv(result: &ExperimentResult, path: &Path) -> io::Result<()> {
    fs::write(path, result.csv())
}

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// Writes results, summary and metadata files into `dir`, creating it.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    emit_csv(result, &dir.join(RESULTS_FILE))?;
    fs::write(dir.join(SUMMARY_FILE), result.summary_csv())?;
    fs::write(dir.join(METADATA_FILE), result.metadata_json())
}
