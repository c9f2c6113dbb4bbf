//! Command implementations behind the `blisp` binary.

use anyhow::{bail, Context, Result};
use blisp::config::{load_models, load_scenario};
use blisp::report::{
    aggregate, emit_curve, emit_run_table, write_curve_csv, write_table_csv, CountMode,
    PeriodLogWriter, TableRow,
};
use blisp::sim::{run_with, PeriodRecord, Scenario, Setup};
use blisp::{Policy, RunMetrics};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "blisp", version, about = "Hybrid backscatter/BLE radio simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy-per-byte curves over distance.
    Curve(CurveArgs),
    /// Repeated runs of one scenario: wisp-only, ble-only and one switching policy.
    Run(RunArgs),
    /// Repeated runs over several backoff windows.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Model file or preset (`default`).
    #[arg(long, default_value = "default")]
    pub models: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub d_min: f64,
    #[arg(long, default_value_t = 120.0, allow_negative_numbers = true)]
    pub d_max: f64,
    #[arg(long, default_value_t = 120)]
    pub steps: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Naive,
    Random,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct CountArgs {
    /// Deduplicated message counts (default).
    #[arg(long)]
    pub unique: bool,
    /// Per-radio message counts, duplicates included.
    #[arg(long)]
    pub raw: bool,
}

impl CountArgs {
    fn mode(&self) -> CountMode {
        if self.raw {
            CountMode::Raw
        } else {
            CountMode::Unique
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file or preset name.
    #[arg(long)]
    pub scenario: String,
    /// Overrides the scenario policy.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyKind>,
    #[arg(long)]
    pub max_backoff: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<u32>,
    #[command(flatten)]
    pub count: CountArgs,
    /// Aggregate table CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-period log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: String,
    /// Comma-separated backoff windows.
    #[arg(long, value_delimiter = ',', required = true)]
    pub max_backoff_list: Vec<u32>,
    /// Number of seeded repeats per setup.
    #[arg(long)]
    pub seeds: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub count: CountArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Curve(a) => cmd_curve(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

/// Evenly spaced grid including both ends.
pub fn distance_grid(d_min: f64, d_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(d_min > 0.0 && d_min.is_finite()) {
        bail!("--d-min: must be positive, got {d_min}");
    }
    if !(d_max >= d_min && d_max.is_finite()) {
        bail!("--d-max: must be at least --d-min, got {d_max}");
    }
    if steps == 0 {
        bail!("--steps: must be at least 1");
    }
    if steps == 1 {
        return Ok(vec![d_min]);
    }
    let span = d_max - d_min;
    Ok((0..steps)
        .map(|i| d_min + span * i as f64 / (steps - 1) as f64)
        .collect())
}

pub fn cmd_curve(a: &CurveArgs) -> Result<()> {
    let grid = distance_grid(a.d_min, a.d_max, a.steps)?;
    let models = load_models(&a.models).context("--models")?;
    let rows = emit_curve(&models, &grid).context("--d-max")?;
    write_output(a.out.as_deref(), |w| Ok(write_curve_csv(&rows, w)?))
}

fn resolve_policy(scenario: &Scenario, kind: Option<PolicyKind>, x: Option<u32>) -> Result<Policy> {
    let base = scenario.policy;
    Ok(match (kind, x) {
        (Some(PolicyKind::Naive), Some(x)) if x != 0 => {
            bail!("--max-backoff: the naive policy has a backoff window of 0, got {x}")
        }
        (Some(PolicyKind::Naive), _) => Policy { max_backoff: 0, ..base },
        (_, Some(x)) => Policy { max_backoff: x, ..base },
        (_, None) => base,
    })
}

struct Job {
    setup: Setup,
    repeat: u32,
}

struct JobResult {
    setup: Setup,
    repeat: u32,
    records: Vec<PeriodRecord>,
    metrics: RunMetrics,
}

/// Runs every (setup, repeat) pair. Output order follows `setups`, then repeat.
fn run_jobs(scenario: &Scenario, setups: &[Setup], repeats: u32) -> Result<Vec<JobResult>> {
    let jobs: Vec<Job> = setups
        .iter()
        .flat_map(|&setup| (0..repeats).map(move |repeat| Job { setup, repeat }))
        .collect();
    jobs.par_iter()
        .map(|j| {
            let (records, metrics) = run_with(scenario, j.setup, j.repeat)?;
            Ok(JobResult {
                setup: j.setup,
                repeat: j.repeat,
                records,
                metrics,
            })
        })
        .collect()
}

fn table_rows(scenario: &Scenario, setups: &[Setup], results: &[JobResult], mode: CountMode) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for setup in setups {
        let runs: Vec<RunMetrics> = results
            .iter()
            .filter(|r| r.setup == *setup)
            .map(|r| r.metrics.clone())
            .collect();
        let stats = aggregate(&runs, mode)?;
        rows.extend(emit_run_table(&scenario.name, &setup.label(), &stats));
    }
    Ok(rows)
}

pub fn cmd_run(a: &RunArgs) -> Result<()> {
    let mut scenario = load_scenario(&a.scenario).context("--scenario")?;
    scenario.policy = resolve_policy(&scenario, a.policy, a.max_backoff)?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    if let Some(n) = a.repeats {
        if n == 0 {
            bail!("--repeats: must be at least 1");
        }
        scenario.repeats = n;
    }
    let setups = [Setup::WispOnly, Setup::BleOnly, Setup::Blisp(scenario.policy)];
    let results = run_jobs(&scenario, &setups, scenario.repeats)?;
    let rows = table_rows(&scenario, &setups, &results, a.count.mode())?;

    if let Some(log) = &a.log {
        write_output(Some(log), |w| {
            let mut lw = PeriodLogWriter::new(w)?;
            for r in &results {
                lw.write(&scenario.name, &r.setup.label(), r.repeat, &r.records)?;
            }
            lw.finish()?;
            Ok(())
        })?;
    }
    write_output(a.out.as_deref(), |w| Ok(write_table_csv(&rows, w)?))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    if a.max_backoff_list.is_empty() {
        bail!("--max-backoff-list: must name at least one backoff window");
    }
    let mut scenario = load_scenario(&a.scenario).context("--scenario")?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    if let Some(n) = a.seeds {
        if n == 0 {
            bail!("--seeds: must be at least 1");
        }
        scenario.repeats = n;
    }
    let mut setups = vec![Setup::WispOnly, Setup::BleOnly];
    let mut seen = Vec::new();
    for &x in &a.max_backoff_list {
        if !seen.contains(&x) {
            seen.push(x);
            setups.push(Setup::Blisp(Policy {
                max_backoff: x,
                ..scenario.policy
            }));
        }
    }
    let results = run_jobs(&scenario, &setups, scenario.repeats)?;
    let rows = table_rows(&scenario, &setups, &results, a.count.mode())?;
    write_output(a.out.as_deref(), |w| Ok(write_table_csv(&rows, w)?))
}

/// Writes to `path` through a temporary file in the same directory, so a
/// failed command never leaves a partial file behind. `None` means stdout.
pub fn write_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let Some(path) = path else {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        body(&mut lock)?;
        lock.flush()?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    {
        let mut buf = io::BufWriter::new(tmp.as_file_mut());
        body(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
