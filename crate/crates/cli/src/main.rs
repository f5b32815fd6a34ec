use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use tmpidan_core::experiment::run_row;
use tmpidan_core::report::{aggregate_csv, plot_csv, raw_csv};
use tmpidan_core::{ClockMode, PlannerConfig, RawRow, Scenario, SimConfig, SweepReport, SweepSpec, DOMAIN_NAMES};

#[derive(Parser)]
#[command(name = "tmpidan", version, about = "Task and motion planning with networks of AND/OR graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one problem, possibly repeated, and write one row per run.
    Run(RunArgs),
    /// Sweep object or disk counts and write aggregate, raw and plot tables.
    Bench(BenchArgs),
    /// Check a scenario file against the workspace invariants.
    Validate { path: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Clock {
    /// Times derived from work counters; reproducible byte for byte.
    Logical,
    /// Measured wall-clock time.
    Wall,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "clutter", value_parser = clap::builder::PossibleValuesParser::new(DOMAIN_NAMES))]
    domain: String,
    /// Scenario JSON to use instead of a generated instance.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    robots: usize,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long, env = "TMPIDAN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reps: Option<u64>,
    #[arg(long, default_value_t = tmpidan_core::DEFAULT_DEPTH_LIMIT)]
    depth_limit: usize,
    #[arg(long, default_value_t = 1000)]
    motion_budget_ms: u64,
    #[arg(long, default_value_t = 0.0)]
    fail_prob: f64,
    /// Straight-line motion that always succeeds.
    #[arg(long)]
    ideal_motion: bool,
    #[arg(long, value_enum, default_value_t = Clock::Logical)]
    clock: Clock,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 8)]
    objects: usize,
    #[arg(long, default_value_t = 3)]
    disks: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "4,8,15,20,30,42,49,64")]
    objects: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6")]
    disks: Vec<usize>,
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

impl Common {
    fn spec(&self, points: Vec<usize>, default_reps: u64) -> Result<SweepSpec> {
        let config = PlannerConfig {
            depth_limit: self.depth_limit,
            motion_budget_ms: self.motion_budget_ms,
            fail_prob: self.fail_prob,
            seed: self.seed,
            ideal_motion: self.ideal_motion,
            clock: match self.clock {
                Clock::Logical => ClockMode::Logical,
                Clock::Wall => ClockMode::Wall,
            },
            ..Default::default()
        };
        config.validate()?;
        if !(1..=4).contains(&self.robots) {
            bail!("--robots must be between 1 and 4");
        }
        let mut spec = SweepSpec::new(&self.domain, points, self.reps.unwrap_or(default_reps) as usize, self.seed, config);
        spec.robots = self.robots;
        spec.targets = self.targets;
        if let Some(path) = &self.scenario {
            let sc = load_scenario(path)?;
            let bad = sc.violations(&SimConfig::default());
            if !bad.is_empty() {
                bail!("{}: {}", path.display(), bad.join("; "));
            }
            spec.scenario = Some(sc);
        }
        spec.rows()?;
        Ok(spec)
    }

    fn execute(&self, spec: &SweepSpec) -> Result<Vec<RawRow>> {
        let domain = spec.template()?;
        let rows = spec.rows()?;
        let work = || -> Vec<RawRow> {
            rows.par_iter()
                .map(|&(p, r)| run_row(spec, &domain, p, r))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        };
        match self.jobs {
            Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?.install(work)),
            None => Ok(work()),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn report_errors(rows: &[RawRow]) {
    for r in rows.iter().filter(|r| r.is_error()) {
        eprintln!("objects={} rep={} seed={}: {}", r.objects, r.rep, r.seed, r.error);
    }
}

fn cmd_run(a: &RunArgs) -> Result<ExitCode> {
    let point = if a.common.domain == "hanoi" { a.disks } else { a.objects };
    let spec = a.common.spec(vec![point], 1)?;
    let rows = a.common.execute(&spec)?;
    let text = match a.common.format {
        Format::Csv => raw_csv(&rows)?,
        Format::Json => json(&rows)?,
    };
    emit(a.common.out.as_deref(), &text)?;
    report_errors(&rows);
    Ok(if rows.iter().any(RawRow::is_error) {
        ExitCode::from(1)
    } else if rows.iter().all(|r| r.solved) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn cmd_bench(a: &BenchArgs) -> Result<ExitCode> {
    let points = if a.common.domain == "hanoi" { a.disks.clone() } else { a.objects.clone() };
    let spec = a.common.spec(points, 3)?;
    let rows = a.common.execute(&spec)?;
    report_errors(&rows);
    let ok = rows.iter().any(|r| !r.is_error());
    let report = SweepReport::from_rows(rows);
    let out = a.common.out.as_deref();
    match a.common.format {
        Format::Json => emit(out, &json(&report)?)?,
        Format::Csv => {
            emit(out, &aggregate_csv(&report.aggregate)?)?;
            if let Some(p) = out {
                emit(Some(&sibling(p, "raw")), &raw_csv(&report.raw)?)?;
                emit(Some(&sibling(p, "plot")), &plot_csv(&report.plot)?)?;
            }
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_validate(path: &Path) -> Result<ExitCode> {
    let sc = load_scenario(path)?;
    let bad = sc.violations(&SimConfig::default());
    for v in &bad {
        println!("{v}");
    }
    Ok(if bad.is_empty() {
        println!("ok");
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Validate { path } => cmd_validate(path),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
