//! `fcr-sched`: run cases, rebuild reports from checkpoints, export day models.
//!
//! Exit codes: 0 ok, 2 config error, 3 solver failure, 4 data error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fcr_core::builder::{build_day_model, DayInputs};
use fcr_core::config::{BatterySpec, CaseId, ConfigFile, DataSource, RunConfig};
use fcr_core::orchestrator::{run_label, run_runs, CaseData, Pricing};
use fcr_core::report::{load_checkpoint_root, write_report};
use fcr_milp::export::{export_model, ExportFormat};

#[derive(Parser)]
#[command(name = "fcr-sched", version, about = "Battery day-ahead plus FCR-N / FCR-D bid scheduler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the horizon day by day. Without --case, all five cases run in
    /// both degradation modes.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        case: Option<CaseId>,
        /// Leave degradation out of the objective (it is still post-calculated).
        #[arg(long)]
        no_deg_objective: bool,
        /// Replace the configured data source with synthetic series.
        #[arg(long)]
        synthetic_seed: Option<u64>,
    },
    /// Rebuild the report from a checkpoint directory written by `run`.
    Report {
        #[arg(long)]
        from: PathBuf,
        /// Defaults to `<from>/../report`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Battery parameters for histogram ranges; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write one day's MILP for audit. The day starts from the configured
    /// initial SoE unless --s0 is given.
    ExportModel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        day: usize,
        #[arg(long)]
        case: Option<CaseId>,
        #[arg(long)]
        no_deg_objective: bool,
        /// mps, fixed-mps or lp.
        #[arg(long, default_value = "mps")]
        format: String,
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Solver(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Data(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Data(m) => m,
        }
    }
}

fn load_config(path: &Path) -> Result<(RunConfig, BatterySpec), Failure> {
    let file = ConfigFile::load(path).map_err(|e| Failure::Config(e.to_string()))?;
    file.resolve(path.parent()).map_err(|e| Failure::Config(e.to_string()))
}

fn apply_overrides(rc: &mut RunConfig, case: Option<CaseId>, no_deg: bool, seed: Option<u64>) {
    if let Some(c) = case {
        rc.case = c;
    }
    if no_deg {
        rc.options.degradation_in_objective = false;
    }
    if let Some(seed) = seed {
        rc.data = DataSource::Synthetic { seed };
    }
}

fn load_data(rc: &RunConfig) -> Result<CaseData, Failure> {
    CaseData::load(rc).map_err(|e| Failure::Data(e.to_string()))
}

fn cmd_run(config: &Path, case: Option<CaseId>, no_deg: bool, seed: Option<u64>) -> Result<(), Failure> {
    let (mut rc, spec) = load_config(config)?;
    apply_overrides(&mut rc, case, no_deg, seed);
    rc.validate(&spec).map_err(|e| Failure::Config(e.to_string()))?;
    // surface fit-tolerance and parameter problems as config errors
    Pricing::new(&rc, &spec).map_err(|e| Failure::Config(e.to_string()))?;
    let data = load_data(&rc)?;

    let cases: Vec<CaseId> = match case {
        Some(c) => vec![c],
        None => CaseId::ALL.to_vec(),
    };
    let modes: Vec<bool> = if no_deg {
        vec![false]
    } else if case.is_some() {
        vec![rc.options.degradation_in_objective]
    } else {
        vec![true, false]
    };
    let jobs: Vec<(CaseId, bool)> = cases.iter().flat_map(|&c| modes.iter().map(move |&m| (c, m))).collect();

    let checkpoints = rc.output_dir.join("checkpoints");
    let matrix = run_runs(&rc, &spec, &data, &jobs, Some(&checkpoints));
    for r in matrix.results() {
        let a = &r.aggregates;
        println!(
            "{} days={} profit_eur={:.2} aging_eur={:.2} r_fcr_eur={:.2}",
            r.run_label(),
            r.days.len(),
            a.profit,
            a.aging.total_cost(),
            a.r_fcr()
        );
    }
    for c in &cases {
        if let Some(d) = matrix.delta_aging(*c) {
            println!("{c} delta_total_aging_pct={:.3}", 100.0 * d);
        }
    }
    let failures: Vec<String> = matrix.failures().map(|f| f.to_string()).collect();
    for f in &failures {
        eprintln!("{f}");
    }

    // nothing completed means nothing to report; the failures decide the exit code
    if matrix.results().next().is_some() {
        let (results, metas) = load_checkpoint_root(&checkpoints).map_err(|e| Failure::Data(e.to_string()))?;
        let keep: Vec<String> = jobs.iter().map(|&(c, m)| run_label(c, m)).collect();
        let results: Vec<_> = results.into_iter().filter(|r| keep.contains(&r.run_label())).collect();
        let metas: BTreeMap<_, _> = metas.into_iter().filter(|(k, _)| keep.contains(k)).collect();
        let out = rc.output_dir.join("report");
        write_report(&results, &metas, &spec, &out).map_err(|e| Failure::Data(e.to_string()))?;
        println!("report written to {}", out.display());
    }
    if !failures.is_empty() {
        return Err(Failure::Solver(format!("{} run(s) failed", failures.len())));
    }
    Ok(())
}

fn cmd_report(from: &Path, out: Option<PathBuf>, config: Option<PathBuf>) -> Result<(), Failure> {
    let spec = match config {
        Some(p) => load_config(&p)?.1,
        None => BatterySpec::default(),
    };
    let (results, metas) = load_checkpoint_root(from).map_err(|e| Failure::Data(e.to_string()))?;
    let out = out.unwrap_or_else(|| from.parent().unwrap_or(Path::new(".")).join("report"));
    let manifest = write_report(&results, &metas, &spec, &out).map_err(|e| Failure::Data(e.to_string()))?;
    println!("{} files written to {}", manifest.files.len() + 1, out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_export(
    config: &Path,
    day: usize,
    case: Option<CaseId>,
    no_deg: bool,
    format: &str,
    s0: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let format: ExportFormat = format.parse().map_err(|e: fcr_milp::MilpError| Failure::Config(e.to_string()))?;
    let (mut rc, spec) = load_config(config)?;
    apply_overrides(&mut rc, case, no_deg, None);
    if day >= rc.days {
        return Err(Failure::Config(format!("day {day} outside the {}-day horizon", rc.days)));
    }
    if s0.is_some() {
        rc.initial_soe = s0;
    }
    rc.validate(&spec).map_err(|e| Failure::Config(e.to_string()))?;
    let pricing = Pricing::new(&rc, &spec).map_err(|e| Failure::Config(e.to_string()))?;
    let data = load_data(&rc)?;
    let prices = data.day_prices(day);
    let contents = data.day_contents(day).map_err(|e| Failure::Data(e.to_string()))?;
    let cal = pricing.calendar_for_day(&rc, &spec, day);
    let inputs = DayInputs {
        grid: data.day_grid(day),
        prices: &prices,
        contents: &contents,
        spec: &spec,
        cal_lin: &cal,
        cyc_lin: &pricing.cyc,
        s0: rc.initial_soe(&spec),
        case: rc.case,
        options: rc.options,
    };
    let model = build_day_model(&inputs).map_err(|e| Failure::Config(e.to_string()))?;
    let exported = export_model(&model, format).map_err(|e| Failure::Config(e.to_string()))?;
    let path = out.unwrap_or_else(|| {
        rc.output_dir
            .join(format!("{}_day{day:04}.{}", run_label(rc.case, rc.options.degradation_in_objective), format.extension()))
    });
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Data(e.to_string()))?;
    }
    let sidecar = exported.write(&path).map_err(|e| Failure::Data(e.to_string()))?;
    println!(
        "{} vars, {} rows -> {} (names: {})",
        model.num_vars(),
        model.num_rows(),
        path.display(),
        sidecar.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            case,
            no_deg_objective,
            synthetic_seed,
        } => cmd_run(&config, case, no_deg_objective, synthetic_seed),
        Command::Report { from, out, config } => cmd_report(&from, out, config),
        Command::ExportModel {
            config,
            day,
            case,
            no_deg_objective,
            format,
            s0,
            out,
        } => cmd_export(&config, day, case, no_deg_objective, &format, s0, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
