//! Runs cases day by day with SoE carry-over, and the case × mode matrix.
//!
//! Each case writes `day_NNNN.json` checkpoints into its own directory and
//! appends one progress line per solved day. A rerun with the same config
//! and data resumes after the last consistent checkpoint.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fcr_milp::{Backend, Limits, SolveStatus};

use crate::builder::{build_day_model, extract_day_solution, validate_solution, BuildError, DayInputs, DaySolution, SolveStats};
use crate::config::{AgePolicy, BatterySpec, CaseId, DataSource, Market, RunConfig};
use crate::degradation::{
    battery_npv, linearize_calendar, linearize_cycle, post_calculate_aging, AgingBreakdown, BatteryNpv,
    CalendarLinearization, CycleLinearization, DegradationError,
};
use crate::droop::{energy_content, DroopParams, EnergyContentSeries};
use crate::ingest::{
    load_frequency, load_prices, synth_frequency, synth_prices, FrequencyTrace, Horizon, IngestError, PriceSeries,
    SynthFrequencyParams, SynthPriceParams, TimeGrid,
};

/// Positive-bid threshold for market-mix labels, MW.
pub const BID_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Degradation(#[from] DegradationError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ingested series covering a horizon.
#[derive(Debug, Clone)]
pub struct CaseData {
    pub horizon: Horizon,
    pub frequency: FrequencyTrace,
    pub prices: PriceSeries,
}

impl CaseData {
    pub fn load(rc: &RunConfig) -> Result<Self, IngestError> {
        let horizon = Horizon::with_hours(rc.start, rc.days, rc.steps_per_hour, rc.hours_per_day)?;
        let (frequency, prices) = match &rc.data {
            DataSource::Files { frequency, prices } => {
                if rc.hours_per_day != 24 {
                    return Err(IngestError::InvalidParameter("file data needs 24-hour days".into()));
                }
                (
                    load_frequency(frequency, &horizon, rc.max_gap_seconds)?,
                    load_prices(prices, rc.start, horizon.total_hours(), rc.grid_tariff, rc.tax)?,
                )
            }
            DataSource::Synthetic { seed } => (
                synth_frequency(*seed, &horizon, &SynthFrequencyParams::default())?,
                synth_prices(*seed, horizon.total_hours(), &SynthPriceParams::default(), rc.grid_tariff, rc.tax)?,
            ),
        };
        Self::new(horizon, frequency, prices)
    }

    pub fn new(horizon: Horizon, frequency: FrequencyTrace, prices: PriceSeries) -> Result<Self, IngestError> {
        frequency.check(horizon.total_steps())?;
        prices.check()?;
        if prices.hours() != horizon.total_hours() {
            return Err(IngestError::Alignment {
                expected: horizon.total_hours(),
                got: prices.hours(),
            });
        }
        Ok(Self {
            horizon,
            frequency,
            prices,
        })
    }

    /// SHA-256 over the exact bit patterns of every series.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?}", self.horizon).as_bytes());
        let p = &self.prices;
        for series in [&self.frequency.values, &p.spot, &p.fcr_n, &p.fcr_du, &p.fcr_dd, &p.up_reg, &p.down_reg] {
            for v in series.iter() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.update(p.grid_tariff.to_bits().to_le_bytes());
        h.update(p.tax.to_bits().to_le_bytes());
        hex::encode(h.finalize())
    }

    pub fn day_grid(&self, d: usize) -> TimeGrid {
        self.horizon.day_grid(d)
    }

    pub fn day_prices(&self, d: usize) -> PriceSeries {
        self.prices.day(&self.horizon, d)
    }

    pub fn day_contents(&self, d: usize) -> Result<EnergyContentSeries, IngestError> {
        energy_content(self.frequency.day(&self.horizon, d), &self.day_grid(d), &DroopParams::default())
    }
}

/// Hour label by the set of markets with a positive bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MarketMix {
    None,
    N,
    DU,
    DD,
    NDu,
    NDd,
    DuDd,
    All,
}

impl MarketMix {
    pub const ALL: [MarketMix; 8] = [
        MarketMix::None,
        MarketMix::N,
        MarketMix::DU,
        MarketMix::DD,
        MarketMix::NDu,
        MarketMix::NDd,
        MarketMix::DuDd,
        MarketMix::All,
    ];

    pub fn from_bids(n: f64, du: f64, dd: f64) -> Self {
        match (n > BID_EPS, du > BID_EPS, dd > BID_EPS) {
            (false, false, false) => MarketMix::None,
            (true, false, false) => MarketMix::N,
            (false, true, false) => MarketMix::DU,
            (false, false, true) => MarketMix::DD,
            (true, true, false) => MarketMix::NDu,
            (true, false, true) => MarketMix::NDd,
            (false, true, true) => MarketMix::DuDd,
            (true, true, true) => MarketMix::All,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MarketMix::None => "None",
            MarketMix::N => "N",
            MarketMix::DU => "DU",
            MarketMix::DD => "DD",
            MarketMix::NDu => "N+DU",
            MarketMix::NDd => "N+DD",
            MarketMix::DuDd => "DU+DD",
            MarketMix::All => "All",
        }
    }
}

impl fmt::Display for MarketMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn classify_market_mix(day: &DaySolution) -> Vec<MarketMix> {
    (0..day.hours())
        .map(|h| MarketMix::from_bids(day.bid_n[h], day.bid_du[h], day.bid_dd[h]))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub profit: f64,
    pub r_da: f64,
    pub r_n: f64,
    pub r_du: f64,
    pub r_dd: f64,
    pub c_da: f64,
    pub c_deg_lin: f64,
    pub aging: AgingBreakdown,
    pub hours: usize,
    pub market_mix: BTreeMap<MarketMix, usize>,
}

impl Aggregates {
    pub fn fold(days: &[DaySolution]) -> Self {
        let mut a = Aggregates {
            market_mix: MarketMix::ALL.iter().map(|&m| (m, 0)).collect(),
            ..Default::default()
        };
        for d in days {
            a.profit += d.profit();
            a.r_da += d.revenue.r_da;
            a.r_n += d.revenue.r_n;
            a.r_du += d.revenue.r_du;
            a.r_dd += d.revenue.r_dd;
            a.c_da += d.revenue.c_da;
            a.c_deg_lin += d.revenue.c_deg_lin;
            a.aging.add(&d.aging);
            a.hours += d.hours();
            for m in classify_market_mix(d) {
                *a.market_mix.entry(m).or_insert(0) += 1;
            }
        }
        a
    }

    pub fn r_fcr(&self) -> f64 {
        self.r_n + self.r_du + self.r_dd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub case: CaseId,
    pub degradation_in_objective: bool,
    pub days: Vec<DaySolution>,
    pub aggregates: Aggregates,
}

impl HorizonResult {
    pub fn new(case: CaseId, degradation_in_objective: bool, days: Vec<DaySolution>) -> Self {
        let aggregates = Aggregates::fold(&days);
        Self {
            case,
            degradation_in_objective,
            days,
            aggregates,
        }
    }

    pub fn run_label(&self) -> String {
        run_label(self.case, self.degradation_in_objective)
    }
}

pub fn run_label(case: CaseId, deg: bool) -> String {
    format!("{}_{}", case, if deg { "deg" } else { "nodeg" })
}

/// A case stopped early; `partial` holds every day solved before `day`.
#[derive(Debug)]
pub struct CaseFailure {
    pub case: CaseId,
    pub degradation_in_objective: bool,
    pub day: Option<usize>,
    pub message: String,
    pub partial: HorizonResult,
}

impl fmt::Display for CaseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.day {
            Some(d) => write!(f, "{} failed on day {d}: {}", run_label(self.case, self.degradation_in_objective), self.message),
            None => write!(f, "{} failed: {}", run_label(self.case, self.degradation_in_objective), self.message),
        }
    }
}

impl std::error::Error for CaseFailure {}

/// Linearizations and NPV shared by every day of a case.
#[derive(Debug, Clone)]
pub struct Pricing {
    pub npv: BatteryNpv,
    pub cyc: CycleLinearization,
    /// Present only under [`AgePolicy::HorizonMidpoint`].
    pub cal: Option<CalendarLinearization>,
}

impl Pricing {
    pub fn new(rc: &RunConfig, spec: &BatterySpec) -> Result<Self, DegradationError> {
        let npv = battery_npv(spec, rc.npv_alpha)?;
        let cyc = linearize_cycle(spec, &npv, rc.cycle_fit_tolerance)?;
        let cal = match rc.age_policy {
            AgePolicy::HorizonMidpoint => {
                let mid = rc.start_age_days + 0.5 * horizon_days(rc);
                Some(linearize_calendar(spec, mid, step_seconds(rc), &npv))
            }
            AgePolicy::PerDay => None,
        };
        Ok(Self { npv, cyc, cal })
    }

    pub fn calendar_for_day(&self, rc: &RunConfig, spec: &BatterySpec, d: usize) -> CalendarLinearization {
        match &self.cal {
            Some(c) => c.clone(),
            None => linearize_calendar(spec, day_start_age(rc, d), step_seconds(rc), &self.npv),
        }
    }
}

fn step_seconds(rc: &RunConfig) -> f64 {
    3600.0 / rc.steps_per_hour as f64
}

/// Simulated span in days (toy days shorter than 24 h count pro rata).
fn horizon_days(rc: &RunConfig) -> f64 {
    rc.days as f64 * rc.hours_per_day as f64 / 24.0
}

pub fn day_start_age(rc: &RunConfig, d: usize) -> f64 {
    rc.start_age_days + d as f64 * rc.hours_per_day as f64 / 24.0
}

/// Hash of everything that shapes a case's results.
pub fn config_digest(rc: &RunConfig, spec: &BatterySpec) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        rc: &'a RunConfig,
        spec: &'a BatterySpec,
    }
    let mut key_rc = rc.clone();
    // output location and solver plumbing do not change the optimum
    key_rc.output_dir = PathBuf::new();
    key_rc.solver.choice = crate::config::SolverChoice::Micro {
        max_integer: 0,
        max_continuous: 0,
    };
    let text = serde_json::to_string(&Key { rc: &key_rc, spec }).expect("serializable config");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Stored beside a case's checkpoints; a mismatch invalidates them.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckpointMeta {
    pub config: String,
    pub data: String,
}

impl CheckpointMeta {
    pub fn read(dir: &Path) -> Option<Self> {
        let text = fs::read_to_string(dir.join("meta.json")).ok()?;
        serde_json::from_str(&text).ok()
    }
}

fn checkpoint_path(dir: &Path, d: usize) -> PathBuf {
    dir.join(format!("day_{d:04}.json"))
}

/// Reads consecutive day checkpoints from `dir`.
pub fn read_checkpoints(dir: &Path) -> Result<Vec<DaySolution>, OrchestratorError> {
    let mut days = Vec::new();
    loop {
        let p = checkpoint_path(dir, days.len());
        if !p.exists() {
            break;
        }
        let text = fs::read_to_string(&p)?;
        let day: DaySolution =
            serde_json::from_str(&text).map_err(|e| OrchestratorError::Checkpoint(format!("{}: {e}", p.display())))?;
        days.push(day);
    }
    Ok(days)
}

fn prepare_checkpoint_dir(dir: &Path, meta: &CheckpointMeta) -> Result<Vec<DaySolution>, OrchestratorError> {
    fs::create_dir_all(dir)?;
    let meta_path = dir.join("meta.json");
    let stale = match fs::read_to_string(&meta_path) {
        Ok(text) => serde_json::from_str::<CheckpointMeta>(&text).map(|m| m != *meta).unwrap_or(true),
        Err(_) => true,
    };
    if stale {
        for entry in fs::read_dir(dir)? {
            let p = entry?.path();
            if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("day_")) {
                fs::remove_file(p)?;
            }
        }
        fs::write(&meta_path, serde_json::to_string_pretty(meta).expect("meta"))?;
        return Ok(Vec::new());
    }
    read_checkpoints(dir)
}

fn write_checkpoint(dir: &Path, day: &DaySolution) -> Result<(), OrchestratorError> {
    let p = checkpoint_path(dir, day.day_index);
    let tmp = p.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string(day).expect("day solution"))?;
    fs::rename(tmp, p)?;
    Ok(())
}

fn progress_line(day: &DaySolution) -> String {
    let s = &day.stats;
    format!(
        "day={} status={} objective={:.6} gap={:e} wall_time_s={:.3}",
        day.day_index, s.status, s.objective, s.gap, s.wall_time_s
    )
}

/// Solves one day and post-calculates its nonlinear aging.
pub fn solve_day(
    inputs: &DayInputs,
    backend: &Backend,
    limits: Limits,
    npv: &BatteryNpv,
    age_days: f64,
) -> Result<DaySolution, String> {
    let model = build_day_model(inputs).map_err(|e| e.to_string())?;
    let r = backend.solve(&model, limits).map_err(|e| e.to_string())?;
    let usable = matches!(r.status, SolveStatus::Optimal | SolveStatus::TimeLimit) && r.has_solution();
    if !usable {
        return Err(format!(
            "status {:?}{}",
            r.status,
            r.message.map(|m| format!(": {m}")).unwrap_or_default()
        ));
    }
    if r.status == SolveStatus::TimeLimit {
        log::warn!("day {}: time limit hit, keeping incumbent (gap {:e})", inputs.grid.day_index, r.gap);
    }
    let report = validate_solution(&model, &r.solution).map_err(|e| e.to_string())?;
    if !report.is_empty() {
        return Err(format!("solution fails audit: {report}"));
    }
    let mut sol = extract_day_solution(&model, &r.solution, inputs).map_err(|e| e.to_string())?;
    sol.aging = post_calculate_aging(
        &sol.soe,
        &sol.p_ch,
        &sol.p_ds,
        inputs.grid.step_seconds as f64,
        inputs.spec,
        age_days,
        npv,
    );
    sol.stats = SolveStats {
        status: format!("{:?}", r.status),
        objective: r.objective,
        gap: r.gap,
        wall_time_s: r.wall_time.as_secs_f64(),
        backend: backend.name().into(),
    };
    Ok(sol)
}

/// Runs one case over the horizon in day order. With `checkpoint_dir`, each
/// solved day is persisted and a rerun resumes from the stored days.
pub fn run_case(
    rc: &RunConfig,
    spec: &BatterySpec,
    data: &CaseData,
    checkpoint_dir: Option<&Path>,
) -> Result<HorizonResult, CaseFailure> {
    let deg = rc.options.degradation_in_objective;
    let fail = |day: Option<usize>, message: String, days: Vec<DaySolution>| CaseFailure {
        case: rc.case,
        degradation_in_objective: deg,
        day,
        message,
        partial: HorizonResult::new(rc.case, deg, days),
    };
    if let Err(e) = rc.validate(spec) {
        return Err(fail(None, e.to_string(), Vec::new()));
    }
    let pricing = Pricing::new(rc, spec).map_err(|e| fail(None, e.to_string(), Vec::new()))?;
    let backend = rc.solver.backend();
    let limits = rc.solver.limits();

    let mut days = match checkpoint_dir {
        Some(dir) => {
            let meta = CheckpointMeta {
                config: config_digest(rc, spec),
                data: data.digest(),
            };
            prepare_checkpoint_dir(dir, &meta).map_err(|e| fail(None, e.to_string(), Vec::new()))?
        }
        None => Vec::new(),
    };
    days.truncate(rc.days);
    let mut progress = match checkpoint_dir {
        Some(dir) => Some(
            fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join("progress.log"))
                .map_err(|e| fail(None, e.to_string(), Vec::new()))?,
        ),
        None => None,
    };

    let mut s0 = days.last().map(DaySolution::final_soe).unwrap_or_else(|| rc.initial_soe(spec));
    for d in days.len()..rc.days {
        let prices = data.day_prices(d);
        let contents = match data.day_contents(d) {
            Ok(c) => c,
            Err(e) => return Err(fail(Some(d), e.to_string(), days)),
        };
        let cal = pricing.calendar_for_day(rc, spec, d);
        let inputs = DayInputs {
            grid: data.day_grid(d),
            prices: &prices,
            contents: &contents,
            spec,
            cal_lin: &cal,
            cyc_lin: &pricing.cyc,
            s0,
            case: rc.case,
            options: rc.options,
        };
        let sol = match solve_day(&inputs, &backend, limits, &pricing.npv, day_start_age(rc, d)) {
            Ok(s) => s,
            Err(msg) => return Err(fail(Some(d), msg, days)),
        };
        let line = progress_line(&sol);
        log::info!("{} {line}", run_label(rc.case, deg));
        if let (Some(dir), Some(f)) = (checkpoint_dir, progress.as_mut()) {
            let io = write_checkpoint(dir, &sol).and_then(|_| Ok(writeln!(f, "{line}")?));
            if let Err(e) = io {
                return Err(fail(Some(d), e.to_string(), days));
            }
        }
        s0 = sol.final_soe();
        days.push(sol);
    }
    Ok(HorizonResult::new(rc.case, deg, days))
}

/// One entry of the experiment matrix.
#[derive(Debug)]
pub struct MatrixRun {
    pub case: CaseId,
    pub degradation_in_objective: bool,
    pub result: Result<HorizonResult, CaseFailure>,
}

#[derive(Debug)]
pub struct MatrixResult {
    pub runs: Vec<MatrixRun>,
}

impl MatrixResult {
    pub fn get(&self, case: CaseId, deg: bool) -> Option<&HorizonResult> {
        self.runs
            .iter()
            .find(|r| r.case == case && r.degradation_in_objective == deg)
            .and_then(|r| r.result.as_ref().ok())
    }

    /// (with - without) / without of total post-calculated aging cost.
    pub fn delta_aging(&self, case: CaseId) -> Option<f64> {
        let with = self.get(case, true)?.aggregates.aging.total_cost();
        let without = self.get(case, false)?.aggregates.aging.total_cost();
        (without != 0.0).then(|| (with - without) / without)
    }

    pub fn results(&self) -> impl Iterator<Item = &HorizonResult> {
        self.runs.iter().filter_map(|r| r.result.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseFailure> {
        self.runs.iter().filter_map(|r| r.result.as_ref().err())
    }
}

/// Runs `cases` × {with, without degradation in the objective} in parallel.
/// A failing run does not stop its siblings.
pub fn run_matrix(
    base: &RunConfig,
    spec: &BatterySpec,
    data: &CaseData,
    cases: &[CaseId],
    checkpoint_root: Option<&Path>,
) -> MatrixResult {
    let jobs: Vec<(CaseId, bool)> = cases.iter().flat_map(|&c| [(c, true), (c, false)]).collect();
    run_runs(base, spec, data, &jobs, checkpoint_root)
}

/// Runs arbitrary (case, degradation-in-objective) pairs in parallel.
pub fn run_runs(
    base: &RunConfig,
    spec: &BatterySpec,
    data: &CaseData,
    jobs: &[(CaseId, bool)],
    checkpoint_root: Option<&Path>,
) -> MatrixResult {
    let runs = jobs
        .par_iter()
        .copied()
        .map(|(case, deg)| {
            let mut rc = base.clone();
            rc.case = case;
            rc.options.degradation_in_objective = deg;
            let dir = checkpoint_root.map(|root| root.join(run_label(case, deg)));
            MatrixRun {
                case,
                degradation_in_objective: deg,
                result: run_case(&rc, spec, data, dir.as_deref()),
            }
        })
        .collect();
    MatrixResult { runs }
}

/// Markets a case is allowed to bid in, for reporting.
pub fn case_markets(case: CaseId) -> Vec<Market> {
    Market::ALL.into_iter().filter(|&m| case.allows(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ModelOptions, SolverChoice, SolverConfig};
    use chrono::{TimeZone, Utc};

    fn toy_config(case: CaseId, days: usize) -> RunConfig {
        RunConfig {
            case,
            start: Utc.with_ymd_and_hms(2022, 6, 1, 0, 0, 0).unwrap(),
            days,
            steps_per_hour: 2,
            hours_per_day: 1,
            options: ModelOptions {
                degradation_in_objective: false,
                relax_step_binaries: true,
                ..Default::default()
            },
            solver: SolverConfig {
                choice: SolverChoice::Micro {
                    max_integer: 24,
                    max_continuous: 200,
                },
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn toy_data(rc: &RunConfig, hz: f64, spot: &[f64]) -> CaseData {
        let horizon = Horizon::with_hours(rc.start, rc.days, rc.steps_per_hour, rc.hours_per_day).unwrap();
        let frequency = FrequencyTrace {
            values: vec![hz; horizon.total_steps()],
        };
        let mut prices = PriceSeries::flat(horizon.total_hours(), 0.0, 5.0, 8.0, 6.0, 0.0, 0.0);
        prices.spot = spot.to_vec();
        CaseData::new(horizon, frequency, prices).unwrap()
    }

    #[test]
    fn market_mix_labels() {
        assert_eq!(MarketMix::from_bids(0.0, 0.0, 0.0), MarketMix::None);
        assert_eq!(MarketMix::from_bids(0.2, 0.5, 0.5), MarketMix::All);
        assert_eq!(MarketMix::from_bids(0.0, 0.8, 0.8), MarketMix::DuDd);
        assert_eq!(MarketMix::from_bids(1e-10, 0.0, 0.3), MarketMix::DD);
    }

    #[test]
    fn soe_carries_over_exactly() {
        let rc = toy_config(CaseId::WoFcr, 2);
        let data = toy_data(&rc, 50.0, &[200.0, 200.0]);
        let spec = BatterySpec::default();
        let r = run_case(&rc, &spec, &data, None).unwrap();
        assert_eq!(r.days.len(), 2);
        assert_eq!(r.days[1].s0, r.days[0].final_soe());
        // day 0 empties the store, so day 1 has nothing left to sell
        assert!((r.days[0].final_soe() - spec.s_min()).abs() < 1e-9);
        assert!(r.days[1].p_ds_bl[0].abs() < 1e-9);
    }

    #[test]
    fn worthless_energy_never_charges() {
        let mut rc = toy_config(CaseId::WoFcr, 1);
        rc.options.degradation_in_objective = true;
        rc.solver.choice = SolverChoice::Micro {
            max_integer: 24,
            max_continuous: 200,
        };
        let data = toy_data(&rc, 50.0, &[0.0]);
        let r = run_case(&rc, &BatterySpec::default(), &data, None).unwrap();
        let d = &r.days[0];
        // idle still ages on the calendar
        assert!(d.profit() < 0.0);
        assert_eq!(d.revenue.r_fcr(), 0.0);
        assert!(d.p_ch_bl[0].abs() < 1e-9);
        // a lower SoE ages slower, so dumping energy at zero price pays
        assert!(d.final_soe() < d.s0);
    }

    #[test]
    fn checkpoints_resume_and_match() {
        let dir = tempfile::tempdir().unwrap();
        let rc = toy_config(CaseId::Multi, 3);
        let data = toy_data(&rc, 49.97, &[30.0, 90.0, 40.0]);
        let spec = BatterySpec::default();
        let full = run_case(&rc, &spec, &data, Some(dir.path())).unwrap();
        // drop the last day and resume
        fs::remove_file(checkpoint_path(dir.path(), 2)).unwrap();
        let resumed = run_case(&rc, &spec, &data, Some(dir.path())).unwrap();
        assert_eq!(full.aggregates.profit, resumed.aggregates.profit);
        let log = fs::read_to_string(dir.path().join("progress.log")).unwrap();
        assert_eq!(log.lines().count(), 4);
        assert!(log.lines().all(|l| l.starts_with("day=")));
    }

    #[test]
    fn matrix_and_dominance() {
        let rc = toy_config(CaseId::Multi, 1);
        let data = toy_data(&rc, 49.98, &[60.0]);
        let spec = BatterySpec::default();
        let m = run_matrix(&rc, &spec, &data, &[CaseId::WoFcr, CaseId::FcrDu, CaseId::Multi], None);
        assert_eq!(m.runs.len(), 6);
        assert_eq!(m.failures().count(), 0);
        for deg in [false, true] {
            let obj = |c| m.get(c, deg).unwrap().days[0].stats.objective;
            assert!(obj(CaseId::Multi) >= obj(CaseId::FcrDu) - 1e-6);
            assert!(obj(CaseId::Multi) >= obj(CaseId::WoFcr) - 1e-6);
        }
        let wo = m.get(CaseId::WoFcr, true).unwrap();
        assert_eq!(wo.aggregates.r_fcr(), 0.0);
        let total: usize = wo.aggregates.market_mix.values().sum();
        assert_eq!(total, wo.aggregates.hours);
        assert_eq!(wo.aggregates.market_mix[&MarketMix::None], total);
    }

    #[test]
    fn failures_keep_partial_results() {
        let mut rc = toy_config(CaseId::Multi, 2);
        rc.solver.choice = SolverChoice::Micro {
            max_integer: 1,
            max_continuous: 200,
        };
        let data = toy_data(&rc, 50.0, &[50.0, 50.0]);
        let err = run_case(&rc, &BatterySpec::default(), &data, None).unwrap_err();
        assert_eq!(err.day, Some(0));
        assert!(err.partial.days.is_empty());
        assert!(err.to_string().contains("too large"));
    }
}
