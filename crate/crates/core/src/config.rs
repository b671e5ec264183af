//! Battery parameters, run configuration and the flat TOML config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use fcr_milp::{Backend, ExternalSolver, Limits, MicroCaps};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("could not read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::InvalidParameter(msg.into())
}

/// The three FCR products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Market {
    N,
    DU,
    DD,
}

impl Market {
    pub const ALL: [Market; 3] = [Market::N, Market::DU, Market::DD];
}

/// Market participation case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "WO_FCR")]
    WoFcr,
    #[serde(rename = "FCR_N")]
    FcrN,
    #[serde(rename = "FCR_DU")]
    FcrDu,
    #[serde(rename = "FCR_DD")]
    FcrDd,
    #[serde(rename = "MULTI")]
    Multi,
}

impl CaseId {
    pub const ALL: [CaseId; 5] = [CaseId::WoFcr, CaseId::FcrN, CaseId::FcrDu, CaseId::FcrDd, CaseId::Multi];

    pub fn allows(self, m: Market) -> bool {
        match self {
            CaseId::WoFcr => false,
            CaseId::FcrN => m == Market::N,
            CaseId::FcrDu => m == Market::DU,
            CaseId::FcrDd => m == Market::DD,
            CaseId::Multi => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::WoFcr => "WO_FCR",
            CaseId::FcrN => "FCR_N",
            CaseId::FcrDu => "FCR_DU",
            CaseId::FcrDd => "FCR_DD",
            CaseId::Multi => "MULTI",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| invalid(format!("unknown case `{s}`")))
    }
}

/// Calendar and cycle aging model constants. SoC enters the calendar
/// quadratics in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgingCoefficients {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    /// J/mol
    pub ea: f64,
    /// J/(mol K)
    pub r_gas: f64,
    /// q1 K² + q2 K + q3 at the operating temperature.
    pub q_poly_at_temp: f64,
    pub q4: f64,
    /// Nominal Ah per unit of capacity-normalised throughput.
    pub ah_per_unit_throughput: f64,
    /// Use `exp(+Ea/(R K))` instead of `exp(-Ea/(R K))`. Audit only.
    pub printed_exponent_sign: bool,
}

impl Default for AgingCoefficients {
    fn default() -> Self {
        Self {
            a: [-1.1, 89.7, 1224.6],
            b: [10.3, -1083.6, 31447.0],
            c: [2.6, -409.5, 22035.0],
            ea: 24_500.0,
            r_gas: 8.314,
            q_poly_at_temp: 0.0008,
            q4: 0.3903,
            ah_per_unit_throughput: 1.5,
            printed_exponent_sign: false,
        }
    }
}

impl AgingCoefficients {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let all = self.a.iter().chain(&self.b).chain(&self.c).chain([
            &self.ea,
            &self.r_gas,
            &self.q_poly_at_temp,
            &self.q4,
            &self.ah_per_unit_throughput,
        ]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(invalid("aging coefficients must be finite"));
        }
        if self.q_poly_at_temp <= 0.0 {
            return Err(invalid("q_poly_at_temp must be positive"));
        }
        if self.r_gas <= 0.0 || self.ah_per_unit_throughput <= 0.0 {
            return Err(invalid("r_gas and ah_per_unit_throughput must be positive"));
        }
        Ok(())
    }
}

/// Physical, economic and aging parameters of the storage unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    /// MWh
    pub capacity: f64,
    /// MW
    pub p_min: f64,
    /// MW
    pub p_max: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub eta_ch: f64,
    pub eta_ds: f64,
    /// MW
    pub min_bid_n: f64,
    pub min_bid_du: f64,
    pub min_bid_dd: f64,
    /// €/MWh of capacity
    pub replacement_cost: f64,
    /// €/yr
    pub om_cost: f64,
    /// Retained capacity fraction at end of life.
    pub eol_retained: f64,
    pub lifetime_years: u32,
    pub interest_rate: f64,
    pub salvage_ratio: f64,
    /// K
    pub temperature: f64,
    pub aging: AgingCoefficients,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            capacity: 1.0,
            p_min: 0.0,
            p_max: 1.0,
            soc_min: 0.1,
            soc_max: 0.9,
            eta_ch: 0.93,
            eta_ds: 0.93,
            min_bid_n: 0.1,
            min_bid_du: 0.1,
            min_bid_dd: 0.1,
            replacement_cost: 137_000.0,
            om_cost: 0.02 * 137_000.0,
            eol_retained: 0.8,
            lifetime_years: 10,
            interest_rate: 0.05,
            salvage_ratio: 0.5,
            temperature: 293.15,
            aging: AgingCoefficients::default(),
        }
    }
}

impl BatterySpec {
    /// Lower SoE bound in MWh.
    pub fn s_min(&self) -> f64 {
        self.soc_min * self.capacity
    }

    /// Upper SoE bound in MWh.
    pub fn s_max(&self) -> f64 {
        self.soc_max * self.capacity
    }

    pub fn min_bid(&self, m: Market) -> f64 {
        match m {
            Market::N => self.min_bid_n,
            Market::DU => self.min_bid_du,
            Market::DD => self.min_bid_dd,
        }
    }

    /// Bid column upper bound: P̄ for FCR-N, 2P̄ for FCR-D.
    pub fn max_bid(&self, m: Market) -> f64 {
        match m {
            Market::N => self.p_max,
            Market::DU | Market::DD => 2.0 * self.p_max,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [
            self.capacity,
            self.p_min,
            self.p_max,
            self.soc_min,
            self.soc_max,
            self.eta_ch,
            self.eta_ds,
            self.min_bid_n,
            self.min_bid_du,
            self.min_bid_dd,
            self.replacement_cost,
            self.om_cost,
            self.eol_retained,
            self.interest_rate,
            self.salvage_ratio,
            self.temperature,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("battery parameters must be finite"));
        }
        if self.capacity <= 0.0 {
            return Err(invalid("capacity must be positive"));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(invalid("need 0 <= soc_min < soc_max <= 1"));
        }
        if !(0.0 <= self.p_min && self.p_min <= self.p_max) || self.p_max <= 0.0 {
            return Err(invalid("need 0 <= p_min <= p_max and p_max > 0"));
        }
        if !(0.0 < self.eta_ch && self.eta_ch <= 1.0 && 0.0 < self.eta_ds && self.eta_ds <= 1.0) {
            return Err(invalid("efficiencies must lie in (0, 1]"));
        }
        if !(0.0 < self.eol_retained && self.eol_retained < 1.0) {
            return Err(invalid("eol_retained must lie in (0, 1)"));
        }
        for m in Market::ALL {
            let b = self.min_bid(m);
            if !(0.0..=2.0 * self.p_max).contains(&b) {
                return Err(invalid(format!("min bid for {m:?} must lie in [0, 2 p_max]")));
            }
        }
        if self.temperature <= 0.0 {
            return Err(invalid("temperature is in kelvin and must be positive"));
        }
        self.aging.validate()
    }
}

/// Battery age used when linearizing the calendar model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgePolicy {
    /// One linearization at `start_age + days / 2`.
    HorizonMidpoint,
    /// Re-linearize every day at `start_age + d`.
    PerDay,
}

/// Switches that change the day model's shape or coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub degradation_in_objective: bool,
    /// Drop per-step charge/discharge binaries. Only sound when p_min = 0.
    pub relax_step_binaries: bool,
    /// Credit ρ^tax on baseline discharge.
    pub discharge_tax: bool,
    /// Apply efficiencies to FCR activation energy as well as baseline flows.
    pub efficiency_on_activation: bool,
    /// Power requirement and endurance rows. Off only for relaxation studies.
    pub requirements: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            degradation_in_objective: true,
            relax_step_binaries: false,
            discharge_tax: true,
            efficiency_on_activation: false,
            requirements: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Micro { max_integer: usize, max_continuous: usize },
    External { command: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub choice: SolverChoice,
    pub time_limit_s: f64,
    pub gap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            choice: SolverChoice::External {
                command: "tools/highs_solve.py {model_file} {solution_file} {time_limit} {gap}".into(),
            },
            time_limit_s: 600.0,
            gap: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn backend(&self) -> Backend {
        match &self.choice {
            SolverChoice::Micro {
                max_integer,
                max_continuous,
            } => Backend::Micro(MicroCaps {
                max_integer: *max_integer,
                max_continuous: *max_continuous,
            }),
            SolverChoice::External { command } => Backend::External(ExternalSolver::new(command.clone())),
        }
    }

    pub fn limits(&self) -> Limits {
        Limits {
            time: Duration::from_secs_f64(self.time_limit_s),
            gap: self.gap,
        }
    }
}

/// Where the frequency and price series come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Files { frequency: PathBuf, prices: PathBuf },
    Synthetic { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: CaseId,
    pub start: DateTime<Utc>,
    pub days: usize,
    pub steps_per_hour: usize,
    pub hours_per_day: usize,
    /// MWh; `None` means half the capacity.
    pub initial_soe: Option<f64>,
    /// Battery age at the first step, days.
    pub start_age_days: f64,
    pub age_policy: AgePolicy,
    /// €/MWh
    pub grid_tariff: f64,
    /// €/MWh
    pub tax: f64,
    /// Overrides the annuity factor α in the NPV; `None` means α = i.
    pub npv_alpha: Option<f64>,
    /// Cap on the cycle-fit error, full-scale relative.
    pub cycle_fit_tolerance: f64,
    pub max_gap_seconds: u32,
    pub options: ModelOptions,
    pub solver: SolverConfig,
    pub data: DataSource,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: CaseId::Multi,
            start: Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(),
            days: 1,
            steps_per_hour: 60,
            hours_per_day: 24,
            initial_soe: None,
            start_age_days: 0.0,
            age_policy: AgePolicy::HorizonMidpoint,
            grid_tariff: 5.0,
            tax: 0.0,
            npv_alpha: None,
            cycle_fit_tolerance: 0.10,
            max_gap_seconds: crate::ingest::DEFAULT_MAX_GAP_SECONDS,
            options: ModelOptions::default(),
            solver: SolverConfig::default(),
            data: DataSource::Synthetic { seed: 1 },
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn initial_soe(&self, spec: &BatterySpec) -> f64 {
        self.initial_soe.unwrap_or(0.5 * spec.capacity)
    }

    pub fn validate(&self, spec: &BatterySpec) -> Result<(), ConfigError> {
        spec.validate()?;
        if self.days == 0 {
            return Err(invalid("days must be at least 1"));
        }
        if self.steps_per_hour == 0 || 3600 % self.steps_per_hour != 0 {
            return Err(invalid("steps_per_hour must divide 3600"));
        }
        if self.hours_per_day == 0 || self.hours_per_day > 24 {
            return Err(invalid("hours_per_day must lie in 1..=24"));
        }
        let s0 = self.initial_soe(spec);
        if !(spec.s_min()..=spec.s_max()).contains(&s0) {
            return Err(invalid(format!(
                "initial_soe {s0} outside [{}, {}]",
                spec.s_min(),
                spec.s_max()
            )));
        }
        if !(self.start_age_days >= 0.0 && self.start_age_days.is_finite()) {
            return Err(invalid("start_age_days must be non-negative"));
        }
        if !self.grid_tariff.is_finite() || !self.tax.is_finite() {
            return Err(invalid("grid_tariff and tax must be finite"));
        }
        if let Some(a) = self.npv_alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(invalid("npv_alpha must be positive"));
            }
        }
        if !(self.cycle_fit_tolerance > 0.0) {
            return Err(invalid("cycle_fit_tolerance must be positive"));
        }
        if self.options.relax_step_binaries && spec.p_min > 0.0 {
            return Err(invalid("relax_step_binaries requires p_min = 0"));
        }
        if !(self.solver.time_limit_s > 0.0 && self.solver.time_limit_s.is_finite()) || !(self.solver.gap >= 0.0) {
            return Err(invalid("solver time limit must be positive and gap non-negative"));
        }
        Ok(())
    }
}

/// Flat key/value config file. Every key is optional; omitted keys take the
/// defaults of [`RunConfig`] and [`BatterySpec`]. Units: MW, MWh, €/MWh,
/// €/MW, K, days, seconds.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub case: Option<String>,
    pub start: Option<DateTime<Utc>>,
    pub days: Option<usize>,
    pub steps_per_hour: Option<usize>,
    pub hours_per_day: Option<usize>,
    pub initial_soe: Option<f64>,
    pub start_age_days: Option<f64>,
    pub age_policy: Option<AgePolicy>,
    pub grid_tariff: Option<f64>,
    pub tax: Option<f64>,
    pub npv_alpha: Option<f64>,
    pub cycle_fit_tolerance: Option<f64>,
    pub max_gap_seconds: Option<u32>,

    pub degradation_in_objective: Option<bool>,
    pub relax_step_binaries: Option<bool>,
    pub discharge_tax: Option<bool>,
    pub efficiency_on_activation: Option<bool>,

    /// "external" or "micro".
    pub solver: Option<String>,
    pub solver_command: Option<String>,
    pub time_limit_s: Option<f64>,
    pub mip_gap: Option<f64>,
    pub micro_max_integer: Option<usize>,
    pub micro_max_continuous: Option<usize>,

    pub frequency_file: Option<PathBuf>,
    pub price_file: Option<PathBuf>,
    pub synthetic_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,

    pub capacity: Option<f64>,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub soc_min: Option<f64>,
    pub soc_max: Option<f64>,
    pub eta_ch: Option<f64>,
    pub eta_ds: Option<f64>,
    pub min_bid_n: Option<f64>,
    pub min_bid_du: Option<f64>,
    pub min_bid_dd: Option<f64>,
    pub replacement_cost: Option<f64>,
    pub om_cost: Option<f64>,
    pub eol_retained: Option<f64>,
    pub lifetime_years: Option<u32>,
    pub interest_rate: Option<f64>,
    pub salvage_ratio: Option<f64>,
    pub temperature: Option<f64>,
    pub calendar_a: Option<[f64; 3]>,
    pub calendar_b: Option<[f64; 3]>,
    pub calendar_c: Option<[f64; 3]>,
    pub activation_energy: Option<f64>,
    pub r_gas: Option<f64>,
    pub q_poly_at_temp: Option<f64>,
    pub q4: Option<f64>,
    pub ah_per_unit_throughput: Option<f64>,
    pub printed_exponent_sign: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Applies the file over the defaults and validates the result. Relative
    /// data paths are resolved against `base_dir`.
    pub fn resolve(self, base_dir: Option<&Path>) -> Result<(RunConfig, BatterySpec), ConfigError> {
        let mut rc = RunConfig::default();
        let mut b = BatterySpec::default();
        let rel = |p: PathBuf| match base_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p,
        };

        if let Some(c) = self.case {
            rc.case = c.parse()?;
        }
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(rc.start, self.start);
        set!(rc.days, self.days);
        set!(rc.steps_per_hour, self.steps_per_hour);
        set!(rc.hours_per_day, self.hours_per_day);
        rc.initial_soe = self.initial_soe;
        set!(rc.start_age_days, self.start_age_days);
        set!(rc.age_policy, self.age_policy);
        set!(rc.grid_tariff, self.grid_tariff);
        set!(rc.tax, self.tax);
        rc.npv_alpha = self.npv_alpha;
        set!(rc.cycle_fit_tolerance, self.cycle_fit_tolerance);
        set!(rc.max_gap_seconds, self.max_gap_seconds);
        set!(rc.options.degradation_in_objective, self.degradation_in_objective);
        set!(rc.options.relax_step_binaries, self.relax_step_binaries);
        set!(rc.options.discharge_tax, self.discharge_tax);
        set!(rc.options.efficiency_on_activation, self.efficiency_on_activation);

        set!(rc.solver.time_limit_s, self.time_limit_s);
        set!(rc.solver.gap, self.mip_gap);
        match self.solver.as_deref() {
            None | Some("external") => {
                if let Some(cmd) = self.solver_command {
                    rc.solver.choice = SolverChoice::External { command: cmd };
                }
            }
            Some("micro") => {
                let caps = MicroCaps::default();
                rc.solver.choice = SolverChoice::Micro {
                    max_integer: self.micro_max_integer.unwrap_or(caps.max_integer),
                    max_continuous: self.micro_max_continuous.unwrap_or(caps.max_continuous),
                };
            }
            Some(other) => return Err(invalid(format!("unknown solver `{other}`"))),
        }

        rc.data = match (self.frequency_file, self.price_file, self.synthetic_seed) {
            (Some(f), Some(p), None) => DataSource::Files {
                frequency: rel(f),
                prices: rel(p),
            },
            (None, None, Some(seed)) => DataSource::Synthetic { seed },
            (None, None, None) => rc.data,
            _ => {
                return Err(invalid(
                    "give either both frequency_file and price_file, or synthetic_seed",
                ))
            }
        };
        if let Some(o) = self.output_dir {
            rc.output_dir = rel(o);
        }

        set!(b.capacity, self.capacity);
        set!(b.p_min, self.p_min);
        set!(b.p_max, self.p_max);
        set!(b.soc_min, self.soc_min);
        set!(b.soc_max, self.soc_max);
        set!(b.eta_ch, self.eta_ch);
        set!(b.eta_ds, self.eta_ds);
        set!(b.min_bid_n, self.min_bid_n);
        set!(b.min_bid_du, self.min_bid_du);
        set!(b.min_bid_dd, self.min_bid_dd);
        set!(b.replacement_cost, self.replacement_cost);
        set!(b.om_cost, self.om_cost);
        set!(b.eol_retained, self.eol_retained);
        set!(b.lifetime_years, self.lifetime_years);
        set!(b.interest_rate, self.interest_rate);
        set!(b.salvage_ratio, self.salvage_ratio);
        set!(b.temperature, self.temperature);
        set!(b.aging.a, self.calendar_a);
        set!(b.aging.b, self.calendar_b);
        set!(b.aging.c, self.calendar_c);
        set!(b.aging.ea, self.activation_energy);
        set!(b.aging.r_gas, self.r_gas);
        set!(b.aging.q_poly_at_temp, self.q_poly_at_temp);
        set!(b.aging.q4, self.q4);
        set!(b.aging.ah_per_unit_throughput, self.ah_per_unit_throughput);
        set!(b.aging.printed_exponent_sign, self.printed_exponent_sign);

        rc.validate(&b)?;
        Ok((rc, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let spec = BatterySpec::default();
        RunConfig::default().validate(&spec).unwrap();
        assert!((spec.s_min() - 0.1).abs() < 1e-15);
        assert!((spec.s_max() - 0.9).abs() < 1e-15);
        assert_eq!(spec.max_bid(Market::N), 1.0);
        assert_eq!(spec.max_bid(Market::DD), 2.0);
    }

    #[test]
    fn case_restrictions() {
        assert!(Market::ALL.iter().all(|&m| !CaseId::WoFcr.allows(m)));
        assert!(Market::ALL.iter().all(|&m| CaseId::Multi.allows(m)));
        assert!(CaseId::FcrDu.allows(Market::DU) && !CaseId::FcrDu.allows(Market::N));
        assert_eq!("fcr-dd".parse::<CaseId>().unwrap(), CaseId::FcrDd);
        assert!("FCR_X".parse::<CaseId>().is_err());
    }

    #[test]
    fn spec_invariants_rejected() {
        let mut s = BatterySpec {
            soc_min: 0.9,
            soc_max: 0.1,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        s = BatterySpec {
            min_bid_dd: 3.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        s = BatterySpec {
            eta_ch: 1.2,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn initial_soe_must_be_in_bounds() {
        let rc = RunConfig {
            initial_soe: Some(0.95),
            ..Default::default()
        };
        assert!(rc.validate(&BatterySpec::default()).is_err());
    }

    #[test]
    fn flat_file_round_trip() {
        let text = r#"
            case = "FCR_N"
            days = 3
            steps_per_hour = 4
            degradation_in_objective = false
            solver = "micro"
            micro_max_integer = 40
            synthetic_seed = 7
            capacity = 2.0
            p_max = 2.0
            initial_soe = 1.0
            start = "2022-03-01T00:00:00Z"
        "#;
        let (rc, b) = ConfigFile::parse(text).unwrap().resolve(None).unwrap();
        assert_eq!(rc.case, CaseId::FcrN);
        assert_eq!(rc.days, 3);
        assert!(!rc.options.degradation_in_objective);
        assert_eq!(
            rc.solver.choice,
            SolverChoice::Micro {
                max_integer: 40,
                max_continuous: 200
            }
        );
        assert_eq!(rc.data, DataSource::Synthetic { seed: 7 });
        assert_eq!(b.capacity, 2.0);
        assert_eq!(rc.start.format("%m-%d").to_string(), "03-01");
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(matches!(ConfigFile::parse("capacitty = 1.0"), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn half_specified_files_rejected() {
        let f = ConfigFile::parse("frequency_file = \"f.csv\"").unwrap();
        assert!(f.resolve(None).is_err());
    }
}
