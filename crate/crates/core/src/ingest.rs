//! Frequency and price ingest, plus seeded synthetic generators.
//!
//! Frequency is per timestep, prices are hourly. Both CSV schemas use
//! ISO-8601 UTC timestamps (`2022-01-01T00:00:00Z`).

use std::fs::File;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Samples outside this window are treated as corrupt data.
pub const PLAUSIBLE_HZ: (f64, f64) = (45.0, 55.0);
pub const DEFAULT_MAX_GAP_SECONDS: u32 = 300;

const FREQUENCY_HEADER: [&str; 2] = ["timestamp", "hz"];
const PRICE_HEADER: [&str; 7] = ["hour_start", "spot", "fcr_n", "fcr_du", "fcr_dd", "up_reg", "down_reg"];
const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("gap too long starting at {0}")]
    GapTooLong(String),
    #[error("sample out of plausible range at {0}")]
    OutOfRangeSample(String),
    #[error("missing price row for hour {0}")]
    MissingHour(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("series length {got} does not match grid length {expected}")]
    Alignment { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One day's timestep index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub day_index: usize,
    pub steps_per_hour: usize,
    pub step_seconds: u32,
    pub hours: usize,
}

impl TimeGrid {
    pub fn new(day_index: usize, steps_per_hour: usize, hours: usize) -> Result<Self, IngestError> {
        if steps_per_hour == 0 || 3600 % steps_per_hour != 0 {
            return Err(IngestError::InvalidParameter(format!(
                "steps_per_hour must divide 3600, got {steps_per_hour}"
            )));
        }
        if hours == 0 {
            return Err(IngestError::InvalidParameter("a day needs at least one hour".into()));
        }
        Ok(Self {
            day_index,
            steps_per_hour,
            step_seconds: (3600 / steps_per_hour) as u32,
            hours,
        })
    }

    /// Full 24-hour day.
    pub fn day(day_index: usize, steps_per_hour: usize) -> Result<Self, IngestError> {
        Self::new(day_index, steps_per_hour, 24)
    }

    pub fn len(&self) -> usize {
        self.steps_per_hour * self.hours
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hour_of_step(&self, t: usize) -> usize {
        t / self.steps_per_hour
    }

    pub fn steps_of_hour(&self, h: usize) -> Range<usize> {
        h * self.steps_per_hour..(h + 1) * self.steps_per_hour
    }

    /// Step length in hours.
    pub fn step_hours(&self) -> f64 {
        self.step_seconds as f64 / 3600.0
    }

    pub fn step_days(&self) -> f64 {
        self.step_seconds as f64 / 86_400.0
    }
}

/// A multi-day horizon starting at `start` with `hours_per_day` hours per day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    pub start: DateTime<Utc>,
    pub days: usize,
    pub steps_per_hour: usize,
    pub hours_per_day: usize,
}

impl Horizon {
    pub fn new(start: DateTime<Utc>, days: usize, steps_per_hour: usize) -> Result<Self, IngestError> {
        Self::with_hours(start, days, steps_per_hour, 24)
    }

    pub fn with_hours(
        start: DateTime<Utc>,
        days: usize,
        steps_per_hour: usize,
        hours_per_day: usize,
    ) -> Result<Self, IngestError> {
        TimeGrid::new(0, steps_per_hour, hours_per_day)?;
        if days == 0 {
            return Err(IngestError::InvalidParameter("horizon needs at least one day".into()));
        }
        Ok(Self {
            start,
            days,
            steps_per_hour,
            hours_per_day,
        })
    }

    pub fn day_grid(&self, day: usize) -> TimeGrid {
        TimeGrid::new(day, self.steps_per_hour, self.hours_per_day).expect("validated at construction")
    }

    pub fn step_seconds(&self) -> u32 {
        (3600 / self.steps_per_hour) as u32
    }

    pub fn total_steps(&self) -> usize {
        self.days * self.hours_per_day * self.steps_per_hour
    }

    pub fn total_hours(&self) -> usize {
        self.days * self.hours_per_day
    }

    pub fn steps_per_day(&self) -> usize {
        self.hours_per_day * self.steps_per_hour
    }

    pub fn step_time(&self, k: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(k as i64 * self.step_seconds() as i64)
    }

    pub fn hour_time(&self, h: usize) -> DateTime<Utc> {
        self.start + Duration::hours(h as i64)
    }
}

pub fn format_ts(t: DateTime<Utc>) -> String {
    t.format(TS_FORMAT).to_string()
}

pub fn parse_ts(s: &str) -> Result<DateTime<Utc>, IngestError> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| IngestError::SchemaMismatch(format!("bad timestamp `{s}`: {e}")))
}

/// Frequency samples in Hz, one per timestep over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTrace {
    pub values: Vec<f64>,
}

impl FrequencyTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn day(&self, horizon: &Horizon, day: usize) -> &[f64] {
        let n = horizon.steps_per_day();
        &self.values[day * n..(day + 1) * n]
    }

    pub fn check(&self, expected_len: usize) -> Result<(), IngestError> {
        if self.values.len() != expected_len {
            return Err(IngestError::Alignment {
                expected: expected_len,
                got: self.values.len(),
            });
        }
        if let Some(k) = self
            .values
            .iter()
            .position(|v| !v.is_finite() || *v < PLAUSIBLE_HZ.0 || *v > PLAUSIBLE_HZ.1)
        {
            return Err(IngestError::OutOfRangeSample(format!("step {k}")));
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingFile(path.to_path_buf()),
        _ => IngestError::Io(e),
    })
}

fn check_header(reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<(), IngestError> {
    let header = reader.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(IngestError::SchemaMismatch(format!(
            "expected header `{}`, got `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn parse_num(field: Option<&str>, what: &str, line: u64) -> Result<f64, IngestError> {
    let s = field.ok_or_else(|| IngestError::SchemaMismatch(format!("line {line}: missing {what}")))?;
    s.trim()
        .parse::<f64>()
        .map_err(|_| IngestError::SchemaMismatch(format!("line {line}: bad {what} `{s}`")))
}

/// Loads `timestamp,hz` rows onto the horizon's timestep grid.
///
/// Samples are bucketed into `[t_k, t_k + Δt)` and averaged, so one row per
/// timestep reproduces the file exactly. Steps without samples are filled by
/// holding the previous value when the run of empty steps spans at most
/// `max_gap_seconds`; a longer run, or a gap at the very start, is an error.
/// Rows outside the horizon are ignored.
pub fn load_frequency(path: &Path, horizon: &Horizon, max_gap_seconds: u32) -> Result<FrequencyTrace, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    check_header(&mut reader, &FREQUENCY_HEADER)?;
    let n = horizon.total_steps();
    let step = horizon.step_seconds() as i64;
    let mut sum = vec![0.0; n];
    let mut count = vec![0u32; n];
    let mut last_ts: Option<DateTime<Utc>> = None;
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 2 {
            return Err(IngestError::SchemaMismatch(format!("line {line}: expected 2 fields")));
        }
        let ts = parse_ts(&rec[0])?;
        let hz = parse_num(rec.get(1), "hz", line)?;
        if !hz.is_finite() || hz < PLAUSIBLE_HZ.0 || hz > PLAUSIBLE_HZ.1 {
            return Err(IngestError::OutOfRangeSample(format_ts(ts)));
        }
        if let Some(prev) = last_ts {
            if ts <= prev {
                return Err(IngestError::SchemaMismatch(format!(
                    "line {line}: timestamps must be strictly increasing"
                )));
            }
        }
        last_ts = Some(ts);
        let offset = (ts - horizon.start).num_seconds();
        if offset < 0 {
            continue;
        }
        let k = (offset / step) as usize;
        if k >= n {
            continue;
        }
        sum[k] += hz;
        count[k] += 1;
    }

    let max_missing = (max_gap_seconds as i64 / step) as usize;
    let mut values = Vec::with_capacity(n);
    let mut run = 0usize;
    for k in 0..n {
        if count[k] > 0 {
            values.push(sum[k] / count[k] as f64);
            run = 0;
            continue;
        }
        run += 1;
        match values.last().copied() {
            Some(prev) if run <= max_missing => values.push(prev),
            _ => return Err(IngestError::GapTooLong(format_ts(horizon.step_time(k + 1 - run)))),
        }
    }
    Ok(FrequencyTrace { values })
}

pub fn write_frequency(path: &Path, horizon: &Horizon, trace: &FrequencyTrace) -> Result<(), IngestError> {
    trace.check(horizon.total_steps())?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FREQUENCY_HEADER)?;
    for (k, v) in trace.values.iter().enumerate() {
        w.write_record([format_ts(horizon.step_time(k)), format!("{v}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Hourly prices over the horizon plus the two scalar charges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    /// €/MWh, may be negative.
    pub spot: Vec<f64>,
    /// Capacity prices, €/MW per hour, non-negative.
    pub fcr_n: Vec<f64>,
    pub fcr_du: Vec<f64>,
    pub fcr_dd: Vec<f64>,
    /// Regulation energy prices, €/MWh.
    pub up_reg: Vec<f64>,
    pub down_reg: Vec<f64>,
    /// €/MWh
    pub grid_tariff: f64,
    /// €/MWh
    pub tax: f64,
}

impl PriceSeries {
    pub fn hours(&self) -> usize {
        self.spot.len()
    }

    /// Constant prices for `hours` hours.
    pub fn flat(hours: usize, spot: f64, fcr_n: f64, fcr_du: f64, fcr_dd: f64, up_reg: f64, down_reg: f64) -> Self {
        Self {
            spot: vec![spot; hours],
            fcr_n: vec![fcr_n; hours],
            fcr_du: vec![fcr_du; hours],
            fcr_dd: vec![fcr_dd; hours],
            up_reg: vec![up_reg; hours],
            down_reg: vec![down_reg; hours],
            grid_tariff: 0.0,
            tax: 0.0,
        }
    }

    pub fn slice(&self, range: Range<usize>) -> PriceSeries {
        PriceSeries {
            spot: self.spot[range.clone()].to_vec(),
            fcr_n: self.fcr_n[range.clone()].to_vec(),
            fcr_du: self.fcr_du[range.clone()].to_vec(),
            fcr_dd: self.fcr_dd[range.clone()].to_vec(),
            up_reg: self.up_reg[range.clone()].to_vec(),
            down_reg: self.down_reg[range].to_vec(),
            grid_tariff: self.grid_tariff,
            tax: self.tax,
        }
    }

    pub fn day(&self, horizon: &Horizon, day: usize) -> PriceSeries {
        let h = horizon.hours_per_day;
        self.slice(day * h..(day + 1) * h)
    }

    pub fn check(&self) -> Result<(), IngestError> {
        let n = self.spot.len();
        let series = [&self.fcr_n, &self.fcr_du, &self.fcr_dd, &self.up_reg, &self.down_reg];
        if series.iter().any(|s| s.len() != n) {
            return Err(IngestError::SchemaMismatch("price series lengths differ".into()));
        }
        let all = [&self.spot, &self.fcr_n, &self.fcr_du, &self.fcr_dd, &self.up_reg, &self.down_reg];
        if all.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(IngestError::SchemaMismatch("non-finite price".into()));
        }
        for (name, s) in [("fcr_n", &self.fcr_n), ("fcr_du", &self.fcr_du), ("fcr_dd", &self.fcr_dd)] {
            if let Some(h) = s.iter().position(|&v| v < 0.0) {
                return Err(IngestError::SchemaMismatch(format!("negative capacity price {name} at hour {h}")));
            }
        }
        if !self.grid_tariff.is_finite() || !self.tax.is_finite() {
            return Err(IngestError::InvalidParameter("tariff and tax must be finite".into()));
        }
        Ok(())
    }
}

/// Loads hourly prices. Rows must fall on whole hours from `start`; rows
/// outside `[start, start + horizon_hours)` are ignored. Tariff and tax are
/// supplied by the caller (they come from the run configuration).
pub fn load_prices(
    path: &Path,
    start: DateTime<Utc>,
    horizon_hours: usize,
    grid_tariff: f64,
    tax: f64,
) -> Result<PriceSeries, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    check_header(&mut reader, &PRICE_HEADER)?;
    let mut rows: Vec<Option<[f64; 6]>> = vec![None; horizon_hours];
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != PRICE_HEADER.len() {
            return Err(IngestError::SchemaMismatch(format!("line {line}: expected 7 fields")));
        }
        let ts = parse_ts(&rec[0])?;
        let offset = (ts - start).num_seconds();
        if offset % 3600 != 0 {
            return Err(IngestError::SchemaMismatch(format!("line {line}: `{}` is not on the hour grid", &rec[0])));
        }
        if offset < 0 || offset / 3600 >= horizon_hours as i64 {
            continue;
        }
        let h = (offset / 3600) as usize;
        let mut vals = [0.0; 6];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = parse_num(rec.get(i + 1), PRICE_HEADER[i + 1], line)?;
            if !v.is_finite() {
                return Err(IngestError::SchemaMismatch(format!("line {line}: non-finite {}", PRICE_HEADER[i + 1])));
            }
        }
        if vals[1..4].iter().any(|&v| v < 0.0) {
            return Err(IngestError::SchemaMismatch(format!("line {line}: capacity price is negative")));
        }
        if rows[h].replace(vals).is_some() {
            return Err(IngestError::SchemaMismatch(format!("line {line}: duplicate hour {h}")));
        }
    }
    let mut p = PriceSeries {
        spot: Vec::with_capacity(horizon_hours),
        fcr_n: Vec::with_capacity(horizon_hours),
        fcr_du: Vec::with_capacity(horizon_hours),
        fcr_dd: Vec::with_capacity(horizon_hours),
        up_reg: Vec::with_capacity(horizon_hours),
        down_reg: Vec::with_capacity(horizon_hours),
        grid_tariff,
        tax,
    };
    for (h, row) in rows.into_iter().enumerate() {
        let [s, n, du, dd, ur, dr] = row.ok_or(IngestError::MissingHour(h))?;
        p.spot.push(s);
        p.fcr_n.push(n);
        p.fcr_du.push(du);
        p.fcr_dd.push(dd);
        p.up_reg.push(ur);
        p.down_reg.push(dr);
    }
    p.check()?;
    Ok(p)
}

pub fn write_prices(path: &Path, start: DateTime<Utc>, prices: &PriceSeries) -> Result<(), IngestError> {
    prices.check()?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PRICE_HEADER)?;
    for h in 0..prices.hours() {
        let ts = format_ts(start + Duration::hours(h as i64));
        w.write_record([
            ts,
            format!("{}", prices.spot[h]),
            format!("{}", prices.fcr_n[h]),
            format!("{}", prices.fcr_du[h]),
            format!("{}", prices.fcr_dd[h]),
            format!("{}", prices.up_reg[h]),
            format!("{}", prices.down_reg[h]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean-reverting (Ornstein-Uhlenbeck) frequency model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthFrequencyParams {
    pub mean_hz: f64,
    /// Reversion rate in 1/s.
    pub reversion_rate: f64,
    /// Stationary standard deviation in Hz; zero gives a constant trace.
    pub volatility_hz: f64,
    pub clamp_hz: (f64, f64),
}

impl Default for SynthFrequencyParams {
    fn default() -> Self {
        Self {
            mean_hz: 50.0,
            reversion_rate: 1.0 / 300.0,
            volatility_hz: 0.045,
            clamp_hz: (49.0, 51.0),
        }
    }
}

/// Exact OU discretisation sampled at the horizon's step length, started at
/// the mean. Deterministic for a given seed.
pub fn synth_frequency(seed: u64, horizon: &Horizon, params: &SynthFrequencyParams) -> Result<FrequencyTrace, IngestError> {
    let p = params;
    let ok = p.mean_hz.is_finite()
        && p.reversion_rate > 0.0
        && p.volatility_hz >= 0.0
        && p.clamp_hz.0 < p.clamp_hz.1
        && p.clamp_hz.0 <= p.mean_hz
        && p.mean_hz <= p.clamp_hz.1
        && p.clamp_hz.0 >= PLAUSIBLE_HZ.0
        && p.clamp_hz.1 <= PLAUSIBLE_HZ.1;
    if !ok {
        return Err(IngestError::InvalidParameter(format!("synthetic frequency parameters {p:?}")));
    }
    let n = horizon.total_steps();
    let decay = (-p.reversion_rate * horizon.step_seconds() as f64).exp();
    let innovation = p.volatility_hz * (1.0 - decay * decay).sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = p.mean_hz;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(f.clamp(p.clamp_hz.0, p.clamp_hz.1));
        let z: f64 = normal.sample(&mut rng);
        f = p.mean_hz + (f - p.mean_hz) * decay + innovation * z;
    }
    Ok(FrequencyTrace { values })
}

/// Shape of the synthetic price generator (€/MWh and €/MW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthPriceParams {
    pub spot_mean: f64,
    pub spot_daily_amplitude: f64,
    pub spot_noise: f64,
    pub fcr_n_mean: f64,
    pub fcr_du_mean: f64,
    pub fcr_dd_mean: f64,
    /// Relative spread of capacity prices around their mean.
    pub capacity_noise: f64,
    pub regulation_spread: f64,
}

impl Default for SynthPriceParams {
    fn default() -> Self {
        Self {
            spot_mean: 120.0,
            spot_daily_amplitude: 60.0,
            spot_noise: 15.0,
            fcr_n_mean: 25.0,
            fcr_du_mean: 60.0,
            fcr_dd_mean: 35.0,
            capacity_noise: 0.4,
            regulation_spread: 20.0,
        }
    }
}

/// Seeded hourly prices: a two-peak daily spot profile with noise, log-normal
/// style capacity prices and regulation prices spread around spot.
pub fn synth_prices(
    seed: u64,
    hours: usize,
    params: &SynthPriceParams,
    grid_tariff: f64,
    tax: f64,
) -> Result<PriceSeries, IngestError> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    let mut p = PriceSeries::flat(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    p.grid_tariff = grid_tariff;
    p.tax = tax;
    let tau = std::f64::consts::TAU;
    for h in 0..hours {
        let hod = (h % 24) as f64;
        // morning and evening peaks
        let shape = 0.6 * (tau * (hod - 3.0) / 24.0).sin() - 0.4 * (2.0 * tau * (hod - 1.5) / 24.0).cos();
        let mut z = || -> f64 { normal.sample(&mut rng) };
        let spot = params.spot_mean + params.spot_daily_amplitude * shape + params.spot_noise * z();
        let cap = |mean: f64, z: f64| (mean * (params.capacity_noise * z).exp()).max(0.0);
        let fcr_n = cap(params.fcr_n_mean, z());
        let fcr_du = cap(params.fcr_du_mean, z());
        let fcr_dd = cap(params.fcr_dd_mean, z());
        let up = spot + params.regulation_spread * z().abs();
        let down = spot - params.regulation_spread * z().abs();
        p.spot.push(spot);
        p.fcr_n.push(fcr_n);
        p.fcr_du.push(fcr_du);
        p.fcr_dd.push(fcr_dd);
        p.up_reg.push(up);
        p.down_reg.push(down);
    }
    p.check()?;
    Ok(p)
}

/// Writes rows of text with a trailing newline. Used by the CSV audit dumps.
pub(crate) fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), std::io::Error> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    for l in lines {
        writeln!(f, "{l}")?;
    }
    f.flush()
}
