//! Calendar and cycle aging: the nonlinear step models, their MILP
//! linearizations, the battery NPV that prices one percent of capacity loss,
//! and exact post-calculation over a realized trajectory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{AgingCoefficients, BatterySpec};
use crate::ingest::write_lines;

/// SoC fractions where the calendar quadratic switches.
pub const CALENDAR_BREAKPOINTS: [f64; 4] = [0.0, 0.5, 0.7, 1.0];
pub const CYCLE_FIT_SAMPLES: usize = 50;
pub const CYCLE_FIT_RANGE: (f64, f64) = (0.1, 1.0);

#[derive(Debug, thiserror::Error)]
pub enum DegradationError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cycle fit error {error:.4} exceeds tolerance {tolerance:.4}")]
    FitToleranceExceeded { error: f64, tolerance: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryNpv {
    /// €
    pub value: f64,
    /// € for the whole pack.
    pub replacement_cost: f64,
    /// €/yr
    pub om_cost: f64,
    pub lifetime_years: u32,
    pub interest_rate: f64,
    pub salvage_ratio: f64,
    pub alpha: f64,
    /// Retained capacity fraction at end of life.
    pub eol_retained: f64,
}

impl BatteryNpv {
    /// € per percentage point of capacity loss.
    pub fn eur_per_percent(&self) -> f64 {
        self.value / (100.0 * (1.0 - self.eol_retained))
    }
}

/// Discounted salvage-adjusted replacement plus discounted O&M annuity.
/// `alpha` defaults to the interest rate.
pub fn battery_npv(spec: &BatterySpec, alpha: Option<f64>) -> Result<BatteryNpv, DegradationError> {
    let i = spec.interest_rate;
    let alpha = alpha.unwrap_or(i);
    if spec.lifetime_years < 1 {
        return Err(DegradationError::InvalidParameter("lifetime must be at least one year".into()));
    }
    if !(i > 0.0 && i.is_finite()) || !(alpha > 0.0 && alpha.is_finite()) {
        return Err(DegradationError::InvalidParameter("interest rate and alpha must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.salvage_ratio) {
        return Err(DegradationError::InvalidParameter("salvage ratio must lie in [0, 1]".into()));
    }
    let c_rep = spec.replacement_cost * spec.capacity;
    let g = (1.0 + i).powi(spec.lifetime_years as i32);
    let value = (1.0 - spec.salvage_ratio) * c_rep / g + spec.om_cost * (g - 1.0) / (alpha * g);
    Ok(BatteryNpv {
        value,
        replacement_cost: c_rep,
        om_cost: spec.om_cost,
        lifetime_years: spec.lifetime_years,
        interest_rate: i,
        salvage_ratio: spec.salvage_ratio,
        alpha,
        eol_retained: spec.eol_retained,
    })
}

/// Calendar quadratic for the span containing `soc_frac`; the argument is
/// in percent.
pub fn calendar_g(soc_frac: f64, coeffs: &AgingCoefficients) -> f64 {
    let k = span_of(soc_frac);
    quad(span_coeffs(coeffs, k), 100.0 * soc_frac)
}

fn span_of(soc_frac: f64) -> usize {
    if soc_frac <= 0.5 {
        0
    } else if soc_frac <= 0.7 {
        1
    } else {
        2
    }
}

fn span_coeffs(coeffs: &AgingCoefficients, k: usize) -> [f64; 3] {
    [coeffs.a, coeffs.b, coeffs.c][k]
}

fn quad(q: [f64; 3], x: f64) -> f64 {
    q[0] * x * x + q[1] * x + q[2]
}

pub fn arrhenius(temp: f64, coeffs: &AgingCoefficients) -> f64 {
    let x = coeffs.ea / (coeffs.r_gas * temp);
    if coeffs.printed_exponent_sign {
        x.exp()
    } else {
        (-x).exp()
    }
}

fn sqrt_time_increment(age_days: f64, dt_days: f64) -> f64 {
    (age_days + dt_days).sqrt() - age_days.sqrt()
}

/// Percent capacity lost to calendar aging over one step of `dt` seconds
/// starting at `age_days`.
pub fn calendar_aging_step(
    soe: f64,
    temp: f64,
    age_days: f64,
    dt: f64,
    coeffs: &AgingCoefficients,
    capacity: f64,
) -> f64 {
    debug_assert!(age_days >= 0.0 && dt >= 0.0);
    calendar_g(soe / capacity, coeffs) * arrhenius(temp, coeffs) * sqrt_time_increment(age_days, dt / 86_400.0)
}

/// Percent capacity lost to cycling over one step of `dt` seconds.
pub fn cycle_aging_step(p_ch: f64, p_ds: f64, dt: f64, coeffs: &AgingCoefficients, capacity: f64) -> f64 {
    debug_assert!(p_ch >= 0.0 && p_ds >= 0.0);
    let p = p_ch + p_ds;
    let c_rate = p / capacity;
    let throughput = p * dt / 3600.0 / capacity;
    coeffs.q_poly_at_temp * (coeffs.q4 * c_rate).exp() * throughput * coeffs.ah_per_unit_throughput
}

/// One secant of the calendar cost, `cost = slope * soe + intercept` on
/// `[lo, hi]` MWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalendarSegment {
    pub lo: f64,
    pub hi: f64,
    /// €/MWh per step
    pub slope: f64,
    /// € per step
    pub intercept: f64,
    /// Largest gap between the secant and the quadratic on the span, € per step.
    pub max_sag: f64,
}

impl CalendarSegment {
    pub fn eval(&self, soe: f64) -> f64 {
        self.slope * soe + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalendarLinearization {
    pub segments: [CalendarSegment; 3],
    pub age_days: f64,
    pub dt_seconds: f64,
}

impl CalendarLinearization {
    /// Cheapest secant among the spans containing `soe`, which is what the
    /// span-selection rows let an optimizer pick.
    pub fn eval(&self, soe: f64) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.lo <= soe && soe <= s.hi)
            .map(|s| s.eval(soe))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn zero(capacity: f64, age_days: f64, dt_seconds: f64) -> Self {
        let seg = |k: usize| CalendarSegment {
            lo: CALENDAR_BREAKPOINTS[k] * capacity,
            hi: CALENDAR_BREAKPOINTS[k + 1] * capacity,
            slope: 0.0,
            intercept: 0.0,
            max_sag: 0.0,
        };
        Self {
            segments: [seg(0), seg(1), seg(2)],
            age_days,
            dt_seconds,
        }
    }
}

/// Per-step calendar cost in € for a span's own quadratic.
fn calendar_cost_in_span(soe: f64, k: usize, spec: &BatterySpec, age_days: f64, dt: f64, npv: &BatteryNpv) -> f64 {
    let g = quad(span_coeffs(&spec.aging, k), 100.0 * soe / spec.capacity);
    npv.eur_per_percent() * g * arrhenius(spec.temperature, &spec.aging) * sqrt_time_increment(age_days, dt / 86_400.0)
}

/// Secant per SoC span through the span quadratic's endpoint values. At a
/// shared breakpoint the lower span owns the nonlinear value.
pub fn linearize_calendar(spec: &BatterySpec, age_days: f64, dt: f64, npv: &BatteryNpv) -> CalendarLinearization {
    let q = spec.capacity;
    let scale =
        npv.eur_per_percent() * arrhenius(spec.temperature, &spec.aging) * sqrt_time_increment(age_days, dt / 86_400.0);
    let seg = |k: usize| {
        let lo = CALENDAR_BREAKPOINTS[k] * q;
        let hi = CALENDAR_BREAKPOINTS[k + 1] * q;
        let c_lo = calendar_cost_in_span(lo, k, spec, age_days, dt, npv);
        let c_hi = calendar_cost_in_span(hi, k, spec, age_days, dt, npv);
        let slope = (c_hi - c_lo) / (hi - lo);
        // quadratic in MWh has leading coefficient scale * a1 * (100 / Q)^2
        let curvature = scale * span_coeffs(&spec.aging, k)[0] * (100.0 / q).powi(2);
        CalendarSegment {
            lo,
            hi,
            slope,
            intercept: c_lo - slope * lo,
            max_sag: curvature.abs() * (hi - lo).powi(2) / 4.0,
        }
    };
    CalendarLinearization {
        segments: [seg(0), seg(1), seg(2)],
        age_days,
        dt_seconds: dt,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLinearization {
    /// € per MWh of throughput (charge plus discharge).
    pub k_cyc: f64,
    /// max |fit - model| / model over the samples.
    pub max_rel_error: f64,
    /// max |fit - model| / max model over the samples, i.e. relative to the
    /// cost at full power.
    pub full_scale_error: f64,
    /// (power MW, model €/MWh)
    pub samples: Vec<(f64, f64)>,
}

impl CycleLinearization {
    pub fn zero() -> Self {
        Self {
            k_cyc: 0.0,
            max_rel_error: 0.0,
            full_scale_error: 0.0,
            samples: Vec::new(),
        }
    }

    /// Relative error at the sample closest to `p`.
    pub fn rel_error_at(&self, p: f64) -> f64 {
        let (_, f) = self
            .samples
            .iter()
            .min_by(|a, b| (a.0 - p).abs().total_cmp(&(b.0 - p).abs()))
            .copied()
            .unwrap_or((p, self.k_cyc));
        if f == 0.0 {
            0.0
        } else {
            (self.k_cyc - f).abs() / f
        }
    }
}

/// Nonlinear cycle cost per MWh of throughput at a constant power.
pub fn cycle_cost_per_mwh(p: f64, spec: &BatterySpec, npv: &BatteryNpv) -> f64 {
    let a = &spec.aging;
    npv.eur_per_percent() * a.q_poly_at_temp * (a.q4 * p / spec.capacity).exp() * a.ah_per_unit_throughput
        / spec.capacity
}

/// Least-squares single coefficient through the origin of cost against
/// throughput, sampled at evenly spaced powers in `[0.1, 1.0] * p_max`.
/// Errors with [`DegradationError::FitToleranceExceeded`] when the
/// full-scale error exceeds `tolerance`.
pub fn linearize_cycle(spec: &BatterySpec, npv: &BatteryNpv, tolerance: f64) -> Result<CycleLinearization, DegradationError> {
    let (lo, hi) = (CYCLE_FIT_RANGE.0 * spec.p_max, CYCLE_FIT_RANGE.1 * spec.p_max);
    let n = CYCLE_FIT_SAMPLES;
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let p = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            (p, cycle_cost_per_mwh(p, spec, npv))
        })
        .collect();
    // throughput is p * dt; dt cancels in the normal equation
    let num: f64 = samples.iter().map(|(p, f)| f * p * p).sum();
    let den: f64 = samples.iter().map(|(p, _)| p * p).sum();
    let k_cyc = num / den;
    let max_rel_error = samples
        .iter()
        .map(|(_, f)| if *f == 0.0 { 0.0 } else { (k_cyc - f).abs() / f })
        .fold(0.0, f64::max);
    let peak = samples.iter().map(|(p, f)| f * p).fold(0.0, f64::max);
    let full_scale_error = if peak == 0.0 {
        0.0
    } else {
        samples.iter().map(|(p, f)| (k_cyc - f).abs() * p).fold(0.0, f64::max) / peak
    };
    if full_scale_error > tolerance {
        return Err(DegradationError::FitToleranceExceeded {
            error: full_scale_error,
            tolerance,
        });
    }
    Ok(CycleLinearization {
        k_cyc,
        max_rel_error,
        full_scale_error,
        samples,
    })
}

/// Writes `span,lo,hi,slope,intercept,max_err` with the cycle fit as a
/// final `cycle` row (slope = k_cyc, max_err = pointwise relative error).
pub fn write_linearization_csv(
    path: &Path,
    cal: &CalendarLinearization,
    cyc: &CycleLinearization,
) -> Result<(), DegradationError> {
    let mut lines = vec!["span,lo,hi,slope,intercept,max_err".to_string()];
    for (k, s) in cal.segments.iter().enumerate() {
        lines.push(format!("calendar_{k},{},{},{},{},{}", s.lo, s.hi, s.slope, s.intercept, s.max_sag));
    }
    let (lo, hi) = match (cyc.samples.first(), cyc.samples.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => (0.0, 0.0),
    };
    lines.push(format!("cycle,{lo},{hi},{},0,{}", cyc.k_cyc, cyc.max_rel_error));
    write_lines(path, lines)?;
    Ok(())
}

/// Nonlinear aging over a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AgingBreakdown {
    pub cal_pct: f64,
    pub cyc_pct: f64,
    /// €
    pub cal_cost: f64,
    /// €
    pub cyc_cost: f64,
}

impl AgingBreakdown {
    pub fn total_cost(&self) -> f64 {
        self.cal_cost + self.cyc_cost
    }

    pub fn total_pct(&self) -> f64 {
        self.cal_pct + self.cyc_pct
    }

    pub fn add(&mut self, other: &AgingBreakdown) {
        self.cal_pct += other.cal_pct;
        self.cyc_pct += other.cyc_pct;
        self.cal_cost += other.cal_cost;
        self.cyc_cost += other.cyc_cost;
    }
}

/// Sums the nonlinear step models. Step `t` is charged for calendar aging at
/// its end-of-step SoE `soe[t]` and at the age reached at its start.
pub fn post_calculate_aging(
    soe: &[f64],
    p_ch: &[f64],
    p_ds: &[f64],
    dt_seconds: f64,
    spec: &BatterySpec,
    age_days: f64,
    npv: &BatteryNpv,
) -> AgingBreakdown {
    assert!(soe.len() == p_ch.len() && soe.len() == p_ds.len());
    let dt_days = dt_seconds / 86_400.0;
    let mut cal = 0.0;
    let mut cyc = 0.0;
    for t in 0..soe.len() {
        let age = age_days + t as f64 * dt_days;
        let s = soe[t].clamp(0.0, spec.capacity);
        cal += calendar_aging_step(s, spec.temperature, age, dt_seconds, &spec.aging, spec.capacity);
        cyc += cycle_aging_step(p_ch[t].max(0.0), p_ds[t].max(0.0), dt_seconds, &spec.aging, spec.capacity);
    }
    let eur = npv.eur_per_percent();
    AgingBreakdown {
        cal_pct: cal,
        cyc_pct: cyc,
        cal_cost: cal * eur,
        cyc_cost: cyc * eur,
    }
}

/// Linearized degradation cost of a trajectory (€), as the day model's
/// objective would charge it.
pub fn reprice_linearized(
    soe: &[f64],
    p_ch: &[f64],
    p_ds: &[f64],
    dt_hours: f64,
    cal: &CalendarLinearization,
    cyc: &CycleLinearization,
) -> f64 {
    (0..soe.len())
        .map(|t| cyc.k_cyc * (p_ch[t] + p_ds[t]) * dt_hours + cal.eval(soe[t]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> BatterySpec {
        BatterySpec::default()
    }

    fn npv() -> BatteryNpv {
        battery_npv(&spec(), None).unwrap()
    }

    #[test]
    fn npv_reference_inputs() {
        // 0.5 * 137000 / 1.05^10 + 2740 * (1.05^10 - 1) / (0.05 * 1.05^10)
        // with 1.05^10 = 1.628894627: 42053.058 + 21157.554 = 63210.612
        let v = npv().value;
        assert!((v - 63_210.612).abs() < 1e-3, "{v}");
    }

    #[test]
    fn npv_limits() {
        let s = BatterySpec {
            salvage_ratio: 1.0,
            om_cost: 0.0,
            ..spec()
        };
        assert_eq!(battery_npv(&s, None).unwrap().value, 0.0);
        let s = BatterySpec {
            interest_rate: 1e6,
            om_cost: 0.0,
            ..spec()
        };
        assert!(battery_npv(&s, None).unwrap().value < 1e-30);
        let s = BatterySpec {
            lifetime_years: 0,
            ..spec()
        };
        assert!(battery_npv(&s, None).is_err());
    }

    #[test]
    fn calendar_g_at_half_charge() {
        // -1.1 * 2500 + 89.7 * 50 + 1224.6
        assert!((calendar_g(0.5, &spec().aging) - 2959.6).abs() < 1e-9);
    }

    #[test]
    fn calendar_step_values() {
        let a = spec().aging;
        assert_eq!(calendar_aging_step(0.5, 293.15, 10.0, 0.0, &a, 1.0), 0.0);
        // one day from age 0: G(50) * exp(-24500 / (8.314 * 293.15)) * 1
        let expected = 2959.6 * (-24_500.0f64 / (8.314 * 293.15)).exp();
        let got = calendar_aging_step(0.5, 293.15, 0.0, 86_400.0, &a, 1.0);
        assert!((got - expected).abs() < 1e-15);
        assert!((expected - 0.12757).abs() < 1e-4);
        let hi = calendar_aging_step(0.9, 293.15, 5.0, 60.0, &a, 1.0);
        let lo = calendar_aging_step(0.3, 293.15, 5.0, 60.0, &a, 1.0);
        assert!(hi > lo);
    }

    #[test]
    fn printed_exponent_is_enormous() {
        let mut a = spec().aging;
        let neg = arrhenius(293.15, &a);
        a.printed_exponent_sign = true;
        assert!((arrhenius(293.15, &a) * neg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cycle_step_values() {
        let a = spec().aging;
        assert_eq!(cycle_aging_step(0.0, 0.0, 60.0, &a, 1.0), 0.0);
        // I = 1: 0.0008 * e^0.3903 per unit throughput, times the Ah constant
        let one_hour = cycle_aging_step(1.0, 0.0, 3600.0, &a, 1.0);
        assert!((one_hour / a.ah_per_unit_throughput - 0.0008 * 0.3903f64.exp()).abs() < 1e-15);
        let x1 = cycle_aging_step(0.4, 0.0, 60.0, &a, 1.0);
        let x2 = cycle_aging_step(0.4, 0.0, 120.0, &a, 1.0);
        assert!((x2 - 2.0 * x1).abs() < 1e-18);
    }

    #[test]
    fn full_power_versus_half_power() {
        let a = spec().aging;
        let full = cycle_aging_step(0.0, 1.0, 3600.0, &a, 1.0);
        let half = 2.0 * cycle_aging_step(0.0, 0.5, 3600.0, &a, 1.0);
        assert!((full / half - (0.3903f64 * 0.5).exp()).abs() < 1e-12);
    }

    #[test]
    fn calendar_secants_exact_at_breakpoints() {
        let s = spec();
        let n = npv();
        let lin = linearize_calendar(&s, 180.0, 60.0, &n);
        let model = |soe: f64| {
            n.eur_per_percent() * calendar_aging_step(soe, s.temperature, 180.0, 60.0, &s.aging, s.capacity)
        };
        // each breakpoint is owned by the span closed on its right
        let owners = [(0.0, 0), (0.5, 0), (0.7, 1), (1.0, 2)];
        for (frac, k) in owners {
            let v = lin.segments[k].eval(frac);
            let m = model(frac);
            assert!(((v - m) / m).abs() < 1e-12, "{frac}: {v} vs {m}");
        }
        for w in lin.segments.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
        }
        // mid-span error is within the reported sag
        let seg = lin.segments[0];
        let err = (seg.eval(0.25) - model(0.25)).abs();
        assert!(err <= seg.max_sag * (1.0 + 1e-9));
        // the sag is attained at the midpoint of a quadratic's chord
        assert!((err - seg.max_sag).abs() <= 1e-9 * seg.max_sag);
    }

    #[test]
    fn zero_npv_zeroes_calendar() {
        let s = BatterySpec {
            replacement_cost: 0.0,
            om_cost: 0.0,
            ..spec()
        };
        let n = battery_npv(&s, None).unwrap();
        let lin = linearize_calendar(&s, 10.0, 60.0, &n);
        assert!(lin.segments.iter().all(|g| g.slope == 0.0 && g.intercept == 0.0));
    }

    #[test]
    fn cycle_fit_reference_constants() {
        let s = spec();
        let lin = linearize_cycle(&s, &npv(), 0.10).unwrap();
        assert!(lin.k_cyc > 0.0);
        assert!(lin.full_scale_error <= 0.10);
        assert!(lin.rel_error_at(s.p_max) <= 0.10);
        // a single slope through the origin cannot follow exp(0.39 I) within
        // 10 % at both ends of [0.1, 1]
        assert!(lin.max_rel_error > 0.10);
    }

    #[test]
    fn cycle_fit_exact_without_curvature() {
        let mut s = spec();
        s.aging.q4 = 0.0;
        let n = npv();
        let lin = linearize_cycle(&s, &n, 1e-12).unwrap();
        let expected = n.eur_per_percent() * s.aging.q_poly_at_temp * s.aging.ah_per_unit_throughput / s.capacity;
        assert!((lin.k_cyc - expected).abs() < 1e-12 * expected);
        assert!(lin.max_rel_error < 1e-12);
    }

    #[test]
    fn cycle_fit_tolerance_error() {
        let mut s = spec();
        s.aging.q4 = 3.0;
        assert!(matches!(
            linearize_cycle(&s, &npv(), 0.10),
            Err(DegradationError::FitToleranceExceeded { .. })
        ));
    }

    #[test]
    fn idle_trajectory_post_calc() {
        let s = spec();
        let n = npv();
        let soe = vec![0.5; 1440];
        let zero = vec![0.0; 1440];
        let a = post_calculate_aging(&soe, &zero, &zero, 60.0, &s, 30.0, &n);
        assert_eq!(a.cyc_cost, 0.0);
        assert!(a.cal_cost > 0.0);
        let b = post_calculate_aging(&soe, &zero, &zero, 60.0, &s, 30.0, &n);
        assert_eq!(a, b);
        // increments telescope to the cumulative one-day value
        let one_day = calendar_aging_step(0.5, s.temperature, 30.0, 86_400.0, &s.aging, 1.0);
        assert!((a.cal_pct - one_day).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn aging_non_negative(soe in 0.0f64..1.0, age in 0.0f64..4000.0, dt in 0.0f64..7200.0,
                              p in 0.0f64..1.0, charging in any::<bool>()) {
            let a = spec().aging;
            prop_assert!(calendar_aging_step(soe, 293.15, age, dt, &a, 1.0) >= 0.0);
            let (pc, pd) = if charging { (p, 0.0) } else { (0.0, p) };
            let c = cycle_aging_step(pc, pd, dt, &a, 1.0);
            prop_assert!(c >= 0.0);
            prop_assert_eq!(c == 0.0, p * dt == 0.0);
        }
    }
}
