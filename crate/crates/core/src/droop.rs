//! Droop curves and per-unit activation energy contents.
//!
//! Signs follow the load convention: a positive FCR-N fraction is
//! down-regulation (the unit charges), a negative one is up-regulation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::{write_lines, IngestError, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroopParams {
    pub f_n: f64,
    pub f_min_n: f64,
    pub f_max_n: f64,
    pub f_min_d: f64,
    pub f_max_d: f64,
}

impl Default for DroopParams {
    fn default() -> Self {
        Self {
            f_n: 50.0,
            f_min_n: 49.9,
            f_max_n: 50.1,
            f_min_d: 49.5,
            f_max_d: 50.5,
        }
    }
}

impl DroopParams {
    pub fn validate(&self) -> Result<(), IngestError> {
        let ok = self.f_min_d < self.f_min_n
            && self.f_min_n < self.f_n
            && self.f_n < self.f_max_n
            && self.f_max_n < self.f_max_d;
        if !ok {
            return Err(IngestError::InvalidParameter(format!("droop breakpoints out of order: {self:?}")));
        }
        Ok(())
    }
}

/// Signed FCR-N activation in [-1, 1]. The band edges belong to the
/// saturated branch.
pub fn fcrn_fraction(f: f64, p: &DroopParams) -> f64 {
    if f >= p.f_max_n {
        1.0
    } else if f <= p.f_min_n {
        -1.0
    } else if f >= p.f_n {
        (f - p.f_n) / (p.f_max_n - p.f_n)
    } else {
        -(f - p.f_n) / (p.f_min_n - p.f_n)
    }
}

/// FCR-D up activation in [0, 1]; zero at and above `f_min_n`.
pub fn fcrd_up_fraction(f: f64, p: &DroopParams) -> f64 {
    if f >= p.f_min_n {
        0.0
    } else if f <= p.f_min_d {
        1.0
    } else {
        (f - p.f_min_n) / (p.f_min_d - p.f_min_n)
    }
}

/// FCR-D down activation in [0, 1]; zero at and below `f_max_n`.
pub fn fcrd_down_fraction(f: f64, p: &DroopParams) -> f64 {
    if f <= p.f_max_n {
        0.0
    } else if f >= p.f_max_d {
        1.0
    } else {
        (f - p.f_max_n) / (p.f_max_d - p.f_max_n)
    }
}

/// Per-step activation fractions for one day; these are the coefficients of
/// the droop coupling row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationFractions {
    /// max(fcrn, 0)
    pub n_down: Vec<f64>,
    /// max(-fcrn, 0)
    pub n_up: Vec<f64>,
    pub d_up: Vec<f64>,
    pub d_down: Vec<f64>,
}

/// Per-unit-bid activated energy in hours, per step and per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyContentSeries {
    pub grid: TimeGrid,
    pub fractions: ActivationFractions,
    pub ur_n: Vec<f64>,
    pub dr_n: Vec<f64>,
    pub ur_du: Vec<f64>,
    pub dr_dd: Vec<f64>,
    pub hourly_ur_n: Vec<f64>,
    pub hourly_dr_n: Vec<f64>,
    pub hourly_ur_du: Vec<f64>,
    pub hourly_dr_dd: Vec<f64>,
}

/// Compensated (Neumaier) sum. A naive running sum of sixty `1/60` steps
/// lands above 1.0; this one rounds the true sum once.
pub fn compensated_sum(v: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in v {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn hourly(grid: &TimeGrid, v: &[f64]) -> Vec<f64> {
    (0..grid.hours)
        .map(|h| compensated_sum(grid.steps_of_hour(h).map(|t| v[t])))
        .collect()
}

pub fn energy_content(trace: &[f64], grid: &TimeGrid, params: &DroopParams) -> Result<EnergyContentSeries, IngestError> {
    params.validate()?;
    if trace.len() != grid.len() {
        return Err(IngestError::Alignment {
            expected: grid.len(),
            got: trace.len(),
        });
    }
    let dt = grid.step_hours();
    let n_signed: Vec<f64> = trace.iter().map(|&f| fcrn_fraction(f, params)).collect();
    let fractions = ActivationFractions {
        n_down: n_signed.iter().map(|&x| x.max(0.0)).collect(),
        n_up: n_signed.iter().map(|&x| (-x).max(0.0)).collect(),
        d_up: trace.iter().map(|&f| fcrd_up_fraction(f, params)).collect(),
        d_down: trace.iter().map(|&f| fcrd_down_fraction(f, params)).collect(),
    };
    let scale = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x * dt).collect() };
    let ur_n = scale(&fractions.n_up);
    let dr_n = scale(&fractions.n_down);
    let ur_du = scale(&fractions.d_up);
    let dr_dd = scale(&fractions.d_down);
    Ok(EnergyContentSeries {
        grid: *grid,
        hourly_ur_n: hourly(grid, &ur_n),
        hourly_dr_n: hourly(grid, &dr_n),
        hourly_ur_du: hourly(grid, &ur_du),
        hourly_dr_dd: hourly(grid, &dr_dd),
        fractions,
        ur_n,
        dr_n,
        ur_du,
        dr_dd,
    })
}

impl EnergyContentSeries {
    /// Writes `timestep,e_ur_n,e_dr_n,e_ur_du,e_dr_dd`.
    pub fn write_csv(&self, path: &Path) -> Result<(), IngestError> {
        let rows = (0..self.ur_n.len())
            .map(|t| format!("{t},{},{},{},{}", self.ur_n[t], self.dr_n[t], self.ur_du[t], self.dr_dd[t]));
        write_lines(
            path,
            std::iter::once("timestep,e_ur_n,e_dr_n,e_ur_du,e_dr_dd".to_string()).chain(rows),
        )?;
        Ok(())
    }
}
