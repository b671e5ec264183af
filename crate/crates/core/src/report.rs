//! Comparison tables, distributions and the output manifest.
//!
//! Everything here is a pure function of [`HorizonResult`]s. Values are
//! stored in € and MW/MWh; rounding to k€ is left to whoever reads the CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{BatterySpec, CaseId};
use crate::orchestrator::{read_checkpoints, CheckpointMeta, HorizonResult, MarketMix, OrchestratorError};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no results to report")]
    Empty,
    #[error("bad histogram edges: {0}")]
    Edges(String),
    #[error(transparent)]
    Checkpoint(#[from] OrchestratorError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonetaryRow {
    pub case: CaseId,
    pub degradation_in_objective: bool,
    pub profit: f64,
    pub r_da: f64,
    pub r_fcr: f64,
    pub c_da: f64,
    pub cal_aging_cost: f64,
    pub cyc_aging_cost: f64,
    pub total_aging_cost: f64,
    pub cal_aging_pct: f64,
    pub cyc_aging_pct: f64,
    /// (with - without) / without; only when both modes of the case exist.
    pub delta_total_aging: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonetaryTable {
    pub rows: Vec<MonetaryRow>,
}

fn ordered(results: &[HorizonResult]) -> Vec<&HorizonResult> {
    let mut v: Vec<&HorizonResult> = results.iter().collect();
    v.sort_by_key(|r| (r.case, !r.degradation_in_objective));
    v
}

pub fn monetary_table(results: &[HorizonResult]) -> MonetaryTable {
    let total = |case: CaseId, deg: bool| {
        results
            .iter()
            .find(|r| r.case == case && r.degradation_in_objective == deg)
            .map(|r| r.aggregates.aging.total_cost())
    };
    let rows = ordered(results)
        .into_iter()
        .map(|r| {
            let a = &r.aggregates;
            let delta = match (total(r.case, true), total(r.case, false)) {
                (Some(w), Some(wo)) if wo != 0.0 => Some((w - wo) / wo),
                _ => None,
            };
            MonetaryRow {
                case: r.case,
                degradation_in_objective: r.degradation_in_objective,
                profit: a.profit,
                r_da: a.r_da,
                r_fcr: a.r_fcr(),
                c_da: a.c_da,
                cal_aging_cost: a.aging.cal_cost,
                cyc_aging_cost: a.aging.cyc_cost,
                total_aging_cost: a.aging.cal_cost + a.aging.cyc_cost,
                cal_aging_pct: a.aging.cal_pct,
                cyc_aging_pct: a.aging.cyc_pct,
                delta_total_aging: delta,
            }
        })
        .collect();
    MonetaryTable { rows }
}

fn mode(deg: bool) -> &'static str {
    if deg {
        "with"
    } else {
        "without"
    }
}

impl MonetaryTable {
    pub fn write_csv(&self, path: &Path) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "case",
            "degradation_in_objective",
            "profit_eur",
            "r_da_eur",
            "r_fcr_eur",
            "c_da_eur",
            "cal_aging_eur",
            "cyc_aging_eur",
            "total_aging_eur",
            "cal_aging_pct",
            "cyc_aging_pct",
            "delta_total_aging_pct",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.case.to_string(),
                mode(r.degradation_in_objective).to_string(),
                r.profit.to_string(),
                r.r_da.to_string(),
                r.r_fcr.to_string(),
                r.c_da.to_string(),
                r.cal_aging_cost.to_string(),
                r.cyc_aging_cost.to_string(),
                r.total_aging_cost.to_string(),
                r.cal_aging_pct.to_string(),
                r.cyc_aging_pct.to_string(),
                r.delta_total_aging.map(|d| (100.0 * d).to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketMixRow {
    pub case: CaseId,
    pub degradation_in_objective: bool,
    pub counts: BTreeMap<MarketMix, usize>,
}

impl MarketMixRow {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

pub fn market_mix_table(results: &[HorizonResult]) -> Vec<MarketMixRow> {
    ordered(results)
        .into_iter()
        .map(|r| MarketMixRow {
            case: r.case,
            degradation_in_objective: r.degradation_in_objective,
            counts: MarketMix::ALL
                .iter()
                .map(|&m| (m, r.aggregates.market_mix.get(&m).copied().unwrap_or(0)))
                .collect(),
        })
        .collect()
}

pub fn write_market_mix_csv(rows: &[MarketMixRow], path: &Path) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["case".to_string(), "degradation_in_objective".to_string()];
    header.extend(MarketMix::ALL.iter().map(|m| m.label().to_string()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.case.to_string(), mode(r.degradation_in_objective).to_string()];
        rec.extend(MarketMix::ALL.iter().map(|m| r.counts[m].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramVariable {
    /// SoE after every step, MWh.
    SoeStep,
    /// Net power per step, charging positive, MW.
    PowerStep,
    /// SoE at the start of every hour, MWh.
    SoeHourStart,
    /// Net baseline per hour, charging positive, MW.
    BaselineHour,
    /// Sum of the three capacity bids per hour, MW.
    BidSumHour,
}

impl HistogramVariable {
    pub const ALL: [HistogramVariable; 5] = [
        HistogramVariable::SoeStep,
        HistogramVariable::PowerStep,
        HistogramVariable::SoeHourStart,
        HistogramVariable::BaselineHour,
        HistogramVariable::BidSumHour,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HistogramVariable::SoeStep => "soe_step",
            HistogramVariable::PowerStep => "power_step",
            HistogramVariable::SoeHourStart => "soe_hour_start",
            HistogramVariable::BaselineHour => "baseline_hour",
            HistogramVariable::BidSumHour => "bid_sum_hour",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            HistogramVariable::SoeStep | HistogramVariable::SoeHourStart => "MWh",
            _ => "MW",
        }
    }

    pub fn samples(self, r: &HorizonResult) -> Vec<f64> {
        let mut out = Vec::new();
        for d in &r.days {
            match self {
                HistogramVariable::SoeStep => out.extend_from_slice(&d.soe),
                HistogramVariable::PowerStep => out.extend(d.p_ch.iter().zip(&d.p_ds).map(|(c, s)| c - s)),
                HistogramVariable::SoeHourStart => out.extend((0..d.hours()).map(|h| d.hour_start_soe(h))),
                HistogramVariable::BaselineHour => out.extend((0..d.hours()).map(|h| d.baseline(h))),
                HistogramVariable::BidSumHour => {
                    out.extend((0..d.hours()).map(|h| d.bid_n[h] + d.bid_du[h] + d.bid_dd[h]))
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub variable: HistogramVariable,
    /// Strictly increasing. Bins are `[e_i, e_i+1)`, the last one closed;
    /// samples outside the edges land in the nearest end bin.
    pub edges: Vec<f64>,
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

impl HistogramSpec {
    /// Default bins over the battery's physical ranges.
    pub fn default_for(variable: HistogramVariable, spec: &BatterySpec) -> Self {
        let edges = match variable {
            HistogramVariable::SoeStep | HistogramVariable::SoeHourStart => uniform_edges(0.0, spec.capacity, 20),
            HistogramVariable::PowerStep | HistogramVariable::BaselineHour => {
                uniform_edges(-spec.p_max, spec.p_max, 20)
            }
            HistogramVariable::BidSumHour => uniform_edges(0.0, 5.0 * spec.p_max, 25),
        };
        Self { variable, edges }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub variable: HistogramVariable,
    pub edges: Vec<f64>,
    /// Share of samples per bin, percent.
    pub percent: Vec<f64>,
    pub samples: usize,
    /// Type-7 quartiles (Q1, Q2, Q3); `None` for an empty sample.
    pub quartiles: Option<[f64; 3]>,
}

/// Linear-interpolation quantile of an ascending sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn histogram_of(samples: &[f64], spec: &HistogramSpec) -> Result<Histogram, ReportError> {
    let e = &spec.edges;
    if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ReportError::Edges(format!("{e:?}")));
    }
    let bins = e.len() - 1;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        // index of the last edge <= x, clamped into the bins
        let i = e.partition_point(|&edge| edge <= x).saturating_sub(1).min(bins - 1);
        counts[i] += 1;
    }
    let n = samples.len();
    let percent = counts
        .iter()
        .map(|&c| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 })
        .collect();
    let quartiles = (n > 0).then(|| {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        [0.25, 0.5, 0.75].map(|p| quantile_sorted(&s, p))
    });
    Ok(Histogram {
        variable: spec.variable,
        edges: e.clone(),
        percent,
        samples: n,
        quartiles,
    })
}

pub fn histograms(result: &HorizonResult, spec: &HistogramSpec) -> Result<Histogram, ReportError> {
    histogram_of(&spec.variable.samples(result), spec)
}

impl Histogram {
    /// `bin_lo,bin_hi,percent` rows followed by `q1`, `q2`, `q3` lines.
    pub fn write_csv(&self, path: &Path) -> Result<(), ReportError> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
        w.write_record(["bin_lo", "bin_hi", "percent"])?;
        for (i, p) in self.percent.iter().enumerate() {
            w.write_record([self.edges[i].to_string(), self.edges[i + 1].to_string(), p.to_string()])?;
        }
        if let Some(q) = self.quartiles {
            for (label, v) in ["q1", "q2", "q3"].iter().zip(q) {
                w.write_record([label.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub units: BTreeMap<String, String>,
    /// Per run label: config and data hashes, when known.
    pub runs: BTreeMap<String, Option<CheckpointMeta>>,
    /// File name → SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

fn units() -> BTreeMap<String, String> {
    [
        ("money", "EUR"),
        ("power", "MW"),
        ("energy", "MWh"),
        ("aging", "percent of capacity"),
        ("histogram", "percent of samples"),
        ("delta_total_aging_pct", "percent"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

fn sha_file(path: &Path) -> Result<String, std::io::Error> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Writes every artifact into `dir` and returns the manifest (also written
/// as `manifest.json`). Output is byte-identical for identical inputs.
pub fn write_report(
    results: &[HorizonResult],
    metas: &BTreeMap<String, Option<CheckpointMeta>>,
    spec: &BatterySpec,
    dir: &Path,
) -> Result<Manifest, ReportError> {
    if results.is_empty() {
        return Err(ReportError::Empty);
    }
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();

    let p = dir.join("monetary.csv");
    monetary_table(results).write_csv(&p)?;
    written.push(p);

    let p = dir.join("market_mix.csv");
    write_market_mix_csv(&market_mix_table(results), &p)?;
    written.push(p);

    for r in ordered(results) {
        for v in HistogramVariable::ALL {
            let h = histograms(r, &HistogramSpec::default_for(v, spec))?;
            let p = dir.join(format!("hist_{}_{}.csv", r.run_label(), v.as_str()));
            h.write_csv(&p)?;
            written.push(p);
        }
    }

    let mut files = BTreeMap::new();
    for p in &written {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        files.insert(name, sha_file(p)?);
    }
    let manifest = Manifest {
        units: units(),
        runs: metas.clone(),
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest");
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(manifest)
}

/// Rebuilds results from a checkpoint root holding one directory per run.
/// Directories without any day checkpoint are skipped.
pub fn load_checkpoint_root(
    root: &Path,
) -> Result<(Vec<HorizonResult>, BTreeMap<String, Option<CheckpointMeta>>), ReportError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut results = Vec::new();
    let mut metas = BTreeMap::new();
    for dir in dirs {
        let days = read_checkpoints(&dir)?;
        let Some(first) = days.first() else { continue };
        let r = HorizonResult::new(first.case, first.degradation_in_objective, days);
        metas.insert(r.run_label(), CheckpointMeta::read(&dir));
        results.push(r);
    }
    if results.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok((results, metas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{DaySolution, RevenueBreakdown, SolveStats};
    use crate::degradation::AgingBreakdown;
    use proptest::prelude::*;

    fn day(case: CaseId, deg: bool, soe: f64, bids: [f64; 3], cal_cost: f64, cyc_cost: f64) -> DaySolution {
        DaySolution {
            day_index: 0,
            case,
            degradation_in_objective: deg,
            step_hours: 0.5,
            s0: soe,
            p_ch_bl: vec![0.0; 2],
            p_ds_bl: vec![0.0; 2],
            bid_n: vec![bids[0]; 2],
            bid_du: vec![bids[1]; 2],
            bid_dd: vec![bids[2]; 2],
            p_ch: vec![0.0; 4],
            p_ds: vec![0.0; 4],
            soe: vec![soe; 4],
            revenue: RevenueBreakdown {
                r_n: 10.0 * bids[0],
                ..Default::default()
            },
            aging: AgingBreakdown {
                cal_pct: cal_cost / 100.0,
                cyc_pct: cyc_cost / 100.0,
                cal_cost,
                cyc_cost,
            },
            stats: SolveStats::default(),
        }
    }

    #[test]
    fn monetary_delta_and_totals() {
        let rs = vec![
            HorizonResult::new(CaseId::Multi, true, vec![day(CaseId::Multi, true, 0.5, [0.2, 0.5, 0.5], 3.0, 1.0)]),
            HorizonResult::new(CaseId::Multi, false, vec![day(CaseId::Multi, false, 0.5, [0.2, 0.5, 0.5], 3.0, 2.0)]),
            HorizonResult::new(CaseId::WoFcr, true, vec![day(CaseId::WoFcr, true, 0.5, [0.0; 3], 1.0, 0.0)]),
        ];
        let t = monetary_table(&rs);
        assert_eq!(t.rows[0].case, CaseId::WoFcr);
        assert_eq!(t.rows[0].delta_total_aging, None);
        let m = &t.rows[1];
        assert_eq!(m.total_aging_cost, m.cal_aging_cost + m.cyc_aging_cost);
        assert!((m.delta_total_aging.unwrap() - (4.0 - 5.0) / 5.0).abs() < 1e-15);
        // profit identity with post-calculated aging
        assert!((m.profit - (2.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn identical_modes_give_zero_delta() {
        let d = day(CaseId::FcrN, true, 0.5, [0.4, 0.0, 0.0], 2.0, 1.0);
        let mut d2 = d.clone();
        d2.degradation_in_objective = false;
        let rs = vec![
            HorizonResult::new(CaseId::FcrN, true, vec![d]),
            HorizonResult::new(CaseId::FcrN, false, vec![d2]),
        ];
        assert!(monetary_table(&rs).rows.iter().all(|r| r.delta_total_aging == Some(0.0)));
    }

    #[test]
    fn market_mix_rows_partition_hours() {
        let rs = vec![HorizonResult::new(CaseId::Multi, true, vec![day(CaseId::Multi, true, 0.5, [0.0, 0.8, 0.8], 0.0, 0.0)])];
        let rows = market_mix_table(&rs);
        assert_eq!(rows[0].total(), 2);
        assert_eq!(rows[0].counts[&MarketMix::DuDd], 2);
    }

    #[test]
    fn constant_soe_fills_one_bin() {
        let r = HorizonResult::new(CaseId::WoFcr, true, vec![day(CaseId::WoFcr, true, 0.5, [0.0; 3], 1.0, 0.0)]);
        let h = histograms(&r, &HistogramSpec::default_for(HistogramVariable::SoeStep, &BatterySpec::default())).unwrap();
        let occupied: Vec<usize> = (0..h.percent.len()).filter(|&i| h.percent[i] > 0.0).collect();
        assert_eq!(occupied.len(), 1);
        let i = occupied[0];
        assert!(h.edges[i] <= 0.5 && 0.5 < h.edges[i + 1]);
        assert_eq!(h.percent[i], 100.0);
        assert_eq!(h.quartiles, Some([0.5; 3]));
    }

    #[test]
    fn quartiles_small_sample() {
        // type-7: positions 0.75, 1.5, 2.25 over [1, 2, 4, 8]
        let h = histogram_of(
            &[8.0, 1.0, 4.0, 2.0],
            &HistogramSpec {
                variable: HistogramVariable::PowerStep,
                edges: vec![0.0, 10.0],
            },
        )
        .unwrap();
        assert_eq!(h.quartiles, Some([1.75, 3.0, 5.0]));
    }

    #[test]
    fn bad_edges_rejected() {
        let spec = HistogramSpec {
            variable: HistogramVariable::SoeStep,
            edges: vec![0.0, 0.0],
        };
        assert!(matches!(histogram_of(&[1.0], &spec), Err(ReportError::Edges(_))));
    }

    #[test]
    fn report_is_byte_identical_on_rerun() {
        let rs = vec![HorizonResult::new(CaseId::Multi, true, vec![day(CaseId::Multi, true, 0.4, [0.1, 0.3, 0.2], 1.5, 0.5)])];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let metas = BTreeMap::new();
        let ma = write_report(&rs, &metas, &BatterySpec::default(), a.path()).unwrap();
        let mb = write_report(&rs, &metas, &BatterySpec::default(), b.path()).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(
            fs::read(a.path().join("manifest.json")).unwrap(),
            fs::read(b.path().join("manifest.json")).unwrap()
        );
        assert_eq!(ma.files.len(), 2 + HistogramVariable::ALL.len());
    }

    proptest! {
        #[test]
        fn percentages_sum_to_100(xs in proptest::collection::vec(-2.0f64..2.0, 1..300)) {
            let spec = HistogramSpec { variable: HistogramVariable::PowerStep, edges: uniform_edges(-1.0, 1.0, 13) };
            let h = histogram_of(&xs, &spec).unwrap();
            let total: f64 = h.percent.iter().sum();
            prop_assert!((total - 100.0).abs() <= 1e-9);
        }

        #[test]
        fn quartiles_match_order_statistics(xs in proptest::collection::vec(-5.0f64..5.0, 1..200)) {
            let spec = HistogramSpec { variable: HistogramVariable::SoeStep, edges: vec![-5.0, 5.0] };
            let q = histogram_of(&xs, &spec).unwrap().quartiles.unwrap();
            // oracle: type-7 by explicit rank arithmetic on a fresh sort
            let mut s = xs.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (k, p) in [0.25, 0.5, 0.75].iter().enumerate() {
                let h = 1.0 + (s.len() as f64 - 1.0) * p;
                let j = h.floor() as usize;
                let oracle = if j >= s.len() { s[s.len() - 1] } else { s[j - 1] + (h - j as f64) * (s[j] - s[j - 1]) };
                prop_assert!((q[k] - oracle).abs() <= 1e-12);
            }
            prop_assert!(q[0] <= q[1] && q[1] <= q[2]);
        }
    }
}
