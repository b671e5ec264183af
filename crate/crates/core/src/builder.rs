//! One day's scheduling MILP.
//!
//! Column and row names are the semantic registry, e.g. `bid_n[h=5]`,
//! `p_ch[t=37]`, `soe_rec[t=37]`. Hourly baseline power is held for the whole
//! hour, so one MW of baseline is one MWh of traded energy.

use serde::{Deserialize, Serialize};

use fcr_milp::{MilpError, MilpModel, ObjSense, Sense, VarId, ViolationReport};

use crate::config::{BatterySpec, CaseId, Market, ModelOptions};
use crate::degradation::{AgingBreakdown, CalendarLinearization, CycleLinearization};
use crate::droop::EnergyContentSeries;
use crate::ingest::{PriceSeries, TimeGrid};

/// Absolute tolerance for solution audits.
pub const AUDIT_TOL: f64 = 1e-6;
/// Slack allowed when checking a carried-over SoE against its bounds.
const S0_SLACK: f64 = 1e-6;

/// FCR power requirement factors.
pub const REQ_N: f64 = 1.34;
pub const REQ_OPPOSITE: f64 = 0.2;

pub mod family {
    pub const POWER_BOUNDS: &str = "power_bounds";
    pub const EXCLUSIVITY: &str = "exclusivity";
    pub const SOE: &str = "soe";
    pub const DROOP: &str = "droop_coupling";
    pub const BID_BOUNDS: &str = "bid_bounds";
    pub const POWER_REQUIREMENT: &str = "power_requirement";
    pub const ENDURANCE: &str = "endurance";
    pub const CALENDAR: &str = "calendar_span";
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("inputs do not match the day grid: {0}")]
    Misaligned(String),
    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),
    #[error("registry has no column `{0}`")]
    RegistryMiss(String),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

#[derive(Debug, Clone, Copy)]
pub struct DayInputs<'a> {
    pub grid: TimeGrid,
    /// Hourly prices for this day only.
    pub prices: &'a PriceSeries,
    pub contents: &'a EnergyContentSeries,
    pub spec: &'a BatterySpec,
    pub cal_lin: &'a CalendarLinearization,
    pub cyc_lin: &'a CycleLinearization,
    /// SoE at the start of the day, MWh.
    pub s0: f64,
    pub case: CaseId,
    pub options: ModelOptions,
}

impl DayInputs<'_> {
    fn check(&self) -> Result<(), BuildError> {
        let g = &self.grid;
        if self.prices.hours() != g.hours {
            return Err(BuildError::Misaligned(format!("{} price hours for {} grid hours", self.prices.hours(), g.hours)));
        }
        if self.contents.grid.len() != g.len() || self.contents.ur_n.len() != g.len() {
            return Err(BuildError::Misaligned("energy contents length".into()));
        }
        let (lo, hi) = (self.spec.s_min(), self.spec.s_max());
        if !(self.s0 >= lo - S0_SLACK && self.s0 <= hi + S0_SLACK) {
            return Err(BuildError::InfeasibleBounds(format!("s0 {} outside [{lo}, {hi}]", self.s0)));
        }
        Ok(())
    }
}

/// Closed-form model size: `(columns, rows)`.
pub fn model_size(hours: usize, steps: usize, options: &ModelOptions) -> (usize, usize) {
    let step_cols = if options.relax_step_binaries { 3 } else { 5 };
    let step_rows = if options.relax_step_binaries { 2 } else { 7 };
    let hour_rows = if options.requirements { 23 } else { 11 };
    let (deg_cols, deg_rows) = if options.degradation_in_objective { (6, 8) } else { (0, 0) };
    (
        10 * hours + (step_cols + deg_cols) * steps,
        hour_rows * hours + (step_rows + deg_rows) * steps,
    )
}

fn h_name(base: &str, h: usize) -> String {
    format!("{base}[h={h}]")
}

fn t_name(base: &str, t: usize) -> String {
    format!("{base}[t={t}]")
}

fn tk_name(base: &str, t: usize, k: usize) -> String {
    format!("{base}[t={t},k={k}]")
}

fn bid_name(m: Market) -> &'static str {
    match m {
        Market::N => "bid_n",
        Market::DU => "bid_du",
        Market::DD => "bid_dd",
    }
}

fn bid_bin_name(m: Market) -> &'static str {
    match m {
        Market::N => "b_n",
        Market::DU => "b_du",
        Market::DD => "b_dd",
    }
}

/// Objective coefficients per hour, also used to decompose a solution.
#[derive(Debug, Clone, Copy)]
struct HourPrices {
    discharge: f64,
    charge: f64,
    n: f64,
    du: f64,
    dd: f64,
}

fn hour_prices(inputs: &DayInputs, h: usize) -> HourPrices {
    let p = inputs.prices;
    let c = inputs.contents;
    let tax_ds = if inputs.options.discharge_tax { p.tax } else { 0.0 };
    HourPrices {
        discharge: p.spot[h] + tax_ds,
        charge: p.spot[h] + p.grid_tariff + p.tax,
        n: p.fcr_n[h] + p.up_reg[h] * c.hourly_ur_n[h] - p.down_reg[h] * c.hourly_dr_n[h],
        du: p.fcr_du[h],
        dd: p.fcr_dd[h],
    }
}

/// Energy added to the SoE per MW of bid in step `t`, per market. Positive
/// means charging.
fn activation_energy(inputs: &DayInputs, t: usize) -> (f64, f64, f64) {
    let c = inputs.contents;
    let (eta_ch, inv_eta_ds) = if inputs.options.efficiency_on_activation {
        (inputs.spec.eta_ch, 1.0 / inputs.spec.eta_ds)
    } else {
        (1.0, 1.0)
    };
    (
        c.dr_n[t] * eta_ch - c.ur_n[t] * inv_eta_ds,
        -c.ur_du[t] * inv_eta_ds,
        c.dr_dd[t] * eta_ch,
    )
}

/// Builds the day model. Disallowed markets keep their columns, fixed at 0.
pub fn build_day_model(inputs: &DayInputs) -> Result<MilpModel, BuildError> {
    inputs.check()?;
    let g = inputs.grid;
    let spec = inputs.spec;
    let opt = inputs.options;
    let (pmin, pmax) = (spec.p_min, spec.p_max);
    let (smin, smax) = (spec.s_min(), spec.s_max());
    let dt = g.step_hours();
    let n = g.len();
    let mut m = MilpModel::new(format!("day{}", g.day_index), ObjSense::Maximize);

    // hourly columns
    let mut ch_bl = Vec::with_capacity(g.hours);
    let mut ds_bl = Vec::with_capacity(g.hours);
    let mut bids: Vec<[VarId; 3]> = Vec::with_capacity(g.hours);
    for h in 0..g.hours {
        let pc = m.add_continuous(h_name("p_ch_bl", h), 0.0, pmax)?;
        let pd = m.add_continuous(h_name("p_ds_bl", h), 0.0, pmax)?;
        let bc = m.add_binary(h_name("b_ch_bl", h))?;
        let bd = m.add_binary(h_name("b_ds_bl", h))?;
        m.add_constraint(h_name("ch_bl_min", h), family::POWER_BOUNDS, [(pc, 1.0), (bc, -pmin)], Sense::Ge, 0.0)?;
        m.add_constraint(h_name("ch_bl_max", h), family::POWER_BOUNDS, [(pc, 1.0), (bc, -pmax)], Sense::Le, 0.0)?;
        m.add_constraint(h_name("ds_bl_min", h), family::POWER_BOUNDS, [(pd, 1.0), (bd, -pmin)], Sense::Ge, 0.0)?;
        m.add_constraint(h_name("ds_bl_max", h), family::POWER_BOUNDS, [(pd, 1.0), (bd, -pmax)], Sense::Le, 0.0)?;
        m.add_constraint(h_name("excl_bl", h), family::EXCLUSIVITY, [(bc, 1.0), (bd, 1.0)], Sense::Le, 1.0)?;

        let mut row = [VarId(0); 3];
        for (i, mk) in Market::ALL.into_iter().enumerate() {
            let cap = spec.max_bid(mk);
            let bid = m.add_continuous(h_name(bid_name(mk), h), 0.0, cap)?;
            let b = m.add_binary(h_name(bid_bin_name(mk), h))?;
            if !inputs.case.allows(mk) {
                m.set_bounds(bid, 0.0, 0.0)?;
                m.set_bounds(b, 0.0, 0.0)?;
            }
            let min = spec.min_bid(mk);
            let tag = bid_name(mk);
            m.add_constraint(h_name(&format!("{tag}_min"), h), family::BID_BOUNDS, [(bid, 1.0), (b, -min)], Sense::Ge, 0.0)?;
            m.add_constraint(h_name(&format!("{tag}_max"), h), family::BID_BOUNDS, [(bid, 1.0), (b, -cap)], Sense::Le, 0.0)?;
            row[i] = bid;
        }
        let hp = hour_prices(inputs, h);
        m.add_objective_term(pd, hp.discharge);
        m.add_objective_term(pc, -hp.charge);
        m.add_objective_term(row[0], hp.n);
        m.add_objective_term(row[1], hp.du);
        m.add_objective_term(row[2], hp.dd);
        ch_bl.push(pc);
        ds_bl.push(pd);
        bids.push(row);
    }

    // per-step columns and rows
    let mut soe = Vec::with_capacity(n);
    let fr = &inputs.contents.fractions;
    for t in 0..n {
        let h = g.hour_of_step(t);
        let [bn, bdu, bdd] = bids[h];
        let pc = m.add_continuous(t_name("p_ch", t), 0.0, pmax)?;
        let pd = m.add_continuous(t_name("p_ds", t), 0.0, pmax)?;
        if !opt.relax_step_binaries {
            let bc = m.add_binary(t_name("b_ch", t))?;
            let bd = m.add_binary(t_name("b_ds", t))?;
            m.add_constraint(t_name("ch_min", t), family::POWER_BOUNDS, [(pc, 1.0), (bc, -pmin)], Sense::Ge, 0.0)?;
            m.add_constraint(t_name("ch_max", t), family::POWER_BOUNDS, [(pc, 1.0), (bc, -pmax)], Sense::Le, 0.0)?;
            m.add_constraint(t_name("ds_min", t), family::POWER_BOUNDS, [(pd, 1.0), (bd, -pmin)], Sense::Ge, 0.0)?;
            m.add_constraint(t_name("ds_max", t), family::POWER_BOUNDS, [(pd, 1.0), (bd, -pmax)], Sense::Le, 0.0)?;
            m.add_constraint(t_name("excl", t), family::EXCLUSIVITY, [(bc, 1.0), (bd, 1.0)], Sense::Le, 1.0)?;
        }
        let s = m.add_continuous(t_name("soe", t), smin, smax)?;

        let (en, edu, edd) = activation_energy(inputs, t);
        let mut terms = vec![
            (s, 1.0),
            (ch_bl[h], -spec.eta_ch * dt),
            (ds_bl[h], dt / spec.eta_ds),
            (bn, -en),
            (bdu, -edu),
            (bdd, -edd),
        ];
        let rhs = if t == 0 {
            inputs.s0
        } else {
            terms.push((soe[t - 1], -1.0));
            0.0
        };
        m.add_constraint(t_name("soe_rec", t), family::SOE, terms, Sense::Eq, rhs)?;

        m.add_constraint(
            t_name("droop", t),
            family::DROOP,
            [
                (pc, 1.0),
                (pd, -1.0),
                (ch_bl[h], -1.0),
                (ds_bl[h], 1.0),
                (bn, -(fr.n_down[t] - fr.n_up[t])),
                (bdd, -fr.d_down[t]),
                (bdu, fr.d_up[t]),
            ],
            Sense::Eq,
            0.0,
        )?;

        if opt.degradation_in_objective {
            let k = inputs.cyc_lin.k_cyc * dt;
            m.add_objective_term(pc, -k);
            m.add_objective_term(pd, -k);
            let mut zs = Vec::with_capacity(3);
            let mut ys = Vec::with_capacity(3);
            for (k, seg) in inputs.cal_lin.segments.iter().enumerate() {
                let z = m.add_binary(tk_name("z_cal", t, k))?;
                let y = m.add_continuous(tk_name("y_cal", t, k), 0.0, seg.hi)?;
                m.add_constraint(tk_name("cal_lo", t, k), family::CALENDAR, [(y, 1.0), (z, -seg.lo)], Sense::Ge, 0.0)?;
                m.add_constraint(tk_name("cal_hi", t, k), family::CALENDAR, [(y, 1.0), (z, -seg.hi)], Sense::Le, 0.0)?;
                m.add_objective_term(y, -seg.slope);
                m.add_objective_term(z, -seg.intercept);
                zs.push((z, 1.0));
                ys.push((y, 1.0));
            }
            m.add_constraint(t_name("cal_pick", t), family::CALENDAR, zs, Sense::Eq, 1.0)?;
            ys.push((s, -1.0));
            m.add_constraint(t_name("cal_sum", t), family::CALENDAR, ys, Sense::Eq, 0.0)?;
        }
        soe.push(s);
    }

    if opt.requirements {
        for h in 0..g.hours {
            let [bn, bdu, bdd] = bids[h];
            let (pc, pd) = (ch_bl[h], ds_bl[h]);
            m.add_constraint(
                h_name("req_up", h),
                family::POWER_REQUIREMENT,
                [(bn, REQ_N), (bdu, 1.0), (bdd, REQ_OPPOSITE), (pc, -1.0), (pd, 1.0)],
                Sense::Le,
                pmax,
            )?;
            m.add_constraint(
                h_name("req_down", h),
                family::POWER_REQUIREMENT,
                [(bn, REQ_N), (bdd, 1.0), (bdu, REQ_OPPOSITE), (pc, 1.0), (pd, -1.0)],
                Sense::Le,
                pmax,
            )?;

            // hour-start SoE: last step of the previous hour, or s0
            let (start, s_const) = if h == 0 {
                (None, inputs.s0)
            } else {
                (Some(soe[g.steps_of_hour(h).start - 1]), 0.0)
            };
            let third = 1.0 / 3.0;
            let scenarios: [(&str, Vec<(VarId, f64)>); 5] = [
                ("end_lock", vec![(pc, 1.0), (pd, -1.0)]),
                ("end_dn20", vec![(pc, third), (pd, -third), (bn, third), (bdd, third)]),
                ("end_up20", vec![(pc, third), (pd, -third), (bn, -third), (bdu, -third)]),
                ("end_dn60", vec![(pc, 1.0), (pd, -1.0), (bn, 1.0), (bdd, third)]),
                ("end_up60", vec![(pc, 1.0), (pd, -1.0), (bn, -1.0), (bdu, -third)]),
            ];
            for (tag, mut terms) in scenarios {
                if let Some(s) = start {
                    terms.push((s, 1.0));
                }
                m.add_constraint(h_name(&format!("{tag}_lo"), h), family::ENDURANCE, terms.clone(), Sense::Ge, smin - s_const)?;
                m.add_constraint(h_name(&format!("{tag}_hi"), h), family::ENDURANCE, terms, Sense::Le, smax - s_const)?;
            }
        }
    }
    Ok(m)
}

/// Re-evaluates every row and bound of `model` at `x`.
pub fn validate_solution(model: &MilpModel, x: &[f64]) -> Result<ViolationReport, BuildError> {
    Ok(model.violations(x, AUDIT_TOL)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RevenueBreakdown {
    pub r_da: f64,
    pub r_n: f64,
    pub r_du: f64,
    pub r_dd: f64,
    pub c_da: f64,
    /// Linearized degradation cost as priced in the objective (0 when the
    /// objective carries none).
    pub c_deg_lin: f64,
}

impl RevenueBreakdown {
    pub fn r_fcr(&self) -> f64 {
        self.r_n + self.r_du + self.r_dd
    }

    /// The day model's objective value.
    pub fn objective(&self) -> f64 {
        self.r_da + self.r_fcr() - self.c_da - self.c_deg_lin
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub status: String,
    pub objective: f64,
    pub gap: f64,
    pub wall_time_s: f64,
    pub backend: String,
}

/// Semantic view of a solved day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySolution {
    pub day_index: usize,
    pub case: CaseId,
    pub degradation_in_objective: bool,
    pub step_hours: f64,
    pub s0: f64,
    pub p_ch_bl: Vec<f64>,
    pub p_ds_bl: Vec<f64>,
    pub bid_n: Vec<f64>,
    pub bid_du: Vec<f64>,
    pub bid_dd: Vec<f64>,
    pub p_ch: Vec<f64>,
    pub p_ds: Vec<f64>,
    pub soe: Vec<f64>,
    pub revenue: RevenueBreakdown,
    /// Nonlinear post-calculated aging.
    pub aging: AgingBreakdown,
    pub stats: SolveStats,
}

impl DaySolution {
    pub fn hours(&self) -> usize {
        self.p_ch_bl.len()
    }

    pub fn final_soe(&self) -> f64 {
        self.soe.last().copied().unwrap_or(self.s0)
    }

    /// Baseline in load convention (charging positive), MW.
    pub fn baseline(&self, h: usize) -> f64 {
        self.p_ch_bl[h] - self.p_ds_bl[h]
    }

    pub fn bid(&self, m: Market, h: usize) -> f64 {
        match m {
            Market::N => self.bid_n[h],
            Market::DU => self.bid_du[h],
            Market::DD => self.bid_dd[h],
        }
    }

    /// SoE at the start of hour `h`.
    pub fn hour_start_soe(&self, h: usize) -> f64 {
        if h == 0 {
            self.s0
        } else {
            let sph = self.soe.len() / self.hours();
            self.soe[h * sph - 1]
        }
    }

    /// Profit with post-calculated nonlinear degradation.
    pub fn profit(&self) -> f64 {
        self.revenue.r_da + self.revenue.r_fcr() - self.revenue.c_da - self.aging.total_cost()
    }

    pub fn throughput_mwh(&self) -> f64 {
        self.p_ch.iter().zip(&self.p_ds).map(|(c, d)| (c + d) * self.step_hours).sum()
    }
}

/// Unpacks a solution vector through the name registry.
pub fn extract_day_solution(model: &MilpModel, x: &[f64], inputs: &DayInputs) -> Result<DaySolution, BuildError> {
    if x.len() != model.num_vars() {
        return Err(MilpError::LengthMismatch {
            expected: model.num_vars(),
            got: x.len(),
        }
        .into());
    }
    let get = |name: String| -> Result<f64, BuildError> {
        model.var(&name).map(|v| x[v.0]).ok_or(BuildError::RegistryMiss(name))
    };
    let g = inputs.grid;
    let hourly = |base: &str| (0..g.hours).map(|h| get(h_name(base, h))).collect::<Result<Vec<_>, _>>();
    let per_step = |base: &str| (0..g.len()).map(|t| get(t_name(base, t))).collect::<Result<Vec<_>, _>>();
    let p_ch_bl = hourly("p_ch_bl")?;
    let p_ds_bl = hourly("p_ds_bl")?;
    let bid_n = hourly("bid_n")?;
    let bid_du = hourly("bid_du")?;
    let bid_dd = hourly("bid_dd")?;
    let p_ch = per_step("p_ch")?;
    let p_ds = per_step("p_ds")?;
    let soe = per_step("soe")?;

    let mut rev = RevenueBreakdown::default();
    for h in 0..g.hours {
        let hp = hour_prices(inputs, h);
        rev.r_da += p_ds_bl[h] * hp.discharge;
        rev.c_da += p_ch_bl[h] * hp.charge;
        rev.r_n += bid_n[h] * hp.n;
        rev.r_du += bid_du[h] * hp.du;
        rev.r_dd += bid_dd[h] * hp.dd;
    }
    if inputs.options.degradation_in_objective {
        let dt = g.step_hours();
        for t in 0..g.len() {
            rev.c_deg_lin += inputs.cyc_lin.k_cyc * dt * (p_ch[t] + p_ds[t]);
            for (k, seg) in inputs.cal_lin.segments.iter().enumerate() {
                rev.c_deg_lin += seg.slope * get(tk_name("y_cal", t, k))? + seg.intercept * get(tk_name("z_cal", t, k))?;
            }
        }
    }
    Ok(DaySolution {
        day_index: g.day_index,
        case: inputs.case,
        degradation_in_objective: inputs.options.degradation_in_objective,
        step_hours: g.step_hours(),
        s0: inputs.s0,
        p_ch_bl,
        p_ds_bl,
        bid_n,
        bid_du,
        bid_dd,
        p_ch,
        p_ds,
        soe,
        revenue: rev,
        aging: AgingBreakdown::default(),
        stats: SolveStats::default(),
    })
}

/// Per-step SoE change implied by the recursion row, MWh.
pub fn step_flows(sol: &DaySolution, inputs: &DayInputs) -> Vec<f64> {
    let g = inputs.grid;
    let dt = g.step_hours();
    (0..g.len())
        .map(|t| {
            let h = g.hour_of_step(t);
            let (en, edu, edd) = activation_energy(inputs, t);
            (sol.p_ch_bl[h] * inputs.spec.eta_ch - sol.p_ds_bl[h] / inputs.spec.eta_ds) * dt
                + sol.bid_n[h] * en
                + sol.bid_du[h] * edu
                + sol.bid_dd[h] * edd
        })
        .collect()
}

/// Worst violation of the power requirement and endurance inequalities,
/// re-derived from the extracted hourly values (independent of the model
/// rows). Zero when all hold.
pub fn requirement_audit(sol: &DaySolution, spec: &BatterySpec) -> f64 {
    let (smin, smax) = (spec.s_min(), spec.s_max());
    let mut worst = 0.0f64;
    let over = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
    for h in 0..sol.hours() {
        let (n, du, dd) = (sol.bid_n[h], sol.bid_du[h], sol.bid_dd[h]);
        let bl = sol.baseline(h);
        let s = sol.hour_start_soe(h);
        worst = worst.max((REQ_N * n + du + REQ_OPPOSITE * dd - bl - spec.p_max).max(0.0));
        worst = worst.max((REQ_N * n + dd + REQ_OPPOSITE * du + bl - spec.p_max).max(0.0));
        for v in [
            s + bl,
            s + (bl + n + dd) / 3.0,
            s + (bl - n - du) / 3.0,
            s + bl + n + dd / 3.0,
            s + bl - n - du / 3.0,
        ] {
            worst = worst.max(over(v, smin, smax));
        }
    }
    worst
}

/// The all-idle point: no trades, no bids, SoE held at s0. Feasible for
/// every case when s0 lies within the SoE bounds.
pub fn idle_point(model: &MilpModel, inputs: &DayInputs) -> Vec<f64> {
    let mut x = vec![0.0; model.num_vars()];
    for t in 0..inputs.grid.len() {
        if let Some(v) = model.var(&t_name("soe", t)) {
            x[v.0] = inputs.s0;
        }
        if inputs.options.degradation_in_objective {
            let k = inputs
                .cal_lin
                .segments
                .iter()
                .position(|s| s.lo <= inputs.s0 && inputs.s0 <= s.hi)
                .unwrap_or(0);
            x[model.var(&tk_name("z_cal", t, k)).expect("z column").0] = 1.0;
            x[model.var(&tk_name("y_cal", t, k)).expect("y column").0] = inputs.s0;
        }
    }
    x
}
