//! Dense two-phase primal simplex with Bland's rule.
//!
//! Only meant for the small problems handled by the micro solver. Columns are
//! shifted to a zero lower bound (mirrored or split when the lower bound is
//! infinite), finite upper bounds become explicit rows, and fixed columns are
//! substituted out before the tableau is built.

use crate::model::{MilpModel, ObjSense, Sense};

const PIVOT_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// How an original column is rebuilt from tableau columns:
/// `x = offset + sign * tableau[col]` (plus `- tableau[neg]` for split columns).
#[derive(Debug, Clone, Copy)]
enum ColMap {
    Fixed(f64),
    Shifted { col: usize, offset: f64, sign: f64 },
    Split { pos: usize, neg: usize },
}

/// Solves the LP relaxation of `model` with the column bounds replaced by
/// `lower`/`upper`. The objective sense of the model is honoured.
pub fn solve_lp(model: &MilpModel, lower: &[f64], upper: &[f64]) -> LpOutcome {
    let n = model.num_vars();
    debug_assert_eq!(lower.len(), n);
    debug_assert_eq!(upper.len(), n);

    if (0..n).any(|j| lower[j] > upper[j] + FEAS_EPS) {
        return LpOutcome::Infeasible;
    }

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    // (tableau column, upper limit) for columns needing an explicit bound row
    let mut ub_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lower[j], upper[j].max(lower[j]));
        if l.is_finite() && u.is_finite() && (u - l).abs() <= 0.0 {
            maps.push(ColMap::Fixed(l));
        } else if l.is_finite() {
            let col = ncols;
            ncols += 1;
            if u.is_finite() {
                ub_rows.push((col, u - l));
            }
            maps.push(ColMap::Shifted { col, offset: l, sign: 1.0 });
        } else if u.is_finite() {
            let col = ncols;
            ncols += 1;
            maps.push(ColMap::Shifted { col, offset: u, sign: -1.0 });
        } else {
            maps.push(ColMap::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }

    // Rows in tableau space: (coefficients over structural columns, sense, rhs)
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(model.num_rows() + ub_rows.len());
    for c in &model.constraints {
        let mut coeffs = vec![0.0; ncols];
        let mut rhs = c.rhs;
        for &(v, a) in &c.terms {
            match maps[v.0] {
                ColMap::Fixed(val) => rhs -= a * val,
                ColMap::Shifted { col, offset, sign } => {
                    coeffs[col] += a * sign;
                    rhs -= a * offset;
                }
                ColMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        if coeffs.iter().all(|&a| a == 0.0) {
            let ok = match c.sense {
                Sense::Le => rhs >= -FEAS_EPS,
                Sense::Ge => rhs <= FEAS_EPS,
                Sense::Eq => rhs.abs() <= FEAS_EPS,
            };
            if !ok {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        rows.push((coeffs, c.sense, rhs));
    }
    for &(col, lim) in &ub_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        rows.push((coeffs, Sense::Le, lim));
    }

    let sign = match model.objective.sense {
        ObjSense::Maximize => 1.0,
        ObjSense::Minimize => -1.0,
    };
    let mut cost = vec![0.0; ncols];
    let mut obj_offset = model.objective.constant;
    for j in 0..n {
        let c = model.objective.coeffs[j];
        if c == 0.0 {
            continue;
        }
        match maps[j] {
            ColMap::Fixed(val) => obj_offset += c * val,
            ColMap::Shifted { col, offset, sign: s } => {
                cost[col] += sign * c * s;
                obj_offset += c * offset;
            }
            ColMap::Split { pos, neg } => {
                cost[pos] += sign * c;
                cost[neg] -= sign * c;
            }
        }
    }

    let tab = match Tableau::solve(rows, ncols, &cost) {
        TableauOutcome::Optimal(t) => t,
        TableauOutcome::Infeasible => return LpOutcome::Infeasible,
        TableauOutcome::Unbounded => return LpOutcome::Unbounded,
    };

    let y = tab.structural_values(ncols);
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            ColMap::Fixed(v) => v,
            ColMap::Shifted { col, offset, sign } => offset + sign * y[col],
            ColMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective = model.objective.value(&x);
    debug_assert!((objective - (obj_offset + sign * tab.objective())).abs() <= 1e-6 * (1.0 + objective.abs()));
    LpOutcome::Optimal { x, objective }
}

enum TableauOutcome {
    Optimal(Tableau),
    Infeasible,
    Unbounded,
}

/// Row-major dense tableau. The last row holds reduced costs `z_j - c_j`
/// (maximisation form) and the last column the right-hand side.
struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may never enter the basis again (artificials after phase 1).
    blocked: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn objective(&self) -> f64 {
        self.at(self.m, self.rhs_col())
    }

    fn structural_values(&self, ncols: usize) -> Vec<f64> {
        let mut y = vec![0.0; ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < ncols {
                y[b] = self.at(i, self.rhs_col()).max(0.0);
            }
        }
        y
    }

    fn solve(rows: Vec<(Vec<f64>, Sense, f64)>, ncols: usize, cost: &[f64]) -> TableauOutcome {
        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        // After normalising rhs >= 0, Ge and Eq rows need artificials.
        let normalised: Vec<(Vec<f64>, Sense, f64)> = rows
            .into_iter()
            .map(|(a, s, b)| {
                if b < 0.0 {
                    let flipped = match s {
                        Sense::Le => Sense::Ge,
                        Sense::Ge => Sense::Le,
                        Sense::Eq => Sense::Eq,
                    };
                    (a.into_iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a, s, b)
                }
            })
            .collect();
        let n_art = normalised.iter().filter(|r| r.1 != Sense::Le).count();
        let total = ncols + n_slack + n_art;
        let width = total + 1;
        let mut data = vec![0.0; (m + 1) * width];
        let mut basis = vec![0usize; m];
        let mut slack = ncols;
        let mut art = ncols + n_slack;
        let art_start = art;
        for (i, (a, s, b)) in normalised.iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            row[..ncols].copy_from_slice(a);
            row[total] = *b;
            match s {
                Sense::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Sense::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        let mut t = Tableau {
            m,
            width,
            data,
            basis,
            blocked: vec![false; total],
        };

        if n_art > 0 {
            // Phase 1: maximise -sum(artificials). z_j - c_j = -sum over artificial rows.
            for j in 0..width {
                let mut s = 0.0;
                for i in 0..m {
                    if t.basis[i] >= art_start {
                        s -= t.at(i, j);
                    }
                }
                t.data[m * width + j] = if j >= art_start && j < total { 0.0 } else { s };
            }
            if !t.iterate() {
                // Phase 1 is bounded by construction.
                return TableauOutcome::Infeasible;
            }
            if t.objective() < -FEAS_EPS * (1.0 + m as f64) {
                return TableauOutcome::Infeasible;
            }
            for j in art_start..total {
                t.blocked[j] = true;
            }
            // Pivot remaining basic artificials out where possible.
            for i in 0..m {
                if t.basis[i] >= art_start {
                    if let Some(j) = (0..art_start).find(|&j| t.at(i, j).abs() > PIVOT_EPS) {
                        t.pivot(i, j);
                    }
                }
            }
        }

        // Phase 2 reduced costs: z_j - c_j = sum_i c_B(i) a_ij - c_j
        let cb: Vec<f64> = t
            .basis
            .iter()
            .map(|&b| if b < ncols { cost[b] } else { 0.0 })
            .collect();
        for j in 0..width {
            let mut s = 0.0;
            for (i, &c) in cb.iter().enumerate() {
                if c != 0.0 {
                    s += c * t.at(i, j);
                }
            }
            if j < ncols {
                s -= cost[j];
            }
            t.data[m * width + j] = s;
        }
        if !t.iterate() {
            return TableauOutcome::Unbounded;
        }
        TableauOutcome::Optimal(t)
    }

    /// Runs Bland's-rule pivots until optimal. Returns false when unbounded.
    fn iterate(&mut self) -> bool {
        let total = self.width - 1;
        loop {
            let obj_row = self.m * self.width;
            let entering = (0..total).find(|&j| !self.blocked[j] && self.data[obj_row + j] < -PIVOT_EPS);
            let Some(e) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, e);
                if a > PIVOT_EPS {
                    let ratio = self.at(i, total) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((l, _)) = leave else {
                return false;
            };
            self.pivot(l, e);
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        self.data[r * w + c] = 1.0;
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                if pv != 0.0 {
                    *x -= f * pv;
                }
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MilpModel, ObjSense, Sense};

    fn bounds(m: &MilpModel) -> (Vec<f64>, Vec<f64>) {
        (
            m.variables.iter().map(|v| v.lower).collect(),
            m.variables.iter().map(|v| v.upper).collect(),
        )
    }

    #[test]
    fn textbook_max() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut m = MilpModel::new("t", ObjSense::Maximize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
        m.add_constraint("a", "f", [(x, 1.0)], Sense::Le, 4.0).unwrap();
        m.add_constraint("b", "f", [(y, 2.0)], Sense::Le, 12.0).unwrap();
        m.add_constraint("c", "f", [(x, 3.0), (y, 2.0)], Sense::Le, 18.0).unwrap();
        m.add_objective_term(x, 3.0);
        m.add_objective_term(y, 5.0);
        let (l, u) = bounds(&m);
        match solve_lp(&m, &l, &u) {
            LpOutcome::Optimal { x: sol, objective } => {
                assert!((objective - 36.0).abs() < 1e-9);
                assert!((sol[0] - 2.0).abs() < 1e-9 && (sol[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_ge_and_negative_bounds() {
        // min x + y, x + y >= 1, x - y = 0.5, x in [-1, 3], y in [-2, inf)
        let mut m = MilpModel::new("t", ObjSense::Minimize);
        let x = m.add_continuous("x", -1.0, 3.0).unwrap();
        let y = m.add_continuous("y", -2.0, f64::INFINITY).unwrap();
        m.add_constraint("ge", "f", [(x, 1.0), (y, 1.0)], Sense::Ge, 1.0).unwrap();
        m.add_constraint("eq", "f", [(x, 1.0), (y, -1.0)], Sense::Eq, 0.5).unwrap();
        m.add_objective_term(x, 1.0);
        m.add_objective_term(y, 1.0);
        m.objective.constant = 2.0;
        let (l, u) = bounds(&m);
        match solve_lp(&m, &l, &u) {
            LpOutcome::Optimal { x: sol, objective } => {
                assert!((objective - 3.0).abs() < 1e-9, "{objective}");
                assert!((sol[0] - 0.75).abs() < 1e-9);
                assert!((sol[1] - 0.25).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn free_and_upper_only_columns() {
        // max -x - z, x free, x >= -3 via row; z <= 5 with no lower, z >= 1 via row
        let mut m = MilpModel::new("t", ObjSense::Maximize);
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let z = m.add_continuous("z", f64::NEG_INFINITY, 5.0).unwrap();
        m.add_constraint("x", "f", [(x, 1.0)], Sense::Ge, -3.0).unwrap();
        m.add_constraint("z", "f", [(z, 1.0)], Sense::Ge, 1.0).unwrap();
        m.add_objective_term(x, -1.0);
        m.add_objective_term(z, -1.0);
        let (l, u) = bounds(&m);
        match solve_lp(&m, &l, &u) {
            LpOutcome::Optimal { objective, .. } => assert!((objective - 2.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut m = MilpModel::new("t", ObjSense::Maximize);
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        m.add_constraint("r", "f", [(x, 1.0)], Sense::Ge, 2.0).unwrap();
        let (l, u) = bounds(&m);
        assert_eq!(solve_lp(&m, &l, &u), LpOutcome::Infeasible);

        let mut m = MilpModel::new("t", ObjSense::Maximize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.add_objective_term(x, 1.0);
        let (l, u) = bounds(&m);
        assert_eq!(solve_lp(&m, &l, &u), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale cycling example; Bland's rule must terminate.
        let mut m = MilpModel::new("beale", ObjSense::Maximize);
        let v: Vec<_> = (0..4)
            .map(|i| m.add_continuous(format!("x{i}"), 0.0, f64::INFINITY).unwrap())
            .collect();
        m.add_constraint("r1", "f", [(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)], Sense::Le, 0.0)
            .unwrap();
        m.add_constraint("r2", "f", [(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)], Sense::Le, 0.0)
            .unwrap();
        m.add_constraint("r3", "f", [(v[2], 1.0)], Sense::Le, 1.0).unwrap();
        for (j, c) in [0.75, -150.0, 0.02, -6.0].into_iter().enumerate() {
            m.add_objective_term(v[j], c);
        }
        let (l, u) = bounds(&m);
        match solve_lp(&m, &l, &u) {
            LpOutcome::Optimal { objective, .. } => assert!((objective - 0.05).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
