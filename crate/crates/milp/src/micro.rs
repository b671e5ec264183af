//! Exact solver for tiny MILPs.
//!
//! Integer columns are enumerated implicitly: depth-first branch and bound
//! over the LP relaxation, pruning only subtrees whose relaxation bound cannot
//! beat the incumbent. With no integer columns this is a single simplex solve.

use std::time::Instant;

use crate::model::{MilpModel, ObjSense};
use crate::simplex::{solve_lp, LpOutcome};
use crate::{Limits, MilpError, SolveResult, SolveStatus};

const INT_TOL: f64 = 1e-7;

/// Size caps for [`solve_micro`]. Fixed columns do not count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MicroCaps {
    pub max_integer: usize,
    pub max_continuous: usize,
}

impl Default for MicroCaps {
    fn default() -> Self {
        Self {
            max_integer: 24,
            max_continuous: 200,
        }
    }
}

pub fn solve_micro(model: &MilpModel, limits: Limits, caps: &MicroCaps) -> Result<SolveResult, MilpError> {
    model.check()?;
    let free = model.variables.iter().filter(|v| !v.is_fixed());
    let (ints, conts) = free.fold((0, 0), |(i, c), v| if v.kind.is_integral() { (i + 1, c) } else { (i, c + 1) });
    if ints > caps.max_integer || conts > caps.max_continuous {
        return Err(MilpError::TooLarge {
            binaries: ints,
            continuous: conts,
            max_binaries: caps.max_integer,
            max_continuous: caps.max_continuous,
        });
    }

    let start = Instant::now();
    let mut lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    for (j, v) in model.variables.iter().enumerate() {
        if v.kind.is_integral() {
            lower[j] = lower[j].ceil();
            upper[j] = upper[j].floor();
        }
    }

    let mut search = Search {
        model,
        sign: match model.objective.sense {
            ObjSense::Maximize => 1.0,
            ObjSense::Minimize => -1.0,
        },
        incumbent: None,
        nodes: 0,
        deadline: start + limits.time,
        timed_out: false,
    };
    search.branch(&mut lower, &mut upper)?;
    let wall_time = start.elapsed();
    log::debug!("micro solver: {} nodes in {:?}", search.nodes, wall_time);

    Ok(match search.incumbent {
        Some((objective, solution)) => SolveResult {
            status: if search.timed_out { SolveStatus::TimeLimit } else { SolveStatus::Optimal },
            objective,
            solution,
            gap: if search.timed_out { f64::NAN } else { 0.0 },
            wall_time,
            message: None,
        },
        None => SolveResult {
            status: if search.timed_out { SolveStatus::TimeLimit } else { SolveStatus::Infeasible },
            objective: f64::NAN,
            solution: Vec::new(),
            gap: f64::NAN,
            wall_time,
            message: None,
        },
    })
}

struct Search<'a> {
    model: &'a MilpModel,
    /// +1 for maximisation; internal comparisons are done on `sign * objective`.
    sign: f64,
    incumbent: Option<(f64, Vec<f64>)>,
    nodes: usize,
    deadline: Instant,
    timed_out: bool,
}

impl Search<'_> {
    fn better_than_incumbent(&self, value: f64) -> bool {
        match &self.incumbent {
            None => true,
            Some((best, _)) => {
                let b = self.sign * best;
                self.sign * value > b + 1e-9 * b.abs().max(1.0)
            }
        }
    }

    fn branch(&mut self, lower: &mut [f64], upper: &mut [f64]) -> Result<(), MilpError> {
        if Instant::now() > self.deadline {
            self.timed_out = true;
            return Ok(());
        }
        self.nodes += 1;
        let (x, objective) = match solve_lp(self.model, lower, upper) {
            LpOutcome::Optimal { x, objective } => (x, objective),
            LpOutcome::Infeasible => return Ok(()),
            LpOutcome::Unbounded => return Err(MilpError::Unbounded),
        };
        if !self.better_than_incumbent(objective) {
            return Ok(());
        }
        // Most fractional integer column; lowest index on ties.
        let mut pick: Option<(usize, f64)> = None;
        for (j, v) in self.model.variables.iter().enumerate() {
            if !v.kind.is_integral() {
                continue;
            }
            let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
            if frac > INT_TOL && pick.is_none_or(|(_, f)| frac > f + 1e-12) {
                pick = Some((j, frac));
            }
        }
        let Some((j, _)) = pick else {
            let mut x = x;
            for (j, v) in self.model.variables.iter().enumerate() {
                if v.kind.is_integral() {
                    x[j] = x[j].round();
                }
            }
            let objective = self.model.objective.value(&x);
            self.incumbent = Some((objective, x));
            return Ok(());
        };

        let (lo, hi) = (lower[j], upper[j]);
        let down = x[j].floor();
        let up = x[j].ceil();
        let up_first = x[j] - down >= 0.5;
        for branch_up in [up_first, !up_first] {
            if branch_up {
                lower[j] = up;
            } else {
                upper[j] = down;
            }
            let res = self.branch(lower, upper);
            lower[j] = lo;
            upper[j] = hi;
            res?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MilpModel, ObjSense, Sense, VarKind};

    #[test]
    fn knapsack_two_binaries_matches_enumeration() {
        // max 5a + 4b + x, 3a + 2b + x <= 4, x in [0, 1.5]
        let mut m = MilpModel::new("k", ObjSense::Maximize);
        let a = m.add_binary("a").unwrap();
        let b = m.add_binary("b").unwrap();
        let x = m.add_continuous("x", 0.0, 1.5).unwrap();
        m.add_constraint("cap", "f", [(a, 3.0), (b, 2.0), (x, 1.0)], Sense::Le, 4.0)
            .unwrap();
        m.add_objective_term(a, 5.0);
        m.add_objective_term(b, 4.0);
        m.add_objective_term(x, 1.0);
        // by hand: (0,0)->1.5, (1,0)->5+1=6, (0,1)->4+1.5=5.5, (1,1) infeasible
        let r = solve_micro(&m, Limits::default(), &MicroCaps::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 6.0).abs() < 1e-9);
        assert_eq!(r.solution[0], 1.0);
        assert_eq!(r.solution[1], 0.0);
    }

    #[test]
    fn general_integer_and_minimise() {
        // min -x - y, 2x + 2y <= 7, x,y integer in [0, 10] -> -3
        let mut m = MilpModel::new("i", ObjSense::Minimize);
        let x = m.add_var("x", 0.0, 10.0, VarKind::Integer).unwrap();
        let y = m.add_var("y", 0.0, 10.0, VarKind::Integer).unwrap();
        m.add_constraint("c", "f", [(x, 2.0), (y, 2.0)], Sense::Le, 7.0).unwrap();
        m.add_objective_term(x, -1.0);
        m.add_objective_term(y, -1.0);
        let r = solve_micro(&m, Limits::default(), &MicroCaps::default()).unwrap();
        assert!((r.objective + 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_problem() {
        let mut m = MilpModel::new("inf", ObjSense::Maximize);
        let b = m.add_binary("b").unwrap();
        m.add_constraint("c", "f", [(b, 2.0)], Sense::Eq, 1.0).unwrap();
        let r = solve_micro(&m, Limits::default(), &MicroCaps::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn caps_enforced_on_free_columns_only() {
        let mut m = MilpModel::new("big", ObjSense::Maximize);
        for i in 0..30 {
            let b = m.add_binary(format!("b{i}")).unwrap();
            if i >= 10 {
                m.set_bounds(b, 0.0, 0.0).unwrap();
            }
        }
        assert!(solve_micro(&m, Limits::default(), &MicroCaps::default()).is_ok());
        let caps = MicroCaps { max_integer: 5, ..Default::default() };
        assert!(matches!(solve_micro(&m, Limits::default(), &caps), Err(MilpError::TooLarge { .. })));
    }

    #[test]
    fn unbounded_reported() {
        let mut m = MilpModel::new("u", ObjSense::Maximize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.add_objective_term(x, 1.0);
        assert!(matches!(
            solve_micro(&m, Limits::default(), &MicroCaps::default()),
            Err(MilpError::Unbounded)
        ));
    }
}
