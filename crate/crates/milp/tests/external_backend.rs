//! External-solver adapter against HiGHS, plus export round trips and a
//! cross-backend property. HiGHS-dependent tests skip when `highspy` is not
//! importable.

use std::path::PathBuf;
use std::process::Command;
use std::time::Duration;

use fcr_milp::export::parse_mps;
use fcr_milp::{
    export_model, solve_external, solve_micro, ExportFormat, ExternalSolver, Limits, MicroCaps, MilpModel, ObjSense,
    Sense, SolveStatus, VarKind,
};
use proptest::prelude::*;

fn highs_command() -> Option<String> {
    let ok = Command::new("python3")
        .args(["-c", "import highspy"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    if !ok {
        eprintln!("highspy not importable; skipping");
        return None;
    }
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../tools/highs_solve.py");
    Some(format!(
        "python3 '{}' {{model_file}} {{solution_file}} {{time_limit}} {{gap}}",
        script.display()
    ))
}

fn limits() -> Limits {
    Limits {
        time: Duration::from_secs(30),
        gap: 1e-9,
    }
}

/// max x + y  s.t.  x + 2y <= 4, 3x + y <= 6, x, y in [0, 10]; optimum (1.6, 1.2).
fn small_lp() -> MilpModel {
    let mut m = MilpModel::new("lp", ObjSense::Maximize);
    let x = m.add_continuous("x", 0.0, 10.0).unwrap();
    let y = m.add_continuous("y", 0.0, 10.0).unwrap();
    m.add_constraint("c1", "cap", [(x, 1.0), (y, 2.0)], Sense::Le, 4.0).unwrap();
    m.add_constraint("c2", "cap", [(x, 3.0), (y, 1.0)], Sense::Le, 6.0).unwrap();
    m.add_objective_term(x, 1.0);
    m.add_objective_term(y, 1.0);
    m
}

#[test]
fn external_trivial_lp() {
    let Some(cmd) = highs_command() else { return };
    let r = solve_external(&small_lp(), &ExternalSolver::new(cmd), limits()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - 2.8).abs() < 1e-9);
    assert!((r.solution[0] - 1.6).abs() < 1e-9 && (r.solution[1] - 1.2).abs() < 1e-9);
}

#[test]
fn external_infeasible() {
    let Some(cmd) = highs_command() else { return };
    let mut m = MilpModel::new("inf", ObjSense::Minimize);
    let b = m.add_binary("b").unwrap();
    m.add_constraint("lo", "x", [(b, 1.0)], Sense::Ge, 0.5).unwrap();
    m.add_constraint("hi", "x", [(b, 1.0)], Sense::Le, 0.7).unwrap();
    let r = solve_external(&m, &ExternalSolver::new(cmd), limits()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    assert!(!r.has_solution());
}

#[test]
fn killed_solver_is_a_backend_error() {
    let r = solve_external(&small_lp(), &ExternalSolver::new("kill -9 $$"), limits()).unwrap();
    assert_eq!(r.status, SolveStatus::BackendError);
    assert!(r.message.unwrap().contains("signal"));
}

#[test]
fn missing_solver_binary_is_a_backend_error() {
    let r = solve_external(&small_lp(), &ExternalSolver::new("/nonexistent/solver {model_file}"), limits()).unwrap();
    assert_eq!(r.status, SolveStatus::BackendError);
    assert!(!r.has_solution());
}

#[test]
fn hung_solver_is_killed_at_the_limit() {
    let lim = Limits {
        time: Duration::from_millis(200),
        gap: 1e-6,
    };
    let mut solver = ExternalSolver::new("sleep 30; echo never");
    solver.kill_grace = Duration::from_millis(100);
    let r = solve_external(&small_lp(), &solver, lim).unwrap();
    assert_eq!(r.status, SolveStatus::TimeLimit);
    assert!(r.wall_time < Duration::from_secs(20));
}

#[test]
fn free_mps_round_trip_is_idempotent() {
    let mut m = small_lp();
    let b = m.add_binary("a_rather_long_binary_name[17]").unwrap();
    let i = m.add_var("count", -3.0, 7.0, VarKind::Integer).unwrap();
    let x = m.var("x").unwrap();
    m.add_constraint("link", "link", [(b, 1.0), (i, -0.25), (x, 1.0)], Sense::Eq, 1.5).unwrap();
    m.add_objective_term(i, -0.125);
    let first = export_model(&m, ExportFormat::MpsFree).unwrap();
    let back = parse_mps(&first.text).unwrap();
    let second = export_model(&back, ExportFormat::MpsFree).unwrap();
    assert_eq!(first.text, second.text);
    assert_eq!(back.num_vars(), m.num_vars());
    assert_eq!(back.num_rows(), m.num_rows());
}

#[test]
fn exported_names_survive_in_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = small_lp();
    m.add_binary("b_ds[t=0001]").unwrap();
    let e = export_model(&m, ExportFormat::MpsFixed).unwrap();
    let path = dir.path().join("m.mps");
    let sidecar = e.write(&path).unwrap();
    let names = std::fs::read_to_string(sidecar).unwrap();
    assert!(names.contains("b_ds[t=0001]"));
    assert!(e.text.lines().all(|l| !l.contains("b_ds[t=0001]")));
}

/// Small random knapsack-like MILPs: both backends must agree on the optimum.
fn random_model(costs: &[f64], weights: &[f64], cap: f64, cont_ub: f64) -> MilpModel {
    let mut m = MilpModel::new("rnd", ObjSense::Maximize);
    let mut terms = Vec::new();
    for (k, (&c, &w)) in costs.iter().zip(weights).enumerate() {
        let b = m.add_binary(format!("b{k}")).unwrap();
        let y = m.add_continuous(format!("y{k}"), 0.0, cont_ub).unwrap();
        // y only when b
        m.add_constraint(format!("on{k}"), "link", [(y, 1.0), (b, -cont_ub)], Sense::Le, 0.0).unwrap();
        m.add_objective_term(y, c);
        m.add_objective_term(b, -0.1 * c.abs());
        terms.push((y, w));
    }
    m.add_constraint("cap", "cap", terms, Sense::Le, cap).unwrap();
    m
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]
    #[test]
    fn micro_and_external_agree(
        costs in proptest::collection::vec(-2.0f64..5.0, 2..6),
        seed_w in proptest::collection::vec(0.2f64..3.0, 6),
        cap in 0.5f64..6.0,
    ) {
        let Some(cmd) = highs_command() else { return Ok(()) };
        let m = random_model(&costs, &seed_w[..costs.len()], cap, 2.0);
        let a = solve_micro(&m, limits(), &MicroCaps::default()).unwrap();
        let b = solve_external(&m, &ExternalSolver::new(cmd), limits()).unwrap();
        prop_assert_eq!(a.status, SolveStatus::Optimal);
        prop_assert_eq!(b.status, SolveStatus::Optimal);
        let scale = a.objective.abs().max(1.0);
        prop_assert!((a.objective - b.objective).abs() <= 1e-6 * scale, "{} vs {}", a.objective, b.objective);
    }
}
