use fgl_core::harness::{example2_initial, linear_mode_deviation, ConvergenceTable};
use fgl_core::operators::assemble;
use fgl_core::solver::*;
use fgl_core::{Complex64, Error};

fn table2() -> ModelParams {
    ConvergenceTable::Two.params(1.5)
}

#[test]
fn parameter_violations_are_all_listed() {
    let mut p = table2();
    p.alpha = 2.5;
    p.beta1 = -1.0;
    p.t_final = 0.0;
    let v = p.violations();
    assert_eq!(v.len(), 3, "{v:?}");
    assert!(v[0].contains("(1, 2]"));
    p.test_mode = true;
    p.beta1 = 0.0;
    assert_eq!(p.violations().len(), 2);
}

#[test]
fn zero_fields_stay_zero() {
    let p = table2();
    let grid = p.grid(16).unwrap();
    let init = FieldPair::zeros(grid.interior(), 0.0);
    let out = run(&p, grid, 5, &init, &RunOptions::default(), |_, _| {}).unwrap();
    assert!(out.final_state.u.iter().chain(&out.final_state.v).all(|z| *z == Complex64::new(0.0, 0.0)));
    assert!(out.bound.holds());
}

#[test]
fn linear_mode_is_exact() {
    assert!(linear_mode_deviation(2.0, 24).unwrap() <= 1e-12);
    assert!(linear_mode_deviation(-5.0, 24).unwrap() <= 1e-12);
}

#[test]
fn non_convergence_is_an_error_with_trace() {
    let p = table2();
    let grid = p.grid(10).unwrap();
    let init = init_fields(&grid, example2_initial, example2_initial).unwrap();
    let opts = RunOptions {
        max_iter: 1,
        ..RunOptions::default()
    };
    match run(&p, grid, 4, &init, &opts, |_, _| {}) {
        Err(Error::StepFailed { step, trace, source, .. }) => {
            assert_eq!(step, 1);
            assert_eq!(trace.points.len(), 1);
            assert!(matches!(*source, Error::NonConvergence(r) if !r.converged));
        }
        other => panic!("expected failure, got {:?}", other.map(|o| o.reports.len())),
    }
}

#[test]
fn dense_and_krylov_steps_agree() {
    let p = ConvergenceTable::Two.params(1.3);
    let grid = p.grid(96).unwrap();
    let init = init_fields(&grid, example2_initial, |x| Complex64::new(0.0, 1e-4 * (1.0 - x * x)))
        .unwrap();
    let op = assemble(p.alpha, grid).unwrap();
    let dense = StepMatrices::new(op.clone(), &p, 0.05, LinearSolverChoice::Dense).unwrap();
    let krylov = StepMatrices::new(op, &p, 0.05, LinearSolverChoice::Krylov).unwrap();
    assert!(krylov.is_krylov() && !dense.is_krylov());
    let (a, _) = step(&init, None, &dense, 1e-14, 200).unwrap();
    let (b, _) = step(&init, None, &krylov, 1e-14, 200).unwrap();
    let scale = field_max(&a);
    let diff = a.u.iter().chain(&a.v).zip(b.u.iter().chain(&b.v)).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(diff <= 1e-11 * scale, "diff {diff}");
}

#[test]
fn damping_shrinks_energy() {
    let mut p = table2();
    p.gamma1 = -1.0;
    p.gamma2 = -1.0;
    let grid = p.grid(20).unwrap();
    let init = init_fields(&grid, example2_initial, example2_initial).unwrap();
    let out = run(&p, grid, 20, &init, &RunOptions::default(), |_, _| {}).unwrap();
    let w = &out.trace.points;
    assert!(w.windows(2).all(|p| p[1].1 < p[0].1));
}

#[test]
fn precondition_violation_is_warned() {
    let p = ConvergenceTable::Three.params(1.5);
    let grid = p.grid(10).unwrap();
    let init = init_fields(&grid, example2_initial, example2_initial).unwrap();
    let out = run(&p, grid, 5, &init, &RunOptions::default(), |_, _| {}).unwrap();
    assert!(!out.bound.precondition);
    assert_eq!(out.warnings.len(), 1);
}

#[test]
fn snapshots_taken_at_requested_times() {
    let p = table2();
    let grid = p.grid(10).unwrap();
    let init = init_fields(&grid, example2_initial, example2_initial).unwrap();
    let opts = RunOptions {
        snapshot_times: vec![0.0, 0.5, 1.0],
        ..RunOptions::default()
    };
    let out = run(&p, grid, 10, &init, &opts, |_, _| {}).unwrap();
    let ts: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
    assert_eq!(ts, vec![0.0, 0.5, 1.0]);
}
