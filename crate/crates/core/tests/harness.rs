use fgl_core::harness::*;
use fgl_core::solver::RunOptions;

#[test]
fn table1_rows_ordered_coarse_to_fine() {
    let rows = table1_experiment(&[1.4], &[1.0 / 240.0, 1.0 / 200.0, 1.0 / 220.0], 0.5).unwrap();
    assert!(rows.windows(2).all(|w| w[0].h > w[1].h));
    assert!(rows[0].order.is_none() && rows[1].order.is_some());
    let r = &rows[0];
    assert!((r.abs_error - 2.482153e-9).abs() <= 0.02 * 2.482153e-9);
}

#[test]
fn table1_first_cell_frozen() {
    let rows = table1_experiment(&[1.2], &[1.0 / 200.0], 0.5).unwrap();
    assert!((rows[0].abs_error - 1.3262392017932001e-9).abs() < 1e-15);
    assert_eq!(table1_target(1.2, 1.0 / 200.0), Some((1.326188e-9, None)));
}

#[test]
fn odd_denominator_rejected() {
    assert!(table1_experiment(&[1.5], &[1.0 / 201.0], 0.5).is_err());
}

#[test]
fn reference_run_against_itself() {
    let p = ConvergenceTable::Three.params(1.7);
    let r = convergence_experiment(&p, &[(0.1, 0.2)], (0.1, 0.2), example2_initial, example2_initial, &RunOptions::default())
        .unwrap();
    assert_eq!(r.rows[0].error_l2h, 0.0);
    assert!(r.rows[0].temporal_order.is_none());
}

#[test]
fn coarse_reference_rejected() {
    let p = ConvergenceTable::Two.params(1.5);
    let r = convergence_experiment(&p, &TABLE_PAIRS, (0.05, 0.05), example2_initial, example2_initial, &RunOptions::default());
    assert!(r.is_err());
}

#[test]
fn table3_fine_error_matches_target_digits_unweighted() {
    // the target Table 3 fine-grid errors are reproduced by the unweighted U + V sum
    let r = convergence_experiment(
        &ConvergenceTable::Three.params(2.0),
        &TABLE_PAIRS,
        REFERENCE_PAIR,
        example2_initial,
        example2_initial,
        &RunOptions::default(),
    )
    .unwrap();
    let got = r.rows[1].unweighted_sum;
    assert!((got - 3.385359e-5).abs() < 1e-3 * 3.385359e-5, "{got}");
}

#[test]
fn zero_initial_collision_run_is_zero() {
    let opts = Example3Options {
        nx: 64,
        steps_per_unit: 10,
        t_final: Some(1.0),
        zero_initial: true,
        ..Example3Options::default()
    };
    for m in example3_run(Example3Variant::Fig72, &opts).unwrap() {
        assert!(m.energy.iter().all(|&(_, w)| w == 0.0));
        assert!(m.spacetime.iter().all(|(_, u, v)| u.iter().chain(v).all(|&x| x == 0.0)));
    }
}

#[test]
fn damping_family_orders_final_energy() {
    let opts = Example3Options {
        nx: 128,
        steps_per_unit: 20,
        t_final: Some(2.0),
        ..Example3Options::default()
    };
    let members = example3_run(Example3Variant::Fig74, &opts).unwrap();
    let finals: Vec<f64> = members.iter().map(|m| m.energy.last().unwrap().1).collect();
    assert!(finals.windows(2).all(|w| w[0] > w[1]), "{finals:?}");
}

#[test]
fn suite_is_deterministic_and_catches_injected_fault() {
    let a = invariant_suite(3).unwrap();
    let b = invariant_suite(3).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    let first = a.checks.iter().find(|c| c.name == "recursion_vs_direct").unwrap();
    assert_eq!(first.status, Status::Pass);
    let faulty = invariant_suite_with(3, Some(Fault::PerturbKappa)).unwrap();
    let hit = faulty.checks.iter().find(|c| c.name == "recursion_vs_direct").unwrap();
    assert_eq!(hit.status, Status::Fail);
}

#[test]
fn step_doubling_gives_third_order_local_error() {
    let s = step_doubling_slope(&ConvergenceTable::Two.params(1.8), 16, &[0.2, 0.1, 0.05]).unwrap();
    assert!((2.7..=3.3).contains(&s), "slope {s}");
}
