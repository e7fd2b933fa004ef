use bvtransfer::fixtures;
use bvtransfer::lambda::{
    action_to_lambda, equivalence_check, lambda_to_action, main_identity_residual, LambdaOps,
};
use bvtransfer::rational::int;
use bvtransfer::series::{Monomial, WeightWindow};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_actions_round_trip_and_agree() {
    let w = WeightWindow::new(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failing = 0;
    for _ in 0..40 {
        let space = fixtures::random_dg_space(&mut rng, 6);
        let s_int = fixtures::random_series_of_degree(&mut rng, &space.basis, w, 4, 0, 3);
        let action = fixtures::action_with(&space, s_int).unwrap();
        let ops = action_to_lambda(&action, &space.omega).unwrap();
        assert!(ops.validate(&space.omega).all_passed());
        let back = lambda_to_action(&ops, &space.omega, w).unwrap();
        // constants carry no operation
        let expected = action.total().unwrap().filter(|t| !t.mono.is_empty());
        assert_eq!(back.total().unwrap(), expected);
        let report = equivalence_check(&ops, &space.omega, w).unwrap();
        let bad: Vec<_> = report
            .checks
            .iter()
            .filter(|c| c.name.starts_with("equivalence") && !c.passed)
            .collect();
        assert!(bad.is_empty(), "{bad:#?}");
        if !report.check("qme_residual").unwrap().passed {
            failing += 1;
        }
    }
    assert!(
        failing > 10,
        "random actions should mostly violate the master equation"
    );
}

#[test]
fn twisted_solutions_satisfy_main_identity() {
    let w = WeightWindow::new(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..6 {
        let (space, action) = fixtures::random_space_with_solution(&mut rng, 6, w, 3, 2).unwrap();
        let ops = action_to_lambda(&action, &space.omega).unwrap();
        let report = equivalence_check(&ops, &space.omega, w).unwrap();
        assert!(report.all_passed(), "{report:#?}");
    }
}

#[test]
fn differential_squares_to_zero_in_main_identity() {
    let space = fixtures::f2();
    let ops = LambdaOps::from_differential(&space.q);
    for i in 0..space.basis.len() {
        let r = main_identity_residual(&ops, &space.omega, 0, &[i]).unwrap();
        assert!(r.iter().all(Zero::is_zero));
    }
}

#[test]
fn cubic_coefficient_from_binary_operation() {
    // F2 with S_int = α₁γ²: s₃(α₁, γ, γ) = 2!·1, so λ₂⁰ pairs to it.
    let w = WeightWindow::new(5).unwrap();
    let (space, action) = fixtures::f2_cubic(w, int(1), int(0)).unwrap();
    let ops = action_to_lambda(&action, &space.omega).unwrap();
    let mono = Monomial::from_unsorted(&[0, 3, 3], &space.basis).unwrap().0;
    assert_eq!(ops.string_value(&space.omega, 0, &mono), int(2));
    let back = lambda_to_action(&ops, &space.omega, w).unwrap();
    assert_eq!(back.s_int(), action.s_int());
    assert!(equivalence_check(&ops, &space.omega, w)
        .unwrap()
        .all_passed());
}
