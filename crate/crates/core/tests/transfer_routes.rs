use bvtransfer::fixtures;
use bvtransfer::rational::{frac, int};
use bvtransfer::series::WeightWindow;
use bvtransfer::transfer::{Route, Transfer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn f1_cubic_routes_agree() {
    let w = WeightWindow::new(6).unwrap();
    let (space, action) = fixtures::f1_cubic(w, frac(1, 3), int(0)).unwrap();
    let tr = Transfer::new(&space, &action).unwrap();
    let hpl = tr.effective_action(Route::Hpl).unwrap();
    let fey = tr.effective_action(Route::Feynman).unwrap();
    println!("hpl {}", hpl.w);
    println!("fey {}", fey.w);
    assert_eq!(hpl.w, fey.w);
    assert!(hpl.verification.all_passed());
}

#[test]
fn f2_cubic_routes_agree() {
    let w = WeightWindow::new(6).unwrap();
    let (space, action) = fixtures::f2_cubic(w, frac(1, 2), frac(-2, 3)).unwrap();
    let tr = Transfer::new(&space, &action).unwrap();
    let hpl = tr.effective_action(Route::Hpl).unwrap();
    let fey = tr.effective_action(Route::Feynman).unwrap();
    let alt = tr.effective_action(Route::Alt).unwrap();
    println!("hpl {}", hpl.w);
    println!("alt {}", alt.w);
    assert_eq!(hpl.w, fey.w);
    assert_eq!(hpl.w.filter(|t| !t.mono.is_empty()), alt.w);
    assert!(hpl.verification.all_passed(), "{:?}", hpl.verification);
}

#[test]
fn twisted_f2_routes_agree() {
    let w = WeightWindow::new(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let (space, a0) = fixtures::f2_cubic(w, frac(1, 2), frac(-2, 3)).unwrap();
        let (action, _) = fixtures::twisted_action(&mut rng, &space, w, a0.s_int(), 2).unwrap();
        println!("S_int {}", action.s_int());
        let tr = Transfer::new(&space, &action).unwrap();
        let hpl = tr.effective_action(Route::Hpl).unwrap();
        let fey = tr.effective_action(Route::Feynman).unwrap();
        let alt = tr.effective_action(Route::Alt).unwrap();
        assert_eq!(hpl.w, fey.w);
        assert_eq!(hpl.w.filter(|t| !t.mono.is_empty()), alt.w, "alt");
        assert!(hpl.verification.all_passed(), "{:?}", hpl.verification);
    }
}

#[test]
fn twisted_random_routes_agree() {
    let w = WeightWindow::new(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let (space, action) = fixtures::random_space_with_solution(&mut rng, 8, w, 3, 2).unwrap();
        let t0 = std::time::Instant::now();
        let tr = Transfer::new(&space, &action).unwrap();
        let hpl = tr.effective_action(Route::Hpl).unwrap();
        let fey = tr.effective_action(Route::Feynman).unwrap();
        let alt = tr.effective_action(Route::Alt).unwrap();
        println!(
            "dim {} h {} |S_int| {} |W| {} {:?}",
            space.basis.len(),
            tr.split().h_dim(),
            action.s_int().len(),
            hpl.w.len(),
            t0.elapsed()
        );
        assert_eq!(hpl.w, fey.w);
        assert_eq!(hpl.w.filter(|t| !t.mono.is_empty()), alt.w, "alt");
        assert!(hpl.verification.all_passed(), "{:?}", hpl.verification);
    }
}

#[test]
fn theorems_on_random_solutions() {
    use bvtransfer::hpl::verify_sdr_to_weight;
    // generated with one guard weight above the checked window 6
    let w = WeightWindow::new(7).unwrap();
    let check = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..6 {
        let (space, action) = fixtures::random_space_with_solution(&mut rng, 6, w, 3, 2).unwrap();
        let tr = Transfer::new(&space, &action).unwrap();
        let wres = tr.effective_action(Route::Hpl).unwrap().w;
        for r in [tr.retract_one(), tr.retract_two()] {
            let rep = verify_sdr_to_weight(&r, &[], 3, check).unwrap();
            assert!(rep.all_passed(), "{rep:?}");
        }
        let small = tr.small_context();
        for m in bvtransfer::bv::monomials_up_to(small.basis(), 3) {
            let mut g = small.zero();
            g.add_term(0, m, int(1));
            let e2 = tr.transferred_differential(&g).unwrap();
            let expected = tr.expected_transferred_differential(&wres, &g).unwrap();
            assert!(e2.sub(&expected).unwrap().truncated(check).is_zero());
            assert!(tr
                .transferred_differential(&e2)
                .unwrap()
                .truncated(check)
                .is_zero());
        }
        let wit = tr
            .homotopy_witness(&tr.exp_effective_action().unwrap())
            .unwrap();
        // e^{S_int/hbar} sees S_int two weights up, so this identity is only
        // determined up to the generation weight minus two
        assert!(
            wit.residual.truncated(w.max_weight() - 2).is_zero(),
            "{}",
            wit.residual
        );
        assert!(wit.p1_of_witness.is_zero() && wit.k1_of_witness.is_zero());
        let rep = tr
            .morphism_check_with(tr.small_context(), &wres, &[], 2, check)
            .unwrap();
        assert!(rep.all_passed(), "{rep:?}");
        let big = tr.big_context();
        let r2 = tr.retract_two();
        for m in bvtransfer::bv::monomials_up_to(big.basis(), 3) {
            let mut f = big.zero();
            f.add_term(0, m, int(1));
            let d = tr
                .path_integral_z(&f)
                .unwrap()
                .sub(&r2.project(&f).unwrap())
                .unwrap();
            assert!(d.truncated(check).is_zero());
        }
    }
}
