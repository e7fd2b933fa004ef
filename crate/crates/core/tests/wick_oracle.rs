//! Effective actions of F1 and F2 against a brute-force Wick expansion that
//! only knows the vertices and the propagator.

mod common;

use bvtransfer::fixtures;
use bvtransfer::rational::{frac, int};
use bvtransfer::series::WeightWindow;
use bvtransfer::transfer::{Route, Transfer};
use common::{compare_with_oracle, wick_oracle, Vertex};

// F1: S_free = −½γ², so the Gaussian weight e^{S_free/ħ} gives ⟨γγ⟩ = ħ.
#[test]
fn f1_cubic_matches_wick_expansion() {
    let w = WeightWindow::new(6).unwrap();
    for (t, u) in [
        (frac(1, 3), int(0)),
        (int(1), int(0)),
        (frac(-2, 5), int(0)),
        (frac(1, 2), frac(3, 2)),
    ] {
        let (space, action) = fixtures::f1_cubic(w, t.clone(), u.clone()).unwrap();
        let tr = Transfer::new(&space, &action).unwrap();
        let vertices = [
            Vertex {
                coeff: t.clone(),
                genus: 0,
                legs: 3,
                ext: 0,
            },
            Vertex {
                coeff: u.clone(),
                genus: 1,
                legs: 1,
                ext: 0,
            },
        ];
        let oracle = wick_oracle(&vertices, &int(1), 6);
        for route in [Route::Hpl, Route::Feynman] {
            let res = tr.effective_action(route).unwrap();
            compare_with_oracle(&res.w, None, &oracle).unwrap();
        }
    }
}

#[test]
fn f1_hand_count() {
    // two cubic vertices: 15 pairings, all connected, (1/3)²/2!·15 = 5/6.
    // four: 10395 pairings minus 3·15·15 that split into two pairs of
    // vertices leaves 9720, and (1/3)⁴/4!·9720 = 5.
    let oracle = wick_oracle(
        &[Vertex {
            coeff: frac(1, 3),
            genus: 0,
            legs: 3,
            ext: 0,
        }],
        &int(1),
        6,
    );
    assert_eq!(oracle.get(&(2, 0)), Some(&frac(5, 6)));
    assert_eq!(oracle.get(&(3, 0)), Some(&int(5)));
}

#[test]
fn f2_cubic_matches_wick_expansion() {
    let w = WeightWindow::new(6).unwrap();
    for (t, u) in [
        (frac(1, 2), frac(-2, 3)),
        (int(1), int(0)),
        (frac(-1, 3), int(2)),
    ] {
        let (space, action) = fixtures::f2_cubic(w, t.clone(), u.clone()).unwrap();
        let tr = Transfer::new(&space, &action).unwrap();
        let vertices = [
            Vertex {
                coeff: t.clone(),
                genus: 0,
                legs: 2,
                ext: 1,
            },
            Vertex {
                coeff: u.clone(),
                genus: 0,
                legs: 3,
                ext: 0,
            },
        ];
        let oracle = wick_oracle(&vertices, &int(1), 6);
        let alpha = tr.small_basis().index_of("a1").unwrap();
        for route in [Route::Hpl, Route::Feynman] {
            let res = tr.effective_action(route).unwrap();
            compare_with_oracle(&res.w, Some(alpha), &oracle).unwrap();
        }
    }
}
