//! Reference spaces and seeded random generators used by tests, the
//! acceptance suite and the `--seed` sweeps of the CLI.

use std::sync::Arc;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::bv::{monomials_up_to, Action, BVContext};
use crate::error::Result;
use crate::hpl::free_action;
use crate::linalg::{DgSpace, GradedBasis, Matrix};
use crate::rational::{frac, int, Rational};
use crate::series::{FormalSeries, Monomial, WeightWindow};

/// Two-dimensional contractible space: b (degree 1), c (degree 0),
/// Q(c) = b, ω(b,c) = 1.
pub fn f1() -> DgSpace {
    DgSpace::from_entries(&[("b", 1), ("c", 0)], &[(0, 1, int(1))], &[(0, 1, int(1))])
}

/// F1 plus a homology pair a1 (degree 0), a2 (degree 1) with ω(a1,a2) = 1.
pub fn f2() -> DgSpace {
    DgSpace::from_entries(
        &[("a1", 0), ("a2", 1), ("b", 1), ("c", 0)],
        &[(2, 3, int(1))],
        &[(0, 1, int(1)), (2, 3, int(1))],
    )
}

/// A homology pair x (degree 0), y (degree 1) with zero differential.
pub fn q_zero() -> DgSpace {
    DgSpace::from_entries(&[("x", 0), ("y", 1)], &[], &[(0, 1, int(1))])
}

fn small_nonzero<R: Rng>(rng: &mut R) -> Rational {
    let num = loop {
        let v = rng.gen_range(-3i64..=3);
        if v != 0 {
            break v;
        }
    };
    frac(num, rng.gen_range(1i64..=2))
}

/// A random dg odd-symplectic space of dimension at most `max_dim` (≥ 2).
///
/// It is assembled from homology pairs, two-dimensional contractible blocks
/// (c of degree 0, Q(c) = b) and four-dimensional contractible blocks, then
/// scrambled by a random degree-preserving change of basis and a random
/// reordering.
pub fn random_dg_space<R: Rng>(rng: &mut R, max_dim: usize) -> DgSpace {
    let (base, _) = random_blocks(rng, max_dim);
    scramble(rng, &base).0
}

/// A random space as in [`random_dg_space`] together with an action that
/// solves the master equation and generally has a nonzero transfer.
///
/// The interaction is a random degree-0 polynomial in the variables dual to
/// one vector of each homology pair and to the `c` vectors of the
/// contractible blocks. These variables are pairwise ω-orthogonal and
/// S_free only involves the `c` variables, so every term of the master
/// equation vanishes. The result is then twisted by a random generator.
pub fn random_space_with_solution<R: Rng>(
    rng: &mut R,
    max_dim: usize,
    window: WeightWindow,
    terms: usize,
    generator_terms: usize,
) -> Result<(DgSpace, Action)> {
    let (base, positions) = random_blocks(rng, max_dim);
    let position_basis = base.basis.clone();
    let mut s0 = FormalSeries::zero(position_basis.clone(), window);
    let monos = monomials_up_to(&position_basis, window.max_weight() as usize);
    let candidates: Vec<(i32, &Monomial)> = (0..=1)
        .flat_map(|g| monos.iter().map(move |m| (g, m)))
        .filter(|(g, m)| {
            let w = 2 * g + m.len() as i32;
            w >= 3
                && w <= window.max_weight() as i32
                && m.degree(&position_basis) == 0
                && m.vars().iter().all(|v| positions.contains(&(*v as usize)))
        })
        .collect();
    if !candidates.is_empty() {
        for _ in 0..terms {
            let (g, m) = candidates[rng.gen_range(0..candidates.len())];
            s0.add_term(g, m.clone(), small_nonzero(rng));
        }
    }
    let (space, g) = scramble(rng, &base);
    let s0 = s0.pullback(space.basis.clone(), &g)?;
    let (action, _) = twisted_action(rng, &space, window, &s0, generator_terms)?;
    Ok((space, action))
}

fn scramble<R: Rng>(rng: &mut R, base: &DgSpace) -> (DgSpace, Matrix) {
    let n = base.basis.len();
    let degrees: Vec<i32> = (0..n).map(|i| base.basis.degree(i)).collect();
    let g = loop {
        let g = Matrix::from_fn(n, n, |r, c| {
            if r == c {
                int(1)
            } else if degrees[r] == degrees[c] && rng.gen_bool(0.4) {
                int(rng.gen_range(-2..=2))
            } else {
                Rational::zero()
            }
        });
        if g.inverse().is_some() {
            break g;
        }
    };
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    base.transform(&g, &perm)
}

/// Block-diagonal space and the indices of one Lagrangian "position" vector
/// per homology pair plus all `c` vectors.
fn random_blocks<R: Rng>(rng: &mut R, max_dim: usize) -> (DgSpace, Vec<usize>) {
    assert!(max_dim >= 2);
    let mut degrees: Vec<i32> = Vec::new();
    let mut q: Vec<(usize, usize, Rational)> = Vec::new();
    let mut w: Vec<(usize, usize, Rational)> = Vec::new();
    let mut positions = Vec::new();
    loop {
        let room = max_dim - degrees.len();
        if room < 2 || (!degrees.is_empty() && rng.gen_bool(0.25)) {
            break;
        }
        let k = degrees.len();
        match rng.gen_range(0..3) {
            0 => {
                let d = rng.gen_range(-1..=1);
                degrees.extend([d, 1 - d]);
                w.push((k, k + 1, small_nonzero(rng)));
                positions.push(k + rng.gen_range(0..2));
            }
            1 => {
                degrees.extend([1, 0]);
                q.push((k, k + 1, small_nonzero(rng)));
                positions.push(k + 1);
                w.push((k, k + 1, small_nonzero(rng)));
            }
            _ if room >= 4 => {
                // c1 (e), b1 (e+1), c2 (−e), b2 (1−e)
                let e = rng.gen_range(-1..=1);
                degrees.extend([e, e + 1, -e, 1 - e]);
                let (c1, b1, c2, b2) = (k, k + 1, k + 2, k + 3);
                positions.extend([c1, c2]);
                q.push((b1, c1, small_nonzero(rng)));
                q.push((b2, c2, small_nonzero(rng)));
                // ω(b1,c2) = s; compatibility fixes ω(b2,c1) via the Q scalars
                let s = small_nonzero(rng);
                let l1 = q[q.len() - 2].2.clone();
                let l2 = q[q.len() - 1].2.clone();
                let parity = if e.rem_euclid(2) == 1 {
                    int(-1)
                } else {
                    int(1)
                };
                // ω(Q c1, c2) + (−1)^e ω(c1, Q c2) = 0
                //   l1·s + (−1)^e·l2·ω(c1,b2) = 0, and ω(b2,c1) = −ω(c1,b2)
                let w_c1_b2 = -(&l1 * &s) / (&parity * &l2);
                w.push((b1, c2, s));
                w.push((b2, c1, -w_c1_b2));
            }
            _ => {}
        }
    }
    let names: Vec<String> = (0..degrees.len()).map(|k| format!("v{k}")).collect();
    let pairs: Vec<(&str, i32)> = names
        .iter()
        .map(|s| s.as_str())
        .zip(degrees.iter().copied())
        .collect();
    (DgSpace::from_entries(&pairs, &q, &w), positions)
}

/// A random series with up to `terms` terms of genus in `genera` and
/// polynomial length in `lengths`, coefficients small rationals. Terms are
/// not filtered by degree.
pub fn random_series<R: Rng>(
    rng: &mut R,
    basis: &Arc<GradedBasis>,
    window: WeightWindow,
    terms: usize,
    genera: std::ops::RangeInclusive<i32>,
    lengths: std::ops::RangeInclusive<usize>,
) -> FormalSeries {
    let mut s = FormalSeries::zero(basis.clone(), window);
    if basis.is_empty() {
        return s;
    }
    for _ in 0..terms {
        let g = rng.gen_range(genera.clone());
        let len = rng.gen_range(lengths.clone());
        let vars: Vec<usize> = (0..len).map(|_| rng.gen_range(0..basis.len())).collect();
        if let Some((m, _)) = Monomial::from_unsorted(&vars, basis) {
            s.add_term(g, m, small_nonzero(rng));
        }
    }
    s
}

/// Random series all of whose terms have cohomological degree `degree`.
pub fn random_homogeneous_series<R: Rng>(
    rng: &mut R,
    basis: &Arc<GradedBasis>,
    window: WeightWindow,
    terms: usize,
    genera: std::ops::RangeInclusive<i32>,
    lengths: std::ops::RangeInclusive<usize>,
    degree: i32,
) -> FormalSeries {
    let s = random_series(rng, basis, window, terms * 8, genera, lengths);
    let mut kept = 0;
    s.filter(|t| {
        let ok = t.mono.degree(basis) == degree && kept < terms;
        if ok {
            kept += 1;
        }
        ok
    })
}

/// Random series of degree `degree`, genus ≥ 0 and weight in
/// `min_weight..=window.max_weight()`, with at most `terms` terms chosen
/// among all admissible monomials.
pub fn random_series_of_degree<R: Rng>(
    rng: &mut R,
    basis: &Arc<GradedBasis>,
    window: WeightWindow,
    terms: usize,
    degree: i32,
    min_weight: u32,
) -> FormalSeries {
    let max = window.max_weight() as usize;
    let monos = monomials_up_to(basis, max);
    let mut candidates: Vec<(i32, &Monomial)> = Vec::new();
    for g in 0..=(max as i32 / 2) {
        for m in &monos {
            let w = 2 * g as usize + m.len();
            if w >= min_weight as usize && w <= max && m.degree(basis) == degree {
                candidates.push((g, m));
            }
        }
    }
    let mut s = FormalSeries::zero(basis.clone(), window);
    if candidates.is_empty() {
        return s;
    }
    for _ in 0..terms {
        let (g, m) = candidates[rng.gen_range(0..candidates.len())];
        s.add_term(g, m.clone(), small_nonzero(rng));
    }
    s
}

/// Deforms a QME solution `S_free + a0` along the flow Ṡ = ħΔR + {S, R}.
///
/// Writing the interaction as A(t) = Σ tᵏ Aₖ, the flow gives
/// A₁ = ħΔR + {S_free, R} + {A₀, R} and (k+1)Aₖ₊₁ = {Aₖ, R} for k ≥ 1. The
/// expansion terminates because R has weight ≥ 3. Returns the coefficients
/// `[A₀, A₁, …]`; their sum is the interaction at t = 1, which again solves
/// the master equation.
pub fn twist_coefficients(
    ctx: &BVContext,
    s_free: &FormalSeries,
    a0: &FormalSeries,
    r: &FormalSeries,
) -> Result<Vec<FormalSeries>> {
    let mut coeffs = vec![a0.clone()];
    let a1 = ctx
        .hbar_laplacian(r)?
        .add(&ctx.bracket(s_free, r)?)?
        .add(&ctx.bracket(a0, r)?)?;
    coeffs.push(a1);
    let mut k = 1i64;
    loop {
        let next = ctx.bracket(&coeffs[k as usize], r)?.scale(&frac(1, k + 1));
        if next.is_zero() {
            break;
        }
        coeffs.push(next);
        k += 1;
    }
    Ok(coeffs)
}

/// A QME solution obtained by twisting `a0` (itself a solution together
/// with the free action of `space`) by a random degree −1 generator.
/// Returns the action (in the coordinates of `space`) and the generator.
pub fn twisted_action<R: Rng>(
    rng: &mut R,
    space: &DgSpace,
    window: WeightWindow,
    a0: &FormalSeries,
    generator_terms: usize,
) -> Result<(Action, FormalSeries)> {
    let ctx = BVContext::new(&space.omega, window)?;
    let s_free = free_action(&space.q, &space.omega, window);
    let r = random_series_of_degree(rng, &space.basis, window, generator_terms, -1, 3);
    let coeffs = twist_coefficients(&ctx, &s_free, a0, &r)?;
    let mut s_int = FormalSeries::zero(space.basis.clone(), window);
    for c in &coeffs {
        s_int.add_assign_scaled(c, &int(1))?;
    }
    Ok((Action::new(s_free, s_int)?, r))
}

/// The action S_free + `s_int` on `space`.
pub fn action_with(space: &DgSpace, s_int: FormalSeries) -> Result<Action> {
    Action::new(free_action(&space.q, &space.omega, s_int.window()), s_int)
}

/// F1 with S_int = t·γ³ + u·ħγ.
pub fn f1_cubic(window: WeightWindow, t: Rational, u: Rational) -> Result<(DgSpace, Action)> {
    let space = f1();
    let b = space.basis.clone();
    let mut s = FormalSeries::monomial(b.clone(), window, 0, &[1, 1, 1], t);
    s.add_assign_scaled(&FormalSeries::monomial(b, window, 1, &[1], u), &int(1))?;
    let action = action_with(&space, s)?;
    Ok((space, action))
}

/// F2 with S_int = t·α₁γ² + u·γ³.
pub fn f2_cubic(window: WeightWindow, t: Rational, u: Rational) -> Result<(DgSpace, Action)> {
    let space = f2();
    let b = space.basis.clone();
    let mut s = FormalSeries::monomial(b.clone(), window, 0, &[0, 3, 3], t);
    s.add_assign_scaled(
        &FormalSeries::monomial(b, window, 0, &[3, 3, 3], u),
        &int(1),
    )?;
    let action = action_with(&space, s)?;
    Ok((space, action))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::validate_dg_symplectic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixtures_are_valid() {
        for s in [f1(), f2(), q_zero()] {
            assert!(validate_dg_symplectic(&s.basis, &s.q, &s.omega)
                .unwrap()
                .all_passed());
        }
    }

    #[test]
    fn random_spaces_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = random_dg_space(&mut rng, 8);
            let r = validate_dg_symplectic(&s.basis, &s.q, &s.omega).unwrap();
            assert!(r.all_passed(), "{r:?}");
        }
    }
}
