//! The special deformation retract between Fun(V) and Fun(H) and its
//! perturbations.
//!
//! All series on the big side are written in the adapted basis of a
//! [`HodgeSplit`]: variables `α` (dual to H) come first, then `β` (dual to B),
//! then `γ` (dual to C). The small side uses the basis of H, whose variable
//! indices coincide with those of `α`.

use std::sync::Arc;

use num_traits::Zero;

use crate::bv::{monomials_up_to, BVContext};
use crate::error::{precondition, structural, Error, Result};
use crate::linalg::{GradedBasis, GradedMap, HodgeSplit, OddSymplecticForm};
use crate::rational::{frac, int, sign, Rational};
use crate::report::ValidationReport;
use crate::series::{FormalSeries, Monomial, WeightWindow};

/// S_free = ½ Σ (−1)^{|e_i|} ω(e_i, Q e_j) φ^i φ^j on any basis.
pub fn free_action(q: &GradedMap, omega: &OddSymplecticForm, window: WeightWindow) -> FormalSeries {
    let basis = omega.basis().clone();
    let n = basis.len();
    let wq = omega.matrix().mul(q.matrix());
    let mut s = FormalSeries::zero(basis.clone(), window);
    let half = frac(1, 2);
    for i in 0..n {
        for j in 0..n {
            let c = wq.get(i, j);
            if c.is_zero() {
                continue;
            }
            let c = c * sign(basis.is_odd(i)) * &half;
            s.add_assign_scaled(
                &FormalSeries::monomial(basis.clone(), window, 0, &[i, j], c),
                &int(1),
            )
            .expect("same basis");
        }
    }
    s
}

/// S_free written in the adapted basis of the split.
pub fn sfree_of(split: &HodgeSplit, window: WeightWindow) -> FormalSeries {
    free_action(split.q_adapted(), split.omega_adapted(), window)
}

/// Operations of a (possibly perturbed) deformation retract acting on
/// series. `big` refers to Fun(V) in adapted coordinates, `small` to Fun(H).
pub trait Retract {
    fn big_basis(&self) -> &Arc<GradedBasis>;
    fn small_basis(&self) -> &Arc<GradedBasis>;
    fn window(&self) -> WeightWindow;
    fn big_differential(&self, f: &FormalSeries) -> Result<FormalSeries>;
    fn small_differential(&self, g: &FormalSeries) -> Result<FormalSeries>;
    fn project(&self, f: &FormalSeries) -> Result<FormalSeries>;
    fn include(&self, g: &FormalSeries) -> Result<FormalSeries>;
    fn homotopy(&self, f: &FormalSeries) -> Result<FormalSeries>;
}

/// The unperturbed retract: differential {S_free, −} on the big side, zero on
/// the small side.
#[derive(Debug, Clone)]
pub struct FunctionSdr {
    big: BVContext,
    small: BVContext,
    s_free: FormalSeries,
    h: usize,
    /// `(β index, γ index, coefficient)` terms of K.
    k_terms: Vec<(usize, usize, Rational)>,
}

/// Builds the retract of Fun(V) onto Fun(H) attached to the split.
pub fn build_function_sdr(split: &HodgeSplit, window: WeightWindow) -> Result<FunctionSdr> {
    let big = BVContext::new(split.omega_adapted(), window)?;
    let small = BVContext::new(&split.omega_h_form(), window)?;
    let minv = split.q_block_inverse();
    let mut k_terms = Vec::new();
    for (k, beta) in split.b_range().enumerate() {
        for (l, gamma) in split.c_range().enumerate() {
            let c = minv.get(l, k);
            if !c.is_zero() {
                k_terms.push((beta, gamma, c.clone()));
            }
        }
    }
    Ok(FunctionSdr {
        s_free: sfree_of(split, window),
        big,
        small,
        h: split.h_dim(),
        k_terms,
    })
}

impl FunctionSdr {
    pub fn big_context(&self) -> &BVContext {
        &self.big
    }

    pub fn small_context(&self) -> &BVContext {
        &self.small
    }

    pub fn s_free(&self) -> &FormalSeries {
        &self.s_free
    }

    /// Number of homology variables; β and γ variables have index ≥ this.
    pub fn h_dim(&self) -> usize {
        self.h
    }

    fn p(&self, f: &FormalSeries) -> Result<FormalSeries> {
        let map: Vec<Option<usize>> = (0..self.big.basis().len())
            .map(|i| (i < self.h).then_some(i))
            .collect();
        f.reindex(self.small.basis().clone(), &map)
    }

    fn i(&self, g: &FormalSeries) -> Result<FormalSeries> {
        let map: Vec<Option<usize>> = (0..self.h).map(Some).collect();
        g.reindex(self.big.basis().clone(), &map)
    }

    fn k(&self, f: &FormalSeries) -> FormalSeries {
        let basis = self.big.basis();
        f.map_terms(|t, v, out| {
            let count = t
                .mono
                .vars()
                .iter()
                .filter(|&&x| x as usize >= self.h)
                .count();
            if count == 0 {
                return;
            }
            let norm = frac(1, count as i64);
            for (beta, gamma, c) in &self.k_terms {
                let Some((dc, rest)) = t.mono.derive(*gamma, basis, true) else {
                    continue;
                };
                let Some((m, neg)) = Monomial::var(*beta).mul(&rest, basis) else {
                    continue;
                };
                let coef = v * c * dc * &norm * sign(neg);
                out.add_term(t.genus, m, coef);
            }
        })
    }

    fn d(&self, f: &FormalSeries) -> Result<FormalSeries> {
        self.big.bracket(&self.s_free, f)
    }

    /// Perturbs the retract. `s_int` is only used for [`PerturbationKind::HbarLaplacianPlusBracket`].
    pub fn perturb(self: &Arc<Self>, perturbation: Perturbation) -> Result<RetractData> {
        if let Some(s) = &perturbation.s_int {
            if s.basis().as_ref() != self.big.basis().as_ref() || s.window() != self.big.window() {
                return Err(structural(
                    "interaction is not written in the adapted basis",
                ));
            }
        }
        if perturbation.kind == PerturbationKind::HbarLaplacianPlusBracket
            && perturbation.s_int.is_none()
        {
            return Err(precondition(
                "the bracket perturbation needs an interaction",
            ));
        }
        Ok(RetractData {
            base: self.clone(),
            perturbation,
        })
    }

    pub fn unperturbed(self: &Arc<Self>) -> RetractData {
        RetractData {
            base: self.clone(),
            perturbation: Perturbation::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    Zero,
    /// δ₁ = ħΔ.
    HbarLaplacian,
    /// δ₂ = ħΔ + {S_int, −}.
    HbarLaplacianPlusBracket,
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub s_int: Option<FormalSeries>,
}

impl Perturbation {
    pub fn zero() -> Self {
        Perturbation {
            kind: PerturbationKind::Zero,
            s_int: None,
        }
    }

    pub fn hbar_laplacian() -> Self {
        Perturbation {
            kind: PerturbationKind::HbarLaplacian,
            s_int: None,
        }
    }

    /// `s_int` must be written in the adapted basis.
    pub fn with_interaction(s_int: FormalSeries) -> Self {
        Perturbation {
            kind: PerturbationKind::HbarLaplacianPlusBracket,
            s_int: Some(s_int),
        }
    }
}

/// A retract together with a perturbation of its big differential. The
/// perturbed maps are evaluated on demand by summing the Neumann series
/// Σ(δK)ⁿ until it vanishes.
#[derive(Debug, Clone)]
pub struct RetractData {
    base: Arc<FunctionSdr>,
    perturbation: Perturbation,
}

impl RetractData {
    pub fn base(&self) -> &FunctionSdr {
        &self.base
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    /// δ(f).
    pub fn delta(&self, f: &FormalSeries) -> Result<FormalSeries> {
        match self.perturbation.kind {
            PerturbationKind::Zero => Ok(f.zero_like()),
            PerturbationKind::HbarLaplacian => self.base.big.hbar_laplacian(f),
            PerturbationKind::HbarLaplacianPlusBracket => {
                let s = self
                    .perturbation
                    .s_int
                    .as_ref()
                    .expect("checked in perturb");
                self.base.big.twisted_differential(s, f)
            }
        }
    }

    /// Upper bound on the number of nonzero Neumann terms for input `f`.
    ///
    /// Every application of δK raises `weight + genus` by at least one (ħΔ
    /// keeps the weight and raises the genus; the bracket with a term of
    /// weight ≥ 3 raises the weight), and `weight + genus` is at most
    /// `max_weight + max_weight/2` inside the window.
    fn step_bound(&self, f: &FormalSeries) -> usize {
        let w = self.base.big.window().max_weight() as i64;
        let low = f
            .terms()
            .map(|(t, _)| t.weight() + t.genus as i64)
            .min()
            .unwrap_or(0);
        (w + w / 2 - low + 2).max(1) as usize
    }

    /// Σₙ outer((δK)ⁿ y), starting from `y` itself.
    fn neumann(
        &self,
        y: FormalSeries,
        outer: impl Fn(&FormalSeries) -> Result<FormalSeries>,
        zero: FormalSeries,
    ) -> Result<FormalSeries> {
        let bound = self.step_bound(&y);
        let mut acc = zero;
        let mut y = y;
        for _ in 0..=bound {
            if y.is_zero() {
                return Ok(acc);
            }
            acc.add_assign_scaled(&outer(&y)?, &int(1))?;
            if self.perturbation.kind == PerturbationKind::Zero {
                return Ok(acc);
            }
            y = self.delta(&self.base.k(&y))?;
        }
        if y.is_zero() {
            Ok(acc)
        } else {
            Err(Error::Divergence { steps: bound })
        }
    }

    fn small_zero(&self) -> FormalSeries {
        self.base.small.zero()
    }

    /// Projection P' = P Σ(δK)ⁿ.
    pub fn project(&self, f: &FormalSeries) -> Result<FormalSeries> {
        self.neumann(f.clone(), |y| self.base.p(y), self.small_zero())
    }

    /// Homotopy K' = K Σ(δK)ⁿ.
    pub fn homotopy(&self, f: &FormalSeries) -> Result<FormalSeries> {
        self.neumann(f.clone(), |y| Ok(self.base.k(y)), f.zero_like())
    }

    /// Inclusion I' = Σ(Kδ)ⁿ I.
    pub fn include(&self, g: &FormalSeries) -> Result<FormalSeries> {
        let ig = self.base.i(g)?;
        let mut acc = ig.clone();
        if self.perturbation.kind == PerturbationKind::Zero {
            return Ok(acc);
        }
        let bound = self.step_bound(&ig);
        let mut y = ig;
        for _ in 0..=bound {
            y = self.base.k(&self.delta(&y)?);
            if y.is_zero() {
                return Ok(acc);
            }
            acc.add_assign_scaled(&y, &int(1))?;
        }
        Err(Error::Divergence { steps: bound })
    }

    /// Transferred differential E' = P Σ(δK)ⁿ δ I.
    pub fn small_differential(&self, g: &FormalSeries) -> Result<FormalSeries> {
        let start = self.delta(&self.base.i(g)?)?;
        self.neumann(start, |y| self.base.p(y), self.small_zero())
    }

    /// {S_free, f} + δ(f).
    pub fn big_differential(&self, f: &FormalSeries) -> Result<FormalSeries> {
        self.base.d(f)?.add(&self.delta(f)?)
    }
}

impl Retract for RetractData {
    fn big_basis(&self) -> &Arc<GradedBasis> {
        self.base.big.basis()
    }

    fn small_basis(&self) -> &Arc<GradedBasis> {
        self.base.small.basis()
    }

    fn window(&self) -> WeightWindow {
        self.base.big.window()
    }

    fn big_differential(&self, f: &FormalSeries) -> Result<FormalSeries> {
        RetractData::big_differential(self, f)
    }

    fn small_differential(&self, g: &FormalSeries) -> Result<FormalSeries> {
        RetractData::small_differential(self, g)
    }

    fn project(&self, f: &FormalSeries) -> Result<FormalSeries> {
        RetractData::project(self, f)
    }

    fn include(&self, g: &FormalSeries) -> Result<FormalSeries> {
        RetractData::include(self, g)
    }

    fn homotopy(&self, f: &FormalSeries) -> Result<FormalSeries> {
        RetractData::homotopy(self, f)
    }
}

/// Accumulates the residuals of one identity over many inputs, ignoring
/// terms above `check_weight`.
struct Tally {
    name: &'static str,
    check_weight: u32,
    failures: usize,
    first: Option<String>,
    first_residual: String,
}

impl Tally {
    fn new(name: &'static str, check_weight: u32) -> Self {
        Tally {
            name,
            check_weight,
            failures: 0,
            first: None,
            first_residual: "0".to_string(),
        }
    }

    fn record(&mut self, input: &FormalSeries, residual: &FormalSeries) {
        let residual = residual.truncated(self.check_weight);
        if residual.is_zero() {
            return;
        }
        self.failures += 1;
        if self.first.is_none() {
            self.first = Some(input.to_string());
            self.first_residual = residual.summary();
        }
    }

    fn finish(self, report: &mut ValidationReport) {
        let residual = if self.failures == 0 {
            "0".to_string()
        } else {
            format!("{} failing inputs; {}", self.failures, self.first_residual)
        };
        report.push(self.name, self.failures == 0, residual, self.first);
    }
}

fn monomial_inputs(
    basis: &Arc<GradedBasis>,
    window: WeightWindow,
    max_len: usize,
) -> Vec<FormalSeries> {
    monomials_up_to(basis, max_len)
        .into_iter()
        .map(|m| {
            let mut s = FormalSeries::zero(basis.clone(), window);
            s.add_term(0, m, int(1));
            s
        })
        .filter(|s| !s.is_zero())
        .collect()
}

/// Evaluates every axiom of a special deformation retract on the given
/// samples plus all genus-0 monomials of length ≤ `exhaustive_len` on each
/// side. Big-side samples are those on the big basis, the others are used on
/// the small side.
pub fn verify_sdr(
    retract: &dyn Retract,
    samples: &[FormalSeries],
    exhaustive_len: usize,
) -> Result<ValidationReport> {
    verify_sdr_to_weight(
        retract,
        samples,
        exhaustive_len,
        retract.window().max_weight(),
    )
}

/// As [`verify_sdr`], comparing residuals only up to `check_weight`.
///
/// A bracket with a linear function lowers weight by one, so identities
/// evaluated on linear inputs see the action one weight above the window.
/// An action that solves the master equation only up to the window weight
/// (such as one produced by truncated twisting) should therefore be
/// generated with one extra weight and checked one weight below.
pub fn verify_sdr_to_weight(
    retract: &dyn Retract,
    samples: &[FormalSeries],
    exhaustive_len: usize,
    check_weight: u32,
) -> Result<ValidationReport> {
    let window = retract.window();
    let big_basis = retract.big_basis();
    let small_basis = retract.small_basis();
    let mut big = monomial_inputs(big_basis, window, exhaustive_len);
    let mut small = monomial_inputs(small_basis, window, exhaustive_len);
    for s in samples {
        if s.basis().as_ref() == big_basis.as_ref() {
            big.push(s.clone());
        } else if s.basis().as_ref() == small_basis.as_ref() {
            small.push(s.clone());
        } else {
            return Err(structural("sample lives on neither side of the retract"));
        }
    }

    let mut d2 = Tally::new("big_differential_squares_to_zero", check_weight);
    let mut p_chain = Tally::new("projection_is_chain_map", check_weight);
    let mut homotopy = Tally::new("ip_minus_one_is_homotopic_to_zero", check_weight);
    let mut pk = Tally::new("pk_vanishes", check_weight);
    let mut kk = Tally::new("kk_vanishes", check_weight);
    for f in &big {
        let df = retract.big_differential(f)?;
        d2.record(f, &retract.big_differential(&df)?);
        let pf = retract.project(f)?;
        let r = retract
            .project(&df)?
            .sub(&retract.small_differential(&pf)?)?;
        p_chain.record(f, &r);
        let kf = retract.homotopy(f)?;
        let lhs = retract.include(&pf)?.sub(f)?;
        let rhs = retract
            .big_differential(&kf)?
            .add(&retract.homotopy(&df)?)?;
        homotopy.record(f, &lhs.sub(&rhs)?);
        pk.record(f, &retract.project(&kf)?);
        kk.record(f, &retract.homotopy(&kf)?);
    }

    let mut e2 = Tally::new("small_differential_squares_to_zero", check_weight);
    let mut i_chain = Tally::new("inclusion_is_chain_map", check_weight);
    let mut pi = Tally::new("pi_is_identity", check_weight);
    let mut ki = Tally::new("ki_vanishes", check_weight);
    for g in &small {
        let dg = retract.small_differential(g)?;
        e2.record(g, &retract.small_differential(&dg)?);
        let ig = retract.include(g)?;
        let r = retract.big_differential(&ig)?.sub(&retract.include(&dg)?)?;
        i_chain.record(g, &r);
        pi.record(g, &retract.project(&ig)?.sub(g)?);
        ki.record(g, &retract.homotopy(&ig)?);
    }

    let mut report = ValidationReport::new();
    for t in [d2, e2, p_chain, i_chain, pi, homotopy, pk, ki, kk] {
        t.finish(&mut report);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::hodge_decompose;

    fn f1_sdr() -> Arc<FunctionSdr> {
        let s = fixtures::f1();
        let split = hodge_decompose(&s.basis, &s.q, &s.omega).unwrap();
        Arc::new(build_function_sdr(&split, WeightWindow::new(6).unwrap()).unwrap())
    }

    #[test]
    fn free_action_of_f1() {
        let sdr = f1_sdr();
        let ctx = sdr.big_context();
        assert_eq!(sdr.s_free(), &ctx.monomial(0, &[1, 1], frac(-1, 2)));
    }

    #[test]
    fn homotopy_on_gamma_powers() {
        let sdr = f1_sdr();
        let ctx = sdr.big_context();
        assert_eq!(sdr.k(&ctx.var(1)), ctx.var(0));
        assert_eq!(
            sdr.k(&ctx.monomial(0, &[1, 1], int(1))),
            ctx.monomial(0, &[0, 1], int(1))
        );
        let r = sdr.unperturbed();
        let g2 = ctx.monomial(0, &[1, 1], int(1));
        let comm = r
            .big_differential(&r.homotopy(&g2).unwrap())
            .unwrap()
            .add(&r.homotopy(&r.big_differential(&g2).unwrap()).unwrap())
            .unwrap();
        assert_eq!(comm, g2.neg());
    }

    #[test]
    fn unperturbed_and_delta1_retracts_are_sdrs() {
        let sdr = f1_sdr();
        for r in [
            sdr.unperturbed(),
            sdr.perturb(Perturbation::hbar_laplacian()).unwrap(),
        ] {
            let report = verify_sdr(&r, &[], 4).unwrap();
            assert!(report.all_passed(), "{report:?}");
        }
    }

    #[test]
    fn gaussian_second_moment() {
        let sdr = f1_sdr();
        let ctx = sdr.big_context();
        let r = sdr.perturb(Perturbation::hbar_laplacian()).unwrap();
        let p = r.project(&ctx.monomial(0, &[1, 1], int(1))).unwrap();
        assert_eq!(p, sdr.small_context().monomial(1, &[], int(1)));
    }
}
