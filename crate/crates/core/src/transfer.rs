//! Effective action on homology, path integral, transferred differential
//! and homotopy witness.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::Zero;

use crate::bv::{monomials_up_to, Action, BVContext};
use crate::error::{internal, precondition, structural, Error, Result};
use crate::hpl::{build_function_sdr, sfree_of, FunctionSdr, Perturbation, RetractData};
use crate::linalg::{DgSpace, GradedBasis, HodgeSplit};
use crate::rational::{frac, int, sign, Rational};
use crate::report::ValidationReport;
use crate::series::{FormalSeries, Monomial, WeightWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    /// W = ħ log P₁(e^{S_int/ħ}) with P₁ from the perturbation lemma.
    Hpl,
    /// W = ħ log P exp(½ħ∂_P) e^{S_int/ħ}.
    Feynman,
    /// W = Σₖ (1/#_α) P (δ₂K)ᵏ #_α S_int; blind to α-free terms.
    Alt,
}

impl Route {
    pub const ALL: [Route; 3] = [Route::Hpl, Route::Feynman, Route::Alt];

    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Hpl => "hpl",
            Route::Feynman => "feynman",
            Route::Alt => "alt",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hpl" => Ok(Route::Hpl),
            "feynman" => Ok(Route::Feynman),
            "alt" => Ok(Route::Alt),
            other => Err(precondition(format!("unknown route `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransferResult {
    /// Effective action over H, including its constant part.
    pub w: FormalSeries,
    /// The polynomial-degree-0 part of `w`.
    pub free_energy: FormalSeries,
    pub route: Route,
    pub window: WeightWindow,
    pub verification: ValidationReport,
}

/// Second-order operator Σ p(i,l) ∂_i ∂_l on the γ variables (∂_l applied first).
#[derive(Debug, Clone)]
pub struct PropagatorOperator {
    pub pairs: Vec<(usize, usize, Rational)>,
}

impl PropagatorOperator {
    pub fn apply(&self, f: &FormalSeries) -> FormalSeries {
        let basis = f.basis().clone();
        f.map_terms(|t, v, out| {
            for (i, l, p) in &self.pairs {
                let Some((c1, m1)) = t.mono.derive(*l, &basis, true) else {
                    continue;
                };
                let Some((c2, m2)) = m1.derive(*i, &basis, true) else {
                    continue;
                };
                out.add_term(t.genus, m2, v * p * c1 * c2);
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct HomotopyWitness {
    /// F = K₁(e^{S_int/ħ}).
    pub f_witness: FormalSeries,
    /// e^{I(W)/ħ} − e^{S_int/ħ}.
    pub lhs: FormalSeries,
    /// Q₁F.
    pub rhs: FormalSeries,
    pub residual: FormalSeries,
    pub p1_of_witness: FormalSeries,
    pub k1_of_witness: FormalSeries,
}

/// A QME-solving action together with the Hodge split and the retracts
/// needed by every transfer computation. The action is stored in adapted
/// coordinates.
#[derive(Debug, Clone)]
pub struct Transfer {
    split: Arc<HodgeSplit>,
    sdr: Arc<FunctionSdr>,
    action: Action,
    window: WeightWindow,
}

impl Transfer {
    /// Prepares a transfer for an action given in the original coordinates
    /// of `space`.
    pub fn new(space: &DgSpace, action: &Action) -> Result<Self> {
        if action.basis().as_ref() != space.basis.as_ref() {
            return Err(structural("action is not written on the space's basis"));
        }
        let split = space.hodge_decompose()?;
        let window = action.window();
        let t = split.from_adapted();
        let adapted = split.adapted().clone();
        let s_free = action.s_free().pullback(adapted.clone(), t)?;
        let s_int = action.s_int().pullback(adapted, t)?;
        Self::from_adapted(split, Action::new(s_free, s_int)?).map(|mut tr| {
            tr.window = window;
            tr
        })
    }

    /// Prepares a transfer for an action already in the adapted basis.
    pub fn from_adapted(split: HodgeSplit, action: Action) -> Result<Self> {
        let window = action.window();
        if action.basis().as_ref() != split.adapted().as_ref() {
            return Err(structural("action is not written in the adapted basis"));
        }
        if action.s_free() != &sfree_of(&split, window) {
            return Err(precondition(
                "the quadratic genus-0 part of the action does not match the differential",
            ));
        }
        let sdr = Arc::new(build_function_sdr(&split, window)?);
        let residual = sdr.big_context().qme_residual(&action)?;
        if !residual.is_zero() {
            return Err(precondition(format!(
                "action violates the quantum master equation: {}",
                residual.summary()
            )));
        }
        Ok(Transfer {
            split: Arc::new(split),
            sdr,
            action,
            window,
        })
    }

    pub fn split(&self) -> &HodgeSplit {
        &self.split
    }

    pub fn sdr(&self) -> &Arc<FunctionSdr> {
        &self.sdr
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn window(&self) -> WeightWindow {
        self.window
    }

    pub fn big_context(&self) -> &BVContext {
        self.sdr.big_context()
    }

    pub fn small_context(&self) -> &BVContext {
        self.sdr.small_context()
    }

    pub fn small_basis(&self) -> &Arc<GradedBasis> {
        self.small_context().basis()
    }

    /// The δ₁ = ħΔ perturbed retract.
    pub fn retract_one(&self) -> RetractData {
        self.sdr
            .perturb(Perturbation::hbar_laplacian())
            .expect("no interaction needed")
    }

    /// The δ₂ = ħΔ + {S_int, −} perturbed retract.
    pub fn retract_two(&self) -> RetractData {
        self.sdr
            .perturb(Perturbation::with_interaction(self.action.s_int().clone()))
            .expect("interaction lives in the adapted basis")
    }

    /// e^{S_int/ħ} on the big side.
    pub fn exp_interaction(&self) -> Result<FormalSeries> {
        self.action.s_int().genus_shift(-1)?.exp()
    }

    fn include(&self, g: &FormalSeries) -> Result<FormalSeries> {
        self.sdr.unperturbed().include(g)
    }

    fn project(&self, f: &FormalSeries) -> Result<FormalSeries> {
        self.sdr.unperturbed().project(f)
    }

    /// W = ħ log Y for Y = 1 + (terms of weight ≥ 1) on the small side.
    fn hbar_log(y: &FormalSeries) -> Result<FormalSeries> {
        let l = y
            .log()
            .map_err(|e| internal(format!("cannot take the logarithm: {e}")))?;
        l.genus_shift(1)
    }

    pub fn propagator(&self) -> PropagatorOperator {
        let inv = self
            .split
            .omega_adapted()
            .inverse()
            .expect("adapted omega is nondegenerate");
        let minv = self.split.q_block_inverse();
        let basis = self.split.adapted();
        let mut pairs = Vec::new();
        for i in self.split.c_range() {
            for (li, l) in self.split.c_range().enumerate() {
                let mut p = Rational::zero();
                for (ji, j) in self.split.b_range().enumerate() {
                    p += inv.get(i, j) * minv.get(li, ji);
                }
                if !p.is_zero() {
                    pairs.push((i, l, p * sign(basis.is_odd(i))));
                }
            }
        }
        PropagatorOperator { pairs }
    }

    /// exp(½ħ∂_P) f.
    pub fn feynman_expand(&self, f: &FormalSeries) -> Result<FormalSeries> {
        let prop = self.propagator();
        let mut acc = f.clone();
        let mut term = f.clone();
        let mut k = 0i64;
        loop {
            k += 1;
            term = prop.apply(&term).genus_shift(1)?.scale(&frac(1, 2 * k));
            if term.is_zero() {
                return Ok(acc);
            }
            acc.add_assign_scaled(&term, &int(1))?;
        }
    }

    pub fn effective_action(&self, route: Route) -> Result<TransferResult> {
        let w = match route {
            Route::Hpl => {
                let y = self.retract_one().project(&self.exp_interaction()?)?;
                Self::hbar_log(&y)?
            }
            Route::Feynman => {
                let y = self.project(&self.feynman_expand(&self.exp_interaction()?)?)?;
                Self::hbar_log(&y)?
            }
            Route::Alt => self.alt_route()?,
        };
        let verification = self.verify_effective_action(&w)?;
        Ok(TransferResult {
            free_energy: w.filter(|t| t.mono.is_empty()),
            w,
            route,
            window: self.window,
            verification,
        })
    }

    fn alt_route(&self) -> Result<FormalSeries> {
        let h = self.sdr.h_dim();
        let count_alpha = |m: &Monomial| m.vars().iter().filter(|&&x| (x as usize) < h).count();
        let r2 = self.retract_two();
        let y = self.action.s_int().map_terms(|t, v, out| {
            let n = count_alpha(&t.mono);
            out.add_term(t.genus, t.mono.clone(), v * int(n as i64));
        });
        let sum = r2.project(&y)?;
        Ok(sum.map_terms(|t, v, out| {
            let n = t.mono.len();
            if n > 0 {
                out.add_term(t.genus, t.mono.clone(), v * frac(1, n as i64));
            }
        }))
    }

    /// ħ-positivity and the master equation on H for a candidate W.
    pub fn verify_effective_action(&self, w: &FormalSeries) -> Result<ValidationReport> {
        let mut report = ValidationReport::new();
        let negative = w.filter(|t| t.genus < 0);
        report.push(
            "hbar_positivity",
            negative.is_zero(),
            negative.summary(),
            None,
        );
        let residual = self
            .small_context()
            .master_expression(w)?
            .filter(|t| !t.mono.is_empty());
        report.push(
            "qme_on_homology",
            residual.is_zero(),
            residual.summary(),
            None,
        );
        Ok(report)
    }

    /// e^{W/ħ} = P₁(e^{S_int/ħ}). Computed directly rather than from W,
    /// because dividing a truncated W by ħ loses its top two weights.
    pub fn exp_effective_action(&self) -> Result<FormalSeries> {
        self.retract_one().project(&self.exp_interaction()?)
    }

    /// Z(f) = e^{−W/ħ} P₁(e^{S_int/ħ} f).
    pub fn path_integral_z(&self, f: &FormalSeries) -> Result<FormalSeries> {
        let e = self.exp_interaction()?;
        let y = self.retract_one().project(&e.mul(f)?)?;
        self.exp_effective_action()?.inverse_unit()?.mul(&y)
    }

    /// E₂(g), the differential transferred along δ₂.
    pub fn transferred_differential(&self, g: &FormalSeries) -> Result<FormalSeries> {
        self.retract_two().small_differential(g)
    }

    /// ħΔ′g + {W, g}′.
    pub fn expected_transferred_differential(
        &self,
        w: &FormalSeries,
        g: &FormalSeries,
    ) -> Result<FormalSeries> {
        self.small_context().twisted_differential(w, g)
    }

    /// The exactness witness for e^{I(W)/ħ} − e^{S_int/ħ}. Here e^{I(W)/ħ}
    /// is I applied to `exp_w` = e^{W/ħ}, normally
    /// [`Self::exp_effective_action`].
    pub fn homotopy_witness(&self, exp_w: &FormalSeries) -> Result<HomotopyWitness> {
        let r1 = self.retract_one();
        let e = self.exp_interaction()?;
        let f_witness = r1.homotopy(&e)?;
        let lhs = self.include(exp_w)?.sub(&e)?;
        let rhs = r1.big_differential(&f_witness)?;
        let residual = lhs.sub(&rhs)?;
        Ok(HomotopyWitness {
            p1_of_witness: r1.project(&f_witness)?,
            k1_of_witness: r1.homotopy(&f_witness)?,
            f_witness,
            lhs,
            rhs,
            residual,
        })
    }

    /// Checks that the projection p is a morphism: {Ig₁, Ig₂} = I{g₁,g₂}′ and
    /// T_{S_free+I(W)}(Ig) = I(ħΔ′g + {W,g}′) on monomials of length ≤
    /// `exhaustive_len` over H plus the given samples.
    pub fn morphism_check_projection(
        &self,
        w: &FormalSeries,
        samples: &[FormalSeries],
        exhaustive_len: usize,
    ) -> Result<ValidationReport> {
        self.morphism_check_with(
            self.small_context(),
            w,
            samples,
            exhaustive_len,
            self.window.max_weight(),
        )
    }

    /// As [`Self::morphism_check_projection`] with an explicit small-side
    /// context (its basis must be H), comparing residuals up to
    /// `check_weight` (see [`crate::hpl::verify_sdr_to_weight`]).
    pub fn morphism_check_with(
        &self,
        small: &BVContext,
        w: &FormalSeries,
        samples: &[FormalSeries],
        exhaustive_len: usize,
        check_weight: u32,
    ) -> Result<ValidationReport> {
        if small.basis().as_ref() != self.small_basis().as_ref() {
            return Err(structural("small context does not live on H"));
        }
        let mut inputs: Vec<FormalSeries> = monomials_up_to(small.basis(), exhaustive_len)
            .into_iter()
            .map(|m| {
                let mut s = small.zero();
                s.add_term(0, m, int(1));
                s
            })
            .collect();
        inputs.extend(samples.iter().cloned());

        let big = self.big_context();
        let total = self.action.s_free().add(&self.include(w)?)?;
        let mut poisson = Residuals::new(check_weight);
        let mut intertwine = Residuals::new(check_weight);
        let included: Vec<FormalSeries> = inputs
            .iter()
            .map(|g| self.include(g))
            .collect::<Result<_>>()?;
        for (g1, ig1) in inputs.iter().zip(&included) {
            for (g2, ig2) in inputs.iter().zip(&included) {
                let r = big
                    .bracket(ig1, ig2)?
                    .sub(&self.include(&small.bracket(g1, g2)?)?)?;
                poisson.record(format!("({g1}, {g2})"), &r);
            }
            let lhs = big.twisted_differential(&total, ig1)?;
            let rhs = self.include(&small.twisted_differential(w, g1)?)?;
            intertwine.record(g1.to_string(), &lhs.sub(&rhs)?);
        }
        let mut report = ValidationReport::new();
        poisson.finish("projection_preserves_bracket", &mut report);
        intertwine.finish("projection_intertwines_differentials", &mut report);
        Ok(report)
    }
}

struct Residuals {
    check_weight: u32,
    failures: usize,
    first: Option<(String, String)>,
}

impl Residuals {
    fn new(check_weight: u32) -> Self {
        Residuals {
            check_weight,
            failures: 0,
            first: None,
        }
    }

    fn record(&mut self, input: String, residual: &FormalSeries) {
        let residual = residual.truncated(self.check_weight);
        if residual.is_zero() {
            return;
        }
        self.failures += 1;
        if self.first.is_none() {
            self.first = Some((input, residual.summary()));
        }
    }

    fn finish(self, name: &str, report: &mut ValidationReport) {
        match self.first {
            None => report.pass(name),
            Some((input, res)) => report.push(
                name,
                false,
                format!("{} failing inputs; {res}", self.failures),
                Some(input),
            ),
        }
    }
}
