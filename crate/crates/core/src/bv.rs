//! The BV Laplacian, the antibracket and the quantum master equation.

use std::sync::Arc;

use num_traits::Zero;

use crate::error::{precondition, structural, Result};
use crate::linalg::{GradedBasis, OddSymplecticForm};
use crate::rational::{frac, sign, Rational};
use crate::series::{FormalSeries, Monomial, WeightWindow};

/// Data needed to evaluate Δ and {,}: the basis, the nonzero entries of ω⁻¹
/// and the truncation window.
#[derive(Debug, Clone)]
pub struct BVContext {
    basis: Arc<GradedBasis>,
    inverse: Vec<(usize, usize, Rational)>,
    window: WeightWindow,
}

impl BVContext {
    pub fn new(omega: &OddSymplecticForm, window: WeightWindow) -> Result<Self> {
        let inv = omega.inverse_or_err()?;
        let n = omega.basis().len();
        let mut inverse = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if !inv.get(i, j).is_zero() {
                    inverse.push((i, j, inv.get(i, j).clone()));
                }
            }
        }
        Ok(BVContext {
            basis: omega.basis().clone(),
            inverse,
            window,
        })
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    pub fn window(&self) -> WeightWindow {
        self.window
    }

    pub fn zero(&self) -> FormalSeries {
        FormalSeries::zero(self.basis.clone(), self.window)
    }

    pub fn one(&self) -> FormalSeries {
        FormalSeries::one(self.basis.clone(), self.window)
    }

    pub fn var(&self, i: usize) -> FormalSeries {
        FormalSeries::var(self.basis.clone(), self.window, i)
    }

    pub fn monomial(&self, genus: i32, vars: &[usize], c: Rational) -> FormalSeries {
        FormalSeries::monomial(self.basis.clone(), self.window, genus, vars, c)
    }

    fn check(&self, f: &FormalSeries) -> Result<()> {
        if f.window() != self.window || f.basis().as_ref() != self.basis.as_ref() {
            return Err(structural("series does not belong to this BV context"));
        }
        Ok(())
    }

    /// ΔF = ½ Σ (−1)^{|φ^i|} ω^{ij} ∂_i ∂_j F, with ∂_j applied first.
    pub fn laplacian(&self, f: &FormalSeries) -> Result<FormalSeries> {
        self.check(f)?;
        let half = frac(1, 2);
        let mut out = f.zero_like();
        for (t, v) in f.terms() {
            if t.mono.len() < 2 {
                continue;
            }
            for (i, j, w) in &self.inverse {
                let Some((c1, m1)) = t.mono.derive(*j, &self.basis, true) else {
                    continue;
                };
                let Some((c2, m2)) = m1.derive(*i, &self.basis, true) else {
                    continue;
                };
                let mut c = v * w * c1 * c2 * &half;
                if self.basis.is_odd(*i) {
                    c = -c;
                }
                out.add_term(t.genus, m2, c);
            }
        }
        Ok(out)
    }

    /// ħΔF.
    pub fn hbar_laplacian(&self, f: &FormalSeries) -> Result<FormalSeries> {
        self.laplacian(f)?.genus_shift(1)
    }

    /// {F,G} = Σ ∂_R F/∂φ^i ω^{ij} ∂_L G/∂φ^j.
    pub fn bracket(&self, f: &FormalSeries, g: &FormalSeries) -> Result<FormalSeries> {
        self.check(f)?;
        self.check(g)?;
        let mut out = f.zero_like();
        if f.is_zero() || g.is_zero() {
            return Ok(out);
        }
        let n = self.basis.len();
        let mut right: Vec<Option<FormalSeries>> = vec![None; n];
        let mut left: Vec<Option<FormalSeries>> = vec![None; n];
        for (i, j, w) in &self.inverse {
            let df = right[*i].get_or_insert_with(|| f.derive_right(*i)).clone();
            if df.is_zero() {
                continue;
            }
            let dg = left[*j].get_or_insert_with(|| g.derive_left(*j));
            if dg.is_zero() {
                continue;
            }
            out.add_assign_scaled(&df.mul(dg)?, w)?;
        }
        Ok(out)
    }

    /// T_A(F) = ħΔF + {A,F}.
    pub fn twisted_differential(&self, a: &FormalSeries, f: &FormalSeries) -> Result<FormalSeries> {
        self.hbar_laplacian(f)?.add(&self.bracket(a, f)?)
    }

    /// ħΔS + ½{S,S} with the polynomial-degree-0 terms removed.
    pub fn qme_residual(&self, action: &Action) -> Result<FormalSeries> {
        let s = action.total()?;
        let r = self
            .hbar_laplacian(&s)?
            .add(&self.bracket(&s, &s)?.scale(&frac(1, 2)))?;
        Ok(r.filter(|t| !t.mono.is_empty()))
    }

    /// ħΔA + ½{A,A} for an arbitrary series, constants kept.
    pub fn master_expression(&self, a: &FormalSeries) -> Result<FormalSeries> {
        self.hbar_laplacian(a)?
            .add(&self.bracket(a, a)?.scale(&frac(1, 2)))
    }

    fn parity(&self, f: &FormalSeries) -> Result<bool> {
        f.parity_odd()
            .ok_or_else(|| precondition("identity checks need parity-homogeneous inputs"))
    }

    /// Δ(FG) − (ΔF)G − (−1)^{|F|}FΔG − (−1)^{|F|}{F,G}.
    pub fn product_rule_check(&self, f: &FormalSeries, g: &FormalSeries) -> Result<FormalSeries> {
        let sf = sign(self.parity(f)?);
        let lhs = self.laplacian(&f.mul(g)?)?;
        let rhs = self
            .laplacian(f)?
            .mul(g)?
            .add(&f.mul(&self.laplacian(g)?)?.scale(&sf))?
            .add(&self.bracket(f, g)?.scale(&sf))?;
        lhs.sub(&rhs)
    }

    /// {F,G} + (−1)^{(|F|+1)(|G|+1)}{G,F}.
    pub fn antisymmetry_check(&self, f: &FormalSeries, g: &FormalSeries) -> Result<FormalSeries> {
        let s = sign(!self.parity(f)? && !self.parity(g)?);
        self.bracket(f, g)?.add(&self.bracket(g, f)?.scale(&s))
    }

    /// {F,{G,H}} − {{F,G},H} − (−1)^{(|F|+1)(|G|+1)}{G,{F,H}}.
    pub fn jacobi_check(
        &self,
        f: &FormalSeries,
        g: &FormalSeries,
        h: &FormalSeries,
    ) -> Result<FormalSeries> {
        let s = sign(!self.parity(f)? && !self.parity(g)?);
        self.parity(h)?;
        let a = self.bracket(f, &self.bracket(g, h)?)?;
        let b = self.bracket(&self.bracket(f, g)?, h)?;
        let c = self.bracket(g, &self.bracket(f, h)?)?;
        a.sub(&b)?.sub(&c.scale(&s))
    }

    /// {F,GH} − {F,G}H − (−1)^{(|F|+1)|G|}G{F,H}.
    pub fn poisson_check(
        &self,
        f: &FormalSeries,
        g: &FormalSeries,
        h: &FormalSeries,
    ) -> Result<FormalSeries> {
        let s = sign(!self.parity(f)? && self.parity(g)?);
        self.parity(h)?;
        let a = self.bracket(f, &g.mul(h)?)?;
        let b = self.bracket(f, g)?.mul(h)?;
        let c = g.mul(&self.bracket(f, h)?)?;
        a.sub(&b)?.sub(&c.scale(&s))
    }

    /// Residual of the seven-term identity expressing that Δ is of second order.
    pub fn seven_term_check(
        &self,
        f: &FormalSeries,
        g: &FormalSeries,
        h: &FormalSeries,
    ) -> Result<FormalSeries> {
        let pf = self.parity(f)?;
        let pg = self.parity(g)?;
        self.parity(h)?;
        let fg = f.mul(g)?;
        let lhs = self.laplacian(&fg.mul(h)?)?;
        let mut rhs = self.laplacian(&fg)?.mul(h)?;
        rhs = rhs.add(&f.mul(&self.laplacian(&g.mul(h)?)?)?.scale(&sign(pf)))?;
        rhs = rhs.add(&g.mul(&self.laplacian(&f.mul(h)?)?)?.scale(&sign(!pf && pg)))?;
        rhs = rhs.sub(&self.laplacian(f)?.mul(g)?.mul(h)?)?;
        rhs = rhs.sub(&f.mul(&self.laplacian(g)?)?.mul(h)?.scale(&sign(pf)))?;
        rhs = rhs.sub(&fg.mul(&self.laplacian(h)?)?.scale(&sign(pf != pg)))?;
        lhs.sub(&rhs)
    }

    /// Δ{F,G} − {ΔF,G} − (−1)^{|F|+1}{F,ΔG}.
    pub fn delta_bracket_check(&self, f: &FormalSeries, g: &FormalSeries) -> Result<FormalSeries> {
        let s = sign(!self.parity(f)?);
        self.parity(g)?;
        let lhs = self.laplacian(&self.bracket(f, g)?)?;
        let a = self.bracket(&self.laplacian(f)?, g)?;
        let b = self.bracket(f, &self.laplacian(g)?)?;
        lhs.sub(&a)?.sub(&b.scale(&s))
    }
}

/// An action S = S_free + S_int.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    s_free: FormalSeries,
    s_int: FormalSeries,
}

impl Action {
    /// Validates the shape: S_free is genus 0 and quadratic, every S_int
    /// term has genus ≥ 0 and weight ≥ 3, and all terms have degree 0.
    pub fn new(s_free: FormalSeries, s_int: FormalSeries) -> Result<Self> {
        if s_free.window() != s_int.window() || s_free.basis() != s_int.basis() {
            return Err(structural("S_free and S_int live on different spaces"));
        }
        for (t, _) in s_free.terms() {
            if t.genus != 0 || t.mono.len() != 2 {
                return Err(precondition("S_free must be a genus-0 quadratic series"));
            }
        }
        for (t, _) in s_int.terms() {
            if t.genus < 0 || t.weight() < 3 {
                return Err(precondition(format!(
                    "S_int term of genus {} and polynomial degree {} has weight below 3",
                    t.genus,
                    t.mono.len()
                )));
            }
        }
        for s in [&s_free, &s_int] {
            if let Some((t, _)) = s.terms().find(|(t, _)| t.mono.degree(s.basis()) != 0) {
                return Err(precondition(format!(
                    "action term of degree {} (degree 0 required)",
                    t.mono.degree(s.basis())
                )));
            }
        }
        Ok(Action { s_free, s_int })
    }

    /// Splits a full action into its genus-0 quadratic part and the rest.
    pub fn from_total(s: &FormalSeries) -> Result<Self> {
        let free = s.filter(|t| t.genus == 0 && t.mono.len() == 2);
        let int = s.filter(|t| !(t.genus == 0 && t.mono.len() == 2));
        Action::new(free, int)
    }

    pub fn s_free(&self) -> &FormalSeries {
        &self.s_free
    }

    pub fn s_int(&self) -> &FormalSeries {
        &self.s_int
    }

    pub fn total(&self) -> Result<FormalSeries> {
        self.s_free.add(&self.s_int)
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        self.s_free.basis()
    }

    pub fn window(&self) -> WeightWindow {
        self.s_free.window()
    }
}

/// All monomials (genus 0) of polynomial length `0..=max_len` in the
/// variables of `basis`, in canonical order.
pub fn monomials_up_to(basis: &GradedBasis, max_len: usize) -> Vec<Monomial> {
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![Vec::<u16>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for m in &frontier {
            let start = m.last().copied().unwrap_or(0) as usize;
            for v in start..basis.len() {
                if m.last() == Some(&(v as u16)) && basis.is_odd(v) {
                    continue;
                }
                let mut m2 = m.clone();
                m2.push(v as u16);
                next.push(m2);
            }
        }
        out.extend(next.iter().cloned().map(Monomial::from_sorted));
        frontier = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::rational::int;

    fn f1() -> BVContext {
        let b = Arc::new(GradedBasis::from_pairs(&[("b", 1), ("c", 0)]).unwrap());
        let mut w = Matrix::zeros(2, 2);
        w.set(0, 1, int(1));
        w.set(1, 0, int(-1));
        let omega = OddSymplecticForm::new(b, w).unwrap();
        BVContext::new(&omega, WeightWindow::new(6).unwrap()).unwrap()
    }

    #[test]
    fn laplacian_of_beta_gamma() {
        let ctx = f1();
        let bg = ctx.monomial(0, &[0, 1], int(1));
        assert_eq!(ctx.laplacian(&bg).unwrap(), ctx.one());
        assert!(ctx.laplacian(&ctx.var(1)).unwrap().is_zero());
        assert!(ctx.laplacian(&ctx.one()).unwrap().is_zero());
    }

    #[test]
    fn bracket_of_duals() {
        let ctx = f1();
        // ω⁻¹ = [[0,-1],[1,0]]: {β,γ} = ω^{01} = -1, {γ,β} = ω^{10} = 1
        assert_eq!(
            ctx.bracket(&ctx.var(0), &ctx.var(1)).unwrap(),
            ctx.one().neg()
        );
        assert_eq!(ctx.bracket(&ctx.var(1), &ctx.var(0)).unwrap(), ctx.one());
        assert!(ctx.bracket(&ctx.var(1), &ctx.one()).unwrap().is_zero());
    }

    #[test]
    fn free_action_is_closed() {
        let ctx = f1();
        let s_free = ctx.monomial(0, &[1, 1], frac(-1, 2));
        let s = Action::new(s_free.clone(), ctx.zero()).unwrap();
        assert!(ctx.qme_residual(&s).unwrap().is_zero());
        // {S_free, β} = −β∘Q = −γ
        assert_eq!(ctx.bracket(&s_free, &ctx.var(0)).unwrap(), ctx.var(1).neg());
    }

    #[test]
    fn cubic_in_gamma_solves_qme() {
        let ctx = f1();
        let s = Action::new(
            ctx.monomial(0, &[1, 1], frac(-1, 2)),
            ctx.monomial(0, &[1, 1, 1], frac(2, 7)),
        )
        .unwrap();
        assert!(ctx.qme_residual(&s).unwrap().is_zero());
    }

    #[test]
    fn action_shape_is_checked() {
        let ctx = f1();
        assert!(Action::new(ctx.zero(), ctx.monomial(0, &[1, 1], int(1))).is_err());
        // βγγ has degree 1 - 0 = ... dual degree of β is -1
        assert!(Action::new(ctx.zero(), ctx.monomial(0, &[0, 1, 1], int(1))).is_err());
    }

    #[test]
    fn monomial_enumeration_respects_odd_rule() {
        let b = GradedBasis::from_pairs(&[("b", 1), ("c", 0)]).unwrap();
        let ms = monomials_up_to(&b, 2);
        // 1, β, γ, βγ, γγ
        assert_eq!(ms.len(), 5);
    }
}
