//! Weight-truncated formal power series in the dual variables `φ^i` with an
//! `ħ` grading.
//!
//! A term is `ħ^g · c · φ^{i₁}⋯φ^{iₙ}` with the indices in ascending order
//! (odd variables at most once). Its weight is `2g + n`. Every operation
//! drops terms above the window's `max_weight`; as long as operands only
//! contain terms of non-negative weight this is exact, since no operation
//! used here lowers weight.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{precondition, structural, Result};
use crate::linalg::{GradedBasis, Matrix};
use crate::rational::{format_rational, frac, int, Rational};

/// Truncation policy shared by all series of one computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WeightWindow {
    max_weight: u32,
}

impl WeightWindow {
    pub fn new(max_weight: u32) -> Result<Self> {
        if max_weight < 3 {
            return Err(precondition(format!(
                "max_weight must be at least 3, got {max_weight}"
            )));
        }
        Ok(WeightWindow { max_weight })
    }

    pub fn max_weight(&self) -> u32 {
        self.max_weight
    }

    /// Lowest genus a term of non-negative weight can carry in this window
    /// once negative-genus bookkeeping (`S/ħ`) is involved.
    pub fn min_genus(&self) -> i32 {
        -(self.max_weight as i32)
    }

    pub fn admits(&self, genus: i32, poly_degree: usize) -> bool {
        2 * genus as i64 + poly_degree as i64 <= self.max_weight as i64
    }
}

/// Sorted variable indices; odd variables appear at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<u16>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial(vec![i as u16])
    }

    /// Builds from already sorted indices. Caller guarantees the odd-variable rule.
    pub fn from_sorted(vars: Vec<u16>) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] <= w[1]));
        Monomial(vars)
    }

    pub fn vars(&self) -> &[u16] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, i: usize) -> usize {
        self.0.iter().filter(|&&v| v as usize == i).count()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&(i as u16))
    }

    /// Cohomological degree of the monomial (sum of dual degrees).
    pub fn degree(&self, basis: &GradedBasis) -> i32 {
        self.0.iter().map(|&v| -basis.degree(v as usize)).sum()
    }

    pub fn is_odd(&self, basis: &GradedBasis) -> bool {
        self.0.iter().filter(|&&v| basis.is_odd(v as usize)).count() % 2 == 1
    }

    /// Product with its Koszul sign, or `None` if an odd variable repeats.
    pub fn mul(&self, other: &Monomial, basis: &GradedBasis) -> Option<(Monomial, bool)> {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        // Number of odd variables of `a` not yet emitted; each odd variable of
        // `b` that is emitted first jumps over all of them.
        let mut odd_left_a = a.iter().filter(|&&v| basis.is_odd(v as usize)).count();
        let mut negative = false;
        while i < a.len() || j < b.len() {
            let take_a = j == b.len() || (i < a.len() && a[i] <= b[j]);
            if take_a {
                if j < b.len() && a[i] == b[j] && basis.is_odd(a[i] as usize) {
                    return None;
                }
                if basis.is_odd(a[i] as usize) {
                    odd_left_a -= 1;
                }
                out.push(a[i]);
                i += 1;
            } else {
                if basis.is_odd(b[j] as usize) && odd_left_a % 2 == 1 {
                    negative = !negative;
                }
                out.push(b[j]);
                j += 1;
            }
        }
        Some((Monomial(out), negative))
    }

    /// Sorts an arbitrary product of variables, returning the Koszul sign, or
    /// `None` when an odd variable occurs twice.
    pub fn from_unsorted(vars: &[usize], basis: &GradedBasis) -> Option<(Monomial, bool)> {
        let mut v: Vec<u16> = vars.iter().map(|&x| x as u16).collect();
        let mut negative = false;
        // insertion sort, counting odd-odd transpositions
        for k in 1..v.len() {
            let mut p = k;
            while p > 0 && v[p - 1] > v[p] {
                if basis.is_odd(v[p] as usize) && basis.is_odd(v[p - 1] as usize) {
                    negative = !negative;
                }
                v.swap(p - 1, p);
                p -= 1;
            }
        }
        for w in v.windows(2) {
            if w[0] == w[1] && basis.is_odd(w[0] as usize) {
                return None;
            }
        }
        Some((Monomial(v), negative))
    }

    /// Removes one occurrence of variable `i`, moved to the front (left) or
    /// the back (right). Returns the factor and the remaining monomial.
    pub fn derive(
        &self,
        i: usize,
        basis: &GradedBasis,
        left: bool,
    ) -> Option<(Rational, Monomial)> {
        let pos = self.0.iter().position(|&v| v as usize == i)?;
        let mut rest = self.0.clone();
        if basis.is_odd(i) {
            let passed = if left {
                self.0[..pos]
                    .iter()
                    .filter(|&&v| basis.is_odd(v as usize))
                    .count()
            } else {
                self.0[pos + 1..]
                    .iter()
                    .filter(|&&v| basis.is_odd(v as usize))
                    .count()
            };
            rest.remove(pos);
            let c = if passed % 2 == 1 { int(-1) } else { int(1) };
            Some((c, Monomial(rest)))
        } else {
            let mult = self.count(i);
            rest.remove(pos);
            Some((int(mult as i64), Monomial(rest)))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub genus: i32,
    pub mono: Monomial,
}

impl Term {
    pub fn weight(&self) -> i64 {
        2 * self.genus as i64 + self.mono.len() as i64
    }
}

/// An element of the function space, truncated to a weight window.
#[derive(Clone, PartialEq, Eq)]
pub struct FormalSeries {
    basis: Arc<GradedBasis>,
    window: WeightWindow,
    terms: BTreeMap<Term, Rational>,
}

impl FormalSeries {
    pub fn zero(basis: Arc<GradedBasis>, window: WeightWindow) -> Self {
        FormalSeries {
            basis,
            window,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(basis: Arc<GradedBasis>, window: WeightWindow, c: Rational) -> Self {
        let mut s = Self::zero(basis, window);
        s.add_term(0, Monomial::one(), c);
        s
    }

    pub fn one(basis: Arc<GradedBasis>, window: WeightWindow) -> Self {
        Self::constant(basis, window, Rational::one())
    }

    /// `c · ħ^genus · φ^{vars}` where `vars` may be in any order.
    pub fn monomial(
        basis: Arc<GradedBasis>,
        window: WeightWindow,
        genus: i32,
        vars: &[usize],
        c: Rational,
    ) -> Self {
        let mut s = Self::zero(basis, window);
        if let Some((m, neg)) = Monomial::from_unsorted(vars, &s.basis) {
            s.add_term(genus, m, if neg { -c } else { c });
        }
        s
    }

    pub fn var(basis: Arc<GradedBasis>, window: WeightWindow, i: usize) -> Self {
        Self::monomial(basis, window, 0, &[i], Rational::one())
    }

    /// The zero series on the same basis and window.
    pub fn zero_like(&self) -> Self {
        Self::zero(self.basis.clone(), self.window)
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    pub fn window(&self) -> WeightWindow {
        self.window
    }

    /// Number of nonzero terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Same as [`Self::is_zero`].
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Term, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, genus: i32, mono: &Monomial) -> Rational {
        self.terms
            .get(&Term {
                genus,
                mono: mono.clone(),
            })
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Adds `c · ħ^genus · mono`, dropping it if outside the window.
    pub fn add_term(&mut self, genus: i32, mono: Monomial, c: Rational) {
        if c.is_zero() || !self.window.admits(genus, mono.len()) {
            return;
        }
        match self.terms.entry(Term { genus, mono }) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_compatible(&self, other: &FormalSeries) -> Result<()> {
        if self.window != other.window {
            return Err(structural(format!(
                "series windows differ ({} vs {})",
                self.window.max_weight, other.window.max_weight
            )));
        }
        if !Arc::ptr_eq(&self.basis, &other.basis) && self.basis != other.basis {
            return Err(structural("series live on different bases"));
        }
        Ok(())
    }

    pub fn add_assign_scaled(&mut self, other: &FormalSeries, c: &Rational) -> Result<()> {
        self.check_compatible(other)?;
        if c.is_zero() {
            return Ok(());
        }
        for (t, v) in &other.terms {
            self.add_term(t.genus, t.mono.clone(), v * c);
        }
        Ok(())
    }

    pub fn add(&self, other: &FormalSeries) -> Result<FormalSeries> {
        let mut out = self.clone();
        out.add_assign_scaled(other, &Rational::one())?;
        Ok(out)
    }

    pub fn sub(&self, other: &FormalSeries) -> Result<FormalSeries> {
        let mut out = self.clone();
        out.add_assign_scaled(other, &-Rational::one())?;
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> FormalSeries {
        if c.is_zero() {
            return self.zero_like();
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn neg(&self) -> FormalSeries {
        self.scale(&-Rational::one())
    }

    /// Graded-commutative product, truncated to the window.
    pub fn mul(&self, other: &FormalSeries) -> Result<FormalSeries> {
        self.check_compatible(other)?;
        let mut out = self.zero_like();
        let max = self.window.max_weight as i64;
        for (ta, va) in &self.terms {
            for (tb, vb) in &other.terms {
                if ta.weight() + tb.weight() > max {
                    continue;
                }
                if let Some((m, neg)) = ta.mono.mul(&tb.mono, &self.basis) {
                    let c = va * vb;
                    out.add_term(ta.genus + tb.genus, m, if neg { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Left derivative ∂_L/∂φ^i.
    pub fn derive_left(&self, i: usize) -> FormalSeries {
        self.derive(i, true)
    }

    /// Right derivative ∂_R/∂φ^i.
    pub fn derive_right(&self, i: usize) -> FormalSeries {
        self.derive(i, false)
    }

    fn derive(&self, i: usize, left: bool) -> FormalSeries {
        let mut out = self.zero_like();
        for (t, v) in &self.terms {
            if let Some((c, rest)) = t.mono.derive(i, &self.basis, left) {
                out.add_term(t.genus, rest, c * v);
            }
        }
        out
    }

    /// Multiplies by `ħ^k`.
    pub fn genus_shift(&self, k: i32) -> Result<FormalSeries> {
        let mut out = self.zero_like();
        let min = self.window.min_genus();
        for (t, v) in &self.terms {
            if t.genus + k < min {
                return Err(precondition(format!(
                    "genus {} would fall below the window minimum {min}",
                    t.genus + k
                )));
            }
            out.add_term(t.genus + k, t.mono.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(0, &Monomial::one())
    }

    /// Smallest weight among the terms, `None` for zero.
    pub fn min_weight(&self) -> Option<i64> {
        self.terms.keys().map(Term::weight).min()
    }

    pub fn min_genus_present(&self) -> Option<i32> {
        self.terms.keys().map(|t| t.genus).min()
    }

    /// `exp(a)`; every term of `a` must have weight ≥ 1.
    pub fn exp(&self) -> Result<FormalSeries> {
        if let Some(w) = self.min_weight() {
            if w < 1 {
                return Err(precondition(
                    "exp needs every term to have weight at least 1",
                ));
            }
        }
        let mut out = FormalSeries::one(self.basis.clone(), self.window);
        let mut power = out.clone();
        for k in 1..=self.window.max_weight {
            power = power.mul(self)?.scale(&frac(1, k as i64));
            if power.is_zero() {
                break;
            }
            out.add_assign_scaled(&power, &Rational::one())?;
        }
        Ok(out)
    }

    /// `1/f` for `f = 1 + (terms of weight ≥ 1)`.
    pub fn inverse_unit(&self) -> Result<FormalSeries> {
        let one = FormalSeries::one(self.basis.clone(), self.window);
        let x = self.sub(&one)?;
        if x.terms.keys().any(|t| t.weight() < 1) {
            return Err(precondition(
                "only series of the form 1 + (terms of weight at least 1) are invertible here",
            ));
        }
        let minus_x = x.neg();
        let mut out = one.clone();
        let mut power = one;
        for _ in 1..=self.window.max_weight {
            power = power.mul(&minus_x)?;
            if power.is_zero() {
                break;
            }
            out.add_assign_scaled(&power, &Rational::one())?;
        }
        Ok(out)
    }

    /// `log(f)` for `f = 1 + (terms of weight ≥ 1)`.
    pub fn log(&self) -> Result<FormalSeries> {
        let one = FormalSeries::one(self.basis.clone(), self.window);
        let x = self.sub(&one)?;
        if x.terms.keys().any(|t| t.weight() < 1) {
            return Err(precondition(
                "log needs a series of the form 1 + (terms of weight at least 1)",
            ));
        }
        let mut out = self.zero_like();
        let mut power = one;
        for k in 1..=self.window.max_weight as i64 {
            power = power.mul(&x)?;
            if power.is_zero() {
                break;
            }
            let c = frac(if k % 2 == 1 { 1 } else { -1 }, k);
            out.add_assign_scaled(&power, &c)?;
        }
        Ok(out)
    }

    /// Cohomological degree if every term has the same degree.
    pub fn degree(&self) -> Option<i32> {
        let mut it = self.terms.keys().map(|t| t.mono.degree(&self.basis));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// Parity if homogeneous in parity (zero counts as even).
    pub fn parity_odd(&self) -> Option<bool> {
        let mut it = self.terms.keys().map(|t| t.mono.is_odd(&self.basis));
        let Some(first) = it.next() else {
            return Some(false);
        };
        it.all(|d| d == first).then_some(first)
    }

    pub fn filter(&self, mut keep: impl FnMut(&Term) -> bool) -> FormalSeries {
        FormalSeries {
            basis: self.basis.clone(),
            window: self.window,
            terms: self
                .terms
                .iter()
                .filter(|(t, _)| keep(t))
                .map(|(t, v)| (t.clone(), v.clone()))
                .collect(),
        }
    }

    /// Drops every term of weight above `max_weight`.
    pub fn truncated(&self, max_weight: u32) -> FormalSeries {
        self.filter(|t| t.weight() <= max_weight as i64)
    }

    /// Applies a linear map term by term.
    pub fn map_terms(
        &self,
        mut f: impl FnMut(&Term, &Rational, &mut FormalSeries),
    ) -> FormalSeries {
        let mut out = self.zero_like();
        for (t, v) in &self.terms {
            f(t, v, &mut out);
        }
        out
    }

    /// Moves the series to another basis by renaming variable indices.
    /// `map[i]` is the new index of variable `i`; monomials containing a
    /// variable mapped to `None` are dropped. The map must preserve degrees
    /// and order so that normal ordering is kept.
    pub fn reindex(&self, basis: Arc<GradedBasis>, map: &[Option<usize>]) -> Result<FormalSeries> {
        let mut out = FormalSeries::zero(basis, self.window);
        'terms: for (t, v) in &self.terms {
            let mut vars = Vec::with_capacity(t.mono.len());
            for &x in t.mono.vars() {
                match map[x as usize] {
                    Some(y) => vars.push(y),
                    None => continue 'terms,
                }
            }
            let (m, neg) = Monomial::from_unsorted(&vars, &out.basis)
                .ok_or_else(|| structural("reindexing collapsed an odd variable"))?;
            out.add_term(t.genus, m, if neg { -v.clone() } else { v.clone() });
        }
        Ok(out)
    }

    /// Linear change of variables: substitutes `φ^i = Σ_k a[i][k] ψ^k` where
    /// `ψ` are the dual variables of `target`. Each substitution must be
    /// degree-homogeneous.
    pub fn pullback(&self, target: Arc<GradedBasis>, a: &Matrix) -> Result<FormalSeries> {
        if a.rows() != self.basis.len() || a.cols() != target.len() {
            return Err(structural("substitution matrix has the wrong shape"));
        }
        let linear: Vec<FormalSeries> = (0..self.basis.len())
            .map(|i| {
                let mut s = FormalSeries::zero(target.clone(), self.window);
                for k in 0..target.len() {
                    let c = a.get(i, k);
                    if !c.is_zero() {
                        s.add_term(0, Monomial::var(k), c.clone());
                    }
                }
                s
            })
            .collect();
        let mut out = FormalSeries::zero(target.clone(), self.window);
        for (t, v) in &self.terms {
            let mut prod =
                FormalSeries::monomial(target.clone(), self.window, t.genus, &[], v.clone());
            for &x in t.mono.vars() {
                prod = prod.mul(&linear[x as usize])?;
            }
            out.add_assign_scaled(&prod, &Rational::one())?;
        }
        Ok(out)
    }

    /// Term list `(genus, variable names, "p/q")` in canonical order.
    pub fn to_term_list(&self) -> Vec<(i32, Vec<String>, String)> {
        self.terms
            .iter()
            .map(|(t, v)| {
                (
                    t.genus,
                    t.mono
                        .vars()
                        .iter()
                        .map(|&x| self.basis.name(x as usize).to_string())
                        .collect(),
                    format_rational(v),
                )
            })
            .collect()
    }

    /// Short description for reports: "0" or the term count and first term.
    pub fn summary(&self) -> String {
        match self.terms.iter().next() {
            None => "0".to_string(),
            Some((t, v)) => format!(
                "{} nonzero terms; first: {}",
                self.len(),
                format_term(&self.basis, t, v)
            ),
        }
    }
}

fn format_term(basis: &GradedBasis, t: &Term, v: &Rational) -> String {
    let mut s = format_rational(v);
    if t.genus != 0 {
        s.push_str(&format!("*hbar^{}", t.genus));
    }
    for &x in t.mono.vars() {
        s.push('*');
        s.push_str(basis.name(x as usize));
    }
    s
}

impl fmt::Debug for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(t, v)| format_term(&self.basis, t, v))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1() -> (Arc<GradedBasis>, WeightWindow) {
        // dual variables: beta (of b, odd) and gamma (of c, even)
        (
            Arc::new(GradedBasis::from_pairs(&[("b", 1), ("c", 0)]).unwrap()),
            WeightWindow::new(5).unwrap(),
        )
    }

    #[test]
    fn koszul_products() {
        let (b, w) = f1();
        let beta = FormalSeries::var(b.clone(), w, 0);
        let gamma = FormalSeries::var(b.clone(), w, 1);
        let bg = beta.mul(&gamma).unwrap();
        assert_eq!(gamma.mul(&beta).unwrap(), bg);
        assert_eq!(
            bg.coefficient(0, &Monomial::from_sorted(vec![0, 1])),
            int(1)
        );
        assert!(beta.mul(&beta).unwrap().is_zero());
    }

    #[test]
    fn odd_variables_anticommute() {
        let b = Arc::new(GradedBasis::from_pairs(&[("x", 1), ("y", 1)]).unwrap());
        let w = WeightWindow::new(4).unwrap();
        let x = FormalSeries::var(b.clone(), w, 0);
        let y = FormalSeries::var(b.clone(), w, 1);
        assert_eq!(y.mul(&x).unwrap(), x.mul(&y).unwrap().neg());
        let xy = x.mul(&y).unwrap();
        assert_eq!(xy.derive_left(1), x.neg());
        assert_eq!(xy.derive_right(1), x);
        assert_eq!(xy.derive_left(0), y);
    }

    #[test]
    fn truncation_drops_heavy_terms() {
        let (b, w) = f1();
        let g = FormalSeries::monomial(b, w, 1, &[1], int(1));
        assert!(g.mul(&g).unwrap().is_zero());
    }

    #[test]
    fn even_derivative_counts_multiplicity() {
        let (b, w) = f1();
        let g3 = FormalSeries::monomial(b, w, 0, &[1, 1, 1], int(1));
        assert_eq!(
            g3.derive_left(1)
                .coefficient(0, &Monomial::from_sorted(vec![1, 1])),
            int(3)
        );
    }

    #[test]
    fn exp_log_round_trip() {
        let (b, w) = f1();
        let mut a = FormalSeries::monomial(b.clone(), w, -1, &[1, 1, 1], frac(2, 3));
        a.add_term(0, Monomial::from_sorted(vec![0, 1]), frac(-1, 2));
        let e = a.exp().unwrap();
        assert_eq!(e.log().unwrap(), a);
        assert!(FormalSeries::one(b.clone(), w)
            .sub(&FormalSeries::zero(b, w).exp().unwrap())
            .unwrap()
            .is_zero());
        let inv = e.inverse_unit().unwrap();
        assert_eq!(inv, a.neg().exp().unwrap());
    }

    #[test]
    fn exp_rejects_weight_zero() {
        let (b, w) = f1();
        assert!(FormalSeries::constant(b, w, int(1)).exp().is_err());
    }

    #[test]
    fn window_below_three_rejected() {
        assert!(WeightWindow::new(2).is_err());
    }
}
