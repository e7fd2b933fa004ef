//! Multilinear operations `λₙᵍ`, their string functions `sₙᵍ` and the
//! equivalence between the main identity and the quantum master equation.
//!
//! `sₙ₊₁ᵍ(v₀, …, vₙ) = (−1)^{|v₀|} ω(v₀, λₙᵍ(v₁, …, vₙ))` and
//! `S = Σ ħᵍ s̄ₙᵍ / n!` with `s̄ = Σ s(e_{i₁}, …) φ^{i₁}…`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::bv::{monomials_up_to, Action, BVContext};
use crate::error::{precondition, structural, Result};
use crate::linalg::{format_vector, GradedBasis, GradedMap, OddSymplecticForm};
use crate::rational::{factorial, format_rational, frac, sign, Rational};
use crate::report::ValidationReport;
use crate::series::{FormalSeries, Monomial, WeightWindow};

/// Graded-symmetric operations `λₙᵍ : V^{⊗n} → V` of degree 1, stored on
/// sorted input multisets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaOps {
    basis: Arc<GradedBasis>,
    entries: BTreeMap<(u32, Monomial), BTreeMap<usize, Rational>>,
}

/// One stored coefficient: `λₙᵍ(e_inputs…)` has `coefficient` on `e_output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaEntry {
    pub genus: u32,
    pub inputs: Vec<usize>,
    pub output: usize,
    pub coefficient: Rational,
}

impl LambdaOps {
    pub fn new(basis: Arc<GradedBasis>) -> Self {
        LambdaOps {
            basis,
            entries: BTreeMap::new(),
        }
    }

    /// The operations with only `λ₁⁰ = Q`.
    pub fn from_differential(q: &GradedMap) -> Self {
        let mut ops = LambdaOps::new(q.domain().clone());
        let n = q.domain().len();
        for j in 0..n {
            for k in 0..n {
                let c = q.entry(k, j);
                if !c.is_zero() {
                    ops.add(0, &[j], k, c.clone()).expect("single input");
                }
            }
        }
        ops
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds `c` to the coefficient of `e_output` in `λᵍ(e_inputs…)`, given in
    /// any order; the graded symmetry supplies the sign.
    pub fn add(&mut self, genus: u32, inputs: &[usize], output: usize, c: Rational) -> Result<()> {
        let n = self.basis.len();
        if output >= n || inputs.iter().any(|&i| i >= n) {
            return Err(structural(
                "lambda entry refers to an index outside the basis",
            ));
        }
        if c.is_zero() {
            return Ok(());
        }
        let (key, negative) = Monomial::from_unsorted(inputs, &self.basis).ok_or_else(|| {
            structural("lambda entry repeats an odd input, so graded symmetry forces it to vanish")
        })?;
        let slot = self.entries.entry((genus, key.clone())).or_default();
        let value = slot.entry(output).or_insert_with(Rational::zero);
        *value += c * sign(negative);
        if value.is_zero() {
            slot.remove(&output);
            if slot.is_empty() {
                self.entries.remove(&(genus, key));
            }
        }
        Ok(())
    }

    /// All nonzero coefficients on sorted inputs.
    pub fn entries(&self) -> Vec<LambdaEntry> {
        let mut out = Vec::new();
        for ((genus, inputs), vector) in &self.entries {
            for (&output, c) in vector {
                out.push(LambdaEntry {
                    genus: *genus,
                    inputs: inputs.vars().iter().map(|&v| v as usize).collect(),
                    output,
                    coefficient: c.clone(),
                });
            }
        }
        out
    }

    /// The `(genus, arity)` pairs with a nonzero operation.
    pub fn arities(&self) -> BTreeSet<(u32, usize)> {
        self.entries.keys().map(|(g, m)| (*g, m.len())).collect()
    }

    /// `λᵍ(e_inputs…)` as a dense vector.
    pub fn eval_basis(&self, genus: u32, inputs: &[usize]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.basis.len()];
        let Some((key, negative)) = Monomial::from_unsorted(inputs, &self.basis) else {
            return out;
        };
        if let Some(vector) = self.entries.get(&(genus, key)) {
            let s = sign(negative);
            for (&k, c) in vector {
                out[k] = c * &s;
            }
        }
        out
    }

    /// `λᵍ(e_inputs…, w)` for a vector `w` in the last slot.
    pub fn eval_with_vector(&self, genus: u32, inputs: &[usize], w: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.basis.len()];
        let mut slots = inputs.to_vec();
        slots.push(0);
        for (m, wm) in w.iter().enumerate() {
            if wm.is_zero() {
                continue;
            }
            *slots.last_mut().expect("nonempty") = m;
            for (o, v) in out.iter_mut().zip(self.eval_basis(genus, &slots)) {
                if !v.is_zero() {
                    *o += v * wm;
                }
            }
        }
        out
    }

    /// Degree and cyclicity checks.
    pub fn validate(&self, omega: &OddSymplecticForm) -> ValidationReport {
        let mut report = ValidationReport::new();
        let mut degree_bad = None;
        for ((genus, inputs), vector) in &self.entries {
            // the monomial degree is that of the dual variables, minus the input degree
            let expected = 1 - inputs.degree(&self.basis);
            for &k in vector.keys() {
                if self.basis.degree(k) != expected && degree_bad.is_none() {
                    degree_bad = Some(format!(
                        "lambda genus {} on ({}) has a component along {} of degree {}, expected {}",
                        genus,
                        self.names(inputs.vars()),
                        self.basis.name(k),
                        self.basis.degree(k),
                        expected
                    ));
                }
            }
        }
        match degree_bad {
            None => report.push("lambda_degree_one", true, "0", None),
            Some(c) => report.push("lambda_degree_one", false, "nonzero", Some(c)),
        }
        let curved = self
            .entries
            .keys()
            .find(|(g, m)| *g == 0 && m.is_empty())
            .map(|_| "lambda genus 0 with no inputs is nonzero".to_string());
        report.push(
            "lambda_uncurved",
            curved.is_none(),
            if curved.is_none() { "0" } else { "nonzero" },
            curved,
        );
        let mut cyclic_bad = None;
        let mut failures = 0usize;
        for (genus, mono) in self.string_support(omega) {
            let reference = self.string_value(omega, genus, &mono);
            for i in distinct(mono.vars()) {
                let value = self.string_value_front(omega, genus, &mono, i);
                if value != reference {
                    failures += 1;
                    if cyclic_bad.is_none() {
                        cyclic_bad = Some(format!(
                            "s genus {} on ({}): {} with {} first, {} in sorted order",
                            genus,
                            self.names(mono.vars()),
                            format_rational(&value),
                            self.basis.name(i),
                            format_rational(&reference)
                        ));
                    }
                }
            }
        }
        report.push(
            "lambda_cyclic",
            failures == 0,
            format!("{failures} asymmetric string values"),
            cyclic_bad,
        );
        report
    }

    fn names(&self, vars: &[u16]) -> String {
        vars.iter()
            .map(|&v| self.basis.name(v as usize))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Sorted input multisets (with genus) on which some `sₙ₊₁ᵍ` may be nonzero.
    fn string_support(&self, omega: &OddSymplecticForm) -> BTreeSet<(u32, Monomial)> {
        let n = self.basis.len();
        let mut out = BTreeSet::new();
        for ((genus, inputs), vector) in &self.entries {
            for &k in vector.keys() {
                for i in 0..n {
                    if omega.entry(i, k).is_zero() {
                        continue;
                    }
                    let mut vars: Vec<usize> = inputs.vars().iter().map(|&v| v as usize).collect();
                    vars.push(i);
                    if let Some((m, _)) = Monomial::from_unsorted(&vars, &self.basis) {
                        out.insert((*genus, m));
                    }
                }
            }
        }
        out
    }

    /// `s(e_{i₀}, e_{i₁}, …)` on a sorted multiset, first slot `i₀`.
    pub fn string_value(&self, omega: &OddSymplecticForm, genus: u32, mono: &Monomial) -> Rational {
        let vars: Vec<usize> = mono.vars().iter().map(|&v| v as usize).collect();
        let Some((&first, rest)) = vars.split_first() else {
            return Rational::zero();
        };
        let lam = self.eval_basis(genus, rest);
        let mut e = vec![Rational::zero(); self.basis.len()];
        e[first] = Rational::one();
        omega.pair(&e, &lam) * sign(self.basis.is_odd(first))
    }

    /// `s` on the sorted multiset with one occurrence of `i` moved to the
    /// first slot, multiplied by the Koszul sign of that move; equals
    /// [`Self::string_value`] exactly when `s` is graded symmetric.
    fn string_value_front(
        &self,
        omega: &OddSymplecticForm,
        genus: u32,
        mono: &Monomial,
        i: usize,
    ) -> Rational {
        let (negative, rest) = move_to_front(mono, i, &self.basis);
        let lam = self.eval_basis(genus, &rest);
        let mut e = vec![Rational::zero(); self.basis.len()];
        e[i] = Rational::one();
        omega.pair(&e, &lam) * sign(self.basis.is_odd(i)) * sign(negative)
    }
}

fn distinct(vars: &[u16]) -> Vec<usize> {
    let mut out: Vec<usize> = vars.iter().map(|&v| v as usize).collect();
    out.dedup();
    out
}

/// Removes one occurrence of `i` from a sorted multiset and reports whether
/// moving it to the front costs a Koszul sign.
fn move_to_front(mono: &Monomial, i: usize, basis: &GradedBasis) -> (bool, Vec<usize>) {
    let vars: Vec<usize> = mono.vars().iter().map(|&v| v as usize).collect();
    let pos = vars.iter().position(|&v| v == i).expect("variable present");
    let passed = vars[..pos].iter().filter(|&&v| basis.is_odd(v)).count();
    let negative = basis.is_odd(i) && passed % 2 == 1;
    let mut rest = vars;
    rest.remove(pos);
    (negative, rest)
}

fn multiplicity_factorial(mono: &Monomial) -> Rational {
    let mut out = Rational::one();
    for i in distinct(mono.vars()) {
        out *= factorial(mono.count(i));
    }
    out
}

/// The action `S = Σ ħᵍ s̄ₙᵍ / n!` of cyclic operations.
pub fn lambda_to_action(
    ops: &LambdaOps,
    omega: &OddSymplecticForm,
    window: WeightWindow,
) -> Result<Action> {
    if ops.basis() != omega.basis() {
        return Err(structural(
            "lambda operations and ω live on different bases",
        ));
    }
    let report = ops.validate(omega);
    if let Some(bad) = report.failures().next() {
        return Err(precondition(format!(
            "lambda operations fail {}: {}",
            bad.name,
            bad.counterexample.clone().unwrap_or_default()
        )));
    }
    let mut s = FormalSeries::zero(ops.basis().clone(), window);
    for (genus, mono) in ops.string_support(omega) {
        let value = ops.string_value(omega, genus, &mono);
        if value.is_zero() {
            continue;
        }
        let c = value / multiplicity_factorial(&mono);
        s.add_term(genus as i32, mono, c);
    }
    Action::from_total(&s)
}

/// Recovers the operations from an action by differentiating.
pub fn action_to_lambda(action: &Action, omega: &OddSymplecticForm) -> Result<LambdaOps> {
    let basis = action.basis().clone();
    if &basis != omega.basis() {
        return Err(structural("action and ω live on different bases"));
    }
    let inverse = omega.inverse_or_err()?;
    let n = basis.len();
    let mut ops = LambdaOps::new(basis.clone());
    let total = action.total()?;
    for (term, c) in total.terms() {
        if term.mono.is_empty() {
            continue;
        }
        if term.genus < 0 {
            return Err(precondition("actions have no negative powers of ħ"));
        }
        let value = c * multiplicity_factorial(&term.mono);
        for i in distinct(term.mono.vars()) {
            let (negative, rest) = move_to_front(&term.mono, i, &basis);
            // s(e_i, e_rest) = value·sign; λ^k = Σ_i (ω⁻¹)_{ki} (−1)^{|e_i|} s(e_i, …)
            let s = &value * sign(negative) * sign(basis.is_odd(i));
            for k in 0..n {
                let w = inverse.get(k, i);
                if !w.is_zero() {
                    ops.add(term.genus as u32, &rest, k, w * &s)?;
                }
            }
        }
    }
    Ok(ops)
}

/// Calls `f` with each (k, n−k)-unshuffle of `0..n` as (first block, second
/// block), k ascending, first blocks in lexicographic order.
fn for_each_unshuffle(n: usize, mut f: impl FnMut(&[usize], &[usize])) {
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize], &[usize]),
    ) {
        if chosen.len() == k {
            let rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            f(chosen, &rest);
            return;
        }
        for i in start..n {
            chosen.push(i);
            rec(i + 1, n, k, chosen, f);
            chosen.pop();
        }
    }
    for k in 0..=n {
        rec(0, n, k, &mut Vec::new(), &mut f);
    }
}

/// The main identity at genus `g` on basis inputs, as a vector; zero for
/// every input exactly when the operations form a quantum L∞ algebra.
pub fn main_identity_residual(
    ops: &LambdaOps,
    omega: &OddSymplecticForm,
    g: u32,
    inputs: &[usize],
) -> Result<Vec<Rational>> {
    let basis = ops.basis().clone();
    let dim = basis.len();
    let n = inputs.len();
    let mut out = vec![Rational::zero(); dim];
    for_each_unshuffle(n, |a, b| {
        // Koszul sign of (v_A, v_B) from (v_1, …, v_n), then Q passing v_A
        let mut negative = false;
        for &x in a {
            for &y in b {
                if y < x && basis.is_odd(inputs[x]) && basis.is_odd(inputs[y]) {
                    negative = !negative;
                }
            }
            if basis.is_odd(inputs[x]) {
                negative = !negative;
            }
        }
        let va: Vec<usize> = a.iter().map(|&x| inputs[x]).collect();
        let vb: Vec<usize> = b.iter().map(|&y| inputs[y]).collect();
        for g2 in 0..=g {
            let inner = ops.eval_basis(g2, &vb);
            if inner.iter().all(Zero::is_zero) {
                continue;
            }
            let outer = ops.eval_with_vector(g - g2, &va, &inner);
            let s = sign(negative);
            for (o, v) in out.iter_mut().zip(outer) {
                if !v.is_zero() {
                    *o += v * &s;
                }
            }
        }
    });
    if g >= 1 {
        let inverse = omega.inverse_or_err()?;
        let half = frac(1, 2);
        let mut slots = vec![0, 0];
        slots.extend_from_slice(inputs);
        for r in 0..dim {
            for s in 0..dim {
                let w = inverse.get(r, s);
                if w.is_zero() {
                    continue;
                }
                slots[0] = s;
                slots[1] = r;
                let c = w * sign(basis.is_odd(s)) * &half;
                for (o, v) in out.iter_mut().zip(ops.eval_basis(g - 1, &slots)) {
                    if !v.is_zero() {
                        *o += v * &c;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Evaluates the master equation and the main identity for every genus and
/// arity inside the window and checks they vanish together.
///
/// Term by term: writing the genus-g, degree-(n+1) part of ħΔS + ½{S,S} as
/// r̄/(n+1)! in the same way as the action, `r(v₀, …, vₙ) = −ω(v₀, M.I.(v₁, …, vₙ))`.
pub fn equivalence_check(
    ops: &LambdaOps,
    omega: &OddSymplecticForm,
    window: WeightWindow,
) -> Result<ValidationReport> {
    let action = lambda_to_action(ops, omega, window)?;
    let ctx = BVContext::new(omega, window)?;
    let residual = ctx.qme_residual(&action)?;
    let basis = ops.basis().clone();
    let dim = basis.len();
    let max = window.max_weight() as usize;
    let mut by_len: BTreeMap<usize, Vec<Monomial>> = BTreeMap::new();
    for m in monomials_up_to(&basis, max.saturating_sub(1)) {
        by_len.entry(m.len()).or_default().push(m);
    }
    let mut report = ValidationReport::new();
    let mut qme_all_zero = true;
    let mut mi_all_zero = true;
    let mut first_mi = None;
    for g in 0..=(max / 2) as u32 {
        for n in 0..max {
            if 2 * g as usize + n + 1 > max {
                break;
            }
            let qme_part = residual.filter(|t| t.genus == g as i32 && t.mono.len() == n + 1);
            let mut mi_zero = true;
            let mut first_nonzero = None;
            let mut pairing_bad = None;
            for j in by_len.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
                let inputs: Vec<usize> = j.vars().iter().map(|&v| v as usize).collect();
                let mi = main_identity_residual(ops, omega, g, &inputs)?;
                if mi.iter().any(|x| !x.is_zero()) {
                    mi_zero = false;
                    if first_nonzero.is_none() {
                        first_nonzero = Some(format!(
                            "M.I.({}) = {}",
                            inputs
                                .iter()
                                .map(|&i| basis.name(i))
                                .collect::<Vec<_>>()
                                .join(","),
                            format_vector(&basis, &mi)
                        ));
                    }
                }
                for i in 0..dim {
                    let mut e = vec![Rational::zero(); dim];
                    e[i] = Rational::one();
                    let paired = -omega.pair(&e, &mi);
                    let mut vars = inputs.clone();
                    vars.push(i);
                    let sym = match Monomial::from_unsorted(&vars, &basis) {
                        None => Rational::zero(),
                        Some((full, _)) => {
                            let (negative, _) = move_to_front(&full, i, &basis);
                            qme_part.coefficient(g as i32, &full)
                                * multiplicity_factorial(&full)
                                * sign(negative)
                        }
                    };
                    if sym != paired && pairing_bad.is_none() {
                        pairing_bad = Some(format!(
                            "v0 = {}, inputs ({}): master equation gives {}, main identity gives {}",
                            basis.name(i),
                            inputs.iter().map(|&x| basis.name(x)).collect::<Vec<_>>().join(","),
                            format_rational(&sym),
                            format_rational(&paired)
                        ));
                    }
                }
            }
            let qme_zero = qme_part.is_zero();
            qme_all_zero &= qme_zero;
            mi_all_zero &= mi_zero;
            if first_mi.is_none() {
                first_mi = first_nonzero.clone();
            }
            let agree = qme_zero == mi_zero;
            let counterexample = if !agree {
                Some(format!(
                    "master equation {} but main identity {}",
                    if qme_zero { "vanishes" } else { "fails" },
                    if mi_zero { "vanishes" } else { "fails" }
                ))
            } else {
                pairing_bad.clone()
            };
            report.push(
                format!("equivalence_genus{g}_arity{n}"),
                agree && pairing_bad.is_none(),
                format!(
                    "qme: {}; main identity: {}",
                    if qme_zero { "0" } else { "nonzero" },
                    if mi_zero { "0" } else { "nonzero" }
                ),
                counterexample,
            );
        }
    }
    let mut summary = ValidationReport::new();
    summary.push(
        "qme_residual",
        qme_all_zero,
        residual.truncated(window.max_weight()).summary(),
        None,
    );
    summary.push(
        "main_identity",
        mi_all_zero,
        if mi_all_zero { "0" } else { "nonzero" },
        first_mi,
    );
    summary.extend(report);
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hpl::free_action;
    use crate::rational::int;

    fn window() -> WeightWindow {
        WeightWindow::new(6).unwrap()
    }

    #[test]
    fn differential_gives_free_action() {
        for space in [fixtures::f1(), fixtures::f2(), fixtures::q_zero()] {
            let ops = LambdaOps::from_differential(&space.q);
            let action = lambda_to_action(&ops, &space.omega, window()).unwrap();
            assert_eq!(
                action.s_free(),
                &free_action(&space.q, &space.omega, window())
            );
            assert!(action.s_int().is_zero());
            assert_eq!(action_to_lambda(&action, &space.omega).unwrap(), ops);
        }
    }

    #[test]
    fn zero_ops_give_zero_action() {
        let space = fixtures::f2();
        let ops = LambdaOps::new(space.basis.clone());
        let action = lambda_to_action(&ops, &space.omega, window()).unwrap();
        assert!(action.total().unwrap().is_zero());
    }

    #[test]
    fn odd_repeated_input_rejected() {
        let space = fixtures::f1();
        let odd = (0..space.basis.len())
            .find(|&i| space.basis.is_odd(i))
            .unwrap();
        let mut ops = LambdaOps::new(space.basis.clone());
        assert!(ops.add(0, &[odd, odd], 0, int(1)).is_err());
    }

    #[test]
    fn unshuffles_counted() {
        let mut count = 0;
        for_each_unshuffle(4, |a, b| {
            assert_eq!(a.len() + b.len(), 4);
            count += 1;
        });
        assert_eq!(count, 16);
    }
}
