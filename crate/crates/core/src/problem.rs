//! The problem file: a JSON document describing `(V, Q, ω)` and an action
//! given either as a term list or as `λ` operations.
//!
//! ```json
//! {
//!   "basis": [{"name": "b", "degree": 1}, {"name": "c", "degree": 0}],
//!   "omega": [{"i": "b", "j": "c", "coefficient": "1"}],
//!   "q_map": [{"from": "c", "to": "b", "coefficient": "1"}],
//!   "action": {"terms": [{"genus": 0, "vars": ["c", "c", "c"], "coefficient": "1/3"}]},
//!   "max_weight": 6
//! }
//! ```
//!
//! An ω entry whose transpose is not listed is mirrored with the graded
//! antisymmetry sign. Genus-0 quadratic action terms, if present, are the
//! free part and must agree with the one defined by `Q` and ω; if absent,
//! the free part is derived.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};
use crate::lambda::LambdaOps;
use crate::linalg::{BasisElement, DgSpace, GradedBasis, GradedMap, Matrix, OddSymplecticForm};
use crate::rational::{format_rational, parse_rational, sign, Rational};
use crate::series::{FormalSeries, Monomial, WeightWindow};

/// Used when neither the file nor the command line sets a window.
pub const DEFAULT_MAX_WEIGHT: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub name: String,
    pub degree: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSpec {
    pub i: String,
    pub j: String,
    pub coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QSpec {
    pub from: String,
    pub to: String,
    pub coefficient: String,
}

/// One term `coefficient · ħ^genus · Π vars` of a series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub genus: i32,
    pub vars: Vec<String>,
    pub coefficient: String,
}

/// One coefficient of `λ^genus(inputs…)` along `output`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    pub genus: u32,
    pub inputs: Vec<String>,
    pub output: String,
    pub coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    Terms(Vec<TermSpec>),
    Lambda(Vec<LambdaSpec>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub basis: Vec<BasisSpec>,
    pub omega: Vec<OmegaSpec>,
    #[serde(default)]
    pub q_map: Vec<QSpec>,
    pub action: ActionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_weight: Option<u32>,
    /// A claimed effective action over the homology basis, checked by the
    /// homotopy command instead of the computed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_action: Option<Vec<TermSpec>>,
}

/// The action as given in the file.
#[derive(Debug, Clone)]
pub enum ProblemAction {
    /// Full action or interaction, in the original basis.
    Series(FormalSeries),
    Lambda(LambdaOps),
}

/// A parsed problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: DgSpace,
    pub action: ProblemAction,
    pub window: WeightWindow,
    pub claimed_effective_action: Option<Vec<TermSpec>>,
}

impl Problem {
    /// Parses JSON text. `max_weight` overrides the file's window.
    pub fn parse(text: &str, max_weight: Option<u32>) -> Result<Problem> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Problem::from_spec(spec, max_weight)
    }

    pub fn from_spec(spec: ProblemSpec, max_weight: Option<u32>) -> Result<Problem> {
        let window =
            WeightWindow::new(max_weight.or(spec.max_weight).unwrap_or(DEFAULT_MAX_WEIGHT))?;
        let basis = Arc::new(GradedBasis::new(
            spec.basis
                .iter()
                .map(|b| BasisElement {
                    name: b.name.clone(),
                    degree: b.degree,
                })
                .collect(),
        )?);
        let n = basis.len();
        let index = |what: &str, name: &str| {
            basis
                .index_of(name)
                .ok_or_else(|| structural(format!("{what}: unknown basis element `{name}`")))
        };
        let coefficient = |what: &str, text: &str| {
            parse_rational(text).map_err(|e| structural(format!("{what}: {e}")))
        };

        let mut listed: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for (k, entry) in spec.omega.iter().enumerate() {
            let what = format!("omega entry {}", k + 1);
            let i = index(&what, &entry.i)?;
            let j = index(&what, &entry.j)?;
            let c = coefficient(&what, &entry.coefficient)?;
            if listed.insert((i, j), c).is_some() {
                return Err(structural(format!(
                    "{what}: pair ({}, {}) listed twice",
                    entry.i, entry.j
                )));
            }
        }
        let mut w = Matrix::zeros(n, n);
        for ((i, j), c) in &listed {
            w.set(*i, *j, c.clone());
            if !listed.contains_key(&(*j, *i)) {
                let odd = basis.is_odd(*i) && basis.is_odd(*j);
                w.set(*j, *i, -(c * sign(odd)));
            }
        }
        let mut q = Matrix::zeros(n, n);
        for (k, entry) in spec.q_map.iter().enumerate() {
            let what = format!("q_map entry {}", k + 1);
            let from = index(&what, &entry.from)?;
            let to = index(&what, &entry.to)?;
            let c = coefficient(&what, &entry.coefficient)?;
            q.set(to, from, q.get(to, from) + c);
        }
        let space = DgSpace {
            q: GradedMap::new(basis.clone(), basis.clone(), q, 1)?,
            omega: OddSymplecticForm::new(basis.clone(), w)?,
            basis: basis.clone(),
        };
        let action = match &spec.action {
            ActionSpec::Terms(terms) => {
                ProblemAction::Series(parse_terms(terms, &basis, window, "action term")?)
            }
            ActionSpec::Lambda(entries) => {
                let mut ops = LambdaOps::new(basis.clone());
                for (k, entry) in entries.iter().enumerate() {
                    let what = format!("lambda entry {}", k + 1);
                    let inputs = entry
                        .inputs
                        .iter()
                        .map(|name| index(&what, name))
                        .collect::<Result<Vec<_>>>()?;
                    let output = index(&what, &entry.output)?;
                    let c = coefficient(&what, &entry.coefficient)?;
                    ops.add(entry.genus, &inputs, output, c)
                        .map_err(|e| structural(format!("{what}: {e}")))?;
                }
                ProblemAction::Lambda(ops)
            }
        };
        Ok(Problem {
            space,
            action,
            window,
            claimed_effective_action: spec.effective_action,
        })
    }
}

/// Resolves a term list against a basis.
pub fn parse_terms(
    terms: &[TermSpec],
    basis: &Arc<GradedBasis>,
    window: WeightWindow,
    what: &str,
) -> Result<FormalSeries> {
    let mut out = FormalSeries::zero(basis.clone(), window);
    for (k, term) in terms.iter().enumerate() {
        let label = format!("{what} {}", k + 1);
        let vars = term
            .vars
            .iter()
            .map(|name| {
                basis
                    .index_of(name)
                    .ok_or_else(|| structural(format!("{label}: unknown basis element `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let c =
            parse_rational(&term.coefficient).map_err(|e| structural(format!("{label}: {e}")))?;
        if c.is_zero() {
            continue;
        }
        let (mono, negative) = Monomial::from_unsorted(&vars, basis)
            .ok_or_else(|| structural(format!("{label}: an odd variable appears twice")))?;
        if !window.admits(term.genus, mono.len()) {
            continue;
        }
        out.add_term(term.genus, mono, c * sign(negative));
    }
    Ok(out)
}

/// A series as a term list, in the series' own order.
pub fn term_specs(series: &FormalSeries) -> Vec<TermSpec> {
    let basis = series.basis();
    series
        .terms()
        .map(|(term, c)| TermSpec {
            genus: term.genus,
            vars: term
                .mono
                .vars()
                .iter()
                .map(|&v| basis.name(v as usize).to_string())
                .collect(),
            coefficient: format_rational(c),
        })
        .collect()
}
