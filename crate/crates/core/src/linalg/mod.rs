//! Graded vector spaces over ℚ, graded linear maps and odd symplectic forms.

mod hodge;
mod matrix;

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Zero;

pub use hodge::{contracting_homotopy, hodge_decompose, HodgeSplit};
pub use matrix::Matrix;

use crate::error::{structural, Result};
use crate::rational::{format_rational, int, Rational};
use crate::report::ValidationReport;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisElement {
    pub name: String,
    pub degree: i32,
}

/// An ordered basis of a finite graded vector space. The order fixes the
/// index of every element in all matrices.
#[derive(Debug, Clone)]
pub struct GradedBasis {
    elements: Vec<BasisElement>,
    index: HashMap<String, usize>,
}

impl PartialEq for GradedBasis {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
    }
}

impl Eq for GradedBasis {}

impl GradedBasis {
    pub fn new(elements: Vec<BasisElement>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, e) in elements.iter().enumerate() {
            if e.name.is_empty() {
                return Err(structural(format!(
                    "basis element {} has an empty name",
                    i + 1
                )));
            }
            if index.insert(e.name.clone(), i).is_some() {
                return Err(structural(format!("duplicate basis name `{}`", e.name)));
            }
        }
        Ok(GradedBasis { elements, index })
    }

    /// Convenience constructor from `(name, degree)` pairs.
    pub fn from_pairs(pairs: &[(&str, i32)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(name, degree)| BasisElement {
                    name: name.to_string(),
                    degree,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn name(&self, i: usize) -> &str {
        &self.elements[i].name
    }

    pub fn degree(&self, i: usize) -> i32 {
        self.elements[i].degree
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.elements[i].degree.rem_euclid(2) == 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Degree of a vector if it is homogeneous; `None` for the zero vector
    /// or a mixed-degree vector.
    pub fn vector_degree(&self, v: &[Rational]) -> Option<i32> {
        let mut deg = None;
        for (i, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match deg {
                None => deg = Some(self.degree(i)),
                Some(d) if d != self.degree(i) => return None,
                _ => {}
            }
        }
        deg
    }
}

/// A linear map between graded bases. Columns index the domain, rows the
/// codomain. The nominal degree is not enforced on construction so that
/// malformed input can be reported by the validator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedMap {
    domain: Arc<GradedBasis>,
    codomain: Arc<GradedBasis>,
    matrix: Matrix,
    degree: i32,
}

impl GradedMap {
    pub fn new(
        domain: Arc<GradedBasis>,
        codomain: Arc<GradedBasis>,
        matrix: Matrix,
        degree: i32,
    ) -> Result<Self> {
        if matrix.rows() != codomain.len() || matrix.cols() != domain.len() {
            return Err(structural(format!(
                "map matrix is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                codomain.len(),
                domain.len()
            )));
        }
        Ok(GradedMap {
            domain,
            codomain,
            matrix,
            degree,
        })
    }

    pub fn zero(domain: Arc<GradedBasis>, codomain: Arc<GradedBasis>, degree: i32) -> Self {
        let matrix = Matrix::zeros(codomain.len(), domain.len());
        GradedMap {
            domain,
            codomain,
            matrix,
            degree,
        }
    }

    pub fn domain(&self) -> &Arc<GradedBasis> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<GradedBasis> {
        &self.codomain
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    /// Coefficient of codomain element `to` in the image of domain element `from`.
    pub fn entry(&self, to: usize, from: usize) -> &Rational {
        self.matrix.get(to, from)
    }

    pub fn apply(&self, v: &[Rational]) -> Vec<Rational> {
        self.matrix.mul_vec(v)
    }

    /// Nonzero entries `(to, from)` that do not respect the nominal degree.
    pub fn degree_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for to in 0..self.codomain.len() {
            for from in 0..self.domain.len() {
                if !self.matrix.get(to, from).is_zero()
                    && self.codomain.degree(to) != self.domain.degree(from) + self.degree
                {
                    out.push((to, from));
                }
            }
        }
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &GradedMap) -> Result<GradedMap> {
        if other.codomain != self.domain {
            return Err(structural("composition of maps with mismatched bases"));
        }
        Ok(GradedMap {
            domain: other.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: self.matrix.mul(&other.matrix),
            degree: self.degree + other.degree,
        })
    }
}

/// A bilinear form ω on a graded basis together with its inverse matrix when
/// ω is nondegenerate. The inverse satisfies `ω · ω⁻¹ = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OddSymplecticForm {
    basis: Arc<GradedBasis>,
    matrix: Matrix,
    inverse: Option<Matrix>,
}

impl OddSymplecticForm {
    pub fn new(basis: Arc<GradedBasis>, matrix: Matrix) -> Result<Self> {
        let n = basis.len();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(structural(format!(
                "omega matrix is {}x{}, expected {n}x{n}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let inverse = matrix.inverse();
        Ok(OddSymplecticForm {
            basis,
            matrix,
            inverse,
        })
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        self.matrix.get(i, j)
    }

    pub fn inverse(&self) -> Option<&Matrix> {
        self.inverse.as_ref()
    }

    pub fn inverse_or_err(&self) -> Result<&Matrix> {
        self.inverse
            .as_ref()
            .ok_or_else(|| crate::error::precondition("omega is degenerate"))
    }

    /// ω(x, y) for coordinate vectors.
    pub fn pair(&self, x: &[Rational], y: &[Rational]) -> Rational {
        let my = self.matrix.mul_vec(y);
        x.iter()
            .zip(&my)
            .filter(|(a, _)| !a.is_zero())
            .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
    }
}

/// A dg odd-symplectic vector space (V, Q, ω).
#[derive(Debug, Clone)]
pub struct DgSpace {
    pub basis: Arc<GradedBasis>,
    pub q: GradedMap,
    pub omega: OddSymplecticForm,
}

impl DgSpace {
    /// Builds from sparse entries; ω entries are mirrored antisymmetrically.
    pub fn from_entries(
        pairs: &[(&str, i32)],
        q: &[(usize, usize, Rational)],
        omega: &[(usize, usize, Rational)],
    ) -> Self {
        let basis = Arc::new(GradedBasis::from_pairs(pairs).expect("valid basis"));
        let n = basis.len();
        let mut qm = Matrix::zeros(n, n);
        for (to, from, c) in q {
            qm.set(*to, *from, c.clone());
        }
        let mut wm = Matrix::zeros(n, n);
        for (i, j, c) in omega {
            wm.set(*i, *j, c.clone());
            wm.set(*j, *i, -c.clone());
        }
        DgSpace {
            q: GradedMap::new(basis.clone(), basis.clone(), qm, 1).expect("square"),
            omega: OddSymplecticForm::new(basis.clone(), wm).expect("square"),
            basis,
        }
    }

    /// Applies a degree-0 change of basis followed by a reordering: new
    /// vector `k` is column `perm[k]` of `g` (in old coordinates). The new
    /// basis is named `e1, e2, …`. Also returns the matrix whose columns are
    /// the new vectors in old coordinates, which is the substitution matrix
    /// for pulling functions back to the new basis.
    pub fn transform(&self, g: &Matrix, perm: &[usize]) -> (DgSpace, Matrix) {
        let n = self.basis.len();
        let p = Matrix::from_fn(n, n, |r, c| if perm[c] == r { int(1) } else { int(0) });
        let g = g.mul(&p);
        let ginv = g.inverse().expect("invertible change of basis");
        let names: Vec<(String, i32)> = (0..n)
            .map(|k| (format!("e{}", k + 1), self.basis.degree(perm[k])))
            .collect();
        let refs: Vec<(&str, i32)> = names.iter().map(|(s, d)| (s.as_str(), *d)).collect();
        let basis = Arc::new(GradedBasis::from_pairs(&refs).expect("unique names"));
        let q = ginv.mul(self.q.matrix()).mul(&g);
        let w = g.transpose().mul(self.omega.matrix()).mul(&g);
        let space = DgSpace {
            q: GradedMap::new(basis.clone(), basis.clone(), q, 1).expect("square"),
            omega: OddSymplecticForm::new(basis.clone(), w).expect("square"),
            basis,
        };
        (space, g)
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        validate_dg_symplectic(&self.basis, &self.q, &self.omega)
    }

    pub fn hodge_decompose(&self) -> Result<HodgeSplit> {
        hodge_decompose(&self.basis, &self.q, &self.omega)
    }
}

fn pair_label(i: usize, j: usize) -> String {
    format!("({},{})", i + 1, j + 1)
}

fn summarize_pairs(pairs: &[(usize, usize)]) -> (String, Option<String>) {
    if pairs.is_empty() {
        return ("0".to_string(), None);
    }
    let labels: Vec<String> = pairs.iter().map(|&(i, j)| pair_label(i, j)).collect();
    (
        format!("{} offending entries", pairs.len()),
        Some(labels.join(" ")),
    )
}

/// Checks the axioms of a dg odd-symplectic vector space. Failures are report
/// entries; only inconsistent dimensions are errors. Offending index pairs are
/// 1-based.
pub fn validate_dg_symplectic(
    basis: &Arc<GradedBasis>,
    q: &GradedMap,
    omega: &OddSymplecticForm,
) -> Result<ValidationReport> {
    let n = basis.len();
    if q.domain().as_ref() != basis.as_ref()
        || q.codomain().as_ref() != basis.as_ref()
        || omega.basis().as_ref() != basis.as_ref()
    {
        return Err(structural("Q and omega must be defined on the given basis"));
    }
    if q.matrix().rows() != n || q.matrix().cols() != n || omega.matrix().rows() != n {
        return Err(structural("matrix dimensions do not match the basis"));
    }
    let mut report = ValidationReport::new();

    let mut bad = Vec::new();
    for to in 0..n {
        for from in 0..n {
            if !q.entry(to, from).is_zero() && basis.degree(to) != basis.degree(from) + 1 {
                bad.push((to, from));
            }
        }
    }
    let (res, ce) = summarize_pairs(&bad);
    report.push("q_degree_one", bad.is_empty(), res, ce);

    let q2 = q.matrix().mul(q.matrix());
    let bad: Vec<_> = nonzero_entries(&q2);
    let (res, ce) = summarize_pairs(&bad);
    report.push("q_squares_to_zero", bad.is_empty(), res, ce);

    let w = omega.matrix();
    let mut bad = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !w.get(i, j).is_zero() && basis.degree(i) + basis.degree(j) != 1 {
                bad.push((i, j));
            }
        }
    }
    let (res, ce) = summarize_pairs(&bad);
    report.push("omega_degree_minus_one", bad.is_empty(), res, ce);

    let mut bad = Vec::new();
    for i in 0..n {
        for j in 0..i {
            let sign_even = !(basis.is_odd(i) && basis.is_odd(j));
            let expected = if sign_even {
                -w.get(j, i).clone()
            } else {
                w.get(j, i).clone()
            };
            if *w.get(i, j) != expected {
                bad.push((i, j));
            }
        }
        if !basis.is_odd(i) && !w.get(i, i).is_zero() {
            bad.push((i, i));
        }
    }
    let (res, ce) = summarize_pairs(&bad);
    report.push("omega_graded_antisymmetric", bad.is_empty(), res, ce);

    if omega.inverse().is_some() {
        report.pass("omega_nondegenerate");
    } else {
        report.push(
            "omega_nondegenerate",
            false,
            format!("rank {} < {n}", w.rank()),
            None,
        );
    }

    // ω(Q e_i, e_j) + (−1)^{|e_i|} ω(e_i, Q e_j)
    let qt_w = q.matrix().transpose().mul(w);
    let w_q = w.mul(q.matrix());
    let mut bad = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let r = if basis.is_odd(i) {
                qt_w.get(i, j) - w_q.get(i, j)
            } else {
                qt_w.get(i, j) + w_q.get(i, j)
            };
            if !r.is_zero() {
                bad.push((i, j));
            }
        }
    }
    let (res, ce) = summarize_pairs(&bad);
    report.push("omega_q_compatible", bad.is_empty(), res, ce);

    Ok(report)
}

fn nonzero_entries(m: &Matrix) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !m.get(i, j).is_zero() {
                out.push((i, j));
            }
        }
    }
    out
}

/// Formats a coordinate vector as a linear combination of basis names.
pub fn format_vector(basis: &GradedBasis, v: &[Rational]) -> String {
    let parts: Vec<String> = v
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| format!("{}*{}", format_rational(c), basis.name(i)))
        .collect();
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" + ")
    }
}
