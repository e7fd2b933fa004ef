//! Constructive Hodge decomposition V = H ⊕ B ⊕ C of a dg odd-symplectic space.

use std::collections::HashSet;
use std::ops::Range;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::{
    validate_dg_symplectic, BasisElement, GradedBasis, GradedMap, Matrix, OddSymplecticForm,
};
use crate::error::{internal, precondition, Result};
use crate::rational::{frac, Rational};

/// An adapted basis `H, B, C` (in that order) with B = Im Q, Q: C ≅ B,
/// H ⊕ B = Ker Q, and ω block diagonal with B and C Lagrangian.
#[derive(Debug, Clone)]
pub struct HodgeSplit {
    original: Arc<GradedBasis>,
    adapted: Arc<GradedBasis>,
    h: usize,
    m: usize,
    from_adapted: Matrix,
    change_of_basis: GradedMap,
    q_adapted: GradedMap,
    omega_adapted: OddSymplecticForm,
    q_block: Matrix,
    q_block_inverse: Matrix,
    omega_h: Matrix,
    omega_bc: Matrix,
}

impl HodgeSplit {
    pub fn original(&self) -> &Arc<GradedBasis> {
        &self.original
    }

    pub fn adapted(&self) -> &Arc<GradedBasis> {
        &self.adapted
    }

    pub fn h_range(&self) -> Range<usize> {
        0..self.h
    }

    pub fn b_range(&self) -> Range<usize> {
        self.h..self.h + self.m
    }

    pub fn c_range(&self) -> Range<usize> {
        self.h + self.m..self.h + 2 * self.m
    }

    pub fn h_dim(&self) -> usize {
        self.h
    }

    pub fn bc_dim(&self) -> usize {
        self.m
    }

    /// Matrix whose columns are the adapted vectors in original coordinates.
    pub fn from_adapted(&self) -> &Matrix {
        &self.from_adapted
    }

    /// Degree 0 map from original coordinates to adapted coordinates.
    pub fn change_of_basis(&self) -> &GradedMap {
        &self.change_of_basis
    }

    pub fn q_adapted(&self) -> &GradedMap {
        &self.q_adapted
    }

    pub fn omega_adapted(&self) -> &OddSymplecticForm {
        &self.omega_adapted
    }

    /// `q_block[k][i]` is the coefficient of `b_k` in `Q(c_i)`.
    pub fn q_block(&self) -> &Matrix {
        &self.q_block
    }

    pub fn q_block_inverse(&self) -> &Matrix {
        &self.q_block_inverse
    }

    /// ω restricted to H (ω′).
    pub fn omega_h(&self) -> &Matrix {
        &self.omega_h
    }

    /// `omega_bc[k][l] = ω(b_k, c_l)` (ω″).
    pub fn omega_bc(&self) -> &Matrix {
        &self.omega_bc
    }

    /// Original coordinates of adapted vector `k`.
    pub fn adapted_vector(&self, k: usize) -> Vec<Rational> {
        self.from_adapted.column(k)
    }

    /// The homology H as a graded basis of its own.
    pub fn h_basis(&self) -> Arc<GradedBasis> {
        Arc::new(
            GradedBasis::new(self.adapted.elements()[..self.h].to_vec())
                .expect("sub-basis of a valid basis"),
        )
    }

    /// ω′ as a form on [`Self::h_basis`].
    pub fn omega_h_form(&self) -> OddSymplecticForm {
        OddSymplecticForm::new(self.h_basis(), self.omega_h.clone()).expect("square block")
    }

    /// Projection p: V → H in original coordinates.
    pub fn projection(&self) -> GradedMap {
        let tinv = self.change_of_basis.matrix();
        let rows: Vec<usize> = self.h_range().collect();
        let cols: Vec<usize> = (0..self.original.len()).collect();
        GradedMap::new(
            self.original.clone(),
            self.h_basis(),
            tinv.select(&rows, &cols),
            0,
        )
        .expect("dimensions agree")
    }

    /// Inclusion i: H → V in original coordinates.
    pub fn inclusion(&self) -> GradedMap {
        let rows: Vec<usize> = (0..self.original.len()).collect();
        let cols: Vec<usize> = self.h_range().collect();
        GradedMap::new(
            self.h_basis(),
            self.original.clone(),
            self.from_adapted.select(&rows, &cols),
            0,
        )
        .expect("dimensions agree")
    }
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

fn is_unit(v: &[Rational], i: usize) -> bool {
    v.iter()
        .enumerate()
        .all(|(k, c)| if k == i { c.is_one() } else { c.is_zero() })
}

fn axpy(y: &mut [Rational], a: &Rational, x: &[Rational]) {
    if a.is_zero() {
        return;
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        if !xi.is_zero() {
            *yi += a * xi;
        }
    }
}

fn gram(omega: &OddSymplecticForm, xs: &[Vec<Rational>], ys: &[Vec<Rational>]) -> Matrix {
    Matrix::from_fn(xs.len(), ys.len(), |r, c| omega.pair(&xs[r], &ys[c]))
}

/// Computes the adapted basis. Deterministic: B is spanned by the images of
/// the leftmost independent columns of Q, H by the kernel vectors (ordered by
/// free column) that are independent of B, and C is obtained by projecting
/// the chosen preimages into the ω-complement of H and correcting them by
/// elements of B until ω vanishes on C.
pub fn hodge_decompose(
    basis: &Arc<GradedBasis>,
    q: &GradedMap,
    omega: &OddSymplecticForm,
) -> Result<HodgeSplit> {
    let report = validate_dg_symplectic(basis, q, omega)?;
    if !report.all_passed() {
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(precondition(format!(
            "not a dg odd-symplectic space: {}",
            failed.join(", ")
        )));
    }
    let n = basis.len();
    let qm = q.matrix();

    let (_, pivots) = qm.rref();
    let d_vecs: Vec<Vec<Rational>> = pivots.iter().map(|&j| unit(n, j)).collect();
    let b_vecs: Vec<Vec<Rational>> = pivots.iter().map(|&j| qm.column(j)).collect();
    let m = pivots.len();

    let mut h_vecs: Vec<(usize, Vec<Rational>)> = Vec::new();
    let mut span = b_vecs.clone();
    for (free, v) in qm.nullspace() {
        span.push(v.clone());
        if Matrix::from_columns(n, &span).rank() == span.len() {
            h_vecs.push((free, v));
        } else {
            span.pop();
        }
    }
    let h = h_vecs.len();
    if h + 2 * m != n {
        return Err(internal(format!(
            "dimension count failed: {h} + 2*{m} != {n}"
        )));
    }
    let hv: Vec<Vec<Rational>> = h_vecs.iter().map(|(_, v)| v.clone()).collect();

    let omega_h = gram(omega, &hv, &hv);
    let omega_h_inv_t = omega_h
        .transpose()
        .inverse()
        .ok_or_else(|| internal("omega restricted to H is degenerate"))?;

    let mut d_proj = Vec::with_capacity(m);
    for d in &d_vecs {
        let r: Vec<Rational> = hv.iter().map(|hq| omega.pair(d, hq)).collect();
        let y = omega_h_inv_t.mul_vec(&r);
        let mut v = d.clone();
        for (p, hp) in hv.iter().enumerate() {
            axpy(&mut v, &-y[p].clone(), hp);
        }
        d_proj.push(v);
    }

    let pmat = gram(omega, &b_vecs, &d_proj);
    let nmat = gram(omega, &d_proj, &d_proj);
    let pinv = pmat
        .inverse()
        .ok_or_else(|| internal("pairing between B and its complement is degenerate"))?;
    let x = pinv.transpose().mul(&nmat).scale(&frac(1, 2));
    let mut c_vecs = d_proj;
    for (l, c) in c_vecs.iter_mut().enumerate() {
        for (p, b) in b_vecs.iter().enumerate() {
            axpy(c, x.get(p, l), b);
        }
    }

    let mut names = HashSet::new();
    let mut elements = Vec::with_capacity(n);
    let mut columns = Vec::with_capacity(n);
    let mut add = |v: &Vec<Rational>, key: usize, prefix: &str| -> Result<()> {
        let mut name = if is_unit(v, key) {
            basis.name(key).to_string()
        } else {
            format!("{prefix}_{}", basis.name(key))
        };
        while basis.index_of(&name).is_some_and(|i| !is_unit(v, i)) || !names.insert(name.clone()) {
            name.push('\'');
        }
        let degree = basis
            .vector_degree(v)
            .ok_or_else(|| internal(format!("adapted vector {name} is not homogeneous")))?;
        elements.push(BasisElement { name, degree });
        columns.push(v.clone());
        Ok(())
    };
    for (free, v) in &h_vecs {
        add(v, *free, "H")?;
    }
    for b in &b_vecs {
        let lead = b.iter().position(|c| !c.is_zero()).expect("nonzero image");
        add(b, lead, "B")?;
    }
    for (c, &j) in c_vecs.iter().zip(&pivots) {
        add(c, j, "C")?;
    }
    let adapted = Arc::new(GradedBasis::new(elements)?);

    let t = Matrix::from_columns(n, &columns);
    let tinv = t
        .inverse()
        .ok_or_else(|| internal("adapted vectors are not a basis"))?;
    let q_ad = tinv.mul(qm).mul(&t);
    let w_ad = t.transpose().mul(omega.matrix()).mul(&t);

    let hr: Vec<usize> = (0..h).collect();
    let br: Vec<usize> = (h..h + m).collect();
    let cr: Vec<usize> = (h + m..n).collect();
    let hb: Vec<usize> = (0..h + m).collect();
    let all: Vec<usize> = (0..n).collect();
    let hc: Vec<usize> = hr.iter().chain(&cr).copied().collect();
    let bc: Vec<usize> = (h..n).collect();
    let structure_ok = q_ad.select(&all, &hb).is_zero()
        && q_ad.select(&hc, &cr).is_zero()
        && w_ad.select(&hr, &bc).is_zero()
        && w_ad.select(&br, &br).is_zero()
        && w_ad.select(&cr, &cr).is_zero();
    if !structure_ok {
        return Err(internal(
            "adapted basis does not have the expected block structure",
        ));
    }
    let q_block = q_ad.select(&br, &cr);
    let q_block_inverse = q_block
        .inverse()
        .ok_or_else(|| internal("Q restricted to C is not invertible"))?;
    let omega_bc = w_ad.select(&br, &cr);
    if omega_bc.inverse().is_none() {
        return Err(internal("omega pairing between B and C is degenerate"));
    }

    Ok(HodgeSplit {
        original: basis.clone(),
        adapted: adapted.clone(),
        h,
        m,
        change_of_basis: GradedMap::new(basis.clone(), adapted.clone(), tinv, 0)?,
        q_adapted: GradedMap::new(adapted.clone(), adapted.clone(), q_ad, 1)?,
        omega_adapted: OddSymplecticForm::new(adapted, w_ad.clone())?,
        from_adapted: t,
        q_block,
        q_block_inverse,
        omega_h: w_ad.select(&hr, &hr),
        omega_bc,
    })
}

/// The contracting homotopy k = −(Q|_C)⁻¹ on B, zero on H and C, expressed
/// in original coordinates.
pub fn contracting_homotopy(split: &HodgeSplit) -> GradedMap {
    let n = split.original.len();
    let mut k = Matrix::zeros(n, n);
    let minv = split.q_block_inverse();
    for (kk, b) in split.b_range().enumerate() {
        for (i, c) in split.c_range().enumerate() {
            k.set(c, b, -minv.get(i, kk).clone());
        }
    }
    let k = split
        .from_adapted
        .mul(&k)
        .mul(split.change_of_basis.matrix());
    GradedMap::new(split.original.clone(), split.original.clone(), k, -1).expect("square map")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn space(
        pairs: &[(&str, i32)],
        q: &[(usize, usize, i64)],
        w: &[(usize, usize, i64)],
    ) -> (Arc<GradedBasis>, GradedMap, OddSymplecticForm) {
        let basis = Arc::new(GradedBasis::from_pairs(pairs).unwrap());
        let n = basis.len();
        let mut qm = Matrix::zeros(n, n);
        for &(to, from, c) in q {
            qm.set(to, from, int(c));
        }
        let mut wm = Matrix::zeros(n, n);
        for &(i, j, c) in w {
            wm.set(i, j, int(c));
            wm.set(j, i, int(-c));
        }
        let q = GradedMap::new(basis.clone(), basis.clone(), qm, 1).unwrap();
        let w = OddSymplecticForm::new(basis.clone(), wm).unwrap();
        (basis, q, w)
    }

    #[test]
    fn f1_is_contractible() {
        let (b, q, w) = space(&[("b", 1), ("c", 0)], &[(0, 1, 1)], &[(0, 1, 1)]);
        let s = hodge_decompose(&b, &q, &w).unwrap();
        assert_eq!(s.h_dim(), 0);
        assert_eq!(s.bc_dim(), 1);
        assert_eq!(s.q_block(), &Matrix::identity(1));
        assert_eq!(s.omega_bc(), &Matrix::identity(1));
        let names: Vec<_> = s
            .adapted()
            .elements()
            .iter()
            .map(|e| e.name.as_str())
            .collect();
        assert_eq!(names, ["b", "c"]);
        let k = contracting_homotopy(&s);
        assert_eq!(k.entry(1, 0), &int(-1));
        assert!(k.entry(0, 0).is_zero() && k.entry(0, 1).is_zero() && k.entry(1, 1).is_zero());
    }

    #[test]
    fn f2_keeps_a_pair_in_homology() {
        let (b, q, w) = space(
            &[("a1", 0), ("a2", 1), ("b", 1), ("c", 0)],
            &[(2, 3, 1)],
            &[(0, 1, 1), (2, 3, 1)],
        );
        let s = hodge_decompose(&b, &q, &w).unwrap();
        let names: Vec<_> = s
            .adapted()
            .elements()
            .iter()
            .map(|e| e.name.as_str())
            .collect();
        assert_eq!(names, ["a1", "a2", "b", "c"]);
        assert_eq!(s.from_adapted(), &Matrix::identity(4));
        let k = contracting_homotopy(&s);
        for to in 0..4 {
            for from in 0..4 {
                let expected = if (to, from) == (3, 2) {
                    int(-1)
                } else {
                    int(0)
                };
                assert_eq!(k.entry(to, from), &expected);
            }
        }
    }

    #[test]
    fn zero_differential_keeps_everything() {
        let (b, _, w) = space(&[("x", 0), ("y", 1)], &[], &[(0, 1, 1)]);
        let q = GradedMap::zero(b.clone(), b.clone(), 1);
        let s = hodge_decompose(&b, &q, &w).unwrap();
        assert_eq!(s.h_dim(), 2);
        assert!(contracting_homotopy(&s).matrix().is_zero());
    }

    #[test]
    fn invalid_space_is_rejected() {
        let (b, q, mut w) = space(&[("b", 1), ("c", 0)], &[(0, 1, 1)], &[(0, 1, 1)]);
        let mut wm = w.matrix().clone();
        wm.set(1, 0, int(1));
        w = OddSymplecticForm::new(b.clone(), wm).unwrap();
        assert!(matches!(
            hodge_decompose(&b, &q, &w),
            Err(crate::Error::Precondition(_))
        ));
    }
}
