//! Brute-force Wick expansion shared by the oracle tests.

use std::collections::BTreeMap;

use bvtransfer::rational::{int, Rational};
use bvtransfer::series::FormalSeries;
use num_traits::{One, Zero};

/// `coeff · ħ^genus · γ^legs · α^ext`, all variables even.
#[derive(Clone)]
pub struct Vertex {
    pub coeff: Rational,
    pub genus: i32,
    pub legs: usize,
    pub ext: usize,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut x = x;
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Number of perfect matchings of the half-edges that connect all vertices.
fn connected_matchings(owner: &[usize], vertices: usize) -> u64 {
    fn rec(
        free: &mut Vec<usize>,
        edges: &mut Vec<(usize, usize)>,
        owner: &[usize],
        n: usize,
    ) -> u64 {
        if free.is_empty() {
            let mut parent: Vec<usize> = (0..n).collect();
            for &(a, b) in edges.iter() {
                let (ra, rb) = (find(&mut parent, owner[a]), find(&mut parent, owner[b]));
                parent[ra] = rb;
            }
            let root = find(&mut parent, 0);
            return u64::from((0..n).all(|v| find(&mut parent, v) == root));
        }
        let first = free.remove(0);
        let mut total = 0;
        for k in 0..free.len() {
            let other = free.remove(k);
            edges.push((first, other));
            total += rec(free, edges, owner, n);
            edges.pop();
            free.insert(k, other);
        }
        free.insert(0, first);
        total
    }
    if owner.is_empty() {
        return u64::from(vertices == 1);
    }
    let mut free: Vec<usize> = (0..owner.len()).collect();
    rec(&mut free, &mut Vec::new(), owner, vertices)
}

fn factorial(n: usize) -> Rational {
    (1..=n).fold(Rational::one(), |acc, k| acc * int(k as i64))
}

/// W = ħ · Σ over connected Feynman graphs, keyed by (genus, α power).
pub fn wick_oracle(
    vertices: &[Vertex],
    propagator: &Rational,
    max_weight: i32,
) -> BTreeMap<(i32, usize), Rational> {
    let mut out = BTreeMap::new();
    let mut counts = vec![0usize; vertices.len()];
    fn visit(
        k: usize,
        budget: i32,
        counts: &mut Vec<usize>,
        vertices: &[Vertex],
        propagator: &Rational,
        out: &mut BTreeMap<(i32, usize), Rational>,
    ) {
        if k == vertices.len() {
            let total: usize = counts.iter().sum();
            if total == 0 {
                return;
            }
            let mut owner = Vec::new();
            let mut vertex_id = 0;
            let mut factor = Rational::one();
            let mut genus = 1;
            let mut ext = 0;
            for (v, &n) in vertices.iter().zip(counts.iter()) {
                for _ in 0..n {
                    owner.extend(std::iter::repeat_n(vertex_id, v.legs));
                    vertex_id += 1;
                    factor *= &v.coeff;
                    genus += v.genus - 1;
                    ext += v.ext;
                }
                factor /= factorial(n);
            }
            if owner.len() % 2 == 1 {
                return;
            }
            let edges = owner.len() / 2;
            genus += edges as i32;
            for _ in 0..edges {
                factor *= propagator;
            }
            let graphs = connected_matchings(&owner, vertex_id);
            if graphs > 0 {
                *out.entry((genus, ext)).or_insert_with(Rational::zero) +=
                    factor * int(graphs as i64);
            }
            return;
        }
        // each vertex adds its weight minus two to the graph weight
        let cost = 2 * vertices[k].genus + (vertices[k].legs + vertices[k].ext) as i32 - 2;
        assert!(cost >= 1);
        let mut n = 0;
        loop {
            counts[k] = n;
            visit(
                k + 1,
                budget - n as i32 * cost,
                counts,
                vertices,
                propagator,
                out,
            );
            n += 1;
            if n as i32 * cost > budget {
                break;
            }
        }
        counts[k] = 0;
    }
    visit(
        0,
        max_weight - 2,
        &mut counts,
        vertices,
        propagator,
        &mut out,
    );
    out.retain(|_, c| !c.is_zero());
    out
}

/// Compares W, whose only variable may be `alpha`, with an oracle keyed by
/// (genus, power of `alpha`).
pub fn compare_with_oracle(
    w: &FormalSeries,
    alpha: Option<usize>,
    oracle: &BTreeMap<(i32, usize), Rational>,
) -> Result<(), String> {
    let mut from_transfer = BTreeMap::new();
    for (term, c) in w.terms() {
        if term.mono.vars().iter().any(|&v| Some(v as usize) != alpha) {
            return Err(format!("unexpected variable in {w}"));
        }
        from_transfer.insert((term.genus, term.mono.len()), c.clone());
    }
    if &from_transfer != oracle {
        return Err(format!("transfer {from_transfer:?} vs oracle {oracle:?}"));
    }
    Ok(())
}
