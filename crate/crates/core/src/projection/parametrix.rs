use std::collections::HashMap;

use nalgebra::DMatrix;

use super::Contour;
use crate::error::{Error, Result};
use crate::fiber::{self, C64, ONE, ZERO};
use crate::jet;
use crate::local::JetAlgebra;
use crate::symbol::{ClassicalSymbol, HomogeneousTerm};
use rayon::prelude::*;

/// `c₂` together with its ξ-derivatives, shared by every contour node.
#[derive(Debug, Clone)]
pub(crate) struct Auxiliary {
    c2: HomogeneousTerm,
    dxi: HashMap<[usize; 2], HomogeneousTerm>,
}

fn ipow(k: usize) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => C64::new(0.0, -1.0),
        2 => -ONE,
        _ => C64::new(0.0, 1.0),
    }
}

impl Auxiliary {
    pub(crate) fn new(c: &ClassicalSymbol, order: usize) -> Result<Self> {
        if c.leading_degree() != 2 || c.order() != 0 {
            return Err(Error::InvalidInput(
                "the parametrix recursion expects a single homogeneous term of degree 2".into(),
            ));
        }
        let c2 = c.terms()[0].clone();
        let dim = c2.manifold().dim();
        let mut dxi: HashMap<[usize; 2], HomogeneousTerm> = HashMap::new();
        for a in 1..=order {
            for alpha in jet::indices_of_degree(dim, a) {
                // Differentiate the cached term one order down.
                let axis = if alpha[0] > 0 { 0 } else { 1 };
                let mut prev = alpha;
                prev[axis] -= 1;
                let t = match dxi.get(&prev) {
                    Some(base) => base.differentiate_xi(axis)?,
                    None => c2.differentiate_xi(axis)?,
                };
                dxi.insert(alpha, t);
            }
        }
        Ok(Self { c2, dxi })
    }

    /// `q_{-2-j}(·, ·, λ)` on the reduced cosphere for `j ≤ order`:
    /// `q_{-2} = (c₂ − λ)⁻¹` and
    /// `q_{-2-j} = −q_{-2} Σ_{|α|≥1, |α|+j₂=j} (−i)^{|α|}/α! ∂_ξ^α c₂ ∂_x^α q_{-2-j₂}`.
    pub(crate) fn parametrix_at(&self, lambda: C64, order: usize) -> Result<Vec<HomogeneousTerm>> {
        let dim = self.c2.manifold().dim();
        let q0 = self.c2.shifted(lambda).inverse().map_err(|e| match e {
            Error::Singular(at) => Error::Singular(format!("c₂ − λ for λ = {lambda} {at}")),
            other => other,
        })?;
        let mut q = vec![q0];
        let mut dx: HashMap<(usize, [usize; 2]), HomogeneousTerm> = HashMap::new();
        for j in 1..=order {
            let mut acc: Option<HomogeneousTerm> = None;
            for a in 1..=j {
                let j2 = j - a;
                for alpha in jet::indices_of_degree(dim, a) {
                    if !dx.contains_key(&(j2, alpha)) {
                        let mut t = q[j2].clone();
                        for axis in 0..dim {
                            for _ in 0..alpha[axis] {
                                t = t.differentiate_x(axis)?;
                            }
                        }
                        dx.insert((j2, alpha), t);
                    }
                    let coef = ipow(a) / jet::factorial(alpha);
                    let prod = self.dxi[&alpha].mul(&dx[&(j2, alpha)])?.scale(coef);
                    acc = Some(match acc {
                        None => prod,
                        Some(s) => s.add(&prod)?,
                    });
                }
            }
            let s = acc.expect("j >= 1 has at least one term");
            q.push(q[0].mul(&s)?.scale(-ONE));
        }
        Ok(q)
    }
}

impl Auxiliary {
    /// `π_{-j} = Σ_k w_k q_{-2-j}(λ_k)` for `j ≤ order`, computed sample by
    /// sample with jets. Returns terms of degree tag `-2-j` carrying
    /// `O − j` jets, `O` being the jet order of `c₂`.
    ///
    /// At points outside `support` the field is constant with zero jets, so
    /// only `π₀` is formed there and the lower terms are exact zeros.
    pub(crate) fn integrate(&self, nodes: &[(C64, C64)], order: usize, support: &[bool]) -> Result<Vec<HomogeneousTerm>> {
        let manifold = *self.c2.manifold();
        let dim = manifold.dim();
        let o = self.c2.jet_order();
        if o < order {
            return Err(Error::InsufficientOrder { have: o, need: order });
        }
        let m = self.c2.fiber();
        let sz = m * m;
        let dirs = manifold.dirs();
        let b = manifold.points() * dirs * sz;
        let alg = JetAlgebra::new(dim, o);
        let len_o = alg.len(o);
        let alphas: Vec<(usize, [usize; 2], C64, &HomogeneousTerm)> = (1..=order)
            .flat_map(|a| jet::indices_of_degree(dim, a).into_iter().map(move |al| (a, al)))
            .map(|(a, al)| (a, al, ipow(a) / jet::factorial(al), &self.dxi[&al]))
            .collect();
        let gather = |t: &HomogeneousTerm, sample: usize, buf: &mut [C64]| {
            for k in 0..len_o {
                buf[k * sz..(k + 1) * sz].copy_from_slice(&t.data()[k * b + sample * sz..k * b + (sample + 1) * sz]);
            }
        };
        let per_point = (0..manifold.points())
            .into_par_iter()
            .map(|p| -> Result<Vec<Vec<C64>>> {
                let full = support[p];
                let depth = if full { order } else { 0 };
                let mut c2 = vec![ZERO; len_o * sz];
                let mut dxi: Vec<Vec<C64>> = alphas.iter().map(|_| vec![ZERO; len_o * sz]).collect();
                let mut q: Vec<Vec<C64>> = (0..=depth).map(|_| vec![ZERO; len_o * sz]).collect();
                let mut shifted = vec![ZERO; len_o * sz];
                let mut sbuf = vec![ZERO; len_o * sz];
                let mut dbuf = vec![ZERO; len_o * sz];
                let mut work = vec![ZERO; sz];
                let mut out: Vec<Vec<C64>> = (0..=depth)
                    .map(|j| vec![ZERO; dirs * alg.len(o - j) * sz])
                    .collect();
                for d in 0..dirs {
                    let sample = p * dirs + d;
                    gather(&self.c2, sample, &mut c2);
                    if full {
                        for (buf, (_, _, _, t)) in dxi.iter_mut().zip(&alphas) {
                            gather(t, sample, buf);
                        }
                    }
                    let o0 = if full { o } else { 0 };
                    for &(lambda, w) in nodes {
                        shifted[..alg.len(o0) * sz].copy_from_slice(&c2[..alg.len(o0) * sz]);
                        for i in 0..m {
                            shifted[i * m + i] -= lambda;
                        }
                        let (q0, rest) = q.split_first_mut().expect("q has j = 0");
                        if !alg.invert(&shifted, q0, &mut work, m, o0) {
                            return Err(Error::Singular(format!(
                                "c₂ − λ for λ = {lambda} at grid point {p}, direction {d}"
                            )));
                        }
                        for j in 1..=depth {
                            let oj = o - j;
                            let n = alg.len(oj) * sz;
                            sbuf[..n].fill(ZERO);
                            for (idx, &(a, alpha, coef, _)) in alphas.iter().enumerate() {
                                if a > j {
                                    break;
                                }
                                let src = if j - a == 0 { &*q0 } else { &rest[j - a - 1] };
                                alg.shift(src, alpha, &mut dbuf, m, oj);
                                alg.mul_acc(&dxi[idx], &dbuf, coef, &mut sbuf, m, oj);
                            }
                            alg.mul(q0, &sbuf, -ONE, &mut rest[j - 1], m, oj);
                        }
                        for j in 0..=depth {
                            let n = alg.len(if full { o - j } else { 0 }) * sz;
                            let qj = if j == 0 { &*q0 } else { &rest[j - 1] };
                            let slot = &mut out[j][d * alg.len(o - j) * sz..];
                            for e in 0..n {
                                slot[e] += w * qj[e];
                            }
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut terms: Vec<HomogeneousTerm> = (0..=order)
            .map(|j| HomogeneousTerm::zeros(manifold, -2 - j as i32, m, o - j))
            .collect();
        for (p, out) in per_point.iter().enumerate() {
            for (j, vals) in out.iter().enumerate() {
                let len = alg.len(o - j);
                let data = terms[j].data_mut();
                for d in 0..dirs {
                    let sample = p * dirs + d;
                    for k in 0..len {
                        let src = &vals[(d * len + k) * sz..(d * len + k + 1) * sz];
                        data[k * b + sample * sz..k * b + (sample + 1) * sz].copy_from_slice(src);
                    }
                }
            }
        }
        Ok(terms)
    }
}

/// Parametrix terms `q_{-2-j}`, `j ≤ J`, sampled at every contour node on the
/// reduced cosphere `|ξ| = 1`. Values at other `(ξ, λ)` follow from joint
/// homogeneity of degree `-2-j` in `(ξ, |λ|^{1/2})`.
#[derive(Debug, Clone)]
pub struct ParametrixTable {
    contour: Contour,
    order: usize,
    c2: HomogeneousTerm,
    nodes: Vec<(C64, C64)>,
    terms: Vec<Vec<HomogeneousTerm>>,
}

impl ParametrixTable {
    /// Runs the recursion at every node of `contour`.
    pub fn build(c: &ClassicalSymbol, contour: &Contour, order: usize) -> Result<Self> {
        let aux = Auxiliary::new(c, order)?;
        let nodes = contour.nodes_and_weights();
        let terms = nodes
            .iter()
            .map(|&(lambda, _)| aux.parametrix_at(lambda, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            contour: *contour,
            order,
            c2: aux.c2,
            nodes,
            terms,
        })
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `q_{-2-j}` at contour node `k`.
    pub fn term(&self, node: usize, j: usize) -> &HomogeneousTerm {
        &self.terms[node][j]
    }

    pub fn lambda(&self, node: usize) -> C64 {
        self.nodes[node].0
    }

    pub(crate) fn weighted_terms(&self) -> impl Iterator<Item = (C64, &[HomogeneousTerm])> {
        self.nodes.iter().zip(&self.terms).map(|((_, w), t)| (*w, t.as_slice()))
    }

    /// Largest entry of `q_{-2}(c₂ − λ) − I` over nodes and samples.
    pub fn inverse_defect(&self) -> f64 {
        let m = self.c2.fiber();
        let s = m * m;
        let id = fiber::identity(m);
        let mut worst: f64 = 0.0;
        let mut prod = vec![ZERO; s];
        for (k, q) in self.terms.iter().enumerate() {
            let shifted = self.c2.shifted(self.nodes[k].0);
            for (a, b) in q[0].samples().chunks(s).zip(shifted.samples().chunks(s)) {
                prod.fill(ZERO);
                fiber::mul_acc(a, b, ONE, &mut prod, m);
                for e in 0..s {
                    worst = worst.max((prod[e] - id[e]).norm());
                }
            }
        }
        worst
    }

    /// Value of `q_{-2}` at one node, sample point and direction.
    pub fn sample(&self, node: usize, j: usize, point: usize, dir: usize) -> DMatrix<C64> {
        self.terms[node][j].sample_matrix(point, dir)
    }
}
