use std::collections::HashMap;

use nalgebra::DMatrix;

use super::term::HomogeneousTerm;
use crate::error::{Error, Result};
use crate::fiber::{C64, ONE};
use crate::jet;
use crate::manifold::ModelManifold;

/// A finite polyhomogeneous expansion `p ~ Σ_{j=0}^{J} p_{m-j}`.
///
/// Terms are stored in order of decreasing degree, consecutive degrees
/// differing by one. A missing term in any operation is treated as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSymbol {
    terms: Vec<HomogeneousTerm>,
}

fn ipow(alpha_len: usize) -> C64 {
    // (-i)^k
    match alpha_len % 4 {
        0 => ONE,
        1 => C64::new(0.0, -1.0),
        2 => -ONE,
        _ => C64::new(0.0, 1.0),
    }
}

fn sum_terms(acc: Option<HomogeneousTerm>, t: HomogeneousTerm) -> Result<Option<HomogeneousTerm>> {
    Ok(Some(match acc {
        None => t,
        Some(a) => a.add(&t)?,
    }))
}

impl ClassicalSymbol {
    pub fn new(terms: Vec<HomogeneousTerm>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("a classical symbol needs at least one term".into()))?;
        for (j, t) in terms.iter().enumerate() {
            if t.manifold() != first.manifold() {
                return Err(Error::GridMismatch(format!("term {j} lives on another grid")));
            }
            if t.fiber() != first.fiber() {
                return Err(Error::ShapeMismatch(format!(
                    "term {j} has fiber {}, expected {}",
                    t.fiber(),
                    first.fiber()
                )));
            }
            if t.degree() != first.degree() - j as i32 {
                return Err(Error::InvalidInput(format!(
                    "term {j} has degree {}, expected {}",
                    t.degree(),
                    first.degree() - j as i32
                )));
            }
        }
        Ok(Self { terms })
    }

    pub fn from_term(term: HomogeneousTerm) -> Self {
        Self { terms: vec![term] }
    }

    /// The identity, a single constant term of degree 0.
    pub fn identity(manifold: ModelManifold, fiber: usize) -> Self {
        Self::from_term(HomogeneousTerm::constant(
            manifold,
            0,
            &DMatrix::identity(fiber, fiber),
        ))
    }

    pub fn terms(&self) -> &[HomogeneousTerm] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<HomogeneousTerm> {
        self.terms
    }

    /// The term of degree `leading_degree() - j`.
    pub fn term(&self, j: usize) -> Option<&HomogeneousTerm> {
        self.terms.get(j)
    }

    pub fn term_of_degree(&self, degree: i32) -> Option<&HomogeneousTerm> {
        let j = self.leading_degree() - degree;
        if j < 0 {
            return None;
        }
        self.terms.get(j as usize)
    }

    pub fn leading_degree(&self) -> i32 {
        self.terms[0].degree()
    }

    pub fn lowest_degree(&self) -> i32 {
        self.leading_degree() - self.order() as i32
    }

    /// Number of terms after the leading one.
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn manifold(&self) -> &ModelManifold {
        self.terms[0].manifold()
    }

    pub fn fiber(&self) -> usize {
        self.terms[0].fiber()
    }

    /// Keeps the first `order + 1` terms.
    pub fn truncated(&self, order: usize) -> Self {
        Self {
            terms: self.terms[..(order + 1).min(self.terms.len())].to_vec(),
        }
    }

    fn min_jet_order(&self) -> usize {
        self.terms.iter().map(|t| t.jet_order()).min().unwrap_or(0)
    }

    fn zero_term(&self, degree: i32, jet_order: usize) -> HomogeneousTerm {
        HomogeneousTerm::zeros(*self.manifold(), degree, self.fiber(), jet_order)
    }

    /// Leibniz composition of left quantizations, truncated after `order`
    /// terms below the leading degree:
    ///
    /// `(p#q)_{m_p+m_q-j} = Σ_{|α|+j₁+j₂=j} (-i)^{|α|}/α! ∂_ξ^α p_{j₁} ∂_x^α q_{j₂}`.
    pub fn compose(&self, other: &Self, order: usize) -> Result<Self> {
        if self.manifold() != other.manifold() {
            return Err(Error::GridMismatch("composition of symbols on different grids".into()));
        }
        if self.fiber() != other.fiber() {
            return Err(Error::ShapeMismatch("composition of symbols with different fibers".into()));
        }
        let dim = self.manifold().dim();
        let mut dxi: HashMap<(usize, [usize; 2]), HomogeneousTerm> = HashMap::new();
        let mut dx: HashMap<(usize, [usize; 2]), HomogeneousTerm> = HashMap::new();
        let fallback_jets = self.min_jet_order().min(other.min_jet_order());
        let lead = self.leading_degree() + other.leading_degree();
        let mut terms = Vec::with_capacity(order + 1);
        for j in 0..=order {
            let mut acc: Option<HomogeneousTerm> = None;
            for a in 0..=j {
                for alpha in jet::indices_of_degree(dim, a) {
                    let coef = ipow(a) / jet::factorial(alpha);
                    for j1 in 0..=(j - a) {
                        let j2 = j - a - j1;
                        let (Some(p), Some(q)) = (self.term(j1), other.term(j2)) else {
                            continue;
                        };
                        if !dxi.contains_key(&(j1, alpha)) {
                            let mut t = p.clone();
                            for axis in 0..dim {
                                for _ in 0..alpha[axis] {
                                    t = t.differentiate_xi(axis)?;
                                }
                            }
                            dxi.insert((j1, alpha), t);
                        }
                        if !dx.contains_key(&(j2, alpha)) {
                            let mut t = q.clone();
                            for axis in 0..dim {
                                for _ in 0..alpha[axis] {
                                    t = t.differentiate_x(axis)?;
                                }
                            }
                            dx.insert((j2, alpha), t);
                        }
                        let prod = dxi[&(j1, alpha)].mul(&dx[&(j2, alpha)])?;
                        acc = sum_terms(acc, if a == 0 { prod } else { prod.scale(coef) })?;
                    }
                }
            }
            terms.push(match acc {
                Some(t) => t,
                None => self.zero_term(lead - j as i32, fallback_jets),
            });
        }
        Self::new(terms)
    }

    /// Pointwise product of the full expansions, truncated at the combined order.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let order = self.order() + other.order();
        let mut terms = Vec::with_capacity(order + 1);
        for j in 0..=order {
            let mut acc = None;
            for j1 in 0..=j {
                if let (Some(p), Some(q)) = (self.term(j1), other.term(j - j1)) {
                    acc = sum_terms(acc, p.mul(q)?)?;
                }
            }
            terms.push(acc.expect("some pair exists for every j up to the combined order"));
        }
        Self::new(terms)
    }

    fn combine(&self, other: &Self, sign: C64) -> Result<Self> {
        if self.manifold() != other.manifold() || self.fiber() != other.fiber() {
            return Err(Error::ShapeMismatch("sum of incompatible symbols".into()));
        }
        let top = self.leading_degree().max(other.leading_degree());
        let bottom = self.lowest_degree().min(other.lowest_degree());
        let jets = self.min_jet_order().min(other.min_jet_order());
        let mut terms = Vec::new();
        for d in (bottom..=top).rev() {
            let t = match (self.term_of_degree(d), other.term_of_degree(d)) {
                (Some(a), Some(b)) => a.add(&b.scale(sign))?,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.scale(sign),
                (None, None) => self.zero_term(d, jets),
            };
            terms.push(t);
        }
        Self::new(terms)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -ONE)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.scale(c)).collect(),
        }
    }

    /// Fiber trace of every term.
    pub fn trace(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.trace()).collect(),
        }
    }

    /// Max-norm of each term over the samples.
    pub fn term_norms(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.max_abs()).collect()
    }

    /// Evaluates the truncated expansion at a covector.
    pub fn evaluate(&self, x: &[f64], xi: &[f64]) -> Result<DMatrix<C64>> {
        let mut acc = DMatrix::zeros(self.fiber(), self.fiber());
        for t in &self.terms {
            acc += t.evaluate(x, xi)?;
        }
        Ok(acc)
    }
}
