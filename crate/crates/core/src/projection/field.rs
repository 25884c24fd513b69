use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fiber::{self, C64, ZERO};
use crate::jet;
use crate::manifold::ModelManifold;
use crate::symbol::HomogeneousTerm;

/// Minimum distance, in grid cells, between the support of a perturbation and ∂X.
pub const MIN_MARGIN_CELLS: f64 = 2.0;

/// Smooth bump `exp(1 − 1/(1 − t²))` in the normal coordinate, with `t`
/// mapping `[lo, hi]` onto `[-1, 1]`. Equal to 1 at the midpoint and
/// vanishing to infinite order at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    lo: f64,
    hi: f64,
}

impl Cutoff {
    /// The widest admissible bump keeping `margin_cells` grid cells away from ∂X.
    pub fn with_margin(manifold: &ModelManifold, margin_cells: f64) -> Result<Self> {
        let h = manifold.spacing();
        Self::new(manifold, margin_cells * h, PI - margin_cells * h)
    }

    /// A bump on `[lo, hi] ⊂ X°`; rejected unless it keeps at least two grid
    /// cells from ∂X.
    pub fn new(manifold: &ModelManifold, lo: f64, hi: f64) -> Result<Self> {
        let c = Self { lo, hi };
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("empty cutoff interval [{lo}, {hi}]")));
        }
        let margin = c.margin_cells(manifold);
        if margin < MIN_MARGIN_CELLS - 1e-9 {
            return Err(Error::InvalidInput(format!(
                "cutoff [{lo:.6}, {hi:.6}] keeps only {margin:.3} grid cells from the boundary, \
                 at least {MIN_MARGIN_CELLS} required"
            )));
        }
        Ok(c)
    }

    /// A bump with no margin check, used to build counterexamples whose
    /// support crosses ∂X.
    pub(crate) fn unchecked(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Distance from the support to ∂X in grid cells (negative if it crosses).
    pub fn margin_cells(&self, manifold: &ModelManifold) -> f64 {
        self.lo.min(PI - self.hi) / manifold.spacing()
    }

    /// Scalar Taylor jets `b^{(k)}/k!`, `k ≤ order`, at every grid position of
    /// the normal axis. Positions outside the open support get exact zeros.
    pub fn jets(&self, manifold: &ModelManifold, order: usize) -> Vec<Vec<f64>> {
        let mid = 0.5 * (self.lo + self.hi);
        let half = 0.5 * (self.hi - self.lo);
        (0..manifold.n())
            .map(|i| {
                let x = i as f64 * manifold.spacing();
                let x = x - 2.0 * PI * ((x - mid) / (2.0 * PI)).round();
                let t = (x - mid) / half;
                let mut out = vec![0.0; order + 1];
                if t.abs() >= 1.0 {
                    return out;
                }
                let mut tj = vec![0.0; order + 1];
                tj[0] = t;
                if order >= 1 {
                    tj[1] = 1.0 / half;
                }
                let mut u: Vec<f64> = jet::scalar::mul(&tj, &tj).iter().map(|v| -v).collect();
                u[0] += 1.0;
                let mut e: Vec<f64> = jet::scalar::recip(&u).iter().map(|v| -v).collect();
                e[0] += 1.0;
                out.copy_from_slice(&jet::scalar::exp(&e));
                out
            })
            .collect()
    }
}

/// Idempotent principal symbol `p̃` with `p̃ = β` off a compact subset of X°,
/// carrying exact x-jets.
#[derive(Debug, Clone)]
pub struct IdempotentSymbolField {
    p_tilde: HomogeneousTerm,
    beta: DMatrix<C64>,
    cutoff: Cutoff,
    support: Vec<bool>,
    refinement_nodes: usize,
}

impl IdempotentSymbolField {
    /// The constant field `p̃ ≡ β`.
    pub fn constant(manifold: ModelManifold, beta: &DMatrix<C64>, jet_order: usize) -> Result<Self> {
        fiber::check_idempotent(beta, 1e-12)?;
        let mut p_tilde = HomogeneousTerm::zeros(manifold, 0, beta.nrows(), jet_order);
        let flat = fiber::from_matrix(beta);
        let s = flat.len();
        for chunk in p_tilde.data_mut()[..manifold.points() * manifold.dirs() * s].chunks_mut(s) {
            chunk.copy_from_slice(&flat);
        }
        Ok(Self {
            p_tilde,
            beta: beta.clone(),
            // Degenerate bump at the centre of X; nothing is perturbed.
            cutoff: Cutoff::unchecked(0.5 * PI, 0.5 * PI),
            support: vec![false; manifold.points()],
            refinement_nodes: 0,
        })
    }

    pub fn p_tilde(&self) -> &HomogeneousTerm {
        &self.p_tilde
    }

    pub fn beta(&self) -> &DMatrix<C64> {
        &self.beta
    }

    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }

    pub fn manifold(&self) -> &ModelManifold {
        self.p_tilde.manifold()
    }

    pub fn fiber(&self) -> usize {
        self.beta.nrows()
    }

    pub fn jet_order(&self) -> usize {
        self.p_tilde.jet_order()
    }

    /// Grid points where the field may differ from β.
    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn is_constant_at(&self, point: usize) -> bool {
        !self.support[point]
    }

    /// Distance from the support to ∂X in grid cells.
    pub fn margin_cells(&self) -> f64 {
        self.cutoff.margin_cells(self.manifold())
    }

    /// Quadrature nodes used by the Riesz refinement (0 for a constant field).
    pub fn refinement_nodes(&self) -> usize {
        self.refinement_nodes
    }

    /// Largest `|p̃² − p̃|` entry over the samples.
    pub fn idempotency_defect(&self) -> f64 {
        let m = self.fiber();
        let s = m * m;
        let mut sq = vec![ZERO; s];
        self.p_tilde
            .samples()
            .chunks(s)
            .map(|c| {
                sq.fill(ZERO);
                fiber::mul_acc(c, c, fiber::ONE, &mut sq, m);
                sq.iter().zip(c).fold(0.0f64, |acc, (a, b)| acc.max((a - b).norm()))
            })
            .fold(0.0, f64::max)
    }
}

/// Where the spectrum of `β + bump·V` sits relative to the refinement circle
/// `|z − 1| = 1/2`. Eigenvalues must lie within 0.4 of 1, or at distance at
/// least 0.6 from 1 and left of `Re z = 0.4`, which keeps them 0.1 away from
/// both the circle and the line `Re z = 1/2`.
fn gap_ratio(a: &DMatrix<C64>) -> std::result::Result<f64, String> {
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| "eigenvalue iteration did not converge".to_string())?;
    let (_, t) = schur.unpack();
    let mut worst: f64 = 0.0;
    for i in 0..t.nrows() {
        let z = t[(i, i)];
        let dist = (z - 1.0).norm();
        if dist <= 0.4 {
            worst = worst.max(dist / 0.5);
        } else if dist >= 0.6 && z.re < 0.4 {
            worst = worst.max(0.5 / dist);
        } else {
            return Err(format!("eigenvalue {z} lies in the gap around Re z = 1/2"));
        }
    }
    Ok(worst)
}

/// Trapezoid nodes needed on `|λ − 1| = 1/2` for the jet-level Riesz integral
/// to reach rounding level, given the worst pole ratio.
fn refinement_node_count(ratio: f64, jet_order: usize) -> usize {
    let base = if ratio <= 1e-3 {
        8.0
    } else {
        (1e-17f64).ln() / ratio.ln()
    };
    let want = base.ceil() as usize + 4 * jet_order + 16;
    want.next_power_of_two().max(64)
}

/// Builds `p̃ = (1/2πi) ∮_{|λ−1|=1/2} (λ − A)⁻¹ dλ` with `A = β + bump·V`,
/// jet by jet, at every point where the bump is nonzero; `p̃ = β` with zero
/// jets elsewhere.
///
/// `perturbation` must be of degree 0; its jets are computed spectrally
/// (exact for band-limited data) when it carries fewer than `jet_order`.
pub fn make_idempotent_field(
    beta: &DMatrix<C64>,
    perturbation: &HomogeneousTerm,
    cutoff: &Cutoff,
    jet_order: usize,
) -> Result<IdempotentSymbolField> {
    let margin = cutoff.margin_cells(perturbation.manifold());
    if margin < MIN_MARGIN_CELLS - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "cutoff keeps only {margin:.3} grid cells from the boundary, at least {MIN_MARGIN_CELLS} required"
        )));
    }
    refine_field(beta, perturbation, cutoff, jet_order)
}

/// Same construction on the bump over `[lo, hi]` with no margin check. The
/// support may cross ∂X, so the result is not constant near the boundary;
/// it exists to exhibit what the margin buys.
pub fn make_counterexample_field(
    beta: &DMatrix<C64>,
    perturbation: &HomogeneousTerm,
    lo: f64,
    hi: f64,
    jet_order: usize,
) -> Result<IdempotentSymbolField> {
    if !(lo < hi) || hi - lo >= 2.0 * PI {
        return Err(Error::InvalidInput(format!("cutoff interval [{lo}, {hi}] is empty or wraps around")));
    }
    refine_field(beta, perturbation, &Cutoff::unchecked(lo, hi), jet_order)
}

fn refine_field(
    beta: &DMatrix<C64>,
    perturbation: &HomogeneousTerm,
    cutoff: &Cutoff,
    jet_order: usize,
) -> Result<IdempotentSymbolField> {
    fiber::check_idempotent(beta, 1e-12)?;
    let manifold = *perturbation.manifold();
    let m = beta.nrows();
    if perturbation.fiber() != m {
        return Err(Error::ShapeMismatch(format!(
            "perturbation has fiber {}, β is {m}x{m}",
            perturbation.fiber()
        )));
    }
    if perturbation.degree() != 0 {
        return Err(Error::InvalidInput("the perturbation must be of degree 0".into()));
    }
    let v = if perturbation.jet_order() >= jet_order {
        perturbation.truncate_jets(jet_order)
    } else {
        perturbation.with_spectral_jets(jet_order)
    };
    let dim = manifold.dim();
    let normal = dim - 1;
    let jets = jet::jet_len(dim, jet_order);
    let dirs = manifold.dirs();
    let s = m * m;
    let b = manifold.points() * dirs * s;
    let bump = cutoff.jets(&manifold, jet_order);
    let beta_flat = fiber::from_matrix(beta);
    let zero_v = v.max_abs_jets() == 0.0;
    let support: Vec<bool> = (0..manifold.points())
        .map(|p| !zero_v && bump[manifold.normal_index(p)][0] != 0.0)
        .collect();

    // A = β + bump·V at one point, as [dir][jet][m×m].
    let local_a = |p: usize| -> Vec<Vec<C64>> {
        let bj = &bump[manifold.normal_index(p)];
        (0..dirs)
            .map(|d| {
                let mut a = vec![ZERO; jets * s];
                a[..s].copy_from_slice(&beta_flat);
                for k in 0..jets {
                    let alpha = jet::multi_index(dim, k);
                    for (order, &coef) in bj.iter().enumerate().take(alpha[normal] + 1) {
                        if coef == 0.0 {
                            continue;
                        }
                        let mut src = alpha;
                        src[normal] -= order;
                        let si = jet::jet_index(dim, src);
                        let vs = &v.data()[si * b + (p * dirs + d) * s..si * b + (p * dirs + d + 1) * s];
                        for e in 0..s {
                            a[k * s + e] += vs[e] * coef;
                        }
                    }
                }
                a
            })
            .collect()
    };

    let points: Vec<usize> = (0..manifold.points()).filter(|&p| support[p]).collect();
    let ratios = points
        .par_iter()
        .map(|&p| {
            let a = local_a(p);
            let mut worst: f64 = 0.0;
            for (d, ad) in a.iter().enumerate() {
                let r = gap_ratio(&fiber::to_matrix(&ad[..s], m)).map_err(|detail| Error::SpectralGap {
                    location: format!("grid point {p} (x = {:?}), direction {d}", manifold.coords(p)),
                    detail,
                })?;
                worst = worst.max(r);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let ratio = ratios.into_iter().fold(0.0, f64::max);
    let nodes = if points.is_empty() {
        0
    } else {
        refinement_node_count(ratio, jet_order)
    };

    let table = jet::product_table(dim, jet_order);
    let contour: Vec<(C64, C64)> = (0..nodes)
        .map(|k| {
            let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
            (1.0 + 0.5 * e, 0.5 * e / nodes as f64)
        })
        .collect();
    let refined = points
        .par_iter()
        .map(|&p| {
            let a = local_a(p);
            let mut out = Vec::with_capacity(dirs);
            for ad in &a {
                let mut acc = vec![ZERO; jets * s];
                for &(lambda, w) in &contour {
                    // λ − A
                    let mut shifted: Vec<C64> = ad.iter().map(|z| -z).collect();
                    for i in 0..m {
                        shifted[i * m + i] += lambda;
                    }
                    let r = fiber::invert_jet(&shifted, m, &table).ok_or_else(|| {
                        Error::Singular(format!("in the Riesz refinement at grid point {p}"))
                    })?;
                    for (o, v) in acc.iter_mut().zip(&r) {
                        *o += w * v;
                    }
                }
                out.push(acc);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut data = vec![ZERO; jets * b];
    for p in 0..manifold.points() {
        for d in 0..dirs {
            data[(p * dirs + d) * s..(p * dirs + d + 1) * s].copy_from_slice(&beta_flat);
        }
    }
    for (&p, values) in points.iter().zip(&refined) {
        for (d, acc) in values.iter().enumerate() {
            for k in 0..jets {
                let off = k * b + (p * dirs + d) * s;
                data[off..off + s].copy_from_slice(&acc[k * s..(k + 1) * s]);
            }
        }
    }
    let p_tilde = HomogeneousTerm::from_parts(manifold, 0, m, jet_order, data)?;
    let field = IdempotentSymbolField {
        p_tilde,
        beta: beta.clone(),
        cutoff: *cutoff,
        support,
        refinement_nodes: nodes,
    };
    let defect = field.idempotency_defect();
    if defect > 1e-12 {
        return Err(Error::SpectralGap {
            location: "refined field".into(),
            detail: format!("p̃² − p̃ = {defect:e} after refinement"),
        });
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::ONE;

    fn beta() -> DMatrix<C64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ZERO]))
    }

    fn sin_offdiag(manifold: ModelManifold, eps: f64) -> HomogeneousTerm {
        HomogeneousTerm::from_fn(manifold, 0, 2, |x, _| {
            let v = C64::new(eps * x[manifold.dim() - 1].sin(), 0.0);
            DMatrix::from_row_slice(2, 2, &[ZERO, v, v, ZERO])
        })
        .unwrap()
    }

    #[test]
    fn bump_jets_match_finite_differences() {
        let m = ModelManifold::circle(64).unwrap();
        let c = Cutoff::with_margin(&m, 2.0).unwrap();
        let jets = c.jets(&m, 2);
        let (lo, hi) = c.interval();
        let f = |x: f64| {
            let t = (2.0 * x - lo - hi) / (hi - lo);
            if t.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - t * t)).exp()
            }
        };
        let hstep = 1e-4;
        for i in 4..28 {
            let x = i as f64 * m.spacing();
            let d1 = (f(x + hstep) - f(x - hstep)) / (2.0 * hstep);
            let d2 = (f(x + hstep) - 2.0 * f(x) + f(x - hstep)) / (hstep * hstep);
            assert!((jets[i][0] - f(x)).abs() < 1e-15);
            assert!((jets[i][1] - d1).abs() < 1e-6, "i = {i}");
            assert!((jets[i][2] - d2 / 2.0).abs() < 1e-4, "i = {i}");
        }
        assert!(jets[2].iter().all(|v| *v == 0.0));
        assert!(jets[40].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cutoff_margin_is_enforced() {
        let m = ModelManifold::circle(64).unwrap();
        assert!(Cutoff::with_margin(&m, 1.0).is_err());
        assert!(Cutoff::new(&m, 0.05, 2.0).is_err());
        assert!(Cutoff::new(&m, 0.3, 2.0).is_ok());
    }

    #[test]
    fn zero_perturbation_gives_beta() {
        let m = ModelManifold::circle(32).unwrap();
        let f = IdempotentSymbolField::constant(m, &beta(), 3).unwrap();
        assert_eq!(f.refinement_nodes(), 0);
        assert!(f.support().iter().all(|s| !s));
        for p in 0..32 {
            assert_eq!(f.p_tilde().sample_matrix(p, 1), beta());
        }
        assert!(f.p_tilde().jet_block([1, 0]).unwrap().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn refined_field_is_idempotent_and_local() {
        let m = ModelManifold::circle(64).unwrap();
        let c = Cutoff::with_margin(&m, 2.0).unwrap();
        let f = make_idempotent_field(&beta(), &sin_offdiag(m, 0.2), &c, 4).unwrap();
        assert!(f.idempotency_defect() <= 1e-12);
        for p in 0..64 {
            if !m.in_x(p) || m.normal_index(p) < 2 || m.normal_index(p) > 30 {
                assert!(f.is_constant_at(p));
                assert_eq!(f.p_tilde().sample_matrix(p, 0), beta());
            }
        }
        // Jets of an idempotent stay idempotent: (p̃·p̃)_k = p̃_k.
        let sq = f.p_tilde().mul(f.p_tilde()).unwrap();
        let diff = sq.sub(f.p_tilde()).unwrap();
        assert!(diff.max_abs_jets() < 1e-11);
    }

    #[test]
    fn gap_violation_is_reported() {
        let m = ModelManifold::circle(32).unwrap();
        let c = Cutoff::with_margin(&m, 2.0).unwrap();
        // Pushes an eigenvalue of diag(1, 0) to 1/2.
        let v = HomogeneousTerm::constant(m, 0, &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ZERO, C64::new(0.5, 0.0)])));
        assert!(matches!(
            make_idempotent_field(&beta(), &v, &c, 2),
            Err(Error::SpectralGap { .. })
        ));
    }
}
