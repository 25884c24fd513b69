//! Runs a scenario's checks and collects the numbers into a report.

use nalgebra::DMatrix;
use psdo_core::oracle::study::{order_agreement, truncation_report, TruncationReport};
use psdo_core::oracle::REFINEMENT_NODES;
use psdo_core::projection::{
    build_projection, lemma_a1_contour, make_counterexample_field, make_idempotent_field, verify_projection, Contour,
    Cutoff, IdempotentSymbolField, ProjectionDiagnostics,
};
use psdo_core::residue::{residue_commutator, residue_green, residue_interior, Region};
use psdo_core::{random, ClassicalSymbol, Error, ModelManifold, C64};
use rand::Rng;

use crate::report::{Report, Section};
use crate::scenario::{BetaKind, Check, LemmaA1Table, Scenario};

/// How a run ended when it did not produce a verdict.
#[derive(Debug)]
pub enum Refusal {
    /// Parameters the core rejected; reported like a config error.
    Invalid(String),
    /// A spectral gap, singular solve or quadrature failure.
    Numerical(String),
}

impl From<Error> for Refusal {
    fn from(e: Error) -> Self {
        match e {
            Error::SpectralGap { .. } | Error::Singular(_) | Error::Quadrature(_) | Error::InsufficientOrder { .. } => {
                Refusal::Numerical(e.to_string())
            }
            _ => Refusal::Invalid(e.to_string()),
        }
    }
}

pub const PRINCIPAL_TOL: f64 = 1e-10;
pub const IDEMPOTENCY_TOL: f64 = 1e-8;
pub const RESIDUE_TOL_N1: f64 = 1e-8;
pub const RESIDUE_TOL_N2: f64 = 1e-6;
pub const COMMUTATOR_TOL: f64 = 1e-9;
pub const METHOD_GAP_TOL: f64 = 1e-8;
pub const LEMMA_A1_TOL: f64 = 1e-12;
/// Errors below this are treated as rounding when checking convergence.
const LEMMA_A1_FLOOR: f64 = 1e-10;
pub const LEFTOVER_RATIO: f64 = 100.0;

pub struct Outcome {
    pub report: Report,
    pub passed: bool,
}

pub fn manifold(s: &Scenario) -> Result<ModelManifold, Refusal> {
    let m = s.manifold.as_ref().ok_or_else(|| Refusal::Invalid("no [manifold] table".into()))?;
    Ok(match m.dim {
        1 => ModelManifold::circle(m.n)?,
        _ => ModelManifold::torus(m.n, m.dirs.unwrap_or(32))?,
    })
}

/// `(β, perturbation)` drawn from the field's seed.
fn recipe(s: &Scenario, m: ModelManifold) -> Result<(DMatrix<C64>, psdo_core::HomogeneousTerm), Refusal> {
    let f = s.field.as_ref().ok_or_else(|| Refusal::Invalid("no [field] table".into()))?;
    let mut rng = random::rng(f.seed);
    let beta = match f.beta {
        BetaKind::Diagonal => DMatrix::from_fn(f.fiber, f.fiber, |i, j| {
            if i == j && i < f.rank {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        BetaKind::Oblique => random::idempotent(f.fiber, f.rank, &mut rng),
    };
    let v = random::perturbation(m, f.fiber, f.epsilon, f.bandwidth, f.theta_bandwidth, &mut rng)?;
    Ok((beta, v))
}

pub fn field(s: &Scenario) -> Result<IdempotentSymbolField, Refusal> {
    let m = manifold(s)?;
    let (beta, v) = recipe(s, m)?;
    let margin = s.field.as_ref().map_or(2.0, |f| f.margin);
    Ok(make_idempotent_field(&beta, &v, &Cutoff::with_margin(&m, margin)?, s.projection.order)?)
}

fn contour(s: &Scenario) -> Result<Contour, Refusal> {
    Ok(Contour::projection(s.projection.radius, s.projection.nodes)?)
}

pub fn projection(s: &Scenario, field: &IdempotentSymbolField) -> Result<ClassicalSymbol, Refusal> {
    Ok(build_projection(field, s.projection.order, &contour(s)?)?)
}

/// Runs every requested check in the fixed order.
pub fn run(s: &Scenario, config_text: &str, tol_scale: f64, timestamp: u64) -> Result<Outcome, Refusal> {
    let mut report = Report::new(&s.name, config_text, timestamp);
    let checks = s.ordered_checks();
    if checks.is_empty() {
        return Ok(Outcome { report, passed: true });
    }
    report.sections.push(describe(s, tol_scale));

    let built = if checks.iter().any(|c| c.needs_projection()) {
        let f = field(s)?;
        let pi = projection(s, &f)?;
        Some((f, pi))
    } else {
        None
    };
    let mut diagnostics: Option<ProjectionDiagnostics> = None;
    let mut passed = 0;
    for check in &checks {
        let mut sec = Section::new(format!("check.{}", check.name()));
        let ok = match check {
            Check::LemmaA1 => lemma_a1(s.lemma_a1.as_ref().expect("validated"), tol_scale, &mut sec)?,
            Check::Commutator => commutator(s, tol_scale, &mut sec)?,
            _ => {
                let (f, pi) = built.as_ref().expect("projection built for symbol checks");
                match check {
                    Check::Pi0 | Check::Idempotency => {
                        if diagnostics.is_none() {
                            diagnostics = Some(verify_projection(f, pi)?);
                        }
                        let d = diagnostics.as_ref().expect("just computed");
                        if *check == Check::Pi0 {
                            sec.float("principal_error", d.principal_error)
                                .float("principal_outside", d.principal_outside)
                                .float("tolerance", PRINCIPAL_TOL * tol_scale);
                            d.principal_error <= PRINCIPAL_TOL * tol_scale
                        } else {
                            for (j, e) in d.idempotency.iter().enumerate() {
                                sec.float(&format!("defect_j{j}"), *e);
                            }
                            sec.float("lower_order_outside", d.lower_order_outside)
                                .float("tolerance", IDEMPOTENCY_TOL * tol_scale);
                            d.idempotency_max() <= IDEMPOTENCY_TOL * tol_scale
                        }
                    }
                    Check::Residue => residue(pi, tol_scale, &mut sec)?,
                    Check::Oracle => oracle(f, pi, tol_scale, &mut sec)?,
                    Check::Truncation => truncation(s, pi, tol_scale, &mut sec)?,
                    Check::LemmaA1 | Check::Commutator => unreachable!(),
                }
            }
        };
        sec.flag("pass", ok);
        passed += ok as usize;
        report.sections.push(sec);
    }
    let all = passed == checks.len();
    let mut summary = Section::new("summary");
    summary
        .int("checks_run", checks.len() as i64)
        .int("checks_passed", passed as i64)
        .text("status", if all { "pass" } else { "fail" });
    report.sections.push(summary);
    Ok(Outcome { report, passed: all })
}

fn describe(s: &Scenario, tol_scale: f64) -> Section {
    let mut sec = Section::new("scenario");
    sec.text(
        "checks",
        s.ordered_checks().iter().map(|c| c.name()).collect::<Vec<_>>().join(","),
    );
    if let Some(m) = &s.manifold {
        sec.int("dim", m.dim as i64).int("n", m.n as i64);
        sec.int("dirs", if m.dim == 1 { 2 } else { m.dirs.unwrap_or(32) as i64 });
        sec.int("cutoff", (m.n / 2) as i64);
    }
    if let Some(f) = &s.field {
        sec.int("fiber", f.fiber as i64)
            .int("rank", f.rank as i64)
            .text("beta", format!("{:?}", f.beta).to_lowercase())
            .float("epsilon", f.epsilon)
            .int("bandwidth", f.bandwidth as i64)
            .int("theta_bandwidth", f.theta_bandwidth as i64)
            .float("margin", f.margin)
            .int("seed", f.seed as i64);
    }
    sec.int("order", s.projection.order as i64)
        .float("contour_radius", s.projection.radius)
        .int("contour_nodes", s.projection.nodes as i64)
        .float("tol_scale", tol_scale);
    sec
}

fn lemma_a1(table: &LemmaA1Table, tol_scale: f64, sec: &mut Section) -> Result<bool, Refusal> {
    let mut rng = random::rng(table.seed);
    let mats: Vec<DMatrix<C64>> = (0..table.count)
        .map(|i| {
            let size = 1 + i % table.max_size;
            let rank = rng.gen_range(0..=size);
            random::idempotent(size, rank, &mut rng)
        })
        .collect();
    let mut worst = vec![0.0f64; table.nodes.len()];
    for m in &mats {
        for &d in &table.distances {
            for (k, &nodes) in table.nodes.iter().enumerate() {
                let e = (lemma_a1_contour(m, d, d / 2.0, nodes)? - m).camax();
                worst[k] = worst[k].max(e);
            }
        }
    }
    for (k, &nodes) in table.nodes.iter().enumerate() {
        sec.float(&format!("error_m{nodes}"), worst[k]);
    }
    // Worst case over matrices of the error at the target node count.
    let target = table.nodes.iter().position(|&n| n == 64).unwrap_or(table.nodes.len() - 1);
    let tol = LEMMA_A1_TOL * tol_scale;
    let mut pairs = 0;
    let mut geometric = true;
    for w in 0..table.nodes.len().saturating_sub(1) {
        if table.nodes[w + 1] == 2 * table.nodes[w] && worst[w] > LEMMA_A1_FLOOR {
            pairs += 1;
            geometric &= worst[w + 1] * 10.0 <= worst[w];
        }
    }
    sec.int("matrices", mats.len() as i64)
        .int("target_nodes", table.nodes[target] as i64)
        .float("tolerance", tol)
        .int("doubling_pairs", pairs)
        .flag("geometric", geometric);
    Ok(worst[target] <= tol && pairs > 0 && geometric)
}

fn residue(pi: &ClassicalSymbol, tol_scale: f64, sec: &mut Section) -> Result<bool, Refusal> {
    let m = *pi.manifold();
    let r = residue_green(&m, Some(pi), &[], None)?;
    let full = residue_interior(pi, Region::Full);
    let same = r.interior.re.to_bits() == full.re.to_bits() && r.interior.im.to_bits() == full.im.to_bits();
    let tol = tol_scale * if m.dim() == 1 { RESIDUE_TOL_N1 } else { RESIDUE_TOL_N2 };
    sec.complex("interior", r.interior)
        .complex("boundary_green", r.boundary_green)
        .complex("boundary_psdo", r.boundary_psdo)
        .complex("total", r.total)
        .float("abs_total", r.total.norm())
        .complex("closed_manifold", full)
        .flag("x_matches_closed_manifold", same)
        .float("normalization_interior", r.normalization.interior)
        .float("normalization_boundary", r.normalization.boundary)
        .float("tolerance", tol);
    Ok(r.total.norm() <= tol && same)
}

fn commutator(s: &Scenario, tol_scale: f64, sec: &mut Section) -> Result<bool, Refusal> {
    let table = s.commutator.as_ref().expect("validated");
    let base = manifold(s)?;
    let m = match (base.dim(), table.n) {
        (_, None) => base,
        (1, Some(n)) => ModelManifold::circle(n)?,
        (_, Some(n)) => ModelManifold::torus(n, table.dirs.unwrap_or(base.dirs()))?,
    };
    let order = 1 + m.dim();
    let mut rng = random::rng(table.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..table.pairs {
        let p = random::classical_symbol(m, 1, order, table.fiber, 2, 1, &mut rng)?;
        let q = random::classical_symbol(m, 0, order, table.fiber, 2, 1, &mut rng)?;
        worst = worst.max(residue_commutator(&p, &q, order)?.norm());
    }
    let tol = COMMUTATOR_TOL * tol_scale;
    sec.int("pairs", table.pairs as i64)
        .int("n", m.n() as i64)
        .int("dirs", m.dirs() as i64)
        .int("order", order as i64)
        .float("max_abs_residue", worst)
        .float("tolerance", tol);
    Ok(worst <= tol)
}

fn oracle(f: &IdempotentSymbolField, pi: &ClassicalSymbol, tol_scale: f64, sec: &mut Section) -> Result<bool, Refusal> {
    let a = order_agreement(f, pi)?;
    for (j, e) in &a.errors {
        sec.float(&format!("error_j{j}"), *e);
    }
    let (lo, hi) = psdo_core::oracle::study::mid_band(f.manifold().n());
    sec.int("mid_band_lo", lo).int("mid_band_hi", hi);
    for (j, e) in &a.mid_band {
        sec.float(&format!("mid_band_error_j{j}"), *e);
    }
    let tol = METHOD_GAP_TOL * tol_scale;
    let monotone = a.monotone();
    sec.flag("monotone", monotone)
        .float("monotone_slack", psdo_core::oracle::study::MONOTONE_SLACK)
        .float("method_gap", a.method_gap)
        .float("projection_idempotency", a.idempotency)
        .float("relative_commutator", a.commutator)
        .float("tolerance", tol);
    Ok(monotone && a.method_gap <= tol)
}

fn push_truncation(sec: &mut Section, prefix: &str, r: &TruncationReport) {
    sec.float(&format!("{prefix}idempotency"), r.idempotency)
        .float(&format!("{prefix}truncated_norm"), r.truncated_norm)
        .float(&format!("{prefix}truncated_defect"), r.truncated_defect)
        .float(&format!("{prefix}bound"), r.bound)
        .float(&format!("{prefix}leftover"), r.leftover);
}

fn truncation(s: &Scenario, pi: &ClassicalSymbol, tol_scale: f64, sec: &mut Section) -> Result<bool, Refusal> {
    let good = truncation_report(pi, REFINEMENT_NODES)?;
    push_truncation(sec, "", &good);
    sec.float("tol_scale", tol_scale);
    let mut ok = good.truncated_defect <= good.bound * tol_scale;
    if let Some([lo, hi]) = s.truncation.counterexample {
        let m = *pi.manifold();
        let (beta, v) = recipe(s, m)?;
        let bad = make_counterexample_field(&beta, &v, lo, hi, s.projection.order)?;
        let bad_pi = projection(s, &bad)?;
        let bad = truncation_report(&bad_pi, REFINEMENT_NODES)?;
        push_truncation(sec, "counterexample_", &bad);
        let ratio = bad.leftover / good.leftover.max(f64::MIN_POSITIVE);
        sec.float("counterexample_lo", lo)
            .float("counterexample_hi", hi)
            .float("leftover_ratio", ratio)
            .float("leftover_ratio_required", LEFTOVER_RATIO);
        ok &= ratio >= LEFTOVER_RATIO;
    }
    Ok(ok)
}
