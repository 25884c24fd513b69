//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use psdo_core::oracle::study::{order_agreement, truncation_report, MONOTONE_SLACK};
use psdo_core::oracle::REFINEMENT_NODES;
use psdo_core::projection::{
    build_projection, lemma_a1_contour, make_counterexample_field, make_idempotent_field, verify_projection, Contour,
    Cutoff, IdempotentSymbolField,
};
use psdo_core::residue::{normal_trace, residue_commutator, residue_interior, Region, SingularGreenSymbolSample};
use psdo_core::{random, ClassicalSymbol, HomogeneousTerm, ModelManifold, C64};
use rand::Rng;

struct Verdicts {
    failed: usize,
}

impl Verdicts {
    fn record(&mut self, id: usize, ok: bool, detail: String) {
        println!("criterion {id:>2} {}  {detail}", if ok { "PASS" } else { "FAIL" });
        self.failed += !ok as usize;
    }
}

struct Sample {
    dim: usize,
    seed: u64,
    field: IdempotentSymbolField,
    pi: ClassicalSymbol,
}

fn rank_one(m: usize) -> DMatrix<C64> {
    let mut d = vec![C64::new(0.0, 0.0); m];
    d[0] = C64::new(1.0, 0.0);
    DMatrix::from_diagonal(&DVector::from_vec(d))
}

fn perturbation(m: ModelManifold, eps: f64, seed: u64) -> HomogeneousTerm {
    random::perturbation(m, 2, eps, 2, 1, &mut random::rng(seed)).unwrap()
}

fn sample(m: ModelManifold, eps: f64, order: usize, seed: u64) -> Sample {
    let v = perturbation(m, eps, seed);
    let field = make_idempotent_field(&rank_one(2), &v, &Cutoff::with_margin(&m, 2.0).unwrap(), order).unwrap();
    let pi = build_projection(&field, order, &Contour::projection(0.5, 32).unwrap()).unwrap();
    Sample {
        dim: m.dim(),
        seed,
        field,
        pi,
    }
}

fn lemma_a1(v: &mut Verdicts) {
    let start = Instant::now();
    let mut rng = random::rng(11);
    let mut at64: f64 = 0.0;
    let mut at128: f64 = 0.0;
    let mut worst_ratio = f64::INFINITY;
    let mut oblique = 0;
    for i in 0..10 {
        let size = 1 + i % 4;
        let rank = rng.gen_range(0..=size);
        let m = random::idempotent(size, rank, &mut rng);
        if (&m - m.adjoint()).camax() > 1e-8 {
            oblique += 1;
        }
        for d in [1.0, 3.0] {
            let err = |nodes| (lemma_a1_contour(&m, d, d / 2.0, nodes).unwrap() - &m).camax();
            at64 = at64.max(err(64));
            at128 = at128.max(err(128));
            // Before the rounding floor the trapezoid error falls by (1/4)^M.
            let (e8, e16) = (err(8), err(16));
            if e8 > 1e-10 {
                worst_ratio = worst_ratio.min(e8 / e16.max(f64::MIN_POSITIVE));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    v.record(
        1,
        at64 <= 1e-12 && worst_ratio >= 10.0 && secs < 1.0,
        format!(
            "max error M=64 {at64:.2e}, M=128 {at128:.2e}; min shrink M=8->16 {worst_ratio:.2e}; {oblique} non-self-adjoint; {secs:.3}s"
        ),
    );
}

fn principal(v: &mut Verdicts, samples: &[Sample], build_secs: f64) {
    let mut worst: f64 = 0.0;
    for s in samples {
        worst = worst.max(verify_projection(&s.field, &s.pi).unwrap().principal_error);
    }
    v.record(
        2,
        worst <= 1e-10 && build_secs < 30.0,
        format!("max |pi0 - p~| {worst:.2e} over {} fields; build {build_secs:.1}s", samples.len()),
    );
}

fn idempotency(v: &mut Verdicts, samples: &[Sample]) {
    let mut worst = [0.0f64; 2];
    for s in samples {
        let d = verify_projection(&s.field, &s.pi).unwrap();
        worst[s.dim - 1] = worst[s.dim - 1].max(d.idempotency_max());
    }
    v.record(
        3,
        worst.iter().all(|w| *w <= 1e-8),
        format!("max defect n=1 (J=4) {:.2e}, n=2 (J=3) {:.2e}", worst[0], worst[1]),
    );
}

fn residue(v: &mut Verdicts, samples: &[Sample]) {
    let mut worst = [0.0f64; 2];
    let mut bitwise = true;
    for s in samples {
        let x = residue_interior(&s.pi, Region::X);
        let full = residue_interior(&s.pi, Region::Full);
        bitwise &= x.re.to_bits() == full.re.to_bits() && x.im.to_bits() == full.im.to_bits();
        worst[s.dim - 1] = worst[s.dim - 1].max(full.norm());
    }
    v.record(
        4,
        worst[0] <= 1e-8 && worst[1] <= 1e-6 && bitwise,
        format!("max |res| n=1 {:.2e}, n=2 {:.2e}; X and closed sums bitwise equal: {bitwise}", worst[0], worst[1]),
    );
}

fn commutators(v: &mut Verdicts) {
    let mut worst = [0.0f64; 2];
    for (i, m) in [ModelManifold::circle(32).unwrap(), ModelManifold::torus(16, 16).unwrap()].into_iter().enumerate() {
        let order = 1 + m.dim();
        let mut rng = random::rng(500 + i as u64);
        for _ in 0..20 {
            let p = random::classical_symbol(m, 1, order, 2, 2, 1, &mut rng).unwrap();
            let q = random::classical_symbol(m, 0, order, 2, 2, 1, &mut rng).unwrap();
            worst[i] = worst[i].max(residue_commutator(&p, &q, order).unwrap().norm());
        }
    }
    v.record(
        5,
        worst.iter().all(|w| *w <= 1e-9),
        format!("max |res[p,q]| over 20 pairs: n=1 {:.2e}, n=2 {:.2e}", worst[0], worst[1]),
    );
}

fn multipliers(v: &mut Verdicts) {
    let mut exact = true;
    let mut count = 0;
    for (i, m) in [ModelManifold::circle(64).unwrap(), ModelManifold::torus(16, 16).unwrap()].into_iter().enumerate() {
        for seed in 0..5 {
            let mut rng = random::rng(700 + 10 * i as u64 + seed);
            let f = random::band_limited_term(m, 0, 2, 3, 0, &mut rng).unwrap();
            let p = ClassicalSymbol::from_term(f);
            for region in [Region::X, Region::Full] {
                exact &= residue_interior(&p, region) == C64::new(0.0, 0.0);
            }
            count += 1;
        }
    }
    v.record(6, exact, format!("{count} multiplication symbols, residue exactly zero: {exact}"));
}

fn oracle(v: &mut Verdicts, circle: ModelManifold) {
    let mut monotone = 0;
    let mut gap: f64 = 0.0;
    let mut lines = Vec::new();
    let mut band_lines = Vec::new();
    for seed in 0..5 {
        let s = sample(circle, 0.2, 2, seed);
        let a = order_agreement(&s.field, &s.pi).unwrap();
        monotone += a.monotone() as usize;
        gap = gap.max(a.method_gap);
        let errs: Vec<String> = a.errors.iter().map(|(_, e)| format!("{e:.3e}")).collect();
        lines.push(format!("seed {}: [{}]", s.seed, errs.join(", ")));
        let band: Vec<String> = a.mid_band.iter().map(|(_, e)| format!("{e:.3e}")).collect();
        band_lines.push(format!("seed {}: [{}]", s.seed, band.join(", ")));
    }
    let (lo, hi) = psdo_core::oracle::study::mid_band(circle.n());
    println!("  diagnostic: errors on {lo} <= |k| <= {hi}: {}", band_lines.join("; "));
    v.record(
        7,
        monotone == 5 && gap <= 1e-8,
        format!(
            "errors J=0,1,2 {}; monotone (slack {MONOTONE_SLACK}) in {monotone}/5; method gap {gap:.2e}",
            lines.join("; ")
        ),
    );
}

/// Margin fields against the boundary-crossing bump, both at J = 2.
fn truncation(v: &mut Verdicts, circle: ModelManifold) {
    let order = 2;
    let contour = Contour::projection(0.5, 32).unwrap();
    let mut worst_defect: f64 = 0.0;
    let mut good_leftover: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    let mut ok = true;
    for seed in 0..5 {
        let outcome = (|| -> psdo_core::Result<(f64, f64, f64, bool)> {
            let s = sample(circle, 0.2, order, seed);
            let good = truncation_report(&s.pi, REFINEMENT_NODES)?;
            let bad = make_counterexample_field(&rank_one(2), &perturbation(circle, 0.2, seed), -0.6, PI + 0.6, order)?;
            let bad = truncation_report(&build_projection(&bad, order, &contour)?, REFINEMENT_NODES)?;
            let ratio = bad.leftover / good.leftover.max(f64::MIN_POSITIVE);
            Ok((good.truncated_defect / good.bound, good.leftover, ratio, good.passes()))
        })();
        match outcome {
            Ok((defect, leftover, ratio, passes)) => {
                worst_defect = worst_defect.max(defect);
                good_leftover = good_leftover.max(leftover);
                min_ratio = min_ratio.min(ratio);
                ok &= passes;
            }
            Err(e) => {
                println!("  seed {seed} refused: {e}");
                ok = false;
            }
        }
    }
    v.record(
        8,
        ok && min_ratio >= 100.0,
        format!(
            "max defect/bound {worst_defect:.2e}; margin leftover {good_leftover:.2e}; min counterexample ratio {min_ratio:.2e}"
        ),
    );
}

fn normal_traces(v: &mut Verdicts) {
    let a = SingularGreenSymbolSample::scalar(0, 0, 1, 2.0, |t| C64::new(1.0 / (1.0 + t * t), 0.0)).unwrap();
    let b = SingularGreenSymbolSample::scalar(0, 0, 1, 3.0, |t| C64::new(t / (1.0 + t * t).powi(2), 0.0)).unwrap();
    let ea = (normal_trace(&a).unwrap().value[(0, 0)] - C64::new(0.5, 0.0)).norm();
    let eb = normal_trace(&b).unwrap().value[(0, 0)].norm();
    v.record(9, ea <= 1e-10 && eb <= 1e-10, format!("errors {ea:.2e} (value 1/2), {eb:.2e} (value 0)"));
}

fn report_body(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("vanishing_n1.report"))
        .unwrap_or_default()
        .lines()
        .filter(|l| !l.starts_with("timestamp = "))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism(v: &mut Verdicts, started: Instant) {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut codes = Vec::new();
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_psdo"))
            .args(["--out", d.path().to_str().unwrap(), "demo", "vanishing", "--dim", "1"])
            .output()
            .unwrap()
            .status;
        codes.push(status.code());
    }
    let same = report_body(dirs[0].path()) == report_body(dirs[1].path()) && !report_body(dirs[0].path()).is_empty();
    let secs = started.elapsed().as_secs_f64();
    v.record(
        10,
        same && codes.iter().all(|c| *c == Some(0)) && secs <= 120.0,
        format!("two CLI runs byte-identical (minus timestamp): {same}; exits {codes:?}; acceptance wall time {secs:.1}s"),
    );
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut v = Verdicts { failed: 0 };
    lemma_a1(&mut v);

    let circle = ModelManifold::circle(64).unwrap();
    let torus = ModelManifold::torus(32, 32).unwrap();
    let t = Instant::now();
    let mut samples: Vec<Sample> = (0..5).map(|seed| sample(circle, 0.2, 4, seed)).collect();
    samples.extend((0..3).map(|seed| sample(torus, 0.05, 3, seed)));
    let build = t.elapsed().as_secs_f64();

    principal(&mut v, &samples, build);
    idempotency(&mut v, &samples);
    residue(&mut v, &samples);
    commutators(&mut v);
    multipliers(&mut v);
    oracle(&mut v, circle);
    truncation(&mut v, circle);
    normal_traces(&mut v);
    determinism(&mut v, started);

    println!("acceptance: {} of 10 criteria passed", 10 - v.failed);
    if v.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
