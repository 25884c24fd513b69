use criterion::{black_box, criterion_group, criterion_main, Criterion};
use psdo_bench::{field, pair, projection};
use psdo_core::oracle::study::truncation_report;
use psdo_core::oracle::{quantize, sectorial_projection_matrix, ProjectionMethod, REFINEMENT_NODES};
use psdo_core::projection::auxiliary_symbol;
use psdo_core::residue::{residue_interior, Region};
use psdo_core::ModelManifold;

fn symbols(c: &mut Criterion) {
    let circle = ModelManifold::circle(64).unwrap();
    let torus = ModelManifold::torus(16, 16).unwrap();
    let mut g = c.benchmark_group("compose");
    g.sample_size(10);
    for (name, m) in [("circle64", circle), ("torus16", torus)] {
        let (p, q) = pair(m, 3, 1);
        g.bench_function(name, |b| b.iter(|| black_box(p.compose(&q, 3).unwrap())));
    }
    g.finish();
}

fn projections(c: &mut Criterion) {
    let circle = ModelManifold::circle(64).unwrap();
    let mut g = c.benchmark_group("projection");
    g.sample_size(10);
    g.bench_function("field_circle64_j4", |b| b.iter(|| black_box(field(circle, 0.2, 4, 3))));
    let f = field(circle, 0.2, 4, 3);
    g.bench_function("build_circle64_j4", |b| b.iter(|| black_box(projection(&f, 4))));
    let pi = projection(&f, 4);
    g.bench_function("residue_circle64", |b| b.iter(|| black_box(residue_interior(&pi, Region::Full))));
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let circle = ModelManifold::circle(64).unwrap();
    let f = field(circle, 0.2, 2, 3);
    let pi = projection(&f, 2);
    let aux = quantize(&auxiliary_symbol(&f), 32).unwrap();
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("quantize_circle64", |b| b.iter(|| black_box(quantize(&pi, 32).unwrap())));
    for method in [ProjectionMethod::EigenSplit, ProjectionMethod::Contour] {
        g.bench_function(format!("sectorial_{method:?}"), |b| {
            b.iter(|| black_box(sectorial_projection_matrix(&aux, method).unwrap()))
        });
    }
    g.bench_function("truncation_report", |b| b.iter(|| black_box(truncation_report(&pi, REFINEMENT_NODES).unwrap())));
    g.finish();
}

criterion_group!(benches, symbols, projections, oracle);
criterion_main!(benches);
