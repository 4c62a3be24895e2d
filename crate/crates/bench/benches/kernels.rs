use std::hint::black_box;

use areolar_core::exterior::{wedge_vectors, KVector};
use areolar_core::lagrangian::{area_lagrangian, graph_area_density, graph_lift, HomogeneousLagrangian};
use areolar_core::legendre::{inverse_legendre, legendre_map, sample_image, DEFAULT_MAX_ITER};
use areolar_core::surfaces::{lagrangian_action, multisymplectic_action, PolynomialMap, QuadratureConfig};
use criterion::{criterion_group, criterion_main, Criterion};

fn exterior(c: &mut Criterion) {
    let three = vec![vec![1.0, 0.5, -0.2, 0.3, 2.0], vec![0.0, 1.0, 0.7, -1.1, 0.4], vec![0.2, -0.3, 1.0, 0.9, 0.1]];
    c.bench_function("wedge_vectors n=5 p=3", |b| b.iter(|| wedge_vectors(black_box(&three)).unwrap()));
}

fn lagrangians(c: &mut Criterion) {
    let area = area_lagrangian(4, 2).unwrap();
    let lift = graph_lift(graph_area_density(4, 2).unwrap()).unwrap();
    let y = KVector::from_coords(4, 2, vec![1.0, 0.3, -0.7, 0.2, 0.5, -0.1]).unwrap();
    let x = [0.0; 4];
    c.bench_function("area gradient n=4 p=2", |b| b.iter(|| area.grad(&x, black_box(&y)).unwrap()));
    c.bench_function("graph lift hessian n=4 p=2", |b| b.iter(|| lift.hess(&x, black_box(&y)).unwrap()));
}

fn legendre(c: &mut Criterion) {
    let area = area_lagrangian(3, 2).unwrap();
    let x = [0.0; 3];
    let y = KVector::from_triple(1.0, -2.0, -3.0);
    let p = legendre_map(&area, &x, &y).unwrap().p;
    c.bench_function("inverse_legendre area n=3", |b| {
        b.iter(|| inverse_legendre(&area, &x, black_box(&p), 1e-10, DEFAULT_MAX_ITER).unwrap())
    });
    c.bench_function("sample_image 500 points", |b| b.iter(|| sample_image(&area, &x, 500, black_box(7)).unwrap()));
}

fn actions(c: &mut Criterion) {
    let area = area_lagrangian(3, 2).unwrap();
    let grid = PolynomialMap::multilinear(2, 1)
        .unwrap()
        .into_graph(vec![(0.0, 1.0); 2], 64)
        .unwrap()
        .grid()
        .unwrap();
    let quad = QuadratureConfig::default();
    let mut group = c.benchmark_group("bilinear graph 64x64");
    group.bench_function("lagrangian_action", |b| b.iter(|| lagrangian_action(&area, black_box(&grid), &quad).unwrap()));
    group.bench_function("multisymplectic_action", |b| {
        b.iter(|| multisymplectic_action(&area, black_box(&grid), &quad).unwrap())
    });
    group.finish();
}

criterion_group!(benches, exterior, lagrangians, legendre, actions);
criterion_main!(benches);
