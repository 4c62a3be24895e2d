use areolar_core::exterior::{wedge_vectors, KVector};
use areolar_core::lagrangian::{area_lagrangian, graph_area_density, graph_lift, slope_index, slope_sign};
use areolar_core::surfaces::{
    convergence_study, graph_action, lagrangian_action, multisymplectic_action, tangent_pvector,
    ActionSource, ParametricGrid, PolynomialMap, QuadratureConfig, QuadratureRule,
};

const BILINEAR_AREA: f64 = 1.280789275273404;

fn unit_cube(p: usize) -> Vec<(f64, f64)> {
    vec![(0.0, 1.0); p]
}

/// √det(JᵀJ) for J = [I; A] with A given row-by-component.
fn gram_area(a: &[Vec<f64>]) -> f64 {
    let p = a[0].len();
    let mut g = nalgebra::DMatrix::<f64>::identity(p, p);
    for row in a {
        for i in 0..p {
            for j in 0..p {
                g[(i, j)] += row[i] * row[j];
            }
        }
    }
    g.determinant().sqrt()
}

#[test]
fn signed_coefficient_law_for_linear_graphs() {
    let cases: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![2.0, 1.0], vec![1.0, -1.0]],
        vec![vec![0.5, -2.0, 3.0]],
    ];
    for slopes in cases {
        let p = slopes[0].len();
        let n = p + slopes.len();
        let surf = PolynomialMap::linear(&slopes).unwrap().into_graph(unit_cube(p), 3).unwrap();
        let grid = surf.grid().unwrap();
        let cell = vec![1; p];
        let (y, _) = tangent_pvector(&grid, &cell).unwrap();

        let columns: Vec<Vec<f64>> = (0..p)
            .map(|a| {
                let mut u = vec![0.0; n];
                u[a] = 1.0;
                for (j, row) in slopes.iter().enumerate() {
                    u[p + j] = row[a];
                }
                u
            })
            .collect();
        let brute = wedge_vectors(&columns).unwrap();
        for (a, b) in y.coords().iter().zip(brute.coords()) {
            assert!((a - b).abs() < 1e-8);
        }
        for i in 1..=p {
            for j in 1..=n - p {
                let index = slope_index(n, p, i, j).unwrap();
                let expected = slope_sign(p, i) * slopes[j - 1][i - 1];
                assert!((y.get(&index) - expected).abs() < 1e-8, "({i},{j}) n={n} p={p}");
            }
        }
    }
}

#[test]
fn codim_two_plane_matches_gram_area() {
    for slopes in [vec![vec![2.0, 1.0], vec![1.0, 0.0]], vec![vec![2.0, 1.0], vec![1.0, -1.0]]] {
        let expected = gram_area(&slopes);
        let surf = PolynomialMap::linear(&slopes).unwrap().into_graph(unit_cube(2), 8).unwrap();
        let quad = QuadratureConfig::default();
        let area = area_lagrangian(4, 2).unwrap();
        let lift = graph_lift(graph_area_density(4, 2).unwrap()).unwrap();
        let grid = surf.grid().unwrap();
        assert!((lagrangian_action(&area, &grid, &quad).unwrap() - expected).abs() < 1e-8);
        assert!((lagrangian_action(&lift, &grid, &quad).unwrap() - expected).abs() < 1e-8);
        assert!((multisymplectic_action(&area, &grid, &quad).unwrap() - expected).abs() < 1e-8);
        assert!((graph_action(&graph_area_density(4, 2).unwrap(), &surf, &quad).unwrap() - expected).abs() < 1e-8);
    }
    assert!((gram_area(&[vec![2.0, 1.0], vec![1.0, 0.0]]) - 8f64.sqrt()).abs() < 1e-12);
}

#[test]
fn bilinear_triple_equality() {
    let area = area_lagrangian(3, 2).unwrap();
    let density = graph_area_density(3, 2).unwrap();
    let lift = graph_lift(graph_area_density(3, 2).unwrap()).unwrap();
    let surf = PolynomialMap::multilinear(2, 1).unwrap().into_graph(unit_cube(2), 256).unwrap();
    let grid = surf.grid().unwrap();
    let quad = QuadratureConfig::default();
    let by_area = lagrangian_action(&area, &grid, &quad).unwrap();
    let by_lift = lagrangian_action(&lift, &grid, &quad).unwrap();
    let by_graph = graph_action(&density, &surf, &quad).unwrap();
    let by_theta = multisymplectic_action(&lift, &grid, &quad).unwrap();
    assert!((by_area - BILINEAR_AREA).abs() < 1e-6);
    assert!((by_graph - by_lift).abs() < 1e-6);
    assert!((by_theta - by_lift).abs() <= 1e-10 * by_lift.abs());
    assert!((by_area - by_lift).abs() < 1e-12);
}

#[test]
fn bilinear_convergence_is_second_order() {
    let area = area_lagrangian(3, 2).unwrap();
    let surf = PolynomialMap::multilinear(2, 1).unwrap().into_graph(unit_cube(2), 2).unwrap();
    let table = convergence_study(
        ActionSource::Lagrangian(&area),
        &surf,
        &QuadratureConfig::default(),
        &[16, 32, 64, 128],
        Some(BILINEAR_AREA),
    )
    .unwrap();
    assert!(table.monotone);
    for row in &table.rows[1..] {
        let order = row.observed_order.unwrap();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }
    let richardson = convergence_study(
        ActionSource::Graph(&graph_area_density(3, 2).unwrap()),
        &surf,
        &QuadratureConfig::default(),
        &[16, 32, 64, 128],
        None,
    )
    .unwrap();
    assert_eq!(richardson.reference_kind, "richardson");
    assert!((richardson.reference - BILINEAR_AREA).abs() < 1e-7);
}

#[test]
fn gauss_rule_agrees_with_midpoint() {
    let area = area_lagrangian(3, 2).unwrap();
    let surf = PolynomialMap::multilinear(2, 1).unwrap().into_graph(unit_cube(2), 128).unwrap();
    let grid = surf.grid().unwrap();
    let gauss = QuadratureConfig { rule: QuadratureRule::Gauss2 };
    assert!((lagrangian_action(&area, &grid, &gauss).unwrap() - BILINEAR_AREA).abs() < 1e-5);
}

#[test]
fn action_is_invariant_under_affine_reparametrization() {
    let area = area_lagrangian(3, 2).unwrap();
    let quad = QuadratureConfig::default();
    let embed = |u: &[f64]| vec![u[0], u[1], u[0] * u[1] + 0.5 * u[0] * u[0]];
    let base = ParametricGrid::from_map(unit_cube(2), 32, 3, embed).unwrap();
    let reference = lagrangian_action(&area, &base, &quad).unwrap();

    // s ∈ [−1, 3] × [2, 2.5] mapped affinely onto [0, 1]²
    let domain = vec![(-1.0, 3.0), (2.0, 2.5)];
    let reparam = ParametricGrid::from_map(domain, 32, 3, |s| embed(&[(s[0] + 1.0) / 4.0, (s[1] - 2.0) * 2.0])).unwrap();
    let value = lagrangian_action(&area, &reparam, &quad).unwrap();
    assert!((value - reference).abs() < 1e-9, "{value} vs {reference}");
}

#[test]
fn grid_is_deterministic_across_thread_counts() {
    let area = area_lagrangian(3, 2).unwrap();
    let surf = PolynomialMap::multilinear(2, 1).unwrap().into_graph(unit_cube(2), 64).unwrap();
    let grid = surf.grid().unwrap();
    let quad = QuadratureConfig::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| lagrangian_action(&area, &grid, &quad).unwrap());
    let parallel = lagrangian_action(&area, &grid, &quad).unwrap();
    assert_eq!(single.to_bits(), parallel.to_bits());
}

#[test]
fn tangent_pvector_is_unchanged_by_representation() {
    let surf = PolynomialMap::flat(3, 1).unwrap().into_graph(unit_cube(3), 2).unwrap();
    let (y, _) = tangent_pvector(&surf.grid().unwrap(), &[0, 1, 1]).unwrap();
    assert_eq!(y, KVector::from_entries(4, 3, &[(&[1, 2, 3], 1.0)]).unwrap());
}
