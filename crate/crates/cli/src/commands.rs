//! The `verify`, `action` and `image` commands. Each returns a report; only
//! configuration problems are errors.

use areolar_core::exterior::{KVector, MultiIndex};
use areolar_core::lagrangian::{euler_residual, homogeneity_residual, HomogeneousLagrangian};
use areolar_core::legendre::{
    convexity_certificate, hamiltonian, inverse_legendre, legendre_map, rank_lemma_check, sample_image,
    ConvexityCertificate, LegendreImagePoint, LevelSetMode, LevelSetSampler, DEFAULT_MAX_ITER,
    FAILED_CHECK_VIOLATION,
};
use areolar_core::multisymplectic::{
    closedness_residual, exterior_derivative_fd, nondegeneracy_check, omega, pullback_residual, theta,
    AlternatingForm, TotalSpaceChart, TotalVector,
};
use areolar_core::numerics::{gaussian_vector, sample_rng};
use areolar_core::surfaces::{
    convergence_study, graph_action, lagrangian_action, multisymplectic_action, ActionSource, QuadratureConfig,
};
use rand::Rng;
use serde_json::{json, Value};

use crate::config::{LagrangianName, RunConfig};
use crate::report::Report;
use crate::CliError;

/// Stream families, so that each check draws from its own seeded streams.
mod stream {
    pub const EULER: u64 = 1;
    pub const RANK: u64 = 2;
    pub const ROUND_TRIP: u64 = 3;
    pub const PULLBACK: u64 = 4;
    pub const FORMS: u64 = 5;
    pub const CONVEXITY: u64 = 6;
    pub const IMAGE: u64 = 7;

    pub fn index(family: u64, i: usize) -> u64 {
        family << 32 | i as u64
    }

    /// Seed for routines that enumerate their own streams.
    pub fn seed(seed: u64, family: u64) -> u64 {
        seed.wrapping_add(family << 48)
    }
}

const INVERSE_TOL: f64 = 1e-10;

/// Distance of an image point p from the known dual hypersurface.
type LevelResidual = Box<dyn Fn(&[f64]) -> f64>;

fn sample_points(
    lagrangian: &dyn HomogeneousLagrangian,
    x: &[f64],
    seed: u64,
    family: u64,
    count: usize,
) -> Result<Vec<KVector>, String> {
    let sampler = LevelSetSampler::new(lagrangian, x, LevelSetMode::Sphere);
    (0..count)
        .map(|i| {
            let mut rng = sample_rng(seed, stream::index(family, i));
            let y = sampler.sample(&mut rng).map_err(|e| e.to_string())?;
            // spread the magnitudes over two decades
            let scale = 10f64.powf(rng.random_range(-1.0..1.0));
            Ok(y.scaled(scale))
        })
        .collect()
}

fn max_over<T, F>(items: &[T], mut f: F) -> Result<f64, String>
where
    F: FnMut(&T) -> Result<f64, String>,
{
    items.iter().try_fold(0.0f64, |acc, item| Ok(acc.max(f(item)?)))
}

pub fn verify(config: &RunConfig) -> Result<Report, CliError> {
    let lagrangian = config.build_lagrangian()?;
    let l = lagrangian.as_ref();
    let x = config.base_point();
    let s = &config.sampling;
    let t = &config.tolerances;
    let mut report = Report::new("verify", config);
    let samples = sample_points(l, &x, s.seed, stream::EULER, s.samples);

    report.run("euler_formula", "Euler identity L(x, y) = Σ y^I ∂L/∂y^I", t.euler, || {
        max_over(samples.as_ref().map_err(Clone::clone)?, |y| {
            let value = l.eval(&x, y).map_err(|e| e.to_string())?;
            let r = euler_residual(l, &x, y).map_err(|e| e.to_string())?;
            Ok(r / value.abs().max(1.0))
        })
    });

    report.run("homogeneity", "positive homogeneity L(x, λy) = λ L(x, y)", t.homogeneity, || {
        max_over(samples.as_ref().map_err(Clone::clone)?, |y| {
            homogeneity_residual(l, &x, y, &[0.1, 0.5, 2.0, 10.0]).map_err(|e| e.to_string())
        })
    });

    report.run(
        "vanishing_hamiltonian",
        "H(x, ∂L/∂y, y) = ⟨∂L/∂y, y⟩ − L vanishes identically",
        t.hamiltonian,
        || {
            max_over(samples.as_ref().map_err(Clone::clone)?, |y| {
                let value = l.eval(&x, y).map_err(|e| e.to_string())?;
                let p = l.grad(&x, y).map_err(|e| e.to_string())?;
                let h = hamiltonian(l, &x, &p, y).map_err(|e| e.to_string())?;
                Ok(h.abs() / value.abs().max(1.0))
            })
        },
    );

    report.run_with_detail("rank_lemma", "rank Hess(L²) = 1 + rank Hess(L)", 0.0, || {
        let ys = sample_points(l, &x, s.seed, stream::RANK, s.rank_samples)?;
        let mut failures = 0usize;
        let mut ranks = std::collections::BTreeSet::new();
        for y in &ys {
            let r = rank_lemma_check(l, &x, y, t.rank_threshold).map_err(|e| e.to_string())?;
            ranks.insert((r.rank_l2, r.rank_l));
            failures += usize::from(!r.holds);
        }
        let seen: Vec<String> = ranks.iter().map(|(a, b)| format!("{a} = 1 + {b}")).collect();
        Ok((
            failures as f64,
            Some(format!("{failures} of {} samples violate; ranks seen: {}", ys.len(), seen.join(", "))),
        ))
    });

    let certificate = convexity_certificate(
        l,
        &x,
        s.convexity_pairs,
        s.convexity_steps,
        stream::seed(s.seed, stream::CONVEXITY),
        t.convexity,
    );
    record_convexity(&mut report, &certificate);

    report.run(
        "legendre_round_trip",
        "the Legendre map is injective on oriented p-planes",
        t.round_trip,
        || {
            let ys = sample_points(l, &x, s.seed, stream::ROUND_TRIP, s.round_trip_samples)?;
            max_over(&ys, |y| {
                let image = legendre_map(l, &x, y).map_err(|e| e.to_string())?;
                let class = inverse_legendre(l, &x, &image.p, INVERSE_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
                let a = class.unit();
                let b = image.source_class.unit();
                let distance = a.coords().iter().zip(b.coords()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
                Ok(distance)
            })
        },
    );

    report.run("pullback_identity", "(∂L/∂y)*θ equals the areolar form ℓ", t.pullback, || {
        let ys = samples.as_ref().map_err(Clone::clone)?;
        let (n, p) = (l.dim(), l.degree());
        let mut worst: f64 = 0.0;
        for (i, y) in ys.iter().enumerate() {
            let mut rng = sample_rng(s.seed, stream::index(stream::PULLBACK, i));
            let tuple: Vec<Vec<f64>> = (0..p).map(|_| gaussian_vector(&mut rng, n)).collect();
            let r = pullback_residual(l, &x, y, &[tuple]).map_err(|e| e.to_string())?;
            let scale = l.eval(&x, y).map_err(|e| e.to_string())?.abs().max(1.0);
            worst = worst.max(r / scale);
        }
        Ok(worst)
    });

    let chart = TotalSpaceChart::new(l.dim(), l.degree()).map_err(CliError::from)?;
    let big_omega = omega(&chart);
    let small_theta = theta(&chart);
    let form_samples: Vec<(Vec<f64>, Vec<TotalVector>)> = (0..s.closedness_points)
        .map(|i| {
            let mut rng = sample_rng(s.seed, stream::index(stream::FORMS, i));
            let point = gaussian_vector(&mut rng, chart.dim_total());
            let vectors = (0..big_omega.degree() + 1)
                .map(|_| TotalVector::new(gaussian_vector(&mut rng, chart.dim_total())).expect("finite"))
                .collect();
            (point, vectors)
        })
        .collect();

    report.run_with_detail("omega_nondegenerate", "Ω = dθ has trivial kernel", 0.0, || {
        let point = form_samples.first().map(|f| f.0.clone()).unwrap_or_else(|| vec![0.0; chart.dim_total()]);
        let (_, rank) = nondegeneracy_check(&big_omega, &point).map_err(|e| e.to_string())?;
        let deficit = (chart.dim_total() - rank) as f64;
        Ok((deficit, Some(format!("contraction rank {rank} of {}", chart.dim_total()))))
    });

    report.run("omega_closed", "dΩ = 0", t.closedness, || {
        max_over(&form_samples, |(point, vectors)| {
            closedness_residual(&big_omega, point, vectors, t.closedness_step).map_err(|e| e.to_string())
        })
    });

    report.run("theta_derivative", "dθ = Ω", t.closedness, || {
        max_over(&form_samples, |(point, vectors)| {
            let args = &vectors[..small_theta.degree() + 1];
            let d = exterior_derivative_fd(&small_theta, point, args, t.closedness_step).map_err(|e| e.to_string())?;
            let o = big_omega.evaluate(point, args).map_err(|e| e.to_string())?;
            Ok((d - o).abs())
        })
    });

    Ok(report)
}

pub fn action(config: &RunConfig) -> Result<Report, CliError> {
    let spec = config
        .surface
        .as_ref()
        .ok_or_else(|| CliError::Config("the action command needs a `surface` section".into()))?;
    let lagrangian = config.build_lagrangian()?;
    let l = lagrangian.as_ref();
    let density = config.build_density()?;
    let quad = QuadratureConfig { rule: spec.quadrature };
    let t = &config.tolerances;
    let mut report = Report::new("action", config);

    let mut rows = Vec::new();
    let mut finest: Option<(usize, f64)> = None;
    for &res in &spec.resolutions {
        let surface = config.build_surface(spec, res)?;
        let grid = match surface.grid() {
            Ok(g) => g,
            Err(e) => {
                report.run(&format!("lagrangian_action@{res}"), "action integral over the surface", 0.0, || {
                    Err(e.to_string())
                });
                continue;
            }
        };
        let lag = lagrangian_action(l, &grid, &quad);
        let ms = multisymplectic_action(l, &grid, &quad);
        let gr = density.as_ref().map(|d| graph_action(d.as_ref(), &surface, &quad));
        rows.push(json!({
            "resolution": res,
            "lagrangian": lag.as_ref().ok(),
            "multisymplectic": ms.as_ref().ok(),
            "graph": gr.as_ref().and_then(|g| g.as_ref().ok()),
        }));
        let lag = match lag {
            Ok(v) => v,
            Err(e) => {
                report.run(&format!("lagrangian_action@{res}"), "action integral over the surface", 0.0, || {
                    Err(e.to_string())
                });
                continue;
            }
        };
        report.run(
            &format!("multisymplectic_action@{res}"),
            "∫ L over the surface equals ∫ θ over its Legendre image",
            t.multisymplectic_action,
            || {
                let ms = ms.map_err(|e| e.to_string())?;
                Ok((ms - lag).abs() / lag.abs().max(f64::MIN_POSITIVE))
            },
        );
        if finest.is_none_or(|(r, _)| res > r) {
            finest = Some((res, lag));
        }
        if let Some(g) = gr {
            if res == spec.resolutions.iter().copied().max().unwrap_or(res) {
                report.run(
                    &format!("graph_action@{res}"),
                    "∫ F(x, f, ∇f) dx equals the action of the graph",
                    t.graph_action,
                    || g.map(|g| (g - lag).abs()).map_err(|e| e.to_string()),
                );
            }
        }
    }
    report.set_result("actions", Value::Array(rows));

    if let (Some(reference), Some((res, value))) = (spec.reference, finest) {
        report.run(
            &format!("reference_action@{res}"),
            "action equals its closed-form value",
            t.reference_action,
            || Ok((value - reference).abs()),
        );
    }

    let mut distinct = spec.resolutions.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() >= 3 {
        let surface = config.build_surface(spec, distinct[0])?;
        let study = convergence_study(ActionSource::Lagrangian(l), &surface, &quad, &distinct, spec.reference);
        match &study {
            Ok(table) => report.set_result("convergence", serde_json::to_value(table).expect("serializable")),
            Err(e) => report.set_result("convergence", json!({ "error": e.to_string() })),
        }
        if let Some(expected) = spec.expected_order {
            report.run_with_detail("convergence_order", "quadrature error is O(h^k)", t.order, || {
                let table = study.map_err(|e| e.to_string())?;
                let orders: Vec<f64> = table.rows.iter().filter_map(|r| r.observed_order).collect();
                if orders.is_empty() {
                    return Err("errors are at rounding level; no order observable".into());
                }
                let worst = orders.iter().map(|o| (o - expected).abs()).fold(0.0, f64::max);
                let listed: Vec<String> = orders.iter().map(|o| format!("{o:.4}")).collect();
                let note = if table.monotone { "" } else { "; errors not monotone" };
                Ok((worst, Some(format!("observed orders {}{note}", listed.join(", ")))))
            });
        }
    }
    Ok(report)
}

fn record_convexity(report: &mut Report, certificate: &ConvexityCertificate) {
    report.run_with_detail(
        "convexity",
        "the Legendre image is a convex hypersurface",
        certificate.tolerance,
        || {
            // unresolved segment points count as violations in their own right
            let residual = if certificate.num_inversion_failures > 0 {
                certificate.worst_violation.max(FAILED_CHECK_VIOLATION)
            } else {
                certificate.worst_violation
            };
            let detail = format!(
                "{} segment checks, {} unresolved",
                certificate.num_segment_checks, certificate.num_inversion_failures
            );
            Ok((residual, Some(detail)))
        },
    );
    report.set_result("convexity_certificate", serde_json::to_value(certificate).expect("serializable"));
}

/// CSV header: base coordinates, then p_I in lexicographic index order.
pub fn image_header(n: usize, p: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("x{i}"))
        .chain(MultiIndex::all(n, p).iter().map(|m| format!("p{m}")))
        .collect()
}

pub fn image(config: &RunConfig) -> Result<(Report, Vec<LegendreImagePoint>), CliError> {
    let lagrangian = config.build_lagrangian()?;
    let l = lagrangian.as_ref();
    let x = config.base_point();
    let s = &config.sampling;
    let t = &config.tolerances;
    let mut report = Report::new("image", config);

    let points = match sample_image(l, &x, s.image_count, stream::seed(s.seed, stream::IMAGE)) {
        Ok(points) => points,
        Err(e) => {
            report.run("image_sampling", "sampling of the Legendre image", 0.0, || Err(e.to_string()));
            return Ok((report, Vec::new()));
        }
    };
    report.set_result("image_points", json!(points.len()));

    let level: Option<(&str, LevelResidual)> = match config.lagrangian.name {
        LagrangianName::Area => Some((
            "the area Legendre image is the unit sphere",
            Box::new(|p: &[f64]| (p.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs()),
        )),
        LagrangianName::Ellipsoid => {
            let weights = config.lagrangian.params.weights.clone().unwrap_or_default();
            Some((
                "the ellipsoid Legendre image is the dual quadric Σ p_I²/w_I = 1",
                Box::new(move |p: &[f64]| {
                    (p.iter().zip(&weights).map(|(c, w)| c * c / w).sum::<f64>() - 1.0).abs()
                }),
            ))
        }
        _ => None,
    };
    if let Some((anchor, residual)) = level {
        report.run("image_level_set", anchor, t.image_level, || {
            Ok(points.iter().map(|pt| residual(pt.p.coords())).fold(0.0, f64::max))
        });
    }

    let certificate = convexity_certificate(
        l,
        &x,
        s.convexity_pairs,
        s.convexity_steps,
        stream::seed(s.seed, stream::CONVEXITY),
        t.convexity,
    );
    record_convexity(&mut report, &certificate);
    Ok((report, points))
}
