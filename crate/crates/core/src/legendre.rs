//! The fiberwise Legendre map y ↦ ∂L/∂y(x, y) and its image 𝒩ₓ.
//!
//! Because ∂L/∂y is homogeneous of degree zero, the map factors through the
//! unit level set Sₓ = {L = 1}; inversion and sampling are both posed there.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{pair, GrassmannPoint, KCovector, KVector};
use crate::lagrangian::{hessian_of_square, HomogeneousLagrangian};
use crate::numerics::{dot, gaussian_vector, norm, numerical_rank, sample_rng, singular_values};

pub const DEFAULT_INVERSE_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-8;

/// A point (x, p) of the Legendre image together with the class it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreImagePoint {
    pub x: Vec<f64>,
    pub p: KCovector,
    pub source_class: GrassmannPoint,
}

pub fn legendre_map<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    y: &KVector,
) -> Result<LegendreImagePoint> {
    let p = lagrangian.grad(x, y)?;
    Ok(LegendreImagePoint {
        x: x.to_vec(),
        p,
        source_class: GrassmannPoint::from_ray(y.clone())?,
    })
}

/// H = ⟨p, y⟩ − L(x, y).
pub fn hamiltonian<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    p: &KCovector,
    y: &KVector,
) -> Result<f64> {
    let value = lagrangian.eval(x, y)?;
    Ok(pair(p, y)? - value)
}

/// Rescales `y` onto Sₓ = {L = 1}.
pub fn normalize_to_level_set<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    y: &KVector,
) -> Result<KVector> {
    let value = lagrangian.eval(x, y)?;
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "cannot rescale onto the unit level set: L = {value}"
        )));
    }
    Ok(y.scaled(1.0 / value))
}

struct SolveOutcome {
    y: KVector,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// Damped Gauss–Newton (Levenberg–Marquardt) on Sₓ for a residual r(y) with
/// Jacobian J(y). Each accepted step is renormalized onto Sₓ.
fn solve_on_level_set<L, F>(
    lagrangian: &L,
    x: &[f64],
    start: &KVector,
    tol: f64,
    max_iter: usize,
    residual: F,
) -> Result<SolveOutcome>
where
    L: HomogeneousLagrangian + ?Sized,
    F: Fn(&KVector) -> Result<(Vec<f64>, DMatrix<f64>)>,
{
    let (n, p) = (start.dim(), start.degree());
    let mut y = normalize_to_level_set(lagrangian, x, start)?;
    let (mut r, mut jac) = residual(&y)?;
    let mut cost = norm(&r);
    let m = y.coords().len();
    let jtj = jac.transpose() * &jac;
    let mut mu = 1e-6 * (jtj.trace() / m as f64).max(1e-12);

    let mut iterations = 0;
    while iterations < max_iter {
        if cost <= tol {
            return Ok(SolveOutcome {
                y,
                residual: cost,
                iterations,
                converged: true,
            });
        }
        iterations += 1;
        let jt = jac.transpose();
        let mut a = &jt * &jac;
        for k in 0..m {
            a[(k, k)] += mu;
        }
        let b = -(&jt * DVector::from_column_slice(&r));
        let step = match a.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => a.lu().solve(&b).ok_or_else(|| {
                Error::NumericalFailure("singular damped normal equations".into())
            })?,
        };
        let trial: Vec<f64> = y.coords().iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let trial_norm = norm(&trial);
        if !trial_norm.is_finite() || trial_norm < 1e-12 {
            return Err(Error::NumericalFailure(
                "iterate collapsed toward the zero section".into(),
            ));
        }
        let trial = KVector::from_coords(n, p, trial)?;
        let accepted = if lagrangian.in_domain(x, &trial) {
            normalize_to_level_set(lagrangian, x, &trial)
                .and_then(|t| residual(&t).map(|rj| (t, rj)))
                .ok()
                .filter(|(_, (rt, _))| norm(rt) < cost)
        } else {
            None
        };
        match accepted {
            Some((t, (rt, jt))) => {
                y = t;
                cost = norm(&rt);
                r = rt;
                jac = jt;
                mu = (mu / 3.0).max(1e-15);
            }
            None => {
                mu *= 4.0;
                if mu > 1e12 {
                    break;
                }
            }
        }
    }
    Ok(SolveOutcome {
        y,
        converged: cost <= tol,
        residual: cost,
        iterations,
    })
}

/// Finds the class [y*] with ∂L/∂y(x, y*) = p, normalized to L(x, y*) = 1.
pub fn inverse_legendre<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    p: &KCovector,
    tol: f64,
    max_iter: usize,
) -> Result<GrassmannPoint> {
    p.ensure_shape(lagrangian.dim(), lagrangian.degree())?;
    let start = initial_guess(lagrangian, x, p.coords())?;
    let outcome = solve_on_level_set(lagrangian, x, &start, tol, max_iter, |y| {
        let g = lagrangian.grad(x, y)?;
        let r = g.coords().iter().zip(p.coords()).map(|(a, b)| a - b).collect();
        Ok((r, lagrangian.hess(x, y)?))
    })?;
    if !outcome.converged {
        return Err(Error::NoSolution {
            residual: outcome.residual,
            iterations: outcome.iterations,
        });
    }
    GrassmannPoint::from_ray(outcome.y)
}

fn initial_guess<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    direction: &[f64],
) -> Result<KVector> {
    let (n, p) = (lagrangian.dim(), lagrangian.degree());
    let mut y = KVector::from_coords(n, p, direction.to_vec())?;
    if y.is_zero() {
        return Err(Error::ZeroSection);
    }
    if !lagrangian.in_domain(x, &y) {
        y = y.scaled(-1.0);
    }
    Ok(y)
}

/// Which set a [`LevelSetSampler`] draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSetMode {
    /// Sₓ = {L = 1}
    Sphere,
    /// Bₓ = {L² ≤ 1}
    Ball,
}

/// Draws points of Sₓ or Bₓ along Gaussian random directions.
pub struct LevelSetSampler<'a, L: ?Sized> {
    lagrangian: &'a L,
    x: Vec<f64>,
    mode: LevelSetMode,
}

impl<'a, L: HomogeneousLagrangian + ?Sized> LevelSetSampler<'a, L> {
    pub fn new(lagrangian: &'a L, x: &[f64], mode: LevelSetMode) -> Self {
        Self {
            lagrangian,
            x: x.to_vec(),
            mode,
        }
    }

    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> Result<KVector> {
        let (n, p) = (self.lagrangian.dim(), self.lagrangian.degree());
        let m = crate::numerics::binomial(n, p);
        for _ in 0..64 {
            let mut y = KVector::from_coords(n, p, gaussian_vector(rng, m))?;
            if y.is_zero() {
                continue;
            }
            if !self.lagrangian.in_domain(&self.x, &y) {
                y = y.scaled(-1.0);
                if !self.lagrangian.in_domain(&self.x, &y) {
                    continue;
                }
            }
            let on_sphere = normalize_to_level_set(self.lagrangian, &self.x, &y)?;
            return Ok(match self.mode {
                LevelSetMode::Sphere => on_sphere,
                LevelSetMode::Ball => {
                    let u: f64 = rng.random();
                    on_sphere.scaled(u.powf(1.0 / m as f64).max(f64::MIN_POSITIVE))
                }
            });
        }
        Err(Error::NumericalFailure(
            "no admissible direction after 64 draws".into(),
        ))
    }
}

/// Maps `count` random directions of Sₓ through the Legendre map.
/// Sample `i` draws from its own seeded stream, so output is reproducible.
pub fn sample_image<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<LegendreImagePoint>> {
    let sampler = LevelSetSampler::new(lagrangian, x, LevelSetMode::Sphere);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let y = sampler.sample(&mut rng)?;
            legendre_map(lagrangian, x, &y)
        })
        .collect()
}

/// Numerical ranks of Hess(L²) and Hess(L) at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank_l2: usize,
    pub rank_l: usize,
    /// Rank of Hess(L) restricted to T_y Sₓ = ker dL.
    pub rank_l_tangent: usize,
    pub singular_values_l2: Vec<f64>,
    pub singular_values_l: Vec<f64>,
    pub threshold: f64,
    /// rank_l2 == 1 + rank_l
    pub holds: bool,
}

pub fn rank_lemma_check<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    y: &KVector,
    threshold: f64,
) -> Result<RankReport> {
    let h2 = hessian_of_square(lagrangian, x, y)?;
    let h = lagrangian.hess(x, y)?;
    let sv2 = singular_values(&h2);
    let sv = singular_values(&h);
    let rank_l2 = numerical_rank(&sv2, threshold);
    let rank_l = numerical_rank(&sv, threshold);

    let g = lagrangian.grad(x, y)?;
    let g_norm = g.norm();
    let m = g.coords().len();
    let unit = DMatrix::from_fn(m, 1, |i, _| g.coords()[i] / g_norm);
    let projector = DMatrix::identity(m, m) - &unit * unit.transpose();
    let eig = SymmetricEigen::new(projector);
    let tangent_cols: Vec<DVector<f64>> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .filter(|(v, _)| **v > 0.5)
        .map(|(_, c)| c.into_owned())
        .collect();
    let rank_l_tangent = if tangent_cols.is_empty() {
        0
    } else {
        let basis = DMatrix::from_columns(&tangent_cols);
        numerical_rank(&singular_values(&(&h * basis)), threshold)
    };

    Ok(RankReport {
        holds: rank_l2 == 1 + rank_l,
        rank_l2,
        rank_l,
        rank_l_tangent,
        singular_values_l2: sv2,
        singular_values_l: sv,
        threshold,
    })
}

/// Outcome of sampling segments between points of 𝒩ₓ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCertificate {
    pub passed: bool,
    pub num_segment_checks: usize,
    pub num_inversion_failures: usize,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub sample_seed: u64,
}

/// Violation charged to a segment point whose ray or preimage could not be resolved.
pub const FAILED_CHECK_VIOLATION: f64 = 1.0;

/// Samples pairs P₀, P₀′ ∈ 𝒩ₓ and checks that tP₀ + (1−t)P₀′ stays inside the
/// hypersurface along its ray from the origin.
///
/// For a segment point Q the boundary point on the ray through Q is ∂L/∂y(y*)
/// where y* ∈ Sₓ has ∂L/∂y(y*) parallel to Q; since ⟨∂L/∂y(y*), y*⟩ = 1 that
/// boundary point is Q/⟨Q, y*⟩. Q is inside iff ⟨Q, y*⟩ ≤ 1, and the violation
/// recorded is max(0, ⟨Q, y*⟩ − 1). The rescaled point Q/⟨Q, y*⟩ must also be
/// invertible by [`inverse_legendre`].
pub fn convexity_certificate<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    num_pairs: usize,
    t_steps: usize,
    seed: u64,
    tol: f64,
) -> ConvexityCertificate {
    let sampler = LevelSetSampler::new(lagrangian, x, LevelSetMode::Sphere);
    let per_pair: Vec<(f64, usize)> = (0..num_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let endpoints = sampler.sample(&mut rng).and_then(|a| {
                let b = sampler.sample(&mut rng)?;
                let pa = lagrangian.grad(x, &a)?;
                let pb = lagrangian.grad(x, &b)?;
                Ok((a, b, pa, pb))
            });
            let Ok((ya, yb, pa, pb)) = endpoints else {
                return (FAILED_CHECK_VIOLATION, t_steps);
            };
            let mut worst: f64 = 0.0;
            let mut failures = 0;
            for k in 1..=t_steps {
                let t = k as f64 / (t_steps + 1) as f64;
                let q: Vec<f64> = pa
                    .coords()
                    .iter()
                    .zip(pb.coords())
                    .map(|(a, b)| t * a + (1.0 - t) * b)
                    .collect();
                let guess: Vec<f64> = ya
                    .coords()
                    .iter()
                    .zip(yb.coords())
                    .map(|(a, b)| t * a + (1.0 - t) * b)
                    .collect();
                match segment_violation(lagrangian, x, &q, &guess) {
                    Some(v) => worst = worst.max(v),
                    None => {
                        failures += 1;
                        worst = worst.max(FAILED_CHECK_VIOLATION);
                    }
                }
            }
            (worst, failures)
        })
        .collect();

    let worst_violation = per_pair.iter().map(|r| r.0).fold(0.0, f64::max);
    let num_inversion_failures = per_pair.iter().map(|r| r.1).sum();
    ConvexityCertificate {
        passed: worst_violation <= tol && num_inversion_failures == 0,
        num_segment_checks: num_pairs * t_steps,
        num_inversion_failures,
        worst_violation,
        tolerance: tol,
        sample_seed: seed,
    }
}

/// `None` when the ray through `q` cannot be resolved.
fn segment_violation<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    q: &[f64],
    guess: &[f64],
) -> Option<f64> {
    let q_norm = norm(q);
    if q_norm < 1e-14 {
        // the origin is interior to every star-shaped image
        return Some(0.0);
    }
    let q_unit: Vec<f64> = q.iter().map(|c| c / q_norm).collect();
    let start = if guess.iter().any(|&c| c != 0.0) {
        initial_guess(lagrangian, x, guess).ok()?
    } else {
        initial_guess(lagrangian, x, q).ok()?
    };
    let outcome = solve_on_level_set(lagrangian, x, &start, 1e-11, DEFAULT_MAX_ITER, |y| {
        let g = lagrangian.grad(x, y)?;
        let g_norm = g.norm();
        let unit: Vec<f64> = g.coords().iter().map(|c| c / g_norm).collect();
        let r = unit.iter().zip(&q_unit).map(|(a, b)| a - b).collect();
        let m = unit.len();
        let u = DMatrix::from_column_slice(m, 1, &unit);
        let jac = (DMatrix::identity(m, m) - &u * u.transpose()) * lagrangian.hess(x, y)? / g_norm;
        Ok((r, jac))
    })
    .ok()?;
    if !outcome.converged {
        return None;
    }
    let support = dot(q, outcome.y.coords());
    if !(support > 0.0) {
        return None;
    }
    let (n, p) = (lagrangian.dim(), lagrangian.degree());
    let on_image = KCovector::from_coords(n, p, q.iter().map(|c| c / support).collect()).ok()?;
    inverse_legendre(lagrangian, x, &on_image, DEFAULT_INVERSE_TOL, DEFAULT_MAX_ITER).ok()?;
    Some((support - 1.0).max(0.0))
}
