//! Discretized p-dimensional surfaces in ℝⁿ and the three action integrals.
//!
//! Every action is a sum over cells of (integrand at quadrature points) ×
//! (parameter cell volume). The tangent vectors u_a at a point are the partial
//! derivatives of the multilinear interpolant of the node values, so the dual
//! coframe θ¹∧…∧θᵖ integrates to the parameter volume and L(x, u₁∧…∧u_p)
//! integrates to the action by degree-one homogeneity.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{wedge_vectors, KVector};
use crate::lagrangian::{GraphDensity, HomogeneousLagrangian, Slopes};
use crate::legendre::legendre_map;
use crate::multisymplectic::{theta, AlternatingForm, TotalSpaceChart, TotalVector};
use crate::numerics::{norm, pairwise_sum};

/// Axis-aligned parameter rectangle, one `(lo, hi)` per axis.
pub type Domain = Vec<(f64, f64)>;

fn check_domain(domain: &Domain) -> Result<()> {
    if domain.is_empty() {
        return Err(Error::domain("empty parameter domain"));
    }
    for &(lo, hi) in domain {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain(format!("invalid parameter interval ({lo}, {hi})")));
        }
    }
    Ok(())
}

/// Node values of a map from a parameter rectangle into ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricGrid {
    n: usize,
    domain: Domain,
    resolution: usize,
    /// Row-major over node multi-indices, last axis fastest.
    values: Vec<Vec<f64>>,
}

impl ParametricGrid {
    /// Samples `map` at the (resolution + 1)ᵖ nodes of `domain`.
    pub fn from_map<F>(domain: Domain, resolution: usize, n: usize, map: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        check_domain(&domain)?;
        let p = domain.len();
        let nodes = node_count(p, resolution)?;
        let values = (0..nodes)
            .map(|k| {
                let idx = unravel(k, p, resolution + 1);
                let u: Vec<f64> = idx
                    .iter()
                    .zip(&domain)
                    .map(|(&i, &(lo, hi))| lo + (hi - lo) * i as f64 / resolution as f64)
                    .collect();
                map(&u)
            })
            .collect();
        Self::from_values(domain, resolution, n, values)
    }

    pub fn from_values(domain: Domain, resolution: usize, n: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        check_domain(&domain)?;
        let p = domain.len();
        if p > n {
            return Err(Error::domain(format!("parameter dimension {p} exceeds ambient {n}")));
        }
        if values.len() != node_count(p, resolution)? {
            return Err(Error::domain(format!(
                "expected {} node values, got {}",
                node_count(p, resolution)?,
                values.len()
            )));
        }
        if values.iter().any(|v| v.len() != n || v.iter().any(|c| !c.is_finite())) {
            return Err(Error::domain(format!("node values must be finite points of ℝ^{n}")));
        }
        Ok(Self {
            n,
            domain,
            resolution,
            values,
        })
    }

    pub fn param_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(self.param_dim() as u32)
    }

    pub fn cell_size(&self) -> Vec<f64> {
        self.domain
            .iter()
            .map(|(lo, hi)| (hi - lo) / self.resolution as f64)
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size().iter().product()
    }

    pub fn cell_index(&self, linear: usize) -> Vec<usize> {
        unravel(linear, self.param_dim(), self.resolution)
    }

    pub fn node(&self, index: &[usize]) -> &[f64] {
        let linear = index.iter().fold(0, |acc, &i| acc * (self.resolution + 1) + i);
        &self.values[linear]
    }

    /// Point and tangent vectors of the multilinear interpolant at local
    /// coordinates `local ∈ [0, 1]ᵖ` of `cell`.
    pub fn sample(&self, cell: &[usize], local: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let p = self.param_dim();
        if cell.len() != p || cell.iter().any(|&c| c >= self.resolution) {
            return Err(Error::domain(format!("cell {cell:?} outside the grid")));
        }
        let h = self.cell_size();
        let mut point = vec![0.0; self.n];
        let mut tangents = vec![vec![0.0; self.n]; p];
        for corner in 0..(1usize << p) {
            let bits: Vec<bool> = (0..p).map(|a| corner >> (p - 1 - a) & 1 == 1).collect();
            let node_index: Vec<usize> = cell.iter().zip(&bits).map(|(&c, &b)| c + usize::from(b)).collect();
            let value = self.node(&node_index);
            let factors: Vec<f64> = bits
                .iter()
                .zip(local)
                .map(|(&b, &xi)| if b { xi } else { 1.0 - xi })
                .collect();
            let weight: f64 = factors.iter().product();
            for (acc, v) in point.iter_mut().zip(value) {
                *acc += weight * v;
            }
            for a in 0..p {
                let others: f64 = (0..p).filter(|&b| b != a).map(|b| factors[b]).product();
                let d = if bits[a] { 1.0 } else { -1.0 } * others / h[a];
                for (acc, v) in tangents[a].iter_mut().zip(value) {
                    *acc += d * v;
                }
            }
        }
        Ok((point, tangents))
    }
}

fn node_count(p: usize, resolution: usize) -> Result<usize> {
    if resolution < 2 {
        return Err(Error::domain(format!("resolution {resolution} is below 2")));
    }
    Ok((resolution + 1).pow(p as u32))
}

fn unravel(mut linear: usize, p: usize, extent: usize) -> Vec<usize> {
    let mut idx = vec![0; p];
    for slot in idx.iter_mut().rev() {
        *slot = linear % extent;
        linear /= extent;
    }
    idx
}

/// Quadrature rule applied inside each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Midpoint,
    /// Tensor Gauss–Legendre with two points per axis.
    Gauss2,
}

/// Quadrature settings. Graph slopes use central differences with step equal
/// to the cell size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rule: QuadratureRule,
}

impl QuadratureConfig {
    /// Local points in [0, 1]ᵖ with weights summing to one.
    pub fn points(&self, p: usize) -> Vec<(Vec<f64>, f64)> {
        let nodes_1d: Vec<f64> = match self.rule {
            QuadratureRule::Midpoint => vec![0.5],
            QuadratureRule::Gauss2 => {
                let off = 0.5 / 3f64.sqrt();
                vec![0.5 - off, 0.5 + off]
            }
        };
        let k = nodes_1d.len();
        let count = k.pow(p as u32);
        (0..count)
            .map(|linear| {
                let idx = unravel(linear, p, k);
                (idx.iter().map(|&i| nodes_1d[i]).collect(), 1.0 / count as f64)
            })
            .collect()
    }
}

/// Tangent p-vector and base point at the center of `cell`.
pub fn tangent_pvector(grid: &ParametricGrid, cell: &[usize]) -> Result<(KVector, Vec<f64>)> {
    let center = vec![0.5; grid.param_dim()];
    let (point, tangents) = grid.sample(cell, &center)?;
    let y = checked_wedge(&tangents, cell)?;
    Ok((y, point))
}

fn checked_wedge(tangents: &[Vec<f64>], cell: &[usize]) -> Result<KVector> {
    let y = wedge_vectors(tangents)?;
    let scale: f64 = tangents.iter().map(|t| norm(t)).product();
    if y.is_zero() || y.norm() <= 1e-14 * scale {
        return Err(Error::DegenerateCell { cell: cell.to_vec() });
    }
    Ok(y)
}

/// Σ over cells and quadrature points of weight · integrand(x, tangents, y).
/// Cell sums are combined by pairwise summation in cell order.
fn integrate_over_grid<G>(grid: &ParametricGrid, quad: &QuadratureConfig, integrand: G) -> Result<f64>
where
    G: Fn(&[f64], &[Vec<f64>], &KVector) -> Result<f64> + Sync,
{
    let points = quad.points(grid.param_dim());
    let volume = grid.cell_volume();
    let per_cell: Vec<Result<f64>> = (0..grid.cell_count())
        .into_par_iter()
        .map(|linear| {
            let cell = grid.cell_index(linear);
            let mut acc = 0.0;
            for (local, weight) in &points {
                let (x, tangents) = grid.sample(&cell, local)?;
                let y = checked_wedge(&tangents, &cell)?;
                acc += weight * integrand(&x, &tangents, &y)?;
            }
            Ok(acc * volume)
        })
        .collect();
    let values = per_cell
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| e.at_cell(i)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&values))
}

fn check_grid_shape<L: HomogeneousLagrangian + ?Sized>(lagrangian: &L, grid: &ParametricGrid) -> Result<()> {
    if lagrangian.dim() != grid.ambient_dim() || lagrangian.degree() != grid.param_dim() {
        return Err(Error::ShapeMismatch {
            expected_n: lagrangian.dim(),
            expected_p: lagrangian.degree(),
            n: grid.ambient_dim(),
            p: grid.param_dim(),
        });
    }
    Ok(())
}

/// ∫_Σ L(x, u₁∧…∧u_p) θ¹∧…∧θᵖ.
pub fn lagrangian_action<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    grid: &ParametricGrid,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_grid_shape(lagrangian, grid)?;
    integrate_over_grid(grid, quad, |x, _, y| lagrangian.eval(x, y))
}

/// ∫_Γ θ over the Legendre image Γ of the tangent lift of Σ: per sample point,
/// θ at (x, ∂L/∂y(x, y)) evaluated on the tangent vectors.
pub fn multisymplectic_action<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    grid: &ParametricGrid,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_grid_shape(lagrangian, grid)?;
    let chart = TotalSpaceChart::new(lagrangian.dim(), lagrangian.degree())?;
    let theta = theta(&chart);
    let fiber_zeros = vec![0.0; chart.dim_total() - chart.base_dim()];
    integrate_over_grid(grid, quad, |x, tangents, y| {
        let image = legendre_map(lagrangian, x, y)?;
        let point = chart.point(x, &image.p)?;
        let lifted = tangents
            .iter()
            .map(|t| TotalVector::from_parts(&chart, t, &fiber_zeros))
            .collect::<Result<Vec<_>>>()?;
        theta.evaluate(&point, &lifted)
    })
}

/// A map f: ℝᵖ → ℝ^{n−p} given by a closure.
pub type GraphMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// The graph {(u, f(u))} of f over a parameter rectangle.
#[derive(Clone)]
pub struct GraphSurface {
    n: usize,
    f: GraphMap,
    domain: Domain,
    resolution: usize,
}

impl std::fmt::Debug for GraphSurface {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("GraphSurface")
            .field("n", &self.n)
            .field("domain", &self.domain)
            .field("resolution", &self.resolution)
            .finish_non_exhaustive()
    }
}

impl GraphSurface {
    pub fn new(n: usize, f: GraphMap, domain: Domain, resolution: usize) -> Result<Self> {
        check_domain(&domain)?;
        node_count(domain.len(), resolution)?;
        if domain.len() >= n {
            return Err(Error::domain(format!("graph of ℝ^{} in ℝ^{n} needs p < n", domain.len())));
        }
        Ok(Self { n, f, domain, resolution })
    }

    pub fn param_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self::new(self.n, self.f.clone(), self.domain.clone(), resolution)
    }

    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        (self.f)(u)
    }

    /// Node grid of u ↦ (u, f(u)).
    pub fn grid(&self) -> Result<ParametricGrid> {
        let n = self.n;
        ParametricGrid::from_map(self.domain.clone(), self.resolution, n, |u| {
            let mut point = u.to_vec();
            point.extend(self.eval(u));
            point
        })
    }
}

/// ∫ F(u, f(u), ∇f(u)) du, with ∇f by central differences of f itself.
pub fn graph_action<D: GraphDensity + ?Sized>(
    density: &D,
    surface: &GraphSurface,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let p = surface.param_dim();
    let n = surface.ambient_dim();
    if density.base_dim() != p || density.dim() != n {
        return Err(Error::ShapeMismatch {
            expected_n: density.dim(),
            expected_p: density.base_dim(),
            n,
            p,
        });
    }
    let res = surface.resolution();
    let h: Vec<f64> = surface.domain().iter().map(|(lo, hi)| (hi - lo) / res as f64).collect();
    let volume: f64 = h.iter().product();
    let points = quad.points(p);
    let cells = res.pow(p as u32);
    let per_cell: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|linear| {
            let cell = unravel(linear, p, res);
            points
                .iter()
                .map(|(local, weight)| {
                    let u: Vec<f64> = (0..p)
                        .map(|a| surface.domain()[a].0 + (cell[a] as f64 + local[a]) * h[a])
                        .collect();
                    let values = surface.eval(&u);
                    let mut slopes = Slopes::zeros(p, n - p);
                    for a in 0..p {
                        let mut plus = u.clone();
                        let mut minus = u.clone();
                        plus[a] += 0.5 * h[a];
                        minus[a] -= 0.5 * h[a];
                        let (fp, fm) = (surface.eval(&plus), surface.eval(&minus));
                        for j in 0..n - p {
                            slopes[(a, j)] = (fp[j] - fm[j]) / h[a];
                        }
                    }
                    weight * density.value(&u, &values, &slopes)
                })
                .sum::<f64>()
                * volume
        })
        .collect();
    Ok(pairwise_sum(&per_cell))
}

/// Monomial c · Π u_a^{k_a}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Polynomial map ℝᵖ → ℝ^{n−p}, one list of monomials per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMap {
    pub param_dim: usize,
    pub components: Vec<Vec<Monomial>>,
}

impl PolynomialMap {
    pub fn new(param_dim: usize, components: Vec<Vec<Monomial>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("polynomial map needs at least one component"));
        }
        if components.iter().flatten().any(|m| m.powers.len() != param_dim) {
            return Err(Error::domain(format!("every monomial needs {param_dim} exponents")));
        }
        Ok(Self { param_dim, components })
    }

    /// f ≡ 0 with `codim` components.
    pub fn flat(param_dim: usize, codim: usize) -> Result<Self> {
        Self::new(param_dim, vec![Vec::new(); codim])
    }

    /// Affine f_ȷ(u) = Σ_a slopes[ȷ][a] u_a.
    pub fn linear(slopes: &[Vec<f64>]) -> Result<Self> {
        let p = slopes.first().map(Vec::len).unwrap_or(0);
        let components = slopes
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(a, &c)| Monomial {
                        coeff: c,
                        powers: (0..p).map(|b| u32::from(a == b)).collect(),
                    })
                    .collect()
            })
            .collect();
        Self::new(p, components)
    }

    /// f_ȷ(u) = u₁u₂…u_p for every component.
    pub fn multilinear(param_dim: usize, codim: usize) -> Result<Self> {
        let term = Monomial {
            coeff: 1.0,
            powers: vec![1; param_dim],
        };
        Self::new(param_dim, vec![vec![term]; codim])
    }

    pub fn codim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|m| {
                        m.coeff
                            * m.powers
                                .iter()
                                .zip(u)
                                .map(|(&k, &x)| x.powi(k as i32))
                                .product::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    pub fn into_graph(self, domain: Domain, resolution: usize) -> Result<GraphSurface> {
        if domain.len() != self.param_dim {
            return Err(Error::domain("domain dimension differs from the polynomial's"));
        }
        let n = self.param_dim + self.codim();
        let f: GraphMap = Arc::new(move |u: &[f64]| self.eval(u));
        GraphSurface::new(n, f, domain, resolution)
    }
}

/// Which action a convergence study evaluates.
#[derive(Clone, Copy)]
pub enum ActionSource<'a> {
    Lagrangian(&'a dyn HomogeneousLagrangian),
    Multisymplectic(&'a dyn HomogeneousLagrangian),
    Graph(&'a dyn GraphDensity),
}

impl ActionSource<'_> {
    pub fn evaluate(&self, surface: &GraphSurface, quad: &QuadratureConfig) -> Result<f64> {
        match *self {
            ActionSource::Lagrangian(l) => lagrangian_action(l, &surface.grid()?, quad),
            ActionSource::Multisymplectic(l) => multisymplectic_action(l, &surface.grid()?, quad),
            ActionSource::Graph(d) => graph_action(d, surface, quad),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub h: f64,
    pub value: f64,
    pub error: f64,
    /// log(e_prev / e) / log(h_prev / h); absent for the first row or when
    /// either error is at rounding level.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub reference: f64,
    /// "analytic" or "richardson"
    pub reference_kind: String,
    pub rows: Vec<ConvergenceRow>,
    /// Whether |error| is non-increasing as h shrinks (up to rounding).
    pub monotone: bool,
}

/// Evaluates an action at several resolutions and reports observed orders.
///
/// Without an analytic `reference`, the two finest values are Richardson
/// extrapolated assuming second order.
pub fn convergence_study(
    source: ActionSource<'_>,
    surface: &GraphSurface,
    quad: &QuadratureConfig,
    resolutions: &[usize],
    reference: Option<f64>,
) -> Result<ConvergenceTable> {
    if resolutions.len() < 3 {
        return Err(Error::domain("a convergence study needs at least three resolutions"));
    }
    let mut sorted = resolutions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 3 {
        return Err(Error::domain("a convergence study needs three distinct resolutions"));
    }
    let width = surface.domain()[0].1 - surface.domain()[0].0;
    let mut samples = Vec::with_capacity(sorted.len());
    for &res in &sorted {
        let value = source.evaluate(&surface.with_resolution(res)?, quad)?;
        samples.push((res, width / res as f64, value));
    }
    let (reference, reference_kind) = match reference {
        Some(r) => (r, "analytic"),
        None => {
            let (_, hc, vc) = samples[samples.len() - 2];
            let (_, hf, vf) = samples[samples.len() - 1];
            let ratio = hc / hf;
            (vf + (vf - vc) / (ratio * ratio - 1.0), "richardson")
        }
    };
    let floor = 1e-13 * reference.abs().max(1.0);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(samples.len());
    for &(resolution, h, value) in &samples {
        let error = value - reference;
        let observed_order = rows.last().and_then(|prev| {
            (prev.error.abs() > floor && error.abs() > floor)
                .then(|| (prev.error.abs() / error.abs()).ln() / (prev.h / h).ln())
        });
        rows.push(ConvergenceRow {
            resolution,
            h,
            value,
            error,
            observed_order,
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].error.abs() <= w[0].error.abs() + floor);
    Ok(ConvergenceTable {
        reference,
        reference_kind: reference_kind.into(),
        rows,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{area_lagrangian, graph_area_density, graph_lift, unit_density};
    use approx::assert_relative_eq;

    fn unit_square() -> Domain {
        vec![(0.0, 1.0), (0.0, 1.0)]
    }

    #[test]
    fn plane_graph_tangent() {
        let surf = PolynomialMap::linear(&[vec![2.0, 3.0]]).unwrap().into_graph(unit_square(), 8).unwrap();
        let grid = surf.grid().unwrap();
        for cell in [[0, 0], [3, 5], [7, 7]] {
            let (y, _) = tangent_pvector(&grid, &cell).unwrap();
            let t = y.triple().unwrap();
            assert!((t[0] - 1.0).abs() < 1e-12 && (t[1] + 2.0).abs() < 1e-12 && (t[2] + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_graph_tangent() {
        let surf = PolynomialMap::flat(2, 1).unwrap().into_graph(unit_square(), 4).unwrap();
        let (y, x) = tangent_pvector(&surf.grid().unwrap(), &[1, 2]).unwrap();
        assert_eq!(y.triple().unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(x, vec![0.375, 0.625, 0.0]);
    }

    #[test]
    fn bilinear_tangent_at_center() {
        // middle cell centered at (0.75, 0.75)
        let surf = PolynomialMap::multilinear(2, 1).unwrap().into_graph(vec![(0.0, 1.5), (0.0, 1.5)], 3).unwrap();
        let (y, x) = tangent_pvector(&surf.grid().unwrap(), &[1, 1]).unwrap();
        assert_relative_eq!(x[0], 0.75);
        let t = y.triple().unwrap();
        // ∂f/∂x¹ = x², ∂f/∂x² = x¹
        assert_relative_eq!(t[1], -0.75, epsilon = 1e-12);
        assert_relative_eq!(t[2], -0.75, epsilon = 1e-12);

        let surf = PolynomialMap::multilinear(2, 1).unwrap().into_graph(vec![(0.25, 0.75), (0.25, 0.75)], 2).unwrap();
        let grid = surf.grid().unwrap();
        let (y, x) = grid.sample(&[0, 0], &[1.0, 1.0]).map(|(x, t)| (wedge_vectors(&t).unwrap(), x)).unwrap();
        assert_eq!(&x[..2], &[0.5, 0.5]);
        assert_eq!(y.triple().unwrap(), [1.0, -0.5, -0.5]);
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        let grid = ParametricGrid::from_map(unit_square(), 2, 3, |u| vec![u[0], u[0], 0.0]).unwrap();
        assert!(matches!(tangent_pvector(&grid, &[0, 0]), Err(Error::DegenerateCell { .. })));
        let area = area_lagrangian(3, 2).unwrap();
        let err = lagrangian_action(&area, &grid, &QuadratureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Cell { cell: 0, .. }), "{err:?}");
    }

    #[test]
    fn grid_validation() {
        assert!(ParametricGrid::from_map(unit_square(), 1, 3, |u| vec![u[0], u[1], 0.0]).is_err());
        assert!(ParametricGrid::from_map(vec![(1.0, 0.0)], 4, 2, |u| vec![u[0], 0.0]).is_err());
        assert!(ParametricGrid::from_map(unit_square(), 4, 3, |u| vec![u[0], f64::NAN, 0.0]).is_err());
        assert_eq!(
            ParametricGrid::from_map(unit_square(), 4, 3, |u| vec![u[0], u[1], 0.0]).unwrap().cell_count(),
            16
        );
    }

    #[test]
    fn flat_and_plane_actions() {
        let area = area_lagrangian(3, 2).unwrap();
        let quad = QuadratureConfig::default();
        let flat = PolynomialMap::flat(2, 1).unwrap().into_graph(unit_square(), 16).unwrap();
        let grid = flat.grid().unwrap();
        assert_relative_eq!(lagrangian_action(&area, &grid, &quad).unwrap(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(multisymplectic_action(&area, &grid, &quad).unwrap(), 1.0, epsilon = 1e-13);

        let plane = PolynomialMap::linear(&[vec![2.0, 3.0]]).unwrap().into_graph(unit_square(), 64).unwrap();
        let grid = plane.grid().unwrap();
        let expected = 14f64.sqrt();
        assert!((lagrangian_action(&area, &grid, &quad).unwrap() - expected).abs() < 1e-8);
        assert!((multisymplectic_action(&area, &grid, &quad).unwrap() - expected).abs() < 1e-8);
        let density = graph_area_density(3, 2).unwrap();
        assert!((graph_action(&density, &plane, &quad).unwrap() - expected).abs() < 1e-8);
        assert_relative_eq!(graph_action(&unit_density(3, 2).unwrap(), &plane, &quad).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn gauss_rule_weights() {
        for p in 1..=3 {
            for rule in [QuadratureRule::Midpoint, QuadratureRule::Gauss2] {
                let pts = QuadratureConfig { rule }.points(p);
                assert_relative_eq!(pts.iter().map(|(_, w)| w).sum::<f64>(), 1.0, epsilon = 1e-15);
                assert!(pts.iter().all(|(_, w)| *w > 0.0));
            }
        }
    }

    #[test]
    fn reversed_axis_leaves_the_graph_chart() {
        let lift = graph_lift(graph_area_density(3, 2).unwrap()).unwrap();
        let grid = ParametricGrid::from_map(unit_square(), 4, 3, |u| vec![1.0 - u[0], u[1], 0.0]).unwrap();
        let (y, _) = tangent_pvector(&grid, &[0, 0]).unwrap();
        assert!(y.coords()[0] < 0.0);
        let err = lagrangian_action(&lift, &grid, &QuadratureConfig::default()).unwrap_err();
        match err {
            Error::Cell { cell: 0, source } => assert!(matches!(*source, Error::Orientation { .. })),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn convergence_needs_three_resolutions() {
        let area = area_lagrangian(3, 2).unwrap();
        let plane = PolynomialMap::linear(&[vec![2.0, 3.0]]).unwrap().into_graph(unit_square(), 4).unwrap();
        let r = convergence_study(ActionSource::Lagrangian(&area), &plane, &QuadratureConfig::default(), &[4, 8], None);
        assert!(r.is_err());
    }

    #[test]
    fn plane_convergence_is_at_machine_level() {
        let area = area_lagrangian(3, 2).unwrap();
        let plane = PolynomialMap::linear(&[vec![2.0, 3.0]]).unwrap().into_graph(unit_square(), 4).unwrap();
        let table = convergence_study(
            ActionSource::Lagrangian(&area),
            &plane,
            &QuadratureConfig::default(),
            &[4, 8, 16],
            Some(14f64.sqrt()),
        )
        .unwrap();
        assert!(table.rows.iter().all(|r| r.error.abs() < 1e-12));
    }
}
