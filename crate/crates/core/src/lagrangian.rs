//! Positively homogeneous Lagrangians on ΛᵖTℝⁿ ∖ σ₀ and the areolar p-form.
//!
//! A Lagrangian L(x, y) is homogeneous of degree one in the p-vector y, so its
//! gradient ∂L/∂y is homogeneous of degree zero and descends to the oriented
//! Grassmannian. That gradient, read as a p-covector, is the areolar form ℓ.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::exterior::{pair, wedge_vectors, GrassmannPoint, KCovector, KVector, MultiIndex};
use crate::numerics::binomial;

/// Slopes q with entry (ı, ȷ) = ∂f_ȷ/∂x_ı, a p × (n−p) matrix.
pub type Slopes = DMatrix<f64>;

/// Relative step for finite-difference derivatives in the fiber.
pub const FD_RELATIVE_STEP: f64 = 1e-5;

fn fd_step(y: &KVector) -> f64 {
    FD_RELATIVE_STEP * y.norm().max(1.0)
}

/// A Lagrangian L(x, y), positively homogeneous of degree one in y.
///
/// Implementors provide [`value`](Self::value) and may override the gradient and
/// Hessian with analytic versions; the defaults are central finite differences.
/// Callers should go through [`eval`](Self::eval), [`grad`](Self::grad) and
/// [`hess`](Self::hess), which reject the zero section and shape mismatches.
pub trait HomogeneousLagrangian: Send + Sync {
    fn dim(&self) -> usize;
    fn degree(&self) -> usize;
    fn name(&self) -> &str;

    fn smoothness(&self) -> &str {
        "smooth off the zero section"
    }

    /// Whether `y` lies in the chart where L is defined. Samplers reflect
    /// `y ↦ −y` when this is false.
    fn in_domain(&self, _x: &[f64], _y: &KVector) -> bool {
        true
    }

    fn value(&self, x: &[f64], y: &KVector) -> Result<f64>;

    fn gradient(&self, x: &[f64], y: &KVector) -> Result<KCovector> {
        let h = fd_step(y);
        let mut coords = Vec::with_capacity(y.coords().len());
        for k in 0..y.coords().len() {
            let mut plus = y.coords().to_vec();
            let mut minus = y.coords().to_vec();
            plus[k] += h;
            minus[k] -= h;
            let fp = self.value(x, &KVector::from_coords(y.dim(), y.degree(), plus)?)?;
            let fm = self.value(x, &KVector::from_coords(y.dim(), y.degree(), minus)?)?;
            coords.push((fp - fm) / (2.0 * h));
        }
        KCovector::from_coords(y.dim(), y.degree(), coords)
    }

    fn hessian(&self, x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        let h = fd_step(y);
        let m = y.coords().len();
        let mut out = DMatrix::zeros(m, m);
        for k in 0..m {
            let mut plus = y.coords().to_vec();
            let mut minus = y.coords().to_vec();
            plus[k] += h;
            minus[k] -= h;
            let gp = self.gradient(x, &KVector::from_coords(y.dim(), y.degree(), plus)?)?;
            let gm = self.gradient(x, &KVector::from_coords(y.dim(), y.degree(), minus)?)?;
            for (j, (a, b)) in gp.coords().iter().zip(gm.coords()).enumerate() {
                out[(j, k)] = (a - b) / (2.0 * h);
            }
        }
        Ok((&out + out.transpose()) * 0.5)
    }

    fn check(&self, x: &[f64], y: &KVector) -> Result<()> {
        y.ensure_shape(self.dim(), self.degree())?;
        if x.len() != self.dim() {
            return Err(Error::domain(format!(
                "base point has {} coordinates, expected {}",
                x.len(),
                self.dim()
            )));
        }
        if y.is_zero() {
            return Err(Error::ZeroSection);
        }
        Ok(())
    }

    fn eval(&self, x: &[f64], y: &KVector) -> Result<f64> {
        self.check(x, y)?;
        self.value(x, y)
    }

    fn grad(&self, x: &[f64], y: &KVector) -> Result<KCovector> {
        self.check(x, y)?;
        self.gradient(x, y)
    }

    fn hess(&self, x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        self.check(x, y)?;
        self.hessian(x, y)
    }
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if p == 0 || p >= n {
        return Err(Error::domain(format!("need 0 < p < n, got n={n}, p={p}")));
    }
    Ok(())
}

/// L(x, y) = ‖y‖, the infinitesimal p-dimensional area.
#[derive(Debug, Clone)]
pub struct AreaLagrangian {
    n: usize,
    p: usize,
}

pub fn area_lagrangian(n: usize, p: usize) -> Result<AreaLagrangian> {
    check_dims(n, p)?;
    Ok(AreaLagrangian { n, p })
}

impl HomogeneousLagrangian for AreaLagrangian {
    fn dim(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.p
    }
    fn name(&self) -> &str {
        "area"
    }

    fn value(&self, _x: &[f64], y: &KVector) -> Result<f64> {
        Ok(y.norm())
    }

    fn gradient(&self, _x: &[f64], y: &KVector) -> Result<KCovector> {
        let r = y.norm();
        KCovector::from_coords(self.n, self.p, y.coords().iter().map(|c| c / r).collect())
    }

    fn hessian(&self, _x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        let r = y.norm();
        let m = y.coords().len();
        let unit = DMatrix::from_fn(m, 1, |i, _| y.coords()[i] / r);
        Ok((DMatrix::identity(m, m) - &unit * unit.transpose()) / r)
    }
}

/// L(x, y) = √(Σ_I w_I (y^I)²) with positive weights in lexicographic index order.
#[derive(Debug, Clone)]
pub struct EllipsoidLagrangian {
    n: usize,
    p: usize,
    weights: Vec<f64>,
}

pub fn ellipsoid_lagrangian(n: usize, p: usize, weights: Vec<f64>) -> Result<EllipsoidLagrangian> {
    check_dims(n, p)?;
    if weights.len() != binomial(n, p) {
        return Err(Error::domain(format!(
            "expected {} weights, got {}",
            binomial(n, p),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::domain(format!("weight {w} is not positive")));
    }
    Ok(EllipsoidLagrangian { n, p, weights })
}

impl EllipsoidLagrangian {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl HomogeneousLagrangian for EllipsoidLagrangian {
    fn dim(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.p
    }
    fn name(&self) -> &str {
        "ellipsoid"
    }

    fn value(&self, _x: &[f64], y: &KVector) -> Result<f64> {
        Ok(y.coords()
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c * c)
            .sum::<f64>()
            .sqrt())
    }

    fn gradient(&self, x: &[f64], y: &KVector) -> Result<KCovector> {
        let l = self.value(x, y)?;
        let coords = y.coords().iter().zip(&self.weights).map(|(c, w)| w * c / l).collect();
        KCovector::from_coords(self.n, self.p, coords)
    }

    fn hessian(&self, x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        let l = self.value(x, y)?;
        let g = self.gradient(x, y)?;
        let m = self.weights.len();
        let g = DMatrix::from_fn(m, 1, |i, _| g.coords()[i]);
        Ok((DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.weights.clone()))
            - &g * g.transpose())
            / l)
    }
}

/// L(x, y) = y^{1…p}. Homogeneous and linear, hence degenerate.
#[derive(Debug, Clone)]
pub struct LeadingCoordinate {
    n: usize,
    p: usize,
}

pub fn leading_coordinate(n: usize, p: usize) -> Result<LeadingCoordinate> {
    check_dims(n, p)?;
    Ok(LeadingCoordinate { n, p })
}

impl HomogeneousLagrangian for LeadingCoordinate {
    fn dim(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.p
    }
    fn name(&self) -> &str {
        "linear"
    }
    fn in_domain(&self, _x: &[f64], y: &KVector) -> bool {
        y.coords()[0] > 0.0
    }

    fn value(&self, _x: &[f64], y: &KVector) -> Result<f64> {
        Ok(y.coords()[0])
    }

    fn gradient(&self, _x: &[f64], _y: &KVector) -> Result<KCovector> {
        Ok(KCovector::basis(&MultiIndex::leading(self.n, self.p)?))
    }

    fn hessian(&self, _x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        let m = y.coords().len();
        Ok(DMatrix::zeros(m, m))
    }
}

/// Geometric mean of |y^I| over all coordinates: (Π_I |y^I|)^{1/C(n,p)}.
///
/// Degree-one homogeneous but not nondegenerate; its unit level set is not
/// convex. Undefined where any coordinate vanishes.
#[derive(Debug, Clone)]
pub struct GeometricMeanProbe {
    n: usize,
    p: usize,
}

pub fn geometric_mean_probe(n: usize, p: usize) -> Result<GeometricMeanProbe> {
    check_dims(n, p)?;
    Ok(GeometricMeanProbe { n, p })
}

impl HomogeneousLagrangian for GeometricMeanProbe {
    fn dim(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.p
    }
    fn name(&self) -> &str {
        "geometric_mean"
    }
    fn smoothness(&self) -> &str {
        "smooth off the coordinate hyperplanes"
    }
    fn in_domain(&self, _x: &[f64], y: &KVector) -> bool {
        y.coords().iter().all(|&c| c != 0.0)
    }

    fn value(&self, _x: &[f64], y: &KVector) -> Result<f64> {
        let m = y.coords().len() as f64;
        let log_sum: f64 = y.coords().iter().map(|c| c.abs().ln()).sum();
        Ok((log_sum / m).exp())
    }

    fn gradient(&self, x: &[f64], y: &KVector) -> Result<KCovector> {
        if !self.in_domain(x, y) {
            return Err(Error::domain("geometric-mean probe is not differentiable at a zero coordinate"));
        }
        let l = self.value(x, y)?;
        let m = y.coords().len() as f64;
        KCovector::from_coords(self.n, self.p, y.coords().iter().map(|c| l / (m * c)).collect())
    }

    fn hessian(&self, x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        if !self.in_domain(x, y) {
            return Err(Error::domain("geometric-mean probe is not differentiable at a zero coordinate"));
        }
        let l = self.value(x, y)?;
        let c = y.coords();
        let m = c.len();
        let mf = m as f64;
        Ok(DMatrix::from_fn(m, m, |i, j| {
            let base = l / (mf * mf * c[i] * c[j]);
            if i == j {
                base - l / (mf * c[i] * c[i])
            } else {
                base
            }
        }))
    }
}

/// ‖y‖², which is homogeneous of degree two. Used to exercise the residual detectors.
#[derive(Debug, Clone)]
pub struct SquaredNormProbe {
    n: usize,
    p: usize,
}

pub fn squared_norm_probe(n: usize, p: usize) -> Result<SquaredNormProbe> {
    check_dims(n, p)?;
    Ok(SquaredNormProbe { n, p })
}

impl HomogeneousLagrangian for SquaredNormProbe {
    fn dim(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.p
    }
    fn name(&self) -> &str {
        "squared_norm"
    }

    fn value(&self, _x: &[f64], y: &KVector) -> Result<f64> {
        Ok(y.coords().iter().map(|c| c * c).sum())
    }

    fn gradient(&self, _x: &[f64], y: &KVector) -> Result<KCovector> {
        KCovector::from_coords(self.n, self.p, y.coords().iter().map(|c| 2.0 * c).collect())
    }

    fn hessian(&self, _x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        let m = y.coords().len();
        Ok(DMatrix::identity(m, m) * 2.0)
    }
}

/// A first-order density F(x₁…x_p, f₁…f_{n−p}, ∇f) for graphs of f: ℝᵖ → ℝ^{n−p}.
pub trait GraphDensity: Send + Sync {
    /// Parameter dimension p.
    fn base_dim(&self) -> usize;
    /// Ambient dimension n.
    fn dim(&self) -> usize;
    fn name(&self) -> &str;

    fn value(&self, base: &[f64], values: &[f64], slopes: &Slopes) -> f64;

    /// ∂F/∂q with the same layout as `slopes`.
    fn slope_gradient(&self, base: &[f64], values: &[f64], slopes: &Slopes) -> Slopes {
        let h = FD_RELATIVE_STEP * slopes.norm().max(1.0);
        Slopes::from_fn(slopes.nrows(), slopes.ncols(), |i, j| {
            let mut plus = slopes.clone();
            let mut minus = slopes.clone();
            plus[(i, j)] += h;
            minus[(i, j)] -= h;
            (self.value(base, values, &plus) - self.value(base, values, &minus)) / (2.0 * h)
        })
    }
}

/// F ≡ 1: the projected p-volume.
#[derive(Debug, Clone)]
pub struct UnitDensity {
    n: usize,
    p: usize,
}

pub fn unit_density(n: usize, p: usize) -> Result<UnitDensity> {
    check_dims(n, p)?;
    Ok(UnitDensity { n, p })
}

impl GraphDensity for UnitDensity {
    fn base_dim(&self) -> usize {
        self.p
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn name(&self) -> &str {
        "unit"
    }
    fn value(&self, _base: &[f64], _values: &[f64], _slopes: &Slopes) -> f64 {
        1.0
    }
    fn slope_gradient(&self, _base: &[f64], _values: &[f64], slopes: &Slopes) -> Slopes {
        Slopes::zeros(slopes.nrows(), slopes.ncols())
    }
}

/// Area density of a graph, F(q) = √det(I + q qᵀ).
///
/// For hypersurfaces (n − p = 1) this is the minimal-surface density √(1 + |q|²).
#[derive(Debug, Clone)]
pub struct GraphAreaDensity {
    n: usize,
    p: usize,
}

pub fn graph_area_density(n: usize, p: usize) -> Result<GraphAreaDensity> {
    check_dims(n, p)?;
    Ok(GraphAreaDensity { n, p })
}

impl GraphAreaDensity {
    fn gram(&self, slopes: &Slopes) -> DMatrix<f64> {
        DMatrix::identity(self.p, self.p) + slopes * slopes.transpose()
    }
}

impl GraphDensity for GraphAreaDensity {
    fn base_dim(&self) -> usize {
        self.p
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn name(&self) -> &str {
        "graph_area"
    }

    fn value(&self, _base: &[f64], _values: &[f64], slopes: &Slopes) -> f64 {
        self.gram(slopes).determinant().sqrt()
    }

    // d log det G = 2 tr(qᵀ G⁻¹ dq), so ∂F/∂q = F · G⁻¹ q.
    fn slope_gradient(&self, base: &[f64], values: &[f64], slopes: &Slopes) -> Slopes {
        let f = self.value(base, values, slopes);
        let gram = self.gram(slopes);
        let solved = gram
            .cholesky()
            .map(|c| c.solve(slopes))
            .expect("I + q qᵀ is positive definite");
        solved * f
    }
}

/// Density given by a closure; slope gradient by finite differences.
pub struct FnDensity<F> {
    n: usize,
    p: usize,
    name: String,
    func: F,
}

pub fn fn_density<F>(n: usize, p: usize, name: impl Into<String>, func: F) -> Result<FnDensity<F>>
where
    F: Fn(&[f64], &[f64], &Slopes) -> f64 + Send + Sync,
{
    check_dims(n, p)?;
    Ok(FnDensity {
        n,
        p,
        name: name.into(),
        func,
    })
}

impl<F> GraphDensity for FnDensity<F>
where
    F: Fn(&[f64], &[f64], &Slopes) -> f64 + Send + Sync,
{
    fn base_dim(&self) -> usize {
        self.p
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn value(&self, base: &[f64], values: &[f64], slopes: &Slopes) -> f64 {
        (self.func)(base, values, slopes)
    }
}

impl<D: GraphDensity + ?Sized> GraphDensity for Box<D> {
    fn base_dim(&self) -> usize {
        (**self).base_dim()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn value(&self, base: &[f64], values: &[f64], slopes: &Slopes) -> f64 {
        (**self).value(base, values, slopes)
    }
    fn slope_gradient(&self, base: &[f64], values: &[f64], slopes: &Slopes) -> Slopes {
        (**self).slope_gradient(base, values, slopes)
    }
}

/// Sign (−1)^{p−ı} relating the coordinate y^{1…ı̂…p, p+ȷ} of a graph tangent to ∂f_ȷ/∂x_ı.
pub fn slope_sign(p: usize, i: usize) -> f64 {
    if (p - i).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The multi-index 1…ı̂…p, p+ȷ (1-based ı and ȷ).
pub fn slope_index(n: usize, p: usize, i: usize, j: usize) -> Result<MultiIndex> {
    let axes = (1..=p).filter(|&k| k != i).chain(std::iter::once(p + j)).collect();
    MultiIndex::new(n, axes)
}

/// L(x, y) = y^{1…p} · F(x, q) with slopes recovered from the p-vector,
/// q[ı][ȷ] = (−1)^{p−ı} y^{1…ı̂…p, p+ȷ} / y^{1…p}.
pub struct GraphLift<D> {
    density: D,
    n: usize,
    p: usize,
    /// `positions[ı][ȷ]` is the coordinate slot of y^{1…ı̂…p, p+ȷ}.
    positions: Vec<Vec<usize>>,
    name: String,
}

pub fn graph_lift<D: GraphDensity>(density: D) -> Result<GraphLift<D>> {
    let (n, p) = (density.dim(), density.base_dim());
    check_dims(n, p)?;
    let positions = (1..=p)
        .map(|i| {
            (1..=n - p)
                .map(|j| slope_index(n, p, i, j).map(|m| m.position()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let name = format!("graph_lift({})", density.name());
    Ok(GraphLift {
        density,
        n,
        p,
        positions,
        name,
    })
}

impl<D: GraphDensity> GraphLift<D> {
    pub fn density(&self) -> &D {
        &self.density
    }

    /// Slopes encoded by `y`, after checking the graph orientation y^{1…p} > 0.
    pub fn slopes(&self, y: &KVector) -> Result<Slopes> {
        let leading = y.coords()[0];
        if !(leading > 0.0) {
            return Err(Error::Orientation { leading });
        }
        Ok(Slopes::from_fn(self.p, self.n - self.p, |i, j| {
            slope_sign(self.p, i + 1) * y.coords()[self.positions[i][j]] / leading
        }))
    }
}

impl<D: GraphDensity> HomogeneousLagrangian for GraphLift<D> {
    fn dim(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.p
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn in_domain(&self, _x: &[f64], y: &KVector) -> bool {
        y.coords()[0] > 0.0
    }

    fn value(&self, x: &[f64], y: &KVector) -> Result<f64> {
        let q = self.slopes(y)?;
        Ok(y.coords()[0] * self.density.value(&x[..self.p], &x[self.p..], &q))
    }

    fn gradient(&self, x: &[f64], y: &KVector) -> Result<KCovector> {
        let q = self.slopes(y)?;
        let (base, values) = (&x[..self.p], &x[self.p..]);
        let f = self.density.value(base, values, &q);
        let df = self.density.slope_gradient(base, values, &q);
        let mut coords = vec![0.0; y.coords().len()];
        let mut leading = f;
        for i in 0..self.p {
            let sign = slope_sign(self.p, i + 1);
            for j in 0..self.n - self.p {
                coords[self.positions[i][j]] = sign * df[(i, j)];
                leading -= q[(i, j)] * df[(i, j)];
            }
        }
        coords[0] = leading;
        KCovector::from_coords(self.n, self.p, coords)
    }

    /// Differences of the analytic gradient at the representative with
    /// y^{1…p} = 1, using per-coordinate steps so that no stencil leaves the
    /// chart. Hess L(λy) = Hess L(y)/λ restores the scale, and the oblique
    /// projector P = I − y ∇Lᵀ/L removes the stencil error along y, where
    /// Hess L · y = 0 holds exactly.
    fn hessian(&self, x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        let leading = y.coords()[0];
        if !(leading > 0.0) {
            return Err(Error::Orientation { leading });
        }
        let unit = y.scaled(1.0 / leading);
        let m = unit.coords().len();
        let mut out = DMatrix::zeros(m, m);
        for k in 0..m {
            let h = if k == 0 {
                FD_RELATIVE_STEP
            } else {
                FD_RELATIVE_STEP * unit.coords()[k].abs().max(1.0)
            };
            let mut plus = unit.coords().to_vec();
            let mut minus = unit.coords().to_vec();
            plus[k] += h;
            minus[k] -= h;
            let gp = self.gradient(x, &KVector::from_coords(self.n, self.p, plus)?)?;
            let gm = self.gradient(x, &KVector::from_coords(self.n, self.p, minus)?)?;
            for (j, (a, b)) in gp.coords().iter().zip(gm.coords()).enumerate() {
                out[(j, k)] = (a - b) / (2.0 * h);
            }
        }
        let sym = (&out + out.transpose()) * 0.5;
        let g = self.gradient(x, &unit)?;
        let value = self.value(x, &unit)?;
        let yv = DMatrix::from_column_slice(m, 1, unit.coords());
        let gv = DMatrix::from_column_slice(m, 1, g.coords());
        let projector = DMatrix::identity(m, m) - &yv * gv.transpose() / value;
        Ok(projector.transpose() * sym * projector / leading)
    }
}

impl<L: HomogeneousLagrangian + ?Sized> HomogeneousLagrangian for Box<L> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn smoothness(&self) -> &str {
        (**self).smoothness()
    }
    fn in_domain(&self, x: &[f64], y: &KVector) -> bool {
        (**self).in_domain(x, y)
    }
    fn value(&self, x: &[f64], y: &KVector) -> Result<f64> {
        (**self).value(x, y)
    }
    fn gradient(&self, x: &[f64], y: &KVector) -> Result<KCovector> {
        (**self).gradient(x, y)
    }
    fn hessian(&self, x: &[f64], y: &KVector) -> Result<DMatrix<f64>> {
        (**self).hessian(x, y)
    }
}

/// |L(x, y) − ⟨∂L/∂y, y⟩|, which vanishes for degree-one homogeneous L.
pub fn euler_residual<L: HomogeneousLagrangian + ?Sized>(lagrangian: &L, x: &[f64], y: &KVector) -> Result<f64> {
    let value = lagrangian.eval(x, y)?;
    let grad = lagrangian.grad(x, y)?;
    Ok((value - pair(&grad, y)?).abs())
}

/// max_λ |L(x, λy) − λL(x, y)| / (λ‖y‖).
pub fn homogeneity_residual<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    y: &KVector,
    lambdas: &[f64],
) -> Result<f64> {
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::domain(format!("scale factor {l} is not positive")));
    }
    let base = lagrangian.eval(x, y)?;
    let norm = y.norm();
    let mut worst: f64 = 0.0;
    for &lambda in lambdas {
        let scaled = lagrangian.eval(x, &y.scaled(lambda))?;
        worst = worst.max((scaled - lambda * base).abs() / (lambda * norm));
    }
    Ok(worst)
}

/// The areolar p-form ℓ = Σ_I ∂L/∂y^I dx^I, viewed as a field over the Grassmannian.
pub struct AreolarForm<'a, L: ?Sized> {
    lagrangian: &'a L,
}

pub fn areolar_form<L: HomogeneousLagrangian + ?Sized>(lagrangian: &L) -> AreolarForm<'_, L> {
    AreolarForm { lagrangian }
}

impl<L: HomogeneousLagrangian + ?Sized> AreolarForm<'_, L> {
    /// Coefficients ℓ_I(x, [y]); independent of the representative chosen.
    pub fn coefficients(&self, x: &[f64], point: &GrassmannPoint) -> Result<KCovector> {
        self.lagrangian.grad(x, point.representative())
    }

    /// ℓ(x, [y]) evaluated on p base vectors.
    pub fn evaluate(&self, x: &[f64], point: &GrassmannPoint, vectors: &[Vec<f64>]) -> Result<f64> {
        let coeffs = self.coefficients(x, point)?;
        pair(&coeffs, &wedge_vectors(vectors)?)
    }
}

/// Hessian of L² in the fiber: 2(∇L ∇Lᵀ + L · Hess L).
pub fn hessian_of_square<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    y: &KVector,
) -> Result<DMatrix<f64>> {
    let value = lagrangian.eval(x, y)?;
    let grad = lagrangian.grad(x, y)?;
    let hess = lagrangian.hess(x, y)?;
    let g = DMatrix::from_column_slice(grad.coords().len(), 1, grad.coords());
    Ok((&g * g.transpose() + hess * value) * 2.0)
}

/// Whether the smallest eigenvalue of Hess(L²) at (x, y) exceeds `tol`.
pub fn is_nondegenerate<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    y: &KVector,
    tol: f64,
) -> Result<bool> {
    let h2 = hessian_of_square(lagrangian, x, y)?;
    let smallest = SymmetricEigen::new(h2).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(smallest > tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const X3: [f64; 3] = [0.0, 0.0, 0.0];

    #[test]
    fn area_values_and_gradient() {
        let l = area_lagrangian(3, 2).unwrap();
        let y = KVector::from_coords(3, 2, vec![3.0, 4.0, 0.0]).unwrap();
        assert_eq!(l.eval(&X3, &y).unwrap(), 5.0);
        assert_eq!(l.grad(&X3, &y).unwrap().coords(), &[0.6, 0.8, 0.0]);
        assert_eq!(l.eval(&X3, &y.scaled(2.0)).unwrap(), 10.0);
        assert_eq!(l.grad(&X3, &y.scaled(2.0)).unwrap().coords(), &[0.6, 0.8, 0.0]);
    }

    #[test]
    fn constructors_validate() {
        assert!(area_lagrangian(3, 3).is_err());
        assert!(ellipsoid_lagrangian(3, 2, vec![1.0, 0.0, 2.0]).is_err());
        assert!(ellipsoid_lagrangian(3, 2, vec![1.0, -1.0, 2.0]).is_err());
        assert!(ellipsoid_lagrangian(3, 2, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_section_is_rejected() {
        let l = area_lagrangian(3, 2).unwrap();
        let zero = KVector::zeros(3, 2).unwrap();
        assert_eq!(l.eval(&X3, &zero), Err(Error::ZeroSection));
        assert_eq!(l.grad(&X3, &zero).unwrap_err(), Error::ZeroSection);
        assert_eq!(euler_residual(&l, &X3, &zero), Err(Error::ZeroSection));
        let wrong = KVector::zeros(4, 2).unwrap();
        assert!(matches!(l.eval(&X3, &wrong), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn ellipsoid_direct_evaluation() {
        let l = ellipsoid_lagrangian(3, 2, vec![1.0, 4.0, 9.0]).unwrap();
        let y = KVector::from_coords(3, 2, vec![1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(l.eval(&X3, &y).unwrap(), 14f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn ellipsoid_gradient_matches_finite_differences() {
        struct ValueOnly<'a>(&'a EllipsoidLagrangian);
        impl HomogeneousLagrangian for ValueOnly<'_> {
            fn dim(&self) -> usize {
                3
            }
            fn degree(&self) -> usize {
                2
            }
            fn name(&self) -> &str {
                "fd"
            }
            fn value(&self, x: &[f64], y: &KVector) -> Result<f64> {
                self.0.value(x, y)
            }
        }
        let l = ellipsoid_lagrangian(3, 2, vec![1.0, 4.0, 9.0]).unwrap();
        let y = KVector::from_coords(3, 2, vec![0.3, -1.1, 0.8]).unwrap();
        let analytic = l.grad(&X3, &y).unwrap();
        let fd = ValueOnly(&l).grad(&X3, &y).unwrap();
        let err = (&analytic - &fd).norm() / analytic.norm();
        assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn graph_lift_minimal_surface_in_r3() {
        let lift = graph_lift(graph_area_density(3, 2).unwrap()).unwrap();
        let area = area_lagrangian(3, 2).unwrap();
        let y = KVector::from_triple(1.0, -2.0, -3.0);
        let q = lift.slopes(&y).unwrap();
        assert_eq!((q[(0, 0)], q[(1, 0)]), (2.0, 3.0));
        let x = [0.0, 0.0, 0.0];
        assert_relative_eq!(lift.eval(&x, &y).unwrap(), 14f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(lift.eval(&x, &y).unwrap(), area.eval(&x, &y).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn graph_lift_of_unit_density_is_leading_coordinate() {
        let lift = graph_lift(unit_density(4, 2).unwrap()).unwrap();
        let y = KVector::from_coords(4, 2, vec![2.5, 1.0, -3.0, 0.2, 7.0, 1.0]).unwrap();
        assert_eq!(lift.eval(&[0.0; 4], &y).unwrap(), 2.5);
    }

    #[test]
    fn graph_lift_rejects_wrong_orientation() {
        let lift = graph_lift(graph_area_density(3, 2).unwrap()).unwrap();
        let y = KVector::from_triple(-1.0, 2.0, 3.0);
        assert!(matches!(lift.eval(&X3, &y), Err(Error::Orientation { .. })));
        let flat = KVector::from_triple(0.0, 2.0, 3.0);
        assert!(matches!(lift.eval(&X3, &flat), Err(Error::Orientation { .. })));
    }

    #[test]
    fn graph_lift_matches_gram_area_in_r4() {
        // f(x) = (2x¹ + x², x¹): J = [e₁ + 2e₃ + e₄, e₂ + e₃]
        let u1 = vec![1.0, 0.0, 2.0, 1.0];
        let u2 = vec![0.0, 1.0, 1.0, 0.0];
        let gram = [
            [crate::numerics::dot(&u1, &u1), crate::numerics::dot(&u1, &u2)],
            [crate::numerics::dot(&u2, &u1), crate::numerics::dot(&u2, &u2)],
        ];
        let oracle = (gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0]).sqrt();
        assert_relative_eq!(oracle, 8f64.sqrt(), max_relative = 1e-15);

        let y = wedge_vectors(&[u1, u2]).unwrap();
        let lift = graph_lift(graph_area_density(4, 2).unwrap()).unwrap();
        assert_relative_eq!(lift.eval(&[0.0; 4], &y).unwrap(), oracle, max_relative = 1e-12);
    }

    #[test]
    fn euler_residuals() {
        let area = area_lagrangian(3, 2).unwrap();
        let y = KVector::from_coords(3, 2, vec![3.0, 4.0, 0.0]).unwrap();
        assert!(euler_residual(&area, &X3, &y).unwrap() <= 1e-12);

        let probe = squared_norm_probe(3, 2).unwrap();
        let y = KVector::from_coords(3, 2, vec![1.0, 2.0, -2.0]).unwrap();
        assert_relative_eq!(euler_residual(&probe, &X3, &y).unwrap(), 9.0, max_relative = 1e-15);
    }

    #[test]
    fn homogeneity_residuals() {
        let area = area_lagrangian(3, 2).unwrap();
        let y = KVector::from_coords(3, 2, vec![3.0, 4.0, 0.0]).unwrap();
        assert_eq!(homogeneity_residual(&area, &X3, &y, &[0.5, 2.0, 10.0]).unwrap(), 0.0);

        let probe = squared_norm_probe(3, 2).unwrap();
        // |4‖y‖² − 2‖y‖²| / (2‖y‖) = ‖y‖
        assert_relative_eq!(homogeneity_residual(&probe, &X3, &y, &[2.0]).unwrap(), 5.0);

        assert!(matches!(
            homogeneity_residual(&area, &X3, &y, &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn areolar_coefficients_are_representative_independent() {
        let area = area_lagrangian(3, 2).unwrap();
        let form = areolar_form(&area);
        let a = GrassmannPoint::new(KVector::from_triple(3.0, 4.0, 0.0)).unwrap();
        let b = GrassmannPoint::new(KVector::from_triple(6.0, 8.0, 0.0)).unwrap();
        let ca = form.coefficients(&X3, &a).unwrap();
        assert_eq!(ca.triple().unwrap(), [0.6, 0.8, 0.0]);
        assert_eq!(ca, form.coefficients(&X3, &b).unwrap());
    }

    #[test]
    fn graph_lift_leading_coefficient_matches_finite_differences() {
        // ℓ₁₂ = F − Σ q ∂F/∂q, checked against a value-only difference quotient
        let lift = graph_lift(graph_area_density(3, 2).unwrap()).unwrap();
        let y = KVector::from_triple(1.3, -0.4, 0.9);
        let g = lift.grad(&X3, &y).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut plus = y.coords().to_vec();
            let mut minus = y.coords().to_vec();
            plus[k] += h;
            minus[k] -= h;
            let fd = (lift.eval(&X3, &KVector::from_coords(3, 2, plus).unwrap()).unwrap()
                - lift.eval(&X3, &KVector::from_coords(3, 2, minus).unwrap()).unwrap())
                / (2.0 * h);
            assert!((fd - g.coords()[k]).abs() < 1e-8, "slot {k}: {fd} vs {}", g.coords()[k]);
        }
    }

    #[test]
    fn nondegeneracy() {
        let y = KVector::from_coords(3, 2, vec![0.4, -1.0, 2.0]).unwrap();
        let area = area_lagrangian(3, 2).unwrap();
        let h2 = hessian_of_square(&area, &X3, &y).unwrap();
        assert!((h2 - DMatrix::identity(3, 3) * 2.0).norm() < 1e-12);
        assert!(is_nondegenerate(&area, &X3, &y, 1e-8).unwrap());

        assert!(!is_nondegenerate(&leading_coordinate(3, 2).unwrap(), &X3, &y, 1e-8).unwrap());

        let ell = ellipsoid_lagrangian(3, 2, vec![1.0, 4.0, 9.0]).unwrap();
        let h2 = hessian_of_square(&ell, &X3, &y).unwrap();
        assert!((h2 - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 8.0, 18.0]))).norm() < 1e-12);
        assert!(is_nondegenerate(&ell, &X3, &y, 1e-8).unwrap());
    }

    #[test]
    fn geometric_mean_probe_derivatives() {
        let probe = geometric_mean_probe(3, 2).unwrap();
        let y = KVector::from_coords(3, 2, vec![0.5, -2.0, 1.5]).unwrap();
        assert!(euler_residual(&probe, &X3, &y).unwrap() < 1e-14);
        let analytic = probe.hess(&X3, &y).unwrap();
        // Hessian against differences of the analytic gradient
        struct FdHess<'a>(&'a GeometricMeanProbe);
        impl HomogeneousLagrangian for FdHess<'_> {
            fn dim(&self) -> usize {
                3
            }
            fn degree(&self) -> usize {
                2
            }
            fn name(&self) -> &str {
                "fd"
            }
            fn value(&self, x: &[f64], y: &KVector) -> Result<f64> {
                self.0.value(x, y)
            }
            fn gradient(&self, x: &[f64], y: &KVector) -> Result<KCovector> {
                self.0.gradient(x, y)
            }
        }
        let fd = FdHess(&probe).hess(&X3, &y).unwrap();
        assert!((analytic - fd).norm() < 1e-8);
    }

    #[test]
    fn slope_signs() {
        assert_eq!(slope_sign(2, 1), -1.0);
        assert_eq!(slope_sign(2, 2), 1.0);
        assert_eq!(slope_sign(3, 1), 1.0);
        assert_eq!(slope_sign(3, 2), -1.0);
        assert_eq!(slope_index(3, 2, 1, 1).unwrap().axes(), &[2, 3]);
        assert_eq!(slope_index(4, 3, 2, 1).unwrap().axes(), &[1, 3, 4]);
    }
}
