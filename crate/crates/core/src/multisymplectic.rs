//! The tautological p-form θ = Σ_I p_I dx^I on ΛᵖT*ℝⁿ and Ω = dθ.
//!
//! Points of the total space are laid out as (x¹…xⁿ, p_I…) with the p_I in
//! lexicographic multi-index order; tangent vectors use the same layout.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{GrassmannPoint, KCovector, MultiIndex};
use crate::lagrangian::{areolar_form, HomogeneousLagrangian};
use crate::legendre::legendre_map;
use crate::numerics::{binomial, determinant, numerical_rank, singular_values};

/// Coordinates (x, p) on ΛᵖT*ℝⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TotalSpaceChart {
    n: usize,
    p: usize,
}

impl TotalSpaceChart {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::domain(format!("need 1 ≤ p ≤ n, got n={n}, p={p}")));
        }
        Ok(Self { n, p })
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    /// n + C(n, p)
    pub fn dim_total(&self) -> usize {
        self.n + binomial(self.n, self.p)
    }

    pub fn labels(&self) -> Vec<String> {
        (1..=self.n)
            .map(|i| format!("x{i}"))
            .chain(MultiIndex::all(self.n, self.p).iter().map(|m| format!("p{m}")))
            .collect()
    }

    /// Slot of dxⁱ for a 1-based axis.
    pub fn x_slot(&self, axis: usize) -> usize {
        axis - 1
    }

    /// Slot of dp_I.
    pub fn p_slot(&self, index: &MultiIndex) -> usize {
        self.n + index.position()
    }

    pub fn point(&self, x: &[f64], p: &KCovector) -> Result<Vec<f64>> {
        p.ensure_shape(self.n, self.p)?;
        if x.len() != self.n {
            return Err(Error::domain(format!("base point has {} coordinates, expected {}", x.len(), self.n)));
        }
        Ok(x.iter().chain(p.coords()).copied().collect())
    }
}

/// A tangent vector to the total space.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalVector(Vec<f64>);

impl TotalVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite tangent component"));
        }
        Ok(Self(components))
    }

    pub fn basis(chart: &TotalSpaceChart, slot: usize) -> Self {
        let mut v = vec![0.0; chart.dim_total()];
        v[slot] = 1.0;
        Self(v)
    }

    /// ∂/∂xⁱ for a 1-based axis.
    pub fn dx(chart: &TotalSpaceChart, axis: usize) -> Self {
        Self::basis(chart, chart.x_slot(axis))
    }

    /// ∂/∂p_I
    pub fn dp(chart: &TotalSpaceChart, index: &MultiIndex) -> Self {
        Self::basis(chart, chart.p_slot(index))
    }

    /// (v, w): base part `v`, fiber part `w`.
    pub fn from_parts(chart: &TotalSpaceChart, base: &[f64], fiber: &[f64]) -> Result<Self> {
        if base.len() != chart.n || fiber.len() != chart.dim_total() - chart.n {
            return Err(Error::domain("tangent vector parts do not match the chart"));
        }
        Self::new(base.iter().chain(fiber).copied().collect())
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }
}

/// A multilinear alternating form field on the total space.
pub trait AlternatingForm {
    fn degree(&self) -> usize;
    fn total_dim(&self) -> usize;
    fn evaluate(&self, point: &[f64], vectors: &[TotalVector]) -> Result<f64>;
}

/// Coefficient of a [`FormTerm`]: a constant or a scaled coordinate function.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    Coordinate { slot: usize, scale: f64 },
}

impl Coefficient {
    fn at(&self, point: &[f64]) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Coordinate { slot, scale } => scale * point[slot],
        }
    }
}

/// c(point) · dz^{f₁}∧…∧dz^{f_k} over total-space coordinate slots.
#[derive(Debug, Clone, PartialEq)]
pub struct FormTerm {
    pub coefficient: Coefficient,
    pub factors: Vec<usize>,
}

/// A form stored as an explicit list of terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    chart: TotalSpaceChart,
    degree: usize,
    terms: Vec<FormTerm>,
    label: String,
}

impl FormField {
    pub fn new(chart: TotalSpaceChart, degree: usize, terms: Vec<FormTerm>, label: impl Into<String>) -> Result<Self> {
        let dim = chart.dim_total();
        for term in &terms {
            if term.factors.len() != degree {
                return Err(Error::Arity {
                    expected: degree,
                    got: term.factors.len(),
                });
            }
            if term.factors.iter().any(|&f| f >= dim) {
                return Err(Error::domain("form factor outside the chart"));
            }
            if let Coefficient::Coordinate { slot, .. } = term.coefficient {
                if slot >= dim {
                    return Err(Error::domain("coefficient slot outside the chart"));
                }
            }
        }
        Ok(Self {
            chart,
            degree,
            terms,
            label: label.into(),
        })
    }

    pub fn chart(&self) -> &TotalSpaceChart {
        &self.chart
    }

    pub fn terms(&self) -> &[FormTerm] {
        &self.terms
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl AlternatingForm for FormField {
    fn degree(&self) -> usize {
        self.degree
    }

    fn total_dim(&self) -> usize {
        self.chart.dim_total()
    }

    fn evaluate(&self, point: &[f64], vectors: &[TotalVector]) -> Result<f64> {
        if vectors.len() != self.degree {
            return Err(Error::Arity {
                expected: self.degree,
                got: vectors.len(),
            });
        }
        let dim = self.total_dim();
        if point.len() != dim || vectors.iter().any(|v| v.0.len() != dim) {
            return Err(Error::domain(format!("expected total-space vectors of length {dim}")));
        }
        Ok(self
            .terms
            .iter()
            .map(|term| {
                let rows: Vec<Vec<f64>> = term
                    .factors
                    .iter()
                    .map(|&f| vectors.iter().map(|v| v.0[f]).collect())
                    .collect();
                term.coefficient.at(point) * determinant(&rows)
            })
            .sum())
    }
}

/// θ = Σ_I p_I dx^I.
pub fn theta(chart: &TotalSpaceChart) -> FormField {
    let terms = MultiIndex::all(chart.n, chart.p)
        .iter()
        .map(|idx| FormTerm {
            coefficient: Coefficient::Coordinate {
                slot: chart.p_slot(idx),
                scale: 1.0,
            },
            factors: idx.axes().iter().map(|&a| chart.x_slot(a)).collect(),
        })
        .collect();
    FormField {
        chart: *chart,
        degree: chart.p,
        terms,
        label: "theta".into(),
    }
}

/// Ω = dθ = Σ_I dp_I ∧ dx^I.
pub fn omega(chart: &TotalSpaceChart) -> FormField {
    let terms = MultiIndex::all(chart.n, chart.p)
        .iter()
        .map(|idx| FormTerm {
            coefficient: Coefficient::Constant(1.0),
            factors: std::iter::once(chart.p_slot(idx))
                .chain(idx.axes().iter().map(|&a| chart.x_slot(a)))
                .collect(),
        })
        .collect();
    FormField {
        chart: *chart,
        degree: chart.p + 1,
        terms,
        label: "omega".into(),
    }
}

/// Increasing tuples of length `k` from `0..dim`.
fn increasing_tuples(dim: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    MultiIndex::all(dim, k)
        .into_iter()
        .map(|m| m.axes().iter().map(|a| a - 1).collect())
        .collect()
}

/// Matrix of ξ ↦ ξ⌟form: column `a` holds form(e_a, e_{t₁}, …, e_{t_{k−1}})
/// over all increasing coordinate tuples t.
pub fn contraction_matrix<F: AlternatingForm + ?Sized>(form: &F, point: &[f64]) -> Result<DMatrix<f64>> {
    let k = form.degree();
    if k == 0 {
        return Err(Error::domain("contraction needs a form of degree ≥ 1"));
    }
    let dim = form.total_dim();
    let tuples = increasing_tuples(dim, k - 1);
    let basis = |slot: usize| {
        let mut v = vec![0.0; dim];
        v[slot] = 1.0;
        TotalVector(v)
    };
    let mut m = DMatrix::zeros(tuples.len(), dim);
    for a in 0..dim {
        for (row, tuple) in tuples.iter().enumerate() {
            let args: Vec<TotalVector> = std::iter::once(a).chain(tuple.iter().copied()).map(basis).collect();
            m[(row, a)] = form.evaluate(point, &args)?;
        }
    }
    Ok(m)
}

/// Whether ξ⌟form = 0 forces ξ = 0, with the rank of the contraction map.
pub fn nondegeneracy_check<F: AlternatingForm + ?Sized>(form: &F, point: &[f64]) -> Result<(bool, usize)> {
    let m = contraction_matrix(form, point)?;
    let rank = numerical_rank(&singular_values(&m), 1e-10);
    Ok((rank == form.total_dim(), rank))
}

/// dω(v₀, …, v_k) = Σ_i (−1)^i ∂_{v_i}[ω(v₀, …, v̂_i, …, v_k)] for constant
/// vector fields, with central differences of step `h`.
pub fn exterior_derivative_fd<F: AlternatingForm + ?Sized>(
    form: &F,
    point: &[f64],
    vectors: &[TotalVector],
    h: f64,
) -> Result<f64> {
    let k = form.degree();
    if vectors.len() != k + 1 {
        return Err(Error::Arity {
            expected: k + 1,
            got: vectors.len(),
        });
    }
    if !(h > 0.0) {
        return Err(Error::domain(format!("step {h} is not positive")));
    }
    let mut total = 0.0;
    for (i, direction) in vectors.iter().enumerate() {
        let rest: Vec<TotalVector> = vectors
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        let shifted = |sign: f64| -> Vec<f64> {
            point.iter().zip(&direction.0).map(|(a, d)| a + sign * h * d).collect()
        };
        let derivative = (form.evaluate(&shifted(1.0), &rest)? - form.evaluate(&shifted(-1.0), &rest)?) / (2.0 * h);
        total += if i % 2 == 0 { derivative } else { -derivative };
    }
    Ok(total)
}

/// |dω(v₀, …, v_k)| at `point`.
pub fn closedness_residual<F: AlternatingForm + ?Sized>(
    form: &F,
    point: &[f64],
    vectors: &[TotalVector],
    h: f64,
) -> Result<f64> {
    exterior_derivative_fd(form, point, vectors, h).map(f64::abs)
}

/// max over tuples of |((∂L/∂y)*θ)(v₁…v_p) − ℓ(x, [y])(v₁…v_p)|.
///
/// Base vectors are pushed forward along (x, y) ↦ (x, ∂L/∂y(x, y)); the fiber
/// part of the pushforward is the x-derivative of the gradient, by central
/// differences, which θ ignores but which is kept for completeness.
pub fn pullback_residual<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    y: &crate::exterior::KVector,
    tuples: &[Vec<Vec<f64>>],
) -> Result<f64> {
    let (n, p) = (lagrangian.dim(), lagrangian.degree());
    let chart = TotalSpaceChart::new(n, p)?;
    let image = legendre_map(lagrangian, x, y)?;
    let point = chart.point(x, &image.p)?;
    let theta = theta(&chart);
    let class = GrassmannPoint::from_ray(y.clone())?;
    let ell = areolar_form(lagrangian);

    let mut worst: f64 = 0.0;
    for tuple in tuples {
        if tuple.len() != p {
            return Err(Error::Arity {
                expected: p,
                got: tuple.len(),
            });
        }
        let lifted = tuple
            .iter()
            .map(|v| {
                let fiber = gradient_x_derivative(lagrangian, x, y, v)?;
                TotalVector::from_parts(&chart, v, &fiber)
            })
            .collect::<Result<Vec<_>>>()?;
        let pulled_back = theta.evaluate(&point, &lifted)?;
        let areolar = ell.evaluate(x, &class, tuple)?;
        worst = worst.max((pulled_back - areolar).abs());
    }
    Ok(worst)
}

fn gradient_x_derivative<L: HomogeneousLagrangian + ?Sized>(
    lagrangian: &L,
    x: &[f64],
    y: &crate::exterior::KVector,
    v: &[f64],
) -> Result<Vec<f64>> {
    if v.len() != x.len() {
        return Err(Error::domain("base vector length differs from the base point"));
    }
    let h = 1e-6 * crate::numerics::norm(x).max(1.0);
    let shift = |s: f64| -> Vec<f64> { x.iter().zip(v).map(|(a, b)| a + s * h * b).collect() };
    let plus = lagrangian.grad(&shift(1.0), y)?;
    let minus = lagrangian.grad(&shift(-1.0), y)?;
    Ok(plus
        .coords()
        .iter()
        .zip(minus.coords())
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::KVector;
    use crate::lagrangian::area_lagrangian;

    fn idx(n: usize, axes: &[usize]) -> MultiIndex {
        MultiIndex::new(n, axes.to_vec()).unwrap()
    }

    #[test]
    fn chart_layout() {
        let chart = TotalSpaceChart::new(3, 2).unwrap();
        assert_eq!(chart.dim_total(), 6);
        assert_eq!(chart.labels(), vec!["x1", "x2", "x3", "p12", "p13", "p23"]);
        assert_eq!(TotalSpaceChart::new(4, 3).unwrap().dim_total(), 8);
    }

    #[test]
    fn theta_examples() {
        let chart = TotalSpaceChart::new(3, 2).unwrap();
        let th = theta(&chart);
        let p = KCovector::from_coords(3, 2, vec![1.0, 0.0, 0.0]).unwrap();
        let pt = chart.point(&[0.3, 0.1, -2.0], &p).unwrap();
        let (d1, d2) = (TotalVector::dx(&chart, 1), TotalVector::dx(&chart, 2));
        assert_eq!(th.evaluate(&pt, &[d1.clone(), d2.clone()]).unwrap(), 1.0);
        assert_eq!(th.evaluate(&pt, &[d2.clone(), d1]).unwrap(), -1.0);
        let dp12 = TotalVector::dp(&chart, &idx(3, &[1, 2]));
        assert_eq!(th.evaluate(&pt, &[dp12, d2.clone()]).unwrap(), 0.0);
        assert!(matches!(th.evaluate(&pt, &[d2]), Err(Error::Arity { expected: 2, got: 1 })));
    }

    #[test]
    fn omega_examples() {
        let chart = TotalSpaceChart::new(3, 2).unwrap();
        let om = omega(&chart);
        let pt = vec![0.0; 6];
        let dp12 = TotalVector::dp(&chart, &idx(3, &[1, 2]));
        let (d1, d2, d3) = (
            TotalVector::dx(&chart, 1),
            TotalVector::dx(&chart, 2),
            TotalVector::dx(&chart, 3),
        );
        assert_eq!(om.evaluate(&pt, &[dp12.clone(), d1.clone(), d2.clone()]).unwrap(), 1.0);
        assert_eq!(om.evaluate(&pt, &[d1.clone(), d2.clone(), d3.clone()]).unwrap(), 0.0);

        let a = TotalVector::new(vec![0.3, -1.0, 0.2, 0.7, 1.1, -0.4]).unwrap();
        let b = TotalVector::new(vec![1.0, 0.5, -0.6, 0.0, 0.9, 2.0]).unwrap();
        let c = TotalVector::new(vec![-0.2, 0.8, 1.5, -1.3, 0.1, 0.6]).unwrap();
        let abc = om.evaluate(&pt, &[a.clone(), b.clone(), c.clone()]).unwrap();
        let bca = om.evaluate(&pt, &[b, c, a]).unwrap();
        assert!((abc - bca).abs() < 1e-14);
    }

    #[test]
    fn omega_is_nondegenerate() {
        for (n, p, dim) in [(3, 2, 6), (4, 2, 10), (4, 3, 8)] {
            let chart = TotalSpaceChart::new(n, p).unwrap();
            let pt = vec![0.5; chart.dim_total()];
            assert_eq!(nondegeneracy_check(&omega(&chart), &pt).unwrap(), (true, dim));
        }
    }

    #[test]
    fn volume_form_on_base_is_degenerate() {
        let chart = TotalSpaceChart::new(3, 2).unwrap();
        let vol = FormField::new(
            chart,
            3,
            vec![FormTerm {
                coefficient: Coefficient::Constant(1.0),
                factors: vec![0, 1, 2],
            }],
            "dx123",
        )
        .unwrap();
        assert_eq!(nondegeneracy_check(&vol, &[0.0; 6]).unwrap(), (false, 3));
    }

    #[test]
    fn d_theta_is_omega_and_d_omega_vanishes() {
        let chart = TotalSpaceChart::new(3, 2).unwrap();
        let pt = vec![0.1, -0.4, 0.9, 1.2, -0.3, 0.5];
        let vs: Vec<TotalVector> = [
            [0.3, -1.0, 0.2, 0.7, 1.1, -0.4],
            [1.0, 0.5, -0.6, 0.0, 0.9, 2.0],
            [-0.2, 0.8, 1.5, -1.3, 0.1, 0.6],
            [0.4, 0.4, -0.9, 0.2, -0.5, 1.0],
        ]
        .iter()
        .map(|v| TotalVector::new(v.to_vec()).unwrap())
        .collect();
        let d_theta = exterior_derivative_fd(&theta(&chart), &pt, &vs[..3], 1e-4).unwrap();
        let om = omega(&chart).evaluate(&pt, &vs[..3]).unwrap();
        assert!((d_theta - om).abs() < 1e-6, "{d_theta} vs {om}");
        assert!(closedness_residual(&omega(&chart), &pt, &vs, 1e-4).unwrap() < 1e-6);
    }

    #[test]
    fn non_closed_probe_is_flagged() {
        // p₂₃ dx¹∧dx², d = dp₂₃∧dx¹∧dx²
        let chart = TotalSpaceChart::new(3, 2).unwrap();
        let p23 = chart.p_slot(&idx(3, &[2, 3]));
        let form = FormField::new(
            chart,
            2,
            vec![FormTerm {
                coefficient: Coefficient::Coordinate { slot: p23, scale: 1.0 },
                factors: vec![0, 1],
            }],
            "p23 dx12",
        )
        .unwrap();
        let vs = [
            TotalVector::dp(&chart, &idx(3, &[2, 3])),
            TotalVector::dx(&chart, 1),
            TotalVector::dx(&chart, 2),
        ];
        let r = closedness_residual(&form, &[0.0; 6], &vs, 1e-4).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn closedness_argument_checks() {
        let chart = TotalSpaceChart::new(3, 2).unwrap();
        let vs = [TotalVector::dx(&chart, 1)];
        assert!(matches!(
            closedness_residual(&omega(&chart), &[0.0; 6], &vs, 1e-4),
            Err(Error::Arity { expected: 4, got: 1 })
        ));
    }

    #[test]
    fn pullback_area_example() {
        let area = area_lagrangian(3, 2).unwrap();
        let y = KVector::from_coords(3, 2, vec![3.0, 4.0, 0.0]).unwrap();
        let tuple = vec![vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]];
        let r = pullback_residual(&area, &[0.0; 3], &y, &tuple).unwrap();
        assert!(r <= 1e-12);
        let r2 = pullback_residual(&area, &[0.0; 3], &y.scaled(2.0), &tuple).unwrap();
        assert_eq!(r, r2);
    }
}
