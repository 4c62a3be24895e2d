//! JSON run configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use areolar_core::lagrangian::{
    area_lagrangian, ellipsoid_lagrangian, geometric_mean_probe, graph_area_density, graph_lift, leading_coordinate,
    unit_density, GraphDensity, HomogeneousLagrangian,
};
use areolar_core::surfaces::{GraphSurface, Monomial, PolynomialMap, QuadratureRule};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lagrangian: LagrangianSpec,
    /// Base point x; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagrangianName {
    Area,
    Ellipsoid,
    GraphArea,
    GraphUnit,
    Linear,
    GeometricMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianSpec {
    pub name: LagrangianName,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub params: LagrangianParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianParams {
    /// Ellipsoid weights in lexicographic multi-index order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Flat {},
    /// f_ȷ(u) = Σ_a slopes[ȷ][a] u_a
    Plane { slopes: Vec<Vec<f64>> },
    /// f_ȷ(u) = u₁⋯u_p
    Bilinear {},
    Polynomial { components: Vec<Vec<Monomial>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub graph: GraphSpec,
    /// One `[lo, hi]` per parameter axis; the unit cube when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub quadrature: QuadratureRule,
    /// Analytic value of the action, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    /// Expected convergence order, checked when three or more resolutions are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub seed: u64,
    /// Random p-vectors for the pointwise identities.
    pub samples: usize,
    pub rank_samples: usize,
    pub round_trip_samples: usize,
    pub convexity_pairs: usize,
    /// Interior points per convexity segment.
    pub convexity_steps: usize,
    pub closedness_points: usize,
    pub image_count: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100,
            rank_samples: 50,
            round_trip_samples: 50,
            convexity_pairs: 100,
            convexity_steps: 5,
            closedness_points: 20,
            image_count: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative to max(1, |L|).
    pub euler: f64,
    pub homogeneity: f64,
    /// Relative to max(1, |L|).
    pub hamiltonian: f64,
    pub rank_threshold: f64,
    pub convexity: f64,
    pub pullback: f64,
    pub closedness: f64,
    pub closedness_step: f64,
    pub round_trip: f64,
    pub image_level: f64,
    /// Relative to |action|.
    pub multisymplectic_action: f64,
    pub graph_action: f64,
    pub reference_action: f64,
    pub order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            euler: 1e-9,
            homogeneity: 1e-9,
            hamiltonian: 1e-9,
            rank_threshold: 1e-8,
            convexity: 1e-7,
            pullback: 1e-9,
            closedness: 1e-6,
            closedness_step: 1e-4,
            round_trip: 1e-7,
            image_level: 1e-10,
            multisymplectic_action: 1e-10,
            graph_action: 1e-6,
            reference_action: 1e-6,
            order: 0.3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Point-cloud path for `image`; defaults to the report path with a `.csv` extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let LagrangianSpec { name, n, p, params } = &self.lagrangian;
        if *p == 0 || p > n {
            return Err(CliError::Config(format!("degree p={p} must satisfy 1 ≤ p ≤ n={n}")));
        }
        if params.weights.is_some() && *name != LagrangianName::Ellipsoid {
            return Err(CliError::Config("`weights` only applies to the ellipsoid Lagrangian".into()));
        }
        if let Some(x) = &self.base_point {
            if x.len() != *n || x.iter().any(|c| !c.is_finite()) {
                return Err(CliError::Config(format!("base_point must hold {n} finite numbers")));
            }
        }
        let t = &self.tolerances;
        let all = [
            t.euler,
            t.homogeneity,
            t.hamiltonian,
            t.rank_threshold,
            t.convexity,
            t.pullback,
            t.closedness,
            t.closedness_step,
            t.round_trip,
            t.image_level,
            t.multisymplectic_action,
            t.graph_action,
            t.reference_action,
            t.order,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || t.closedness_step == 0.0 {
            return Err(CliError::Config("tolerances must be finite and non-negative".into()));
        }
        // build once so that shape errors surface as configuration errors
        self.build_lagrangian()?;
        if let Some(surface) = &self.surface {
            if surface.resolutions.is_empty() {
                return Err(CliError::Config("surface.resolutions is empty".into()));
            }
            self.build_surface(surface, surface.resolutions[0])?;
        }
        Ok(())
    }

    pub fn base_point(&self) -> Vec<f64> {
        self.base_point.clone().unwrap_or_else(|| vec![0.0; self.lagrangian.n])
    }

    pub fn build_lagrangian(&self) -> Result<Box<dyn HomogeneousLagrangian>, CliError> {
        let LagrangianSpec { name, n, p, params } = &self.lagrangian;
        let (n, p) = (*n, *p);
        let built: Box<dyn HomogeneousLagrangian> = match name {
            LagrangianName::Area => Box::new(area_lagrangian(n, p)?),
            LagrangianName::Ellipsoid => {
                let weights = params
                    .weights
                    .clone()
                    .ok_or_else(|| CliError::Config("ellipsoid requires params.weights".into()))?;
                Box::new(ellipsoid_lagrangian(n, p, weights)?)
            }
            LagrangianName::GraphArea => Box::new(graph_lift(graph_area_density(n, p)?)?),
            LagrangianName::GraphUnit => Box::new(graph_lift(unit_density(n, p)?)?),
            LagrangianName::Linear => Box::new(leading_coordinate(n, p)?),
            LagrangianName::GeometricMean => Box::new(geometric_mean_probe(n, p)?),
        };
        Ok(built)
    }

    /// Density F with ∫F du equal to the configured Lagrangian's action on graphs.
    pub fn build_density(&self) -> Result<Option<Box<dyn GraphDensity>>, CliError> {
        let LagrangianSpec { name, n, p, .. } = &self.lagrangian;
        if p >= n {
            return Ok(None);
        }
        Ok(match name {
            LagrangianName::Area | LagrangianName::GraphArea => Some(Box::new(graph_area_density(*n, *p)?)),
            LagrangianName::GraphUnit => Some(Box::new(unit_density(*n, *p)?)),
            _ => None,
        })
    }

    pub fn build_surface(&self, spec: &SurfaceSpec, resolution: usize) -> Result<GraphSurface, CliError> {
        let (n, p) = (self.lagrangian.n, self.lagrangian.p);
        if p >= n {
            return Err(CliError::Config(format!("graphs need p < n, got p={p}, n={n}")));
        }
        let codim = n - p;
        let map = match &spec.graph {
            GraphSpec::Flat {} => PolynomialMap::flat(p, codim)?,
            GraphSpec::Bilinear {} => PolynomialMap::multilinear(p, codim)?,
            GraphSpec::Plane { slopes } => {
                if slopes.len() != codim || slopes.iter().any(|row| row.len() != p) {
                    return Err(CliError::Config(format!("plane slopes must be {codim} rows of {p} numbers")));
                }
                PolynomialMap::linear(slopes)?
            }
            GraphSpec::Polynomial { components } => {
                if components.len() != codim {
                    return Err(CliError::Config(format!("polynomial needs {codim} components")));
                }
                PolynomialMap::new(p, components.clone())?
            }
        };
        let domain = match &spec.domain {
            Some(d) => {
                if d.len() != p {
                    return Err(CliError::Config(format!("domain needs {p} intervals")));
                }
                d.iter().map(|[lo, hi]| (*lo, *hi)).collect()
            }
            None => vec![(0.0, 1.0); p],
        };
        Ok(map.into_graph(domain, resolution)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_json(r#"{"lagrangian": {"name": "area", "n": 3, "p": 2}}"#).unwrap();
        assert_eq!(c.sampling.samples, 100);
        assert_eq!(c.base_point(), vec![0.0; 3]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2}, "extra": 1}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2, "colour": 1}}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2}, "sampling": {"sead": 1}}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2},
                "surface": {"graph": {"kind": "flat", "slopes": []}, "resolutions": [4]}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn shape_errors_are_config_errors() {
        let bad = [
            r#"{"lagrangian": {"name": "ellipsoid", "n": 3, "p": 2, "params": {"weights": [1, 2]}}}"#,
            r#"{"lagrangian": {"name": "ellipsoid", "n": 3, "p": 2}}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2, "params": {"weights": [1, 2, 3]}}}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 4}}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2}, "base_point": [0, 0]}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2},
                "surface": {"graph": {"kind": "plane", "slopes": [[1, 2, 3]]}, "resolutions": [4]}}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2},
                "surface": {"graph": {"kind": "flat"}, "resolutions": [1]}}"#,
            r#"{"lagrangian": {"name": "area", "n": 3, "p": 2},
                "surface": {"graph": {"kind": "flat"}, "resolutions": []}}"#,
        ];
        for text in bad {
            assert!(matches!(RunConfig::from_json(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{"lagrangian": {"name": "ellipsoid", "n": 3, "p": 2, "params": {"weights": [1, 2, 3]}},
            "surface": {"graph": {"kind": "plane", "slopes": [[2, 3]]}, "resolutions": [8, 16], "quadrature": "gauss2"}}"#;
        let c = RunConfig::from_json(text).unwrap();
        let again = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
