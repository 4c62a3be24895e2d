//! Homogeneous Lagrangians on p-vectors, their Legendre transform, and the
//! multisymplectic forms on the dual bundle of p-covectors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exterior;
pub mod lagrangian;
pub mod legendre;
pub mod multisymplectic;
pub mod numerics;
pub mod surfaces;

pub use error::{Error, Result};
pub use exterior::{GrassmannPoint, KCovector, KVector, MultiIndex};
pub use lagrangian::{GraphDensity, HomogeneousLagrangian, Slopes};
pub use legendre::{ConvexityCertificate, LegendreImagePoint, RankReport};
pub use multisymplectic::{AlternatingForm, FormField, TotalSpaceChart, TotalVector};
pub use surfaces::{GraphSurface, ParametricGrid, QuadratureConfig, QuadratureRule};
