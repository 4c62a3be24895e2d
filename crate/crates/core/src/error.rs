use thiserror::Error;

/// Errors raised by the exterior-algebra, Lagrangian, Legendre and surface layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected (n={expected_n}, p={expected_p}), got (n={n}, p={p})")]
    ShapeMismatch {
        expected_n: usize,
        expected_p: usize,
        n: usize,
        p: usize,
    },

    #[error("p-vector lies on the zero section")]
    ZeroSection,

    #[error("decomposability test not implemented for degree {p} in dimension {n}")]
    UnsupportedDegree { n: usize, p: usize },

    #[error("orientation outside the graph chart: leading coordinate {leading} is not positive")]
    Orientation { leading: f64 },

    #[error("no preimage under the Legendre map: residual {residual:e} after {iterations} iterations")]
    NoSolution { residual: f64, iterations: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("form of degree {expected} called with {got} arguments")]
    Arity { expected: usize, got: usize },

    #[error("degenerate cell {cell:?}: tangent p-vector vanishes")]
    DegenerateCell { cell: Vec<usize> },

    #[error("cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at_cell(self, cell: usize) -> Self {
        match self {
            Error::Cell { .. } => self,
            other => Error::Cell {
                cell,
                source: Box::new(other),
            },
        }
    }
}
