use thiserror::Error;

/// Errors raised while building or evaluating the library's objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point lies outside the box on which a field or domain is defined.
    #[error("point {point:?} lies outside the field domain")]
    OutsideDomain { point: Vec<f64> },

    /// A Φ-function value was not finite (typically `exp_power` overflow).
    #[error("non-finite Φ-value at t = {t:e}{}", node_suffix(*.node))]
    Range { t: f64, node: Option<usize> },

    /// Invalid parameters for a field, Φ-function, domain or test function.
    #[error("invalid construction: {0}")]
    Construction(String),

    /// A support box, shifted or fattened, escapes the domain.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("derivative of order {order} is not available (supported up to {available})")]
    UnsupportedOrder { order: usize, available: usize },

    #[error("grid functions live on different domains")]
    DomainMismatch,

    /// An iterative solver hit its iteration cap.
    #[error("{solver} did not converge within {iterations} iterations")]
    NotConverged { solver: &'static str, iterations: usize },

    /// The input cannot be a Φ-function (for instance the Young conjugate diverges).
    #[error("not a Φ-function: {0}")]
    NotPhi(String),

    /// A precondition on the test function was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

fn node_suffix(node: Option<usize>) -> String {
    match node {
        Some(n) => format!(" (node {n})"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a grid node index to a range error.
    pub fn at_node(self, node: usize) -> Self {
        match self {
            Error::Range { t, .. } => Error::Range { t, node: Some(node) },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
