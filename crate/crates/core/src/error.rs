use crate::model::Violation;
use crate::nodewise::LassoLogisticSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Indices out of range, self-edges, duplicate ids and similar malformed input.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("invalid label matrix: {0}")]
    Labels(String),

    /// The graph is well-formed but breaks one of the G1-G3 properties.
    #[error("model violates required properties: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("exact enumeration over {nodes} nodes exceeds the cap of {cap}")]
    TooLarge { nodes: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}", non_convergence_message(*.node, .solution))]
    NonConvergence {
        node: Option<usize>,
        solution: Box<LassoLogisticSolution>,
    },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a node id to a solver failure.
    pub fn at_node(self, s: usize) -> Self {
        match self {
            Error::NonConvergence { solution, .. } => Error::NonConvergence {
                node: Some(s),
                solution,
            },
            other => other,
        }
    }

    /// True for failures of a numerical routine rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Infeasible(_))
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

fn non_convergence_message(node: Option<usize>, sol: &LassoLogisticSolution) -> String {
    let at = node.map(|s| format!(" at node {s}")).unwrap_or_default();
    format!(
        "solver did not converge{at} after {} iterations (KKT residual {:.3e})",
        sol.iterations, sol.kkt_residual
    )
}
