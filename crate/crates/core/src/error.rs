use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A vertex word that does not address a vertex of the tree.
    #[error("invalid vertex address {word}: {reason}")]
    InvalidAddress { word: String, reason: String },

    /// A query outside the certified region of a solved table.
    #[error("vertex {word} outside certified region (depth {depth} > {max_depth})")]
    OutOfRange {
        word: String,
        depth: usize,
        max_depth: usize,
    },

    /// The fixed-point or linear solver failed to converge within budget.
    #[error("solver did not converge: {0}")]
    Solver(String),

    /// Bracket too wide to answer the query (increase the solve depth).
    #[error("bracket insufficient: {0}")]
    BracketInsufficient(String),

    /// A size or iteration cap was exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// An invalid specification or configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
