use thiserror::Error;

use crate::report::Report;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix {0}")]
    SingularMatrix(String),
    #[error("generators do not span the plane")]
    DegenerateLattice,
    #[error("cyclic symmetry order {0} is not one of 1, 2, 3, 4, 6")]
    InvalidOrder(u32),
    #[error("coverings do not compose: first ends at {first_target}, second starts at {second_source}")]
    MismatchedEnds { first_target: String, second_source: String },
    #[error("invalid target degree: {0}")]
    InvalidTarget(String),
    #[error("catalog does not declare {0}")]
    NotDeclared(String),
    #[error("unknown orbifold {0}")]
    UnknownOrbifold(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("unknown cusp {cusp} on {orbifold}")]
    UnknownCusp { orbifold: String, cusp: String },
    #[error("cusp {cusp} of piece {piece} is not paired")]
    UnpairedCusp { piece: String, cusp: String },
    #[error("cusp {cusp} of piece {piece} is paired more than once")]
    DuplicatePairing { piece: String, cusp: String },
    #[error("gluing {0} is not an orientation-reversing isomorphism of the cusp lattices")]
    NonIntegralGluing(String),
    #[error("graph is not balanced: {0}")]
    Unbalanced(String),
    #[error("cover does not satisfy the cusp-lattice property: {0}")]
    CoverMismatch(String),
    #[error("sublattice for edge {0} is not contained in the intersection lattice")]
    LatticeNotContained(String),
    #[error("input has {size} vertices, limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("base quotient of the degree refinement is not a tree")]
    BaseNotTree,
    #[error("degree refinements differ; no common cover exists")]
    IncompatibleRefinement,
    #[error("invalid {what}:\n{report}")]
    Invalid { what: String, report: Report },
    #[error("{0}")]
    Format(#[from] crate::io::FormatError),
}

pub type Result<T> = std::result::Result<T, Error>;
