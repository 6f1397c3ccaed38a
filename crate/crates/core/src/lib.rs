//! Classifying graphs for non-geometric 3-manifold groups.
//!
//! NAH-graphs (hyperbolic pieces glued along cusps) and H-graphs (with Seifert
//! pieces) over exact rational arithmetic: validation, the balanced and integral
//! predicates, morphisms, minimization to the unique minimal graph, realization of
//! balanced graphs by integral ones, and bounded common-cover search.

pub mod canon;
pub mod cli;
pub mod catalog;
pub mod cover;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod hgraph;
pub mod io;
pub mod linear;
pub mod minimize;
pub mod morphism;
pub mod realize;
pub mod report;

pub use error::{Error, Result};
pub use report::{Report, Violation};
