//! Constraint-guided, search-based unit test generation for tensor APIs.
//!
//! The crate is organised along the pipeline:
//!
//! * [`catalog`] loads and validates per-parameter API constraints,
//! * [`sut`] parses and interprets instrumented modules under test,
//! * [`model`] holds test cases, runtime values and script rendering,
//! * [`generation`] synthesises valid or arbitrary arguments,
//! * [`search`] evolves test cases toward uncovered branch targets,
//! * [`compliance`] classifies values and test cases against the catalog,
//! * [`analytics`] implements the evaluation statistics,
//! * [`experiment`] wires the above into single runs and A/B campaigns.

pub mod analytics;
pub mod catalog;
pub mod compliance;
pub mod experiment;
pub mod generation;
pub mod literal;
pub mod model;
pub mod rng;
pub mod search;
pub mod sut;

mod ordered;

pub use catalog::{
    parse_catalog, validate_constraint, ApiConstraint, CatalogError, ConstraintCatalog,
    ContainerKind, DtypeName, ParameterConstraint, RawConstraint, Violation,
};
pub use compliance::{check_test_case, check_value, ComplianceReport, ValueViolation};
pub use generation::{GenConfig, GenContext, Mode};
pub use literal::Literal;
pub use model::{Scalar, Statement, StatementKind, TestCase, Value};
pub use search::{evolve, Archive, Budget, SearchConfig};
pub use sut::{parse_sut, BranchTarget, CallOutcome, OutcomeKind, SutError, SutModule};
