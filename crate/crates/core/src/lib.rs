//! Numerical differential-geometry engine for the canonical pseudo- and
//! para-Kähler structure on tangent bundles.
//!
//! Given a chart-based pseudo- or para-Kähler surface (or 4-dimensional
//! product), the engine constructs the induced structure (J̃, g̃, Ω) on the
//! tangent bundle as coefficient fields on the doubled chart and verifies
//! the closed-form connection, curvature, Weyl and holomorphic-curvature
//! identities of that construction against a direct-chart oracle, using
//! exact forward-mode jet differentiation throughout.
//!
//! Modules:
//! - [`jet`]: truncated multivariate Taylor arithmetic (the derivative kernel)
//! - [`geometry`]: chart geometries, catalog, Levi-Civita data, Kähler audits
//! - [`lift`]: the tangent-bundle structure, splitting, lifts, bracket and
//!   symplectic audits
//! - [`curvature`]: lifted connection/curvature tensors and their oracles
//! - [`hodge`]: dimension-four bivector algebra, Weyl blocks, duality audits
//! - [`suite`]: named verification suites, deterministic sampling, reports

pub mod error;
pub mod jet;
pub mod jmat;
pub mod rng;

pub mod geometry;
pub mod lift;
pub mod curvature;
pub mod hodge;

pub use error::{EngineError, Result};
pub use jet::{Jet, JetError};
