//! Symmetry-family models for r^T contingency tables.
//!
//! Fits complete symmetry (S), quasi-symmetry (QS), ordinal quasi-symmetry
//! generalized by an f-divergence (OQS[f]), marginal homogeneity (MH),
//! marginal moment equality (ME) and marginal logistic (ML) models by
//! constrained maximum likelihood, and computes likelihood-ratio, Wald and
//! conditional statistics for them.
//!
//! ```
//! use symfit::{datasets, fit, ConstraintSystem, Model, SolverConfig};
//!
//! let doc = datasets::dysmenorrhea();
//! let u = doc.scores_or_default();
//! let model = Model::parse("poqs").unwrap();
//! let cs = ConstraintSystem::for_model(&model, 3, 3, &u).unwrap();
//! let result = fit(&doc.table, &cs, &SolverConfig::default()).unwrap();
//! assert!(result.converged);
//! assert_eq!(result.df, 15);
//! ```

// `!(x > 0.0)` deliberately rejects NaN as well as non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datasets;
pub mod divergence;
pub mod error;
pub mod format;
pub mod inference;
pub mod model;
pub mod simulate;
pub mod solver;
pub mod table;

pub use divergence::{f_divergence, validate_fspec, FSpec, FSpecDiagnostics};
pub use error::{Error, Result};
pub use format::TableDocument;
pub use inference::{
    chisq_sf, conditional_test, g_squared, wald_delta, wald_delta_at, StatisticKind, TestReport,
};
pub use model::{degrees_of_freedom, ConstraintSystem, Model};
pub use solver::{
    fit, fit_from, fit_loglinear_kl, recover_params, FitResult, Params, SolverConfig,
};
pub use table::{CellIndex, Orbit, ProbVector, ScoreVector, Table};
