//! Change-focused GUI test generation.
//!
//! Given a declarative [`model::AppModel`] and a [`impact::ChangeSet`], the
//! crate computes the GUI elements affected by the change, explores the app
//! with a deterministic [`simulator`], and generates length-3 event sequences
//! that exercise the affected elements. Baseline strategies and scoring are
//! included for comparison.

pub mod builder;
pub mod catgen;
pub mod corpus;
pub mod exploration;
pub mod impact;
pub mod metrics;
pub mod model;
pub mod runner;
pub mod simulator;
pub mod strategies;
