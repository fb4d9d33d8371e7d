//! Group-fair top-k re-ranking.
//!
//! Starting from the highest-score-first (HSC) recommendation lists, the
//! search engines in [`search`] swap courses in and out of students' lists to
//! trade per-group opportunity imbalance against per-group quality loss.
//!
//! ```
//! use fairrank_core::{Dataset, GroupPartition, Instance, Method, SearchConfig};
//!
//! let dataset = Dataset::from_rows(&[
//!     vec![0.9, 0.8, 0.1],
//!     vec![0.9, 0.8, 0.1],
//!     vec![0.2, 0.3, 0.9],
//!     vec![0.2, 0.3, 0.9],
//! ])
//! .unwrap();
//! let partition = GroupPartition::new(vec![0, 0, 1, 1], 2).unwrap();
//! let instance = Instance::with_population_target(dataset, partition).unwrap();
//! let config = SearchConfig { k: 1, ..SearchConfig::with_method(Method::Gc, 0.5) };
//! let outcome = fairrank_core::optimize_from_hsc(&instance, &config).unwrap();
//! assert!(outcome.value <= 0.5);
//! ```

pub mod datagen;
pub mod error;
pub mod io;
pub mod model;
pub mod objectives;
pub mod report;
pub mod search;

pub use error::{Error, Result};
pub use model::{hsc_solution, Dataset, FairDistribution, GroupPartition, Instance, Move, Solution};
pub use objectives::{evaluate, NormKind, ObjectiveConfig, ObjectiveVectors};
pub use search::{optimize, optimize_from_hsc, Method, SearchConfig, SearchOutcome};
