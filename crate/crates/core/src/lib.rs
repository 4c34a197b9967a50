//! Counterfactual fairness auditing for LLM-based hiring pipelines.
//!
//! The crate covers both stages of a screening pipeline:
//!
//! - **retrieval**: resumes are ranked against job posts by embedding cosine
//!   similarity, and the audit measures how often demographic (or
//!   non-demographic) perturbations push a resume out of the top-n
//!   ([`retrieval::exclusion`]) and whether the top-x% of a pooled four-group
//!   corpus departs from a uniform group mix ([`retrieval::non_uniformity`]).
//! - **summarization**: summaries of original and perturbed resumes are scored
//!   with proxy measures ([`textmetrics`]) and compared with paired t-tests;
//!   the share of rejected nulls after multiple-comparison correction is the
//!   invariance-violation rate ([`stats::invariance_violation_rate`]).
//!
//! [`pipeline::run_audit`] composes every stage from a [`pipeline::RunConfig`].

pub mod backends;
pub mod corpus;
pub mod par;
pub mod perturb;
pub mod pipeline;
pub mod report;
pub mod retrieval;
pub mod seed;
pub mod stats;
pub mod textmetrics;

pub use corpus::{DemographicGroup, Gender, JobPost, Race, Resume, Source};
