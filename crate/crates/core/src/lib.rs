//! Venue scores: learn per-venue, per-year quality scores by regressing
//! sparse publication-count features against external metrics of interest
//! (faculty status, grant amounts, salaries).
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: ingest DBLP XML or the normalized tab-separated format into
//!   an immutable [`corpus::Corpus`] with dense integer ids.
//! - [`targets`]: turn affiliation, award and salary files into regression
//!   targets.
//! - [`design`]: build the sparse author-by-(venue, time) design matrix with
//!   author-credit weighting, temporal blocks or Gaussian splatting and venue
//!   size normalization.
//! - [`solver`]: robust losses, the SGD fitter and a dense ridge oracle.
//! - [`scores`]: expand weights into venue-year score tables, normalize and
//!   combine models, score authors and institutions.
//! - [`eval`]: rank correlations and co-authorship PageRank baselines.
//! - [`cluster`]: LDA topic vectors, k-means with silhouette sweeps and
//!   fingerprints.
//! - [`synth`]: a seeded synthetic corpus generator with planted ground truth.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod corpus;
pub mod design;
pub mod eval;
pub mod scores;
pub mod solver;
pub mod synth;
pub mod targets;

pub use corpus::{AuthorId, Corpus, PaperId, VenueId};
