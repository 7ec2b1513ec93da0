//! Topological segmentation and clusterwise demand forecasting.
//!
//! The crate houses the algorithmic pipeline end to end:
//!
//! * [`ingest`] — event-log parsing, period aggregation, per-user
//!   recency/frequency/monetary series and quintile scores.
//! * [`tda`] — sliding-window delay embeddings, Vietoris–Rips persistent
//!   homology in dimensions 0 and 1, and fixed-length barcode features.
//! * [`cluster`] — Lloyd's k-means with k-means++ seeding and elbow-method
//!   selection of the cluster count.
//! * [`ensemble`] — consensus clustering over several base partitions via
//!   relabel-voting or pairwise co-association, followed by a Gaussian
//!   mixture fit (`gmm_voting`, `gmm_pair`).
//! * [`forecast`] — matrix factorization with autoregressive factor dynamics
//!   (fit, forecast, single-column loading fit), the Theta-method baseline,
//!   and RMSE.
//! * [`clusterwise`] — alternating per-cluster fitting and error-driven
//!   relabeling, plus a gradient-boosted classifier that routes unseen
//!   series to clusters.
//! * [`pipeline`] — the topological RFM stage: one base clustering per RFM
//!   dimension, ready for the consensus step.
//!
//! Everything here is deterministic given a seed and free of IO; file
//! formats, configuration and orchestration live in the companion CLI crate.
//! The crate builds without `std` (allocation required).

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod cluster;
pub mod clusterwise;
pub mod date;
pub mod ensemble;
mod error;
pub mod forecast;
pub mod ingest;
pub mod math;
pub mod pipeline;
pub mod series;
pub mod tda;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use error::{Error, Result};
