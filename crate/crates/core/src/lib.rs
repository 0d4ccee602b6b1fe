//! Campus load-shedding toolkit.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! - [`data`]: hourly series, appliance inventories, CSV ingestion and a
//!   synthetic campus generator.
//! - [`disagg`]: appliance-inventory load estimates reconciled to feeder totals.
//! - [`reduce`]: per-building diurnal/statistical features, z-scoring and PCA.
//! - [`cluster`]: six clustering algorithms plus validity indices and k selection.
//! - [`forecast`]: ARIMA/SARIMA, an additive trend+seasonality model, a GRU,
//!   and rolling-origin evaluation.
//! - [`allocate`]: priority-weighted curtailment of a supply deficit.
//!
//! [`pipeline`] wires the stages together behind a single config.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod allocate;
pub mod cluster;
pub mod data;
pub mod disagg;
pub mod error;
pub mod forecast;
pub mod linalg;
pub mod pipeline;
pub mod reduce;
pub mod rng;

pub use error::{Error, Result};
