//! Collaborative eigenspace-based RFI cancellation.
//!
//! A base station characterizes its own transmission with singular spectrum
//! analysis, shares the leading eigenvectors with a radio telescope, and the
//! telescope projects its received data onto the orthogonal complement of
//! that subspace before reconstructing the time series.
//!
//! Modules follow the signal chain: [`signals`] and [`lte`] synthesize the
//! inputs, [`channel`] and [`channelizer`] model propagation and the
//! telescope back end, [`klt`] and [`cancel`] implement the cancellation,
//! and [`metrics`] scores it.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cancel;
pub mod channel;
pub mod channelizer;
pub mod dft;
pub mod error;
pub mod klt;
pub mod lte;
pub mod metrics;
pub mod rng;
pub mod signals;

pub use error::{Error, Result};
pub use signals::{ComplexSeries, PowerDb};
