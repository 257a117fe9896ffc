//! Turn teacher logits over a shared reference pool into small, bit-exact
//! label payloads.
//!
//! The pipeline is: score every reference row ([`scoring`]), keep a budgeted
//! subset ([`selection`]), derive the labels to ship ([`labeling`]), and pack
//! mask plus labels into a PLP1 container ([`codec`]). [`sim`] wires all of it
//! into a small Gaussian-mixture bench with softmax-regression teacher and
//! student models.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
mod error;
pub mod labeling;
pub mod matrix;
pub mod scoring;
pub mod selection;
pub mod sim;
pub mod table;

pub use error::{Error, Result};
pub use labeling::{ClassMatrix, EmptyClassPolicy, LabelSet};
pub use matrix::{class_histogram, read_logits, write_logits, LogitMatrix};
pub use scoring::{Metric, RankVector, ScoreVector};
pub use selection::{Direction, KeepRatio, Method, QuotaPlan, SelectionResult};
