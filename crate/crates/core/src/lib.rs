//! Utterance-level structured scoring for sequence labeling.
//!
//! An acoustic sequence `x` and a label sequence `y` are mapped to a single
//! fixed-length vector Ψ(x, y). Scorers rate that vector: a linear scorer
//! trained with a max-margin hinge and decoded exactly with Viterbi, or a
//! multilayer network that rescores candidate paths from a lattice. The
//! full-scale variant puts a frame-wise front-end network under Ψ and trains
//! both networks jointly.
//!
//! Batch work (decoding, per-utterance gradients) goes through [`par`], which
//! uses rayon when the `parallel` feature is on and plain iterators otherwise.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod features;
pub mod fsdnn;
pub mod gradcheck;
pub mod lattice;
pub mod linear;
pub mod metrics;
pub mod model;
pub mod neural;
pub mod par;
pub mod sdnn;
pub mod sequence;

pub use error::{Error, Result};
pub use features::{psi_first_order, psi_second_order, Order, StructuredFeature};
pub use lattice::{Lattice, LatticeArc, ScoredPath};
pub use linear::{LinearParams, LinearTrainConfig};
pub use metrics::{DistanceKind, corpus_per};
pub use neural::{MlpParams, SgdConfig};
pub use sdnn::{LossKind, SdnnTrainConfig};
pub use fsdnn::{FsdnnParams, FsdnnTrainConfig};
pub use sequence::{AcousticSequence, LabelSequence, PhonemeAlphabet, Utterance};
