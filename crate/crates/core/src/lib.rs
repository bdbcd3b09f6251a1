//! Localized narratives: captions in which every word carries a time
//! interval and the mouse-trace segment drawn while it was spoken.
//!
//! The crate covers the whole offline pipeline:
//!
//! - [`align`]: order-preserving matching of automatic (speech recognizer)
//!   words onto the manually typed caption.
//! - [`sync`]: timestamp transfer, per-word trace segments and the
//!   transcription quality gate.
//! - [`features`]: trace features for controlled captioning.
//! - [`metrics`]: ROUGE-L, ROUGE-1-F1, BLEU-1/4.
//! - [`analysis`]: localization histograms and caption richness.
//! - [`geometry`] and [`labelmap`]: trace segments to semantic label maps.
//! - [`corpus`]: the newline-delimited record format.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the file formats and the command
//! line tools use.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod analysis;
pub mod corpus;
pub mod error;
pub mod features;
pub mod geometry;
pub mod labelmap;
pub mod metrics;
pub mod model;
pub mod num;
pub mod sync;

pub use error::{Error, Result};
pub use num::Real;

pub type TimedWord = model::TimedWord<f64>;
pub type AutomaticTranscript = model::AutomaticTranscript<f64>;
pub type TracePoint = model::TracePoint<f64>;
pub type MouseTrace = model::MouseTrace<f64>;
pub type WordGrounding = model::WordGrounding<f64>;
pub type QcVerdict = model::QcVerdict<f64>;
pub type LocalizedNarrative = model::LocalizedNarrative<f64>;
pub type BoundingBox = model::BoundingBox<f64>;
pub type LocationVector = features::LocationVector<f64>;
pub type PseudoSegment = features::PseudoSegment<f64>;
pub type Histogram2D = analysis::Histogram2D<f64>;
pub type HistogramConfig = analysis::HistogramConfig<f64>;
pub type CaptionScores = metrics::CaptionScores<f64>;

pub type MouseTraceF32 = model::MouseTrace<f32>;
pub type LocalizedNarrativeF32 = model::LocalizedNarrative<f32>;
pub type LocationVectorF32 = features::LocationVector<f32>;
pub type Histogram2DF32 = analysis::Histogram2D<f32>;

pub use align::{align, alignment_cost, edit_distance, Matching};
pub use model::{tokenize, ManualTranscript, QcFailure};
pub use sync::{build_narrative, quality_gate, NarrativeMeta};
