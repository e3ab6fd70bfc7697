//! Locate a noisy, timestamped transcript inside a long reference text,
//! align it symbol by symbol, and cut it into scored segments with
//! byte-exact pointers back into the original document.
//!
//! The stages are exposed individually:
//!
//! * [`normalize`] maps raw text and transcript words onto a small symbol
//!   alphabet, keeping an index back to the source bytes or words.
//! * [`suffix_array`] builds a linear-time suffix array (difference cover).
//! * [`locator`] finds close matches of every query position in the target
//!   and chains them to find the query's region.
//! * [`aligner`] computes a Levenshtein alignment restricted to blocks
//!   around the anchor chain.
//! * [`segmenter`] scores sentence boundaries and picks segments.
//! * [`manifest`] reads transcripts and writes cut records as JSON lines.
//! * [`pipeline`] ties the stages together.
//!
//! Time- and score-carrying types are generic over a floating point
//! [`Scalar`]; the aliases at the crate root fix it to `f64`.

pub mod aligner;
pub mod error;
pub mod locator;
pub mod manifest;
pub mod normalize;
pub mod pipeline;
pub mod scalar;
pub mod segmenter;
pub mod suffix_array;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use aligner::{AlignConfig, AlignMode, Alignment, EditOp, OpKind};
pub use locator::{AnchorChain, MatchPair};
pub use normalize::{NormalizedQuery, TextSource};
pub use pipeline::{PipelineConfig, PipelineSummary};
pub use suffix_array::{SuffixArray, SymbolSeq};

/// Timed transcript with times in `f64` seconds.
pub type TimedTranscript = manifest::TimedTranscript<f64>;
/// A single recognized word with `f64` times.
pub type TimedWord = manifest::TimedWord<f64>;
/// An output cut record with `f64` times.
pub type Cut = manifest::Cut<f64>;
/// One ASR chunk with `f64` window bounds.
pub type AudioChunk = manifest::AudioChunk<f64>;
/// Boundary candidate with `f64` times and scores.
pub type BoundaryCandidate = segmenter::BoundaryCandidate<f64>;
/// Segment candidate with `f64` times and scores.
pub type SegmentCandidate = segmenter::SegmentCandidate<f64>;
/// Segmenter settings with `f64` weights and bands.
pub type SegmenterConfig = segmenter::SegmenterConfig<f64>;
