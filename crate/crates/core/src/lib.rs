//! Social group detection for wide-area crowd video, built around sparse
//! keyframe annotations.
//!
//! The crate provides:
//!
//! - [`anno`]: the scene/track/group/interaction data model, JSON I/O, and
//!   keyframe interpolation;
//! - [`tiling`]: sliding-window tiling geometry for frames too large to
//!   process whole, with box clipping, coordinate remapping, and cross-tile
//!   duplicate suppression;
//! - [`eval`]: detection (AP/AR), tracking (CLEAR MOT, IDF1), and group
//!   detection (half-overlap P/R/F1) metrics plus report serialization;
//! - [`encoder`]: a from-scratch LSTM trajectory encoder trained with a
//!   triplet loss, with Monte-Carlo dropout sampling;
//! - [`pipeline`]: the global-to-local group detector — embedding graph,
//!   uncertainty-driven zoom-in, local interaction scoring, edge merging;
//! - [`sim`]: a synthetic crowd generator that plays the role of recorded
//!   footage: scenes with ground-truth groups, an oracle interaction scorer,
//!   and a detection/tracking corruptor.

pub mod anno;
pub mod encoder;
pub mod eval;
pub mod pipeline;
pub mod reference;
pub mod seed;
pub mod sim;
pub mod tiling;

mod error;

pub use error::{Error, Result};
