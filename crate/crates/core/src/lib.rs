//! Image segmentation as coalition formation in a hedonic game.
//!
//! The pipeline turns an image into a pixel-affinity graph ([`pixelgraph`]),
//! runs best-response dynamics to a stable partition ([`hedonic`]), projects
//! the partition onto binary foreground masks and scores them ([`projection`]),
//! and aggregates results over a dataset and a resolution sweep ([`harness`]).

pub mod error;
pub mod harness;
pub mod hedonic;
pub mod pixelgraph;
pub mod projection;
pub mod selftest;
pub mod synthetic;

pub use error::{Error, Result};
