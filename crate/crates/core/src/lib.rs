//! Tracking-by-detection core.
//!
//! Two online multi-object trackers, [`sort`] (Kalman prediction with IOU
//! association) and [`tracktor`] (regression-driven tracks with motion models
//! and appearance re-identification), the CLEAR-MOT / IDF1 evaluation suite in
//! [`metrics`], and a deterministic scenario generator in [`synth`].
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the command
//! line live in the `mottrack` crate.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assignment;
mod error;
pub mod geometry;
pub mod kalman;
mod linalg;
pub mod metrics;
pub mod sort;
pub mod synth;
pub mod tracktor;
mod types;

pub use error::{Error, Result};
pub use geometry::{apply_warp, iou, AffineWarp, BBox};
pub use types::{collect_trajectories, last_frame, Detection, FrameResult, Sequence, Trajectory};
