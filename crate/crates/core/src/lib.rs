//! Bow motion and audio analysis: feature extraction, comparison and 3D path
//! encoding for tracked cello bowing.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); recordings, feature
//! tracks and scenes are stored in `f64`. The aliases below name the `f64`
//! instantiations used throughout the file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod error;
pub mod features;
pub mod geom;
pub mod ingest;
pub mod live;
pub mod motion;
pub mod scalar;
pub mod scene;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec3 = geom::Vec3<f64>;
pub type UnitQuat = geom::UnitQuat<f64>;
pub type MotionSample = motion::MotionSample<f64>;
pub type MotionTrack = motion::MotionTrack<f64>;

pub type Vec3f = geom::Vec3<f32>;
pub type UnitQuatf = geom::UnitQuat<f32>;
pub type MotionSamplef = motion::MotionSample<f32>;
pub type MotionTrackf = motion::MotionTrack<f32>;
