//! Allocation-only core of the `nrvq` no-reference video quality toolkit.
//!
//! Everything in this crate is a pure function of its inputs: distribution
//! fitting, natural-scene-statistics transforms on 8-bit luma planes, NIQE
//! model training and scoring, and temporal pooling of per-frame scores.
//! File formats, parsing and parallel scheduling live in the `nrvq` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod image;
pub mod math;
pub mod niqe;
pub mod pooling;

pub use error::{Error, Result};
pub use image::{LumaPlane, MscnField, ProductFields};
pub use math::{AggdParams, GgdParams, MvgModel};
pub use niqe::{FeatureVector, FrameScore, NiqeModel, NiqeSettings};
pub use pooling::{FrameDiagnostics, PooledScore, PoolingMethod};
