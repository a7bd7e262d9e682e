//! Raptor codes over GF(2) with a systematic random LDPC pre-code: encoding,
//! ML decoding, analytical bounds on the full-decoding probability, and Monte
//! Carlo / exact-enumeration checks of those bounds.
//!
//! The bound evaluation is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`.

pub mod bounds;
pub mod cli;
pub mod codec;
pub mod degree;
pub mod gf2;
pub mod persist;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use codec::{CodedBlock, DecodeOutcome, Precode, RaptorConfig};
pub use degree::{DegreeDistribution, OmegaSpec};
pub use gf2::{BitMatrix, BitVec};
pub use scalar::Real;
pub use sim::{ChannelBec, SweepRecord};

/// Bound tables evaluated in `f64`.
pub type BoundTables = bounds::BoundTables<f64>;
/// Bound tables evaluated in `f32`.
pub type BoundTablesF32 = bounds::BoundTables<f32>;
/// A bound point evaluated in `f64`.
pub type BoundPoint = bounds::BoundPoint<f64>;
