#![no_std]
#![forbid(unsafe_code)]

//! Building blocks for classification-driven dynamic spectrum access.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure,
//! deterministic algorithms. Every source of randomness is an explicit
//! seeded generator, usually derived with [`rng::stream`].
//!
//! - [`sigsynth`]: synthetic baseband I/Q frames for ten modulations.
//! - [`nnet`]: a small 1-D CNN with backpropagation, Adam, and elastic
//!   weight consolidation.
//! - [`outlier`]: FAST-MCD elliptic envelopes and k-means for unknown-signal
//!   detection on classifier features.
//! - [`separation`]: whitening and FastICA for two-signal mixtures.
//! - [`traffic`]: two-state Markov traffic profiles and their fusion with
//!   classifier decisions.
//! - [`dsa`]: the network simulator, the distributed slot-scheduling
//!   protocol, and the centralized TDMA benchmarks.

extern crate alloc;

pub mod dsa;
pub mod linalg;
pub(crate) mod math;
pub mod nnet;
pub mod outlier;
pub mod rng;
pub mod separation;
pub mod sigsynth;
pub mod traffic;

pub use num_complex::Complex64;
