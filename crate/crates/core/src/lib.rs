//! Deterministic emulator of SIMD-slot leveled homomorphic evaluation with
//! exact cost accounting.
//!
//! The crate models ciphertexts as slot vectors with modulus levels and
//! counts every key-switching phase (Decompose / Permute / MultSum / ModDown),
//! multiplication and refresh. On top of the slot engine it builds:
//!
//! - diagonal-encoded homomorphic linear transforms with baby-step/giant-step
//!   scheduling and double hoisting ([`lintrans`]),
//! - the permutation transforms of blocked matrix multiplication and their
//!   diagonal-convergence decompositions that shrink rotation-key sets
//!   ([`permtrans`]),
//! - blocked n×n matrix multiplication with cached one-to-many operands
//!   ([`matmul`]),
//! - dataset packing and homomorphic covariance computation ([`covariance`]),
//! - the PowerMethod PCA pipeline with lazily planned Newton inverse-square-root
//!   normalization and eigen-shift deflation ([`pca`]).
//!
//! Everything is deterministic: quantization replaces stochastic noise, and
//! ledgers merge associatively so results are identical for any worker count.

pub mod covariance;
pub mod dense;
pub mod engine;
mod error;
pub mod lintrans;
pub mod matmul;
pub mod pca;
pub mod permtrans;
pub mod report;
pub mod synth;

pub use engine::{
    register_keys, CipherBlock, CostLedger, DecomposedBlock, EngineConfig, HoistedBlock,
    RotKeyRegistry, SlotEngine,
};
pub use error::{Error, Result};
