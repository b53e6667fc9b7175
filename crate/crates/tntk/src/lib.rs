//! Tree neural tangent kernels for soft decision tree ensembles.
//!
//! A soft tree routes every sample probabilistically through a perfect
//! binary tree of scaled-error-function splits and averages the leaf
//! values it reaches. This crate implements both sides of the infinite
//! ensemble picture:
//!
//! * the closed-form limiting kernel of an infinite ensemble
//!   ([`kernel::tntk_limit`]), together with the MLP-induced NTK and RBF
//!   baselines used for comparison,
//! * finite ensembles ([`tree::SoftTreeEnsemble`]) with exact analytic
//!   parameter gradients, their empirical tangent kernel, and full-batch
//!   gradient-descent training ([`training`]) for checking the finite
//!   model against the limiting theory,
//! * kernel ridge regression ([`regression`]) and the cross-validation
//!   benchmark protocol ([`dataset`]) driving the classification
//!   experiments.
//!
//! The crate is `no_std` + `alloc` compatible; all transcendental math
//! goes through `libm`. I/O, file formats, and the command-line workbench
//! live in the companion `tntk-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod regression;
pub mod rng;
pub mod special;
pub mod training;
pub mod tree;

pub use error::{Error, Result};
pub use kernel::{gram, Activation, GramMatrix, KernelSpec, Provenance};
pub use linalg::{Matrix, SymmetricMatrix};
pub use rng::CounterRng;
pub use tree::{SoftTreeEnsemble, TreeStructure, TreeTopology};
