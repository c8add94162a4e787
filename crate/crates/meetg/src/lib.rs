#![allow(clippy::needless_range_loop)] // index loops read better for matrix code

//! Mixture of ELM experts with a trainable ELM gating network.
//!
//! An extreme learning machine (ELM) is a single-hidden-layer network whose
//! input weights are random and frozen; only the output weights are learned,
//! in closed form, as the minimum-norm least-squares solution against the
//! hidden-layer activations. This crate trains k such experts on the full
//! training set, teaches a second ELM (the gate) to score each expert from
//! its per-sample error, and combines expert outputs with the gate's
//! softmaxed weights at inference.
//!
//! Alongside the models themselves the crate carries the full experiment
//! harness used to benchmark them: CSV ingestion with per-dataset schema
//! configs, min-max normalization fitted per training fold, stratified
//! k-fold plans, a synthetic twonorm generator, precision/recall reporting,
//! an operation-count cost model, and cross-validation / sweep / baseline
//! comparison drivers. Everything randomized is reproducible from a 64-bit
//! seed, independent of thread count.

pub mod data;
pub mod elm;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod linalg;
pub mod mixture;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{matmul, pseudoinverse, solve_least_squares, Matrix};
