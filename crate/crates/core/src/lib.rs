//! Learning to choose a symbolic integration sub-algorithm.
//!
//! The crate is organized as a pipeline:
//!
//! * [`expr`]: hash-consed expression DAGs, parsing, printing and the
//!   DAG-size objective;
//! * [`calculus`]: differentiation, the five-member integration portfolio
//!   and the differentiate-and-check verifier;
//! * [`datagen`]: FWD/BWD/IBP/SUB pair generators, constant normalization,
//!   deduplication, labeling and corpus assembly;
//! * [`encode`]: token sequences and trees for the models;
//! * [`nn`]: LSTM / child-sum TreeLSTM binary-relevance classifiers;
//! * [`select`]: probability-guided selection with fallback, the
//!   fixed-priority baseline and evaluation reports;
//! * [`pipeline`]: the `generate` / `train` / `eval` / `report` commands.

pub mod calculus;
pub mod config;
pub mod datagen;
pub mod encode;
pub mod expr;
pub mod nn;
pub mod pipeline;
pub mod select;

#[cfg(test)]
mod testutil;
