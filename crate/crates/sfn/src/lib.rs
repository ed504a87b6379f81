//! Symbolic function networks.
//!
//! A model is a tree of parameterized elementary functions (power,
//! exponential, logarithm) whose root-level sum is the prediction. Trees are
//! grown greedily against a validation set, weights are fit by steepest
//! descent with momentum using exact tree-propagated gradients, and the
//! result can be printed as a plain formula.
//!
//! Modules, bottom up:
//!
//! - [`tree`]: the model, evaluation, structural edits, rendering and the text format.
//! - [`grad`]: forward traces, backward propagation and a finite-difference oracle.
//! - [`train`]: full-batch gradient descent with momentum.
//! - [`search`]: the FLK, FLY, FRS, B and FB builders and pruning.
//! - [`data`]: series averaging, scaling, lag windows and partitions.
//! - [`mlp`]: single-hidden-layer perceptron baselines (B-BP, ES-BP).
//! - [`harness`]: multi-seed experiments and table-shaped reports.
//! - [`check`], [`fixtures`]: random trees, the gradient check suite and small
//!   regression targets used by tests and examples.

pub mod check;
pub mod data;
pub mod error;
pub mod fixtures;
pub mod grad;
pub mod harness;
pub mod mlp;
pub mod search;
pub mod train;
pub mod tree;

pub use error::{Result, SfnError};
pub use grad::{batch_gradient, finite_diff_gradient, GradientVector};
pub use search::{Algorithm, SearchConfig, SearchData, SearchTrace};
pub use train::{mse, train, TrainConfig, TrainResult};
pub use tree::{FunctionKind, LinkId, LinkWeights, Parent, SfnModel};
