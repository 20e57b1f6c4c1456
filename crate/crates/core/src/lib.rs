//! A workbench for dynamic B-trees.
//!
//! The crate implements a multiway search tree machine whose unit-cost
//! operations are cursor moves, edge rotations, node splits and node joins,
//! together with the structures built on top of it:
//!
//! - [`model`] — the machine itself: arena storage, the single cursor, the
//!   unit-cost operation families and the cost meter.
//! - [`classic`] — classic balanced B-trees with whole-tree split and
//!   concatenate in `O(1 + log_B k)` metered cost.
//! - [`mod@reference`] — the implicit complete reference tree over the key
//!   universe, preferred-child bookkeeping and the interleave lower bound.
//! - [`belga`] — the Belga B-tree: a tree of auxiliary classic B-trees, one
//!   per preferred path, self-adjusting under searches.
//! - [`rbsim`] — a binary-search-tree simulation of the machine in which
//!   every multiway node becomes a red-black tree of logarithmic depth.
//! - [`staticmap`] — static block-connected mappings from binary trees to
//!   multiway trees, plus the pruned-traversal adversary walk.

pub mod belga;
pub mod classic;
pub mod model;
pub mod rbsim;
pub mod reference;
pub mod staticmap;

pub use model::{CostMeter, Key, Machine, MeterSnapshot, ModelError, NodeId, RotationSpec, Shift};
