//! The B-tree model of computation.
//!
//! A tree over a key universe is stored in an arena of nodes. Each node holds
//! up to `B - 1` sorted keys and one more child link than keys, subject to the
//! in-order condition: every key below child `i` lies strictly between the
//! node's keys `i - 1` and `i`. A single cursor walks the tree and every
//! structural change happens through a unit-cost operation charged to the
//! [`CostMeter`]:
//!
//! - move the cursor to a child or to the parent,
//! - rotate the edge between the cursor's node and its parent (re-cutting the
//!   key interval the child owns within the union of the two nodes' keys),
//! - split a node at an interior key, promoting it to the parent,
//! - join two adjacent siblings, demoting the separator key.
//!
//! With `B = 2` every node holds exactly one key and the legal operations
//! degenerate to binary-search-tree moves and single-key edge rotations.
//!
//! The higher-level tree algorithms in this crate additionally use a small set
//! of crate-internal node surgeries (cutting a node in two, absorbing a key
//! and child into a node). Each surgery call is charged one unit on the same
//! meter — cuts count as splits, absorptions as joins — so a meter total is
//! always the number of unit operations performed, whichever API produced
//! them. Failed operations are rejected before any cost accrues.

mod fuzz;
pub(crate) mod machine;
mod validate;

pub use fuzz::SplitMix;
pub use machine::Machine;
pub use validate::Violation;

use std::fmt;

/// A key from the universe `[1, N]`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Key(pub u32);

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Stable identifier of an arena node. Identifiers of deleted nodes are
/// tombstoned, never reused.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Ledger of unit-cost operations. Monotone non-decreasing; `total` is the
/// number of operation calls performed so far.
#[derive(Clone, Copy, Default, Debug, PartialEq, Eq)]
pub struct CostMeter {
    pub moves: u64,
    pub rotations: u64,
    pub splits: u64,
    pub joins: u64,
    /// Cursor initializations, one per search.
    pub inits: u64,
}

impl CostMeter {
    pub fn total(&self) -> u64 {
        self.moves + self.rotations + self.splits + self.joins + self.inits
    }

    pub fn snapshot(&self) -> MeterSnapshot {
        MeterSnapshot(*self)
    }
}

/// A frozen meter reading, used to measure the cost of an operation window.
#[derive(Clone, Copy, Debug)]
pub struct MeterSnapshot(CostMeter);

impl MeterSnapshot {
    /// Units spent since this snapshot was taken.
    pub fn spent(&self, now: &CostMeter) -> u64 {
        now.total() - self.0.total()
    }

    pub fn rotations_since(&self, now: &CostMeter) -> u64 {
        now.rotations - self.0.rotations
    }
}

/// One end of a rotation: how the child's key interval boundary moves.
///
/// `Promote(k)` hands the child's `k` boundary keys up to the parent;
/// `Demote(k)` pulls the parent's `k` nearest keys down into the child.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shift {
    Promote(u32),
    Demote(u32),
}

/// A rotation of the edge between the cursor's node and its parent, given as
/// independent shifts of the left and right ends of the child's key interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RotationSpec {
    pub left: Shift,
    pub right: Shift,
}

impl RotationSpec {
    pub fn new(left: Shift, right: Shift) -> Self {
        RotationSpec { left, right }
    }

    /// The identity rotation: no keys move, but the operation still costs one
    /// unit.
    pub fn identity() -> Self {
        RotationSpec {
            left: Shift::Promote(0),
            right: Shift::Promote(0),
        }
    }
}

/// Errors raised by machine operations. An operation that fails leaves the
/// tree, the cursor and the meter untouched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelError {
    /// The requested child index is out of range or the link is null.
    NoSuchChild,
    /// The cursor is at the root and the operation needs a parent.
    AtRoot,
    /// The operation would push a node above `B - 1` keys.
    Overflow,
    /// The operation would drain a node below 1 key.
    Underflow,
    /// Splitting needs at least three keys in the node.
    TooFewKeys,
    /// The split key must be interior (neither minimum nor maximum).
    BadSplitKey,
    /// The parent of the node being split is full.
    ParentFull,
    /// The two nodes to join are not adjacent children of the cursor's node.
    NotSiblings,
    /// Joining would exceed `B - 2` keys in total.
    TooManyKeys,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            ModelError::NoSuchChild => "no such child",
            ModelError::AtRoot => "cursor is at the root",
            ModelError::Overflow => "node would overflow",
            ModelError::Underflow => "node would underflow",
            ModelError::TooFewKeys => "node has fewer than three keys",
            ModelError::BadSplitKey => "split key must not be the minimum or maximum",
            ModelError::ParentFull => "parent node is full",
            ModelError::NotSiblings => "nodes are not adjacent siblings",
            ModelError::TooManyKeys => "joined node would exceed capacity",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for ModelError {}

/// Per-node augmentation record, maintained by the machine whenever a node or
/// one of its children changes. All summaries stop at marked children: a
/// marked node is the root of its own auxiliary tree and is opaque to the
/// tree above it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Aug {
    /// Keys in the subtree, not counting marked subtrees.
    pub size: u32,
    /// Height of the unmarked subtree for multiway trees; black height when
    /// the machine balances binary nodes by color.
    pub rank: u32,
    /// Minimum reference depth of a key in the unmarked subtree (only
    /// maintained when the machine carries a universe height).
    pub min_depth: u32,
    /// Maximum reference depth, likewise.
    pub max_depth: u32,
    /// Red balancing bit, used only by binary (B <= 3) balanced trees.
    pub red: bool,
    /// Set on the root node of an auxiliary tree.
    pub marked: bool,
}

/// A node of the arena: sorted keys, one more child slot than keys, a parent
/// link and the augmentation record.
#[derive(Clone, Debug)]
pub struct Node {
    pub keys: Vec<Key>,
    pub children: Vec<Option<NodeId>>,
    pub parent: Option<NodeId>,
    pub aug: Aug,
}

impl Node {
    pub fn key_count(&self) -> usize {
        self.keys.len()
    }
}
