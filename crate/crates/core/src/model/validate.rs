use std::collections::HashSet;
use std::fmt;

use super::{Key, Machine, NodeId};

/// The first structural invariant a tree violates, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Node key count outside `[1, B-1]`.
    Occupancy { node: NodeId, keys: usize },
    /// Keys within a node are not strictly increasing.
    KeyOrder { node: NodeId },
    /// Child-slot count differs from key count plus one.
    ChildCount { node: NodeId },
    /// A child's parent link does not point back.
    ParentLink { parent: NodeId, child: NodeId },
    /// A key escapes the open interval its position implies.
    InOrder { node: NodeId, key: Key },
    /// A node is reachable twice (the graph is not a tree).
    Cycle { node: NodeId },
    /// The root has a dangling parent link.
    RootParent { root: NodeId },
    /// The cursor names a dead or unreachable node.
    CursorDead,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Occupancy { node, keys } => {
                write!(f, "{node} holds {keys} keys, outside [1, B-1]")
            }
            Violation::KeyOrder { node } => write!(f, "{node} keys are not strictly increasing"),
            Violation::ChildCount { node } => write!(f, "{node} child count != keys + 1"),
            Violation::ParentLink { parent, child } => {
                write!(f, "{child} does not point back to {parent}")
            }
            Violation::InOrder { node, key } => {
                write!(f, "key {key} in {node} violates the in-order condition")
            }
            Violation::Cycle { node } => write!(f, "{node} reachable more than once"),
            Violation::RootParent { root } => write!(f, "root {root} has a parent link"),
            Violation::CursorDead => write!(f, "cursor points at a dead or unreachable node"),
        }
    }
}

impl Machine {
    /// Check every structural invariant of the current tree, returning the
    /// first violation found. Purely diagnostic: costs nothing on the meter.
    pub fn validate(&self) -> Result<(), Violation> {
        let root = match self.root() {
            Some(r) => r,
            None => return Ok(()),
        };
        if self.node(root).parent.is_some() {
            return Err(Violation::RootParent { root });
        }
        let mut seen = HashSet::new();
        self.validate_subtree(root, None, None, &mut seen)?;
        match self.cursor() {
            Some(c) if self.is_live(c) && seen.contains(&c) => Ok(()),
            None => Ok(()),
            _ => Err(Violation::CursorDead),
        }
    }

    fn validate_subtree(
        &self,
        id: NodeId,
        lo: Option<Key>,
        hi: Option<Key>,
        seen: &mut HashSet<NodeId>,
    ) -> Result<(), Violation> {
        if !seen.insert(id) {
            return Err(Violation::Cycle { node: id });
        }
        let node = self.node(id);
        let n = node.keys.len();
        if n < 1 || n > self.max_keys() {
            return Err(Violation::Occupancy { node: id, keys: n });
        }
        if node.children.len() != n + 1 {
            return Err(Violation::ChildCount { node: id });
        }
        for w in node.keys.windows(2) {
            if w[0] >= w[1] {
                return Err(Violation::KeyOrder { node: id });
            }
        }
        for &key in &node.keys {
            if lo.is_some_and(|l| key <= l) || hi.is_some_and(|h| key >= h) {
                return Err(Violation::InOrder { node: id, key });
            }
        }
        for (slot, child) in node.children.iter().enumerate() {
            let child = match child {
                Some(c) => *c,
                None => continue,
            };
            if self.node(child).parent != Some(id) {
                return Err(Violation::ParentLink {
                    parent: id,
                    child,
                });
            }
            let clo = if slot == 0 { lo } else { Some(node.keys[slot - 1]) };
            let chi = if slot == n { hi } else { Some(node.keys[slot]) };
            self.validate_subtree(child, clo, chi, seen)?;
        }
        Ok(())
    }

    /// All keys of the subtree under `id` in sorted order, marked subtrees
    /// included (the whole tree is one in-order sequence).
    pub fn in_order_keys(&self, id: NodeId) -> Vec<Key> {
        let mut out = Vec::new();
        self.collect_in_order(id, &mut out);
        out
    }

    fn collect_in_order(&self, id: NodeId, out: &mut Vec<Key>) {
        let node = self.node(id);
        for (slot, child) in node.children.iter().enumerate() {
            if let Some(c) = child {
                self.collect_in_order(*c, out);
            }
            if slot < node.keys.len() {
                out.push(node.keys[slot]);
            }
        }
    }
}
