//! The Belga B-tree: a self-adjusting tree of auxiliary classic B-trees.
//!
//! Every preferred path of the reference tree is stored in one auxiliary
//! tree — a classic tree whose nodes summarize the minimum and maximum
//! reference depth below them — and the auxiliary trees are linked into a
//! single key-ordered tree-of-trees, marked at their roots. A search descends
//! by key order; whenever it would enter a marked child it first re-shapes
//! the paths the way the reference tree does: the current path is cut at the
//! depth just above the entered path's top, the detached deeper part stays
//! behind as its own auxiliary tree, and the entered path is merged into the
//! remainder. The only structural work a search ever does is this cut and
//! merge pair per path boundary, each `O(1 + log_B log N)` metered units.
//!
//! # Notes
//!
//! - The universe is padded to `2^height - 1` keys. Padded keys take part in
//!   the structure but searching them is rejected, so competitive accounting
//!   runs over the real universe.
//! - Initialization places every key in its own marked singleton arranged in
//!   the reference tree's shape (nothing is preferred yet), so no rotations
//!   are needed at any point; for `B >= 4` the meter's rotation counter stays
//!   zero forever.
//! - The mirrored [`ReferenceTree`] is pure bookkeeping; its upkeep costs
//!   nothing on the meter, and audits compare the auxiliary trees against its
//!   preferred paths exactly.

use std::collections::HashSet;
use std::fmt;

use crate::classic::{check_shape, merge_marked, separate_marked, tree_child};
use crate::model::{Key, Machine, NodeId};
use crate::reference::{height_for, ReferenceTree, SearchUpdate};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BelgaError {
    /// Universe or branching parameter out of range.
    BadParams,
    /// Key outside the real universe (padded keys included).
    OutOfUniverse(u32),
    /// Cut depth leaves all keys on one side.
    NothingToCut,
    /// The two paths do not meet at consecutive depths.
    NotAdjacent,
}

impl fmt::Display for BelgaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BelgaError::BadParams => write!(f, "bad universe or branching parameter"),
            BelgaError::OutOfUniverse(x) => write!(f, "key {x} outside the universe"),
            BelgaError::NothingToCut => write!(f, "no keys on both sides of the cut depth"),
            BelgaError::NotAdjacent => write!(f, "paths are not depth-adjacent"),
        }
    }
}

impl std::error::Error for BelgaError {}

/// Extreme key of the path segment deeper than `d`, by augmented descent.
fn deep_edge_key(m: &mut Machine, root: NodeId, d: u32, smallest: bool) -> Key {
    let mut cur = root;
    'descend: loop {
        let node_keys = m.keys(cur).len();
        let slots: Vec<usize> = if smallest {
            (0..=node_keys).collect()
        } else {
            (0..=node_keys).rev().collect()
        };
        for slot in slots {
            if let Some(c) = tree_child(m, cur, slot) {
                if m.aug(c).max_depth > d && m.aug(c).size > 0 {
                    m.charge_moves(1);
                    m.set_cursor(c);
                    cur = c;
                    continue 'descend;
                }
            }
            let key_idx = if smallest {
                (slot < node_keys).then_some(slot)
            } else {
                slot.checked_sub(1)
            };
            if let Some(i) = key_idx {
                let k = m.keys(cur)[i];
                if m.key_depth(k) > d {
                    return k;
                }
            }
        }
        unreachable!("no key deeper than the cut depth under this node");
    }
}

/// Cut the auxiliary tree rooted at `aux_root` at depth `d`: keys of depth at
/// most `d` stay in the returned top tree (re-attached where the original
/// hung), keys deeper move to a freshly marked bottom tree riding inside it.
pub fn cut_path_at_depth(
    m: &mut Machine,
    aux_root: NodeId,
    d: u32,
) -> Result<(NodeId, NodeId), BelgaError> {
    let aug = *m.aug(aux_root);
    if aug.min_depth > d || aug.max_depth <= d {
        return Err(BelgaError::NothingToCut);
    }
    let lo = deep_edge_key(m, aux_root, d, true);
    let hi = deep_edge_key(m, aux_root, d, false);
    let (top, bottom) = separate_marked(m, aux_root, lo, hi)
        .expect("the deep segment is nonempty");
    Ok((top.expect("shallow side holds keys"), bottom))
}

/// Merge the marked path `bottom` (hanging somewhere inside the tree under
/// `top_root`) into the path stored at `top_root`. The merged root is marked
/// and re-attached where `top_root` hung.
pub fn merge_path_pair(
    m: &mut Machine,
    top_root: NodeId,
    bottom: NodeId,
) -> Result<NodeId, BelgaError> {
    if !m.is_marked(bottom) || m.parent(bottom).is_none() {
        return Err(BelgaError::NotAdjacent);
    }
    let top_aug = *m.aug(top_root);
    let bottom_aug = *m.aug(bottom);
    if top_aug.max_depth + 1 != bottom_aug.min_depth {
        return Err(BelgaError::NotAdjacent);
    }
    Ok(merge_marked(m, top_root, bottom))
}

/// Outcome of one Belga search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchStats {
    /// Unit cost of this search on the meter.
    pub cost: u64,
    /// Preferred-child flips recorded by the reference tree.
    pub flips: u32,
    /// All preferred-child transitions, first assignments included.
    pub transitions: u32,
    /// Marked roots touched: the starting one plus one per boundary.
    pub marked_touched: u32,
}

#[derive(Debug)]
pub struct BelgaTree {
    m: Machine,
    rt: ReferenceTree,
    n_real: u32,
}

impl BelgaTree {
    /// Build the initial tree over the universe `[1, n]` (padded up to
    /// `2^height - 1`): every key a marked singleton in the reference tree's
    /// shape. Construction is not metered.
    pub fn build_initial(n: u32, b: u32) -> Result<Self, BelgaError> {
        if n < 1 || b < 2 {
            return Err(BelgaError::BadParams);
        }
        let height = height_for(n);
        let mut m = Machine::with_depth_aug(b, height);
        let padded = (1u32 << height) - 1;
        let root = build_singletons(&mut m, 1, padded);
        m.set_root_node(Some(root));
        Ok(BelgaTree {
            m,
            rt: ReferenceTree::new(height),
            n_real: n,
        })
    }

    pub fn b(&self) -> u32 {
        self.m.b()
    }

    pub fn universe(&self) -> u32 {
        self.n_real
    }

    pub fn padded_universe(&self) -> u32 {
        self.rt.padded_size()
    }

    pub fn machine(&self) -> &Machine {
        &self.m
    }

    pub fn reference(&self) -> &ReferenceTree {
        &self.rt
    }

    /// Search for a key, re-shaping the preferred paths on the way down.
    pub fn search(&mut self, x: u32) -> Result<SearchStats, BelgaError> {
        if x < 1 || x > self.n_real {
            return Err(BelgaError::OutOfUniverse(x));
        }
        let update: SearchUpdate = self
            .rt
            .record_search(Key(x))
            .expect("real keys are in the padded universe");
        let before = self.m.meter().snapshot();
        let mut aux_root = self.m.root().expect("tree is never empty");
        self.m.begin_search();
        let mut cur = aux_root;
        let mut marked_touched = 1u32;
        let mut boundary_crossings = 0u32;
        loop {
            match self.m.keys(cur).binary_search(&Key(x)) {
                Ok(_) => break,
                Err(slot) => {
                    let child = self
                        .m
                        .child(cur, slot)
                        .expect("the universe is complete, so the key exists");
                    if self.m.is_marked(child) {
                        marked_touched += 1;
                        boundary_crossings += 1;
                        aux_root = self.reshape_at_boundary(aux_root, child);
                        self.m.set_cursor(aux_root);
                        cur = aux_root;
                    } else {
                        self.m.step_to_child(child);
                        cur = child;
                    }
                }
            }
        }
        debug_assert_eq!(
            boundary_crossings,
            update.transitions(),
            "every boundary crossing is one preferred-child transition"
        );
        Ok(SearchStats {
            cost: before.spent(self.m.meter()),
            flips: update.flips,
            transitions: update.transitions(),
            marked_touched,
        })
    }

    /// The cut-and-merge protocol at one path boundary: the current path is
    /// cut just above the entered path's top depth (unless it ends there
    /// already) and its upper part absorbs the entered path.
    fn reshape_at_boundary(&mut self, aux_root: NodeId, entered: NodeId) -> NodeId {
        let d = self.m.aug(entered).min_depth;
        debug_assert!(d >= 1);
        let top = if self.m.aug(aux_root).max_depth >= d {
            let (top, _bottom) = cut_path_at_depth(&mut self.m, aux_root, d - 1)
                .expect("boundary cut is never degenerate here");
            top
        } else {
            aux_root
        };
        merge_path_pair(&mut self.m, top, entered).expect("boundary paths are depth-adjacent")
    }

    /// Roots of all auxiliary trees, in no particular order.
    pub fn aux_roots(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.m.root().expect("nonempty")];
        while let Some(id) = stack.pop() {
            if self.m.is_marked(id) {
                out.push(id);
            }
            for slot in 0..self.m.node(id).children.len() {
                if let Some(c) = self.m.child(id, slot) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Keys of the auxiliary tree rooted at a marked node, sorted.
    pub fn aux_keys(&self, root: NodeId) -> Vec<u32> {
        let mut keys = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            keys.extend(self.m.keys(id).iter().map(|k| k.0));
            for slot in 0..self.m.node(id).children.len() {
                if let Some(c) = self.m.child(id, slot) {
                    if !self.m.is_marked(c) {
                        stack.push(c);
                    }
                }
            }
        }
        keys.sort_unstable();
        keys
    }

    /// Full structural audit: machine invariants, global in-order content,
    /// per-auxiliary-tree shape and augmentation, and exact agreement between
    /// auxiliary trees and the reference tree's preferred paths.
    pub fn audit(&self) -> Result<(), String> {
        self.m.validate().map_err(|v| v.to_string())?;
        let root = self.m.root().expect("nonempty");
        if !self.m.is_marked(root) {
            return Err("global root is not marked".into());
        }
        let padded = self.padded_universe();
        let all = self.m.in_order_keys(root);
        if all.len() != padded as usize
            || all.iter().enumerate().any(|(i, k)| k.0 != i as u32 + 1)
        {
            return Err("global in-order is not the padded universe".into());
        }

        let mut covered: HashSet<u32> = HashSet::new();
        for aux in self.aux_roots() {
            check_shape(&self.m, aux)?;
            let keys = self.aux_keys(aux);
            let mut by_depth: Vec<(u32, u32)> = keys
                .iter()
                .map(|k| (self.rt.depth(Key(*k)), *k))
                .collect();
            by_depth.sort_unstable();
            for w in by_depth.windows(2) {
                if w[1].0 != w[0].0 + 1 {
                    return Err(format!(
                        "auxiliary tree at {aux} skips depth {}",
                        w[0].0 + 1
                    ));
                }
            }
            let expected = self.rt.path_of(Key(by_depth[0].1));
            let got: Vec<Key> = by_depth.iter().map(|(_, k)| Key(*k)).collect();
            if expected != got {
                return Err(format!(
                    "auxiliary tree at {aux} stores {got:?}, reference path is {expected:?}"
                ));
            }
            for k in keys {
                if !covered.insert(k) {
                    return Err(format!("key {k} stored in two auxiliary trees"));
                }
            }
        }
        if covered.len() != padded as usize {
            return Err("auxiliary trees do not cover the universe".into());
        }
        Ok(())
    }
}

/// Marked singleton nodes arranged in the complete tree's shape.
fn build_singletons(m: &mut Machine, lo: u32, hi: u32) -> NodeId {
    let mid = (lo + hi) / 2;
    let left = (mid > lo).then(|| build_singletons(m, lo, mid - 1));
    let right = (mid < hi).then(|| build_singletons(m, mid + 1, hi));
    let id = m.alloc(vec![Key(mid)], vec![left, right]);
    m.set_marked(id, true);
    id
}
