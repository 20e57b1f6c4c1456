//! Static block-connected mappings from binary trees to multiway trees.
//!
//! A block-connected mapping assigns every node of a static binary tree to a
//! block of at most `B - 1` nodes forming a connected subtree, which makes
//! the blocks the nodes of a static multiway tree. The mapping here is the
//! level-slab one: a root slab of `h` levels, then slabs of `floor(log2 B)`
//! levels of each subtree, recursively. Drawing `h` uniformly from
//! `[0, floor(log2 B) - 1]` makes every edge of the binary tree cross a block
//! boundary with probability exactly `1 / floor(log2 B)`, so a walk of length
//! `k` costs `k / floor(log2 B)` block transitions in expectation.
//!
//! A slab of `floor(log2 B)` levels holds at most `2^floor(log2 B)} - 1 <=
//! B - 1` keys, so capacity is respected. Logarithms are base two throughout,
//! matching the `B = 2` degeneracy of the model.
//!
//! The module also builds the pruned-traversal adversary walk: an in-order
//! traversal that refuses to recurse into any node sharing a block with a
//! leaf. Against a fixed deterministic mapping its touch count is exactly
//! `2b - 1` for the `b` leaf-holding blocks it reaches, while any multiway
//! execution still pays a block transition per boundary, which is why no
//! deterministic mapping can give more than a constant speedup.

use std::fmt;

/// Index of a node in a static binary tree.
pub type NodeIdx = usize;

/// A static binary search tree, fully materialized.
#[derive(Clone, Debug)]
pub struct StaticBst {
    keys: Vec<u32>,
    left: Vec<Option<NodeIdx>>,
    right: Vec<Option<NodeIdx>>,
    parent: Vec<Option<NodeIdx>>,
    depth: Vec<u32>,
    root: NodeIdx,
}

impl StaticBst {
    /// The perfect tree over `[1, 2^height - 1]`.
    pub fn perfect(height: u32) -> Self {
        let n = (1usize << height) - 1;
        let mut t = StaticBst {
            keys: vec![0; n],
            left: vec![None; n],
            right: vec![None; n],
            parent: vec![None; n],
            depth: vec![0; n],
            root: 0,
        };
        let mut next = 0;
        t.root = t.build_balanced(1, n as u32, 0, &mut next);
        t
    }

    /// A balanced (midpoint) tree over the given sorted keys.
    pub fn balanced(keys: &[u32]) -> Self {
        assert!(!keys.is_empty());
        let n = keys.len();
        let mut t = StaticBst {
            keys: keys.to_vec(),
            left: vec![None; n],
            right: vec![None; n],
            parent: vec![None; n],
            depth: vec![0; n],
            root: 0,
        };
        t.root = t.build_range(keys, 0, 0);
        t
    }

    fn build_balanced(&mut self, lo: u32, hi: u32, depth: u32, next: &mut usize) -> NodeIdx {
        let mid = (lo + hi) / 2;
        let idx = *next;
        *next += 1;
        self.keys[idx] = mid;
        self.depth[idx] = depth;
        if mid > lo {
            let l = self.build_balanced(lo, mid - 1, depth + 1, next);
            self.left[idx] = Some(l);
            self.parent[l] = Some(idx);
        }
        if mid < hi {
            let r = self.build_balanced(mid + 1, hi, depth + 1, next);
            self.right[idx] = Some(r);
            self.parent[r] = Some(idx);
        }
        idx
    }

    fn build_range(&mut self, keys: &[u32], offset: usize, depth: u32) -> NodeIdx {
        let mid = keys.len() / 2;
        let idx = offset + mid;
        self.depth[idx] = depth;
        if mid > 0 {
            let l = self.build_range(&keys[..mid], offset, depth + 1);
            self.left[idx] = Some(l);
            self.parent[l] = Some(idx);
        }
        if mid + 1 < keys.len() {
            let r = self.build_range(&keys[mid + 1..], offset + mid + 1, depth + 1);
            self.right[idx] = Some(r);
            self.parent[r] = Some(idx);
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn root(&self) -> NodeIdx {
        self.root
    }

    pub fn key(&self, v: NodeIdx) -> u32 {
        self.keys[v]
    }

    pub fn left(&self, v: NodeIdx) -> Option<NodeIdx> {
        self.left[v]
    }

    pub fn right(&self, v: NodeIdx) -> Option<NodeIdx> {
        self.right[v]
    }

    pub fn parent(&self, v: NodeIdx) -> Option<NodeIdx> {
        self.parent[v]
    }

    pub fn depth(&self, v: NodeIdx) -> u32 {
        self.depth[v]
    }

    pub fn is_leaf(&self, v: NodeIdx) -> bool {
        self.left[v].is_none() && self.right[v].is_none()
    }

    fn adjacent(&self, a: NodeIdx, b: NodeIdx) -> bool {
        self.parent[a] == Some(b)
            || self.parent[b] == Some(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapError {
    /// Slabs need at least one level, so `B >= 3`.
    BTooSmall,
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::BTooSmall => write!(f, "branching must be at least 3"),
        }
    }
}

impl std::error::Error for MapError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WalkError {
    /// A walk must start at the root.
    NotAtRoot,
    /// Consecutive walk positions must be tree-adjacent.
    NotAdjacent { step: usize },
}

impl fmt::Display for WalkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WalkError::NotAtRoot => write!(f, "walk does not start at the root"),
            WalkError::NotAdjacent { step } => write!(f, "walk step {step} is not adjacent"),
        }
    }
}

impl std::error::Error for WalkError {}

/// A pointer walk: a sequence of positions starting at the root, each
/// adjacent to the previous one.
#[derive(Clone, Debug)]
pub struct Walk {
    pub positions: Vec<NodeIdx>,
}

impl Walk {
    pub fn validate(&self, t: &StaticBst) -> Result<(), WalkError> {
        if self.positions.first() != Some(&t.root()) {
            return Err(WalkError::NotAtRoot);
        }
        for (i, w) in self.positions.windows(2).enumerate() {
            if !t.adjacent(w[0], w[1]) {
                return Err(WalkError::NotAdjacent { step: i + 1 });
            }
        }
        Ok(())
    }

    /// Number of pointer moves.
    pub fn len(&self) -> usize {
        self.positions.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The root-to-node walk along tree edges.
    pub fn root_path(t: &StaticBst, v: NodeIdx) -> Walk {
        let mut rev = vec![v];
        let mut cur = v;
        while let Some(p) = t.parent(cur) {
            rev.push(p);
            cur = p;
        }
        rev.reverse();
        Walk { positions: rev }
    }
}

/// A block-connected mapping: each node's block identifier, with blocks cut
/// out of the tree as level slabs.
#[derive(Clone, Debug)]
pub struct BlockMapping {
    block: Vec<u32>,
    block_count: u32,
    /// Sampled root-slab height.
    pub h: u32,
    /// Levels per slab, `floor(log2 B)`.
    pub slab: u32,
}

impl BlockMapping {
    pub fn block_of(&self, v: NodeIdx) -> u32 {
        self.block[v]
    }

    pub fn block_count(&self) -> u32 {
        self.block_count
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.block_count as usize];
        for b in &self.block {
            sizes[*b as usize] += 1;
        }
        sizes
    }
}

/// The deterministic slab mapping with a fixed root-slab height `h` in
/// `[0, floor(log2 B) - 1]`. Block boundaries sit above the levels congruent
/// to `h` modulo the slab size; each block is the slab-subtree hanging from
/// one node on a boundary level.
pub fn build_slab(t: &StaticBst, b: u32, h: u32) -> Result<BlockMapping, MapError> {
    if b < 3 {
        return Err(MapError::BTooSmall);
    }
    let slab = b.ilog2();
    assert!(h < slab, "root slab height out of range");
    let mut mapping = BlockMapping {
        block: vec![u32::MAX; t.len()],
        block_count: 0,
        h,
        slab,
    };
    // Depth of the boundary line at or above a node's depth.
    let slab_top = |d: u32| -> u32 {
        if d < h {
            0
        } else {
            d - (d - h) % slab
        }
    };
    let mut stack = vec![(t.root(), u32::MAX)];
    while let Some((v, inherit)) = stack.pop() {
        let d = t.depth(v);
        let id = if slab_top(d) == d {
            let id = mapping.block_count;
            mapping.block_count += 1;
            id
        } else {
            inherit
        };
        mapping.block[v] = id;
        for c in [t.left(v), t.right(v)].into_iter().flatten() {
            stack.push((c, id));
        }
    }
    debug_assert!(mapping.block.iter().all(|b| *b != u32::MAX));
    Ok(mapping)
}

/// The randomized mapping: the root-slab height is drawn uniformly from
/// `[0, floor(log2 B) - 1]` out of the seed.
pub fn build_randomized(t: &StaticBst, b: u32, seed: u64) -> Result<BlockMapping, MapError> {
    if b < 3 {
        return Err(MapError::BTooSmall);
    }
    let slab = b.ilog2() as u64;
    let h = crate::model::SplitMix::new(seed).below(slab) as u32;
    build_slab(t, b, h)
}

/// Cost of a walk under a mapping: one for planting the pointer plus one per
/// step crossing a block boundary.
pub fn walk_cost(t: &StaticBst, m: &BlockMapping, w: &Walk) -> Result<u64, WalkError> {
    w.validate(t)?;
    let crossings = w
        .positions
        .windows(2)
        .filter(|s| m.block_of(s[0]) != m.block_of(s[1]))
        .count() as u64;
    Ok(crossings + 1)
}

/// Report of the pruned-traversal adversary experiment.
#[derive(Clone, Debug)]
pub struct AdversaryReport {
    /// The pruned in-order walk.
    pub walk: Walk,
    /// Nodes touched by the walk (the binary-model cost currency here).
    pub bst_touches: u64,
    /// Multiway cost of the same walk: block transitions plus one.
    pub btree_cost: u64,
    /// Blocks of the mapping that contain a leaf.
    pub leaf_blocks: u64,
    /// Distinct prune points, one per leaf-holding block reached.
    pub prune_points: u64,
}

/// Run the in-order traversal that does not recurse below any node mapped to
/// a block holding a leaf, against an arbitrary deterministic block
/// assignment.
pub fn adversary_walk(t: &StaticBst, block_of: impl Fn(NodeIdx) -> u32) -> AdversaryReport {
    let mut leaf_blocks = std::collections::HashSet::new();
    for v in 0..t.len() {
        if t.is_leaf(v) {
            leaf_blocks.insert(block_of(v));
        }
    }
    let mut positions = vec![t.root()];
    let mut prune_points = 0u64;
    let mut touches = 1u64;
    visit(
        t,
        t.root(),
        &|v| leaf_blocks.contains(&block_of(v)),
        &mut positions,
        &mut touches,
        &mut prune_points,
    );
    let btree_cost = positions
        .windows(2)
        .filter(|s| block_of(s[0]) != block_of(s[1]))
        .count() as u64
        + 1;
    AdversaryReport {
        walk: Walk { positions },
        bst_touches: touches,
        btree_cost,
        leaf_blocks: leaf_blocks.len() as u64,
        prune_points,
    }
}

fn visit(
    t: &StaticBst,
    v: NodeIdx,
    prune: &impl Fn(NodeIdx) -> bool,
    positions: &mut Vec<NodeIdx>,
    touches: &mut u64,
    prune_points: &mut u64,
) {
    if prune(v) {
        *prune_points += 1;
        return;
    }
    for child in [t.left(v), t.right(v)].into_iter().flatten() {
        positions.push(child);
        *touches += 1;
        visit(t, child, prune, positions, touches, prune_points);
        positions.push(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SplitMix;

    #[test]
    fn slab_blocks_are_connected_and_small() {
        for height in [8u32, 12] {
            let t = StaticBst::perfect(height);
            for b in [4u32, 16, 64] {
                let slab = b.ilog2();
                for h in 0..slab {
                    let m = build_slab(&t, b, h).unwrap();
                    for size in m.block_sizes() {
                        assert!(size <= (b - 1) as usize, "block of {size} at B={b}");
                    }
                    // Connectedness: every non-top node's parent shares its block.
                    for v in 0..t.len() {
                        if let Some(p) = t.parent(v) {
                            let same = m.block_of(v) == m.block_of(p);
                            let on_boundary = t.depth(v) >= h && (t.depth(v) - h) % slab == 0
                                || t.depth(v) == 0;
                            assert_eq!(!same, on_boundary, "node {v}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn b_three_degenerates_to_single_nodes() {
        let t = StaticBst::perfect(6);
        let m = build_slab(&t, 3, 0).unwrap();
        assert_eq!(m.block_count() as usize, t.len());
        let w = Walk::root_path(&t, t.len() - 1);
        let cost = walk_cost(&t, &m, &w).unwrap();
        assert_eq!(cost, w.len() as u64 + 1, "every step crosses");
    }

    #[test]
    fn b_too_small_is_rejected() {
        let t = StaticBst::perfect(3);
        assert_eq!(build_slab(&t, 2, 0).unwrap_err(), MapError::BTooSmall);
    }

    #[test]
    fn root_block_takes_the_first_h_levels() {
        let t = StaticBst::perfect(4);
        let m = build_slab(&t, 16, 2).unwrap();
        for v in 0..t.len() {
            if t.depth(v) < 2 {
                assert_eq!(m.block_of(v), m.block_of(t.root()));
            } else {
                assert_ne!(m.block_of(v), m.block_of(t.root()));
            }
        }
        let sizes = m.block_sizes();
        assert_eq!(sizes[m.block_of(t.root()) as usize], 3);
    }

    #[test]
    fn walk_inside_root_block_costs_one() {
        let t = StaticBst::perfect(6);
        let m = build_slab(&t, 64, 5).unwrap();
        let left = t.left(t.root()).unwrap();
        let w = Walk {
            positions: vec![t.root(), left, t.root(), t.right(t.root()).unwrap()],
        };
        assert_eq!(walk_cost(&t, &m, &w).unwrap(), 1);
    }

    #[test]
    fn illegal_walks_are_rejected() {
        let t = StaticBst::perfect(4);
        let m = build_slab(&t, 16, 0).unwrap();
        let bad = Walk {
            positions: vec![t.left(t.root()).unwrap()],
        };
        assert_eq!(walk_cost(&t, &m, &bad).unwrap_err(), WalkError::NotAtRoot);
        let leaf = (0..t.len()).find(|v| t.is_leaf(*v)).unwrap();
        let jump = Walk {
            positions: vec![t.root(), leaf],
        };
        assert!(matches!(
            walk_cost(&t, &m, &jump).unwrap_err(),
            WalkError::NotAdjacent { .. }
        ));
    }

    #[test]
    fn root_to_leaf_crossings_follow_level_arithmetic() {
        let height = 10u32;
        let t = StaticBst::perfect(height);
        let depth = height - 1;
        for b in [16u32, 64] {
            let slab = b.ilog2();
            let mut leaf = t.root();
            while let Some(l) = t.left(leaf) {
                leaf = l;
            }
            let w = Walk::root_path(&t, leaf);
            for h in 0..slab {
                let m = build_slab(&t, b, h).unwrap();
                let cost = walk_cost(&t, &m, &w).unwrap();
                // Boundary levels at h, h+slab, ... (a boundary at level 0 is
                // no crossing since the walk starts there).
                let mut expect = 0u64;
                let mut lvl = if h == 0 { slab } else { h };
                while lvl <= depth {
                    expect += 1;
                    lvl += slab;
                }
                assert_eq!(cost, expect + 1, "B={b} h={h}");
            }
        }
    }

    #[test]
    fn exact_expected_crossings_match_closed_form() {
        // Averaged over all root-slab heights, a downward walk of length k
        // crosses k / slab boundaries, up to one boundary of slack at the
        // leaf end.
        let height = 12u32;
        let t = StaticBst::perfect(height);
        let k = (height - 1) as f64;
        for b in [16u32, 64] {
            let slab = b.ilog2();
            let mut leaf = t.root();
            while let Some(r) = t.right(leaf) {
                leaf = r;
            }
            let w = Walk::root_path(&t, leaf);
            let mut total = 0u64;
            for h in 0..slab {
                let m = build_slab(&t, b, h).unwrap();
                total += walk_cost(&t, &m, &w).unwrap() - 1;
            }
            let mean = total as f64 / slab as f64;
            let ideal = k / slab as f64;
            assert!(
                (mean - ideal).abs() <= ideal * 0.1 + 1.0,
                "B={b}: mean {mean} vs {ideal}"
            );
        }
    }

    #[test]
    fn random_walk_expectation_is_exact_by_summation() {
        // For any fixed walk, summing crossings over all h and dividing by
        // slab equals the average number of boundary-crossing steps; steps
        // deep inside the tree cross with probability exactly 1/slab.
        let height = 10u32;
        let t = StaticBst::perfect(height);
        let mut rng = SplitMix::new(4242);
        for b in [16u32, 64] {
            let slab = b.ilog2() as u64;
            for _ in 0..20 {
                // Random stumble of bounded length.
                let mut positions = vec![t.root()];
                let mut cur = t.root();
                for _ in 0..50 {
                    let options: Vec<NodeIdx> = [t.left(cur), t.right(cur), t.parent(cur)]
                        .into_iter()
                        .flatten()
                        .collect();
                    cur = options[rng.below(options.len() as u64) as usize];
                    positions.push(cur);
                }
                let w = Walk { positions };
                let mut crossings = 0u64;
                for h in 0..slab as u32 {
                    let m = build_slab(&t, b, h).unwrap();
                    crossings += walk_cost(&t, &m, &w).unwrap() - 1;
                }
                // Each step crosses under exactly one h unless it touches the
                // root or bottom boundary irregularities; perfect interior
                // steps contribute exactly 1 over all h.
                assert!(crossings <= w.len() as u64 + slab);
                assert!(crossings + slab >= w.len() as u64 * 10 / 12);
            }
        }
    }

    #[test]
    fn trivial_mapping_makes_pruned_walk_full() {
        // Every node its own block: only the leaves prune, so the traversal
        // touches every node — still exactly 2b - 1 of them.
        let t = StaticBst::perfect(5);
        let report = adversary_walk(&t, |v| v as u32);
        report.walk.validate(&t).unwrap();
        assert_eq!(report.leaf_blocks, 16);
        assert_eq!(report.bst_touches as usize, t.len());
        assert_eq!(report.bst_touches, 2 * report.leaf_blocks - 1);
    }

    #[test]
    fn slab_adversary_touches_two_b_minus_one() {
        for height in [8u32, 10] {
            let t = StaticBst::perfect(height);
            for b in [16u32, 64] {
                let m = build_slab(&t, b, 0).unwrap();
                let report = adversary_walk(&t, |v| m.block_of(v));
                report.walk.validate(&t).unwrap();
                assert_eq!(report.prune_points, report.leaf_blocks);
                assert_eq!(report.bst_touches, 2 * report.leaf_blocks - 1);
                // At least leaves/B blocks hold leaves.
                let leaves = 1u64 << (height - 1);
                assert!(report.leaf_blocks >= leaves / b as u64);
            }
        }
    }
}
