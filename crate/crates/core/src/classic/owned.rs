use crate::model::{Key, Machine, NodeId};

use super::{
    build_sorted, concat_pivot, min_fill, rank_select, search_from, split_tree, tree_child,
    ClassicError,
};

/// A classic balanced tree owning its machine. The tree may be empty (a null
/// root), which the machine itself cannot express but the split and
/// concatenate boundary cases need.
#[derive(Debug)]
pub struct ClassicTree {
    m: Machine,
    root: Option<NodeId>,
}

/// Result of splitting a tree at a key: one tree whose root holds only the
/// split key, with the lower and upper keys below its two child slots.
#[derive(Debug)]
pub struct SplitParts {
    tree: ClassicTree,
}

impl ClassicTree {
    pub fn empty(b: u32) -> Self {
        ClassicTree {
            m: Machine::new(b),
            root: None,
        }
    }

    /// Build a classic tree over strictly increasing keys.
    pub fn build_from_sorted(keys: &[u32], b: u32) -> Result<Self, ClassicError> {
        if keys.is_empty() {
            return Err(ClassicError::EmptyInput);
        }
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ClassicError::Unsorted);
        }
        let mut m = Machine::new(b);
        let keys: Vec<Key> = keys.iter().map(|k| Key(*k)).collect();
        let root = build_sorted(&mut m, &keys);
        m.set_root_node(Some(root));
        Ok(ClassicTree { m, root: Some(root) })
    }

    pub fn b(&self) -> u32 {
        self.m.b()
    }

    pub fn size(&self) -> u64 {
        self.root.map_or(0, |r| self.m.aug(r).size as u64)
    }

    /// Levels of the tree: black height for `B <= 3`, node height plus one
    /// otherwise. Zero when empty.
    pub fn height(&self) -> u32 {
        match self.root {
            Some(r) if !self.m.binary_balanced() => self.m.aug(r).rank + 1,
            Some(r) => self.m.aug(r).rank,
            None => 0,
        }
    }

    pub fn machine(&self) -> &Machine {
        &self.m
    }

    /// Surrender the underlying machine, e.g. to drive raw unit operations
    /// on the built tree.
    pub fn into_machine(self) -> Machine {
        self.m
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn in_order(&self) -> Vec<u32> {
        self.root
            .map(|r| self.m.in_order_keys(r).iter().map(|k| k.0).collect())
            .unwrap_or_default()
    }

    /// Search for a key; returns whether it is present and the unit cost
    /// spent (cursor initialization plus one move per edge).
    pub fn search(&mut self, x: u32) -> (bool, u64) {
        let root = match self.root {
            Some(r) => r,
            None => return (false, 0),
        };
        let before = self.m.meter().snapshot();
        self.m.begin_search();
        let outcome = search_from(&mut self.m, root, Key(x));
        (outcome.found(), before.spent(self.m.meter()))
    }

    /// The r-th smallest key (1-based) and the unit cost spent.
    pub fn find_by_rank(&mut self, r: u64) -> Result<(u32, u64), ClassicError> {
        let root = self.root.ok_or(ClassicError::RankOutOfRange)?;
        let before = self.m.meter().snapshot();
        self.m.begin_search();
        let key = rank_select(&mut self.m, root, r)?;
        Ok((key.0, before.spent(self.m.meter())))
    }

    /// Split the tree at a present key `x`.
    pub fn split_at(mut self, x: u32) -> Result<SplitParts, ClassicError> {
        let root = self.root.ok_or(ClassicError::KeyAbsent)?;
        self.m.begin_search();
        self.m.set_root_node(None);
        let pivot = split_tree(&mut self.m, root, Key(x))?;
        self.m.set_root_node(Some(pivot));
        self.root = Some(pivot);
        Ok(SplitParts { tree: self })
    }

    /// Concatenate two trees around `k`; every key of `t1` must lie below `k`
    /// and every key of `t2` above. The parts may be empty.
    pub fn concatenate(t1: ClassicTree, k: u32, t2: ClassicTree) -> Result<ClassicTree, ClassicError> {
        assert_eq!(t1.b(), t2.b(), "concatenating trees of different order");
        if t1.max_key().is_some_and(|m| m >= k) || t2.min_key().is_some_and(|m| m <= k) {
            return Err(ClassicError::OrderViolation);
        }
        let mut m = t1.m;
        let left = t1.root;
        // Graft the second arena into the first; a representation change,
        // not a metered operation.
        let right = t2.root.map(|r2| graft(&mut m, &t2.m, r2));
        let pivot = m.alloc(vec![Key(k)], vec![left, right]);
        let root = concat_pivot(&mut m, pivot);
        m.set_root_node(Some(root));
        Ok(ClassicTree { m, root: Some(root) })
    }

    pub fn min_key(&self) -> Option<u32> {
        let mut cur = self.root?;
        loop {
            match tree_child(&self.m, cur, 0) {
                Some(c) => cur = c,
                None => return Some(self.m.keys(cur)[0].0),
            }
        }
    }

    pub fn max_key(&self) -> Option<u32> {
        let mut cur = self.root?;
        loop {
            let last = self.m.node(cur).children.len() - 1;
            match tree_child(&self.m, cur, last) {
                Some(c) => cur = c,
                None => return Some(self.m.keys(cur).last().unwrap().0),
            }
        }
    }

    /// Check the classic shape on top of the machine invariants: uniform
    /// leaf depth (black depth for `B <= 3`), fill bounds and augmentation
    /// accuracy.
    pub fn check(&self) -> Result<(), String> {
        self.m.validate().map_err(|v| v.to_string())?;
        let root = match self.root {
            Some(r) => r,
            None => return Ok(()),
        };
        check_shape(&self.m, root)
    }
}

impl SplitParts {
    pub fn pivot_key(&self) -> u32 {
        self.tree.m.keys(self.tree.root.unwrap())[0].0
    }

    pub fn tree(&self) -> &ClassicTree {
        &self.tree
    }

    pub fn into_tree(self) -> ClassicTree {
        self.tree
    }

    /// Copy one side out as an independent tree.
    fn side(&self, slot: usize) -> ClassicTree {
        let m_src = &self.tree.m;
        let mut m = Machine::new(m_src.b());
        let root = self
            .tree
            .root
            .and_then(|p| m_src.child(p, slot))
            .map(|side_root| graft(&mut m, m_src, side_root));
        m.set_root_node(root);
        ClassicTree { m, root }
    }

    pub fn lower(&self) -> ClassicTree {
        self.side(0)
    }

    pub fn upper(&self) -> ClassicTree {
        self.side(1)
    }
}

/// Deep-copy a subtree from one arena into another, preserving keys, marks
/// and colors.
pub(crate) fn graft(dst: &mut Machine, src: &Machine, root: NodeId) -> NodeId {
    let keys = src.keys(root).to_vec();
    let children: Vec<Option<NodeId>> = (0..src.node(root).children.len())
        .map(|slot| src.child(root, slot).map(|c| graft(dst, src, c)))
        .collect();
    let id = dst.alloc(keys, children);
    let aug = *src.aug(root);
    if aug.red {
        dst.set_red(id, true);
    }
    if aug.marked {
        dst.set_marked(id, true);
    }
    dst.refresh(id);
    id
}

/// Shape checker shared with the self-adjusting structures: validates one
/// auxiliary tree delimited by marked children.
pub(crate) fn check_shape(m: &Machine, root: NodeId) -> Result<(), String> {
    if m.binary_balanced() {
        check_binary(m, root, true).map(|_| ())
    } else {
        check_multi(m, root, true).map(|_| ())
    }
}

fn check_multi(m: &Machine, id: NodeId, is_root: bool) -> Result<u32, String> {
    let n = m.node(id).key_count();
    if !is_root && n < min_fill(m.b()) {
        return Err(format!("{id} under-filled: {n} keys"));
    }
    let slots = m.node(id).children.len();
    let mut child_rank: Option<u32> = None;
    let mut real = 0usize;
    for slot in 0..slots {
        if let Some(c) = tree_child(m, id, slot) {
            real += 1;
            let r = check_multi(m, c, false)?;
            if let Some(prev) = child_rank {
                if prev != r {
                    return Err(format!("{id} children at unequal depth"));
                }
            }
            child_rank = Some(r);
        }
    }
    if real > 0 && real != slots {
        return Err(format!("{id} mixes real and absent children"));
    }
    let rank = child_rank.map_or(0, |r| r + 1);
    let aug = m.compute_aug(id);
    let stored = m.aug(id);
    if aug.size != stored.size || aug.rank != stored.rank || rank != stored.rank {
        return Err(format!("{id} stale augmentation"));
    }
    if m.depth_height().is_some()
        && (aug.min_depth != stored.min_depth || aug.max_depth != stored.max_depth)
    {
        return Err(format!("{id} stale depth augmentation"));
    }
    Ok(rank)
}

fn check_binary(m: &Machine, id: NodeId, is_root: bool) -> Result<u32, String> {
    if is_root && m.aug(id).red {
        return Err(format!("{id} red root"));
    }
    let mut heights = [0u32; 2];
    for (slot, height) in heights.iter_mut().enumerate() {
        if let Some(c) = tree_child(m, id, slot) {
            if m.aug(id).red && m.aug(c).red {
                return Err(format!("red {id} has red child {c}"));
            }
            *height = check_binary(m, c, false)?;
        }
    }
    if heights[0] != heights[1] {
        return Err(format!("{id} unequal black heights"));
    }
    let aug = m.compute_aug(id);
    let stored = m.aug(id);
    if aug.size != stored.size || aug.rank != stored.rank {
        return Err(format!("{id} stale augmentation"));
    }
    if m.depth_height().is_some()
        && (aug.min_depth != stored.min_depth || aug.max_depth != stored.max_depth)
    {
        return Err(format!("{id} stale depth augmentation"));
    }
    Ok(heights[0] + u32::from(!m.aug(id).red))
}
