use super::{Aug, CostMeter, Key, ModelError, Node, NodeId, RotationSpec, Shift};

/// Where a glued or absorbed pair lands in a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum End {
    Front,
    Back,
}

/// Result of carving a node around one of its child slots: the pieces either
/// side of the slot, the separator keys they donate, and the detached child.
pub(crate) struct CarvedSlot {
    pub left: Option<NodeId>,
    pub sep_left: Option<Key>,
    pub mid: Option<NodeId>,
    pub sep_right: Option<Key>,
    pub right: Option<NodeId>,
}

/// The tree machine: an arena of nodes, a single cursor and the cost meter.
#[derive(Debug)]
pub struct Machine {
    b: u32,
    nodes: Vec<Option<Node>>,
    root: Option<NodeId>,
    cursor: Option<NodeId>,
    meter: CostMeter,
    /// When set, keys carry a reference depth within a universe of height
    /// `i` (universe `[1, 2^i - 1]`) and the min/max depth summaries are
    /// maintained.
    depth_height: Option<u32>,
}

impl Machine {
    pub fn new(b: u32) -> Self {
        assert!(b >= 2, "branching parameter must be at least 2");
        Machine {
            b,
            nodes: Vec::new(),
            root: None,
            cursor: None,
            meter: CostMeter::default(),
            depth_height: None,
        }
    }

    /// A machine whose nodes additionally summarize reference depths for the
    /// universe `[1, 2^height - 1]`.
    pub fn with_depth_aug(b: u32, height: u32) -> Self {
        let mut m = Machine::new(b);
        m.depth_height = Some(height);
        m
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn max_keys(&self) -> usize {
        (self.b - 1) as usize
    }

    /// Whether this machine balances binary nodes by color instead of keeping
    /// all leaves at equal depth. Capacity below four keys rules out the
    /// multiway rebalancing repertoire.
    pub fn binary_balanced(&self) -> bool {
        self.b <= 3
    }

    pub fn depth_height(&self) -> Option<u32> {
        self.depth_height
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn cursor(&self) -> Option<NodeId> {
        self.cursor
    }

    pub fn meter(&self) -> &CostMeter {
        &self.meter
    }

    pub fn is_live(&self, id: NodeId) -> bool {
        self.nodes.get(id.index()).is_some_and(Option::is_some)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        self.nodes[id.index()]
            .as_ref()
            .expect("node id refers to a deleted node")
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut Node {
        self.nodes[id.index()]
            .as_mut()
            .expect("node id refers to a deleted node")
    }

    pub fn keys(&self, id: NodeId) -> &[Key] {
        &self.node(id).keys
    }

    pub fn child(&self, id: NodeId, slot: usize) -> Option<NodeId> {
        self.node(id).children.get(slot).copied().flatten()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    pub fn aug(&self, id: NodeId) -> &Aug {
        &self.node(id).aug
    }

    pub fn is_marked(&self, id: NodeId) -> bool {
        self.node(id).aug.marked
    }

    /// Number of live nodes in the arena.
    pub fn live_nodes(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    /// Reference depth of a key in the complete tree over the machine's
    /// universe. Only meaningful when the machine carries a universe height.
    pub fn key_depth(&self, key: Key) -> u32 {
        let height = self.depth_height.expect("machine has no depth context");
        debug_assert!(key.0 >= 1 && key.0 < (1 << height));
        height - 1 - key.0.trailing_zeros()
    }

    // ------------------------------------------------------------------
    // Unit-cost operations.
    // ------------------------------------------------------------------

    /// Initialize the cursor at the root, at unit cost. Every search starts
    /// here.
    pub fn begin_search(&mut self) -> NodeId {
        let root = self.root.expect("cannot search an empty tree");
        self.meter.inits += 1;
        self.cursor = Some(root);
        root
    }

    /// Move the cursor to child `slot` of the current node.
    pub fn move_to_child(&mut self, slot: usize) -> Result<NodeId, ModelError> {
        let at = self.cursor.expect("cursor not initialized");
        let child = match self.node(at).children.get(slot) {
            Some(Some(c)) => *c,
            _ => return Err(ModelError::NoSuchChild),
        };
        self.meter.moves += 1;
        self.cursor = Some(child);
        Ok(child)
    }

    /// Move the cursor to the parent of the current node.
    pub fn move_to_parent(&mut self) -> Result<NodeId, ModelError> {
        let at = self.cursor.expect("cursor not initialized");
        let parent = self.node(at).parent.ok_or(ModelError::AtRoot)?;
        self.meter.moves += 1;
        self.cursor = Some(parent);
        Ok(parent)
    }

    /// Rotate the edge between the cursor's node and its parent, re-cutting
    /// the key interval the child owns within the union of the two nodes'
    /// keys. Child links are recomputed from the flattened in-order sequence,
    /// the unique reattachment consistent with the in-order condition.
    pub fn rotate(&mut self, spec: RotationSpec) -> Result<(), ModelError> {
        let child = self.cursor.expect("cursor not initialized");
        self.rotate_at(child, spec)
    }

    /// Split the cursor's node at the key with index `key_idx` (0-based),
    /// promoting that key to the parent. Splitting the root first creates a
    /// fresh empty root within the same unit operation. The cursor ends at
    /// the parent.
    pub fn split_node(&mut self, key_idx: usize) -> Result<NodeId, ModelError> {
        let u = self.cursor.expect("cursor not initialized");
        let n = self.node(u).key_count();
        if n < 3 {
            return Err(ModelError::TooFewKeys);
        }
        if key_idx == 0 || key_idx >= n - 1 {
            return Err(ModelError::BadSplitKey);
        }
        let parent = match self.node(u).parent {
            Some(p) => {
                if self.node(p).key_count() >= self.max_keys() {
                    return Err(ModelError::ParentFull);
                }
                p
            }
            None => {
                // Fresh empty root; it receives the promoted key below. A
                // detached subtree grows a detached parent the same way.
                let p = self.alloc(Vec::new(), vec![Some(u)]);
                if self.root == Some(u) {
                    self.root = Some(p);
                }
                p
            }
        };
        self.meter.splits += 1;

        let (mid_key, right_keys, right_children) = {
            let node = self.node_mut(u);
            let right_keys = node.keys.split_off(key_idx + 1);
            let mid_key = node.keys.pop().expect("interior key");
            let right_children = node.children.split_off(key_idx + 1);
            (mid_key, right_keys, right_children)
        };
        let right = self.alloc(right_keys, right_children);

        let slot = self.slot_of(parent, u);
        {
            let p = self.node_mut(parent);
            p.keys.insert(slot, mid_key);
            p.children.insert(slot + 1, Some(right));
        }
        self.node_mut(right).parent = Some(parent);
        self.refresh(u);
        self.refresh(right);
        self.refresh(parent);
        self.cursor = Some(parent);
        Ok(parent)
    }

    /// Join children `u` and `v` of the cursor's node, demoting the separator
    /// key between them into `u` and deleting `v`. If the parent becomes
    /// empty it is excised. The cursor ends at the merged node.
    pub fn join_nodes(&mut self, u: NodeId, v: NodeId) -> Result<NodeId, ModelError> {
        let p = self.cursor.expect("cursor not initialized");
        let slot_u = self
            .node(p)
            .children
            .iter()
            .position(|c| *c == Some(u))
            .ok_or(ModelError::NotSiblings)?;
        if self.node(p).children.get(slot_u + 1).copied().flatten() != Some(v) {
            return Err(ModelError::NotSiblings);
        }
        let total = self.node(u).key_count() + self.node(v).key_count();
        if total + 1 > self.max_keys() {
            return Err(ModelError::TooManyKeys);
        }
        self.meter.joins += 1;

        let sep = {
            let pn = self.node_mut(p);
            let sep = pn.keys.remove(slot_u);
            pn.children.remove(slot_u + 1);
            sep
        };
        let v_node = self.take(v);
        {
            let un = self.node_mut(u);
            un.keys.push(sep);
            un.keys.extend(v_node.keys);
            un.children.extend(v_node.children.iter().copied());
        }
        for c in v_node.children.into_iter().flatten() {
            self.node_mut(c).parent = Some(u);
        }
        self.refresh(u);

        if self.node(p).keys.is_empty() {
            // Excise the emptied parent; u takes its place.
            let grand = self.node(p).parent;
            match grand {
                Some(g) => {
                    let slot = self.slot_of(g, p);
                    self.node_mut(g).children[slot] = Some(u);
                    self.node_mut(u).parent = Some(g);
                    self.refresh(g);
                }
                None => {
                    if self.root == Some(p) {
                        self.root = Some(u);
                    }
                    self.node_mut(u).parent = None;
                }
            }
            self.free(p);
        } else {
            self.refresh(p);
        }
        self.cursor = Some(u);
        Ok(u)
    }

    // ------------------------------------------------------------------
    // Rotation core (shared by the public operation and the balanced-binary
    // algorithms, which rotate at explicit nodes while walking).
    // ------------------------------------------------------------------

    pub(crate) fn rotate_at(&mut self, child: NodeId, spec: RotationSpec) -> Result<(), ModelError> {
        let parent = self.node(child).parent.ok_or(ModelError::AtRoot)?;

        // Flatten the two nodes: child subtrees and keys in in-order position.
        let mut subs: Vec<Option<NodeId>> = Vec::new();
        let mut keys: Vec<Key> = Vec::new();
        let mut lo = 0usize; // 1-based position of the child's first key
        let mut hi = 0usize;
        {
            let p = self.node(parent);
            let c = self.node(child);
            for (i, slot) in p.children.iter().enumerate() {
                if *slot == Some(child) {
                    lo = keys.len() + 1;
                    subs.extend(c.children.iter().copied());
                    keys.extend(c.keys.iter().copied());
                    hi = keys.len();
                } else {
                    subs.push(*slot);
                }
                if i < p.keys.len() {
                    keys.push(p.keys[i]);
                }
            }
        }
        let m = keys.len();
        debug_assert_eq!(subs.len(), m + 1);

        let new_lo = match spec.left {
            Shift::Promote(k) => lo as i64 + k as i64,
            Shift::Demote(k) => lo as i64 - k as i64,
        };
        let new_hi = match spec.right {
            Shift::Promote(k) => hi as i64 - k as i64,
            Shift::Demote(k) => hi as i64 + k as i64,
        };

        // Occupancies after the re-cut; parent capacity checked first.
        let child_n = new_hi - new_lo + 1;
        let parent_n = m as i64 - child_n;
        let cap = self.max_keys() as i64;
        if parent_n > cap {
            return Err(ModelError::Overflow);
        }
        if child_n > cap {
            return Err(ModelError::Overflow);
        }
        if parent_n < 1 || child_n < 1 || new_lo < 1 || new_hi > m as i64 {
            return Err(ModelError::Underflow);
        }
        let (new_lo, new_hi) = (new_lo as usize, new_hi as usize);
        self.meter.rotations += 1;

        // Rebuild: the child owns keys[new_lo ..= new_hi] and the subtrees
        // flanking them; the parent keeps the rest with the child in between.
        let child_keys: Vec<Key> = keys[new_lo - 1..new_hi].to_vec();
        let child_subs: Vec<Option<NodeId>> = subs[new_lo - 1..=new_hi].to_vec();
        let mut parent_keys: Vec<Key> = Vec::with_capacity(parent_n as usize);
        let mut parent_subs: Vec<Option<NodeId>> = Vec::with_capacity(parent_n as usize + 1);
        for i in 0..new_lo - 1 {
            parent_subs.push(subs[i]);
            parent_keys.push(keys[i]);
        }
        parent_subs.push(Some(child));
        for i in new_hi..m {
            parent_keys.push(keys[i]);
            parent_subs.push(subs[i + 1]);
        }

        for sub in child_subs.iter().flatten() {
            self.node_mut(*sub).parent = Some(child);
        }
        for sub in parent_subs.iter().flatten() {
            if *sub != child {
                self.node_mut(*sub).parent = Some(parent);
            }
        }
        {
            let c = self.node_mut(child);
            c.keys = child_keys;
            c.children = child_subs;
        }
        {
            let p = self.node_mut(parent);
            p.keys = parent_keys;
            p.children = parent_subs;
        }
        self.refresh(child);
        self.refresh(parent);
        Ok(())
    }

    // ------------------------------------------------------------------
    // Crate-internal surgeries. Every call is one unit on the meter: cuts
    // are splits, absorptions are joins, walked edges are moves. Linking,
    // augmentation refresh and flag changes ride along for free.
    // ------------------------------------------------------------------

    /// Walk the cursor one edge down without the legality bookkeeping of the
    /// public operation (the algorithms know the link exists).
    pub(crate) fn step_to_child(&mut self, child: NodeId) {
        debug_assert_eq!(
            self.cursor.map(|at| self
                .node(at)
                .children.contains(&Some(child))),
            Some(true)
        );
        self.meter.moves += 1;
        self.cursor = Some(child);
    }

    pub(crate) fn step_to_parent(&mut self) {
        let at = self.cursor.expect("cursor not initialized");
        let parent = self.node(at).parent.expect("stepping above the root");
        self.meter.moves += 1;
        self.cursor = Some(parent);
    }

    /// Charge a cursor relocation of `edges` steps whose path the algorithm
    /// has just computed.
    pub(crate) fn charge_moves(&mut self, edges: u64) {
        self.meter.moves += edges;
    }

    pub(crate) fn set_cursor(&mut self, id: NodeId) {
        self.cursor = Some(id);
    }

    pub(crate) fn alloc(&mut self, keys: Vec<Key>, children: Vec<Option<NodeId>>) -> NodeId {
        debug_assert_eq!(children.len(), keys.len() + 1);
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Some(Node {
            keys,
            children,
            parent: None,
            aug: Aug::default(),
        }));
        for slot in 0..self.node(id).children.len() {
            if let Some(c) = self.node(id).children[slot] {
                self.node_mut(c).parent = Some(id);
            }
        }
        self.refresh(id);
        id
    }

    pub(crate) fn free(&mut self, id: NodeId) {
        self.nodes[id.index()] = None;
    }

    fn take(&mut self, id: NodeId) -> Node {
        self.nodes[id.index()].take().expect("taking a deleted node")
    }

    pub(crate) fn set_root_node(&mut self, id: Option<NodeId>) {
        self.root = id;
        if let Some(id) = id {
            self.node_mut(id).parent = None;
        }
    }

    pub(crate) fn slot_of(&self, parent: NodeId, child: NodeId) -> usize {
        self.node(parent)
            .children
            .iter()
            .position(|c| *c == Some(child))
            .expect("child not linked under parent")
    }

    pub(crate) fn link_slot(&mut self, parent: NodeId, slot: usize, child: Option<NodeId>) {
        self.node_mut(parent).children[slot] = child;
        if let Some(c) = child {
            self.node_mut(c).parent = Some(parent);
        }
    }

    pub(crate) fn detach(&mut self, child: NodeId) {
        if let Some(p) = self.node(child).parent {
            let slot = self.slot_of(p, child);
            self.node_mut(p).children[slot] = None;
        }
        self.node_mut(child).parent = None;
    }

    pub(crate) fn set_marked(&mut self, id: NodeId, marked: bool) {
        self.node_mut(id).aug.marked = marked;
    }

    pub(crate) fn set_red(&mut self, id: NodeId, red: bool) {
        self.node_mut(id).aug.red = red;
        self.refresh(id);
    }

    pub(crate) fn set_key(&mut self, id: NodeId, idx: usize, key: Key) {
        self.node_mut(id).keys[idx] = key;
        self.refresh(id);
    }

    /// Carve a node around child slot `slot`, producing the piece left of the
    /// slot, the piece right of it, the separator keys they donate and the
    /// detached middle child. Pieces without keys collapse to their single
    /// child. One unit (a split); the carved node is consumed.
    pub(crate) fn carve_around_slot(&mut self, id: NodeId, slot: usize) -> CarvedSlot {
        self.meter.splits += 1;
        let node = self.take(id);
        let n = node.keys.len();
        debug_assert!(slot <= n);
        let mid = node.children[slot];
        if let Some(c) = mid {
            self.node_mut(c).parent = None;
        }

        let (left, sep_left) = if slot == 0 {
            (None, None)
        } else {
            let keys = node.keys[..slot - 1].to_vec();
            let children = node.children[..slot].to_vec();
            (
                self.assemble_piece(keys, children),
                Some(node.keys[slot - 1]),
            )
        };
        let (right, sep_right) = if slot == n {
            (None, None)
        } else {
            let keys = node.keys[slot + 1..].to_vec();
            let children = node.children[slot + 1..].to_vec();
            (
                self.assemble_piece(keys, children),
                Some(node.keys[slot]),
            )
        };
        CarvedSlot {
            left,
            sep_left,
            mid,
            sep_right,
            right,
        }
    }

    /// Carve a node around the key at `idx`: the node itself becomes a
    /// single-key pivot over the two side pieces. One unit (a split).
    pub(crate) fn carve_around_key(&mut self, id: NodeId, idx: usize) -> NodeId {
        self.meter.splits += 1;
        let (key, left_keys, left_children, right_keys, right_children) = {
            let node = self.node(id);
            (
                node.keys[idx],
                node.keys[..idx].to_vec(),
                node.children[..=idx].to_vec(),
                node.keys[idx + 1..].to_vec(),
                node.children[idx + 1..].to_vec(),
            )
        };
        let left = self.assemble_piece(left_keys, left_children);
        let right = self.assemble_piece(right_keys, right_children);
        {
            let node = self.node_mut(id);
            node.keys = vec![key];
            node.children = vec![left, right];
            node.aug.red = false;
        }
        for side in [left, right].into_iter().flatten() {
            self.node_mut(side).parent = Some(id);
        }
        self.refresh(id);
        id
    }

    /// Build a detached piece from carved keys and children; a piece without
    /// keys collapses to its single child slot.
    fn assemble_piece(
        &mut self,
        keys: Vec<Key>,
        children: Vec<Option<NodeId>>,
    ) -> Option<NodeId> {
        if keys.is_empty() {
            debug_assert_eq!(children.len(), 1);
            if let Some(c) = children[0] {
                self.node_mut(c).parent = None;
            }
            children[0]
        } else {
            Some(self.alloc(keys, children))
        }
    }

    /// Insert a key and flanking child at one end of a non-full node. One
    /// unit (a join: the node absorbs material).
    pub(crate) fn glue_pair(&mut self, id: NodeId, end: End, key: Key, child: Option<NodeId>) {
        debug_assert!(self.node(id).key_count() < self.max_keys());
        self.meter.joins += 1;
        match end {
            End::Back => {
                let node = self.node_mut(id);
                node.keys.push(key);
                node.children.push(child);
            }
            End::Front => {
                let node = self.node_mut(id);
                node.keys.insert(0, key);
                node.children.insert(0, child);
            }
        }
        if let Some(c) = child {
            self.node_mut(c).parent = Some(id);
        }
        self.refresh(id);
    }

    /// Absorb the whole contents of `src`, separated by `sep`, into one end
    /// of `dst`; `src` is deleted. One unit (a join).
    pub(crate) fn absorb_node(&mut self, dst: NodeId, end: End, sep: Key, src: NodeId) {
        self.meter.joins += 1;
        let src_node = self.take(src);
        debug_assert!(
            self.node(dst).key_count() + src_node.keys.len() < self.max_keys()
        );
        for c in src_node.children.iter().copied().flatten() {
            self.node_mut(c).parent = Some(dst);
        }
        match end {
            End::Back => {
                let node = self.node_mut(dst);
                node.keys.push(sep);
                node.keys.extend(src_node.keys);
                node.children.extend(src_node.children);
            }
            End::Front => {
                let node = self.node_mut(dst);
                let mut keys = src_node.keys;
                let mut children = src_node.children;
                keys.push(sep);
                keys.append(&mut node.keys);
                children.append(&mut node.children);
                node.keys = keys;
                node.children = children;
            }
        }
        self.refresh(dst);
    }

    // ------------------------------------------------------------------
    // Augmentation maintenance (free; rides along with the charged ops).
    // ------------------------------------------------------------------

    /// Recompute a node's summaries from its keys and unmarked children.
    pub(crate) fn refresh(&mut self, id: NodeId) {
        let aug = self.compute_aug(id);
        let node = self.node_mut(id);
        node.aug.size = aug.size;
        node.aug.rank = aug.rank;
        node.aug.min_depth = aug.min_depth;
        node.aug.max_depth = aug.max_depth;
    }

    pub(crate) fn compute_aug(&self, id: NodeId) -> Aug {
        let node = self.node(id);
        let mut size = node.keys.len() as u32;
        let mut child_rank: Option<u32> = None;
        let mut min_depth = u32::MAX;
        let mut max_depth = 0u32;
        if let Some(height) = self.depth_height {
            for k in &node.keys {
                let d = height - 1 - k.0.trailing_zeros();
                min_depth = min_depth.min(d);
                max_depth = max_depth.max(d);
            }
        }
        for c in node.children.iter().copied().flatten() {
            let ca = &self.node(c).aug;
            if ca.marked {
                continue;
            }
            size += ca.size;
            child_rank = Some(child_rank.map_or(ca.rank, |r| r.max(ca.rank)));
            if self.depth_height.is_some() {
                min_depth = min_depth.min(ca.min_depth);
                max_depth = max_depth.max(ca.max_depth);
            }
        }
        let rank = if self.binary_balanced() {
            child_rank.unwrap_or(0) + !node.aug.red as u32
        } else {
            child_rank.map_or(0, |r| r + 1)
        };
        Aug {
            size,
            rank,
            min_depth: if min_depth == u32::MAX { 0 } else { min_depth },
            max_depth,
            red: node.aug.red,
            marked: node.aug.marked,
        }
    }

    /// Top of the detached (or attached) subtree containing `id`.
    pub(crate) fn top_of(&self, mut id: NodeId) -> NodeId {
        while let Some(p) = self.node(id).parent {
            id = p;
        }
        id
    }

    /// Refresh summaries along the parent chain from `id` up to and including
    /// `stop` (or the root when `stop` is `None`).
    pub(crate) fn refresh_up(&mut self, mut id: NodeId, stop: Option<NodeId>) {
        loop {
            self.refresh(id);
            if Some(id) == stop {
                break;
            }
            match self.node(id).parent {
                Some(p) => id = p,
                None => break,
            }
        }
    }
}
