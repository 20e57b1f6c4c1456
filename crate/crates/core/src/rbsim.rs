//! Simulation of the multiway machine inside the binary machine.
//!
//! Every node of a simulated tree of order `B` becomes a red-black tree of at
//! most `B - 1` keys hosted on a `B = 2` machine, so the host is a tree of
//! red-black trees: marked roots delimit the simulated nodes, and a marked
//! child inside a red-black tree stands where a simulated child hangs. Each
//! unit operation of the simulated machine maps to `O(log B)` host
//! operations:
//!
//! - moves walk from one marked root to the adjacent one through the
//!   red-black interior;
//! - a rotation merges the child's tree into the parent's, locates the
//!   child's re-cut key interval by rank, and separates it back out;
//! - a node split splits the red-black tree at the promoted key, marks the
//!   two halves, and merges the single-key remainder into the parent's tree;
//! - a node join separates the demoted key into a singleton whose two marked
//!   children are exactly the joined nodes' trees, then concatenates through
//!   it.
//!
//! A mirror machine of order `B` executes the same operations natively; the
//! simulator asserts structural correspondence between the two trees of
//! nodes after every step of a program. Host costs run on the ordinary meter,
//! and because the host has `B = 2`, the only structural operations it can
//! legally express are cursor moves and single-key edge rotations — the split
//! and join counters staying at zero is checked, not assumed.

use std::fmt;

use crate::classic::{
    attachment_of, ceiling_of, concat_pivot, merge_marked, rank_of_key, rank_select, relink,
    separate_marked, split_tree,
};
use crate::model::{Key, Machine, ModelError, NodeId, RotationSpec, Shift};

/// Unit costs in the binary model: moves, edge rotations and cursor
/// initializations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BstMeter {
    pub moves: u64,
    pub rotations: u64,
    pub inits: u64,
}

impl BstMeter {
    pub fn total(&self) -> u64 {
        self.moves + self.rotations + self.inits
    }
}

/// One unit-cost operation of the simulated machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimOp {
    /// Initialize the cursor at the root (one per search).
    Begin,
    /// Move to the child in this slot.
    Down(usize),
    /// Move to the parent.
    Up,
    /// Rotate the cursor's edge.
    Rotate(RotationSpec),
    /// Split the cursor's node at this key index.
    Split(usize),
    /// Join the cursor's children at this slot and the next.
    Join(usize),
}

#[derive(Debug)]
pub enum SimError {
    /// The mirrored operation was illegal; nothing was simulated.
    Model(ModelError),
    /// The host and mirror disagree structurally.
    Mismatch(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Model(e) => write!(f, "illegal operation: {e}"),
            SimError::Mismatch(s) => write!(f, "correspondence lost: {s}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::Model(e)
    }
}

/// The simulator: a mirror machine of order `b` and the binary host.
pub struct BtreeSimulator {
    mirror: Machine,
    host: Machine,
    b: u32,
}

impl BtreeSimulator {
    /// Start from a classic tree over `keys`; both sides are built directly,
    /// costing nothing on either meter.
    pub fn from_sorted(keys: &[u32], b: u32) -> Self {
        assert!(b >= 2 && !keys.is_empty());
        let keys: Vec<Key> = keys.iter().map(|k| Key(*k)).collect();
        let mut mirror = Machine::new(b);
        let root = crate::classic::build_sorted(&mut mirror, &keys);
        mirror.set_root_node(Some(root));
        Self::from_machine(mirror)
    }

    /// Wrap an existing (valid) machine state as the mirror and build the
    /// corresponding host.
    pub fn from_machine(mirror: Machine) -> Self {
        mirror.validate().expect("mirror state is valid");
        let root = mirror.root().expect("mirror is nonempty");
        let b = mirror.b();
        let mut host = Machine::new(2);
        let host_root = build_host(&mut host, &mirror, root);
        host.set_root_node(Some(host_root));
        BtreeSimulator { mirror, host, b }
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn mirror(&self) -> &Machine {
        &self.mirror
    }

    pub fn host(&self) -> &Machine {
        &self.host
    }

    /// Binary-model cost so far. Splits and joins never happen on a binary
    /// machine; this is asserted, not assumed.
    pub fn bst_meter(&self) -> BstMeter {
        let m = self.host.meter();
        assert_eq!(m.splits, 0, "host performed a split");
        assert_eq!(m.joins, 0, "host performed a join");
        BstMeter {
            moves: m.moves,
            rotations: m.rotations,
            inits: m.inits,
        }
    }

    /// Apply one operation to the mirror and simulate it on the host. An
    /// illegal operation fails on the mirror and leaves both sides untouched.
    pub fn apply(&mut self, op: SimOp) -> Result<(), SimError> {
        match op {
            SimOp::Begin => {
                self.mirror.begin_search();
                self.host.begin_search();
            }
            SimOp::Down(slot) => {
                let target = self
                    .mirror
                    .child(self.mirror.cursor().expect("cursor"), slot)
                    .ok_or(ModelError::NoSuchChild)?;
                let probe = self.mirror.keys(target)[0];
                self.mirror.move_to_child(slot)?;
                self.host_down(probe);
            }
            SimOp::Up => {
                self.mirror.move_to_parent()?;
                self.host_up();
            }
            SimOp::Rotate(spec) => {
                let child = self.mirror.cursor().expect("cursor");
                self.mirror.rotate(spec)?;
                self.host_rotate(spec, child);
            }
            SimOp::Split(idx) => {
                let u = self.mirror.cursor().expect("cursor");
                let promoted = self.mirror.keys(u).get(idx).copied();
                self.mirror.split_node(idx)?;
                self.host_split(promoted.expect("validated by the mirror"));
            }
            SimOp::Join(slot) => {
                let p = self.mirror.cursor().expect("cursor");
                let u = self.mirror.child(p, slot).ok_or(ModelError::NoSuchChild)?;
                let v = self
                    .mirror
                    .child(p, slot + 1)
                    .ok_or(ModelError::NoSuchChild)?;
                let sep = self.mirror.keys(p)[slot];
                self.mirror.join_nodes(u, v)?;
                self.host_join(sep);
            }
        }
        Ok(())
    }

    /// Apply a whole program, checking correspondence after every operation.
    /// Returns the binary-model cost of the run.
    pub fn simulate_program(&mut self, ops: &[SimOp]) -> Result<BstMeter, SimError> {
        let start = self.bst_meter();
        for op in ops {
            self.apply(*op)?;
            self.check_correspondence().map_err(SimError::Mismatch)?;
        }
        let end = self.bst_meter();
        Ok(BstMeter {
            moves: end.moves - start.moves,
            rotations: end.rotations - start.rotations,
            inits: end.inits - start.inits,
        })
    }

    /// The marked host root the cursor currently rests on.
    fn host_anchor(&self) -> NodeId {
        let at = self.host.cursor().expect("host cursor");
        debug_assert!(self.host.is_marked(at));
        at
    }

    /// Walk down through the red-black interior into the marked root of the
    /// child tree whose interval holds `probe`.
    fn host_down(&mut self, probe: Key) {
        let mut cur = self.host_anchor();
        loop {
            let slot = usize::from(probe > self.host.keys(cur)[0]);
            let child = self.host.child(cur, slot).expect("simulated child exists");
            self.host.step_to_child(child);
            cur = child;
            if self.host.is_marked(cur) {
                return;
            }
        }
    }

    /// Climb to the marked root of the parent tree.
    fn host_up(&mut self) {
        loop {
            self.host.step_to_parent();
            let at = self.host.cursor().expect("host cursor");
            if self.host.is_marked(at) {
                return;
            }
        }
    }

    /// Rotation: merge the child tree into its parent tree, re-derive the
    /// child's key interval from the shift amounts by rank, and separate it
    /// back out as the child's new tree.
    fn host_rotate(&mut self, spec: RotationSpec, mirror_child: NodeId) {
        let v_root = self.host_anchor();
        let v_count = self.host.aug(v_root).size as u64;
        let v_min = ceiling_of(&mut self.host, v_root, Key(0)).expect("child holds keys");
        self.host.set_cursor(v_root);
        self.host_up();
        let u_root = self.host_anchor();
        let merged = merge_marked(&mut self.host, u_root, v_root);

        let old_lo = rank_of_key(&mut self.host, merged, v_min).expect("key is present");
        let old_hi = old_lo + v_count - 1;
        let new_lo = match spec.left {
            Shift::Promote(k) => old_lo + k as u64,
            Shift::Demote(k) => old_lo - k as u64,
        };
        let new_hi = match spec.right {
            Shift::Promote(k) => old_hi - k as u64,
            Shift::Demote(k) => old_hi + k as u64,
        };
        let lo = rank_select(&mut self.host, merged, new_lo).expect("rank in range");
        let hi = rank_select(&mut self.host, merged, new_hi).expect("rank in range");
        debug_assert_eq!(lo, self.mirror.keys(mirror_child)[0]);
        debug_assert_eq!(hi, *self.mirror.keys(mirror_child).last().unwrap());

        let (_rem, carved) =
            separate_marked(&mut self.host, merged, lo, hi).expect("interval is nonempty");
        self.host.set_cursor(carved);
    }

    /// Node split at the promoted key: split the red-black tree there, mark
    /// both halves, and merge the single-key remainder into the parent tree
    /// (or leave it as the new root).
    fn host_split(&mut self, promoted: Key) {
        let u_root = self.host_anchor();
        let att = attachment_of(&self.host, u_root);
        let had_parent = self.host.parent(u_root).is_some();
        self.host.detach(u_root);
        self.host.set_marked(u_root, false);
        let pivot = split_tree(&mut self.host, u_root, promoted).expect("key present");
        for slot in 0..2 {
            let side = self.host.child(pivot, slot).expect("interior key");
            if self.host.aug(side).red {
                self.host.set_red(side, false);
            }
            self.host.set_marked(side, true);
        }
        if self.host.aug(pivot).red {
            self.host.set_red(pivot, false);
        }
        self.host.set_marked(pivot, true);
        self.host.refresh(pivot);
        relink(&mut self.host, att, pivot);
        if had_parent {
            let hook = self.host.parent(pivot).expect("re-attached");
            let p_root = self.host.top_of_marked(hook);
            let merged = merge_marked(&mut self.host, p_root, pivot);
            self.host.set_cursor(merged);
        } else {
            self.host.set_cursor(pivot);
        }
    }

    /// Node join at the demoted separator: separate it into a singleton whose
    /// marked children are the two joined trees, unmark them, concatenate
    /// through the separator and mark the result.
    fn host_join(&mut self, sep: Key) {
        let p_root = self.host_anchor();
        let (_rem, single) =
            separate_marked(&mut self.host, p_root, sep, sep).expect("separator is present");
        debug_assert_eq!(self.host.keys(single).len(), 1);
        let left = self.host.child(single, 0).expect("joined left tree");
        let right = self.host.child(single, 1).expect("joined right tree");
        debug_assert!(self.host.is_marked(left) && self.host.is_marked(right));
        self.host.set_marked(left, false);
        self.host.set_marked(right, false);
        let att = attachment_of(&self.host, single);
        self.host.detach(single);
        self.host.set_marked(single, false);
        self.host.refresh(single);
        let joined = concat_pivot(&mut self.host, single);
        if self.host.aug(joined).red {
            self.host.set_red(joined, false);
        }
        self.host.set_marked(joined, true);
        relink(&mut self.host, att, joined);
        self.host.set_cursor(joined);
    }

    /// Structural correspondence: decomposing the host by marked roots gives
    /// node-for-node the mirror's tree, and every red-black piece is valid.
    pub fn check_correspondence(&self) -> Result<(), String> {
        self.host.validate().map_err(|v| v.to_string())?;
        let m_root = self.mirror.root().expect("mirror nonempty");
        let h_root = self.host.root().expect("host nonempty");
        if !self.host.is_marked(h_root) {
            return Err("host root is not marked".into());
        }
        compare_nodes(&self.mirror, m_root, &self.host, h_root)
    }
}

impl Machine {
    /// The marked root of the tree containing `id` (which may itself be
    /// marked).
    pub(crate) fn top_of_marked(&self, mut id: NodeId) -> NodeId {
        while !self.is_marked(id) {
            id = self.parent(id).expect("marked root above");
        }
        id
    }
}

/// Host tree for one simulated node and its descendants.
fn build_host(host: &mut Machine, mirror: &Machine, node: NodeId) -> NodeId {
    let keys = mirror.keys(node).to_vec();
    let root = crate::classic::build_sorted(host, &keys);
    host.set_marked(root, true);
    // Attach simulated children at the gap slots, in key order.
    let mut gaps: Vec<(NodeId, usize)> = Vec::new();
    collect_gaps(host, root, &mut gaps);
    debug_assert_eq!(gaps.len(), keys.len() + 1);
    for (slot_idx, (gap_node, gap_slot)) in gaps.into_iter().enumerate() {
        if let Some(child) = mirror.child(node, slot_idx) {
            let child_root = build_host(host, mirror, child);
            host.link_slot(gap_node, gap_slot, Some(child_root));
        }
    }
    root
}

/// Null child slots of one red-black tree, ordered by key position.
fn collect_gaps(host: &Machine, id: NodeId, out: &mut Vec<(NodeId, usize)>) {
    for slot in 0..2 {
        match host.child(id, slot) {
            Some(c) if !host.is_marked(c) => collect_gaps(host, c, out),
            _ => out.push((id, slot)),
        }
    }
}

fn compare_nodes(
    mirror: &Machine,
    m_node: NodeId,
    host: &Machine,
    h_root: NodeId,
) -> Result<(), String> {
    crate::classic::check_shape(host, h_root)?;
    let m_keys = mirror.keys(m_node);
    let mut h_keys = Vec::new();
    let mut h_children = Vec::new();
    flatten_tree(host, h_root, &mut h_keys, &mut h_children);
    if m_keys != h_keys.as_slice() {
        return Err(format!("node {m_node}: keys {m_keys:?} vs host {h_keys:?}"));
    }
    let m_children: Vec<Option<NodeId>> = (0..=m_keys.len())
        .map(|slot| mirror.child(m_node, slot))
        .collect();
    if m_children.len() != h_children.len() {
        return Err(format!("node {m_node}: child slot count differs"));
    }
    for (mc, hc) in m_children.iter().zip(h_children.iter()) {
        match (mc, hc) {
            (None, None) => {}
            (Some(mc), Some(hc)) => compare_nodes(mirror, *mc, host, *hc)?,
            _ => return Err(format!("node {m_node}: child presence differs")),
        }
    }
    Ok(())
}

/// Keys and gap contents of one red-black tree in key order.
fn flatten_tree(
    host: &Machine,
    id: NodeId,
    keys: &mut Vec<Key>,
    children: &mut Vec<Option<NodeId>>,
) {
    match host.child(id, 0) {
        Some(c) if !host.is_marked(c) => flatten_tree(host, c, keys, children),
        c => children.push(c),
    }
    keys.push(host.keys(id)[0]);
    match host.child(id, 1) {
        Some(c) if !host.is_marked(c) => flatten_tree(host, c, keys, children),
        c => children.push(c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SplitMix;

    #[test]
    fn initial_host_corresponds() {
        for b in [2u32, 4, 16] {
            let keys: Vec<u32> = (1..=100).collect();
            let sim = BtreeSimulator::from_sorted(&keys, b);
            sim.check_correspondence().unwrap();
            assert_eq!(sim.bst_meter().total(), 0, "construction is free");
        }
    }

    #[test]
    fn moves_walk_between_adjacent_roots() {
        let keys: Vec<u32> = (1..=4095).collect();
        let mut sim = BtreeSimulator::from_sorted(&keys, 16);
        sim.apply(SimOp::Begin).unwrap();
        let before = sim.bst_meter().total();
        sim.apply(SimOp::Down(0)).unwrap();
        let spent = sim.bst_meter().total() - before;
        assert!(spent >= 1 && spent <= 20, "one move costs {spent}");
        sim.check_correspondence().unwrap();
        sim.apply(SimOp::Up).unwrap();
        sim.check_correspondence().unwrap();
    }

    #[test]
    fn empty_program_costs_nothing() {
        let mut sim = BtreeSimulator::from_sorted(&[1, 2, 3], 4);
        let meter = sim.simulate_program(&[]).unwrap();
        assert_eq!(meter.total(), 0);
    }

    #[test]
    fn interval_recut_rotation_corresponds() {
        // Parent {10,20,30,40} with child {22,24,26} between 20 and 30;
        // demote one left, promote one right.
        let mut mirror = Machine::new(8);
        let l21 = mirror.alloc(vec![Key(21)], vec![None, None]);
        let l23 = mirror.alloc(vec![Key(23)], vec![None, None]);
        let l25 = mirror.alloc(vec![Key(25)], vec![None, None]);
        let l27 = mirror.alloc(vec![Key(27)], vec![None, None]);
        let child = mirror.alloc(
            vec![Key(22), Key(24), Key(26)],
            vec![Some(l21), Some(l23), Some(l25), Some(l27)],
        );
        let parent = mirror.alloc(
            vec![Key(10), Key(20), Key(30), Key(40)],
            vec![None, None, Some(child), None, None],
        );
        mirror.set_root_node(Some(parent));
        let mut sim = BtreeSimulator::from_machine(mirror);
        sim.check_correspondence().unwrap();
        sim.simulate_program(&[
            SimOp::Begin,
            SimOp::Down(2),
            SimOp::Rotate(RotationSpec::new(Shift::Demote(1), Shift::Promote(1))),
        ])
        .unwrap();
        let m = sim.mirror();
        let keys =
            |id: NodeId| m.keys(id).iter().map(|k| k.0).collect::<Vec<_>>();
        assert_eq!(keys(parent), vec![10, 26, 30, 40]);
        assert_eq!(keys(child), vec![20, 22, 24]);
    }

    #[test]
    fn minimal_join_excises_parent() {
        let mut mirror = Machine::new(4);
        let u = mirror.alloc(vec![Key(3)], vec![None, None]);
        let v = mirror.alloc(vec![Key(7)], vec![None, None]);
        let p = mirror.alloc(vec![Key(5)], vec![Some(u), Some(v)]);
        mirror.set_root_node(Some(p));
        let mut sim = BtreeSimulator::from_machine(mirror);
        sim.simulate_program(&[SimOp::Begin, SimOp::Join(0)]).unwrap();
        let m = sim.mirror();
        let root = m.root().unwrap();
        assert_eq!(
            m.keys(root),
            &[Key(3), Key(5), Key(7)],
            "one node over all three keys"
        );
    }

    #[test]
    fn split_and_join_round_trip() {
        let keys: Vec<u32> = (1..=7).collect();
        let mut sim = BtreeSimulator::from_sorted(&keys, 8);
        sim.apply(SimOp::Begin).unwrap();
        sim.apply(SimOp::Split(3)).unwrap();
        sim.check_correspondence().unwrap();
        // Cursor is at the new root; join the halves back.
        sim.apply(SimOp::Join(0)).unwrap();
        sim.check_correspondence().unwrap();
        let m = sim.mirror();
        assert_eq!(
            m.keys(m.root().unwrap()),
            (1..=7).map(Key).collect::<Vec<_>>()
        );
    }

    #[test]
    fn random_legal_programs_correspond_across_b() {
        let mut rng = SplitMix::new(1717);
        for b in [2u32, 4, 16] {
            let keys: Vec<u32> = (1..=120).collect();
            let mut sim = BtreeSimulator::from_sorted(&keys, b);
            sim.apply(SimOp::Begin).unwrap();
            let mut applied = 0;
            let mut tries = 0;
            while applied < 400 && tries < 8000 {
                tries += 1;
                let op = random_op(&mut rng, sim.mirror(), b);
                match sim.apply(op) {
                    Ok(()) => {
                        applied += 1;
                        sim.check_correspondence()
                            .unwrap_or_else(|e| panic!("B={b} after {op:?}: {e}"));
                    }
                    Err(SimError::Model(_)) => {}
                    Err(e) => panic!("B={b}: {e}"),
                }
            }
            assert!(applied >= 300, "B={b}: only {applied} ops applied");
        }
    }

    /// A random plausibly-legal operation at the mirror's cursor.
    pub(crate) fn random_op(rng: &mut SplitMix, mirror: &Machine, b: u32) -> SimOp {
        let at = mirror.cursor().expect("cursor");
        let n = mirror.keys(at).len() as u64;
        match rng.below(10) {
            0..=2 => SimOp::Down(rng.below(n + 1) as usize),
            3 => SimOp::Up,
            4 => SimOp::Begin,
            5..=6 => {
                // Sample a valid re-cut of the interval when a parent exists.
                let p = match mirror.parent(at) {
                    Some(p) => p,
                    None => return SimOp::Up,
                };
                let np = mirror.keys(p).len() as u64;
                let m = n + np;
                let lo =
                    mirror.keys(p).partition_point(|k| *k < mirror.keys(at)[0]) as u64 + 1;
                let hi = lo + n - 1;
                let cap = (b - 1) as u64;
                let min_nu = 1.max(m.saturating_sub(cap));
                let max_nu = cap.min(m - 1);
                if min_nu > max_nu {
                    return SimOp::Up;
                }
                let nu = rng.range(min_nu, max_nu);
                let new_lo = rng.range(1, m - nu + 1);
                let new_hi = new_lo + nu - 1;
                let left = if new_lo >= lo {
                    Shift::Promote((new_lo - lo) as u32)
                } else {
                    Shift::Demote((lo - new_lo) as u32)
                };
                let right = if new_hi <= hi {
                    Shift::Promote((hi - new_hi) as u32)
                } else {
                    Shift::Demote((new_hi - hi) as u32)
                };
                SimOp::Rotate(RotationSpec::new(left, right))
            }
            7..=8 => SimOp::Split(rng.below(n + 1) as usize),
            _ => SimOp::Join(rng.below(n + 1) as usize),
        }
    }
}
