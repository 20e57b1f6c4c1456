//! Classic B-tree algorithms for `B >= 4`: equal leaf depth, every non-root
//! node at least `min_fill` keys. Whole-tree split descends to the key,
//! carves each node on the path around the descent slot, and folds the carved
//! pieces back together level by level; concatenation walks the taller tree's
//! spine down to the matching height and glues the shorter tree there,
//! splitting full spine nodes on the way and redistributing keys with the new
//! sibling when it arrives under-full. No rotations are ever issued.

use crate::model::machine::End;
use crate::model::{Key, Machine, NodeId};

use super::{min_fill, rank_of, tree_child, ClassicError, SearchOutcome};

pub(super) fn build_sorted(m: &mut Machine, keys: &[Key]) -> NodeId {
    let cap = m.max_keys();
    if keys.len() <= cap {
        let children = vec![None; keys.len() + 1];
        return m.alloc(keys.to_vec(), children);
    }
    let b = m.b() as u64;
    let mut height = 2u32;
    while pow_cap(b, height) < keys.len() as u64 {
        height += 1;
    }
    build_level(m, keys, height, true)
}

/// Maximum keys of a tree with `h` levels.
fn pow_cap(b: u64, h: u32) -> u64 {
    b.saturating_pow(h).saturating_sub(1)
}

/// Minimum keys of a non-root subtree with `h` levels.
fn min_cap(m0: u64, h: u32) -> u64 {
    (m0 + 1).saturating_pow(h) - 1
}

fn build_level(m: &mut Machine, keys: &[Key], height: u32, is_root: bool) -> NodeId {
    if height == 1 {
        let children = vec![None; keys.len() + 1];
        return m.alloc(keys.to_vec(), children);
    }
    let n = keys.len() as u64;
    let b = m.b() as u64;
    let m0 = min_fill(m.b()) as u64;
    let hi = pow_cap(b, height - 1);
    let min_children = if is_root { 2 } else { m0 + 1 };
    let mut t = (n + 1).div_ceil(hi + 1).max(min_children).min(b);
    while t > min_children && (n + 1 - t) / t < min_cap(m0, height - 1) {
        t -= 1;
    }
    debug_assert!(t * min_cap(m0, height - 1) <= n + 1 - t && n + 1 - t <= t * hi);

    let total = (n + 1 - t) as usize;
    let t = t as usize;
    let base = total / t;
    let extra = total % t;
    let mut node_keys = Vec::with_capacity(t - 1);
    let mut children = Vec::with_capacity(t);
    let mut at = 0usize;
    for part in 0..t {
        let size = base + usize::from(part < extra);
        children.push(Some(build_level(m, &keys[at..at + size], height - 1, false)));
        at += size;
        if part < t - 1 {
            node_keys.push(keys[at]);
            at += 1;
        }
    }
    debug_assert_eq!(at, keys.len());
    m.alloc(node_keys, children)
}

pub(super) fn split_tree(m: &mut Machine, root: NodeId, x: Key) -> Result<NodeId, ClassicError> {
    // Locate first, so an absent key leaves the tree untouched.
    m.set_cursor(root);
    let hit = match super::search_from(m, root, x) {
        SearchOutcome::Found { node, idx } => {
            debug_assert_eq!(m.keys(node)[idx], x);
            node
        }
        SearchOutcome::Absent { .. } => return Err(ClassicError::KeyAbsent),
    };

    // Carve top-down along the search path, stacking the side pieces with the
    // separator keys they donate.
    let mut left_stack: Vec<(Option<NodeId>, Key)> = Vec::new();
    let mut right_stack: Vec<(Option<NodeId>, Key)> = Vec::new();
    let mut cur = root;
    while cur != hit {
        let slot = m.keys(cur).partition_point(|k| *k < x);
        let carved = m.carve_around_slot(cur, slot);
        if let Some(sep) = carved.sep_left {
            left_stack.push((carved.left, sep));
        }
        if let Some(sep) = carved.sep_right {
            right_stack.push((carved.right, sep));
        }
        cur = carved.mid.expect("descent path child");
    }
    let idx = m.keys(hit).binary_search(&x).expect("key located above");
    let pivot = m.carve_around_key(hit, idx);
    let mut left_acc = m.child(pivot, 0);
    let mut right_acc = m.child(pivot, 1);

    // Fold bottom-up; accumulated heights grow by at most one level per step,
    // so the concatenation costs telescope.
    while let Some((piece, sep)) = left_stack.pop() {
        left_acc = Some(fold_concat(m, piece, sep, left_acc));
    }
    while let Some((piece, sep)) = right_stack.pop() {
        right_acc = Some(fold_concat(m, right_acc, sep, piece));
    }

    for side in [left_acc, right_acc].into_iter().flatten() {
        m.detach(side);
    }
    m.link_slot(pivot, 0, left_acc);
    m.link_slot(pivot, 1, right_acc);
    m.refresh(pivot);
    Ok(pivot)
}

fn fold_concat(m: &mut Machine, left: Option<NodeId>, sep: Key, right: Option<NodeId>) -> NodeId {
    for side in [left, right].into_iter().flatten() {
        m.detach(side);
    }
    let pivot = m.alloc(vec![sep], vec![left, right]);
    concat_pivot(m, pivot)
}

pub(super) fn concat_pivot(m: &mut Machine, pivot: NodeId) -> NodeId {
    let left = tree_child(m, pivot, 0);
    let right = tree_child(m, pivot, 1);
    match (left, right) {
        (None, None) => pivot,
        (None, Some(r)) => {
            let (key, carried) = consume_pivot(m, pivot, r);
            insert_end(m, r, key, carried, End::Front)
        }
        (Some(l), None) => {
            let (key, carried) = consume_pivot(m, pivot, l);
            insert_end(m, l, key, carried, End::Back)
        }
        (Some(l), Some(r)) => {
            let rl = rank_of(m, Some(l));
            let rr = rank_of(m, Some(r));
            if rl == rr {
                concat_equal(m, pivot, l, r)
            } else {
                let key = m.keys(pivot)[0];
                m.detach(l);
                m.detach(r);
                m.free(pivot);
                if rl > rr {
                    glue_into_spine(m, l, key, r, End::Back, rr)
                } else {
                    glue_into_spine(m, r, key, l, End::Front, rl)
                }
            }
        }
    }
}

/// Take the key and the carried slot content out of a pivot whose other side
/// is the surviving tree; the husk is discarded.
fn consume_pivot(m: &mut Machine, pivot: NodeId, survivor: NodeId) -> (Key, Option<NodeId>) {
    let key = m.keys(pivot)[0];
    let survivor_slot = m.slot_of(pivot, survivor);
    let carried = m.child(pivot, 1 - survivor_slot);
    if let Some(c) = carried {
        m.detach(c);
    }
    m.detach(survivor);
    m.free(pivot);
    (key, carried)
}

/// Equal heights: join the two roots through the pivot when they fit,
/// otherwise keep the pivot as the root and even out an under-full side.
fn concat_equal(m: &mut Machine, pivot: NodeId, l: NodeId, r: NodeId) -> NodeId {
    let cap = m.max_keys();
    let m0 = min_fill(m.b());
    let nl = m.node(l).key_count();
    let nr = m.node(r).key_count();
    if nl + nr < cap {
        m.set_cursor(pivot);
        return m.join_nodes(l, r).expect("capacity checked");
    }
    if nl < m0 {
        shift_keys(m, pivot, r, l, m0 - nl);
    } else if nr < m0 {
        shift_keys(m, pivot, l, r, m0 - nr);
    }
    m.refresh(pivot);
    pivot
}

/// Move `need` keys from `donor` into its sibling `taker` through the single
/// separator key of `seam`; both stay children of `seam`.
fn shift_keys(m: &mut Machine, seam: NodeId, donor: NodeId, taker: NodeId, need: usize) {
    debug_assert!(need >= 1);
    let donor_slot = m.slot_of(seam, donor);
    let taker_slot = m.slot_of(seam, taker);
    debug_assert_eq!(donor_slot + taker_slot, 1);
    let sep_old = m.keys(seam)[0];
    let t = need - 1;
    let nd = m.node(donor).key_count();
    // Donate the run of keys nearest the seam, whose far end becomes the new
    // separator.
    let idx = if donor_slot == 1 { t } else { nd - 1 - t };
    m.detach(donor);
    let husk = m.carve_around_key(donor, idx);
    let sep_new = m.keys(husk)[0];
    let (move_slot, keep_slot) = if donor_slot == 1 { (0, 1) } else { (1, 0) };
    let moving = m.child(husk, move_slot);
    let keeping = m.child(husk, keep_slot);
    for c in [moving, keeping].into_iter().flatten() {
        m.detach(c);
    }
    let end = if donor_slot == 1 { End::Back } else { End::Front };
    match moving {
        Some(piece) if t > 0 => m.absorb_node(taker, end, sep_old, piece),
        slot_content => m.glue_pair(taker, end, sep_old, slot_content),
    }
    // The donor always keeps at least the minimum fill.
    debug_assert!(keeping.is_some());
    m.link_slot(seam, donor_slot, keeping);
    m.set_key(seam, 0, sep_new);
    m.free(husk);
    m.refresh(seam);
}

/// Walk the spine of `top` down to the node one rank above `short_rank`,
/// splitting full spine nodes on the way, glue `(key, short)` at the facing
/// end there, and repair the fill of `short` if it arrived under-full.
/// Returns the (possibly new) root of the combined tree.
fn glue_into_spine(
    m: &mut Machine,
    top: NodeId,
    key: Key,
    short: NodeId,
    end: End,
    short_rank: u32,
) -> NodeId {
    let cap = m.max_keys();
    let m0 = min_fill(m.b());
    let mut cur = top;
    loop {
        if m.node(cur).key_count() == cap {
            m.set_cursor(cur);
            let mid = m.node(cur).key_count() / 2;
            let parent = m.split_node(mid).expect("pre-emptive split is legal");
            if end == End::Back {
                let slot = m.slot_of(parent, cur);
                cur = m.child(parent, slot + 1).expect("fresh right half");
            }
        }
        if rank_of(m, Some(cur)) == short_rank + 1 {
            break;
        }
        let next = match end {
            End::Back => tree_child(m, cur, m.node(cur).children.len() - 1),
            End::Front => tree_child(m, cur, 0),
        }
        .expect("spine child on an internal level");
        m.charge_moves(1);
        m.set_cursor(next);
        cur = next;
    }

    let n_short = m.node(short).key_count();
    if n_short < m0 {
        let w_slot = match end {
            End::Back => m.node(cur).children.len() - 1,
            End::Front => 0,
        };
        let w = tree_child(m, cur, w_slot).expect("existing edge child");
        let nw = m.node(w).key_count();
        if nw + n_short < cap {
            // Fuse the edge child, the key and the arriving tree into one node.
            m.detach(short);
            m.absorb_node(w, end, key, short);
            m.refresh_up(w, None);
            return m.top_of(cur);
        }
        // Donate a run of the edge child's keys to the arrival.
        let t = m0 - 1 - n_short;
        let idx = match end {
            End::Back => nw - 1 - t,
            End::Front => t,
        };
        m.detach(w);
        let husk = m.carve_around_key(w, idx);
        let sep_new = m.keys(husk)[0];
        let (keep_slot, move_slot) = match end {
            End::Back => (0, 1),
            End::Front => (1, 0),
        };
        let keeping = m.child(husk, keep_slot);
        let moving = m.child(husk, move_slot);
        for c in [keeping, moving].into_iter().flatten() {
            m.detach(c);
        }
        let receive_end = match end {
            End::Back => End::Front,
            End::Front => End::Back,
        };
        match moving {
            Some(piece) if t > 0 => m.absorb_node(short, receive_end, key, piece),
            slot_content => m.glue_pair(short, receive_end, key, slot_content),
        }
        m.free(husk);
        m.link_slot(cur, w_slot, keeping);
        m.glue_pair(cur, end, sep_new, Some(short));
        m.refresh_up(short, None);
        return m.top_of(cur);
    }

    m.glue_pair(cur, end, key, Some(short));
    m.refresh_up(short, None);
    m.top_of(cur)
}

/// Insert a key (with the slot content riding on its outer side) at the far
/// end of a tree, splitting full nodes on the way down to the end leaf.
pub(super) fn insert_end(
    m: &mut Machine,
    root: NodeId,
    key: Key,
    carried: Option<NodeId>,
    end: End,
) -> NodeId {
    let cap = m.max_keys();
    let mut cur = root;
    loop {
        if m.node(cur).key_count() == cap {
            m.set_cursor(cur);
            let mid = m.node(cur).key_count() / 2;
            let parent = m.split_node(mid).expect("pre-emptive split is legal");
            if end == End::Back {
                let slot = m.slot_of(parent, cur);
                cur = m.child(parent, slot + 1).expect("fresh right half");
            }
        }
        let next = match end {
            End::Back => tree_child(m, cur, m.node(cur).children.len() - 1),
            End::Front => tree_child(m, cur, 0),
        };
        match next {
            Some(child) => {
                m.charge_moves(1);
                m.set_cursor(child);
                cur = child;
            }
            None => break,
        }
    }
    m.glue_pair(cur, end, key, carried);
    m.refresh_up(cur, None);
    m.top_of(cur)
}
