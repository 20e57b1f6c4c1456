//! Balanced binary trees for `B <= 3`, colored red-black: equal black depth
//! replaces the equal leaf depth that single-key nodes cannot provide for
//! general key counts. Tree split raises the key to the top edge by edge and
//! folds each displaced ancestor into the growing side trees; concatenation
//! sinks the pivot key along the taller side's spine to matching black
//! height and repairs the one possible red-red violation on the way back up.
//! Everything runs through cursor moves and edge rotations at the cursor, so
//! costs and legality are exactly those of the binary machine.

use crate::model::{Key, Machine, NodeId, RotationSpec, Shift};

use super::{rank_of, tree_child, ClassicError};

fn is_red(m: &Machine, id: NodeId) -> bool {
    m.aug(id).red
}

fn blacken(m: &mut Machine, id: NodeId) {
    if is_red(m, id) {
        m.set_red(id, false);
    }
}

/// Rotation lifting the child on `side` over its parent.
fn lift_spec(side: usize) -> RotationSpec {
    if side == 0 {
        RotationSpec::new(Shift::Promote(1), Shift::Demote(1))
    } else {
        RotationSpec::new(Shift::Demote(1), Shift::Promote(1))
    }
}

/// Re-plant the cursor at a remembered position. The operations here keep
/// O(1) fingers; re-pointing to one executes no unit operation, unlike the
/// edge-by-edge walks, which are always charged.
fn jump_finger(m: &mut Machine, target: NodeId) {
    m.set_cursor(target);
}

pub(super) fn build_sorted(m: &mut Machine, keys: &[Key]) -> NodeId {
    let n = keys.len();
    let deep = n.ilog2();
    let perfect = (n + 1).is_power_of_two();
    build_rec(m, keys, 0, deep, perfect)
}

fn build_rec(m: &mut Machine, keys: &[Key], depth: u32, deep: u32, perfect: bool) -> NodeId {
    let mid = keys.len() / 2;
    let left = if mid > 0 {
        Some(build_rec(m, &keys[..mid], depth + 1, deep, perfect))
    } else {
        None
    };
    let right = if mid + 1 < keys.len() {
        Some(build_rec(m, &keys[mid + 1..], depth + 1, deep, perfect))
    } else {
        None
    };
    let id = m.alloc(vec![keys[mid]], vec![left, right]);
    if !perfect && depth == deep {
        m.set_red(id, true);
    }
    id
}

/// Rebuild the subtree under a single-key pivot into one red-black tree; the
/// pivot node stays the subtree top. Works attached or detached and leaves
/// the cursor inside the rebuilt subtree.
pub(super) fn concat_pivot(m: &mut Machine, pivot: NodeId) -> NodeId {
    if m.cursor().is_some() {
        jump_finger(m, pivot);
    } else {
        m.set_cursor(pivot);
    }
    let left = tree_child(m, pivot, 0);
    let right = tree_child(m, pivot, 1);
    // A red-rooted side under the black pivot is fine; only the carried
    // shorter side must be black, since the pivot arrives red down there.
    let rl = rank_of(m, left);
    let rr = rank_of(m, right);
    m.set_red(pivot, false);
    if rl == rr {
        m.refresh(pivot);
        return pivot;
    }
    let (spine_side, short) = if rl > rr { (0, right) } else { (1, left) };
    if let Some(s) = short {
        blacken(m, s);
    }
    let target = rank_of(m, short);
    let tall = tree_child(m, pivot, spine_side).expect("taller side is nonempty");
    if rank_of(m, Some(tall)) == target {
        // Blackening the carried root closed the gap.
        m.refresh(pivot);
        return pivot;
    }
    if rank_of(m, Some(tall)) == target + 1 && !is_red(m, tall) {
        let inner = tree_child(m, tall, 1 - spine_side);
        match inner {
            Some(i) if is_red(m, i) => {
                // Double rotation lifts the red inner node over the pivot;
                // everything it touches ends black at one more black height.
                m.step_to_child(tall);
                m.step_to_child(i);
                m.rotate(lift_spec(1 - spine_side)).expect("inner lift");
                m.step_to_parent();
                m.rotate(lift_spec(spine_side)).expect("outer lift");
                m.set_red(i, false);
                m.refresh(tall);
                m.refresh(pivot);
                return pivot;
            }
            _ => {
                debug_assert_eq!(rank_of(m, inner), target);
                // One rotation lifts the taller root over the pivot; the
                // pivot key turns red between two black-rooted subtrees of
                // equal rank.
                m.step_to_child(tall);
                m.rotate(lift_spec(spine_side)).expect("lift rotation");
                m.set_red(tall, true);
                m.refresh(tall);
                m.refresh(pivot);
                return pivot;
            }
        }
    }

    // Sink the pivot key along the taller side's spine until the subtree it
    // faces is a black one of matching rank (or a gap when the rank is zero).
    let mut holder = pivot;
    loop {
        let v = tree_child(m, holder, spine_side);
        match v {
            None => {
                // Gaps are only reached when the carried side is empty too.
                debug_assert_eq!(target, 0);
                break;
            }
            Some(v) => {
                if !is_red(m, v) && m.aug(v).rank == target {
                    break;
                }
                let v_red = is_red(m, v);
                m.step_to_child(v);
                m.rotate(lift_spec(spine_side)).expect("spine rotation");
                // The risen key keeps the color it had below.
                m.set_red(holder, v_red);
                holder = v;
            }
        }
    }
    m.set_red(holder, true);
    fixup_red(m, holder, pivot);
    blacken(m, pivot);
    m.refresh_up(holder, Some(pivot));
    pivot
}

/// Restore the no-red-red invariant upward from the red node `at`, never
/// touching anything above the subtree top (the cursor stands on `at`).
fn fixup_red(m: &mut Machine, at: NodeId, top: NodeId) {
    debug_assert_eq!(m.cursor(), Some(at));
    let mut x = at;
    while x != top {
        let p = match m.parent(x) {
            Some(p) if is_red(m, p) => p,
            _ => break,
        };
        if p == top {
            // A red top is blackened by the caller, which also clears this
            // red-red pair.
            break;
        }
        let gp = m.parent(p).expect("red node below the top");
        let p_side = m.slot_of(gp, p);
        let x_side = m.slot_of(p, x);
        let uncle = tree_child(m, gp, 1 - p_side);
        if uncle.is_some_and(|u| is_red(m, u)) {
            let u = uncle.unwrap();
            m.set_red(p, false);
            m.set_red(u, false);
            m.set_red(gp, true);
            m.step_to_parent();
            m.step_to_parent();
            x = gp;
            continue;
        }
        if x_side != p_side {
            // Inner child: lift it to make the pair outer. Contents swap but
            // both nodes stay red, which is exactly the wanted coloring.
            m.rotate(lift_spec(x_side)).expect("inner fixup rotation");
            m.step_to_parent();
            m.rotate(lift_spec(p_side)).expect("outer fixup rotation");
        } else {
            m.step_to_parent();
            m.rotate(lift_spec(p_side)).expect("outer fixup rotation");
        }
        // The risen content lands black in the grandparent's node, the
        // demoted content red in the parent's: the flags already agree.
        break;
    }
}

/// Split the detached tree under `root` at key `x`: raise `x` to the top
/// edge by edge, folding each displaced ancestor (a single-key pivot over
/// two valid pieces) back into a red-black side tree.
pub(super) fn split_tree(m: &mut Machine, root: NodeId, x: Key) -> Result<NodeId, ClassicError> {
    debug_assert!(m.parent(root).is_none());
    m.set_cursor(root);
    let mut cur = root;
    loop {
        let key = m.keys(cur)[0];
        if key == x {
            break;
        }
        let side = usize::from(x > key);
        match tree_child(m, cur, side) {
            Some(child) => {
                m.step_to_child(child);
                cur = child;
            }
            None => return Err(ClassicError::KeyAbsent),
        }
    }

    let mut xnode = cur;
    while let Some(p) = m.parent(xnode) {
        let side = m.slot_of(p, xnode);
        debug_assert_eq!(m.cursor(), Some(xnode));
        m.rotate(lift_spec(side)).expect("raise rotation");
        // The displaced ancestor key now sits pivot-shaped in the old node.
        let folded = concat_pivot(m, xnode);
        debug_assert_eq!(folded, xnode);
        jump_finger(m, p);
        xnode = p;
    }
    m.set_red(xnode, false);
    // A side that never took part in a fold can still carry a red root (the
    // key's own bottom-level subtree); each side must stand on its own.
    for slot in 0..2 {
        if let Some(side) = tree_child(m, xnode, slot) {
            blacken(m, side);
        }
    }
    m.refresh(xnode);
    Ok(xnode)
}
