//! The reference tree and the interleave lower bound.
//!
//! `ReferenceTree` is the fixed complete binary search tree over the padded
//! universe `[1, 2^height - 1]`. It is never rotated and never materialized:
//! depths, parents and children all follow from the bit pattern of a key, so
//! only the per-node preferred-child state is stored. A node's left region is
//! the node itself together with its left subtree; its right region is the
//! right subtree alone, so a search for the node's own key counts as a left
//! access.
//!
//! Replaying a search flips the preferred child of every strict ancestor of
//! the key toward it. Flips between left and right are the interleave bound's
//! currency; first assignments (no previous preference) are tallied apart,
//! since they are capped by the universe size over any whole sequence.

use std::fmt;

use crate::model::Key;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Preferred {
    None,
    Left,
    Right,
}

/// Error for keys outside the universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutOfUniverse(pub u32);

impl fmt::Display for OutOfUniverse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "key {} is outside the universe", self.0)
    }
}

impl std::error::Error for OutOfUniverse {}

/// Preferred-child counts reported by one search replay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchUpdate {
    /// Left-right flips: the interleave bound counts exactly these.
    pub flips: u32,
    /// First assignments out of the no-preference state.
    pub first_touches: u32,
}

impl SearchUpdate {
    /// All preferred-child transitions, flips and first assignments alike.
    pub fn transitions(&self) -> u32 {
        self.flips + self.first_touches
    }
}

/// The implicit complete reference tree with preferred-child state.
#[derive(Clone, Debug)]
pub struct ReferenceTree {
    height: u32,
    preferred: Vec<Preferred>,
}

/// Smallest height whose complete tree holds at least `n` keys.
pub fn height_for(n: u32) -> u32 {
    let mut height = 1;
    while (1u64 << height) - 1 < n as u64 {
        height += 1;
    }
    height
}

impl ReferenceTree {
    /// Fresh tree over `[1, 2^height - 1]`; nothing is preferred yet.
    pub fn new(height: u32) -> Self {
        assert!((1..=31).contains(&height));
        ReferenceTree {
            height,
            preferred: vec![Preferred::None; 1 << height],
        }
    }

    /// Tree padded up from a universe of `n` real keys.
    pub fn for_universe(n: u32) -> Self {
        ReferenceTree::new(height_for(n))
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of keys including padding.
    pub fn padded_size(&self) -> u32 {
        (1u32 << self.height) - 1
    }

    pub fn contains(&self, key: Key) -> bool {
        key.0 >= 1 && key.0 <= self.padded_size()
    }

    /// Depth of a key in the complete tree; the root is depth zero.
    pub fn depth(&self, key: Key) -> u32 {
        debug_assert!(self.contains(key));
        self.height - 1 - key.0.trailing_zeros()
    }

    /// The ancestor of `key` at depth `d` (including the key itself at its
    /// own depth).
    pub fn ancestor_at(&self, key: Key, d: u32) -> Key {
        debug_assert!(d <= self.depth(key));
        let b = self.height - 1 - d;
        Key(((key.0 >> b) | 1) << b)
    }

    pub fn parent(&self, key: Key) -> Option<Key> {
        let d = self.depth(key);
        (d > 0).then(|| self.ancestor_at(key, d - 1))
    }

    /// Child of an internal node on the given side.
    pub fn child(&self, key: Key, side: Preferred) -> Option<Key> {
        let b = key.0.trailing_zeros();
        if b == 0 {
            return None;
        }
        let step = 1 << (b - 1);
        match side {
            Preferred::Left => Some(Key(key.0 - step)),
            Preferred::Right => Some(Key(key.0 + step)),
            Preferred::None => None,
        }
    }

    pub fn preferred(&self, key: Key) -> Preferred {
        self.preferred[key.0 as usize]
    }

    /// Replay a search: every strict ancestor's preference turns toward the
    /// key. Returns the flip and first-assignment counts.
    pub fn record_search(&mut self, key: Key) -> Result<SearchUpdate, OutOfUniverse> {
        if !self.contains(key) {
            return Err(OutOfUniverse(key.0));
        }
        let mut update = SearchUpdate::default();
        for d in 0..self.depth(key) {
            let anc = self.ancestor_at(key, d);
            // The left region is the node plus its left subtree, so only
            // strictly larger keys are right accesses.
            let toward = if key.0 > anc.0 {
                Preferred::Right
            } else {
                Preferred::Left
            };
            let state = &mut self.preferred[anc.0 as usize];
            match *state {
                Preferred::None => update.first_touches += 1,
                s if s != toward => update.flips += 1,
                _ => {}
            }
            *state = toward;
        }
        Ok(update)
    }

    /// The maximal preferred path through `key` under the current state:
    /// climb while the parent prefers this side, then follow preferences
    /// down. Keys come back ordered by depth.
    pub fn path_of(&self, key: Key) -> Vec<Key> {
        debug_assert!(self.contains(key));
        let mut top = key;
        while let Some(p) = self.parent(top) {
            let toward = if top.0 > p.0 {
                Preferred::Right
            } else {
                Preferred::Left
            };
            if self.preferred(p) != toward {
                break;
            }
            top = p;
        }
        let mut path = vec![top];
        let mut cur = top;
        loop {
            let side = self.preferred(cur);
            match self.child(cur, side) {
                Some(c) => {
                    path.push(c);
                    cur = c;
                }
                None => break,
            }
        }
        path
    }
}

/// The interleave bound of a sequence: total left-right flips over a replay
/// from the all-none state.
pub fn interleave_bound(keys: &[u32], height: u32) -> Result<u64, OutOfUniverse> {
    let mut rt = ReferenceTree::new(height);
    let mut total = 0u64;
    for &k in keys {
        total += rt.record_search(Key(k))?.flips as u64;
    }
    Ok(total)
}
