//! Monotone partial alignments and the insertion/deletion edit distance.
//!
//! All distances here are indel-only: substitutions are not a primitive
//! move, so `dist(x, y) = |x| + |y| - 2 * lcs(x, y)`. An [`Alignment`] is a
//! strictly increasing partial matching between 1-based positions of `x`
//! and `y`; its cost counts the unmatched positions on both sides.

use crate::seq::{check_same_alphabet, Seq, SeqError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("interval [{lo}, {hi}] invalid for length {len}")]
    BadInterval { lo: usize, hi: usize, len: usize },
    #[error("alignment pairs not strictly increasing or out of range")]
    MalformedPairs,
    #[error("cannot compose: first maps into length {0}, second maps from length {1}")]
    CompositionMismatch(usize, usize),
}

/// A monotone partial matching between positions of two sequences.
///
/// Pairs `(i, j)` are 1-based, strictly increasing in both coordinates.
/// Unmatched positions on either side each contribute 1 to [`cost`].
///
/// [`cost`]: Alignment::cost
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    x_len: usize,
    y_len: usize,
    pairs: Vec<(u32, u32)>,
}

/// Restriction of an alignment to a source interval: the matched image and
/// the unmatched counts on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalMapping {
    pub source: (usize, usize),
    /// `None` when no position of the source interval is matched.
    pub image: Option<(usize, usize)>,
    pub matched: usize,
    pub unmatched_source: usize,
    pub unmatched_image: usize,
}

impl IntervalMapping {
    /// Cost of the alignment restricted to this interval.
    pub fn cost(&self) -> usize {
        self.unmatched_source + self.unmatched_image
    }
}

impl Alignment {
    pub fn new(x_len: usize, y_len: usize, pairs: Vec<(u32, u32)>) -> Result<Self, AlignError> {
        let ok = pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
            && pairs.first().is_none_or(|&(i, j)| i >= 1 && j >= 1)
            && pairs.last().is_none_or(|&(i, j)| i as usize <= x_len && j as usize <= y_len);
        if !ok {
            return Err(AlignError::MalformedPairs);
        }
        Ok(Alignment { x_len, y_len, pairs })
    }

    pub(crate) fn from_sorted_unchecked(x_len: usize, y_len: usize, pairs: Vec<(u32, u32)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        Alignment { x_len, y_len, pairs }
    }

    pub fn identity(n: usize) -> Self {
        Alignment {
            x_len: n,
            y_len: n,
            pairs: (1..=n as u32).map(|i| (i, i)).collect(),
        }
    }

    pub fn x_len(&self) -> usize {
        self.x_len
    }

    pub fn y_len(&self) -> usize {
        self.y_len
    }

    /// Number of matched pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    /// Unmatched positions of `x` plus unmatched positions of `y`.
    pub fn cost(&self) -> usize {
        (self.x_len - self.pairs.len()) + (self.y_len - self.pairs.len())
    }

    /// Image of position `i`, if matched.
    pub fn image_of(&self, i: usize) -> Option<usize> {
        let idx = self.pairs.partition_point(|&(pi, _)| (pi as usize) < i);
        match self.pairs.get(idx) {
            Some(&(pi, pj)) if pi as usize == i => Some(pj as usize),
            _ => None,
        }
    }

    /// Checks that the matching is consistent with the actual sequences:
    /// lengths agree and every matched pair carries equal symbols.
    pub fn is_valid_for(&self, x: &Seq, y: &Seq) -> bool {
        self.x_len == x.len()
            && self.y_len == y.len()
            && self
                .pairs
                .iter()
                .all(|&(i, j)| x.sym(i as usize) == y.sym(j as usize))
    }

    pub fn invert(&self) -> Alignment {
        Alignment {
            x_len: self.y_len,
            y_len: self.x_len,
            pairs: self.pairs.iter().map(|&(i, j)| (j, i)).collect(),
        }
    }

    /// Relational composition: `self` aligns `x` with `y`, `other` aligns
    /// `y` with `z`; the result matches `i` to `k` whenever both map
    /// through the same position of `y`.
    pub fn compose(&self, other: &Alignment) -> Result<Alignment, AlignError> {
        if self.y_len != other.x_len {
            return Err(AlignError::CompositionMismatch(self.y_len, other.x_len));
        }
        let mut pairs = Vec::new();
        let (mut a, mut b) = (0, 0);
        while a < self.pairs.len() && b < other.pairs.len() {
            let (i, j) = self.pairs[a];
            let (j2, k) = other.pairs[b];
            match j.cmp(&j2) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    pairs.push((i, k));
                    a += 1;
                    b += 1;
                }
            }
        }
        Ok(Alignment { x_len: self.x_len, y_len: other.y_len, pairs })
    }

    /// Restricts the alignment to the 1-based source interval `[lo, hi]`.
    pub fn map_interval(&self, lo: usize, hi: usize) -> Result<IntervalMapping, AlignError> {
        if !(1 <= lo && lo <= hi && hi <= self.x_len) {
            return Err(AlignError::BadInterval { lo, hi, len: self.x_len });
        }
        let from = self.pairs.partition_point(|&(i, _)| (i as usize) < lo);
        let to = self.pairs.partition_point(|&(i, _)| (i as usize) <= hi);
        let matched = to - from;
        let source_len = hi - lo + 1;
        if matched == 0 {
            return Ok(IntervalMapping {
                source: (lo, hi),
                image: None,
                matched: 0,
                unmatched_source: source_len,
                unmatched_image: 0,
            });
        }
        let j1 = self.pairs[from].1 as usize;
        let j2 = self.pairs[to - 1].1 as usize;
        Ok(IntervalMapping {
            source: (lo, hi),
            image: Some((j1, j2)),
            matched,
            unmatched_source: source_len - matched,
            unmatched_image: (j2 - j1 + 1) - matched,
        })
    }

    /// Cost of the alignment restricted to `[lo, hi]`: unmatched source
    /// positions plus unmatched positions of the matched image interval.
    /// An interval with no matched position costs its own length.
    pub fn cost_on(&self, lo: usize, hi: usize) -> Result<usize, AlignError> {
        Ok(self.map_interval(lo, hi)?.cost())
    }
}

/// Indel edit distance between two raw symbol slices.
///
/// Greedy furthest-reaching diagonal search: `O((n + m) * d)` worst case
/// and roughly `O(n + m + d^2)` for typical inputs, where `d` is the
/// returned distance.
pub(crate) fn indel_distance(a: &[u32], b: &[u32]) -> usize {
    let pre = a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[pre..], &b[pre..]);
    let suf = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[..a.len() - suf], &b[..b.len() - suf]);

    let n = a.len() as isize;
    let m = b.len() as isize;
    if n == 0 || m == 0 {
        return (n + m) as usize;
    }
    let offset = m + 1;
    // v[k + offset]: furthest row i reached on diagonal k = i - j.
    let mut v = vec![isize::MIN / 2; (n + m + 3) as usize];
    v[(1 + offset) as usize] = 0;
    for d in 0..=(n + m) {
        let k_lo = if d <= m { -d } else { -m + (d - m) % 2 };
        let k_hi = if d <= n { d } else { n - (d - n) % 2 };
        let mut k = k_lo;
        while k <= k_hi {
            let down = v[(k + 1 + offset) as usize];
            let right = v[(k - 1 + offset) as usize] + 1;
            let mut i = down.max(right);
            let mut j = i - k;
            while i < n && j < m && a[i as usize] == b[j as usize] {
                i += 1;
                j += 1;
            }
            v[(k + offset) as usize] = i;
            if k == n - m && i >= n {
                return d as usize;
            }
            k += 2;
        }
    }
    unreachable!("diagonal search must terminate within n + m steps");
}

/// Indel edit distance between two sequences over the same alphabet.
pub fn edit_distance(x: &Seq, y: &Seq) -> Result<usize, AlignError> {
    check_same_alphabet(x, y)?;
    Ok(indel_distance(x.symbols(), y.symbols()))
}

// Move 0 marks never-written cells; the traceback must not see it.
const MOVE_MATCH: u8 = 1;
const MOVE_DEL_X: u8 = 2;
const MOVE_INS_Y: u8 = 3;

struct PackedMoves {
    bits: Vec<u8>,
}

impl PackedMoves {
    fn new(cells: usize) -> Self {
        PackedMoves { bits: vec![0u8; cells.div_ceil(4)] }
    }

    #[inline]
    fn set(&mut self, idx: usize, mv: u8) {
        let slot = &mut self.bits[idx / 4];
        let shift = (idx % 4) * 2;
        *slot = (*slot & !(0b11 << shift)) | (mv << shift);
    }

    #[inline]
    fn get(&self, idx: usize) -> u8 {
        (self.bits[idx / 4] >> ((idx % 4) * 2)) & 0b11
    }
}

/// A minimum-cost alignment of `x` and `y` with a fixed tie-break, so the
/// result is a canonical function of the inputs: walking back from the
/// ends, prefer a match, then skipping a symbol of `x`, then skipping a
/// symbol of `y`.
///
/// Runs a DP banded to the optimal distance `d` (all optimal paths stay
/// within `|i - j| <= d`), using about `(|x| + 1) * (2d + 1) / 4` bytes.
pub fn optimal_alignment(x: &Seq, y: &Seq) -> Result<Alignment, AlignError> {
    check_same_alphabet(x, y)?;
    let a = x.symbols();
    let b = y.symbols();
    let n = a.len();
    let m = b.len();
    let d = indel_distance(a, b);
    if d == 0 {
        return Ok(Alignment::identity(n));
    }
    let width = 2 * d + 1;
    const INF: u64 = u64::MAX / 2;
    let mut moves = PackedMoves::new((n + 1) * width);
    let mut prev = vec![INF; width];
    let mut cur = vec![INF; width];

    // Row 0 holds j in [0, min(m, d)] at slot j - (0 - d) = j + d.
    for j in 0..=m.min(d) {
        prev[j + d] = j as u64;
        if j > 0 {
            moves.set(j + d, MOVE_INS_Y);
        }
    }
    for i in 1..=n {
        let lo = i.saturating_sub(d);
        let hi = (i + d).min(m);
        cur[..width].fill(INF);
        for j in lo..=hi {
            let jj = j + d - i; // slot for column j in row i
            let vm = if j >= 1 && a[i - 1] == b[j - 1] { prev[jj] } else { INF };
            let vu = if jj + 1 < width { prev[jj + 1].saturating_add(1) } else { INF };
            let vl = if jj >= 1 { cur[jj - 1].saturating_add(1) } else { INF };
            let best = vm.min(vu).min(vl);
            let mv = if vm == best {
                MOVE_MATCH
            } else if vu == best {
                MOVE_DEL_X
            } else {
                MOVE_INS_Y
            };
            cur[jj] = best;
            moves.set(i * width + jj, mv);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    debug_assert_eq!(prev[m + d - n], d as u64);

    let mut pairs = Vec::with_capacity(n.min(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match moves.get(i * width + (j + d - i)) {
            MOVE_MATCH => {
                pairs.push((i as u32, j as u32));
                i -= 1;
                j -= 1;
            }
            MOVE_DEL_X => i -= 1,
            MOVE_INS_Y => j -= 1,
            _ => unreachable!("traceback left the computed band"),
        }
    }
    pairs.reverse();
    debug_assert_eq!((n - pairs.len()) + (m - pairs.len()), d);
    Ok(Alignment::from_sorted_unchecked(n, m, pairs))
}
