//! Approximate pattern matching under the indel metric.
//!
//! [`best_match`] finds the substring of a text with the smallest edit
//! distance to a pattern (a fitting alignment: the text prefix before the
//! match and the suffix after it are free). Ties are broken by smallest
//! start, then smallest end, so results are reproducible. The
//! O(|pattern|·|text|) cost is fine here because callers only search
//! polylog-sized windows.

use crate::seq::{check_same_alphabet, Seq, SeqError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("pattern is empty")]
    EmptyPattern,
    #[error("window start {from} outside text positions 1..={len}")]
    FromOutOfRange { from: usize, len: usize },
}

/// Best substring match of a pattern in a text. Positions are 1-based
/// inclusive; an empty matched substring is encoded as `end = start - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchResult {
    pub start: usize,
    pub end: usize,
    pub cost: usize,
}

impl MatchResult {
    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    /// Length of the matched substring.
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }
}

/// Minimum edit distance between `pattern` and any substring of `text`
/// (including empty substrings), with the (start, end) tie rule.
///
/// Runs a prefix DP where row `i` holds, for every end position `j`, the
/// cheapest alignment of `pattern[1..=i]` to a text span ending at `j`
/// together with the smallest start achieving it. Row 0 makes every start
/// free. Minimal starts propagate exactly: an optimal alignment's last
/// move leaves an optimal sub-alignment with the same start, so taking
/// the min start over optimal moves is sound and complete.
pub fn best_match(pattern: &Seq, text: &Seq) -> Result<MatchResult, MatchError> {
    check_same_alphabet(pattern, text)?;
    if pattern.is_empty() {
        return Err(MatchError::EmptyPattern);
    }
    let t = text.symbols();
    let n = t.len();

    let mut cost: Vec<u32> = vec![0; n + 1];
    let mut from: Vec<u32> = (1..=n as u32 + 1).collect();
    let mut prev_cost = vec![0u32; n + 1];
    let mut prev_from = vec![0u32; n + 1];

    for &pc in pattern.symbols() {
        std::mem::swap(&mut cost, &mut prev_cost);
        std::mem::swap(&mut from, &mut prev_from);
        cost[0] = prev_cost[0] + 1;
        from[0] = 1;
        for j in 1..=n {
            let mut c = prev_cost[j] + 1; // pattern symbol unmatched
            let mut s = prev_from[j];
            let ins = cost[j - 1] + 1; // text symbol unmatched
            if ins < c {
                c = ins;
                s = from[j - 1];
            } else if ins == c {
                s = s.min(from[j - 1]);
            }
            if pc == t[j - 1] {
                let hit = prev_cost[j - 1];
                if hit < c {
                    c = hit;
                    s = prev_from[j - 1];
                } else if hit == c {
                    s = s.min(prev_from[j - 1]);
                }
            }
            cost[j] = c;
            from[j] = s;
        }
    }

    let best_cost = *cost.iter().min().expect("row is nonempty");
    let best_start = cost
        .iter()
        .zip(&from)
        .filter(|&(&c, _)| c == best_cost)
        .map(|(_, &s)| s)
        .min()
        .expect("some end attains the minimum");
    let best_end = (0..=n)
        .find(|&j| cost[j] == best_cost && from[j] == best_start)
        .expect("the minimal start came from some end");
    Ok(MatchResult { start: best_start as usize, end: best_end, cost: best_cost as usize })
}

/// [`best_match`] restricted to `text[from ..= min(|text|, from + window_len - 1)]`,
/// with the result reported in whole-text coordinates.
pub fn best_match_windowed(
    pattern: &Seq,
    text: &Seq,
    from: usize,
    window_len: usize,
) -> Result<MatchResult, MatchError> {
    check_same_alphabet(pattern, text)?;
    if from == 0 || from > text.len() {
        return Err(MatchError::FromOutOfRange { from, len: text.len() });
    }
    let hi = (from + window_len).saturating_sub(1).min(text.len());
    let window = text.interval(from, hi);
    let local = best_match(pattern, &window)?;
    Ok(MatchResult {
        start: local.start + from - 1,
        end: local.end + from - 1,
        cost: local.cost,
    })
}
