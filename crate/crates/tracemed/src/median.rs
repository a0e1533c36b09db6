//! Exact median of three sequences under the indel metric.
//!
//! The median objective of `z` against inputs `x1, x2, x3` is
//! `sum_l dist(z, x_l)`. The optimum is computed by dynamic programming
//! over prefix states `(i, j, k)` with seven moves: skip one input symbol
//! (cost 1), or emit a median symbol matched by an agreeing nonempty
//! subset of the current input symbols (cost `3 - |subset|`). Emitting a
//! symbol matched nowhere is dominated and excluded, so every median
//! symbol is matched in at least one input.
//!
//! The table is banded on the offsets `i - j` and `i - k`. A banded
//! optimum `v` is certified globally optimal whenever
//! `v + ||x1| - |x2|| <= 2*bj + 1` and `v + ||x1| - |x3|| <= 2*bk + 1`:
//! every move that changes an offset costs at least 1, so any path that
//! leaves a band pays more than `v`. Bands double until the certificate
//! holds (or the table degenerates to the full cube), which keeps the
//! common near-identical case at `O(n * v^2)` instead of `O(n^3)`.

use crate::align::indel_distance;
use crate::seq::{check_same_alphabet, Seq, SeqError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MedianError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("input set is empty")]
    EmptyInputSet,
    #[error("median DP budget exceeded: needs {needed} cells, limit {limit}")]
    BudgetExceeded { needed: u64, limit: u64 },
    #[error("exhaustive search space too large: {count} candidates, limit {limit}")]
    EnumerationTooLarge { count: u64, limit: u64 },
}

/// Default cap on allocated DP cells per [`median3_exact`] call.
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 31;

const ENUMERATION_LIMIT: u64 = 1 << 22;
const INF: u32 = u32::MAX / 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedianResult {
    pub median: Seq,
    pub objective: usize,
    /// Distance from the median to each input, recomputed independently
    /// of the DP; their sum always equals `objective`.
    pub distances: [usize; 3],
}

/// Sum of distances from `y` to every sequence of `inputs`.
pub fn objective(inputs: &[Seq], y: &Seq) -> Result<usize, MedianError> {
    if inputs.is_empty() {
        return Err(MedianError::EmptyInputSet);
    }
    let mut total = 0;
    for x in inputs {
        check_same_alphabet(x, y)?;
        total += indel_distance(y.symbols(), x.symbols());
    }
    Ok(total)
}

/// The input with the smallest objective against the whole set; ties go
/// to the earliest index. A 2-approximation of the optimal median.
pub fn best_of_inputs(inputs: &[Seq]) -> Result<(usize, usize), MedianError> {
    if inputs.is_empty() {
        return Err(MedianError::EmptyInputSet);
    }
    let mut best = (0, usize::MAX);
    for (idx, y) in inputs.iter().enumerate() {
        let value = objective(inputs, y)?;
        if value < best.1 {
            best = (idx, value);
        }
    }
    Ok(best)
}

/// Exhaustive optimum of the median objective over all sequences of
/// length at most `max_len`, scanning shortest-first then lexicographic,
/// keeping the first optimum. Independent of the DP; intended as an
/// oracle for small instances.
pub fn median_brute(inputs: &[Seq], max_len: usize) -> Result<(Seq, usize), MedianError> {
    if inputs.is_empty() {
        return Err(MedianError::EmptyInputSet);
    }
    let alphabet = inputs[0].alphabet();
    let q = alphabet.size() as u64;
    let mut count = 1u64;
    for _ in 0..max_len {
        count = count
            .saturating_mul(q)
            .saturating_add(1)
            .min(ENUMERATION_LIMIT.saturating_add(1));
    }
    if count > ENUMERATION_LIMIT {
        return Err(MedianError::EnumerationTooLarge { count, limit: ENUMERATION_LIMIT });
    }

    let mut best: Option<(Seq, usize)> = None;
    let mut candidate = Vec::new();
    loop {
        let y = Seq::new(alphabet, candidate.clone()).expect("candidate symbols in range");
        let value = objective(inputs, &y)?;
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((y, value));
        }
        // Advance to the next candidate in (length, lex) order.
        let mut pos = candidate.len();
        while pos > 0 && candidate[pos - 1] == alphabet.size() - 1 {
            candidate[pos - 1] = 0;
            pos -= 1;
        }
        if pos > 0 {
            candidate[pos - 1] += 1;
        } else if candidate.len() < max_len {
            candidate = vec![0; candidate.len() + 1];
        } else {
            break;
        }
    }
    Ok(best.expect("at least the empty candidate was scored"))
}

/// Exact median of three sequences with the default cell budget.
pub fn median3_exact(x1: &Seq, x2: &Seq, x3: &Seq) -> Result<MedianResult, MedianError> {
    median3_exact_with(x1, x2, x3, DEFAULT_CELL_BUDGET, 16, &mut Vec::new())
}

/// Exact median with explicit cell budget, initial band radius, and a
/// reusable scratch table (cleared and regrown as needed).
pub fn median3_exact_with(
    x1: &Seq,
    x2: &Seq,
    x3: &Seq,
    cell_budget: u64,
    base_band: usize,
    scratch: &mut Vec<u32>,
) -> Result<MedianResult, MedianError> {
    check_same_alphabet(x1, x2)?;
    check_same_alphabet(x1, x3)?;

    // With an empty input the problem degenerates; solve it directly
    // instead of forcing the band to stretch across the whole length gap.
    if x1.is_empty() || x2.is_empty() || x3.is_empty() {
        return Ok(median3_degenerate(x1, x2, x3));
    }

    let (n1, n2, n3) = (x1.len(), x2.len(), x3.len());
    let dj = n1.abs_diff(n2);
    let dk = n1.abs_diff(n3);
    let cap_j = n1.max(n2);
    let cap_k = n1.max(n3);
    let mut bj = (base_band.max(dj + 4)).min(cap_j);
    let mut bk = (base_band.max(dk + 4)).min(cap_k);
    let mut spent = 0u64;

    loop {
        let cells = (n1 as u64 + 1) * (2 * bj as u64 + 3) * (2 * bk as u64 + 3);
        if spent + cells > cell_budget {
            return Err(MedianError::BudgetExceeded { needed: spent + cells, limit: cell_budget });
        }
        spent += cells;

        fill_band(x1, x2, x3, bj, bk, scratch);
        let table = Band3 { cost: scratch.as_slice(), bj, bk, wj: 2 * bj + 3, wk: 2 * bk + 3 };
        let v = table.get(n1, n2, n3);
        let j_certified = bj >= cap_j || (v as u64 + dj as u64) <= 2 * bj as u64 + 1;
        let k_certified = bk >= cap_k || (v as u64 + dk as u64) <= 2 * bk as u64 + 1;
        if j_certified && k_certified {
            let median = table.traceback(x1, x2, x3);
            let distances = [
                indel_distance(median.symbols(), x1.symbols()),
                indel_distance(median.symbols(), x2.symbols()),
                indel_distance(median.symbols(), x3.symbols()),
            ];
            debug_assert_eq!(distances.iter().sum::<usize>(), v as usize);
            return Ok(MedianResult { median, objective: v as usize, distances });
        }
        if !j_certified {
            bj = (bj * 2).min(cap_j);
        }
        if !k_certified {
            bk = (bk * 2).min(cap_k);
        }
    }
}

/// Median when at least one input is empty. With two empty inputs any
/// median symbol costs at least as much as it saves, so the empty string
/// is optimal. With one empty input the objective of `z` is
/// `dist(z, a) + dist(z, b) + |z|`, minimized exactly by a longest common
/// subsequence of `a` and `b`.
fn median3_degenerate(x1: &Seq, x2: &Seq, x3: &Seq) -> MedianResult {
    let alphabet = x1.alphabet();
    let nonempty: Vec<&Seq> = [x1, x2, x3].into_iter().filter(|s| !s.is_empty()).collect();
    let median = if nonempty.len() == 2 {
        let a = nonempty[0];
        let b = nonempty[1];
        let al = crate::align::optimal_alignment(a, b).expect("alphabets already checked");
        let symbols = al.pairs().iter().map(|&(i, _)| a.sym(i as usize)).collect();
        Seq::new(alphabet, symbols).expect("subsequence symbols in range")
    } else {
        Seq::empty(alphabet)
    };
    let distances = [
        indel_distance(median.symbols(), x1.symbols()),
        indel_distance(median.symbols(), x2.symbols()),
        indel_distance(median.symbols(), x3.symbols()),
    ];
    MedianResult { median, objective: distances.iter().sum(), distances }
}

/// Fills the banded 3-way DP table into `scratch`.
///
/// Slot layout: row `i` stores column `j` at offset `j - i + bj + 1` and
/// depth `k` at `k - i + bk + 1`. The shift by one leaves an always-INF
/// border on every side, so the inner loop reads its seven predecessors
/// without bounds checks; row `i - 1` stores the same `(j, k)` one slot
/// higher in both axes because the window tracks `i`.
fn fill_band(x1: &Seq, x2: &Seq, x3: &Seq, bj: usize, bk: usize, scratch: &mut Vec<u32>) {
    let (n1, n2, n3) = (x1.len(), x2.len(), x3.len());
    let (a1, a2, a3) = (x1.symbols(), x2.symbols(), x3.symbols());
    let wj = 2 * bj + 3;
    let wk = 2 * bk + 3;
    scratch.clear();
    scratch.resize((n1 + 1) * wj * wk, INF);
    let cost = &mut scratch[..];
    cost[(bj + 1) * wk + (bk + 1)] = 0; // state (0, 0, 0)

    for i in 0..=n1 {
        let jlo = i.saturating_sub(bj);
        let jhi = (i + bj).min(n2);
        let klo = i.saturating_sub(bk);
        let khi = (i + bk).min(n3);
        let row = i * wj * wk;
        let prev = row.wrapping_sub(wj * wk); // only dereferenced when i > 0
        let c1 = if i > 0 { a1[i - 1] } else { u32::MAX };
        for j in jlo..=jhi {
            let jj = j + bj + 1 - i;
            let line = row + jj * wk;
            let pline = prev + jj * wk; // row i-1, column j-1
            let c2 = if j > 0 { a2[j - 1] } else { u32::MAX - 1 };
            for k in klo..=khi {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let kk = k + bk + 1 - i;
                let c3 = if k > 0 { a3[k - 1] } else { u32::MAX - 2 };
                let mut best = INF;
                if i > 0 {
                    let skip1 = cost[pline + wk + kk + 1];
                    let e123 = if c1 == c2 && c2 == c3 { cost[pline + kk] } else { INF };
                    let e12 = if c1 == c2 { cost[pline + kk + 1] } else { INF };
                    let e13 = if c1 == c3 { cost[pline + wk + kk] } else { INF };
                    best = e123.min(skip1 + 1).min(e12 + 1).min(e13 + 1);
                }
                let skip2 = cost[line - wk + kk];
                let skip3 = cost[line + kk - 1];
                best = best.min(skip2 + 1).min(skip3 + 1);
                if c2 == c3 {
                    best = best.min(cost[line - wk + kk - 1] + 1);
                }
                cost[line + kk] = best;
            }
        }
    }
}

/// Read-only view over a filled band table.
struct Band3<'a> {
    cost: &'a [u32],
    bj: usize,
    bk: usize,
    wj: usize,
    wk: usize,
}

impl<'a> Band3<'a> {
    #[inline]
    fn get(&self, i: usize, j: usize, k: usize) -> u32 {
        let jj = (j + self.bj + 1).wrapping_sub(i);
        let kk = (k + self.bk + 1).wrapping_sub(i);
        if jj >= self.wj || kk >= self.wk {
            return INF;
        }
        self.cost[(i * self.wj + jj) * self.wk + kk]
    }

    fn pred(&self, i: usize, j: usize, k: usize, di: usize, dj: usize, dk: usize) -> u32 {
        if i < di || j < dj || k < dk {
            return INF;
        }
        self.get(i - di, j - dj, k - dk)
    }

    /// Canonical traceback: prefer the three-way emit, then two-way emits
    /// ordered by emitted symbol and fixed pair order, then skipping
    /// `x1`, `x2`, `x3`.
    fn traceback(&self, x1: &Seq, x2: &Seq, x3: &Seq) -> Seq {
        let (mut i, mut j, mut k) = (x1.len(), x2.len(), x3.len());
        let mut rev = Vec::new();
        while i > 0 || j > 0 || k > 0 {
            let cur = self.get(i, j, k);
            let c1 = if i > 0 { Some(x1.sym(i)) } else { None };
            let c2 = if j > 0 { Some(x2.sym(j)) } else { None };
            let c3 = if k > 0 { Some(x3.sym(k)) } else { None };

            if let Some(sym) = c1.filter(|_| c1 == c2 && c2 == c3) {
                if self.pred(i, j, k, 1, 1, 1) == cur {
                    rev.push(sym);
                    i -= 1;
                    j -= 1;
                    k -= 1;
                    continue;
                }
            }
            let mut pair: Option<(u32, u8)> = None;
            if let Some(sym) = c1.filter(|_| c1 == c2) {
                if self.pred(i, j, k, 1, 1, 0) + 1 == cur {
                    pair = pick_pair(pair, (sym, 0));
                }
            }
            if let Some(sym) = c1.filter(|_| c1 == c3) {
                if self.pred(i, j, k, 1, 0, 1) + 1 == cur {
                    pair = pick_pair(pair, (sym, 1));
                }
            }
            if let Some(sym) = c2.filter(|_| c2 == c3) {
                if self.pred(i, j, k, 0, 1, 1) + 1 == cur {
                    pair = pick_pair(pair, (sym, 2));
                }
            }
            if let Some((sym, which)) = pair {
                rev.push(sym);
                match which {
                    0 => {
                        i -= 1;
                        j -= 1;
                    }
                    1 => {
                        i -= 1;
                        k -= 1;
                    }
                    _ => {
                        j -= 1;
                        k -= 1;
                    }
                }
                continue;
            }
            if i > 0 && self.pred(i, j, k, 1, 0, 0) + 1 == cur {
                i -= 1;
            } else if j > 0 && self.pred(i, j, k, 0, 1, 0) + 1 == cur {
                j -= 1;
            } else if k > 0 && self.pred(i, j, k, 0, 0, 1) + 1 == cur {
                k -= 1;
            } else {
                unreachable!("median traceback found no optimal predecessor");
            }
        }
        rev.reverse();
        Seq::new(x1.alphabet(), rev).expect("median symbols come from the inputs")
    }
}

fn pick_pair(cur: Option<(u32, u8)>, cand: (u32, u8)) -> Option<(u32, u8)> {
    match cur {
        None => Some(cand),
        Some(old) => Some(if cand < old { cand } else { old }),
    }
}
