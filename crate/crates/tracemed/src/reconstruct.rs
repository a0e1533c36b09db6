//! Near-linear reconstruction of a source string from three traces.
//!
//! The pipeline partitions the first trace into blocks, takes the centered
//! sub-block of each as an anchor, locates every anchor in the other two
//! traces by windowed approximate matching, carves those traces into
//! corresponding blocks at the midpoints between consecutive matches, and
//! concatenates the per-block exact medians. All stages are deterministic,
//! and block medians are independent of each other, so the output never
//! depends on processing order.

use crate::align::{AlignError, IntervalMapping};
use crate::channel::PlantedAlignment;
use crate::median::{median3_exact_with, MedianError, DEFAULT_CELL_BUDGET};
use crate::patmatch::{best_match_windowed, MatchError, MatchResult};
use crate::seq::{check_same_alphabet, Seq, SeqError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReconstructError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Median(#[from] MedianError),
    #[error("noise rate {0} outside [0, 1)")]
    BadNoiseRate(f64),
    #[error("match {index} starts at {start}, inside its predecessor ending at {prev_end}")]
    OverlappingMatches { index: usize, start: usize, prev_end: usize },
    #[error("{got} matches supplied for {expected} blocks")]
    WrongMatchCount { expected: usize, got: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("noise rate {0} outside [0, 1)")]
    BadNoiseRate(f64),
    #[error("anchor length must be at least 1")]
    EmptyAnchor,
    #[error("window length {window_len} shorter than anchor length {anchor_len}")]
    WindowTooShort { window_len: usize, anchor_len: usize },
    #[error(
        "the plan geometry does not fit: block length {block_len} \
         (anchor {anchor_len} + gap {gap_len}) exceeds the input length {n}"
    )]
    GeometryDoesNotFit { n: usize, block_len: usize, anchor_len: usize, gap_len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Paper,
    Desk,
    Custom,
}

/// Block geometry for the pipeline. A block is `anchor_len + gap_len`
/// symbols of the first trace with the anchor centered in it; each anchor
/// is searched for in a `window_len`-sized window of the other traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReconstructionPlan {
    pub preset: Preset,
    pub anchor_len: usize,
    pub gap_len: usize,
    pub window_len: usize,
}

impl ReconstructionPlan {
    /// Geometry with the asymptotic-analysis constants: anchors of
    /// `log₂²n`, gaps of `(240/p)·log₂^{3/2}n`, windows of `10·log₂²n`.
    /// The gap term dominates until n is astronomically large, so at
    /// realistic lengths this plan fails validation against the input.
    pub fn paper(n: usize, p: f64) -> Result<Self, PlanError> {
        let lg = check_rate(p).and(Ok(log2n(n)))?;
        Self::with_lengths(
            Preset::Paper,
            (lg * lg).ceil() as usize,
            if p == 0.0 { 0 } else { (240.0 / p * lg.powf(1.5)).ceil() as usize },
            (10.0 * lg * lg).ceil() as usize,
        )
    }

    /// Geometry that keeps the same shape (anchors longer than the match
    /// drift, gaps longer than anchors, windows covering a few blocks) at
    /// workstation scale: anchors of `log₂²n`, gaps of `(1/2p)·log₂n`,
    /// windows of `anchor + 4·gap`.
    pub fn desk(n: usize, p: f64) -> Result<Self, PlanError> {
        let lg = check_rate(p).and(Ok(log2n(n)))?;
        let anchor_len = (lg * lg).ceil() as usize;
        let gap_len = if p == 0.0 { 0 } else { (0.5 / p * lg).ceil() as usize };
        Self::with_lengths(Preset::Desk, anchor_len, gap_len, anchor_len + 4 * gap_len)
    }

    pub fn custom(anchor_len: usize, gap_len: usize, window_len: usize) -> Result<Self, PlanError> {
        Self::with_lengths(Preset::Custom, anchor_len, gap_len, window_len)
    }

    fn with_lengths(
        preset: Preset,
        anchor_len: usize,
        gap_len: usize,
        window_len: usize,
    ) -> Result<Self, PlanError> {
        if anchor_len == 0 {
            return Err(PlanError::EmptyAnchor);
        }
        if window_len < anchor_len {
            return Err(PlanError::WindowTooShort { window_len, anchor_len });
        }
        Ok(ReconstructionPlan { preset, anchor_len, gap_len, window_len })
    }

    pub fn block_len(&self) -> usize {
        self.anchor_len + self.gap_len
    }

    /// Number of blocks the plan carves an input of length `n` into.
    pub fn block_count(&self, n: usize) -> Result<usize, PlanError> {
        let block_len = self.block_len();
        if n < block_len {
            return Err(PlanError::GeometryDoesNotFit {
                n,
                block_len,
                anchor_len: self.anchor_len,
                gap_len: self.gap_len,
            });
        }
        Ok(n / block_len)
    }
}

fn check_rate(p: f64) -> Result<(), PlanError> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(PlanError::BadNoiseRate(p))
    }
}

fn log2n(n: usize) -> f64 {
    (n.max(2) as f64).log2()
}

/// One block of the first trace: the block interval and the centered
/// anchor interval inside it, both 1-based inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockPlan {
    pub block: (usize, usize),
    pub anchor: (usize, usize),
}

/// Partition of `s1` into `⌊|s1|/block_len⌋` consecutive blocks with the
/// division remainder attached to the last block. Anchors sit at the
/// center of each block's first `block_len` symbols.
pub fn plan_blocks(s1: &Seq, plan: &ReconstructionPlan) -> Result<Vec<BlockPlan>, PlanError> {
    let n = s1.len();
    let block_len = plan.block_len();
    let r = plan.block_count(n)?;
    let offset = (block_len - plan.anchor_len) / 2;
    let mut out = Vec::with_capacity(r);
    for i in 0..r {
        let lo = i * block_len + 1;
        let hi = if i + 1 == r { n } else { (i + 1) * block_len };
        let a = lo + offset;
        out.push(BlockPlan { block: (lo, hi), anchor: (a, a + plan.anchor_len - 1) });
    }
    Ok(out)
}

/// Locates each anchor in `s_j` by a windowed best match. The first
/// window starts at position 1; after a found anchor the next window
/// starts right after its match. An anchor is declared lost (`None`) when
/// its best match is empty or costs more than `anchor_len / 3` — then the
/// search point advances by one nominal block length instead, which
/// resynchronizes after local garbage without stalling.
pub fn locate_anchors(
    anchors: &[Seq],
    s_j: &Seq,
    plan: &ReconstructionPlan,
) -> Result<Vec<Option<MatchResult>>, ReconstructError> {
    let lost_threshold = plan.anchor_len / 3;
    let mut out = Vec::with_capacity(anchors.len());
    let mut cursor = 1usize;
    for anchor in anchors {
        if cursor > s_j.len() {
            out.push(None);
            continue;
        }
        let m = best_match_windowed(anchor, s_j, cursor, plan.window_len)?;
        if m.is_empty() || m.cost > lost_threshold {
            out.push(None);
            cursor += plan.block_len();
        } else {
            cursor = m.end + 1;
            out.push(Some(m));
        }
    }
    Ok(out)
}

/// Carves `s_j` into one interval per anchor. The boundary between two
/// consecutive found anchors is the midpoint of the span from the earlier
/// match's end to the later match's start; the first found block extends
/// to position 1 and the last to `|s_j|`. Blocks of lost anchors are
/// empty (their span is absorbed by the found neighbors). If no anchor
/// was found the whole string becomes block 1 so that the result is
/// always a partition of `s_j`.
pub fn carve_blocks(
    s_j: &Seq,
    matches: &[Option<MatchResult>],
) -> Result<Vec<(usize, usize)>, ReconstructError> {
    let n = s_j.len();
    let found: Vec<(usize, MatchResult)> =
        matches.iter().enumerate().filter_map(|(i, m)| m.map(|m| (i, m))).collect();
    for w in found.windows(2) {
        if w[1].1.start <= w[0].1.end {
            return Err(ReconstructError::OverlappingMatches {
                index: w[1].0,
                start: w[1].1.start,
                prev_end: w[0].1.end,
            });
        }
    }

    let mut out = vec![(1usize, 0usize); matches.len()];
    if found.is_empty() {
        if let Some(first) = out.first_mut() {
            *first = (1, n);
        }
        return Ok(out);
    }
    for (fi, &(idx, m)) in found.iter().enumerate() {
        let lo = if fi == 0 { 1 } else { (found[fi - 1].1.end + found[fi].1.start) / 2 };
        let hi = if fi + 1 == found.len() { n } else { (m.end + found[fi + 1].1.start) / 2 - 1 };
        out[idx] = (lo, hi);
        // Park empty lost blocks at the boundary they were absorbed into.
        for lost in out.iter_mut().take(idx).skip(found.get(fi.wrapping_sub(1)).map_or(0, |f| f.0 + 1)) {
            *lost = (lo, lo - 1);
        }
    }
    let last_found = found.last().expect("found is nonempty").0;
    for lost in out.iter_mut().skip(last_found + 1) {
        *lost = (n + 1, n);
    }
    Ok(out)
}

/// Everything the pipeline computed on the way to its output, for
/// diagnostics and experiments.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub output: Seq,
    pub plan: ReconstructionPlan,
    pub block_plans: Vec<BlockPlan>,
    /// Anchor matches in the second and third trace; `None` means lost.
    pub matches: [Vec<Option<MatchResult>>; 2],
    /// Carved block intervals of the second and third trace.
    pub carved: [Vec<(usize, usize)>; 2],
    /// Median objective value of every block triple.
    pub objectives: Vec<usize>,
}

impl Reconstruction {
    /// Lost-anchor counts per non-reference trace.
    pub fn lost(&self) -> [usize; 2] {
        [0, 1].map(|j| self.matches[j].iter().filter(|m| m.is_none()).count())
    }
}

/// Reconstructs an approximation of the common source of three traces of
/// noise rate `p`. The output is the concatenation of the per-block exact
/// medians.
pub fn reconstruct3(
    s1: &Seq,
    s2: &Seq,
    s3: &Seq,
    p: f64,
    plan: &ReconstructionPlan,
) -> Result<Seq, ReconstructError> {
    Ok(reconstruct3_detailed(s1, s2, s3, p, plan)?.output)
}

/// [`reconstruct3`] keeping all intermediate results.
pub fn reconstruct3_detailed(
    s1: &Seq,
    s2: &Seq,
    s3: &Seq,
    p: f64,
    plan: &ReconstructionPlan,
) -> Result<Reconstruction, ReconstructError> {
    check_same_alphabet(s1, s2)?;
    check_same_alphabet(s1, s3)?;
    if !(0.0..1.0).contains(&p) {
        return Err(ReconstructError::BadNoiseRate(p));
    }
    let block_plans = plan_blocks(s1, plan)?;
    let anchors: Vec<Seq> =
        block_plans.iter().map(|b| s1.interval(b.anchor.0, b.anchor.1)).collect();
    let m2 = locate_anchors(&anchors, s2, plan)?;
    let m3 = locate_anchors(&anchors, s3, plan)?;
    let c2 = carve_blocks(s2, &m2)?;
    let c3 = carve_blocks(s3, &m3)?;

    let mut scratch = Vec::new();
    let mut medians = Vec::with_capacity(block_plans.len());
    let mut objectives = Vec::with_capacity(block_plans.len());
    for i in 0..block_plans.len() {
        let b1 = s1.interval(block_plans[i].block.0, block_plans[i].block.1);
        let b2 = s2.interval(c2[i].0, c2[i].1);
        let b3 = s3.interval(c3[i].0, c3[i].1);
        // Bands sized for the typical per-block drift; the certificate
        // inside the median search widens them when a block needs more.
        let longest = b1.len().max(b2.len()).max(b3.len());
        let base_band = (1.6 * p * longest as f64).ceil() as usize + 12;
        let r = median3_exact_with(&b1, &b2, &b3, DEFAULT_CELL_BUDGET, base_band, &mut scratch)?;
        objectives.push(r.objective);
        medians.push(r.median);
    }
    let output = Seq::concat(&medians, s1.alphabet());
    Ok(Reconstruction {
        output,
        plan: *plan,
        block_plans,
        matches: [m2, m3],
        carved: [c2, c3],
        objectives,
    })
}

/// Where an interval of the first trace really went in another trace of
/// the same source, read off the planted alignments: maps the interval
/// backwards through `planted1` (source → first trace) and forwards
/// through `planted_j` (source → other trace). Used to compare found
/// matches against ground truth in experiments.
pub fn true_match(
    planted1: &PlantedAlignment,
    planted_j: &PlantedAlignment,
    interval: (usize, usize),
) -> Result<IntervalMapping, AlignError> {
    let through_source = planted1.alignment().invert().compose(planted_j.alignment())?;
    through_source.map_interval(interval.0, interval.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{transmit, transmit_planted, uniform_seq, ChannelParams};
    use crate::median::median3_exact;
    use crate::seq::Alphabet;

    fn bin() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn plan(anchor: usize, gap: usize, window: usize) -> ReconstructionPlan {
        ReconstructionPlan::custom(anchor, gap, window).unwrap()
    }

    fn m(start: usize, end: usize, cost: usize) -> Option<MatchResult> {
        Some(MatchResult { start, end, cost })
    }

    #[test]
    fn blocks_are_consecutive_with_centered_anchors() {
        let s1 = uniform_seq(30, bin(), 1, 0);
        let blocks = plan_blocks(&s1, &plan(4, 6, 20)).unwrap();
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[0], BlockPlan { block: (1, 10), anchor: (4, 7) });
        assert_eq!(blocks[1], BlockPlan { block: (11, 20), anchor: (14, 17) });
        assert_eq!(blocks[2], BlockPlan { block: (21, 30), anchor: (24, 27) });
    }

    #[test]
    fn zero_gap_makes_anchors_equal_blocks() {
        let s1 = uniform_seq(12, bin(), 1, 1);
        let blocks = plan_blocks(&s1, &plan(4, 0, 4)).unwrap();
        for b in &blocks {
            assert_eq!(b.block, b.anchor);
        }
    }

    #[test]
    fn remainder_goes_to_the_last_block() {
        let s1 = uniform_seq(3 * 10 + 7, bin(), 1, 2);
        let blocks = plan_blocks(&s1, &plan(4, 6, 20)).unwrap();
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[2].block, (21, 37));
        assert_eq!(blocks[2].anchor, (24, 27)); // centered in the nominal span
    }

    #[test]
    fn too_short_input_is_a_geometry_error() {
        let s1 = uniform_seq(9, bin(), 1, 3);
        let err = plan_blocks(&s1, &plan(4, 6, 20)).unwrap_err();
        assert!(err.to_string().contains("geometry does not fit"));
    }

    #[test]
    fn paper_preset_needs_astronomical_n() {
        let err = ReconstructionPlan::paper(1 << 20, 0.01).unwrap().block_count(1 << 20);
        assert!(matches!(err, Err(PlanError::GeometryDoesNotFit { .. })));
    }

    #[test]
    fn plan_validation_errors() {
        assert!(matches!(ReconstructionPlan::custom(0, 5, 5), Err(PlanError::EmptyAnchor)));
        assert!(matches!(
            ReconstructionPlan::custom(6, 5, 5),
            Err(PlanError::WindowTooShort { .. })
        ));
        assert!(matches!(ReconstructionPlan::desk(1 << 20, 1.0), Err(PlanError::BadNoiseRate(_))));
    }

    #[test]
    fn carve_single_match_takes_the_whole_string() {
        let s = uniform_seq(20, bin(), 2, 0);
        assert_eq!(carve_blocks(&s, &[m(8, 12, 0)]).unwrap(), vec![(1, 20)]);
    }

    #[test]
    fn carve_boundary_is_the_midpoint_between_matches() {
        let s = uniform_seq(30, bin(), 2, 1);
        // Gap runs from end 10 to start 17; midpoint (10 + 17) / 2 = 13.
        let carved = carve_blocks(&s, &[m(4, 10, 1), m(17, 22, 0)]).unwrap();
        assert_eq!(carved, vec![(1, 12), (13, 30)]);
    }

    #[test]
    fn carve_empties_lost_blocks_and_absorbs_their_span() {
        let s = uniform_seq(40, bin(), 2, 2);
        let carved = carve_blocks(&s, &[m(3, 8, 0), None, m(25, 30, 1), None]).unwrap();
        // Boundary between found anchors 1 and 3: (8 + 25) / 2 = 16.
        assert_eq!(carved[0], (1, 15));
        assert_eq!(carved[2], (16, 40));
        assert!(carved[1].1 < carved[1].0, "lost block must be empty");
        assert!(carved[3].1 < carved[3].0, "lost block must be empty");
        let total: usize = carved.iter().map(|&(lo, hi)| hi + 1 - lo).sum();
        assert_eq!(total, 40, "carve must partition the string");
    }

    #[test]
    fn carve_with_nothing_found_keeps_the_string_in_block_one() {
        let s = uniform_seq(10, bin(), 2, 3);
        let carved = carve_blocks(&s, &[None, None, None]).unwrap();
        assert_eq!(carved[0], (1, 10));
        assert_eq!(carved[1].1, carved[1].0 - 1);
        assert_eq!(carved[2].1, carved[2].0 - 1);
    }

    #[test]
    fn carve_rejects_overlapping_matches() {
        let s = uniform_seq(20, bin(), 2, 4);
        let err = carve_blocks(&s, &[m(3, 10, 0), m(8, 14, 0)]).unwrap_err();
        assert!(matches!(err, ReconstructError::OverlappingMatches { index: 1, .. }));
    }

    #[test]
    fn noiseless_anchors_are_found_in_place_and_output_is_exact() {
        let n = 4096;
        let s = uniform_seq(n, bin(), 7, 0);
        let plan = ReconstructionPlan::desk(n, 0.0).unwrap();
        let blocks = plan_blocks(&s, &plan).unwrap();
        let anchors: Vec<Seq> = blocks.iter().map(|b| s.interval(b.anchor.0, b.anchor.1)).collect();
        let located = locate_anchors(&anchors, &s, &plan).unwrap();
        for (b, found) in blocks.iter().zip(&located) {
            let found = found.expect("noiseless anchors are always found");
            assert_eq!((found.start, found.end, found.cost), (b.anchor.0, b.anchor.1, 0));
        }

        let detail = reconstruct3_detailed(&s, &s, &s, 0.0, &plan).unwrap();
        assert_eq!(detail.output, s);
        assert_eq!(detail.lost(), [0, 0]);
        // Adjacent matches put each midpoint boundary one symbol before
        // the next match, so carved blocks disagree with the reference
        // block by one shifted symbol: up to 2 objective per seam, and
        // the carved copies outvote the reference, keeping z exact.
        let total: usize = detail.objectives.iter().sum();
        assert!(total <= 2 * detail.objectives.len());
    }

    #[test]
    fn reconstruction_is_deterministic_and_blockwise() {
        let n = 6000;
        let s = uniform_seq(n, bin(), 11, 0);
        let p = 0.02;
        let traces: Vec<Seq> =
            (1..=3).map(|t| transmit(&s, ChannelParams::new(p, 11, t).unwrap())).collect();
        let plan = ReconstructionPlan::desk(n, p).unwrap();
        let a = reconstruct3_detailed(&traces[0], &traces[1], &traces[2], p, &plan).unwrap();
        let b = reconstruct3_detailed(&traces[0], &traces[1], &traces[2], p, &plan).unwrap();
        assert_eq!(a.output, b.output);
        assert_eq!(a.objectives, b.objectives);

        // Recompute each block median in isolation (reverse order): the
        // concatenation must be identical to the pipeline output.
        let mut parts = vec![Seq::empty(bin()); a.block_plans.len()];
        for i in (0..a.block_plans.len()).rev() {
            let b1 = traces[0].interval(a.block_plans[i].block.0, a.block_plans[i].block.1);
            let b2 = traces[1].interval(a.carved[0][i].0, a.carved[0][i].1);
            let b3 = traces[2].interval(a.carved[1][i].0, a.carved[1][i].1);
            parts[i] = median3_exact(&b1, &b2, &b3).unwrap().median;
        }
        assert_eq!(Seq::concat(&parts, bin()), a.output);
    }

    #[test]
    fn resync_survives_a_corrupted_region() {
        let n = 4000;
        let geometry = plan(100, 300, 1300);
        // A source whose third anchor (positions 951..=1050) is a solid
        // run of ones: nothing in random content comes close to it, so
        // wiping it out makes that anchor decisively lost, not merely
        // expensive.
        let mut symbols = uniform_seq(n, bin(), 13, 0).symbols().to_vec();
        for sym in &mut symbols[950..1050] {
            *sym = 1;
        }
        let s = Seq::new(bin(), symbols.clone()).unwrap();
        // Second trace: block 3's whole span overwritten with zeros.
        for sym in &mut symbols[800..1200] {
            *sym = 0;
        }
        let s2 = Seq::new(bin(), symbols).unwrap();

        let blocks = plan_blocks(&s, &geometry).unwrap();
        let anchors: Vec<Seq> = blocks.iter().map(|b| s.interval(b.anchor.0, b.anchor.1)).collect();
        let located = locate_anchors(&anchors, &s2, &geometry).unwrap();
        assert!(located[2].is_none(), "anchor inside the corrupted span must be lost");
        for (i, b) in blocks.iter().enumerate() {
            if i != 2 {
                let m = located[i].expect("anchors outside the corruption are found");
                assert_eq!((m.start, m.end, m.cost), (b.anchor.0, b.anchor.1, 0));
            }
        }
        // Carving still partitions s2, with block 3 empty.
        let carved = carve_blocks(&s2, &located).unwrap();
        let total: usize = carved.iter().map(|&(lo, hi)| hi + 1 - lo).sum();
        assert_eq!(total, n);
        assert!(carved[2].1 < carved[2].0);

        // The two clean traces out-vote the corrupted one; only seam
        // placement around the lost block can cost a few symbols.
        let detail = reconstruct3_detailed(&s, &s2, &s, 0.0, &geometry).unwrap();
        assert_eq!(detail.lost(), [1, 0]);
        let ed = crate::align::edit_distance(&detail.output, &s).unwrap();
        assert!(ed <= 4, "corruption of one block cost {ed} edits overall");
    }

    #[test]
    fn true_match_tracks_the_planted_alignments() {
        let n = 2000;
        let s = uniform_seq(n, bin(), 17, 0);
        let p = 0.01;
        let (t1, pl1) = transmit_planted(&s, ChannelParams::new(p, 17, 1).unwrap());
        let (t2, pl2) = transmit_planted(&s, ChannelParams::new(p, 17, 2).unwrap());
        assert_eq!(pl1.replay(&s).unwrap(), t1);

        let mapping = true_match(&pl1, &pl2, (501, 700)).unwrap();
        let (lo, hi) = mapping.image.expect("a 200-symbol window maps somewhere at p=0.01");
        // The image must sit near the source interval, off by at most the
        // total number of edits in both traces.
        let slack = 4 * (p * n as f64) as usize + 40;
        assert!(lo.abs_diff(501) <= slack && hi.abs_diff(700) <= slack);
        assert!(hi >= lo && hi <= t2.len());
    }
}
