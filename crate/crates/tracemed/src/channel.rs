//! Memoryless insertion/deletion channel.
//!
//! Each step looks at the current input position: with probability `1 - p`
//! the symbol is copied to the output and the position advances; with
//! probability `p/2` the position advances silently (deletion); with
//! probability `p/2` a uniform random symbol is emitted without advancing
//! (insertion). Transmission ends when the position passes the end of the
//! input, so a length-`n` input yields a trace of expected length `n`.
//!
//! [`transmit_planted`] samples the same distribution in two stages: first
//! the step outcomes (which fix the planted alignment between input and
//! trace), then the symbols carried by matches and insertions. Keeping the
//! planted alignment around is what makes the statistics in [`crate::verify`]
//! observable without re-deriving an alignment.

use crate::align::Alignment;
use crate::seq::{Alphabet, Seq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("noise rate must lie in [0, 1), got {0}")]
    BadNoiseRate(f64),
    #[error("separation scale must satisfy p <= epsilon, got p={p}, epsilon={epsilon}")]
    BadSeparationScale { p: f64, epsilon: f64 },
    #[error("op log is inconsistent at op index {0}")]
    MalformedOpLog(usize),
}

/// Parameters of one seeded transmission. `seed` selects the key of the
/// counter-based generator and `stream` the independent substream, so any
/// (seed, stream) pair can be drawn out of order and still reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub p: f64,
    pub seed: u64,
    pub stream: u64,
}

impl ChannelParams {
    pub fn new(p: f64, seed: u64, stream: u64) -> Result<Self, ChannelError> {
        if !(0.0..1.0).contains(&p) {
            return Err(ChannelError::BadNoiseRate(p));
        }
        Ok(ChannelParams { p, seed, stream })
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One event of a transmission, in emission order. Positions are 1-based:
/// `i` indexes the input, `j` the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum EditOp {
    #[serde(rename = "M")]
    Match { i: u64, j: u64 },
    #[serde(rename = "D")]
    Delete { i: u64 },
    #[serde(rename = "I")]
    Insert { j: u64, sym: u32 },
}

/// The alignment a transmission actually used, together with the ordered
/// op log that produced the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedAlignment {
    alignment: Alignment,
    ops: Vec<EditOp>,
}

impl PlantedAlignment {
    /// Rebuilds the planted structure from an op log, validating that the
    /// log is a single monotone pass over input and trace.
    pub fn from_ops(ops: Vec<EditOp>) -> Result<Self, ChannelError> {
        let mut next_i = 1u64;
        let mut next_j = 1u64;
        let mut pairs = Vec::new();
        for (idx, op) in ops.iter().enumerate() {
            match *op {
                EditOp::Match { i, j } => {
                    if i != next_i || j != next_j {
                        return Err(ChannelError::MalformedOpLog(idx));
                    }
                    pairs.push((i as u32, j as u32));
                    next_i += 1;
                    next_j += 1;
                }
                EditOp::Delete { i } => {
                    if i != next_i {
                        return Err(ChannelError::MalformedOpLog(idx));
                    }
                    next_i += 1;
                }
                EditOp::Insert { j, .. } => {
                    if j != next_j {
                        return Err(ChannelError::MalformedOpLog(idx));
                    }
                    next_j += 1;
                }
            }
        }
        let alignment =
            Alignment::from_sorted_unchecked((next_i - 1) as usize, (next_j - 1) as usize, pairs);
        Ok(PlantedAlignment { alignment, ops })
    }

    /// Alignment from input positions to trace positions.
    pub fn alignment(&self) -> &Alignment {
        &self.alignment
    }

    pub fn ops(&self) -> &[EditOp] {
        &self.ops
    }

    pub fn input_len(&self) -> usize {
        self.alignment.x_len()
    }

    pub fn trace_len(&self) -> usize {
        self.alignment.y_len()
    }

    /// Applies the op log to `x`, reproducing the trace it was recorded on.
    pub fn replay(&self, x: &Seq) -> Result<Seq, ChannelError> {
        if x.len() != self.alignment.x_len() {
            return Err(ChannelError::MalformedOpLog(0));
        }
        let mut out = Vec::with_capacity(self.alignment.y_len());
        for op in &self.ops {
            match *op {
                EditOp::Match { i, .. } => out.push(x.sym(i as usize)),
                EditOp::Delete { .. } => {}
                EditOp::Insert { sym, .. } => out.push(sym),
            }
        }
        Ok(Seq::new(x.alphabet(), out).expect("symbols come from the same alphabet"))
    }
}

/// Uniform random sequence of length `n`; the standard source for test and
/// experiment inputs.
pub fn uniform_seq(n: usize, alphabet: Alphabet, seed: u64, stream: u64) -> Seq {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let symbols = (0..n).map(|_| rng.gen_range(0..alphabet.size())).collect();
    Seq::new(alphabet, symbols).expect("sampled symbols are in range")
}

/// Sends `x` through the channel, returning only the trace.
pub fn transmit(x: &Seq, params: ChannelParams) -> Seq {
    let mut rng = params.rng();
    let p = params.p;
    let size = x.alphabet().size();
    let mut out = Vec::with_capacity(x.len() + 8);
    let mut i = 0usize;
    while i < x.len() {
        let u: f64 = rng.gen();
        if u < 1.0 - p {
            out.push(x.symbols()[i]);
            i += 1;
        } else if u < 1.0 - p / 2.0 {
            i += 1;
        } else {
            out.push(rng.gen_range(0..size));
        }
    }
    Seq::new(x.alphabet(), out).expect("emitted symbols are in range")
}

/// Sends `x` through the channel, returning the trace together with the
/// planted alignment. Samples the step outcomes first and the inserted
/// symbols second; the joint distribution of the trace is identical to
/// [`transmit`].
pub fn transmit_planted(x: &Seq, params: ChannelParams) -> (Seq, PlantedAlignment) {
    let mut rng = params.rng();
    let p = params.p;
    let n = x.len();
    let mut ops = Vec::with_capacity(n + 8);
    let mut pairs = Vec::with_capacity(n);
    let (mut i, mut j) = (1u64, 1u64);
    while i <= n as u64 {
        let u: f64 = rng.gen();
        if u < 1.0 - p {
            ops.push(EditOp::Match { i, j });
            pairs.push((i as u32, j as u32));
            i += 1;
            j += 1;
        } else if u < 1.0 - p / 2.0 {
            ops.push(EditOp::Delete { i });
            i += 1;
        } else {
            ops.push(EditOp::Insert { j, sym: 0 });
            j += 1;
        }
    }
    let trace_len = (j - 1) as usize;
    let size = x.alphabet().size();
    let mut out = Vec::with_capacity(trace_len);
    for op in &mut ops {
        match op {
            EditOp::Match { i, .. } => out.push(x.sym(*i as usize)),
            EditOp::Delete { .. } => {}
            EditOp::Insert { sym, .. } => {
                *sym = rng.gen_range(0..size);
                out.push(*sym);
            }
        }
    }
    let trace = Seq::new(x.alphabet(), out).expect("emitted symbols are in range");
    let alignment = Alignment::from_sorted_unchecked(n, trace_len, pairs);
    (trace, PlantedAlignment { alignment, ops })
}

/// Effective noise rate of two chained channels: feeding a rate-`p` trace
/// through a second rate-`p` channel is distributed like one pass at this
/// rate. Expands to `2p - Theta(p^2)` for small `p`.
pub fn chained_noise_rate(p: f64) -> Result<f64, ChannelError> {
    if !(0.0..1.0).contains(&p) {
        return Err(ChannelError::BadNoiseRate(p));
    }
    Ok(p * (4.0 - 3.0 * p) / (2.0 - p * p))
}

/// Input positions that absorbed at least one channel edit: a deletion of
/// `x[i]` or an insertion emitted while the input pointer sat on `i`, i.e.
/// in the gap after `x[i-1]` and up to `x[i]`. Insertions emitted after the
/// last consumed symbol attribute to index `n`. Each index lands in the set
/// with probability exactly `p`.
pub fn edit_positions(planted: &PlantedAlignment) -> Vec<usize> {
    let n = planted.input_len();
    let mut indices = Vec::new();
    let mut next_i = 1usize;
    for op in planted.ops() {
        let hit = match *op {
            EditOp::Match { .. } => {
                next_i += 1;
                None
            }
            EditOp::Delete { .. } => {
                let at = next_i;
                next_i += 1;
                Some(at)
            }
            EditOp::Insert { .. } => Some(next_i.min(n)),
        };
        if let Some(at) = hit {
            if indices.last() != Some(&at) {
                indices.push(at);
            }
        }
    }
    indices
}

/// Edit positions that are isolated: exactly one edit happened at index
/// `i`, and the planted alignment is strictly diagonal for `half_sep`
/// positions on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct WellSeparated {
    pub indices: Vec<usize>,
    pub epsilon: f64,
    /// Window radius `floor(epsilon / p)` used by downstream agreement
    /// checks over these indices.
    pub half_width: usize,
    /// Separation radius `floor(2 * epsilon / p)` enforced around each
    /// index. Indices whose separation window would clip a sequence end
    /// are excluded.
    pub half_sep: usize,
}

/// Computes the well-separated subset of [`edit_positions`].
///
/// An index `i` qualifies in exactly two shapes. Single deletion: `x[i]`
/// is unmatched, `A(i+1) = A(i-1) + 1`, and positions `i-j` and `i+j` for
/// `j` up to `floor(2*epsilon/p)` continue the two diagonals without a
/// break. Single insertion: `A(i) = A(i-1) + 2` and the same diagonal
/// conditions on both sides.
pub fn well_separated_edits(
    planted: &PlantedAlignment,
    p: f64,
    epsilon: f64,
) -> Result<WellSeparated, ChannelError> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(ChannelError::BadNoiseRate(p));
    }
    if epsilon < p {
        return Err(ChannelError::BadSeparationScale { p, epsilon });
    }
    let half_width = (epsilon / p).floor() as usize;
    let half_sep = (2.0 * epsilon / p).floor() as usize;
    let n = planted.input_len();
    let image = image_table(planted.alignment());
    let at = |i: usize| -> Option<usize> { image[i - 1] };

    let mut indices = Vec::new();
    if n < 2 * half_sep + 1 {
        return Ok(WellSeparated { indices, epsilon, half_width, half_sep });
    }
    'scan: for i in (half_sep + 1)..=(n - half_sep) {
        // Both shapes require an unbroken diagonal over [i-sep, i-2] and
        // [i+1, i+sep] (deletions) or [i, i+sep] (insertions).
        let del_shape = match (at(i), at(i - 1), at(i + 1)) {
            (None, Some(a), Some(b)) => b == a + 1,
            _ => false,
        };
        let ins_shape = match (at(i), at(i - 1)) {
            (Some(t), Some(a)) => t == a + 2,
            _ => false,
        };
        if !del_shape && !ins_shape {
            continue;
        }
        let right_start = if del_shape { 2 } else { 1 };
        for j in right_start..=half_sep {
            match (at(i + j), at(i + j - 1)) {
                (Some(b), Some(a)) if b == a + 1 => {}
                _ => continue 'scan,
            }
        }
        for j in 2..=half_sep {
            match (at(i - j), at(i - j + 1)) {
                (Some(a), Some(b)) if a + 1 == b => {}
                _ => continue 'scan,
            }
        }
        indices.push(i);
    }
    Ok(WellSeparated { indices, epsilon, half_width, half_sep })
}

/// Image of every 1-based position: `table[i - 1]` is where position `i`
/// is matched, if anywhere.
pub fn image_table(a: &Alignment) -> Vec<Option<usize>> {
    let mut table = vec![None; a.x_len()];
    for &(i, j) in a.pairs() {
        table[i as usize - 1] = Some(j as usize);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::edit_distance;

    fn bin() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn params(p: f64, seed: u64, stream: u64) -> ChannelParams {
        ChannelParams::new(p, seed, stream).unwrap()
    }

    #[test]
    fn rejects_bad_noise_rates() {
        assert!(ChannelParams::new(1.0, 0, 0).is_err());
        assert!(ChannelParams::new(-0.1, 0, 0).is_err());
        assert!(ChannelParams::new(0.999, 0, 0).is_ok());
    }

    #[test]
    fn noiseless_channel_is_identity() {
        let x = uniform_seq(500, bin(), 7, 0);
        assert_eq!(transmit(&x, params(0.0, 7, 1)), x);

        let (y, planted) = transmit_planted(&x, params(0.0, 7, 2));
        assert_eq!(y, x);
        assert_eq!(planted.alignment(), &Alignment::identity(500));
        assert!(planted.ops().iter().all(|op| matches!(op, EditOp::Match { .. })));
        assert!(edit_positions(&planted).is_empty());
    }

    #[test]
    fn empty_input_yields_empty_trace() {
        let x = Seq::empty(bin());
        assert!(transmit(&x, params(0.3, 1, 0)).is_empty());
        let (y, planted) = transmit_planted(&x, params(0.3, 1, 0));
        assert!(y.is_empty());
        assert!(planted.ops().is_empty());
    }

    #[test]
    fn transmissions_are_reproducible_and_stream_separated() {
        let x = uniform_seq(2000, bin(), 11, 0);
        let y1 = transmit(&x, params(0.1, 42, 5));
        let y2 = transmit(&x, params(0.1, 42, 5));
        assert_eq!(y1, y2);
        let y3 = transmit(&x, params(0.1, 42, 6));
        assert_ne!(y1, y3);
        let y4 = transmit(&x, params(0.1, 43, 5));
        assert_ne!(y1, y4);
    }

    #[test]
    fn planted_alignment_replays_to_the_trace() {
        for stream in 0..20 {
            let x = uniform_seq(300, bin(), 3, 1000 + stream);
            let (y, planted) = transmit_planted(&x, params(0.2, 3, stream));
            assert_eq!(planted.replay(&x).unwrap(), y);
            assert!(planted.alignment().is_valid_for(&x, &y));
            assert!(edit_distance(&x, &y).unwrap() <= planted.alignment().cost());
            let round = PlantedAlignment::from_ops(planted.ops().to_vec()).unwrap();
            assert_eq!(&round, &planted);
        }
    }

    #[test]
    fn malformed_op_logs_are_rejected() {
        let bad = vec![EditOp::Match { i: 2, j: 1 }];
        assert_eq!(PlantedAlignment::from_ops(bad), Err(ChannelError::MalformedOpLog(0)));
        let bad = vec![EditOp::Match { i: 1, j: 1 }, EditOp::Insert { j: 3, sym: 0 }];
        assert_eq!(PlantedAlignment::from_ops(bad), Err(ChannelError::MalformedOpLog(1)));
    }

    #[test]
    fn chained_rate_examples() {
        assert_eq!(chained_noise_rate(0.0).unwrap(), 0.0);
        let q = chained_noise_rate(0.1).unwrap();
        assert!((q - 0.1 * 3.7 / 1.99).abs() < 1e-15);
        assert!((q - 0.18592964824120603).abs() < 1e-15);
        // q = 2p - Theta(p^2): the ratio tends to 2 from below.
        let q_small = chained_noise_rate(1e-6).unwrap();
        assert!((q_small / 1e-6 - 2.0).abs() < 1e-5);
        assert!(chained_noise_rate(1.0).is_err());
    }

    #[test]
    fn edit_positions_from_synthetic_logs() {
        // x of length 3, delete x[2]: index 2.
        let ops = vec![
            EditOp::Match { i: 1, j: 1 },
            EditOp::Delete { i: 2 },
            EditOp::Match { i: 3, j: 2 },
        ];
        let planted = PlantedAlignment::from_ops(ops).unwrap();
        assert_eq!(edit_positions(&planted), vec![2]);

        // Insertion while the pointer sits on position 3, then one at the
        // very end of the pass (pointer on the last symbol): indices 3, 3.
        let ops = vec![
            EditOp::Match { i: 1, j: 1 },
            EditOp::Match { i: 2, j: 2 },
            EditOp::Insert { j: 3, sym: 1 },
            EditOp::Insert { j: 4, sym: 0 },
            EditOp::Match { i: 3, j: 5 },
        ];
        let planted = PlantedAlignment::from_ops(ops).unwrap();
        assert_eq!(edit_positions(&planted), vec![3]);

        // Delete + insert around different gaps gives two indices.
        let ops = vec![
            EditOp::Delete { i: 1 },
            EditOp::Match { i: 2, j: 1 },
            EditOp::Insert { j: 2, sym: 0 },
            EditOp::Match { i: 3, j: 3 },
        ];
        let planted = PlantedAlignment::from_ops(ops).unwrap();
        assert_eq!(edit_positions(&planted), vec![1, 3]);
    }

    #[test]
    fn well_separated_requires_isolation() {
        // n = 9, single deletion at 5, clean diagonals around it.
        let mut ops = Vec::new();
        let mut j = 1;
        for i in 1..=9u64 {
            if i == 5 {
                ops.push(EditOp::Delete { i });
            } else {
                ops.push(EditOp::Match { i, j });
                j += 1;
            }
        }
        let planted = PlantedAlignment::from_ops(ops).unwrap();
        // p=0.5, eps=1.0: separation radius 4, so index 5 fits exactly.
        let ws = well_separated_edits(&planted, 0.5, 1.0).unwrap();
        assert_eq!(ws.indices, vec![5]);
        assert_eq!(ws.half_sep, 4);
        assert_eq!(ws.half_width, 2);

        // Same shape but a second deletion inside the window breaks it.
        let mut ops = Vec::new();
        let mut j = 1;
        for i in 1..=9u64 {
            if i == 5 || i == 7 {
                ops.push(EditOp::Delete { i });
            } else {
                ops.push(EditOp::Match { i, j });
                j += 1;
            }
        }
        let planted = PlantedAlignment::from_ops(ops).unwrap();
        let ws = well_separated_edits(&planted, 0.5, 1.0).unwrap();
        assert!(ws.indices.is_empty());
    }

    #[test]
    fn well_separated_single_insertion() {
        // Insertion in the gap before position 5 (pointer on 5), n = 9.
        let mut ops = Vec::new();
        let mut j = 1u64;
        for i in 1..=9u64 {
            if i == 5 {
                ops.push(EditOp::Insert { j, sym: 1 });
                j += 1;
            }
            ops.push(EditOp::Match { i, j });
            j += 1;
        }
        let planted = PlantedAlignment::from_ops(ops).unwrap();
        let ws = well_separated_edits(&planted, 0.5, 1.0).unwrap();
        assert_eq!(ws.indices, vec![5]);

        // Windows that would clip the boundary exclude the index: with a
        // larger separation radius nothing survives.
        let ws = well_separated_edits(&planted, 0.5, 3.0).unwrap();
        assert!(ws.indices.is_empty());
    }

    #[test]
    fn well_separated_rejects_eps_below_p() {
        let x = uniform_seq(50, bin(), 1, 0);
        let (_, planted) = transmit_planted(&x, params(0.2, 1, 1));
        assert!(well_separated_edits(&planted, 0.2, 0.1).is_err());
        assert!(well_separated_edits(&planted, 0.0, 0.1).is_err());
    }

    #[test]
    fn noiseless_input_has_no_well_separated_edits() {
        let x = uniform_seq(100, bin(), 2, 0);
        let (_, planted) = transmit_planted(&x, params(0.0, 2, 1));
        // p = 0 itself is rejected; use a positive p on the noiseless log.
        let ws = well_separated_edits(&planted, 0.1, 0.2).unwrap();
        assert!(ws.indices.is_empty());
    }
}
