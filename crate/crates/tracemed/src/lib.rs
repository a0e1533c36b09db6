//! Simulation and reconstruction toolkit for the insertion/deletion channel.
//!
//! The crate is organized around a small set of primitives:
//!
//! - [`seq`]: sequences over a finite alphabet and their text encoding.
//! - [`align`]: monotone partial alignments, the indel edit distance, and
//!   the algebra (restriction, composition, inversion) built on them.
//! - [`channel`]: a memoryless insertion/deletion channel, both as a direct
//!   sampler and as a two-stage sampler that exposes the planted alignment.
//! - [`median`]: exact median of three sequences under the indel metric.
//! - [`patmatch`]: best approximate occurrence of a pattern in a text.
//! - [`reconstruct`]: block/anchor pipeline that rebuilds a source string
//!   from three noisy traces.
//! - [`verify`]: seeded experiments that measure the statistical behaviour
//!   of the above and produce machine-readable reports.

pub mod align;
pub mod channel;
pub mod median;
pub mod patmatch;
pub mod reconstruct;
pub mod seq;
pub mod verify;

pub use align::{Alignment, IntervalMapping};
pub use seq::{Alphabet, Seq};
