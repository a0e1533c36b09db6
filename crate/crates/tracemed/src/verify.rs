//! Seeded statistical experiments over the channel, alignment, median,
//! and reconstruction layers.
//!
//! Every experiment maps a config to a report of per-trial rows,
//! aggregates recomputable from the rows, resolved pass thresholds, and
//! pass flags. All randomness flows from `config.seed` with a fixed
//! stream per (trial, role), so a report is a pure function of its
//! config. Wall-clock timing is never part of a report (the CLI prints
//! timings to stderr instead), keeping report bytes reproducible.

use crate::align::{edit_distance, optimal_alignment, AlignError};
use crate::channel::{
    chained_noise_rate, edit_positions, transmit, transmit_planted, uniform_seq, ChannelError,
    ChannelParams,
};
use crate::median::{best_of_inputs, median3_exact, objective, MedianError};
use crate::reconstruct::{reconstruct3_detailed, ReconstructError, ReconstructionPlan};
use crate::seq::{Alphabet, Seq, SeqError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("bad experiment config: {0}")]
    BadConfig(String),
    #[error("unknown experiment {0:?}; expected one of {names}", names = EXPERIMENT_NAMES.join(", "))]
    UnknownExperiment(String),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Median(#[from] MedianError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
}

pub const EXPERIMENT_NAMES: [&str; 7] = [
    "channel-stats",
    "ed-concentration",
    "alignment-agreement",
    "transitivity",
    "median-robustness",
    "mtrace-objective",
    "reconstruct-bench",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Trace count; only `mtrace-objective` uses more than 3.
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub alphabet_size: u32,
    /// Per-check threshold overrides by check name.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 100_000,
            p: 0.05,
            epsilon: 0.2,
            delta: 0.05,
            m: 3,
            trials: 20,
            seed: 7,
            alphabet_size: 2,
            thresholds: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), VerifyError> {
        if self.trials < 1 {
            return Err(VerifyError::BadConfig("trials must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(VerifyError::BadConfig(format!("noise rate {} outside [0, 1)", self.p)));
        }
        if self.n == 0 {
            return Err(VerifyError::BadConfig("n must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(VerifyError::BadConfig("m must be at least 1".into()));
        }
        Ok(())
    }

    fn alphabet(&self) -> Result<Alphabet, VerifyError> {
        Ok(Alphabet::new(self.alphabet_size)?)
    }

    fn params(&self, trial: usize, role: u64) -> ChannelParams {
        ChannelParams::new(self.p, self.seed, stream(trial, role)).expect("p validated")
    }

    fn threshold(&self, name: &str, default: f64, source: &'static str) -> (f64, Threshold) {
        let value = self.thresholds.get(name).copied().unwrap_or(default);
        (value, Threshold { value, source })
    }
}

/// Stream ids: 16 roles per trial, disjoint across trials.
fn stream(trial: usize, role: u64) -> u64 {
    trial as u64 * 16 + role
}

/// A resolved pass/fail threshold. `source` says where the number comes
/// from: "model" for values implied by the channel definition or a proven
/// bound, "calibrated" for values pinned from simulation with margin.
#[derive(Debug, Clone, Serialize)]
pub struct Threshold {
    pub value: f64,
    pub source: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub package: &'static str,
    pub version: &'static str,
    pub seed: u64,
    /// How per-trial streams derive from the seed.
    pub stream_scheme: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: &'static str,
    pub config: ExperimentConfig,
    pub rows: Vec<BTreeMap<String, f64>>,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub thresholds: BTreeMap<String, Threshold>,
    pub pass: BTreeMap<String, bool>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.pass.values().all(|&ok| ok)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: self.config.seed,
            stream_scheme: "stream = trial * 16 + role",
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Full<'a> {
            #[serde(flatten)]
            report: &'a ExperimentReport,
            provenance: Provenance,
        }
        serde_json::to_string_pretty(&Full { report: self, provenance: self.provenance() })
            .expect("report serialization cannot fail")
    }

    /// Rows as CSV; the header is the sorted union of row keys.
    pub fn rows_csv(&self) -> String {
        let mut keys: Vec<&String> = Vec::new();
        for row in &self.rows {
            for k in row.keys() {
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
        keys.sort();
        let mut out = String::from("trial");
        for k in &keys {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for (t, row) in self.rows.iter().enumerate() {
            out.push_str(&t.to_string());
            for k in &keys {
                out.push(',');
                if let Some(v) = row.get(*k) {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

struct ReportBuilder {
    experiment: &'static str,
    config: ExperimentConfig,
    rows: Vec<BTreeMap<String, f64>>,
    thresholds: BTreeMap<String, Threshold>,
    pass: BTreeMap<String, bool>,
}

impl ReportBuilder {
    fn new(experiment: &'static str, config: &ExperimentConfig) -> Self {
        ReportBuilder {
            experiment,
            config: config.clone(),
            rows: Vec::with_capacity(config.trials),
            thresholds: BTreeMap::new(),
            pass: BTreeMap::new(),
        }
    }

    fn push_row(&mut self, row: BTreeMap<String, f64>) {
        self.rows.push(row);
    }

    fn mean(&self, key: &str) -> f64 {
        let vals: Vec<f64> = self.rows.iter().filter_map(|r| r.get(key)).copied().collect();
        if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    }

    fn median(&self, key: &str) -> f64 {
        let mut vals: Vec<f64> = self.rows.iter().filter_map(|r| r.get(key)).copied().collect();
        if vals.is_empty() {
            return f64::NAN;
        }
        vals.sort_by(|a, b| a.total_cmp(b));
        let mid = vals.len() / 2;
        if vals.len() % 2 == 1 {
            vals[mid]
        } else {
            (vals[mid - 1] + vals[mid]) / 2.0
        }
    }

    /// Records a check of `observed` against a configurable threshold.
    /// `ok` decides the direction.
    fn check(
        &mut self,
        name: &str,
        default: f64,
        source: &'static str,
        ok: impl Fn(f64, f64) -> bool,
        observed: f64,
    ) {
        let (value, threshold) = self.config.threshold(name, default, source);
        self.thresholds.insert(name.to_string(), threshold);
        self.pass.insert(name.to_string(), ok(observed, value));
    }

    fn pass_flag(&mut self, name: &str, ok: bool) {
        self.pass.insert(name.to_string(), ok);
    }

    fn finish(self) -> ExperimentReport {
        let mut aggregates = BTreeMap::new();
        let mut keys: Vec<String> = Vec::new();
        for row in &self.rows {
            for k in row.keys() {
                if !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
        for key in keys {
            let vals: Vec<f64> = self.rows.iter().filter_map(|r| r.get(&key)).copied().collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64
            } else {
                0.0
            };
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            aggregates.insert(key, Aggregate { mean, stddev: var.sqrt(), min, max });
        }
        ExperimentReport {
            experiment: self.experiment,
            config: self.config,
            rows: self.rows,
            aggregates,
            thresholds: self.thresholds,
            pass: self.pass,
        }
    }
}

fn row(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

/// Per-position edit density and trace length of single transmissions.
/// The channel puts an edit at a position with probability exactly `p`,
/// and emissions balance deletions, so `|trace|/n` concentrates at 1.
pub fn channel_stats(cfg: &ExperimentConfig) -> Result<ExperimentReport, VerifyError> {
    cfg.validate()?;
    let alphabet = cfg.alphabet()?;
    let mut b = ReportBuilder::new("channel-stats", cfg);
    for t in 0..cfg.trials {
        let x = uniform_seq(cfg.n, alphabet, cfg.seed, stream(t, 0));
        let (y, planted) = transmit_planted(&x, cfg.params(t, 1));
        let edits = edit_positions(&planted).len();
        b.push_row(row(&[
            ("edit_density", edits as f64 / cfg.n as f64),
            ("length_ratio", y.len() as f64 / cfg.n as f64),
        ]));
    }
    let density = b.mean("edit_density");
    let p = cfg.p;
    b.check("edit_density_lo", p - 0.005, "model", |obs, thr| obs >= thr, density);
    b.check("edit_density_hi", p + 0.005, "model", |obs, thr| obs <= thr, density);
    let length = b.mean("length_ratio");
    b.check("length_ratio_lo", 0.99, "model", |obs, thr| obs >= thr, length);
    b.check("length_ratio_hi", 1.01, "model", |obs, thr| obs <= thr, length);
    Ok(b.finish())
}

/// Concentration of the trace distance around `p·n`.
pub fn ed_concentration(cfg: &ExperimentConfig) -> Result<ExperimentReport, VerifyError> {
    cfg.validate()?;
    let alphabet = cfg.alphabet()?;
    let mut b = ReportBuilder::new("ed-concentration", cfg);
    let pn = cfg.p * cfg.n as f64;
    let lower = (1.0 - 6.0 * cfg.epsilon) * pn;
    for t in 0..cfg.trials {
        let x = uniform_seq(cfg.n, alphabet, cfg.seed, stream(t, 0));
        let y = transmit(&x, cfg.params(t, 1));
        let ed = edit_distance(&x, &y)? as f64;
        if cfg.p == 0.0 {
            b.push_row(row(&[("ed", ed), ("exact_equal", (ed == 0.0) as u8 as f64)]));
        } else {
            b.push_row(row(&[
                ("ed", ed),
                ("ed_ratio", ed / pn),
                ("below_lower", (ed < lower) as u8 as f64),
            ]));
        }
    }
    if cfg.p == 0.0 {
        let exact = b.mean("exact_equal");
        b.pass_flag("noiseless_exact", exact == 1.0);
    } else {
        let ratio = b.mean("ed_ratio");
        b.check("ed_ratio_lo", 0.85, "calibrated", |obs, thr| obs >= thr, ratio);
        b.check("ed_ratio_hi", 1.10, "calibrated", |obs, thr| obs <= thr, ratio);
        let below = b.mean("below_lower");
        b.check("below_lower_max", 0.0, "model", |obs, thr| obs <= thr, below);
    }
    Ok(b.finish())
}

/// How often the canonical optimal alignment agrees with the planted one
/// around well-separated edits. An isolated edit at `i` (clean for
/// `⌊2ε/p⌋` positions on both sides) is counted as agreed when the
/// optimal alignment maps the window endpoints `i ± ⌊ε/p⌋` exactly like
/// the planted alignment and spends exactly cost 1 on the window.
pub fn alignment_agreement(cfg: &ExperimentConfig) -> Result<ExperimentReport, VerifyError> {
    cfg.validate()?;
    let alphabet = cfg.alphabet()?;
    if cfg.p > 0.0 && !(cfg.p <= cfg.delta && cfg.delta <= cfg.epsilon) {
        return Err(VerifyError::BadConfig(format!(
            "delta {} must lie in [p, epsilon] = [{}, {}]",
            cfg.delta, cfg.p, cfg.epsilon
        )));
    }
    let mut b = ReportBuilder::new("alignment-agreement", cfg);
    if cfg.p == 0.0 {
        for t in 0..cfg.trials {
            let x = uniform_seq(cfg.n, alphabet, cfg.seed, stream(t, 0));
            let (y, _) = transmit_planted(&x, cfg.params(t, 1));
            let cost = optimal_alignment(&x, &y)?.cost();
            b.push_row(row(&[("cost", cost as f64)]));
        }
        let cost = b.mean("cost");
        b.pass_flag("noiseless_zero_cost", cost == 0.0);
        return Ok(b.finish());
    }

    let pn = cfg.p * cfg.n as f64;
    for t in 0..cfg.trials {
        let x = uniform_seq(cfg.n, alphabet, cfg.seed, stream(t, 0));
        let (y, planted) = transmit_planted(&x, cfg.params(t, 1));
        let isolated = crate::channel::well_separated_edits(&planted, cfg.p, cfg.epsilon)?;
        let m = optimal_alignment(&x, &y)?;
        let w = isolated.half_width;
        let mut agreed = 0usize;
        let mut zero_cost = 0usize;
        for &i in &isolated.indices {
            let (lo, hi) = (i - w, i + w);
            let boundaries_match = m.image_of(lo) == planted.alignment().image_of(lo)
                && m.image_of(hi) == planted.alignment().image_of(hi);
            let cost = m.cost_on(lo, hi)?;
            if boundaries_match && cost == 1 {
                agreed += 1;
            }
            if cost == 0 {
                zero_cost += 1;
            }
        }
        b.push_row(row(&[
            ("isolated", isolated.indices.len() as f64),
            ("agree_ratio", agreed as f64 / pn),
            ("zero_cost_ratio", zero_cost as f64 / pn),
            ("cost_ratio", m.cost() as f64 / pn),
        ]));
    }
    let agree = b.mean("agree_ratio");
    // Calibrated at n=1e5, p=0.01, eps=0.2, 10 seeds: mean 0.4375, min
    // 0.412; pinned 20% below the mean.
    b.check("agree_ratio_min", 0.35, "calibrated", |obs, thr| obs >= thr, agree);
    let zero = b.mean("zero_cost_ratio");
    b.check("zero_cost_max", 6.0 * cfg.epsilon, "model", |obs, thr| obs <= thr, zero);
    let cost = b.mean("cost_ratio");
    b.check("cost_ratio_max", 1.0 + cfg.delta, "model", |obs, thr| obs <= thr, cost);
    Ok(b.finish())
}

/// Two chained transmissions at rate `p` against one transmission at the
/// equivalent rate `q(p)`: the trace-distance means must agree.
pub fn transitivity_check(cfg: &ExperimentConfig) -> Result<ExperimentReport, VerifyError> {
    cfg.validate()?;
    let alphabet = cfg.alphabet()?;
    let q = chained_noise_rate(cfg.p)?;
    let mut b = ReportBuilder::new("transitivity", cfg);
    for t in 0..cfg.trials {
        let x = uniform_seq(cfg.n, alphabet, cfg.seed, stream(t, 0));
        let mid = transmit(&x, cfg.params(t, 1));
        let chained = transmit(&mid, cfg.params(t, 2));
        let direct = transmit(
            &x,
            ChannelParams::new(q, cfg.seed, stream(t, 3)).expect("q(p) stays in [0, 1)"),
        );
        b.push_row(row(&[
            ("ed_chained", edit_distance(&x, &chained)? as f64),
            ("ed_direct", edit_distance(&x, &direct)? as f64),
        ]));
    }
    let a = b.mean("ed_chained");
    let c = b.mean("ed_direct");
    let gap = if a + c == 0.0 { 0.0 } else { (a - c).abs() / ((a + c) / 2.0) };
    b.check("relative_gap_max", 0.03, "calibrated", |obs, thr| obs <= thr, gap);
    Ok(b.finish())
}

/// Exact three-trace medians against the source: the median must beat a
/// single trace by a factor, and the optimal objective must sit near its
/// expectation `3pn`.
pub fn median_robustness(cfg: &ExperimentConfig) -> Result<ExperimentReport, VerifyError> {
    cfg.validate()?;
    let alphabet = cfg.alphabet()?;
    let mut b = ReportBuilder::new("median-robustness", cfg);
    let pn = cfg.p * cfg.n as f64;
    for t in 0..cfg.trials {
        let s = uniform_seq(cfg.n, alphabet, cfg.seed, stream(t, 0));
        let x1 = transmit(&s, cfg.params(t, 1));
        let x2 = transmit(&s, cfg.params(t, 2));
        let x3 = transmit(&s, cfg.params(t, 3));
        let r = median3_exact(&x1, &x2, &x3)?;
        let ed_s_med = edit_distance(&s, &r.median)? as f64;
        let ed_s_x1 = edit_distance(&s, &x1)? as f64;
        let mut entries = vec![
            ("ed_s_median", ed_s_med),
            ("ed_s_trace1", ed_s_x1),
            ("opt", r.objective as f64),
        ];
        let far = *r.distances.iter().max().expect("three distances") as f64;
        if cfg.p > 0.0 {
            entries.push(("opt_ratio", r.objective as f64 / (3.0 * pn)));
            entries.push(("max_input_ratio", far / pn));
        }
        b.push_row(row(&entries));
    }
    if cfg.p == 0.0 {
        let exact = b.mean("ed_s_median");
        b.pass_flag("noiseless_exact", exact == 0.0);
        return Ok(b.finish());
    }
    let med = b.mean("ed_s_median");
    let single = b.mean("ed_s_trace1");
    let improvement = if single == 0.0 { 0.0 } else { med / single };
    b.check("median_vs_single_max", 0.5, "calibrated", |obs, thr| obs <= thr, improvement);
    let opt_ratio = b.mean("opt_ratio");
    b.check("opt_ratio_lo", 0.8, "calibrated", |obs, thr| obs >= thr, opt_ratio);
    b.check("opt_ratio_hi", 1.2, "calibrated", |obs, thr| obs <= thr, opt_ratio);
    Ok(b.finish())
}

/// Objective of the source string against `m` traces: each trace
/// contributes about `pn`, so `Obj/(pnm)` concentrates at 1. Also reports
/// the best input's objective as a reference point.
pub fn mtrace_objective(cfg: &ExperimentConfig) -> Result<ExperimentReport, VerifyError> {
    cfg.validate()?;
    let alphabet = cfg.alphabet()?;
    let mut b = ReportBuilder::new("mtrace-objective", cfg);
    let pnm = cfg.p * cfg.n as f64 * cfg.m as f64;
    for t in 0..cfg.trials {
        let s = uniform_seq(cfg.n, alphabet, cfg.seed, stream(t, 0));
        let traces: Vec<Seq> =
            (0..cfg.m).map(|i| transmit(&s, cfg.params(t, 1 + i as u64))).collect();
        let obj = objective(&traces, &s)?;
        let (_, best_obj) = best_of_inputs(&traces)?;
        let mut entries = vec![("obj", obj as f64), ("best_input_obj", best_obj as f64)];
        if cfg.p > 0.0 {
            entries.push(("obj_ratio", obj as f64 / pnm));
        }
        b.push_row(row(&entries));
    }
    if cfg.p == 0.0 {
        let obj = b.mean("obj");
        b.pass_flag("noiseless_zero_objective", obj == 0.0);
        return Ok(b.finish());
    }
    let ratio = b.mean("obj_ratio");
    b.check("obj_ratio_lo", 0.9, "calibrated", |obs, thr| obs >= thr, ratio);
    b.check("obj_ratio_hi", 1.1, "calibrated", |obs, thr| obs <= thr, ratio);
    Ok(b.finish())
}

/// End-to-end reconstruction quality at the desk geometry. Reports the
/// distance of the reconstruction to the source in units of `pn` and of
/// `p²·log₂(1/p)·n`, and whether it beats the first trace alone. Timing
/// is measured by the caller, never stored in the report.
pub fn reconstruct_bench(cfg: &ExperimentConfig) -> Result<ExperimentReport, VerifyError> {
    cfg.validate()?;
    let alphabet = cfg.alphabet()?;
    let plan = ReconstructionPlan::desk(cfg.n, cfg.p).map_err(ReconstructError::from)?;
    let mut b = ReportBuilder::new("reconstruct-bench", cfg);
    let pn = cfg.p * cfg.n as f64;
    let fine = if cfg.p > 0.0 { pn * cfg.p * (1.0 / cfg.p).log2() } else { 0.0 };
    for t in 0..cfg.trials {
        let s = uniform_seq(cfg.n, alphabet, cfg.seed, stream(t, 0));
        let s1 = transmit(&s, cfg.params(t, 1));
        let s2 = transmit(&s, cfg.params(t, 2));
        let s3 = transmit(&s, cfg.params(t, 3));
        let detail = reconstruct3_detailed(&s1, &s2, &s3, cfg.p, &plan)?;
        let ed_sz = edit_distance(&s, &detail.output)? as f64;
        let ed_s1 = edit_distance(&s, &s1)? as f64;
        let lost = detail.lost();
        let mut entries = vec![
            ("ed_sz", ed_sz),
            ("ed_s_trace1", ed_s1),
            ("beats_single", (ed_sz < ed_s1) as u8 as f64),
            ("lost_anchors", (lost[0] + lost[1]) as f64),
            ("output_len_ratio", detail.output.len() as f64 / cfg.n as f64),
        ];
        if cfg.p > 0.0 {
            entries.push(("ed_ratio_pn", ed_sz / pn));
            entries.push(("ed_ratio_fine", ed_sz / fine));
        }
        b.push_row(row(&entries));
    }
    if cfg.p == 0.0 {
        let ed = b.mean("ed_sz");
        b.pass_flag("noiseless_exact", ed == 0.0);
        return Ok(b.finish());
    }
    let med = b.median("ed_ratio_pn");
    b.check("ed_ratio_pn_median_max", 0.3, "calibrated", |obs, thr| obs <= thr, med);
    let beats = b.mean("beats_single");
    b.pass_flag("beats_single_trace", beats == 1.0);
    Ok(b.finish())
}

/// Runs an experiment by its CLI name.
pub fn run_experiment(name: &str, cfg: &ExperimentConfig) -> Result<ExperimentReport, VerifyError> {
    match name {
        "channel-stats" => channel_stats(cfg),
        "ed-concentration" => ed_concentration(cfg),
        "alignment-agreement" => alignment_agreement(cfg),
        "transitivity" => transitivity_check(cfg),
        "median-robustness" => median_robustness(cfg),
        "mtrace-objective" => mtrace_objective(cfg),
        "reconstruct-bench" => reconstruct_bench(cfg),
        other => Err(VerifyError::UnknownExperiment(other.to_string())),
    }
}
