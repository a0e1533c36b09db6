//! Cross-module checks of the anchor pipeline against the planted
//! alignments the channel recorded.

use tracemed::align::edit_distance;
use tracemed::channel::{chained_noise_rate, transmit_planted, uniform_seq, ChannelParams};
use tracemed::reconstruct::{
    locate_anchors, plan_blocks, reconstruct3_detailed, true_match, ReconstructionPlan,
};
use tracemed::{Alphabet, Seq};

#[test]
fn found_anchors_sit_on_their_true_matches() {
    let n = 1 << 20;
    let p = 0.01;
    let seed = 42;
    let alphabet = Alphabet::new(2).unwrap();
    let s = uniform_seq(n, alphabet, seed, 0);
    let (s1, pl1) = transmit_planted(&s, ChannelParams::new(p, seed, 1).unwrap());
    let (s2, pl2) = transmit_planted(&s, ChannelParams::new(p, seed, 2).unwrap());
    let (s3, pl3) = transmit_planted(&s, ChannelParams::new(p, seed, 3).unwrap());

    let plan = ReconstructionPlan::desk(s1.len(), p).unwrap();
    let blocks = plan_blocks(&s1, &plan).unwrap();
    let anchors: Vec<Seq> = blocks.iter().map(|b| s1.interval(b.anchor.0, b.anchor.1)).collect();

    // Where each anchor actually came from, mapped through the source.
    let rel2 = pl1.alignment().invert().compose(pl2.alignment()).unwrap();
    let rel3 = pl1.alignment().invert().compose(pl3.alignment()).unwrap();
    assert_eq!(
        true_match(&pl1, &pl2, blocks[0].anchor).unwrap().image,
        rel2.map_interval(blocks[0].anchor.0, blocks[0].anchor.1).unwrap().image,
    );

    let cost_cap = (2.0 * chained_noise_rate(p).unwrap() * plan.anchor_len as f64) as usize;
    for (trace, rel) in [(&s2, &rel2), (&s3, &rel3)] {
        let found = locate_anchors(&anchors, trace, &plan).unwrap();
        assert_eq!(found.len(), blocks.len());
        let mut overlapping = 0;
        let mut cheap = 0;
        let mut drifts = Vec::new();
        for (bp, m) in blocks.iter().zip(&found) {
            let m = m.expect("at this noise level every anchor is found");
            let (lo, hi) = rel
                .map_interval(bp.anchor.0, bp.anchor.1)
                .unwrap()
                .image
                .expect("a 400-symbol anchor never vanishes at p = 0.01");
            if m.start <= hi && lo <= m.end {
                overlapping += 1;
            }
            if m.cost <= cost_cap {
                cheap += 1;
            }
            drifts.push(m.start.abs_diff(lo));
        }
        let total = blocks.len();
        assert!(
            overlapping * 10 >= total * 9,
            "only {overlapping}/{total} anchors overlap their true match"
        );
        // The found cost tracks the two-channel noise rate between traces.
        assert!(
            cheap * 20 >= total * 19,
            "only {cheap}/{total} anchors cost at most {cost_cap}"
        );
        drifts.sort_unstable();
        assert!(drifts[(total - 1) * 95 / 100] <= 16, "drift 95th percentile too large");
        assert!(drifts[total - 1] <= 64, "worst drift {} too large", drifts[total - 1]);
    }
}

#[test]
fn rebuilt_output_tracks_the_noise_rate() {
    let n = 1 << 16;
    let p = 0.01;
    let alphabet = Alphabet::new(2).unwrap();
    for seed in [3, 4] {
        let s = uniform_seq(n, alphabet, seed, 0);
        let (s1, _) = transmit_planted(&s, ChannelParams::new(p, seed, 1).unwrap());
        let (s2, _) = transmit_planted(&s, ChannelParams::new(p, seed, 2).unwrap());
        let (s3, _) = transmit_planted(&s, ChannelParams::new(p, seed, 3).unwrap());
        let plan = ReconstructionPlan::desk(s1.len(), p).unwrap();
        let detail = reconstruct3_detailed(&s1, &s2, &s3, p, &plan).unwrap();
        assert_eq!(detail.lost(), [0, 0]);

        let pn = p * n as f64;
        let ed_z = edit_distance(&s, &detail.output).unwrap();
        let ed_s1 = edit_distance(&s, &s1).unwrap();
        assert!(
            (ed_z as f64) <= 0.3 * pn,
            "seed {seed}: reconstruction error {ed_z} above 0.3·pn = {:.0}",
            0.3 * pn
        );
        assert!(
            ed_z < ed_s1,
            "seed {seed}: reconstruction ({ed_z}) must beat the raw trace ({ed_s1})"
        );
    }
}
