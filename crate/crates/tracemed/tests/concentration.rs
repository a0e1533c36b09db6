//! Alphabet-size trend: over large alphabets random insertions almost never
//! extend a common subsequence, so the optimal distance climbs to the cost
//! of the alignment the channel itself produced.

use tracemed::align::edit_distance;
use tracemed::channel::{transmit_planted, uniform_seq, ChannelParams};
use tracemed::Alphabet;

#[test]
fn edit_distance_approaches_the_planted_cost_on_large_alphabets() {
    let n = 20_000;
    let p = 0.05;
    let trials = 20;
    let pn = p * n as f64;
    let mut gap_means = Vec::new();
    for size in [2u32, 16, 1024] {
        let alphabet = Alphabet::new(size).unwrap();
        let mut gaps = Vec::new();
        for t in 0..trials {
            let x = uniform_seq(n, alphabet, 5, 16 * t);
            let (y, planted) =
                transmit_planted(&x, ChannelParams::new(p, 5, 16 * t + 1).unwrap());
            let ed = edit_distance(&x, &y).unwrap();
            let planted_cost = planted.alignment().cost();
            assert!(ed <= planted_cost, "the planted alignment is an upper bound");
            gaps.push((planted_cost - ed) as f64 / pn);
        }
        gap_means.push(gaps.iter().sum::<f64>() / trials as f64);
    }
    let [binary, medium, large] = gap_means[..] else { unreachable!() };
    assert!(binary >= 0.03, "binary slack {binary:.4} implausibly small");
    assert!(medium <= 0.015, "16-symbol slack {medium:.4} too large");
    assert!(large <= 0.003, "1024-symbol slack {large:.4} too large");
    assert!(binary > medium && medium > large, "slack must shrink with the alphabet");
}
