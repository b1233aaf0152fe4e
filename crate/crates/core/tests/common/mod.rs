//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texsem::LabelDistribution;

/// Straight transcription of the six measure formulas, kept independent of the
/// library code. Inputs must be strictly positive.
pub fn oracle(d: &[f64], e: &[f64]) -> [f64; 6] {
    let c = d.len();
    let mut cheb = 0.0f64;
    let mut clark = 0.0;
    let mut canb = 0.0;
    let mut kl = 0.0;
    let mut dot = 0.0;
    let mut dd = 0.0;
    let mut ee = 0.0;
    let mut inter = 0.0;
    for j in 0..c {
        let diff = d[j] - e[j];
        if diff.abs() > cheb {
            cheb = diff.abs();
        }
        clark += diff * diff / ((d[j] + e[j]) * (d[j] + e[j]));
        canb += diff.abs() / (d[j] + e[j]);
        kl += d[j] * (d[j].ln() - e[j].ln());
        dot += d[j] * e[j];
        dd += d[j] * d[j];
        ee += e[j] * e[j];
        inter += if d[j] < e[j] { d[j] } else { e[j] };
    }
    [cheb, clark.sqrt(), canb, kl, dot / (dd.sqrt() * ee.sqrt()), inter]
}

/// Random distribution with strictly positive entries.
pub fn random_distribution(rng: &mut impl Rng, c: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// `n` seeded pairs with between 2 and 12 labels.
pub fn random_pairs(n: usize, seed: u64) -> Vec<(LabelDistribution, LabelDistribution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c = rng.random_range(2..=12);
            let d = random_distribution(&mut rng, c);
            let e = random_distribution(&mut rng, c);
            (LabelDistribution::new(d).unwrap(), LabelDistribution::new(e).unwrap())
        })
        .collect()
}
