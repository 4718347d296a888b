#![allow(dead_code)]

use plurality::Configuration;
use rand::Rng;

/// Random configuration with `k` in `1..=k_max` and `n` up to `n_max`.
///
/// Mixes uniform cut points with skewed exponential weights so both near-ties
/// and heavy majorities show up, and zero counts are common.
pub fn random_configuration<R: Rng>(rng: &mut R, k_max: usize, n_max: u64) -> Configuration {
    let k = rng.random_range(1..=k_max);
    let n = if rng.random_bool(0.5) {
        rng.random_range(1..=n_max.min(1000))
    } else {
        let e = rng.random_range(0.0..(n_max as f64).log10());
        (10f64.powf(e) as u64).clamp(1, n_max)
    };
    let weights: Vec<f64> = match rng.random_range(0..3) {
        0 => (0..k).map(|_| rng.random::<f64>()).collect(),
        1 => (0..k)
            .map(|_| -rng.random::<f64>().ln() * rng.random_range(0.1..10.0))
            .collect(),
        _ => (0..k)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect(),
    };
    let total: f64 = weights.iter().sum();
    let mut counts: Vec<u64> = if total > 0.0 {
        weights
            .iter()
            .map(|w| (w / total * n as f64).floor() as u64)
            .collect()
    } else {
        vec![0; k]
    };
    let assigned: u64 = counts.iter().sum();
    let j = rng.random_range(0..k);
    counts[j] += n - assigned;
    Configuration::new(counts).unwrap()
}

/// Same as [`random_configuration`] but with a unique maximum.
pub fn random_unique_max<R: Rng>(rng: &mut R, k_max: usize, n_max: u64) -> Configuration {
    loop {
        let c = random_configuration(rng, k_max, n_max);
        if c.is_s_biased(0).is_some() {
            return c;
        }
    }
}
