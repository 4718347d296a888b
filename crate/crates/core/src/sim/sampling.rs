use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::Dynamics;
use crate::configuration::{Color, Configuration};
use crate::error::Result;

/// Draws counts for `n` i.i.d. trials over `p` with `k - 1` conditional
/// binomials. `p` is renormalized on the fly; colors with zero mass always
/// receive zero.
pub fn sample_multinomial<R: Rng + ?Sized>(n: u64, p: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; p.len()];
    let Some(last) = p.iter().rposition(|&x| x > 0.0) else {
        return out;
    };
    // suffix sums avoid the drift of repeated subtraction
    let mut tail = vec![0.0; p.len() + 1];
    for j in (0..p.len()).rev() {
        tail[j] = tail[j + 1] + p[j].max(0.0);
    }
    let mut left = n;
    for j in 0..last {
        if left == 0 {
            break;
        }
        if p[j] <= 0.0 {
            continue;
        }
        let q = (p[j] / tail[j]).clamp(0.0, 1.0);
        let x = if q >= 1.0 {
            left
        } else {
            Binomial::new(left, q).expect("q in [0,1)").sample(rng)
        };
        out[j] = x;
        left -= x;
    }
    out[last] += left;
    out
}

/// Per-node sampling: every node draws its own samples (with replacement,
/// itself included) and applies the rule or plurality.
pub fn agent_step<R: Rng + ?Sized>(
    c: &Configuration,
    dynamics: &Dynamics,
    rng: &mut R,
) -> Result<Configuration> {
    let n = c.n();
    let mut nodes: Vec<Color> = Vec::with_capacity(n as usize);
    for (j, &x) in c.counts().iter().enumerate() {
        nodes.extend(std::iter::repeat_n(j as Color, x as usize));
    }
    let mut next = vec![0u64; c.k()];
    match dynamics {
        Dynamics::Rule(rule) => {
            for _ in 0..n {
                let t = [
                    nodes[rng.random_range(0..n) as usize],
                    nodes[rng.random_range(0..n) as usize],
                    nodes[rng.random_range(0..n) as usize],
                ];
                next[rule.apply(t, rng)? as usize] += 1;
            }
        }
        Dynamics::HMajority(h) => {
            let mut sample = vec![0 as Color; *h as usize];
            let mut ties: Vec<Color> = Vec::with_capacity(*h as usize);
            for _ in 0..n {
                for s in sample.iter_mut() {
                    *s = nodes[rng.random_range(0..n) as usize];
                }
                next[plurality(&mut sample, &mut ties, rng) as usize] += 1;
            }
        }
    }
    Configuration::new(next)
}

/// Most frequent color in `sample`, ties broken uniformly.
fn plurality<R: Rng + ?Sized>(sample: &mut [Color], ties: &mut Vec<Color>, rng: &mut R) -> Color {
    sample.sort_unstable();
    ties.clear();
    let mut best = 0usize;
    let mut i = 0;
    while i < sample.len() {
        let mut j = i;
        while j < sample.len() && sample[j] == sample[i] {
            j += 1;
        }
        let run = j - i;
        if run > best {
            best = run;
            ties.clear();
        }
        if run == best {
            ties.push(sample[i]);
        }
        i = j;
    }
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}
