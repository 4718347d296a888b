//! Initial configurations. Flooring remainders are placed deterministically.

use crate::configuration::Configuration;
use crate::error::{Error, Result};

/// Color 0 gets `C + s`, every other color `C`, with `C = ⌊(n - s)/k⌋`. The
/// flooring remainder goes one node each to the last colors, never color 0.
pub fn gen_balanced_biased(n: u64, k: usize, s: u64) -> Result<Configuration> {
    if k == 0 {
        return Err(Error::EmptyConfiguration);
    }
    if s > n {
        return Err(Error::InvalidParameter(format!("bias s={s} exceeds n={n}")));
    }
    let base = (n - s) / k as u64;
    let rem = ((n - s) % k as u64) as usize;
    let mut counts = vec![base; k];
    counts[0] += s;
    for c in counts.iter_mut().skip(k - rem) {
        *c += 1;
    }
    Configuration::new(counts)
}

/// Three colors `(⌊n/3⌋ + s, ⌊n/3⌋, ⌊n/3⌋ - s)` with the remainder added to
/// the middle color.
pub fn gen_three_color_lb(n: u64, s: u64) -> Result<Configuration> {
    let third = n / 3;
    if s > third {
        return Err(Error::InvalidParameter(format!(
            "bias s={s} exceeds n/3={third}"
        )));
    }
    Configuration::new(vec![third + s, third + n % 3, third - s])
}

/// Color 0 gets `⌊n/k + (n/k)^(1-eps)⌋`; the rest is spread as evenly as
/// possible over the other colors, remainder to the last ones.
pub fn gen_power_biased(n: u64, k: usize, eps: f64) -> Result<Configuration> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps={eps} must lie in (0,1)"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k={k} must be at least 2")));
    }
    let share = n as f64 / k as f64;
    let first = (share + share.powf(1.0 - eps)).floor() as u64;
    if first > n {
        return Err(Error::InvalidParameter(format!(
            "majority count {first} exceeds n={n}"
        )));
    }
    let others = (k - 1) as u64;
    let rest = n - first;
    let base = rest / others;
    let rem = (rest % others) as usize;
    let mut counts = vec![base; k];
    counts[0] = first;
    for c in counts.iter_mut().skip(k - rem) {
        *c += 1;
    }
    if counts[1..].iter().any(|&c| c > first) {
        return Err(Error::InvalidParameter(format!(
            "majority count {first} is below the even share of the others"
        )));
    }
    Configuration::new(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_biased() {
        assert_eq!(gen_balanced_biased(10, 3, 1).unwrap().counts(), &[4, 3, 3]);
        assert_eq!(gen_balanced_biased(10, 3, 0).unwrap().counts(), &[3, 3, 4]);
        assert_eq!(gen_balanced_biased(5, 5, 0).unwrap().counts(), &[1; 5]);
        assert_eq!(gen_balanced_biased(12, 1, 3).unwrap().counts(), &[12]);
        assert_eq!(
            gen_balanced_biased(11, 4, 2).unwrap().counts(),
            &[4, 2, 2, 3]
        );
        assert!(gen_balanced_biased(10, 3, 11).is_err());
    }

    #[test]
    fn three_color() {
        assert_eq!(gen_three_color_lb(9, 1).unwrap().counts(), &[4, 3, 2]);
        assert_eq!(gen_three_color_lb(9, 0).unwrap().counts(), &[3, 3, 3]);
        assert_eq!(gen_three_color_lb(10, 1).unwrap().counts(), &[4, 4, 2]);
        assert!(gen_three_color_lb(9, 4).is_err());
    }

    #[test]
    fn power_biased() {
        let c = gen_power_biased(10_000, 10, 0.2).unwrap();
        assert_eq!(c.count(0), 1251);
        assert_eq!(c.n(), 10_000);
        assert!(c.counts()[1..].iter().all(|&x| x <= 1251));

        let c = gen_power_biased(100, 10, 0.99).unwrap();
        assert_eq!(c.count(0), 11);
        assert_eq!(c.n(), 100);

        assert_eq!(gen_power_biased(100, 2, 0.5).unwrap().counts(), &[57, 43]);
        assert!(gen_power_biased(100, 2, 1.0).is_err());
        assert!(gen_power_biased(100, 1, 0.5).is_err());
    }
}
