//! k-color distributions and the bias quantities derived from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a color in `0..k`.
pub type Color = u32;

/// A k-color distribution: `counts[j]` nodes hold color `j`.
///
/// Immutable after construction. `n` is cached and always equals the sum of
/// the counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Configuration {
    counts: Vec<u64>,
    n: u64,
}

impl Configuration {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        let n = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or(Error::CountOverflow)?;
        if n == 0 {
            return Err(Error::ZeroNodes);
        }
        // Exact analytics work in i128 on products of two counts.
        if n > i64::MAX as u64 {
            return Err(Error::CountOverflow);
        }
        Ok(Configuration { counts, n })
    }

    /// Builds a configuration from signed input, rejecting negative entries.
    pub fn from_signed(counts: &[i64]) -> Result<Self> {
        let mut out = Vec::with_capacity(counts.len());
        for (i, &c) in counts.iter().enumerate() {
            if c < 0 {
                return Err(Error::NegativeCount(i));
            }
            out.push(c as u64);
        }
        Self::new(out)
    }

    /// All `n` nodes on color `color`.
    pub fn monochromatic(n: u64, k: usize, color: Color) -> Result<Self> {
        if (color as usize) >= k {
            return Err(Error::ColorOutOfRange { color, k });
        }
        let mut counts = vec![0; k];
        counts[color as usize] = n;
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, color: Color) -> u64 {
        self.counts[color as usize]
    }

    pub fn max_count(&self) -> u64 {
        *self.counts.iter().max().expect("k >= 1")
    }

    /// The single color holding every node, if any.
    pub fn monochromatic_color(&self) -> Option<Color> {
        self.counts
            .iter()
            .position(|&c| c == self.n)
            .map(|i| i as Color)
    }

    pub fn is_monochromatic(&self) -> bool {
        self.monochromatic_color().is_some()
    }

    /// Σ c_h², exact.
    pub fn sum_of_squares(&self) -> u128 {
        self.counts.iter().map(|&c| (c as u128) * (c as u128)).sum()
    }

    /// Lowest-index color among those holding the maximum count.
    pub fn plurality(&self) -> Color {
        let m = self.max_count();
        self.counts.iter().position(|&c| c == m).unwrap() as Color
    }

    /// Returns the unique color `m` with `c_m >= c_j + s` for every `j != m`.
    ///
    /// A tie for the maximum never yields a color, even for `s = 0`.
    pub fn is_s_biased(&self, s: u64) -> Option<Color> {
        let (first, second) = self.top_two();
        match second {
            None => Some(first),
            Some(runner_up) => {
                let m = self.counts[first as usize];
                if m > runner_up && m - runner_up >= s {
                    Some(first)
                } else {
                    None
                }
            }
        }
    }

    /// Color of the first maximum and the largest count among the other colors.
    fn top_two(&self) -> (Color, Option<u64>) {
        let first = self.plurality();
        let second = self
            .counts
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != first as usize)
            .map(|(_, &c)| c)
            .max();
        (first, second)
    }

    /// Relabels colors: color `j` of `self` becomes color `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.k());
        let mut counts = vec![0; self.k()];
        for (j, &c) in self.counts.iter().enumerate() {
            counts[perm[j]] = c;
        }
        Configuration { counts, n: self.n }
    }
}

impl TryFrom<Vec<u64>> for Configuration {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Configuration::new(v)
    }
}

impl From<Configuration> for Vec<u64> {
    fn from(c: Configuration) -> Self {
        c.counts
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// m, M, s, α and γ of a configuration.
///
/// `alpha` and `gamma` are reported as doubles; the exact numerators over the
/// common denominator `n²` are kept alongside so bounds can be checked without
/// rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasStats {
    pub m: u64,
    pub majority_set: Vec<Color>,
    pub s: u64,
    pub alpha: f64,
    pub gamma: f64,
    pub alpha_numer: i128,
    pub gamma_numer: i128,
    pub denom: i128,
}

/// A bound on [`BiasStats`] that failed to hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundViolation {
    /// `s <= m - (n - m)/(k - 1)`
    BiasAboveSpread,
    /// `alpha <= s/n`
    AlphaAboveBias,
    /// `alpha <= 1/4`
    AlphaAboveQuarter,
    /// `0 <= gamma <= 1/8`
    GammaOutOfRange,
    /// negative alpha
    AlphaNegative,
    /// tie for the maximum with `s != 0`
    TieWithBias,
}

impl BiasStats {
    pub fn of(c: &Configuration) -> Self {
        let n = c.n() as i128;
        let (first, second) = c.top_two();
        let m = c.count(first);
        let majority_set: Vec<Color> = c
            .counts()
            .iter()
            .enumerate()
            .filter(|&(_, &x)| x == m)
            .map(|(i, _)| i as Color)
            .collect();
        // k = 1 has no runner-up; s is taken as 0 there.
        let s = match second {
            Some(r) if majority_set.len() == 1 => m - r,
            _ => 0,
        };
        let denom = n * n;
        let alpha_numer = (n - m as i128) * s as i128;
        let gamma_numer = n * m as i128 - c.sum_of_squares() as i128 - alpha_numer;
        BiasStats {
            m,
            majority_set,
            s,
            alpha: alpha_numer as f64 / denom as f64,
            gamma: gamma_numer as f64 / denom as f64,
            alpha_numer,
            gamma_numer,
            denom,
        }
    }

    /// Checks the alpha/gamma/bias bounds in exact integer arithmetic.
    pub fn bound_violations(&self, c: &Configuration) -> Vec<BoundViolation> {
        let n = c.n() as i128;
        let k = c.k() as i128;
        let m = self.m as i128;
        let s = self.s as i128;
        let mut out = Vec::new();
        if k >= 2 && (k - 1) * s > (k - 1) * m - (n - m) {
            out.push(BoundViolation::BiasAboveSpread);
        }
        if self.alpha_numer < 0 {
            out.push(BoundViolation::AlphaNegative);
        }
        if self.alpha_numer > s * n {
            out.push(BoundViolation::AlphaAboveBias);
        }
        if 4 * self.alpha_numer > self.denom {
            out.push(BoundViolation::AlphaAboveQuarter);
        }
        if self.gamma_numer < 0 || 8 * self.gamma_numer > self.denom {
            out.push(BoundViolation::GammaOutOfRange);
        }
        if self.majority_set.len() > 1 && self.s != 0 {
            out.push(BoundViolation::TieWithBias);
        }
        out
    }
}
