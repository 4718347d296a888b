//! Closed-form one-step quantities of the 3-majority dynamics.
//!
//! Everything here is computed from exact integer numerators and converted to
//! `f64` at the last step, so callers see the true rounding residuals. Nothing
//! is renormalized.

use serde::Serialize;

use crate::configuration::{BiasStats, Color, Configuration};
use crate::error::{Error, Result};

/// `n(n + c_j) - Σ c_h²`, the bracket shared by the pick probability and the
/// expected next count of color `j`. Never negative.
fn bracket(c: &Configuration, j: usize) -> i128 {
    let n = c.n() as i128;
    n * (n + c.counts()[j] as i128) - c.sum_of_squares() as i128
}

/// Probability that a single node adopts each color after one 3-majority round:
/// `p_j = c_j (n² + n c_j - Σ c_h²) / n³`.
pub fn pick_probabilities_3maj(c: &Configuration) -> Vec<f64> {
    let n = c.n() as f64;
    let n3 = n * n * n;
    (0..c.k())
        .map(|j| c.counts()[j] as f64 * bracket(c, j) as f64 / n3)
        .collect()
}

/// Expected count of each color after one 3-majority round,
/// `μ_j = c_j [1 + (n c_j - Σ c_h²)/n²]`.
pub fn expected_next_3maj(c: &Configuration) -> Vec<f64> {
    let n = c.n() as f64;
    let n2 = n * n;
    (0..c.k())
        .map(|j| c.counts()[j] as f64 * bracket(c, j) as f64 / n2)
        .collect()
}

/// The same expectation written through γ and α:
/// `μ_m = c_m (1 + γ + α)` for the majority color and
/// `μ_j = c_j (1 + γ + α - (m - c_j)/n)` otherwise.
///
/// Fails when the maximum is tied.
pub fn expected_next_decomposed(c: &Configuration) -> Result<Vec<f64>> {
    let stats = BiasStats::of(c);
    if stats.majority_set.len() != 1 {
        return Err(Error::TiedMaximum);
    }
    let n = c.n() as i128;
    let m = stats.m as i128;
    // (1 + γ + α) scaled by n²
    let growth = stats.denom + stats.gamma_numer + stats.alpha_numer;
    let n2 = stats.denom as f64;
    Ok(c.counts()
        .iter()
        .map(|&cj| {
            let lag = n * (m - cj as i128);
            cj as f64 * (growth - lag) as f64 / n2
        })
        .collect())
}

/// Sandwich on the expected number of nodes not holding majority color `m`
/// after one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinorityBounds {
    /// `(n - c_m)(1 - c_m²/n²)`
    pub lower: f64,
    /// `(n - c_m)(1 - s c_m/n²)`
    pub upper: f64,
    /// `n - μ_m`
    pub expectation: f64,
    /// Whether `lower <= expectation <= upper` holds, checked exactly when the
    /// products fit in 128 bits.
    pub holds: bool,
}

pub fn minority_expectation_bounds(c: &Configuration, m: Color) -> Result<MinorityBounds> {
    if m as usize >= c.k() {
        return Err(Error::ColorOutOfRange { color: m, k: c.k() });
    }
    let stats = BiasStats::of(c);
    if !stats.majority_set.contains(&m) {
        return Err(Error::NotMajority(m));
    }
    let n = c.n() as f64;
    let cm = c.count(m) as f64;
    let s = stats.s as f64;
    let lower = (n - cm) * (1.0 - cm * cm / (n * n));
    let upper = (n - cm) * (1.0 - s * cm / (n * n));
    let expectation = n - expected_next_3maj(c)[m as usize];
    let holds = match exact_sandwich(c, m, stats.s) {
        Some(b) => b,
        None => {
            let tol = 1e-12 * n;
            lower <= expectation + tol && expectation <= upper + tol
        }
    };
    Ok(MinorityBounds {
        lower,
        upper,
        expectation,
        holds,
    })
}

/// Everything multiplied by n²; `None` on overflow.
fn exact_sandwich(c: &Configuration, m: Color, s: u64) -> Option<bool> {
    let n = c.n() as i128;
    let cm = c.count(m) as i128;
    let s = s as i128;
    let n2 = n.checked_mul(n)?;
    let n3 = n2.checked_mul(n)?;
    let lower = (n - cm).checked_mul(n2 - cm * cm)?;
    let upper = (n - cm).checked_mul(n2 - s * cm)?;
    let mid = n3 - cm.checked_mul(bracket(c, m as usize))?;
    Some(lower <= mid && mid <= upper)
}
