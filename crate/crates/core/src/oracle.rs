//! Exact finite Markov-chain analysis for tiny `(n, k)`.
//!
//! States are all compositions of `n` into `k` parts, in lexicographic order.
//! The row of a state is the multinomial distribution of `n` draws over that
//! state's per-node pick distribution.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::configuration::{Color, Configuration};
use crate::error::{Error, Result};
use crate::rules::{ln_factorials, pick_probabilities_rule, Rule3, TableRule};
use crate::sim::{gen_three_color_lb, Dynamics};

/// Default cap on the number of chain states.
pub const CHAIN_STATE_CAP: u128 = 100_000;
/// Transient-state count above which solves switch to Gauss-Seidel.
pub const DENSE_SOLVE_LIMIT: usize = 2_000;
pub const ROW_SUM_TOLERANCE: f64 = 1e-10;
pub const ITERATIVE_RESIDUAL: f64 = 1e-10;
const ITERATIVE_MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ExactChain {
    n: u64,
    k: usize,
    states: Vec<Configuration>,
    index: HashMap<Vec<u64>, usize>,
    rows: Vec<Vec<(usize, f64)>>,
    absorbing: Vec<usize>,
}

/// `C(n + k - 1, k - 1)`, saturating.
pub fn composition_count(n: u64, k: usize) -> u128 {
    crate::rules::multiset_count(n.min(u32::MAX as u64) as u32, k)
}

/// All compositions of `n` into `k` non-negative parts, lexicographic.
fn compositions(n: u64, k: usize) -> Vec<Vec<u64>> {
    fn rec(left: u64, slots: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for x in 0..=left {
            prefix.push(x);
            rec(left - x, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

impl ExactChain {
    pub fn build(n: u64, k: usize, dynamics: &Dynamics) -> Result<Self> {
        Self::build_capped(n, k, dynamics, CHAIN_STATE_CAP)
    }

    pub fn build_capped(n: u64, k: usize, dynamics: &Dynamics, cap: u128) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyConfiguration);
        }
        if n == 0 {
            return Err(Error::ZeroNodes);
        }
        let count = composition_count(n, k);
        if count > cap {
            return Err(Error::ChainCap { count, cap });
        }
        let raw = compositions(n, k);
        let index: HashMap<Vec<u64>, usize> = raw
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let states: Vec<Configuration> = raw
            .into_iter()
            .map(Configuration::new)
            .collect::<Result<_>>()?;
        let ln_fact = ln_factorials(n as usize);
        let rows: Vec<Vec<(usize, f64)>> = states
            .par_iter()
            .enumerate()
            .map(|(i, c)| transition_row(i, c, dynamics, &index, &ln_fact))
            .collect::<Result<_>>()?;
        let absorbing = states
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_monochromatic())
            .map(|(i, _)| i)
            .collect();
        Ok(ExactChain {
            n,
            k,
            states,
            index,
            rows,
            absorbing,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn row(&self, state: usize) -> &[(usize, f64)] {
        &self.rows[state]
    }

    /// Indices of the monochromatic states, in state order.
    pub fn absorbing_states(&self) -> &[usize] {
        &self.absorbing
    }

    /// Color of each absorbing state, aligned with [`Self::absorbing_states`].
    pub fn absorbing_colors(&self) -> Vec<Color> {
        self.absorbing
            .iter()
            .map(|&i| self.states[i].monochromatic_color().unwrap())
            .collect()
    }

    pub fn state_index(&self, counts: &[u64]) -> Result<usize> {
        self.index
            .get(counts)
            .copied()
            .ok_or_else(|| Error::UnknownState(counts.to_vec()))
    }

    /// `P(from -> to)`.
    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.rows[from]
            .binary_search_by_key(&to, |&(j, _)| j)
            .map(|pos| self.rows[from][pos].1)
            .unwrap_or(0.0)
    }

    /// `Σ_{c'} P(c -> c') c'`.
    pub fn one_step_expectation(&self, state: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for &(j, p) in &self.rows[state] {
            for (slot, &x) in out.iter_mut().zip(self.states[j].counts()) {
                *slot += p * x as f64;
            }
        }
        out
    }

    /// Hitting probabilities of each absorbing state: `out[state][a]` is the
    /// probability of ending in `absorbing_states()[a]`.
    pub fn absorption_probabilities(&self) -> Result<Vec<Vec<f64>>> {
        self.check_reachability()?;
        let a = self.absorbing.len();
        let apos: HashMap<usize, usize> = self
            .absorbing
            .iter()
            .enumerate()
            .map(|(p, &i)| (i, p))
            .collect();
        let rhs = |s: usize| {
            let mut b = vec![0.0; a];
            for &(j, p) in &self.rows[s] {
                if let Some(&pos) = apos.get(&j) {
                    b[pos] += p;
                }
            }
            b
        };
        let transient = self.solve_transient(a, rhs)?;
        Ok((0..self.states.len())
            .map(|s| match apos.get(&s) {
                Some(&pos) => {
                    let mut v = vec![0.0; a];
                    v[pos] = 1.0;
                    v
                }
                None => transient[&s].clone(),
            })
            .collect())
    }

    /// Expected rounds to absorption from every state.
    pub fn expected_absorption_time(&self) -> Result<Vec<f64>> {
        self.check_reachability()?;
        let transient = self.solve_transient(1, |_| vec![1.0])?;
        Ok((0..self.states.len())
            .map(|s| transient.get(&s).map_or(0.0, |v| v[0]))
            .collect())
    }

    fn check_reachability(&self) -> Result<()> {
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); self.states.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                if p > 0.0 && i != j {
                    reverse[j].push(i);
                }
            }
        }
        let mut seen = vec![false; self.states.len()];
        let mut queue: VecDeque<usize> = self.absorbing.iter().copied().collect();
        for &a in &self.absorbing {
            seen[a] = true;
        }
        while let Some(j) = queue.pop_front() {
            for &i in &reverse[j] {
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        match seen.iter().position(|&s| !s) {
            Some(i) => Err(Error::UnreachableAbsorption(i)),
            None => Ok(()),
        }
    }

    /// Solves `x_s = Σ_{t transient} P(s,t) x_t + b(s)` over transient states,
    /// with `width` right-hand sides.
    fn solve_transient(
        &self,
        width: usize,
        b: impl Fn(usize) -> Vec<f64>,
    ) -> Result<HashMap<usize, Vec<f64>>> {
        let transient: Vec<usize> = (0..self.states.len())
            .filter(|s| !self.states[*s].is_monochromatic())
            .collect();
        let tpos: HashMap<usize, usize> =
            transient.iter().enumerate().map(|(p, &s)| (s, p)).collect();
        let m = transient.len();
        let rhs: Vec<Vec<f64>> = transient.iter().map(|&s| b(s)).collect();
        let solution: Vec<Vec<f64>> = if m == 0 {
            Vec::new()
        } else if m <= DENSE_SOLVE_LIMIT {
            let mut a = DMatrix::<f64>::identity(m, m);
            for (p, &s) in transient.iter().enumerate() {
                for &(j, prob) in &self.rows[s] {
                    if let Some(&q) = tpos.get(&j) {
                        a[(p, q)] -= prob;
                    }
                }
            }
            let bm = DMatrix::from_fn(m, width, |r, c| rhs[r][c]);
            let x = a.lu().solve(&bm).ok_or(Error::Singular)?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singular);
            }
            (0..m)
                .map(|r| (0..width).map(|c| x[(r, c)]).collect())
                .collect()
        } else {
            self.gauss_seidel(&transient, &tpos, &rhs, width)?
        };
        Ok(transient.into_iter().zip(solution).collect())
    }

    fn gauss_seidel(
        &self,
        transient: &[usize],
        tpos: &HashMap<usize, usize>,
        rhs: &[Vec<f64>],
        width: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let mut x = vec![vec![0.0; width]; transient.len()];
        for _ in 0..ITERATIVE_MAX_SWEEPS {
            let mut residual: f64 = 0.0;
            for (p, &s) in transient.iter().enumerate() {
                let mut acc = rhs[p].clone();
                let mut self_loop = 0.0;
                for &(j, prob) in &self.rows[s] {
                    match tpos.get(&j) {
                        Some(&q) if q == p => self_loop += prob,
                        Some(&q) => {
                            for (a, v) in acc.iter_mut().zip(&x[q]) {
                                *a += prob * v;
                            }
                        }
                        None => {}
                    }
                }
                if self_loop >= 1.0 {
                    return Err(Error::Singular);
                }
                for (c, a) in acc.into_iter().enumerate() {
                    let new = a / (1.0 - self_loop);
                    residual = residual.max((new - x[p][c]).abs());
                    x[p][c] = new;
                }
            }
            if residual <= ITERATIVE_RESIDUAL {
                return Ok(x);
            }
        }
        Err(Error::Singular)
    }

    /// Debug dump: one state per line, `composition -> index:probability ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.states.iter().enumerate() {
            let _ = write!(out, "{i} {c} ->");
            for &(j, p) in &self.rows[i] {
                let _ = write!(out, " {j}:{p:e}");
            }
            out.push('\n');
        }
        out
    }
}

fn transition_row(
    i: usize,
    c: &Configuration,
    dynamics: &Dynamics,
    index: &HashMap<Vec<u64>, usize>,
    ln_fact: &[f64],
) -> Result<Vec<(usize, f64)>> {
    if c.is_monochromatic() {
        return Ok(vec![(i, 1.0)]);
    }
    let p = dynamics.exact_pick_probabilities(c)?;
    let support: Vec<usize> = (0..p.len()).filter(|&j| p[j] > 0.0).collect();
    let ln_p: Vec<f64> = support.iter().map(|&j| p[j].ln()).collect();
    let n = c.n();
    let mut row = Vec::new();
    for part in compositions(n, support.len()) {
        let mut target = vec![0u64; c.k()];
        let mut lw = ln_fact[n as usize];
        for ((&j, &x), &lp) in support.iter().zip(&part).zip(&ln_p) {
            target[j] = x;
            lw += x as f64 * lp - ln_fact[x as usize];
        }
        row.push((index[&target], lw.exp()));
    }
    row.sort_unstable_by_key(|&(j, _)| j);
    Ok(row)
}

/// Per-`x` drift of the red count on two colors `(x, n - x)`.
#[derive(Debug, Clone, Serialize)]
pub struct SupermartingaleReport {
    pub n: u64,
    /// Clear-majority triples with two reds the rule maps to red.
    pub delta_r: u8,
    /// Clear-majority triples with two blues the rule maps to blue.
    pub delta_b: u8,
    /// `E[X' | X = x] - x` for `x` in `0..=n`.
    pub drift: Vec<f64>,
    /// Largest drift over `x >= n/2`.
    pub max_drift_upper_half: f64,
    pub argmax_upper_half: u64,
    /// `max_drift_upper_half <= 1e-12`.
    pub supermartingale_upper_half: bool,
    /// Every `|drift| <= 1e-12`.
    pub martingale: bool,
}

pub const DRIFT_TOLERANCE: f64 = 1e-12;

/// Computes the exact one-step drift of the color-0 count for a rule restricted
/// to two colors.
pub fn verify_supermartingale(rule: &Rule3, n: u64) -> Result<SupermartingaleReport> {
    if matches!(rule.max_k(), Some(k) if k < 2) {
        return Err(Error::NotTwoColor);
    }
    if n == 0 {
        return Err(Error::ZeroNodes);
    }
    let majority_hits = |t: [Color; 3], maj: Color| -> Result<u8> {
        Ok(u8::from(rule.eval(t)?.color() == Some(maj)))
    };
    let delta_r =
        majority_hits([0, 0, 1], 0)? + majority_hits([0, 1, 0], 0)? + majority_hits([1, 0, 0], 0)?;
    let delta_b =
        majority_hits([1, 1, 0], 1)? + majority_hits([1, 0, 1], 1)? + majority_hits([0, 1, 1], 1)?;
    let drift: Vec<f64> = (0..=n)
        .map(|x| {
            let c = Configuration::new(vec![x, n - x])?;
            let p = pick_probabilities_rule(rule, &c)?;
            Ok(n as f64 * p[0] - x as f64)
        })
        .collect::<Result<_>>()?;
    let half = n.div_ceil(2);
    let (argmax, max) =
        (half..=n)
            .map(|x| (x, drift[x as usize]))
            .fold((half, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
    Ok(SupermartingaleReport {
        n,
        delta_r,
        delta_b,
        max_drift_upper_half: max,
        argmax_upper_half: argmax,
        supermartingale_upper_half: max <= DRIFT_TOLERANCE,
        martingale: drift.iter().all(|d| d.abs() <= DRIFT_TOLERANCE),
        drift,
    })
}

/// Two-color table rule: `majority[i]` says whether the i-th clear-majority
/// triple maps to its majority, in the order `(0,0,1) (0,1,0) (1,0,0)
/// (1,1,0) (1,0,1) (0,1,1)`.
pub fn two_color_rule(majority: [bool; 6]) -> Rule3 {
    const TRIPLES: [[Color; 3]; 6] = [
        [0, 0, 1],
        [0, 1, 0],
        [1, 0, 0],
        [1, 1, 0],
        [1, 0, 1],
        [0, 1, 1],
    ];
    let mut t = TableRule::new(2).expect("k = 2");
    for (triple, keep) in TRIPLES.iter().zip(majority) {
        let maj = crate::rules::clear_majority(*triple).unwrap();
        let y = if keep { maj } else { 1 - maj };
        t.set(*triple, y).expect("valid entry");
    }
    Rule3::Table(t)
}

/// Three-color rule with the clear-majority property whose counters on the
/// distinct triple are `δ_0 = 1, δ_1 = 3, δ_2 = 2`.
pub fn skewed_three_color_rule() -> Rule3 {
    let mut t = TableRule::new(3).expect("k = 3");
    for (triple, y) in [
        ([0, 1, 2], 0),
        ([0, 2, 1], 2),
        ([1, 0, 2], 1),
        ([1, 2, 0], 1),
        ([2, 0, 1], 1),
        ([2, 1, 0], 2),
    ] {
        t.set(triple, y).expect("valid entry");
    }
    Rule3::Table(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftProbabilities {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

/// Exact pick probabilities of [`skewed_three_color_rule`] on
/// `gen_three_color_lb(n, s)`.
pub fn drift_8_27(n: u64, s: u64) -> Result<DriftProbabilities> {
    let c = gen_three_color_lb(n, s)?;
    let p = pick_probabilities_rule(&skewed_three_color_rule(), &c)?;
    Ok(DriftProbabilities {
        r: p[0],
        g: p[1],
        b: p[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::delta_counters;

    fn three_maj() -> Dynamics {
        Dynamics::three_majority()
    }

    #[test]
    fn compositions_are_lexicographic() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(4, 3).len(), 15);
        assert_eq!(composition_count(4, 3), 15);
    }

    #[test]
    fn small_chain_rows() {
        let chain = ExactChain::build(2, 2, &three_maj()).unwrap();
        let s = chain.state_index(&[1, 1]).unwrap();
        let row: Vec<f64> = (0..3).map(|t| chain.probability(s, t)).collect();
        assert!((row[0] - 0.25).abs() < 1e-15);
        assert!((row[1] - 0.5).abs() < 1e-15);
        assert!((row[2] - 0.25).abs() < 1e-15);
        for &a in chain.absorbing_states() {
            assert_eq!(chain.row(a), &[(a, 1.0)]);
        }
    }

    #[test]
    fn binomial_row_from_two_one() {
        let chain = ExactChain::build(3, 2, &three_maj()).unwrap();
        let s = chain.state_index(&[2, 1]).unwrap();
        let q: f64 = 20.0 / 27.0;
        let binom = [1.0, 3.0, 3.0, 1.0];
        for j in 0..=3u64 {
            let t = chain.state_index(&[j, 3 - j]).unwrap();
            let expect = binom[j as usize] * q.powi(j as i32) * (1.0 - q).powi(3 - j as i32);
            assert!((chain.probability(s, t) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn absorption_examples() {
        let chain = ExactChain::build(2, 2, &three_maj()).unwrap();
        let abs = chain.absorption_probabilities().unwrap();
        let s = chain.state_index(&[1, 1]).unwrap();
        assert!((abs[s][0] - 0.5).abs() < 1e-12 && (abs[s][1] - 0.5).abs() < 1e-12);
        let times = chain.expected_absorption_time().unwrap();
        assert!((times[s] - 2.0).abs() < 1e-12);
        for &a in chain.absorbing_states() {
            assert_eq!(times[a], 0.0);
        }

        let chain = ExactChain::build(4, 2, &three_maj()).unwrap();
        let abs = chain.absorption_probabilities().unwrap();
        let s = chain.state_index(&[3, 1]).unwrap();
        let colors = chain.absorbing_colors();
        let to_zero = abs[s][colors.iter().position(|&c| c == 0).unwrap()];
        assert!(to_zero > 0.5, "{to_zero}");
        for row in &abs {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn dense_and_iterative_solves_agree() {
        let chain = ExactChain::build(5, 3, &Dynamics::Rule(Rule3::Median)).unwrap();
        let transient: Vec<usize> = (0..chain.states.len())
            .filter(|s| !chain.states[*s].is_monochromatic())
            .collect();
        let tpos: HashMap<usize, usize> =
            transient.iter().enumerate().map(|(p, &s)| (s, p)).collect();
        let ones = vec![vec![1.0]; transient.len()];
        let iterative = chain.gauss_seidel(&transient, &tpos, &ones, 1).unwrap();
        let dense = chain.expected_absorption_time().unwrap();
        for (p, &s) in transient.iter().enumerate() {
            assert!((iterative[p][0] - dense[s]).abs() < 1e-8);
        }
    }

    #[test]
    fn one_step_examples() {
        let chain = ExactChain::build(3, 2, &three_maj()).unwrap();
        let e = chain.one_step_expectation(chain.state_index(&[2, 1]).unwrap());
        assert!((e[0] - 20.0 / 9.0).abs() < 1e-12 && (e[1] - 7.0 / 9.0).abs() < 1e-12);
        let e = chain.one_step_expectation(chain.state_index(&[3, 0]).unwrap());
        assert_eq!(e, vec![3.0, 0.0]);
        let chain = ExactChain::build(4, 2, &three_maj()).unwrap();
        let e = chain.one_step_expectation(chain.state_index(&[2, 2]).unwrap());
        assert!((e[0] - 2.0).abs() < 1e-12 && (e[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn chain_cap() {
        assert!(matches!(
            ExactChain::build_capped(50, 5, &three_maj(), 1000),
            Err(Error::ChainCap { .. })
        ));
    }

    #[test]
    fn unreachable_absorption_is_reported() {
        let mut chain = ExactChain::build(2, 2, &three_maj()).unwrap();
        let s = chain.state_index(&[1, 1]).unwrap();
        chain.rows[s] = vec![(s, 1.0)];
        assert_eq!(
            chain.absorption_probabilities(),
            Err(Error::UnreachableAbsorption(s))
        );
    }

    #[test]
    fn supermartingale_examples() {
        let fair = two_color_rule([true, true, false, true, false, true]);
        let r = verify_supermartingale(&fair, 50).unwrap();
        assert_eq!((r.delta_r, r.delta_b), (2, 2));
        assert!(r.martingale && r.supermartingale_upper_half);

        let r = verify_supermartingale(&Rule3::ThreeMajorityFirst, 50).unwrap();
        assert_eq!((r.delta_r, r.delta_b), (3, 3));
        for x in 26..50 {
            assert!(r.drift[x] > 0.0, "x={x}");
        }
        assert_eq!((r.drift[0], r.drift[50]), (0.0, 0.0));
        assert!(!r.supermartingale_upper_half);

        let one = Rule3::Table(TableRule::new(1).unwrap());
        assert!(matches!(
            verify_supermartingale(&one, 5),
            Err(Error::NotTwoColor)
        ));
    }

    #[test]
    fn skewed_rule_counters() {
        let rule = skewed_three_color_rule();
        assert_eq!(
            delta_counters(&rule, 0, 1, 2).unwrap().as_array(),
            [1, 3, 2]
        );
        assert!(
            crate::rules::has_clear_majority_property(&rule, 3)
                .unwrap()
                .0
        );
    }

    #[test]
    fn drift_examples() {
        let d = drift_8_27(9, 0).unwrap();
        assert!((d.r - 8.0 / 27.0).abs() < 1e-12);
        assert!((d.g - 10.0 / 27.0).abs() < 1e-12);
        let d = drift_8_27(900, 9).unwrap();
        assert!((d.r - 8.0 / 27.0).abs() <= 5.0 * 9.0 / 900.0);
        let d = drift_8_27(9, 3).unwrap();
        assert!((d.r + d.g + d.b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_dump() {
        let chain = ExactChain::build(2, 2, &three_maj()).unwrap();
        let text = chain.to_text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("0 [0,2] -> 0:1e0\n"));
    }
}
