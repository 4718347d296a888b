//! 3-input dynamics and the h-majority pick distribution.
//!
//! A [`Rule3`] maps the ordered triple of colors a node samples to one of those
//! colors. The built-in rules are closed-form and work for any `k`; table rules
//! store all `k³` entries and are capped at [`TABLE_K_CAP`] colors.

use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::configuration::{Color, Configuration};
use crate::error::{Error, Result};

pub type Triple = [Color; 3];

/// Largest `k` a table rule may have.
pub const TABLE_K_CAP: usize = 64;
/// Default cap on the number of colored support entries enumerated by
/// [`pick_probabilities_rule`].
pub const RULE_ENUMERATION_K_CAP: usize = 64;
/// Default cap on the number of sample multisets enumerated by
/// [`pick_probabilities_hmaj`].
pub const HMAJ_MULTISET_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule3 {
    /// Majority on a repeated color, otherwise the first sample.
    ThreeMajorityFirst,
    /// Majority on a repeated color, otherwise one of the three uniformly.
    ThreeMajorityUniformTie,
    /// Median of the three color indices.
    Median,
    Table(TableRule),
}

/// What a rule does with one ordered triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Color(Color),
    /// Uniform choice among three distinct colors.
    UniformAmong(Triple),
}

impl Outcome {
    /// Probability mass on `color`, in thirds.
    pub fn thirds(&self, color: Color) -> u32 {
        match *self {
            Outcome::Color(c) => 3 * u32::from(c == color),
            Outcome::UniformAmong(t) => t.iter().filter(|&&x| x == color).count() as u32,
        }
    }

    pub fn resolve<R: Rng + ?Sized>(&self, rng: &mut R) -> Color {
        match *self {
            Outcome::Color(c) => c,
            Outcome::UniformAmong(t) => t[rng.random_range(0..3)],
        }
    }

    /// The color, when the outcome is deterministic.
    pub fn color(&self) -> Option<Color> {
        match *self {
            Outcome::Color(c) => Some(c),
            Outcome::UniformAmong(_) => None,
        }
    }
}

/// The repeated color of a triple with a clear majority.
pub fn clear_majority(t: Triple) -> Option<Color> {
    if t[0] == t[1] || t[0] == t[2] {
        Some(t[0])
    } else if t[1] == t[2] {
        Some(t[1])
    } else {
        None
    }
}

fn median3(t: Triple) -> Color {
    let [a, b, c] = t;
    a.max(b).min(a.min(b).max(c))
}

/// Explicit `k³` table. Entry `(x1, x2, x3)` lives at `x1·k² + x2·k + x3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRule {
    k: usize,
    table: Vec<Color>,
}

impl TableRule {
    /// Table initialized to the 3-majority-first behavior.
    pub fn new(k: usize) -> Result<Self> {
        Self::from_fn(k, |t| clear_majority(t).unwrap_or(t[0]))
    }

    pub fn from_fn(k: usize, f: impl Fn(Triple) -> Color) -> Result<Self> {
        if k == 0 || k > TABLE_K_CAP {
            return Err(Error::KTooLarge {
                k,
                cap: TABLE_K_CAP,
            });
        }
        let mut table = Vec::with_capacity(k * k * k);
        for x1 in 0..k as Color {
            for x2 in 0..k as Color {
                for x3 in 0..k as Color {
                    let t = [x1, x2, x3];
                    let y = f(t);
                    if !t.contains(&y) {
                        return Err(Error::InvalidParameter(format!(
                            "rule maps {t:?} to {y}, which is not an input"
                        )));
                    }
                    table.push(y);
                }
            }
        }
        Ok(TableRule { k, table })
    }

    /// Returns the first sample on every triple.
    pub fn always_first(k: usize) -> Result<Self> {
        Self::from_fn(k, |t| t[0])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn index(&self, t: Triple) -> Result<usize> {
        for &x in &t {
            if x as usize >= self.k {
                return Err(Error::ColorOutOfRange {
                    color: x,
                    k: self.k,
                });
            }
        }
        let k = self.k;
        Ok(t[0] as usize * k * k + t[1] as usize * k + t[2] as usize)
    }

    pub fn get(&self, t: Triple) -> Result<Color> {
        Ok(self.table[self.index(t)?])
    }

    pub fn set(&mut self, t: Triple, y: Color) -> Result<()> {
        if !t.contains(&y) {
            return Err(Error::InvalidParameter(format!(
                "{y} is not one of the inputs {t:?}"
            )));
        }
        let i = self.index(t)?;
        self.table[i] = y;
        Ok(())
    }

    /// Parses the line format: a `k=<int>` header, then `x1 x2 x3 -> y` lines.
    /// Triples not listed keep the 3-majority-first behavior. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::RuleParse {
            line: 1,
            msg: "missing k=<int> header".into(),
        })?;
        let parse_err = |line: usize, msg: String| Error::RuleParse { line, msg };
        let k: usize = header
            .strip_prefix("k=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| parse_err(hline, format!("expected k=<int>, got {header:?}")))?;
        let mut rule = TableRule::new(k).map_err(|e| parse_err(hline, e.to_string()))?;
        for (line, body) in lines {
            let (lhs, rhs) = body
                .split_once("->")
                .ok_or_else(|| parse_err(line, "expected `x1 x2 x3 -> y`".into()))?;
            let xs: Vec<Color> = lhs
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(line, format!("bad color: {e}")))?;
            let t: Triple = xs
                .try_into()
                .map_err(|_| parse_err(line, "expected exactly three input colors".into()))?;
            let y: Color = rhs
                .trim()
                .parse()
                .map_err(|e| parse_err(line, format!("bad output color: {e}")))?;
            rule.set(t, y).map_err(|e| parse_err(line, e.to_string()))?;
        }
        Ok(rule)
    }

    /// Writes the header and every entry that differs from 3-majority-first.
    pub fn to_text(&self) -> String {
        let mut out = format!("k={}\n", self.k);
        let k = self.k as Color;
        for x1 in 0..k {
            for x2 in 0..k {
                for x3 in 0..k {
                    let t = [x1, x2, x3];
                    let y = self.table[self.index(t).unwrap()];
                    if y != clear_majority(t).unwrap_or(x1) {
                        let _ = writeln!(out, "{x1} {x2} {x3} -> {y}");
                    }
                }
            }
        }
        out
    }
}

impl Rule3 {
    /// Parses a built-in name: `3maj` / `3maj-uniform`, `3maj-first`, `median`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "3maj" | "3maj-uniform" | "three_majority_uniform_tie" => {
                Some(Rule3::ThreeMajorityUniformTie)
            }
            "3maj-first" | "three_majority_first" => Some(Rule3::ThreeMajorityFirst),
            "median" => Some(Rule3::Median),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Rule3::ThreeMajorityFirst => "3maj-first",
            Rule3::ThreeMajorityUniformTie => "3maj",
            Rule3::Median => "median",
            Rule3::Table(_) => "table",
        }
    }

    /// Largest number of colors the rule can be evaluated on.
    pub fn max_k(&self) -> Option<usize> {
        match self {
            Rule3::Table(t) => Some(t.k),
            _ => None,
        }
    }

    pub fn eval(&self, t: Triple) -> Result<Outcome> {
        Ok(match self {
            Rule3::ThreeMajorityFirst => Outcome::Color(clear_majority(t).unwrap_or(t[0])),
            Rule3::ThreeMajorityUniformTie => match clear_majority(t) {
                Some(c) => Outcome::Color(c),
                None => Outcome::UniformAmong(t),
            },
            Rule3::Median => Outcome::Color(median3(t)),
            Rule3::Table(table) => Outcome::Color(table.get(t)?),
        })
    }

    /// Applies the rule to one sampled triple, drawing any tie-break from `rng`.
    pub fn apply<R: Rng + ?Sized>(&self, t: Triple, rng: &mut R) -> Result<Color> {
        Ok(self.eval(t)?.resolve(rng))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        match self.max_k() {
            Some(max) if k > max => Err(Error::KTooLarge { k, cap: max }),
            _ => Ok(()),
        }
    }
}

/// How many of the six orderings of `{r, g, b}` the rule maps to each color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeltaCounters {
    pub delta_r: u8,
    pub delta_g: u8,
    pub delta_b: u8,
}

impl DeltaCounters {
    pub fn as_array(&self) -> [u8; 3] {
        [self.delta_r, self.delta_g, self.delta_b]
    }

    pub fn is_uniform(&self) -> bool {
        self.as_array() == [2, 2, 2]
    }
}

pub const PERMUTATIONS_3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

pub fn delta_counters(rule: &Rule3, r: Color, g: Color, b: Color) -> Result<DeltaCounters> {
    if r == g || g == b || r == b {
        return Err(Error::NotDistinct([r, g, b]));
    }
    let base = [r, g, b];
    let mut thirds = [0u32; 3];
    for p in PERMUTATIONS_3 {
        let o = rule.eval([base[p[0]], base[p[1]], base[p[2]]])?;
        for (slot, &c) in thirds.iter_mut().zip(&base) {
            *slot += o.thirds(c);
        }
    }
    // Each ordering contributes a whole unit; the uniform tie-break spreads
    // it as three thirds, so totals are always multiples of 3.
    debug_assert!(thirds.iter().all(|t| t % 3 == 0));
    Ok(DeltaCounters {
        delta_r: (thirds[0] / 3) as u8,
        delta_g: (thirds[1] / 3) as u8,
        delta_b: (thirds[2] / 3) as u8,
    })
}

/// Whether every clear-majority triple maps to its repeated color. The
/// counterexample is the lexicographically first violating triple.
pub fn has_clear_majority_property(rule: &Rule3, k: usize) -> Result<(bool, Option<Triple>)> {
    rule.check_k(k)?;
    let k = k as Color;
    for x1 in 0..k {
        for x2 in 0..k {
            for x3 in 0..k {
                let t = [x1, x2, x3];
                if let Some(maj) = clear_majority(t) {
                    if rule.eval(t)? != Outcome::Color(maj) {
                        return Ok((false, Some(t)));
                    }
                }
            }
        }
    }
    Ok((true, None))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UniformCounterexample {
    pub colors: Triple,
    pub deltas: DeltaCounters,
}

/// Whether every distinct triple `r < g < b` has counters `(2, 2, 2)`.
/// Vacuously true for `k < 3`.
pub fn has_uniform_property(
    rule: &Rule3,
    k: usize,
) -> Result<(bool, Option<UniformCounterexample>)> {
    rule.check_k(k)?;
    let k = k as Color;
    for r in 0..k {
        for g in r + 1..k {
            for b in g + 1..k {
                let deltas = delta_counters(rule, r, g, b)?;
                if !deltas.is_uniform() {
                    return Ok((
                        false,
                        Some(UniformCounterexample {
                            colors: [r, g, b],
                            deltas,
                        }),
                    ));
                }
            }
        }
    }
    Ok((true, None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub rule: String,
    pub k: usize,
    pub clear_majority: bool,
    pub clear_majority_counterexample: Option<Triple>,
    pub uniform: bool,
    pub uniform_counterexample: Option<UniformCounterexample>,
    pub in_m3: bool,
}

pub fn classify(rule: &Rule3, k: usize) -> Result<Classification> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "classification needs k >= 2, got {k}"
        )));
    }
    let (clear_majority, cm_cex) = has_clear_majority_property(rule, k)?;
    let (uniform, u_cex) = has_uniform_property(rule, k)?;
    Ok(Classification {
        rule: rule.name().to_string(),
        k,
        clear_majority,
        clear_majority_counterexample: cm_cex,
        uniform,
        uniform_counterexample: u_cex,
        in_m3: clear_majority && uniform,
    })
}

/// Exact per-node pick distribution of an arbitrary 3-input rule, by case
/// split over all-equal, two-equal and all-distinct triples of the colors
/// that are present.
pub fn pick_probabilities_rule(rule: &Rule3, c: &Configuration) -> Result<Vec<f64>> {
    pick_probabilities_rule_capped(rule, c, RULE_ENUMERATION_K_CAP)
}

pub fn pick_probabilities_rule_capped(
    rule: &Rule3,
    c: &Configuration,
    k_cap: usize,
) -> Result<Vec<f64>> {
    rule.check_k(c.k())?;
    let n = c.n() as f64;
    let support: Vec<(Color, f64)> = c
        .counts()
        .iter()
        .enumerate()
        .filter(|&(_, &x)| x > 0)
        .map(|(j, &x)| (j as Color, x as f64 / n))
        .collect();
    if support.len() > k_cap {
        return Err(Error::KTooLarge {
            k: support.len(),
            cap: k_cap,
        });
    }
    let mut p = vec![0.0; c.k()];
    let mut add = |o: Outcome, w: f64| match o {
        Outcome::Color(y) => p[y as usize] += w,
        Outcome::UniformAmong(t) => {
            for y in t {
                p[y as usize] += w / 3.0;
            }
        }
    };
    for &(x, qx) in &support {
        add(Outcome::Color(x), qx * qx * qx);
    }
    for &(x, qx) in &support {
        for &(y, qy) in &support {
            if x == y {
                continue;
            }
            let w = qx * qx * qy;
            for t in [[x, x, y], [x, y, x], [y, x, x]] {
                add(rule.eval(t)?, w);
            }
        }
    }
    for (i, &(x, qx)) in support.iter().enumerate() {
        for (j, &(y, qy)) in support.iter().enumerate().skip(i + 1) {
            for &(z, qz) in &support[j + 1..] {
                let w = qx * qy * qz;
                let base = [x, y, z];
                for perm in PERMUTATIONS_3 {
                    add(rule.eval([base[perm[0]], base[perm[1]], base[perm[2]]])?, w);
                }
            }
        }
    }
    Ok(p)
}

/// `C(h + s - 1, s - 1)`, saturating.
pub fn multiset_count(h: u32, s: usize) -> u128 {
    if s == 0 {
        return 0;
    }
    let (top, r) = (h as u128 + s as u128 - 1, (s as u128 - 1).min(h as u128));
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exact per-node pick distribution of h-majority (plurality of `h` samples,
/// ties split uniformly), by enumerating sample multisets with multinomial
/// weights. Only present colors are enumerated.
pub fn pick_probabilities_hmaj(h: u32, c: &Configuration) -> Result<Vec<f64>> {
    pick_probabilities_hmaj_capped(h, c, HMAJ_MULTISET_CAP)
}

pub fn pick_probabilities_hmaj_capped(h: u32, c: &Configuration, cap: u128) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::InvalidH);
    }
    let n = c.n() as f64;
    let support: Vec<usize> = (0..c.k()).filter(|&j| c.counts()[j] > 0).collect();
    let count = multiset_count(h, support.len());
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    let ln_q: Vec<f64> = support
        .iter()
        .map(|&j| (c.counts()[j] as f64 / n).ln())
        .collect();
    let ln_fact = ln_factorials(h as usize);
    let mut p = vec![0.0; c.k()];
    let mut draw = vec![0u32; support.len()];
    let mut walker = MultisetWalk {
        ln_q: &ln_q,
        ln_fact: &ln_fact,
        support: &support,
        draw: &mut draw,
        p: &mut p,
    };
    walker.walk(0, h, ln_fact[h as usize]);
    Ok(p)
}

struct MultisetWalk<'a> {
    ln_q: &'a [f64],
    ln_fact: &'a [f64],
    support: &'a [usize],
    draw: &'a mut [u32],
    p: &'a mut [f64],
}

impl MultisetWalk<'_> {
    fn walk(&mut self, i: usize, left: u32, ln_w: f64) {
        let last = self.draw.len() - 1;
        if i == last {
            self.draw[i] = left;
            let lw = ln_w - self.ln_fact[left as usize] + left as f64 * self.ln_q[i];
            self.settle(lw.exp());
            return;
        }
        for x in 0..=left {
            self.draw[i] = x;
            let lw = ln_w - self.ln_fact[x as usize] + x as f64 * self.ln_q[i];
            self.walk(i + 1, left - x, lw);
        }
    }

    fn settle(&mut self, w: f64) {
        let top = *self.draw.iter().max().unwrap();
        let ties = self.draw.iter().filter(|&&x| x == top).count() as f64;
        for (slot, &x) in self.draw.iter().enumerate() {
            if x == top {
                self.p[self.support[slot]] += w / ties;
            }
        }
    }
}

/// `ln(i!)` for `i` in `0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}
