//! Experiment drivers behind the CLI. Each driver returns raw per-trial
//! records (for CSV) and a JSON-serializable summary with pass/fail checks.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analytics::pick_probabilities_3maj;
use crate::configuration::{BiasStats, Color, Configuration};
use crate::error::{Error, Result};
use crate::rules::Rule3;
use crate::sim::{
    default_max_rounds, gen_balanced_biased, gen_power_biased, gen_three_color_lb, rng_for,
    run_indexed, run_trial, step, sub_seed, AdversaryPolicy, Dynamics, Engine, StopCondition,
    TrialResult, TrialSpec,
};

/// Accepted band for `median(k=32) / median(k=4)` in the scaling sweep.
pub const SCALING_RATIO_RANGE: (f64, f64) = (4.0, 16.0);
pub const SCALING_MAJORITY_RATE_MIN: f64 = 0.98;
/// Binary-case median consensus time ceiling, checked for `n <= 10^5`.
pub const BINARY_MEDIAN_ROUNDS_MAX: f64 = 40.0;
pub const BINARY_CHECK_N_MAX: u64 = 100_000;
/// Lower bound on `median(k=16) / median(k=4)` in the growth sweep.
pub const LB_GROWTH_RATIO_MIN: f64 = 2.0;
pub const LB_COMPLETION_RATE_MIN: f64 = 0.9;
/// Constant in `median τ(h) >= floor · k / h²`.
pub const H_SPEEDUP_FLOOR: f64 = 0.1;
pub const MEDIAN_PLURALITY_RATE_MAX: f64 = 0.25;
pub const MEDIAN_MEDIAN_RATE_MIN: f64 = 0.5;
pub const MAJORITY_CONTRAST_RATE_MIN: f64 = 0.75;
pub const ADVERSARY_MAJORITY_RATE_MIN: f64 = 0.95;

/// `1/(16e)`.
pub fn bias_decrease_floor() -> f64 {
    1.0 / (16.0 * std::f64::consts::E)
}

/// One trial of one sweep point. Absent dimensions serialize as empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub n: u64,
    pub k: usize,
    pub h: Option<u32>,
    pub s: Option<u64>,
    pub eps: Option<f64>,
    pub trial: u64,
    pub seed: u64,
    pub rounds: u64,
    pub winner: Option<Color>,
    pub converged: bool,
    pub reached_majority: bool,
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn csv_string(records: &[RunRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub sweep: Value,
    pub median_rounds: Option<f64>,
    pub majority_rate: Option<f64>,
    /// Wilson 95% interval for `majority_rate`.
    pub ci95: Option<[f64; 2]>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub params: Value,
    pub points: Vec<Point>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

/// Settings shared by every trial-running experiment.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub trials: u64,
    pub seed: u64,
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
    pub engine: Engine,
    /// `None` means [`default_max_rounds`].
    pub max_rounds: Option<u64>,
    pub adversary: AdversaryPolicy,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            trials: 50,
            seed: 0,
            threads: None,
            engine: Engine::Auto,
            max_rounds: None,
            adversary: AdversaryPolicy::none(),
        }
    }
}

impl RunOptions {
    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        Ok(())
    }

    fn max_rounds_for(&self, n: u64, k: usize) -> u64 {
        self.max_rounds.unwrap_or_else(|| default_max_rounds(n, k))
    }

    fn trial_spec(&self, dynamics: Dynamics, n: u64, k: usize) -> TrialSpec {
        TrialSpec::new(dynamics, self.max_rounds_for(n, k))
            .with_engine(self.engine)
            .with_adversary(self.adversary.clone())
    }

    fn params(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("trials".into(), json!(self.trials));
        m.insert("seed".into(), json!(self.seed));
        m.insert(
            "engine".into(),
            json!(format!("{:?}", self.engine).to_lowercase()),
        );
        m.insert("adversary".into(), json!(self.adversary.to_string()));
        if let Some(r) = self.max_rounds {
            m.insert("max_rounds".into(), json!(r));
        }
        m
    }
}

/// Record labels for one sweep point.
#[derive(Debug, Clone, Default)]
struct Labels {
    h: Option<u32>,
    s: Option<u64>,
    eps: Option<f64>,
}

/// Seed of trial `trial` at sweep point `point`.
pub fn trial_seed(master: u64, point: u64, trial: u64) -> u64 {
    sub_seed(sub_seed(master, point), trial)
}

fn run_point(
    experiment: &str,
    point: u64,
    c0: &Configuration,
    spec: &TrialSpec,
    labels: &Labels,
    opts: &RunOptions,
) -> Result<(Vec<RunRecord>, Vec<TrialResult>)> {
    let results = run_indexed(opts.trials as usize, opts.threads, |t| {
        let seed = trial_seed(opts.seed, point, t as u64);
        run_trial(c0, spec, &mut rng_for(seed)).map(|r| (seed, r))
    })?;
    let mut records = Vec::with_capacity(results.len());
    let mut out = Vec::with_capacity(results.len());
    for (t, r) in results.into_iter().enumerate() {
        let (seed, r) = r?;
        records.push(RunRecord {
            experiment: experiment.to_string(),
            n: c0.n(),
            k: c0.k(),
            h: labels.h,
            s: labels.s,
            eps: labels.eps,
            trial: t as u64,
            seed,
            rounds: r.rounds,
            winner: r.winner,
            converged: r.converged,
            reached_majority: r.reached_majority,
        });
        out.push(r);
    }
    Ok((records, out))
}

pub fn median(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid] as f64
    } else {
        (v[mid - 1] as f64 + v[mid] as f64) / 2.0
    })
}

/// Wilson score interval at 95%.
pub fn wilson95(successes: u64, trials: u64) -> [f64; 2] {
    if trials == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    [lo, hi]
}

fn rate(hits: u64, trials: u64) -> f64 {
    hits as f64 / trials as f64
}

/// Majority fields are `None` when the start has no unique plurality.
fn summarize(sweep: Value, c0: &Configuration, results: &[TrialResult]) -> Point {
    let trials = results.len() as u64;
    let rounds: Vec<u64> = results.iter().map(|r| r.rounds).collect();
    let majority = results.iter().filter(|r| r.reached_majority).count() as u64;
    let converged = results.iter().filter(|r| r.converged).count() as u64;
    let mut extra = Map::new();
    extra.insert("trials".into(), json!(trials));
    extra.insert("converged_rate".into(), json!(rate(converged, trials)));
    extra.insert(
        "mean_rounds".into(),
        json!(rounds.iter().sum::<u64>() as f64 / trials as f64),
    );
    let has_majority = c0.is_s_biased(0).is_some();
    Point {
        sweep,
        median_rounds: median(&rounds),
        majority_rate: has_majority.then(|| rate(majority, trials)),
        ci95: has_majority.then(|| wilson95(majority, trials)),
        extra,
    }
}

fn winner_rate(results: &[TrialResult], color: Color) -> f64 {
    let hits = results.iter().filter(|r| r.winner == Some(color)).count() as u64;
    rate(hits, results.len() as u64)
}

fn nonempty<T>(list: &[T], what: &str) -> Result<()> {
    if list.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} list is empty")));
    }
    Ok(())
}

/// `median_rounds` of the point whose sweep field `key` equals `value`.
fn median_at(points: &[Point], key: &str, value: u64) -> Option<f64> {
    points
        .iter()
        .find(|p| p.sweep.get(key).and_then(Value::as_u64) == Some(value))
        .and_then(|p| p.median_rounds)
}

fn monotone_check(name: &str, key: &str, points: &[Point], increasing: bool) -> Check {
    let medians: Vec<(u64, f64)> = points
        .iter()
        .filter_map(|p| Some((p.sweep.get(key)?.as_u64()?, p.median_rounds?)))
        .collect();
    let mut sorted = medians.clone();
    sorted.sort_by_key(|&(x, _)| x);
    let ok = sorted.windows(2).all(|w| {
        if increasing {
            w[1].1 >= w[0].1
        } else {
            w[1].1 <= w[0].1
        }
    });
    Check::new(name, ok, format!("{key} -> median rounds: {sorted:?}"))
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone)]
pub struct SimulateParams {
    pub n: u64,
    pub k: usize,
    pub s: u64,
    /// Explicit start; overrides `n`, `k`, `s` when given.
    pub counts: Option<Vec<u64>>,
    pub dynamics: Dynamics,
}

/// Plain trials from `gen_balanced_biased(n, k, s)` or an explicit start.
pub fn simulate(p: &SimulateParams, opts: &RunOptions) -> Result<ExperimentOutput> {
    opts.validate()?;
    let (c0, s_label) = match &p.counts {
        Some(counts) => (Configuration::new(counts.clone())?, None),
        None => (gen_balanced_biased(p.n, p.k, p.s)?, Some(p.s)),
    };
    let spec = opts.trial_spec(p.dynamics.clone(), c0.n(), c0.k());
    let labels = Labels {
        h: match p.dynamics {
            Dynamics::HMajority(h) => Some(h),
            Dynamics::Rule(_) => None,
        },
        s: s_label,
        eps: None,
    };
    let (records, results) = run_point("simulate", 0, &c0, &spec, &labels, opts)?;
    let point = summarize(
        json!({"n": c0.n(), "k": c0.k(), "s": s_label}),
        &c0,
        &results,
    );
    let mut params = opts.params();
    params.insert("dynamics".into(), json!(p.dynamics.to_string()));
    params.insert("initial".into(), json!(c0.counts()));
    Ok(ExperimentOutput {
        records,
        summary: Summary {
            experiment: "simulate".into(),
            params: Value::Object(params),
            points: vec![point],
            checks: Vec::new(),
            warnings: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------- scaling-k

/// `⌈22 · sqrt(min(2k, cbrt(n / ln n)) · n · ln n)⌉`.
pub fn prescribed_bias(n: u64, k: usize) -> u64 {
    let nf = n as f64;
    let ln = nf.ln();
    let lambda = (2.0 * k as f64).min((nf / ln).cbrt());
    (22.0 * (lambda * nf * ln).sqrt()).ceil() as u64
}

/// Largest integer strictly below `n / k`.
pub fn bias_cap(n: u64, k: usize) -> u64 {
    let k = k as u64;
    if n.is_multiple_of(k) {
        (n / k).saturating_sub(1)
    } else {
        n / k
    }
}

/// The prescribed bias, lowered to [`bias_cap`] when it does not fit; the flag
/// reports whether it was lowered.
pub fn scaling_bias(n: u64, k: usize) -> (u64, bool) {
    let s = prescribed_bias(n, k);
    let cap = bias_cap(n, k);
    if s > cap {
        (cap, true)
    } else {
        (s, false)
    }
}

#[derive(Debug, Clone)]
pub struct ScalingParams {
    pub n: u64,
    pub k_list: Vec<usize>,
    pub dynamics: Dynamics,
}

pub fn scaling_k(p: &ScalingParams, opts: &RunOptions) -> Result<ExperimentOutput> {
    opts.validate()?;
    nonempty(&p.k_list, "k")?;
    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (i, &k) in p.k_list.iter().enumerate() {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k={k} must be at least 2")));
        }
        let prescribed = prescribed_bias(p.n, k);
        let (s, capped) = scaling_bias(p.n, k);
        if s == 0 {
            warnings.push(format!("k={k}: no bias below n/k fits, skipped"));
            continue;
        }
        if capped {
            warnings.push(format!(
                "k={k}: prescribed bias {prescribed} is not below n/k, capped to {s}"
            ));
        }
        let c0 = gen_balanced_biased(p.n, k, s)?;
        let spec = opts.trial_spec(p.dynamics.clone(), p.n, k);
        let labels = Labels {
            s: Some(s),
            ..Labels::default()
        };
        let (recs, results) = run_point("scaling-k", i as u64, &c0, &spec, &labels, opts)?;
        records.extend(recs);
        let mut point = summarize(json!({"k": k}), &c0, &results);
        point.extra.insert("s".into(), json!(s));
        point.extra.insert("s_prescribed".into(), json!(prescribed));
        point.extra.insert("capped".into(), json!(capped));
        points.push(point);
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("every k is infeasible".into()));
    }

    let mut checks = Vec::new();
    for pt in &points {
        let k = pt.sweep["k"].as_u64().unwrap_or(0);
        let r = pt.majority_rate.unwrap_or(0.0);
        checks.push(Check::new(
            format!("majority_rate[k={k}]"),
            r >= SCALING_MAJORITY_RATE_MIN,
            format!("{r} >= {SCALING_MAJORITY_RATE_MIN}"),
        ));
    }
    checks.push(monotone_check("median_monotone_in_k", "k", &points, true));
    if let (Some(a), Some(b)) = (median_at(&points, "k", 4), median_at(&points, "k", 32)) {
        let ratio = b / a;
        let (lo, hi) = SCALING_RATIO_RANGE;
        checks.push(Check::new(
            "ratio_k32_k4",
            ratio >= lo && ratio <= hi,
            format!("{b}/{a} = {ratio:.3} in [{lo}, {hi}]"),
        ));
    }
    if p.n <= BINARY_CHECK_N_MAX {
        if let Some(m) = median_at(&points, "k", 2) {
            checks.push(Check::new(
                "binary_median_rounds",
                m <= BINARY_MEDIAN_ROUNDS_MAX,
                format!("{m} <= {BINARY_MEDIAN_ROUNDS_MAX}"),
            ));
        }
    }

    let mut params = opts.params();
    params.insert("n".into(), json!(p.n));
    params.insert("k_list".into(), json!(p.k_list));
    params.insert("dynamics".into(), json!(p.dynamics.to_string()));
    Ok(ExperimentOutput {
        records,
        summary: Summary {
            experiment: "scaling-k".into(),
            params: Value::Object(params),
            points,
            checks,
            warnings,
        },
    })
}

// ---------------------------------------------------------------- lb-growth

#[derive(Debug, Clone)]
pub struct LbGrowthParams {
    pub n: u64,
    pub k_list: Vec<usize>,
    pub eps: f64,
}

/// `(n / ln n)^{1/4}`, the largest `k` the growth bound is stated for.
pub fn lb_growth_k_limit(n: u64) -> f64 {
    let nf = n as f64;
    (nf / nf.ln()).powf(0.25)
}

/// Rounds for the top count to climb from `gen_power_biased` to `2n/k`.
pub fn lb_growth(p: &LbGrowthParams, opts: &RunOptions) -> Result<ExperimentOutput> {
    opts.validate()?;
    nonempty(&p.k_list, "k")?;
    let limit = lb_growth_k_limit(p.n);
    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (i, &k) in p.k_list.iter().enumerate() {
        if k as f64 > limit {
            warnings.push(format!(
                "k={k} exceeds (n/ln n)^(1/4) = {limit:.2}; running anyway"
            ));
        }
        let c0 = gen_power_biased(p.n, k, p.eps)?;
        let target = (2 * p.n).div_ceil(k as u64);
        let spec = opts
            .trial_spec(Dynamics::three_majority(), p.n, k)
            .with_stop(StopCondition::MaxCountAtLeast(target));
        let labels = Labels {
            eps: Some(p.eps),
            ..Labels::default()
        };
        let (recs, results) = run_point("lb-growth", i as u64, &c0, &spec, &labels, opts)?;
        records.extend(recs);
        let mut point = summarize(json!({"k": k}), &c0, &results);
        point.extra.insert("start".into(), json!(c0.max_count()));
        point.extra.insert("target".into(), json!(target));
        points.push(point);
    }

    let mut checks = vec![monotone_check("median_monotone_in_k", "k", &points, true)];
    for pt in &points {
        let k = pt.sweep["k"].as_u64().unwrap_or(0);
        let done = pt.extra["converged_rate"].as_f64().unwrap_or(0.0);
        checks.push(Check::new(
            format!("completion_rate[k={k}]"),
            done >= LB_COMPLETION_RATE_MIN,
            format!("{done} >= {LB_COMPLETION_RATE_MIN}"),
        ));
    }
    if let (Some(a), Some(b)) = (median_at(&points, "k", 4), median_at(&points, "k", 16)) {
        let ratio = b / a;
        checks.push(Check::new(
            "ratio_k16_k4",
            ratio >= LB_GROWTH_RATIO_MIN,
            format!("{b}/{a} = {ratio:.3} >= {LB_GROWTH_RATIO_MIN}"),
        ));
    }

    let mut params = opts.params();
    params.insert("n".into(), json!(p.n));
    params.insert("k_list".into(), json!(p.k_list));
    params.insert("eps".into(), json!(p.eps));
    Ok(ExperimentOutput {
        records,
        summary: Summary {
            experiment: "lb-growth".into(),
            params: Value::Object(params),
            points,
            checks,
            warnings,
        },
    })
}

// ---------------------------------------------------------------- h-speedup

#[derive(Debug, Clone)]
pub struct HSpeedupParams {
    pub n: u64,
    pub k: usize,
    pub h_list: Vec<u32>,
    /// Initial bias for `gen_balanced_biased`; the top count must stay within
    /// `(3/2)(n/k)`.
    pub s: u64,
}

pub fn h_speedup(p: &HSpeedupParams, opts: &RunOptions) -> Result<ExperimentOutput> {
    opts.validate()?;
    nonempty(&p.h_list, "h")?;
    if p.h_list.contains(&0) {
        return Err(Error::InvalidH);
    }
    let c0 = gen_balanced_biased(p.n, p.k, p.s)?;
    if 2 * c0.max_count() * p.k as u64 > 3 * p.n {
        return Err(Error::InvalidParameter(format!(
            "top count {} exceeds (3/2)(n/k)",
            c0.max_count()
        )));
    }
    let mut records = Vec::new();
    let mut points = Vec::new();
    for (i, &h) in p.h_list.iter().enumerate() {
        let spec = opts.trial_spec(Dynamics::HMajority(h), p.n, p.k);
        let labels = Labels {
            h: Some(h),
            s: Some(p.s),
            eps: None,
        };
        let (recs, results) = run_point("h-speedup", i as u64, &c0, &spec, &labels, opts)?;
        records.extend(recs);
        let mut point = summarize(json!({"h": h}), &c0, &results);
        point.extra.insert(
            "k_over_h2".into(),
            json!(p.k as f64 / (h as f64 * h as f64)),
        );
        points.push(point);
    }

    let mut checks = vec![monotone_check(
        "median_nonincreasing_in_h",
        "h",
        &points,
        false,
    )];
    for pt in &points {
        let h = pt.sweep["h"].as_u64().unwrap_or(1);
        let floor = H_SPEEDUP_FLOOR * p.k as f64 / (h * h) as f64;
        let m = pt.median_rounds.unwrap_or(0.0);
        checks.push(Check::new(
            format!("floor[h={h}]"),
            m >= floor,
            format!("{m} >= {floor:.4}"),
        ));
    }
    // Least-squares slope of median τ against k/h² through the origin.
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), pt| {
        let x = pt.extra["k_over_h2"].as_f64().unwrap_or(0.0);
        let y = pt.median_rounds.unwrap_or(0.0);
        (sxy + x * y, sxx + x * x)
    });
    let mut params = opts.params();
    params.insert("n".into(), json!(p.n));
    params.insert("k".into(), json!(p.k));
    params.insert("h_list".into(), json!(p.h_list));
    params.insert("s".into(), json!(p.s));
    params.insert(
        "fit_slope_tau_vs_k_over_h2".into(),
        json!(if sxx > 0.0 { sxy / sxx } else { 0.0 }),
    );
    Ok(ExperimentOutput {
        records,
        summary: Summary {
            experiment: "h-speedup".into(),
            params: Value::Object(params),
            points,
            checks,
            warnings: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------- bias-decrease

#[derive(Debug, Clone)]
pub struct BiasDecreaseParams {
    pub n: u64,
    pub k: usize,
    /// `None` means `⌊sqrt(k n) / 36⌋`.
    pub s: Option<u64>,
}

pub fn default_decrease_bias(n: u64, k: usize) -> u64 {
    ((k as f64 * n as f64).sqrt() / 36.0).floor() as u64
}

/// One 3-majority round per trial from `gen_balanced_biased(n, k, s)`.
///
/// The fixed competitor `j` is the last color, a runner-up under the
/// generator's remainder placement. Records carry `rounds = 1`, the plurality
/// after the round as `winner`, and `reached_majority` when that plurality is
/// still the initial majority.
pub fn bias_decrease(p: &BiasDecreaseParams, opts: &RunOptions) -> Result<ExperimentOutput> {
    opts.validate()?;
    if p.k < 3 {
        return Err(Error::InvalidParameter(format!(
            "k={} must be at least 3",
            p.k
        )));
    }
    let s = p.s.unwrap_or_else(|| default_decrease_bias(p.n, p.k));
    if s == 0 {
        return Err(Error::InvalidParameter("bias s rounds to 0".into()));
    }
    let c0 = gen_balanced_biased(p.n, p.k, s)?;
    let m = 0usize;
    let j = p.k - 1;
    let probs = pick_probabilities_3maj(&c0);
    let mu_m = p.n as f64 * probs[m];
    let dynamics = Dynamics::three_majority();
    let rows = run_indexed(opts.trials as usize, opts.threads, |t| {
        let seed = trial_seed(opts.seed, 0, t as u64);
        let next = step(&c0, &dynamics, opts.engine, &mut rng_for(seed))?;
        Ok::<_, Error>((seed, next))
    })?;

    let (mut fixed, mut any, mut below_mean) = (0u64, 0u64, 0u64);
    let mut records = Vec::with_capacity(rows.len());
    for (t, row) in rows.into_iter().enumerate() {
        let (seed, next) = row?;
        let cm = next.count(m as Color) as i128;
        let gap = |x: usize| cm - next.counts()[x] as i128;
        fixed += u64::from(gap(j) < s as i128);
        any += u64::from((1..p.k).any(|x| gap(x) < s as i128));
        below_mean += u64::from((cm as f64) <= mu_m);
        records.push(RunRecord {
            experiment: "bias-decrease".into(),
            n: p.n,
            k: p.k,
            h: None,
            s: Some(s),
            eps: None,
            trial: t as u64,
            seed,
            rounds: 1,
            winner: Some(next.plurality()),
            converged: next.is_monochromatic(),
            reached_majority: next.plurality() == m as Color,
        });
    }
    let trials = opts.trials;
    let fixed_rate = rate(fixed, trials);
    let any_rate = rate(any, trials);
    let sigma = (fixed_rate * (1.0 - fixed_rate) / trials as f64).sqrt();
    let floor = bias_decrease_floor();
    let below_rate = rate(below_mean, trials);

    let mut extra = Map::new();
    extra.insert("fixed_j".into(), json!(j));
    extra.insert("fixed_j_rate".into(), json!(fixed_rate));
    extra.insert("fixed_j_ci95".into(), json!(wilson95(fixed, trials)));
    extra.insert("any_j_rate".into(), json!(any_rate));
    extra.insert("sigma".into(), json!(sigma));
    extra.insert("below_mean_rate".into(), json!(below_rate));
    extra.insert("initial_bias".into(), json!(BiasStats::of(&c0).s));
    let majority = records.iter().filter(|r| r.reached_majority).count() as u64;
    let point = Point {
        sweep: json!({"n": p.n, "k": p.k, "s": s}),
        median_rounds: Some(1.0),
        majority_rate: Some(rate(majority, trials)),
        ci95: Some(wilson95(majority, trials)),
        extra,
    };
    let checks = vec![
        Check::new(
            "fixed_j_floor",
            fixed_rate >= floor - 3.0 * sigma,
            format!("{fixed_rate} >= {floor:.5} - 3*{sigma:.5}"),
        ),
        Check::new(
            "any_j_contains_fixed_j",
            any_rate >= fixed_rate,
            format!("{any_rate} >= {fixed_rate}"),
        ),
        Check::new(
            "below_mean_quarter",
            below_rate >= 0.25 - 0.05,
            format!("P(C'_m <= mu_m) = {below_rate} >= 0.20"),
        ),
    ];
    let mut params = opts.params();
    params.insert("n".into(), json!(p.n));
    params.insert("k".into(), json!(p.k));
    params.insert("s".into(), json!(s));
    Ok(ExperimentOutput {
        records,
        summary: Summary {
            experiment: "bias-decrease".into(),
            params: Value::Object(params),
            points: vec![point],
            checks,
            warnings: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------- median-failure

#[derive(Debug, Clone)]
pub struct MedianFailureParams {
    pub n: u64,
    /// Gap between the plurality color 2 and the median color 1; `None` means
    /// `n / 50`.
    pub s: Option<u64>,
}

/// `(n - 2c₁ - s, c₁, c₁ + s)` with `c₁ = ⌊0.34 n⌋`: color 2 is the
/// plurality, color 1 holds the median node.
pub fn median_failure_start(n: u64, s: u64) -> Result<Configuration> {
    let c1 = n * 34 / 100;
    let c2 = c1 + s;
    if c1 + c2 > n {
        return Err(Error::InvalidParameter(format!(
            "s={s} too large for n={n}"
        )));
    }
    let c0 = n - c1 - c2;
    if c0 >= c1 || 2 * c0 >= n || 2 * (c0 + c1) <= n {
        return Err(Error::InvalidParameter(format!(
            "counts [{c0},{c1},{c2}] do not put the median on color 1"
        )));
    }
    Configuration::new(vec![c0, c1, c2])
}

pub fn median_failure(p: &MedianFailureParams, opts: &RunOptions) -> Result<ExperimentOutput> {
    opts.validate()?;
    let s = p.s.unwrap_or(p.n / 50);
    let c0 = median_failure_start(p.n, s)?;
    let labels = Labels {
        s: Some(s),
        ..Labels::default()
    };
    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut rates = Vec::new();
    for (i, rule) in [Rule3::Median, Rule3::ThreeMajorityUniformTie]
        .into_iter()
        .enumerate()
    {
        let name = format!("median-failure/{}", rule.name());
        let spec = opts.trial_spec(Dynamics::Rule(rule.clone()), p.n, 3);
        let (recs, results) = run_point(&name, i as u64, &c0, &spec, &labels, opts)?;
        records.extend(recs);
        let mut point = summarize(json!({"dynamics": rule.name()}), &c0, &results);
        let (plur, med) = (winner_rate(&results, 2), winner_rate(&results, 1));
        point.extra.insert("plurality_rate".into(), json!(plur));
        point.extra.insert("median_color_rate".into(), json!(med));
        points.push(point);
        rates.push((plur, med));
    }
    let checks = vec![
        Check::new(
            "median_misses_plurality",
            rates[0].0 < MEDIAN_PLURALITY_RATE_MAX,
            format!("{} < {MEDIAN_PLURALITY_RATE_MAX}", rates[0].0),
        ),
        Check::new(
            "median_picks_median_color",
            rates[0].1 > MEDIAN_MEDIAN_RATE_MIN,
            format!("{} > {MEDIAN_MEDIAN_RATE_MIN}", rates[0].1),
        ),
        Check::new(
            "majority_picks_plurality",
            rates[1].0 >= MAJORITY_CONTRAST_RATE_MIN,
            format!("{} >= {MAJORITY_CONTRAST_RATE_MIN}", rates[1].0),
        ),
    ];
    let mut params = opts.params();
    params.insert("n".into(), json!(p.n));
    params.insert("s".into(), json!(s));
    params.insert("initial".into(), json!(c0.counts()));
    Ok(ExperimentOutput {
        records,
        summary: Summary {
            experiment: "median-failure".into(),
            params: Value::Object(params),
            points,
            checks,
            warnings: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------- skewed drift

/// `⌈sqrt(n ln n)⌉`.
pub fn skewed_drift_bias(n: u64) -> u64 {
    let nf = n as f64;
    (nf * nf.ln()).sqrt().ceil() as u64
}

/// Simulates the δ = (1,3,2) rule from `gen_three_color_lb(n, s)` and reports
/// how often the middle color 1 wins.
pub fn skewed_drift(n: u64, s: u64, opts: &RunOptions) -> Result<ExperimentOutput> {
    opts.validate()?;
    let c0 = gen_three_color_lb(n, s)?;
    let rule = crate::oracle::skewed_three_color_rule();
    let spec = opts.trial_spec(Dynamics::Rule(rule), n, 3);
    let labels = Labels {
        s: Some(s),
        ..Labels::default()
    };
    let (records, results) = run_point("skewed-drift", 0, &c0, &spec, &labels, opts)?;
    let mut point = summarize(json!({"n": n, "s": s}), &c0, &results);
    let g = winner_rate(&results, 1);
    point.extra.insert("middle_color_rate".into(), json!(g));
    let mut params = opts.params();
    params.insert("n".into(), json!(n));
    params.insert("s".into(), json!(s));
    Ok(ExperimentOutput {
        records,
        summary: Summary {
            experiment: "skewed-drift".into(),
            params: Value::Object(params),
            points: vec![point],
            checks: vec![Check::new(
                "middle_color_wins",
                g >= 0.9,
                format!("{g} >= 0.9"),
            )],
            warnings: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------- expected

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedRow {
    pub color: Color,
    pub count: u64,
    pub p: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedTable {
    pub dynamics: String,
    pub rows: Vec<ExpectedRow>,
    pub bias: BiasStats,
}

pub fn expected(c: &Configuration, dynamics: &Dynamics) -> Result<ExpectedTable> {
    let p = dynamics.exact_pick_probabilities(c)?;
    let n = c.n() as f64;
    Ok(ExpectedTable {
        dynamics: dynamics.to_string(),
        rows: c
            .counts()
            .iter()
            .zip(&p)
            .enumerate()
            .map(|(j, (&count, &pj))| ExpectedRow {
                color: j as Color,
                count,
                p: pj,
                mu: n * pj,
            })
            .collect(),
        bias: BiasStats::of(c),
    })
}

impl std::fmt::Display for ExpectedTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:>6} {:>12} {:>10} {:>12}",
            "color", "c_j", "p_j", "mu_j"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>6} {:>12} {:>10.6} {:>12.6}",
                r.color, r.count, r.p, r.mu
            )?;
        }
        let b = &self.bias;
        write!(
            f,
            "m={} M={:?} s={} alpha={:.6} gamma={:.6}",
            b.m, b.majority_set, b.s, b.alpha, b.gamma
        )
    }
}

// ---------------------------------------------------------------- plotting

/// A matplotlib script that plots median rounds per sweep point from `csv`.
pub fn plot_script(csv_path: &str) -> String {
    format!(
        r#"import csv
import statistics
from collections import defaultdict

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open({csv_path:?})))
groups = defaultdict(list)
for r in rows:
    key = (r["experiment"], r["k"], r["h"], r["s"], r["eps"])
    groups[key].append(int(r["rounds"]))
labels = [" ".join(f"{{n}}={{v}}" for n, v in zip(("exp", "k", "h", "s", "eps"), key) if v)
          for key in groups]
medians = [statistics.median(v) for v in groups.values()]
plt.figure(figsize=(8, 4))
plt.bar(range(len(medians)), medians)
plt.xticks(range(len(medians)), labels, rotation=45, ha="right", fontsize=7)
plt.ylabel("median rounds")
plt.tight_layout()
plt.savefig({png:?})
"#,
        png = format!("{csv_path}.png")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_wilson() {
        assert_eq!(median(&[3, 1, 2]), Some(2.0));
        assert_eq!(median(&[4, 1, 2, 3]), Some(2.5));
        assert_eq!(median(&[]), None);
        let [lo, hi] = wilson95(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert_eq!(wilson95(0, 10)[0], 0.0);
    }

    #[test]
    fn scaling_bias_caps() {
        assert_eq!(bias_cap(100_000, 4), 24_999);
        assert_eq!(bias_cap(10, 3), 3);
        let (s, capped) = scaling_bias(100_000, 2);
        assert!(!capped && s < 50_000 && s == prescribed_bias(100_000, 2));
        let (s, capped) = scaling_bias(100_000, 32);
        assert!(capped && s == 3_124);
    }

    #[test]
    fn median_failure_layout() {
        let c = median_failure_start(10_000, 200).unwrap();
        assert_eq!(c.counts(), &[3000, 3400, 3600]);
        assert!(median_failure_start(100, 40).is_err());
    }

    #[test]
    fn trials_zero_is_rejected() {
        let p = SimulateParams {
            n: 100,
            k: 2,
            s: 10,
            counts: None,
            dynamics: Dynamics::three_majority(),
        };
        assert!(simulate(&p, &RunOptions::default().with_trials(0)).is_err());
    }

    #[test]
    fn bias_decrease_rejects_zero_bias() {
        let p = BiasDecreaseParams {
            n: 100,
            k: 3,
            s: Some(0),
        };
        assert!(bias_decrease(&p, &RunOptions::default()).is_err());
        let p = BiasDecreaseParams {
            n: 100,
            k: 3,
            s: None,
        };
        assert_eq!(default_decrease_bias(100, 3), 0);
        assert!(bias_decrease(&p, &RunOptions::default()).is_err());
    }

    #[test]
    fn expected_table_example() {
        let c = Configuration::new(vec![2, 1]).unwrap();
        let t = expected(&c, &Dynamics::three_majority()).unwrap();
        assert!((t.rows[0].p - 20.0 / 27.0).abs() < 1e-12);
        assert!((t.rows[1].mu - 7.0 / 9.0).abs() < 1e-12);
        let text = t.to_string();
        assert!(text.contains("0.740741") && text.contains("2.222222"));
    }
}
