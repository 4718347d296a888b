use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{step, AdversaryPolicy, Dynamics, Engine};
use crate::configuration::{BiasStats, Color, Configuration};
use crate::error::{Error, Result};

/// `200 · k · ⌈log₂ n⌉`, at least 1.
pub fn default_max_rounds(n: u64, k: usize) -> u64 {
    let log2 = if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    };
    (200 * k as u64 * log2).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCondition {
    /// Consensus: every node on one color.
    Monochromatic,
    /// Some color reaches at least this many nodes.
    MaxCountAtLeast(u64),
}

impl StopCondition {
    fn reached(&self, c: &Configuration) -> Option<Color> {
        match *self {
            StopCondition::Monochromatic => c.monochromatic_color(),
            StopCondition::MaxCountAtLeast(t) => (c.max_count() >= t).then(|| c.plurality()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub dynamics: Dynamics,
    pub adversary: AdversaryPolicy,
    pub max_rounds: u64,
    pub engine: Engine,
    pub stop: StopCondition,
    pub record_trajectory: bool,
}

impl TrialSpec {
    pub fn new(dynamics: Dynamics, max_rounds: u64) -> Self {
        TrialSpec {
            dynamics,
            adversary: AdversaryPolicy::none(),
            max_rounds,
            engine: Engine::Auto,
            stop: StopCondition::Monochromatic,
            record_trajectory: false,
        }
    }

    pub fn with_adversary(mut self, adversary: AdversaryPolicy) -> Self {
        self.adversary = adversary;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_stop(mut self, stop: StopCondition) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub round: u64,
    pub bias: u64,
    pub max_count: u64,
}

impl TrajectoryPoint {
    fn of(round: u64, c: &Configuration) -> Self {
        let b = BiasStats::of(c);
        TrajectoryPoint {
            round,
            bias: b.s,
            max_count: b.m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    /// The stop condition was met within `max_rounds`.
    pub converged: bool,
    /// The color meeting the stop condition; present iff `converged`.
    pub winner: Option<Color>,
    /// Rounds taken (τ for the monochromatic stop condition).
    pub rounds: u64,
    /// Winner equals the unique initial plurality color.
    pub reached_majority: bool,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
    pub final_configuration: Configuration,
}

/// Runs adversary-then-step rounds until the stop condition holds or
/// `max_rounds` rounds have passed. The round counter counts steps.
pub fn run_trial<R: Rng + ?Sized>(
    c0: &Configuration,
    spec: &TrialSpec,
    rng: &mut R,
) -> Result<TrialResult> {
    if spec.max_rounds == 0 {
        return Err(Error::InvalidParameter(
            "max_rounds must be at least 1".into(),
        ));
    }
    let initial_majority = c0.is_s_biased(0);
    let mut trajectory = spec
        .record_trajectory
        .then(|| vec![TrajectoryPoint::of(0, c0)]);
    let mut c = c0.clone();
    let mut rounds = 0;
    let winner = loop {
        if let Some(w) = spec.stop.reached(&c) {
            break Some(w);
        }
        if rounds >= spec.max_rounds {
            break None;
        }
        if !spec.adversary.is_none() {
            c = spec.adversary.apply(&c)?;
        }
        c = step(&c, &spec.dynamics, spec.engine, rng)?;
        rounds += 1;
        if let Some(t) = trajectory.as_mut() {
            t.push(TrajectoryPoint::of(rounds, &c));
        }
    };
    Ok(TrialResult {
        converged: winner.is_some(),
        winner,
        rounds,
        reached_majority: winner.is_some() && winner == initial_majority,
        trajectory,
        final_configuration: c,
    })
}
