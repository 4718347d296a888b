//! Synchronous round engine, initial configurations, the T-bounded adversary
//! and the trial runner.

mod adversary;
mod generators;
mod sampling;
mod seeding;
mod trial;

pub use adversary::{AdversaryHook, AdversaryPolicy, AdversaryStrategy};
pub use generators::{gen_balanced_biased, gen_power_biased, gen_three_color_lb};
pub use sampling::{agent_step, sample_multinomial};
pub use seeding::{rng_for, run_indexed, splitmix64, sub_seed, TrialRng};
pub use trial::{
    default_max_rounds, run_trial, StopCondition, TrajectoryPoint, TrialResult, TrialSpec,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::analytics::pick_probabilities_3maj;
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::rules::{
    multiset_count, pick_probabilities_hmaj_capped, pick_probabilities_rule, Rule3,
    HMAJ_MULTISET_CAP,
};

/// h-majority multiset counts above this go to the agent sampler when the
/// engine is `Auto`; per-node sampling is cheaper past this point.
pub const ENGINE_HMAJ_ENUMERATION_LIMIT: u128 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dynamics {
    Rule(Rule3),
    /// Plurality of `h` samples, ties broken uniformly.
    HMajority(u32),
}

impl Dynamics {
    pub fn three_majority() -> Self {
        Dynamics::Rule(Rule3::ThreeMajorityUniformTie)
    }

    pub fn h_majority(h: u32) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidH);
        }
        Ok(Dynamics::HMajority(h))
    }

    pub fn samples_per_node(&self) -> u32 {
        match self {
            Dynamics::Rule(_) => 3,
            Dynamics::HMajority(h) => *h,
        }
    }

    /// Exact per-node pick distribution, when one can be computed: the closed
    /// form for 3-majority, case-split enumeration for other 3-input rules and
    /// multiset enumeration for h-majority.
    pub fn exact_pick_probabilities(&self, c: &Configuration) -> Result<Vec<f64>> {
        self.exact_pick_probabilities_capped(c, HMAJ_MULTISET_CAP)
    }

    fn exact_pick_probabilities_capped(&self, c: &Configuration, cap: u128) -> Result<Vec<f64>> {
        match self {
            Dynamics::Rule(Rule3::ThreeMajorityUniformTie | Rule3::ThreeMajorityFirst) => {
                Ok(pick_probabilities_3maj(c))
            }
            Dynamics::Rule(rule) => pick_probabilities_rule(rule, c),
            Dynamics::HMajority(1) => {
                let n = c.n() as f64;
                Ok(c.counts().iter().map(|&x| x as f64 / n).collect())
            }
            Dynamics::HMajority(h) => pick_probabilities_hmaj_capped(*h, c, cap),
        }
    }

    /// Whether `Auto` would use the multinomial engine on `c`.
    fn prefers_exact(&self, c: &Configuration) -> bool {
        match self {
            Dynamics::HMajority(h) if *h > 1 => {
                let support = c.counts().iter().filter(|&&x| x > 0).count();
                multiset_count(*h, support) <= ENGINE_HMAJ_ENUMERATION_LIMIT
            }
            _ => true,
        }
    }
}

impl fmt::Display for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dynamics::Rule(r) => f.write_str(r.name()),
            Dynamics::HMajority(h) => write!(f, "hmaj:{h}"),
        }
    }
}

impl FromStr for Dynamics {
    type Err = Error;

    /// `3maj`, `3maj-first`, `median`, `voter` or `hmaj:<h>`. Table rules are
    /// loaded from files by the caller.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(rule) = Rule3::builtin(s) {
            return Ok(Dynamics::Rule(rule));
        }
        if s == "voter" {
            return Ok(Dynamics::HMajority(1));
        }
        if let Some(h) = s.strip_prefix("hmaj:") {
            let h: u32 = h
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad h in {s:?}")))?;
            return Dynamics::h_majority(h);
        }
        Err(Error::InvalidParameter(format!("unknown dynamics {s:?}")))
    }
}

/// Which sampler advances a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Multinomial when an exact pick distribution is cheap, agent otherwise.
    #[default]
    Auto,
    /// One multinomial draw of `n` trials over the exact pick distribution.
    Multinomial,
    /// Every node draws its own samples.
    Agent,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "multinomial" => Ok(Engine::Multinomial),
            "agent" => Ok(Engine::Agent),
            _ => Err(Error::InvalidParameter(format!("unknown engine {s:?}"))),
        }
    }
}

/// Advances one synchronous round.
///
/// All nodes sample independently with replacement from the same counts, so
/// the next configuration is multinomial over the per-node pick distribution.
pub fn step<R: Rng + ?Sized>(
    c: &Configuration,
    dynamics: &Dynamics,
    engine: Engine,
    rng: &mut R,
) -> Result<Configuration> {
    if c.is_monochromatic() {
        // absorbing for every dynamics in scope
        return Ok(c.clone());
    }
    let use_exact = match engine {
        Engine::Multinomial => true,
        Engine::Agent => false,
        Engine::Auto => dynamics.prefers_exact(c),
    };
    if use_exact {
        match dynamics.exact_pick_probabilities(c) {
            Ok(p) => return Configuration::new(sample_multinomial(c.n(), &p, rng)),
            Err(e) if engine == Engine::Multinomial => return Err(e),
            Err(_) => {}
        }
    }
    agent_step(c, dynamics, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_dynamics() {
        assert_eq!(
            "3maj".parse::<Dynamics>().unwrap(),
            Dynamics::three_majority()
        );
        assert_eq!(
            "hmaj:5".parse::<Dynamics>().unwrap(),
            Dynamics::HMajority(5)
        );
        assert_eq!("voter".parse::<Dynamics>().unwrap(), Dynamics::HMajority(1));
        assert!("hmaj:0".parse::<Dynamics>().is_err());
        assert!("bogus".parse::<Dynamics>().is_err());
        assert_eq!(Dynamics::HMajority(7).to_string(), "hmaj:7");
    }

    #[test]
    fn monochromatic_is_absorbing() {
        let c = Configuration::new(vec![0, 9, 0]).unwrap();
        let mut rng = rng_for(1);
        for d in [Dynamics::three_majority(), Dynamics::HMajority(4)] {
            for e in [Engine::Auto, Engine::Agent, Engine::Multinomial] {
                assert_eq!(step(&c, &d, e, &mut rng).unwrap(), c);
            }
        }
    }

    #[test]
    fn forced_multinomial_without_exact_distribution_fails() {
        let c = Configuration::new(vec![1; 40]).unwrap();
        let mut rng = rng_for(1);
        assert!(step(&c, &Dynamics::HMajority(9), Engine::Multinomial, &mut rng).is_err());
        let next = step(&c, &Dynamics::HMajority(9), Engine::Auto, &mut rng).unwrap();
        assert_eq!(next.n(), 40);
    }
}
