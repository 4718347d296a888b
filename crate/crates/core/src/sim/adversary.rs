use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::configuration::Configuration;
use crate::error::{Error, Result};

/// Custom adversary: receives the configuration and the budget, returns the
/// corrupted configuration.
pub type AdversaryHook = Arc<dyn Fn(&Configuration, u64) -> Configuration + Send + Sync>;

#[derive(Clone, Default)]
pub enum AdversaryStrategy {
    #[default]
    None,
    /// Move up to `T` nodes from the plurality color to the runner-up.
    DemoteMajority,
    Custom(AdversaryHook),
}

impl fmt::Debug for AdversaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryStrategy::None => f.write_str("None"),
            AdversaryStrategy::DemoteMajority => f.write_str("DemoteMajority"),
            AdversaryStrategy::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Recolors at most `budget` nodes just before each round.
#[derive(Debug, Clone, Default)]
pub struct AdversaryPolicy {
    pub budget: u64,
    pub strategy: AdversaryStrategy,
}

impl AdversaryPolicy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn demote_majority(budget: u64) -> Self {
        AdversaryPolicy {
            budget,
            strategy: AdversaryStrategy::DemoteMajority,
        }
    }

    pub fn custom(budget: u64, hook: AdversaryHook) -> Self {
        AdversaryPolicy {
            budget,
            strategy: AdversaryStrategy::Custom(hook),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.strategy, AdversaryStrategy::None) || self.budget == 0
    }

    /// Applies the policy. Plurality and runner-up ties go to the lowest index.
    /// A custom hook that changes `n` or `k`, or moves more than the budget,
    /// is rejected.
    pub fn apply(&self, c: &Configuration) -> Result<Configuration> {
        match &self.strategy {
            AdversaryStrategy::None => Ok(c.clone()),
            AdversaryStrategy::DemoteMajority => {
                if c.k() < 2 || self.budget == 0 {
                    return Ok(c.clone());
                }
                let from = c.plurality() as usize;
                let to = c
                    .counts()
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != from)
                    .fold(None::<(usize, u64)>, |best, (j, &x)| match best {
                        Some((_, bx)) if bx >= x => best,
                        _ => Some((j, x)),
                    })
                    .map(|(j, _)| j)
                    .expect("k >= 2");
                let moved = self.budget.min(c.counts()[from]);
                let mut counts = c.counts().to_vec();
                counts[from] -= moved;
                counts[to] += moved;
                Configuration::new(counts)
            }
            AdversaryStrategy::Custom(hook) => {
                let out = hook(c, self.budget);
                let moved: u64 = out
                    .counts()
                    .iter()
                    .zip(c.counts())
                    .map(|(&a, &b)| a.saturating_sub(b))
                    .sum();
                if out.k() != c.k() || out.n() != c.n() || moved > self.budget {
                    return Err(Error::AdversaryBudget {
                        moved,
                        budget: self.budget,
                    });
                }
                Ok(out)
            }
        }
    }
}

impl FromStr for AdversaryPolicy {
    type Err = Error;

    /// `none` or `demote:<T>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(Self::none());
        }
        if let Some(t) = s.strip_prefix("demote:") {
            let t = t
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad budget in {s:?}")))?;
            return Ok(Self::demote_majority(t));
        }
        Err(Error::InvalidParameter(format!("unknown adversary {s:?}")))
    }
}

impl fmt::Display for AdversaryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.strategy {
            AdversaryStrategy::None => f.write_str("none"),
            AdversaryStrategy::DemoteMajority => write!(f, "demote:{}", self.budget),
            AdversaryStrategy::Custom(_) => write!(f, "custom:{}", self.budget),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: &[u64]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn demote_examples() {
        let p = AdversaryPolicy::demote_majority(3);
        assert_eq!(p.apply(&cfg(&[10, 5])).unwrap(), cfg(&[7, 8]));
        let p = AdversaryPolicy::demote_majority(2);
        assert_eq!(p.apply(&cfg(&[4, 4])).unwrap(), cfg(&[2, 6]));
        assert_eq!(p.apply(&cfg(&[1, 0, 3, 3])).unwrap(), cfg(&[1, 0, 1, 5]));
        let p = AdversaryPolicy::demote_majority(100);
        assert_eq!(p.apply(&cfg(&[6, 1])).unwrap(), cfg(&[0, 7]));
        assert_eq!(p.apply(&cfg(&[6])).unwrap(), cfg(&[6]));
    }

    #[test]
    fn none_leaves_configuration() {
        let c = cfg(&[3, 9, 1]);
        assert_eq!(AdversaryPolicy::none().apply(&c).unwrap(), c);
    }

    #[test]
    fn custom_hook_budget_is_enforced() {
        let hook: AdversaryHook = Arc::new(|c: &Configuration, t: u64| {
            let mut v = c.counts().to_vec();
            let moved = t.min(v[0]);
            v[0] -= moved;
            v[1] += moved;
            Configuration::new(v).unwrap()
        });
        let p = AdversaryPolicy::custom(2, hook);
        assert_eq!(p.apply(&cfg(&[5, 5])).unwrap(), cfg(&[3, 7]));

        let greedy: AdversaryHook =
            Arc::new(|c: &Configuration, _| Configuration::monochromatic(c.n(), c.k(), 1).unwrap());
        let p = AdversaryPolicy::custom(2, greedy);
        assert_eq!(
            p.apply(&cfg(&[5, 5])),
            Err(Error::AdversaryBudget {
                moved: 5,
                budget: 2
            })
        );
    }

    #[test]
    fn parse() {
        assert!("none".parse::<AdversaryPolicy>().unwrap().is_none());
        let p: AdversaryPolicy = "demote:4".parse().unwrap();
        assert_eq!(p.budget, 4);
        assert_eq!(p.to_string(), "demote:4");
        assert!("demote:x".parse::<AdversaryPolicy>().is_err());
    }
}
