//! Plurality consensus under 3-input rules: configurations, rule tables,
//! simulation engines, and an exact Markov-chain oracle for tiny systems.

pub mod analytics;
pub mod configuration;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod rules;
pub mod sim;

pub use configuration::{BiasStats, BoundViolation, Color, Configuration};
pub use error::{Error, Result};
pub use rules::{classify, Classification, Rule3, TableRule};
pub use sim::{run_trial, Dynamics, Engine, TrialResult, TrialSpec};
