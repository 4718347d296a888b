use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use plurality::experiments::{
    self, BiasDecreaseParams, ExperimentOutput, HSpeedupParams, LbGrowthParams,
    MedianFailureParams, RunOptions, ScalingParams, SimulateParams,
};
use plurality::oracle::ExactChain;
use plurality::sim::AdversaryPolicy;
use plurality::{classify, Configuration, Dynamics, Engine, Error, Rule3, TableRule};

#[derive(Parser)]
#[command(
    name = "plurality",
    version,
    about = "Plurality-consensus dynamics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 50)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Defaults to 200 k ceil(log2 n).
    #[arg(long)]
    max_rounds: Option<u64>,
    /// `none` or `demote:<T>`.
    #[arg(long, default_value = "none")]
    adversary: AdversaryPolicy,
    /// CSV destination for per-trial records.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// `auto`, `multinomial` or `agent`.
    #[arg(long, default_value = "auto")]
    engine: Engine,
    /// Also write `<out>.plot.py`.
    #[arg(long, requires = "out")]
    plot: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            trials: self.trials,
            seed: self.seed,
            threads: self.threads,
            engine: self.engine,
            max_rounds: self.max_rounds,
            adversary: self.adversary.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Trials from a biased balanced start or explicit counts.
    Simulate {
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        s: u64,
        /// Explicit initial counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<u64>>,
        /// Built-in name (`3maj`, `3maj-first`, `median`, `voter`, `hmaj:<h>`)
        /// or a rule file.
        #[arg(long, default_value = "3maj")]
        dynamics: String,
        #[command(flatten)]
        common: Common,
    },
    /// Consensus time across k with the prescribed bias.
    ScalingK {
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
        k: Vec<usize>,
        #[arg(long, default_value = "3maj")]
        dynamics: String,
        #[command(flatten)]
        common: Common,
    },
    /// Rounds for the top color to reach 2n/k from a weak bias.
    LbGrowth {
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, value_delimiter = ',', default_value = "4,16")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Consensus time of h-majority across h.
    HSpeedup {
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "3,5,9")]
        h: Vec<u32>,
        #[arg(long, default_value_t = 0)]
        s: u64,
        #[command(flatten)]
        common: Common,
    },
    /// One-round probability that the bias toward a fixed competitor shrinks.
    BiasDecrease {
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 100)]
        k: usize,
        /// Defaults to floor(sqrt(k n) / 36).
        #[arg(long)]
        s: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Median dynamics from a start where plurality and median colors differ.
    MedianFailure {
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        /// Defaults to n/50.
        #[arg(long)]
        s: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Non-uniform rule with counters (1,3,2) from a three-color start.
    SkewedDrift {
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Defaults to ceil(sqrt(n ln n)).
        #[arg(long)]
        s: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Clear-majority and uniform properties of a rule; exit 1 outside M3.
    Classify {
        /// Built-in name or rule file.
        rule: String,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Pick probabilities, expected next counts and bias statistics.
    Expected {
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<u64>,
        #[arg(long, default_value = "3maj")]
        dynamics: String,
        #[arg(long)]
        json: bool,
    },
    /// Exact Markov chain: absorption probabilities and times per state.
    Chain {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "3maj")]
        dynamics: String,
        /// Print the transition rows instead.
        #[arg(long)]
        dump: bool,
    },
}

/// Built-in dynamics name, or a path to a rule file.
fn load_dynamics(spec: &str) -> Result<Dynamics, Error> {
    match spec.parse::<Dynamics>() {
        Ok(d) => Ok(d),
        Err(_) if Path::new(spec).is_file() => Ok(Dynamics::Rule(Rule3::Table(TableRule::parse(
            &fs::read_to_string(spec)?,
        )?))),
        Err(e) => Err(e),
    }
}

fn load_rule(spec: &str) -> Result<Rule3, Error> {
    match load_dynamics(spec)? {
        Dynamics::Rule(r) => Ok(r),
        Dynamics::HMajority(_) => Err(Error::InvalidParameter(format!(
            "{spec} is not a 3-input rule"
        ))),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn finish(output: ExperimentOutput, common: &Common) -> Result<ExitCode, Error> {
    for w in &output.summary.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &common.out {
        experiments::write_csv(&output.records, fs::File::create(path)?)?;
        if common.plot {
            let script = experiments::plot_script(&path.display().to_string());
            fs::write(format!("{}.plot.py", path.display()), script)?;
        }
    }
    print_json(&output.summary)?;
    Ok(if output.summary.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate {
            n,
            k,
            s,
            counts,
            dynamics,
            common,
        } => {
            let p = SimulateParams {
                n,
                k,
                s,
                counts,
                dynamics: load_dynamics(&dynamics)?,
            };
            finish(experiments::simulate(&p, &common.options())?, &common)
        }
        Command::ScalingK {
            n,
            k,
            dynamics,
            common,
        } => {
            let p = ScalingParams {
                n,
                k_list: k,
                dynamics: load_dynamics(&dynamics)?,
            };
            finish(experiments::scaling_k(&p, &common.options())?, &common)
        }
        Command::LbGrowth { n, k, eps, common } => {
            let p = LbGrowthParams { n, k_list: k, eps };
            finish(experiments::lb_growth(&p, &common.options())?, &common)
        }
        Command::HSpeedup { n, k, h, s, common } => {
            let p = HSpeedupParams { n, k, h_list: h, s };
            finish(experiments::h_speedup(&p, &common.options())?, &common)
        }
        Command::BiasDecrease { n, k, s, common } => {
            let p = BiasDecreaseParams { n, k, s };
            finish(experiments::bias_decrease(&p, &common.options())?, &common)
        }
        Command::MedianFailure { n, s, common } => {
            let p = MedianFailureParams { n, s };
            finish(experiments::median_failure(&p, &common.options())?, &common)
        }
        Command::SkewedDrift { n, s, common } => {
            let s = s.unwrap_or_else(|| experiments::skewed_drift_bias(n));
            finish(experiments::skewed_drift(n, s, &common.options())?, &common)
        }
        Command::Classify { rule, k } => {
            let c = classify(&load_rule(&rule)?, k)?;
            print_json(&c)?;
            Ok(if c.in_m3 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Expected {
            counts,
            dynamics,
            json,
        } => {
            let c = Configuration::new(counts)?;
            let table = experiments::expected(&c, &load_dynamics(&dynamics)?)?;
            if json {
                print_json(&table)?;
            } else {
                println!("{table}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Chain {
            n,
            k,
            dynamics,
            dump,
        } => {
            let chain = ExactChain::build(n, k, &load_dynamics(&dynamics)?)?;
            if dump {
                print!("{}", chain.to_text());
                return Ok(ExitCode::SUCCESS);
            }
            let absorb = chain.absorption_probabilities()?;
            let times = chain.expected_absorption_time()?;
            println!("# absorbing colors {:?}", chain.absorbing_colors());
            for (i, c) in chain.states().iter().enumerate() {
                let probs: Vec<String> = absorb[i].iter().map(|p| format!("{p:.9}")).collect();
                println!("{c} time={:.9} absorb=[{}]", times[i], probs.join(","));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
