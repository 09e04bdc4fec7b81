use serde::{Deserialize, Serialize};

use crate::bench::config::ScenarioConfig;
use crate::bench::trial::{run_trial, TrialResult};
use crate::error::Result;

/// Quota and intractability rule for a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    /// Successful trials wanted.
    pub quota: usize,
    /// The scenario is intractable when the first `failure_limit` trials all fail.
    pub failure_limit: usize,
    /// Hard cap on trials run; reaching it leaves the verdict incomplete.
    pub max_trials: usize,
}

impl Protocol {
    pub const DESK: Protocol = Protocol {
        quota: 5,
        failure_limit: 5,
        max_trials: 25,
    };
    pub const FULL: Protocol = Protocol {
        quota: 20,
        failure_limit: 20,
        max_trials: 100,
    };
}

impl Default for Protocol {
    fn default() -> Self {
        Self::DESK
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Tractable,
    Intractable,
    /// Hit `max_trials` before collecting the quota.
    Incomplete,
}

/// Outcome of the trial protocol over an arbitrary trial type.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun<T> {
    pub trials: Vec<(u64, T)>,
    pub successes: usize,
    pub verdict: Verdict,
}

/// Runs seeds `first_seed, first_seed + 1, ...` until the quota of successes
/// is met, the opening run of failures reaches the limit, or the cap is hit.
/// Every trial, failed or not, is retained.
pub fn run_protocol<T>(
    protocol: Protocol,
    first_seed: u64,
    mut run: impl FnMut(u64) -> Result<T>,
    success: impl Fn(&T) -> bool,
) -> Result<ProtocolRun<T>> {
    let mut trials = Vec::new();
    let mut successes = 0;
    let verdict = loop {
        if successes >= protocol.quota {
            break Verdict::Tractable;
        }
        if successes == 0 && trials.len() >= protocol.failure_limit {
            break Verdict::Intractable;
        }
        if trials.len() >= protocol.max_trials {
            break Verdict::Incomplete;
        }
        let seed = first_seed + trials.len() as u64;
        let t = run(seed)?;
        if success(&t) {
            successes += 1;
        }
        trials.push((seed, t));
    };
    Ok(ProtocolRun { trials, successes, verdict })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    /// Mean and sample standard deviation; `n = 0` gives NaN mean.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub convergence_time_s: Stat,
    pub distance_m: Stat,
    pub collisions_rr: Stat,
    pub collisions_ro: Stat,
    pub peak_edge_bw_bps: Stat,
}

impl Aggregates {
    /// Statistics over the successful trials only.
    pub fn of(trials: &[TrialResult]) -> Self {
        let ok: Vec<&TrialResult> = trials.iter().filter(|t| t.success).collect();
        let col = |f: &dyn Fn(&TrialResult) -> f64| Stat::of(&ok.iter().map(|t| f(t)).collect::<Vec<_>>());
        Self {
            convergence_time_s: col(&|t| t.convergence_time_s.unwrap_or(f64::NAN)),
            distance_m: col(&|t| t.total_distance_m),
            collisions_rr: col(&|t| t.collisions_rr as f64),
            collisions_ro: col(&|t| t.collisions_ro as f64),
            peak_edge_bw_bps: col(&|t| t.bandwidth.max_edge_peak_bps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub config_hash: String,
    pub protocol: Protocol,
    pub verdict: Verdict,
    pub trials: Vec<TrialResult>,
    pub aggregates: Aggregates,
}

impl SuiteResult {
    pub fn successes(&self) -> usize {
        self.trials.iter().filter(|t| t.success).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite serializes")
    }
}

/// Trials of `template` at seeds `template.seed, template.seed + 1, ...`.
pub fn run_suite(template: &ScenarioConfig, protocol: Protocol) -> Result<SuiteResult> {
    let run = run_protocol(protocol, template.seed, |seed| run_trial(&template.with_seed(seed)), |t| t.success)?;
    let trials: Vec<TrialResult> = run.trials.into_iter().map(|(_, t)| t).collect();
    Ok(SuiteResult {
        config_hash: template.config_hash(),
        protocol,
        verdict: run.verdict,
        aggregates: Aggregates::of(&trials),
        trials,
    })
}
