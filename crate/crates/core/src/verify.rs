//! Randomized battery checking the composed solvers against the oracles,
//! the synthesized policies against their values, and the stationary
//! policy bound.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compose::{compose_raa, compose_rr};
use crate::error::{Error, Result};
use crate::mdp::{random_mdp, FiniteMdp, SplitMix64};
use crate::objective::Tracker;
use crate::oracle::{cross_check, DEFAULT_ORACLE_CAP};
use crate::policy::{
    best_stationary_value, realized_objective, rollout_bound, simulate_augmented, synth_raa_augmented,
    synth_rr_augmented, AugmentedController, DEFAULT_ENUMERATION_CAP,
};
use crate::solvers::ValueTable;

/// Largest instance on which stationary policies are enumerated.
pub const STATIONARY_MAX_STATES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub trials: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub seed: u64,
    /// Perturb the composed values before comparison; every trial must then fail.
    #[serde(default)]
    pub corrupt: bool,
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.max_states == 0 || self.max_actions == 0 {
            return Err(Error::InvalidMdp(
                "trials, max states and max actions must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `(num_states, num_actions, mdp_seed)` for each trial.
pub fn trial_parameters(cfg: &VerifyConfig) -> Vec<(usize, usize, u64)> {
    let mut rng = SplitMix64::new(cfg.seed);
    (0..cfg.trials)
        .map(|_| {
            let n = 1 + rng.below(cfg.max_states as u64) as usize;
            let m = 1 + rng.below(cfg.max_actions as u64) as usize;
            (n, m, rng.next_u64())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub mdp_seed: u64,
    pub num_states: usize,
    pub num_actions: usize,
    /// States where the composed value differs from the oracle.
    pub raa_mismatches: Vec<usize>,
    pub rr_mismatches: Vec<usize>,
    /// States where the synthesized policy's rollout misses the value.
    pub raa_rollout_failures: Vec<usize>,
    pub rr_rollout_failures: Vec<usize>,
    /// States where a stationary policy beats the augmented value; `None` when not enumerated.
    pub stationary_violations: Option<Vec<usize>>,
    /// Some state where the best stationary RR value is strictly below the augmented one.
    pub stationary_gap: bool,
}

impl TrialOutcome {
    pub fn passed(&self) -> bool {
        self.raa_mismatches.is_empty()
            && self.rr_mismatches.is_empty()
            && self.raa_rollout_failures.is_empty()
            && self.rr_rollout_failures.is_empty()
            && self.stationary_violations.as_ref().is_none_or(Vec::is_empty)
    }
}

fn rollout_failures(
    mdp: &FiniteMdp,
    controller: &impl AugmentedController,
    tracker: &Tracker<'_>,
    values: &ValueTable,
) -> Result<Vec<usize>> {
    let steps = 2 * rollout_bound(mdp, tracker);
    let mut failures = Vec::new();
    for x in 0..mdp.num_states() {
        let traj = simulate_augmented(mdp, controller, tracker, x, steps)?;
        if realized_objective(&traj, tracker.objective())? != values.get(x) {
            failures.push(x);
        }
    }
    Ok(failures)
}

fn corrupted(v: &ValueTable) -> ValueTable {
    let mut out = v.clone();
    out.values_mut()[0] += 1.0;
    out
}

pub fn run_trial(trial: usize, n: usize, m: usize, mdp_seed: u64, corrupt: bool) -> Result<TrialOutcome> {
    let (mdp, labels) = random_mdp(mdp_seed, n, m, 2);
    let (a, b) = (&labels[0], &labels[1]);

    let raa = compose_raa(&mdp, a, b)?;
    let rr = compose_rr(&mdp, a, b)?;
    let raa_tracker = Tracker::reach_always_avoid(a, b);
    let rr_tracker = Tracker::reach_reach(a, b);
    let (v_raa, v_rr) = if corrupt {
        (corrupted(&raa.v_raa), corrupted(&rr.v_rr))
    } else {
        (raa.v_raa.clone(), rr.v_rr.clone())
    };
    let raa_report = cross_check(&mdp, &raa_tracker, &v_raa, DEFAULT_ORACLE_CAP)?;
    let rr_report = cross_check(&mdp, &rr_tracker, &v_rr, DEFAULT_ORACLE_CAP)?;

    let raa_policy = synth_raa_augmented(&mdp, &raa)?;
    let rr_policy = synth_rr_augmented(&mdp, &rr)?;
    let raa_rollout_failures = rollout_failures(&mdp, &raa_policy, &raa_tracker, &v_raa)?;
    let rr_rollout_failures = rollout_failures(&mdp, &rr_policy, &rr_tracker, &v_rr)?;

    let (stationary_violations, stationary_gap) = if n <= STATIONARY_MAX_STATES {
        let mut violations = Vec::new();
        let mut gap = false;
        for (tracker, v) in [(&raa_tracker, &v_raa), (&rr_tracker, &v_rr)] {
            let best = best_stationary_value(&mdp, tracker, DEFAULT_ENUMERATION_CAP)?;
            for x in 0..n {
                if best.get(x) > v.get(x) && !violations.contains(&x) {
                    violations.push(x);
                }
            }
        }
        let best_rr = best_stationary_value(&mdp, &rr_tracker, DEFAULT_ENUMERATION_CAP)?;
        gap |= (0..n).any(|x| best_rr.get(x) < v_rr.get(x));
        violations.sort_unstable();
        (Some(violations), gap)
    } else {
        (None, false)
    };

    Ok(TrialOutcome {
        trial,
        mdp_seed,
        num_states: n,
        num_actions: m,
        raa_mismatches: raa_report.mismatches,
        rr_mismatches: rr_report.mismatches,
        raa_rollout_failures,
        rr_rollout_failures,
        stationary_violations,
        stationary_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub config: VerifyConfig,
    pub outcomes: Vec<TrialOutcome>,
}

impl VerifySummary {
    pub fn failed_trials(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed()).count()
    }

    pub fn passed(&self) -> bool {
        self.failed_trials() == 0
    }

    /// Fixed-width text table, one row per check.
    pub fn render(&self) -> String {
        let count = |f: &dyn Fn(&TrialOutcome) -> bool| self.outcomes.iter().filter(|o| f(o)).count();
        let total = self.outcomes.len();
        let enumerated = count(&|o| o.stationary_violations.is_some());
        let rows = [
            ("raa value = oracle", count(&|o| o.raa_mismatches.is_empty()), total),
            ("rr value = oracle", count(&|o| o.rr_mismatches.is_empty()), total),
            (
                "raa rollout = value",
                count(&|o| o.raa_rollout_failures.is_empty()),
                total,
            ),
            (
                "rr rollout = value",
                count(&|o| o.rr_rollout_failures.is_empty()),
                total,
            ),
            (
                "stationary <= augmented",
                count(&|o| o.stationary_violations.as_ref().is_some_and(Vec::is_empty)),
                enumerated,
            ),
        ];
        let mut out = String::new();
        let c = &self.config;
        writeln!(
            out,
            "verify: trials={} max_states={} max_actions={} seed={}{}",
            c.trials,
            c.max_states,
            c.max_actions,
            c.seed,
            if c.corrupt { " corrupt" } else { "" }
        )
        .unwrap();
        writeln!(out, "{:<26} {:>8} {:>8}", "check", "passed", "of").unwrap();
        for (name, ok, of) in rows {
            writeln!(out, "{name:<26} {ok:>8} {of:>8}").unwrap();
        }
        writeln!(
            out,
            "{:<26} {:>8}",
            "trials with rr stationary gap",
            count(&|o| o.stationary_gap)
        )
        .unwrap();
        for o in self.outcomes.iter().filter(|o| !o.passed()) {
            writeln!(
                out,
                "FAIL trial {} (seed {:#018x}, {}x{}): raa {:?} rr {:?} raa-rollout {:?} rr-rollout {:?} stationary {:?}",
                o.trial,
                o.mdp_seed,
                o.num_states,
                o.num_actions,
                o.raa_mismatches,
                o.rr_mismatches,
                o.raa_rollout_failures,
                o.rr_rollout_failures,
                o.stationary_violations.clone().unwrap_or_default()
            )
            .unwrap();
        }
        writeln!(out, "result: {}", if self.passed() { "ok" } else { "MISMATCH" }).unwrap();
        out
    }
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifySummary> {
    cfg.validate()?;
    let outcomes = trial_parameters(cfg)
        .into_iter()
        .enumerate()
        .map(|(t, (n, m, seed))| run_trial(t, n, m, seed, cfg.corrupt))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifySummary { config: *cfg, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_battery_passes() {
        let cfg = VerifyConfig {
            trials: 40,
            max_states: 4,
            max_actions: 2,
            seed: 3,
            corrupt: false,
        };
        let summary = run_verify(&cfg).unwrap();
        assert!(summary.passed(), "{}", summary.render());
    }

    #[test]
    fn corruption_detected() {
        let cfg = VerifyConfig {
            trials: 5,
            max_states: 3,
            max_actions: 2,
            seed: 1,
            corrupt: true,
        };
        let summary = run_verify(&cfg).unwrap();
        assert_eq!(summary.failed_trials(), 5);
        assert!(summary.render().contains("MISMATCH"));
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = VerifyConfig {
            trials: 0,
            max_states: 3,
            max_actions: 2,
            seed: 1,
            corrupt: false,
        };
        assert!(run_verify(&cfg).is_err());
    }

    #[test]
    fn parameters_deterministic() {
        let cfg = VerifyConfig {
            trials: 10,
            max_states: 6,
            max_actions: 3,
            seed: 7,
            corrupt: false,
        };
        let p = trial_parameters(&cfg);
        assert_eq!(p, trial_parameters(&cfg));
        assert!(p.iter().all(|&(n, m, _)| (1..=6).contains(&n) && (1..=3).contains(&m)));
    }
}
