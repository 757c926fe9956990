//! Fixed-point solvers for the reach, avoid and reach-avoid value functions.
//!
//! Undiscounted recursions use only `min`/`max`, so every iterate is a member
//! of the finite set of label values and convergence is detected by exact
//! equality of consecutive Jacobi sweeps. Discounted recursions are
//! γ-contractions and stop at a sup-norm residual of [`DISCOUNT_TOLERANCE`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, LabelTable};

/// Stopping residual for discounted solves.
pub const DISCOUNT_TOLERANCE: f64 = 1e-12;

/// One real value per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueTable(Vec<f64>);

impl ValueTable {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    #[inline]
    pub fn get(&self, state: usize) -> f64 {
        self.0[state]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Sup-norm distance to another table of the same length.
    pub fn sup_distance(&self, other: &ValueTable) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check(&self, mdp: &FiniteMdp) -> Result<()> {
        if self.len() == mdp.num_states() {
            Ok(())
        } else {
            Err(Error::ValueSize {
                expected: mdp.num_states(),
                actual: self.len(),
            })
        }
    }
}

impl From<ValueTable> for LabelTable {
    fn from(v: ValueTable) -> Self {
        LabelTable::new(v.0).expect("solver values are finite")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
}

/// A recursion together with the labels it reads.
#[derive(Debug, Clone, Copy)]
pub enum Problem<'a> {
    /// `V(x) = max{ℓ(x), max_u V(f(x,u))}`.
    Reach(&'a LabelTable),
    /// `V(x) = min{g(x), max_u V(f(x,u))}`.
    Avoid(&'a LabelTable),
    /// `V(x) = min{g(x), max{ℓ(x), max_u V(f(x,u))}}`.
    ReachAvoid {
        reward: &'a LabelTable,
        safety: &'a LabelTable,
    },
}

impl Problem<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Reach(_) => "reach",
            Problem::Avoid(_) => "avoid",
            Problem::ReachAvoid { .. } => "reach-avoid",
        }
    }

    fn check(&self, mdp: &FiniteMdp) -> Result<()> {
        match *self {
            Problem::Reach(l) => mdp.check_labels("l", l),
            Problem::Avoid(g) => mdp.check_labels("g", g),
            Problem::ReachAvoid { reward, safety } => {
                mdp.check_labels("l", reward)?;
                mdp.check_labels("g", safety)
            }
        }
    }

    /// Instantaneous term: ℓ, g, or min{ℓ, g}. Also the initial iterate.
    #[inline]
    pub fn stage(&self, x: usize) -> f64 {
        match *self {
            Problem::Reach(l) => l.get(x),
            Problem::Avoid(g) => g.get(x),
            Problem::ReachAvoid { reward, safety } => reward.get(x).min(safety.get(x)),
        }
    }

    /// Undiscounted backup given the best successor value `q`.
    #[inline]
    pub fn combine(&self, x: usize, q: f64) -> f64 {
        match *self {
            Problem::Reach(l) => l.get(x).max(q),
            Problem::Avoid(g) => g.get(x).min(q),
            Problem::ReachAvoid { reward, safety } => safety.get(x).min(reward.get(x).max(q)),
        }
    }

    /// Backup at `x` with optional discount.
    #[inline]
    pub fn backup(&self, x: usize, q: f64, gamma: Option<f64>) -> f64 {
        match gamma {
            None => self.combine(x, q),
            Some(g) => (1.0 - g) * self.stage(x) + g * self.combine(x, q),
        }
    }

    fn label_range(&self) -> f64 {
        let (lo, hi) = match *self {
            Problem::Reach(t) | Problem::Avoid(t) => (t.min(), t.max()),
            Problem::ReachAvoid { reward, safety } => (reward.min().min(safety.min()), reward.max().max(safety.max())),
        };
        hi - lo
    }

    fn distinct_count(&self) -> usize {
        match *self {
            Problem::Reach(t) | Problem::Avoid(t) => t.distinct_values().len(),
            Problem::ReachAvoid { reward, safety } => {
                let mut v = reward.distinct_values();
                v.extend(safety.distinct_values());
                v.sort_by(f64::total_cmp);
                v.dedup();
                v.len()
            }
        }
    }
}

fn best_successor(mdp: &FiniteMdp, v: &[f64], x: usize) -> f64 {
    mdp.successors(x)
        .iter()
        .map(|&t| v[t])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One synchronous sweep: `out = backup(v)`. Returns the sup-norm change.
fn sweep(mdp: &FiniteMdp, problem: &Problem<'_>, gamma: Option<f64>, v: &[f64], out: &mut [f64]) -> f64 {
    let mut change = 0.0f64;
    for (x, slot) in out.iter_mut().enumerate() {
        let nv = problem.backup(x, best_successor(mdp, v, x), gamma);
        change = change.max((nv - v[x]).abs());
        *slot = nv;
    }
    change
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidDiscount(gamma))
    }
}

/// A-priori sweep cap ⌈ln(tol/Δ)/ln γ⌉ + 1 for a γ-contraction over label range Δ.
pub fn discounted_sweep_cap(gamma: f64, label_range: f64) -> usize {
    if gamma == 0.0 || label_range <= DISCOUNT_TOLERANCE {
        return 1;
    }
    let k = ((DISCOUNT_TOLERANCE / label_range).ln() / gamma.ln()).ceil();
    k.max(0.0) as usize + 1
}

/// Undiscounted Jacobi iteration from the instantaneous term until two
/// consecutive sweeps are identical.
pub fn solve(mdp: &FiniteMdp, problem: Problem<'_>) -> Result<(ValueTable, SolveReport)> {
    problem.check(mdp)?;
    let n = mdp.num_states();
    let mut v: Vec<f64> = (0..n).map(|x| problem.stage(x)).collect();
    let mut next = vec![0.0; n];
    // Each non-final sweep moves at least one state up (or down) one level.
    let bound = n * problem.distinct_count() + 1;
    let mut sweeps = 0;
    loop {
        sweep(mdp, &problem, None, &v, &mut next);
        sweeps += 1;
        let stable = next == v;
        std::mem::swap(&mut v, &mut next);
        if stable {
            return Ok((
                ValueTable(v),
                SolveReport {
                    sweeps,
                    residual: 0.0,
                    converged: true,
                },
            ));
        }
        if sweeps > bound {
            let residual = sup_change(&v, &next);
            return Ok((
                ValueTable(v),
                SolveReport {
                    sweeps,
                    residual,
                    converged: false,
                },
            ));
        }
    }
}

fn sup_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Discounted Jacobi iteration until the sweep change is at most
/// [`DISCOUNT_TOLERANCE`] or the a-priori sweep cap is reached.
pub fn solve_discounted(mdp: &FiniteMdp, problem: Problem<'_>, gamma: f64) -> Result<(ValueTable, SolveReport)> {
    check_gamma(gamma)?;
    problem.check(mdp)?;
    let n = mdp.num_states();
    let cap = discounted_sweep_cap(gamma, problem.label_range());
    let mut v: Vec<f64> = (0..n).map(|x| problem.stage(x)).collect();
    let mut next = vec![0.0; n];
    let mut sweeps = 0;
    loop {
        let change = sweep(mdp, &problem, Some(gamma), &v, &mut next);
        sweeps += 1;
        std::mem::swap(&mut v, &mut next);
        if change <= DISCOUNT_TOLERANCE || sweeps >= cap {
            return Ok((
                ValueTable(v),
                SolveReport {
                    sweeps,
                    residual: change,
                    converged: change <= DISCOUNT_TOLERANCE,
                },
            ));
        }
    }
}

pub fn solve_reach(mdp: &FiniteMdp, l: &LabelTable) -> Result<(ValueTable, SolveReport)> {
    solve(mdp, Problem::Reach(l))
}

pub fn solve_avoid(mdp: &FiniteMdp, g: &LabelTable) -> Result<(ValueTable, SolveReport)> {
    solve(mdp, Problem::Avoid(g))
}

pub fn solve_reach_avoid(mdp: &FiniteMdp, l: &LabelTable, g: &LabelTable) -> Result<(ValueTable, SolveReport)> {
    solve(mdp, Problem::ReachAvoid { reward: l, safety: g })
}

pub fn solve_reach_gamma(mdp: &FiniteMdp, l: &LabelTable, gamma: f64) -> Result<(ValueTable, SolveReport)> {
    solve_discounted(mdp, Problem::Reach(l), gamma)
}

pub fn solve_avoid_gamma(mdp: &FiniteMdp, g: &LabelTable, gamma: f64) -> Result<(ValueTable, SolveReport)> {
    solve_discounted(mdp, Problem::Avoid(g), gamma)
}

pub fn solve_reach_avoid_gamma(
    mdp: &FiniteMdp,
    l: &LabelTable,
    g: &LabelTable,
    gamma: f64,
) -> Result<(ValueTable, SolveReport)> {
    solve_discounted(mdp, Problem::ReachAvoid { reward: l, safety: g }, gamma)
}

/// `sup_x |V(x) − backup(V)(x)|` for the named recursion.
pub fn bellman_residual(mdp: &FiniteMdp, values: &ValueTable, problem: Problem<'_>, gamma: Option<f64>) -> Result<f64> {
    problem.check(mdp)?;
    values.check(mdp)?;
    if let Some(g) = gamma {
        check_gamma(g)?;
    }
    let v = values.values();
    Ok((0..mdp.num_states())
        .map(|x| (v[x] - problem.backup(x, best_successor(mdp, v, x), gamma)).abs())
        .fold(0.0, f64::max))
}

/// Per-state distribution over actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StochasticPolicy(Vec<Vec<f64>>);

impl StochasticPolicy {
    pub fn new(mdp: &FiniteMdp, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != mdp.num_states() {
            return Err(Error::InvalidStochasticPolicy {
                state: probs.len().min(mdp.num_states()),
                reason: format!("{} rows for {} states", probs.len(), mdp.num_states()),
            });
        }
        for (state, row) in probs.iter().enumerate() {
            let bad = |reason: String| Error::InvalidStochasticPolicy { state, reason };
            if row.len() != mdp.num_actions() {
                return Err(bad(format!("{} entries for {} actions", row.len(), mdp.num_actions())));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(bad("negative or non-finite probability".into()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(bad(format!("row sums to {sum}")));
            }
        }
        Ok(Self(probs))
    }

    /// Deterministic policy as one-hot rows.
    pub fn one_hot(mdp: &FiniteMdp, actions: &[usize]) -> Result<Self> {
        let rows = actions
            .iter()
            .map(|&a| {
                let mut r = vec![0.0; mdp.num_actions()];
                if let Some(p) = r.get_mut(a) {
                    *p = 1.0;
                }
                r
            })
            .collect();
        Self::new(mdp, rows)
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.0[state]
    }
}

/// Discounted stochastic reach-avoid evaluation:
/// `V(x) = (1−γ) min{ℓ̃(x), g(x)} + γ E_{u∼π}[min{max{V(f(x,u)), ℓ̃(x)}, g(x)}]`.
pub fn evaluate_srabe(
    mdp: &FiniteMdp,
    policy: &StochasticPolicy,
    reward: &LabelTable,
    safety: &LabelTable,
    gamma: f64,
) -> Result<ValueTable> {
    check_gamma(gamma)?;
    mdp.check_labels("l", reward)?;
    mdp.check_labels("g", safety)?;
    if policy.0.len() != mdp.num_states() {
        return Err(Error::InvalidStochasticPolicy {
            state: 0,
            reason: "policy sized for a different MDP".into(),
        });
    }
    let n = mdp.num_states();
    let problem = Problem::ReachAvoid { reward, safety };
    let cap = discounted_sweep_cap(gamma, problem.label_range());
    let mut v: Vec<f64> = (0..n).map(|x| problem.stage(x)).collect();
    let mut next = vec![0.0; n];
    for _ in 0..cap {
        let mut change = 0.0f64;
        for x in 0..n {
            let expected: f64 = mdp
                .successors(x)
                .iter()
                .zip(policy.row(x))
                .map(|(&t, &p)| p * problem.combine(x, v[t]))
                .sum();
            let nv = (1.0 - gamma) * problem.stage(x) + gamma * expected;
            change = change.max((nv - v[x]).abs());
            next[x] = nv;
        }
        std::mem::swap(&mut v, &mut next);
        if change <= DISCOUNT_TOLERANCE {
            break;
        }
    }
    Ok(ValueTable(v))
}
