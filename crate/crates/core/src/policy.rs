//! Optimal policy extraction and augmented-policy synthesis, plus
//! deterministic rollouts scored against the trajectory objectives.
//!
//! Argmax ties are broken by the lowest action index everywhere.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::compose::{RaaSolution, RrSolution};
use crate::error::{Error, Result};
use crate::mdp::{AugmentedMdp, AugmentedPolicy, FiniteMdp, LabelTable, StationaryPolicy};
use crate::objective::{Objective, Tracker};
use crate::solvers::{bellman_residual, Problem, ValueTable};

/// Default cap on the number of stationary policies enumerated.
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e6;

/// Lowest-index action maximizing `score(successor)`.
fn argmax_successor(mdp: &FiniteMdp, x: usize, score: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (a, &t) in mdp.successors(x).iter().enumerate() {
        let v = score(t);
        if v > best_val {
            best = a;
            best_val = v;
        }
    }
    best
}

fn require_fixed_point(mdp: &FiniteMdp, v: &ValueTable, problem: Problem<'_>) -> Result<()> {
    let residual = bellman_residual(mdp, v, problem, None)?;
    if residual == 0.0 {
        Ok(())
    } else {
        Err(Error::NotFixedPoint {
            problem: problem.name().into(),
            residual,
        })
    }
}

/// Greedy policy on the avoid value: `π(x) ∈ argmax_u V_A(f(x,u))`.
pub fn extract_avoid_policy(mdp: &FiniteMdp, g: &LabelTable, v_avoid: &ValueTable) -> Result<StationaryPolicy> {
    require_fixed_point(mdp, v_avoid, Problem::Avoid(g))?;
    let actions = (0..mdp.num_states())
        .map(|x| argmax_successor(mdp, x, |t| v_avoid.get(t)))
        .collect();
    StationaryPolicy::new(mdp, actions)
}

/// Steps-to-target `τ_x` for a reach value: 0 where `ℓ(x) = V(x)`, else one
/// more than the best value-preserving successor. Computed by backward BFS.
///
/// Fails if some state cannot reach its own value, which happens when `V`
/// is a fixed point above the least one.
pub fn reach_times(mdp: &FiniteMdp, l: &LabelTable, v_reach: &ValueTable) -> Result<Vec<usize>> {
    let n = mdp.num_states();
    let mut tau = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for (x, t) in tau.iter_mut().enumerate() {
        if l.get(x) == v_reach.get(x) {
            *t = 0;
            queue.push_back(x);
        }
    }
    let rev = mdp.predecessors();
    while let Some(t) = queue.pop_front() {
        for &(p, _) in &rev[t] {
            if tau[p] == usize::MAX && v_reach.get(p) == v_reach.get(t) {
                tau[p] = tau[t] + 1;
                queue.push_back(p);
            }
        }
    }
    if let Some(x) = tau.iter().position(|&t| t == usize::MAX) {
        return Err(Error::Inconsistent(format!(
            "state {x} never attains its reach value {}",
            v_reach.get(x)
        )));
    }
    Ok(tau)
}

/// Time-optimal reach policy: the lowest action that preserves the value and
/// decreases `τ` by one; at `τ = 0`, the value-greedy action.
pub fn extract_reach_policy(mdp: &FiniteMdp, l: &LabelTable, v_reach: &ValueTable) -> Result<StationaryPolicy> {
    require_fixed_point(mdp, v_reach, Problem::Reach(l))?;
    let tau = reach_times(mdp, l, v_reach)?;
    let actions = (0..mdp.num_states())
        .map(|x| {
            if tau[x] == 0 {
                return argmax_successor(mdp, x, |t| v_reach.get(t));
            }
            mdp.successors(x)
                .iter()
                .position(|&t| v_reach.get(t) == v_reach.get(x) && tau[t] + 1 == tau[x])
                .expect("BFS parent exists")
        })
        .collect();
    StationaryPolicy::new(mdp, actions)
}

/// Max-heap entry ordered by value, then by lower state index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Level {
    value: f64,
    state: usize,
}

impl Eq for Level {}

impl Ord for Level {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Onion-peeling reach-avoid extraction.
///
/// Peels level sets in decreasing order: at each round the largest one-step
/// backup `min{max{ℓ̃(x), max_u v(f(x,u))}, g(x)}` over unpeeled states is
/// taken (unpeeled successors count as unset, below every real value), every
/// unpeeled state attaining it is frozen at that level, and each such state
/// picks the argmax successor under the values frozen before this round.
///
/// Returns the policy and the peeled value table.
pub fn extract_reach_avoid_policy(
    mdp: &FiniteMdp,
    reward: &LabelTable,
    safety: &LabelTable,
) -> Result<(StationaryPolicy, ValueTable)> {
    mdp.check_labels("l", reward)?;
    mdp.check_labels("g", safety)?;
    let n = mdp.num_states();
    let rev = mdp.predecessors();

    let mut peeled: Vec<Option<f64>> = vec![None; n];
    // Best frozen successor so far and the lowest action achieving it.
    let mut best_next: Vec<Option<(f64, usize)>> = vec![None; n];
    let backup = |x: usize, best: Option<(f64, usize)>| -> f64 {
        let r = match best {
            Some((q, _)) => reward.get(x).max(q),
            None => reward.get(x),
        };
        r.min(safety.get(x))
    };
    let mut cached: Vec<f64> = (0..n).map(|x| backup(x, None)).collect();
    let mut heap: BinaryHeap<Level> = cached
        .iter()
        .enumerate()
        .map(|(state, &value)| Level { value, state })
        .collect();
    let mut actions = vec![0usize; n];
    let mut batch = Vec::new();
    let mut in_batch = vec![false; n];

    while let Some(top) = heap.pop() {
        if peeled[top.state].is_some() || cached[top.state] != top.value {
            continue;
        }
        let alpha = top.value;
        batch.clear();
        batch.push(top.state);
        in_batch[top.state] = true;
        while let Some(&next) = heap.peek() {
            if next.value != alpha {
                break;
            }
            heap.pop();
            if peeled[next.state].is_none() && cached[next.state] == alpha && !in_batch[next.state] {
                in_batch[next.state] = true;
                batch.push(next.state);
            }
        }
        for &x in &batch {
            actions[x] = best_next[x].map_or(0, |(_, a)| a);
        }
        for &x in &batch {
            peeled[x] = Some(alpha);
        }
        for &x in &batch {
            for &(p, a) in &rev[x] {
                if peeled[p].is_some() {
                    continue;
                }
                let improves = match best_next[p] {
                    None => true,
                    Some((q, b)) => alpha > q || (alpha == q && a < b),
                };
                if improves {
                    best_next[p] = Some((alpha, a));
                    let v = backup(p, best_next[p]);
                    if v != cached[p] {
                        cached[p] = v;
                        heap.push(Level { value: v, state: p });
                    }
                }
            }
        }
    }
    let values = peeled.into_iter().map(|v| v.expect("every state peeled")).collect();
    Ok((StationaryPolicy::new(mdp, actions)?, ValueTable::new(values)))
}

/// A policy on `(x, y, z)` with running extrema as real values.
pub trait AugmentedController {
    fn action(&self, x: usize, y: f64, z: f64) -> usize;

    /// Dense table of this controller over every state of `aug`.
    fn tabulate(&self, aug: &AugmentedMdp) -> Result<AugmentedPolicy> {
        let actions = (0..aug.num_states())
            .map(|idx| {
                let (x, y, z) = aug.values_of(idx);
                self.action(x, y, z)
            })
            .collect();
        AugmentedPolicy::new(aug, actions)
    }
}

impl AugmentedController for AugmentedPolicy {
    fn action(&self, x: usize, y: f64, z: f64) -> usize {
        self.lookup(x, y, z).expect("augmented coordinates are tabulated")
    }
}

/// Switching policy for reach-always-avoid: follow the reach-avoid policy on
/// `(ℓ̃, g)` while the next step keeps `min{y, z, V_A(x)}` from dropping,
/// otherwise fall back to the avoid-greedy policy.
#[derive(Debug, Clone)]
pub struct RaaSwitchingPolicy {
    pub reach_avoid: StationaryPolicy,
    pub avoid: StationaryPolicy,
    mdp: FiniteMdp,
    l: LabelTable,
    g: LabelTable,
    v_avoid: ValueTable,
}

impl AugmentedController for RaaSwitchingPolicy {
    fn action(&self, x: usize, y: f64, z: f64) -> usize {
        let a = self.reach_avoid.action(x);
        let xp = self.mdp.successor(x, a);
        let yp = y.max(self.l.get(xp));
        let zp = z.min(self.g.get(xp));
        let after = yp.min(zp).min(self.v_avoid.get(xp));
        let now = y.min(z).min(self.v_avoid.get(x));
        if after >= now {
            a
        } else {
            self.avoid.action(x)
        }
    }
}

pub fn synth_raa_augmented(mdp: &FiniteMdp, raa: &RaaSolution) -> Result<RaaSwitchingPolicy> {
    raa.validate(mdp)?;
    let (reach_avoid, peeled) = extract_reach_avoid_policy(mdp, &raa.tilde_l, &raa.g)?;
    if peeled != raa.v_raa {
        return Err(Error::Inconsistent("peeled values differ from v_raa".into()));
    }
    let avoid = extract_avoid_policy(mdp, &raa.g, &raa.v_avoid)?;
    Ok(RaaSwitchingPolicy {
        reach_avoid,
        avoid,
        mdp: mdp.clone(),
        l: raa.l.clone(),
        g: raa.g.clone(),
        v_avoid: raa.v_avoid.clone(),
    })
}

/// Switching policy for reach-reach: pursue `ℓ̂` until the larger running
/// maximum matches `V_RR(x)`, then chase whichever target is behind
/// (target 1 on ties).
#[derive(Debug, Clone)]
pub struct RrSwitchingPolicy {
    pub composed: StationaryPolicy,
    pub first: StationaryPolicy,
    pub second: StationaryPolicy,
    v_rr: ValueTable,
}

impl AugmentedController for RrSwitchingPolicy {
    fn action(&self, x: usize, y: f64, z: f64) -> usize {
        if y.max(z) < self.v_rr.get(x) {
            self.composed.action(x)
        } else if y <= z {
            self.first.action(x)
        } else {
            self.second.action(x)
        }
    }
}

pub fn synth_rr_augmented(mdp: &FiniteMdp, rr: &RrSolution) -> Result<RrSwitchingPolicy> {
    rr.validate(mdp)?;
    Ok(RrSwitchingPolicy {
        composed: extract_reach_policy(mdp, &rr.hat_l, &rr.v_rr)?,
        first: extract_reach_policy(mdp, &rr.l1, &rr.v_r1)?,
        second: extract_reach_policy(mdp, &rr.l2, &rr.v_r2)?,
        v_rr: rr.v_rr.clone(),
    })
}

/// Deterministic rollout with running-extremum traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub objective: Objective,
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// The final augmented state repeats an earlier one.
    pub cycled: bool,
}

/// Rollout driven by an arbitrary `(x, y, z) -> action` rule.
pub fn simulate_with(
    mdp: &FiniteMdp,
    tracker: &Tracker<'_>,
    start: usize,
    max_steps: usize,
    mut choose: impl FnMut(usize, f64, f64) -> usize,
) -> Result<Trajectory> {
    mdp.check_state(start)?;
    tracker.check(mdp)?;
    if max_steps == 0 {
        return Err(Error::ZeroSteps);
    }
    let (mut y, mut z) = tracker.initial(start);
    let mut x = start;
    let mut traj = Trajectory {
        objective: tracker.objective(),
        states: vec![x],
        actions: Vec::new(),
        y: vec![y],
        z: vec![z],
        cycled: false,
    };
    let mut seen = HashSet::new();
    seen.insert((x, y.to_bits(), z.to_bits()));
    for _ in 0..max_steps {
        let a = choose(x, y, z);
        if a >= mdp.num_actions() {
            return Err(Error::InvalidPolicy(format!("action {a} out of range")));
        }
        x = mdp.successor(x, a);
        (y, z) = tracker.step((y, z), x);
        traj.actions.push(a);
        traj.states.push(x);
        traj.y.push(y);
        traj.z.push(z);
        if !seen.insert((x, y.to_bits(), z.to_bits())) {
            traj.cycled = true;
            break;
        }
    }
    Ok(traj)
}

/// Rollout of a stationary policy, stopping once an augmented state repeats.
pub fn simulate_stationary(
    mdp: &FiniteMdp,
    policy: &StationaryPolicy,
    tracker: &Tracker<'_>,
    start: usize,
    max_steps: usize,
) -> Result<Trajectory> {
    if policy.actions().len() != mdp.num_states() {
        return Err(Error::InvalidPolicy("policy sized for a different MDP".into()));
    }
    simulate_with(mdp, tracker, start, max_steps, |x, _, _| policy.action(x))
}

/// Rollout of an augmented controller, stopping once an augmented state repeats.
pub fn simulate_augmented(
    mdp: &FiniteMdp,
    controller: &impl AugmentedController,
    tracker: &Tracker<'_>,
    start: usize,
    max_steps: usize,
) -> Result<Trajectory> {
    simulate_with(mdp, tracker, start, max_steps, |x, y, z| controller.action(x, y, z))
}

/// Stabilized objective value of a cycled trajectory.
pub fn realized_objective(traj: &Trajectory, objective: Objective) -> Result<f64> {
    if traj.objective != objective {
        return Err(Error::ObjectiveMismatch {
            tracked: traj.objective.to_string(),
            requested: objective.to_string(),
        });
    }
    if !traj.cycled {
        return Err(Error::NotCycled);
    }
    let y = *traj.y.last().expect("non-empty");
    let z = *traj.z.last().expect("non-empty");
    Ok(match objective {
        Objective::Reach | Objective::Avoid | Objective::ReachAvoid => y,
        Objective::ReachAlwaysAvoid | Objective::ReachReach => y.min(z),
    })
}

/// Pigeonhole bound on the number of distinct augmented states a rollout can visit.
pub fn rollout_bound(mdp: &FiniteMdp, tracker: &Tracker<'_>) -> usize {
    let mut stage = tracker.first().distinct_values();
    stage.extend(tracker.second().distinct_values());
    stage.sort_by(f64::total_cmp);
    stage.dedup();
    let k = stage.len();
    mdp.num_states() * k * k + 1
}

/// Per-state best value over all deterministic stationary policies.
pub fn best_stationary_value(mdp: &FiniteMdp, tracker: &Tracker<'_>, cap: f64) -> Result<ValueTable> {
    tracker.check(mdp)?;
    let n = mdp.num_states();
    let m = mdp.num_actions();
    let count = (m as f64).powi(n as i32);
    if count > cap {
        return Err(Error::CapExceeded { needed: count, cap });
    }
    let steps = rollout_bound(mdp, tracker);
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut digits = vec![0usize; n];
    loop {
        let policy = StationaryPolicy::new(mdp, digits.clone())?;
        for (x, slot) in best.iter_mut().enumerate() {
            let traj = simulate_stationary(mdp, &policy, tracker, x, steps)?;
            *slot = slot.max(realized_objective(&traj, tracker.objective())?);
        }
        // Mixed-radix increment.
        let mut i = 0;
        loop {
            if i == n {
                return Ok(ValueTable::new(best));
            }
            digits[i] += 1;
            if digits[i] < m {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::{compose_raa, compose_rr};
    use crate::mdp::{fixture_raa_doomed_goal, fixture_raa_pinata, fixture_rr_cone, AugmentMode};
    use crate::solvers::{solve_avoid, solve_reach, solve_reach_avoid};

    fn labels(v: &[f64]) -> LabelTable {
        LabelTable::new(v.to_vec()).unwrap()
    }

    #[test]
    fn avoid_policy_single_state_and_pinata() {
        let mdp = FiniteMdp::new(vec![vec![0, 0]]).unwrap();
        let g = labels(&[1.0]);
        let (v, _) = solve_avoid(&mdp, &g).unwrap();
        assert_eq!(extract_avoid_policy(&mdp, &g, &v).unwrap().action(0), 0);

        let (mdp, _, g) = fixture_raa_pinata();
        let (v, _) = solve_avoid(&mdp, &g).unwrap();
        assert_eq!(extract_avoid_policy(&mdp, &g, &v).unwrap().action(0), 1);
        let wrong = ValueTable::new(vec![5.0; 3]);
        assert!(matches!(
            extract_avoid_policy(&mdp, &g, &wrong),
            Err(Error::NotFixedPoint { .. })
        ));
    }

    #[test]
    fn reach_policy_chain_and_cone() {
        let mdp = FiniteMdp::new(vec![vec![1], vec![2], vec![2]]).unwrap();
        let l = labels(&[-1.0, 0.0, 2.0]);
        let (v, _) = solve_reach(&mdp, &l).unwrap();
        assert_eq!(reach_times(&mdp, &l, &v).unwrap(), vec![2, 1, 0]);
        assert_eq!(extract_reach_policy(&mdp, &l, &v).unwrap().actions(), &[0, 0, 0]);

        let (mdp, l1, _) = fixture_rr_cone();
        let (v, _) = solve_reach(&mdp, &l1).unwrap();
        assert_eq!(extract_reach_policy(&mdp, &l1, &v).unwrap().action(0), 0);
    }

    #[test]
    fn reach_policy_rejects_non_least_fixed_point() {
        // Two-state loop: V ≡ 5 is a fixed point but no state ever sees ℓ = 5.
        let mdp = FiniteMdp::new(vec![vec![1], vec![0]]).unwrap();
        let l = labels(&[0.0, 1.0]);
        let v = ValueTable::new(vec![5.0, 5.0]);
        assert_eq!(bellman_residual(&mdp, &v, Problem::Reach(&l), None).unwrap(), 0.0);
        assert!(matches!(
            extract_reach_policy(&mdp, &l, &v),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn onion_peeling_single_state() {
        let mdp = FiniteMdp::new(vec![vec![0]]).unwrap();
        let (pi, v) = extract_reach_avoid_policy(&mdp, &labels(&[2.0]), &labels(&[-1.0])).unwrap();
        assert_eq!(pi.actions(), &[0]);
        assert_eq!(v.values(), &[-1.0]);
    }

    #[test]
    fn onion_peeling_matches_solver_on_fixtures() {
        let (mdp, l, g) = fixture_raa_doomed_goal();
        let sol = compose_raa(&mdp, &l, &g).unwrap();
        let (_, v) = extract_reach_avoid_policy(&mdp, &sol.tilde_l, &g).unwrap();
        assert_eq!(v.values(), &[-1.0, -1.0, -1.0]);
        let (_, v) = extract_reach_avoid_policy(&mdp, &l, &g).unwrap();
        assert_eq!(v, solve_reach_avoid(&mdp, &l, &g).unwrap().0);
    }

    #[test]
    fn pinata_augmented_rollout() {
        let (mdp, l, g) = fixture_raa_pinata();
        let sol = compose_raa(&mdp, &l, &g).unwrap();
        let pi = synth_raa_augmented(&mdp, &sol).unwrap();
        let tracker = Tracker::reach_always_avoid(&l, &g);
        let traj = simulate_augmented(&mdp, &pi, &tracker, 0, 20).unwrap();
        assert!(traj.cycled);
        assert_eq!(realized_objective(&traj, Objective::ReachAlwaysAvoid).unwrap(), -1.0);
    }

    #[test]
    fn cone_augmented_rollout_visits_both_targets() {
        let (mdp, l1, l2) = fixture_rr_cone();
        let sol = compose_rr(&mdp, &l1, &l2).unwrap();
        let pi = synth_rr_augmented(&mdp, &sol).unwrap();
        let tracker = Tracker::reach_reach(&l1, &l2);
        let traj = simulate_augmented(&mdp, &pi, &tracker, 0, 50).unwrap();
        assert!(traj.cycled);
        let visit = |s: usize| traj.states.iter().position(|&x| x == s).unwrap();
        assert!(visit(1) <= 4 && visit(2) <= 4);
        assert_eq!(realized_objective(&traj, Objective::ReachReach).unwrap(), 1.0);

        // The tabulated form behaves identically.
        let aug = AugmentedMdp::build(&mdp, &l1, &l2, AugmentMode::Rr).unwrap();
        let table = pi.tabulate(&aug).unwrap();
        assert_eq!(simulate_augmented(&mdp, &table, &tracker, 0, 50).unwrap(), traj);
    }

    #[test]
    fn simulate_edge_cases() {
        let mdp = FiniteMdp::new(vec![vec![0]]).unwrap();
        let l = labels(&[0.5]);
        let g = labels(&[0.25]);
        let pi = StationaryPolicy::new(&mdp, vec![0]).unwrap();
        let t = Tracker::reach_always_avoid(&l, &g);
        let traj = simulate_stationary(&mdp, &pi, &t, 0, 10).unwrap();
        assert_eq!(traj.states, vec![0, 0]);
        assert!(traj.cycled);
        assert_eq!(realized_objective(&traj, Objective::ReachAlwaysAvoid).unwrap(), 0.25);
        assert!(matches!(
            simulate_stationary(&mdp, &pi, &t, 0, 0),
            Err(Error::ZeroSteps)
        ));
        assert!(matches!(
            simulate_stationary(&mdp, &pi, &t, 3, 1),
            Err(Error::StateOutOfRange { .. })
        ));
        assert!(matches!(
            realized_objective(&traj, Objective::ReachReach),
            Err(Error::ObjectiveMismatch { .. })
        ));
    }

    #[test]
    fn uncycled_trajectory_rejected() {
        let mdp = FiniteMdp::new(vec![vec![1], vec![2], vec![2]]).unwrap();
        let l = labels(&[0.0, 1.0, 2.0]);
        let pi = StationaryPolicy::new(&mdp, vec![0, 0, 0]).unwrap();
        let t = Tracker::reach(&l);
        let traj = simulate_stationary(&mdp, &pi, &t, 0, 1).unwrap();
        assert!(!traj.cycled);
        assert!(matches!(
            realized_objective(&traj, Objective::Reach),
            Err(Error::NotCycled)
        ));
    }

    #[test]
    fn pinata_forced_path() {
        let (mdp, l, g) = fixture_raa_pinata();
        let pi = StationaryPolicy::new(&mdp, vec![0, 0, 0]).unwrap();
        let traj = simulate_stationary(&mdp, &pi, &Tracker::reach_always_avoid(&l, &g), 0, 10).unwrap();
        assert_eq!(traj.states, vec![0, 1, 1]);
        assert_eq!(realized_objective(&traj, Objective::ReachAlwaysAvoid).unwrap(), -1.0);
    }

    #[test]
    fn stationary_gap_on_cone() {
        let (mdp, l1, l2) = fixture_rr_cone();
        let best = best_stationary_value(&mdp, &Tracker::reach_reach(&l1, &l2), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(best.get(0), -1.0);
        let (mdp, l, g) = fixture_raa_pinata();
        let best = best_stationary_value(&mdp, &Tracker::reach_always_avoid(&l, &g), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(best.get(0), -1.0);
    }

    #[test]
    fn stationary_cap_enforced() {
        let (mdp, l1, l2) = fixture_rr_cone();
        assert!(matches!(
            best_stationary_value(&mdp, &Tracker::reach_reach(&l1, &l2), 7.0),
            Err(Error::CapExceeded { .. })
        ));
    }
}
