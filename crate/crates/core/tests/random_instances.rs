use hjr_core::compose::{compose_raa, compose_rr};
use hjr_core::mdp::{fixture_rr_cone, random_mdp, AugmentMode, SplitMix64};
use hjr_core::oracle::{cross_check, oracle_by_policy_enumeration, oracle_value, DEFAULT_ORACLE_CAP};
use hjr_core::policy::{
    best_stationary_value, extract_avoid_policy, extract_reach_avoid_policy, extract_reach_policy, realized_objective,
    rollout_bound, simulate_augmented, simulate_stationary, synth_raa_augmented, synth_rr_augmented,
    AugmentedController, DEFAULT_ENUMERATION_CAP,
};
use hjr_core::solvers::{solve_avoid, solve_reach, solve_reach_avoid};
use hjr_core::{AugmentedMdp, FiniteMdp, LabelTable, Objective, Tracker, ValueTable};

/// `(mdp, l, g)` instances with 1..=6 states and 1..=3 actions.
fn instances(seed: u64, count: usize) -> Vec<(FiniteMdp, LabelTable, LabelTable)> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| {
            let n = 1 + rng.below(6) as usize;
            let m = 1 + rng.below(3) as usize;
            let (mdp, mut labels) = random_mdp(rng.next_u64(), n, m, 2);
            let g = labels.pop().unwrap();
            let l = labels.pop().unwrap();
            (mdp, l, g)
        })
        .collect()
}

#[test]
fn avoid_policy_realizes_avoid_value() {
    for (mdp, _, g) in instances(11, 500) {
        let (v, _) = solve_avoid(&mdp, &g).unwrap();
        let pi = extract_avoid_policy(&mdp, &g, &v).unwrap();
        let tracker = Tracker::avoid(&g);
        for x in 0..mdp.num_states() {
            let traj = simulate_stationary(&mdp, &pi, &tracker, x, 2 * mdp.num_states()).unwrap();
            assert!(traj.cycled);
            let min_g = traj.states.iter().map(|&s| g.get(s)).fold(f64::INFINITY, f64::min);
            assert_eq!(min_g, v.get(x));
        }
    }
}

#[test]
fn reach_policy_realizes_reach_value() {
    for (mdp, l, _) in instances(12, 500) {
        let (v, _) = solve_reach(&mdp, &l).unwrap();
        let pi = extract_reach_policy(&mdp, &l, &v).unwrap();
        for x in 0..mdp.num_states() {
            let mut s = x;
            let mut best = l.get(s);
            for _ in 0..mdp.num_states() {
                s = mdp.successor(s, pi.action(s));
                best = best.max(l.get(s));
            }
            assert_eq!(best, v.get(x));
        }
    }
}

#[test]
fn onion_peeling_matches_solver_and_rollouts() {
    for (mdp, l, g) in instances(13, 500) {
        let (v, _) = solve_reach_avoid(&mdp, &l, &g).unwrap();
        let (pi, peeled) = extract_reach_avoid_policy(&mdp, &l, &g).unwrap();
        assert_eq!(peeled, v);
        let tracker = Tracker::reach_avoid(&l, &g);
        for x in 0..mdp.num_states() {
            let traj = simulate_stationary(&mdp, &pi, &tracker, x, rollout_bound(&mdp, &tracker)).unwrap();
            assert_eq!(realized_objective(&traj, Objective::ReachAvoid).unwrap(), v.get(x));
        }
    }
}

#[test]
fn augmented_policies_realize_composed_values() {
    for (mdp, l, g) in instances(14, 500) {
        let raa = compose_raa(&mdp, &l, &g).unwrap();
        let pi = synth_raa_augmented(&mdp, &raa).unwrap();
        let t = Tracker::reach_always_avoid(&l, &g);
        for x in 0..mdp.num_states() {
            let traj = simulate_augmented(&mdp, &pi, &t, x, 2 * rollout_bound(&mdp, &t)).unwrap();
            assert_eq!(
                realized_objective(&traj, Objective::ReachAlwaysAvoid).unwrap(),
                raa.v_raa.get(x)
            );
        }
        let rr = compose_rr(&mdp, &l, &g).unwrap();
        let pi = synth_rr_augmented(&mdp, &rr).unwrap();
        let t = Tracker::reach_reach(&l, &g);
        for x in 0..mdp.num_states() {
            let traj = simulate_augmented(&mdp, &pi, &t, x, 2 * rollout_bound(&mdp, &t)).unwrap();
            assert_eq!(
                realized_objective(&traj, Objective::ReachReach).unwrap(),
                rr.v_rr.get(x)
            );
        }
    }
}

#[test]
fn never_hazard_switching_follows_reach_avoid_policy() {
    for (mdp, l, _) in instances(15, 200) {
        let g = LabelTable::constant(mdp.num_states(), 3.0).unwrap();
        let raa = compose_raa(&mdp, &l, &g).unwrap();
        let (v_reach, _) = solve_reach(&mdp, &l).unwrap();
        assert_eq!(raa.v_raa, v_reach);
        let controller = synth_raa_augmented(&mdp, &raa).unwrap();
        let aug = AugmentedMdp::build(&mdp, &l, &g, AugmentMode::Raa).unwrap();
        for idx in aug.reachable_from_initial() {
            let (x, y, z) = aug.values_of(idx);
            assert_eq!(controller.action(x, y, z), controller.reach_avoid.action(x));
        }
    }
}

#[test]
fn equal_targets_reduce_to_reach() {
    for (mdp, l, _) in instances(16, 200) {
        let rr = compose_rr(&mdp, &l, &l).unwrap();
        let (v, _) = solve_reach(&mdp, &l).unwrap();
        assert_eq!(rr.v_rr, v);
        let pi = synth_rr_augmented(&mdp, &rr).unwrap();
        let t = Tracker::reach_reach(&l, &l);
        for x in 0..mdp.num_states() {
            let traj = simulate_augmented(&mdp, &pi, &t, x, 2 * rollout_bound(&mdp, &t)).unwrap();
            assert_eq!(realized_objective(&traj, Objective::ReachReach).unwrap(), v.get(x));
        }
    }
}

#[test]
fn raa_never_exceeds_ra_or_components() {
    for (mdp, l, g) in instances(17, 500) {
        let raa = compose_raa(&mdp, &l, &g).unwrap();
        let (v_ra, _) = solve_reach_avoid(&mdp, &l, &g).unwrap();
        let (v_r, _) = solve_reach(&mdp, &l).unwrap();
        for x in 0..mdp.num_states() {
            assert!(raa.v_raa.get(x) <= v_ra.get(x));
            assert!(raa.v_raa.get(x) <= v_r.get(x).min(raa.v_avoid.get(x)));
        }
        let rr = compose_rr(&mdp, &l, &g).unwrap();
        for x in 0..mdp.num_states() {
            assert!(rr.v_rr.get(x) <= rr.v_r1.get(x).min(rr.v_r2.get(x)));
        }
    }
}

#[test]
fn oracles_agree_on_binary_three_state_instances() {
    let mut rng = SplitMix64::new(5);
    for _ in 0..100 {
        let (mdp, _) = random_mdp(rng.next_u64(), 3, 2, 0);
        let bin = |rng: &mut SplitMix64| {
            LabelTable::new((0..3).map(|_| if rng.below(2) == 0 { -1.0 } else { 1.0 }).collect()).unwrap()
        };
        let (a, b) = (bin(&mut rng), bin(&mut rng));
        for objective in Objective::ALL {
            let t = Tracker::new(objective, &a, &b);
            let graph = oracle_value(&mdp, &t, DEFAULT_ORACLE_CAP).unwrap();
            let enumerated = oracle_by_policy_enumeration(&mdp, &t, DEFAULT_ORACLE_CAP).unwrap();
            assert_eq!(graph, enumerated, "{objective}");
        }
    }
}

#[test]
fn oracle_matches_every_solver_pipeline() {
    for (mdp, l, g) in instances(18, 300) {
        let check =
            |t: &Tracker<'_>, v: &ValueTable| assert!(cross_check(&mdp, t, v, DEFAULT_ORACLE_CAP).unwrap().agrees());
        check(&Tracker::reach(&l), &solve_reach(&mdp, &l).unwrap().0);
        check(&Tracker::avoid(&g), &solve_avoid(&mdp, &g).unwrap().0);
        check(
            &Tracker::reach_avoid(&l, &g),
            &solve_reach_avoid(&mdp, &l, &g).unwrap().0,
        );
        check(
            &Tracker::reach_always_avoid(&l, &g),
            &compose_raa(&mdp, &l, &g).unwrap().v_raa,
        );
        check(&Tracker::reach_reach(&l, &g), &compose_rr(&mdp, &l, &g).unwrap().v_rr);
    }
}

#[test]
fn reach_oracle_is_max_over_reachable_states() {
    for (mdp, l, _) in instances(19, 300) {
        let v = oracle_value(&mdp, &Tracker::reach(&l), DEFAULT_ORACLE_CAP).unwrap();
        for x in 0..mdp.num_states() {
            let mut seen = vec![false; mdp.num_states()];
            let mut stack = vec![x];
            seen[x] = true;
            let mut best = f64::NEG_INFINITY;
            while let Some(s) = stack.pop() {
                best = best.max(l.get(s));
                for &t in mdp.successors(s) {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            assert_eq!(v.get(x), best);
        }
    }
}

#[test]
fn stationary_never_beats_augmented() {
    for (mdp, l, g) in instances(20, 300).into_iter().filter(|(m, _, _)| m.num_states() <= 4) {
        let raa = compose_raa(&mdp, &l, &g).unwrap();
        let rr = compose_rr(&mdp, &l, &g).unwrap();
        let s_raa = best_stationary_value(&mdp, &Tracker::reach_always_avoid(&l, &g), DEFAULT_ENUMERATION_CAP).unwrap();
        let s_rr = best_stationary_value(&mdp, &Tracker::reach_reach(&l, &g), DEFAULT_ENUMERATION_CAP).unwrap();
        for x in 0..mdp.num_states() {
            assert!(s_raa.get(x) <= raa.v_raa.get(x));
            assert!(s_rr.get(x) <= rr.v_rr.get(x));
        }
    }
    let (mdp, l1, l2) = fixture_rr_cone();
    let best = best_stationary_value(&mdp, &Tracker::reach_reach(&l1, &l2), DEFAULT_ENUMERATION_CAP).unwrap();
    let v_rr = compose_rr(&mdp, &l1, &l2).unwrap().v_rr;
    assert_eq!((best.get(0), v_rr.get(0)), (-1.0, 1.0));
}

#[test]
fn single_state_self_loop_all_objectives() {
    let mdp = FiniteMdp::new(vec![vec![0]]).unwrap();
    let a = LabelTable::new(vec![0.5]).unwrap();
    let b = LabelTable::new(vec![-0.25]).unwrap();
    let expected = [0.5, 0.5, -0.25, -0.25, -0.25];
    for (objective, want) in Objective::ALL.into_iter().zip(expected) {
        let t = Tracker::new(objective, &a, &b);
        assert_eq!(
            oracle_value(&mdp, &t, DEFAULT_ORACLE_CAP).unwrap().values(),
            &[want],
            "{objective}"
        );
        assert_eq!(
            oracle_by_policy_enumeration(&mdp, &t, DEFAULT_ORACLE_CAP)
                .unwrap()
                .values(),
            &[want]
        );
    }
}
