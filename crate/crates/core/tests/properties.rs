use proptest::prelude::*;

use hjr_core::advantage::{backup_ra, phi_a, phi_r, phi_ra};
use hjr_core::compose::{compose_raa, compose_rr};
use hjr_core::mdp::MdpFile;
use hjr_core::oracle::{oracle_value, DEFAULT_ORACLE_CAP};
use hjr_core::solvers::{bellman_residual, solve_reach_avoid_gamma, Problem, DISCOUNT_TOLERANCE};
use hjr_core::{FiniteMdp, LabelSet, LabelTable, Tracker};

/// Small MDP with two quarter-integer label tables.
fn instance() -> impl Strategy<Value = (FiniteMdp, LabelTable, LabelTable)> {
    (1usize..=5, 1usize..=3).prop_flat_map(|(n, m)| {
        let label = prop::collection::vec((-12i32..=12).prop_map(|k| k as f64 / 4.0), n);
        (prop::collection::vec(0..n, n * m), label.clone(), label).prop_map(move |(next, a, b)| {
            (
                FiniteMdp::from_flat(n, m, next).unwrap(),
                LabelTable::new(a).unwrap(),
                LabelTable::new(b).unwrap(),
            )
        })
    })
}

fn scaled(t: &LabelTable, k: f64) -> LabelTable {
    LabelTable::new(t.values().iter().map(|v| v * k).collect()).unwrap()
}

proptest! {
    #[test]
    fn raa_and_rr_match_oracle((mdp, a, b) in instance()) {
        let raa = compose_raa(&mdp, &a, &b).unwrap();
        let rr = compose_rr(&mdp, &a, &b).unwrap();
        prop_assert_eq!(oracle_value(&mdp, &Tracker::reach_always_avoid(&a, &b), DEFAULT_ORACLE_CAP).unwrap(), raa.v_raa);
        prop_assert_eq!(oracle_value(&mdp, &Tracker::reach_reach(&a, &b), DEFAULT_ORACLE_CAP).unwrap(), rr.v_rr);
    }

    #[test]
    fn values_are_label_values((mdp, a, b) in instance()) {
        let raa = compose_raa(&mdp, &a, &b).unwrap();
        let rr = compose_rr(&mdp, &a, &b).unwrap();
        let members: Vec<f64> = a.values().iter().chain(b.values()).copied().collect();
        for v in raa.v_raa.values().iter().chain(rr.v_rr.values()) {
            prop_assert!(members.contains(v));
        }
    }

    #[test]
    fn raising_reward_never_lowers_raa((mdp, a, b) in instance(), bump in 0usize..5) {
        let mut raised = a.values().to_vec();
        let i = bump % raised.len();
        raised[i] += 1.0;
        let raised = LabelTable::new(raised).unwrap();
        let before = compose_raa(&mdp, &a, &b).unwrap().v_raa;
        let after = compose_raa(&mdp, &raised, &b).unwrap().v_raa;
        for x in 0..mdp.num_states() {
            prop_assert!(after.get(x) >= before.get(x));
        }
    }

    #[test]
    fn positive_scaling_commutes((mdp, a, b) in instance()) {
        let v = compose_rr(&mdp, &a, &b).unwrap().v_rr;
        let w = compose_rr(&mdp, &scaled(&a, 2.0), &scaled(&b, 2.0)).unwrap().v_rr;
        for x in 0..mdp.num_states() {
            prop_assert_eq!(w.get(x), 2.0 * v.get(x));
        }
    }

    #[test]
    fn rr_is_symmetric((mdp, a, b) in instance()) {
        prop_assert_eq!(compose_rr(&mdp, &a, &b).unwrap().v_rr, compose_rr(&mdp, &b, &a).unwrap().v_rr);
    }

    #[test]
    fn discounted_solve_reaches_tolerance((mdp, a, b) in instance(), gamma in 0.0f64..0.99) {
        let (v, rep) = solve_reach_avoid_gamma(&mdp, &a, &b, gamma).unwrap();
        prop_assert!(rep.converged);
        let problem = Problem::ReachAvoid { reward: &a, safety: &b };
        prop_assert!(bellman_residual(&mdp, &v, problem, Some(gamma)).unwrap() <= DISCOUNT_TOLERANCE);
        let lo = a.min().min(b.min());
        let hi = a.max().max(b.max());
        prop_assert!(v.values().iter().all(|&x| lo - 1e-9 <= x && x <= hi + 1e-9));
    }

    #[test]
    fn mdp_file_round_trip((mdp, a, b) in instance()) {
        let labels: LabelSet = [("l".to_string(), a), ("g".to_string(), b)].into();
        let text = MdpFile::from_parts(&mdp, &labels).to_json();
        let (back, back_labels) = MdpFile::parse(&text).unwrap().into_parts().unwrap();
        prop_assert_eq!(back, mdp);
        prop_assert_eq!(back_labels, labels);
    }

    #[test]
    fn phi_recursion(args in prop::collection::vec(-5.0f64..5.0, 2..=6).prop_flat_map(|head| {
        (Just(head), prop::collection::vec(-5.0f64..5.0, 1..=6))
    }), gamma in 0.0f64..0.999) {
        let (pairs, tails) = args;
        let mut seq: Vec<f64> = pairs.iter().zip(&tails).flat_map(|(&l, &g)| [l, g]).collect();
        seq.push(tails[0]);
        let n = (seq.len() - 1) / 2;
        let full = phi_ra(&seq, gamma).unwrap();
        if n >= 2 {
            let inner = phi_ra(&seq[2..], gamma).unwrap();
            prop_assert_eq!(full, backup_ra(seq[0], seq[1], inner, gamma));
        }
        prop_assert!(phi_ra(&seq[..seq.len() - 1], gamma).is_err());
    }

    #[test]
    fn phi_specializations(ls in prop::collection::vec(-5.0f64..5.0, 1..=6), tail in -5.0f64..5.0, gamma in 0.0f64..0.999) {
        // A safety value above every other argument reduces to the reach form.
        let mut seq: Vec<f64> = ls.iter().flat_map(|&l| [l, 100.0]).collect();
        seq.push(tail);
        let mut reach = ls.clone();
        reach.push(tail);
        prop_assert_eq!(phi_ra(&seq, gamma).unwrap(), phi_r(&reach, gamma).unwrap());
        let flipped: Vec<f64> = reach.iter().map(|v| -v).collect();
        prop_assert!((phi_a(&reach, gamma).unwrap() + phi_r(&flipped, gamma).unwrap()).abs() < 1e-12);
    }
}
