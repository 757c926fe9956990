use super::{FiniteMdp, LabelTable};

fn build(rows: Vec<Vec<usize>>, a: &[f64], b: &[f64]) -> (FiniteMdp, LabelTable, LabelTable) {
    (
        FiniteMdp::new(rows).expect("fixture table is valid"),
        LabelTable::new(a.to_vec()).expect("finite"),
        LabelTable::new(b.to_vec()).expect("finite"),
    )
}

/// Two-target cone: M = 0, L = 1, R = 2; action `a` = 0, `b` = 1.
///
/// From M, `a` leads to L and `b` to R; both L and R return to M. Target 1 is
/// L and target 2 is R, so any stationary policy visits only one of them.
/// Returns `(mdp, l1, l2)`.
pub fn fixture_rr_cone() -> (FiniteMdp, LabelTable, LabelTable) {
    build(
        vec![vec![1, 2], vec![0, 0], vec![0, 0]],
        &[-1.0, 1.0, -1.0],
        &[-1.0, -1.0, 1.0],
    )
}

/// Piñata: from 0, `a` reaches the reward at 1 (which is also hazardous
/// forever after), `b` goes to the safe sink 2. Returns `(mdp, l, g)`.
pub fn fixture_raa_pinata() -> (FiniteMdp, LabelTable, LabelTable) {
    build(
        vec![vec![1, 2], vec![1, 1], vec![2, 2]],
        &[-1.0, 1.0, -1.0],
        &[1.0, -1.0, 1.0],
    )
}

/// Doomed goal: from 0, `a` loops and `b` enters the goal 1, which is then
/// forced into the hazardous sink 2. Returns `(mdp, l, g)`.
pub fn fixture_raa_doomed_goal() -> (FiniteMdp, LabelTable, LabelTable) {
    build(
        vec![vec![0, 1], vec![2, 2], vec![2, 2]],
        &[-1.0, 1.0, -1.0],
        &[1.0, 1.0, -1.0],
    )
}

/// River islands: S = 0 branches to W = 1 or E = 2 (one island each), both
/// flow into the absorbing delta D = 3. Returns `(mdp, l1, l2)`.
pub fn fixture_rr_river_islands() -> (FiniteMdp, LabelTable, LabelTable) {
    build(
        vec![vec![1, 2], vec![3, 3], vec![3, 3], vec![3, 3]],
        &[-1.0, 1.0, -1.0, -1.0],
        &[-1.0, -1.0, 1.0, -1.0],
    )
}
