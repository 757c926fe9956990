use super::{FiniteMdp, LabelTable};

/// SplitMix64 generator (Steele, Lea and Flood).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// `next_u64() % bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

/// Seeded random MDP with integer labels in `{-3, ..., 3}`.
///
/// Draw order: every successor in row-major `(state, action)` order, then
/// each label table in turn over states. Successor = `draw % num_states`,
/// label = `draw % 7 - 3`.
///
/// # Panics
/// If `num_states` or `num_actions` is zero.
pub fn random_mdp(
    seed: u64,
    num_states: usize,
    num_actions: usize,
    label_count: usize,
) -> (FiniteMdp, Vec<LabelTable>) {
    assert!(num_states >= 1 && num_actions >= 1, "empty MDP requested");
    let mut rng = SplitMix64::new(seed);
    let next = (0..num_states * num_actions)
        .map(|_| rng.below(num_states as u64) as usize)
        .collect();
    let mdp = FiniteMdp::from_flat(num_states, num_actions, next).expect("in range by construction");
    let labels = (0..label_count)
        .map(|_| {
            let v = (0..num_states).map(|_| rng.below(7) as f64 - 3.0).collect();
            LabelTable::new(v).expect("finite")
        })
        .collect();
    (mdp, labels)
}
