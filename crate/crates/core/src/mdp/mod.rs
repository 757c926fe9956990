//! Finite deterministic MDPs, per-state label tables, the running-extremum
//! product construction, and the small counterexample fixtures.

mod augmented;
mod fixtures;
mod io;
mod random;

pub use augmented::{AugmentMode, AugmentedMdp, AugmentedState};
pub use fixtures::{fixture_raa_doomed_goal, fixture_raa_pinata, fixture_rr_cone, fixture_rr_river_islands};
pub use io::MdpFile;
pub use random::{random_mdp, SplitMix64};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense deterministic transition table: `next[s * num_actions + a]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMdp", into = "RawMdp")]
pub struct FiniteMdp {
    num_states: usize,
    num_actions: usize,
    next: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMdp {
    num_states: usize,
    num_actions: usize,
    next: Vec<Vec<usize>>,
}

impl TryFrom<RawMdp> for FiniteMdp {
    type Error = Error;

    fn try_from(raw: RawMdp) -> Result<Self> {
        let mdp = FiniteMdp::new(raw.next)?;
        if mdp.num_states != raw.num_states || mdp.num_actions != raw.num_actions {
            return Err(Error::InvalidMdp(format!(
                "declared {}x{} but table is {}x{}",
                raw.num_states, raw.num_actions, mdp.num_states, mdp.num_actions
            )));
        }
        Ok(mdp)
    }
}

impl From<FiniteMdp> for RawMdp {
    fn from(mdp: FiniteMdp) -> Self {
        RawMdp {
            num_states: mdp.num_states,
            num_actions: mdp.num_actions,
            next: mdp.rows().map(<[usize]>::to_vec).collect(),
        }
    }
}

impl FiniteMdp {
    /// Builds an MDP from one row of successors per state.
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        let num_states = rows.len();
        if num_states == 0 {
            return Err(Error::InvalidMdp("no states".into()));
        }
        let num_actions = rows[0].len();
        if num_actions == 0 {
            return Err(Error::InvalidMdp("no actions".into()));
        }
        let mut next = Vec::with_capacity(num_states * num_actions);
        for (s, row) in rows.into_iter().enumerate() {
            if row.len() != num_actions {
                return Err(Error::InvalidMdp(format!(
                    "state {s} has {} actions, expected {num_actions}",
                    row.len()
                )));
            }
            next.extend(row);
        }
        Self::from_flat(num_states, num_actions, next)
    }

    /// Builds an MDP from a row-major flattened successor table.
    pub fn from_flat(num_states: usize, num_actions: usize, next: Vec<usize>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidMdp("empty state or action set".into()));
        }
        if next.len() != num_states * num_actions {
            return Err(Error::InvalidMdp(format!(
                "table has {} entries, expected {}",
                next.len(),
                num_states * num_actions
            )));
        }
        if let Some((i, &t)) = next.iter().enumerate().find(|(_, &t)| t >= num_states) {
            return Err(Error::InvalidMdp(format!(
                "successor {t} of state {} action {} out of range",
                i / num_actions,
                i % num_actions
            )));
        }
        Ok(Self {
            num_states,
            num_actions,
            next,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn successor(&self, state: usize, action: usize) -> usize {
        self.next[state * self.num_actions + action]
    }

    #[inline]
    pub fn successors(&self, state: usize) -> &[usize] {
        let m = self.num_actions;
        &self.next[state * m..(state + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.next.chunks(self.num_actions)
    }

    /// Reverse adjacency: for each state, the `(predecessor, action)` pairs leading into it.
    pub fn predecessors(&self) -> Vec<Vec<(usize, usize)>> {
        let mut rev = vec![Vec::new(); self.num_states];
        for s in 0..self.num_states {
            for (a, &t) in self.successors(s).iter().enumerate() {
                rev[t].push((s, a));
            }
        }
        rev
    }

    pub fn check_state(&self, state: usize) -> Result<()> {
        if state < self.num_states {
            Ok(())
        } else {
            Err(Error::StateOutOfRange {
                state,
                num_states: self.num_states,
            })
        }
    }

    pub(crate) fn check_labels(&self, name: &str, labels: &LabelTable) -> Result<()> {
        if labels.len() == self.num_states {
            Ok(())
        } else {
            Err(Error::LabelSize {
                name: name.into(),
                expected: self.num_states,
                actual: labels.len(),
            })
        }
    }
}

/// One real label per state (ℓ, g, ℓ₁ or ℓ₂).
///
/// Entries are finite, and negative zero is normalized to `+0.0` so that
/// equal values always share a bit pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LabelTable(Vec<f64>);

impl TryFrom<Vec<f64>> for LabelTable {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        LabelTable::new(values)
    }
}

impl From<LabelTable> for Vec<f64> {
    fn from(t: LabelTable) -> Self {
        t.0
    }
}

impl LabelTable {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteLabel { index });
            }
            *v += 0.0;
        }
        Ok(Self(values))
    }

    pub fn constant(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    #[inline]
    pub fn get(&self, state: usize) -> f64 {
        self.0[state]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sorted, deduplicated image of the label.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Named label tables, keyed by `"l"`, `"g"`, `"l1"` or `"l2"`.
pub type LabelSet = BTreeMap<String, LabelTable>;

/// Names accepted in the interchange format.
pub const LABEL_NAMES: [&str; 4] = ["l", "g", "l1", "l2"];

/// Deterministic stationary policy, one action per base state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationaryPolicy(Vec<usize>);

impl StationaryPolicy {
    pub fn new(mdp: &FiniteMdp, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != mdp.num_states() {
            return Err(Error::InvalidPolicy(format!(
                "{} entries for {} states",
                actions.len(),
                mdp.num_states()
            )));
        }
        if let Some(a) = actions.iter().find(|&&a| a >= mdp.num_actions()) {
            return Err(Error::InvalidPolicy(format!("action {a} out of range")));
        }
        Ok(Self(actions))
    }

    #[inline]
    pub fn action(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }
}

/// Deterministic policy on the augmented product, stored densely over
/// `(x, y_index, z_index)` in row-major order (`x` outermost, `z` innermost).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedPolicy {
    pub y_values: Vec<f64>,
    pub z_values: Vec<f64>,
    pub actions: Vec<usize>,
}

impl AugmentedPolicy {
    pub fn new(aug: &AugmentedMdp, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != aug.num_states() {
            return Err(Error::InvalidPolicy(format!(
                "{} entries for {} augmented states",
                actions.len(),
                aug.num_states()
            )));
        }
        if let Some(a) = actions.iter().find(|&&a| a >= aug.base().num_actions()) {
            return Err(Error::InvalidPolicy(format!("action {a} out of range")));
        }
        Ok(Self {
            y_values: aug.y_values().to_vec(),
            z_values: aug.z_values().to_vec(),
            actions,
        })
    }

    /// Action at base state `x` with running extrema `(y, z)`.
    ///
    /// Returns `None` when `y` or `z` is not one of the tabulated values.
    pub fn lookup(&self, x: usize, y: f64, z: f64) -> Option<usize> {
        let yi = self.y_values.binary_search_by(|v| v.total_cmp(&y)).ok()?;
        let zi = self.z_values.binary_search_by(|v| v.total_cmp(&z)).ok()?;
        let idx = (x * self.y_values.len() + yi) * self.z_values.len() + zi;
        self.actions.get(idx).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_successor() {
        assert!(matches!(
            FiniteMdp::new(vec![vec![0, 2], vec![1, 1]]),
            Err(Error::InvalidMdp(_))
        ));
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(FiniteMdp::new(vec![vec![0, 1], vec![1]]).is_err());
        assert!(FiniteMdp::new(vec![]).is_err());
        assert!(FiniteMdp::new(vec![vec![]]).is_err());
    }

    #[test]
    fn label_table_normalizes_negative_zero() {
        let t = LabelTable::new(vec![-0.0, 1.0]).unwrap();
        assert_eq!(t.get(0).to_bits(), 0.0f64.to_bits());
        assert!(LabelTable::new(vec![f64::NAN]).is_err());
        assert!(LabelTable::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn distinct_values_sorted() {
        let t = LabelTable::new(vec![2.0, -1.0, 2.0, 0.5]).unwrap();
        assert_eq!(t.distinct_values(), vec![-1.0, 0.5, 2.0]);
    }

    #[test]
    fn predecessors_cover_every_edge() {
        let mdp = FiniteMdp::new(vec![vec![1, 2], vec![1, 1], vec![0, 2]]).unwrap();
        let rev = mdp.predecessors();
        assert_eq!(rev[1], vec![(0, 0), (1, 0), (1, 1)]);
        assert_eq!(rev[0], vec![(2, 0)]);
        let total: usize = rev.iter().map(Vec::len).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn policy_rejects_bad_actions() {
        let mdp = FiniteMdp::new(vec![vec![0, 0]]).unwrap();
        assert!(StationaryPolicy::new(&mdp, vec![2]).is_err());
        assert!(StationaryPolicy::new(&mdp, vec![0, 0]).is_err());
        assert!(StationaryPolicy::new(&mdp, vec![1]).is_ok());
    }
}
