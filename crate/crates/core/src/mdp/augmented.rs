use serde::{Deserialize, Serialize};

use super::{FiniteMdp, LabelTable};
use crate::error::{Error, Result};

/// Largest dense product (augmented states × actions) this module will materialize.
pub const MAX_DENSE_ENTRIES: usize = 1 << 26;

/// Update rule for the second running extremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMode {
    /// `y` tracks the running max of the reward, `z` the running min of the safety margin.
    Raa,
    /// `y` and `z` both track running maxima (one per target).
    Rr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AugmentedState {
    pub x: usize,
    pub y_index: usize,
    pub z_index: usize,
}

/// Product of a base MDP with the finite label images 𝒴 and 𝒵.
#[derive(Debug, Clone)]
pub struct AugmentedMdp {
    base: FiniteMdp,
    mode: AugmentMode,
    y_values: Vec<f64>,
    z_values: Vec<f64>,
    /// Index into `y_values` of the first label at each base state.
    a_index: Vec<usize>,
    b_index: Vec<usize>,
    next_aug: Vec<usize>,
}

fn index_of(sorted: &[f64], v: f64) -> usize {
    sorted
        .binary_search_by(|p| p.total_cmp(&v))
        .expect("label value present in its own image")
}

impl AugmentedMdp {
    pub fn build(mdp: &FiniteMdp, label_a: &LabelTable, label_b: &LabelTable, mode: AugmentMode) -> Result<Self> {
        mdp.check_labels("first", label_a)?;
        mdp.check_labels("second", label_b)?;
        let y_values = label_a.distinct_values();
        let z_values = label_b.distinct_values();
        let n = mdp.num_states();
        let m = mdp.num_actions();
        let (ny, nz) = (y_values.len(), z_values.len());
        let entries = n
            .checked_mul(ny)
            .and_then(|v| v.checked_mul(nz))
            .and_then(|v| v.checked_mul(m))
            .unwrap_or(usize::MAX);
        if entries > MAX_DENSE_ENTRIES {
            return Err(Error::CapExceeded {
                needed: entries as f64,
                cap: MAX_DENSE_ENTRIES as f64,
            });
        }
        let a_index: Vec<usize> = label_a.values().iter().map(|&v| index_of(&y_values, v)).collect();
        let b_index: Vec<usize> = label_b.values().iter().map(|&v| index_of(&z_values, v)).collect();

        let mut next_aug = Vec::with_capacity(entries);
        for x in 0..n {
            for yi in 0..ny {
                for zi in 0..nz {
                    for &xp in mdp.successors(x) {
                        // Indices are monotone in value, so extrema of values are extrema of indices.
                        let y2 = yi.max(a_index[xp]);
                        let z2 = match mode {
                            AugmentMode::Raa => zi.min(b_index[xp]),
                            AugmentMode::Rr => zi.max(b_index[xp]),
                        };
                        next_aug.push((xp * ny + y2) * nz + z2);
                    }
                }
            }
        }
        Ok(Self {
            base: mdp.clone(),
            mode,
            y_values,
            z_values,
            a_index,
            b_index,
            next_aug,
        })
    }

    pub fn base(&self) -> &FiniteMdp {
        &self.base
    }

    pub fn mode(&self) -> AugmentMode {
        self.mode
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y_values
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    pub fn num_states(&self) -> usize {
        self.base.num_states() * self.y_values.len() * self.z_values.len()
    }

    #[inline]
    pub fn index(&self, s: AugmentedState) -> usize {
        (s.x * self.y_values.len() + s.y_index) * self.z_values.len() + s.z_index
    }

    #[inline]
    pub fn decode(&self, idx: usize) -> AugmentedState {
        let nz = self.z_values.len();
        let ny = self.y_values.len();
        AugmentedState {
            x: idx / (ny * nz),
            y_index: (idx / nz) % ny,
            z_index: idx % nz,
        }
    }

    /// `(x, y, z)` values of an augmented index.
    pub fn values_of(&self, idx: usize) -> (usize, f64, f64) {
        let s = self.decode(idx);
        (s.x, self.y_values[s.y_index], self.z_values[s.z_index])
    }

    /// Initialization `(x, label_a(x), label_b(x))`.
    pub fn initial(&self, x: usize) -> usize {
        self.index(AugmentedState {
            x,
            y_index: self.a_index[x],
            z_index: self.b_index[x],
        })
    }

    #[inline]
    pub fn successor(&self, idx: usize, action: usize) -> usize {
        self.next_aug[idx * self.base.num_actions() + action]
    }

    /// Indices reachable under any action sequence from the given augmented states, ascending.
    pub fn reachable_from(&self, starts: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut stack: Vec<usize> = Vec::new();
        for s in starts {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(s) = stack.pop() {
            for a in 0..self.base.num_actions() {
                let t = self.successor(s, a);
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    /// Augmented states reachable from the initializations of all base states.
    pub fn reachable_from_initial(&self) -> Vec<usize> {
        self.reachable_from((0..self.base.num_states()).map(|x| self.initial(x)))
    }
}
