//! The five trajectory objectives and the running-extremum trackers that
//! realize them along a rollout.
//!
//! Every objective is a composite of running extrema `(y, z)` that is fixed
//! once a rollout starts repeating augmented states:
//!
//! | objective | `y`                               | `z`              | score        |
//! |-----------|-----------------------------------|------------------|--------------|
//! | R         | max ℓ                             | = y              | y            |
//! | A         | min g                             | = y              | y            |
//! | RA        | max over t of min{ℓ(xₜ), zₜ}      | min g            | y            |
//! | RAA       | max ℓ                             | min g            | min{y, z}    |
//! | RR        | max ℓ₁                            | max ℓ₂           | min{y, z}    |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, LabelTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "reach")]
    Reach,
    #[serde(rename = "avoid")]
    Avoid,
    #[serde(rename = "reach-avoid")]
    ReachAvoid,
    #[serde(rename = "raa")]
    ReachAlwaysAvoid,
    #[serde(rename = "rr")]
    ReachReach,
}

impl Objective {
    pub const ALL: [Objective; 5] = [
        Objective::Reach,
        Objective::Avoid,
        Objective::ReachAvoid,
        Objective::ReachAlwaysAvoid,
        Objective::ReachReach,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Reach => "reach",
            Objective::Avoid => "avoid",
            Objective::ReachAvoid => "reach-avoid",
            Objective::ReachAlwaysAvoid => "raa",
            Objective::ReachReach => "rr",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown objective `{s}`")))
    }
}

/// An objective bound to its label tables.
#[derive(Debug, Clone, Copy)]
pub struct Tracker<'a> {
    objective: Objective,
    first: &'a LabelTable,
    second: &'a LabelTable,
}

impl<'a> Tracker<'a> {
    pub fn reach(l: &'a LabelTable) -> Self {
        Self {
            objective: Objective::Reach,
            first: l,
            second: l,
        }
    }

    pub fn avoid(g: &'a LabelTable) -> Self {
        Self {
            objective: Objective::Avoid,
            first: g,
            second: g,
        }
    }

    pub fn reach_avoid(l: &'a LabelTable, g: &'a LabelTable) -> Self {
        Self {
            objective: Objective::ReachAvoid,
            first: l,
            second: g,
        }
    }

    pub fn reach_always_avoid(l: &'a LabelTable, g: &'a LabelTable) -> Self {
        Self {
            objective: Objective::ReachAlwaysAvoid,
            first: l,
            second: g,
        }
    }

    pub fn reach_reach(l1: &'a LabelTable, l2: &'a LabelTable) -> Self {
        Self {
            objective: Objective::ReachReach,
            first: l1,
            second: l2,
        }
    }

    /// Builds a tracker for `objective`; single-label objectives read `first` only.
    pub fn new(objective: Objective, first: &'a LabelTable, second: &'a LabelTable) -> Self {
        match objective {
            Objective::Reach => Self::reach(first),
            Objective::Avoid => Self::avoid(first),
            _ => Self {
                objective,
                first,
                second,
            },
        }
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn first(&self) -> &'a LabelTable {
        self.first
    }

    pub fn second(&self) -> &'a LabelTable {
        self.second
    }

    pub fn check(&self, mdp: &FiniteMdp) -> Result<()> {
        mdp.check_labels("first", self.first)?;
        mdp.check_labels("second", self.second)
    }

    pub fn initial(&self, x: usize) -> (f64, f64) {
        let a = self.first.get(x);
        let b = self.second.get(x);
        match self.objective {
            Objective::Reach | Objective::Avoid => (a, a),
            Objective::ReachAvoid => (a.min(b), b),
            Objective::ReachAlwaysAvoid | Objective::ReachReach => (a, b),
        }
    }

    pub fn step(&self, (y, z): (f64, f64), x_next: usize) -> (f64, f64) {
        let a = self.first.get(x_next);
        let b = self.second.get(x_next);
        match self.objective {
            Objective::Reach => {
                let y = y.max(a);
                (y, y)
            }
            Objective::Avoid => {
                let y = y.min(a);
                (y, y)
            }
            Objective::ReachAvoid => {
                let z = z.min(b);
                (y.max(a.min(z)), z)
            }
            Objective::ReachAlwaysAvoid => (y.max(a), z.min(b)),
            Objective::ReachReach => (y.max(a), z.max(b)),
        }
    }

    /// Objective value once `(y, z)` has stabilized.
    pub fn score(&self, y: f64, z: f64) -> f64 {
        match self.objective {
            Objective::Reach | Objective::Avoid | Objective::ReachAvoid => y,
            Objective::ReachAlwaysAvoid | Objective::ReachReach => y.min(z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for o in Objective::ALL {
            assert_eq!(o.name().parse::<Objective>().unwrap(), o);
            let json = serde_json::to_string(&o).unwrap();
            assert_eq!(json, format!("\"{}\"", o.name()));
        }
        assert!("ra".parse::<Objective>().is_err());
    }

    #[test]
    fn reach_avoid_stage_score_uses_prefix_min() {
        let l = LabelTable::new(vec![-1.0, 2.0, 3.0]).unwrap();
        let g = LabelTable::new(vec![5.0, 1.0, 5.0]).unwrap();
        let t = Tracker::reach_avoid(&l, &g);
        let s0 = t.initial(0);
        assert_eq!(s0, (-1.0, 5.0));
        let s1 = t.step(s0, 1);
        assert_eq!(s1, (1.0, 1.0));
        let s2 = t.step(s1, 2);
        // ℓ = 3 at step 2, but the prefix minimum of g is already 1.
        assert_eq!(s2, (1.0, 1.0));
        assert_eq!(t.score(s2.0, s2.1), 1.0);
    }
}
