//! Decomposition pipelines for reach-always-avoid and reach-reach.
//!
//! RAA: solve avoid on `g`, clip the reward to `ℓ̃ = min{ℓ, V_A}`, then solve
//! reach-avoid on `(ℓ̃, g)`. RR: solve reach on each target, form the
//! frontier reward `ℓ̂ = max{min{ℓ₁, V_R2}, min{ℓ₂, V_R1}}`, then solve reach
//! on `ℓ̂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, LabelTable};
use crate::solvers::{bellman_residual, solve_avoid, solve_reach, solve_reach_avoid, Problem, SolveReport, ValueTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaaReports {
    pub avoid: SolveReport,
    pub raa: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaaSolution {
    pub l: LabelTable,
    pub g: LabelTable,
    pub v_avoid: ValueTable,
    pub tilde_l: LabelTable,
    pub v_raa: ValueTable,
    pub reports: RaaReports,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrReports {
    pub r1: SolveReport,
    pub r2: SolveReport,
    pub rr: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrSolution {
    pub l1: LabelTable,
    pub l2: LabelTable,
    pub v_r1: ValueTable,
    pub v_r2: ValueTable,
    pub hat_l: LabelTable,
    pub v_rr: ValueTable,
    pub reports: RrReports,
}

/// `ℓ̃(x) = min{ℓ(x), V_A(x)}`.
pub fn tilde_reward(l: &LabelTable, v_avoid: &ValueTable) -> LabelTable {
    let v = l
        .values()
        .iter()
        .zip(v_avoid.values())
        .map(|(&a, &b)| a.min(b))
        .collect();
    LabelTable::new(v).expect("finite")
}

/// `ℓ̂(x) = max{min{ℓ₁(x), V_R2(x)}, min{ℓ₂(x), V_R1(x)}}`.
pub fn hat_reward(l1: &LabelTable, l2: &LabelTable, v_r1: &ValueTable, v_r2: &ValueTable) -> LabelTable {
    let v = (0..l1.len())
        .map(|x| {
            let first = l1.get(x).min(v_r2.get(x));
            let second = l2.get(x).min(v_r1.get(x));
            first.max(second)
        })
        .collect();
    LabelTable::new(v).expect("finite")
}

pub fn compose_raa(mdp: &FiniteMdp, l: &LabelTable, g: &LabelTable) -> Result<RaaSolution> {
    mdp.check_labels("l", l)?;
    let (v_avoid, avoid) = solve_avoid(mdp, g)?;
    let tilde_l = tilde_reward(l, &v_avoid);
    let (v_raa, raa) = solve_reach_avoid(mdp, &tilde_l, g)?;
    Ok(RaaSolution {
        l: l.clone(),
        g: g.clone(),
        v_avoid,
        tilde_l,
        v_raa,
        reports: RaaReports { avoid, raa },
    })
}

pub fn compose_rr(mdp: &FiniteMdp, l1: &LabelTable, l2: &LabelTable) -> Result<RrSolution> {
    let (v_r1, r1) = solve_reach(mdp, l1)?;
    let (v_r2, r2) = solve_reach(mdp, l2)?;
    let hat_l = hat_reward(l1, l2, &v_r1, &v_r2);
    let (v_rr, rr) = solve_reach(mdp, &hat_l)?;
    Ok(RrSolution {
        l1: l1.clone(),
        l2: l2.clone(),
        v_r1,
        v_r2,
        hat_l,
        v_rr,
        reports: RrReports { r1, r2, rr },
    })
}

/// Residual of `V(x) = min{max{max_u V(f(x,u)), ℓ̃(x)}, g(x)}`.
pub fn raa_bellman_residual(mdp: &FiniteMdp, tilde_l: &LabelTable, g: &LabelTable, v: &ValueTable) -> Result<f64> {
    bellman_residual(
        mdp,
        v,
        Problem::ReachAvoid {
            reward: tilde_l,
            safety: g,
        },
        None,
    )
}

/// Residual of the RAA recursion written with the avoid value inline:
/// `V(x) = min{g(x), max{min{ℓ(x), V_A(x)}, max_u V(f(x,u))}}`.
pub fn raa_direct_residual(
    mdp: &FiniteMdp,
    l: &LabelTable,
    g: &LabelTable,
    v_avoid: &ValueTable,
    v: &ValueTable,
) -> Result<f64> {
    mdp.check_labels("l", l)?;
    mdp.check_labels("g", g)?;
    v_avoid.check(mdp)?;
    v.check(mdp)?;
    let mut worst = 0.0f64;
    for x in 0..mdp.num_states() {
        let best = mdp
            .successors(x)
            .iter()
            .map(|&t| v.get(t))
            .fold(f64::NEG_INFINITY, f64::max);
        let rhs = g.get(x).min(l.get(x).min(v_avoid.get(x)).max(best));
        worst = worst.max((v.get(x) - rhs).abs());
    }
    Ok(worst)
}

/// Residual of `V(x) = max{max_u V(f(x,u)), ℓ̂(x)}`.
pub fn rr_bellman_residual(mdp: &FiniteMdp, hat_l: &LabelTable, v: &ValueTable) -> Result<f64> {
    bellman_residual(mdp, v, Problem::Reach(hat_l), None)
}

impl RaaSolution {
    /// Checks that every stage is a zero-residual fixed point and that ℓ̃ matches.
    pub fn validate(&self, mdp: &FiniteMdp) -> Result<()> {
        if tilde_reward(&self.l, &self.v_avoid) != self.tilde_l {
            return Err(Error::Inconsistent("tilde_l != min{l, v_avoid}".into()));
        }
        fixed(
            "avoid",
            bellman_residual(mdp, &self.v_avoid, Problem::Avoid(&self.g), None)?,
        )?;
        fixed("raa", raa_bellman_residual(mdp, &self.tilde_l, &self.g, &self.v_raa)?)
    }
}

impl RrSolution {
    pub fn validate(&self, mdp: &FiniteMdp) -> Result<()> {
        if hat_reward(&self.l1, &self.l2, &self.v_r1, &self.v_r2) != self.hat_l {
            return Err(Error::Inconsistent("hat_l does not match the sub-values".into()));
        }
        fixed(
            "reach-1",
            bellman_residual(mdp, &self.v_r1, Problem::Reach(&self.l1), None)?,
        )?;
        fixed(
            "reach-2",
            bellman_residual(mdp, &self.v_r2, Problem::Reach(&self.l2), None)?,
        )?;
        fixed("rr", rr_bellman_residual(mdp, &self.hat_l, &self.v_rr)?)
    }
}

fn fixed(problem: &str, residual: f64) -> Result<()> {
    if residual == 0.0 {
        Ok(())
    } else {
        Err(Error::NotFixedPoint {
            problem: problem.into(),
            residual,
        })
    }
}
