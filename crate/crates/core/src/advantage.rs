//! Discounted reachability backups, their n-step reductions, and
//! k-step / generalized advantage estimates along trajectory segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::LabelTable;
use crate::solvers::ValueTable;

/// Which value the k-step advantage subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineAt {
    /// `V(x_t)`, the usual advantage convention.
    #[default]
    SegmentStart,
    /// `V(x_{t+k})`.
    SegmentEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageConfig {
    pub gamma: f64,
    pub lambda: f64,
    #[serde(default)]
    pub baseline_at: BaselineAt,
}

impl AdvantageConfig {
    pub fn new(gamma: f64, lambda: f64, baseline_at: BaselineAt) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidDiscount(gamma));
        }
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidDiscount(lambda));
        }
        Ok(Self {
            gamma,
            lambda,
            baseline_at,
        })
    }
}

pub fn backup_r(l: f64, q: f64, gamma: f64) -> f64 {
    (1.0 - gamma) * l + gamma * l.max(q)
}

pub fn backup_a(g: f64, q: f64, gamma: f64) -> f64 {
    (1.0 - gamma) * g + gamma * g.min(q)
}

pub fn backup_ra(l: f64, g: f64, q: f64, gamma: f64) -> f64 {
    (1.0 - gamma) * l.min(g) + gamma * g.min(l.max(q))
}

/// n-fold reduction over `[ℓ₁, g₁, …, ℓₙ, gₙ, tail]`, folded from the tail.
pub fn phi_ra(args: &[f64], gamma: f64) -> Result<f64> {
    if args.len().is_multiple_of(2) {
        return Err(Error::EvenArity(args.len()));
    }
    let (tail, pairs) = args.split_last().expect("odd length is non-empty");
    Ok(pairs
        .chunks_exact(2)
        .rev()
        .fold(*tail, |q, p| backup_ra(p[0], p[1], q, gamma)))
}

/// Reach reduction over `[ℓ₁, …, ℓₙ, tail]`.
pub fn phi_r(args: &[f64], gamma: f64) -> Result<f64> {
    let (tail, stages) = args.split_last().ok_or(Error::EvenArity(0))?;
    Ok(stages.iter().rev().fold(*tail, |q, &l| backup_r(l, q, gamma)))
}

/// Avoid reduction over `[g₁, …, gₙ, tail]`; the sign-flip of the reach one.
pub fn phi_a(args: &[f64], gamma: f64) -> Result<f64> {
    let (tail, stages) = args.split_last().ok_or(Error::EvenArity(0))?;
    Ok(stages.iter().rev().fold(*tail, |q, &g| backup_a(g, q, gamma)))
}

/// A state sequence together with the labels and critic used to score it.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub states: &'a [usize],
    pub l: &'a LabelTable,
    pub g: &'a LabelTable,
    pub values: &'a ValueTable,
}

impl Segment<'_> {
    fn require(&self, k: usize) -> Result<()> {
        if self.states.len() < k + 1 {
            return Err(Error::ShortSegment {
                needed: k + 1,
                actual: self.states.len(),
            });
        }
        Ok(())
    }
}

/// `φ⁽ᵏ⁾(ℓ(x₀), g(x₀), …, V(x_k))` minus the configured baseline.
pub fn k_step_advantage(seg: &Segment<'_>, k: usize, config: &AdvantageConfig) -> Result<f64> {
    if k == 0 {
        return Err(Error::ZeroSteps);
    }
    seg.require(k)?;
    let mut args = Vec::with_capacity(2 * k + 1);
    for &x in &seg.states[..k] {
        args.push(seg.l.get(x));
        args.push(seg.g.get(x));
    }
    let tail = seg.values.get(seg.states[k]);
    args.push(tail);
    let baseline = match config.baseline_at {
        BaselineAt::SegmentStart => seg.values.get(seg.states[0]),
        BaselineAt::SegmentEnd => tail,
    };
    Ok(phi_ra(&args, config.gamma)? - baseline)
}

/// Truncated `(1/(1−λ)) Σ_{k=1..H} λᵏ A⁽ᵏ⁾`.
pub fn gae(seg: &Segment<'_>, config: &AdvantageConfig, horizon: usize) -> Result<f64> {
    seg.require(horizon)?;
    let mut total = 0.0;
    let mut weight = 1.0;
    for k in 1..=horizon {
        weight *= config.lambda;
        total += weight * k_step_advantage(seg, k, config)?;
    }
    Ok(total / (1.0 - config.lambda))
}
