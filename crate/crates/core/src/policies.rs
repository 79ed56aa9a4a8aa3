//! Decision-threshold policies and fairness-budget selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Argmax,
    Ppr,
    #[serde(alias = "free")]
    PolicyFree,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Argmax, PolicyKind::Ppr, PolicyKind::PolicyFree];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Argmax => "argmax",
            Self::Ppr => "ppr",
            Self::PolicyFree => "free",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "argmax" => Ok(Self::Argmax),
            "ppr" => Ok(Self::Ppr),
            "free" | "policy-free" => Ok(Self::PolicyFree),
            other => Err(Error::Config(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Policy {
    pub kind: PolicyKind,
    pub argmax_threshold: f64,
    /// Target acceptance rate for PPR.
    pub ppr_target: f64,
    pub ppr_tolerance: f64,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Argmax,
            argmax_threshold: 0.5,
            ppr_target: 0.20,
            ppr_tolerance: 0.03,
        }
    }
}

impl Policy {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.argmax_threshold >= 0.0 && self.argmax_threshold <= 1.0) {
            return Err(Error::Config("argmax threshold outside [0, 1]".into()));
        }
        if !(self.ppr_target > 0.0 && self.ppr_target < 1.0) {
            return Err(Error::Config("PPR target outside (0, 1)".into()));
        }
        if !(self.ppr_tolerance > 0.0) {
            return Err(Error::Config("PPR tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResolution {
    pub policy: PolicyKind,
    pub tau: Option<f64>,
    pub dropped: Option<String>,
    /// Mean acceptance rate over repetitions at the chosen threshold.
    pub mean_acceptance: Option<f64>,
}

impl PolicyResolution {
    pub fn is_dropped(&self) -> bool {
        self.dropped.is_some()
    }
}

pub const DROP_REASON: &str = "acceptance outside tolerance";

/// Picks the decision threshold for `policy` from training acceptance curves.
///
/// `curves[r][t]` is the positive-prediction rate of repetition `r` at
/// `tau_grid[t]`. PPR takes the smallest τ whose mean acceptance is closest
/// to the target, and drops the model if even that misses the band.
pub fn resolve_threshold(
    policy: &Policy,
    tau_grid: &[f64],
    curves: &[Vec<f64>],
) -> Result<PolicyResolution> {
    if tau_grid.is_empty() || curves.is_empty() {
        return Err(Error::Input("no acceptance curves to resolve".into()));
    }
    if let Some(bad) = curves.iter().find(|c| c.len() != tau_grid.len()) {
        return Err(Error::Shape {
            expected: tau_grid.len(),
            got: bad.len(),
        });
    }
    let mean_at = |t: usize| curves.iter().map(|c| c[t]).sum::<f64>() / curves.len() as f64;
    let resolution = match policy.kind {
        PolicyKind::Argmax => PolicyResolution {
            policy: policy.kind,
            tau: Some(policy.argmax_threshold),
            dropped: None,
            mean_acceptance: tau_grid
                .iter()
                .position(|&t| (t - policy.argmax_threshold).abs() < 1e-12)
                .map(mean_at),
        },
        PolicyKind::Ppr => {
            let mut best: Option<(usize, f64)> = None;
            for t in 0..tau_grid.len() {
                let gap = (mean_at(t) - policy.ppr_target).abs();
                let better = match best {
                    None => true,
                    Some((b, best_gap)) => {
                        gap < best_gap || (gap == best_gap && tau_grid[t] < tau_grid[b])
                    }
                };
                if better {
                    best = Some((t, gap));
                }
            }
            let (t, _) = best.expect("grid is nonempty");
            let achieved = mean_at(t);
            if (achieved - policy.ppr_target).abs() <= policy.ppr_tolerance + 1e-12 {
                PolicyResolution {
                    policy: policy.kind,
                    tau: Some(tau_grid[t]),
                    dropped: None,
                    mean_acceptance: Some(achieved),
                }
            } else {
                PolicyResolution {
                    policy: policy.kind,
                    tau: None,
                    dropped: Some(DROP_REASON.into()),
                    mean_acceptance: Some(achieved),
                }
            }
        }
        PolicyKind::PolicyFree => PolicyResolution {
            policy: policy.kind,
            tau: None,
            dropped: None,
            mean_acceptance: None,
        },
    };
    Ok(resolution)
}

/// Training-set outcome of one (λ, repetition) cell at the policy's threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetObservation {
    pub lambda: f64,
    pub repetition: usize,
    pub train_di: f64,
    pub train_accuracy: f64,
}

pub const FOUR_FIFTHS: f64 = 0.8;

/// The λ with the highest mean training accuracy among those reaching
/// training DI above four-fifths on at least one repetition. Ties go to the
/// smaller λ; `None` when no λ qualifies.
pub fn select_fairness_budget(observations: &[BudgetObservation]) -> Option<f64> {
    let mut lambdas: Vec<f64> = observations.iter().map(|o| o.lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut best: Option<(f64, f64)> = None;
    for lambda in lambdas {
        let cell: Vec<&BudgetObservation> =
            observations.iter().filter(|o| o.lambda == lambda).collect();
        if !cell.iter().any(|o| o.train_di > FOUR_FIFTHS) {
            continue;
        }
        let accuracy = cell.iter().map(|o| o.train_accuracy).sum::<f64>() / cell.len() as f64;
        if best.is_none_or(|(_, a)| accuracy > a) {
            best = Some((lambda, accuracy));
        }
    }
    best.map(|(lambda, _)| lambda)
}
