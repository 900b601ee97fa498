use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envs::EnvState;
use crate::error::{Error, Result};
use crate::logic::{enumerate_substitutions, ground_atom, GroundAtomTable, Rule};
use crate::reasoner::{LogicPolicy, ReasonerParams};

/// Normalisations below this are treated as zero and the score is 0.
pub const NORMALIZATION_EPS: f64 = 1e-6;

/// States with their initial valuations and the oracle's action
/// distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSample {
    pub states: Vec<EnvState>,
    pub valuations: Vec<Vec<f64>>,
    pub oracle: Vec<Vec<f64>>,
    /// Set when collection stopped early on an environment failure.
    pub partial: bool,
}

impl StateSample {
    pub fn len(&self) -> usize {
        self.valuations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valuations.is_empty()
    }

    pub fn validate(&self, table: &GroundAtomTable) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Invalid("state sample is empty".into()));
        }
        if self.oracle.len() != self.valuations.len() {
            return Err(Error::Shape("one oracle distribution per state is required".into()));
        }
        for v in &self.valuations {
            if v.len() != table.len() {
                return Err(Error::Shape(format!(
                    "valuation has {} entries, the table {}",
                    v.len(),
                    table.len()
                )));
            }
        }
        for p in &self.oracle {
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::Invalid(format!("oracle distribution sums to {s}")));
            }
        }
        Ok(())
    }
}

/// How a single-rule policy is compared with the oracle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Dot product of the oracle distribution with the single-rule policy's
    /// action distribution.
    Distribution,
    /// Dot product of the oracle distribution with the per-action valuations
    /// the rule derives (largest action atom per action, no softmax), so
    /// states where the body is false contribute nothing.
    #[default]
    Valuation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRule {
    pub rule: Rule,
    pub score: f64,
    pub normalization: f64,
    /// The normalisation fell below [`NORMALIZATION_EPS`].
    pub guarded: bool,
}

/// Table indices of the body atoms of every grounding of `rule`.
fn ground_bodies(rule: &Rule, table: &GroundAtomTable) -> Result<Vec<Vec<usize>>> {
    let lang = table.language();
    enumerate_substitutions(rule, lang)
        .iter()
        .map(|sub| {
            rule.body
                .iter()
                .map(|a| {
                    let g = ground_atom(a, sub)?;
                    table
                        .index_of(&g)
                        .ok_or_else(|| Error::Grounding(format!("ground atom {g} is not in the table")))
                })
                .collect()
        })
        .collect()
}

/// Sum over groundings and states of the product of the body atoms'
/// initial valuations.
pub fn normalization(rule: &Rule, valuations: &[Vec<f64>], table: &GroundAtomTable) -> Result<f64> {
    let bodies = ground_bodies(rule, table)?;
    let mut total = 0.0;
    for v in valuations {
        for body in &bodies {
            total += body.iter().map(|&j| v[j]).product::<f64>();
        }
    }
    Ok(total)
}

/// Agreement of the single-rule policy `{rule}` with the oracle, summed over
/// the sample and divided by the rule's normalisation.
pub fn score_rule(
    rule: &Rule,
    sample: &StateSample,
    table: &Arc<GroundAtomTable>,
    params: &ReasonerParams,
    mode: ScoreMode,
) -> Result<ScoredRule> {
    let policy = LogicPolicy::one_rule_per_row(vec![rule.clone()], table.clone(), *params)?;
    let n_actions = policy.num_actions();
    let n = normalization(rule, &sample.valuations, table)?;
    if n < NORMALIZATION_EPS {
        return Ok(ScoredRule { rule: rule.clone(), score: 0.0, normalization: n, guarded: true });
    }
    let map = policy.action_map();
    let mut total = 0.0;
    for (v0, oracle) in sample.valuations.iter().zip(&sample.oracle) {
        if oracle.len() != n_actions {
            return Err(Error::Shape(format!(
                "oracle gives {} actions, the language {n_actions}",
                oracle.len()
            )));
        }
        let out = policy.evaluate(v0)?;
        total += match mode {
            ScoreMode::Distribution => oracle.iter().zip(&out.probs).map(|(a, b)| a * b).sum::<f64>(),
            ScoreMode::Valuation => (0..n_actions)
                .map(|a| {
                    let best = map.group(a).iter().map(|&p| out.action_atoms[p]).fold(0.0, f64::max);
                    oracle[a] * best
                })
                .sum(),
        };
    }
    Ok(ScoredRule { rule: rule.clone(), score: total / n, normalization: n, guarded: false })
}
