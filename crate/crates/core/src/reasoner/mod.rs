//! Differentiable forward reasoning over weighted action rules.
//!
//! One reasoning step computes, for every rule `i` and atom `j`, the body
//! products of all groundings, a soft disjunction over substitutions, a
//! weighted sum over rules for each of the M weight rows, a soft disjunction
//! over rows, and finally a soft disjunction with the previous valuation.
//! Action atoms are then aggregated per environment action and turned into a
//! distribution with a softmax.

mod action;
mod explain;
mod forward;
mod index;
mod policy;
mod softor;

pub use action::{softmax, ActionMap};
pub use explain::{attribute, explain, Attribution, Explanation, RuleFiring};
pub use forward::{Program, ReasonerParams, Trace};
pub use index::{build_index_tensor, HeadGroundings, IndexLimits, IndexTensor};
pub use policy::{LogicCheckpoint, LogicPolicy, PolicyOutput, RuleWeights};
pub use softor::{smooth_max, softand, softor, softor_unclamped};


/// Runs forward reasoning on a batch of valuations and returns the final
/// valuations.
pub fn forward_reason(
    policy: &LogicPolicy,
    batch: &[Vec<f64>],
) -> crate::Result<Vec<Vec<f64>>> {
    batch.iter().map(|v0| policy.evaluate(v0).map(|o| o.valuation)).collect()
}
