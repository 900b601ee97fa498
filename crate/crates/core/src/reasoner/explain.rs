//! Gradient attribution of action choices to input atoms.

use super::policy::LogicPolicy;
use crate::error::Result;
use crate::logic::{FALSE_INDEX, TRUE_INDEX};

#[derive(Clone, Debug, PartialEq)]
pub struct Attribution {
    pub atom: usize,
    pub text: String,
    pub valuation: f64,
    pub gradient: f64,
}

/// One fired (or partially fired) rule for an action atom.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleFiring {
    pub rule: usize,
    pub rule_text: String,
    pub head: String,
    /// Strongest grounding's body atoms with their input valuations.
    pub body: Vec<(String, f64)>,
    pub body_value: f64,
    /// Largest normalised weight any row puts on the rule.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct Explanation {
    pub action: usize,
    pub action_name: String,
    pub probs: Vec<f64>,
    pub attributions: Vec<Attribution>,
    pub firings: Vec<RuleFiring>,
}

/// Gradients of the chosen action's aggregated value with respect to every
/// input atom except `⊥` and `⊤`, sorted by magnitude (ties by atom text).
pub fn attribute(policy: &LogicPolicy, v0: &[f64], action: usize) -> Result<Vec<Attribution>> {
    let grad = policy.action_value_gradient(v0, action)?;
    let table = policy.table();
    let mut out: Vec<Attribution> = (0..table.len())
        .filter(|&i| i != FALSE_INDEX && i != TRUE_INDEX)
        .map(|i| Attribution {
            atom: i,
            text: table.atom(i).to_string(),
            valuation: v0[i],
            gradient: grad[i],
        })
        .collect();
    out.sort_by(|a, b| {
        b.gradient
            .abs()
            .partial_cmp(&a.gradient.abs())
            .unwrap()
            .then_with(|| a.text.cmp(&b.text))
    });
    Ok(out)
}

/// Explains the most probable action at `v0`: its attributions and, for
/// every rule deriving an atom of that action, the strongest grounding.
pub fn explain(policy: &LogicPolicy, v0: &[f64]) -> Result<Explanation> {
    let out = policy.evaluate(v0)?;
    let action = argmax(&out.probs);
    let attributions = attribute(policy, v0, action)?;
    let table = policy.table();
    let index = policy.program().index();
    let l = index.body_len();
    let wstar = policy.weights().normalized();
    let cols = policy.weights().cols();
    let lang = table.language();
    let mut firings = Vec::new();
    for (i, rule) in policy.rules().iter().enumerate() {
        if lang.action_of(&rule.head.predicate) != Some(action) {
            continue;
        }
        let weight = (0..policy.weights().rows())
            .map(|m| wstar[m * cols + i])
            .fold(0.0, f64::max);
        for hg in index.groundings(i) {
            let best = hg
                .bodies
                .chunks(l)
                .map(|row| (row, row.iter().map(|&a| v0[a]).product::<f64>()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            if let Some((row, value)) = best {
                if value <= 0.0 {
                    continue;
                }
                firings.push(RuleFiring {
                    rule: i,
                    rule_text: rule.to_string(),
                    head: table.atom(hg.head).to_string(),
                    body: row
                        .iter()
                        .filter(|&&a| a != TRUE_INDEX)
                        .map(|&a| (table.atom(a).to_string(), v0[a]))
                        .collect(),
                    body_value: value,
                    weight,
                });
            }
        }
    }
    firings.sort_by(|a, b| (b.body_value * b.weight).partial_cmp(&(a.body_value * a.weight)).unwrap());
    Ok(Explanation {
        action,
        action_name: lang.actions()[action].clone(),
        probs: out.probs,
        attributions,
        firings,
    })
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
