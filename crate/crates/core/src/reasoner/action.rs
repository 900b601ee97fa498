use super::forward::ReasonerParams;
use super::softor::{smooth_max_raw, smooth_max_weights};
use crate::error::{Error, Result};
use crate::logic::GroundAtomTable;

/// Groups action atoms (positions within the action block of the atom
/// table) by the environment action they map to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionMap {
    groups: Vec<Vec<usize>>,
}

impl ActionMap {
    pub fn from_table(table: &GroundAtomTable) -> Result<Self> {
        let lang = table.language();
        let mut groups = vec![Vec::new(); lang.actions().len()];
        for (p, idx) in table.action_range().enumerate() {
            let atom = table.atom(idx);
            let a = lang.action_of(&atom.predicate).ok_or_else(|| {
                Error::Language(format!("action atom {atom} maps to no action"))
            })?;
            groups[a].push(p);
        }
        Ok(Self { groups })
    }

    pub fn num_actions(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, action: usize) -> &[usize] {
        &self.groups[action]
    }

    /// Aggregated value of each action: smooth maximum over its atoms, or
    /// the floor when no atom maps to it.
    pub fn values(&self, va: &[f64], params: &ReasonerParams) -> Vec<f64> {
        let mut buf = Vec::new();
        self.groups
            .iter()
            .map(|g| {
                if g.is_empty() {
                    params.action_floor
                } else {
                    buf.clear();
                    buf.extend(g.iter().map(|&p| va[p]));
                    smooth_max_raw(&buf, params.gamma_action)
                }
            })
            .collect()
    }

    pub fn distribution(&self, va: &[f64], params: &ReasonerParams) -> Vec<f64> {
        softmax_scaled(&self.values(va, params), params.temperature)
    }

    /// Gradient of the value of `action` with respect to the action atoms.
    pub fn value_gradient(&self, va: &[f64], action: usize, params: &ReasonerParams) -> Vec<f64> {
        let mut out = vec![0.0; va.len()];
        self.add_value_gradient(va, action, 1.0, params, &mut out);
        out
    }

    fn add_value_gradient(
        &self,
        va: &[f64],
        action: usize,
        scale: f64,
        params: &ReasonerParams,
        out: &mut [f64],
    ) {
        let g = &self.groups[action];
        if g.is_empty() || scale == 0.0 {
            return;
        }
        let xs: Vec<f64> = g.iter().map(|&p| va[p]).collect();
        let mut w = vec![0.0; xs.len()];
        smooth_max_weights(&xs, params.gamma_action, &mut w);
        for (&p, wi) in g.iter().zip(w) {
            out[p] += scale * wi;
        }
    }

    /// Gradient of `ln π(action)` with respect to the action atoms.
    pub fn log_prob_gradient(
        &self,
        va: &[f64],
        action: usize,
        params: &ReasonerParams,
    ) -> Vec<f64> {
        let probs = self.distribution(va, params);
        let mut out = vec![0.0; va.len()];
        for (b, &pb) in probs.iter().enumerate() {
            let coeff = (if b == action { 1.0 } else { 0.0 } - pb) / params.temperature;
            self.add_value_gradient(va, b, coeff, params, &mut out);
        }
        out
    }
}

/// Softmax with unit temperature.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    softmax_scaled(xs, 1.0)
}

pub(crate) fn softmax_scaled(xs: &[f64], temperature: f64) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| ((x - m) / temperature).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
