//! Policies over environment states: random, scripted and logic agents.

use std::sync::Arc;

use rand::Rng;

use crate::envs::{EnvKind, EnvState, EntityClass, EvaluatorSet, Perceiver};
use crate::error::{Error, Result};
use crate::logic::GroundAtomTable;
use crate::reasoner::LogicPolicy;

/// Anything that maps a state to a distribution over the actual actions.
pub trait Policy {
    fn num_actions(&self) -> usize;
    fn action_probs(&self, state: &EnvState) -> Result<Vec<f64>>;
}

/// Uniform over all actions.
#[derive(Clone, Copy, Debug)]
pub struct RandomPolicy {
    pub actions: usize,
}

impl RandomPolicy {
    pub fn for_env(kind: EnvKind) -> Self {
        Self { actions: kind.actions().len() }
    }
}

impl Policy for RandomPolicy {
    fn num_actions(&self) -> usize {
        self.actions
    }

    fn action_probs(&self, _state: &EnvState) -> Result<Vec<f64>> {
        Ok(vec![1.0 / self.actions as f64; self.actions])
    }
}

/// Hand-coded GetOut player: walk to the key while keyless, then to the door,
/// and jump whenever an enemy is within `jump_distance`. The chosen action
/// gets `confidence`, the rest is spread evenly.
#[derive(Clone, Copy, Debug)]
pub struct ScriptedGetOut {
    pub confidence: f64,
    pub jump_distance: f64,
}

impl Default for ScriptedGetOut {
    fn default() -> Self {
        Self { confidence: 0.9, jump_distance: 2.0 }
    }
}

impl ScriptedGetOut {
    /// Index into `[left, right, jump, idle]`.
    pub fn choose(&self, state: &EnvState) -> usize {
        let agent = state.agent();
        let enemy_near = state
            .entities
            .iter()
            .filter(|e| e.class == EntityClass::Enemy)
            .any(|e| (e.x - agent.x).abs() < self.jump_distance);
        if enemy_near {
            return 2;
        }
        let target = if agent.has_key() { EntityClass::Door } else { EntityClass::Key };
        match state.entities.iter().find(|e| e.class == target) {
            Some(t) if t.x > agent.x => 1,
            Some(_) => 0,
            None => 3,
        }
    }
}

impl Policy for ScriptedGetOut {
    fn num_actions(&self) -> usize {
        4
    }

    fn action_probs(&self, state: &EnvState) -> Result<Vec<f64>> {
        let mut p = vec![(1.0 - self.confidence) / 3.0; 4];
        p[self.choose(state)] = self.confidence;
        Ok(p)
    }
}

/// A logic policy paired with the perception that feeds it.
#[derive(Clone, Debug)]
pub struct LogicAgent {
    pub policy: LogicPolicy,
    pub perceiver: Perceiver,
}

impl LogicAgent {
    pub fn new(policy: LogicPolicy, evals: &EvaluatorSet) -> Result<Self> {
        let perceiver = Perceiver::new(policy.table().clone(), evals)?;
        Ok(Self { policy, perceiver })
    }

    pub fn table(&self) -> &Arc<GroundAtomTable> {
        self.policy.table()
    }
}

impl Policy for LogicAgent {
    fn num_actions(&self) -> usize {
        self.policy.num_actions()
    }

    fn action_probs(&self, state: &EnvState) -> Result<Vec<f64>> {
        self.policy.action_probs(&self.perceiver.perceive(state)?)
    }
}

/// Draws an index from a probability vector.
pub fn sample_action<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Index of the largest probability, lowest index on ties.
pub fn greedy_action(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_actions(policy: &dyn Policy, kind: EnvKind) -> Result<()> {
    let n = kind.actions().len();
    if policy.num_actions() != n {
        return Err(Error::Invalid(format!(
            "policy has {} actions, {kind} has {n}",
            policy.num_actions()
        )));
    }
    Ok(())
}
