use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::agent::Policy;
use crate::envs::{Color, EntityClass, EnvConfig, EnvState};
use crate::error::{Error, Result};
use crate::reasoner::softmax;

/// Features per entity slot: present flag, class one-hot, normalised
/// position, offset from the agent, size, key/static/opened flags
/// and color one-hot.
pub const SLOT_FEATURES: usize = 1 + 6 + 2 + 2 + 1 + 3 + 6;
pub const HIDDEN: usize = 64;
/// World units per unit of the agent-relative offset features. Dividing by
/// the arena size instead squeezes short, decision-relevant distances into a
/// sliver of the input range.
pub const RELATIVE_SCALE: f64 = 4.0;

/// Fixed-order concatenation of per-slot features; slot `i` holds entity
/// `obj{i+1}` or zeros when it is absent.
pub fn state_features(state: &EnvState, slots: usize) -> Vec<f64> {
    let mut f = vec![0.0; slots * SLOT_FEATURES];
    let w = state.width.max(1e-9);
    let h = state.height.max(1e-9);
    let agent = state.agent();
    for e in &state.entities {
        let Some(slot) = e.id.strip_prefix("obj").and_then(|n| n.parse::<usize>().ok()) else {
            continue;
        };
        if slot == 0 || slot > slots {
            continue;
        }
        let base = (slot - 1) * SLOT_FEATURES;
        let v = &mut f[base..base + SLOT_FEATURES];
        v[0] = 1.0;
        let class = EntityClass::ALL.iter().position(|c| *c == e.class).unwrap();
        v[1 + class] = 1.0;
        v[7] = e.x / w;
        v[8] = e.y / h;
        v[9] = (e.x - agent.x) / RELATIVE_SCALE;
        v[10] = (e.y - agent.y) / RELATIVE_SCALE;
        v[11] = e.size;
        v[12] = e.has_key() as u8 as f64;
        v[13] = e.static_ as u8 as f64;
        v[14] = e.opened as u8 as f64;
        if let Some(c) = e.color {
            let k = Color::ALL.iter().position(|x| *x == c).unwrap();
            v[15 + k] = 1.0;
        }
    }
    f
}

/// Actor and critic perceptrons over object-centric features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralPolicy {
    pub slots: usize,
    pub actor: Mlp,
    pub critic: Mlp,
}

impl NeuralPolicy {
    pub fn new<R: Rng>(config: &EnvConfig, rng: &mut R) -> Result<Self> {
        Self::with_shape(config.num_objects(), config.env.actions().len(), rng)
    }

    /// A policy over `slots` entity slots and `actions` actions.
    pub fn with_shape<R: Rng>(slots: usize, actions: usize, rng: &mut R) -> Result<Self> {
        let input = slots * SLOT_FEATURES;
        let actor = Mlp::new(&[input, HIDDEN, actions], 0.01, rng)?;
        let critic = Mlp::new(&[input, HIDDEN, 1], 1.0, rng)?;
        Ok(Self { slots, actor, critic })
    }

    pub fn features(&self, state: &EnvState) -> Vec<f64> {
        state_features(state, self.slots)
    }

    pub fn probs_from_features(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.actor.output(x))
    }

    pub fn value_from_features(&self, x: &[f64]) -> f64 {
        self.critic.output(x)[0]
    }

    pub fn value(&self, state: &EnvState) -> f64 {
        self.value_from_features(&self.features(state))
    }

    pub fn save(&self, path: &Path, config: &EnvConfig) -> Result<()> {
        let ck = NeuralCheckpoint {
            format: NEURAL_FORMAT.into(),
            version: 1,
            config: config.clone(),
            policy: self.clone(),
        };
        let text = serde_json::to_string_pretty(&ck).map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, EnvConfig)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        let ck: NeuralCheckpoint =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format != NEURAL_FORMAT || ck.version != 1 {
            return Err(Error::Checkpoint(format!("unsupported checkpoint {} v{}", ck.format, ck.version)));
        }
        ck.policy.actor.validate()?;
        ck.policy.critic.validate()?;
        Ok((ck.policy, ck.config))
    }
}

impl Policy for NeuralPolicy {
    fn num_actions(&self) -> usize {
        self.actor.output_len()
    }

    fn action_probs(&self, state: &EnvState) -> Result<Vec<f64>> {
        Ok(self.probs_from_features(&self.features(state)))
    }
}

const NEURAL_FORMAT: &str = "neural-policy";

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NeuralCheckpoint {
    format: String,
    version: u32,
    config: EnvConfig,
    policy: NeuralPolicy,
}
