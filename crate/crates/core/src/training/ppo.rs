use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Adam;
use super::neural::NeuralPolicy;
use super::report::TrainReport;
use super::{epsilon_for_episode, episode_seed};
use crate::agent::sample_action;
use crate::envs::{EnvConfig, Environment, Simulator};
use crate::error::{Error, Result};
use crate::reasoner::softmax;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Environment steps between updates.
    pub update_every: usize,
    pub total_steps: usize,
    pub entropy_coef: f64,
    /// Weight of the squared value error in the joint objective.
    pub value_coef: f64,
    /// Passes over each batch.
    pub epochs: usize,
    pub minibatch: usize,
    /// Rewards summed before bootstrapping with the critic.
    pub horizon: usize,
    /// ε = max(exp(-episode / epsilon_decay), epsilon_min).
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    /// Rewards are multiplied by this before advantages and value targets
    /// are formed; reported returns are unscaled.
    pub reward_scale: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            gamma: 0.99,
            actor_lr: 1e-3,
            critic_lr: 3e-4,
            update_every: 1000,
            total_steps: 100_000,
            entropy_coef: 0.01,
            value_coef: 0.5,
            epochs: 4,
            minibatch: 250,
            horizon: 50,
            epsilon_decay: 500.0,
            epsilon_min: 0.02,
            reward_scale: 1.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("epsilon_decay", self.epsilon_decay),
            ("reward_scale", self.reward_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be positive")));
            }
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::Invalid("clip must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Invalid("discount must lie in [0, 1]".into()));
        }
        if self.update_every == 0 || self.epochs == 0 || self.minibatch == 0 || self.horizon == 0 {
            return Err(Error::Invalid("batch sizes, epochs and horizon must be positive".into()));
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return Err(Error::Invalid("loss coefficients must be non-negative".into()));
        }
        Ok(())
    }
}

/// Clipped surrogate of one sample: min(r·Â, clip(r, 1-ε, 1+ε)·Â).
pub fn ppo_objective_sample(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// k-step advantage estimates: Σ_{i<k} γ^i r_{t+i} + γ^k V(s_{t+k}) - V(s_t),
/// truncated at episode ends. `values[t]` is V(s_t) and `last_value` the
/// value of the state after the final step (ignored when it ended an
/// episode).
pub fn k_step_advantages(
    rewards: &[f64],
    dones: &[bool],
    values: &[f64],
    last_value: f64,
    gamma: f64,
    k: usize,
) -> Vec<f64> {
    let n = rewards.len();
    (0..n)
        .map(|t| {
            let mut g = 0.0;
            let mut disc = 1.0;
            for i in 0..k {
                let idx = t + i;
                g += disc * rewards[idx];
                disc *= gamma;
                if dones[idx] {
                    break;
                }
                if i + 1 == k || idx + 1 == n {
                    g += disc * if idx + 1 < n { values[idx + 1] } else { last_value };
                    break;
                }
            }
            g - values[t]
        })
        .collect()
}

/// Per-sample actor loss `-min(r·Â, clip(r)·Â) - β·H(π)` and its gradient
/// with respect to the logits.
fn actor_sample_loss(
    logits: &[f64],
    action: usize,
    old_prob: f64,
    adv: f64,
    clip: f64,
    entropy_coef: f64,
) -> (f64, Vec<f64>) {
    let p = softmax(logits);
    let ratio = p[action] / old_prob.max(1e-300);
    let entropy: f64 = -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>();
    let loss = -ppo_objective_sample(ratio, adv, clip) - entropy_coef * entropy;
    // The clipped branch is flat in the ratio.
    let unclipped = (adv >= 0.0 && ratio < 1.0 + clip) || (adv < 0.0 && ratio > 1.0 - clip);
    let grad = (0..p.len())
        .map(|j| {
            let onehot = if j == action { 1.0 } else { 0.0 };
            let surrogate = if unclipped { -adv * ratio * (onehot - p[j]) } else { 0.0 };
            let lp = if p[j] > 0.0 { p[j].ln() } else { 0.0 };
            surrogate + entropy_coef * p[j] * (lp + entropy)
        })
        .collect();
    (loss, grad)
}

struct Batch {
    features: Vec<Vec<f64>>,
    actions: Vec<usize>,
    old_probs: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    values: Vec<f64>,
}

/// Trains the actor and critic with the clipped surrogate objective on a
/// built-in simulator.
pub fn ppo_train_neural(
    config: &EnvConfig,
    cfg: &PpoConfig,
    seed: u64,
) -> Result<(NeuralPolicy, TrainReport)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policy = NeuralPolicy::new(config, &mut rng)?;
    if cfg.total_steps == 0 {
        return Ok((policy, TrainReport::default()));
    }
    let mut env = Simulator::new(config.clone())?;
    ppo_train_policy(policy, &mut env, cfg, seed)
}

/// PPO on any environment whose states fit the policy's entity slots.
pub fn ppo_train_policy(
    mut policy: NeuralPolicy,
    env: &mut dyn Environment,
    cfg: &PpoConfig,
    seed: u64,
) -> Result<(NeuralPolicy, TrainReport)> {
    cfg.validate()?;
    let started = Instant::now();
    let mut report = TrainReport::default();
    if cfg.total_steps == 0 {
        return Ok((policy, report));
    }
    // Decorrelated from the stream that initialised the network.
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed(seed, u64::MAX));
    let mut actor_opt = Adam::new(cfg.actor_lr, policy.actor.num_params());
    let mut critic_opt = Adam::new(cfg.critic_lr, policy.critic.num_params());

    let mut episode = 0usize;
    let mut state = env.reset(episode_seed(seed, 0)).clone();
    let mut ep_return = 0.0;
    let mut losses = (0.0, 0.0, 0usize);
    let mut steps = 0usize;
    while steps < cfg.total_steps {
        let mut batch = Batch {
            features: Vec::new(),
            actions: Vec::new(),
            old_probs: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            values: Vec::new(),
        };
        while batch.actions.len() < cfg.update_every && steps < cfg.total_steps {
            let x = policy.features(&state);
            let probs = policy.probs_from_features(&x);
            let eps = epsilon_for_episode(episode, cfg.epsilon_decay, cfg.epsilon_min);
            let action = if rng.random_bool(eps) {
                rng.random_range(0..probs.len())
            } else {
                sample_action(&probs, &mut rng)
            };
            let value = policy.value_from_features(&x);
            let step = env.step(action)?;
            steps += 1;
            ep_return += step.reward;
            batch.old_probs.push(probs[action]);
            batch.features.push(x);
            batch.actions.push(action);
            batch.rewards.push(step.reward * cfg.reward_scale);
            batch.dones.push(step.done);
            batch.values.push(value);
            if step.done {
                let (a, c, n) = losses;
                let n = n.max(1) as f64;
                report.push(ep_return, steps, a / n, c / n);
                losses = (0.0, 0.0, 0);
                episode += 1;
                ep_return = 0.0;
                state = env.reset(episode_seed(seed, episode as u64)).clone();
            } else {
                state = env.state().clone();
            }
        }
        let last_value = policy.value(&state);
        let (a, c) = update(&mut policy, &batch, last_value, cfg, &mut actor_opt, &mut critic_opt, &mut rng)?;
        losses = (losses.0 + a, losses.1 + c, losses.2 + 1);
    }
    report.total_steps = steps;
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok((policy, report))
}

fn update(
    policy: &mut NeuralPolicy,
    batch: &Batch,
    last_value: f64,
    cfg: &PpoConfig,
    actor_opt: &mut Adam,
    critic_opt: &mut Adam,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let n = batch.actions.len();
    let adv = k_step_advantages(&batch.rewards, &batch.dones, &batch.values, last_value, cfg.gamma, cfg.horizon);
    let targets: Vec<f64> = adv.iter().zip(&batch.values).map(|(a, v)| a + v).collect();
    let mean = adv.iter().sum::<f64>() / n as f64;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let norm_adv: Vec<f64> = adv.iter().map(|a| (a - mean) / (std + 1e-8)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    let mut actor_total = 0.0;
    let mut critic_total = 0.0;
    let mut count = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch) {
            let mut g_actor = vec![0.0; policy.actor.num_params()];
            let mut g_critic = vec![0.0; policy.critic.num_params()];
            let m = chunk.len() as f64;
            let mut actor_loss = 0.0;
            let mut critic_loss = 0.0;
            for &i in chunk {
                let x = &batch.features[i];
                let cache = policy.actor.forward(x);
                let (loss, mut gz) = actor_sample_loss(
                    cache.output(),
                    batch.actions[i],
                    batch.old_probs[i],
                    norm_adv[i],
                    cfg.clip,
                    cfg.entropy_coef,
                );
                actor_loss += loss;
                gz.iter_mut().for_each(|g| *g /= m);
                policy.actor.backward(&cache, &gz, &mut g_actor);

                let vc = policy.critic.forward(x);
                let err = vc.output()[0] - targets[i];
                critic_loss += cfg.value_coef * err * err;
                policy.critic.backward(&vc, &[2.0 * cfg.value_coef * err / m], &mut g_critic);
            }
            actor_loss /= m;
            critic_loss /= m;
            if !actor_loss.is_finite() || !critic_loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss (actor {actor_loss}, critic {critic_loss})"
                )));
            }
            if g_actor.iter().chain(&g_critic).any(|g| !g.is_finite()) {
                return Err(Error::Training("non-finite gradient".into()));
            }
            actor_opt.step(&mut policy.actor.params, &g_actor);
            critic_opt.step(&mut policy.critic.params, &g_critic);
            actor_total += actor_loss;
            critic_total += critic_loss;
            count += 1;
        }
    }
    Ok((actor_total / count as f64, critic_total / count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_objective() {
        assert!((ppo_objective_sample(1.5, 2.0, 0.2) - 2.4).abs() < 1e-12);
        assert!((ppo_objective_sample(0.5, -1.0, 0.2) - -0.8).abs() < 1e-12);
        assert!((ppo_objective_sample(1.1, 1.0, 0.2) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let z = [0.3, -0.2, 0.9, 0.1];
        for (adv, old) in [(1.3, 0.3), (-0.7, 0.2), (2.0, 0.9), (-1.0, 0.05)] {
            let (_, g) = actor_sample_loss(&z, 2, old, adv, 0.2, 0.05);
            for j in 0..z.len() {
                let mut zp = z;
                zp[j] += 1e-6;
                let mut zm = z;
                zm[j] -= 1e-6;
                let fd = (actor_sample_loss(&zp, 2, old, adv, 0.2, 0.05).0
                    - actor_sample_loss(&zm, 2, old, adv, 0.2, 0.05).0)
                    / 2e-6;
                assert!((fd - g[j]).abs() < 1e-6, "adv {adv} old {old} logit {j}: {fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn advantages_stop_at_episode_end() {
        let adv = k_step_advantages(&[1.0, 1.0, 1.0], &[false, true, false], &[0.0, 0.0, 0.0], 5.0, 0.5, 10);
        assert_eq!(adv, vec![1.5, 1.0, 1.0 + 0.5 * 5.0]);
    }

    #[test]
    fn advantages_bootstrap_after_k_steps() {
        let adv = k_step_advantages(&[1.0, 2.0, 3.0], &[false; 3], &[0.5, 10.0, 20.0], 0.0, 1.0, 1);
        assert_eq!(adv, vec![1.0 + 10.0 - 0.5, 2.0 + 20.0 - 10.0, 3.0 + 0.0 - 20.0]);
    }
}
