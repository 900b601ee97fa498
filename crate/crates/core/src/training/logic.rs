use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Adam;
use super::neural::NeuralPolicy;
use super::report::TrainReport;
use super::{episode_seed, epsilon_for_episode};
use crate::agent::{sample_action, LogicAgent};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::reasoner::{LogicPolicy, RuleWeights};

/// How the TD-scaled gradients are applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// `θ ← θ + lr·δ·∇`, exactly as in the update equations.
    Sgd,
    /// Adam on the same ascent directions.
    #[default]
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogicTrainConfig {
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub total_steps: usize,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub optimizer: Optimizer,
    /// Accumulate gradients over `batch_size` steps before applying them.
    pub batched: bool,
    pub batch_size: usize,
    /// Keep updating the pretrained critic while the rule weights learn.
    pub update_critic: bool,
}

impl Default for LogicTrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            actor_lr: 1e-2,
            critic_lr: 3e-4,
            total_steps: 120_000,
            epsilon_decay: 500.0,
            epsilon_min: 0.02,
            optimizer: Optimizer::Adam,
            batched: false,
            batch_size: 1000,
            update_critic: true,
        }
    }
}

impl LogicTrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("epsilon_decay", self.epsilon_decay),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be positive")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Invalid("discount must lie in [0, 1]".into()));
        }
        if self.batched && self.batch_size == 0 {
            return Err(Error::Invalid("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Raw weights drawn i.i.d. from N(0, 0.1²), one row per program slot.
pub fn init_rule_weights(num_rules: usize, slots: usize, seed: u64) -> Result<RuleWeights> {
    if slots == 0 || num_rules == 0 {
        return Err(Error::Invalid("rule and slot counts must be positive".into()));
    }
    if slots > num_rules {
        return Err(Error::Invalid(format!("{slots} weight rows exceed the {num_rules} candidate rules")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RuleWeights::random_normal(slots, num_rules, 0.1, &mut rng)
}

/// One-step TD error `r + γ·v(s') - v(s)`, with `v(s') = 0` at episode end.
pub fn td_error(reward: f64, gamma: f64, v_next: f64, v: f64, done: bool) -> f64 {
    let next = if done { 0.0 } else { v_next };
    reward + gamma * next - v
}

enum Stepper {
    Sgd(f64),
    Adam(Adam),
}

impl Stepper {
    fn new(kind: Optimizer, lr: f64, n: usize) -> Self {
        match kind {
            Optimizer::Sgd => Self::Sgd(lr),
            Optimizer::Adam => Self::Adam(Adam::new(lr, n)),
        }
    }

    /// Moves `params` along the ascent direction `dir`.
    fn ascend(&mut self, params: &mut [f64], dir: &[f64]) {
        match self {
            Self::Sgd(lr) => params.iter_mut().zip(dir).for_each(|(p, d)| *p += *lr * d),
            Self::Adam(opt) => {
                let neg: Vec<f64> = dir.iter().map(|d| -d).collect();
                opt.step(params, &neg);
            }
        }
    }
}

/// Learns the rule weights of `agent` with the one-step TD actor-critic:
/// the critic supplies `δ`, the actor follows `δ·∇_W ln π(a|s)`. Actions are
/// drawn ε-greedily around the logic policy.
pub fn actor_critic_train_logic(
    agent: &mut LogicAgent,
    env: &mut dyn Environment,
    critic: &mut NeuralPolicy,
    cfg: &LogicTrainConfig,
    seed: u64,
) -> Result<TrainReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut report = TrainReport::default();
    if cfg.total_steps == 0 {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_w = agent.policy.weights().raw().len();
    let n_c = critic.critic.num_params();
    let mut actor_opt = Stepper::new(cfg.optimizer, cfg.actor_lr, n_w);
    let mut critic_opt = Stepper::new(cfg.optimizer, cfg.critic_lr, n_c);
    let batch = if cfg.batched { cfg.batch_size } else { 1 };
    let mut acc_w = vec![0.0; n_w];
    let mut acc_c = vec![0.0; n_c];
    let mut pending = 0usize;

    let mut episode = 0usize;
    let mut state = env.reset(episode_seed(seed, 0)).clone();
    let (mut ret, mut actor_loss, mut critic_loss, mut ep_steps) = (0.0, 0.0, 0.0, 0usize);
    for step in 0..cfg.total_steps {
        let v0 = agent.perceiver.perceive(&state)?;
        let probs = agent.policy.action_probs(&v0)?;
        let eps = epsilon_for_episode(episode, cfg.epsilon_decay, cfg.epsilon_min);
        let action = if rng.random_bool(eps) {
            rng.random_range(0..probs.len())
        } else {
            sample_action(&probs, &mut rng)
        };
        let result = env.step(action)?;
        let next = env.state().clone();

        let x = critic.features(&state);
        let cache = critic.critic.forward(&x);
        let v = cache.output()[0];
        let v_next = if result.done { 0.0 } else { critic.value(&next) };
        let delta = td_error(result.reward, cfg.gamma, v_next, v, result.done);
        let (logp, g_w, _) = agent.policy.grad_log_prob(&v0, action)?;
        if !delta.is_finite() || !logp.is_finite() || g_w.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite update at step {step} (td error {delta}, log-prob {logp})"
            )));
        }
        acc_w.iter_mut().zip(&g_w).for_each(|(a, g)| *a += delta * g);
        if cfg.update_critic {
            let mut g_v = vec![0.0; n_c];
            critic.critic.backward(&cache, &[1.0], &mut g_v);
            acc_c.iter_mut().zip(&g_v).for_each(|(a, g)| *a += delta * g);
        }
        pending += 1;
        if pending == batch {
            let scale = 1.0 / pending as f64;
            acc_w.iter_mut().for_each(|a| *a *= scale);
            actor_opt.ascend(agent.policy.weights_mut().raw_mut(), &acc_w);
            if cfg.update_critic {
                acc_c.iter_mut().for_each(|a| *a *= scale);
                critic_opt.ascend(&mut critic.critic.params, &acc_c);
            }
            acc_w.iter_mut().for_each(|a| *a = 0.0);
            acc_c.iter_mut().for_each(|a| *a = 0.0);
            pending = 0;
        }

        ret += result.reward;
        actor_loss += -delta * logp;
        critic_loss += delta * delta;
        ep_steps += 1;
        if result.done {
            let n = ep_steps as f64;
            report.push(ret, step + 1, actor_loss / n, critic_loss / n);
            (ret, actor_loss, critic_loss, ep_steps) = (0.0, 0.0, 0.0, 0);
            episode += 1;
            state = env.reset(episode_seed(seed, episode as u64)).clone();
        } else {
            state = next;
        }
    }
    if agent.policy.weights().raw().iter().any(|w| !w.is_finite()) {
        return Err(Error::Training("rule weights became non-finite".into()));
    }
    report.total_steps = cfg.total_steps;
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Keeps, per weight row, the `k` rules with the largest softmax mass (lower
/// index on ties) and drops rules no row selected. Surviving raw weights are
/// carried over, so relative masses within a row are preserved.
pub fn prune_rules(policy: &LogicPolicy, k: usize) -> Result<LogicPolicy> {
    if k < 1 {
        return Err(Error::Invalid("pruning needs k >= 1".into()));
    }
    let w = policy.weights();
    let (rows, cols) = (w.rows(), w.cols());
    let wstar = w.normalized();
    let mut keep = vec![false; cols];
    for m in 0..rows {
        let row = &wstar[m * cols..(m + 1) * cols];
        let mut idx: Vec<usize> = (0..cols).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &i in idx.iter().take(k) {
            keep[i] = true;
        }
    }
    let kept: Vec<usize> = (0..cols).filter(|&i| keep[i]).collect();
    let rules = kept.iter().map(|&i| policy.rules()[i].clone()).collect();
    let raw = w.raw();
    let new_raw = (0..rows).flat_map(|m| kept.iter().map(move |&i| raw[m * cols + i])).collect();
    let weights = RuleWeights::new(rows, kept.len(), new_raw)?;
    LogicPolicy::new(rules, policy.table().clone(), weights, *policy.params())
}

/// Largest total-variation distance between the action distributions of two
/// policies over the given valuations.
pub fn pruning_drift(before: &LogicPolicy, after: &LogicPolicy, valuations: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for v in valuations {
        let p = before.action_probs(v)?;
        let q = after.action_probs(v)?;
        let tv = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
        worst = worst.max(tv);
    }
    Ok(worst)
}
