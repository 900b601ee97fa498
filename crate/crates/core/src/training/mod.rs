//! Learning: PPO for the neural oracle, one-step TD actor-critic for rule
//! weights, post-hoc pruning and seeded evaluation.

mod eval;
mod logic;
mod mlp;
mod neural;
mod ppo;
mod report;

pub use eval::{eval_episode_seed, evaluate, paired_t_test, EvalStats, EventCounts, PairedTest};
pub use logic::{
    actor_critic_train_logic, init_rule_weights, prune_rules, pruning_drift, td_error, LogicTrainConfig,
    Optimizer,
};
pub use mlp::{Adam, Mlp, MlpCache};
pub use neural::{state_features, NeuralPolicy, HIDDEN, RELATIVE_SCALE, SLOT_FEATURES};
pub use ppo::{k_step_advantages, ppo_objective_sample, ppo_train_neural, ppo_train_policy, PpoConfig};
pub use report::{EpisodeRecord, TrainReport, MOVING_WINDOW};

/// Exploration rate `max(exp(-episode / decay), floor)`.
pub fn epsilon_for_episode(episode: usize, decay: f64, floor: f64) -> f64 {
    (-(episode as f64) / decay).exp().max(floor).clamp(0.0, 1.0)
}

/// Training-episode seed, decorrelated from the evaluation seeds.
pub fn episode_seed(seed: u64, episode: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(episode).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
