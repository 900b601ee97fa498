use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::score::StateSample;
use crate::agent::{sample_action, Policy};
use crate::envs::{Environment, Perceiver};
use crate::error::Result;

/// Rolls out `oracle` (sampling from its distribution, with probability
/// `epsilon` a uniform action instead) until `n` states are cached. Episode
/// `k` is reset with seed `seed + k`.
pub fn collect_states(
    oracle: &dyn Policy,
    env: &mut dyn Environment,
    perceiver: &Perceiver,
    n: usize,
    epsilon: f64,
    seed: u64,
) -> Result<StateSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample =
        StateSample { states: Vec::new(), valuations: Vec::new(), oracle: Vec::new(), partial: false };
    let mut episode = 0u64;
    let mut state = env.reset(seed).clone();
    while sample.len() < n {
        let probs = oracle.action_probs(&state)?;
        sample.valuations.push(perceiver.perceive(&state)?);
        sample.oracle.push(probs.clone());
        sample.states.push(state.clone());
        let action = if rng.random_bool(epsilon.clamp(0.0, 1.0)) {
            rng.random_range(0..probs.len())
        } else {
            sample_action(&probs, &mut rng)
        };
        match env.step(action) {
            Ok(step) if step.done => {
                episode += 1;
                state = env.reset(seed.wrapping_add(episode)).clone();
            }
            Ok(_) => state = env.state().clone(),
            Err(_) => {
                sample.partial = true;
                break;
            }
        }
    }
    Ok(sample)
}
