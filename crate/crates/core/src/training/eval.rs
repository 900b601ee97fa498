use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::agent::{check_actions, greedy_action, sample_action, Policy};
use crate::envs::{EnvConfig, Environment, Event, Simulator};
use crate::error::{Error, Result};

/// Event totals over all evaluated episodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventCounts {
    pub keys: usize,
    pub doors: usize,
    pub chests: usize,
    pub fish_eaten: usize,
    pub deaths: usize,
    pub timeouts: usize,
}

impl EventCounts {
    fn add(&mut self, e: Event) {
        match e {
            Event::KeyCollected => self.keys += 1,
            Event::DoorReached => self.doors += 1,
            Event::ChestOpened => self.chests += 1,
            Event::FishEaten => self.fish_eaten += 1,
            Event::Killed => self.deaths += 1,
            Event::TimeUp => self.timeouts += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mean: f64,
    /// Population standard deviation of the returns.
    pub std: f64,
    pub returns: Vec<f64>,
    pub events: EventCounts,
    /// Chests opened in each episode.
    pub chests_per_episode: Vec<usize>,
}

impl EvalStats {
    pub fn episodes(&self) -> usize {
        self.returns.len()
    }
}

/// Seed of the `i`-th evaluation episode. Two policies evaluated with the
/// same seed face identical initial states, which makes the comparison
/// paired.
pub fn eval_episode_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Plays `episodes` episodes and summarises their returns. Actions are the
/// most probable ones when `greedy` is set, sampled otherwise.
pub fn evaluate(
    policy: &dyn Policy,
    config: &EnvConfig,
    episodes: usize,
    seed: u64,
    greedy: bool,
) -> Result<EvalStats> {
    if episodes == 0 {
        return Err(Error::Invalid("evaluation needs at least one episode".into()));
    }
    check_actions(policy, config.env)?;
    let mut env = Simulator::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut returns = Vec::with_capacity(episodes);
    let mut events = EventCounts::default();
    let mut chests_per_episode = Vec::with_capacity(episodes);
    for i in 0..episodes {
        env.reset(eval_episode_seed(seed, i));
        let mut ret = 0.0;
        let chests_before = events.chests;
        loop {
            let probs = policy.action_probs(env.state())?;
            let a = if greedy { greedy_action(&probs) } else { sample_action(&probs, &mut rng) };
            let step = env.step(a)?;
            ret += step.reward;
            step.events.iter().for_each(|e| events.add(*e));
            if step.done {
                break;
            }
        }
        returns.push(ret);
        chests_per_episode.push(events.chests - chests_before);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(EvalStats { mean, std, returns, events, chests_per_episode })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub mean_diff: f64,
    pub t: f64,
    /// One-sided p-value for "a is larger than b".
    pub p_greater: f64,
    pub p_two_sided: f64,
}

/// Paired t-test on per-episode differences `a[i] - b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Invalid("a paired test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        let (t, p) = match mean.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => (f64::INFINITY, 0.0),
            Some(std::cmp::Ordering::Less) => (f64::NEG_INFINITY, 1.0),
            _ => (0.0, 0.5),
        };
        let two = if mean == 0.0 { 1.0 } else { 0.0 };
        return Ok(PairedTest { mean_diff: mean, t, p_greater: p, p_two_sided: two });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::Invalid(e.to_string()))?;
    let p_greater = 1.0 - dist.cdf(t);
    let p_two_sided = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(PairedTest { mean_diff: mean, t, p_greater, p_two_sided })
}
