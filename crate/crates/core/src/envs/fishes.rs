//! Top-down aquarium: eat the edible fish, avoid the dangerous one.
//!
//! In the base game the edible fish is smaller than the agent and the
//! dangerous one bigger; in the colored variant all fish share the agent's
//! size and the edible one shares its color.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Color, EnvConfig, EnvState, Entity, EntityClass, Event, Rewards, StepResult, Variant};

const WIDTH: f64 = 16.0;
const HEIGHT: f64 = 10.0;
const AGENT_SPEED: f64 = 1.0;
const FISH_SPEED: (f64, f64) = (0.15, 0.35);
const SMALL: f64 = 0.6;
const BIG: f64 = 1.6;

#[derive(Clone, Debug)]
pub(super) struct Hidden {
    /// Horizontal velocity per fish, indexed like `entities[1..]`.
    vx: Vec<f64>,
}

fn spawn(fish: &mut Entity, width: f64, rng: &mut ChaCha8Rng) -> f64 {
    let from_left = rng.random_bool(0.5);
    fish.x = if from_left { 0.0 } else { width };
    fish.y = rng.random_range(1.0..HEIGHT - 1.0);
    let speed = rng.random_range(FISH_SPEED.0..FISH_SPEED.1);
    if from_left {
        speed
    } else {
        -speed
    }
}

pub(super) fn reset(cfg: &EnvConfig, rng: &mut ChaCha8Rng) -> (EnvState, Hidden) {
    let width = WIDTH * cfg.arena_scale;
    let colored = cfg.variant == Variant::Colored;
    let mut agent = Entity::new(1, EntityClass::Agent, width / 2.0, HEIGHT / 2.0);
    agent.color = Some(if colored { Color::Green } else { Color::Blue });
    let mut edible = Entity::new(2, EntityClass::Fish, 0.0, 0.0);
    let mut danger = Entity::new(3, EntityClass::Fish, 0.0, 0.0);
    if colored {
        edible.color = Some(Color::Green);
        danger.color = Some(Color::Red);
    } else {
        edible.size = SMALL;
        danger.size = BIG;
        edible.color = Some(Color::Blue);
        danger.color = Some(Color::Blue);
    }
    let mut state = EnvState {
        entities: vec![agent, edible, danger],
        tick: 0,
        terminal: false,
        width,
        height: HEIGHT,
    };
    let mut vx = Vec::with_capacity(2);
    for i in 1..3 {
        vx.push(spawn(&mut state.entities[i], width, rng));
    }
    (state, Hidden { vx })
}

fn edible(agent: &Entity, fish: &Entity, colored: bool) -> bool {
    if colored {
        fish.color == agent.color
    } else {
        fish.size < agent.size
    }
}

pub(super) fn step(
    cfg: &EnvConfig,
    state: &mut EnvState,
    hidden: &mut Hidden,
    rng: &mut ChaCha8Rng,
    action: usize,
    rewards: &Rewards,
) -> StepResult {
    let width = state.width;
    let colored = cfg.variant == Variant::Colored;
    let mut reward = rewards.step;
    let mut events = Vec::new();
    {
        let a = &mut state.entities[0];
        match action {
            0 => a.y = (a.y + AGENT_SPEED).min(HEIGHT),
            1 => a.y = (a.y - AGENT_SPEED).max(0.0),
            2 => a.x = (a.x - AGENT_SPEED).max(0.0),
            _ => a.x = (a.x + AGENT_SPEED).min(width),
        }
    }
    for i in 1..state.entities.len() {
        let f = &mut state.entities[i];
        f.x += hidden.vx[i - 1];
        if f.x < -0.5 || f.x > width + 0.5 {
            hidden.vx[i - 1] = spawn(f, width, rng);
        }
    }
    let agent = state.entities[0].clone();
    for i in 1..state.entities.len() {
        let f = &state.entities[i];
        let dist = ((f.x - agent.x).powi(2) + (f.y - agent.y).powi(2)).sqrt();
        if dist >= 0.5 * (f.size + agent.size) {
            continue;
        }
        if edible(&agent, f, colored) {
            reward += rewards.eat;
            events.push(Event::FishEaten);
            hidden.vx[i - 1] = spawn(&mut state.entities[i], width, rng);
        } else {
            reward += rewards.eaten;
            events.push(Event::Killed);
            return StepResult { reward, done: true, events };
        }
    }
    StepResult { reward, done: false, events }
}
