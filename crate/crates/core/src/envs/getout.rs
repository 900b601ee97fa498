//! Side-view platform game: collect the key, then reach the door, while
//! jumping over patrolling enemies.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EnvConfig, EnvState, Entity, EntityClass, Event, Rewards, StepResult, Variant};

const WIDTH: f64 = 20.0;
const HEIGHT: f64 = 5.0;
const SPEED: f64 = 0.5;
const JUMP_TICKS: usize = 12;
const JUMP_HEIGHT: f64 = 3.0;
const ENEMY_SPEED: f64 = 0.2;
const FLIP_PROB: f64 = 0.02;
const CONTACT: f64 = 0.6;
/// The agent clears an enemy while its feet are at least this high.
const CLEARANCE: f64 = 1.0;
const PICKUP_HEIGHT: f64 = 3.5;

#[derive(Clone, Debug)]
pub(super) struct Hidden {
    jump_tick: Option<usize>,
    carry: f64,
    facing: f64,
    enemy_velocity: Vec<f64>,
}

/// Draws an x position at least `gap` away from every `(position, gap)` pair.
fn place(rng: &mut ChaCha8Rng, width: f64, avoid: &[(f64, f64)]) -> f64 {
    for _ in 0..1000 {
        let x = rng.random_range(1.0..width - 1.0);
        if avoid.iter().all(|(t, gap)| (t - x).abs() >= *gap) {
            return x;
        }
    }
    rng.random_range(1.0..width - 1.0)
}

pub(super) fn reset(cfg: &EnvConfig, rng: &mut ChaCha8Rng) -> (EnvState, Hidden) {
    let plus = cfg.variant == Variant::Plus;
    let width = WIDTH * cfg.arena_scale * if plus { 2.0 } else { 1.0 };
    let agent_x = place(rng, width, &[]);
    let key_x = place(rng, width, &[(agent_x, 3.0)]);
    let door_x = place(rng, width, &[(agent_x, 3.0), (key_x, 3.0)]);

    let mut entities = Vec::new();
    entities.push(Entity::new(1, EntityClass::Agent, agent_x, 0.0));
    let mut key = Entity::new(2, EntityClass::Key, key_x, 0.0);
    key.pair = Some(0);
    entities.push(key);
    let mut door = Entity::new(3, EntityClass::Door, door_x, 0.0);
    door.pair = Some(0);
    entities.push(door);

    let n_enemies = if plus { 5 } else { 1 };
    let mut enemy_velocity = Vec::new();
    for i in 0..n_enemies {
        let is_static = plus && i >= 3;
        let near = if is_static { 3.0 } else { 1.5 };
        let x = place(rng, width, &[(agent_x, 5.0), (key_x, near), (door_x, near)]);
        let mut e = Entity::new(4 + i, EntityClass::Enemy, x, 0.0);
        e.static_ = is_static;
        entities.push(e);
        let v = if is_static {
            0.0
        } else if rng.random_bool(0.5) {
            ENEMY_SPEED
        } else {
            -ENEMY_SPEED
        };
        enemy_velocity.push(v);
    }
    let facing = if key_x >= agent_x { 1.0 } else { -1.0 };
    let state = EnvState { entities, tick: 0, terminal: false, width, height: HEIGHT };
    (state, Hidden { jump_tick: None, carry: 0.0, facing, enemy_velocity })
}

pub(super) fn step(
    state: &mut EnvState,
    hidden: &mut Hidden,
    rng: &mut ChaCha8Rng,
    action: usize,
    rewards: &Rewards,
) -> StepResult {
    let width = state.width;
    let mut reward = rewards.step;
    let mut events = Vec::new();

    {
        let agent = state.agent_mut();
        match hidden.jump_tick {
            Some(t) => {
                let t = t + 1;
                agent.x = (agent.x + hidden.carry).clamp(0.0, width);
                if t >= JUMP_TICKS {
                    agent.y = 0.0;
                    hidden.jump_tick = None;
                } else {
                    let f = t as f64 / JUMP_TICKS as f64;
                    agent.y = 4.0 * JUMP_HEIGHT * f * (1.0 - f);
                    hidden.jump_tick = Some(t);
                }
            }
            None => match action {
                0 => {
                    agent.x = (agent.x - SPEED).max(0.0);
                    hidden.facing = -1.0;
                }
                1 => {
                    agent.x = (agent.x + SPEED).min(width);
                    hidden.facing = 1.0;
                }
                2 => {
                    hidden.jump_tick = Some(1);
                    hidden.carry = hidden.facing * SPEED;
                    agent.x = (agent.x + hidden.carry).clamp(0.0, width);
                    let f = 1.0 / JUMP_TICKS as f64;
                    agent.y = 4.0 * JUMP_HEIGHT * f * (1.0 - f);
                }
                _ => {}
            },
        }
    }

    let mut vi = 0;
    for e in state.entities.iter_mut().filter(|e| e.class == EntityClass::Enemy) {
        // One draw per enemy per tick keeps the stream independent of the agent.
        let flip = rng.random_bool(FLIP_PROB);
        let v = &mut hidden.enemy_velocity[vi];
        vi += 1;
        if e.static_ {
            continue;
        }
        if flip {
            *v = -*v;
        }
        e.x += *v;
        if e.x <= 0.0 || e.x >= width {
            e.x = e.x.clamp(0.0, width);
            *v = -*v;
        }
    }

    let (ax, ay) = {
        let a = state.agent();
        (a.x, a.y)
    };
    let hit = state
        .entities
        .iter()
        .any(|e| e.class == EntityClass::Enemy && (e.x - ax).abs() < CONTACT && ay < CLEARANCE);
    if hit {
        reward += rewards.death;
        events.push(Event::Killed);
        return StepResult { reward, done: true, events };
    }

    if let Some(pos) = state.entities.iter().position(|e| {
        e.class == EntityClass::Key && (e.x - ax).abs() < CONTACT && ay < PICKUP_HEIGHT
    }) {
        let key = state.entities.remove(pos);
        state.agent_mut().keys.push(key.pair.unwrap_or(0));
        reward += rewards.key;
        events.push(Event::KeyCollected);
    }

    let has_key = state.agent().has_key();
    let at_door = state
        .entities
        .iter()
        .any(|e| e.class == EntityClass::Door && (e.x - ax).abs() < CONTACT);
    if has_key && at_door {
        reward += rewards.door;
        events.push(Event::DoorReached);
        return StepResult { reward, done: true, events };
    }
    StepResult { reward, done: false, events }
}
