//! Grid maze with one or two key/chest pairs. A chest opens when the agent
//! steps on it while carrying its key; the episode ends once every chest is
//! open.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Color, EnvConfig, EnvState, Entity, EntityClass, Event, Rewards, StepResult, Variant};

const SIDE: f64 = 16.0;
const KEY_COLORS: [Color; 2] = [Color::Red, Color::Blue];
const RECOLORED_CHESTS: [Color; 2] = [Color::Green, Color::Purple];

pub(super) fn reset(cfg: &EnvConfig, rng: &mut ChaCha8Rng) -> EnvState {
    let side = (SIDE * cfg.arena_scale).round().max(3.0);
    let cells = side as i64;
    let pairs = if rng.random_bool(0.5) { 1 } else { 2 };
    let mut used: Vec<(i64, i64)> = Vec::new();
    let mut draw = |rng: &mut ChaCha8Rng| loop {
        let c = (rng.random_range(0..cells), rng.random_range(0..cells));
        if !used.contains(&c) {
            used.push(c);
            break (c.0 as f64, c.1 as f64);
        }
    };
    let (ax, ay) = draw(rng);
    let mut entities = vec![Entity::new(1, EntityClass::Agent, ax, ay)];
    for p in 0..pairs {
        let (kx, ky) = draw(rng);
        let mut key = Entity::new(2 + 2 * p, EntityClass::Key, kx, ky);
        key.pair = Some(p);
        key.color = Some(KEY_COLORS[p]);
        let (cx, cy) = draw(rng);
        let mut chest = Entity::new(3 + 2 * p, EntityClass::Chest, cx, cy);
        chest.pair = Some(p);
        chest.color = Some(if cfg.variant == Variant::Colored {
            RECOLORED_CHESTS[p]
        } else {
            KEY_COLORS[p]
        });
        entities.push(key);
        entities.push(chest);
    }
    EnvState { entities, tick: 0, terminal: false, width: side - 1.0, height: side - 1.0 }
}

pub(super) fn step(state: &mut EnvState, action: usize, rewards: &Rewards) -> StepResult {
    let (w, h) = (state.width, state.height);
    let mut reward = rewards.step;
    let mut events = Vec::new();
    {
        let a = state.agent_mut();
        match action {
            0 => a.y = (a.y + 1.0).min(h),
            1 => a.y = (a.y - 1.0).max(0.0),
            2 => a.x = (a.x - 1.0).max(0.0),
            _ => a.x = (a.x + 1.0).min(w),
        }
    }
    let (ax, ay) = (state.agent().x, state.agent().y);
    let here = |e: &Entity| (e.x - ax).abs() < 0.5 && (e.y - ay).abs() < 0.5;
    if let Some(pos) = state.entities.iter().position(|e| e.class == EntityClass::Key && here(e)) {
        let key = state.entities.remove(pos);
        state.agent_mut().keys.push(key.pair.unwrap_or(0));
        reward += rewards.key;
        events.push(Event::KeyCollected);
    }
    let held = state.agent().keys.clone();
    let mut used = None;
    for e in state.entities.iter_mut() {
        if e.class == EntityClass::Chest && !e.opened && here(e) {
            if let Some(p) = e.pair.filter(|p| held.contains(p)) {
                e.opened = true;
                used = Some(p);
                reward += rewards.chest;
                events.push(Event::ChestOpened);
                break;
            }
        }
    }
    if let Some(p) = used {
        let keys = &mut state.agent_mut().keys;
        if let Some(i) = keys.iter().position(|&k| k == p) {
            keys.remove(i);
        }
    }
    let done = state.entities.iter().filter(|e| e.class == EntityClass::Chest).all(|e| e.opened);
    StepResult { reward, done, events }
}
