//! Object-centric simulators and perception.
//!
//! States are lists of entities with stable ids `obj1, obj2, ...`; `obj1` is
//! always the agent. Removed entities stay out of the list, and every atom
//! mentioning them is perceived as false.

mod adapt;
mod data;
mod fishes;
mod getout;
mod loot;
mod perceive;
mod render;
mod trajectory;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adapt::swap_predicate;
pub use data::{
    published_rules, builtin_language, builtin_modes, expert_rules, initial_rules, fixture_language,
};
pub use perceive::{EvaluatorSet, Perceiver, PredicateEval};
pub use render::render_ascii;
pub use trajectory::{write_trajectory, TrajectoryRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    GetOut,
    ThreeFishes,
    Loot,
}

impl EnvKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::GetOut => "getout",
            EnvKind::ThreeFishes => "threefishes",
            EnvKind::Loot => "loot",
        }
    }

    pub fn actions(&self) -> &'static [&'static str] {
        match self {
            EnvKind::GetOut => &["left", "right", "jump", "idle"],
            EnvKind::ThreeFishes | EnvKind::Loot => &["up", "down", "left", "right"],
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "getout" => Ok(EnvKind::GetOut),
            "threefishes" | "3fishes" => Ok(EnvKind::ThreeFishes),
            "loot" => Ok(EnvKind::Loot),
            other => Err(Error::Env(format!("unknown environment {other}"))),
        }
    }
}

/// `Plus` is GetOut+, `Colored` is 3Fishes-C or Loot-C.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Base,
    Plus,
    Colored,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Plus => "plus",
            Variant::Colored => "colored",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Variant::Base),
            "plus" | "+" => Ok(Variant::Plus),
            "colored" | "c" => Ok(Variant::Colored),
            other => Err(Error::Env(format!("unknown variant {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityClass {
    Agent,
    Key,
    Door,
    Enemy,
    Fish,
    Chest,
}

impl EntityClass {
    pub const ALL: [EntityClass; 6] = [
        EntityClass::Agent,
        EntityClass::Key,
        EntityClass::Door,
        EntityClass::Enemy,
        EntityClass::Fish,
        EntityClass::Chest,
    ];

    /// Constant of the `type` datatype this class is perceived as. Chests
    /// share the door type so door rules transfer between games.
    pub fn type_name(&self) -> &'static str {
        match self {
            EntityClass::Agent => "agent",
            EntityClass::Key => "key",
            EntityClass::Door | EntityClass::Chest => "door",
            EntityClass::Enemy => "enemy",
            EntityClass::Fish => "fish",
        }
    }

    pub fn glyph(&self) -> char {
        match self {
            EntityClass::Agent => 'A',
            EntityClass::Key => 'K',
            EntityClass::Door => 'D',
            EntityClass::Enemy => 'E',
            EntityClass::Fish => 'F',
            EntityClass::Chest => 'C',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
    Green,
    Purple,
    Yellow,
    Orange,
}

impl Color {
    pub const ALL: [Color; 6] =
        [Color::Red, Color::Blue, Color::Green, Color::Purple, Color::Yellow, Color::Orange];

    pub fn name(&self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Blue => "blue",
            Color::Green => "green",
            Color::Purple => "purple",
            Color::Yellow => "yellow",
            Color::Orange => "orange",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub class: EntityClass,
    pub x: f64,
    pub y: f64,
    pub size: f64,
    pub color: Option<Color>,
    /// Pair ids of the keys the agent carries (agent only).
    pub keys: Vec<usize>,
    /// Key/chest pairing (keys, doors and chests).
    pub pair: Option<usize>,
    pub static_: bool,
    pub opened: bool,
}

impl Entity {
    pub fn new(id: usize, class: EntityClass, x: f64, y: f64) -> Self {
        Self {
            id: format!("obj{id}"),
            class,
            x,
            y,
            size: 1.0,
            color: None,
            keys: Vec::new(),
            pair: None,
            static_: false,
            opened: false,
        }
    }

    pub fn has_key(&self) -> bool {
        !self.keys.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub entities: Vec<Entity>,
    pub tick: usize,
    pub terminal: bool,
    pub width: f64,
    pub height: f64,
}

impl EnvState {
    pub fn agent(&self) -> &Entity {
        self.entities.iter().find(|e| e.class == EntityClass::Agent).expect("state has an agent")
    }

    pub fn agent_mut(&mut self) -> &mut Entity {
        self.entities
            .iter_mut()
            .find(|e| e.class == EntityClass::Agent)
            .expect("state has an agent")
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn count(&self, class: EntityClass) -> usize {
        self.entities.iter().filter(|e| e.class == class).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    KeyCollected,
    DoorReached,
    ChestOpened,
    FishEaten,
    Killed,
    TimeUp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
    pub events: Vec<Event>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rewards {
    pub key: f64,
    pub door: f64,
    pub death: f64,
    pub step: f64,
    pub eat: f64,
    pub eaten: f64,
    pub chest: f64,
}

impl Rewards {
    pub fn for_env(kind: EnvKind) -> Self {
        match kind {
            EnvKind::GetOut => Self { key: 10.0, door: 10.0, death: -20.0, step: -0.02, ..Self::zero() },
            EnvKind::ThreeFishes => Self { eat: 1.0, eaten: -1.0, ..Self::zero() },
            EnvKind::Loot => Self { key: 1.0, chest: 2.0, ..Self::zero() },
        }
    }

    fn zero() -> Self {
        Self { key: 0.0, door: 0.0, death: 0.0, step: 0.0, eat: 0.0, eaten: 0.0, chest: 0.0 }
    }
}

impl Default for Rewards {
    fn default() -> Self {
        Self::for_env(EnvKind::GetOut)
    }
}

/// Environment selection plus optional overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub env: EnvKind,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub rewards: Option<Rewards>,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: usize,
    /// Multiplies the default arena width.
    #[serde(default = "default_scale")]
    pub arena_scale: f64,
}

fn default_max_ticks() -> usize {
    500
}

fn default_scale() -> f64 {
    1.0
}

impl EnvConfig {
    pub fn new(env: EnvKind, variant: Variant) -> Self {
        Self { env, variant, rewards: None, max_ticks: 500, arena_scale: 1.0 }
    }

    pub fn rewards(&self) -> Rewards {
        self.rewards.unwrap_or_else(|| Rewards::for_env(self.env))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.env {
            EnvKind::GetOut => matches!(self.variant, Variant::Base | Variant::Plus),
            EnvKind::ThreeFishes | EnvKind::Loot => {
                matches!(self.variant, Variant::Base | Variant::Colored)
            }
        };
        if !ok {
            return Err(Error::Env(format!("variant {} is not defined for {}", self.variant, self.env)));
        }
        if self.max_ticks == 0 {
            return Err(Error::Env("episode cap must be positive".into()));
        }
        if !(self.arena_scale > 0.0) || !self.arena_scale.is_finite() {
            return Err(Error::Env("arena scale must be positive".into()));
        }
        Ok(())
    }

    /// Number of entity slots (and object constants) for this configuration.
    pub fn num_objects(&self) -> usize {
        match (self.env, self.variant) {
            (EnvKind::GetOut, Variant::Plus) => 8,
            (EnvKind::GetOut, _) => 4,
            (EnvKind::ThreeFishes, _) => 3,
            (EnvKind::Loot, _) => 5,
        }
    }
}

pub trait Environment {
    fn action_names(&self) -> &[&'static str];
    fn reset(&mut self, seed: u64) -> &EnvState;
    fn state(&self) -> &EnvState;
    fn step(&mut self, action: usize) -> Result<StepResult>;
}

#[derive(Clone, Debug)]
enum Hidden {
    GetOut(getout::Hidden),
    Fishes(fishes::Hidden),
    Loot,
}

/// Built-in simulator for one of the three games.
#[derive(Clone, Debug)]
pub struct Simulator {
    config: EnvConfig,
    state: EnvState,
    hidden: Hidden,
    rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let mut sim = Self {
            state: EnvState { entities: Vec::new(), tick: 0, terminal: true, width: 0.0, height: 0.0 },
            hidden: Hidden::Loot,
            rng: ChaCha8Rng::seed_from_u64(0),
            config,
        };
        sim.reset(0);
        Ok(sim)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn kind(&self) -> EnvKind {
        self.config.env
    }
}

impl Environment for Simulator {
    fn action_names(&self) -> &[&'static str] {
        self.config.env.actions()
    }

    fn reset(&mut self, seed: u64) -> &EnvState {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let (state, hidden) = match self.config.env {
            EnvKind::GetOut => {
                let (s, h) = getout::reset(&self.config, &mut self.rng);
                (s, Hidden::GetOut(h))
            }
            EnvKind::ThreeFishes => {
                let (s, h) = fishes::reset(&self.config, &mut self.rng);
                (s, Hidden::Fishes(h))
            }
            EnvKind::Loot => (loot::reset(&self.config, &mut self.rng), Hidden::Loot),
        };
        self.state = state;
        self.hidden = hidden;
        &self.state
    }

    fn state(&self) -> &EnvState {
        &self.state
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.state.terminal {
            return Err(Error::Env("step called on a terminal state".into()));
        }
        let n = self.action_names().len();
        if action >= n {
            return Err(Error::Env(format!("action {action} out of range for {n} actions")));
        }
        let rewards = self.config.rewards();
        let mut result = match (&mut self.hidden, self.config.env) {
            (Hidden::GetOut(h), EnvKind::GetOut) => {
                getout::step(&mut self.state, h, &mut self.rng, action, &rewards)
            }
            (Hidden::Fishes(h), EnvKind::ThreeFishes) => {
                fishes::step(&self.config, &mut self.state, h, &mut self.rng, action, &rewards)
            }
            (Hidden::Loot, EnvKind::Loot) => loot::step(&mut self.state, action, &rewards),
            _ => unreachable!("hidden state matches the environment"),
        };
        self.state.tick += 1;
        if !result.done && self.state.tick >= self.config.max_ticks {
            result.done = true;
            result.events.push(Event::TimeUp);
        }
        self.state.terminal = result.done;
        Ok(result)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
