//! Neuro-symbolic reinforcement learning with weighted first-order action rules.
//!
//! The crate is organised bottom-up:
//!
//! - [`logic`]: action-state language, rule syntax, mode declarations,
//!   substitutions and the ground atom table.
//! - [`reasoner`]: index tensor, smooth logical operators, differentiable
//!   forward reasoning with a hand-written backward pass, and the logic policy.
//! - [`envs`]: object-centric simulators (GetOut, 3Fishes, Loot) and the
//!   perception layer that turns entity lists into atom valuations.
//! - [`abstraction`]: mode-driven rule refinement and oracle-guided beam search.
//! - [`training`]: a small MLP, PPO for the neural oracle, actor-critic
//!   training of rule weights, pruning and evaluation.

pub mod abstraction;
pub mod agent;
pub mod envs;
pub mod error;
pub mod logic;
pub mod reasoner;
pub mod training;

pub use error::{Error, Result};
