use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{sigmoid, EnvState, Entity, EntityClass};
use crate::error::{Error, Result};
use crate::logic::{GroundAtomTable, Term, FALSE_INDEX, TRUE_INDEX};

/// Soft evaluator of one state predicate from entity attributes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredicateEval {
    /// `p(O, t)`: 1 iff the entity's class is perceived as type `t`.
    Type,
    /// `p(O, c)`: 1 iff the entity has color `c`.
    Color,
    /// `p(A, B)`: 1 iff both entities have the same color.
    SameColor,
    /// σ(slope·(threshold − distance)).
    Closeby { threshold: f64, slope: f64 },
    /// `p(A, B)`: A is left of B, σ(slope·(x_B − x_A − margin)).
    LeftOf { slope: f64, margin: f64 },
    /// `p(A, B)`: A is right of B.
    RightOf { slope: f64, margin: f64 },
    /// `p(A, B)`: A is above B (y grows upward).
    Above { slope: f64, margin: f64 },
    /// `p(A, B)`: A is below B.
    Below { slope: f64, margin: f64 },
    /// `p(A, B)`: A is bigger than B, σ(slope·(size_A − size_B − margin)).
    Bigger { slope: f64, margin: f64 },
    /// `p(A, B)`: A is smaller than B.
    Smaller { slope: f64, margin: f64 },
    /// `p(O)`: the agent carries a key (O is the agent), or the agent
    /// carries the key paired with O (O is a door or chest).
    HaveKey,
    /// Complement of [`PredicateEval::HaveKey`] on the agent and on
    /// closed doors and chests; 0 for every other entity.
    NotHaveKey,
}

/// Evaluators by predicate name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorSet {
    pub evaluators: BTreeMap<String, PredicateEval>,
}

impl EvaluatorSet {
    /// Default evaluators with slope `alpha` per world unit and closeby
    /// threshold `d0`.
    pub fn standard(alpha: f64, d0: f64) -> Self {
        let m = 0.0;
        let level = 0.5;
        let entries = [
            ("type", PredicateEval::Type),
            ("color", PredicateEval::Color),
            ("same_color", PredicateEval::SameColor),
            ("closeby", PredicateEval::Closeby { threshold: d0, slope: alpha }),
            ("on_left", PredicateEval::LeftOf { slope: alpha, margin: m }),
            ("on_right", PredicateEval::RightOf { slope: alpha, margin: m }),
            ("on_top", PredicateEval::Above { slope: alpha, margin: m }),
            ("at_bottom", PredicateEval::Below { slope: alpha, margin: m }),
            ("high_level", PredicateEval::Above { slope: alpha, margin: level }),
            ("low_level", PredicateEval::Below { slope: alpha, margin: level }),
            ("is_bigger_than", PredicateEval::Bigger { slope: 20.0, margin: 0.25 }),
            ("is_smaller_than", PredicateEval::Smaller { slope: 20.0, margin: 0.25 }),
            ("have_key", PredicateEval::HaveKey),
            ("not_have_key", PredicateEval::NotHaveKey),
        ];
        Self { evaluators: entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect() }
    }
}

impl Default for EvaluatorSet {
    fn default() -> Self {
        Self::standard(5.0, 2.0)
    }
}

fn holds_key_for(agent: &Entity, e: &Entity) -> bool {
    match e.class {
        EntityClass::Agent => e.has_key(),
        EntityClass::Door | EntityClass::Chest => {
            !e.opened && e.pair.map(|p| agent.keys.contains(&p)).unwrap_or(false)
        }
        _ => false,
    }
}

fn eval(kind: PredicateEval, args: &[&Entity], consts: &[&str], agent: &Entity) -> f64 {
    let dx = |a: &Entity, b: &Entity| b.x - a.x;
    let dy = |a: &Entity, b: &Entity| b.y - a.y;
    match kind {
        PredicateEval::Type => (args[0].class.type_name() == consts[1]) as u8 as f64,
        PredicateEval::Color => {
            (args[0].color.map(|c| c.name()) == Some(consts[1])) as u8 as f64
        }
        PredicateEval::SameColor => {
            (args[0].color.is_some() && args[0].color == args[1].color) as u8 as f64
        }
        PredicateEval::Closeby { threshold, slope } => {
            let d = (dx(args[0], args[1]).powi(2) + dy(args[0], args[1]).powi(2)).sqrt();
            sigmoid(slope * (threshold - d))
        }
        PredicateEval::LeftOf { slope, margin } => sigmoid(slope * (dx(args[0], args[1]) - margin)),
        PredicateEval::RightOf { slope, margin } => {
            sigmoid(slope * (-dx(args[0], args[1]) - margin))
        }
        PredicateEval::Above { slope, margin } => sigmoid(slope * (-dy(args[0], args[1]) - margin)),
        PredicateEval::Below { slope, margin } => sigmoid(slope * (dy(args[0], args[1]) - margin)),
        PredicateEval::Bigger { slope, margin } => {
            sigmoid(slope * (args[0].size - args[1].size - margin))
        }
        PredicateEval::Smaller { slope, margin } => {
            sigmoid(slope * (args[1].size - args[0].size - margin))
        }
        PredicateEval::HaveKey => holds_key_for(agent, args[0]) as u8 as f64,
        PredicateEval::NotHaveKey => match args[0].class {
            EntityClass::Agent => (!args[0].has_key()) as u8 as f64,
            EntityClass::Door | EntityClass::Chest if !args[0].opened => {
                (!holds_key_for(agent, args[0])) as u8 as f64
            }
            _ => 0.0,
        },
    }
}

#[derive(Clone, Debug)]
struct Compiled {
    atom: usize,
    kind: PredicateEval,
    /// For each argument: Some(object slot) when it names an entity.
    objects: Vec<Option<usize>>,
    consts: Vec<String>,
}

/// Maps environment states to initial valuations over an atom table.
#[derive(Clone, Debug)]
pub struct Perceiver {
    table: Arc<GroundAtomTable>,
    compiled: Vec<Compiled>,
    object_ids: Vec<String>,
}

impl Perceiver {
    /// Entities are matched to constants of the `object` datatype by id.
    pub fn new(table: Arc<GroundAtomTable>, evals: &EvaluatorSet) -> Result<Self> {
        let lang = table.language();
        for p in lang.state_predicates() {
            if !evals.evaluators.contains_key(&p.name) {
                return Err(Error::Env(format!("no evaluator for state predicate {}", p.name)));
            }
        }
        let object_ids: Vec<String> = lang.constants("object").to_vec();
        let mut compiled = Vec::new();
        for idx in table.state_range() {
            let atom = table.atom(idx);
            let kind = evals.evaluators[&atom.predicate];
            let mut objects = Vec::new();
            let mut consts = Vec::new();
            for t in &atom.terms {
                if let Term::Const(c) = t {
                    objects.push(if c.datatype == "object" {
                        object_ids.iter().position(|o| o == &c.symbol)
                    } else {
                        None
                    });
                    consts.push(c.symbol.clone());
                }
            }
            compiled.push(Compiled { atom: idx, kind, objects, consts });
        }
        Ok(Self { table, compiled, object_ids })
    }

    pub fn table(&self) -> &Arc<GroundAtomTable> {
        &self.table
    }

    pub fn perceive(&self, state: &EnvState) -> Result<Vec<f64>> {
        for e in &state.entities {
            if !self.object_ids.contains(&e.id) {
                return Err(Error::Env(format!("entity {} is not a constant of the language", e.id)));
            }
        }
        let slots: Vec<Option<&Entity>> =
            self.object_ids.iter().map(|id| state.entity(id)).collect();
        let agent = state.agent();
        let mut v = vec![0.0; self.table.len()];
        v[FALSE_INDEX] = 0.0;
        v[TRUE_INDEX] = 1.0;
        let mut args: Vec<&Entity> = Vec::with_capacity(3);
        let mut consts: Vec<&str> = Vec::with_capacity(3);
        'atoms: for c in &self.compiled {
            args.clear();
            consts.clear();
            for (slot, name) in c.objects.iter().zip(&c.consts) {
                consts.push(name);
                if let Some(s) = slot {
                    match slots[*s] {
                        Some(e) => args.push(e),
                        None => continue 'atoms,
                    }
                } else {
                    args.push(agent);
                }
            }
            v[c.atom] = eval(c.kind, &args, &consts, agent);
        }
        Ok(v)
    }
}
