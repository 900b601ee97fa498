//! Shared helpers for the integration tests: a small random-program
//! language, an independent crisp forward-chaining oracle, finite
//! differences and the training pipeline used by the end-to-end checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use relog_core::agent::LogicAgent;
use relog_core::envs::{
    builtin_language, EnvConfig, EnvKind, EnvState, Entity, EntityClass, EvaluatorSet, Simulator, Variant,
};
use relog_core::logic::{build_atom_table, parse_rule, GroundAtomTable, Language, Rule, Term, DEFAULT_TABLE_CAP};
use relog_core::reasoner::{LogicPolicy, ReasonerParams, RuleWeights};
use relog_core::training::{
    actor_critic_train_logic, init_rule_weights, ppo_train_neural, LogicTrainConfig, PpoConfig,
};

/// Two constants, two actions with two action atoms each and eight state
/// atoms: 14 ground atoms in total.
pub const TOY_LANGUAGE: &str = r#"
actions = ["go", "stop"]
distinct = []

[[datatypes]]
name = "obj"
constants = ["c1", "c2"]

[[predicates]]
name = "go_a"
kind = "action"
datatypes = ["obj"]

[[predicates]]
name = "stop_a"
kind = "action"
datatypes = ["obj"]

[[predicates]]
name = "p"
kind = "state"
datatypes = ["obj"]

[[predicates]]
name = "q"
kind = "state"
datatypes = ["obj"]

[[predicates]]
name = "r"
kind = "state"
datatypes = ["obj", "obj"]
"#;

pub fn toy_table() -> Arc<GroundAtomTable> {
    let lang = Language::from_toml_str(TOY_LANGUAGE).unwrap();
    Arc::new(build_atom_table(&lang, DEFAULT_TABLE_CAP).unwrap())
}

fn term<R: Rng>(rng: &mut R, vars: &[&str]) -> String {
    let pool: Vec<&str> = vars.iter().copied().chain(["c1", "c2"]).collect();
    pool.choose(rng).unwrap().to_string()
}

/// A random rule over the toy language with up to three body atoms.
pub fn random_rule<R: Rng>(rng: &mut R, lang: &Language) -> Rule {
    loop {
        let vars = ["X", "Y"];
        let head = format!("{}({})", ["go_a", "stop_a"].choose(rng).unwrap(), term(rng, &vars));
        let n = rng.random_range(0..=3);
        let body: Vec<String> = (0..n)
            .map(|_| match rng.random_range(0..3) {
                0 => format!("p({})", term(rng, &vars)),
                1 => format!("q({})", term(rng, &vars)),
                _ => format!("r({},{})", term(rng, &vars), term(rng, &vars)),
            })
            .collect();
        if let Ok(p) = parse_rule(&format!("{head}:-{}.", body.join(",")), lang) {
            return p.rule;
        }
    }
}

/// Raw weights with `rows` one-hot rows choosing `chosen[m]`; the other
/// entries sit 60 nats lower, so their softmax mass is below 1e-26.
pub fn one_hot_weights(cols: usize, chosen: &[usize]) -> RuleWeights {
    let mut raw = vec![-60.0; chosen.len() * cols];
    for (m, &i) in chosen.iter().enumerate() {
        raw[m * cols + i] = 0.0;
    }
    RuleWeights::new(chosen.len(), cols, raw).unwrap()
}

fn substitute(t: &Term, binding: &BTreeMap<String, String>) -> String {
    match t {
        Term::Var(v) => binding[&v.symbol].clone(),
        Term::Const(c) => c.symbol.clone(),
    }
}

fn ground_text(pred: &str, terms: &[Term], binding: &BTreeMap<String, String>) -> String {
    let args: Vec<String> = terms.iter().map(|t| substitute(t, binding)).collect();
    if args.is_empty() {
        pred.to_string()
    } else {
        format!("{pred}({})", args.join(","))
    }
}

/// Classical forward chaining on atom texts: `steps` rounds, each adding
/// the heads of every ground instance whose body holds. Variables range over
/// every constant of their datatype (no distinctness constraint).
pub fn crisp_forward_chain(rules: &[Rule], lang: &Language, facts: &HashSet<String>, steps: usize) -> HashSet<String> {
    let mut known = facts.clone();
    for _ in 0..steps {
        let mut next = known.clone();
        for rule in rules {
            let mut vars: Vec<(String, String)> = Vec::new();
            for a in std::iter::once(&rule.head).chain(&rule.body) {
                for t in &a.terms {
                    if let Term::Var(v) = t {
                        if !vars.iter().any(|(s, _)| *s == v.symbol) {
                            vars.push((v.symbol.clone(), v.datatype.clone()));
                        }
                    }
                }
            }
            let domains: Vec<&[String]> = vars.iter().map(|(_, d)| lang.constants(d)).collect();
            let total: usize = domains.iter().map(|d| d.len()).product();
            for mut code in 0..total {
                let mut binding = BTreeMap::new();
                for ((sym, _), dom) in vars.iter().zip(&domains) {
                    binding.insert(sym.clone(), dom[code % dom.len()].clone());
                    code /= dom.len();
                }
                if rule.body.iter().all(|b| known.contains(&ground_text(&b.predicate, &b.terms, &binding))) {
                    next.insert(ground_text(&rule.head.predicate, &rule.head.terms, &binding));
                }
            }
        }
        known = next;
    }
    known
}

/// Central difference of `f` at `x[i]` with step `h`.
pub fn central_difference(x: &mut [f64], i: usize, h: f64, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let up = f(x);
    x[i] = orig - h;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * h)
}

/// `|a - n| / max(|a|, |n|)`, or the absolute gap when both are tiny.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale <= 1e-6 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

pub fn getout_table() -> Arc<GroundAtomTable> {
    let lang = builtin_language(EnvKind::GetOut, Variant::Base).unwrap();
    Arc::new(build_atom_table(&lang, DEFAULT_TABLE_CAP).unwrap())
}

pub fn standard_evaluators() -> EvaluatorSet {
    EvaluatorSet::standard(5.0, 2.0)
}

/// The situation of the opening GetOut illustration: a keyless agent with
/// the key to its right, the door further right and the enemy far away.
pub fn keyless_getout_state() -> EnvState {
    let mut sim = Simulator::new(EnvConfig::new(EnvKind::GetOut, Variant::Base)).unwrap();
    let mut state = relog_core::envs::Environment::reset(&mut sim, 0).clone();
    state.entities = vec![
        Entity::new(1, EntityClass::Agent, 2.0, 0.0),
        Entity::new(2, EntityClass::Key, 8.0, 0.0),
        Entity::new(3, EntityClass::Door, 14.0, 0.0),
        Entity::new(4, EntityClass::Enemy, 19.0, 0.0),
    ];
    state
}

/// Parses a rule file and drops repeated rules, keeping first occurrences.
pub fn unique_rules(text: &str, lang: &Language) -> Vec<Rule> {
    let mut out: Vec<Rule> = Vec::new();
    for p in relog_core::logic::parse_rules(text, lang).unwrap() {
        if !out.contains(&p.rule) {
            out.push(p.rule);
        }
    }
    out
}

/// Budget used by the end-to-end checks: a PPO run that pretrains the
/// critic followed by rule-weight learning, 150k environment steps in total.
pub const CRITIC_STEPS: usize = 30_000;
pub const LOGIC_STEPS: usize = 120_000;

/// Pretrains a critic with PPO and learns the weights of `rules` with
/// `slots` weight rows on `config`.
pub fn train_logic_agent(config: &EnvConfig, rules: Vec<Rule>, slots: usize, seed: u64) -> LogicAgent {
    train_logic_agent_for(config, rules, slots, seed, LOGIC_STEPS)
}

pub fn train_logic_agent_for(
    config: &EnvConfig,
    rules: Vec<Rule>,
    slots: usize,
    seed: u64,
    logic_steps: usize,
) -> LogicAgent {
    let lang = builtin_language(config.env, config.variant).unwrap();
    let table = Arc::new(build_atom_table(&lang, DEFAULT_TABLE_CAP).unwrap());
    let weights = init_rule_weights(rules.len(), slots, seed).unwrap();
    let policy = LogicPolicy::new(rules, table, weights, ReasonerParams::default()).unwrap();
    let mut agent = LogicAgent::new(policy, &standard_evaluators()).unwrap();
    let ppo = PpoConfig { total_steps: CRITIC_STEPS, ..Default::default() };
    let (mut critic, _) = ppo_train_neural(config, &ppo, seed).unwrap();
    let mut env = Simulator::new(config.clone()).unwrap();
    let cfg = LogicTrainConfig { total_steps: logic_steps, ..Default::default() };
    actor_critic_train_logic(&mut agent, &mut env, &mut critic, &cfg, seed).unwrap();
    agent
}
