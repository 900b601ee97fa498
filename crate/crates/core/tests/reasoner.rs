mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relog_core::envs::{expert_rules, fixture_language, EnvKind};
use relog_core::logic::{build_atom_table, parse_rule, Language, Rule, DEFAULT_TABLE_CAP, TRUE_INDEX};
use relog_core::reasoner::{
    attribute, build_index_tensor, forward_reason, smooth_max, softor, softor_unclamped, IndexLimits, LogicPolicy,
    ReasonerParams, RuleWeights,
};

use common::*;

const R0: &str = "jump(agent):-type(O1,agent),type(O2,enemy),closeby(O1,O2).";

fn fixture_policy() -> LogicPolicy {
    let lang = fixture_language().unwrap();
    let table = Arc::new(build_atom_table(&lang, DEFAULT_TABLE_CAP).unwrap());
    let rule = parse_rule(R0, &lang).unwrap().rule;
    LogicPolicy::one_rule_per_row(vec![rule], table, ReasonerParams::default()).unwrap()
}

fn fixture_state(policy: &LogicPolicy, closeby: f64) -> Vec<f64> {
    let t = policy.table();
    let mut v = vec![0.0; t.len()];
    v[TRUE_INDEX] = 1.0;
    v[t.lookup("type", &["obj1", "agent"]).unwrap()] = 1.0;
    v[t.lookup("type", &["obj2", "enemy"]).unwrap()] = 1.0;
    v[t.lookup("closeby", &["obj1", "obj2"]).unwrap()] = closeby;
    v
}

#[test]
fn softor_examples() {
    assert_eq!(softor(&[0.9], 0.01).unwrap(), 0.9);
    assert!((softor(&[0.8, 0.3], 0.01).unwrap() - 0.8).abs() < 1e-6);
    let equal = softor_unclamped(&[0.5, 0.5], 0.01).unwrap();
    assert!((equal - (0.5 + 0.01 * 2f64.ln())).abs() < 1e-12);
    assert!((equal - 0.50693).abs() < 1e-5);
    assert!(softor(&[], 0.01).is_err());
    assert!(softor(&[0.5], 0.0).is_err());
    // Overshoot past one is clamped.
    assert_eq!(softor(&[1.0, 1.0], 0.01).unwrap(), 1.0);
}

#[test]
fn index_row_for_an_underivable_atom_is_bottom() {
    let policy = fixture_policy();
    let idx = policy.program().index();
    assert_eq!((0..3).map(|l| idx.get(0, 3, 0, l)).collect::<Vec<_>>(), [0, 0, 0]);
    let (_, g, _, _) = idx.dims();
    for j in 0..g {
        for l in 0..3 {
            assert!(idx.get(0, j, 0, l) < g);
        }
    }
}

#[test]
fn index_limits_are_enforced() {
    let lang = fixture_language().unwrap();
    let table = build_atom_table(&lang, DEFAULT_TABLE_CAP).unwrap();
    let rule = parse_rule(R0, &lang).unwrap().rule;
    let short = IndexLimits { body_len: Some(2), ..IndexLimits::default() };
    assert!(build_index_tensor(std::slice::from_ref(&rule), &table, short).is_err());
    let narrow = IndexLimits { max_substitutions: Some(1), ..IndexLimits::default() };
    assert!(build_index_tensor(&[rule], &table, narrow).is_err());
}

#[test]
fn fixture_rule_fires_only_when_close() {
    let policy = fixture_policy();
    let jump = policy.table().lookup("jump", &["agent"]).unwrap();
    let near = policy.evaluate(&fixture_state(&policy, 1.0)).unwrap();
    assert!((near.valuation[jump] - 1.0).abs() < 1e-3);
    let far = policy.evaluate(&fixture_state(&policy, 0.0)).unwrap();
    assert!(far.valuation[jump].abs() < 1e-3);
}

#[test]
fn uniform_weights_average_rule_conclusions() {
    let lang = fixture_language().unwrap();
    let table = Arc::new(build_atom_table(&lang, DEFAULT_TABLE_CAP).unwrap());
    let rules: Vec<Rule> = [R0, "jump(agent):-type(O1,agent)."]
        .iter()
        .map(|t| parse_rule(t, &lang).unwrap().rule)
        .collect();
    let weights = RuleWeights::zeros(1, 2).unwrap();
    let policy = LogicPolicy::new(rules, table, weights, ReasonerParams::default()).unwrap();
    // The first rule's body is false, the second's true: h = (0 + 1) / 2.
    let v = fixture_state(&policy, 0.0);
    let jump = policy.table().lookup("jump", &["agent"]).unwrap();
    let out = policy.evaluate(&v).unwrap().valuation[jump];
    assert!((out - 0.5).abs() < 1e-9, "{out}");
}

const TWO_ACTIONS: &str = r#"
actions = ["right", "jump"]
distinct = []

[[datatypes]]
name = "obj"
constants = ["a"]

[[predicates]]
name = "right_one"
kind = "action"
datatypes = ["obj"]

[[predicates]]
name = "right_two"
kind = "action"
datatypes = ["obj"]

[[predicates]]
name = "jump_up"
kind = "action"
datatypes = ["obj"]

[[predicates]]
name = "p"
kind = "state"
datatypes = ["obj"]
"#;

#[test]
fn action_distribution_example() {
    let lang = Language::from_toml_str(TWO_ACTIONS).unwrap();
    let table = Arc::new(build_atom_table(&lang, DEFAULT_TABLE_CAP).unwrap());
    let rule = parse_rule("jump_up(a):-p(a).", &lang).unwrap().rule;
    let policy = LogicPolicy::one_rule_per_row(vec![rule], table.clone(), ReasonerParams::default()).unwrap();
    let map = policy.action_map();
    let base = table.action_range().start;
    let mut va = vec![0.0; table.num_action_atoms()];
    va[table.lookup("right_one", &["a"]).unwrap() - base] = 0.8;
    va[table.lookup("right_two", &["a"]).unwrap() - base] = 0.3;
    va[table.lookup("jump_up", &["a"]).unwrap() - base] = 0.2;
    let values = map.values(&va, policy.params());
    assert!((values[0] - 0.8).abs() < 1e-6 && (values[1] - 0.2).abs() < 1e-9);
    let probs = map.distribution(&va, policy.params());
    assert!((probs[0] - 0.6457).abs() < 1e-3 && (probs[1] - 0.3543).abs() < 1e-3, "{probs:?}");

    let tie = vec![0.9, 0.0, 0.9];
    let probs = map.distribution(&tie, policy.params());
    assert!((probs[0] - 0.5).abs() < 1e-12);
}

#[test]
fn single_action_gets_probability_one() {
    let text = TWO_ACTIONS.replace("actions = [\"right\", \"jump\"]", "actions = [\"right\"]").replace(
        "[[predicates]]\nname = \"jump_up\"\nkind = \"action\"\ndatatypes = [\"obj\"]\n",
        "",
    );
    let lang = Language::from_toml_str(&text).unwrap();
    let table = Arc::new(build_atom_table(&lang, DEFAULT_TABLE_CAP).unwrap());
    let rule = parse_rule("right_one(a):-p(a).", &lang).unwrap().rule;
    let policy = LogicPolicy::one_rule_per_row(vec![rule], table.clone(), ReasonerParams::default()).unwrap();
    let mut v = vec![0.0; table.len()];
    v[TRUE_INDEX] = 1.0;
    v[table.lookup("p", &["a"]).unwrap()] = 0.37;
    assert_eq!(policy.action_probs(&v).unwrap(), vec![1.0]);
}

#[test]
fn attribution_prefers_the_key_atoms() {
    let table = getout_table();
    let lang = table.language().clone();
    let rules = unique_rules(expert_rules(EnvKind::GetOut), &lang);
    let policy = LogicPolicy::one_rule_per_row(rules, table.clone(), ReasonerParams::default()).unwrap();
    let perceiver = relog_core::envs::Perceiver::new(table.clone(), &standard_evaluators()).unwrap();
    let v0 = perceiver.perceive(&keyless_getout_state()).unwrap();
    let right = lang.actions().iter().position(|a| a == "right").unwrap();
    let attr = attribute(&policy, &v0, right).unwrap();
    let grad = |text: &str| attr.iter().find(|a| a.text == text).unwrap().gradient.abs();
    let key = grad("not_have_key(obj1)").min(grad("on_right(obj2,obj1)"));
    // Atoms absent from the right-moving key rule.
    for other in ["closeby(obj1,obj3)", "have_key(obj1)", "on_left(obj3,obj1)"] {
        assert!(key > grad(other), "{other}");
    }
    assert!(attr.windows(2).all(|w| w[0].gradient.abs() >= w[1].gradient.abs()));
}

/// A random toy program with soft weights and a soft valuation.
fn random_setup(rng: &mut ChaCha8Rng, steps: usize) -> (LogicPolicy, Vec<f64>) {
    let table = toy_table();
    let lang = table.language().clone();
    let c = rng.random_range(1..=5);
    let rules: Vec<Rule> = (0..c).map(|_| random_rule(rng, &lang)).collect();
    let m = rng.random_range(1..=c);
    let weights = RuleWeights::random_normal(m, c, 1.0, rng).unwrap();
    let params = ReasonerParams { steps, ..Default::default() };
    let policy = LogicPolicy::new(rules, table.clone(), weights, params).unwrap();
    let mut v0 = vec![0.0; table.len()];
    v0[TRUE_INDEX] = 1.0;
    for j in table.state_range() {
        v0[j] = rng.random_range(0.0..=1.0);
    }
    (policy, v0)
}

#[test]
fn checkpoint_round_trip_preserves_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (policy, v0) = random_setup(&mut rng, 2);
    let dir = std::env::temp_dir().join(format!("relog-ck-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("policy.json");
    policy.save(&path, Some("toy")).unwrap();
    let back = LogicPolicy::load(&path, policy.table().clone()).unwrap();
    let a = policy.action_probs(&v0).unwrap();
    let b = back.action_probs(&v0).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12);
    }
    assert_eq!(back.rules(), policy.rules());
}

proptest! {
    #[test]
    fn softor_stays_within_smooth_max_bounds(xs in prop::collection::vec(0.0f64..=1.0, 1..8), gamma in 0.005f64..0.5) {
        let raw = softor_unclamped(&xs, gamma).unwrap();
        let max = xs.iter().copied().fold(f64::MIN, f64::max);
        prop_assert!(raw >= max - 1e-12);
        prop_assert!(raw <= max + gamma * (xs.len() as f64).ln() + 1e-12);
        let lse = smooth_max(&xs, gamma).unwrap();
        prop_assert!(lse >= max - 1e-12 && lse <= max + gamma * (xs.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn valuations_grow_with_each_step_and_stay_bounded(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (policy, v0) = random_setup(&mut rng, 1);
        let mut prev = v0.clone();
        for steps in 1..=3 {
            let mut p = policy.clone();
            let params = ReasonerParams { steps, ..policy.params().clone() };
            p = LogicPolicy::new(p.rules().to_vec(), p.table().clone(), p.weights().clone(), params).unwrap();
            let out = p.evaluate(&v0).unwrap();
            for (j, (&a, &b)) in out.valuation.iter().zip(&prev).enumerate() {
                prop_assert!((0.0..=1.0).contains(&a), "atom {} out of range: {}", j, a);
                prop_assert!(a >= b - 1e-12, "atom {} decreased from {} to {}", j, b, a);
            }
            prop_assert_eq!(out.valuation[0], 0.0);
            prop_assert_eq!(out.valuation[1], 1.0);
            prop_assert!((out.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prev = out.valuation;
        }
    }

    #[test]
    fn batched_reasoning_matches_single_calls(seed in 0u64..100, b in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (policy, _) = random_setup(&mut rng, 2);
        let batch: Vec<Vec<f64>> = (0..b).map(|_| random_setup(&mut rng, 1).1).collect();
        let out = forward_reason(&policy, &batch).unwrap();
        for (v0, got) in batch.iter().zip(&out) {
            let single = policy.evaluate(v0).unwrap().valuation;
            for (x, y) in single.iter().zip(got) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn weight_rows_are_distributions(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = rng.random_range(1..5);
        let cols = rng.random_range(1..8);
        let w = RuleWeights::random_normal(rows, cols, 3.0, &mut rng).unwrap();
        let n = w.normalized();
        for r in 0..rows {
            let row = &n[r * cols..(r + 1) * cols];
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(row.iter().all(|&x| x > 0.0 && x < 1.0 || cols == 1));
        }
    }
}
