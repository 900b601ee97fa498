mod common;

use std::sync::Arc;

use proptest::prelude::*;
use relog_core::agent::{greedy_action, Policy, ScriptedGetOut};
use relog_core::envs::{
    builtin_language, expert_rules, render_ascii, swap_predicate, write_trajectory, EnvConfig, EnvKind, EntityClass,
    Environment, Event, Perceiver, Simulator, TrajectoryRow, Variant,
};
use relog_core::logic::{build_atom_table, parse_rules, GroundAtomTable, DEFAULT_TABLE_CAP, FALSE_INDEX, TRUE_INDEX};
use relog_core::reasoner::{LogicPolicy, ReasonerParams};

use common::*;

fn sim(env: EnvKind, variant: Variant) -> Simulator {
    Simulator::new(EnvConfig::new(env, variant)).unwrap()
}

fn table(env: EnvKind, variant: Variant) -> Arc<GroundAtomTable> {
    Arc::new(build_atom_table(&builtin_language(env, variant).unwrap(), DEFAULT_TABLE_CAP).unwrap())
}

#[test]
fn reset_is_deterministic() {
    let mut a = sim(EnvKind::GetOut, Variant::Base);
    let mut b = sim(EnvKind::GetOut, Variant::Base);
    assert_eq!(a.reset(7).clone(), b.reset(7).clone());
}

#[test]
fn unknown_environments_and_variants_are_rejected() {
    assert!("pong".parse::<EnvKind>().is_err());
    assert!("huge".parse::<Variant>().is_err());
    assert!(Simulator::new(EnvConfig::new(EnvKind::GetOut, Variant::Colored)).is_err());
    assert!(Simulator::new(EnvConfig::new(EnvKind::Loot, Variant::Plus)).is_err());
}

#[test]
fn getout_plus_has_five_enemies_two_static() {
    let mut env = sim(EnvKind::GetOut, Variant::Plus);
    for seed in 0..20 {
        let s = env.reset(seed);
        assert_eq!(s.count(EntityClass::Enemy), 5);
        assert_eq!(s.entities.iter().filter(|e| e.class == EntityClass::Enemy && e.static_).count(), 2);
    }
}

#[test]
fn loot_has_one_or_two_matching_pairs() {
    let mut env = sim(EnvKind::Loot, Variant::Base);
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..50 {
        let s = env.reset(seed);
        let chests = s.count(EntityClass::Chest);
        assert!((1..=2).contains(&chests));
        assert_eq!(chests, s.count(EntityClass::Key));
        seen.insert(chests);
    }
    assert_eq!(seen.len(), 2, "both layouts occur");
}

#[test]
fn threefishes_has_a_smaller_and_a_bigger_fish() {
    let mut env = sim(EnvKind::ThreeFishes, Variant::Base);
    let s = env.reset(4).clone();
    let agent = s.agent().size;
    let others: Vec<f64> = s.entities.iter().filter(|e| e.class == EntityClass::Fish).map(|e| e.size).collect();
    assert_eq!(others.len(), 2);
    assert!(others.iter().any(|&x| x < agent) && others.iter().any(|&x| x > agent));

    let mut colored = sim(EnvKind::ThreeFishes, Variant::Colored);
    let s = colored.reset(4);
    assert!(s.entities.iter().all(|e| e.size == s.agent().size));
}

#[test]
fn getout_key_pickup_pays_ten_and_sets_the_flag() {
    let scripted = ScriptedGetOut::default();
    let mut env = sim(EnvKind::GetOut, Variant::Base);
    let mut checked = 0;
    for seed in 0..20 {
        env.reset(seed);
        loop {
            let a = scripted.choose(env.state());
            let r = env.step(a).unwrap();
            if r.events.contains(&Event::KeyCollected) {
                assert!(!r.events.contains(&Event::Killed));
                let extra = if r.events.contains(&Event::DoorReached) { 10.0 } else { 0.0 };
                assert!((r.reward - (10.0 - 0.02 + extra)).abs() < 1e-12, "{}", r.reward);
                assert_eq!(env.state().count(EntityClass::Key), 0);
                assert!(env.state().agent().has_key());
                checked += 1;
            }
            if r.done {
                break;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn eaten_by_the_bigger_fish_ends_the_episode() {
    let mut env = sim(EnvKind::ThreeFishes, Variant::Base);
    let mut found = false;
    'seeds: for seed in 0..50 {
        env.reset(seed);
        for t in 0.. {
            let r = env.step(t % 4).unwrap();
            if r.events.contains(&Event::Killed) {
                assert!(r.done);
                let eaten: f64 = r.events.iter().filter(|e| **e == Event::FishEaten).count() as f64;
                assert!((r.reward - (-1.0 + eaten)).abs() < 1e-12);
                found = true;
                break 'seeds;
            }
            if r.done {
                break;
            }
        }
    }
    assert!(found);
}

#[test]
fn idle_without_events_costs_the_step_penalty() {
    let mut env = sim(EnvKind::GetOut, Variant::Base);
    env.reset(0);
    let r = env.step(3).unwrap();
    assert!(r.events.is_empty());
    assert!(!r.done);
    assert!((r.reward + 0.02).abs() < 1e-12);
}

#[test]
fn stepping_a_terminal_state_fails() {
    let mut cfg = EnvConfig::new(EnvKind::Loot, Variant::Base);
    cfg.max_ticks = 1;
    let mut env = Simulator::new(cfg).unwrap();
    env.reset(0);
    let r = env.step(0).unwrap();
    assert!(r.done);
    assert!(env.step(0).is_err());
}

#[test]
fn episode_returns_follow_the_schedule() {
    let scripted = ScriptedGetOut::default();
    let mut env = sim(EnvKind::GetOut, Variant::Base);
    let (mut wins, mut deaths) = (0, 0);
    for seed in 0..30 {
        env.reset(seed);
        let mut ret = 0.0;
        let mut keyed = false;
        loop {
            let r = env.step(scripted.choose(env.state())).unwrap();
            ret += r.reward;
            keyed |= r.events.contains(&Event::KeyCollected);
            if r.done {
                if r.events.contains(&Event::DoorReached) {
                    assert!(ret > 0.0);
                    wins += 1;
                } else if r.events.contains(&Event::Killed) && !keyed {
                    assert!(ret < -15.0);
                    deaths += 1;
                }
                break;
            }
        }
    }
    assert!(wins > 0, "{wins} wins, {deaths} deaths");
}

#[test]
fn perception_examples() {
    let table = getout_table();
    let perceiver = Perceiver::new(table.clone(), &standard_evaluators()).unwrap();
    let mut state = keyless_getout_state();
    state.entities[0].x = 1.0;
    state.entities[1].x = 5.0;
    let v = perceiver.perceive(&state).unwrap();
    assert_eq!(v[FALSE_INDEX], 0.0);
    assert_eq!(v[TRUE_INDEX], 1.0);
    assert!(v[table.lookup("on_right", &["obj2", "obj1"]).unwrap()] > 0.95);
    assert_eq!(v[table.lookup("not_have_key", &["obj1"]).unwrap()], 1.0);
    assert_eq!(v[table.lookup("have_key", &["obj1"]).unwrap()], 0.0);
    assert!(table.action_range().all(|j| v[j] == 0.0));
    for j in table.state_range() {
        assert!((0.0..=1.0).contains(&v[j]));
    }
}

#[test]
fn perception_needs_every_evaluator() {
    let mut evals = standard_evaluators();
    evals.evaluators.remove("closeby");
    assert!(Perceiver::new(getout_table(), &evals).is_err());
}

fn fishes_policy() -> LogicPolicy {
    let t = table(EnvKind::ThreeFishes, Variant::Base);
    let rules = parse_rules(expert_rules(EnvKind::ThreeFishes), t.language()).unwrap();
    LogicPolicy::from_weighted_rules(&rules, t, ReasonerParams::default()).unwrap()
}

#[test]
fn swapping_size_for_color_rewrites_every_rule() {
    let p = fishes_policy();
    let target = table(EnvKind::ThreeFishes, Variant::Colored);
    let q = swap_predicate(&p, "is_bigger_than", "same_color", target).unwrap();
    assert_eq!(p.rules().len(), q.rules().len());
    assert!(q.rules().iter().all(|r| r.body.iter().all(|a| a.predicate != "is_bigger_than")));
    assert_eq!(p.weights(), q.weights());
    let before = p.rules().iter().flat_map(|r| &r.body).filter(|a| a.predicate == "is_bigger_than").count();
    let after = q.rules().iter().flat_map(|r| &r.body).filter(|a| a.predicate == "same_color").count();
    assert!(before > 0 && after >= before);
}

#[test]
fn swap_identity_and_signature_errors() {
    let p = fishes_policy();
    let same = swap_predicate(&p, "is_bigger_than", "is_bigger_than", p.table().clone()).unwrap();
    assert_eq!(p.to_checkpoint(None), same.to_checkpoint(None));
    assert!(swap_predicate(&p, "closeby", "type", p.table().clone()).is_err());
    assert!(swap_predicate(&p, "closeby", "no_such_predicate", p.table().clone()).is_err());
}

#[test]
fn rendering() {
    let mut env = sim(EnvKind::GetOut, Variant::Base);
    let s = env.reset(11).clone();
    let text = render_ascii(&s);
    for g in ['A', 'K', 'D', 'E'] {
        assert_eq!(text.matches(g).count(), 1, "{g}\n{text}");
    }
    assert_eq!(text, render_ascii(&s));
    assert!(text.trim_end().lines().last().unwrap().starts_with("tick 0"));

    let mut loot = sim(EnvKind::Loot, Variant::Base);
    let mut s = loot.reset(0).clone();
    let chest = s.entities.iter_mut().find(|e| e.class == EntityClass::Chest).unwrap();
    chest.opened = true;
    assert!(render_ascii(&s).contains('c'));
}

#[test]
fn trajectory_dump_has_one_line_per_step() {
    let mut env = sim(EnvKind::GetOut, Variant::Base);
    env.reset(2);
    let scripted = ScriptedGetOut::default();
    let mut rows = Vec::new();
    for _ in 0..25 {
        let a = greedy_action(&scripted.action_probs(env.state()).unwrap());
        let r = env.step(a).unwrap();
        rows.push(TrajectoryRow { tick: env.state().tick, action: a, reward: r.reward, done: r.done, state: env.state().clone() });
        if r.done {
            break;
        }
    }
    let mut out = Vec::new();
    write_trajectory(&mut out, &rows).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tick,action,reward,done,entities");
    assert_eq!(lines.len(), rows.len() + 1);
    for (line, row) in lines[1..].iter().zip(&rows) {
        let fields: Vec<&str> = line.splitn(5, ',').collect();
        assert_eq!(fields[0].parse::<usize>().unwrap(), row.tick);
        assert_eq!(fields[1].parse::<usize>().unwrap(), row.action);
        assert_eq!(fields[2].parse::<f64>().unwrap(), row.reward);
        assert!(fields[4].contains("obj1:A:"));
    }
}

fn rollout(env: EnvKind, variant: Variant, seed: u64, actions: &[usize]) -> Vec<(f64, bool, String)> {
    let mut s = sim(env, variant);
    s.reset(seed);
    let mut out = Vec::new();
    for &a in actions {
        let r = s.step(a % env.actions().len()).unwrap();
        out.push((r.reward, r.done, format!("{:?}", s.state())));
        if r.done {
            break;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn seed_and_actions_determine_the_trajectory(
        seed in 0u64..1000,
        env in 0usize..3,
        actions in prop::collection::vec(0usize..4, 1..120),
    ) {
        let (kind, variant) = [
            (EnvKind::GetOut, Variant::Plus),
            (EnvKind::ThreeFishes, Variant::Colored),
            (EnvKind::Loot, Variant::Base),
        ][env];
        prop_assert_eq!(rollout(kind, variant, seed, &actions), rollout(kind, variant, seed, &actions));
    }

    #[test]
    fn perception_is_lipschitz_in_coordinates(dx in -0.05f64..0.05, x in 0.0f64..20.0, seed in 0u64..50) {
        let table = getout_table();
        let perceiver = Perceiver::new(table.clone(), &standard_evaluators()).unwrap();
        let mut env = sim(EnvKind::GetOut, Variant::Base);
        let mut s = env.reset(seed).clone();
        s.agent_mut().x = x;
        let a = perceiver.perceive(&s).unwrap();
        s.agent_mut().x = x + dx;
        let b = perceiver.perceive(&s).unwrap();
        // Sigmoid slope 5 bounds the derivative by 5/4.
        for j in table.state_range() {
            prop_assert!((a[j] - b[j]).abs() <= 1.25 * dx.abs() + 1e-12, "{}", table.atom(j));
        }
    }
}
