use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use relog_core::abstraction::{
    beam_search, collect_states, write_scores, BeamOptions, RefinementConfig, StateSample,
};
use relog_core::agent::{greedy_action, sample_action, LogicAgent, Policy, RandomPolicy, ScriptedGetOut};
use relog_core::envs::{
    builtin_modes, initial_rules, render_ascii, swap_predicate, write_trajectory, EnvKind, Environment,
    Perceiver, Simulator, TrajectoryRow, Variant,
};
use relog_core::logic::{
    build_atom_table, format_weighted_rule, parse_mode_declarations, parse_rules, GroundAtomTable, Rule,
    DEFAULT_TABLE_CAP,
};
use relog_core::reasoner::{explain as explain_policy, LogicCheckpoint, LogicPolicy};
use relog_core::training::{
    actor_critic_train_logic, evaluate, init_rule_weights, ppo_train_neural, prune_rules, pruning_drift,
    NeuralPolicy,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{read_file, require_file, RunConfig};
use crate::Common;

/// Bad invocation detected after argument parsing; exits with code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Config file plus flag overrides, validated.
fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(env) = &common.env {
        let kind: EnvKind = env.parse().map_err(|e| usage(format!("{e}")))?;
        if kind != cfg.env.env {
            cfg.env.env = kind;
            cfg.env.variant = Variant::Base;
        }
    }
    if let Some(v) = &common.variant {
        cfg.env.variant = v.parse().map_err(|e| usage(format!("{e}")))?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    Ok(cfg.out_dir.join(name))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn table_for(cfg: &RunConfig) -> Result<Arc<GroundAtomTable>> {
    Ok(Arc::new(build_atom_table(&cfg.language()?, DEFAULT_TABLE_CAP)?))
}

fn env_tag(cfg: &RunConfig) -> String {
    format!("{}/{}", cfg.env.env, cfg.env.variant)
}

enum Loaded {
    Logic(LogicAgent),
    Neural(NeuralPolicy),
}

impl Loaded {
    fn policy(&self) -> &dyn Policy {
        match self {
            Loaded::Logic(a) => a,
            Loaded::Neural(n) => n,
        }
    }
}

/// Logic checkpoints are compiled against the configured language; anything
/// else is read as a neural checkpoint.
fn load_checkpoint(path: &Path, cfg: &RunConfig) -> Result<Loaded> {
    require_file(path)?;
    if let Ok(ck) = LogicCheckpoint::read(path) {
        let policy = LogicPolicy::from_checkpoint(&ck, table_for(cfg)?)
            .with_context(|| format!("loading {}", path.display()))?;
        return Ok(Loaded::Logic(LogicAgent::new(policy, &cfg.evaluators())?));
    }
    let (policy, _) = NeuralPolicy::load(path)?;
    Ok(Loaded::Neural(policy))
}

fn load_logic(path: &Path, cfg: &RunConfig) -> Result<LogicAgent> {
    match load_checkpoint(path, cfg)? {
        Loaded::Logic(a) => Ok(a),
        Loaded::Neural(_) => bail!("{} is not a logic checkpoint", path.display()),
    }
}

fn load_rules(path: &Path, cfg: &RunConfig) -> Result<Vec<Rule>> {
    let text = read_file(path)?;
    let lang = cfg.language()?;
    let parsed = parse_rules(&text, &lang).with_context(|| format!("parsing {}", path.display()))?;
    let mut rules: Vec<Rule> = Vec::new();
    for p in parsed {
        if !rules.contains(&p.rule) {
            rules.push(p.rule);
        }
    }
    if rules.is_empty() {
        bail!("{} contains no rules", path.display());
    }
    Ok(rules)
}

/// Rules with the largest mass any weight row gives them, four decimals.
fn write_weighted_rules(path: &Path, policy: &LogicPolicy) -> Result<()> {
    let w = policy.weights();
    let wstar = w.normalized();
    let mut out = create(path)?;
    for (i, rule) in policy.rules().iter().enumerate() {
        let mass = (0..w.rows()).map(|m| wstar[m * w.cols() + i]).fold(0.0, f64::max);
        writeln!(out, "{}", format_weighted_rule((mass * 1e4).round() / 1e4, rule))?;
    }
    out.flush()?;
    Ok(())
}

pub fn train_neural(common: &Common, steps: Option<usize>) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(s) = steps {
        cfg.ppo.total_steps = s;
    }
    let (policy, report) = ppo_train_neural(&cfg.env, &cfg.ppo, cfg.seed)?;
    let ck = output(&cfg, "neural.json")?;
    policy.save(&ck, &cfg.env)?;
    let csv = output(&cfg, "neural_metrics.csv")?;
    let mut out = create(&csv)?;
    report.write_csv(&mut out, Some(&cfg.metadata("train-neural")))?;
    out.flush()?;
    println!(
        "trained {} steps, {} episodes, last-50 mean return {:.3}",
        cfg.ppo.total_steps,
        report.episodes.len(),
        report.tail_mean(50).unwrap_or(f64::NAN)
    );
    println!("checkpoint {}\nmetrics {}", ck.display(), csv.display());
    Ok(())
}

pub fn abstract_rules(
    common: &Common,
    oracle: Option<&Path>,
    scripted: bool,
    beam_width: Option<usize>,
    depth: Option<usize>,
    no_guidance: bool,
) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(n) = beam_width {
        cfg.abstraction.beam_width = n;
    }
    if let Some(t) = depth {
        cfg.abstraction.depth = t;
    }
    let lang = cfg.language()?;
    let table = Arc::new(build_atom_table(&lang, DEFAULT_TABLE_CAP)?);
    let modes_text = match &cfg.modes {
        Some(p) => read_file(p)?,
        None => builtin_modes(cfg.env.env).to_string(),
    };
    let initial_text = match &cfg.initial_rules {
        Some(p) => read_file(p)?,
        None => initial_rules(cfg.env.env).to_string(),
    };
    let modes = parse_mode_declarations(&modes_text, &lang)?;
    let initial: Vec<Rule> = parse_rules(&initial_text, &lang)?.into_iter().map(|p| p.rule).collect();
    let rc = RefinementConfig {
        modes,
        max_body_len: cfg.abstraction.max_body_len,
        beam_width: cfg.abstraction.beam_width,
        depth: cfg.abstraction.depth,
    };
    let sample = if no_guidance {
        StateSample { states: vec![], valuations: vec![], oracle: vec![], partial: false }
    } else {
        let oracle: Box<dyn Policy> = match (oracle, scripted) {
            (_, true) if cfg.env.env != EnvKind::GetOut => {
                return Err(usage("the scripted oracle only plays GetOut"));
            }
            (_, true) => Box::new(ScriptedGetOut::default()),
            (Some(p), false) => match load_checkpoint(p, &cfg)? {
                Loaded::Neural(n) => Box::new(n),
                Loaded::Logic(a) => Box::new(a),
            },
            (None, false) => return Err(usage("guided abstraction needs --oracle or --scripted")),
        };
        let perceiver = Perceiver::new(table.clone(), &cfg.evaluators())?;
        let mut env = Simulator::new(cfg.env.clone())?;
        collect_states(
            oracle.as_ref(),
            &mut env,
            &perceiver,
            cfg.abstraction.samples,
            cfg.abstraction.epsilon,
            cfg.seed,
        )?
    };
    if sample.partial {
        eprintln!("warning: state collection stopped early after {} states", sample.len());
    }
    let opts = BeamOptions { mode: cfg.abstraction.score_mode, guided: !no_guidance, params: cfg.reasoner };
    let result = beam_search(&initial, &sample, &table, &rc, &opts)?;
    for n in &result.notices {
        eprintln!("notice: {n}");
    }
    let rules_path = output(&cfg, "candidates.rules")?;
    let mut out = create(&rules_path)?;
    for r in &result.candidates {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    let scores_path = output(&cfg, "scores.csv")?;
    let mut out = create(&scores_path)?;
    writeln!(
        out,
        "# {} samples={} epsilon={} guided={}",
        cfg.metadata("abstract"),
        sample.len(),
        cfg.abstraction.epsilon,
        !no_guidance
    )?;
    write_scores(&mut out, &result.scored)?;
    out.flush()?;
    println!(
        "{} candidate rules, {} scored refinements\nrules {}\nscores {}",
        result.candidates.len(),
        result.scored.len(),
        rules_path.display(),
        scores_path.display()
    );
    Ok(())
}

pub fn train_logic(
    common: &Common,
    rules_path: &Path,
    critic_path: Option<&Path>,
    steps: Option<usize>,
    slots: Option<usize>,
    prune: Option<usize>,
) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(s) = steps {
        cfg.logic.total_steps = s;
    }
    if slots.is_some() {
        cfg.slots = slots;
    }
    if prune == Some(0) {
        return Err(usage("--prune needs k >= 1"));
    }
    let rules = load_rules(rules_path, &cfg)?;
    let table = table_for(&cfg)?;
    let c = rules.len();
    let m = cfg.slots.unwrap_or_else(|| table.language().action_predicates().count()).min(c);
    let weights = init_rule_weights(c, m, cfg.seed)?;
    let policy = LogicPolicy::new(rules, table, weights, cfg.reasoner)?;
    let mut agent = LogicAgent::new(policy, &cfg.evaluators())?;
    let mut critic = match critic_path {
        Some(p) => {
            require_file(p)?;
            NeuralPolicy::load(p)?.0
        }
        None => {
            eprintln!("no critic given, pretraining one with PPO for {} steps", cfg.ppo.total_steps);
            ppo_train_neural(&cfg.env, &cfg.ppo, cfg.seed)?.0
        }
    };
    let mut env = Simulator::new(cfg.env.clone())?;
    let report = actor_critic_train_logic(&mut agent, &mut env, &mut critic, &cfg.logic, cfg.seed)?;
    let csv = output(&cfg, "logic_metrics.csv")?;
    let mut out = create(&csv)?;
    report.write_csv(&mut out, Some(&cfg.metadata("train-logic")))?;
    out.flush()?;
    if let Some(k) = prune {
        let pruned = prune_rules(&agent.policy, k)?;
        let mut probe_env = Simulator::new(cfg.env.clone())?;
        let probe = collect_states(&RandomPolicy::for_env(cfg.env.env), &mut probe_env, &agent.perceiver, 200, 0.0, cfg.seed)?;
        let drift = pruning_drift(&agent.policy, &pruned, &probe.valuations)?;
        println!(
            "pruned {} -> {} rules (k={k}), largest total-variation drift {drift:.6}",
            agent.policy.rules().len(),
            pruned.rules().len()
        );
        agent.policy = pruned;
    }
    let ck = output(&cfg, "logic.json")?;
    agent.policy.save(&ck, Some(&env_tag(&cfg)))?;
    let final_rules = output(&cfg, "final.rules")?;
    write_weighted_rules(&final_rules, &agent.policy)?;
    println!(
        "trained {} steps, {} episodes, last-50 mean return {:.3}",
        cfg.logic.total_steps,
        report.episodes.len(),
        report.tail_mean(50).unwrap_or(f64::NAN)
    );
    println!("checkpoint {}\nrules {}\nmetrics {}", ck.display(), final_rules.display(), csv.display());
    Ok(())
}

pub fn eval(
    common: &Common,
    checkpoint: Option<&Path>,
    episodes: usize,
    greedy: bool,
    swap: Option<&[String]>,
) -> Result<()> {
    if episodes == 0 {
        return Err(usage("episodes must be ≥ 1"));
    }
    let cfg = load_config(common)?;
    let loaded = match checkpoint {
        Some(p) => Some(load_checkpoint(p, &cfg)?),
        None => None,
    };
    let loaded = match (loaded, swap) {
        (Some(Loaded::Logic(agent)), Some([from, to])) => {
            let table = agent.table().clone();
            let swapped = swap_predicate(&agent.policy, from, to, table)?;
            Some(Loaded::Logic(LogicAgent::new(swapped, &cfg.evaluators())?))
        }
        (_, Some(_)) => return Err(usage("--swap needs a logic checkpoint")),
        (l, None) => l,
    };
    let random = RandomPolicy::for_env(cfg.env.env);
    let policy: &dyn Policy = loaded.as_ref().map_or(&random, |l| l.policy());
    let stats = evaluate(policy, &cfg.env, episodes, cfg.seed, greedy)?;
    let path = output(&cfg, "eval.csv")?;
    let mut out = create(&path)?;
    writeln!(out, "# {} episodes={episodes} greedy={greedy}", cfg.metadata("eval"))?;
    writeln!(out, "episode,return,chests")?;
    for (i, (r, c)) in stats.returns.iter().zip(&stats.chests_per_episode).enumerate() {
        writeln!(out, "{i},{r},{c}")?;
    }
    out.flush()?;
    let e = &stats.events;
    println!("mean return {:.4} ± {:.4} over {} episodes", stats.mean, stats.std, stats.episodes());
    println!(
        "events: keys {} doors {} chests {} fish eaten {} deaths {} timeouts {}",
        e.keys, e.doors, e.chests, e.fish_eaten, e.deaths, e.timeouts
    );
    println!("statistics {}", path.display());
    Ok(())
}

pub fn explain(common: &Common, checkpoint: &Path, step: usize, top: usize) -> Result<()> {
    let cfg = load_config(common)?;
    let agent = load_logic(checkpoint, &cfg)?;
    let mut env = Simulator::new(cfg.env.clone())?;
    env.reset(cfg.seed);
    for t in 0..step {
        let probs = agent.action_probs(env.state())?;
        if env.step(greedy_action(&probs))?.done {
            bail!("step {step} is beyond the end of the episode, which ended after {} steps", t + 1);
        }
    }
    let state = env.state().clone();
    let v0 = agent.perceiver.perceive(&state)?;
    let ex = explain_policy(&agent.policy, &v0)?;

    println!("{}", render_ascii(&state));
    let names = agent.table().language().actions().to_vec();
    let probs: Vec<String> = names.iter().zip(&ex.probs).map(|(n, p)| format!("{n}={p:.4}")).collect();
    println!("step {step}: chose {} ({})", ex.action_name, probs.join(" "));
    println!("top attributions:");
    for a in ex.attributions.iter().take(top) {
        println!("  {:>12.6}  {} = {:.4}", a.gradient, a.text, a.valuation);
    }
    println!("deduction:");
    for f in &ex.firings {
        let body: Vec<String> = f.body.iter().map(|(a, v)| format!("{a}={v:.3}")).collect();
        println!("  {} <- {} [body {:.4}, weight {:.4}]", f.head, body.join(", "), f.body_value, f.weight);
    }

    let path = output(&cfg, "explain.csv")?;
    let mut out = create(&path)?;
    writeln!(out, "# {} step={step} action={}", cfg.metadata("explain"), ex.action_name)?;
    writeln!(out, "rank,atom,valuation,gradient,magnitude")?;
    for (i, a) in ex.attributions.iter().enumerate() {
        writeln!(out, "{i},{},{},{},{}", a.text, a.valuation, a.gradient, a.gradient.abs())?;
    }
    out.flush()?;
    let trace = output(&cfg, "deduction.csv")?;
    let mut out = create(&trace)?;
    writeln!(out, "# {} step={step} action={}", cfg.metadata("explain"), ex.action_name)?;
    writeln!(out, "rule,head,body,body_value,weight")?;
    for f in &ex.firings {
        let body: Vec<String> = f.body.iter().map(|(a, v)| format!("{a}={v}")).collect();
        writeln!(out, "\"{}\",{},\"{}\",{},{}", f.rule_text, f.head, body.join(";"), f.body_value, f.weight)?;
    }
    out.flush()?;
    println!("attributions {}\ndeduction {}", path.display(), trace.display());
    Ok(())
}

pub fn render(common: &Common, checkpoint: Option<&Path>, steps: usize, trajectory: Option<&Path>) -> Result<()> {
    let cfg = load_config(common)?;
    let loaded = match checkpoint {
        Some(p) => Some(load_checkpoint(p, &cfg)?),
        None => None,
    };
    let random = RandomPolicy::for_env(cfg.env.env);
    let policy: &dyn Policy = loaded.as_ref().map_or(&random, |l| l.policy());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut env = Simulator::new(cfg.env.clone())?;
    env.reset(cfg.seed);
    println!("{}", render_ascii(env.state()));
    let names = cfg.env.env.actions();
    let mut rows = Vec::new();
    for _ in 0..steps {
        let probs = policy.action_probs(env.state())?;
        let action = sample_action(&probs, &mut rng);
        let r = env.step(action)?;
        let state = env.state().clone();
        println!("action {} reward {}\n{}", names[action], r.reward, render_ascii(&state));
        rows.push(TrajectoryRow { tick: state.tick, action, reward: r.reward, done: r.done, state });
        if r.done {
            break;
        }
    }
    if let Some(path) = trajectory {
        let mut out = create(path)?;
        write_trajectory(&mut out, &rows)?;
        out.flush()?;
    }
    Ok(())
}
