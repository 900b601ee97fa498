use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::action::{softmax_scaled, ActionMap};
use super::forward::{Program, ReasonerParams, Trace};
use super::index::{build_index_tensor, IndexLimits};
use crate::error::{Error, Result};
use crate::logic::{parse_rule, GroundAtomTable, ParsedRule, Rule};

/// Raw M×C rule weights; each row is softmax-normalised before use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleWeights {
    rows: usize,
    cols: usize,
    raw: Vec<f64>,
}

impl RuleWeights {
    pub fn new(rows: usize, cols: usize, raw: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || raw.len() != rows * cols {
            return Err(Error::Shape(format!(
                "weight matrix needs {rows}×{cols} entries, got {}",
                raw.len()
            )));
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("rule weights".into()));
        }
        Ok(Self { rows, cols, raw })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    /// Raw entries drawn i.i.d. from a normal distribution with mean 0.
    pub fn random_normal<R: Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, std).map_err(|e| Error::Invalid(e.to_string()))?;
        Self::new(rows, cols, (0..rows * cols).map(|_| normal.sample(rng)).collect())
    }

    /// Builds raw weights whose softmax reproduces the given row masses.
    pub fn from_masses(rows: usize, cols: usize, masses: &[f64]) -> Result<Self> {
        if masses.len() != rows * cols {
            return Err(Error::Shape("mass matrix size mismatch".into()));
        }
        Self::new(rows, cols, masses.iter().map(|m| m.max(1e-12).ln()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.raw
    }

    /// Row-wise softmax of the raw weights.
    pub fn normalized(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.raw.len());
        for row in self.raw.chunks(self.cols) {
            out.extend(softmax_scaled(row, 1.0));
        }
        out
    }

    /// Converts a gradient with respect to the normalised weights into one
    /// with respect to the raw weights.
    pub fn raw_gradient(&self, wstar: &[f64], g_wstar: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.raw.len()];
        for m in 0..self.rows {
            let r = m * self.cols..(m + 1) * self.cols;
            let w = &wstar[r.clone()];
            let g = &g_wstar[r.clone()];
            let dot: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum();
            for (o, (wi, gi)) in out[r].iter_mut().zip(w.iter().zip(g)) {
                *o = wi * (gi - dot);
            }
        }
        out
    }
}

/// Result of evaluating the policy on one valuation.
#[derive(Clone, Debug)]
pub struct PolicyOutput {
    pub valuation: Vec<f64>,
    pub action_atoms: Vec<f64>,
    pub action_values: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Weighted rules compiled against an atom table.
#[derive(Clone, Debug)]
pub struct LogicPolicy {
    rules: Vec<Rule>,
    table: Arc<GroundAtomTable>,
    program: Program,
    actions: ActionMap,
    weights: RuleWeights,
    params: ReasonerParams,
}

impl LogicPolicy {
    pub fn new(
        rules: Vec<Rule>,
        table: Arc<GroundAtomTable>,
        weights: RuleWeights,
        params: ReasonerParams,
    ) -> Result<Self> {
        Self::with_limits(rules, table, weights, params, IndexLimits::default())
    }

    pub fn with_limits(
        rules: Vec<Rule>,
        table: Arc<GroundAtomTable>,
        weights: RuleWeights,
        params: ReasonerParams,
        limits: IndexLimits,
    ) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::Invalid("a logic policy needs at least one rule".into()));
        }
        if weights.cols() != rules.len() {
            return Err(Error::Shape(format!(
                "weights have {} columns for {} rules",
                weights.cols(),
                rules.len()
            )));
        }
        params.validate()?;
        let index = build_index_tensor(&rules, &table, limits)?;
        let actions = ActionMap::from_table(&table)?;
        Ok(Self { rules, table, program: Program::new(index), actions, weights, params })
    }

    /// A policy in which every rule has its own weight row holding all mass.
    pub fn one_rule_per_row(
        rules: Vec<Rule>,
        table: Arc<GroundAtomTable>,
        params: ReasonerParams,
    ) -> Result<Self> {
        let c = rules.len();
        let mut masses = vec![0.0; c * c];
        for i in 0..c {
            masses[i * c + i] = 1.0;
        }
        let weights = if c == 1 {
            RuleWeights::zeros(1, 1)?
        } else {
            RuleWeights::from_masses(c, c, &masses)?
        };
        Self::new(rules, table, weights, params)
    }

    /// Builds a policy from a weighted rule file: each line becomes one
    /// weight row whose printed weight is the mass on that line's rule, with
    /// the remainder spread uniformly over the other distinct rules.
    pub fn from_weighted_rules(
        parsed: &[ParsedRule],
        table: Arc<GroundAtomTable>,
        params: ReasonerParams,
    ) -> Result<Self> {
        if parsed.is_empty() {
            return Err(Error::Invalid("no rules given".into()));
        }
        let mut rules: Vec<Rule> = Vec::new();
        let mut chosen = Vec::with_capacity(parsed.len());
        for p in parsed {
            let i = match rules.iter().position(|r| r == &p.rule) {
                Some(i) => i,
                None => {
                    rules.push(p.rule.clone());
                    rules.len() - 1
                }
            };
            chosen.push(i);
        }
        let m = parsed.len();
        let c = rules.len();
        let weights = if c == 1 {
            RuleWeights::zeros(m, 1)?
        } else {
            let mut masses = vec![0.0; m * c];
            for (row, (p, &i)) in parsed.iter().zip(&chosen).enumerate() {
                let w = p.weight.unwrap_or(1.0).clamp(0.0, 1.0);
                let rest = (1.0 - w) / (c - 1) as f64;
                for j in 0..c {
                    masses[row * c + j] = if j == i { w } else { rest };
                }
            }
            RuleWeights::from_masses(m, c, &masses)?
        };
        Self::new(rules, table, weights, params)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn table(&self) -> &Arc<GroundAtomTable> {
        &self.table
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn action_map(&self) -> &ActionMap {
        &self.actions
    }

    pub fn weights(&self) -> &RuleWeights {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: RuleWeights) -> Result<()> {
        if weights.cols() != self.rules.len() {
            return Err(Error::Shape("weight columns differ from the rule count".into()));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn weights_mut(&mut self) -> &mut RuleWeights {
        &mut self.weights
    }

    pub fn params(&self) -> &ReasonerParams {
        &self.params
    }

    pub fn num_actions(&self) -> usize {
        self.actions.num_actions()
    }

    fn action_slice<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        &v[self.table.action_range()]
    }

    pub fn evaluate(&self, v0: &[f64]) -> Result<PolicyOutput> {
        let wstar = self.weights.normalized();
        let valuation = self.program.forward(v0, &wstar, self.weights.rows(), &self.params)?;
        self.output_from(valuation)
    }

    fn output_from(&self, valuation: Vec<f64>) -> Result<PolicyOutput> {
        let action_atoms = self.action_slice(&valuation).to_vec();
        let action_values = self.actions.values(&action_atoms, &self.params);
        let probs = softmax_scaled(&action_values, self.params.temperature);
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("action distribution".into()));
        }
        Ok(PolicyOutput { valuation, action_atoms, action_values, probs })
    }

    pub fn action_probs(&self, v0: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(v0)?.probs)
    }

    fn traced(&self, v0: &[f64]) -> Result<(Vec<f64>, Trace)> {
        let wstar = self.weights.normalized();
        let trace = self.program.forward_traced(v0, &wstar, self.weights.rows(), &self.params, true)?;
        Ok((wstar, trace))
    }

    fn pull_back(&self, wstar: &[f64], trace: &Trace, g_va: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut seed = vec![0.0; self.table.len()];
        seed[self.table.action_range()].copy_from_slice(g_va);
        let (g_wstar, g_v0) =
            self.program.backward(trace, wstar, self.weights.rows(), &self.params, &seed)?;
        Ok((self.weights.raw_gradient(wstar, &g_wstar), g_v0))
    }

    /// `ln π(action | v0)` with its gradients with respect to the raw
    /// weights and to `v0`.
    pub fn grad_log_prob(&self, v0: &[f64], action: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        self.check_action(action)?;
        let (wstar, trace) = self.traced(v0)?;
        let out = self.output_from(trace.output().to_vec())?;
        let g_va = self.actions.log_prob_gradient(&out.action_atoms, action, &self.params);
        let (g_raw, g_v0) = self.pull_back(&wstar, &trace, &g_va)?;
        Ok((out.probs[action].ln(), g_raw, g_v0))
    }

    /// Gradient of the aggregated value of `action` with respect to `v0`.
    pub fn action_value_gradient(&self, v0: &[f64], action: usize) -> Result<Vec<f64>> {
        self.check_action(action)?;
        let (wstar, trace) = self.traced(v0)?;
        let va = self.action_slice(trace.output()).to_vec();
        let g_va = self.actions.value_gradient(&va, action, &self.params);
        Ok(self.pull_back(&wstar, &trace, &g_va)?.1)
    }

    /// Jacobian of the action-atom valuations with respect to `v0`, one row
    /// per action atom.
    pub fn action_jacobian(&self, v0: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (wstar, trace) = self.traced(v0)?;
        let ga = self.table.num_action_atoms();
        let mut rows = Vec::with_capacity(ga);
        for p in 0..ga {
            let mut g_va = vec![0.0; ga];
            g_va[p] = 1.0;
            rows.push(self.pull_back(&wstar, &trace, &g_va)?.1);
        }
        Ok(rows)
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.num_actions() {
            return Err(Error::Invalid(format!(
                "action {action} out of range for {} actions",
                self.num_actions()
            )));
        }
        Ok(())
    }

    pub fn to_checkpoint(&self, env: Option<&str>) -> LogicCheckpoint {
        LogicCheckpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            env: env.map(str::to_string),
            rules: self.rules.iter().map(Rule::to_string).collect(),
            raw_weights: self.weights.raw().chunks(self.weights.cols()).map(<[f64]>::to_vec).collect(),
            params: self.params,
        }
    }

    pub fn from_checkpoint(ck: &LogicCheckpoint, table: Arc<GroundAtomTable>) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} version {}",
                ck.format, ck.version
            )));
        }
        let rules = ck
            .rules
            .iter()
            .map(|t| parse_rule(t, table.language()).map(|p| p.rule))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let rows = ck.raw_weights.len();
        let cols = ck.raw_weights.first().map(Vec::len).unwrap_or(0);
        if ck.raw_weights.iter().any(|r| r.len() != cols) {
            return Err(Error::Checkpoint("ragged weight matrix".into()));
        }
        let weights = RuleWeights::new(rows, cols, ck.raw_weights.concat())?;
        Self::new(rules, table, weights, ck.params)
    }

    pub fn save(&self, path: &Path, env: Option<&str>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_checkpoint(env))
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path, table: Arc<GroundAtomTable>) -> Result<Self> {
        Self::from_checkpoint(&LogicCheckpoint::read(path)?, table)
    }
}

const CHECKPOINT_FORMAT: &str = "logic-policy";
const CHECKPOINT_VERSION: u32 = 1;

/// Serialised logic policy: rule texts, raw weights and smoothing settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicCheckpoint {
    pub format: String,
    pub version: u32,
    #[serde(default)]
    pub env: Option<String>,
    pub rules: Vec<String>,
    pub raw_weights: Vec<Vec<f64>>,
    pub params: ReasonerParams,
}

impl LogicCheckpoint {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}
