use serde::{Deserialize, Serialize};

use super::index::IndexTensor;
use super::softor::{anchored_raw, anchored_weights};
use crate::error::{Error, Result};
use crate::logic::{FALSE_INDEX, TRUE_INDEX};

/// Raw values within this distance above 1 still pass gradient through the
/// clamp; it absorbs rounding in `softor` of fully satisfied inputs.
const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReasonerParams {
    /// Smoothing of the soft disjunctions inside reasoning.
    pub gamma_reason: f64,
    /// Smoothing of the per-action aggregation of action atoms.
    pub gamma_action: f64,
    /// Number of forward-chaining steps.
    pub steps: usize,
    /// Value given to actions that no action atom maps to.
    pub action_floor: f64,
    /// Softmax temperature over action values.
    pub temperature: f64,
}

impl Default for ReasonerParams {
    fn default() -> Self {
        Self { gamma_reason: 0.01, gamma_action: 0.01, steps: 1, action_floor: 0.0, temperature: 1.0 }
    }
}

impl ReasonerParams {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("gamma_reason", self.gamma_reason), ("gamma_action", self.gamma_action)] {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::Invalid(format!("{name} must be positive, got {g}")));
            }
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::Invalid(format!("temperature must be positive, got {}", self.temperature)));
        }
        if self.steps == 0 {
            return Err(Error::Invalid("at least one reasoning step is required".into()));
        }
        if !self.action_floor.is_finite() {
            return Err(Error::Invalid("action floor must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Source {
    rule: usize,
    head_slot: usize,
    b_offset: usize,
    n_subs: usize,
}

#[derive(Clone, Debug)]
struct Derivation {
    atom: usize,
    sources: Vec<Source>,
    c_offset: usize,
}

/// Index tensor rearranged by derived atom for the forward pass.
#[derive(Clone, Debug)]
pub struct Program {
    index: IndexTensor,
    derivations: Vec<Derivation>,
    num_sources: usize,
    num_products: usize,
}

#[derive(Clone, Debug)]
struct StepTrace {
    input: Vec<f64>,
    b: Vec<f64>,
    c_raw: Vec<f64>,
    h: Vec<f64>,
    r_raw: Vec<f64>,
    out_raw: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    steps: Vec<StepTrace>,
    output: Vec<f64>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn clamp_mask(raw: f64) -> f64 {
    if (0.0..=1.0 + CLAMP_TOLERANCE).contains(&raw) {
        1.0
    } else {
        0.0
    }
}

impl Program {
    pub fn new(index: IndexTensor) -> Self {
        let mut per_atom: Vec<Vec<(usize, usize)>> = vec![Vec::new(); index.num_atoms()];
        for i in 0..index.num_rules() {
            for (slot, hg) in index.groundings(i).iter().enumerate() {
                per_atom[hg.head].push((i, slot));
            }
        }
        let l = index.body_len();
        let mut derivations = Vec::new();
        let mut b_offset = 0;
        let mut c_offset = 0;
        for (atom, srcs) in per_atom.into_iter().enumerate() {
            if srcs.is_empty() {
                continue;
            }
            let mut sources = Vec::with_capacity(srcs.len());
            let start = c_offset;
            for (rule, head_slot) in srcs {
                let n_subs = index.groundings(rule)[head_slot].len(l);
                sources.push(Source { rule, head_slot, b_offset, n_subs });
                b_offset += n_subs;
                c_offset += 1;
            }
            derivations.push(Derivation { atom, sources, c_offset: start });
        }
        Self { index, derivations, num_sources: c_offset, num_products: b_offset }
    }

    pub fn index(&self) -> &IndexTensor {
        &self.index
    }

    pub fn num_atoms(&self) -> usize {
        self.index.num_atoms()
    }

    pub fn num_rules(&self) -> usize {
        self.index.num_rules()
    }

    /// Table indices of atoms that some rule can derive.
    pub fn derived_atoms(&self) -> impl Iterator<Item = usize> + '_ {
        self.derivations.iter().map(|d| d.atom)
    }

    fn bodies(&self, s: &Source) -> &[usize] {
        &self.index.groundings(s.rule)[s.head_slot].bodies
    }

    pub fn validate_valuation(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.num_atoms() {
            return Err(Error::Shape(format!(
                "valuation has {} entries, the atom table has {}",
                v.len(),
                self.num_atoms()
            )));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("valuation entry {i}")));
        }
        if let Some(i) = v.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Valuation(format!("entry {i} is {} outside [0, 1]", v[i])));
        }
        if v[FALSE_INDEX] != 0.0 || v[TRUE_INDEX] != 1.0 {
            return Err(Error::Valuation("entries 0 and 1 must be exactly 0 and 1".into()));
        }
        Ok(())
    }

    fn check_weights(&self, wstar: &[f64], rows: usize) -> Result<()> {
        if rows == 0 || wstar.len() != rows * self.num_rules() {
            return Err(Error::Shape(format!(
                "weight matrix has {} entries, expected {rows}×{}",
                wstar.len(),
                self.num_rules()
            )));
        }
        Ok(())
    }

    /// Runs `params.steps` forward-chaining steps from `v0`. `wstar` is the
    /// row-normalised M×C weight matrix.
    pub fn forward(
        &self,
        v0: &[f64],
        wstar: &[f64],
        rows: usize,
        params: &ReasonerParams,
    ) -> Result<Vec<f64>> {
        Ok(self.forward_traced(v0, wstar, rows, params, false)?.output)
    }

    pub fn forward_traced(
        &self,
        v0: &[f64],
        wstar: &[f64],
        rows: usize,
        params: &ReasonerParams,
        keep: bool,
    ) -> Result<Trace> {
        self.validate_valuation(v0)?;
        self.check_weights(wstar, rows)?;
        params.validate()?;
        let gamma = params.gamma_reason;
        let c_rules = self.num_rules();
        let l = self.index.body_len();
        let mut v = v0.to_vec();
        let mut steps = Vec::new();
        let mut hs = vec![0.0; rows];
        for _ in 0..params.steps {
            let mut st = StepTrace {
                input: Vec::new(),
                b: vec![0.0; self.num_products],
                c_raw: vec![0.0; self.num_sources],
                h: vec![0.0; self.derivations.len() * rows],
                r_raw: vec![0.0; self.derivations.len()],
                out_raw: vec![0.0; self.derivations.len()],
            };
            let mut next = v.clone();
            for (d_idx, d) in self.derivations.iter().enumerate() {
                hs.iter_mut().for_each(|x| *x = 0.0);
                for (s_idx, s) in d.sources.iter().enumerate() {
                    let bodies = self.bodies(s);
                    let bslice = &mut st.b[s.b_offset..s.b_offset + s.n_subs];
                    for (k, row) in bodies.chunks(l).enumerate() {
                        bslice[k] = row.iter().map(|&a| v[a]).product();
                    }
                    let c_raw = anchored_raw(bslice, gamma);
                    st.c_raw[d.c_offset + s_idx] = c_raw;
                    let c = clamp01(c_raw);
                    for (m, h) in hs.iter_mut().enumerate() {
                        *h += wstar[m * c_rules + s.rule] * c;
                    }
                }
                st.h[d_idx * rows..(d_idx + 1) * rows].copy_from_slice(&hs);
                let r_raw = anchored_raw(&hs, gamma);
                st.r_raw[d_idx] = r_raw;
                let out_raw = anchored_raw(&[clamp01(r_raw), v[d.atom]], gamma);
                st.out_raw[d_idx] = out_raw;
                next[d.atom] = clamp01(out_raw);
            }
            if next.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("forward reasoning".into()));
            }
            if keep {
                st.input = std::mem::replace(&mut v, next);
                steps.push(st);
            } else {
                v = next;
            }
        }
        Ok(Trace { steps, output: v })
    }

    /// Reverse pass. `seed` is the gradient of a scalar with respect to the
    /// final valuation; returns its gradients with respect to the M×C
    /// normalised weights and to `v0`. Entries 0 and 1 of the valuation
    /// gradient are zero because those atoms are constants.
    pub fn backward(
        &self,
        trace: &Trace,
        wstar: &[f64],
        rows: usize,
        params: &ReasonerParams,
        seed: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if trace.steps.is_empty() {
            return Err(Error::Invalid("trace was recorded without intermediate values".into()));
        }
        if seed.len() != self.num_atoms() {
            return Err(Error::Shape("gradient seed length differs from the atom table".into()));
        }
        let gamma = params.gamma_reason;
        let c_rules = self.num_rules();
        let l = self.index.body_len();
        let mut g_w = vec![0.0; rows * c_rules];
        let mut g_out = seed.to_vec();
        let mut wbuf: Vec<f64> = Vec::new();
        let mut g_h = vec![0.0; rows];
        for st in trace.steps.iter().rev() {
            let v = &st.input;
            let mut g_in = g_out.clone();
            for d in &self.derivations {
                g_in[d.atom] = 0.0;
            }
            for (d_idx, d) in self.derivations.iter().enumerate() {
                let g = g_out[d.atom];
                if g == 0.0 {
                    continue;
                }
                let g = g * clamp_mask(st.out_raw[d_idx]);
                let r_raw = st.r_raw[d_idx];
                let pair = [clamp01(r_raw), v[d.atom]];
                let mut pw = [0.0; 2];
                anchored_weights(&pair, gamma, &mut pw);
                g_in[d.atom] += g * pw[1];
                let g_r = g * pw[0] * clamp_mask(r_raw);
                if g_r == 0.0 {
                    continue;
                }
                let h = &st.h[d_idx * rows..(d_idx + 1) * rows];
                wbuf.resize(rows, 0.0);
                anchored_weights(h, gamma, &mut wbuf);
                for m in 0..rows {
                    g_h[m] = g_r * wbuf[m];
                }
                for (s_idx, s) in d.sources.iter().enumerate() {
                    let c_raw = st.c_raw[d.c_offset + s_idx];
                    let c = clamp01(c_raw);
                    let mut g_c = 0.0;
                    for m in 0..rows {
                        g_w[m * c_rules + s.rule] += g_h[m] * c;
                        g_c += g_h[m] * wstar[m * c_rules + s.rule];
                    }
                    let g_craw = g_c * clamp_mask(c_raw);
                    if g_craw == 0.0 {
                        continue;
                    }
                    let bslice = &st.b[s.b_offset..s.b_offset + s.n_subs];
                    wbuf.resize(s.n_subs, 0.0);
                    anchored_weights(bslice, gamma, &mut wbuf);
                    for (k, row) in self.bodies(s).chunks(l).enumerate() {
                        let g_b = g_craw * wbuf[k];
                        if g_b == 0.0 {
                            continue;
                        }
                        product_backward(row, v, g_b, &mut g_in);
                    }
                }
            }
            g_out = g_in;
        }
        g_out[FALSE_INDEX] = 0.0;
        g_out[TRUE_INDEX] = 0.0;
        if g_out.iter().chain(g_w.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("backward pass".into()));
        }
        Ok((g_w, g_out))
    }
}

/// Adds `g · ∂(Π v[row])/∂v[row[l]]` for every slot, using prefix and suffix
/// products so zero factors are handled exactly.
fn product_backward(row: &[usize], v: &[f64], g: f64, g_in: &mut [f64]) {
    let n = row.len();
    let mut suffix = [1.0f64; 16];
    let mut heap;
    let suffix: &mut [f64] = if n + 1 <= suffix.len() {
        &mut suffix[..n + 1]
    } else {
        heap = vec![1.0; n + 1];
        &mut heap
    };
    suffix[n] = 1.0;
    for l in (0..n).rev() {
        suffix[l] = suffix[l + 1] * v[row[l]];
    }
    let mut prefix = 1.0;
    for l in 0..n {
        g_in[row[l]] += g * prefix * suffix[l + 1];
        prefix *= v[row[l]];
    }
}
