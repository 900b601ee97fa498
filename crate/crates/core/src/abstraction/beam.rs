use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::refine::{refine, RefinementConfig};
use super::score::{score_rule, ScoreMode, ScoredRule, StateSample};
use crate::error::{Error, Result};
use crate::logic::{GroundAtomTable, Rule};
use crate::reasoner::ReasonerParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamOptions {
    pub mode: ScoreMode,
    /// When false every refinement is kept and nothing is scored.
    pub guided: bool,
    pub params: ReasonerParams,
}

impl Default for BeamOptions {
    fn default() -> Self {
        Self { mode: ScoreMode::default(), guided: true, params: ReasonerParams::default() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct BeamResult {
    /// Every opened rule, in opening order without repeats.
    pub candidates: Vec<Rule>,
    /// Every scored refinement, in scoring order.
    pub scored: Vec<ScoredRule>,
    /// (rule, refinement) pairs generated during the search.
    pub refinements: Vec<(Rule, Rule)>,
    pub notices: Vec<String>,
}

fn rank(a: &ScoredRule, b: &ScoredRule) -> std::cmp::Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| a.rule.to_string().cmp(&b.rule.to_string()))
}

/// Runs the beam from every initial rule separately and merges the opened
/// rules. Each beam opens its rules, refines them, keeps the best
/// `beam_width` refinements (score descending, text ascending) and repeats
/// `depth` times.
pub fn beam_search(
    initial: &[Rule],
    sample: &StateSample,
    table: &Arc<GroundAtomTable>,
    cfg: &RefinementConfig,
    opts: &BeamOptions,
) -> Result<BeamResult> {
    cfg.validate()?;
    if initial.is_empty() {
        return Err(Error::Invalid("at least one initial rule is required".into()));
    }
    if opts.guided {
        sample.validate(table)?;
    }
    let lang = table.language();
    let mut result = BeamResult::default();
    let mut opened: HashSet<Rule> = HashSet::new();
    let mut cache: BTreeMap<Rule, ScoredRule> = BTreeMap::new();
    for start in initial {
        let mut to_open = vec![start.clone()];
        for t in 0..cfg.depth {
            let mut beam: Vec<ScoredRule> = Vec::new();
            let mut seen: HashSet<Rule> = HashSet::new();
            for rule in &to_open {
                if opened.insert(rule.clone()) {
                    result.candidates.push(rule.clone());
                }
                for r in refine(rule, cfg, lang) {
                    result.refinements.push((rule.clone(), r.clone()));
                    if !seen.insert(r.clone()) {
                        continue;
                    }
                    let scored = if opts.guided {
                        match cache.get(&r) {
                            Some(s) => s.clone(),
                            None => {
                                let s = score_rule(&r, sample, table, &opts.params, opts.mode)?;
                                cache.insert(r.clone(), s.clone());
                                result.scored.push(s.clone());
                                s
                            }
                        }
                    } else {
                        ScoredRule { rule: r, score: 0.0, normalization: 0.0, guarded: false }
                    };
                    beam.push(scored);
                }
            }
            if opts.guided {
                beam.sort_by(rank);
                beam.truncate(cfg.beam_width);
            }
            if beam.is_empty() && t + 1 < cfg.depth {
                result.notices.push(format!(
                    "no refinements left after {} of {} iterations starting from {start}",
                    t + 1,
                    cfg.depth
                ));
                break;
            }
            to_open = beam.into_iter().map(|s| s.rule).collect();
        }
    }
    Ok(result)
}
