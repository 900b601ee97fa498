//! Neurally guided rule abstraction.
//!
//! Starting from typing-only rules, a beam search appends mode-permitted body
//! atoms and keeps the refinements whose single-rule policy agrees best with
//! an oracle policy on a sample of states. Agreement is divided by how often
//! the rule's body holds on the sample, which keeps overly general rules from
//! dominating.

mod beam;
mod refine;
mod sample;
mod score;

use std::io::Write;

pub use beam::{beam_search, BeamOptions, BeamResult};
pub use refine::{refine, RefinementConfig};
pub use sample::collect_states;
pub use score::{normalization, score_rule, ScoreMode, ScoredRule, StateSample, NORMALIZATION_EPS};

use crate::error::Result;

/// Writes `rule,score,normalization,guarded` rows, one per scored rule.
pub fn write_scores<W: Write>(out: &mut W, scored: &[ScoredRule]) -> Result<()> {
    writeln!(out, "rule,score,normalization,guarded")?;
    for s in scored {
        writeln!(out, "\"{}\",{},{},{}", s.rule, s.score, s.normalization, s.guarded)?;
    }
    Ok(())
}
