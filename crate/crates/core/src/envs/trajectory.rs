use std::io::Write;

use super::EnvState;
use crate::error::Result;

/// One step of a replay dump.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub tick: usize,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
    /// State after the step.
    pub state: EnvState,
}

fn entity_field(state: &EnvState) -> String {
    state
        .entities
        .iter()
        .map(|e| {
            let mut s = format!("{}:{}:{:.4}:{:.4}", e.id, e.class.glyph(), e.x, e.y);
            if e.has_key() {
                s.push_str(":key");
            }
            if e.opened {
                s.push_str(":open");
            }
            s
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes `tick,action,reward,done,entities` rows; entities are
/// `id:glyph:x:y[:key][:open]` joined by `;`.
pub fn write_trajectory<W: Write>(out: &mut W, rows: &[TrajectoryRow]) -> Result<()> {
    writeln!(out, "tick,action,reward,done,entities")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.tick, r.action, r.reward, r.done, entity_field(&r.state))?;
    }
    Ok(())
}
