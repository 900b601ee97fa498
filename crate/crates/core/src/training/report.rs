use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Window of the moving average over episode returns.
pub const MOVING_WINDOW: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Environment steps taken so far, including this episode.
    pub steps: usize,
    pub ret: f64,
    pub moving_avg: f64,
    /// Mean actor loss over the updates made during the episode.
    pub actor_loss: f64,
    pub critic_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub episodes: Vec<EpisodeRecord>,
    pub total_steps: usize,
    pub wall_clock_secs: f64,
    pub checkpoint: Option<String>,
}

impl TrainReport {
    pub fn returns(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.ret).collect()
    }

    pub(crate) fn push(&mut self, ret: f64, steps: usize, actor_loss: f64, critic_loss: f64) {
        let episode = self.episodes.len();
        let start = (episode + 1).saturating_sub(MOVING_WINDOW);
        let window: Vec<f64> =
            self.episodes[start..].iter().map(|e| e.ret).chain(std::iter::once(ret)).collect();
        let moving_avg = window.iter().sum::<f64>() / window.len() as f64;
        self.episodes.push(EpisodeRecord { episode, steps, ret, moving_avg, actor_loss, critic_loss });
    }

    /// Mean return over the last `n` episodes (all when fewer).
    pub fn tail_mean(&self, n: usize) -> Option<f64> {
        if self.episodes.is_empty() {
            return None;
        }
        let start = self.episodes.len().saturating_sub(n);
        let tail = &self.episodes[start..];
        Some(tail.iter().map(|e| e.ret).sum::<f64>() / tail.len() as f64)
    }

    /// Metrics CSV: an optional `# ...` metadata line, a header and one row
    /// per episode. Rows contain no timing, so seeded runs are identical.
    pub fn write_csv<W: Write>(&self, out: &mut W, metadata: Option<&str>) -> Result<()> {
        if let Some(m) = metadata {
            writeln!(out, "# {m}")?;
        }
        writeln!(out, "episode,steps,return,moving_avg,actor_loss,critic_loss")?;
        for e in &self.episodes {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                e.episode, e.steps, e.ret, e.moving_avg, e.actor_loss, e.critic_loss
            )?;
        }
        Ok(())
    }
}
