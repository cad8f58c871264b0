//! Text sidecar stored next to a checkpoint's weights archive.

use pvrl_core::seed::RngState;

use crate::error::{AgentError, Result};

const MAGIC: &str = "pvrl-checkpoint 1";

/// Counters, random-stream positions and the resolved configuration.
///
/// ```text
/// pvrl-checkpoint 1
/// step 20000
/// updates 9000
/// rng.explore <seed hex>:<stream>:<word pos>
/// rng.update <…>
/// rng.perturb <…>
/// beta.actor 0.125
/// config
/// <resolved configuration, verbatim to end of file>
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointState {
    pub step: u64,
    pub updates: u64,
    pub rng_explore: RngState,
    pub rng_update: RngState,
    pub rng_perturb: RngState,
    pub beta_actor: f64,
    pub config: String,
}

fn err(line: usize, msg: impl Into<String>) -> AgentError {
    AgentError::State {
        line,
        msg: msg.into(),
    }
}

impl CheckpointState {
    pub fn to_text(&self) -> String {
        format!(
            "{MAGIC}\nstep {}\nupdates {}\nrng.explore {}\nrng.update {}\nrng.perturb {}\nbeta.actor {}\nconfig\n{}",
            self.step,
            self.updates,
            self.rng_explore.encode(),
            self.rng_update.encode(),
            self.rng_perturb.encode(),
            self.beta_actor,
            self.config
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split_inclusive('\n').enumerate();
        match lines.next() {
            Some((_, l)) if l.trim_end() == MAGIC => {}
            _ => return Err(err(1, format!("expected `{MAGIC}`"))),
        }
        let (mut step, mut updates, mut explore, mut update, mut perturb, mut beta) =
            (None, None, None, None, None, None);
        let mut config = None;
        while let Some((i, raw)) = lines.next() {
            let n = i + 1;
            let line = raw.trim_end_matches(['\n', '\r']);
            if line == "config" {
                config = Some(lines.map(|(_, l)| l).collect::<String>());
                break;
            }
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| err(n, "expected `key value`"))?;
            let int = |v: &str| v.parse::<u64>().map_err(|_| err(n, format!("bad integer `{v}`")));
            let rng = |v: &str| RngState::decode(v).ok_or_else(|| err(n, "bad rng state"));
            let dup = match key {
                "step" => step.replace(int(value)?).is_some(),
                "updates" => updates.replace(int(value)?).is_some(),
                "rng.explore" => explore.replace(rng(value)?).is_some(),
                "rng.update" => update.replace(rng(value)?).is_some(),
                "rng.perturb" => perturb.replace(rng(value)?).is_some(),
                "beta.actor" => {
                    let b: f64 = value
                        .parse()
                        .map_err(|_| err(n, format!("bad number `{value}`")))?;
                    if !(0.0..=1.0).contains(&b) {
                        return Err(err(n, "beta.actor outside [0, 1]"));
                    }
                    beta.replace(b).is_some()
                }
                other => return Err(err(n, format!("unknown key `{other}`"))),
            };
            if dup {
                return Err(err(n, format!("duplicate key `{key}`")));
            }
        }
        let missing = |k: &str| err(0, format!("missing `{k}`"));
        Ok(CheckpointState {
            step: step.ok_or_else(|| missing("step"))?,
            updates: updates.ok_or_else(|| missing("updates"))?,
            rng_explore: explore.ok_or_else(|| missing("rng.explore"))?,
            rng_update: update.ok_or_else(|| missing("rng.update"))?,
            rng_perturb: perturb.ok_or_else(|| missing("rng.perturb"))?,
            beta_actor: beta.ok_or_else(|| missing("beta.actor"))?,
            config: config.ok_or_else(|| missing("config"))?,
        })
    }
}
