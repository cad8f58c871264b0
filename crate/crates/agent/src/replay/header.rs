use pvrl_core::spec::{ObsKind, ObservationSpec};

use crate::error::{AgentError, Result};

const MAGIC: &str = "pvrl-replay 1";

/// Text header of an on-disk replay file.
///
/// ```text
/// pvrl-replay 1
/// kind image
/// shape 3,84,84
/// action_dim 4
/// capacity 100000
/// cursor 5210
/// ```
///
/// `cursor` counts every transition ever pushed; the records file holds
/// the last `min(cursor, capacity)` of them at slot `seq % capacity`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayHeader {
    pub spec: ObservationSpec,
    pub action_dim: usize,
    pub capacity: usize,
    pub cursor: u64,
}

fn err(line: usize, msg: impl Into<String>) -> AgentError {
    AgentError::Header {
        line,
        msg: msg.into(),
    }
}

impl ReplayHeader {
    /// Bytes per record: observation, actions, reward, terminal flag,
    /// episode id.
    pub fn record_stride(&self) -> u64 {
        self.spec.bytes_per_observation() + 4 * self.action_dim as u64 + 4 + 1 + 8
    }

    pub fn to_text(&self) -> String {
        let kind = match self.spec.kind() {
            ObsKind::Image => "image",
            ObsKind::Embedding => "embedding",
        };
        let shape: Vec<String> = self.spec.shape().iter().map(|d| d.to_string()).collect();
        format!(
            "{MAGIC}\nkind {kind}\nshape {}\naction_dim {}\ncapacity {}\ncursor {}\n",
            shape.join(","),
            self.action_dim,
            self.capacity,
            self.cursor
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim_end() == MAGIC => {}
            _ => return Err(err(1, format!("expected `{MAGIC}`"))),
        }
        let (mut kind, mut shape, mut adim, mut cap, mut cursor) = (None, None, None, None, None);
        for (i, raw) in lines {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| err(n, "expected `key value`"))?;
            let value = value.trim();
            let num = |v: &str| -> Result<u64> {
                v.parse::<u64>()
                    .map_err(|_| err(n, format!("`{v}` is not a non-negative integer")))
            };
            let slot_taken = match key {
                "kind" => kind
                    .replace(match value {
                        "image" => ObsKind::Image,
                        "embedding" => ObsKind::Embedding,
                        other => return Err(err(n, format!("unknown kind `{other}`"))),
                    })
                    .is_some(),
                "shape" => {
                    let dims = value
                        .split(',')
                        .map(|d| num(d).and_then(|d| usize::try_from(d).map_err(|_| err(n, "dim too large"))))
                        .collect::<Result<Vec<usize>>>()?;
                    if dims.len() > 3 {
                        return Err(err(n, "too many dimensions"));
                    }
                    shape.replace(dims).is_some()
                }
                "action_dim" => adim.replace(num(value)?).is_some(),
                "capacity" => cap.replace(num(value)?).is_some(),
                "cursor" => cursor.replace(num(value)?).is_some(),
                other => return Err(err(n, format!("unknown key `{other}`"))),
            };
            if slot_taken {
                return Err(err(n, format!("duplicate key `{key}`")));
            }
        }
        let missing = |k: &str| err(0, format!("missing key `{k}`"));
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let shape = shape.ok_or_else(|| missing("shape"))?;
        if shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .is_none()
        {
            return Err(err(0, "shape overflows"));
        }
        let spec = ObservationSpec::new(kind, shape).map_err(|e| err(0, e.to_string()))?;
        let to_usize = |v: u64, k: &str| usize::try_from(v).map_err(|_| err(0, format!("{k} too large")));
        let action_dim = to_usize(adim.ok_or_else(|| missing("action_dim"))?, "action_dim")?;
        let capacity = to_usize(cap.ok_or_else(|| missing("capacity"))?, "capacity")?;
        if action_dim == 0 || action_dim > 1 << 16 || capacity == 0 {
            return Err(err(0, "action_dim and capacity must be positive"));
        }
        let header = ReplayHeader {
            spec,
            action_dim,
            capacity,
            cursor: cursor.ok_or_else(|| missing("cursor"))?,
        };
        if header
            .record_stride()
            .checked_mul(header.capacity as u64)
            .is_none()
        {
            return Err(err(0, "capacity × record size overflows"));
        }
        Ok(header)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let h = ReplayHeader {
            spec: ObservationSpec::embedding(768),
            action_dim: 4,
            capacity: 10,
            cursor: 37,
        };
        assert_eq!(ReplayHeader::parse(&h.to_text()).unwrap(), h);
        assert_eq!(h.record_stride(), 3072 + 16 + 13);
    }

    #[test]
    fn rejects_malformed_headers() {
        for bad in [
            "",
            "pvrl-replay 2\n",
            "pvrl-replay 1\nkind image\nshape 3,8,8\naction_dim 4\ncapacity 10\n",
            "pvrl-replay 1\nkind image\nkind image\nshape 3,8,8\naction_dim 4\ncapacity 1\ncursor 0\n",
            "pvrl-replay 1\nkind video\nshape 3,8,8\naction_dim 4\ncapacity 1\ncursor 0\n",
            "pvrl-replay 1\nkind image\nshape 1,8,8\naction_dim 4\ncapacity 1\ncursor 0\n",
            "pvrl-replay 1\nkind image\nshape 3,8,8\naction_dim 4\ncapacity 0\ncursor 0\n",
            "pvrl-replay 1\nkind image\nshape 3,8,8\naction_dim 4\ncapacity 1\ncursor -1\n",
            "pvrl-replay 1\nkind image\nshape 3,8,8\naction_dim 4\ncapacity 1\ncursor 0\ncolor red\n",
        ] {
            assert!(ReplayHeader::parse(bad).is_err(), "{bad:?}");
        }
    }
}
