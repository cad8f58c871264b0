//! FIFO experience replay with episode-aware n-step sampling.
//!
//! Each record holds one observation together with the action that led to
//! it, the reward for that action and whether it ended the episode
//! terminally. The first record of an episode carries a zero action. A
//! transition starting at record `s` therefore reads its action and
//! rewards from records `s+1..`, and its next observation by adjacency,
//! so every observation is stored once.
//!
//! Observations can live in memory (grown on demand up to capacity) or in
//! a fixed-stride records file next to a text header, which lets a run
//! resume from the last flushed cursor.

mod header;

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use pvrl_core::spec::{ObsKind, ObservationSpec};
use rand::Rng;

pub use header::ReplayHeader;

use crate::error::{AgentError, Result};

/// Borrowed observation payload.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a> {
    Image(&'a [u8]),
    Embedding(&'a [f32]),
}

#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub observation: Observation<'a>,
    pub action: &'a [f32],
    pub reward: f32,
    pub terminal: bool,
    pub episode: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferStats {
    pub capacity: usize,
    pub size: usize,
    pub bytes_per_observation: u64,
    pub total_observation_bytes: u64,
}

/// Observation payload bytes for a buffer of `capacity` observations.
pub fn memory_budget(capacity: u64, spec: &ObservationSpec) -> u64 {
    capacity * spec.bytes_per_observation()
}

/// A batch of observations, each item `per_item` elements long (stacked
/// frames concatenated along the leading axis).
#[derive(Debug, Clone, PartialEq)]
pub enum ObsBatch {
    Images { data: Vec<u8>, per_item: usize },
    Embeddings { data: Vec<f32>, per_item: usize },
}

impl ObsBatch {
    pub fn len(&self) -> usize {
        match self {
            ObsBatch::Images { data, per_item } => data.len() / per_item,
            ObsBatch::Embeddings { data, per_item } => data.len() / per_item,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn per_item(&self) -> usize {
        match self {
            ObsBatch::Images { per_item, .. } | ObsBatch::Embeddings { per_item, .. } => *per_item,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: ObsBatch,
    pub next_obs: ObsBatch,
    pub actions: Vec<f32>,
    pub rewards: Vec<f32>,
    pub discounts: Vec<f32>,
    pub action_dim: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

enum Store {
    Memory(Vec<u8>),
    File { dir: PathBuf, file: Mutex<File> },
}

pub struct ReplayBuffer {
    spec: ObservationSpec,
    action_dim: usize,
    capacity: usize,
    frame_stack: usize,
    store: Store,
    actions: Vec<f32>,
    rewards: Vec<f32>,
    terminals: Vec<bool>,
    episodes: Vec<u64>,
    /// Sequence number of the next push.
    next_seq: u64,
}

impl std::fmt::Debug for ReplayBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReplayBuffer")
            .field("spec", &self.spec)
            .field("capacity", &self.capacity)
            .field("size", &self.len())
            .field("next_seq", &self.next_seq)
            .finish()
    }
}

const HEADER_FILE: &str = "replay.header";
const RECORDS_FILE: &str = "replay.bin";

impl ReplayBuffer {
    pub fn new(
        spec: ObservationSpec,
        action_dim: usize,
        capacity: usize,
        frame_stack: usize,
    ) -> Result<Self> {
        if capacity == 0 || action_dim == 0 || frame_stack == 0 {
            return Err(AgentError::Invalid(
                "capacity, action_dim and frame_stack must be positive".into(),
            ));
        }
        Ok(ReplayBuffer {
            spec,
            action_dim,
            capacity,
            frame_stack,
            store: Store::Memory(Vec::new()),
            actions: Vec::new(),
            rewards: Vec::new(),
            terminals: Vec::new(),
            episodes: Vec::new(),
            next_seq: 0,
        })
    }

    /// Opens or creates a file-backed buffer in `dir`. An existing header
    /// must describe the same layout; its records up to the stored cursor
    /// are reloaded.
    pub fn open_file(
        dir: &Path,
        spec: ObservationSpec,
        action_dim: usize,
        capacity: usize,
        frame_stack: usize,
    ) -> Result<Self> {
        let mut buf = Self::new(spec.clone(), action_dim, capacity, frame_stack)?;
        std::fs::create_dir_all(dir).map_err(|e| AgentError::io(dir, e))?;
        let header_path = dir.join(HEADER_FILE);
        let records_path = dir.join(RECORDS_FILE);
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(&records_path)
            .map_err(|e| AgentError::io(&records_path, e))?;
        let expected = ReplayHeader {
            spec,
            action_dim,
            capacity,
            cursor: 0,
        };
        let cursor = if header_path.exists() {
            let text = std::fs::read_to_string(&header_path).map_err(|e| AgentError::io(&header_path, e))?;
            let found = ReplayHeader::parse(&text)?;
            if (ReplayHeader {
                cursor: 0,
                ..found.clone()
            }) != expected
            {
                return Err(AgentError::Invalid(format!(
                    "{} describes a different buffer layout",
                    header_path.display()
                )));
            }
            found.cursor
        } else {
            0
        };
        buf.store = Store::File {
            dir: dir.to_path_buf(),
            file: Mutex::new(file),
        };
        if cursor > 0 {
            buf.reload(cursor, &expected)?;
        }
        buf.flush()?;
        Ok(buf)
    }

    fn reload(&mut self, cursor: u64, header: &ReplayHeader) -> Result<()> {
        let stride = header.record_stride();
        let obs_bytes = self.spec.bytes_per_observation();
        let size = cursor.min(self.capacity as u64);
        let first = cursor - size;
        let Store::File { dir, file } = &self.store else {
            unreachable!("reload only runs on file stores")
        };
        let path = dir.join(RECORDS_FILE);
        let mut file = file.lock().expect("replay file lock poisoned");
        let len = file.metadata().map_err(|e| AgentError::io(&path, e))?.len();
        let needed = stride * size.min(self.capacity as u64);
        if len < needed {
            return Err(AgentError::Invalid(format!(
                "{} is {len} bytes, header needs {needed}",
                path.display()
            )));
        }
        let tail_len = (stride - obs_bytes) as usize;
        let mut tail = vec![0u8; tail_len];
        let a = self.action_dim;
        self.actions = vec![0.0; a * size as usize];
        self.rewards = vec![0.0; size as usize];
        self.terminals = vec![false; size as usize];
        self.episodes = vec![0; size as usize];
        for seq in first..cursor {
            let slot = (seq % self.capacity as u64) as usize;
            file.seek(SeekFrom::Start(slot as u64 * stride + obs_bytes))
                .and_then(|_| file.read_exact(&mut tail))
                .map_err(|e| AgentError::io(&path, e))?;
            for (k, chunk) in tail[..4 * a].chunks_exact(4).enumerate() {
                self.actions[slot * a + k] = f32::from_le_bytes(chunk.try_into().unwrap());
            }
            self.rewards[slot] = f32::from_le_bytes(tail[4 * a..4 * a + 4].try_into().unwrap());
            self.terminals[slot] = tail[4 * a + 4] != 0;
            self.episodes[slot] = u64::from_le_bytes(tail[4 * a + 5..4 * a + 13].try_into().unwrap());
        }
        drop(file);
        self.next_seq = cursor;
        Ok(())
    }

    /// Writes the header with the current cursor.
    pub fn flush(&self) -> Result<()> {
        if let Store::File { dir, file } = &self.store {
            file.lock()
                .expect("replay file lock poisoned")
                .sync_data()
                .map_err(|e| AgentError::io(dir.join(RECORDS_FILE), e))?;
            let header = ReplayHeader {
                spec: self.spec.clone(),
                action_dim: self.action_dim,
                capacity: self.capacity,
                cursor: self.next_seq,
            };
            let path = dir.join(HEADER_FILE);
            let tmp = dir.join(format!("{HEADER_FILE}.tmp"));
            std::fs::write(&tmp, header.to_text()).map_err(|e| AgentError::io(&tmp, e))?;
            std::fs::rename(&tmp, &path).map_err(|e| AgentError::io(&path, e))?;
        }
        Ok(())
    }

    pub fn spec(&self) -> &ObservationSpec {
        &self.spec
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn frame_stack(&self) -> usize {
        self.frame_stack
    }

    pub fn len(&self) -> usize {
        self.next_seq.min(self.capacity as u64) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 0
    }

    /// Total transitions ever pushed.
    pub fn pushed(&self) -> u64 {
        self.next_seq
    }

    pub fn stats(&self) -> BufferStats {
        let bpo = self.spec.bytes_per_observation();
        BufferStats {
            capacity: self.capacity,
            size: self.len(),
            bytes_per_observation: bpo,
            total_observation_bytes: self.len() as u64 * bpo,
        }
    }

    fn oldest(&self) -> u64 {
        self.next_seq - self.len() as u64
    }

    fn slot(&self, seq: u64) -> usize {
        (seq % self.capacity as u64) as usize
    }

    fn encode_obs(&self, obs: Observation<'_>) -> Result<Vec<u8>> {
        let numel = self.spec.numel();
        match (obs, self.spec.kind()) {
            (Observation::Image(px), ObsKind::Image) if px.len() == numel => Ok(px.to_vec()),
            (Observation::Embedding(v), ObsKind::Embedding) if v.len() == numel => {
                Ok(v.iter().flat_map(|x| x.to_le_bytes()).collect())
            }
            (Observation::Image(px), _) => Err(AgentError::SpecMismatch(format!(
                "image with {} values for a {:?} buffer of {numel}",
                px.len(),
                self.spec.kind()
            ))),
            (Observation::Embedding(v), _) => Err(AgentError::SpecMismatch(format!(
                "embedding with {} values for a {:?} buffer of {numel}",
                v.len(),
                self.spec.kind()
            ))),
        }
    }

    /// Appends a transition, evicting the oldest once full. In file mode
    /// the record is written immediately; call [`flush`](Self::flush) to
    /// advance the persisted cursor.
    pub fn push(&mut self, t: &Transition<'_>) -> Result<()> {
        if t.action.len() != self.action_dim {
            return Err(AgentError::SpecMismatch(format!(
                "action has {} values, buffer expects {}",
                t.action.len(),
                self.action_dim
            )));
        }
        let bytes = self.encode_obs(t.observation)?;
        let slot = self.slot(self.next_seq);
        let a = self.action_dim;
        if slot == self.rewards.len() {
            self.actions.extend_from_slice(t.action);
            self.rewards.push(t.reward);
            self.terminals.push(t.terminal);
            self.episodes.push(t.episode);
        } else {
            self.actions[slot * a..(slot + 1) * a].copy_from_slice(t.action);
            self.rewards[slot] = t.reward;
            self.terminals[slot] = t.terminal;
            self.episodes[slot] = t.episode;
        }
        let bpo = bytes.len();
        match &mut self.store {
            Store::Memory(data) => {
                if slot * bpo == data.len() {
                    data.extend_from_slice(&bytes);
                } else {
                    data[slot * bpo..(slot + 1) * bpo].copy_from_slice(&bytes);
                }
            }
            Store::File { dir, file } => {
                let mut record = bytes;
                for x in t.action {
                    record.extend_from_slice(&x.to_le_bytes());
                }
                record.extend_from_slice(&t.reward.to_le_bytes());
                record.push(t.terminal as u8);
                record.extend_from_slice(&t.episode.to_le_bytes());
                let path = dir.join(RECORDS_FILE);
                let file = file.get_mut().expect("replay file lock poisoned");
                file.seek(SeekFrom::Start(slot as u64 * record.len() as u64))
                    .and_then(|_| file.write_all(&record))
                    .map_err(|e| AgentError::io(&path, e))?;
            }
        }
        self.next_seq += 1;
        Ok(())
    }

    /// Raw stored bytes of the observation with sequence number `seq`.
    pub fn observation_bytes(&self, seq: u64) -> Result<Vec<u8>> {
        if seq < self.oldest() || seq >= self.next_seq {
            return Err(AgentError::Invalid(format!(
                "sequence {seq} is not in the buffer"
            )));
        }
        let bpo = self.spec.bytes_per_observation() as usize;
        let mut out = vec![0u8; bpo];
        self.read_obs(self.slot(seq), &mut out)?;
        Ok(out)
    }

    /// Episode id of the record with sequence number `seq`.
    pub fn episode_of(&self, seq: u64) -> Option<u64> {
        (seq >= self.oldest() && seq < self.next_seq).then(|| self.episodes[self.slot(seq)])
    }

    fn read_obs(&self, slot: usize, out: &mut [u8]) -> Result<()> {
        let bpo = out.len();
        match &self.store {
            Store::Memory(data) => {
                out.copy_from_slice(&data[slot * bpo..(slot + 1) * bpo]);
                Ok(())
            }
            Store::File { dir, file } => {
                let stride = bpo as u64 + 4 * self.action_dim as u64 + 13;
                let mut f = file.lock().expect("replay file lock poisoned");
                f.seek(SeekFrom::Start(slot as u64 * stride))
                    .and_then(|_| f.read_exact(out))
                    .map_err(|e| AgentError::io(dir.join(RECORDS_FILE), e))
            }
        }
    }

    /// n-step window starting at `s`: (summed discounted reward, discount
    /// product, sequence of the bootstrap observation), or `None` when no
    /// transition starts there yet.
    pub fn window(&self, s: u64, n_step: usize, gamma: f64) -> Option<(f64, f64, u64)> {
        if s < self.oldest() || s + 1 >= self.next_seq {
            return None;
        }
        let ep = self.episodes[self.slot(s)];
        if self.terminals[self.slot(s)] || self.episodes[self.slot(s + 1)] != ep {
            return None;
        }
        let mut ret = 0.0;
        let mut disc = 1.0;
        for j in 1..=n_step as u64 {
            let q = s + j;
            if q >= self.next_seq {
                return None;
            }
            let slot = self.slot(q);
            if self.episodes[slot] != ep {
                return Some((ret, disc, q - 1));
            }
            ret += disc * self.rewards[slot] as f64;
            if self.terminals[slot] {
                return Some((ret, 0.0, q));
            }
            disc *= gamma;
        }
        Some((ret, disc, s + n_step as u64))
    }

    /// Appends the frame stack ending at `q` to `out`, oldest frame first,
    /// repeating the earliest available frame of the episode.
    fn gather_stack(&self, q: u64, scratch: &mut [u8], out: &mut Vec<u8>) -> Result<()> {
        let ep = self.episodes[self.slot(q)];
        let oldest = self.oldest();
        let mut first = q;
        for k in 1..self.frame_stack as u64 {
            if q < k || q - k < oldest || self.episodes[self.slot(q - k)] != ep {
                break;
            }
            first = q - k;
        }
        for k in (0..self.frame_stack as u64).rev() {
            let idx = q.saturating_sub(k).max(first);
            self.read_obs(self.slot(idx), scratch)?;
            out.extend_from_slice(scratch);
        }
        Ok(())
    }

    fn to_obs_batch(&self, bytes: Vec<u8>) -> ObsBatch {
        let per_item = self.spec.numel() * self.frame_stack;
        match self.spec.kind() {
            ObsKind::Image => ObsBatch::Images {
                data: bytes,
                per_item,
            },
            ObsKind::Embedding => ObsBatch::Embeddings {
                data: bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
                per_item,
            },
        }
    }

    /// Frame-stacked observation ending at `seq`, as a one-item batch.
    pub fn stacked(&self, seq: u64) -> Result<ObsBatch> {
        if seq < self.oldest() || seq >= self.next_seq {
            return Err(AgentError::Invalid(format!(
                "sequence {seq} is not in the buffer"
            )));
        }
        let mut scratch = vec![0u8; self.spec.bytes_per_observation() as usize];
        let mut out = Vec::new();
        self.gather_stack(seq, &mut scratch, &mut out)?;
        Ok(self.to_obs_batch(out))
    }

    /// Draws `batch_size` start records uniformly among those with a
    /// complete window.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        n_step: usize,
        gamma: f64,
        rng: &mut R,
    ) -> Result<Batch> {
        if n_step == 0 || batch_size == 0 {
            return Err(AgentError::Invalid(
                "batch_size and n_step must be positive".into(),
            ));
        }
        if self.len() < 2 {
            return Err(AgentError::InsufficientData(format!(
                "{} records stored",
                self.len()
            )));
        }
        let (lo, hi) = (self.oldest(), self.next_seq - 1);
        let a = self.action_dim;
        let bpo = self.spec.bytes_per_observation() as usize;
        let mut scratch = vec![0u8; bpo];
        let mut obs = Vec::with_capacity(batch_size * bpo * self.frame_stack);
        let mut next = Vec::with_capacity(batch_size * bpo * self.frame_stack);
        let mut actions = Vec::with_capacity(batch_size * a);
        let mut rewards = Vec::with_capacity(batch_size);
        let mut discounts = Vec::with_capacity(batch_size);
        let max_tries = 64 * batch_size + 1024;
        let mut tries = 0;
        while rewards.len() < batch_size {
            tries += 1;
            if tries > max_tries {
                return Err(AgentError::InsufficientData(format!(
                    "found {} of {batch_size} valid windows in {max_tries} draws",
                    rewards.len()
                )));
            }
            let s = rng.random_range(lo..hi);
            let Some((ret, disc, nq)) = self.window(s, n_step, gamma) else {
                continue;
            };
            let slot1 = self.slot(s + 1);
            actions.extend_from_slice(&self.actions[slot1 * a..(slot1 + 1) * a]);
            rewards.push(ret as f32);
            discounts.push(disc as f32);
            self.gather_stack(s, &mut scratch, &mut obs)?;
            self.gather_stack(nq, &mut scratch, &mut next)?;
        }
        Ok(Batch {
            obs: self.to_obs_batch(obs),
            next_obs: self.to_obs_batch(next),
            actions,
            rewards,
            discounts,
            action_dim: a,
        })
    }
}
