//! Fixed-capacity experience replay with uniform sampling.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use crate::binio;
use crate::error::{Error, Result};
use crate::nn::stack_rows;
use crate::rng::Rng;

const SNAPSHOT_MAGIC: &[u8; 8] = b"TASACRPL";
const SNAPSHOT_VERSION: u32 = 1;

/// One `(s, a, r, s', done)` tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

impl Transition {
    fn validate(&self) -> Result<()> {
        let finite = self
            .state
            .iter()
            .chain(&self.action)
            .chain(&self.next_state)
            .chain(std::iter::once(&self.reward))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("transition"));
        }
        if self.action.iter().any(|a| a.abs() > 1.0) {
            return Err(Error::usage("transition action outside [-1, 1]"));
        }
        if self.state.len() != self.next_state.len() {
            return Err(Error::usage("state and next state differ in length"));
        }
        Ok(())
    }
}

/// A sampled minibatch laid out row-per-sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    /// 1.0 for terminal transitions, 0.0 otherwise.
    pub dones: Array1<f64>,
}

impl Batch {
    pub fn from_transitions<'a>(items: impl IntoIterator<Item = &'a Transition>) -> Result<Self> {
        let items: Vec<&Transition> = items.into_iter().collect();
        let first = items.first().ok_or_else(|| Error::usage("empty batch"))?;
        let (obs, act) = (first.state.len(), first.action.len());
        if items
            .iter()
            .any(|t| t.state.len() != obs || t.action.len() != act)
        {
            return Err(Error::usage("transitions of mixed dimensions"));
        }
        Ok(Self {
            states: stack_rows(items.iter().map(|t| t.state.as_slice()), obs),
            actions: stack_rows(items.iter().map(|t| t.action.as_slice()), act),
            rewards: items.iter().map(|t| t.reward).collect(),
            next_states: stack_rows(items.iter().map(|t| t.next_state.as_slice()), obs),
            dones: items
                .iter()
                .map(|t| if t.done { 1.0 } else { 0.0 })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    // slot the next push writes once the buffer is full
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, tr: Transition) -> Result<()> {
        tr.validate()?;
        if let Some(first) = self.items.first() {
            if first.state.len() != tr.state.len() || first.action.len() != tr.action.len() {
                return Err(Error::usage(
                    "transition dimensions differ from buffer contents",
                ));
            }
        }
        if self.items.len() < self.capacity {
            self.items.push(tr);
        } else {
            self.items[self.cursor] = tr;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
        Ok(())
    }

    /// Contents from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.items.split_at(self.cursor);
        older.iter().chain(newer.iter())
    }

    /// Uniform indices with replacement; errors with [`Error::NotReady`]
    /// while fewer than `batch_size` transitions are stored.
    pub fn sample_indices(&self, batch_size: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        if batch_size == 0 || self.items.len() < batch_size {
            return Err(Error::NotReady {
                available: self.items.len(),
                requested: batch_size,
            });
        }
        Ok((0..batch_size)
            .map(|_| rng.index(self.items.len()))
            .collect())
    }

    pub fn sample(&self, batch_size: usize, rng: &mut Rng) -> Result<Batch> {
        let idx = self.sample_indices(batch_size, rng)?;
        Batch::from_transitions(idx.iter().map(|&i| &self.items[i]))
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.items.get(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub(crate) fn write_to(&self, w: &mut impl Write) -> Result<()> {
        binio::write_header(w, SNAPSHOT_MAGIC, SNAPSHOT_VERSION)?;
        let (obs, act) = self
            .items
            .first()
            .map(|t| (t.state.len(), t.action.len()))
            .unwrap_or((0, 0));
        w.write_u64::<LE>(self.capacity as u64)?;
        w.write_u32::<LE>(obs as u32)?;
        w.write_u32::<LE>(act as u32)?;
        w.write_u64::<LE>(self.cursor as u64)?;
        w.write_u64::<LE>(self.items.len() as u64)?;
        for t in &self.items {
            for &v in t.state.iter().chain(&t.action) {
                w.write_f64::<LE>(v)?;
            }
            w.write_f64::<LE>(t.reward)?;
            for &v in &t.next_state {
                w.write_f64::<LE>(v)?;
            }
            w.write_u8(t.done as u8)?;
        }
        Ok(())
    }

    pub(crate) fn read_from(r: &mut impl Read) -> Result<Self> {
        binio::read_header(r, SNAPSHOT_MAGIC, SNAPSHOT_VERSION)?;
        let capacity = r.read_u64::<LE>()? as usize;
        let obs = r.read_u32::<LE>()? as usize;
        let act = r.read_u32::<LE>()? as usize;
        let cursor = r.read_u64::<LE>()? as usize;
        let len = r.read_u64::<LE>()? as usize;
        if capacity == 0
            || len > capacity
            || (cursor > 0 && len < capacity)
            || cursor >= capacity.max(1)
        {
            return Err(Error::Format("inconsistent replay snapshot header".into()));
        }
        let read_vec = |n: usize, r: &mut dyn Read| -> Result<Vec<f64>> {
            let mut v = vec![0.0; n];
            for x in &mut v {
                *x = r.read_f64::<LE>()?;
            }
            Ok(v)
        };
        let mut items = Vec::with_capacity(len);
        for _ in 0..len {
            let state = read_vec(obs, r)?;
            let action = read_vec(act, r)?;
            let reward = r.read_f64::<LE>()?;
            let next_state = read_vec(obs, r)?;
            let done = r.read_u8()? != 0;
            items.push(Transition {
                state,
                action,
                reward,
                next_state,
                done,
            });
        }
        Ok(Self {
            capacity,
            items,
            cursor,
        })
    }
}
