//! Transitions, segments, trajectories and the provenance-aware replay buffer.

use std::collections::VecDeque;
use std::io::Write;
use std::ops::Range;
use std::sync::Arc;

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Where a transition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Authentic,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Authentic => "authentic",
            Provenance::Synthetic => "synthetic",
        }
    }
}

/// One `(s, a, r, s')` step.
///
/// `terminal` marks a step whose `s_next` is an absorbing state (the critic
/// does not bootstrap through it). Episodes cut by a step limit are not
/// terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub s: Vec<T>,
    pub a: Vec<T>,
    pub r: T,
    pub s_next: Vec<T>,
    pub terminal: bool,
    pub provenance: Provenance,
}

impl<T: Scalar> Transition<T> {
    pub fn new(s: Vec<T>, a: Vec<T>, r: T, s_next: Vec<T>, terminal: bool) -> Result<Self> {
        check_dim(s.len(), s_next.len())?;
        if !r.is_finite() {
            return Err(Error::InvalidInput("reward is not finite".into()));
        }
        Ok(Self {
            s,
            a,
            r,
            s_next,
            terminal,
            provenance: Provenance::Authentic,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Field-for-field equality ignoring provenance.
    pub fn same_step(&self, other: &Self) -> bool {
        self.r == other.r
            && self.terminal == other.terminal
            && self.s == other.s
            && self.a == other.a
            && self.s_next == other.s_next
    }
}

/// Undiscounted reward sum of a transition sequence.
pub fn quality<T: Scalar>(transitions: &[Transition<T>]) -> Result<T> {
    if transitions.is_empty() {
        return Err(Error::InvalidInput("quality of an empty segment".into()));
    }
    Ok(transitions.iter().map(|t| t.r).sum())
}

/// A non-empty, immutable run of transitions.
///
/// Segments are cheap views into shared storage, so tails stored in the
/// segment library and heads used for grafting never copy the underlying
/// trajectory.
#[derive(Debug, Clone)]
pub struct Segment<T> {
    source: Arc<[Transition<T>]>,
    range: Range<usize>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(transitions: Vec<Transition<T>>) -> Result<Self> {
        if transitions.is_empty() {
            return Err(Error::InvalidInput(
                "a segment needs at least one transition".into(),
            ));
        }
        let len = transitions.len();
        Ok(Self {
            source: transitions.into(),
            range: 0..len,
        })
    }

    pub fn transitions(&self) -> &[Transition<T>] {
        &self.source[self.range.clone()]
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// Sub-view over `range` (relative to this segment).
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidInput(format!(
                "slice {:?} out of bounds for segment of length {}",
                range,
                self.len()
            )));
        }
        let start = self.range.start + range.start;
        Ok(Self {
            source: Arc::clone(&self.source),
            range: start..start + range.len(),
        })
    }

    /// `Init(seg)`: the first transition's `s`.
    pub fn init_state(&self) -> &[T] {
        &self.transitions()[0].s
    }

    /// `Term(seg)`: the last transition's `s_next`.
    pub fn term_state(&self) -> &[T] {
        &self.last().s_next
    }

    pub fn last(&self) -> &Transition<T> {
        &self.source[self.range.end - 1]
    }

    pub fn quality(&self) -> T {
        self.transitions().iter().map(|t| t.r).sum()
    }

    pub fn append(&self, other: &Segment<T>) -> Segment<T> {
        let mut joined = self.transitions().to_vec();
        joined.extend_from_slice(other.transitions());
        let len = joined.len();
        Segment {
            source: joined.into(),
            range: 0..len,
        }
    }

    /// True when both views point at the same stored transitions.
    pub fn same_view(&self, other: &Segment<T>) -> bool {
        Arc::ptr_eq(&self.source, &other.source) && self.range == other.range
    }

    pub fn state_dim(&self) -> usize {
        self.init_state().len()
    }
}

/// A segment covering one episode from its initial state.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    segment: Segment<T>,
    pub is_complete_episode: bool,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(transitions: Vec<Transition<T>>, is_complete_episode: bool) -> Result<Self> {
        Ok(Self {
            segment: Segment::new(transitions)?,
            is_complete_episode,
        })
    }

    pub fn segment(&self) -> &Segment<T> {
        &self.segment
    }

    pub fn transitions(&self) -> &[Transition<T>] {
        self.segment.transitions()
    }

    pub fn len(&self) -> usize {
        self.segment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segment.is_empty()
    }

    pub fn quality(&self) -> T {
        self.segment.quality()
    }
}

/// Bounded FIFO transition store with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    warmup: usize,
    store: VecDeque<Transition<T>>,
    synthetic: usize,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize, warmup: usize) -> Result<Self> {
        if capacity == 0 || warmup == 0 {
            return Err(Error::Config(
                "replay capacity and warmup must be positive".into(),
            ));
        }
        Ok(Self {
            capacity,
            warmup,
            store: VecDeque::with_capacity(capacity.min(1 << 16)),
            synthetic: 0,
        })
    }

    pub fn push(&mut self, t: Transition<T>) {
        if self.store.len() == self.capacity {
            if let Some(old) = self.store.pop_front() {
                if old.provenance == Provenance::Synthetic {
                    self.synthetic -= 1;
                }
            }
        }
        if t.provenance == Provenance::Synthetic {
            self.synthetic += 1;
        }
        self.store.push_back(t);
    }

    pub fn is_ready(&self) -> bool {
        self.store.len() >= self.warmup
    }

    /// Draws `n` transitions uniformly with replacement. `None` while the
    /// buffer is below its warmup size.
    pub fn sample_minibatch<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Option<Vec<&Transition<T>>> {
        if !self.is_ready() {
            return None;
        }
        let len = self.store.len();
        Some(
            (0..n)
                .map(|_| &self.store[rng.random_range(0..len)])
                .collect(),
        )
    }

    /// Drops every synthetic transition, keeping authentic ones in order.
    pub fn remove_synthetic(&mut self) -> usize {
        let removed = self.synthetic;
        if removed > 0 {
            self.store.retain(|t| t.provenance == Provenance::Authentic);
            self.synthetic = 0;
        }
        removed
    }

    pub fn synthetic_ratio(&self) -> T {
        if self.store.is_empty() {
            T::zero()
        } else {
            T::lit(self.synthetic as f64) / T::lit(self.store.len() as f64)
        }
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn warmup(&self) -> usize {
        self.warmup
    }

    pub fn synthetic_count(&self) -> usize {
        self.synthetic
    }

    pub fn authentic_count(&self) -> usize {
        self.store.len() - self.synthetic
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<T>> {
        self.store.iter()
    }
}

/// Header of the transition dump. Vector fields are `;`-separated inside
/// their column.
pub const TRANSITION_DUMP_HEADER: &str = "episode_id,step,s,a,r,s_next,provenance";

/// Writes transitions as comma-separated records under [`TRANSITION_DUMP_HEADER`].
pub struct TransitionDump<W: Write> {
    out: W,
}

impl<W: Write> TransitionDump<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{TRANSITION_DUMP_HEADER}")?;
        Ok(Self { out })
    }

    pub fn write_episode<T: Scalar>(
        &mut self,
        episode_id: usize,
        transitions: &[Transition<T>],
    ) -> Result<()> {
        for (step, t) in transitions.iter().enumerate() {
            writeln!(
                self.out,
                "{},{},{},{},{},{},{}",
                episode_id,
                step,
                join(&t.s),
                join(&t.a),
                t.r,
                join(&t.s_next),
                t.provenance.as_str()
            )?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

fn join<T: Scalar>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}
