//! Experience grafting: splice the head of an authentic trajectory onto a
//! stored tail segment whose initial state is close to the head's final
//! state, keeping only splices that score at least as well as the original.

use rand::Rng;

use crate::distance::state_distance;
use crate::error::{Error, Result};
use crate::experience::{Provenance, Segment, Trajectory, Transition};
use crate::library::SegmentLibrary;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraftConfig<T> {
    /// Grafting threshold: a junction is accepted when its distance is strictly below it.
    pub eps: T,
    /// Extraction positions per call.
    pub n_ext: usize,
    /// Grafting positions per call.
    pub n_gft: usize,
    /// Maximum synthetic trajectories returned per call.
    pub theta: usize,
}

impl<T: Scalar> GraftConfig<T> {
    pub fn new(eps: T, n_ext: usize, n_gft: usize, theta: usize) -> Result<Self> {
        let cfg = Self {
            eps,
            n_ext,
            n_gft,
            theta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= T::zero()) || !self.eps.is_finite() {
            return Err(Error::Config(format!(
                "grafting threshold must be finite and >= 0, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for GraftConfig<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(0.5),
            n_ext: 10,
            n_gft: 10,
            theta: 5,
        }
    }
}

/// A head segment from an authentic trajectory followed by a library tail.
#[derive(Debug, Clone)]
pub struct SyntheticTrajectory<T> {
    pub head: Segment<T>,
    pub tail: Segment<T>,
    pub junction_error: T,
    pub quality: T,
}

impl<T: Scalar> SyntheticTrajectory<T> {
    pub fn len(&self) -> usize {
        self.head.len() + self.tail.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All transitions in order, re-tagged as synthetic.
    pub fn transitions(&self) -> impl Iterator<Item = Transition<T>> + '_ {
        self.head
            .transitions()
            .iter()
            .chain(self.tail.transitions())
            .map(|t| t.clone().with_provenance(Provenance::Synthetic))
    }

    fn reproduces(&self, original: &[Transition<T>]) -> bool {
        self.len() == original.len()
            && self
                .head
                .transitions()
                .iter()
                .chain(self.tail.transitions())
                .zip(original)
                .all(|(a, b)| a.same_step(b))
    }
}

/// `Err(head, tail) = Dis(Term(head), Init(tail))`.
pub fn grafting_error<T: Scalar>(head: &Segment<T>, tail: &Segment<T>) -> Result<T> {
    state_distance(head.term_state(), tail.init_state())
}

/// Joins `head` and `tail` when their grafting error is strictly below
/// `eps`. Transitions are kept verbatim; the junction gap is not smoothed.
pub fn union<T: Scalar>(
    head: &Segment<T>,
    tail: &Segment<T>,
    eps: T,
) -> Result<Option<SyntheticTrajectory<T>>> {
    let err = grafting_error(head, tail)?;
    if err < eps {
        Ok(Some(SyntheticTrajectory {
            head: head.clone(),
            tail: tail.clone(),
            junction_error: err,
            quality: head.quality() + tail.quality(),
        }))
    } else {
        Ok(None)
    }
}

/// Keeps candidates at least as good as `authentic`; above `theta` of them,
/// the best `theta` by quality (stable, so earlier candidates win ties).
pub fn select_top<T: Scalar>(
    authentic: &Trajectory<T>,
    candidates: Vec<SyntheticTrajectory<T>>,
    theta: usize,
) -> Vec<SyntheticTrajectory<T>> {
    let floor = authentic.quality();
    let mut kept: Vec<_> = candidates
        .into_iter()
        .filter(|c| c.quality >= floor)
        .collect();
    if kept.len() > theta {
        kept.sort_by(|a, b| {
            b.quality
                .partial_cmp(&a.quality)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        kept.truncate(theta);
    }
    kept
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraftStats {
    /// Distinct successful unions.
    pub candidates_found: usize,
    /// Unions whose quality reaches the authentic trajectory's.
    pub candidates_qualified: usize,
    pub returned: usize,
}

#[derive(Debug, Clone)]
pub struct GraftOutput<T> {
    pub trajectories: Vec<SyntheticTrajectory<T>>,
    pub stats: GraftStats,
}

/// One grafting pass over an authentic trajectory.
///
/// Extraction stores `n_ext` random tails of `trajectory` in `lib`. Synthesis
/// then picks `n_gft` random cut points `q`, takes the head `T[0..=q]` (so
/// its final state is `s_{q+1}`) and unions it with every library tail
/// retrieved for `s_{q+1}`. Candidates from all rounds share one pool, which
/// is filtered by [`select_top`] once at the end.
///
/// Candidates that rebuild `trajectory` itself, repeat an earlier candidate
/// (same cut point and same library entry), or continue past a terminal
/// head are dropped.
pub fn graft<T: Scalar, R: Rng + ?Sized>(
    cfg: &GraftConfig<T>,
    trajectory: &Trajectory<T>,
    lib: &mut SegmentLibrary<T>,
    rng: &mut R,
) -> Result<GraftOutput<T>> {
    cfg.validate()?;
    let transitions = trajectory.transitions();
    if transitions
        .iter()
        .any(|t| t.provenance != Provenance::Authentic)
    {
        return Err(Error::InvalidInput(
            "grafting input must be an authentic trajectory".into(),
        ));
    }
    let n = transitions.len();
    let whole = trajectory.segment();

    for _ in 0..cfg.n_ext {
        let p = rng.random_range(0..n);
        lib.insert(transitions[p].s.clone(), whole.slice(p..n)?)?;
    }

    let mut pool: Vec<SyntheticTrajectory<T>> = Vec::new();
    let mut seen: Vec<(usize, Segment<T>)> = Vec::new();
    for _ in 0..cfg.n_gft {
        let q = rng.random_range(0..n);
        if transitions[q].terminal {
            continue;
        }
        let head = whole.slice(0..q + 1)?;
        for entry in lib.get_entries(&transitions[q].s_next, cfg.eps)? {
            if seen
                .iter()
                .any(|(sq, seg)| *sq == q && seg.same_view(&entry.segment))
            {
                continue;
            }
            seen.push((q, entry.segment.clone()));
            if let Some(candidate) = union(&head, &entry.segment, cfg.eps)? {
                if !candidate.reproduces(transitions) {
                    pool.push(candidate);
                }
            }
        }
    }

    let floor = trajectory.quality();
    let candidates_found = pool.len();
    let candidates_qualified = pool.iter().filter(|c| c.quality >= floor).count();
    let trajectories = select_top(trajectory, pool, cfg.theta);
    Ok(GraftOutput {
        stats: GraftStats {
            candidates_found,
            candidates_qualified,
            returned: trajectories.len(),
        },
        trajectories,
    })
}
