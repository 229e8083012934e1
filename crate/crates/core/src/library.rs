//! Segment library: tail segments indexed on a uniform grid over the raw
//! state space, with threshold retrieval inside the query's own cell.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::distance::state_distance;
use crate::error::{Error, Result};
use crate::experience::Segment;
use crate::scalar::Scalar;

/// Grid cell coordinates, `floor(s[i] / bin_size)` per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinKey(pub Vec<i64>);

pub fn quantize<T: Scalar>(s: &[T], bin_size: T) -> Result<BinKey> {
    if !(bin_size > T::zero()) || !bin_size.is_finite() {
        return Err(Error::Config(format!(
            "bin size must be positive, got {bin_size}"
        )));
    }
    Ok(BinKey(
        s.iter()
            .map(|&x| {
                (x / bin_size).floor().to_i64().unwrap_or(if x < T::zero() {
                    i64::MIN
                } else {
                    i64::MAX
                })
            })
            .collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct LibraryEntry<T> {
    pub key_state: Vec<T>,
    pub segment: Segment<T>,
}

#[derive(Debug, Clone)]
pub struct SegmentLibrary<T> {
    bins: HashMap<BinKey, VecDeque<LibraryEntry<T>>>,
    bin_size: T,
    bin_capacity: usize,
    len: usize,
}

impl<T: Scalar> SegmentLibrary<T> {
    pub fn new(bin_size: T, bin_capacity: usize) -> Result<Self> {
        if !(bin_size > T::zero()) || !bin_size.is_finite() {
            return Err(Error::Config(format!(
                "bin size must be positive, got {bin_size}"
            )));
        }
        if bin_capacity == 0 {
            return Err(Error::Config("bin capacity must be positive".into()));
        }
        Ok(Self {
            bins: HashMap::new(),
            bin_size,
            bin_capacity,
            len: 0,
        })
    }

    /// Stores `segment` under `key_state`, evicting the oldest entry of a full bin.
    pub fn insert(&mut self, key_state: Vec<T>, segment: Segment<T>) -> Result<()> {
        if key_state.as_slice() != segment.init_state() {
            return Err(Error::InvalidInput(
                "key state must equal the segment's first state".into(),
            ));
        }
        let key = quantize(&key_state, self.bin_size)?;
        let bin = self.bins.entry(key).or_default();
        if bin.len() == self.bin_capacity {
            bin.pop_front();
            self.len -= 1;
        }
        bin.push_back(LibraryEntry { key_state, segment });
        self.len += 1;
        Ok(())
    }

    /// Segments in the query's cell whose key lies strictly within `eps`,
    /// in insertion order.
    pub fn get(&self, query: &[T], eps: T) -> Result<Vec<&Segment<T>>> {
        Ok(self
            .get_entries(query, eps)?
            .into_iter()
            .map(|e| &e.segment)
            .collect())
    }

    pub fn get_entries(&self, query: &[T], eps: T) -> Result<Vec<&LibraryEntry<T>>> {
        let key = quantize(query, self.bin_size)?;
        let Some(bin) = self.bins.get(&key) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for entry in bin {
            if state_distance(query, &entry.key_state)? < eps {
                out.push(entry);
            }
        }
        Ok(out)
    }

    /// Entries of one cell, oldest first.
    pub fn bin(&self, key: &BinKey) -> impl Iterator<Item = &LibraryEntry<T>> {
        self.bins.get(key).into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_size(&self) -> T {
        self.bin_size
    }

    pub fn bin_capacity(&self) -> usize {
        self.bin_capacity
    }

    /// Number of bins holding each occupancy level.
    pub fn occupancy_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for bin in self.bins.values() {
            *hist.entry(bin.len()).or_insert(0) += 1;
        }
        hist
    }

    /// `bin,occupancy` rows sorted by cell key; coordinates `;`-separated.
    pub fn stats_csv(&self) -> String {
        let mut keys: Vec<_> = self.bins.iter().map(|(k, v)| (k, v.len())).collect();
        keys.sort();
        let mut out = String::from("bin,occupancy\n");
        for (key, n) in keys {
            let coords: Vec<String> = key.0.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{},{}", coords.join(";"), n);
        }
        out
    }
}
