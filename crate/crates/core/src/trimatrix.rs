//! Packed strict-lower-triangular store of pairwise cosine distances.
//!
//! Slot pair `(i, j)` with `k > i > j >= 0` lives at flat index
//! `i(i-1)/2 + j`, so the enumeration order is `(1,0), (2,0), (2,1), (3,0), ...`.
//! The diagonal (always 0) and the upper triangle (a mirror) are never stored.

use std::io::{self, Write};

use thiserror::Error;

use crate::engine::{LabeledPoint, PointId};
use crate::vecspace::{Metric, VectorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("slot pair ({i}, {j}) is not in the strict lower triangle")]
    NotLowerTriangle { i: usize, j: usize },
    #[error("a distance matrix needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("slot {slot} out of range for k = {k}")]
    SlotOutOfRange { slot: usize, k: usize },
    #[error("column has {got} entries, expected {expected}")]
    ColumnLength { got: usize, expected: usize },
    #[error("column entry {slot} is not a valid distance ({value})")]
    InvalidDistance { slot: usize, value: f64 },
    #[error("point {0} already occupies a slot")]
    DuplicatePoint(PointId),
    #[error("members do not match matrix slots")]
    Inconsistent,
    #[error("k = {k} needs {required} bytes, over the {budget} byte budget")]
    MemoryBudget { k: usize, required: usize, budget: usize },
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// Number of stored entries for `k` slots: `(k² - k) / 2`.
pub const fn entry_count(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

#[inline]
fn flat(i: usize, j: usize) -> usize {
    debug_assert!(j < i);
    i * (i - 1) / 2 + j
}

pub fn flat_index(i: usize, j: usize) -> Result<usize, MatrixError> {
    if j >= i {
        return Err(MatrixError::NotLowerTriangle { i, j });
    }
    Ok(flat(i, j))
}

/// Inverse of [`flat_index`].
pub fn unflatten(index: usize) -> (usize, usize) {
    let mut i = ((1.0 + (1.0 + 8.0 * index as f64).sqrt()) / 2.0) as usize;
    // float sqrt can land one off near perfect squares
    while i * (i - 1) / 2 > index {
        i -= 1;
    }
    while (i + 1) * i / 2 <= index {
        i += 1;
    }
    (i, index - i * (i - 1) / 2)
}

/// Approximate heap footprint of a matrix with `k` slots.
pub fn required_bytes(k: usize) -> usize {
    entry_count(k) * std::mem::size_of::<f64>() + k * std::mem::size_of::<PointId>()
}

pub fn check_memory_budget(k: usize, budget: usize) -> Result<(), MatrixError> {
    let required = required_bytes(k);
    if required > budget {
        return Err(MatrixError::MemoryBudget { k, required, budget });
    }
    Ok(())
}

/// Smallest stored entry, `i > j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinEntry {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangularDistanceMatrix {
    k: usize,
    entries: Vec<f64>,
    slot_ids: Vec<PointId>,
}

impl TriangularDistanceMatrix {
    /// Computes every unordered pair exactly once.
    pub fn build<M: Metric>(points: &[LabeledPoint], metric: &M) -> Result<Self, MatrixError> {
        let k = points.len();
        if k < 2 {
            return Err(MatrixError::TooFewPoints(k));
        }
        let mut slot_ids = Vec::with_capacity(k);
        for p in points {
            if slot_ids.contains(&p.point_id) {
                return Err(MatrixError::DuplicatePoint(p.point_id));
            }
            slot_ids.push(p.point_id);
        }
        let mut entries = Vec::with_capacity(entry_count(k));
        for i in 1..k {
            for j in 0..i {
                entries.push(metric.distance(&points[i].vector, &points[j].vector)?);
            }
        }
        Ok(Self { k, entries, slot_ids })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn slot_ids(&self) -> &[PointId] {
        &self.slot_ids
    }

    /// Distance between two distinct slots, in either order.
    pub fn get(&self, a: usize, b: usize) -> Result<f64, MatrixError> {
        for s in [a, b] {
            if s >= self.k {
                return Err(MatrixError::SlotOutOfRange { slot: s, k: self.k });
            }
        }
        let (i, j) = if a > b { (a, b) } else { (b, a) };
        Ok(self.entries[flat_index(i, j)?])
    }

    /// Linear scan; ties go to the smallest flat index.
    pub fn min_entry(&self) -> MinEntry {
        let mut best = 0;
        let mut best_d = self.entries[0];
        for (idx, &d) in self.entries.iter().enumerate().skip(1) {
            if d < best_d {
                best = idx;
                best_d = d;
            }
        }
        let (i, j) = unflatten(best);
        MinEntry { i, j, distance: best_d }
    }

    /// Errors unless `members` occupy the slots in order.
    pub fn check_members(&self, members: &[LabeledPoint]) -> Result<(), MatrixError> {
        if members.len() != self.k
            || members.iter().zip(&self.slot_ids).any(|(m, id)| m.point_id != *id)
        {
            return Err(MatrixError::Inconsistent);
        }
        Ok(())
    }

    /// Distance from `p` to every member, in slot order (`k` metric calls).
    pub fn column_distances<M: Metric>(
        &self,
        p: &LabeledPoint,
        members: &[LabeledPoint],
        metric: &M,
    ) -> Result<Vec<f64>, MatrixError> {
        self.check_members(members)?;
        if self.slot_ids.contains(&p.point_id) {
            return Err(MatrixError::DuplicatePoint(p.point_id));
        }
        members
            .iter()
            .map(|m| metric.distance(&p.vector, &m.vector).map_err(MatrixError::from))
            .collect()
    }

    /// Installs `new_id` in `slot`, overwriting the `k - 1` entries incident to
    /// it from `column`. `column[slot]` is ignored.
    pub fn replace_slot(&mut self, slot: usize, new_id: PointId, column: &[f64]) -> Result<(), MatrixError> {
        let k = self.k;
        if slot >= k {
            return Err(MatrixError::SlotOutOfRange { slot, k });
        }
        if column.len() != k {
            return Err(MatrixError::ColumnLength { got: column.len(), expected: k });
        }
        for (t, &d) in column.iter().enumerate() {
            if t != slot && !(d.is_finite() && (0.0..=2.0).contains(&d)) {
                return Err(MatrixError::InvalidDistance { slot: t, value: d });
            }
        }
        if self.slot_ids.iter().enumerate().any(|(t, id)| t != slot && *id == new_id) {
            return Err(MatrixError::DuplicatePoint(new_id));
        }
        for t in 0..slot {
            self.entries[flat(slot, t)] = column[t];
        }
        for t in slot + 1..k {
            self.entries[flat(t, slot)] = column[t];
        }
        self.slot_ids[slot] = new_id;
        Ok(())
    }

    /// Rows `i,j,distance` in flat order, after an `i,j,distance` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,j,distance")?;
        for (idx, d) in self.entries.iter().enumerate() {
            let (i, j) = unflatten(idx);
            writeln!(w, "{i},{j},{d}")?;
        }
        Ok(())
    }
}
