//! Compact storage for fields that only live inside the absorbing layer.
//!
//! An entry of the underlying index space is stored when at least
//! `min_axes` of its per-axis masks are set. Axis 0 is the contiguous
//! axis; every other index combination forms a row that is either empty,
//! full, or restricted to the masked positions along axis 0. Row metadata
//! costs one word per row, so the layout overhead scales with the grid
//! cross-section while stored values scale with the layer volume.

use std::ops::Range;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Empty,
    Full,
    Masked,
}

#[derive(Debug, Clone)]
pub struct ShellLayout {
    counts: Vec<usize>,
    kinds: Vec<RowKind>,
    offsets: Vec<usize>,
    fast_positions: Vec<usize>,
    fast_slot: Vec<u32>,
}

impl ShellLayout {
    /// `masks[ax][l]` marks index `l` along axis `ax`.
    pub fn new(masks: &[Vec<bool>], min_axes: usize) -> Self {
        assert!(!masks.is_empty() && min_axes >= 1);
        let counts: Vec<usize> = masks.iter().map(Vec::len).collect();
        let fast_positions: Vec<usize> = (0..counts[0]).filter(|&l| masks[0][l]).collect();
        let mut fast_slot = vec![NONE; counts[0]];
        for (p, &l) in fast_positions.iter().enumerate() {
            fast_slot[l] = p as u32;
        }
        let rows: usize = counts[1..].iter().product();
        let mut kinds = Vec::with_capacity(rows);
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut idx = vec![0usize; counts.len() - 1];
        let mut total = 0usize;
        for _ in 0..rows {
            let hits = idx
                .iter()
                .enumerate()
                .filter(|(k, &l)| masks[k + 1][l])
                .count();
            let kind = if hits >= min_axes {
                RowKind::Full
            } else if hits + 1 == min_axes && !fast_positions.is_empty() {
                RowKind::Masked
            } else {
                RowKind::Empty
            };
            offsets.push(total);
            total += match kind {
                RowKind::Empty => 0,
                RowKind::Full => counts[0],
                RowKind::Masked => fast_positions.len(),
            };
            kinds.push(kind);
            for (k, l) in idx.iter_mut().enumerate() {
                *l += 1;
                if *l < counts[k + 1] {
                    break;
                }
                *l = 0;
            }
        }
        offsets.push(total);
        Self {
            counts,
            kinds,
            offsets,
            fast_positions,
            fast_slot,
        }
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn rows(&self) -> usize {
        self.kinds.len()
    }

    #[inline]
    pub fn row_kind(&self, row: usize) -> RowKind {
        self.kinds[row]
    }

    #[inline]
    pub fn row_range(&self, row: usize) -> Range<usize> {
        self.offsets[row]..self.offsets[row + 1]
    }

    /// Axis-0 indices stored in `row`, in storage order.
    pub fn row_indices(&self, row: usize) -> RowIndices<'_> {
        match self.kinds[row] {
            RowKind::Empty => RowIndices::Range(0..0),
            RowKind::Full => RowIndices::Range(0..self.counts[0]),
            RowKind::Masked => RowIndices::List(self.fast_positions.iter()),
        }
    }

    /// Storage slot of entry `(fast, row)`, if stored.
    #[inline]
    pub fn get(&self, row: usize, fast: usize) -> Option<usize> {
        let off = self.offsets[row];
        match self.kinds[row] {
            RowKind::Empty => None,
            RowKind::Full => Some(off + fast),
            RowKind::Masked => {
                let s = self.fast_slot[fast];
                (s != NONE).then(|| off + s as usize)
            }
        }
    }

    /// Value of a compact field at `(fast, row)`, zero when not stored.
    #[inline]
    pub fn value(&self, data: &[f64], row: usize, fast: usize) -> f64 {
        match self.get(row, fast) {
            Some(s) => data[s],
            None => 0.0,
        }
    }

    /// Splits compact data into one mutable slice per row.
    pub fn split_rows_mut<'a>(&self, mut data: &'a mut [f64]) -> Vec<&'a mut [f64]> {
        assert_eq!(data.len(), self.len());
        let mut out = Vec::with_capacity(self.rows());
        for row in 0..self.rows() {
            let (head, tail) = data.split_at_mut(self.row_range(row).len());
            out.push(head);
            data = tail;
        }
        out
    }

    /// Decomposes a row index into the multi-index of axes `1..`.
    pub fn row_multi_index(&self, mut row: usize) -> Vec<usize> {
        self.counts[1..]
            .iter()
            .map(|&n| {
                let l = row % n;
                row /= n;
                l
            })
            .collect()
    }
}

pub enum RowIndices<'a> {
    Range(Range<usize>),
    List(std::slice::Iter<'a, usize>),
}

impl Iterator for RowIndices<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        match self {
            RowIndices::Range(r) => r.next(),
            RowIndices::List(it) => it.next().copied(),
        }
    }
}
