//! Index helpers shared by the 2D and 3D kernels.

use std::ops::Range;

use crate::grid::{Axis, Boundary};

/// Neighbour tables along one axis.
///
/// Cell `k` sits between nodes `k` and `next[k]`; the cells adjacent to
/// node `l` are `prev[l]` and `l`.
#[derive(Debug, Clone)]
pub(crate) struct AxisNb {
    pub prev: Vec<usize>,
    pub next: Vec<usize>,
    /// Nodes whose value is advanced in time.
    pub updated: Range<usize>,
    pub cells: usize,
}

impl AxisNb {
    pub fn new(axis: &Axis) -> Self {
        let n = axis.nodes;
        let periodic = axis.boundary == Boundary::Periodic;
        let prev = (0..n)
            .map(|l| {
                if l == 0 {
                    if periodic {
                        n - 1
                    } else {
                        0
                    }
                } else {
                    l - 1
                }
            })
            .collect();
        let next = (0..n)
            .map(|l| {
                if l + 1 == n {
                    if periodic {
                        0
                    } else {
                        l
                    }
                } else {
                    l + 1
                }
            })
            .collect();
        let updated = if periodic { 0..n } else { 1..n - 1 };
        Self {
            prev,
            next,
            updated,
            cells: axis.cells(),
        }
    }

    /// Node `l` touches positive damping through itself or an adjacent cell.
    pub fn near_layer(&self, at_nodes: &[f64], at_halves: &[f64]) -> Vec<bool> {
        let periodic = self.cells == at_nodes.len();
        (0..at_nodes.len())
            .map(|l| {
                let left = (l > 0 || periodic) && at_halves[self.prev[l]] > 0.0;
                let right = l < self.cells && at_halves[l] > 0.0;
                at_nodes[l] > 0.0 || left || right
            })
            .collect()
    }
}

/// First non-finite entry of `u`, if any.
pub(crate) fn find_non_finite(u: &[f64]) -> Option<usize> {
    u.iter().position(|v| !v.is_finite())
}

/// Maximal runs of nodes in `updated` that are not near the layer and whose
/// neighbours `l - 1`, `l + 1` need no wrap-around.
pub(crate) fn interior_runs(near: &[bool], updated: &Range<usize>) -> Vec<Range<usize>> {
    let lo = updated.start.max(1);
    let hi = updated.end.min(near.len().saturating_sub(1));
    let mut runs = Vec::new();
    let mut l = lo;
    while l < hi {
        if near[l] {
            l += 1;
            continue;
        }
        let start = l;
        while l < hi && !near[l] {
            l += 1;
        }
        runs.push(start..l);
    }
    runs
}
