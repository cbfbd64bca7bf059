//! Uniform node-centred grids on `[-(a+L), a+L]` per axis.
//!
//! The solution `u` lives on integer nodes; auxiliary layer fields live on
//! cell centres (half-integer indices). Arrays are stored with x1 varying
//! fastest, i.e. flat index `i + N1*(j + N2*k)`.

use crate::error::{Error, Result};

/// Outer boundary treatment along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// `u = 0` on the first and last node.
    Dirichlet,
    /// Node `N-1` is followed by node `0`.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub half_width: f64,
    pub layer_width: f64,
    pub spacing: f64,
    /// Number of integer nodes.
    pub nodes: usize,
    /// Layer width in units of the spacing; integral when the interface
    /// falls on a node.
    pub layer_cells: f64,
    pub boundary: Boundary,
}

impl Axis {
    /// Coordinate of integer node `l`. Centred so that the grid is exactly
    /// symmetric about the origin.
    #[inline]
    pub fn coord(&self, l: usize) -> f64 {
        (2.0 * l as f64 - (self.nodes - 1) as f64) * 0.5 * self.spacing
    }

    /// Coordinate of the half node `l + 1/2`.
    #[inline]
    pub fn half_coord(&self, l: usize) -> f64 {
        (2.0 * l as f64 + 1.0 - (self.nodes - 1) as f64) * 0.5 * self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.coord(0)
    }

    /// Nearest integer node to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let l = ((x - self.origin()) / self.spacing).round();
        l.clamp(0.0, (self.nodes - 1) as f64) as usize
    }

    /// Number of staggered cells: one fewer than nodes unless periodic.
    pub fn cells(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => self.nodes - 1,
            Boundary::Periodic => self.nodes,
        }
    }

    /// Depth into the absorbing layer of integer node `l`, measured in cell
    /// widths; zero for `|x| <= a`.
    pub fn node_depth(&self, l: usize) -> f64 {
        let from_end = l.min(self.nodes - 1 - l) as f64;
        (self.layer_cells - from_end).max(0.0)
    }

    /// Depth into the layer of the half node `l + 1/2`.
    pub fn half_depth(&self, l: usize) -> f64 {
        let h = l as f64 + 0.5;
        let from_end = h.min((self.nodes - 1) as f64 - h);
        (self.layer_cells - from_end).max(0.0)
    }

    /// Node index range `lo..hi` covering the closed computational interval
    /// `[-a, a]`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        let skip = self.layer_cells.ceil() as usize;
        skip..self.nodes - skip
    }
}

/// Rectangular grid plus absorbing-layer geometry in 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

fn integral_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-12 * r.abs().max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

/// `L / dx`, snapped to the nearest integer when within rounding of it.
fn layer_ratio(layer: f64, dx: f64) -> f64 {
    integral_ratio(layer, dx).map_or(layer / dx, |n| n as f64)
}

impl GridSpec {
    /// Builds a grid with `2(a+L)/dx + 1` nodes per axis.
    ///
    /// The outer boundary must fall on a node. The layer interface `|x| = a`
    /// normally does too; when `L/dx` is not integral the interface sits
    /// between nodes and the damping profile is sampled at the actual node
    /// coordinates.
    pub fn new(dim: usize, a: &[f64], layer: &[f64], dx: &[f64]) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: format!("must be 2 or 3, got {dim}"),
            });
        }
        for (name, v) in [("half_width", a), ("layer_width", layer), ("dx", dx)] {
            if v.len() != dim {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("expected {dim} entries, got {}", v.len()),
                });
            }
        }
        let mut axes = Vec::with_capacity(dim);
        for ax in 0..dim {
            let (ai, li, hi) = (a[ax], layer[ax], dx[ax]);
            let bad = |reason: String| Error::InvalidGrid {
                axis: ax + 1,
                reason,
            };
            if !(ai > 0.0 && ai.is_finite()) {
                return Err(bad(format!("half width must be positive, got {ai}")));
            }
            if !(li > 0.0 && li.is_finite()) {
                return Err(bad(format!("layer width must be positive, got {li}")));
            }
            if !(hi > 0.0 && hi.is_finite()) {
                return Err(bad(format!("spacing must be positive, got {hi}")));
            }
            let layer_cells = layer_ratio(li, hi);
            if layer_cells < 1.0 {
                return Err(bad(format!(
                    "layer width {li} is thinner than one cell {hi}"
                )));
            }
            let span = integral_ratio(2.0 * (ai + li), hi).ok_or_else(|| {
                bad(format!(
                    "extent 2(a+L) = {} is not an integer multiple of spacing {hi}",
                    2.0 * (ai + li)
                ))
            })?;
            if span as f64 <= 2.0 * layer_cells {
                return Err(bad("interior contains no cells".into()));
            }
            axes.push(Axis {
                half_width: ai,
                layer_width: li,
                spacing: hi,
                nodes: span + 1,
                layer_cells,
                boundary: Boundary::Dirichlet,
            });
        }
        Ok(Self { axes })
    }

    /// Same spacing, half width and layer width on every axis.
    pub fn uniform(dim: usize, a: f64, layer: f64, dx: f64) -> Result<Self> {
        Self::new(dim, &vec![a; dim], &vec![layer; dim], &vec![dx; dim])
    }

    pub fn with_boundary(mut self, axis: usize, boundary: Boundary) -> Self {
        self.axes[axis].boundary = boundary;
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, ax: usize) -> &Axis {
        &self.axes[ax]
    }

    pub fn node_counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes).collect()
    }

    pub fn cell_counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.cells()).collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn num_cells(&self) -> usize {
        self.axes.iter().map(|a| a.cells()).product()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.spacing).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.spacing)
            .fold(f64::INFINITY, f64::min)
    }

    /// Volume element `prod dx_i`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    /// Flat index of a node, x1 fastest.
    #[inline]
    pub fn node_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for ax in (0..self.dim()).rev() {
            flat = flat * self.axes[ax].nodes + idx[ax];
        }
        flat
    }

    /// Inverse of [`GridSpec::node_index`].
    pub fn node_multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for axis in &self.axes {
            out.push(flat % axis.nodes);
            flat /= axis.nodes;
        }
        out
    }

    pub fn node_coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.axes)
            .map(|(&l, a)| a.coord(l))
            .collect()
    }

    /// Whether a node lies in the closed computational domain `[-a, a]^d`.
    pub fn in_domain(&self, idx: &[usize]) -> bool {
        idx.iter()
            .zip(&self.axes)
            .all(|(&l, a)| a.interior().contains(&l))
    }

    /// Whether a point lies strictly inside `(-a, a)^d`.
    pub fn strictly_inside(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.axes)
                .all(|(&xi, a)| xi.abs() < a.half_width)
    }
}

/// Largest stable leapfrog step `safety * min(dx) / (c_max * sqrt(dim))`.
pub fn cfl_timestep(grid: &GridSpec, c_max: f64, safety: f64) -> Result<f64> {
    if !(c_max > 0.0 && c_max.is_finite()) {
        return Err(crate::error::invalid(
            "c_max",
            format!("must be positive, got {c_max}"),
        ));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(crate::error::invalid(
            "safety",
            format!("must lie in (0, 1], got {safety}"),
        ));
    }
    Ok(safety * grid.min_spacing() / (c_max * (grid.dim() as f64).sqrt()))
}

/// Largest stable step when the update also carries an explicit zero-order
/// term `q u` with `0 <= q <= q_max`: the leapfrog amplification stays
/// bounded while `dt^2 (c^2 sum 4/h^2 + q) <= 4`. Never exceeds
/// [`cfl_timestep`] and equals it for `q_max = 0`.
pub fn stable_timestep(grid: &GridSpec, c_max: f64, q_max: f64, safety: f64) -> Result<f64> {
    let cfl = cfl_timestep(grid, c_max, safety)?;
    if !(q_max >= 0.0 && q_max.is_finite()) {
        return Err(crate::error::invalid(
            "q_max",
            format!("must be non-negative, got {q_max}"),
        ));
    }
    let lap: f64 = grid
        .axes()
        .iter()
        .map(|a| 4.0 / (a.spacing * a.spacing))
        .sum();
    // scaled by c so that c^2 cannot overflow
    let q = q_max / c_max / c_max;
    Ok(cfl.min(safety * 2.0 / c_max / (lap + q).sqrt()))
}

/// Default CFL safety factor.
pub const DEFAULT_SAFETY: f64 = 0.9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_grids_have_expected_node_counts() {
        let g = GridSpec::uniform(2, 0.5, 0.1, 0.002).unwrap();
        assert_eq!(g.node_counts(), vec![601, 601]);
        let g = GridSpec::uniform(2, 1.0, 0.2, 0.004).unwrap();
        assert_eq!(g.node_counts(), vec![601, 601]);
        let g = GridSpec::uniform(3, 0.5, 0.1, 0.006).unwrap();
        assert_eq!(g.node_counts(), vec![201, 201, 201]);
    }

    #[test]
    fn rejects_bad_geometry_with_axis() {
        let err = GridSpec::new(2, &[0.5, 0.5], &[0.1, 0.1005], &[0.01, 0.01]).unwrap_err();
        match err {
            Error::InvalidGrid { axis, .. } => assert_eq!(axis, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(GridSpec::new(2, &[0.5, -0.5], &[0.1, 0.1], &[0.01, 0.01]).is_err());
        assert!(GridSpec::new(2, &[0.5, 0.5], &[0.1, 0.1], &[0.0, 0.01]).is_err());
        assert!(GridSpec::new(4, &[0.5; 4], &[0.1; 4], &[0.01; 4]).is_err());
        assert!(GridSpec::new(2, &[0.5], &[0.1, 0.1], &[0.01, 0.01]).is_err());
    }

    #[test]
    fn cfl_examples() {
        let g2 = GridSpec::uniform(2, 0.5, 0.1, 0.01).unwrap();
        let g3 = GridSpec::uniform(3, 0.5, 0.1, 0.01).unwrap();
        assert!((cfl_timestep(&g2, 1.0, 0.9).unwrap() - 0.0063640).abs() < 1e-7);
        assert!((cfl_timestep(&g3, 1.0, 1.0).unwrap() - 0.0057735).abs() < 1e-7);
        assert!(cfl_timestep(&g2, 1.0, 0.0).is_err());
        assert!(cfl_timestep(&g2, 0.0, 0.9).is_err());
        for g in [&g2, &g3] {
            let plain = stable_timestep(g, 1.0, 0.0, 0.9).unwrap();
            assert!((plain / cfl_timestep(g, 1.0, 0.9).unwrap() - 1.0).abs() < 1e-14);
        }
        // dx = 0.02 in 3D with three axes at 80: dt^2 (30000 + 19200) = 4
        let g = GridSpec::uniform(3, 0.5, 0.1, 0.02).unwrap();
        let dt = stable_timestep(&g, 1.0, 3.0 * 6400.0, 1.0).unwrap();
        assert!((dt - (4.0f64 / 49200.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coordinates_round_trip_and_cells_are_midpoints() {
        let g = GridSpec::new(3, &[0.5, 0.3, 0.2], &[0.1, 0.1, 0.05], &[0.01, 0.02, 0.05]).unwrap();
        for ax in g.axes() {
            assert!((ax.coord(0) + ax.half_width + ax.layer_width).abs() < 1e-14);
            assert!((ax.coord(ax.nodes - 1) - ax.half_width - ax.layer_width).abs() < 1e-14);
            for l in 0..ax.nodes {
                assert_eq!(ax.nearest(ax.coord(l)), l);
            }
            for l in 0..ax.nodes - 1 {
                let mid = 0.5 * (ax.coord(l) + ax.coord(l + 1));
                assert!((ax.half_coord(l) - mid).abs() <= 4.0 * f64::EPSILON * mid.abs().max(1.0));
            }
        }
        for flat in [0, 17, g.num_nodes() - 1] {
            assert_eq!(g.node_index(&g.node_multi_index(flat)), flat);
        }
    }

    #[test]
    fn interior_range_covers_closed_domain() {
        let g = GridSpec::uniform(2, 0.5, 0.1, 0.002).unwrap();
        let ax = g.axis(0);
        assert_eq!(ax.interior().len(), 501);
        assert_eq!(ax.node_depth(ax.interior().start), 0.0);
        assert_eq!(ax.node_depth(ax.interior().start - 1), 1.0);
        assert_eq!(ax.node_depth(0), 50.0);
    }

    #[test]
    fn layer_interface_between_nodes() {
        let g = GridSpec::uniform(3, 0.5, 0.1, 0.006).unwrap();
        let ax = g.axis(0);
        assert!((ax.layer_cells - 0.1 / 0.006).abs() < 1e-12);
        for l in 0..ax.nodes {
            let inside = ax.coord(l).abs() <= 0.5;
            assert_eq!(ax.node_depth(l) == 0.0, inside, "node {l}");
        }
        assert!(GridSpec::uniform(2, 0.5, 0.001, 0.01).is_err());
    }
}
