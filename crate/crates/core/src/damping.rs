//! Smooth damping profiles for the absorbing layer.
//!
//! Every axis uses `zeta(s) = zeta_bar * (s - sin(2 pi s) / (2 pi))` with
//! `s = (|x| - a) / L` the normalised depth into the layer. The profile and
//! its first two derivatives vanish at `s = 0`, so no transmission
//! condition is needed at the interface.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::grid::GridSpec;

#[inline]
fn shape(s: f64) -> f64 {
    s - (2.0 * PI * s).sin() / (2.0 * PI)
}

/// `zeta_bar = (c / L) ln(1 / R)`.
pub fn zeta_bar_from_reflection(c: f64, layer_width: f64, reflection: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(invalid("c", format!("must be positive, got {c}")));
    }
    if !(layer_width > 0.0) {
        return Err(invalid(
            "layer_width",
            format!("must be positive, got {layer_width}"),
        ));
    }
    if !(reflection > 0.0 && reflection <= 1.0) {
        return Err(invalid(
            "reflection",
            format!("must lie in (0, 1], got {reflection}"),
        ));
    }
    Ok(c / layer_width * (1.0 / reflection).ln())
}

/// Inverse of [`zeta_bar_from_reflection`].
pub fn reflection_from_zeta_bar(c: f64, layer_width: f64, zeta_bar: f64) -> f64 {
    (-zeta_bar * layer_width / c).exp()
}

/// Damping coefficient at coordinate `x` for a layer `a <= |x| <= a + L`.
pub fn eval_zeta(x: f64, a: f64, layer_width: f64, zeta_bar: f64) -> f64 {
    let d = x.abs() - a;
    if d <= 0.0 {
        return 0.0;
    }
    zeta_bar * shape((d / layer_width).min(1.0))
}

/// Per-axis damping samples on integer nodes and half nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingProfile {
    zeta_bar: Vec<f64>,
    nodes: Vec<Vec<f64>>,
    halves: Vec<Vec<f64>>,
}

impl DampingProfile {
    /// Samples the smooth profile with the given peak value per axis.
    ///
    /// Depths are computed from node indices, so samples with `|x| <= a` are
    /// exactly zero and the profile is exactly symmetric.
    pub fn sample(grid: &GridSpec, zeta_bar: &[f64]) -> Result<Self> {
        if zeta_bar.len() != grid.dim() {
            return Err(invalid(
                "zeta_bar",
                format!("expected {} entries, got {}", grid.dim(), zeta_bar.len()),
            ));
        }
        if let Some(z) = zeta_bar.iter().find(|z| !(**z >= 0.0 && z.is_finite())) {
            return Err(invalid(
                "zeta_bar",
                format!("must be non-negative, got {z}"),
            ));
        }
        let mut nodes = Vec::with_capacity(grid.dim());
        let mut halves = Vec::with_capacity(grid.dim());
        for (ax, &zb) in grid.axes().iter().zip(zeta_bar) {
            let m = ax.layer_cells;
            let at = |depth: f64| {
                if depth > 0.0 {
                    zb * shape(depth / m)
                } else {
                    0.0
                }
            };
            nodes.push((0..ax.nodes).map(|l| at(ax.node_depth(l))).collect());
            halves.push((0..ax.cells()).map(|l| at(ax.half_depth(l))).collect());
        }
        Ok(Self {
            zeta_bar: zeta_bar.to_vec(),
            nodes,
            halves,
        })
    }

    /// Profile whose peak on every axis is set from a target reflection.
    pub fn from_reflection(grid: &GridSpec, c: f64, reflection: f64) -> Result<Self> {
        let zb = grid
            .axes()
            .iter()
            .map(|ax| zeta_bar_from_reflection(c, ax.layer_width, reflection))
            .collect::<Result<Vec<_>>>()?;
        Self::sample(grid, &zb)
    }

    /// No damping anywhere.
    pub fn zero(grid: &GridSpec) -> Self {
        Self::sample(grid, &vec![0.0; grid.dim()]).expect("zero profile is valid")
    }

    /// Constant damping `zeta[i]` along each axis over the whole mesh.
    pub fn constant(grid: &GridSpec, zeta: &[f64]) -> Result<Self> {
        if zeta.len() != grid.dim() || zeta.iter().any(|z| !(*z >= 0.0)) {
            return Err(invalid("zeta", "need one non-negative value per axis"));
        }
        Ok(Self {
            zeta_bar: zeta.to_vec(),
            nodes: grid
                .axes()
                .iter()
                .zip(zeta)
                .map(|(ax, &z)| vec![z; ax.nodes])
                .collect(),
            halves: grid
                .axes()
                .iter()
                .zip(zeta)
                .map(|(ax, &z)| vec![z; ax.cells()])
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn zeta_bar(&self) -> &[f64] {
        &self.zeta_bar
    }

    /// Samples at integer nodes of axis `ax`.
    pub fn at_nodes(&self, ax: usize) -> &[f64] {
        &self.nodes[ax]
    }

    /// Samples at half nodes `l + 1/2` of axis `ax`.
    pub fn at_halves(&self, ax: usize) -> &[f64] {
        &self.halves[ax]
    }

    /// Largest `sum_{i<j} zeta_i zeta_j` over the nodes, the coefficient of
    /// the explicit zero-order term in the `u` update.
    pub fn max_pair_product(&self) -> f64 {
        let peaks: Vec<f64> = self
            .nodes
            .iter()
            .map(|z| z.iter().fold(0.0, |m: f64, &v| m.max(v)))
            .collect();
        let mut q = 0.0;
        for i in 0..peaks.len() {
            for j in i + 1..peaks.len() {
                q += peaks[i] * peaks[j];
            }
        }
        q
    }

    /// True when no sample on any axis is positive.
    pub fn is_zero(&self) -> bool {
        self.nodes
            .iter()
            .chain(&self.halves)
            .flatten()
            .all(|&z| z == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_relation() {
        let zb = zeta_bar_from_reflection(1.0, 0.1, (-8.0f64).exp()).unwrap();
        assert!((zb - 80.0).abs() < 1e-12);
        assert_eq!(zeta_bar_from_reflection(1.0, 1.0, 1.0).unwrap(), 0.0);
        let zb = zeta_bar_from_reflection(1.0, 0.1, 1e-3).unwrap();
        assert!((zb - 69.0776).abs() < 1e-4);
        assert!(zeta_bar_from_reflection(1.0, 0.1, 0.0).is_err());
        assert!(zeta_bar_from_reflection(1.0, 0.1, 1.5).is_err());
        assert!((reflection_from_zeta_bar(1.0, 0.1, 80.0) - 3.354626e-4).abs() < 1e-9);
    }

    #[test]
    fn closed_form_values() {
        let (a, l) = (0.5, 0.1);
        assert_eq!(eval_zeta(a, a, l, 80.0), 0.0);
        assert_eq!(eval_zeta(0.2, a, l, 80.0), 0.0);
        assert!((eval_zeta(a + l / 2.0, a, l, 80.0) - 40.0).abs() < 1e-12);
        let quarter = 80.0 * (0.25 - 1.0 / (2.0 * PI));
        assert!((eval_zeta(a + l / 4.0, a, l, 80.0) - quarter).abs() < 1e-12);
        assert!((quarter - 7.26761).abs() < 1e-5);
        assert!((eval_zeta(a + l, a, l, 80.0) - 80.0).abs() < 1e-12);
        assert!((eval_zeta(-(a + l), a, l, 80.0) - 80.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_profile_is_exactly_zero_inside() {
        let g = GridSpec::uniform(2, 0.5, 0.1, 0.002).unwrap();
        let p = DampingProfile::sample(&g, &[80.0, 80.0]).unwrap();
        for ax in 0..2 {
            let z = p.at_nodes(ax);
            assert_eq!(z.iter().filter(|&&v| v == 0.0).count(), 501);
            assert_eq!(z[0], 80.0);
            assert_eq!(*z.last().unwrap(), 80.0);
            for l in 0..z.len() {
                assert_eq!(z[l], z[z.len() - 1 - l]);
            }
            let h = p.at_halves(ax);
            for l in 0..h.len() {
                assert_eq!(h[l], h[h.len() - 1 - l]);
            }
            assert_eq!(h.iter().filter(|&&v| v == 0.0).count(), 500);
        }
        let zero = DampingProfile::sample(&g, &[0.0, 0.0]).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn samples_match_closed_form() {
        let g = GridSpec::uniform(2, 0.5, 0.1, 0.01).unwrap();
        let p = DampingProfile::sample(&g, &[80.0, 40.0]).unwrap();
        let ax = g.axis(1);
        for l in 0..ax.nodes {
            let exact = eval_zeta(ax.coord(l), 0.5, 0.1, 40.0);
            assert!((p.at_nodes(1)[l] - exact).abs() < 1e-9);
        }
        for l in 0..ax.cells() {
            let exact = eval_zeta(ax.half_coord(l), 0.5, 0.1, 40.0);
            assert!((p.at_halves(1)[l] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn interface_is_twice_differentiable() {
        // One-sided divided differences at |x| = a shrink like h^2 and h.
        let (a, l, zb) = (0.5, 0.1, 80.0);
        let diffs = |h: f64| {
            let z0 = eval_zeta(a, a, l, zb);
            let z1 = eval_zeta(a + h, a, l, zb);
            let z2 = eval_zeta(a + 2.0 * h, a, l, zb);
            ((z1 - z0) / h, (z2 - 2.0 * z1 + z0) / (h * h))
        };
        let (d1a, d2a) = diffs(1e-3);
        let (d1b, d2b) = diffs(5e-4);
        let p1 = (d1a / d1b).log2();
        let p2 = (d2a / d2b).log2();
        assert!((p1 - 2.0).abs() < 0.05, "first difference order {p1}");
        assert!((p2 - 1.0).abs() < 0.05, "second difference order {p2}");
    }

    #[test]
    fn profile_curves_for_several_peaks() {
        for zb in [20.0, 40.0, 60.0, 80.0] {
            let xs: Vec<f64> = (0..=100).map(|i| 0.5 + 0.1 * i as f64 / 100.0).collect();
            let zs: Vec<f64> = xs.iter().map(|&x| eval_zeta(x, 0.5, 0.1, zb)).collect();
            assert!(zs.windows(2).all(|w| w[1] >= w[0]));
            assert!((zs.last().unwrap() - zb).abs() < 1e-12);
            assert!(zs.iter().all(|&z| z <= zb + 1e-12));
        }
    }

    proptest::proptest! {
        #[test]
        fn scaling_and_symmetry(x in -0.6f64..0.6, lambda in 0.1f64..10.0, zb in 0.0f64..200.0) {
            let z = eval_zeta(x, 0.5, 0.1, zb);
            proptest::prop_assert!(z >= 0.0);
            proptest::prop_assert_eq!(z, eval_zeta(-x, 0.5, 0.1, zb));
            let scaled = eval_zeta(x, 0.5, 0.1, lambda * zb);
            proptest::prop_assert!((scaled - lambda * z).abs() <= 1e-12 * scaled.abs().max(1.0));
        }
    }
}
