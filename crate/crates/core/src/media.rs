//! Wave-speed models, point sources and initial data.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;

/// Piecewise speed profile depending on `x2` only: 0.5 below `-b`, 1.5 above
/// `b`, and a smooth monotone transition in between.
pub fn layered_speed(x2: f64, b: f64) -> f64 {
    if x2 <= -b {
        0.5
    } else if x2 < b {
        1.0 + x2 / (2.0 * b) + (PI * x2 / b).sin() / (2.0 * PI)
    } else {
        1.5
    }
}

/// Initial displacement of the heterogeneous-medium scenario.
pub fn bump_initial(x1: f64, x2: f64) -> f64 {
    if -0.4 < x1 && x1 < 0.4 && -1.0 < x2 && x2 < 1.0 {
        (4.0 * (x1 + 0.4) * (0.4 - x1)).powi(3) * (3.0 * PI * x2).sin()
    } else {
        0.0
    }
}

/// `h(t) = d/dt exp(-pi^2 (f0 t - 1)^2)`.
pub fn source_amplitude(t: f64, f0: f64) -> f64 {
    let s = f0 * t - 1.0;
    -2.0 * PI * PI * f0 * s * (-PI * PI * s * s).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedModel {
    Constant(f64),
    /// [`layered_speed`] with transition half-width `b`.
    Layered {
        b: f64,
    },
}

impl SpeedModel {
    pub fn speed(&self, x: &[f64]) -> f64 {
        match *self {
            SpeedModel::Constant(c) => c,
            SpeedModel::Layered { b } => layered_speed(x[1], b),
        }
    }

    /// Upper bound of the speed over all of space.
    pub fn max_speed(&self) -> f64 {
        match *self {
            SpeedModel::Constant(c) => c,
            SpeedModel::Layered { .. } => 1.5,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SpeedModel::Constant(c) if !(c > 0.0 && c.is_finite()) => {
                Err(invalid("c", format!("must be positive, got {c}")))
            }
            SpeedModel::Layered { b } if !(b > 0.0) => {
                Err(invalid("b", format!("must be positive, got {b}")))
            }
            _ => Ok(()),
        }
    }
}

/// Squared wave speed sampled where the variable-coefficient Laplacian
/// needs it: `c^2` at `x_{i+1/2}` along each axis with the other
/// coordinates on integer nodes.
///
/// Outside the computational domain the speed is continued constantly along
/// the normal direction.
#[derive(Debug, Clone)]
pub struct MediumModel {
    model: SpeedModel,
    half_widths: Vec<f64>,
    faces: Vec<Vec<f64>>,
    c_max: f64,
}

impl MediumModel {
    pub fn new(grid: &GridSpec, model: SpeedModel) -> Result<Self> {
        let half_widths: Vec<f64> = grid.axes().iter().map(|a| a.half_width).collect();
        Self::with_domain(grid, model, &half_widths)
    }

    /// Like [`MediumModel::new`], but the speed is continued outside the box
    /// `[-a, a]` given by `half_widths` rather than the grid's own domain.
    /// Used for enlarged reference grids that must see the same medium.
    pub fn with_domain(grid: &GridSpec, model: SpeedModel, half_widths: &[f64]) -> Result<Self> {
        model.validate()?;
        let dim = grid.dim();
        let half_widths = half_widths.to_vec();
        let mut faces = Vec::with_capacity(dim);
        let mut c_max: f64 = 0.0;
        for fa in 0..dim {
            let counts: Vec<usize> = (0..dim)
                .map(|ax| {
                    if ax == fa {
                        grid.axis(ax).cells()
                    } else {
                        grid.axis(ax).nodes
                    }
                })
                .collect();
            let total: usize = counts.iter().product();
            let mut out = Vec::with_capacity(total);
            let mut idx = vec![0usize; dim];
            let mut x = vec![0.0; dim];
            for _ in 0..total {
                for ax in 0..dim {
                    let a = grid.axis(ax);
                    let raw = if ax == fa {
                        a.half_coord(idx[ax])
                    } else {
                        a.coord(idx[ax])
                    };
                    x[ax] = raw.clamp(-half_widths[ax], half_widths[ax]);
                }
                let c = model.speed(&x);
                c_max = c_max.max(c);
                out.push(c * c);
                for ax in 0..dim {
                    idx[ax] += 1;
                    if idx[ax] < counts[ax] {
                        break;
                    }
                    idx[ax] = 0;
                }
            }
            faces.push(out);
        }
        Ok(Self {
            model,
            half_widths,
            faces,
            c_max,
        })
    }

    pub fn model(&self) -> SpeedModel {
        self.model
    }

    /// `c^2` at the half-shifted points along axis `ax`, flattened with x1
    /// fastest and `cells` entries along `ax`.
    pub fn faces(&self, ax: usize) -> &[f64] {
        &self.faces[ax]
    }

    /// Maximum sampled speed.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// `c^2` at an arbitrary point, continued constantly outside the domain.
    pub fn c2_at(&self, x: &[f64]) -> f64 {
        let clamped: Vec<f64> = x
            .iter()
            .zip(&self.half_widths)
            .map(|(&xi, &a)| xi.clamp(-a, a))
            .collect();
        let c = self.model.speed(&clamped);
        c * c
    }
}

/// Source term `delta(x - x_s) h(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceTerm {
    None,
    PointGaussianDerivative { location: Vec<f64>, f0: f64 },
}

/// A source resolved onto one grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSource {
    pub node: usize,
    /// Discrete delta normalisation `1 / prod dx_i`.
    pub weight: f64,
    pub f0: f64,
}

impl DiscreteSource {
    /// Additive forcing at [`DiscreteSource::node`] at time `t`.
    #[inline]
    pub fn forcing(&self, t: f64) -> f64 {
        let h = source_amplitude(t, self.f0);
        if h == 0.0 {
            0.0
        } else {
            h * self.weight
        }
    }
}

impl SourceTerm {
    pub fn point(location: Vec<f64>, f0: f64) -> Self {
        SourceTerm::PointGaussianDerivative { location, f0 }
    }

    /// Nearest-node discretisation of the source on `grid`.
    pub fn discretize(&self, grid: &GridSpec) -> Result<Option<DiscreteSource>> {
        match self {
            SourceTerm::None => Ok(None),
            SourceTerm::PointGaussianDerivative { location, f0 } => {
                if !(*f0 > 0.0) {
                    return Err(invalid("f0", format!("must be positive, got {f0}")));
                }
                if !grid.strictly_inside(location) {
                    return Err(Error::InvalidParameter {
                        name: "source.location",
                        reason: format!("{location:?} is not strictly inside the domain"),
                    });
                }
                let idx: Vec<usize> = location
                    .iter()
                    .zip(grid.axes())
                    .map(|(&x, ax)| ax.nearest(x))
                    .collect();
                Ok(Some(DiscreteSource {
                    node: grid.node_index(&idx),
                    weight: 1.0 / grid.cell_volume(),
                    f0: *f0,
                }))
            }
        }
    }
}

/// Initial displacement `u0`; the initial velocity is zero for every preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    Zero,
    Bump2d,
}

impl InitialCondition {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InitialCondition::Zero => 0.0,
            InitialCondition::Bump2d => bump_initial(x[0], x[1]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_amplitude_values() {
        assert_eq!(source_amplitude(0.1, 10.0), 0.0);
        let expected = 20.0 * PI * PI * (-PI * PI).exp();
        assert!((source_amplitude(0.0, 10.0) - expected).abs() < 1e-15);
        // high-precision evaluation of 20 pi^2 e^{-pi^2}
        assert!((expected - 0.010_209_747_723_910_207).abs() < 1e-16);
        for s in [0.01, 0.037, 0.2] {
            let (p, m) = (
                source_amplitude(0.1 + s, 10.0),
                source_amplitude(0.1 - s, 10.0),
            );
            assert!((p + m).abs() < 1e-12);
        }
    }

    #[test]
    fn source_amplitude_is_derivative_of_gaussian() {
        let g = |t: f64| (-PI * PI * (10.0 * t - 1.0f64).powi(2)).exp();
        for t in [0.03, 0.08, 0.11, 0.17] {
            let h = 1e-6;
            let fd = (g(t + h) - g(t - h)) / (2.0 * h);
            assert!((fd - source_amplitude(t, 10.0)).abs() < 1e-5);
        }
    }

    #[test]
    fn layered_speed_values_and_continuity() {
        let b = 0.95;
        assert_eq!(layered_speed(-b, b), 0.5);
        assert_eq!(layered_speed(0.0, b), 1.0);
        assert!((layered_speed(b / 2.0, b) - (1.25 + 1.0 / (2.0 * PI))).abs() < 1e-15);
        assert!((layered_speed(b / 2.0, b) - 1.4091550).abs() < 1e-7);
        let eps = 1e-12;
        for edge in [-b, b] {
            let jump = (layered_speed(edge + eps, b) - layered_speed(edge - eps, b)).abs();
            assert!(jump < 1e-9, "jump {jump} at {edge}");
        }
    }

    #[test]
    fn bump_values_and_support() {
        assert_eq!(bump_initial(0.4, 0.3), 0.0);
        assert_eq!(bump_initial(-0.4, 0.3), 0.0);
        assert!((bump_initial(0.0, 1.0 / 6.0) - 0.262144).abs() < 1e-12);
        assert!(bump_initial(0.0, 1.0 / 3.0).abs() < 1e-15);
        let g = GridSpec::uniform(2, 1.0, 0.2, 0.02).unwrap();
        for l in 0..g.num_nodes() {
            let x = g.node_coords(&g.node_multi_index(l));
            if x[0].abs() >= 0.4 {
                assert_eq!(bump_initial(x[0], x[1]), 0.0);
            }
        }
    }

    #[test]
    fn layered_medium_stays_in_range() {
        let g = GridSpec::uniform(2, 1.0, 0.2, 0.02).unwrap();
        let m = MediumModel::new(&g, SpeedModel::Layered { b: 0.95 }).unwrap();
        for ax in 0..2 {
            for &c2 in m.faces(ax) {
                let c = c2.sqrt();
                assert!((0.5..=1.5).contains(&c));
            }
        }
        assert!(m.c_max() <= 1.5 && m.c_max() > 1.49);
        let flat = MediumModel::new(&g, SpeedModel::Constant(2.0)).unwrap();
        assert!(flat.faces(0).iter().all(|&v| v == 4.0));
        assert!(MediumModel::new(&g, SpeedModel::Constant(-1.0)).is_err());
    }

    #[test]
    fn point_source_normalisation() {
        let g = GridSpec::uniform(2, 0.5, 0.1, 0.002).unwrap();
        let src = SourceTerm::point(vec![0.0, 0.0], 10.0)
            .discretize(&g)
            .unwrap()
            .unwrap();
        assert!((src.weight - 250_000.0).abs() < 1e-6);
        assert_eq!(g.node_multi_index(src.node), vec![300, 300]);
        assert_eq!(src.forcing(0.1), 0.0);
        assert!(SourceTerm::point(vec![0.55, 0.0], 10.0)
            .discretize(&g)
            .is_err());
        assert!(SourceTerm::None.discretize(&g).unwrap().is_none());
    }
}
