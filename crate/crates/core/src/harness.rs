//! Reference solutions, error curves, parameter sweeps and convergence
//! studies.

use std::f64::consts::PI;
use std::ops::Range;

use crate::config::{DampingSpec, SimulationConfig, TimeStep};
use crate::damping::DampingProfile;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::media::{MediumModel, SourceTerm, SpeedModel};
use crate::sim::{run, Solver};

/// Extracts the nodes of the box `|x_i| <= a_i` from a flat nodal field.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSampler {
    ranges: Vec<Range<usize>>,
    counts: Vec<usize>,
}

impl DomainSampler {
    pub fn new(grid: &GridSpec, half_widths: &[f64]) -> Result<Self> {
        let mut ranges = Vec::with_capacity(grid.dim());
        for (ax, (axis, &a)) in grid.axes().iter().zip(half_widths).enumerate() {
            let tol = 1e-9 * axis.spacing;
            let inside: Vec<usize> = (0..axis.nodes)
                .filter(|&l| axis.coord(l).abs() <= a + tol)
                .collect();
            match (inside.first(), inside.last()) {
                (Some(&lo), Some(&hi)) => ranges.push(lo..hi + 1),
                _ => {
                    return Err(Error::InvalidGrid {
                        axis: ax + 1,
                        reason: format!("no nodes within |x| <= {a}"),
                    })
                }
            }
        }
        Ok(Self {
            ranges,
            counts: grid.node_counts(),
        })
    }

    /// Samples the computational domain of `grid` itself.
    pub fn domain(grid: &GridSpec) -> Self {
        let a: Vec<f64> = grid.axes().iter().map(|ax| ax.half_width).collect();
        Self::new(grid, &a).expect("domain contains nodes")
    }

    /// Number of sampled nodes per axis.
    pub fn shape(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values at the sampled nodes, `x1` fastest.
    pub fn sample(&self, u: &[f64]) -> Vec<f64> {
        let n1 = self.counts[0];
        let n2 = self.counts[1];
        let r3 = self.ranges.get(2).cloned().unwrap_or(0..1);
        let mut out = Vec::with_capacity(self.len());
        for k in r3 {
            for j in self.ranges[1].clone() {
                let base = n1 * (j + n2 * k);
                out.extend_from_slice(&u[base + self.ranges[0].start..base + self.ranges[0].end]);
            }
        }
        out
    }
}

/// Domain samples of one run at a list of times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRun {
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    /// Node volume used by the discrete L2 norm.
    pub cell_volume: f64,
}

/// Error of a run against a reference, per sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    /// `sqrt(sum (u - u_ref)^2 dV)` over domain nodes.
    pub l2_error: Vec<f64>,
    /// `l2_error / normalization`.
    pub rel_error: Vec<f64>,
    /// Largest L2 norm of the reference over the sample times.
    pub normalization: f64,
}

impl ErrorSeries {
    pub fn peak(&self) -> f64 {
        self.l2_error.iter().fold(0.0, |m: f64, &e| m.max(e))
    }

    /// Absolute error at the sample nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .expect("non-empty series");
        self.l2_error[k]
    }

    /// Largest relative error over samples with `t <= t_max`.
    pub fn max_rel_until(&self, t_max: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.rel_error)
            .filter(|(t, _)| **t <= t_max + 1e-12)
            .fold(0.0, |m: f64, (_, &e)| m.max(e))
    }

    /// CSV rows `(t, e_L2, e_rel)`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.times.len()).map(|k| [self.times[k], self.l2_error[k], self.rel_error[k]])
    }
}

pub const ERROR_CSV_HEADER: [&str; 3] = ["t", "e_L2", "e_rel"];

fn l2(values: impl Iterator<Item = f64>, dv: f64) -> f64 {
    (values.map(|v| v * v).sum::<f64>() * dv).sqrt()
}

/// Pointwise comparison of two sampled runs.
pub fn l2_error_series(run: &SampledRun, reference: &SampledRun) -> Result<ErrorSeries> {
    if run.times.len() != reference.times.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} run samples against {} reference samples",
            run.times.len(),
            reference.times.len()
        )));
    }
    let mut l2_error = Vec::with_capacity(run.times.len());
    let mut normalization: f64 = 0.0;
    for k in 0..run.times.len() {
        let (t, tr) = (run.times[k], reference.times[k]);
        if (t - tr).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::ShapeMismatch(format!(
                "sample {k} is at t = {t} in the run and t = {tr} in the reference"
            )));
        }
        let (u, r) = (&run.samples[k], &reference.samples[k]);
        if u.len() != r.len() {
            return Err(Error::ShapeMismatch(format!(
                "sample {k} has {} run nodes and {} reference nodes",
                u.len(),
                r.len()
            )));
        }
        l2_error.push(l2(u.iter().zip(r).map(|(a, b)| a - b), run.cell_volume));
        normalization = normalization.max(l2(r.iter().copied(), run.cell_volume));
    }
    let rel_error = l2_error
        .iter()
        .map(|e| {
            if normalization > 0.0 {
                e / normalization
            } else {
                *e
            }
        })
        .collect();
    Ok(ErrorSeries {
        times: run.times.clone(),
        l2_error,
        rel_error,
        normalization,
    })
}

/// Evenly spaced sample times `0, t_end/n, .., t_end`.
pub fn sample_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

fn sampled(
    mut solver: Solver,
    config: &SimulationConfig,
    sampler: &DomainSampler,
    times: &[f64],
) -> Result<SampledRun> {
    let init = config.initial;
    let mut state = solver.initial_state(|x| init.eval(x), |_| 0.0);
    let dt = solver.dt();
    let t_end = times.iter().fold(0.0, |m: f64, &t| m.max(t));
    let mut samples = vec![Vec::new(); times.len()];
    let mut at = vec![0.0; times.len()];
    run(&mut solver, &mut state, t_end, times, |k, st| {
        samples[k] = sampler.sample(&st.u_curr);
        at[k] = st.time(dt);
        Ok(())
    })?;
    Ok(SampledRun {
        times: at,
        samples,
        cell_volume: config.grid.cell_volume(),
    })
}

/// Runs `config` and samples the computational domain at `times`.
pub fn sampled_run(config: &SimulationConfig, times: &[f64]) -> Result<SampledRun> {
    let (solver, _) = config.build()?;
    let sampler = DomainSampler::domain(&config.grid);
    sampled(solver, config, &sampler, times)
}

/// Smallest reference half width whose boundary cannot influence the
/// domain before `t_end`.
pub fn required_half_width(config: &SimulationConfig, t_end: f64) -> f64 {
    let a = config
        .grid
        .axes()
        .iter()
        .fold(0.0, |m: f64, ax| m.max(ax.half_width));
    a + config.medium.max_speed() * t_end
}

/// Undamped run on the enlarged box `[-half_width, half_width]^d` with the
/// spacing, time step, medium, source and initial data of `config`, sampled
/// on the nodes of the computational domain.
pub fn reference_run(
    config: &SimulationConfig,
    half_width: f64,
    times: &[f64],
) -> Result<SampledRun> {
    let t_end = times.iter().fold(0.0, |m: f64, &t| m.max(t));
    let c_max = config.medium.max_speed();
    for ax in config.grid.axes() {
        if (half_width - ax.half_width) / c_max < t_end * (1.0 - 1e-12) {
            return Err(Error::Causality {
                given: half_width,
                required: ax.half_width + c_max * t_end,
                t_end,
            });
        }
    }
    let dim = config.dim();
    let dt = config.resolve_dt()?;
    let a: Vec<f64> = config.grid.axes().iter().map(|ax| ax.half_width).collect();
    let l: Vec<f64> = config.grid.axes().iter().map(|ax| ax.layer_width).collect();
    let dx = config.grid.spacing();
    let inner: Vec<f64> = l.iter().map(|li| half_width - li).collect();
    let grid = GridSpec::new(dim, &inner, &l, &dx)?;
    for (ax, (axis, own)) in grid.axes().iter().zip(config.grid.axes()).enumerate() {
        let shift = (axis.origin() - own.origin()) / own.spacing;
        if (shift - shift.round()).abs() > 1e-9 {
            return Err(Error::InvalidGrid {
                axis: ax + 1,
                reason: format!(
                    "reference half width {half_width} does not align with the grid nodes"
                ),
            });
        }
    }
    let medium = MediumModel::with_domain(&grid, config.medium, &a)?;
    let damping = DampingProfile::zero(&grid);
    let sampler = DomainSampler::new(&grid, &a)?;
    if sampler.shape() != DomainSampler::domain(&config.grid).shape() {
        return Err(Error::ShapeMismatch(
            "reference and run sample different node sets".into(),
        ));
    }
    let solver = Solver::new(grid, medium, damping, &config.source, dt)?;
    let mut out = sampled(solver, config, &sampler, times)?;
    out.cell_volume = config.grid.cell_volume();
    Ok(out)
}

/// Error curves for each peak damping value in `zeta_bars`, all measured
/// against one reference.
/// `config` with its time step fixed to the smallest automatic step over
/// `zeta_bars`, so every sweep member and the reference share time levels.
pub fn sweep_config(config: &SimulationConfig, zeta_bars: &[f64]) -> Result<SimulationConfig> {
    let mut dt = config.resolve_dt()?;
    for &z in zeta_bars {
        let mut c = config.clone();
        c.damping = DampingSpec::ZetaBar(vec![z; config.dim()]);
        dt = dt.min(c.resolve_dt()?);
    }
    let mut out = config.clone();
    out.dt = TimeStep::Fixed(dt);
    Ok(out)
}

/// Error series for each peak damping value. `config` should come from
/// [`sweep_config`] so that all runs land on the reference's time levels.
pub fn reflection_sweep(
    config: &SimulationConfig,
    zeta_bars: &[f64],
    reference: &SampledRun,
) -> Result<Vec<(f64, ErrorSeries)>> {
    zeta_bars
        .iter()
        .map(|&z| {
            let mut c = config.clone();
            c.damping = DampingSpec::ZetaBar(vec![z; config.dim()]);
            let r = sampled_run(&c, &reference.times)?;
            Ok((z, l2_error_series(&r, reference)?))
        })
        .collect()
}

/// Standing mode `A cos(omega t) prod cos(pi x_i)` on `[-1/2, 1/2]^d` with
/// homogeneous Dirichlet walls, `omega = c pi sqrt(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSpec {
    pub dim: usize,
    /// Spacings, each half the previous one.
    pub levels: Vec<f64>,
    pub t_end: f64,
    pub c: f64,
    pub amplitude: f64,
}

impl ConvergenceSpec {
    pub fn standing_mode(dim: usize, levels: Vec<f64>) -> Self {
        Self {
            dim,
            levels,
            t_end: 0.5,
            c: 1.0,
            amplitude: 1.0,
        }
    }

    pub fn exact(&self, x: &[f64], t: f64) -> f64 {
        let omega = self.c * PI * (self.dim as f64).sqrt();
        self.amplitude * (omega * t).cos() * x.iter().map(|xi| (PI * xi).cos()).product::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceLevel {
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    /// Discrete L2 error over all nodes at `t_end`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// `log2(e_h / e_{h/2})` per refinement; empty when every error is zero.
    pub orders: Vec<f64>,
    /// All errors vanished, so no order is defined.
    pub exact: bool,
}

/// Errors against the analytic standing mode with `dt` halved alongside `dx`.
pub fn convergence_study(spec: &ConvergenceSpec) -> Result<ConvergenceReport> {
    if spec.levels.len() < 2 {
        return Err(crate::error::invalid("levels", "need at least two levels"));
    }
    for w in spec.levels.windows(2) {
        if (w[1] * 2.0 - w[0]).abs() > 1e-12 * w[0] {
            return Err(crate::error::invalid(
                "levels",
                format!("levels must halve the spacing, got {} then {}", w[0], w[1]),
            ));
        }
    }
    let d = spec.dim as f64;
    let h0 = spec.levels[0];
    let steps0 = (spec.t_end / (0.5 * h0 / (spec.c * d.sqrt())))
        .ceil()
        .max(1.0) as usize;
    let mut levels = Vec::with_capacity(spec.levels.len());
    for (k, &h) in spec.levels.iter().enumerate() {
        let grid = GridSpec::uniform(spec.dim, 0.25, 0.25, h)?;
        let steps = steps0 << k;
        let dt = spec.t_end / steps as f64;
        let medium = MediumModel::new(&grid, SpeedModel::Constant(spec.c))?;
        let mut solver = Solver::new(
            grid.clone(),
            medium,
            DampingProfile::zero(&grid),
            &SourceTerm::None,
            dt,
        )?;
        let mut state = solver.initial_state(|x| spec.exact(x, 0.0), |_| 0.0);
        for _ in 0..steps {
            solver.step(&mut state)?;
        }
        let t = state.time(dt);
        let err = l2(
            state
                .u_curr
                .iter()
                .enumerate()
                .map(|(i, v)| v - spec.exact(&grid.node_coords(&grid.node_multi_index(i)), t)),
            grid.cell_volume(),
        );
        levels.push(ConvergenceLevel {
            dx: h,
            dt,
            steps,
            error: err,
        });
    }
    let exact = levels.iter().all(|l| l.error == 0.0);
    let orders = if exact {
        Vec::new()
    } else {
        levels
            .windows(2)
            .map(|w| (w[0].error / w[1].error).log2())
            .collect()
    };
    Ok(ConvergenceReport {
        levels,
        orders,
        exact,
    })
}

/// Largest deviation, relative to the run maximum, between a run with
/// constant damping `zeta0` on both axes and `exp(-zeta0 t)` times an
/// undamped run started with velocity `v0 + zeta0 u0`. The standing mode
/// `cos(pi x1) cos(pi x2)` on `[-1/2, 1/2]^2` is the initial displacement.
pub fn damped_mode_deviation(dx: f64, dt: f64, zeta0: f64, t_end: f64) -> Result<f64> {
    let grid = GridSpec::uniform(2, 0.25, 0.25, dx)?;
    let medium = MediumModel::new(&grid, SpeedModel::Constant(1.0))?;
    let u0 = |x: &[f64]| (PI * x[0]).cos() * (PI * x[1]).cos();
    let damped_profile = DampingProfile::constant(&grid, &[zeta0, zeta0])?;
    let mut damped = Solver::new(
        grid.clone(),
        medium.clone(),
        damped_profile,
        &SourceTerm::None,
        dt,
    )?;
    let mut plain = Solver::new(
        grid.clone(),
        medium,
        DampingProfile::zero(&grid),
        &SourceTerm::None,
        dt,
    )?;
    let mut sd = damped.initial_state(u0, |_| 0.0);
    let mut sp = plain.initial_state(u0, |x| zeta0 * u0(x));
    let steps = (t_end / dt).round() as usize;
    let (mut dev, mut peak): (f64, f64) = (0.0, 0.0);
    for n in 0..=steps {
        let decay = (-zeta0 * n as f64 * dt).exp();
        for (a, b) in sd.u_curr.iter().zip(&sp.u_curr) {
            dev = dev.max((a - decay * b).abs());
            peak = peak.max(a.abs());
        }
        if n < steps {
            damped.step(&mut sd)?;
            plain.step(&mut sp)?;
        }
    }
    Ok(dev / peak)
}
