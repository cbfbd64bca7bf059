//! Time-stepping driver shared by the 2D and 3D solvers.

use crate::damping::DampingProfile;
use crate::error::Result;
use crate::field::{AuxMemory, FieldState};
use crate::grid::GridSpec;
use crate::media::{MediumModel, SourceTerm};
use crate::solver2d::Solver2d;
use crate::solver3d::Solver3d;

/// Either solver behind one interface.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Solver {
    Two(Solver2d),
    Three(Solver3d),
}

impl Solver {
    pub fn new(
        grid: GridSpec,
        medium: MediumModel,
        damping: DampingProfile,
        source: &SourceTerm,
        dt: f64,
    ) -> Result<Self> {
        Ok(match grid.dim() {
            2 => Solver::Two(Solver2d::new(grid, medium, damping, source, dt)?),
            _ => Solver::Three(Solver3d::new(grid, medium, damping, source, dt)?),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            Solver::Two(s) => s.grid(),
            Solver::Three(s) => s.grid(),
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            Solver::Two(s) => s.dt(),
            Solver::Three(s) => s.dt(),
        }
    }

    pub fn aux_memory(&self) -> AuxMemory {
        match self {
            Solver::Two(s) => s.aux_memory(),
            Solver::Three(s) => s.aux_memory(),
        }
    }

    pub fn initial_state(
        &self,
        u0: impl Fn(&[f64]) -> f64,
        v0: impl Fn(&[f64]) -> f64,
    ) -> FieldState {
        match self {
            Solver::Two(s) => s.initial_state(u0, v0),
            Solver::Three(s) => s.initial_state(u0, v0),
        }
    }

    pub fn step(&mut self, state: &mut FieldState) -> Result<()> {
        match self {
            Solver::Two(s) => s.step(state),
            Solver::Three(s) => s.step(state),
        }
    }
}

/// Per-step amplitude record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStat {
    pub time: f64,
    /// `max |u|` over all nodes.
    pub max_abs: f64,
    /// `max |u|` over the computational domain `[-a, a]^d`.
    pub max_abs_domain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    /// `max |u|` over the whole run.
    pub max_abs: f64,
    /// One entry per time level, including `t = 0`.
    pub history: Vec<StepStat>,
}

impl RunSummary {
    /// Largest domain amplitude over time levels with `lo <= t <= hi`.
    pub fn max_domain_between(&self, lo: f64, hi: f64) -> f64 {
        self.history
            .iter()
            .filter(|s| s.time >= lo - 1e-12 && s.time <= hi + 1e-12)
            .fold(0.0, |m, s| m.max(s.max_abs_domain))
    }

    /// Largest whole-grid amplitude over time levels with `lo <= t <= hi`.
    pub fn max_between(&self, lo: f64, hi: f64) -> f64 {
        self.history
            .iter()
            .filter(|s| s.time >= lo - 1e-12 && s.time <= hi + 1e-12)
            .fold(0.0, |m, s| m.max(s.max_abs))
    }
}

/// Step index nearest to time `t`.
pub fn step_for_time(t: f64, dt: f64) -> usize {
    (t / dt).round().max(0.0) as usize
}

fn domain_max(grid: &GridSpec, u: &[f64]) -> f64 {
    let ranges: Vec<_> = grid.axes().iter().map(|a| a.interior()).collect();
    let n1 = grid.axis(0).nodes;
    let mut m: f64 = 0.0;
    for (row, line) in u.chunks(n1).enumerate() {
        let mut r = row;
        let inside = grid.axes()[1..]
            .iter()
            .zip(&ranges[1..])
            .all(|(ax, range)| {
                let l = r % ax.nodes;
                r /= ax.nodes;
                range.contains(&l)
            });
        if inside {
            m = line[ranges[0].clone()]
                .iter()
                .fold(m, |m, v| m.max(v.abs()));
        }
    }
    m
}

/// Steps `state` to `t_end`, calling `on_snapshot(index, state)` at the
/// nearest step to each entry of `snapshot_times`.
pub fn run(
    solver: &mut Solver,
    state: &mut FieldState,
    t_end: f64,
    snapshot_times: &[f64],
    mut on_snapshot: impl FnMut(usize, &FieldState) -> Result<()>,
) -> Result<RunSummary> {
    let dt = solver.dt();
    let n_end = step_for_time(t_end, dt);
    let mut pending: Vec<(usize, usize)> = snapshot_times
        .iter()
        .enumerate()
        .map(|(k, &t)| (step_for_time(t, dt).min(n_end), k))
        .collect();
    pending.sort_unstable();
    let mut next_snap = 0;
    let mut history = Vec::with_capacity(n_end + 1);
    let mut max_abs: f64 = 0.0;
    loop {
        let stat = StepStat {
            time: state.time(dt),
            max_abs: state.max_abs(),
            max_abs_domain: domain_max(solver.grid(), &state.u_curr),
        };
        max_abs = max_abs.max(stat.max_abs);
        history.push(stat);
        while next_snap < pending.len() && pending[next_snap].0 == state.n {
            on_snapshot(pending[next_snap].1, state)?;
            next_snap += 1;
        }
        if state.n >= n_end {
            break;
        }
        solver.step(state)?;
    }
    Ok(RunSummary {
        steps: state.n,
        dt,
        max_abs,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::SpeedModel;

    #[test]
    fn zero_end_time_gives_initial_snapshot_only() {
        let g = GridSpec::uniform(2, 0.3, 0.1, 0.02).unwrap();
        let m = MediumModel::new(&g, SpeedModel::Constant(1.0)).unwrap();
        let mut s = Solver::new(
            g.clone(),
            m,
            DampingProfile::zero(&g),
            &SourceTerm::None,
            0.01,
        )
        .unwrap();
        let mut st = s.initial_state(|x| (-30.0 * x[0] * x[0]).exp(), |_| 0.0);
        let u0 = st.u_curr.clone();
        let mut snaps = Vec::new();
        let summary = run(&mut s, &mut st, 0.0, &[0.0, 0.5], |k, st| {
            snaps.push((k, st.u_curr.clone()));
            Ok(())
        })
        .unwrap();
        assert_eq!(summary.steps, 0);
        assert_eq!(snaps.len(), 2);
        assert!(snaps.iter().all(|(_, u)| *u == u0));
    }
}
