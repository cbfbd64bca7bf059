//! Leapfrog scheme for the two-dimensional layer-modified wave equation
//!
//! ```text
//! u_tt + (z1 + z2) u_t + z1 z2 u = div(c^2 grad u) + div(phi) + f
//! phi_t = -diag(z1, z2) phi + c^2 diag(z2 - z1, z1 - z2) grad u
//! ```
//!
//! `u` lives on integer nodes, `phi` on cell centres `(i+1/2, j+1/2)`.
//! The damping term `(z1 + z2) u_t` is centred in time, so each node update
//! is a scalar division; `phi` uses the trapezoidal rule for its decay term
//! and the time average of `grad u` between levels `n` and `n+1`.

use std::ops::Range;

use rayon::prelude::*;

use crate::damping::DampingProfile;
use crate::error::{invalid, Error, Result};
use crate::field::{AuxMemory, FieldState};
use crate::grid::{stable_timestep, GridSpec};
use crate::media::{DiscreteSource, MediumModel, SourceTerm};
use crate::shell::ShellLayout;
use crate::stencil::{find_non_finite, interior_runs, AxisNb};

/// Per-node damping coefficients of the 2D system at one location.
///
/// `gamma1 = diag(-z1, -z2)`, `gamma2 = diag(z2 - z1, z1 - z2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma2D {
    pub gamma1: [f64; 2],
    pub gamma2: [f64; 2],
}

impl Gamma2D {
    pub fn new(z1: f64, z2: f64) -> Self {
        Self {
            gamma1: [-z1, -z2],
            gamma2: [z2 - z1, z1 - z2],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solver2d {
    grid: GridSpec,
    medium: MediumModel,
    damping: DampingProfile,
    source: Option<DiscreteSource>,
    dt: f64,
    nb: [AxisNb; 2],
    near: [Vec<bool>; 2],
    /// Runs of axis-0 nodes handled by [`Solver2d::interior_run`].
    runs: Vec<Range<usize>>,
    phi_layout: ShellLayout,
    /// `c^2` at the stored cell centres.
    c2_cell: Vec<f64>,
    next: Vec<f64>,
}

impl Solver2d {
    pub fn new(
        grid: GridSpec,
        medium: MediumModel,
        damping: DampingProfile,
        source: &SourceTerm,
        dt: f64,
    ) -> Result<Self> {
        if grid.dim() != 2 || damping.dim() != 2 {
            return Err(invalid("dim", "the 2D solver needs a 2D grid and profile"));
        }
        let limit = stable_timestep(&grid, medium.c_max(), damping.max_pair_product(), 1.0)?;
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(invalid(
                "dt",
                format!("must lie in (0, {limit}] for stability, got {dt}"),
            ));
        }
        let source = source.discretize(&grid)?;
        let nb = [AxisNb::new(grid.axis(0)), AxisNb::new(grid.axis(1))];
        let near = [
            nb[0].near_layer(damping.at_nodes(0), damping.at_halves(0)),
            nb[1].near_layer(damping.at_nodes(1), damping.at_halves(1)),
        ];
        let runs = interior_runs(&near[0], &nb[0].updated);
        let masks: Vec<Vec<bool>> = (0..2)
            .map(|ax| damping.at_halves(ax).iter().map(|&z| z > 0.0).collect())
            .collect();
        let phi_layout = ShellLayout::new(&masks, 1);
        let mut c2_cell = Vec::with_capacity(phi_layout.len());
        for cj in 0..phi_layout.rows() {
            for ci in phi_layout.row_indices(cj) {
                let x = [grid.axis(0).half_coord(ci), grid.axis(1).half_coord(cj)];
                c2_cell.push(medium.c2_at(&x));
            }
        }
        let next = vec![0.0; grid.num_nodes()];
        Ok(Self {
            grid,
            medium,
            damping,
            source,
            dt,
            nb,
            near,
            runs,
            phi_layout,
            c2_cell,
            next,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn medium(&self) -> &MediumModel {
        &self.medium
    }

    pub fn damping(&self) -> &DampingProfile {
        &self.damping
    }

    pub fn phi_layout(&self) -> &ShellLayout {
        &self.phi_layout
    }

    pub fn gamma_at_cell(&self, ci: usize, cj: usize) -> Gamma2D {
        Gamma2D::new(self.damping.at_halves(0)[ci], self.damping.at_halves(1)[cj])
    }

    pub fn aux_memory(&self) -> AuxMemory {
        AuxMemory {
            dim: 2,
            phi_scalars: 2 * self.phi_layout.len(),
            psi_scalars: 0,
            layer_cells: self.phi_layout.len(),
            halo_nodes: 0,
            total_cells: self.grid.num_cells(),
        }
    }

    /// State at `t = 0` from displacement `u0` and velocity `v0`.
    ///
    /// `u^{-1}` comes from a second-order Taylor expansion using the full
    /// equation at `t = 0` (with `phi = 0`), so damped starts stay
    /// second-order accurate.
    pub fn initial_state(
        &self,
        u0: impl Fn(&[f64]) -> f64,
        v0: impl Fn(&[f64]) -> f64,
    ) -> FieldState {
        let n1 = self.grid.axis(0).nodes;
        let total = self.grid.num_nodes();
        let mut u = vec![0.0; total];
        let mut v = vec![0.0; total];
        for j in self.nb[1].updated.clone() {
            for i in self.nb[0].updated.clone() {
                let x = [self.grid.axis(0).coord(i), self.grid.axis(1).coord(j)];
                u[i + n1 * j] = u0(&x);
                v[i + n1 * j] = v0(&x);
            }
        }
        let dt = self.dt;
        let f0 = self.source.map(|s| (s.node, s.forcing(0.0)));
        let mut prev = vec![0.0; total];
        let (z1, z2) = (self.damping.at_nodes(0), self.damping.at_nodes(1));
        for j in self.nb[1].updated.clone() {
            for i in self.nb[0].updated.clone() {
                let k = i + n1 * j;
                let mut acc = self.laplacian(&u, i, j);
                if let Some((node, f)) = f0 {
                    if node == k {
                        acc += f;
                    }
                }
                acc -= (z1[i] + z2[j]) * v[k] + z1[i] * z2[j] * u[k];
                prev[k] = u[k] - dt * v[k] + 0.5 * dt * dt * acc;
            }
        }
        FieldState {
            u_curr: u,
            u_prev: prev,
            phi: vec![vec![0.0; self.phi_layout.len()]; 2],
            psi: Vec::new(),
            n: 0,
        }
    }

    /// `div(c^2 grad u)` at node `(i, j)` in flux-difference form.
    #[inline(always)]
    fn laplacian(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let n1 = self.grid.axis(0).nodes;
        let c1 = self.nb[0].cells;
        let (h1, h2) = (self.grid.axis(0).spacing, self.grid.axis(1).spacing);
        let (ip, im) = (self.nb[0].next[i], self.nb[0].prev[i]);
        let (jp, jm) = (self.nb[1].next[j], self.nb[1].prev[j]);
        let fx = self.medium.faces(0);
        let fy = self.medium.faces(1);
        let k = i + n1 * j;
        let uc = u[k];
        let dx = fx[i + c1 * j] * (u[ip + n1 * j] - uc) - fx[im + c1 * j] * (uc - u[im + n1 * j]);
        let dy = fy[i + n1 * j] * (u[i + n1 * jp] - uc) - fy[i + n1 * jm] * (uc - u[i + n1 * jm]);
        dx / (h1 * h1) + dy / (h2 * h2)
    }

    /// Cell average of `phi_1` at `(ci + 1/2, j)` over the two adjacent cells.
    #[inline(always)]
    fn phi1_face(&self, phi1: &[f64], ci: usize, j: usize) -> f64 {
        let l = &self.phi_layout;
        0.5 * (l.value(phi1, self.nb[1].prev[j], ci) + l.value(phi1, j, ci))
    }

    /// Cell average of `phi_2` at `(i, cj + 1/2)`.
    #[inline(always)]
    fn phi2_face(&self, phi2: &[f64], i: usize, cj: usize) -> f64 {
        let l = &self.phi_layout;
        0.5 * (l.value(phi2, cj, self.nb[0].prev[i]) + l.value(phi2, cj, i))
    }

    /// Plain leapfrog update for a node with no damping and no auxiliary
    /// coupling.
    #[inline(always)]
    fn interior_update(&self, u: &[f64], up: &[f64], i: usize, j: usize, f: f64) -> f64 {
        let k = i + self.grid.axis(0).nodes * j;
        let dt = self.dt;
        2.0 * u[k] - up[k] + dt * dt * (self.laplacian(u, i, j) + f)
    }

    #[inline(always)]
    fn layer_update(&self, state: &FieldState, i: usize, j: usize, f: f64) -> f64 {
        let (u, up) = (&state.u_curr, &state.u_prev);
        let k = i + self.grid.axis(0).nodes * j;
        let dt = self.dt;
        let z1 = self.damping.at_nodes(0)[i];
        let z2 = self.damping.at_nodes(1)[j];
        let sigma = 0.5 * dt * (z1 + z2);
        let (h1, h2) = (self.grid.axis(0).spacing, self.grid.axis(1).spacing);
        let (phi1, phi2) = (&state.phi[0], &state.phi[1]);
        let im = self.nb[0].prev[i];
        let jm = self.nb[1].prev[j];
        let div_phi = (self.phi1_face(phi1, i, j) - self.phi1_face(phi1, im, j)) / h1
            + (self.phi2_face(phi2, i, j) - self.phi2_face(phi2, i, jm)) / h2;
        let rhs = self.laplacian(u, i, j) - z1 * z2 * u[k] + div_phi + f;
        (2.0 * u[k] - (1.0 - sigma) * up[k] + dt * dt * rhs) / (1.0 + sigma)
    }

    /// [`Solver2d::interior_update`] without forcing over a run of
    /// consecutive nodes of row `j`, written with contiguous slices.
    #[inline(always)]
    fn interior_run(&self, u: &[f64], up: &[f64], out: &mut [f64], j: usize, run: Range<usize>) {
        let n1 = self.grid.axis(0).nodes;
        let c1 = self.nb[0].cells;
        let (jp, jm) = (self.nb[1].next[j], self.nb[1].prev[j]);
        let (h1, h2) = (self.grid.axis(0).spacing, self.grid.axis(1).spacing);
        let dt = self.dt;
        let uc = &u[n1 * j..n1 * (j + 1)];
        let un = &u[n1 * jp..n1 * (jp + 1)];
        let us = &u[n1 * jm..n1 * (jm + 1)];
        let upr = &up[n1 * j..n1 * (j + 1)];
        let fx = &self.medium.faces(0)[c1 * j..c1 * (j + 1)];
        let fy = self.medium.faces(1);
        let fyn = &fy[n1 * j..n1 * (j + 1)];
        let fys = &fy[n1 * jm..n1 * (jm + 1)];
        for i in run {
            let c = uc[i];
            let dx = fx[i] * (uc[i + 1] - c) - fx[i - 1] * (c - uc[i - 1]);
            let dy = fyn[i] * (un[i] - c) - fys[i] * (c - us[i]);
            out[i] = 2.0 * c - upr[i] + dt * dt * ((dx / (h1 * h1) + dy / (h2 * h2)) + 0.0);
        }
    }

    #[inline(always)]
    fn update_node(&self, state: &FieldState, i: usize, j: usize, f: f64) -> f64 {
        if self.near[1][j] || self.near[0][i] {
            self.layer_update(state, i, j, f)
        } else {
            self.interior_update(&state.u_curr, &state.u_prev, i, j, f)
        }
    }

    /// Computes `u^{n+1}` into `out`.
    pub fn step_u(&self, state: &FieldState, out: &mut [f64]) {
        let n1 = self.grid.axis(0).nodes;
        let t = state.time(self.dt);
        let src = self
            .source
            .map(|s| (s.node % n1, s.node / n1, s.forcing(t)));
        let updated_i = self.nb[0].updated.clone();
        let updated_j = self.nb[1].updated.clone();
        out.par_chunks_mut(n1).enumerate().for_each(|(j, row)| {
            if !updated_j.contains(&j) {
                row.fill(0.0);
                return;
            }
            row[..updated_i.start].fill(0.0);
            row[updated_i.end..].fill(0.0);
            if self.near[1][j] {
                for i in updated_i.clone() {
                    row[i] = self.layer_update(state, i, j, 0.0);
                }
            } else {
                let mut i = updated_i.start;
                for run in &self.runs {
                    for l in i..run.start {
                        row[l] = self.update_node(state, l, j, 0.0);
                    }
                    self.interior_run(&state.u_curr, &state.u_prev, row, j, run.clone());
                    i = run.end;
                }
                for l in i..updated_i.end {
                    row[l] = self.update_node(state, l, j, 0.0);
                }
            }
            if let Some((si, sj, f)) = src {
                if sj == j && updated_i.contains(&si) {
                    row[si] = self.update_node(state, si, j, f);
                }
            }
        });
    }

    /// Advances `phi` from level `n` to `n+1` given `u^{n+1}` in `u_next`.
    pub fn step_phi(&self, state: &mut FieldState, u_next: &[f64]) {
        let layout = &self.phi_layout;
        let n1 = self.grid.axis(0).nodes;
        let (h1, h2) = (self.grid.axis(0).spacing, self.grid.axis(1).spacing);
        let inv_dt = 1.0 / self.dt;
        let u = &state.u_curr;
        let (z1h, z2h) = (self.damping.at_halves(0), self.damping.at_halves(1));
        let (p1, rest) = state.phi.split_at_mut(1);
        let rows1 = layout.split_rows_mut(&mut p1[0]);
        let rows2 = layout.split_rows_mut(&mut rest[0]);
        rows1
            .into_par_iter()
            .zip(rows2)
            .enumerate()
            .for_each(|(cj, (r1, r2))| {
                let off = layout.row_range(cj).start;
                let j0 = cj;
                let j1 = self.nb[1].next[cj];
                for (s, ci) in layout.row_indices(cj).enumerate() {
                    let i0 = ci;
                    let i1 = self.nb[0].next[ci];
                    let (a, b, c, d) = (i0 + n1 * j0, i1 + n1 * j0, i0 + n1 * j1, i1 + n1 * j1);
                    let d1 = ((u_next[b] + u_next[d] - u_next[a] - u_next[c])
                        + (u[b] + u[d] - u[a] - u[c]))
                        * (0.25 / h1);
                    let d2 = ((u_next[c] + u_next[d] - u_next[a] - u_next[b])
                        + (u[c] + u[d] - u[a] - u[b]))
                        * (0.25 / h2);
                    let (z1, z2) = (z1h[ci], z2h[cj]);
                    let c2 = self.c2_cell[off + s];
                    r1[s] =
                        ((inv_dt - 0.5 * z1) * r1[s] + c2 * (z2 - z1) * d1) / (inv_dt + 0.5 * z1);
                    r2[s] =
                        ((inv_dt - 0.5 * z2) * r2[s] + c2 * (z1 - z2) * d2) / (inv_dt + 0.5 * z2);
                }
            });
    }

    /// One full time step: `u` first, then `phi`.
    pub fn step(&mut self, state: &mut FieldState) -> Result<()> {
        let mut next = std::mem::take(&mut self.next);
        self.step_u(state, &mut next);
        if let Some(k) = find_non_finite(&next) {
            self.next = next;
            return Err(Error::Instability {
                step: state.n + 1,
                node: self.grid.node_multi_index(k),
            });
        }
        self.step_phi(state, &next);
        std::mem::swap(&mut state.u_prev, &mut state.u_curr);
        std::mem::swap(&mut state.u_curr, &mut next);
        self.next = next;
        state.n += 1;
        Ok(())
    }
}
