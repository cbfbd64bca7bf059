//! Leapfrog scheme for the three-dimensional layer-modified wave equation
//!
//! ```text
//! u_tt + (z1+z2+z3) u_t + (z1 z2 + z2 z3 + z3 z1) u
//!     = div(c^2 grad u) + div(phi) - z1 z2 z3 psi + f
//! phi_t = G1 phi + c^2 G2 grad u + c^2 G3 grad psi
//! psi_t = u
//! ```
//!
//! `phi` lives on cell centres at integer time levels, `psi` on integer
//! nodes at half time levels. A step advances `psi` to `n+1/2`, then `u` to
//! `n+1`, then `phi` to `n+1`.
//!
//! `phi` is stored only on cells with positive damping along some axis.
//! `psi` enters through `z1 z2 z3` and through the `G3 = diag(z2 z3, z3 z1,
//! z1 z2)` coupling, so it is stored only on nodes where at least two axes
//! touch the layer (edges and corners, with a one-node halo).

use std::ops::Range;

use rayon::prelude::*;

use crate::damping::DampingProfile;
use crate::error::{invalid, Error, Result};
use crate::field::{AuxMemory, FieldState};
use crate::grid::{stable_timestep, GridSpec};
use crate::media::{DiscreteSource, MediumModel, SourceTerm};
use crate::shell::ShellLayout;
use crate::stencil::{find_non_finite, interior_runs, AxisNb};

/// Damping matrices at one cell centre. All three are diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma3D {
    pub gamma1: [f64; 3],
    pub gamma2: [f64; 3],
    pub gamma3: [f64; 3],
}

impl Gamma3D {
    pub fn new(z1: f64, z2: f64, z3: f64) -> Self {
        Self {
            gamma1: [-z1, -z2, -z3],
            gamma2: [z2 + z3 - z1, z3 + z1 - z2, z1 + z2 - z3],
            gamma3: [z2 * z3, z3 * z1, z1 * z2],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solver3d {
    grid: GridSpec,
    medium: MediumModel,
    damping: DampingProfile,
    source: Option<DiscreteSource>,
    dt: f64,
    nb: [AxisNb; 3],
    near: [Vec<bool>; 3],
    /// Runs of axis-0 nodes handled by [`Solver3d::interior_run`].
    runs: Vec<Range<usize>>,
    phi_layout: ShellLayout,
    psi_layout: ShellLayout,
    c2_cell: Vec<f64>,
    next: Vec<f64>,
}

impl Solver3d {
    pub fn new(
        grid: GridSpec,
        medium: MediumModel,
        damping: DampingProfile,
        source: &SourceTerm,
        dt: f64,
    ) -> Result<Self> {
        if grid.dim() != 3 || damping.dim() != 3 {
            return Err(invalid("dim", "the 3D solver needs a 3D grid and profile"));
        }
        let limit = stable_timestep(&grid, medium.c_max(), damping.max_pair_product(), 1.0)?;
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(invalid(
                "dt",
                format!("must lie in (0, {limit}] for stability, got {dt}"),
            ));
        }
        let source = source.discretize(&grid)?;
        let nb = [0, 1, 2].map(|ax| AxisNb::new(grid.axis(ax)));
        let near =
            [0, 1, 2].map(|ax| nb[ax].near_layer(damping.at_nodes(ax), damping.at_halves(ax)));
        let cell_masks: Vec<Vec<bool>> = (0..3)
            .map(|ax| damping.at_halves(ax).iter().map(|&z| z > 0.0).collect())
            .collect();
        let phi_layout = ShellLayout::new(&cell_masks, 1);
        let psi_layout = ShellLayout::new(&near, 2);
        let runs = interior_runs(&near[0], &nb[0].updated);
        let mut c2_cell = Vec::with_capacity(phi_layout.len());
        let c2 = grid.axis(1).cells();
        for row in 0..phi_layout.rows() {
            let (cj, ck) = (row % c2, row / c2);
            for ci in phi_layout.row_indices(row) {
                let x = [
                    grid.axis(0).half_coord(ci),
                    grid.axis(1).half_coord(cj),
                    grid.axis(2).half_coord(ck),
                ];
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
            psi_layout,
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

    pub fn psi_layout(&self) -> &ShellLayout {
        &self.psi_layout
    }

    pub fn gamma_at_cell(&self, ci: usize, cj: usize, ck: usize) -> Gamma3D {
        Gamma3D::new(
            self.damping.at_halves(0)[ci],
            self.damping.at_halves(1)[cj],
            self.damping.at_halves(2)[ck],
        )
    }

    pub fn aux_memory(&self) -> AuxMemory {
        let n2 = self.grid.axis(1).nodes;
        let mut halo = 0;
        for row in 0..self.psi_layout.rows() {
            let (j, k) = (row % n2, row / n2);
            let zj = self.damping.at_nodes(1)[j];
            let zk = self.damping.at_nodes(2)[k];
            halo += self
                .psi_layout
                .row_indices(row)
                .filter(|&i| self.damping.at_nodes(0)[i] == 0.0 && zj == 0.0 && zk == 0.0)
                .count();
        }
        AuxMemory {
            dim: 3,
            phi_scalars: 3 * self.phi_layout.len(),
            psi_scalars: self.psi_layout.len(),
            layer_cells: self.phi_layout.len(),
            halo_nodes: halo,
            total_cells: self.grid.num_cells(),
        }
    }

    #[inline(always)]
    fn node(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.grid.axis(0).nodes * (j + self.grid.axis(1).nodes * k)
    }

    #[inline(always)]
    fn cell_row(&self, cj: usize, ck: usize) -> usize {
        cj + self.nb[1].cells * ck
    }

    /// State at `t = 0`; `psi^{-1/2} = -dt/2 u0` is the midpoint value of
    /// `psi(t) = int_0^t u`.
    pub fn initial_state(
        &self,
        u0: impl Fn(&[f64]) -> f64,
        v0: impl Fn(&[f64]) -> f64,
    ) -> FieldState {
        let total = self.grid.num_nodes();
        let mut u = vec![0.0; total];
        let mut v = vec![0.0; total];
        let ax = |a: usize| self.grid.axis(a);
        for k in self.nb[2].updated.clone() {
            for j in self.nb[1].updated.clone() {
                for i in self.nb[0].updated.clone() {
                    let x = [ax(0).coord(i), ax(1).coord(j), ax(2).coord(k)];
                    let n = self.node(i, j, k);
                    u[n] = u0(&x);
                    v[n] = v0(&x);
                }
            }
        }
        let dt = self.dt;
        let f0 = self.source.map(|s| (s.node, s.forcing(0.0)));
        let (z1, z2, z3) = (
            self.damping.at_nodes(0),
            self.damping.at_nodes(1),
            self.damping.at_nodes(2),
        );
        let mut prev = vec![0.0; total];
        for k in self.nb[2].updated.clone() {
            for j in self.nb[1].updated.clone() {
                for i in self.nb[0].updated.clone() {
                    let n = self.node(i, j, k);
                    let mut acc = self.laplacian(&u, i, j, k);
                    if let Some((node, f)) = f0 {
                        if node == n {
                            acc += f;
                        }
                    }
                    let sigma = z1[i] + z2[j] + z3[k];
                    let p2 = z1[i] * z2[j] + z2[j] * z3[k] + z3[k] * z1[i];
                    acc -= sigma * v[n] + p2 * u[n];
                    prev[n] = u[n] - dt * v[n] + 0.5 * dt * dt * acc;
                }
            }
        }
        let n2 = self.grid.axis(1).nodes;
        let mut psi = vec![0.0; self.psi_layout.len()];
        for row in 0..self.psi_layout.rows() {
            let (j, k) = (row % n2, row / n2);
            let off = self.psi_layout.row_range(row).start;
            for (s, i) in self.psi_layout.row_indices(row).enumerate() {
                psi[off + s] = -0.5 * dt * u[self.node(i, j, k)];
            }
        }
        FieldState {
            u_curr: u,
            u_prev: prev,
            phi: vec![vec![0.0; self.phi_layout.len()]; 3],
            psi,
            n: 0,
        }
    }

    /// `div(c^2 grad u)` at node `(i, j, k)`.
    #[inline(always)]
    fn laplacian(&self, u: &[f64], i: usize, j: usize, k: usize) -> f64 {
        let (n1, n2) = (self.grid.axis(0).nodes, self.grid.axis(1).nodes);
        let (c1, c2) = (self.nb[0].cells, self.nb[1].cells);
        let h = [0, 1, 2].map(|a| self.grid.axis(a).spacing);
        let (ip, im) = (self.nb[0].next[i], self.nb[0].prev[i]);
        let (jp, jm) = (self.nb[1].next[j], self.nb[1].prev[j]);
        let (kp, km) = (self.nb[2].next[k], self.nb[2].prev[k]);
        let f0 = self.medium.faces(0);
        let f1 = self.medium.faces(1);
        let f2 = self.medium.faces(2);
        let at = |i: usize, j: usize, k: usize| u[i + n1 * (j + n2 * k)];
        let uc = at(i, j, k);
        let dx = f0[i + c1 * (j + n2 * k)] * (at(ip, j, k) - uc)
            - f0[im + c1 * (j + n2 * k)] * (uc - at(im, j, k));
        let dy = f1[i + n1 * (j + c2 * k)] * (at(i, jp, k) - uc)
            - f1[i + n1 * (jm + c2 * k)] * (uc - at(i, jm, k));
        let dz = f2[i + n1 * (j + n2 * k)] * (at(i, j, kp) - uc)
            - f2[i + n1 * (j + n2 * km)] * (uc - at(i, j, km));
        dx / (h[0] * h[0]) + dy / (h[1] * h[1]) + dz / (h[2] * h[2])
    }

    #[inline(always)]
    fn phi_at(&self, phi: &[f64], ci: usize, cj: usize, ck: usize) -> f64 {
        self.phi_layout.value(phi, self.cell_row(cj, ck), ci)
    }

    /// Divergence of the cell-averaged `phi` at node `(i, j, k)`.
    #[inline(always)]
    fn div_phi(&self, phi: &[Vec<f64>], i: usize, j: usize, k: usize) -> f64 {
        let (im, jm, km) = (self.nb[0].prev[i], self.nb[1].prev[j], self.nb[2].prev[k]);
        let h = [0, 1, 2].map(|a| self.grid.axis(a).spacing);
        let p1 = |ci: usize| {
            0.25 * (self.phi_at(&phi[0], ci, jm, km)
                + self.phi_at(&phi[0], ci, jm, k)
                + self.phi_at(&phi[0], ci, j, km)
                + self.phi_at(&phi[0], ci, j, k))
        };
        let p2 = |cj: usize| {
            0.25 * (self.phi_at(&phi[1], im, cj, km)
                + self.phi_at(&phi[1], im, cj, k)
                + self.phi_at(&phi[1], i, cj, km)
                + self.phi_at(&phi[1], i, cj, k))
        };
        let p3 = |ck: usize| {
            0.25 * (self.phi_at(&phi[2], im, jm, ck)
                + self.phi_at(&phi[2], im, j, ck)
                + self.phi_at(&phi[2], i, jm, ck)
                + self.phi_at(&phi[2], i, j, ck))
        };
        (p1(i) - p1(im)) / h[0] + (p2(j) - p2(jm)) / h[1] + (p3(k) - p3(km)) / h[2]
    }

    #[inline(always)]
    fn interior_update(&self, u: &[f64], up: &[f64], i: usize, j: usize, k: usize, f: f64) -> f64 {
        let n = self.node(i, j, k);
        let dt = self.dt;
        2.0 * u[n] - up[n] + dt * dt * (self.laplacian(u, i, j, k) + f)
    }

    /// Node update inside the layer; `state.psi` must already hold
    /// `psi^{n+1/2}`.
    #[inline(always)]
    fn layer_update(&self, state: &FieldState, i: usize, j: usize, k: usize, f: f64) -> f64 {
        let (u, up) = (&state.u_curr, &state.u_prev);
        let n = self.node(i, j, k);
        let dt = self.dt;
        let z1 = self.damping.at_nodes(0)[i];
        let z2 = self.damping.at_nodes(1)[j];
        let z3 = self.damping.at_nodes(2)[k];
        let sigma = 0.5 * dt * (z1 + z2 + z3);
        let p2 = z1 * z2 + z2 * z3 + z3 * z1;
        let p3 = z1 * z2 * z3;
        let mut rhs = self.laplacian(u, i, j, k) - p2 * u[n] + self.div_phi(&state.phi, i, j, k);
        if p3 > 0.0 {
            let row = j + self.grid.axis(1).nodes * k;
            let psi_half = self.psi_layout.value(&state.psi, row, i);
            // (psi^{n+1/2} + psi^{n-1/2}) / 2 with psi^{n-1/2} = psi^{n+1/2} - dt u^n
            rhs -= p3 * (psi_half - 0.5 * dt * u[n]);
        }
        rhs += f;
        (2.0 * u[n] - (1.0 - sigma) * up[n] + dt * dt * rhs) / (1.0 + sigma)
    }

    /// `psi^{n+1/2} = psi^{n-1/2} + dt u^n` on every stored node.
    pub fn step_psi(&self, state: &mut FieldState) {
        let layout = &self.psi_layout;
        let n2 = self.grid.axis(1).nodes;
        let dt = self.dt;
        let u = &state.u_curr;
        layout
            .split_rows_mut(&mut state.psi)
            .into_par_iter()
            .enumerate()
            .for_each(|(row, vals)| {
                let (j, k) = (row % n2, row / n2);
                for (s, i) in layout.row_indices(row).enumerate() {
                    vals[s] += dt * u[self.node(i, j, k)];
                }
            });
    }

    /// [`Solver3d::interior_update`] without forcing over a run of
    /// consecutive nodes of the row `(j, k)`.
    #[inline(always)]
    #[allow(clippy::too_many_arguments)]
    fn interior_run(
        &self,
        u: &[f64],
        up: &[f64],
        out: &mut [f64],
        j: usize,
        k: usize,
        run: Range<usize>,
    ) {
        let (n1, n2) = (self.grid.axis(0).nodes, self.grid.axis(1).nodes);
        let (c1, c2) = (self.nb[0].cells, self.nb[1].cells);
        let h = [0, 1, 2].map(|a| self.grid.axis(a).spacing);
        let (jp, jm) = (self.nb[1].next[j], self.nb[1].prev[j]);
        let (kp, km) = (self.nb[2].next[k], self.nb[2].prev[k]);
        let dt = self.dt;
        let line = |j: usize, k: usize| n1 * (j + n2 * k)..n1 * (j + n2 * k + 1);
        let uc = &u[line(j, k)];
        let un = &u[line(jp, k)];
        let us = &u[line(jm, k)];
        let ua = &u[line(j, kp)];
        let ub = &u[line(j, km)];
        let upr = &up[line(j, k)];
        let f0 = &self.medium.faces(0)[c1 * (j + n2 * k)..c1 * (j + n2 * k + 1)];
        let f1 = self.medium.faces(1);
        let f1n = &f1[n1 * (j + c2 * k)..n1 * (j + c2 * k + 1)];
        let f1s = &f1[n1 * (jm + c2 * k)..n1 * (jm + c2 * k + 1)];
        let f2 = self.medium.faces(2);
        let f2a = &f2[line(j, k)];
        let f2b = &f2[line(j, km)];
        for i in run {
            let c = uc[i];
            let dx = f0[i] * (uc[i + 1] - c) - f0[i - 1] * (c - uc[i - 1]);
            let dy = f1n[i] * (un[i] - c) - f1s[i] * (c - us[i]);
            let dz = f2a[i] * (ua[i] - c) - f2b[i] * (c - ub[i]);
            let lap = dx / (h[0] * h[0]) + dy / (h[1] * h[1]) + dz / (h[2] * h[2]);
            out[i] = 2.0 * c - upr[i] + dt * dt * (lap + 0.0);
        }
    }

    #[inline(always)]
    fn update_node(&self, state: &FieldState, i: usize, j: usize, k: usize, f: f64) -> f64 {
        if self.near[0][i] || self.near[1][j] || self.near[2][k] {
            self.layer_update(state, i, j, k, f)
        } else {
            self.interior_update(&state.u_curr, &state.u_prev, i, j, k, f)
        }
    }

    /// Computes `u^{n+1}` into `out`; `state.psi` must hold `psi^{n+1/2}`.
    pub fn step_u(&self, state: &FieldState, out: &mut [f64]) {
        let n1 = self.grid.axis(0).nodes;
        let n2 = self.grid.axis(1).nodes;
        let t = state.time(self.dt);
        let src = self
            .source
            .map(|s| (s.node % n1, s.node / n1, s.forcing(t)));
        let (ui, uj, uk) = (
            self.nb[0].updated.clone(),
            self.nb[1].updated.clone(),
            self.nb[2].updated.clone(),
        );
        out.par_chunks_mut(n1).enumerate().for_each(|(row, line)| {
            let (j, k) = (row % n2, row / n2);
            if !uj.contains(&j) || !uk.contains(&k) {
                line.fill(0.0);
                return;
            }
            line[..ui.start].fill(0.0);
            line[ui.end..].fill(0.0);
            if self.near[1][j] || self.near[2][k] {
                for i in ui.clone() {
                    line[i] = self.layer_update(state, i, j, k, 0.0);
                }
            } else {
                let mut i = ui.start;
                for run in &self.runs {
                    for l in i..run.start {
                        line[l] = self.update_node(state, l, j, k, 0.0);
                    }
                    self.interior_run(&state.u_curr, &state.u_prev, line, j, k, run.clone());
                    i = run.end;
                }
                for l in i..ui.end {
                    line[l] = self.update_node(state, l, j, k, 0.0);
                }
            }
            if let Some((si, srow, f)) = src {
                if srow == row && ui.contains(&si) {
                    line[si] = self.update_node(state, si, j, k, f);
                }
            }
        });
    }

    /// Advances `phi` to `n+1` from `u^n`, `u^{n+1}` (in `u_next`) and
    /// `psi^{n+1/2}`.
    pub fn step_phi(&self, state: &mut FieldState, u_next: &[f64]) {
        let layout = &self.phi_layout;
        let c2n = self.nb[1].cells;
        let h = [0, 1, 2].map(|a| self.grid.axis(a).spacing);
        let inv_dt = 1.0 / self.dt;
        let n2 = self.grid.axis(1).nodes;
        let u = &state.u_curr;
        let psi = &state.psi;
        let zh = [0, 1, 2].map(|a| self.damping.at_halves(a));
        let [p1, p2, p3] = &mut state.phi[..] else {
            unreachable!("three phi components")
        };
        let rows: Vec<_> = layout
            .split_rows_mut(p1)
            .into_iter()
            .zip(layout.split_rows_mut(p2))
            .zip(layout.split_rows_mut(p3))
            .collect();
        rows.into_par_iter()
            .enumerate()
            .for_each(|(row, ((r1, r2), r3))| {
                let (cj, ck) = (row % c2n, row / c2n);
                let off = layout.row_range(row).start;
                let js = [cj, self.nb[1].next[cj]];
                let ks = [ck, self.nb[2].next[ck]];
                let (z2, z3) = (zh[1][cj], zh[2][ck]);
                for (s, ci) in layout.row_indices(row).enumerate() {
                    let is = [ci, self.nb[0].next[ci]];
                    let z1 = zh[0][ci];
                    // u^{n+1} + u^n at the eight corners of the cell.
                    let mut sum = [[[0.0; 2]; 2]; 2];
                    for (a, &i) in is.iter().enumerate() {
                        for (b, &j) in js.iter().enumerate() {
                            for (c, &k) in ks.iter().enumerate() {
                                let n = self.node(i, j, k);
                                sum[a][b][c] = u_next[n] + u[n];
                            }
                        }
                    }
                    let diff = |axis: usize, v: &[[[f64; 2]; 2]; 2]| {
                        let mut d = 0.0;
                        for p in 0..2 {
                            for q in 0..2 {
                                d += match axis {
                                    0 => v[1][p][q] - v[0][p][q],
                                    1 => v[p][1][q] - v[p][0][q],
                                    _ => v[p][q][1] - v[p][q][0],
                                };
                            }
                        }
                        d
                    };
                    // Time-averaged difference of the 4-point face averages.
                    let du = [0, 1, 2].map(|a| diff(a, &sum) / (8.0 * h[a]));
                    let g = Gamma3D::new(z1, z2, z3);
                    let dpsi = if g.gamma3.iter().any(|&v| v > 0.0) {
                        let mut p = [[[0.0; 2]; 2]; 2];
                        for (a, &i) in is.iter().enumerate() {
                            for (b, &j) in js.iter().enumerate() {
                                for (c, &k) in ks.iter().enumerate() {
                                    p[a][b][c] = self.psi_layout.value(psi, j + n2 * k, i);
                                }
                            }
                        }
                        [0, 1, 2].map(|a| diff(a, &p) / (4.0 * h[a]))
                    } else {
                        [0.0; 3]
                    };
                    let c2 = self.c2_cell[off + s];
                    let z = [z1, z2, z3];
                    for (comp, r) in [&mut *r1, &mut *r2, &mut *r3].into_iter().enumerate() {
                        let drive = g.gamma2[comp] * du[comp] + g.gamma3[comp] * dpsi[comp];
                        r[s] = ((inv_dt - 0.5 * z[comp]) * r[s] + c2 * drive)
                            / (inv_dt + 0.5 * z[comp]);
                    }
                }
            });
    }

    /// One full step: `psi`, then `u`, then `phi`.
    pub fn step(&mut self, state: &mut FieldState) -> Result<()> {
        self.step_psi(state);
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
