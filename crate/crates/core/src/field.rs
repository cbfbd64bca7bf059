/// Solution at two time levels plus the layer-only auxiliary fields.
///
/// `phi[c]` and `psi` are stored compactly on the owning solver's layer
/// layouts; `psi` is empty in two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// `u^n` on integer nodes.
    pub u_curr: Vec<f64>,
    /// `u^{n-1}` on integer nodes.
    pub u_prev: Vec<f64>,
    /// `phi_c^n` on cell centres.
    pub phi: Vec<Vec<f64>>,
    /// `psi^{n-1/2}` on integer nodes.
    pub psi: Vec<f64>,
    /// Time level `n`.
    pub n: usize,
}

impl FieldState {
    pub fn time(&self, dt: f64) -> f64 {
        self.n as f64 * dt
    }

    /// Largest `|u^n|` over all nodes.
    pub fn max_abs(&self) -> f64 {
        self.u_curr.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|phi|` per component.
    pub fn max_abs_phi(&self) -> Vec<f64> {
        self.phi
            .iter()
            .map(|c| c.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
            .collect()
    }

    pub fn aux_scalars(&self) -> usize {
        self.phi.iter().map(Vec::len).sum::<usize>() + self.psi.len()
    }
}

/// Storage accounting for the auxiliary variables of a solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxMemory {
    pub dim: usize,
    /// Stored `phi` scalars (all components).
    pub phi_scalars: usize,
    /// Stored `psi` scalars.
    pub psi_scalars: usize,
    /// Cells with a positive damping coefficient along some axis.
    pub layer_cells: usize,
    /// Stored `psi` nodes with no positive damping of their own.
    pub halo_nodes: usize,
    /// Cells of the full staggered grid.
    pub total_cells: usize,
}

impl AuxMemory {
    pub fn aux_scalars(&self) -> usize {
        self.phi_scalars + self.psi_scalars
    }

    /// Auxiliary scalars per layer cell (halo included).
    pub fn per_layer_cell(&self) -> f64 {
        let denom = self.layer_cells + self.halo_nodes;
        if denom == 0 {
            0.0
        } else {
            self.aux_scalars() as f64 / denom as f64
        }
    }
}
