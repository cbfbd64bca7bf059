//! Browser bindings for the pmlwave demo page in `www/`.
//!
//! Everything here is plain Rust underneath the `wasm_bindgen` attributes,
//! so the crate also builds and tests on the host. Errors cross the
//! boundary as strings.

use wasm_bindgen::prelude::*;

use pmlwave::config::Preset;
use pmlwave::damping::{eval_zeta, reflection_from_zeta_bar};
use pmlwave::field::FieldState;
use pmlwave::io::grey_level;
use pmlwave::sim::Solver;
use pmlwave::stability::{assemble, symbol_eigenvalues};

/// `points` samples of the damping profile across `[-(a+L), a+L]`.
#[wasm_bindgen]
pub fn profile_curve(half_width: f64, layer_width: f64, zeta_bar: f64, points: usize) -> Vec<f64> {
    let outer = half_width + layer_width;
    let n = points.max(2);
    (0..n)
        .map(|k| {
            let x = -outer + 2.0 * outer * k as f64 / (n - 1) as f64;
            eval_zeta(x, half_width, layer_width, zeta_bar)
        })
        .collect()
}

/// Reflection coefficient of a layer with peak damping `zeta_bar`.
#[wasm_bindgen]
pub fn reflection(c: f64, layer_width: f64, zeta_bar: f64) -> f64 {
    reflection_from_zeta_bar(c, layer_width, zeta_bar)
}

/// A running 2D preset.
#[wasm_bindgen]
pub struct Field2d {
    solver: Solver,
    state: FieldState,
    /// Fraction of the half-extent covered by the physical domain.
    inner: f64,
    peak: f64,
}

#[wasm_bindgen]
impl Field2d {
    /// `preset` is `point2d` or `hetero2d`; `zeta_bar` overrides the peak damping.
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, dx: f64, zeta_bar: f64) -> Result<Field2d, String> {
        let preset = Preset::from_name(preset).map_err(|e| e.to_string())?;
        let mut cfg = preset.config(Some(dx)).map_err(|e| e.to_string())?;
        if cfg.dim() != 2 {
            return Err(format!("{} is not a 2D preset", preset.name()));
        }
        cfg.damping = pmlwave::config::DampingSpec::ZetaBar(vec![zeta_bar; 2]);
        let (solver, state) = cfg.build().map_err(|e| e.to_string())?;
        let ax = solver.grid().axis(0);
        let inner = ax.half_width / (ax.half_width + ax.layer_width);
        let peak = state.max_abs();
        Ok(Field2d {
            solver,
            state,
            inner,
            peak,
        })
    }

    /// Advances `steps` time steps and returns the new time.
    pub fn advance(&mut self, steps: usize) -> Result<f64, String> {
        for _ in 0..steps {
            self.solver
                .step(&mut self.state)
                .map_err(|e| e.to_string())?;
        }
        self.peak = self.peak.max(self.state.max_abs());
        Ok(self.time())
    }

    pub fn time(&self) -> f64 {
        self.state.time(self.solver.dt())
    }

    pub fn width(&self) -> usize {
        self.solver.grid().axis(0).nodes
    }

    pub fn height(&self) -> usize {
        self.solver.grid().axis(1).nodes
    }

    pub fn inner_fraction(&self) -> f64 {
        self.inner
    }

    /// RGBA pixels, row 0 at the top (largest `x2`). The grey scale is
    /// symmetric about zero and `gain` times more sensitive than the run
    /// maximum so far.
    pub fn pixels(&self, gain: f64) -> Vec<u8> {
        let (w, h) = (self.width(), self.height());
        let m = self.peak / gain.max(1e-12);
        let mut out = Vec::with_capacity(4 * w * h);
        for row in (0..h).rev() {
            for &v in &self.state.u_curr[row * w..(row + 1) * w] {
                let g = grey_level(v, m);
                out.extend_from_slice(&[g, g, g, 255]);
            }
        }
        out
    }
}

/// Eigenvalues of the first-order symbol as interleaved `[re, im, ...]`.
/// `zeta` and `k` need two or three entries each.
#[wasm_bindgen]
pub fn symbol_spectrum(zeta: Vec<f64>, k: Vec<f64>, c: f64) -> Result<Vec<f64>, String> {
    let report = spectrum(&zeta, &k, c)?;
    Ok(report.eigenvalues.iter().flat_map(|l| [l.re, l.im]).collect())
}

/// Whether the symbol has a full set of eigenvectors.
#[wasm_bindgen]
pub fn symbol_complete(zeta: Vec<f64>, k: Vec<f64>, c: f64) -> Result<bool, String> {
    Ok(spectrum(&zeta, &k, c)?.complete)
}

fn spectrum(zeta: &[f64], k: &[f64], c: f64) -> Result<pmlwave::stability::EigenReport, String> {
    let m = assemble(zeta, c).map_err(|e| e.to_string())?;
    symbol_eigenvalues(&m, k, false).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_zero_inside_and_peaks_at_the_edge() {
        let z = profile_curve(0.5, 0.1, 80.0, 121);
        assert_eq!(z.len(), 121);
        assert_eq!(z[60], 0.0);
        assert!((z[0] - 80.0).abs() < 1e-12 && (z[120] - 80.0).abs() < 1e-12);
        assert!((reflection(1.0, 0.1, 80.0) - (-8.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn field_advances_and_renders() {
        let mut f = Field2d::new("point2d", 0.02, 80.0).unwrap();
        assert_eq!((f.width(), f.height()), (61, 61));
        let t = f.advance(20).unwrap();
        assert!(t > 0.2);
        let px = f.pixels(1.0);
        assert_eq!(px.len(), 4 * 61 * 61);
        assert!(px.chunks(4).any(|p| p[0] != 127));
        assert!((f.inner_fraction() - 0.5 / 0.6).abs() < 1e-12);
        assert!(Field2d::new("point3d", 0.02, 80.0).is_err());
        assert!(Field2d::new("nope", 0.02, 80.0).is_err());
    }

    #[test]
    fn spectra() {
        let ev = symbol_spectrum(vec![1.0, 2.0], vec![3.0, 4.0], 1.0).unwrap();
        assert_eq!(ev.len(), 10);
        assert!(ev.chunks(2).any(|p| p[0].abs() < 1e-10 && (p[1] - 5.0).abs() < 1e-8));
        assert!(symbol_complete(vec![1.0, 2.0], vec![3.0, 4.0], 1.0).unwrap());
        assert!(!symbol_complete(vec![1.0, 2.0, 0.5], vec![3.0, 4.0, 1.0], 1.0).unwrap());
        assert!(symbol_spectrum(vec![1.0], vec![1.0], 1.0).is_err());
    }
}
