//! First-order symbol of the layer equations and numerical checks of its
//! eigenvalues and eigenvector completeness.
//!
//! State ordering is `(u, phi_1, phi_2, v_1, v_2)` in 2D and
//! `(u, phi_1, phi_2, phi_3, v_1, v_2, v_3, psi)` in 3D, where
//! `u_t = -zeta_2 u + div v [- zeta_3 psi]` and
//! `v_t = -zeta_1 v + c^2 grad u + phi`.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// Relative tolerance for merging numerically equal eigenvalues.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Relative tolerance for the numerical rank of `P - lambda I`.
pub const RANK_TOL: f64 = 1e-8;

const MAX_ITER: usize = 10_000;

pub type C64 = Complex<f64>;

/// Matrices of `U_t = A U_x + B U_y [+ C U_z] + L U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrices {
    pub zeta: Vec<f64>,
    pub c: f64,
    /// One matrix per space direction.
    pub spatial: Vec<DMatrix<f64>>,
    /// The zero-order part `L`.
    pub lower: DMatrix<f64>,
}

fn check(zeta: &[f64], c: f64) -> Result<()> {
    if let Some(z) = zeta.iter().find(|z| !(**z >= 0.0 && z.is_finite())) {
        return Err(invalid(
            "zeta",
            format!("must be finite and non-negative, got {z}"),
        ));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("must be positive, got {c}")));
    }
    Ok(())
}

/// 2D system, 5 x 5.
pub fn assemble_2d(z1: f64, z2: f64, c: f64) -> Result<SymbolMatrices> {
    check(&[z1, z2], c)?;
    let c2 = c * c;
    let mut a = DMatrix::zeros(5, 5);
    a[(0, 3)] = 1.0;
    a[(1, 0)] = c2 * (z2 - z1);
    a[(3, 0)] = c2;
    let mut b = DMatrix::zeros(5, 5);
    b[(0, 4)] = 1.0;
    b[(2, 0)] = c2 * (z1 - z2);
    b[(4, 0)] = c2;
    let lower = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-z2, -z1, -z2, -z1, -z1]));
    Ok(SymbolMatrices {
        zeta: vec![z1, z2],
        c,
        spatial: vec![a, b],
        lower,
    })
}

/// 3D system, 8 x 8.
pub fn assemble_3d(z1: f64, z2: f64, z3: f64, c: f64) -> Result<SymbolMatrices> {
    check(&[z1, z2, z3], c)?;
    let c2 = c * c;
    let z = [z1, z2, z3];
    let mut spatial = Vec::with_capacity(3);
    for i in 0..3 {
        let (p, q) = (z[(i + 1) % 3], z[(i + 2) % 3]);
        let mut m = DMatrix::zeros(8, 8);
        m[(0, 4 + i)] = 1.0;
        m[(1 + i, 0)] = c2 * (p + q - z[i]);
        m[(1 + i, 7)] = c2 * p * q;
        m[(4 + i, 0)] = c2;
        spatial.push(m);
    }
    let mut lower = DMatrix::zeros(8, 8);
    lower[(0, 0)] = -z2;
    lower[(0, 7)] = -z3;
    for i in 0..3 {
        lower[(1 + i, 1 + i)] = -z[i];
        lower[(4 + i, 4 + i)] = -z1;
    }
    lower[(7, 0)] = 1.0;
    Ok(SymbolMatrices {
        zeta: z.to_vec(),
        c,
        spatial,
        lower,
    })
}

/// Dispatches on `zeta.len()`.
pub fn assemble(zeta: &[f64], c: f64) -> Result<SymbolMatrices> {
    match *zeta {
        [z1, z2] => assemble_2d(z1, z2, c),
        [z1, z2, z3] => assemble_3d(z1, z2, z3, c),
        _ => Err(invalid(
            "zeta",
            format!("need 2 or 3 entries, got {}", zeta.len()),
        )),
    }
}

impl SymbolMatrices {
    pub fn dim(&self) -> usize {
        self.spatial.len()
    }

    pub fn state_dim(&self) -> usize {
        self.lower.nrows()
    }

    /// `P(ik) = i sum_j k_j A_j`, plus `L` when `lower` is set.
    pub fn symbol(&self, k: &[f64], lower: bool) -> Result<DMatrix<C64>> {
        if k.len() != self.dim() {
            return Err(invalid(
                "k",
                format!("need {} components, got {}", self.dim(), k.len()),
            ));
        }
        let n = self.state_dim();
        let re = if lower {
            self.lower.clone()
        } else {
            DMatrix::zeros(n, n)
        };
        let mut im = DMatrix::<f64>::zeros(n, n);
        for (m, &kj) in self.spatial.iter().zip(k) {
            im += m * kj;
        }
        Ok(DMatrix::from_fn(n, n, |r, c| {
            C64::new(re[(r, c)], im[(r, c)])
        }))
    }
}

/// A group of numerically equal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    /// Mean of the member eigenvalues.
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    pub k: Vec<f64>,
    pub eigenvalues: Vec<C64>,
    pub max_re: f64,
    pub clusters: Vec<Cluster>,
    /// Every cluster has as many eigenvectors as its multiplicity.
    pub complete: bool,
}

impl EigenReport {
    /// Cluster containing `lambda`, if any.
    pub fn cluster_at(&self, lambda: C64, tol: f64) -> Option<&Cluster> {
        self.clusters
            .iter()
            .find(|c| (c.value - lambda).norm() <= tol)
    }
}

fn spectral_norm(m: &DMatrix<C64>) -> Result<f64> {
    let n = m.nrows();
    let svd = nalgebra::linalg::SVD::try_new(m.clone(), false, false, f64::EPSILON, MAX_ITER)
        .ok_or(Error::EigenNonConvergence { dim: n })?;
    Ok(svd.singular_values.iter().fold(0.0, |a: f64, &s| a.max(s)))
}

/// Eigenvalues of the symbol at wavevector `k`, with multiplicities.
pub fn symbol_eigenvalues(m: &SymbolMatrices, k: &[f64], lower: bool) -> Result<EigenReport> {
    let p = m.symbol(k, lower)?;
    let n = p.nrows();
    let schur = nalgebra::linalg::Schur::try_new(p.clone(), f64::EPSILON, MAX_ITER)
        .ok_or(Error::EigenNonConvergence { dim: n })?;
    let (_, t) = schur.unpack();
    let eigenvalues: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    if eigenvalues
        .iter()
        .any(|l| !(l.re.is_finite() && l.im.is_finite()))
    {
        return Err(Error::EigenNonConvergence { dim: n });
    }
    let max_re = eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |a, l| a.max(l.re));

    let kn = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm = spectral_norm(&p)?;
    let cluster_tol = CLUSTER_TOL * (1.0 + kn * m.c);
    let rank_tol = RANK_TOL * norm;

    // single-linkage grouping
    let mut group: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if (eigenvalues[i] - eigenvalues[j]).norm() <= cluster_tol {
                let (gi, gj) = (group[i], group[j]);
                for g in group.iter_mut() {
                    if *g == gi {
                        *g = gj;
                    }
                }
            }
        }
    }
    let mut ids: Vec<usize> = group.clone();
    ids.sort_unstable();
    ids.dedup();
    let mut clusters = Vec::with_capacity(ids.len());
    for id in ids {
        let members: Vec<C64> = (0..n)
            .filter(|&i| group[i] == id)
            .map(|i| eigenvalues[i])
            .collect();
        let value = members.iter().sum::<C64>() / members.len() as f64;
        let shifted = DMatrix::from_fn(
            n,
            n,
            |r, c| {
                if r == c {
                    p[(r, c)] - value
                } else {
                    p[(r, c)]
                }
            },
        );
        let svd = nalgebra::linalg::SVD::try_new(shifted, false, false, f64::EPSILON, MAX_ITER)
            .ok_or(Error::EigenNonConvergence { dim: n })?;
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > rank_tol)
            .count();
        let geometric = (n - rank).min(members.len());
        clusters.push(Cluster {
            value,
            algebraic: members.len(),
            geometric,
        });
    }
    clusters.sort_by(|a, b| {
        a.value
            .im
            .total_cmp(&b.value.im)
            .then(a.value.re.total_cmp(&b.value.re))
    });
    let complete = clusters.iter().all(|c| c.geometric == c.algebraic);
    Ok(EigenReport {
        k: k.to_vec(),
        eigenvalues,
        max_re,
        clusters,
        complete,
    })
}

/// One evaluated `(zeta, k)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSample {
    pub zeta: Vec<f64>,
    pub k: Vec<f64>,
    pub max_re: f64,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSummary {
    pub samples: Vec<ScanSample>,
    /// Largest real part over all samples.
    pub max_re: f64,
    /// Largest `Re lambda / (c |k|)` over samples with `k != 0`.
    pub max_re_scaled: f64,
    pub defective: usize,
}

/// Evaluates the symbol at every `(zeta, k)` pair.
pub fn stability_scan(c: f64, pairs: &[(Vec<f64>, Vec<f64>)], lower: bool) -> Result<ScanSummary> {
    let samples: Vec<ScanSample> = pairs
        .par_iter()
        .map(|(zeta, k)| {
            let m = assemble(zeta, c)?;
            let r = symbol_eigenvalues(&m, k, lower)?;
            Ok(ScanSample {
                zeta: zeta.clone(),
                k: k.clone(),
                max_re: r.max_re,
                complete: r.complete,
            })
        })
        .collect::<Result<_>>()?;
    let max_re = samples
        .iter()
        .fold(f64::NEG_INFINITY, |a, s| a.max(s.max_re));
    let max_re_scaled = samples
        .iter()
        .filter_map(|s| {
            let kn = s.k.iter().map(|v| v * v).sum::<f64>().sqrt();
            (kn > 0.0).then(|| s.max_re / (c * kn))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let defective = samples.iter().filter(|s| !s.complete).count();
    Ok(ScanSummary {
        samples,
        max_re,
        max_re_scaled,
        defective,
    })
}

/// Reproducible random pairs with `zeta_j` in `[0, zeta_max]` and `k_j` in
/// `[-k_max, k_max]`. With `positive = Some(p)` exactly `p` randomly chosen
/// damping coefficients are positive and the rest are zero.
pub fn random_pairs(
    dim: usize,
    count: usize,
    zeta_max: f64,
    k_max: f64,
    positive: Option<usize>,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut zeta: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..=zeta_max)).collect();
            if let Some(p) = positive {
                let mut order: Vec<usize> = (0..dim).collect();
                for i in (1..dim).rev() {
                    order.swap(i, rng.gen_range(0..=i));
                }
                for (rank, &ax) in order.iter().enumerate() {
                    if rank < p {
                        zeta[ax] = zeta[ax].max(1e-3 * zeta_max);
                    } else {
                        zeta[ax] = 0.0;
                    }
                }
            }
            let k = (0..dim).map(|_| rng.gen_range(-k_max..=k_max)).collect();
            (zeta, k)
        })
        .collect()
}
