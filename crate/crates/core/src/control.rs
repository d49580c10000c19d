//! Modified weights, the per-agent control law and the stability gain bound.
//!
//! Closed loop: `ṗ = -h L̄ p + κ M̄ B̄ᵀ p`, which is `-h L̃̄ p` with
//! `L̃ = L - (κ/h) M Bᵀ`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::FrameworkGraph;
use crate::linalg::{lift, sorted_symmetric_eigen, spectral_norm};
use crate::motion::{assemble_motion_matrix, MotionParams};
use crate::shape::AffineSubspaceBasis;
use crate::stress::StressWeights;

/// Largest principal-angle sine tolerated between the eigen-kernel of `L̄` and `S`.
pub const KERNEL_ANGLE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("gain h must be positive, got {0}")]
    NonpositiveGain(f64),
    #[error("agent {agent}: no measurement from neighbor {neighbor}")]
    MissingNeighborMeasurement { agent: usize, neighbor: usize },
    #[error("kernel of the stress Laplacian disagrees with the affine-image subspace (sine {0:.3e})")]
    KernelMismatch(f64),
}

/// `L̃ = L - (κ/h) M Bᵀ`.
pub fn modified_laplacian(
    laplacian: &DMatrix<f64>,
    motion_matrix: &DMatrix<f64>,
    incidence: &DMatrix<f64>,
    kappa: f64,
    h: f64,
) -> Result<DMatrix<f64>, ControlError> {
    if !(h > 0.0) {
        return Err(ControlError::NonpositiveGain(h));
    }
    Ok(laplacian - motion_matrix * incidence.transpose() * (kappa / h))
}

/// Directed weights `w̃_ij = w_ij - (κ/h) μ_ij` held per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedWeights {
    h: f64,
    kappa: f64,
    neighbors: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
}

impl ModifiedWeights {
    pub fn new(
        graph: &FrameworkGraph,
        stress: &StressWeights,
        params: &MotionParams,
        kappa: f64,
        h: f64,
    ) -> Result<Self, ControlError> {
        if !(h > 0.0) {
            return Err(ControlError::NonpositiveGain(h));
        }
        let n = graph.node_count();
        let mut neighbors = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let nbrs = graph.neighbors(i).to_vec();
            let vals = nbrs
                .iter()
                .map(|&j| {
                    let k = graph.edge_index(i, j).expect("neighbor pairs are edges");
                    stress.weights()[k] - kappa / h * params.get(i, j)
                })
                .collect();
            neighbors.push(nbrs);
            values.push(vals);
        }
        Ok(Self { h, kappa, neighbors, values })
    }

    pub fn gain(&self) -> f64 {
        self.h
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `w̃_ij` (0-based), zero off the graph.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.neighbors[i].iter().position(|&x| x == j).map_or(0.0, |k| self.values[i][k])
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `L̃` assembled entry by entry from the directed weights.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.neighbors.len();
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            for (&j, &w) in self.neighbors[i].iter().zip(&self.values[i]) {
                l[(i, i)] += w;
                l[(i, j)] -= w;
            }
        }
        l
    }

    /// `u_i = -h Σ_j w̃_ij z_ij`. `relative[k]` is `z_ij = p_i - p_j` for the
    /// `k`-th entry of `neighbors(i)`; `None` marks a missing message.
    pub fn control_input(&self, agent: usize, relative: &[Option<&[f64]>], out: &mut [f64]) -> Result<(), ControlError> {
        out.iter_mut().for_each(|x| *x = 0.0);
        let nbrs = &self.neighbors[agent];
        for (k, (&j, &w)) in nbrs.iter().zip(&self.values[agent]).enumerate() {
            let z = relative
                .get(k)
                .copied()
                .flatten()
                .ok_or(ControlError::MissingNeighborMeasurement { agent: agent + 1, neighbor: j + 1 })?;
            for (o, zd) in out.iter_mut().zip(z) {
                *o -= self.h * w * zd;
            }
        }
        Ok(())
    }
}

/// Sufficient gain bound for exponential convergence to the affine-image subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct GainCertificate {
    pub kappa: f64,
    /// `h > h_min` certifies convergence; `0` when `κ = 0` or the motion is zero.
    pub h_min: f64,
    /// Nonzero eigenvalues of `L̄`, ascending.
    pub nonzero_eigenvalues: DVector<f64>,
    /// `‖Q J₂ + J₂ᵀ Q - 2I‖` for `Q = diag(1/λ)`.
    pub lyapunov_residual: f64,
    /// `‖Q · block‖₂`, the bound per unit `|κ|`.
    pub block_norm: f64,
    /// Sine of the largest principal angle between the eigen-kernel and `S`.
    pub kernel_angle: f64,
}

impl GainCertificate {
    pub fn certifies(&self, h: f64) -> bool {
        h > 0.0 && (h > self.h_min || self.h_min == 0.0)
    }

    /// `h / h_min`, infinite when any positive gain is certified.
    pub fn margin(&self, h: f64) -> f64 {
        if self.h_min == 0.0 {
            f64::INFINITY
        } else {
            h / self.h_min
        }
    }
}

/// Eigendecomposes `L̄`, takes the trailing block of `Vᵀ M̄B̄ᵀ V` over the
/// nonzero eigenvalues and returns `h_min = |κ| ‖Q · block‖₂`.
pub fn stability_bound(
    laplacian: &DMatrix<f64>,
    operator: &DMatrix<f64>,
    kappa: f64,
    basis: &AffineSubspaceBasis,
) -> Result<GainCertificate, ControlError> {
    let m = basis.shape_dimension();
    let lbar = lift(laplacian, m);
    let (values, vectors) = sorted_symmetric_eigen(&lbar);
    let kernel_dim = basis.dimension();
    let total = values.len();

    let kernel = vectors.columns(0, kernel_dim);
    let outside = basis.complement_projector() * kernel;
    let kernel_angle = spectral_norm(&outside);
    if kernel_angle > KERNEL_ANGLE_TOL {
        return Err(ControlError::KernelMismatch(kernel_angle));
    }

    let trailing = vectors.columns(kernel_dim, total - kernel_dim).into_owned();
    let nonzero = values.rows(kernel_dim, total - kernel_dim).into_owned();
    let q = DMatrix::from_diagonal(&nonzero.map(|l| 1.0 / l));
    let j2 = DMatrix::from_diagonal(&nonzero);
    let ident = DMatrix::<f64>::identity(nonzero.len(), nonzero.len());
    let lyapunov_residual = (&q * &j2 + j2.transpose() * &q - ident * 2.0).amax();

    let block = trailing.transpose() * operator * &trailing;
    let block_norm = spectral_norm(&(&q * block));
    let h_min = if kappa == 0.0 { 0.0 } else { kappa.abs() * block_norm };
    Ok(GainCertificate { kappa, h_min, nonzero_eigenvalues: nonzero, lyapunov_residual, block_norm, kernel_angle })
}

/// Convenience: `M` matrix for the parameters, then `L̃`.
pub fn modified_laplacian_for(
    graph: &FrameworkGraph,
    stress: &StressWeights,
    params: &MotionParams,
    kappa: f64,
    h: f64,
) -> Result<DMatrix<f64>, ControlError> {
    let mm = assemble_motion_matrix(graph, params);
    modified_laplacian(stress.laplacian(), &mm, graph.incidence_matrix().matrix(), kappa, h)
}
