//! Stress weights: symmetric edge weights in equilibrium on the reference shape
//! whose Laplacian is positive semidefinite with rank `n - m - 1`.
//!
//! Weights are searched inside the null space of the equilibrium map. On that
//! space the Laplacian always annihilates `1` and the coordinate columns of
//! `p*`, so only its compression `Uᵀ L U` onto the orthogonal complement matters.
//! The smallest eigenvalue of the compression is concave in the null-space
//! coefficients; it is maximised on the unit sphere by projected ascent on a
//! soft-min surrogate with an increasing sharpness schedule.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{FrameworkGraph, GraphError};
use crate::linalg::{lift, null_space, orthogonal_complement, sorted_eigenvalues, sorted_symmetric_eigen};
use crate::shape::{AffineSubspaceBasis, ReferenceShape, ShapeError};

pub const EQUILIBRIUM_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-10;
pub const KERNEL_EIGEN_TOL: f64 = 1e-10;
pub const GAP_TOL: f64 = 1e-8;
pub const KERNEL_MISMATCH_TOL: f64 = 1e-9;
/// Minimum compressed eigenvalue (unit-norm coefficients) a search must reach.
pub const SEARCH_SUCCESS: f64 = 1e-6;

const NULL_SPACE_TOL: f64 = 1e-9;
const SHARPNESS: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];
const ASCENT_ITERS: usize = 300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StressError {
    #[error("equilibrium constraints admit only the zero stress")]
    NullSpaceEmpty,
    #[error(
        "no positive semidefinite stress found (best compressed eigenvalue {best:.3e} over {starts} starts); \
         the framework is likely not universally rigid"
    )]
    NoValidStress { best: f64, starts: usize },
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Per-edge symmetric weights with their Laplacian and its ascending spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct StressWeights {
    weights: Vec<f64>,
    laplacian: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl StressWeights {
    pub fn from_weights(graph: &FrameworkGraph, weights: Vec<f64>) -> Result<Self, GraphError> {
        let laplacian = graph.laplacian(&weights)?;
        let eigenvalues = sorted_eigenvalues(&laplacian);
        Ok(Self { weights, laplacian, eigenvalues })
    }

    /// One weight per edge, in `FrameworkGraph::edges()` order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// All weights multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w * alpha).collect(),
            laplacian: &self.laplacian * alpha,
            eigenvalues: sorted_eigenvalues(&(&self.laplacian * alpha)),
        }
    }
}

/// `‖Σ_j w_ij (p_i* - p_j*)‖` for every agent.
pub fn equilibrium_residual(graph: &FrameworkGraph, shape: &ReferenceShape, weights: &[f64]) -> Vec<f64> {
    let m = shape.dimension();
    let mut acc = vec![DVector::<f64>::zeros(m); graph.node_count()];
    for (e, &w) in graph.edges().iter().zip(weights) {
        let d = (shape.position(e.head) - shape.position(e.tail)) * w;
        acc[e.head] += &d;
        acc[e.tail] -= &d;
    }
    acc.iter().map(|v| v.norm()).collect()
}

/// `mn x |Z|` matrix mapping edge weights to stacked equilibrium residuals.
fn equilibrium_map(graph: &FrameworkGraph, shape: &ReferenceShape) -> DMatrix<f64> {
    let m = shape.dimension();
    let mut a = DMatrix::zeros(graph.node_count() * m, graph.edge_count());
    for (k, e) in graph.edges().iter().enumerate() {
        let d = shape.position(e.head) - shape.position(e.tail);
        for r in 0..m {
            a[(e.head * m + r, k)] += d[r];
            a[(e.tail * m + r, k)] -= d[r];
        }
    }
    a
}

/// Outcome of the stress search, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSummary {
    pub null_space_dimension: usize,
    pub starts: usize,
    pub best_start: usize,
    pub best_value: f64,
}

/// Computes normalised stress weights (`λ_{m+2}(L) = 1`) for a framework.
pub fn compute_stress_weights(
    graph: &FrameworkGraph,
    shape: &ReferenceShape,
) -> Result<StressWeights, StressError> {
    compute_stress_weights_with_summary(graph, shape).map(|(sw, _)| sw)
}

pub fn compute_stress_weights_with_summary(
    graph: &FrameworkGraph,
    shape: &ReferenceShape,
) -> Result<(StressWeights, SearchSummary), StressError> {
    let m = shape.dimension();
    let n = shape.agent_count();
    if graph.node_count() != n {
        return Err(GraphError::NodeOutOfRange { node: graph.node_count(), n }.into());
    }
    if n < m + 2 {
        return Err(ShapeError::TooFewAgents { n, m }.into());
    }
    let null = null_space(&equilibrium_map(graph, shape), NULL_SPACE_TOL);
    let r = null.ncols();
    if r == 0 {
        return Err(StressError::NullSpaceEmpty);
    }

    let mut kernel_cols = DMatrix::from_element(n, 1, 1.0);
    kernel_cols = kernel_cols.resize_horizontally(m + 1, 0.0);
    kernel_cols.view_mut((0, 1), (n, m)).copy_from(&shape.coordinate_matrix());
    let u = orthogonal_complement(&kernel_cols, 1e-10);

    let compressed: Vec<DMatrix<f64>> = null
        .column_iter()
        .map(|w| {
            let l = graph.laplacian(w.as_slice()).expect("one weight per edge");
            u.transpose() * l * &u
        })
        .collect();

    let starts = seed_directions(r);
    let mut best: Option<(usize, DVector<f64>, f64)> = None;
    for (idx, seed) in starts.iter().enumerate() {
        let (c, value) = ascend(&compressed, seed.clone());
        // strict comparison keeps the earliest start on ties
        if best.as_ref().is_none_or(|(_, _, v)| value > *v) {
            best = Some((idx, c, value));
        }
    }
    let (best_start, coeffs, best_value) = best.expect("at least one start");
    let summary = SearchSummary { null_space_dimension: r, starts: starts.len(), best_start, best_value };
    if best_value <= SEARCH_SUCCESS {
        return Err(StressError::NoValidStress { best: best_value, starts: starts.len() });
    }

    let raw = &null * coeffs;
    let l = graph.laplacian(raw.as_slice())?;
    let gap = sorted_eigenvalues(&l)[m + 1];
    let weights: Vec<f64> = raw.iter().map(|w| w / gap).collect();
    Ok((StressWeights::from_weights(graph, weights)?, summary))
}

/// Canonical directions `±e_k` followed by `e_k ± e_l` (normalised); `r² + r ≤ 2r²` starts.
fn seed_directions(r: usize) -> Vec<DVector<f64>> {
    let mut seeds = Vec::new();
    for k in 0..r {
        for sign in [1.0, -1.0] {
            let mut v = DVector::zeros(r);
            v[k] = sign;
            seeds.push(v);
        }
    }
    for k in 0..r {
        for l in k + 1..r {
            for sign in [1.0, -1.0] {
                let mut v = DVector::zeros(r);
                v[k] = 1.0;
                v[l] = sign;
                seeds.push(v.normalize());
            }
        }
    }
    seeds
}

fn combine(mats: &[DMatrix<f64>], c: &DVector<f64>) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for (m, ck) in mats.iter().zip(c.iter()) {
        s += m * *ck;
    }
    s
}

fn min_eigenvalue(mats: &[DMatrix<f64>], c: &DVector<f64>) -> f64 {
    sorted_eigenvalues(&combine(mats, c))[0]
}

/// Soft-min of the spectrum and its gradient with respect to `c`.
fn soft_min(mats: &[DMatrix<f64>], c: &DVector<f64>, beta: f64) -> (f64, DVector<f64>) {
    let (values, vectors) = sorted_symmetric_eigen(&combine(mats, c));
    let lo = values[0];
    let expo: Vec<f64> = values.iter().map(|v| (-beta * (v - lo)).exp()).collect();
    let total: f64 = expo.iter().sum();
    let value = lo - total.ln() / beta;
    let grad = DVector::from_iterator(
        mats.len(),
        mats.iter().map(|mk| {
            expo.iter()
                .enumerate()
                .map(|(i, e)| {
                    let v = vectors.column(i);
                    e / total * v.dot(&(mk * v))
                })
                .sum::<f64>()
        }),
    );
    (value, grad)
}

/// Projected ascent on the unit sphere. Returns the final point and its exact
/// minimum eigenvalue.
fn ascend(mats: &[DMatrix<f64>], start: DVector<f64>) -> (DVector<f64>, f64) {
    let mut c = start.normalize();
    if mats.len() == 1 {
        let v = min_eigenvalue(mats, &c);
        let flipped = -&c;
        let w = min_eigenvalue(mats, &flipped);
        return if w > v { (flipped, w) } else { (c, v) };
    }
    for &beta in &SHARPNESS {
        let mut step = 0.1;
        let (mut value, mut grad) = soft_min(mats, &c, beta);
        for _ in 0..ASCENT_ITERS {
            let tangent = &grad - &c * c.dot(&grad);
            if tangent.norm() < 1e-13 {
                break;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let trial = (&c + &tangent * step).normalize();
                let (tv, tg) = soft_min(mats, &trial, beta);
                if tv > value {
                    let gain = tv - value;
                    c = trial;
                    value = tv;
                    grad = tg;
                    step *= 2.0;
                    accepted = gain > 1e-15;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    let value = min_eigenvalue(mats, &c);
    (c, value)
}

/// Pass/fail report for a set of stress weights.
#[derive(Debug, Clone, PartialEq)]
pub struct StressCertificate {
    pub max_equilibrium_residual: f64,
    pub min_eigenvalue: f64,
    /// Largest `|λ_k|` over the first `m + 1` eigenvalues.
    pub kernel_eigen_max: f64,
    /// `λ_{m+2}`.
    pub gap_eigenvalue: f64,
    pub rank: usize,
    pub expected_rank: usize,
    /// `‖L̄ V_S‖` over an orthonormal basis of the affine-image subspace.
    pub kernel_mismatch: f64,
    pub passed: bool,
}

pub fn validate_stress(
    graph: &FrameworkGraph,
    shape: &ReferenceShape,
    stress: &StressWeights,
    basis: &AffineSubspaceBasis,
) -> StressCertificate {
    let m = shape.dimension();
    let n = shape.agent_count();
    let eig = stress.eigenvalues();
    let scale = eig.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let max_equilibrium_residual =
        equilibrium_residual(graph, shape, stress.weights()).into_iter().fold(0.0, f64::max);
    let min_eigenvalue = eig[0];
    let kernel_eigen_max = eig.rows(0, m + 1).amax();
    let gap_eigenvalue = eig[m + 1];
    let rank = eig.iter().filter(|v| v.abs() > GAP_TOL * scale).count();
    let kernel_mismatch = (lift(stress.laplacian(), m) * basis.basis()).abs().max();
    let expected_rank = n - m - 1;
    let passed = max_equilibrium_residual < EQUILIBRIUM_TOL * scale
        && min_eigenvalue > -PSD_TOL * scale
        && kernel_eigen_max < KERNEL_EIGEN_TOL * scale
        && gap_eigenvalue > GAP_TOL * scale
        && rank == expected_rank
        && kernel_mismatch < KERNEL_MISMATCH_TOL * scale;
    StressCertificate {
        max_equilibrium_residual,
        min_eigenvalue,
        kernel_eigen_max,
        gap_eigenvalue,
        rank,
        expected_rank,
        kernel_mismatch,
        passed,
    }
}
