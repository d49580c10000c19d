//! Motion parameters `μ_ij` that realise an affine velocity field on the
//! reference shape, the matrix `M` built from them, and combinations of
//! unit generators.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::FrameworkGraph;
use crate::linalg::lift;
use crate::shape::{apply_affine, ReferenceShape};

pub const MOTION_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("agent {agent}: desired velocity not reachable from neighbor geometry (residual {residual:.3e})")]
    InfeasibleAgent { agent: usize, residual: f64 },
    #[error("velocity field has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("{kind} coordinates: got {got}, expected {expected}")]
    CoordinateCount { kind: &'static str, got: usize, expected: usize },
}

/// Affine velocity field `x ↦ G x + v`, expressed in the centroid frame of `p*`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityTensor {
    pub linear: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl VelocityTensor {
    pub fn new(linear: DMatrix<f64>, translation: DVector<f64>) -> Self {
        Self { linear, translation }
    }

    pub fn zero(m: usize) -> Self {
        Self::new(DMatrix::zeros(m, m), DVector::zeros(m))
    }

    /// Unit speed along axis `k`.
    pub fn translation(m: usize, k: usize) -> Self {
        let mut v = DVector::zeros(m);
        v[k] = 1.0;
        Self::new(DMatrix::zeros(m, m), v)
    }

    /// 1 rad/s spin in the `(k, l)` coordinate plane, `k < l`, positive from
    /// axis `k` towards axis `l`.
    pub fn rotation(m: usize, k: usize, l: usize) -> Self {
        let mut w = DMatrix::zeros(m, m);
        w[(l, k)] = 1.0;
        w[(k, l)] = -1.0;
        Self::new(w, DVector::zeros(m))
    }

    /// One current size per second.
    pub fn scaling(m: usize) -> Self {
        Self::new(DMatrix::identity(m, m), DVector::zeros(m))
    }

    /// Velocity along axis `k` proportional to coordinate `l` (`k != l`).
    pub fn shearing(m: usize, k: usize, l: usize) -> Self {
        let mut s = DMatrix::zeros(m, m);
        s[(k, l)] = 1.0;
        Self::new(s, DVector::zeros(m))
    }

    /// Coordinate planes `(k, l)`, `k < l`, in lexicographic order.
    pub fn rotation_planes(m: usize) -> Vec<(usize, usize)> {
        (0..m).flat_map(|k| (k + 1..m).map(move |l| (k, l))).collect()
    }

    /// Ordered off-diagonal pairs `(k, l)`; in 2D this is `[(0,1), (1,0)]`,
    /// horizontal then vertical shearing.
    pub fn shear_pairs(m: usize) -> Vec<(usize, usize)> {
        (0..m).flat_map(|k| (0..m).filter(move |&l| l != k).map(move |l| (k, l))).collect()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self::new(&self.linear * alpha, &self.translation * alpha)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.linear + &other.linear, &self.translation + &other.translation)
    }
}

/// Stacked desired velocities `v_i* = G p_i* + v`.
pub fn velocity_field(shape: &ReferenceShape, tensor: &VelocityTensor) -> DVector<f64> {
    apply_affine(shape.stacked(), shape.dimension(), &tensor.linear, &tensor.translation)
}

/// Directed motion parameters. `values[i][k]` is `μ_{i, neighbors(i)[k]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionParams {
    neighbors: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
}

impl MotionParams {
    pub fn zero(graph: &FrameworkGraph) -> Self {
        let neighbors: Vec<Vec<usize>> =
            (0..graph.node_count()).map(|i| graph.neighbors(i).to_vec()).collect();
        let values = neighbors.iter().map(|n| vec![0.0; n.len()]).collect();
        Self { neighbors, values }
    }

    /// `μ_ij` (0-based), zero when `j` is not a neighbor of `i`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.neighbors[i].iter().position(|&x| x == j).map_or(0.0, |k| self.values[i][k])
    }

    /// Parameters of agent `i`, aligned with its sorted neighbor list.
    pub fn agent(&self, i: usize) -> (&[usize], &[f64]) {
        (&self.neighbors[i], &self.values[i])
    }

    /// Rows `(i, j, μ_ij)` with 1-based indices, both directions.
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        self.neighbors
            .iter()
            .zip(&self.values)
            .enumerate()
            .flat_map(|(i, (nbrs, vals))| nbrs.iter().zip(vals).map(move |(&j, &mu)| (i + 1, j + 1, mu)))
            .collect()
    }

    /// Entrywise `alpha * self + beta * other`; both must share the graph.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        debug_assert_eq!(self.neighbors, other.neighbors);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect())
            .collect();
        Self { neighbors: self.neighbors.clone(), values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Minimum-norm `μ_ij` with `Σ_j μ_ij z_ij* = v_i*` for every agent.
pub fn solve_motion_params(
    graph: &FrameworkGraph,
    shape: &ReferenceShape,
    velocities: &DVector<f64>,
) -> Result<MotionParams, MotionError> {
    let m = shape.dimension();
    let n = graph.node_count();
    if velocities.len() != n * m {
        return Err(MotionError::LengthMismatch { got: velocities.len(), expected: n * m });
    }
    let mut params = MotionParams::zero(graph);
    for i in 0..n {
        let nbrs = graph.neighbors(i);
        let pi = shape.position(i);
        let z = DMatrix::from_columns(&nbrs.iter().map(|&j| &pi - shape.position(j)).collect::<Vec<_>>());
        let target = velocities.rows(i * m, m).into_owned();
        let mu = min_norm_solve(&z, &target);
        let residual = (&z * &mu - &target).norm();
        if residual > MOTION_RESIDUAL_TOL * target.norm().max(1.0) {
            return Err(MotionError::InfeasibleAgent { agent: i + 1, residual });
        }
        params.values[i] = mu.iter().copied().collect();
    }
    Ok(params)
}

/// Least-squares solution of minimum norm via the SVD of the `m x d` system.
fn min_norm_solve(z: &DMatrix<f64>, target: &DVector<f64>) -> DVector<f64> {
    let svd = z.clone().svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    svd.solve(target, cutoff).expect("both singular bases computed")
}

/// `M` (`n x |Z|`) from directed parameters.
pub fn assemble_motion_matrix(graph: &FrameworkGraph, params: &MotionParams) -> DMatrix<f64> {
    let mut mat = DMatrix::zeros(graph.node_count(), graph.edge_count());
    for (k, e) in graph.edges().iter().enumerate() {
        mat[(e.tail, k)] = params.get(e.tail, e.head);
        mat[(e.head, k)] = -params.get(e.head, e.tail);
    }
    mat
}

/// `M̄ B̄ᵀ`, the stacked operator with `(M̄ B̄ᵀ p)_i = Σ_j μ_ij (p_i - p_j)`.
pub fn motion_operator(graph: &FrameworkGraph, params: &MotionParams, m: usize) -> DMatrix<f64> {
    let mbt = assemble_motion_matrix(graph, params) * graph.incidence_matrix().matrix().transpose();
    lift(&mbt, m)
}

/// Coordinates of a motion in the generator set: translations per axis,
/// rotations per coordinate plane, one scaling, shearings per ordered
/// off-diagonal pair, plus an optional raw velocity tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionCoordinates {
    pub translations: Vec<f64>,
    pub rotations: Vec<f64>,
    pub scaling: f64,
    pub shears: Vec<f64>,
    pub raw: Option<VelocityTensor>,
}

impl MotionCoordinates {
    pub fn zero(m: usize) -> Self {
        Self {
            translations: vec![0.0; m],
            rotations: vec![0.0; m * (m - 1) / 2],
            scaling: 0.0,
            shears: vec![0.0; m * (m - 1)],
            raw: None,
        }
    }

    pub fn check(&self, m: usize) -> Result<(), MotionError> {
        let counts = [
            ("translation", self.translations.len(), m),
            ("rotation", self.rotations.len(), m * (m - 1) / 2),
            ("shear", self.shears.len(), m * (m - 1)),
        ];
        for (kind, got, expected) in counts {
            if got != expected {
                return Err(MotionError::CoordinateCount { kind, got, expected });
            }
        }
        Ok(())
    }

    /// The velocity tensor these coordinates describe.
    pub fn tensor(&self, m: usize) -> VelocityTensor {
        let mut total = self.raw.clone().unwrap_or_else(|| VelocityTensor::zero(m));
        for (k, c) in self.translations.iter().enumerate() {
            total = total.add(&VelocityTensor::translation(m, k).scaled(*c));
        }
        for ((k, l), c) in VelocityTensor::rotation_planes(m).into_iter().zip(&self.rotations) {
            total = total.add(&VelocityTensor::rotation(m, k, l).scaled(*c));
        }
        total = total.add(&VelocityTensor::scaling(m).scaled(self.scaling));
        for ((k, l), c) in VelocityTensor::shear_pairs(m).into_iter().zip(&self.shears) {
            total = total.add(&VelocityTensor::shearing(m, k, l).scaled(*c));
        }
        total
    }
}

/// Precomputed parameters for every unit generator on one framework.
#[derive(Debug, Clone)]
pub struct MotionBasis {
    m: usize,
    translations: Vec<MotionParams>,
    rotations: Vec<MotionParams>,
    scaling: MotionParams,
    shears: Vec<MotionParams>,
}

impl MotionBasis {
    pub fn new(graph: &FrameworkGraph, shape: &ReferenceShape) -> Result<Self, MotionError> {
        let m = shape.dimension();
        let solve = |t: VelocityTensor| solve_motion_params(graph, shape, &velocity_field(shape, &t));
        Ok(Self {
            m,
            translations: (0..m).map(|k| solve(VelocityTensor::translation(m, k))).collect::<Result<_, _>>()?,
            rotations: VelocityTensor::rotation_planes(m)
                .into_iter()
                .map(|(k, l)| solve(VelocityTensor::rotation(m, k, l)))
                .collect::<Result<_, _>>()?,
            scaling: solve(VelocityTensor::scaling(m))?,
            shears: VelocityTensor::shear_pairs(m)
                .into_iter()
                .map(|(k, l)| solve(VelocityTensor::shearing(m, k, l)))
                .collect::<Result<_, _>>()?,
        })
    }

    /// `Σ κ_* μ_*` over the generators. A raw tensor, if present, is solved
    /// directly and added.
    pub fn combine(
        &self,
        graph: &FrameworkGraph,
        shape: &ReferenceShape,
        coords: &MotionCoordinates,
    ) -> Result<MotionParams, MotionError> {
        coords.check(self.m)?;
        let mut total = match &coords.raw {
            Some(t) => solve_motion_params(graph, shape, &velocity_field(shape, t))?,
            None => MotionParams::zero(graph),
        };
        let pairs = self
            .translations
            .iter()
            .zip(&coords.translations)
            .chain(self.rotations.iter().zip(&coords.rotations))
            .chain(std::iter::once((&self.scaling, &coords.scaling)))
            .chain(self.shears.iter().zip(&coords.shears));
        for (params, &kappa) in pairs {
            if kappa != 0.0 {
                total = total.combine(1.0, params, kappa);
            }
        }
        Ok(total)
    }
}

/// `‖M̄B̄ᵀ((I ⊗ A)p* + 1 ⊗ b) - (I ⊗ A) v_f*‖`.
pub fn equivariance_residual(
    operator: &DMatrix<f64>,
    shape: &ReferenceShape,
    velocities: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> f64 {
    let m = shape.dimension();
    let lhs = operator * shape.affine_image(a, b);
    let rhs = apply_affine(velocities, m, a, &DVector::zeros(m));
    (lhs - rhs).norm()
}
