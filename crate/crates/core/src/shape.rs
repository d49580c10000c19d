//! Reference shapes and the subspace of their affine images.
//!
//! Configurations are stacked agent-major: coordinate `d` of agent `i` sits at
//! index `i * m + d`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::gram_schmidt;

/// Relative singular-value threshold used for the genericity test and the
/// basis orthonormalisation.
pub const GENERICITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("{n} agents in dimension {m}: need at least {} agents", m + 2)]
    TooFewAgents { n: usize, m: usize },
    #[error("degenerate shape: affine span is deficient (sigma_min / sigma_max = {ratio:.3e})")]
    DegenerateShape { ratio: f64 },
    #[error("agent {agent} has {got} coordinates, expected {expected}")]
    DimensionMismatch { agent: usize, got: usize, expected: usize },
    #[error("affine-image basis is rank deficient at generator {0}")]
    RankDeficient(usize),
    #[error("dimension must be positive")]
    ZeroDimension,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceShape {
    m: usize,
    stacked: DVector<f64>,
}

impl ReferenceShape {
    /// Centers raw positions at the origin and checks size and genericity.
    pub fn centered(m: usize, raw: &[Vec<f64>]) -> Result<Self, ShapeError> {
        if m == 0 {
            return Err(ShapeError::ZeroDimension);
        }
        let n = raw.len();
        if n < m + 2 {
            return Err(ShapeError::TooFewAgents { n, m });
        }
        for (i, p) in raw.iter().enumerate() {
            if p.len() != m {
                return Err(ShapeError::DimensionMismatch { agent: i + 1, got: p.len(), expected: m });
            }
        }
        let mut centroid = vec![0.0; m];
        for p in raw {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }
        let stacked = DVector::from_iterator(
            n * m,
            raw.iter().flat_map(|p| p.iter().zip(&centroid).map(|(x, c)| x - c)),
        );
        let shape = Self { m, stacked };
        shape.check_generic()?;
        Ok(shape)
    }

    /// The eight-agent shape used by the figure presets.
    pub fn paper8() -> Self {
        let raw: Vec<Vec<f64>> = crate::presets::PAPER8_POSITIONS.iter().map(|p| p.to_vec()).collect();
        Self::centered(2, &raw).expect("preset shape is generic")
    }

    fn check_generic(&self) -> Result<(), ShapeError> {
        let aug = self.augmented();
        let sv = aug.singular_values();
        let max = sv.max();
        let min = sv.min();
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if sv.len() < self.m + 1 || ratio <= GENERICITY_TOL {
            return Err(ShapeError::DegenerateShape { ratio });
        }
        Ok(())
    }

    /// `(m+1) x n` matrix whose columns are `[p_i; 1]`.
    fn augmented(&self) -> DMatrix<f64> {
        let n = self.agent_count();
        DMatrix::from_fn(self.m + 1, n, |r, i| if r < self.m { self.stacked[i * self.m + r] } else { 1.0 })
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    pub fn agent_count(&self) -> usize {
        self.stacked.len() / self.m
    }

    /// Stacked reference configuration `p*`.
    pub fn stacked(&self) -> &DVector<f64> {
        &self.stacked
    }

    pub fn position(&self, i: usize) -> DVector<f64> {
        self.stacked.rows(i * self.m, self.m).into_owned()
    }

    /// `n x m` matrix with one agent per row.
    pub fn coordinate_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.agent_count(), self.m, |i, d| self.stacked[i * self.m + d])
    }

    /// `(I_n ⊗ A) p* + 1_n ⊗ b`.
    pub fn affine_image(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        apply_affine(&self.stacked, self.m, a, b)
    }
}

/// Applies `x_i ↦ A x_i + b` to every agent of a stacked configuration.
pub fn apply_affine(p: &DVector<f64>, m: usize, a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = p.len() / m;
    let mut out = DVector::zeros(p.len());
    for i in 0..n {
        let xi = a * p.rows(i * m, m) + b;
        out.rows_mut(i * m, m).copy_from(&xi);
    }
    out
}

/// Mean position of a stacked configuration.
pub fn centroid(p: &DVector<f64>, m: usize) -> DVector<f64> {
    let n = p.len() / m;
    let mut c = DVector::zeros(m);
    for i in 0..n {
        c += p.rows(i * m, m);
    }
    c / n as f64
}

/// Orthonormal basis of the affine-image subspace `S` and its projectors.
#[derive(Debug, Clone)]
pub struct AffineSubspaceBasis {
    m: usize,
    basis: DMatrix<f64>,
    projector: DMatrix<f64>,
}

impl AffineSubspaceBasis {
    /// Orthonormalises `(I ⊗ E_kl) p*` for `k, l` in row-major order, then the
    /// translations `1 ⊗ e_k`.
    pub fn new(shape: &ReferenceShape) -> Result<Self, ShapeError> {
        let m = shape.dimension();
        let n = shape.agent_count();
        let p = shape.stacked();
        let mut columns = Vec::with_capacity(m * m + m);
        for k in 0..m {
            for l in 0..m {
                let mut v = DVector::zeros(n * m);
                for i in 0..n {
                    v[i * m + k] = p[i * m + l];
                }
                columns.push(v);
            }
        }
        for k in 0..m {
            let mut v = DVector::zeros(n * m);
            for i in 0..n {
                v[i * m + k] = 1.0;
            }
            columns.push(v);
        }
        let basis = gram_schmidt(&columns, GENERICITY_TOL).map_err(ShapeError::RankDeficient)?;
        let projector = &basis * basis.transpose();
        Ok(Self { m, basis, projector })
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn shape_dimension(&self) -> usize {
        self.m
    }

    /// Orthonormal columns spanning `S`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `P_S`.
    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// `P_S⊥ = I - P_S`.
    pub fn complement_projector(&self) -> DMatrix<f64> {
        DMatrix::identity(self.projector.nrows(), self.projector.ncols()) - &self.projector
    }

    /// Splits `p` into its component in `S` and the orthogonal remainder.
    pub fn decompose(&self, p: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let parallel = &self.basis * (self.basis.transpose() * p);
        let perp = p - &parallel;
        (parallel, perp)
    }

    /// `‖P_S⊥ p‖`.
    pub fn perp_norm(&self, p: &DVector<f64>) -> f64 {
        self.decompose(p).1.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> ReferenceShape {
        let raw = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        ReferenceShape::centered(2, &raw).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn paper8_is_already_centered() {
        let s = ReferenceShape::paper8();
        let expected = [-1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 0.0, 1.0, -1.0, 0.0, -1.0, -1.0, -1.0, -2.0, 0.0];
        assert_eq!(s.stacked().as_slice(), &expected);
    }

    #[test]
    fn unit_square_centers_to_half_offsets() {
        let s = unit_square();
        for x in s.stacked().iter() {
            assert_relative_eq!(x.abs(), 0.5, epsilon = 1e-15);
        }
        assert_relative_eq!(centroid(s.stacked(), 2).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_collinear_and_small_shapes() {
        let line: Vec<Vec<f64>> = (0..4).map(|k| vec![k as f64, 2.0 * k as f64]).collect();
        assert!(matches!(ReferenceShape::centered(2, &line), Err(ShapeError::DegenerateShape { .. })));
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(ReferenceShape::centered(2, &tri), Err(ShapeError::TooFewAgents { n: 3, m: 2 }));
        // Coplanar points in 3D.
        let flat = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![2.0, 3.0, 0.0],
        ];
        assert!(matches!(ReferenceShape::centered(3, &flat), Err(ShapeError::DegenerateShape { .. })));
    }

    #[test]
    fn affine_image_examples() {
        let s = unit_square();
        let zero = DVector::zeros(2);
        assert_eq!(s.affine_image(&DMatrix::identity(2, 2), &zero), *s.stacked());
        let doubled = s.affine_image(&(DMatrix::identity(2, 2) * 2.0), &zero);
        assert_eq!(doubled, s.stacked() * 2.0);

        // Rotation by π/2 sends (2, 0) to (0, 2).
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let img = ReferenceShape::paper8().affine_image(&rot, &zero);
        assert_eq!(img.rows(6, 2).as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn basis_dimensions() {
        assert_eq!(AffineSubspaceBasis::new(&ReferenceShape::paper8()).unwrap().dimension(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let s3 = ReferenceShape::centered(3, &raw).unwrap();
        assert_eq!(AffineSubspaceBasis::new(&s3).unwrap().dimension(), 12);
        let sq = AffineSubspaceBasis::new(&unit_square()).unwrap();
        assert_relative_eq!(sq.projector().trace(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn projector_is_idempotent_and_symmetric() {
        let b = AffineSubspaceBasis::new(&ReferenceShape::paper8()).unwrap();
        let p = b.projector();
        assert!((p * p - p).amax() < 1e-12);
        assert_eq!(*p, p.transpose());
        let sum = p + b.complement_projector();
        assert!((sum - DMatrix::identity(16, 16)).amax() < 1e-15);
    }

    #[test]
    fn decompose_examples() {
        let shape = ReferenceShape::paper8();
        let b = AffineSubspaceBasis::new(&shape).unwrap();
        let (par, perp) = b.decompose(shape.stacked());
        assert!(perp.norm() < 1e-12);
        assert!((par - shape.stacked()).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 2, 2);
        let t = random_matrix(&mut rng, 2, 1).column(0).into_owned();
        assert!(b.perp_norm(&shape.affine_image(&a, &t)) < 1e-10);

        // Orthogonalise a random vector against the basis by hand.
        let mut v = DVector::from_fn(16, |_, _| rng.random_range(-1.0..1.0));
        for col in b.basis().column_iter() {
            let c = col.dot(&v);
            v -= col * c;
        }
        v /= v.norm();
        let (par, perp) = b.decompose(&(shape.stacked() + &v));
        assert_relative_eq!(perp.norm(), 1.0, epsilon = 1e-12);
        assert!(par.dot(&perp).abs() < 1e-12);
    }

    #[test]
    fn decompose_is_linear() {
        let b = AffineSubspaceBasis::new(&ReferenceShape::paper8()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p = DVector::from_fn(16, |_, _| rng.random_range(-2.0..2.0));
            let q = DVector::from_fn(16, |_, _| rng.random_range(-2.0..2.0));
            let (alpha, beta) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let (pp, pq) = (b.decompose(&p), b.decompose(&q));
            let combo = b.decompose(&(&p * alpha + &q * beta));
            assert!((combo.0 - (&pp.0 * alpha + &pq.0 * beta)).amax() < 1e-12);
            assert!((combo.1 - (&pp.1 * alpha + &pq.1 * beta)).amax() < 1e-12);
        }
    }
}
