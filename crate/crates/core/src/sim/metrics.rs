use nalgebra::DVector;

use super::{ClosedLoop, Trajectory};
use crate::shape::{centroid, AffineSubspaceBasis};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub t: f64,
    /// `‖P_S⊥ p‖`.
    pub perp_residual: f64,
    /// `‖ṗ - κ M̄B̄ᵀ p‖`, with `ṗ` the evaluated right-hand side.
    pub vel_error: f64,
    /// `‖ṗ‖`.
    pub speed: f64,
    pub centroid: DVector<f64>,
    /// `‖P_S p - 1 ⊗ centroid(P_S p)‖`.
    pub scale: f64,
    pub agent_speeds: Vec<f64>,
}

/// Metrics for every stored sample.
pub fn metrics(traj: &Trajectory, basis: &AffineSubspaceBasis, system: &ClosedLoop) -> Vec<MetricSample> {
    let m = traj.m;
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, p)| {
            let rate = system.rhs(t, p);
            let drift = system.drift(t, p);
            let (parallel, perp) = basis.decompose(p);
            let c_par = centroid(&parallel, m);
            let n = p.len() / m;
            let scale = (0..n)
                .map(|i| (parallel.rows(i * m, m) - &c_par).norm_squared())
                .sum::<f64>()
                .sqrt();
            MetricSample {
                t,
                perp_residual: perp.norm(),
                vel_error: (&rate - drift).norm(),
                speed: rate.norm(),
                centroid: centroid(p, m),
                scale,
                agent_speeds: (0..n).map(|i| rate.rows(i * m, m).norm()).collect(),
            }
        })
        .collect()
}

/// `Σ_i (p_i - c) × ṗ_i` for planar formations.
pub fn angular_momentum(p: &DVector<f64>, rate: &DVector<f64>) -> f64 {
    let c = centroid(p, 2);
    (0..p.len() / 2)
        .map(|i| {
            let (x, y) = (p[2 * i] - c[0], p[2 * i + 1] - c[1]);
            x * rate[2 * i + 1] - y * rate[2 * i]
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(t, ln y)`.
pub fn fit_log_linear(ts: &[f64], ys: &[f64]) -> LogLinearFit {
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let ml = logs.iter().sum::<f64>() / n;
    let sxy: f64 = ts.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ml - slope * mt;
    let ss_res: f64 = ts.iter().zip(&logs).map(|(t, l)| (l - intercept - slope * t).powi(2)).sum();
    let ss_tot: f64 = logs.iter().map(|l| (l - ml).powi(2)).sum();
    LogLinearFit { slope, intercept, r_squared: 1.0 - ss_res / ss_tot }
}
