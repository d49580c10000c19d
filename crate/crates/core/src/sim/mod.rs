//! Closed-loop integration, centralized and per-agent, plus convergence metrics.

mod distributed;
mod metrics;

pub use distributed::{run_distributed, Dropout, DistributedOptions};
pub use metrics::{angular_momentum, fit_log_linear, metrics, LogLinearFit, MetricSample};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::control::{ControlError, ModifiedWeights};
use crate::graph::FrameworkGraph;
use crate::linalg::{lift, sorted_eigenvalues};
use crate::motion::{motion_operator, MotionParams};
use crate::stress::StressWeights;

/// Explicit steps must satisfy `dt ≤ STEP_GUARD / (h λ_max(L))`.
pub const STEP_GUARD: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("time step {dt} exceeds the explicit-integration guard {limit:.4e}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("round {round}: {source}")]
    MissingMeasurement { round: usize, source: ControlError },
    #[error(transparent)]
    Control(#[from] ControlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

impl Integrator {
    fn stages(self) -> usize {
        match self {
            Integrator::Rk4 => 4,
            Integrator::Euler => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub initial: DVector<f64>,
    /// Store every `sample_every`-th step (the final step is always stored).
    pub sample_every: usize,
}

impl SimConfig {
    pub fn new(initial: DVector<f64>, t_end: f64) -> Self {
        Self { dt: 1e-3, t_end, integrator: Integrator::Rk4, initial, sample_every: 1 }
    }

    pub fn step_count(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    fn check(&self, system: &ClosedLoop) -> Result<(), SimError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SimError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(SimError::InvalidConfig(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(SimError::InvalidConfig("sample_every must be at least 1".into()));
        }
        if self.initial.len() != system.state_len() {
            return Err(SimError::InvalidConfig(format!(
                "initial configuration has {} entries, expected {}",
                self.initial.len(),
                system.state_len()
            )));
        }
        let limit = system.step_limit();
        if self.dt > limit {
            return Err(SimError::StepTooLarge { dt: self.dt, limit });
        }
        Ok(())
    }
}

/// A motion that takes effect from `start` onwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub start: f64,
    pub params: MotionParams,
}

#[derive(Debug, Clone)]
struct PhaseData {
    start: f64,
    operator: DMatrix<f64>,
    system: DMatrix<f64>,
    weights: ModifiedWeights,
}

/// `ṗ = -h L̄ p + κ M̄B̄ᵀ p` with a piecewise-constant motion schedule.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    m: usize,
    h: f64,
    kappa: f64,
    lambda_max: f64,
    lbar: DMatrix<f64>,
    phases: Vec<PhaseData>,
}

impl ClosedLoop {
    pub fn new(
        graph: &FrameworkGraph,
        stress: &StressWeights,
        m: usize,
        mut phases: Vec<Phase>,
        h: f64,
        kappa: f64,
    ) -> Result<Self, SimError> {
        if !(h > 0.0) {
            return Err(ControlError::NonpositiveGain(h).into());
        }
        if phases.is_empty() {
            return Err(SimError::InvalidConfig("motion schedule is empty".into()));
        }
        phases.sort_by(|a, b| a.start.total_cmp(&b.start));
        if phases[0].start > 0.0 {
            return Err(SimError::InvalidConfig("first motion phase must start at t = 0".into()));
        }
        let lbar = lift(stress.laplacian(), m);
        let lambda_max = sorted_eigenvalues(stress.laplacian()).max();
        let phases = phases
            .into_iter()
            .map(|ph| {
                let operator = motion_operator(graph, &ph.params, m);
                let system = &lbar * -h + &operator * kappa;
                let weights = ModifiedWeights::new(graph, stress, &ph.params, kappa, h)?;
                Ok(PhaseData { start: ph.start, operator, system, weights })
            })
            .collect::<Result<Vec<_>, ControlError>>()?;
        Ok(Self { m, h, kappa, lambda_max, lbar, phases })
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    pub fn state_len(&self) -> usize {
        self.lbar.nrows()
    }

    pub fn gain(&self) -> f64 {
        self.h
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Largest `dt` the stability guard admits.
    pub fn step_limit(&self) -> f64 {
        if self.lambda_max <= 0.0 {
            f64::INFINITY
        } else {
            STEP_GUARD / (self.h * self.lambda_max)
        }
    }

    fn phase_index(&self, t: f64) -> usize {
        let tol = 1e-9;
        self.phases.iter().rposition(|ph| ph.start <= t + tol).unwrap_or(0)
    }

    /// `M̄B̄ᵀ` of the phase active at `t`.
    pub fn operator_at(&self, t: f64) -> &DMatrix<f64> {
        &self.phases[self.phase_index(t)].operator
    }

    pub fn weights_at(&self, t: f64) -> &ModifiedWeights {
        &self.phases[self.phase_index(t)].weights
    }

    fn system_at(&self, t: f64) -> &DMatrix<f64> {
        &self.phases[self.phase_index(t)].system
    }

    /// Right-hand side of the closed loop.
    pub fn rhs(&self, t: f64, p: &DVector<f64>) -> DVector<f64> {
        self.system_at(t) * p
    }

    /// `κ M̄B̄ᵀ p`, the motion the formation settles into.
    pub fn drift(&self, t: f64, p: &DVector<f64>) -> DVector<f64> {
        self.operator_at(t) * p * self.kappa
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub m: usize,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    fn new(m: usize) -> Self {
        Self { m, times: Vec::new(), states: Vec::new() }
    }

    fn push(&mut self, t: f64, p: &DVector<f64>) {
        self.times.push(t);
        self.states.push(p.clone());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.states.first().map_or(0, |p| p.len() / self.m)
    }

    pub fn last(&self) -> Option<(f64, &DVector<f64>)> {
        self.times.last().copied().zip(self.states.last())
    }

    /// Largest per-entry difference against another trajectory with the same samples.
    pub fn max_deviation(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }
}

fn should_sample(step: usize, total: usize, every: usize) -> bool {
    step % every == 0 || step == total
}

/// Integrates the closed loop as a single stacked system.
pub fn run_centralized(cfg: &SimConfig, system: &ClosedLoop) -> Result<Trajectory, SimError> {
    cfg.check(system)?;
    let total = cfg.step_count();
    let dt = cfg.dt;
    let mut traj = Trajectory::new(system.dimension());
    let mut p = cfg.initial.clone();
    traj.push(0.0, &p);
    for step in 0..total {
        let t = step as f64 * dt;
        let a = system.system_at(t);
        p = match cfg.integrator {
            Integrator::Euler => {
                let k1 = a * &p;
                &p + k1 * dt
            }
            Integrator::Rk4 => {
                let k1 = a * &p;
                let k2 = a * (&p + &k1 * (dt / 2.0));
                let k3 = a * (&p + &k2 * (dt / 2.0));
                let k4 = a * (&p + &k3 * dt);
                &p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
            }
        };
        if should_sample(step + 1, total, cfg.sample_every) {
            traj.push((step + 1) as f64 * dt, &p);
        }
    }
    Ok(traj)
}
