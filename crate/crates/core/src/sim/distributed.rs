//! Synchronous-round simulation where every agent only sees relative
//! positions of its neighbors.
//!
//! Each integrator stage is one communication round: all agents publish their
//! stage position, then each agent reads the snapshot, forms `z_ij` and applies
//! its local law. Rounds are numbered from 0 across the whole run.

use nalgebra::DVector;

use super::{should_sample, ClosedLoop, Integrator, SimConfig, SimError, Trajectory};
use crate::graph::FrameworkGraph;

/// Agent `agent` (0-based) stops publishing from round `from_round` on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dropout {
    pub agent: usize,
    pub from_round: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistributedOptions {
    pub dropout: Option<Dropout>,
}

struct Agent {
    id: usize,
    neighbors: Vec<usize>,
    position: Vec<f64>,
    stage_position: Vec<f64>,
    slopes: Vec<Vec<f64>>,
    relative: Vec<Vec<f64>>,
}

impl Agent {
    fn new(id: usize, neighbors: Vec<usize>, position: Vec<f64>, stages: usize) -> Self {
        let m = position.len();
        Self {
            id,
            relative: vec![vec![0.0; m]; neighbors.len()],
            neighbors,
            stage_position: position.clone(),
            slopes: vec![vec![0.0; m]; stages],
            position,
        }
    }

    /// Position to publish for `stage` of the current step.
    fn prepare(&mut self, integrator: Integrator, stage: usize, dt: f64) {
        let factor = match (integrator, stage) {
            (_, 0) => None,
            (Integrator::Rk4, 1 | 2) => Some(dt / 2.0),
            (Integrator::Rk4, _) => Some(dt),
            (Integrator::Euler, _) => unreachable!("euler has one stage"),
        };
        for d in 0..self.position.len() {
            self.stage_position[d] = match factor {
                None => self.position[d],
                Some(f) => self.position[d] + f * self.slopes[stage - 1][d],
            };
        }
    }

    fn advance(&mut self, integrator: Integrator, dt: f64) {
        for d in 0..self.position.len() {
            let incr = match integrator {
                Integrator::Euler => self.slopes[0][d],
                Integrator::Rk4 => {
                    (self.slopes[0][d] + 2.0 * self.slopes[1][d] + 2.0 * self.slopes[2][d] + self.slopes[3][d]) / 6.0
                }
            };
            self.position[d] += dt * incr;
        }
    }
}

fn stack(agents: &[Agent], m: usize) -> DVector<f64> {
    DVector::from_iterator(agents.len() * m, agents.iter().flat_map(|a| a.position.iter().copied()))
}

/// Runs the per-agent law; must match `run_centralized` to round-off.
pub fn run_distributed(
    cfg: &SimConfig,
    system: &ClosedLoop,
    graph: &FrameworkGraph,
    options: &DistributedOptions,
) -> Result<Trajectory, SimError> {
    cfg.check(system)?;
    let m = system.dimension();
    let n = graph.node_count();
    let stages = cfg.integrator.stages();
    let total = cfg.step_count();
    let dt = cfg.dt;

    let mut agents: Vec<Agent> = (0..n)
        .map(|i| {
            let pos = cfg.initial.rows(i * m, m).iter().copied().collect();
            Agent::new(i, graph.neighbors(i).to_vec(), pos, stages)
        })
        .collect();
    let mut board: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut traj = Trajectory::new(m);
    traj.push(0.0, &stack(&agents, m));
    let mut round = 0usize;

    for step in 0..total {
        let t = step as f64 * dt;
        let weights = system.weights_at(t);
        for stage in 0..stages {
            for agent in agents.iter_mut() {
                agent.prepare(cfg.integrator, stage, dt);
            }
            // round barrier: the board is a snapshot of every published position
            for (slot, agent) in board.iter_mut().zip(&agents) {
                let silent = options.dropout.is_some_and(|d| d.agent == agent.id && round >= d.from_round);
                *slot = if silent { None } else { Some(agent.stage_position.clone()) };
            }
            for agent in agents.iter_mut() {
                let mut received = Vec::with_capacity(agent.neighbors.len());
                for (k, &j) in agent.neighbors.iter().enumerate() {
                    match &board[j] {
                        Some(q) => {
                            for d in 0..m {
                                agent.relative[k][d] = agent.stage_position[d] - q[d];
                            }
                            received.push(true);
                        }
                        None => received.push(false),
                    }
                }
                let refs: Vec<Option<&[f64]>> = agent
                    .relative
                    .iter()
                    .zip(&received)
                    .map(|(z, &ok)| ok.then_some(z.as_slice()))
                    .collect();
                let mut u = vec![0.0; m];
                weights
                    .control_input(agent.id, &refs, &mut u)
                    .map_err(|source| SimError::MissingMeasurement { round, source })?;
                agent.slopes[stage] = u;
            }
            round += 1;
        }
        for agent in agents.iter_mut() {
            agent.advance(cfg.integrator, dt);
        }
        if should_sample(step + 1, total, cfg.sample_every) {
            traj.push((step + 1) as f64 * dt, &stack(&agents, m));
        }
    }
    Ok(traj)
}
