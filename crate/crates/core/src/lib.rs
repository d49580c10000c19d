//! Affine formation maneuvering by modified Laplacian weights.
//!
//! Agents with single-integrator dynamics run the local law
//! `u_i = -h Σ_j w̃_ij (p_i - p_j)` with `w̃_ij = w_ij - (κ/h) μ_ij`, where `w`
//! is a stress on the reference shape and `μ` realises a chosen affine
//! velocity field. The formation converges to the set of affine images of the
//! reference shape while moving with that velocity field.
//!
//! Pipeline: [`graph`] → [`shape`] → [`stress`] → [`motion`] → [`control`] → [`sim`],
//! driven from files by [`scenario`] and [`pipeline`].

pub mod control;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod motion;
pub mod pipeline;
pub mod presets;
pub mod scenario;
pub mod shape;
pub mod sim;
pub mod stress;

use thiserror::Error;

/// Any pipeline failure, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph: {0}")]
    Graph(#[from] graph::GraphError),
    #[error("shape: {0}")]
    Shape(#[from] shape::ShapeError),
    #[error("stress: {0}")]
    Stress(#[from] stress::StressError),
    #[error("motion: {0}")]
    Motion(#[from] motion::MotionError),
    #[error("control: {0}")]
    Control(#[from] control::ControlError),
    #[error("sim: {0}")]
    Sim(#[from] sim::SimError),
    #[error("scenario: {0}")]
    Scenario(#[from] scenario::ScenarioError),
    #[error("io: {0}")]
    Io(#[from] io::IoError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
