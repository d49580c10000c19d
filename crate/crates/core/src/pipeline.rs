//! Scenario → stress → motion → gain certificate → simulation → files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{stability_bound, GainCertificate};
use crate::graph::FrameworkGraph;
use crate::io;
use crate::motion::{motion_operator, MotionBasis};
use crate::scenario::{GainSetting, InitialCondition, Scenario};
use crate::shape::{AffineSubspaceBasis, ReferenceShape};
use crate::sim::{self, metrics, ClosedLoop, DistributedOptions, MetricSample, Phase, SimConfig, Trajectory};
use crate::stress::{compute_stress_weights_with_summary, validate_stress, StressCertificate, StressWeights};
use crate::Result;

/// Gain used by `h = "auto"` when every phase certifies any positive gain.
pub const FALLBACK_GAIN: f64 = 1.0;

/// Everything computed before integration starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: FrameworkGraph,
    pub shape: ReferenceShape,
    pub basis: AffineSubspaceBasis,
    pub stress: StressWeights,
    pub stress_certificate: StressCertificate,
    /// True when the weights came from a file rather than the search.
    pub user_weights: bool,
    pub phases: Vec<Phase>,
    /// One per phase.
    pub gain_certificates: Vec<GainCertificate>,
    pub h_min: f64,
    pub h: f64,
    pub kappa: f64,
}

impl Prepared {
    pub fn gain_certified(&self) -> bool {
        self.gain_certificates.iter().all(|c| c.certifies(self.h))
    }

    pub fn certified(&self) -> bool {
        self.stress_certificate.passed && self.gain_certified()
    }

    pub fn margin(&self) -> f64 {
        if self.h_min == 0.0 {
            f64::INFINITY
        } else {
            self.h / self.h_min
        }
    }

    pub fn closed_loop(&self) -> Result<ClosedLoop> {
        Ok(ClosedLoop::new(
            &self.graph,
            &self.stress,
            self.shape.dimension(),
            self.phases.clone(),
            self.h,
            self.kappa,
        )?)
    }
}

pub fn prepare(s: &Scenario) -> Result<Prepared> {
    let graph = FrameworkGraph::from_one_based(s.positions.len(), &s.edges)?;
    let shape = ReferenceShape::centered(s.dimension, &s.positions)?;
    let basis = AffineSubspaceBasis::new(&shape)?;
    let (stress, user_weights) = match &s.weights {
        Some(path) => {
            let triples = io::read_weights(path)?;
            (StressWeights::from_weights(&graph, graph.weights_from_triples(&triples)?)?, true)
        }
        None => (compute_stress_weights_with_summary(&graph, &shape)?.0, false),
    };
    let stress_certificate = validate_stress(&graph, &shape, &stress, &basis);

    let motions = MotionBasis::new(&graph, &shape)?;
    let mut phases = Vec::with_capacity(s.schedule.len());
    let mut gain_certificates = Vec::with_capacity(s.schedule.len());
    for (start, coords) in &s.schedule {
        let params = motions.combine(&graph, &shape, coords)?;
        let op = motion_operator(&graph, &params, s.dimension);
        gain_certificates.push(stability_bound(stress.laplacian(), &op, s.kappa, &basis)?);
        phases.push(Phase { start: *start, params });
    }
    let h_min = gain_certificates.iter().map(|c| c.h_min).fold(0.0, f64::max);
    let h = match s.gain {
        GainSetting::Fixed(h) => h,
        GainSetting::Auto { factor } if h_min > 0.0 => factor * h_min,
        GainSetting::Auto { .. } => FALLBACK_GAIN,
    };
    Ok(Prepared {
        graph,
        shape,
        basis,
        stress,
        stress_certificate,
        user_weights,
        phases,
        gain_certificates,
        h_min,
        h,
        kappa: s.kappa,
    })
}

/// `p(0)` for the scenario, drawing any perturbation from `seed`.
pub fn initial_state(initial: &InitialCondition, shape: &ReferenceShape, seed: u64) -> DVector<f64> {
    let m = shape.dimension();
    match initial {
        InitialCondition::Reference => shape.stacked().clone(),
        InitialCondition::Positions(rows) => DVector::from_iterator(rows.len() * m, rows.iter().flatten().copied()),
        InitialCondition::Perturbed { amplitude, jitter } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |scale: f64| scale * rng.random_range(-1.0..=1.0);
            let a = DMatrix::from_fn(m, m, |r, c| if r == c { 1.0 } else { 0.0 } + draw(*amplitude));
            let b = DVector::from_fn(m, |_, _| draw(*amplitude));
            let mut p = shape.affine_image(&a, &b);
            if *jitter > 0.0 {
                p.iter_mut().for_each(|x| *x += draw(*jitter));
            }
            p
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub decimate: Option<usize>,
    pub seed: Option<u64>,
    /// Skip writing files (the report is still produced).
    pub dry_run: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub prepared: Prepared,
    pub seed: u64,
    pub trajectory: Trajectory,
    pub metrics: Vec<MetricSample>,
    pub initial_scale: f64,
    pub final_scale: f64,
    pub final_perp_residual: f64,
    /// Per agent, over the stored samples.
    pub max_agent_speeds: Vec<f64>,
    pub distributed_deviation: Option<f64>,
    pub wall_time: f64,
    pub out_dir: Option<PathBuf>,
}

impl RunReport {
    /// 0 when every certificate passes, 2 when the run completed without one.
    pub fn exit_code(&self) -> i32 {
        if self.prepared.certified() {
            0
        } else {
            2
        }
    }

    pub fn summary(&self) -> String {
        let p = &self.prepared;
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.name);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = write!(out, "{}", certificate_text(p));
        let _ = writeln!(out, "final perp residual: {:.6e}", self.final_perp_residual);
        let _ = writeln!(out, "initial scale: {:.6e}", self.initial_scale);
        let _ = writeln!(out, "final scale: {:.6e}", self.final_scale);
        let _ = writeln!(out, "scale ratio: {:.6e}", self.final_scale / self.initial_scale);
        let _ = writeln!(out, "max agent speed:");
        for (i, v) in self.max_agent_speeds.iter().enumerate() {
            let _ = writeln!(out, "  agent {}: {:.6e}", i + 1, v);
        }
        if let Some(dev) = self.distributed_deviation {
            let _ = writeln!(out, "distributed max deviation: {dev:.3e}");
        }
        let _ = writeln!(out, "wall time: {:.3} s", self.wall_time);
        out
    }
}

/// Certificate block shared by `run` and `validate`.
pub fn certificate_text(p: &Prepared) -> String {
    let c = &p.stress_certificate;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "framework: {} agents, {} edges, dimension {}",
        p.graph.node_count(),
        p.graph.edge_count(),
        p.shape.dimension()
    );
    let _ = writeln!(
        out,
        "stress certificate: {} ({} weights)",
        if c.passed { "PASS" } else { "FAIL" },
        if p.user_weights { "user" } else { "computed" }
    );
    let _ = writeln!(out, "  equilibrium residual: {:.3e}", c.max_equilibrium_residual);
    let _ = writeln!(out, "  min eigenvalue: {:.3e}", c.min_eigenvalue);
    let _ = writeln!(out, "  kernel eigenvalues max: {:.3e}", c.kernel_eigen_max);
    let _ = writeln!(out, "  gap eigenvalue: {:.6}", c.gap_eigenvalue);
    let _ = writeln!(out, "  rank: {} (expected {})", c.rank, c.expected_rank);
    let _ = writeln!(out, "  kernel mismatch: {:.3e}", c.kernel_mismatch);
    let _ = writeln!(out, "kappa: {}", p.kappa);
    let _ = writeln!(out, "h: {:.6}", p.h);
    let _ = writeln!(out, "h_min: {:.6}", p.h_min);
    let _ = writeln!(out, "margin: {:.3}", p.margin());
    if p.gain_certified() {
        let _ = writeln!(out, "gain: certified");
    } else {
        let _ = writeln!(out, "gain: WARNING uncertified gain (h <= h_min)");
    }
    out
}

pub fn run_pipeline(s: &Scenario, opts: &RunOptions) -> Result<RunReport> {
    let clock = Instant::now();
    let prepared = prepare(s)?;
    let seed = opts.seed.unwrap_or(s.sim.seed);
    let decimate = opts.decimate.unwrap_or(s.sim.decimate);
    let system = prepared.closed_loop()?;
    let cfg = SimConfig {
        dt: s.sim.dt,
        t_end: s.sim.t_end,
        integrator: s.sim.integrator,
        initial: initial_state(&s.sim.initial, &prepared.shape, seed),
        sample_every: decimate.max(1),
    };
    let trajectory = sim::run_centralized(&cfg, &system)?;
    let distributed_deviation = if s.sim.distributed {
        let d = sim::run_distributed(&cfg, &system, &prepared.graph, &DistributedOptions::default())?;
        Some(trajectory.max_deviation(&d))
    } else {
        None
    };
    let samples = metrics(&trajectory, &prepared.basis, &system);
    let n = prepared.graph.node_count();
    let max_agent_speeds = (0..n)
        .map(|i| samples.iter().map(|m| m.agent_speeds[i]).fold(0.0, f64::max))
        .collect();
    let first = samples.first().expect("trajectory stores t = 0");
    let last = samples.last().expect("trajectory stores t = 0");

    let out_dir = if opts.dry_run {
        None
    } else {
        let dir = opts
            .out_dir
            .clone()
            .or_else(|| s.output_dir.clone())
            .unwrap_or_else(|| Path::new("out").join(&s.name));
        Some(dir)
    };
    let mut report = RunReport {
        name: s.name.clone(),
        seed,
        initial_scale: first.scale,
        final_scale: last.scale,
        final_perp_residual: last.perp_residual,
        max_agent_speeds,
        distributed_deviation,
        wall_time: 0.0,
        out_dir: out_dir.clone(),
        trajectory,
        metrics: samples,
        prepared,
    };
    if let Some(dir) = out_dir {
        write_outputs(&dir, &mut report, clock)?;
    } else {
        report.wall_time = clock.elapsed().as_secs_f64();
    }
    Ok(report)
}

fn write_outputs(dir: &Path, report: &mut RunReport, clock: Instant) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| io::IoError::File { path: dir.to_path_buf(), source })?;
    let p = &report.prepared;
    io::write_trajectory(&dir.join("trajectory.csv"), &report.trajectory)?;
    io::write_metrics(&dir.join("metrics.csv"), p.shape.dimension(), &report.metrics)?;
    io::write_weights(&dir.join("weights.csv"), &p.graph, p.stress.weights())?;
    for (k, phase) in p.phases.iter().enumerate() {
        let file = if k == 0 { "motion.csv".to_string() } else { format!("motion_phase{k}.csv") };
        io::write_motion_params(&dir.join(file), &phase.params)?;
    }
    report.wall_time = clock.elapsed().as_secs_f64();
    let path = dir.join("summary.txt");
    std::fs::write(&path, report.summary()).map_err(|source| io::IoError::File { path, source })?;
    Ok(())
}
