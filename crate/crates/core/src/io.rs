//! Flat-file formats: weights and motion parameters as `(i, j, value)` rows,
//! trajectories and metric series as CSV. Node indices are 1-based on disk.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::FrameworkGraph;
use crate::motion::MotionParams;
use crate::sim::{MetricSample, Trajectory};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeightRow {
    i: usize,
    j: usize,
    w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MotionRow {
    i: usize,
    j: usize,
    mu: f64,
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv { path: path.to_path_buf(), source }
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

/// One row per undirected edge, `head < tail`.
pub fn write_weights(path: &Path, graph: &FrameworkGraph, weights: &[f64]) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for (e, &w) in graph.edges().iter().zip(weights) {
        wtr.serialize(WeightRow { i: e.head + 1, j: e.tail + 1, w }).map_err(csv_err(path))?;
    }
    wtr.flush().map_err(file_err(path))
}

/// Reads `(i, j, w)` rows as written by [`write_weights`].
pub fn read_weights(path: &Path) -> Result<Vec<(usize, usize, f64)>, IoError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    rdr.deserialize::<WeightRow>()
        .map(|row| row.map(|r| (r.i, r.j, r.w)).map_err(csv_err(path)))
        .collect()
}

/// Directed rows; both `(i, j)` and `(j, i)` appear for every edge.
pub fn write_motion_params(path: &Path, params: &MotionParams) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for (i, j, mu) in params.triples() {
        wtr.serialize(MotionRow { i, j, mu }).map_err(csv_err(path))?;
    }
    wtr.flush().map_err(file_err(path))
}

fn axis_names(m: usize) -> Vec<String> {
    const NAMES: [&str; 3] = ["x", "y", "z"];
    (0..m).map(|d| NAMES.get(d).map_or_else(|| format!("x{}", d + 1), |s| s.to_string())).collect()
}

/// `t,agent,x,y[,z]`, one row per agent per stored sample.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), IoError> {
    let file = File::create(path).map_err(file_err(path))?;
    let mut out = BufWriter::new(file);
    let m = traj.m;
    let header = format!("t,agent,{}\n", axis_names(m).join(","));
    let mut body = String::with_capacity(64 * traj.len() * traj.agent_count().max(1));
    body.push_str(&header);
    for (t, p) in traj.times.iter().zip(&traj.states) {
        for i in 0..p.len() / m {
            body.push_str(&format!("{t},{}", i + 1));
            for d in 0..m {
                body.push_str(&format!(",{}", p[i * m + d]));
            }
            body.push('\n');
        }
    }
    out.write_all(body.as_bytes()).map_err(file_err(path))?;
    out.flush().map_err(file_err(path))
}

/// `t,perp_residual,vel_error,centroid_x,centroid_y[,centroid_z],scale`.
pub fn write_metrics(path: &Path, m: usize, samples: &[MetricSample]) -> Result<(), IoError> {
    let file = File::create(path).map_err(file_err(path))?;
    let mut out = BufWriter::new(file);
    let centroid_cols: Vec<String> = axis_names(m).iter().map(|a| format!("centroid_{a}")).collect();
    writeln!(out, "t,perp_residual,vel_error,{},scale", centroid_cols.join(",")).map_err(file_err(path))?;
    for s in samples {
        let c: Vec<String> = s.centroid.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{},{},{},{},{}", s.t, s.perp_residual, s.vel_error, c.join(","), s.scale)
            .map_err(file_err(path))?;
    }
    out.flush().map_err(file_err(path))
}
