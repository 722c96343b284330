//! Files written by the commands and the JSON documents they carry.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::Result;

pub const SAMPLES_CSV: &str = "samples.csv";
pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";
pub const REPORT_JSON: &str = "report.json";
pub const SCALING_CURVE_CSV: &str = "scaling_curve.csv";
pub const SCALING_EMPIRICAL_CSV: &str = "scaling_empirical.csv";
pub const SCALING_JSON: &str = "scaling.json";
pub const TRUE_CLOUD_DAT: &str = "true_cloud.dat";
pub const DISTANCES_CSV: &str = "distances.csv";
pub const QUAD_ORDER_CSV: &str = "quad_order.csv";
pub const QUAD_ORDER_JSON: &str = "quad_order.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentSummary {
    pub quantile: f64,
    pub containment_distance: f64,
    pub mean_distance: f64,
    pub reference_points: usize,
}

/// Summary of one `sample` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_secs: f64,
    pub total_score_queries: u64,
    pub predictor_queries: u64,
    pub corrector_queries: u64,
    pub samples: usize,
    pub levels: usize,
    /// Absent when no corrector proposals were made.
    pub acceptance_rate: Option<f64>,
    pub esjd: Option<f64>,
    pub fallbacks: u64,
    /// Per-coordinate sample mean.
    pub mean: Vec<Option<f64>>,
    /// Per-coordinate sample variance; absent for a single chain.
    pub variance: Vec<Option<f64>>,
    pub containment: Option<ContainmentSummary>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub version: String,
    pub seed: u64,
    pub wall_time_secs: f64,
    pub grid_best_ell: f64,
    pub optimal_ell: f64,
    pub optimal_acceptance: f64,
    pub optimal_efficiency: f64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFit {
    pub rule: String,
    /// Least-squares slope of log error against log h.
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub version: String,
    pub seed: u64,
    pub wall_time_secs: f64,
    pub fits: Vec<RuleFit>,
    pub config: ExperimentConfig,
}

/// `MADM_OUT` beats the command line, which beats the configuration.
pub fn resolve_out_dir(flag: Option<&Path>, configured: &str) -> PathBuf {
    match std::env::var_os("MADM_OUT").filter(|v| !v.is_empty()) {
        Some(env) => PathBuf::from(env),
        None => flag.map_or_else(|| PathBuf::from(configured), Path::to_path_buf),
    }
}

pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Whitespace-separated `x y` rows for gnuplot.
pub fn write_dat(dir: &Path, name: &str, points: &[Vec<f64>]) -> Result<()> {
    let mut w = create(dir, name)?;
    for p in points {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// `None` for NaN and infinities, which JSON cannot carry.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Per-coordinate mean and unbiased variance.
pub fn moments(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let dim = samples.first().map_or(0, Vec::len);
    if n == 0 {
        return (vec![f64::NAN; dim], vec![f64::NAN; dim]);
    }
    let mean: Vec<f64> = (0..dim)
        .map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / n as f64)
        .collect();
    let variance = (0..dim)
        .map(|i| {
            if n < 2 {
                return f64::NAN;
            }
            samples
                .iter()
                .map(|s| (s[i] - mean[i]).powi(2))
                .sum::<f64>()
                / (n - 1) as f64
        })
        .collect();
    (mean, variance)
}
