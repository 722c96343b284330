//! The `sample`, `scaling` and `plotdata` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use madm_core::adjust_quadrature::QuadratureRule;
use madm_core::diagnostics::{
    containment_distance, empirical_scaling, optimal_scaling_curve, order_fit,
    write_containment_csv, write_empirical_scaling_csv, write_levels_csv, write_order_table_csv,
    write_samples_csv, write_scaling_csv, Containment, EmpiricalScaling,
};
use madm_core::sampler::{chain_rng, run_pc, CorrectorKernel, CorrectorKind, RunReport};
use madm_core::targets::read_points_csv;
use madm_core::BoundStrategy;

use crate::config::ExperimentConfig;
use crate::output::{
    create, finite, moments, write_dat, write_json, ContainmentSummary, OrderSummary, RuleFit,
    RunSummary, ScalingSummary, DIAGNOSTICS_CSV, DISTANCES_CSV, QUAD_ORDER_CSV, QUAD_ORDER_JSON,
    REPORT_JSON, SAMPLES_CSV, SCALING_CURVE_CSV, SCALING_EMPIRICAL_CSV, SCALING_JSON,
    TRUE_CLOUD_DAT,
};
use crate::verify::quadrature_errors;
use crate::{CliError, Result, VERSION};

pub const CONTAINMENT_QUANTILE: f64 = 0.95;

/// Runs the predictor–corrector sampler without touching the filesystem.
pub fn run_sampler(config: &ExperimentConfig) -> Result<(RunReport, RunSummary)> {
    let run_config = config.run_config()?;
    let model = config.model()?;
    let report = run_pc(model, &run_config)?;
    let containment = match config.reference_cloud()? {
        Some(reference) => {
            let c = containment_distance(&report.samples, &reference.points, CONTAINMENT_QUANTILE)?;
            Some(ContainmentSummary {
                quantile: c.quantile,
                containment_distance: c.distance,
                mean_distance: c.mean,
                reference_points: reference.len(),
            })
        }
        None => None,
    };
    let (mean, variance) = moments(&report.samples);
    let summary = RunSummary {
        version: VERSION.to_string(),
        seed: config.run.seed,
        threads: config.run.threads,
        wall_time_secs: report.wall_time_secs,
        total_score_queries: report.total_queries(),
        predictor_queries: report.predictor_queries,
        corrector_queries: report.corrector_queries,
        samples: report.samples.len(),
        levels: report.levels.len(),
        acceptance_rate: finite(report.acceptance_rate()),
        esjd: finite(report.esjd()),
        fallbacks: report.levels.iter().map(|l| l.fallbacks).sum(),
        mean: mean.into_iter().map(finite).collect(),
        variance: variance.into_iter().map(finite).collect(),
        containment,
        config: config.clone(),
    };
    Ok((report, summary))
}

/// Writes `samples.csv`, `diagnostics.csv` and `report.json` into `out`.
pub fn sample(config: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let (report, summary) = run_sampler(config)?;
    write_samples_csv(&report.samples, create(out, SAMPLES_CSV)?)?;
    write_levels_csv(&report.levels, create(out, DIAGNOSTICS_CSV)?)?;
    write_json(out, REPORT_JSON, &summary)?;
    Ok(summary)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Analytic efficiency curve plus finite-dimension runs at its maximiser.
pub fn scaling(
    config: &ExperimentConfig,
    out: &Path,
) -> Result<(ScalingSummary, Vec<EmpiricalScaling>)> {
    let start = Instant::now();
    let s = &config.scaling;
    let curve = optimal_scaling_curve(&linspace(s.ell_min, s.ell_max, s.grid_points))?;
    write_scaling_csv(&curve.points, create(out, SCALING_CURVE_CSV)?)?;

    let bound: BoundStrategy = config.corrector.bound.parse()?;
    let mut rows = Vec::new();
    for (i, &dim) in s.dims.iter().enumerate() {
        for (j, name) in s.kernels.iter().enumerate() {
            let kernel = CorrectorKernel::new(name.parse::<CorrectorKind>()?)
                .with_bound(bound)
                .with_max_rounds(s.max_rounds);
            let stream = i * s.kernels.len() + j;
            let mut rng = chain_rng(config.run.seed, stream);
            rows.push(empirical_scaling(
                dim,
                curve.optimum.ell,
                &kernel,
                s.proposals,
                &mut rng,
            )?);
        }
    }
    write_empirical_scaling_csv(&rows, create(out, SCALING_EMPIRICAL_CSV)?)?;

    let summary = ScalingSummary {
        version: VERSION.to_string(),
        seed: config.run.seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
        grid_best_ell: curve.grid_best.ell,
        optimal_ell: curve.optimum.ell,
        optimal_acceptance: curve.optimum.acceptance,
        optimal_efficiency: curve.optimum.efficiency,
        config: config.clone(),
    };
    write_json(out, SCALING_JSON, &summary)?;
    Ok((summary, rows))
}

/// Mean absolute quadrature error against the exact log ratio over `h = 2^{-k}`.
pub fn quad_order(config: &ExperimentConfig, out: &Path) -> Result<OrderSummary> {
    let start = Instant::now();
    let q = &config.quad_order;
    let steps: Vec<f64> = (q.k_min..=q.k_max)
        .map(|k| 2f64.powi(-(k as i32)))
        .collect();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for name in &q.rules {
        let rule: QuadratureRule = name.parse()?;
        let pairs = quadrature_errors(
            &rule,
            &steps,
            q.proposals,
            q.scale,
            q.perturbation,
            config.run.seed,
        )?;
        let fit = order_fit(&pairs)?;
        rows.extend(pairs.iter().map(|&(h, e)| (rule.name(), h, e)));
        fits.push(RuleFit {
            rule: rule.name(),
            slope: fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
        });
    }
    write_order_table_csv(&rows, create(out, QUAD_ORDER_CSV)?)?;
    let summary = OrderSummary {
        version: VERSION.to_string(),
        seed: config.run.seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
        fits,
        config: config.clone(),
    };
    write_json(out, QUAD_ORDER_JSON, &summary)?;
    Ok(summary)
}

/// Reads `samples.csv` as written by [`sample`].
pub fn read_samples(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let body = text.split_once('\n').map_or("", |(_, rest)| rest);
    Ok(read_points_csv(body.as_bytes())?)
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let path = dir.join(REPORT_JSON);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{} is not a run report: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub label: String,
    pub file: PathBuf,
    pub quantile: f64,
    pub containment_distance: f64,
    pub mean_distance: f64,
}

/// Gnuplot-ready panels: the true cloud, one sample file per run and a distance table.
pub fn plotdata(run_dirs: &[PathBuf], out: &Path) -> Result<Vec<PlotSeries>> {
    let first = run_dirs
        .first()
        .ok_or_else(|| CliError::Config("plotdata needs at least one run directory".into()))?;
    let reference = read_summary(first)?
        .config
        .reference_cloud()?
        .ok_or_else(|| {
            CliError::Config(format!(
                "{} was not sampled from a dataset target with a reference cloud",
                first.display()
            ))
        })?;
    write_dat(out, TRUE_CLOUD_DAT, &reference.points)?;

    let mut series = Vec::with_capacity(run_dirs.len());
    for dir in run_dirs {
        let summary = read_summary(dir)?;
        let label = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| summary.config.corrector.kind.clone());
        let samples = read_samples(&dir.join(SAMPLES_CSV))?;
        let containment = containment_distance(&samples, &reference.points, CONTAINMENT_QUANTILE)?;
        let file = PathBuf::from(format!("{label}_samples.dat"));
        write_dat(out, &file.to_string_lossy(), &samples)?;
        series.push(PlotSeries {
            label,
            file,
            quantile: containment.quantile,
            containment_distance: containment.distance,
            mean_distance: containment.mean,
        });
    }
    let rows: Vec<(String, Containment)> = series
        .iter()
        .map(|s| {
            let c = Containment {
                quantile: s.quantile,
                distance: s.containment_distance,
                mean: s.mean_distance,
            };
            (s.label.clone(), c)
        })
        .collect();
    write_containment_csv(&rows, create(out, DISTANCES_CSV)?)?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    fn tiny(name: &str) -> ExperimentConfig {
        let mut c = preset(name).unwrap();
        c.target.points = 50;
        c.run.chains = 8;
        c.run.threads = 1;
        c.run.reference_points = 100;
        c.predictor.steps = c.predictor.steps.min(4);
        c.corrector.steps = 2;
        c
    }

    #[test]
    fn quad_order_writes_one_row_per_rule_and_step() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = preset("quad-order").unwrap();
        c.quad_order.proposals = 50;
        let summary = quad_order(&c, dir.path()).unwrap();
        assert_eq!(summary.fits.len(), 3);
        let text = std::fs::read_to_string(dir.path().join(QUAD_ORDER_CSV)).unwrap();
        assert!(text.starts_with("rule,h,error\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 7);
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
    }

    #[test]
    fn sample_writes_all_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let summary = sample(&tiny("spiral"), dir.path()).unwrap();
        assert_eq!(summary.samples, 8);
        assert_eq!(summary.config.preset, "spiral");
        assert!(summary.containment.is_some());
        let samples = read_samples(&dir.path().join(SAMPLES_CSV)).unwrap();
        assert_eq!(samples.len(), 8);
        let back = read_summary(dir.path()).unwrap();
        assert_eq!(back.total_score_queries, summary.total_score_queries);
        let diag = std::fs::read_to_string(dir.path().join(DIAGNOSTICS_CSV)).unwrap();
        assert_eq!(diag.lines().count(), 1 + summary.levels);
    }

    #[test]
    fn plotdata_reproduces_the_run_distances() {
        let root = tempfile::tempdir().unwrap();
        let run = root.path().join("madm");
        let summary = sample(&tiny("spiral"), &run).unwrap();
        let out = root.path().join("plots");
        let series = plotdata(&[run], &out).unwrap();
        let c = summary.containment.unwrap();
        assert_eq!(series[0].label, "madm");
        assert_eq!(series[0].containment_distance, c.containment_distance);
        assert!(out.join(TRUE_CLOUD_DAT).exists());
        assert!(out.join("madm_samples.dat").exists());
        assert!(out.join(DISTANCES_CSV).exists());
    }

    #[test]
    fn scaling_records_failures_as_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = preset("scaling").unwrap();
        c.scaling.grid_points = 20;
        c.scaling.dims = vec![10];
        c.scaling.proposals = 200;
        c.scaling.max_rounds = 50;
        let (summary, rows) = scaling(&c, dir.path()).unwrap();
        assert!((summary.optimal_acceptance - 0.347).abs() < 0.002);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, "ok");
        assert!(dir.path().join(SCALING_CURVE_CSV).exists());
    }
}
