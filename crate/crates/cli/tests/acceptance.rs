//! Acceptance run: one PASS/FAIL line per criterion at its stated tolerance.
//!
//! Exits 0 so the workspace test run completes even when a criterion is red;
//! set `MADM_ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use madm_cli::commands::{quad_order, run_sampler, sample, scaling};
use madm_cli::config::preset;
use madm_cli::{run_suite, Effort, ExperimentConfig, PRESETS};
use madm_core::diagnostics::{empirical_scaling, optimal_scaling_curve};
use madm_core::sampler::{chain_rng, CorrectorKernel, CorrectorKind};

const SEED: u64 = 20_240_601;
const TARGET_ACCEPTANCE: f64 = 0.347;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

struct Tally {
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, id: &str, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= budget;
        let passed = outcome.passed && in_budget;
        let timing = format!("{:.1}s of {}s", elapsed.as_secs_f64(), budget.as_secs());
        let over = if in_budget {
            ""
        } else {
            " (over runtime budget)"
        };
        println!(
            "{} [{id}] {name}: {} [{timing}{over}]",
            if passed { "PASS" } else { "FAIL" },
            outcome.detail
        );
        if !passed {
            self.failures.push(format!("{id} {name}"));
        }
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn suite(name: &str) -> Outcome {
    match run_suite(name, Effort::Full, SEED) {
        Ok(report) => {
            let parts: Vec<String> = report
                .verdicts
                .iter()
                .filter(|v| !v.passed || report.verdicts.len() <= 6)
                .map(|v| {
                    let mut s = format!(
                        "{}{} measured {:.6} expected {:.6} ± {:.2e}",
                        if v.passed { "" } else { "FAILED " },
                        v.check,
                        v.measured,
                        v.expected,
                        v.tolerance
                    );
                    if !v.detail.is_empty() {
                        s.push_str(&format!(" ({})", v.detail));
                    }
                    s
                })
                .collect();
            let summary = if parts.is_empty() {
                format!("{} checks within tolerance", report.verdicts.len())
            } else {
                parts.join("; ")
            };
            Outcome::new(report.passed, summary)
        }
        Err(e) => Outcome::new(false, format!("error: {e}")),
    }
}

fn optimal_acceptance() -> Outcome {
    let grid: Vec<f64> = (0..80)
        .map(|i| 0.05 + (4.0 - 0.05) * i as f64 / 79.0)
        .collect();
    match optimal_scaling_curve(&grid) {
        Ok(curve) => {
            let a = curve.optimum.acceptance;
            Outcome::new(
                (a - TARGET_ACCEPTANCE).abs() <= 0.002,
                format!(
                    "ell* {:.5}, A(ell*) {a:.5}, expected 0.347 ± 0.002",
                    curve.optimum.ell
                ),
            )
        }
        Err(e) => Outcome::new(false, format!("error: {e}")),
    }
}

fn empirical_acceptance(kind: CorrectorKind, stream: usize) -> Outcome {
    let ell = match optimal_scaling_curve(&[1.5, 1.7, 1.9]) {
        Ok(c) => c.optimum.ell,
        Err(e) => return Outcome::new(false, format!("error: {e}")),
    };
    let kernel = CorrectorKernel::new(kind).with_max_rounds(1000);
    let mut rng = chain_rng(SEED, stream);
    match empirical_scaling(1000, ell, &kernel, 100_000, &mut rng) {
        Ok(row) if row.status == "ok" => Outcome::new(
            (row.acceptance - TARGET_ACCEPTANCE).abs() <= 0.02,
            format!(
                "d = 1000, h = {:.4}, acceptance {:.4}, expected 0.347 ± 0.02",
                row.h, row.acceptance
            ),
        ),
        Ok(row) => Outcome::new(false, format!("d = 1000, h = {:.4}: {}", row.h, row.status)),
        Err(e) => Outcome::new(false, format!("error: {e}")),
    }
}

fn fig1_config(corrector: &str) -> ExperimentConfig {
    let mut c = preset("fig1-checkerboard").expect("preset exists");
    c.corrector.kind = corrector.to_string();
    c.run.seed = SEED;
    c
}

fn fig1_replica() -> Outcome {
    let mut rows = Vec::new();
    for kind in ["ula", "hybrid"] {
        match run_sampler(&fig1_config(kind)) {
            Ok((_, summary)) => match summary.containment {
                Some(c) => rows.push((c.containment_distance, c.mean_distance)),
                None => return Outcome::new(false, format!("{kind}: no containment reported")),
            },
            Err(e) => return Outcome::new(false, format!("{kind}: {e}")),
        }
    }
    let (ula, madm) = (rows[0], rows[1]);
    let improvement = 1.0 - madm.1 / ula.1;
    Outcome::new(
        madm.0 < ula.0 && improvement >= 0.25,
        format!(
            "95% containment {:.4} vs ULA {:.4}; mean distance {:.4} vs {:.4} ({:.1}% better, need 25%)",
            madm.0,
            ula.0,
            madm.1,
            ula.1,
            100.0 * improvement
        ),
    )
}

/// Cuts a preset to a size that runs in seconds without changing its code path.
fn reduced(name: &str) -> ExperimentConfig {
    let mut c = preset(name).expect("preset exists");
    c.run.threads = 1;
    c.run.seed = SEED;
    c.run.chains = c.run.chains.min(100);
    c.run.reference_points = c.run.reference_points.min(500);
    c.scaling.dims = vec![10, 100];
    c.scaling.proposals = 2000;
    c.quad_order.proposals = 100;
    c
}

/// Runs the preset's own command and returns every CSV it writes.
fn preset_csvs(name: &str, out: &Path) -> madm_cli::Result<Vec<(String, Vec<u8>)>> {
    let c = reduced(name);
    match name {
        "scaling" => {
            scaling(&c, out)?;
        }
        "quad-order" => {
            quad_order(&c, out)?;
        }
        _ => {
            sample(&c, out)?;
        }
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(out)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let label = path.file_name().unwrap().to_string_lossy().into_owned();
            files.push((label, std::fs::read(&path)?));
        }
    }
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for name in PRESETS {
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().expect("temp dir");
                preset_csvs(name, dir.path())
            })
            .collect();
        match (&runs[0], &runs[1]) {
            (Ok(a), Ok(b)) if a == b && !a.is_empty() => compared += a.len(),
            (Ok(_), Ok(_)) => mismatched.push(name.to_string()),
            (Err(e), _) | (_, Err(e)) => mismatched.push(format!("{name} ({e})")),
        }
    }
    if mismatched.is_empty() {
        Outcome::new(
            true,
            format!(
                "{} presets, {compared} CSV files byte-identical",
                PRESETS.len()
            ),
        )
    } else {
        Outcome::new(
            false,
            format!("differing output: {}", mismatched.join(", ")),
        )
    }
}

fn main() -> ExitCode {
    let mut t = Tally {
        failures: Vec::new(),
    };
    t.check("1", "Poisson-product estimator mean", secs(30), || {
        suite("lemma1")
    });
    t.check("2", "two-coin acceptance law", secs(120), || {
        suite("two-coin-exactness")
    });
    t.check("3", "rounds and score queries", secs(120), || {
        suite("prop2-queries")
    });
    t.check(
        "4",
        "corrector stationary variance at h = 0.5",
        secs(60),
        || suite("ula-bias"),
    );
    t.check("5", "quadrature error orders", secs(60), || {
        suite("quad-order")
    });
    t.check(
        "6a",
        "limiting optimal acceptance",
        secs(300),
        optimal_acceptance,
    );
    t.check("6b", "two-coin acceptance at d = 1000", secs(300), || {
        empirical_acceptance(CorrectorKind::TwoCoin, 0)
    });
    let start = Instant::now();
    let info = empirical_acceptance(CorrectorKind::OracleBarker, 1);
    println!(
        "INFO [6b] exact-Barker reference at d = 1000: {} [{:.1}s]",
        info.detail,
        start.elapsed().as_secs_f64()
    );
    t.check(
        "7",
        "checkerboard containment vs ULA",
        secs(600),
        fig1_replica,
    );
    t.check("8", "line-integral identity", secs(10), || {
        suite("line-integral-identity")
    });
    t.check("9", "single-thread determinism", secs(600), determinism);

    let strict = std::env::var("MADM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if t.failures.is_empty() {
        println!("acceptance: all criteria green");
    } else {
        println!("acceptance: red criteria: {}", t.failures.join(", "));
    }
    if strict && !t.failures.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
