//! Statistical and numerical property suites with machine-readable verdicts.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use madm_core::adjust_quadrature::{quadrature_log_ratio, BaseRule, QuadratureRule};
use madm_core::decision::barker_probability;
use madm_core::diagnostics::{batch_means, order_fit};
use madm_core::proposal::ula_propose_with_noise;
use madm_core::sampler::{chain_rng, run_corrector_chain, CorrectorKernel, CorrectorKind};
use madm_core::targets::{DiffusedEmpirical, GaussianTarget, QuarticTarget};
use madm_core::{
    bound_c, expected_queries, expected_rounds, log_h, poisson_product_w, two_coin_decision,
    BoundStrategy, LangevinProposal, NoiseSchedule, ScoreModel, ScoreOracle, DEFAULT_MAX_ROUNDS,
};

use crate::{CliError, Result};

pub const SUITES: [&str; 6] = [
    "lemma1",
    "two-coin-exactness",
    "prop2-queries",
    "quad-order",
    "ula-bias",
    "line-integral-identity",
];

/// Sample sizes: `Full` uses the sizes the verdict thresholds are calibrated for,
/// `Quick` a tenth of them for smoke runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Effort {
    Quick,
    Full,
}

impl Effort {
    fn scale(self, full: usize) -> usize {
        match self {
            Effort::Full => full,
            Effort::Quick => (full / 10).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    /// Half-width of the acceptance band around `expected`.
    pub tolerance: f64,
    pub detail: String,
}

impl Verdict {
    fn within(check: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Verdict {
            check: check.into(),
            passed: (measured - expected).abs() <= tolerance,
            measured,
            expected,
            tolerance,
            detail: String::new(),
        }
    }

    fn failed(check: impl Into<String>, expected: f64, detail: String) -> Self {
        Verdict {
            check: check.into(),
            passed: false,
            measured: f64::NAN,
            expected,
            tolerance: f64::NAN,
            detail,
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub seed: u64,
    pub effort: Effort,
    pub wall_time_secs: f64,
    pub verdicts: Vec<Verdict>,
}

pub fn run_suite(name: &str, effort: Effort, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let verdicts = match name {
        "lemma1" => lemma1(effort, seed)?,
        "two-coin-exactness" => two_coin_exactness(effort, seed)?,
        "prop2-queries" => prop2_queries(effort, seed)?,
        "quad-order" => quad_order(effort, seed)?,
        "ula-bias" => ula_bias(effort, seed)?,
        "line-integral-identity" => line_integral_identity(seed)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown suite {other:?}; valid suites: {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        passed: verdicts.iter().all(|v| v.passed),
        seed,
        effort,
        wall_time_secs: start.elapsed().as_secs_f64(),
        verdicts,
    })
}

fn proposal_between(
    oracle: &mut ScoreOracle,
    x: Vec<f64>,
    x_prop: Vec<f64>,
    h: f64,
    t: f64,
) -> Result<LangevinProposal> {
    let sx = oracle.score(&x, t)?;
    let sp = oracle.score(&x_prop, t)?;
    Ok(LangevinProposal::new(x, x_prop, h, t, sx, sp)?)
}

/// Standard-normal target, `x = 0`, `x̃ = 1`, `h = 4` so that `H = 1`; `r = e^{-1/2}`.
fn gaussian_fixture() -> Result<(ScoreOracle, LangevinProposal)> {
    let mut oracle = ScoreOracle::new(Arc::new(GaussianTarget::standard(1)));
    let p = proposal_between(&mut oracle, vec![0.0], vec![1.0], 4.0, 0.0)?;
    Ok((oracle, p))
}

fn lemma1(effort: Effort, seed: u64) -> Result<Vec<Verdict>> {
    let draws = effort.scale(1_000_000);
    let (mut oracle, p) = gaussian_fixture()?;
    let c = 1.0;
    let mut rng = chain_rng(seed, 0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let v = poisson_product_w(&p, &mut oracle, c, &mut rng)?.w * c.exp();
        sum += v;
        sum_sq += v * v;
    }
    let n = draws as f64;
    let mean = sum / n;
    let se = ((sum_sq / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
    let r = (-0.5f64).exp();
    Ok(vec![Verdict::within(
        "e^C * mean(W) = r",
        mean,
        r,
        4.0 * se,
    )
    .with_detail(format!(
        "{draws} draws, 4-sigma band, se = {se:.3e}"
    ))])
}

const MAX_EXACTNESS_BOUND: f64 = 3.0;

/// A random target and proposal whose envelope keeps the factory cheap.
fn exactness_config<R: Rng>(
    index: usize,
    rng: &mut R,
) -> Result<(ScoreOracle, LangevinProposal, f64, String)> {
    let schedule = NoiseSchedule::vp_continuous(0.1, 20.0)?;
    for _ in 0..10_000 {
        let (model, t, label): (Arc<dyn ScoreModel>, f64, String) = if index.is_multiple_of(2) {
            let dim = 1 + index % 3;
            let mean: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
            let variance = rng.random_range(0.5..2.0);
            let label = format!("gaussian(d={dim}, var={variance:.3})");
            (Arc::new(GaussianTarget::new(mean, variance)?), 0.0, label)
        } else {
            let points: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let t = rng.random_range(0.3..0.9);
            let label = format!("mixture3(t={t:.3})");
            (
                Arc::new(DiffusedEmpirical::new(&points, schedule.clone())?),
                t,
                label,
            )
        };
        let mut oracle = ScoreOracle::new(model);
        let dim = oracle.dim();
        let h = rng.random_range(0.05..0.5);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let sx = oracle.score(&x, t)?;
        let p = ula_propose_with_noise(&x, sx, &z, &mut oracle, t, h)?;
        let spec = BoundStrategy::BoundedDenoiser.resolve(oracle.model(), t)?;
        let c = bound_c(&p, &spec, oracle.model())?;
        if c <= MAX_EXACTNESS_BOUND {
            return Ok((oracle, p, c, format!("{label}, h={h:.3}")));
        }
    }
    Err(CliError::Numerical(
        "no configuration with a small enough bound found".into(),
    ))
}

fn exact_log_ratio(oracle: &ScoreOracle, p: &LangevinProposal) -> Result<f64> {
    let missing = || CliError::Config("target has no log density".into());
    let to = oracle.log_density(&p.x_prop, p.t).ok_or_else(missing)?;
    let from = oracle.log_density(&p.x, p.t).ok_or_else(missing)?;
    Ok(to - from)
}

fn two_coin_exactness(effort: Effort, seed: u64) -> Result<Vec<Verdict>> {
    let n = effort.scale(100_000);
    let mut verdicts = Vec::with_capacity(20);
    for i in 0..20 {
        let mut rng = chain_rng(seed, i);
        let (mut oracle, p, c, label) = exactness_config(i, &mut rng)?;
        let target = barker_probability(exact_log_ratio(&oracle, &p)? + log_h(&p));
        let mut accepted = 0u64;
        for _ in 0..n {
            let d = two_coin_decision(&p, &mut oracle, c, &mut rng, DEFAULT_MAX_ROUNDS)?;
            accepted += d.accepted as u64;
        }
        let freq = accepted as f64 / n as f64;
        let band = 3.0 * (target * (1.0 - target) / n as f64).sqrt();
        verdicts.push(
            Verdict::within(
                format!("config {i}: acceptance = Hr/(1+Hr)"),
                freq,
                target,
                band,
            )
            .with_detail(format!("{label}, C={c:.3}, n={n}, 3-sigma binomial band")),
        );
    }
    Ok(verdicts)
}

fn prop2_queries(effort: Effort, seed: u64) -> Result<Vec<Verdict>> {
    let n = effort.scale(1_000_000);
    let (mut oracle, p) = gaussian_fixture()?;
    let c = 1.0;
    let h = log_h(&p).exp();
    let r = (-0.5f64).exp();
    let mut rng = chain_rng(seed, 0);
    let (mut rounds, mut queries, mut accepted) = (0u64, 0u64, 0u64);
    for _ in 0..n {
        let d = two_coin_decision(&p, &mut oracle, c, &mut rng, DEFAULT_MAX_ROUNDS)?;
        rounds += d.rounds;
        queries += d.score_queries;
        accepted += d.accepted as u64;
    }
    let nf = n as f64;
    let want_rounds = expected_rounds(c, h, r);
    let want_queries = expected_queries(c, h, r);
    let want_accept = h * r / (1.0 + h * r);
    let detail = format!("C=1, H={h:.6}, r=e^-1/2, n={n}");
    Ok(vec![
        Verdict::within(
            "mean rounds",
            rounds as f64 / nf,
            want_rounds,
            0.02 * want_rounds,
        )
        .with_detail(format!("{detail}, 2% relative band")),
        Verdict::within(
            "mean score queries",
            queries as f64 / nf,
            want_queries,
            0.02 * want_queries,
        )
        .with_detail(format!("{detail}, 2% relative band")),
        Verdict::within(
            "acceptance = Hr/(1+Hr)",
            accepted as f64 / nf,
            want_accept,
            3.0 * (want_accept * (1.0 - want_accept) / nf).sqrt(),
        )
        .with_detail(format!("{detail}, 3-sigma binomial band")),
    ])
}

/// Exact draws from the quartic target by rejection from `N(0, 1)`.
fn sample_stationary<R: Rng>(target: &QuarticTarget, n: usize, rng: &mut R) -> Vec<f64> {
    let log_ratio =
        |x: f64| target.log_density(&[x], 0.0).unwrap_or(f64::NEG_INFINITY) + 0.5 * x * x;
    // Envelope constant from a fine grid plus a margin for the grid spacing.
    // `log p + x²/2` peaks near `|x| = √scale`.
    let reach = 2.0 * target.scale.sqrt() + 4.0;
    let ceiling = (-4000..=4000)
        .map(|i| log_ratio(i as f64 * reach / 4000.0))
        .fold(f64::NEG_INFINITY, f64::max)
        + 0.1;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: f64 = rng.sample(StandardNormal);
        if rng.random::<f64>().ln() < log_ratio(x) - ceiling {
            out.push(x);
        }
    }
    out
}

/// Mean absolute quadrature error per step size, largest step first.
pub fn quadrature_errors(
    rule: &QuadratureRule,
    steps: &[f64],
    proposals: usize,
    scale: f64,
    perturbation: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let target = QuarticTarget::perturbed(scale, perturbation)?;
    let mut rng = chain_rng(seed, 0);
    let starts = sample_stationary(&target, proposals, &mut rng);
    let draws: Vec<(f64, f64)> = starts
        .into_iter()
        .map(|x| (x, rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let mut oracle = ScoreOracle::new(Arc::new(target));
    steps
        .iter()
        .map(|&h| {
            let mut total = 0.0;
            for &(x, z) in &draws {
                let sx = oracle.score(&[x], 0.0)?;
                let p = ula_propose_with_noise(&[x], sx, &[z], &mut oracle, 0.0, h)?;
                let estimate = quadrature_log_ratio(&p, &mut oracle, rule)?;
                total += (estimate - exact_log_ratio(&oracle, &p)?).abs();
            }
            Ok((h, total / proposals as f64))
        })
        .collect()
}

fn quad_order(effort: Effort, seed: u64) -> Result<Vec<Verdict>> {
    let proposals = effort.scale(1000);
    let steps: Vec<f64> = (3..=9).map(|k| 2f64.powi(-k)).collect();
    let cases = [
        (QuadratureRule::TRAPEZOID, 1.5, 0.15),
        (QuadratureRule::SIMPSON13, 2.5, 0.2),
        (QuadratureRule::SIMPSON38, 2.5, 0.2),
    ];
    cases
        .iter()
        .map(|(rule, slope, tol)| {
            let pairs = quadrature_errors(rule, &steps, proposals, 1.0, 0.1, seed)?;
            let fit = order_fit(&pairs)?;
            Ok(Verdict::within(format!("{rule}: error slope in h"), fit.slope, *slope, *tol)
                .with_detail(format!(
                    "quartic-perturbed target, starts drawn from the target, h = 2^-3..2^-9, {proposals} proposals, residual {:.3e}",
                    fit.residual
                )))
        })
        .collect()
}

/// Stationary variance of a corrector chain on `N(0, 1)` with its batch-means error.
pub fn corrector_variance(
    kernel: &CorrectorKernel,
    h: f64,
    steps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut oracle = ScoreOracle::new(Arc::new(GaussianTarget::standard(1)));
    let mut rng = chain_rng(seed, 0);
    let x0 = vec![rng.sample::<f64, _>(StandardNormal)];
    let mut values = Vec::with_capacity(steps);
    run_corrector_chain(
        &mut oracle,
        kernel,
        0.0,
        h,
        x0,
        steps / 10,
        steps,
        &mut rng,
        |x| values.push(x[0]),
    )?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let squares: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    Ok(batch_means(&squares, 100)?)
}

fn ula_bias(effort: Effort, seed: u64) -> Result<Vec<Verdict>> {
    let steps = effort.scale(1_000_000);
    let h = 0.5;
    let ula_limit = 1.0 / (1.0 - h / 4.0);
    let arms = [
        (CorrectorKind::Ula, ula_limit),
        (CorrectorKind::OracleMh, 1.0),
        (
            CorrectorKind::Quadrature(QuadratureRule::single(BaseRule::Simpson13)),
            1.0,
        ),
        (CorrectorKind::TwoCoin, 1.0),
    ];
    let mut verdicts = Vec::new();
    for (i, (kind, expected)) in arms.into_iter().enumerate() {
        let kernel = CorrectorKernel::new(kind);
        let check = format!("{} stationary variance", kind.name());
        let detail = format!(
            "N(0,1), h={h}, {steps} steps after {} burn-in, 3-sigma batch-means band",
            steps / 10
        );
        verdicts.push(
            match corrector_variance(&kernel, h, steps, seed.wrapping_add(i as u64)) {
                Ok((var, se)) => {
                    Verdict::within(check, var, expected, 3.0 * se).with_detail(detail)
                }
                Err(CliError::Numerical(e)) => {
                    Verdict::failed(check, expected, format!("{detail}: {e}"))
                }
                Err(e) => return Err(e),
            },
        );
    }
    Ok(verdicts)
}

fn line_integral_identity(seed: u64) -> Result<Vec<Verdict>> {
    let schedule = NoiseSchedule::vp_continuous(0.1, 20.0)?;
    let mut rng = chain_rng(seed, 0);
    let mixture_points: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let targets: Vec<(&str, Arc<dyn ScoreModel>, f64)> = vec![
        (
            "gaussian",
            Arc::new(GaussianTarget::new(vec![0.5, -1.0], 0.7)?),
            0.0,
        ),
        (
            "quartic-perturbed",
            Arc::new(QuarticTarget::perturbed(1.0, 0.1)?),
            0.0,
        ),
        (
            "mixture3",
            Arc::new(DiffusedEmpirical::new(&mixture_points, schedule)?),
            0.5,
        ),
    ];
    let rule = QuadratureRule::composite(BaseRule::Simpson13, 256)?;
    let mut verdicts = Vec::new();
    for (name, model, t) in targets {
        let mut oracle = ScoreOracle::new(model);
        let dim = oracle.dim();
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x: Vec<f64> = (0..dim)
                .map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let y: Vec<f64> = x
                .iter()
                .map(|v| v + 0.5 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let p = proposal_between(&mut oracle, x, y, 1.0, t)?;
            let err = (quadrature_log_ratio(&p, &mut oracle, &rule)?
                - exact_log_ratio(&oracle, &p)?)
            .abs();
            worst = worst.max(err);
        }
        verdicts.push(
            Verdict::within(
                format!("{name}: max |quadrature - log ratio|"),
                worst,
                0.0,
                1e-8,
            )
            .with_detail(format!("100 random pairs, {rule}")),
        );
    }
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_a_config_error() {
        let e = run_suite("nope", Effort::Quick, 0).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("line-integral-identity"));
    }

    #[test]
    fn fixture_has_unit_proposal_ratio() {
        let (_, p) = gaussian_fixture().unwrap();
        assert!(log_h(&p).abs() < 1e-15);
    }

    #[test]
    fn line_integral_identity_passes() {
        let r = run_suite("line-integral-identity", Effort::Quick, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.verdicts.len(), 3);
    }

    #[test]
    fn exactness_configs_respect_the_bound_cap() {
        for i in 0..6 {
            let mut rng = chain_rng(0, i);
            let (_, _, c, _) = exactness_config(i, &mut rng).unwrap();
            assert!((0.0..=MAX_EXACTNESS_BOUND).contains(&c));
        }
    }

    #[test]
    fn verdict_json_has_stable_fields() {
        let v = Verdict::within("x", 1.0, 1.0, 0.1);
        let json = serde_json::to_value(&v).unwrap();
        for key in [
            "check",
            "passed",
            "measured",
            "expected",
            "tolerance",
            "detail",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
