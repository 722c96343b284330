//! Predictor–corrector sampling: a deterministic or ancestral predictor moves every chain
//! down one noise level, then a Langevin corrector refines it at that level.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::adjust_exact::{
    bound_c, two_coin_decision, BoundSpec, BoundStrategy, DEFAULT_MAX_ROUNDS,
};
use crate::adjust_quadrature::{
    hybrid_decision, mh_decision_quadrature, oracle_barker_decision, oracle_mh_decision,
    QuadratureRule, DEFAULT_HYBRID_ROUNDS,
};
use crate::decision::{Decision, DecisionPath};
use crate::error::{check_finite, Error, Result};
use crate::linalg::{dist_sq, StateVector};
use crate::proposal::ula_propose_from;
use crate::schedule::NoiseSchedule;
use crate::targets::{ScoreModel, ScoreOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    PfOdeEuler,
    PfOdeHeun,
    Ancestral,
    None,
}

impl PredictorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictorKind::PfOdeEuler => "pf-ode-euler",
            PredictorKind::PfOdeHeun => "pf-ode-heun",
            PredictorKind::Ancestral => "ancestral",
            PredictorKind::None => "none",
        }
    }
}

impl std::str::FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            PredictorKind::PfOdeEuler,
            PredictorKind::PfOdeHeun,
            PredictorKind::Ancestral,
            PredictorKind::None,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| {
            Error::config(format!(
                "unknown predictor {s:?} (expected pf-ode-euler, pf-ode-heun, ancestral or none)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    /// Number of noise levels below `t = 1`; level `k` sits at `t = k / steps`.
    pub steps: usize,
}

/// Corrector step size at a level `t_lo` reached from `t_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// `h = c · β`, with `β = 1 - (r_hi / r_lo)²` the effective one-step beta.
    BetaScaled(f64),
    /// `h = c · r_t σ_t`, the noise standard deviation at the level.
    SigmaScaled(f64),
}

impl StepRule {
    pub fn step_size(&self, schedule: &NoiseSchedule, t_lo: f64, t_hi: f64) -> Result<f64> {
        let h = match *self {
            StepRule::Fixed(h) => h,
            StepRule::BetaScaled(c) => c * schedule.transition_beta(t_lo, t_hi)?,
            StepRule::SigmaScaled(c) => {
                let (r, sigma) = schedule.marginal_params(t_lo)?;
                c * r * sigma
            }
        };
        if h > 0.0 && h.is_finite() {
            Ok(h)
        } else {
            Err(Error::domain(format!(
                "corrector step size must be > 0, got {h}"
            )))
        }
    }

    fn constant(&self) -> f64 {
        match *self {
            StepRule::Fixed(c) | StepRule::BetaScaled(c) | StepRule::SigmaScaled(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrectorKind {
    None,
    Ula,
    TwoCoin,
    Quadrature(QuadratureRule),
    Hybrid { rule: QuadratureRule, rounds: u64 },
    OracleMh,
    OracleBarker,
}

impl CorrectorKind {
    pub fn name(&self) -> String {
        match self {
            CorrectorKind::None => "none".into(),
            CorrectorKind::Ula => "ula".into(),
            CorrectorKind::TwoCoin => "two-coin".into(),
            CorrectorKind::Quadrature(rule) => rule.name(),
            CorrectorKind::Hybrid { rule, rounds } => format!("hybrid({rule}, {rounds})"),
            CorrectorKind::OracleMh => "oracle-mh".into(),
            CorrectorKind::OracleBarker => "oracle-barker".into(),
        }
    }
}

impl std::str::FromStr for CorrectorKind {
    type Err = Error;

    /// Accepts the command-line names; `hybrid` uses Simpson 1/3 and the default round cap.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => CorrectorKind::None,
            "ula" => CorrectorKind::Ula,
            "two-coin" => CorrectorKind::TwoCoin,
            "hybrid" => CorrectorKind::Hybrid {
                rule: QuadratureRule::SIMPSON13,
                rounds: DEFAULT_HYBRID_ROUNDS,
            },
            "oracle-mh" => CorrectorKind::OracleMh,
            "oracle-barker" => CorrectorKind::OracleBarker,
            other => CorrectorKind::Quadrature(other.parse().map_err(|_| {
                Error::config(format!(
                    "unknown corrector {other:?} (expected none, ula, two-coin, simpson13, \
                     trapezoid, simpson38, hybrid, oracle-mh or oracle-barker)"
                ))
            })?),
        })
    }
}

/// A single Langevin corrector transition: proposal plus accept/reject rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorKernel {
    pub kind: CorrectorKind,
    pub bound: BoundStrategy,
    pub max_rounds: u64,
}

impl CorrectorKernel {
    pub fn new(kind: CorrectorKind) -> Self {
        CorrectorKernel {
            kind,
            bound: BoundStrategy::BoundedDenoiser,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }

    pub fn with_bound(mut self, bound: BoundStrategy) -> Self {
        self.bound = bound;
        self
    }

    pub fn with_max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    fn needs_bound(&self) -> bool {
        matches!(
            self.kind,
            CorrectorKind::TwoCoin | CorrectorKind::Hybrid { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorSpec {
    pub kernel: CorrectorKernel,
    pub steps_per_level: usize,
    pub step_rule: StepRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schedule: NoiseSchedule,
    pub predictor: PredictorSpec,
    pub corrector: CorrectorSpec,
    pub chains: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool. Output does not depend on it.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.predictor.steps == 0 {
            return Err(Error::config("predictor steps must be >= 1"));
        }
        if self.chains == 0 {
            return Err(Error::config("chains must be >= 1"));
        }
        let c = self.corrector.step_rule.constant();
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::config(format!(
                "step-size constant must be > 0, got {c}"
            )));
        }
        if self.corrector.kernel.max_rounds == 0 {
            return Err(Error::config("max_rounds must be >= 1"));
        }
        if let CorrectorKind::Hybrid { rule, .. } | CorrectorKind::Quadrature(rule) =
            self.corrector.kernel.kind
        {
            if rule.panels == 0 {
                return Err(Error::config("quadrature rule needs at least one panel"));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be >= 1"));
        }
        Ok(())
    }
}

/// Corrector statistics for one noise level, summed over chains.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevelStats {
    pub t: f64,
    pub h: f64,
    pub proposals: u64,
    pub accepted: u64,
    pub rounds: u64,
    /// Score queries spent inside accept/reject decisions.
    pub decision_queries: u64,
    /// Decisions that fell back to quadrature in the hybrid rule.
    pub fallbacks: u64,
    pub squared_jumps: f64,
}

impl LevelStats {
    fn record(&mut self, d: &Decision, jump: f64, kind: CorrectorKind) {
        self.proposals += 1;
        self.accepted += d.accepted as u64;
        self.rounds += d.rounds;
        self.decision_queries += d.score_queries;
        let hybrid = matches!(kind, CorrectorKind::Hybrid { .. });
        self.fallbacks += (hybrid && d.path == DecisionPath::Quadrature) as u64;
        self.squared_jumps += jump;
    }

    fn merge(&mut self, other: &LevelStats) {
        self.proposals += other.proposals;
        self.accepted += other.accepted;
        self.rounds += other.rounds;
        self.decision_queries += other.decision_queries;
        self.fallbacks += other.fallbacks;
        self.squared_jumps += other.squared_jumps;
    }

    fn ratio(&self, num: f64) -> f64 {
        if self.proposals == 0 {
            f64::NAN
        } else {
            num / self.proposals as f64
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.ratio(self.accepted as f64)
    }

    pub fn mean_rounds(&self) -> f64 {
        self.ratio(self.rounds as f64)
    }

    pub fn mean_queries(&self) -> f64 {
        self.ratio(self.decision_queries as f64)
    }

    pub fn esjd(&self) -> f64 {
        self.ratio(self.squared_jumps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub samples: Vec<StateVector>,
    /// One entry per corrected level, from high to low noise.
    pub levels: Vec<LevelStats>,
    pub predictor_queries: u64,
    pub corrector_queries: u64,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn total_queries(&self) -> u64 {
        self.predictor_queries + self.corrector_queries
    }

    pub fn acceptance_rate(&self) -> f64 {
        let (a, p) = self
            .levels
            .iter()
            .fold((0, 0), |(a, p), l| (a + l.accepted, p + l.proposals));
        if p == 0 {
            f64::NAN
        } else {
            a as f64 / p as f64
        }
    }

    /// Mean squared corrector jump over all corrector steps.
    pub fn esjd(&self) -> f64 {
        let (s, p) = self
            .levels
            .iter()
            .fold((0.0, 0), |(s, p), l| (s + l.squared_jumps, p + l.proposals));
        if p == 0 {
            f64::NAN
        } else {
            s / p as f64
        }
    }
}

/// RNG for one chain: the run seed selects the key, the chain index the stream.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// DDPM ancestral update `x ← (x + β s(x, t_hi)) / √(1 - β) + √β z`.
pub fn ancestral_step<R: Rng + ?Sized>(
    x: &[f64],
    oracle: &mut ScoreOracle,
    t_hi: f64,
    beta: f64,
    rng: &mut R,
) -> Result<StateVector> {
    let z: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
    ancestral_step_with_noise(x, oracle, t_hi, beta, &z)
}

pub fn ancestral_step_with_noise(
    x: &[f64],
    oracle: &mut ScoreOracle,
    t_hi: f64,
    beta: f64,
    z: &[f64],
) -> Result<StateVector> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!(
            "ancestral step needs 0 < beta < 1, got {beta}"
        )));
    }
    let s = oracle.score(x, t_hi)?;
    let scale = 1.0 / (1.0 - beta).sqrt();
    let noise = beta.sqrt();
    let out: StateVector = x
        .iter()
        .zip(&s)
        .zip(z)
        .map(|((xi, si), zi)| scale * (xi + beta * si) + noise * zi)
        .collect();
    check_finite("ancestral update", &out)?;
    Ok(out)
}

/// Forward-time velocity of the probability-flow ODE, `f_t x - (g_t² / 2) s(x, t)`.
fn flow_velocity(
    x: &[f64],
    oracle: &mut ScoreOracle,
    schedule: &NoiseSchedule,
    t: f64,
    drift_time: f64,
) -> Result<StateVector> {
    let f = schedule.drift(drift_time)?;
    let g = schedule.diffusion(drift_time)?;
    let s = oracle.score(x, t)?;
    let v: StateVector = x
        .iter()
        .zip(&s)
        .map(|(xi, si)| f * xi - 0.5 * g * g * si)
        .collect();
    check_finite("probability-flow drift", &v)?;
    Ok(v)
}

/// Time at which drift coefficients are read for the interval `[t_lo, t_hi]`: its midpoint,
/// so piecewise-constant schedules pick the segment being crossed.
fn segment_time(t_lo: f64, t_hi: f64) -> f64 {
    0.5 * (t_lo + t_hi)
}

/// One explicit Euler step of the probability-flow ODE from `t_hi` down to `t_hi - dt`.
pub fn pf_ode_step_euler(
    x: &[f64],
    oracle: &mut ScoreOracle,
    schedule: &NoiseSchedule,
    t_hi: f64,
    dt: f64,
) -> Result<StateVector> {
    check_ode_step(t_hi, dt)?;
    let t_lo = (t_hi - dt).max(0.0);
    let coeff_t = coefficient_time(schedule, t_lo, t_hi, t_hi);
    let v = flow_velocity(x, oracle, schedule, t_hi, coeff_t)?;
    Ok(x.iter().zip(&v).map(|(xi, vi)| xi - dt * vi).collect())
}

/// Heun step: Euler predictor then the trapezoidal average of both velocities.
pub fn pf_ode_step_heun(
    x: &[f64],
    oracle: &mut ScoreOracle,
    schedule: &NoiseSchedule,
    t_hi: f64,
    dt: f64,
) -> Result<StateVector> {
    check_ode_step(t_hi, dt)?;
    let t_lo = (t_hi - dt).max(0.0);
    let v_hi = flow_velocity(
        x,
        oracle,
        schedule,
        t_hi,
        coefficient_time(schedule, t_lo, t_hi, t_hi),
    )?;
    let euler: StateVector = x.iter().zip(&v_hi).map(|(xi, vi)| xi - dt * vi).collect();
    let v_lo = flow_velocity(
        &euler,
        oracle,
        schedule,
        t_lo,
        coefficient_time(schedule, t_lo, t_hi, t_lo),
    )?;
    Ok(x.iter()
        .zip(v_hi.iter().zip(&v_lo))
        .map(|(xi, (a, b))| xi - 0.5 * dt * (a + b))
        .collect())
}

fn coefficient_time(schedule: &NoiseSchedule, t_lo: f64, t_hi: f64, t: f64) -> f64 {
    match schedule {
        NoiseSchedule::VpDiscrete { .. } => segment_time(t_lo, t_hi),
        _ => t,
    }
}

fn check_ode_step(t_hi: f64, dt: f64) -> Result<()> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::domain(format!("ODE step needs dt > 0, got {dt}")));
    }
    if !(0.0..=1.0).contains(&t_hi) || t_hi - dt < -1e-12 {
        return Err(Error::domain(format!(
            "ODE step [{}, {t_hi}] leaves [0, 1]",
            t_hi - dt
        )));
    }
    Ok(())
}

/// Mutable state of one chain at a fixed noise level.
struct LevelChain<'a> {
    x: StateVector,
    /// Score of `x` at the current level, if already known.
    score: Option<StateVector>,
    oracle: &'a mut ScoreOracle,
}

/// Resolved per-level inputs of the corrector.
struct LevelKernel {
    t: f64,
    h: f64,
    bound: Option<BoundSpec>,
}

fn corrector_step<R: Rng + ?Sized>(
    chain: &mut LevelChain<'_>,
    kernel: &CorrectorKernel,
    level: &LevelKernel,
    rng: &mut R,
) -> Result<(Decision, f64)> {
    let score_x = match chain.score.take() {
        Some(s) => s,
        None => chain.oracle.score(&chain.x, level.t)?,
    };
    if kernel.kind == CorrectorKind::Ula {
        let sqrt_h = level.h.sqrt();
        let next: StateVector = chain
            .x
            .iter()
            .zip(&score_x)
            .map(|(xi, si)| xi + 0.5 * level.h * si + sqrt_h * rng.sample::<f64, _>(StandardNormal))
            .collect();
        check_finite("proposal", &next)?;
        let jump = dist_sq(&next, &chain.x);
        chain.x = next;
        return Ok((Decision::single(true, 0, DecisionPath::Unadjusted), jump));
    }
    let p = ula_propose_from(&chain.x, score_x, chain.oracle, level.t, level.h, rng)?;
    let oracle = &mut *chain.oracle;
    let d = match kernel.kind {
        CorrectorKind::TwoCoin => {
            let c = bound_c(
                &p,
                level.bound.as_ref().expect("bound resolved"),
                oracle.model(),
            )?;
            two_coin_decision(&p, oracle, c, rng, kernel.max_rounds)?
        }
        CorrectorKind::Hybrid { rule, rounds } => {
            let c = bound_c(
                &p,
                level.bound.as_ref().expect("bound resolved"),
                oracle.model(),
            )?;
            hybrid_decision(&p, oracle, c, &rule, rounds, rng)?
        }
        CorrectorKind::Quadrature(rule) => mh_decision_quadrature(&p, oracle, &rule, rng)?,
        CorrectorKind::OracleMh => oracle_mh_decision(&p, oracle, rng)?,
        CorrectorKind::OracleBarker => oracle_barker_decision(&p, oracle, rng)?,
        CorrectorKind::Ula | CorrectorKind::None => unreachable!("handled above"),
    };
    let jump;
    if d.accepted {
        jump = dist_sq(&p.x_prop, &p.x);
        chain.x = p.x_prop;
        chain.score = Some(p.score_prop);
    } else {
        jump = 0.0;
        chain.score = Some(p.score_x);
    }
    Ok((d, jump))
}

/// Running totals of a corrector-only chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrectorRun {
    pub stats: LevelStats,
    /// All score queries, proposals included.
    pub score_queries: u64,
    pub final_state: StateVector,
}

/// Runs `burn_in + steps` corrector transitions at a fixed level and passes every
/// post-burn-in state to `observe`. Statistics cover the post-burn-in steps only.
#[allow(clippy::too_many_arguments)]
pub fn run_corrector_chain<R: Rng + ?Sized>(
    oracle: &mut ScoreOracle,
    kernel: &CorrectorKernel,
    t: f64,
    h: f64,
    x0: StateVector,
    burn_in: usize,
    steps: usize,
    rng: &mut R,
    mut observe: impl FnMut(&[f64]),
) -> Result<CorrectorRun> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::domain(format!("step size must be > 0, got {h}")));
    }
    let bound = if kernel.needs_bound() {
        Some(kernel.bound.resolve(oracle.model(), t)?)
    } else {
        None
    };
    let level = LevelKernel { t, h, bound };
    let mut stats = LevelStats {
        t,
        h,
        ..LevelStats::default()
    };
    let mut chain = LevelChain {
        x: x0,
        score: None,
        oracle,
    };
    let mut queries_at_burn_in = chain.oracle.queries();
    for i in 0..burn_in + steps {
        if i == burn_in {
            queries_at_burn_in = chain.oracle.queries();
        }
        if kernel.kind == CorrectorKind::None {
            if i >= burn_in {
                observe(&chain.x);
            }
            continue;
        }
        let (d, jump) = corrector_step(&mut chain, kernel, &level, rng)?;
        if i >= burn_in {
            stats.record(&d, jump, kernel.kind);
            observe(&chain.x);
        }
    }
    let score_queries = chain.oracle.queries() - queries_at_burn_in;
    Ok(CorrectorRun {
        stats,
        score_queries,
        final_state: chain.x,
    })
}

struct ChainOutput {
    sample: StateVector,
    levels: Vec<LevelStats>,
    predictor_queries: u64,
    corrector_queries: u64,
}

struct Plan {
    /// `(t_lo, t_hi, h)` per level, from high to low noise; `h` is `None` where no
    /// correction runs.
    levels: Vec<(f64, f64, Option<f64>, Option<BoundSpec>)>,
}

fn plan(model: &dyn ScoreModel, config: &RunConfig) -> Result<Plan> {
    let n = config.predictor.steps;
    let kernel = &config.corrector.kernel;
    let correcting = kernel.kind != CorrectorKind::None && config.corrector.steps_per_level > 0;
    let mut levels = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let t_lo = k as f64 / n as f64;
        let t_hi = (k + 1) as f64 / n as f64;
        // Diffused point clouds collapse to atoms at zero noise; nothing to correct there.
        let degenerate = model
            .tweedie_params(t_lo)
            .is_some_and(|(r, sigma)| r * sigma <= 0.0);
        let (h, bound) = if correcting && !degenerate {
            let h = config
                .corrector
                .step_rule
                .step_size(&config.schedule, t_lo, t_hi)?;
            let bound = if kernel.needs_bound() {
                Some(kernel.bound.resolve(model, t_lo)?)
            } else {
                None
            };
            (Some(h), bound)
        } else {
            (None, None)
        };
        levels.push((t_lo, t_hi, h, bound));
    }
    Ok(Plan { levels })
}

fn run_chain(
    model: &Arc<dyn ScoreModel>,
    config: &RunConfig,
    plan: &Plan,
    chain: usize,
) -> Result<ChainOutput> {
    let mut rng = chain_rng(config.seed, chain);
    let mut oracle = ScoreOracle::new(Arc::clone(model));
    let dim = model.dim();
    let mut x: StateVector = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut levels = Vec::new();
    let mut predictor_queries = 0;
    let n = config.predictor.steps;
    for (idx, &(t_lo, t_hi, h, bound)) in plan.levels.iter().enumerate() {
        let level_index = n - idx - 1;
        let wrap = |e: Error| Error::Run {
            level: level_index,
            chain,
            source: Box::new(e),
        };
        let before = oracle.queries();
        x = predict(&x, &mut oracle, config, t_lo, t_hi, &mut rng).map_err(wrap)?;
        predictor_queries += oracle.queries() - before;

        let Some(h) = h else { continue };
        let kernel_level = LevelKernel { t: t_lo, h, bound };
        let mut stats = LevelStats {
            t: t_lo,
            h,
            ..LevelStats::default()
        };
        let mut state = LevelChain {
            x,
            score: None,
            oracle: &mut oracle,
        };
        for _ in 0..config.corrector.steps_per_level {
            let (d, jump) = corrector_step(
                &mut state,
                &config.corrector.kernel,
                &kernel_level,
                &mut rng,
            )
            .map_err(wrap)?;
            stats.record(&d, jump, config.corrector.kernel.kind);
        }
        x = state.x;
        levels.push(stats);
    }
    let corrector_queries = oracle.queries() - predictor_queries;
    Ok(ChainOutput {
        sample: x,
        levels,
        predictor_queries,
        corrector_queries,
    })
}

fn predict<R: Rng + ?Sized>(
    x: &[f64],
    oracle: &mut ScoreOracle,
    config: &RunConfig,
    t_lo: f64,
    t_hi: f64,
    rng: &mut R,
) -> Result<StateVector> {
    let dt = t_hi - t_lo;
    match config.predictor.kind {
        PredictorKind::None => Ok(x.to_vec()),
        PredictorKind::PfOdeEuler => pf_ode_step_euler(x, oracle, &config.schedule, t_hi, dt),
        PredictorKind::PfOdeHeun => {
            let (_, sigma_lo) = config.schedule.marginal_params(t_lo)?;
            // The score is singular at zero noise; finish with an Euler step.
            if sigma_lo > 0.0 {
                pf_ode_step_heun(x, oracle, &config.schedule, t_hi, dt)
            } else {
                pf_ode_step_euler(x, oracle, &config.schedule, t_hi, dt)
            }
        }
        PredictorKind::Ancestral => {
            let beta = config.schedule.transition_beta(t_lo, t_hi)?;
            ancestral_step(x, oracle, t_hi, beta, rng)
        }
    }
}

/// Runs every chain from `N(0, I)` at `t = 1` down to `t = 0`.
///
/// Chains use independent RNG streams and are merged in chain order, so the report is
/// identical for any thread count.
pub fn run_pc(model: Arc<dyn ScoreModel>, config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let plan = plan(model.as_ref(), config)?;
    let work = || -> Vec<Result<ChainOutput>> {
        (0..config.chains)
            .into_par_iter()
            .map(|c| run_chain(&model, config, &plan, c))
            .collect()
    };
    let outputs = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut report = RunReport {
        samples: Vec::with_capacity(config.chains),
        levels: Vec::new(),
        predictor_queries: 0,
        corrector_queries: 0,
        wall_time_secs: 0.0,
    };
    for out in outputs {
        let out = out?;
        if report.levels.is_empty() {
            report.levels = out.levels.clone();
        } else {
            for (acc, l) in report.levels.iter_mut().zip(&out.levels) {
                acc.merge(l);
            }
        }
        report.samples.push(out.sample);
        report.predictor_queries += out.predictor_queries;
        report.corrector_queries += out.corrector_queries;
    }
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}
