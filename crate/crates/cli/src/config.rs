//! Experiment configuration: named presets, TOML files and `key=value` overrides, merged
//! in that order and validated against a closed schema.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use madm_core::adjust_quadrature::QuadratureRule;
use madm_core::sampler::{
    CorrectorKernel, CorrectorKind, CorrectorSpec, PredictorKind, PredictorSpec, RunConfig,
    StepRule,
};
use madm_core::targets::{
    generate_dataset, Dataset2D, DatasetName, DiffusedEmpirical, GaussianTarget, QuarticTarget,
};
use madm_core::{BoundStrategy, NoiseSchedule, ScheduleKind, ScoreModel};

use crate::CliError;

pub const PRESETS: [&str; 8] = [
    "fig1-checkerboard",
    "spiral",
    "funnel",
    "sierpinski",
    "pinwheel",
    "gaussian-bias",
    "scaling",
    "quad-order",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Preset the configuration was expanded from, if any.
    pub preset: String,
    pub target: TargetConfig,
    pub schedule: ScheduleConfig,
    pub predictor: PredictorConfig,
    pub corrector: CorrectorConfig,
    pub run: RunSection,
    pub scaling: ScalingConfig,
    pub quad_order: QuadOrderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// `dataset`, `gaussian` or `quartic`.
    pub kind: String,
    pub dataset: String,
    /// Size of the point cloud defining the diffused empirical target.
    pub points: usize,
    pub data_seed: u64,
    pub dim: usize,
    pub variance: f64,
    pub scale: f64,
    pub perturbation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// `vp-discrete`, `vp-continuous` or `edm`.
    pub kind: String,
    /// Length of the DDPM chain (`vp-discrete` only).
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorConfig {
    pub kind: String,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectorConfig {
    /// `none`, `ula`, `two-coin`, `trapezoid`, `simpson13`, `simpson38`, `hybrid`,
    /// `oracle-mh` or `oracle-barker`.
    pub kind: String,
    /// Fallback rule of the hybrid corrector.
    pub rule: String,
    pub steps: usize,
    /// `beta`, `sigma` or `fixed`.
    pub step_rule: String,
    pub step_scale: f64,
    /// `bounded-denoiser`, `lipschitz` or `manual:<C>`.
    pub bound: String,
    pub max_rounds: u64,
    pub hybrid_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub chains: usize,
    pub seed: u64,
    /// 0 uses every available core.
    pub threads: usize,
    pub out: String,
    pub verbosity: u8,
    /// Size of the independent true-sample cloud used for distance metrics (0 disables).
    pub reference_points: usize,
    pub reference_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub ell_min: f64,
    pub ell_max: f64,
    pub grid_points: usize,
    pub dims: Vec<usize>,
    pub proposals: usize,
    pub kernels: Vec<String>,
    pub max_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadOrderConfig {
    pub k_min: u32,
    pub k_max: u32,
    pub proposals: usize,
    pub rules: Vec<String>,
    pub scale: f64,
    pub perturbation: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: String::new(),
            target: TargetConfig {
                kind: "dataset".into(),
                dataset: "spiral".into(),
                points: 1000,
                data_seed: 0,
                dim: 1,
                variance: 1.0,
                scale: 1.0,
                perturbation: 0.0,
            },
            schedule: ScheduleConfig {
                kind: "vp-continuous".into(),
                steps: 1000,
                beta_min: 0.1,
                beta_max: 20.0,
            },
            predictor: PredictorConfig {
                kind: "ancestral".into(),
                steps: 40,
            },
            corrector: CorrectorConfig {
                kind: "hybrid".into(),
                rule: "simpson13".into(),
                steps: 20,
                step_rule: "beta".into(),
                step_scale: 0.1,
                bound: "bounded-denoiser".into(),
                max_rounds: madm_core::DEFAULT_MAX_ROUNDS,
                hybrid_rounds: madm_core::adjust_quadrature::DEFAULT_HYBRID_ROUNDS,
            },
            run: RunSection {
                chains: 1000,
                seed: 0,
                threads: 0,
                out: "madm-out".into(),
                verbosity: 0,
                reference_points: 5000,
                reference_seed: 1,
            },
            scaling: ScalingConfig {
                ell_min: 0.05,
                ell_max: 4.0,
                grid_points: 80,
                dims: vec![10, 100, 1000],
                proposals: 100_000,
                kernels: vec!["oracle-barker".into(), "two-coin".into()],
                max_rounds: 1000,
            },
            quad_order: QuadOrderConfig {
                k_min: 3,
                k_max: 9,
                proposals: 1000,
                rules: vec!["trapezoid".into(), "simpson13".into(), "simpson38".into()],
                scale: 1.0,
                perturbation: 0.1,
            },
        }
    }
}

/// Expands a named preset into a full configuration.
pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let mut c = ExperimentConfig {
        preset: name.to_string(),
        ..ExperimentConfig::default()
    };
    match name {
        "fig1-checkerboard" => {
            c.target.dataset = "checkerboard".into();
            c.predictor.kind = "pf-ode-euler".into();
            c.predictor.steps = 10;
            c.corrector.kind = "hybrid".into();
            c.corrector.steps = 5;
            c.corrector.step_rule = "sigma".into();
            c.corrector.step_scale = 1.5;
            c.corrector.hybrid_rounds = 2;
            c.run.chains = 10_000;
        }
        "spiral" => {
            c.target.dataset = "spiral".into();
            c.predictor.steps = 40;
            c.corrector.steps = 20;
            c.corrector.step_scale = 0.1;
        }
        "funnel" => {
            c.target.dataset = "funnel".into();
            c.predictor.steps = 10;
            c.corrector.steps = 20;
            c.corrector.step_scale = 1.0;
        }
        "sierpinski" | "pinwheel" => {
            c.target.dataset = name.into();
            c.predictor.steps = 20;
            c.corrector.steps = 30;
            c.corrector.step_scale = 0.01;
        }
        "gaussian-bias" => {
            c.target.kind = "gaussian".into();
            c.target.dim = 1;
            c.predictor.kind = "none".into();
            c.predictor.steps = 1;
            c.corrector.kind = "ula".into();
            c.corrector.steps = 200;
            c.corrector.step_rule = "fixed".into();
            c.corrector.step_scale = 0.5;
            c.run.chains = 10_000;
            c.run.reference_points = 0;
        }
        "scaling" => {
            c.target.kind = "gaussian".into();
            c.target.dim = 10;
            c.predictor.kind = "none".into();
            c.predictor.steps = 1;
            c.corrector.kind = "oracle-barker".into();
            c.corrector.steps = 100;
            c.corrector.step_rule = "fixed".into();
            // ℓ*² d^{-1/3} at d = 10.
            c.corrector.step_scale = 1.39;
            c.run.reference_points = 0;
        }
        "quad-order" => {
            c.target.kind = "quartic".into();
            c.target.perturbation = 0.1;
            c.predictor.kind = "none".into();
            c.predictor.steps = 1;
            c.corrector.kind = "simpson13".into();
            c.corrector.steps = 100;
            c.corrector.step_rule = "fixed".into();
            c.corrector.step_scale = 0.1;
            c.run.reference_points = 0;
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown preset {other:?}; valid presets: {}",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(c)
}

/// Where a configuration comes from, lowest precedence first.
#[derive(Debug, Default, Clone)]
pub struct ConfigSources<'a> {
    pub preset: Option<&'a str>,
    pub file: Option<&'a Path>,
    /// `section.key=value` assignments; values are TOML literals or bare strings.
    pub overrides: &'a [String],
}

pub fn load(sources: &ConfigSources<'_>) -> Result<ExperimentConfig, CliError> {
    let base = match sources.preset {
        Some(name) => preset(name)?,
        None => ExperimentConfig::default(),
    };
    let mut value = toml::Value::try_from(&base)
        .map_err(|e| CliError::Config(format!("cannot encode configuration: {e}")))?;
    if let Some(path) = sources.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: toml::Value = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // A file may name its own preset; it then replaces the base before merging.
        if let Some(name) = file.get("preset").and_then(|v| v.as_str()) {
            if sources.preset.is_none() && !name.is_empty() {
                value = toml::Value::try_from(preset(name)?)
                    .map_err(|e| CliError::Config(format!("cannot encode configuration: {e}")))?;
            }
        }
        merge(&mut value, file);
    }
    for assignment in sources.overrides {
        apply_override(&mut value, assignment)?;
    }
    let config: ExperimentConfig = value
        .try_into()
        .map_err(|e| CliError::Config(format!("invalid configuration: {e}")))?;
    config.validate()?;
    Ok(config)
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn apply_override(value: &mut toml::Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not key=value")))?;
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut keys: Vec<&str> = path.trim().split('.').collect();
    let last = keys
        .pop()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} has an empty key")))?;
    let mut slot = value;
    for k in keys {
        slot = slot
            .get_mut(k)
            .filter(|v| v.is_table())
            .ok_or_else(|| CliError::Config(format!("unknown configuration section {k:?}")))?;
    }
    let table = slot.as_table_mut().expect("checked table");
    if !table.contains_key(last) {
        return Err(CliError::Config(format!(
            "unknown configuration key {path:?}"
        )));
    }
    table.insert(last.to_string(), parsed);
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.schedule()?;
        self.run_config()?;
        if self.target.kind == "dataset" {
            self.dataset_name()?;
        }
        let s = &self.scaling;
        if !(s.ell_min > 0.0 && s.ell_min <= s.ell_max) || s.grid_points == 0 {
            return Err(CliError::Config(
                "scaling grid needs 0 < ell_min <= ell_max and grid_points >= 1".into(),
            ));
        }
        let q = &self.quad_order;
        if q.k_max < q.k_min || q.proposals == 0 {
            return Err(CliError::Config(
                "quad_order needs k_min <= k_max and proposals >= 1".into(),
            ));
        }
        for r in &q.rules {
            r.parse::<QuadratureRule>()?;
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule, CliError> {
        let s = &self.schedule;
        Ok(match s.kind.parse::<ScheduleKind>()? {
            ScheduleKind::VpDiscrete => {
                NoiseSchedule::vp_discrete(s.steps, s.beta_min, s.beta_max).map_err(config_error)?
            }
            ScheduleKind::VpContinuous => {
                NoiseSchedule::vp_continuous(s.beta_min, s.beta_max).map_err(config_error)?
            }
            ScheduleKind::Edm => NoiseSchedule::Edm,
        })
    }

    pub fn dataset_name(&self) -> Result<DatasetName, CliError> {
        Ok(self.target.dataset.parse::<DatasetName>()?)
    }

    /// The training cloud that defines the diffused empirical target.
    pub fn dataset(&self) -> Result<Dataset2D, CliError> {
        generate_dataset(
            self.dataset_name()?,
            self.target.points,
            self.target.data_seed,
        )
        .map_err(config_error)
    }

    /// An independent cloud of true samples for distance metrics.
    pub fn reference_cloud(&self) -> Result<Option<Dataset2D>, CliError> {
        if self.target.kind != "dataset" || self.run.reference_points == 0 {
            return Ok(None);
        }
        Ok(Some(
            generate_dataset(
                self.dataset_name()?,
                self.run.reference_points,
                self.run.reference_seed,
            )
            .map_err(config_error)?,
        ))
    }

    pub fn model(&self) -> Result<Arc<dyn ScoreModel>, CliError> {
        let t = &self.target;
        Ok(match t.kind.as_str() {
            "dataset" => Arc::new(
                DiffusedEmpirical::from_dataset(&self.dataset()?, self.schedule()?)
                    .map_err(config_error)?,
            ),
            "gaussian" => Arc::new(
                GaussianTarget::new(vec![0.0; t.dim.max(1)], t.variance).map_err(config_error)?,
            ),
            "quartic" => {
                Arc::new(QuarticTarget::perturbed(t.scale, t.perturbation).map_err(config_error)?)
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown target kind {other:?} (expected dataset, gaussian or quartic)"
                )))
            }
        })
    }

    pub fn corrector_kernel(&self) -> Result<CorrectorKernel, CliError> {
        let c = &self.corrector;
        let mut kind: CorrectorKind = c.kind.parse()?;
        if let CorrectorKind::Hybrid { .. } = kind {
            kind = CorrectorKind::Hybrid {
                rule: c.rule.parse()?,
                rounds: c.hybrid_rounds,
            };
        }
        Ok(CorrectorKernel::new(kind)
            .with_bound(c.bound.parse::<BoundStrategy>()?)
            .with_max_rounds(c.max_rounds))
    }

    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let c = &self.corrector;
        let step_rule = match c.step_rule.as_str() {
            "beta" => StepRule::BetaScaled(c.step_scale),
            "sigma" => StepRule::SigmaScaled(c.step_scale),
            "fixed" => StepRule::Fixed(c.step_scale),
            other => {
                return Err(CliError::Config(format!(
                    "unknown step rule {other:?} (expected beta, sigma or fixed)"
                )))
            }
        };
        let config = RunConfig {
            schedule: self.schedule()?,
            predictor: PredictorSpec {
                kind: self.predictor.kind.parse::<PredictorKind>()?,
                steps: self.predictor.steps,
            },
            corrector: CorrectorSpec {
                kernel: self.corrector_kernel()?,
                steps_per_level: c.steps,
                step_rule,
            },
            chains: self.run.chains,
            seed: self.run.seed,
            threads: (self.run.threads > 0).then_some(self.run.threads),
        };
        config.validate()?;
        Ok(config)
    }
}

fn config_error(e: madm_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            assert_eq!(c.preset, name);
        }
        assert!(matches!(preset("moons"), Err(CliError::Config(_))));
    }

    #[test]
    fn table_presets_carry_step_constants() {
        let s = preset("spiral").unwrap();
        assert_eq!(
            (s.predictor.steps, s.corrector.steps, s.corrector.step_scale),
            (40, 20, 0.1)
        );
        let f = preset("funnel").unwrap();
        assert_eq!(
            (f.predictor.steps, f.corrector.steps, f.corrector.step_scale),
            (10, 20, 1.0)
        );
        for name in ["sierpinski", "pinwheel"] {
            let p = preset(name).unwrap();
            assert_eq!(
                (p.predictor.steps, p.corrector.steps, p.corrector.step_scale),
                (20, 30, 0.01)
            );
            assert_eq!(p.corrector.step_rule, "beta");
        }
    }

    #[test]
    fn overrides_apply_and_reject_unknown_keys() {
        let sets = vec![
            "run.chains=7".to_string(),
            "corrector.kind=ula".to_string(),
            "scaling.dims=[5, 6]".to_string(),
        ];
        let c = load(&ConfigSources {
            preset: Some("spiral"),
            file: None,
            overrides: &sets,
        })
        .unwrap();
        assert_eq!(c.run.chains, 7);
        assert_eq!(c.corrector.kind, "ula");
        assert_eq!(c.scaling.dims, vec![5, 6]);

        for bad in ["run.chainz=1", "nope.x=1", "run=3", "corrector.kind=mala"] {
            let sets = vec![bad.to_string()];
            let r = load(&ConfigSources {
                preset: None,
                file: None,
                overrides: &sets,
            });
            assert!(matches!(r, Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn files_merge_over_presets() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "preset = \"funnel\"\n[run]\nchains = 3\n").unwrap();
        let c = load(&ConfigSources {
            preset: None,
            file: Some(&path),
            overrides: &[],
        })
        .unwrap();
        assert_eq!(c.target.dataset, "funnel");
        assert_eq!(c.run.chains, 3);

        std::fs::write(&path, "[run]\nchains = 3\ncolour = \"red\"\n").unwrap();
        let r = load(&ConfigSources {
            preset: None,
            file: Some(&path),
            overrides: &[],
        });
        assert!(matches!(r, Err(CliError::Config(_))));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = preset("fig1-checkerboard").unwrap();
        let text = toml::to_string(&c).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
