use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use madm_cli::config::{load, ConfigSources};
use madm_cli::output::resolve_out_dir;
use madm_cli::{commands, run_suite, CliError, Effort, ExperimentConfig, PRESETS, SUITES, VERSION};

#[derive(Debug, Parser)]
#[command(name = "madm", version = VERSION, about = "Metropolis-adjusted diffusion sampling and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the predictor-corrector sampler and write samples, diagnostics and a report.
    Sample(ConfigArgs),
    /// Run a property suite and print JSON verdicts.
    Verify {
        /// One of: lemma1, two-coin-exactness, prop2-queries, quad-order, ula-bias,
        /// line-integral-identity, all.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use a tenth of the calibrated sample sizes.
        #[arg(long)]
        quick: bool,
    },
    /// Write the limiting efficiency curve and finite-dimension runs at its maximiser.
    Scaling(ConfigArgs),
    /// Regress quadrature error on step size for each configured rule.
    QuadOrder(ConfigArgs),
    /// Turn sample runs into gnuplot-ready point files and a distance table.
    Plotdata {
        /// Run directories written by `madm sample`.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the fully expanded configuration as TOML.
    Config(ConfigArgs),
    /// List the named presets.
    Presets,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML configuration file, merged over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; the MADM_OUT environment variable takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for chains; 1 gives bit-identical output, 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// ula, two-coin, simpson13, trapezoid, simpson38, hybrid, oracle-mh, oracle-barker or none.
    #[arg(long)]
    corrector: Option<String>,
    /// Override any configuration key, e.g. `--set run.chains=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("run.seed={seed}"));
        }
        if let Some(threads) = self.threads {
            overrides.push(format!("run.threads={threads}"));
        }
        if let Some(kind) = &self.corrector {
            overrides.push(format!(
                "corrector.kind={}",
                toml::Value::String(kind.clone())
            ));
        }
        load(&ConfigSources {
            preset: self.preset.as_deref(),
            file: self.config.as_deref(),
            overrides: &overrides,
        })
    }

    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        resolve_out_dir(self.out.as_deref(), &config.run.out)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sample(args) => {
            let config = args.load()?;
            let out = args.out_dir(&config);
            let summary = commands::sample(&config, &out)?;
            eprintln!(
                "wrote {} samples to {} ({} score queries, {:.2} s)",
                summary.samples,
                out.display(),
                summary.total_score_queries,
                summary.wall_time_secs
            );
            if let Some(c) = &summary.containment {
                eprintln!(
                    "95% containment distance {:.4}, mean distance {:.4}",
                    c.containment_distance, c.mean_distance
                );
            }
        }
        Command::Verify { suite, seed, quick } => {
            let effort = if quick { Effort::Quick } else { Effort::Full };
            let names: Vec<&str> = if suite == "all" {
                SUITES.to_vec()
            } else {
                vec![suite.as_str()]
            };
            let mut failed = Vec::new();
            for name in names {
                let report = run_suite(name, effort, seed)?;
                if !report.passed {
                    failed.push(report.suite.clone());
                }
                print_json(&report)?;
            }
            if !failed.is_empty() {
                return Err(CliError::VerifyFailed(failed.join(", ")));
            }
        }
        Command::Scaling(args) => {
            let config = args.load()?;
            let out = args.out_dir(&config);
            let (summary, _) = commands::scaling(&config, &out)?;
            print_json(&serde_json::json!({
                "optimal_ell": summary.optimal_ell,
                "optimal_acceptance": summary.optimal_acceptance,
                "optimal_efficiency": summary.optimal_efficiency,
                "out": out,
            }))?;
        }
        Command::QuadOrder(args) => {
            let config = args.load()?;
            let out = args.out_dir(&config);
            let summary = commands::quad_order(&config, &out)?;
            print_json(&summary.fits)?;
        }
        Command::Plotdata { runs, out } => {
            let out = resolve_out_dir(out.as_deref(), "plotdata");
            let series = commands::plotdata(&runs, &out)?;
            print_json(&series)?;
        }
        Command::Config(args) => {
            let config = args.load()?;
            print!(
                "{}",
                toml::to_string(&config)
                    .map_err(|e| CliError::Config(format!("cannot encode configuration: {e}")))?
            );
        }
        Command::Presets => {
            for name in PRESETS {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("madm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
