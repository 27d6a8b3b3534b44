use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stokes_mg_harness::config;
use stokes_mg_harness::run::{self, ManifestInfo, Outcome, Overrides};
use stokes_mg_harness::suites::{self, SuitePlan, SUITES};
use stokes_mg_harness::HarnessError;

#[derive(Parser)]
#[command(
    name = "stokes-mg",
    version,
    about = "Multigrid experiments for the staggered Stokes system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config file (TOML, `schema = 1`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of every experiment.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// LFA samples per direction of the low-frequency box.
    #[arg(long)]
    sample_density: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run suites and/or a config file.
    Run {
        /// Suite name; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// LFA sweep: the default omega curves, or the LFA request of a config.
    Lfa {
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form and instrumented smoother costs.
    Costs {
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Print the suite registry.
    ListSuites,
}

fn load_config(path: &PathBuf) -> Result<SuitePlan, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let exp = config::parse(&text).map_err(|e| match e {
        HarnessError::Config { line, message } => HarnessError::Config {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    Ok(SuitePlan {
        experiments: vec![exp],
        ..SuitePlan::default()
    })
}

fn print_summary(out: &Outcome) {
    for r in &out.convergence {
        println!(
            "{:<36} rho {:.3}  mean {:.3}{}",
            r.experiment,
            r.rho_final_ratio,
            r.rho_geomean,
            if r.diverged { "  diverged" } else { "" }
        );
    }
    for r in &out.lfa {
        println!(
            "{:<36} omega {:.2}  lfa {:.3}",
            r.experiment, r.omega, r.sup_rho
        );
    }
    for r in &out.properties {
        println!(
            "{:<36} {}  worst {:.2e} (tol {:.0e})",
            r.check,
            if r.passed { "ok  " } else { "FAIL" },
            r.worst,
            r.tolerance
        );
    }
}

fn execute(
    command: &str,
    sources: Vec<String>,
    mut plan: SuitePlan,
    common: &Common,
) -> Result<(), HarnessError> {
    let overrides = Overrides {
        seed: common.seed,
        sample_density: common.sample_density,
    };
    if common.sample_density == Some(0) {
        return Err(HarnessError::Config {
            line: None,
            message: "--sample-density must be positive".into(),
        });
    }
    overrides.apply(&mut plan);
    let out = run::execute(&plan)?;
    let info = ManifestInfo {
        command: command.to_string(),
        sources,
        config_hash: run::config_hash(&plan),
        overrides,
    };
    let files = run::write_outputs(&common.out, &out, &info)?;
    print_summary(&out);
    println!("wrote {} to {}", files.join(", "), common.out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::ListSuites => {
            for s in SUITES {
                println!("{:<24} {}", s.name, s.summary);
            }
            Ok(())
        }
        Command::Run { suite, common } => {
            let mut plan = SuitePlan::default();
            let mut sources = Vec::new();
            for name in suite.iter().filter(|s| !s.is_empty()) {
                plan.merge(suites::plan(name)?);
                sources.push(name.clone());
            }
            if let Some(path) = &common.config {
                plan.merge(load_config(path)?);
                sources.push(path.display().to_string());
            }
            execute("run", sources, plan, &common)
        }
        Command::Lfa { common } => {
            let (plan, source) = match &common.config {
                Some(path) => {
                    let mut p = load_config(path)?;
                    for e in &mut p.experiments {
                        e.measure = false;
                        e.lfa.get_or_insert_with(|| config::LfaRequest {
                            omegas: vec![e.cycle.smoother.omega],
                            sample_density: config::DEFAULT_SAMPLE_DENSITY,
                        });
                    }
                    (p, path.display().to_string())
                }
                None => (
                    suites::plan("paper-lfa-sweep")?,
                    "paper-lfa-sweep".to_string(),
                ),
            };
            execute("lfa", vec![source], plan, &common)
        }
        Command::Costs { out } => {
            let plan = suites::plan("costs")?;
            let common = Common {
                config: None,
                seed: None,
                out,
                sample_density: None,
            };
            execute("costs", vec!["costs".into()], plan, &common)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
