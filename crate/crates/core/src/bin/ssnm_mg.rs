//! Experiment runner for the multigrid-preconditioned semismooth Newton
//! solver. Each subcommand runs one experiment, writes its result table as
//! CSV to the output directory, and with `--check` also evaluates the
//! built-in regression checks (exit code 0 only if all of them pass).

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use ssnm_mg::experiments::{self, CheckOutcome, TableArtifact};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "ssnm-mg", version, about = "constrained control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with the fields of this experiment's configuration;
    /// missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the CSV tables (env: SSNM_MG_OUT).
    #[arg(long, env = "SSNM_MG_OUT", default_value = "out")]
    out: PathBuf,
    /// Evaluate the built-in regression checks and fail on any miss.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral-distance decay table for the fixed 1D inactive region.
    Invitro1d(Common),
    /// Grid-sequenced constrained 2D solve with iteration counts.
    Invivo2d(Common),
    /// Eigenvalue dump of a single preconditioned pair.
    Spectrum(Common),
    /// Operator-gap scaling over the fixed 1D family.
    Normgap(Common),
    /// Two-grid vs multigrid variant comparison.
    CompareMg(Common),
}

fn load_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn write_artifact(dir: &Path, name: &str, artifact: &TableArtifact) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(format!("{name}.csv"));
    std::fs::write(&path, artifact.to_csv())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn report_checks(checks: &[CheckOutcome]) -> Result<()> {
    let mut ok = true;
    for c in checks {
        println!("{}", c.line());
        ok &= c.passed;
    }
    if !ok {
        bail!("one or more checks failed");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Invitro1d(common) => {
            let cfg = load_config(&common.config)?;
            let out = experiments::run_fixed_region_decay(&cfg)?;
            let path = write_artifact(&common.out, "invitro1d", &out.artifact)?;
            print!("{}", out.artifact.to_csv());
            eprintln!("wrote {}", path.display());
            if common.check {
                report_checks(&experiments::check_fixed_region_decay(&out.rows))?;
            }
        }
        Command::Invivo2d(common) => {
            let cfg: experiments::ConstrainedRunConfig = load_config(&common.config)?;
            let out = experiments::run_constrained_2d(&cfg)?;
            let path = write_artifact(&common.out, "invivo2d", &out.artifact)?;
            print!("{}", out.artifact.to_csv());
            eprintln!("wrote {}", path.display());
            if common.check {
                let mut checks = experiments::check_constrained_counts(&out.levels);
                if let Some(first) = out.levels.first() {
                    checks.push(experiments::check_inactive_fraction(
                        cfg.beta,
                        first.inactive_fraction,
                    ));
                }
                report_checks(&checks)?;
            }
        }
        Command::Spectrum(common) => {
            let cfg = load_config(&common.config)?;
            let out = experiments::run_spectrum(&cfg)?;
            let path = write_artifact(&common.out, "spectrum", &out.artifact)?;
            print!("{}", out.artifact.to_csv());
            eprintln!("wrote {}", path.display());
            if common.check {
                report_checks(&experiments::check_spectrum(&out.report))?;
            }
        }
        Command::Normgap(common) => {
            let cfg = load_config(&common.config)?;
            let out = experiments::run_norm_gap(&cfg)?;
            let path = write_artifact(&common.out, "normgap", &out.artifact)?;
            print!("{}", out.artifact.to_csv());
            eprintln!("wrote {}", path.display());
            if common.check {
                report_checks(&experiments::check_norm_gap(&out))?;
            }
        }
        Command::CompareMg(common) => {
            let cfg = load_config(&common.config)?;
            let out = experiments::run_compare_mg(&cfg)?;
            let path = write_artifact(&common.out, "compare_mg", &out.artifact)?;
            print!("{}", out.artifact.to_csv());
            eprintln!("wrote {}", path.display());
            if common.check {
                report_checks(&experiments::check_compare_mg(&out))?;
            }
        }
    }
    Ok(())
}
