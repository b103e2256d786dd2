use std::path::PathBuf;
use std::process::ExitCode;

use bathmodes::{bcf_from_modes_at, compare, BcfSeries};
use bathmodes_cli::config::{load_with_overrides, RunConfig};
use bathmodes_cli::output::{self, write_file};
use bathmodes_cli::run::{self, RunError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bathmodes", version, about = "Discretize bosonic bath spectral densities into discrete modes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize with every configured method and write mode tables.
    Discretize(Common),
    /// Reference correlation function on the verification grid.
    Bcf {
        #[command(flatten)]
        common: Common,
        /// Also reconstruct the correlation function of this mode table.
        #[arg(long)]
        modes: Option<PathBuf>,
    },
    /// Run every configured method against the reference and write error reports.
    Compare(Common),
    /// Chain coefficients for each BSDO interval.
    Chain(Common),
}

macro_rules! overrides {
    ($($key:ident),* $(,)?) => {
        /// Flags mirror config keys and take precedence over the file.
        #[derive(Args, Debug, Default)]
        struct Overrides {
            $(
                #[arg(long, value_name = "VALUE")]
                $key: Option<String>,
            )*
        }

        impl Overrides {
            fn pairs(&self) -> Vec<(String, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$key {
                        out.push((stringify!($key).to_string(), v.clone()));
                    }
                )*
                out
            }
        }
    };
}

overrides!(
    exponent_s,
    coupling_alpha,
    cutoff_frequency_cm1,
    tabulated_file,
    smoothing_lambda,
    aaa_tolerance,
    aaa_max_degree,
    omega_floor_cm1,
    temperature_k,
    method,
    cutoff_time_fs,
    omega_lo_cm1,
    omega_hi_cm1,
    time_points,
    frequency_points,
    rank,
    tolerance,
    quadrature_rule,
    ld_ratio,
    ld_modes,
    mdm_modes,
    bsdo_modes,
    bsdo_intervals_cm1,
    verification_points,
    verification_time_fs,
    reference_omega_lo_cm1,
    reference_omega_hi_cm1,
    oracle_tolerance,
    output_dir,
);

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl Common {
    fn load(&self) -> Result<RunConfig, RunError> {
        Ok(load_with_overrides(self.config.as_deref(), &self.overrides.pairs())?)
    }
}

fn discretize(common: &Common) -> Result<(), RunError> {
    let cfg = common.load()?;
    let hash = cfg.hash()?;
    let table = cfg.to_table();
    for (job, bath) in run::run_discretize(&cfg)? {
        let (csv, json) = output::modes_paths(&cfg.output_dir, &job);
        write_file(&csv, &output::modes_csv(&job, &bath, &hash))?;
        write_file(&json, &output::modes_json(&job, &bath, &table, &hash))?;
        for w in &bath.provenance.warnings {
            eprintln!("warning ({}): {w}", job.label());
        }
        match bath.provenance.achieved_error {
            Some(e) => println!("{}: {} modes, fit-grid error {e:.3e} -> {}", job.label(), bath.len(), csv.display()),
            None => println!("{}: {} modes -> {}", job.label(), bath.len(), csv.display()),
        }
    }
    Ok(())
}

fn bcf(common: &Common, modes: Option<&PathBuf>) -> Result<(), RunError> {
    let cfg = common.load()?;
    let reference = run::run_bcf(&cfg)?;
    let path = cfg.output_dir.join("bcf_reference.csv");
    write_file(&path, &output::bcf_csv(&reference, "reference"))?;
    println!("reference: {} points, |C(0)| = {} -> {}", reference.times().len(), reference.normalization(), path.display());
    if let Some(file) = modes {
        let text = std::fs::read_to_string(file).map_err(|source| RunError::Io { path: file.clone(), source })?;
        let modes = output::read_modes_csv(&text).map_err(|message| bathmodes_cli::ConfigError::Invalid {
            key: "--modes".into(),
            message: format!("{}: {message}", file.display()),
        })?;
        let numerical = |source| RunError::Numerical { context: "mode table".into(), source };
        let series = BcfSeries::new(reference.times().to_vec(), bcf_from_modes_at(&modes, reference.times())).map_err(numerical)?;
        let report = compare(&series, &reference, "modes").map_err(numerical)?;
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("modes");
        let path = cfg.output_dir.join(format!("bcf_{stem}.csv"));
        write_file(&path, &output::bcf_csv(&series, &file.display().to_string()))?;
        println!("{stem}: max error {:.3e} -> {}", report.max_error, path.display());
    }
    Ok(())
}

fn compare_all(common: &Common) -> Result<u8, RunError> {
    let cfg = common.load()?;
    let hash = cfg.hash()?;
    let table = cfg.to_table();
    let bundle = run::run_compare(&cfg)?;
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    write_file(&cfg.output_dir.join("bcf_reference.csv"), &output::bcf_csv(&bundle.reference, "reference"))?;
    write_file(&cfg.output_dir.join("compare_panel.csv"), &output::compare_panel_csv(&bundle))?;
    write_file(&cfg.output_dir.join("compare_errors.csv"), &output::compare_errors_csv(&bundle))?;
    let mut failed = Vec::new();
    for r in &bundle.results {
        match &r.outcome {
            Ok(o) => {
                let (csv, json) = output::modes_paths(&cfg.output_dir, &r.job);
                write_file(&csv, &output::modes_csv(&r.job, &o.bath, &hash))?;
                write_file(&json, &output::modes_json(&r.job, &o.bath, &table, &hash))?;
                println!(
                    "{:<18} {:>4} modes  max {:.3e}  mean {:.3e}  sum g^2 mismatch {:.3e}",
                    r.job.label(),
                    o.bath.len(),
                    o.report.max_error,
                    o.report.mean_error,
                    o.weight_mismatch
                );
            }
            Err(e) => {
                println!("{:<18} failed: {e}", r.job.label());
                failed.push(r.job.label());
            }
        }
    }
    if failed.is_empty() {
        return Ok(0);
    }
    // outputs of the successful methods are already on disk
    eprintln!("error: {} of {} methods failed ({})", failed.len(), bundle.results.len(), failed.join(", "));
    Ok(3)
}

fn chain(common: &Common) -> Result<(), RunError> {
    let cfg = common.load()?;
    for (interval, c) in run::run_chain(&cfg)? {
        let job = run::Job { method: bathmodes::Method::Bsdo, interval: Some(interval) };
        let path = cfg.output_dir.join(format!("chain_{}.csv", job.slug()));
        write_file(&path, &output::chain_csv(interval, &c))?;
        println!("{}: {} sites, delta_w = {} -> {}", job.label(), c.site_energies.len(), c.delta_w, path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Discretize(c) => discretize(c).map(|_| 0),
        Command::Bcf { common, modes } => bcf(common, modes.as_ref()).map(|_| 0),
        Command::Compare(c) => compare_all(c),
        Command::Chain(c) => chain(c).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
