use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod fail;
mod output;

use config::{Command, EngineKind, Radius, RunConfig};
use fail::Failure;

/// Coverage, ASE and design-problem sweeps for ultra-dense networks.
///
/// Every command writes a CSV table whose comment block holds the complete
/// configuration, so `udn rerun <file>` reproduces it exactly.
#[derive(Debug, Parser)]
#[command(name = "udn", version)]
struct Cli {
    /// TOML configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for Monte Carlo trials (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output CSV path; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    action: Action,
}

#[derive(Debug, Subcommand)]
enum Action {
    /// Coverage limit, its power-law factors and the ASE limit.
    Limit,
    /// Coverage limit and dense approximation over a λ grid.
    CoverageSweep,
    /// Monte Carlo coverage and active-BS density at one scenario.
    Simulate,
    /// ASE at finite λ over a λ grid.
    AseSweep,
    /// Smallest BS density whose ASE is within ε of the limit.
    Deploy,
    /// UE density that maximizes the ASE.
    Schedule,
    /// Data for the coverage (fig1) or ASE (fig2) figure.
    Reproduce {
        #[arg(value_parser = ["fig1", "fig2"])]
        figure: String,
    },
    /// Runs the command named in the configuration file.
    Run,
    /// Re-runs the command recorded in a CSV written by this tool.
    Rerun { csv: PathBuf },
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    height_m: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    tx_power_dbm: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    noise_power_dbm: Option<f64>,
    /// Idle-mode exponent.
    #[arg(long, global = true, allow_hyphen_values = true)]
    q: Option<f64>,
    /// Minimum working SINR for ASE.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma0_db: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// Coverage threshold.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_db: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tail_fraction: Option<f64>,
    /// Window radius in km, or `auto`.
    #[arg(long, global = true)]
    radius_km: Option<Radius>,
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineKind>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda_from: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda_to: Option<f64>,
    #[arg(long, global = true)]
    points_per_decade: Option<usize>,
    /// UE densities to sweep (repeat or comma-separate).
    #[arg(long = "sweep-rho", global = true, value_delimiter = ',')]
    sweep_rho: Vec<f64>,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        let s = &mut c.scenario;
        set(&mut s.lambda_per_km2, &self.lambda);
        set(&mut s.rho_per_km2, &self.rho);
        set(&mut s.height_m, &self.height_m);
        set(&mut s.tx_power_dbm, &self.tx_power_dbm);
        set(&mut s.noise_power_dbm, &self.noise_power_dbm);
        set(&mut s.q, &self.q);
        set(&mut s.gamma0_db, &self.gamma0_db);
        set(&mut s.epsilon, &self.epsilon);
        let m = &mut c.simulation;
        set(&mut m.trials, &self.trials);
        set(&mut m.seed, &self.seed);
        set(&mut m.tail_fraction, &self.tail_fraction);
        set(&mut m.radius_km, &self.radius_km);
        set(&mut c.solver.engine, &self.engine);
        let w = &mut c.sweep;
        set(&mut w.gamma_db, &self.gamma_db);
        set(&mut w.lambda_from, &self.lambda_from);
        set(&mut w.lambda_to, &self.lambda_to);
        set(&mut w.points_per_decade, &self.points_per_decade);
        if !self.sweep_rho.is_empty() {
            w.rho = self.sweep_rho.clone();
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (mut cfg, command) = match &cli.action {
        Action::Rerun { csv } => {
            let text = std::fs::read_to_string(csv)
                .map_err(|e| Failure::io(format!("cannot read {}: {e}", csv.display())))?;
            let cfg = output::provenance(&text)?;
            let command = cfg
                .command
                .ok_or_else(|| Failure::config("the provenance block names no command"))?;
            (cfg, command)
        }
        action => {
            let mut cfg = match &cli.config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            cli.overrides.apply(&mut cfg);
            let command = match action {
                Action::Limit => Command::Limit,
                Action::CoverageSweep => Command::CoverageSweep,
                Action::Simulate => Command::Simulate,
                Action::AseSweep => Command::AseSweep,
                Action::Deploy => Command::Deploy,
                Action::Schedule => Command::Schedule,
                Action::Reproduce { figure } if figure == "fig1" => Command::ReproduceFig1,
                Action::Reproduce { .. } => Command::ReproduceFig2,
                Action::Run => cfg
                    .command
                    .ok_or_else(|| Failure::config("`run` needs a configuration with `command`"))?,
                Action::Rerun { .. } => unreachable!(),
            };
            (cfg, command)
        }
    };
    if cli.output.is_some() {
        cfg.output = cli.output.clone();
    }
    let table = commands::execute(&cfg, command, cli.workers)?;
    let document = output::render(&table, command, &cfg);
    match &cfg.output {
        Some(path) => output::write_atomic(path, &document),
        None => {
            print!("{document}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("{}", Failure::usage(first));
            return ExitCode::from(2);
        }
    };
    if cli.workers == Some(0) {
        eprintln!("{}", Failure::usage("--workers must be at least 1"));
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
