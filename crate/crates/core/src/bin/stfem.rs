use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stfem::harness::parse_method;
use stfem::{emit, run_convergence, run_level, Error, RunConfig};

/// Space-time finite element solver for the linear Schrödinger equation.
#[derive(Parser, Debug)]
#[command(name = "stfem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a single refinement level (the highest configured level).
    Solve(RunArgs),
    /// Run levels 0..=levels and report errors and orders of convergence.
    Convergence(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// key = value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// square:<m> or interval:<m>,<L>
    #[arg(long)]
    spatial: Option<String>,
    /// uniform or graded:<q>
    #[arg(long)]
    temporal: Option<String>,
    /// Terminal time.
    #[arg(long = "T")]
    t_end: Option<String>,
    /// Temporal elements at level 0.
    #[arg(long)]
    nt: Option<String>,
    /// Highest refinement level.
    #[arg(long)]
    levels: Option<String>,
    /// bs (Bartels-Stewart) or fd (fast diagonalization).
    #[arg(long)]
    solver: Option<String>,
    /// Thread budget for the solver.
    #[arg(long)]
    threads: Option<String>,
    /// manufactured or zero-source[:<re>[,<im>]]
    #[arg(long)]
    problem: Option<String>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// table or csv
    #[arg(long)]
    format: Option<String>,
    /// Retry with bs when fd reports a defective temporal core.
    #[arg(long)]
    fallback: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            config.merge_text(&text)?;
        }
        let overrides = [
            ("spatial", &self.spatial),
            ("temporal", &self.temporal),
            ("T", &self.t_end),
            ("nt", &self.nt),
            ("levels", &self.levels),
            ("threads", &self.threads),
            ("problem", &self.problem),
            ("format", &self.format),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        if let Some(s) = &self.solver {
            config.method = parse_method(s)?;
        }
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        if self.fallback {
            config.fallback = true;
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (args, single) = match &cli.command {
        Command::Solve(a) => (a, true),
        Command::Convergence(a) => (a, false),
    };
    let config = args.config()?;
    let rows = if single {
        let result = run_level(&config, config.levels)?;
        log::info!(
            "relative residual {:.2e}, decomposition {:.3} s, spatial solves {:.3} s",
            result.report.relative_residual,
            result.report.timings.decompose,
            result.report.timings.spatial_solves
        );
        vec![result.row()]
    } else {
        run_convergence(&config)?
    };
    let text = emit(&rows, config.format)?;
    match &config.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
