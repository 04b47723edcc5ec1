use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use waveguide_cli::config::Pipeline;
use waveguide_cli::error::CliError;
use waveguide_cli::manifest::RunManifest;
use waveguide_cli::{load, run, sweep, RunOptions};

#[derive(Parser)]
#[command(name = "waveguide", version, about = "Forward and inverse runs on curved quantum waveguides")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single-threaded execution with bit-reproducible scalars.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Override the guide dimension.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(2..=3))]
    dim: Option<u8>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline named in the config.
    Run,
    /// Assumption report and geometry checks.
    Validate,
    /// Assemble and eigensolve.
    Forward,
    /// Eigenpair reconstruction of the curvature.
    InverseEigen,
    /// Poisson reconstruction of the curvature.
    InversePoisson,
    /// Residual test of a solution pair against an alternative profile.
    Discriminate,
    /// Independent runs over values of one config field.
    Sweep {
        /// Dotted config path, e.g. `profile.a` or `grid.n_s`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; each is parsed as JSON when possible.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
    /// Reference-curve geometry.
    Geometry {
        #[command(subcommand)]
        action: GeometryAction,
    },
}

#[derive(Subcommand)]
enum GeometryAction {
    /// Write frames and edge metric factors along the curve.
    Dump,
}

fn summarize(m: &RunManifest) {
    println!("{}: exit {}", m.pipeline, m.exit_code);
    for (k, v) in &m.scalars {
        println!("  {k} = {v:.12e}");
    }
    for (k, v) in &m.flags {
        println!("  {k} = {v}");
    }
    for n in &m.notes {
        println!("  note: {n}");
    }
}

fn parse_value(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap_or_else(|_| serde_json::Value::String(text.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let opts = RunOptions {
        deterministic: g.deterministic,
        out: g.out.clone(),
        dim: g.dim.map(usize::from),
    };
    let Some(config) = g.config.clone() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };

    let fail = |e: CliError| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code() as u8)
    };

    let (pipeline, geometry) = match &cli.command {
        Command::Run => (None, false),
        Command::Validate => (Some(Pipeline::Validate), false),
        Command::Forward => (Some(Pipeline::Forward), false),
        Command::InverseEigen => (Some(Pipeline::InverseEigen), false),
        Command::InversePoisson => (Some(Pipeline::InversePoisson), false),
        Command::Discriminate => (Some(Pipeline::Discriminate), false),
        Command::Geometry {
            action: GeometryAction::Dump,
        } => (None, true),
        Command::Sweep { axis, values } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    return fail(CliError::Config {
                        path: String::new(),
                        message: format!("cannot read {}: {e}", config.display()),
                    })
                }
            };
            let mut base: serde_json::Value = match serde_json::from_str(&text) {
                Ok(v) => v,
                Err(e) => {
                    return fail(CliError::Config {
                        path: String::new(),
                        message: format!("not valid JSON: {e}"),
                    })
                }
            };
            if let Some(dim) = opts.dim {
                // resolve the override once on the base so every run sees it
                match waveguide_cli::config::from_value(base.clone()) {
                    Ok(mut c) => {
                        c.override_dim(dim);
                        base = serde_json::to_value(c).expect("config serializes");
                    }
                    Err(e) => return fail(e),
                }
            }
            let values: Vec<serde_json::Value> = values.iter().filter(|v| !v.trim().is_empty()).map(|v| parse_value(v.trim())).collect();
            return match sweep::sweep(base, axis, &values, &opts) {
                Ok(s) => {
                    if !g.quiet {
                        println!("sweep over {}: {} runs", s.axis, s.rows.len());
                        for r in &s.rows {
                            println!(
                                "  {} -> exit {}, lambda1 {}",
                                r.value,
                                r.exit_code,
                                r.lambda1.map(|l| format!("{l:.12}")).unwrap_or_else(|| "-".into())
                            );
                        }
                        for p in &s.lambda_orders {
                            println!("  observed lambda1 order {p:.4}");
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            };
        }
    };

    let cfg = match load(&config, pipeline) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let outcome = run(cfg, &opts, geometry);
    if let (Some(m), false) = (&outcome.manifest, g.quiet) {
        summarize(m);
    }
    match outcome.result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
