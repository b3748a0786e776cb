use carnot::cli::{
    cmd_bch, cmd_chart, cmd_deform, cmd_osculate, cmd_selftest, cmd_validate, load, CliError,
    Overrides,
};
use clap::{Parser, Subcommand};
use std::process::ExitCode;
use std::time::Instant;

/// Exact computations on filtered manifolds: osculating group bundles and
/// the exponential charts of the tangent groupoid.
#[derive(Parser)]
#[command(name = "carnot", version, about)]
struct Cli {
    /// Manifest path, or the name of a bundled example
    /// (abelian3, heisenberg3, engel4, twisted-heisenberg).
    #[arg(long, global = true, default_value = "heisenberg3")]
    manifest: String,
    /// Emit the canonical JSON report instead of text.
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// Emit the text report (default).
    #[arg(long, global = true)]
    text: bool,
    /// Seed override for every randomized sweep.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// RK4 step count override for the chart integrator.
    #[arg(long, global = true)]
    steps: Option<u32>,
    /// Tolerance override for numeric checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Injectivity-domain radius override.
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the filtration, the osculating algebra axioms at all
    /// sample points, and connection gradedness.
    Validate,
    /// Print weights and structure constants of the osculating algebra at
    /// a point.
    Osculate {
        #[arg(long)]
        point: String,
    },
    /// Baker-Campbell-Hausdorff product of two vectors in the osculating
    /// algebra at a point (pass --vector twice: u then v).
    Bch {
        #[arg(long)]
        point: String,
        #[arg(long = "vector", action = clap::ArgAction::Append, required = true)]
        vectors: Vec<String>,
    },
    /// Evaluate the global exponential chart at (x, v, t).
    Chart {
        #[arg(long)]
        point: String,
        #[arg(long)]
        vector: String,
        #[arg(long)]
        t: String,
        /// Also invert the chart and report the round-trip error.
        #[arg(long)]
        roundtrip: bool,
    },
    /// Deformation table: chart-pullback products against the osculating
    /// limit (pass --vector twice: v then w).
    Deform {
        #[arg(long)]
        point: String,
        #[arg(long = "vector", action = clap::ArgAction::Append, required = true)]
        vectors: Vec<String>,
        /// Comma-separated rational t values, e.g. "1,1/2,1/4,1/8".
        #[arg(long = "t-seq")]
        t_seq: Option<String>,
    },
    /// Run the full invariant suite on the bundled manifests.
    Selftest,
}

fn two_vectors<'a>(vectors: &'a [String], what: &str) -> Result<(&'a str, &'a str), CliError> {
    match vectors {
        [u, v] => Ok((u, v)),
        _ => Err(CliError::Usage(format!(
            "{what} needs exactly two --vector arguments, got {}",
            vectors.len()
        ))),
    }
}

fn run(cli: &Cli) -> Result<carnot::report::Report, CliError> {
    let over = Overrides {
        seed: cli.seed,
        steps: cli.steps,
        tol: cli.tol,
        radius: cli.radius,
    };
    match &cli.command {
        Command::Selftest => cmd_selftest(&over),
        Command::Validate => cmd_validate(&load(&cli.manifest)?, &over),
        Command::Osculate { point } => cmd_osculate(&load(&cli.manifest)?, point, &over),
        Command::Bch { point, vectors } => {
            let (u, v) = two_vectors(vectors, "bch")?;
            cmd_bch(&load(&cli.manifest)?, point, u, v, &over)
        }
        Command::Chart {
            point,
            vector,
            t,
            roundtrip,
        } => cmd_chart(&load(&cli.manifest)?, point, vector, t, *roundtrip, &over),
        Command::Deform {
            point,
            vectors,
            t_seq,
        } => {
            let (v, w) = two_vectors(vectors, "deform")?;
            cmd_deform(&load(&cli.manifest)?, point, v, w, t_seq.as_deref(), &over)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            eprintln!("elapsed: {} ms", started.elapsed().as_millis());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
