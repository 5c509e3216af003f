use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use randcycles_cli::config::{Experiment, Overrides};

/// Random cycles of i.i.d. random Markov interval maps.
#[derive(Debug, Parser)]
#[command(name = "randcycles", version)]
struct Args {
    /// System and experiment description (JSON)
    #[arg(long)]
    config: PathBuf,

    /// Experiment to run; overrides the config
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,

    /// Single period
    #[arg(long, conflicts_with = "n_list")]
    n: Option<usize>,

    /// Comma-separated periods
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,

    /// Single seed
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,

    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Target point for preimages
    #[arg(long)]
    x0: Option<f64>,

    /// Ulam cells
    #[arg(long)]
    cells: Option<usize>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        experiment: args.experiment,
        n: args.n.map(|n| vec![n]).or(args.n_list),
        seeds: args.seed.map(|s| vec![s]).or(args.seeds),
        x0: args.x0,
        cells: args.cells,
        out: args.out,
        threads: args.threads,
    };
    match randcycles_cli::run(&args.config, overrides) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
