use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semnet::graph::{read_edge_list, write_metrics_csv, Graph, LowDegree, MetricsRow};
use semnet::infomap::{communities_table, infomap_search};
use semnet::infomet::{nmi_matrix, NmiConfig, NmiMode};
use semnet::pipeline::{run_pipeline, validate_config};
use semnet::topics::TopicMatrix;
use semnet::Error;

const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "semnet",
    version,
    about = "Topic-similarity networks from yearly speech corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full yearly pipeline described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print density, average path length, clustering and diameter of an edge list.
    Metrics {
        #[arg(long)]
        graph: PathBuf,
        /// Year written in the first column.
        #[arg(long, default_value_t = 0)]
        year: i32,
        /// How nodes with fewer than two neighbors enter the clustering mean.
        #[arg(long, value_enum, default_value_t = LowDegreeArg::Zero)]
        low_degree: LowDegreeArg,
    },
    /// Print map-equation communities of an edge list.
    Communities {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        year: i32,
    },
    /// Print the pairwise normalized mutual information of a theta CSV.
    Nmi {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long, default_value_t = 4)]
        bins: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Paired)]
        mode: ModeArg,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum LowDegreeArg {
    Zero,
    Exclude,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Paired,
    Mixture,
}

fn open(path: &Path) -> semnet::Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_graph(path: &Path) -> semnet::Result<Graph> {
    read_edge_list(open(path)?)
}

fn run(cli: Cli) -> semnet::Result<ExitCode> {
    let stdout = io::stdout();
    match cli.command {
        Command::Run { config } => {
            let config = validate_config(&config).map_err(|e| match e {
                Error::Config { .. } => e,
                other => Error::Config {
                    key: "--config".into(),
                    message: other.to_string(),
                },
            })?;
            let manifest = run_pipeline(&config)?;
            for y in &manifest.years {
                eprintln!("{}: {} documents, {:.1}s", y.year, y.n_docs, y.seconds);
            }
            eprintln!(
                "wrote {} ({} years, {} failed)",
                config.output_dir.display(),
                manifest.years.len(),
                manifest.failed_years.len()
            );
            if !manifest.is_complete() {
                return Ok(ExitCode::from(EXIT_PARTIAL));
            }
        }
        Command::Metrics {
            graph,
            year,
            low_degree,
        } => {
            let g = load_graph(&graph)?;
            let low = match low_degree {
                LowDegreeArg::Zero => LowDegree::Zero,
                LowDegreeArg::Exclude => LowDegree::Exclude,
            };
            let row = MetricsRow::compute(&g, year, low)?;
            write_metrics_csv(&[row], stdout.lock())?;
        }
        Command::Communities {
            graph,
            seed,
            trials,
            year,
        } => {
            let g = load_graph(&graph)?;
            let (part, score) = infomap_search(&g, seed, trials)?;
            communities_table(&part, g.labels(), year)?.write_csv(stdout.lock())?;
            eprintln!("codelength {:.6} bits, {} modules", score.codelength, part.n_modules());
        }
        Command::Nmi { theta, bins, mode } => {
            let theta = TopicMatrix::read_csv(open(&theta)?)?;
            let mode = match mode {
                ModeArg::Paired => NmiMode::Paired,
                ModeArg::Mixture => NmiMode::Mixture,
            };
            nmi_matrix(&theta, &NmiConfig { bins, mode })?.write_csv(stdout.lock())?;
        }
    }
    io::stdout().flush().ok();
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e @ Error::Config { .. }) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}
