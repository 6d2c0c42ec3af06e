use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use satnet::commands::{self, GenTask};
use satnet::config::{self, ConfigMap, RunConfig};
use satnet::oracle::GradcheckOptions;
use satnet::train::EvalMode;
use satnet::Error;

#[derive(Parser)]
#[command(name = "satnet", version, about = "Differentiable MAXSAT layer: data, training, evaluation, checks")]
struct Cli {
    /// Worker threads for batch-parallel solves (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset file plus its manifest.
    Gen {
        /// parity | sudoku
        task: String,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Parity string length.
        #[arg(long, default_value_t = 20)]
        length: usize,
        /// Sudoku board size (4 or 9).
        #[arg(long, default_value_t = 9)]
        size: usize,
        /// Apply a fixed random bit permutation drawn from this seed.
        #[arg(long)]
        permute: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train from a config file (or a bundled preset name).
    Train {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Resume from a weight file, overriding `resume`.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate weights on a dataset file.
    Eval {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// prob | threshold | round:N
        #[arg(long, default_value = "threshold")]
        mode: String,
    },
    /// Solve one instance: 0/1/? bits on stdin with --weights, or a DIMACS file with --cnf.
    Solve {
        #[arg(long, conflicts_with = "cnf", required_unless_present = "cnf")]
        weights: Option<PathBuf>,
        #[arg(long)]
        cnf: Option<PathBuf>,
        /// prob | threshold | round:N (bits mode)
        #[arg(long, default_value = "threshold")]
        mode: String,
        /// Rounding samples (CNF mode).
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare analytic gradients with central differences on random layers.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 8)]
        max_real: usize,
        #[arg(long, default_value_t = 4)]
        max_aux: usize,
        #[arg(long, default_value_t = 8)]
        max_clauses: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        /// Optional output file for the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a weight file.
    Inspect {
        weights: PathBuf,
    },
}

fn load_config(name_or_path: &str, seed: Option<u64>, out: Option<PathBuf>, resume: Option<PathBuf>) -> satnet::Result<RunConfig> {
    let text = match config::preset(name_or_path) {
        Some(t) if !std::path::Path::new(name_or_path).exists() => t.to_string(),
        _ => std::fs::read_to_string(name_or_path)?,
    };
    let mut map = ConfigMap::parse(&text)?;
    map.apply_env(std::env::vars());
    if let Some(s) = seed {
        map.set("seed", s.to_string());
    }
    if let Some(o) = out {
        map.set("out_dir", o.display().to_string());
    }
    if let Some(r) = resume {
        map.set("resume", r.display().to_string());
    }
    RunConfig::from_map(&map)
}

fn run(cli: Cli) -> satnet::Result<ExitCode> {
    let report = match cli.cmd {
        Cmd::Gen { task, count, length, size, permute, seed, out } => {
            commands::cmd_gen(GenTask::from_name(&task, length, size, permute)?, count, seed, &out)?
        }
        Cmd::Train { config, seed, out, resume } => {
            let cfg = load_config(&config, seed, out, resume)?;
            commands::cmd_train(&cfg, |line| eprintln!("{line}"))?
        }
        Cmd::Eval { weights, data, mode } => commands::cmd_eval(&weights, &data, mode.parse::<EvalMode>()?)?,
        Cmd::Solve { weights, cnf, mode, samples, seed } => match (weights, cnf) {
            (_, Some(path)) => commands::cmd_solve_cnf(&std::fs::read_to_string(path)?, samples, seed)?,
            (Some(w), None) => {
                let mut input = String::new();
                std::io::stdin().read_to_string(&mut input)?;
                commands::cmd_solve_bits(&w, &input, mode.parse()?, seed)?
            }
            (None, None) => return Err(Error::InvalidArgument("solve needs --weights or --cnf".into())),
        },
        Cmd::Gradcheck { instances, max_real, max_aux, max_clauses, seed, tolerance, out } => {
            let opts = GradcheckOptions { instances, max_real, max_aux, max_clauses, seed, tolerance, ..Default::default() };
            let report = commands::cmd_gradcheck(&opts)?;
            println!("{report}");
            if let Some(path) = out {
                std::fs::write(path, format!("{report}\n"))?;
            }
            return Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(2) });
        }
        Cmd::Inspect { weights } => commands::cmd_inspect(&weights)?,
    };
    println!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}
