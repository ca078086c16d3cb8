use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cvxkit_cli::bench::{self, BenchTest};
use cvxkit_cli::commands;
use cvxkit_core::solver::SolveSettings;

#[derive(Parser)]
#[command(
    name = "cvxkit",
    about = "DCP modeling: lint, compile to conic form, solve, and benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a problem document for DCP compliance (exit 0 DCP, 2 not, 1 parse error)
    Lint { path: PathBuf },
    /// Lower a DCP problem document to standard conic form JSON
    Compile {
        path: PathBuf,
        /// Output path; `-` writes to stdout
        out: PathBuf,
    },
    /// Solve a problem document with the embedded conic solver
    Solve {
        path: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        abstol: f64,
        #[arg(long, default_value_t = 1e-7)]
        reltol: f64,
        #[arg(long, default_value_t = 1e-7)]
        feastol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
    },
    /// Build and solve the construction benchmarks, printing CSV timings
    Bench {
        /// One of sum|index|transpose|matrix, or `all`
        #[arg(long, default_value = "all")]
        test: String,
        /// Problem size (summation length, vector length, or matrix edge)
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Sequential repeats; the first is the cold run
        #[arg(long, default_value_t = 3)]
        repeat: usize,
    },
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Lint { path } => match read(&path) {
            Ok(json) => {
                let r = commands::cmd_lint(&json);
                print!("{}", r.stdout);
                r.code
            }
            Err(e) => {
                eprintln!("{e}");
                commands::EXIT_PARSE
            }
        },
        Cmd::Compile { path, out } => match read(&path) {
            Ok(json) => {
                let (r, doc) = commands::cmd_compile(&json);
                match (doc, out.to_str()) {
                    (Some(text), Some("-")) => print!("{text}"),
                    (Some(text), _) => {
                        if let Err(e) = std::fs::write(&out, text) {
                            eprintln!("cannot write {}: {e}", out.display());
                            return ExitCode::from(commands::EXIT_PARSE);
                        }
                        print!("{}", r.stdout);
                    }
                    (None, _) => print!("{}", r.stdout),
                }
                r.code
            }
            Err(e) => {
                eprintln!("{e}");
                commands::EXIT_PARSE
            }
        },
        Cmd::Solve { path, abstol, reltol, feastol, max_iters } => match read(&path) {
            Ok(json) => {
                let settings = SolveSettings {
                    abstol,
                    reltol,
                    feastol,
                    max_iters,
                    ..SolveSettings::default()
                };
                let r = commands::cmd_solve(&json, &settings);
                print!("{}", r.stdout);
                r.code
            }
            Err(e) => {
                eprintln!("{e}");
                commands::EXIT_PARSE
            }
        },
        Cmd::Bench { test, n, repeat } => {
            let tests: Vec<BenchTest> = if test == "all" {
                BenchTest::all().to_vec()
            } else {
                match test.parse() {
                    Ok(t) => vec![t],
                    Err(e) => {
                        eprintln!("{e}");
                        return ExitCode::from(commands::EXIT_PARSE);
                    }
                }
            };
            let settings = SolveSettings::default();
            let mut all_rows = Vec::new();
            for t in tests {
                match bench::run(t, n, repeat.max(1), &settings) {
                    Ok(rows) => all_rows.extend(rows),
                    Err(e) => {
                        eprintln!("benchmark failed: {e}");
                        return ExitCode::from(commands::EXIT_NUMERICAL);
                    }
                }
            }
            print!("{}", bench::to_csv(&all_rows));
            commands::EXIT_OK
        }
    };
    ExitCode::from(code)
}
