//! Command-line front end for the experiment harness.
//!
//! Failures print a single `error: {json}` line to stderr and exit nonzero
//! (2 for usage errors, 1 otherwise).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use dithered_onebit::complexity::{sufficient_m, Theorem, TheoremConstants, TheoremParams};
use dithered_onebit::harness::{
    emit_plots, run_experiment, summarize, width_rows, ExperimentConfig, PlotKind, RunOptions, SummaryTable,
    OUTPUT_DIR_ENV, WORKERS_ENV,
};
use dithered_onebit::{Error, RowLaw, SignalSetDescriptor};

#[derive(Parser)]
#[command(name = "onebit", version, about = "Dithered one-bit sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long, env = OUTPUT_DIR_ENV)]
        output_dir: Option<PathBuf>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Summarize a recovery results CSV per cell.
    Summarize {
        csv: PathBuf,
        /// Comma-separated keys, e.g. `law,m`.
        #[arg(long, value_delimiter = ',')]
        group_by: Vec<String>,
        /// Success threshold; defaults to the value recorded in the rows.
        #[arg(long)]
        rho: Option<f64>,
        /// Where to write the summary; defaults to `summary.csv` next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a gnuplot script and data file for a summary table.
    Plot {
        summary: PathBuf,
        /// One of error-vs-m, success-vs-m, error-vs-beta.
        #[arg(long, default_value = "error-vs-m")]
        kind: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print Gaussian mean widths of signal sets as CSV.
    WidthTable {
        /// Sparse ball `s,n[,R]`; repeatable.
        #[arg(long)]
        sparse: Vec<String>,
        /// ℓ1∩ℓ2 ball `s,n[,R]`; repeatable.
        #[arg(long)]
        l1l2: Vec<String>,
        #[arg(long, default_value_t = 2000)]
        n_mc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample size sufficient for a theorem, printed as JSON.
    SufficientM {
        /// tess-subgaussian, tess-heavy-tailed, recover-subgaussian,
        /// recover-heavy-tailed, convex (or 1.1 to 1.5).
        theorem: String,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Gaussian width term of the theorem.
        #[arg(long)]
        width: Option<f64>,
        /// Empirical width term of the heavy-tailed theorems.
        #[arg(long)]
        empirical_width: Option<f64>,
        #[arg(long)]
        log_covering: Option<f64>,
        /// Derive missing terms from a sparse ball `s,n`.
        #[arg(long)]
        sparse: Option<String>,
        /// Row law for empirical widths: gaussian, rademacher or student_t:<df>.
        #[arg(long)]
        law: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: {}", json!({ "kind": "usage", "message": first }));
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", json!({ "kind": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            config,
            output_dir,
            workers,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let out = run_experiment(&config, &RunOptions { output_dir, workers })?;
            for path in out.results.iter().chain([&out.manifest]) {
                println!("{}", path.display());
            }
        }
        Command::Summarize {
            csv,
            group_by,
            rho,
            out,
        } => {
            let table = summarize(&csv, &group_by, rho)?;
            let out = out.unwrap_or_else(|| csv.with_file_name("summary.csv"));
            table.write_csv(&out)?;
            print_summary(&table);
            println!("{}", out.display());
        }
        Command::Plot { summary, kind, out_dir } => {
            let kind: PlotKind = kind.parse()?;
            let table = SummaryTable::read_csv(&summary)?;
            let dir = out_dir.unwrap_or_else(|| summary.parent().map(PathBuf::from).unwrap_or_default());
            for path in emit_plots(&table, kind, &dir)? {
                println!("{}", path.display());
            }
        }
        Command::WidthTable {
            sparse,
            l1l2,
            n_mc,
            seed,
        } => {
            let mut sets = Vec::new();
            for arg in &sparse {
                let (s, n, r) = parse_set("sparse", arg)?;
                sets.push(SignalSetDescriptor::sparse_ball(s as usize, n, r)?);
            }
            for arg in &l1l2 {
                let (s, n, r) = parse_set("l1l2", arg)?;
                sets.push(SignalSetDescriptor::l1l2_ball(s, n, r)?);
            }
            if sets.is_empty() {
                return Err(Error::InvalidParameter {
                    name: "sets",
                    reason: "give at least one --sparse or --l1l2 set".into(),
                });
            }
            let mut wtr = csv::Writer::from_writer(std::io::stdout());
            for row in width_rows(&sets, n_mc, seed)? {
                wtr.serialize(row)?;
            }
            wtr.flush().map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
        Command::SufficientM {
            theorem,
            rho,
            radius,
            lambda,
            sigma,
            beta,
            width,
            empirical_width,
            log_covering,
            sparse,
            law,
        } => {
            let theorem: Theorem = theorem.parse()?;
            let mut params = TheoremParams::new(radius, rho);
            params.lambda = lambda;
            params.sigma = sigma;
            params.beta = beta;
            params.width = width;
            params.empirical_width = empirical_width;
            params.log_covering = log_covering;
            if let Some(arg) = sparse {
                let (s, n, _) = parse_set("sparse", &arg)?;
                params.descriptor = Some(SignalSetDescriptor::sparse_ball(s as usize, n, radius)?);
            }
            params.row_law = law.as_deref().map(parse_law).transpose()?;
            let out = sufficient_m(theorem, &params, &TheoremConstants::default())?;
            println!("{}", serde_json::to_string(&out).expect("result serializes"));
        }
    }
    Ok(())
}

fn print_summary(table: &SummaryTable) {
    println!(
        "{} trials median q1 q3 success_rate",
        table.group_by.join(" ")
    );
    for r in &table.rows {
        println!(
            "{} {} {:.4} {:.4} {:.4} {:.2}",
            r.keys.join(" "),
            r.trials,
            r.median,
            r.q1,
            r.q3,
            r.success_rate
        );
    }
}

fn parse_set(name: &'static str, arg: &str) -> Result<(f64, usize, f64), Error> {
    let bad = || Error::InvalidParameter {
        name,
        reason: format!("expected `s,n[,R]`, got `{arg}`"),
    };
    let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(bad());
    }
    let s: f64 = parts[0].parse().map_err(|_| bad())?;
    let n: usize = parts[1].parse().map_err(|_| bad())?;
    let r: f64 = parts.get(2).map_or(Ok(1.0), |p| p.parse()).map_err(|_| bad())?;
    Ok((s, n, r))
}

fn parse_law(arg: &str) -> Result<RowLaw, Error> {
    let bad = || Error::InvalidParameter {
        name: "law",
        reason: format!("expected gaussian, rademacher or student_t:<df>, got `{arg}`"),
    };
    match arg.split_once(':') {
        None if arg == "gaussian" => Ok(RowLaw::Gaussian),
        None if arg == "rademacher" => Ok(RowLaw::Rademacher),
        Some(("student_t", df)) => Ok(RowLaw::StudentT {
            df: df.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}
