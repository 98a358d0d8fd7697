use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hpde_core::analysis::csv_io::{format_f64, read_series_file};
use hpde_core::analysis::gronwall::gronwall_budget;
use hpde_core::analysis::report::COLUMNS;
use hpde_core::config::{ExperimentKind, RunConfig};
use hpde_core::poisson::PoissonConfig;
use hpde_core::runner::{self, exit, exit_code_for, Outcome};
use hpde_core::Result;

#[derive(Parser)]
#[command(name = "hpde", version, about = "Hydrostatic primitive-equations solver and verifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Project a velocity checkpoint onto the hydrostatic Leray space.
    Project {
        /// Vector checkpoint stem, or one of its `.v1.hpde` / `.v2.hpde` files.
        field_in: PathBuf,
        out_prefix: PathBuf,
    },
    /// Run a verifier experiment (verify-helmholtz, verify-lemmas, absorbing).
    Verify { config: PathBuf },
    /// Summarize a norm time series.
    Report {
        csv: PathBuf,
        /// Print whitespace-separated columns for gnuplot instead.
        #[arg(long)]
        plot_data: bool,
    },
}

fn print_outcome(out: &Outcome) {
    for l in &out.lines {
        println!("{l}");
    }
    for a in &out.artifacts {
        eprintln!("wrote {}", a.display());
    }
}

fn run_config(path: &PathBuf, verify_only: bool) -> Result<i32> {
    let cfg = RunConfig::load(path)?;
    if verify_only
        && matches!(cfg.experiment.kind, ExperimentKind::Run | ExperimentKind::Project)
    {
        eprintln!(
            "error: verify needs experiment.kind = verify-helmholtz, verify-lemmas or absorbing, got {}",
            cfg.experiment.kind.as_str()
        );
        return Ok(exit::CONFIG);
    }
    let out = runner::run_experiment(&cfg)?;
    print_outcome(&out);
    Ok(out.exit_code())
}

fn report(path: &PathBuf, plot_data: bool) -> Result<i32> {
    let series = read_series_file(path)?;
    if plot_data {
        println!("# {}", COLUMNS.join(" "));
        for r in &series {
            let row: Vec<String> = r.values().iter().map(|v| format_f64(*v)).collect();
            println!("{}", row.join(" "));
        }
        return Ok(exit::OK);
    }
    println!("{} rows", series.len());
    if series.is_empty() {
        return Ok(exit::OK);
    }
    println!("{:<16} {:>24} {:>24} {:>24}", "column", "min", "max", "final");
    for (i, name) in COLUMNS.iter().enumerate().skip(1) {
        let vals: Vec<f64> = series.iter().map(|r| r.values()[i]).collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{name:<16} {:>24} {:>24} {:>24}",
            format_f64(min),
            format_f64(max),
            format_f64(*vals.last().expect("nonempty"))
        );
    }
    let g = gronwall_budget(&series);
    println!(
        "budget for |A1 v|^2 (grad_a1v stands in for |A1^(3/2) v|): constant {}, {} unmajorized, {} non-positive of {} intervals",
        format_f64(g.constant),
        g.violations,
        g.nonpositive,
        g.points.len()
    );
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = runner::init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code_for(&e) as u8);
    }
    let result = match &cli.command {
        Command::Run { config } => run_config(config, false),
        Command::Verify { config } => run_config(config, true),
        Command::Project {
            field_in,
            out_prefix,
        } => runner::project_files(field_in, out_prefix, &PoissonConfig::default()).map(|o| {
            print_outcome(&o);
            o.exit_code()
        }),
        Command::Report { csv, plot_data } => report(csv, *plot_data),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
