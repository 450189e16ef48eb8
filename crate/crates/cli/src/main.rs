use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sim_hmimo::harness::{
    benchmark_iteration, emit_plot_data, load_config, run_experiment, run_sweep, ExperimentConfig, RunSummary,
    SweepAxis,
};

/// Output directory used when neither the config nor `--out` names one.
const DEFAULT_OUT: &str = "results";

#[derive(Debug, Parser)]
#[command(name = "sim-hmimo", version, about = "Cutoff-rate optimization of SIM-assisted holographic MIMO links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize every channel realization of one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override `run.master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override `run.output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a run for several values of one parameter, with paired seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// meta_atoms, modulation_order or precoding.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values, e.g. `49,100` or `on,off`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time one optimizer iteration, by block and across layer sizes.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Reduce run outputs to a long-format CSV for plotting.
    PlotData {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn prepare(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> sim_hmimo::Result<ExperimentConfig> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.run.master_seed = seed;
    }
    cfg.run.output_dir = out.or(cfg.run.output_dir).or_else(|| Some(PathBuf::from(DEFAULT_OUT)));
    Ok(cfg)
}

fn print_summary(label: &str, s: &RunSummary) {
    println!(
        "{label}: {} realization(s), R0 = {:.4} ± {:.4} bits, MI = {:.4} ± {:.4} bits, {:.1} iterations on average",
        s.num_realizations, s.final_r0.mean, s.final_r0.std, s.final_mi.mean, s.final_mi.std, s.iterations.mean
    );
}

fn execute(cli: Cli) -> sim_hmimo::Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = prepare(&config, seed, out)?;
            let output = run_experiment(&cfg)?;
            print_summary("run", &output.summary);
            if let Some(dir) = &cfg.run.output_dir {
                println!("wrote {}", dir.display());
            }
        }
        Command::Sweep {
            config,
            axis,
            values,
            seed,
            out,
        } => {
            let cfg = prepare(&config, seed, out)?;
            let sweep = run_sweep(&cfg, axis, &values)?;
            for entry in &sweep.entries {
                print_summary(&format!("{}={}", axis.name(), entry.value), &entry.output.summary);
            }
            if let Some(dir) = &cfg.run.output_dir {
                println!("wrote {}", dir.join("sweep.csv").display());
            }
        }
        Command::Bench { config, repeats } => {
            let cfg = load_config(&config)?;
            print!("{}", benchmark_iteration(&cfg, repeats)?);
        }
        Command::PlotData { input, out } => {
            let series = emit_plot_data(&input, &out)?;
            println!("wrote {} series to {}", series.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
