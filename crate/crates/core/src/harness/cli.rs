use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::aggregate::{aggregate, Summary};
use super::config::{Experiment, ExperimentConfig};
use super::output::{emit_plot_data, emit_summary_csv, fmt_real, load_records_csv, load_t_values};
use super::sweep::{run_oracle_suite, run_sweep_with_progress, UniverseResult, CONFIG_FILE, RECORDS_FILE, T_VALUES_FILE};
use crate::error::{Error, Result};

pub const DEFAULT_OUT: &str = "advtest-out";

#[derive(Debug, Parser)]
#[command(name = "advtest", version, about = "Independence tests for detecting classifiers overfitted to their test set")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the synthetic linear experiment, then write summaries and plot data.
    Synthetic(CommonArgs),
    /// Check translational density weights against exact pushforwards.
    TranslationalOracle(CommonArgs),
    /// Rebuild summaries and plot data from a finished or partial sweep.
    Report(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed of the sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of runs per strength.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Fewer runs and training steps; training gates still apply.
    #[arg(long)]
    quick: bool,
}

/// Exit codes: 0 success, 1 configuration error, 2 runtime error.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Parse { .. } | Error::EpsilonTooLarge { .. } => 1,
        _ => 2,
    }
}

fn resolve(args: &CommonArgs, experiment: Experiment) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("`--config` {}: {source}", path.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = experiment;
    if args.quick {
        cfg = cfg.quick();
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
        if args.quick {
            cfg.n_model_bins.retain(|&n| n <= runs);
            if cfg.n_model_bins.is_empty() {
                cfg.n_model_bins.push(1);
            }
        }
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from(DEFAULT_OUT));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a sweep directory back and writes `summary.csv`, `n_model.csv`
/// and `plots/*.dat`.
pub fn report(dir: &Path) -> Result<Summary> {
    let cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
    let records = load_records_csv(&dir.join(RECORDS_FILE))?;
    let mut t_values = load_t_values(&dir.join(T_VALUES_FILE), cfg.scenario_config().test_size)?;
    t_values.truncate(records.len());
    let summary = aggregate(&records, Some(&t_values), &cfg.n_model_bins)?;
    emit_summary_csv(&summary, dir)?;
    emit_plot_data(&summary, &dir.join("plots"))?;
    Ok(summary)
}

fn print_summary(out: &mut impl Write, summary: &Summary) {
    let _ = writeln!(out, "{:>10} {:>6} {:>10} {:>10} {:>12}", "epsilon", "runs", "mean_p", "median_p", "basic_reject");
    for c in &summary.cells {
        let _ = writeln!(
            out,
            "{:>10} {:>6} {:>10.4} {:>10.4} {:>12.3}",
            c.epsilon, c.runs, c.p_value.mean, c.median_p, c.basic_reject_rate
        );
    }
}

fn synthetic(args: &CommonArgs) -> Result<()> {
    let cfg = resolve(args, Experiment::Synthetic)?;
    let dir = cfg.output_dir.clone().expect("resolved");
    let mut last = usize::MAX;
    run_sweep_with_progress(&cfg, &mut |done, total| {
        if done != last {
            eprintln!("[{done}/{total}] cells done");
            last = done;
        }
    })?;
    let summary = report(&dir)?;
    print_summary(&mut std::io::stdout(), &summary);
    println!("wrote {}", dir.display());
    Ok(())
}

fn oracle_line(u: &UniverseResult) -> String {
    let verdict = if u.passes() { "PASS" } else { "FAIL" };
    let r0 = &u.reports[0];
    format!("{verdict} {} (epsilon {}, {} images)", u.name, u.epsilon, r0.images)
}

fn translational_oracle(args: &CommonArgs) -> Result<bool> {
    let cfg = resolve(args, Experiment::TranslationalOracle)?;
    let results = run_oracle_suite(&cfg)?;
    let dir = cfg.output_dir.clone().expect("resolved");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join("oracle.csv");
    let mut csv = String::from(
        "universe,epsilon,variant,images,misclassified,successful_adversarial,max_weight_error,min_t,max_t,max_successful_weight,condition_violations,weights_below_one,pass\n",
    );
    for u in &results {
        println!("{}", oracle_line(u));
        for r in &u.reports {
            println!(
                "    {:<9} misclassified {:>5}  successful {:>5}  max |h - ratio| {:.1e}  T in [{:.3}, {:.3}]",
                r.variant.name(),
                r.misclassified,
                r.successful_adversarial,
                r.max_weight_error,
                r.min_t,
                r.max_t
            );
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.universe,
                r.epsilon,
                r.variant.name(),
                r.images,
                r.misclassified,
                r.successful_adversarial,
                fmt_real(r.max_weight_error),
                fmt_real(r.min_t),
                fmt_real(r.max_t),
                fmt_real(r.max_successful_weight),
                r.condition_violations,
                r.weights_below_one,
                r.passes()
            ));
        }
    }
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    let passed = results.iter().filter(|u| u.passes()).count();
    println!("{passed}/{} universes pass", results.len());
    Ok(passed == results.len())
}

fn report_command(args: &CommonArgs) -> Result<()> {
    let dir = match (&args.out, &args.config) {
        (Some(out), _) => out.clone(),
        (None, Some(path)) => ExperimentConfig::load(path)?.output_dir.unwrap_or_else(|| DEFAULT_OUT.into()),
        (None, None) => PathBuf::from(DEFAULT_OUT),
    };
    if !dir.join(CONFIG_FILE).exists() {
        return Err(Error::Config(format!("`--out`: {} holds no sweep", dir.display())));
    }
    let summary = report(&dir)?;
    print_summary(&mut std::io::stdout(), &summary);
    Ok(())
}

/// Parses `argv` (program name first) and runs the chosen subcommand.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Synthetic(a) => synthetic(a),
        Command::TranslationalOracle(a) => translational_oracle(a).and_then(|ok| {
            if ok {
                Ok(())
            } else {
                Err(Error::Universe("some universes failed the oracle".into()))
            }
        }),
        Command::Report(a) => report_command(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            exit_code(&e)
        }
    }
}
