use capacitylab::config::parse_config;
use capacitylab::report::TaskStatus;
use capacitylab::runner::{run, RunOptions};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "capacitylab", version, about = "Config-driven capacity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to the experiment config.
    config: PathBuf,
    /// Output directory for report.json and per-task artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Execute tasks concurrently (the report order is unchanged).
    #[arg(long)]
    parallel: bool,
    /// Override the config's global seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task in the config.
    Run(RunArgs),
    /// Run only the verify tasks.
    Verify(RunArgs),
    /// Run only the game tasks.
    Game(RunArgs),
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("CAPACITYLAB_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let cli = Cli::parse();
    let (args, filter) = match &cli.command {
        Command::Run(args) => (args, None),
        Command::Verify(args) => (args, Some("verify".to_string())),
        Command::Game(args) => (args, Some("game".to_string())),
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let config = match parse_config(&text) {
        Ok(config) => config,
        Err(issues) => {
            eprintln!("config has {} problem(s):", issues.len());
            for issue in issues {
                eprintln!("  {issue}");
            }
            return ExitCode::from(2);
        }
    };
    for warning in &config.warnings {
        eprintln!("warning: {warning}");
    }

    let options = RunOptions {
        out_dir: args.out.clone(),
        parallel: args.parallel,
        seed_override: args.seed,
        kind_filter: filter,
    };
    let report = match run(&config, &options) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(2);
        }
    };

    for task in &report.tasks {
        let status = match task.status {
            TaskStatus::Ok => "ok",
            TaskStatus::Failed => "FAILED",
            TaskStatus::Error => "ERROR",
        };
        println!("task {} ({}): {}", task.id, task.kind, status);
        if let Some(error) = &task.error {
            println!("  {error}");
        }
        if task.kind == "verify" {
            if let Some(outcomes) = task.outputs["outcomes"].as_array() {
                for outcome in outcomes {
                    let property = outcome["property"].as_str().unwrap_or("?");
                    let verdict = outcome["verdict"]["verdict"].as_str().unwrap_or("?");
                    let checked = outcome["checked"].as_u64().unwrap_or(0);
                    println!("  {property:<24} {verdict:<8} ({checked} checks)");
                }
            }
        }
    }
    println!(
        "report: {} ({} task(s))",
        args.out.join("report.json").display(),
        report.tasks.len()
    );
    if report.exit_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
