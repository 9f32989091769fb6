use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vqpulse::commands::{self, CompileRequest, PlanMode};
use vqpulse::config::Settings;
use vqpulse::files::{parse_params, read_text, write_json};
use vqpulse::{CliError, CliResult};
use vqpulse_core::bench::GraphKind;
use vqpulse_core::pipeline::CompileMode;

#[derive(Parser)]
#[command(name = "vqpulse", version, about = "Pulse-level compilation of variational circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "3reg")]
    ThreeRegular,
    Er,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanArg {
    Strict,
    Flexible,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Gate,
    Grape,
    Strict,
    Flexible,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a QAOA MAXCUT circuit and add it to DIR/manifest.json.
    GenQaoa {
        #[arg(long)]
        nodes: usize,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long = "p")]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize the gate-pulse library and write DIR/library.json.
    BuildLibrary {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precompute Fixed-block pulses into a cache directory.
    Precompute {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum)]
        mode: PlanArg,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Tune GRAPE hyperparameters per single-parameter block.
    Tune {
        #[arg(long)]
        circuit: PathBuf,
        /// Config-format file with `learning_rates` and `decay_rates`.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compile a circuit at one parametrization.
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, allow_hyphen_values = true)]
        params: Option<String>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        tuned: Option<PathBuf>,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fidelity of a compiled schedule against its circuit.
    Verify {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        params: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Exit with an error when the fidelity is below this value.
        #[arg(long)]
        min_fidelity: Option<f64>,
    },
    /// Tabulate compiled schedules in a directory as CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn settings(config: Option<&PathBuf>, seed: Option<u64>) -> CliResult<Settings> {
    let mut s = Settings::load_or_default(config)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn threads(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn run(cli: Cli) -> CliResult<()> {
    let jobs = match &cli.command {
        Command::Precompute { jobs, .. } | Command::Tune { jobs, .. } => threads(*jobs),
        _ => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    match cli.command {
        Command::GenQaoa {
            nodes,
            kind,
            rounds,
            seed,
            out,
        } => {
            let kind = match kind {
                KindArg::ThreeRegular => GraphKind::ThreeRegular,
                KindArg::Er => GraphKind::ErdosRenyi,
            };
            let path = commands::gen_qaoa(nodes, kind, rounds, seed, &out)?;
            println!("{}", path.display());
        }
        Command::BuildLibrary { config, seed, out } => {
            let lib = commands::build_library(&settings(config.as_ref(), seed)?, &out)?;
            for e in &lib.entries {
                let name = match e.angle {
                    Some(_) => format!("{}(pi)", e.kind),
                    None => e.kind.to_string(),
                };
                println!("{name}\t{:.2} ns\tfidelity {:.6}", e.duration, e.fidelity);
            }
        }
        Command::Precompute {
            circuit,
            mode,
            cache,
            library,
            config,
            seed,
            ..
        } => {
            let s = settings(config.as_ref(), seed)?;
            let lib = commands::load_library(&s, library.as_deref())?;
            let mode = match mode {
                PlanArg::Strict => PlanMode::Strict,
                PlanArg::Flexible => PlanMode::Flexible,
            };
            let r = commands::precompute(&circuit, mode, &cache, &s, &lib)?;
            println!(
                "blocks_computed={} grape_calls={} iterations={}",
                r.blocks_computed, r.grape_calls, r.iterations
            );
        }
        Command::Tune {
            circuit,
            grid,
            samples,
            out,
            config,
            seed,
            ..
        } => {
            let s = settings(config.as_ref(), seed)?;
            let grid = match grid {
                Some(p) => Settings::parse(&read_text(&p)?, &p)?.grid,
                None => s.grid.clone(),
            };
            let (tuned, details) = commands::tune(&circuit, &grid, samples, &s)?;
            write_json(&out, &tuned)?;
            for d in details {
                let b = &d.report.best;
                println!(
                    "{} time={} lr={} decay={} score={:e} mean_iterations={}",
                    d.hash, d.fixed_time, b.learning_rate, b.decay_rate, b.score, b.mean_iterations
                );
            }
        }
        Command::Compile {
            circuit,
            mode,
            params,
            cache,
            tuned,
            library,
            config,
            seed,
            out,
        } => {
            let s = settings(config.as_ref(), seed)?;
            let mode = match mode {
                ModeArg::Gate => CompileMode::GateBased,
                ModeArg::Grape => CompileMode::FullGrape,
                ModeArg::Strict => CompileMode::Strict,
                ModeArg::Flexible => CompileMode::Flexible,
            };
            let req = CompileRequest {
                circuit,
                mode,
                params: parse_params(params.as_deref())?,
                cache,
                tuned,
                library,
            };
            let file = commands::compile(&req, &s)?;
            if file.schedule.mode != file.mode {
                eprintln!("note: circuit is not parameter-monotonic; compiled with the strict plan");
            }
            write_json(&out, &file)?;
            let fidelity = file.fidelity.map_or_else(|| "unverified".into(), |f| f.to_string());
            println!(
                "duration_ns={} fidelity={fidelity} grape_calls={} iterations={}",
                file.duration_ns, file.grape_calls, file.iterations
            );
        }
        Command::Verify {
            circuit,
            schedule,
            params,
            config,
            min_fidelity,
        } => {
            let s = settings(config.as_ref(), None)?;
            let params = params.map(|p| parse_params(Some(&p))).transpose()?;
            let f = commands::verify(&circuit, &schedule, params, &s)?;
            println!("fidelity={f}");
            if let Some(min) = min_fidelity {
                if f < min {
                    return Err(CliError::BelowThreshold {
                        fidelity: f,
                        required: min,
                    });
                }
            }
        }
        Command::Report { input, out } => {
            let rows = commands::report(&input)?;
            commands::write_report(&rows, &out)?;
            println!("{} rows", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let mut lines = text.lines();
            let first = lines.next().unwrap_or_default();
            let message = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::Usage(message.to_string()).error_line());
            for line in lines {
                eprintln!("{line}");
            }
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.error_line());
            ExitCode::FAILURE
        }
    }
}
