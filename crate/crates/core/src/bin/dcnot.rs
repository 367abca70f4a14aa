use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use dcnot::catalog::sequence_ids;
use dcnot::cli::{
    analyze_csv, check_table, emit, log_space, run_checks, run_local_noise, run_sweep_config, targeted_channels,
    CliError, LocalNoiseConfig, ParamChoice, RunConfig,
};
use dcnot::noise::{LocalNoiseMode, NoiseScenario};
use dcnot::optimizer::{minimize, objective, random_seeds, MinimizeOptions, ObjectiveSpec};
use dcnot::params::{compositions, BaseLength, ParamTable};

#[derive(Parser)]
#[command(name = "dcnot", version, about = "Dynamically corrected CNOT composite pulse sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in consistency checks and print a pass/fail table.
    Verify {
        /// Run only the named check.
        #[arg(long)]
        check: Option<String>,
        /// Parameter table (JSON) to check instead of the tabulated one.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// First-order error coefficient and empirical order for every channel, as CSV.
    Analyze {
        /// Sequence id (see `dcnot list`).
        id: Option<String>,
        #[arg(long, conflicts_with = "id")]
        sequence: Option<String>,
        /// Use the tabulated angles polished to machine precision.
        #[arg(long)]
        refined: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo infidelity sweep over a σ grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to all cores). Results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Solve for the ZZ-correction angles from random starting points.
    Optimize {
        #[arg(long, value_enum)]
        target: Target,
        /// Base length for the self-similar target.
        #[arg(long, default_value_t = 20)]
        k: u32,
        /// Repetition counts `a,b,c,d`, or `all` for every composition of 5.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Composite infidelity against local-gate infidelity under imperfect local gates.
    LocalNoise {
        #[arg(long)]
        sequence: String,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturbation widths, comma separated (default: 9 log-spaced values from 1e-4 to 1e-2).
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        /// Ising noise widths σ/α on the blocks, comma separated (default: 0 and 5 log-spaced values from 1e-4 to 1e-2).
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        #[arg(long)]
        refined: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List the named sequences.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Cnot,
    SelfSimilar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Systematic,
    Random,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn choice(refined: bool) -> ParamChoice {
    if refined {
        ParamChoice::Refined
    } else {
        ParamChoice::Published
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Verify { check, params } => {
            let table = match params {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|source| CliError::Io { path: p, source })?;
                    serde_json::from_str::<ParamTable>(&text)?
                }
                None => ParamTable::published(),
            };
            let outcomes = run_checks(&table, check.as_deref())?;
            print!("{}", check_table(&outcomes));
            let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
            if failed.is_empty() {
                Ok(0)
            } else {
                eprintln!("failed checks: {}", failed.join(", "));
                Ok(1)
            }
        }
        Command::Analyze { id, sequence, refined, out } => {
            let id = id.or(sequence).ok_or_else(|| usage("a sequence id is required"))?;
            let csv = analyze_csv(&id, &choice(refined).table())?;
            emit(&csv, out.as_deref())?;
            Ok(0)
        }
        Command::Sweep { config, samples, seed, out, workers } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(n) = samples {
                cfg.n_samples = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let csv = run_sweep_config(&cfg, workers)?;
            emit(&csv, cfg.output.as_deref())?;
            Ok(0)
        }
        Command::Optimize { target, k, n, seeds, seed, tol } => optimize(target, k, n, seeds, seed, tol),
        Command::LocalNoise { sequence, mode, samples, seed, scales, sigmas, refined, out, workers } => {
            let mode = match mode {
                Mode::Systematic => LocalNoiseMode::Systematic,
                Mode::Random => LocalNoiseMode::Random,
            };
            let sigmas = sigmas.unwrap_or_else(|| std::iter::once(0.0).chain(log_space(1e-4, 1e-2, 5)).collect());
            let base = sigmas.iter().any(|&s| s > 0.0).then(|| NoiseScenario::IsingFullSu4 {
                alpha: 1.0,
                sigma: 0.0,
                channels: targeted_channels(&sequence),
            });
            let config = LocalNoiseConfig {
                sequence,
                mode,
                base,
                scales: scales.unwrap_or_else(|| log_space(1e-4, 1e-2, 9)),
                sigmas,
                n_samples: samples,
                seed,
                params: choice(refined),
            };
            let csv = run_local_noise(&config, workers)?;
            emit(&csv, out.as_deref())?;
            Ok(0)
        }
        Command::List => {
            for (id, description) in sequence_ids() {
                println!("{id:20} {description}");
            }
            Ok(0)
        }
    }
}

fn parse_composition(s: &str) -> Result<[u32; 4], CliError> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad composition {s:?}")))?;
    let n: [u32; 4] = parts.try_into().map_err(|_| usage("composition needs four entries"))?;
    if !compositions().contains(&n) {
        return Err(usage(format!("composition {s:?} must be four positive integers summing to 5")));
    }
    Ok(n)
}

/// Angle reduced to (-π, π]; the objective has period 2π in every ψ.
fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(std::f64::consts::TAU);
    if y > std::f64::consts::PI {
        y - std::f64::consts::TAU
    } else {
        y
    }
}

fn optimize(target: Target, k: u32, n: Option<String>, seeds: usize, seed: u64, tol: f64) -> Result<u8, CliError> {
    let published = ParamTable::published();
    let k = BaseLength::try_from(k).map_err(|e| usage(e.to_string()))?;
    let (name, default_n, published_psi) = match target {
        Target::Cnot => ("cnot", published.cnot.n(), published.cnot.psi()),
        Target::SelfSimilar => {
            let c = published.self_similar(k).correction;
            ("self-similar", c.n(), c.psi())
        }
    };
    let ns = match n.as_deref() {
        None => vec![default_n],
        Some("all") => compositions().to_vec(),
        Some(s) => vec![parse_composition(s)?],
    };
    if seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let opts = MinimizeOptions { tolerance: tol, ..MinimizeOptions::default() };
    let starts = random_seeds(seeds, seed);
    let mut rows = Vec::new();
    for n in ns {
        let spec = match target {
            Target::Cnot => ObjectiveSpec::cnot(n, published.theta0),
            Target::SelfSimilar => ObjectiveSpec::rotation(k, n, published.theta0),
        };
        let best = minimize(&spec, &starts, &opts).map_err(|e| usage(e.to_string()))?;
        let published_f = (n == default_n).then(|| objective(&published_psi, &spec));
        rows.push(json!({
            "n": n,
            "psi": best.psi.map(wrap),
            "objective": best.objective,
            "converged": best.converged,
            "evaluations": best.evaluations,
            "published": published_f.map(|f| json!({"psi": published_psi, "objective": f})),
        }));
    }
    let report = json!({
        "target": name,
        "k": k.k(),
        "seeds": seeds,
        "seed": seed,
        "tolerance": tol,
        "results": rows,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(0)
}
