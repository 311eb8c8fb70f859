//! `rfim`: runs declarative experiments and small utilities.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rfim_core::couplings::audit::replay_trace;
use rfim_core::couplings::{breadth_first_coupling, CouplingMode, CouplingTrace};
use rfim_core::experiments::{self, ExperimentConfig, ExperimentKind, Mode, Report};
use rfim_core::field::{sample_field, write_csv, write_snapshot};
use rfim_core::{rng, BoxRegion, RegionGraph};

#[derive(Parser)]
#[command(name = "rfim", version, about = "Random-field Ising experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Boundary influence at the origin against N.
    Decay(RunArgs),
    /// Per-instance perturbation and boundary-reach audits at T = 0.
    PerturbAudit(RunArgs),
    /// Annulus crossing probabilities and coarse-grained scans.
    CrossingScan(RunArgs),
    /// Free-energy inequalities and the derivative identity.
    FreeEnergy(RunArgs),
    /// Coupling audits: percolation property, marginals, admissibility.
    CouplingSuite(RunArgs),
    /// Field utilities.
    Field {
        #[command(subcommand)]
        command: FieldCommand,
    },
    /// Re-check a coupling trace written by `coupling-suite`.
    ReplayTrace {
        path: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV tables and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_parser = ["t0", "exact", "cftp"])]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum FieldCommand {
    /// Write the field on Λ_N for a seed.
    Dump {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FieldFormat::Csv)]
        format: FieldFormat,
        /// Output file; stdout for CSV when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldFormat {
    Csv,
    Snapshot,
}

fn load_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::new(kind),
    };
    if config.kind != kind {
        bail!("config is for {}, not {}", config.kind.name(), kind.name());
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(o) = &args.out {
        config.out = Some(o.clone());
    }
    if let Some(m) = &args.mode {
        config.mode = m.parse::<Mode>()?;
    }
    config.validate()?;
    Ok(config)
}

fn print_report(report: &Report) {
    let m = &report.meta;
    println!("{} config {} ({:.2} s)", m.kind.name(), &m.config_hash[..12], m.wall_seconds);
    for s in &report.summaries {
        println!("{}: {}", s.name, s.columns.join(","));
        for row in &s.rows {
            println!("  {}", row.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(","));
        }
    }
    for c in &report.checks {
        let tag = match (c.passed, c.asserted) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "NOTE",
        };
        println!("{tag} {}: {}", c.name, c.detail);
    }
}

/// One breadth-first trace for `replay-trace`, from the config's first instance.
fn write_sample_trace(config: &ExperimentConfig, dir: &Path) -> Result<()> {
    let n = config.sizes.first().copied().unwrap_or(4);
    let seed = config.instance_seed(0);
    let g = RegionGraph::from_box(&BoxRegion::centered(n));
    let h: Vec<f64> = g.sites().iter().map(|&s| config.epsilon * rfim_core::field::standard_normal_at(seed, s)).collect();
    let mode = config.params.coupling.unwrap_or(CouplingMode::Auto);
    let out = breadth_first_coupling(n, &h, config.beta.unwrap_or(1.0), mode, rng::derive_seed(seed, rng::STREAM_COUPLING, 0))?;
    fs::write(dir.join("trace.json"), out.trace.to_json()?)?;
    Ok(())
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> Result<ExitCode> {
    let config = load_config(kind, args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build()?;
    let report = pool.install(|| experiments::run(&config))?;
    print_report(&report);
    if let Some(dir) = &config.out {
        let paths = report.write(dir)?;
        if kind == ExperimentKind::CouplingSuite {
            write_sample_trace(&config, dir)?;
        }
        println!("wrote {} files to {}", paths.len(), dir.display());
    }
    Ok(ExitCode::from(report.outcome().exit_code() as u8))
}

fn field_dump(n: u32, epsilon: f64, seed: u64, format: FieldFormat, out: Option<PathBuf>) -> Result<ExitCode> {
    let field = sample_field(BoxRegion::centered(n), epsilon, seed)?;
    match (format, out) {
        (FieldFormat::Csv, None) => write_csv(&field, io::stdout().lock())?,
        (FieldFormat::Csv, Some(p)) => write_csv(&field, BufWriter::new(File::create(p)?))?,
        (FieldFormat::Snapshot, Some(p)) => write_snapshot(&field, BufWriter::new(File::create(p)?))?,
        (FieldFormat::Snapshot, None) => bail!("snapshot output needs --out"),
    }
    Ok(ExitCode::SUCCESS)
}

fn replay(path: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let trace = CouplingTrace::from_json(&text)?;
    let report = replay_trace(&trace);
    let mut out = io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decay(a) => run_experiment(ExperimentKind::Decay, &a),
        Command::PerturbAudit(a) => run_experiment(ExperimentKind::PerturbAudit, &a),
        Command::CrossingScan(a) => run_experiment(ExperimentKind::CrossingScan, &a),
        Command::FreeEnergy(a) => run_experiment(ExperimentKind::FreeEnergy, &a),
        Command::CouplingSuite(a) => run_experiment(ExperimentKind::CouplingSuite, &a),
        Command::Field { command: FieldCommand::Dump { n, epsilon, seed, format, out } } => {
            field_dump(n, epsilon, seed, format, out)
        }
        Command::ReplayTrace { path } => replay(&path),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let resource = e.downcast_ref::<rfim_core::LabError>().is_some_and(|l| l.is_resource());
            eprintln!("error: {e:#}");
            ExitCode::from(if resource { 3 } else { 1 })
        }
    }
}
