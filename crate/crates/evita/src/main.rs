use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use evita::builtin;
use evita::config::{generated_table, ExperimentConfig, InventorySpec, DEFAULT_TABLE_SEED};
use evita::formats::{parse_instance, write_table, InstanceSummary};
use evita::harness::{postprocess, run_experiment};
use evita_core::instance::{Distribution, Instance};
use evita_core::logistics::{synth_inventory_table, VehicleConfig};

/// Delivery pattern and routing optimisation experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result directory.
    Run(RunArgs),
    /// Recompute RPD summaries and plot data of a result directory.
    Metrics {
        dir: PathBuf,
    },
    /// Write a synthetic inventory table as CSV.
    GenTable(GenTableArgs),
    /// Print id, distribution, shop count and eccentricity of instances.
    Inspect {
        /// Bundled instance ids or instance files.
        #[arg(required = true)]
        instances: Vec<String>,
        /// Distribution tag for instance files.
        #[arg(long, default_value = "unknown")]
        distribution: Distribution,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (TOML).
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Bundled profile: smoke, default, claims or full.
    #[arg(long)]
    profile: Option<String>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Base output directory; results go to `<out>/<config name>`.
    #[arg(long, env = "EVITA_OUT_DIR", default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct GenTableArgs {
    /// Bundled instance id or instance file; the table gets one row per shop.
    #[arg(long, conflicts_with = "shops", required_unless_present = "shops")]
    instance: Option<String>,
    /// Number of shops, when no instance is given.
    #[arg(long)]
    shops: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TABLE_SEED)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_instance(key: &str, distribution: Distribution) -> Result<(Instance, String)> {
    if let Some(b) = builtin::find(key) {
        return Ok((b.load()?, b.file.to_string()));
    }
    let path = PathBuf::from(key);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {key}"))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| key.to_string());
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let inst = parse_instance(&text)
        .and_then(|f| f.into_instance(&id, distribution))
        .with_context(|| format!("parsing {key}"))?;
    Ok((inst, name))
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = match (&args.config, &args.profile) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::profile(name)?,
        (None, None) => bail!("pass --config FILE or --profile NAME"),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let dir = args.out.join(&cfg.name);
    let outcome = run_experiment(&cfg, &dir, workers)?;
    let failed = outcome.manifest.failed();
    let total = outcome.manifest.cells.len();
    eprintln!("{}: {} of {total} runs succeeded", dir.display(), total - failed);
    for c in outcome.manifest.cells.iter().filter(|c| !c.ok) {
        eprintln!(
            "failed: {} {} {} run {}: {}",
            c.instance,
            c.solver,
            c.mode,
            c.run,
            c.error.as_deref().unwrap_or("")
        );
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn gen_table(args: GenTableArgs) -> Result<()> {
    let capacity = VehicleConfig::default().capacity;
    let table = match (&args.instance, args.shops) {
        (Some(key), _) => {
            let (inst, _) = load_instance(key, Distribution::Unknown)?;
            let spec = InventorySpec {
                generator_seed: args.seed,
                ..InventorySpec::default()
            };
            generated_table(&inst, &spec, capacity)?
        }
        (None, Some(n)) => {
            let profile = InventorySpec::default().generator_profile(capacity);
            synth_inventory_table(args.seed, n, &profile)?
        }
        (None, None) => bail!("pass --instance or --shops"),
    };
    match &args.out {
        Some(path) => {
            let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_table(&table, f)?;
        }
        None => write_table(&table, std::io::stdout().lock())?,
    }
    Ok(())
}

fn inspect(keys: &[String], distribution: Distribution) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(std::io::stdout().lock());
    for key in keys {
        let (inst, name) = load_instance(key, distribution)?;
        wtr.serialize(InstanceSummary::of(&inst, &name))?;
    }
    wtr.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Metrics { dir } => postprocess(&dir).map_err(Into::into).map(|warnings| {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }),
        Command::GenTable(args) => gen_table(args).map(|_| ExitCode::SUCCESS),
        Command::Inspect {
            instances,
            distribution,
        } => inspect(&instances, distribution).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
