//! Experiment runner: every (instance, solver, mode, run) cell of a config,
//! result files, metrics and plot data.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use evita_core::evolution::{
    evaluate, run_nsga2, run_single_objective, BatchEvaluator, Chromosome, CostReport, EvolutionError,
    GaConfig, GenerationStats, Problem, VrpSolver,
};
use evita_core::metrics::{distinct_points, front_stats, rpd, spacing, FrontStats, Mode, RunRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig, PreparedInstance, SolverName};
use crate::formats::{read_runs, write_runs, FormatError, InstanceSummary};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("building worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// First eight bytes (little endian) of the SHA-256 of `s`.
pub fn string_key(s: &str) -> u64 {
    let d = Sha256::digest(s.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Seed of one run: a hash of the master seed and the cell coordinates.
pub fn run_seed(master: u64, instance: &str, solver: SolverName, mode: Mode, run: usize) -> u64 {
    string_key(&format!("{master}|{instance}|{solver}|{mode}|{run}"))
}

/// Evaluates a batch with rayon. Results do not depend on the number of
/// threads because every job carries its own seed.
pub struct ParallelEvaluator<'a> {
    pub problem: &'a Problem,
    pub solver: &'a VrpSolver,
}

impl BatchEvaluator for ParallelEvaluator<'_> {
    fn evaluate_batch(&self, jobs: &[(&Chromosome, u64)]) -> Vec<Result<CostReport, EvolutionError>> {
        jobs.par_iter()
            .map(|&(c, s)| evaluate(c, self.problem, self.solver, s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub instance: usize,
    pub solver: SolverName,
    pub mode: Mode,
    pub run: usize,
}

/// Cells in output order: instance, solver, mode, run.
pub fn cells(cfg: &ExperimentConfig, n_instances: usize) -> Result<Vec<Cell>, ConfigError> {
    let modes = cfg.modes()?;
    let mut out = Vec::new();
    for instance in 0..n_instances {
        for &solver in &cfg.solvers {
            for &mode in &modes {
                for run in 0..cfg.runs_per_cell {
                    out.push(Cell {
                        instance,
                        solver,
                        mode,
                        run,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CellOutput {
    pub record: RunRecord,
    pub history: Vec<GenerationStats>,
    /// Multiobjective runs only.
    pub front_stats: Option<FrontStats>,
    pub spacing: Option<f64>,
}

/// Runs one GA on one instance.
pub fn run_cell(
    problem: &Problem,
    instance_id: &str,
    solver_name: SolverName,
    solver: &VrpSolver,
    mode: Mode,
    ga: &GaConfig,
    seed: u64,
) -> Result<CellOutput, EvolutionError> {
    let evaluator = ParallelEvaluator { problem, solver };
    let start = Instant::now();
    let (best, history, front, stats) = match mode {
        Mode::Single => {
            let r = run_single_objective(ga, problem, &evaluator, seed)?;
            (r.best.cost, r.history, None, None)
        }
        Mode::Multi => {
            let r = run_nsga2(ga, problem, &evaluator, seed)?;
            let mut pts: Vec<(f64, f64)> = distinct_points(
                &r.front.iter().map(|i| i.cost.objectives()).collect::<Vec<_>>(),
            );
            pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let pop: Vec<(Chromosome, CostReport)> = r
                .final_population
                .iter()
                .map(|m| (m.individual.chromosome.clone(), m.individual.cost))
                .collect();
            let stats = front_stats(&pop).ok();
            (r.best_total.cost, r.history, Some(pts), stats)
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    let spacing = front.as_deref().and_then(|f| spacing(f).ok());
    Ok(CellOutput {
        record: RunRecord {
            instance: instance_id.to_string(),
            solver: solver_name.to_string(),
            mode,
            seed,
            inventory: best.inventory,
            transport: best.transport,
            total: best.total,
            wall_time,
            front,
        },
        history,
        front_stats: stats,
        spacing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub instance: String,
    pub solver: String,
    pub mode: String,
    pub run: usize,
    pub seed: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_name: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub runs_per_cell: usize,
    pub workers: usize,
    pub instances: Vec<InstanceSummary>,
    pub cells: Vec<CellStatus>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| !c.ok).count()
    }

    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json { path, source })
    }
}

pub const MANIFEST: &str = "manifest.json";
pub const RUNS: &str = "runs.csv";
pub const HISTORY: &str = "history.csv";
pub const FRONTS: &str = "fronts.csv";
pub const RPD: &str = "rpd.csv";
pub const RPD_SUMMARY: &str = "rpd_summary.csv";
pub const PLOTS: &str = "plots";

const NOTES: [&str; 3] = [
    "front_json lists the distinct (inventory, transport) points of the final first front",
    "spacing collapses duplicate cost points before computing nearest-neighbour distances",
    "RPD is taken against the lowest total cost of each instance over all solvers and modes",
];

/// Summary returned by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub outputs: Vec<Option<CellOutput>>,
}

/// Runs every cell of `cfg` on `workers` threads and writes the result
/// directory. Failed cells are recorded in the manifest and skipped in the
/// CSV files.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<ExperimentOutcome, HarnessError> {
    let prepared = cfg.prepare()?;
    let ga = cfg.ga_config();
    let vehicle = cfg.vehicle_config();
    let cell_list = cells(cfg, prepared.len())?;

    // A problem that cannot be built fails all of its cells.
    let problems: Vec<Result<Problem, EvolutionError>> = prepared
        .iter()
        .map(|p| Problem::new(&p.instance, p.table.clone(), vehicle))
        .collect();

    let workers = workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let results: Vec<(u64, Result<CellOutput, String>)> = pool.install(|| {
        cell_list
            .par_iter()
            .map(|cell| {
                let id = prepared[cell.instance].instance.id();
                let seed = run_seed(cfg.master_seed, id, cell.solver, cell.mode, cell.run);
                let out = match &problems[cell.instance] {
                    Ok(problem) => run_cell(problem, id, cell.solver, &cfg.solver(cell.solver), cell.mode, &ga, seed)
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(e.to_string()),
                };
                (seed, out)
            })
            .collect()
    });

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let statuses: Vec<CellStatus> = cell_list
        .iter()
        .zip(&results)
        .map(|(cell, (seed, r))| CellStatus {
            instance: prepared[cell.instance].instance.id().to_string(),
            solver: cell.solver.to_string(),
            mode: cell.mode.to_string(),
            run: cell.run,
            seed: *seed,
            ok: r.is_ok(),
            error: r.as_ref().err().cloned(),
        })
        .collect();
    let outputs: Vec<Option<CellOutput>> = results.into_iter().map(|(_, r)| r.ok()).collect();
    let done: Vec<&CellOutput> = outputs.iter().flatten().collect();

    let records: Vec<RunRecord> = done.iter().map(|o| o.record.clone()).collect();
    write_file(&out_dir.join(RUNS), |w| {
        write_runs(&records, w).map_err(|e| std::io::Error::other(e.to_string()))
    })?;
    write_history(&out_dir.join(HISTORY), &done)?;
    write_fronts(&out_dir.join(FRONTS), &done)?;

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_name: cfg.name.clone(),
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        runs_per_cell: cfg.runs_per_cell,
        workers,
        instances: prepared.iter().map(summary).collect(),
        cells: statuses,
        notes: NOTES.iter().map(|s| s.to_string()).collect(),
    };
    let path = out_dir.join(MANIFEST);
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| HarnessError::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, json + "\n").map_err(io_err(&path))?;

    write_metrics(out_dir, &records)?;
    emit_plot_data(out_dir)?;
    Ok(ExperimentOutcome {
        dir: out_dir.to_path_buf(),
        manifest,
        outputs,
    })
}

fn summary(p: &PreparedInstance) -> InstanceSummary {
    InstanceSummary::of(&p.instance, &p.name)
}

fn write_file<F>(path: &Path, body: F) -> Result<(), HarnessError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_history(path: &Path, done: &[&CellOutput]) -> Result<(), HarnessError> {
    write_file(path, |w| {
        writeln!(w, "instance,solver,mode,seed,generation,best_total,median_total,best_so_far,front_size")?;
        for o in done {
            let r = &o.record;
            for h in &o.history {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    r.instance,
                    r.solver,
                    r.mode,
                    r.seed,
                    h.generation,
                    h.best_total,
                    h.median_total,
                    h.best_so_far,
                    h.front_size.map(|s| s.to_string()).unwrap_or_default()
                )?;
            }
        }
        Ok(())
    })
}

fn write_fronts(path: &Path, done: &[&CellOutput]) -> Result<(), HarnessError> {
    write_file(path, |w| {
        writeln!(w, "instance,solver,seed,distinct,front_size,ratio,spacing")?;
        for o in done {
            let (Some(s), Some(_)) = (&o.front_stats, &o.record.front) else {
                continue;
            };
            let r = &o.record;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.instance,
                r.solver,
                r.seed,
                s.distinct,
                s.front_size,
                s.ratio,
                o.spacing.map(|v| v.to_string()).unwrap_or_default()
            )?;
        }
        Ok(())
    })
}

fn group(r: &RunRecord) -> String {
    format!("{}-{}", r.solver, r.mode)
}

/// RPD of every run against the best total of its instance.
pub fn rpd_table(records: &[RunRecord]) -> Vec<(usize, f64)> {
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for r in records {
        let e = best.entry(&r.instance).or_insert(f64::INFINITY);
        *e = e.min(r.total);
    }
    records
        .iter()
        .enumerate()
        .filter_map(|(k, r)| rpd(r.total, best[r.instance.as_str()]).ok().map(|v| (k, v)))
        .collect()
}

fn median_of(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Writes `rpd.csv` and `rpd_summary.csv`.
pub fn write_metrics(dir: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let rpds = rpd_table(records);
    write_file(&dir.join(RPD), |w| {
        writeln!(w, "instance,solver,mode,seed,total_eur,rpd")?;
        for &(k, v) in &rpds {
            let r = &records[k];
            writeln!(w, "{},{},{},{},{},{}", r.instance, r.solver, r.mode, r.seed, r.total, v)?;
        }
        Ok(())
    })?;
    let mut groups: BTreeMap<(String, String, String), Vec<f64>> = BTreeMap::new();
    for &(k, v) in &rpds {
        let r = &records[k];
        groups
            .entry((r.instance.clone(), r.solver.clone(), r.mode.to_string()))
            .or_default()
            .push(v);
    }
    write_file(&dir.join(RPD_SUMMARY), |w| {
        writeln!(w, "instance,solver,mode,runs,min_rpd,median_rpd,mean_rpd,max_rpd")?;
        for ((i, s, m), mut v) in groups {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let med = median_of(&mut v);
            writeln!(w, "{i},{s},{m},{n},{},{med},{mean},{}", v[0], v[n - 1])?;
        }
        Ok(())
    })
}

/// Recomputes the metrics and plot files of an existing result directory.
pub fn postprocess(dir: &Path) -> Result<Vec<String>, HarnessError> {
    let records = load_runs(dir)?;
    write_metrics(dir, &records)?;
    emit_plot_data(dir)
}

pub fn load_runs(dir: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let path = dir.join(RUNS);
    let f = File::open(&path).map_err(io_err(&path))?;
    read_runs(f).map_err(|source| HarnessError::Format { path, source })
}

/// Writes plot-ready files under `plots/` and returns warnings about
/// missing runs.
///
/// * `boxplot_<instance>.csv`: total cost per run, grouped by solver and mode
/// * `rpd_by_distribution.csv`: RPD per run with the instance's distribution
/// * `cost_split.csv`: inventory and transport cost per run
/// * `pareto_<instance>.csv`: one line per front member of multiobjective runs
pub fn emit_plot_data(dir: &Path) -> Result<Vec<String>, HarnessError> {
    let records = load_runs(dir)?;
    let manifest = Manifest::read(dir)?;
    let plots = dir.join(PLOTS);
    fs::create_dir_all(&plots).map_err(io_err(&plots))?;

    let mut warnings: Vec<String> = manifest
        .cells
        .iter()
        .filter(|c| !c.ok)
        .map(|c| {
            format!(
                "{} {} {} run {} failed: {}",
                c.instance,
                c.solver,
                c.mode,
                c.run,
                c.error.as_deref().unwrap_or("unknown error")
            )
        })
        .collect();

    let tags: BTreeMap<&str, &str> = manifest
        .instances
        .iter()
        .map(|s| (s.id.as_str(), s.distribution.as_str()))
        .collect();
    let instances: BTreeSet<&str> = records.iter().map(|r| r.instance.as_str()).collect();

    for inst in &instances {
        let runs: Vec<&RunRecord> = records.iter().filter(|r| r.instance == *inst).collect();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for r in &runs {
            *counts.entry(group(r)).or_default() += 1;
        }
        for (g, n) in &counts {
            if *n < manifest.runs_per_cell {
                warnings.push(format!("{inst} {g}: {n} of {} runs present", manifest.runs_per_cell));
            }
        }
        write_file(&plots.join(format!("boxplot_{inst}.csv")), |w| {
            writeln!(w, "group,total_eur")?;
            for r in &runs {
                writeln!(w, "{},{}", group(r), r.total)?;
            }
            Ok(())
        })?;
        let multi: Vec<&&RunRecord> = runs.iter().filter(|r| r.front.is_some()).collect();
        if !multi.is_empty() {
            write_file(&plots.join(format!("pareto_{inst}.csv")), |w| {
                writeln!(w, "solver,seed,inventory_eur,transport_eur")?;
                for r in multi {
                    for (fi, ft) in r.front.as_deref().unwrap_or_default() {
                        writeln!(w, "{},{},{fi},{ft}", r.solver, r.seed)?;
                    }
                }
                Ok(())
            })?;
        }
    }

    let rpds = rpd_table(&records);
    write_file(&plots.join("rpd_by_distribution.csv"), |w| {
        writeln!(w, "distribution,instance,group,seed,rpd")?;
        for &(k, v) in &rpds {
            let r = &records[k];
            let tag = tags.get(r.instance.as_str()).copied().unwrap_or("unknown");
            writeln!(w, "{tag},{},{},{},{v}", r.instance, group(r), r.seed)?;
        }
        Ok(())
    })?;
    write_file(&plots.join("cost_split.csv"), |w| {
        writeln!(w, "instance,group,seed,inventory_eur,transport_eur")?;
        for r in &records {
            writeln!(w, "{},{},{},{},{}", r.instance, group(r), r.seed, r.inventory, r.transport)?;
        }
        Ok(())
    })?;
    Ok(warnings)
}
