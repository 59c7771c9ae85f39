//! Experiment configuration (TOML) and the bundled profiles.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use evita_core::aco::AcoParams;
use evita_core::evolution::{GaConfig, VrpSolver};
use evita_core::instance::{Distribution, Instance};
use evita_core::logistics::{synth_inventory_table, GeneratorProfile, InventoryTable, VehicleConfig};
use evita_core::metrics::Mode;
use evita_core::routing::LocalSearchConfig;
use evita_core::seed;
use evita_core::tabu::TabuConfig;
use serde::{Deserialize, Serialize};

use crate::builtin;
use crate::formats::{parse_instance, read_table, FormatError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("unknown profile {0:?} (available: smoke, default, claims, full)")]
    UnknownProfile(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SolverName {
    Cwls,
    Aco,
    Cwts,
}

impl SolverName {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverName::Cwls => "CWLS",
            SolverName::Aco => "ACO",
            SolverName::Cwts => "CWTS",
        }
    }
}

impl fmt::Display for SolverName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CWLS" => Ok(SolverName::Cwls),
            "ACO" => Ok(SolverName::Aco),
            "CWTS" => Ok(SolverName::Cwts),
            _ => Err(format!("unknown solver {s:?}")),
        }
    }
}

/// Where an instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    /// Id or file name of a bundled instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Instance file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Identifier in result files; defaults to the builtin id or file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// `uniform` or `clusters`; required for file instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<String>,
    /// Inventory table CSV; when absent a table is generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSpec {
    pub cost_min: f64,
    pub cost_max: f64,
    pub min_frequency: u8,
    pub max_frequency: u8,
    pub weekly_volume_min: u32,
    pub weekly_volume_max: u32,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        let p = GeneratorProfile::default();
        Self {
            cost_min: p.cost_min,
            cost_max: p.cost_max,
            min_frequency: p.min_frequency,
            max_frequency: p.max_frequency,
            weekly_volume_min: p.weekly_volume_min,
            weekly_volume_max: p.weekly_volume_max,
        }
    }
}

/// Seed of the canonical generated tables.
pub const DEFAULT_TABLE_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InventorySpec {
    pub generator_seed: u64,
    pub profile: ProfileSpec,
}

impl Default for InventorySpec {
    fn default() -> Self {
        Self {
            generator_seed: DEFAULT_TABLE_SEED,
            profile: ProfileSpec::default(),
        }
    }
}

impl InventorySpec {
    pub fn generator_profile(&self, capacity: u32) -> GeneratorProfile {
        let p = &self.profile;
        GeneratorProfile {
            cost_min: p.cost_min,
            cost_max: p.cost_max,
            min_frequency: p.min_frequency,
            max_frequency: p.max_frequency,
            weekly_volume_min: p.weekly_volume_min,
            weekly_volume_max: p.weekly_volume_max,
            capacity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSpec {
    pub capacity: u32,
    pub cost_per_km: f64,
    pub speed: f64,
    pub unload_time: f64,
    pub max_work_time: f64,
}

impl Default for VehicleSpec {
    fn default() -> Self {
        let v = VehicleConfig::default();
        Self {
            capacity: v.capacity,
            cost_per_km: v.cost_per_km,
            speed: v.speed,
            unload_time: v.unload_time,
            max_work_time: v.max_work_time,
        }
    }
}

impl From<VehicleSpec> for VehicleConfig {
    fn from(v: VehicleSpec) -> Self {
        VehicleConfig {
            capacity: v.capacity,
            cost_per_km: v.cost_per_km,
            speed: v.speed,
            unload_time: v.unload_time,
            max_work_time: v.max_work_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSpec {
    pub population_size: usize,
    pub tournament_size: usize,
    pub mutation_prob: f64,
    pub crossover_prob: f64,
    pub elite: usize,
    pub generations: usize,
}

impl Default for GaSpec {
    fn default() -> Self {
        let g = GaConfig::default();
        Self {
            population_size: g.population_size,
            tournament_size: g.tournament_size,
            mutation_prob: g.mutation_prob,
            crossover_prob: g.crossover_prob,
            elite: g.elite,
            generations: g.generations,
        }
    }
}

impl From<GaSpec> for GaConfig {
    fn from(g: GaSpec) -> Self {
        GaConfig {
            population_size: g.population_size,
            tournament_size: g.tournament_size,
            mutation_prob: g.mutation_prob,
            crossover_prob: g.crossover_prob,
            elite: g.elite,
            generations: g.generations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSearchSpec {
    pub neighbours: usize,
    pub exhaustive: bool,
}

impl Default for LocalSearchSpec {
    fn default() -> Self {
        let l = LocalSearchConfig::default();
        Self {
            neighbours: l.neighbours,
            exhaustive: l.exhaustive,
        }
    }
}

impl From<LocalSearchSpec> for LocalSearchConfig {
    fn from(l: LocalSearchSpec) -> Self {
        LocalSearchConfig {
            neighbours: l.neighbours,
            exhaustive: l.exhaustive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcoSpec {
    pub iterations: usize,
    pub ants: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau0: f64,
    pub rho0: f64,
    pub rho_min: f64,
    pub p0: f64,
    pub p_min: f64,
}

impl Default for AcoSpec {
    fn default() -> Self {
        let a = AcoParams::default();
        Self {
            iterations: a.iterations,
            ants: a.ants,
            alpha: a.alpha,
            beta: a.beta,
            gamma: a.gamma,
            tau0: a.tau0,
            rho0: a.rho0,
            rho_min: a.rho_min,
            p0: a.p0,
            p_min: a.p_min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabuSpec {
    pub tenure: usize,
    pub stagnation_limit: usize,
    pub max_iterations: usize,
}

impl Default for TabuSpec {
    fn default() -> Self {
        let t = TabuConfig::default();
        Self {
            tenure: t.tenure,
            stagnation_limit: t.stagnation_limit,
            max_iterations: t.max_iterations,
        }
    }
}

fn default_runs() -> usize {
    10
}

fn default_seed() -> u64 {
    1
}

fn all_solvers() -> Vec<SolverName> {
    vec![SolverName::Cwls, SolverName::Aco, SolverName::Cwts]
}

fn both_modes() -> Vec<String> {
    vec!["single".into(), "multi".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_runs")]
    pub runs_per_cell: usize,
    #[serde(default = "all_solvers")]
    pub solvers: Vec<SolverName>,
    #[serde(default = "both_modes")]
    pub modes: Vec<String>,
    pub instances: Vec<InstanceSpec>,
    #[serde(default)]
    pub inventory: InventorySpec,
    #[serde(default)]
    pub vehicle: VehicleSpec,
    #[serde(default)]
    pub ga: GaSpec,
    #[serde(default)]
    pub local_search: LocalSearchSpec,
    #[serde(default)]
    pub aco: AcoSpec,
    #[serde(default)]
    pub cwts: TabuSpec,
    /// Directory that relative instance and table paths are resolved
    /// against; set by [`ExperimentConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub const PROFILES: [(&str, &str); 4] = [
    ("smoke", include_str!("../profiles/smoke.toml")),
    ("default", include_str!("../profiles/default.toml")),
    ("claims", include_str!("../profiles/claims.toml")),
    ("full", include_str!("../profiles/full.toml")),
];

/// An instance ready to run.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub instance: Instance,
    pub name: String,
    pub table: InventoryTable,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn profile(name: &str) -> Result<Self, ConfigError> {
        let (_, text) = PROFILES
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| ConfigError::UnknownProfile(name.to_string()))?;
        Self::parse(text)
    }

    pub fn modes(&self) -> Result<Vec<Mode>, ConfigError> {
        self.modes
            .iter()
            .map(|m| m.parse().map_err(ConfigError::Invalid))
            .collect()
    }

    pub fn ga_config(&self) -> GaConfig {
        self.ga.into()
    }

    pub fn vehicle_config(&self) -> VehicleConfig {
        self.vehicle.into()
    }

    pub fn solver(&self, name: SolverName) -> VrpSolver {
        let ls: LocalSearchConfig = self.local_search.into();
        match name {
            SolverName::Cwls => VrpSolver::Cwls(ls),
            SolverName::Aco => {
                let a = &self.aco;
                VrpSolver::Aco(AcoParams {
                    iterations: a.iterations,
                    ants: a.ants,
                    alpha: a.alpha,
                    beta: a.beta,
                    gamma: a.gamma,
                    tau0: a.tau0,
                    rho0: a.rho0,
                    rho_min: a.rho_min,
                    p0: a.p0,
                    p_min: a.p_min,
                    local_search: ls,
                })
            }
            SolverName::Cwts => VrpSolver::Cwts(TabuConfig {
                tenure: self.cwts.tenure,
                stagnation_limit: self.cwts.stagnation_limit,
                max_iterations: self.cwts.max_iterations,
            }),
        }
    }

    /// Checks ranges that do not need the file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name must be non-empty and contain no path separators"));
        }
        if self.runs_per_cell == 0 {
            return Err(invalid("runs_per_cell must be at least 1"));
        }
        if self.solvers.is_empty() {
            return Err(invalid("at least one solver is required"));
        }
        if self.modes()?.is_empty() {
            return Err(invalid("at least one mode is required"));
        }
        if self.instances.is_empty() {
            return Err(invalid("at least one instance is required"));
        }
        for spec in &self.instances {
            match (&spec.builtin, &spec.path) {
                (Some(b), None) => {
                    if builtin::find(b).is_none() {
                        return Err(invalid(format!("no bundled instance named {b:?}")));
                    }
                }
                (None, Some(_)) => {
                    if spec.distribution.is_none() {
                        return Err(invalid("file instances need a distribution tag"));
                    }
                }
                _ => return Err(invalid("each instance needs exactly one of `builtin` or `path`")),
            }
            if let Some(d) = &spec.distribution {
                d.parse::<Distribution>()
                    .map_err(|_| invalid(format!("unknown distribution {d:?}")))?;
            }
        }
        self.ga_config()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.vehicle_config()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.inventory
            .generator_profile(self.vehicle.capacity)
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        for s in &self.solvers {
            match self.solver(*s) {
                VrpSolver::Aco(p) => p.validate().map_err(invalid)?,
                VrpSolver::Cwts(t) => t.validate().map_err(invalid)?,
                VrpSolver::Cwls(_) => {}
            }
        }
        Ok(())
    }

    /// Loads every instance and its inventory table.
    pub fn prepare(&self) -> Result<Vec<PreparedInstance>, ConfigError> {
        let mut out: Vec<PreparedInstance> = Vec::with_capacity(self.instances.len());
        for spec in &self.instances {
            let prepared = self.prepare_one(spec)?;
            if out.iter().any(|p| p.instance.id() == prepared.instance.id()) {
                return Err(invalid(format!("duplicate instance id {:?}", prepared.instance.id())));
            }
            out.push(prepared);
        }
        Ok(out)
    }

    fn prepare_one(&self, spec: &InstanceSpec) -> Result<PreparedInstance, ConfigError> {
        let distribution = spec
            .distribution
            .as_deref()
            .map(|d| d.parse::<Distribution>().map_err(|_| invalid(format!("unknown distribution {d:?}"))))
            .transpose()?;
        let (file, default_id, default_dist, label) = if let Some(b) = &spec.builtin {
            let b = builtin::find(b).ok_or_else(|| invalid(format!("no bundled instance named {b:?}")))?;
            let file = b.parse().map_err(|source| ConfigError::Format {
                path: b.file.to_string(),
                source,
            })?;
            (file, b.id.to_string(), b.distribution, b.file.to_string())
        } else {
            let path = self.base_dir.join(spec.path.as_ref().expect("validated"));
            let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            let file = parse_instance(&text).map_err(|source| ConfigError::Format {
                path: path.display().to_string(),
                source,
            })?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let label = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            (file, stem, Distribution::Unknown, label)
        };
        let id = spec.id.clone().unwrap_or(default_id);
        if id.is_empty() || id.contains([',', ';', ':', '/', '\\', '"']) {
            return Err(invalid(format!("instance id {id:?} is not usable in file names and CSV")));
        }
        let instance = file
            .into_instance(&id, distribution.unwrap_or(default_dist))
            .map_err(|source| ConfigError::Format {
                path: label.clone(),
                source,
            })?;
        let table = match &spec.table {
            Some(t) => {
                let path = self.base_dir.join(t);
                let f = std::fs::File::open(&path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                read_table(f).map_err(|source| ConfigError::Format {
                    path: path.display().to_string(),
                    source,
                })?
            }
            None => generated_table(&instance, &self.inventory, self.vehicle.capacity)
                .map_err(|e| invalid(e.to_string()))?,
        };
        if table.n_shops() != instance.n_shops() {
            return Err(invalid(format!(
                "instance {id} has {} shops but its table has {}",
                instance.n_shops(),
                table.n_shops()
            )));
        }
        if table.max_delivery_size() > self.vehicle.capacity {
            return Err(invalid(format!(
                "table for {id} has deliveries larger than the vehicle capacity"
            )));
        }
        Ok(PreparedInstance {
            instance,
            name: label,
            table,
        })
    }

    /// SHA-256 of the canonical TOML form of the config, hex encoded.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serialises");
        crate::harness::hex_sha256(text.as_bytes())
    }
}

/// The generated inventory table of an instance: the generator seed is
/// mixed with a hash of the instance id so every instance gets its own
/// table.
pub fn generated_table(
    instance: &Instance,
    spec: &InventorySpec,
    capacity: u32,
) -> Result<InventoryTable, evita_core::logistics::LogisticsError> {
    let seed = seed::derive(spec.generator_seed, &[crate::harness::string_key(instance.id())]);
    synth_inventory_table(seed, instance.n_shops(), &spec.generator_profile(capacity))
}
