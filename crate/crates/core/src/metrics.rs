//! Post-run analysis: relative percentage deviation, spacing of a Pareto
//! front and front size statistics.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::evolution::{fast_non_dominated_sort, Chromosome, CostReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricError {
    /// `rpd` was given a fitness below the supplied minimum.
    BelowMinimum { fitness: f64, minimum: f64 },
    NonPositiveMinimum(f64),
    /// Spacing needs at least two distinct points.
    TooFewPoints(usize),
    EmptyPopulation,
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::BelowMinimum { fitness, minimum } => {
                write!(f, "fitness {fitness} is below the lower bound {minimum}")
            }
            MetricError::NonPositiveMinimum(m) => write!(f, "lower bound must be positive, got {m}"),
            MetricError::TooFewPoints(n) => write!(f, "spacing needs at least 2 distinct points, got {n}"),
            MetricError::EmptyPopulation => f.write_str("population is empty"),
        }
    }
}

impl core::error::Error for MetricError {}

/// Relative percentage deviation of `fitness` over `minimum`.
pub fn rpd(fitness: f64, minimum: f64) -> Result<f64, MetricError> {
    if !(minimum > 0.0) {
        return Err(MetricError::NonPositiveMinimum(minimum));
    }
    if fitness < minimum {
        return Err(MetricError::BelowMinimum { fitness, minimum });
    }
    Ok((fitness - minimum) / minimum * 100.0)
}

/// RPD of every value against the minimum of the batch.
pub fn rpd_batch(values: &[f64]) -> Result<Vec<f64>, MetricError> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().map(|&v| rpd(v, min)).collect()
}

/// Removes duplicate points, keeping first occurrences in order.
pub fn distinct_points(front: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut seen = BTreeSet::new();
    front
        .iter()
        .copied()
        .filter(|&(a, b)| seen.insert((a.to_bits(), b.to_bits())))
        .collect()
}

/// Spacing: sample standard deviation of each point's Manhattan distance
/// to its nearest neighbour. Duplicate points are collapsed first.
pub fn spacing(front: &[(f64, f64)]) -> Result<f64, MetricError> {
    let pts = distinct_points(front);
    let n = pts.len();
    if n < 2 {
        return Err(MetricError::TooFewPoints(n));
    }
    let d: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (pts[i].0 - pts[j].0).abs() + (pts[i].1 - pts[j].1).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (mean - x) * (mean - x)).sum::<f64>() / (n - 1) as f64;
    Ok(libm::sqrt(var))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontStats {
    pub distinct: usize,
    pub front_size: usize,
    /// `front_size / distinct`.
    pub ratio: f64,
}

/// Counts distinct chromosomes and how many of them are non-dominated
/// within the population.
pub fn front_stats(population: &[(Chromosome, CostReport)]) -> Result<FrontStats, MetricError> {
    if population.is_empty() {
        return Err(MetricError::EmptyPopulation);
    }
    let mut seen = BTreeSet::new();
    let points: Vec<(f64, f64)> = population
        .iter()
        .filter(|(c, _)| seen.insert(c.clone()))
        .map(|(_, cost)| cost.objectives())
        .collect();
    let distinct = points.len();
    let front_size = fast_non_dominated_sort(&points)
        .first()
        .map_or(0, Vec::len);
    Ok(FrontStats {
        distinct,
        front_size,
        ratio: front_size as f64 / distinct as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Single,
    Multi,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Multi => "multi",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" | "mono" => Ok(Mode::Single),
            "multi" => Ok(Mode::Multi),
            other => Err(alloc::format!("unknown mode {other:?}")),
        }
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub solver: String,
    pub mode: Mode,
    pub seed: u64,
    pub inventory: f64,
    pub transport: f64,
    pub total: f64,
    pub wall_time: f64,
    /// Final (inventory, transport) front, multiobjective runs only.
    pub front: Option<Vec<(f64, f64)>>,
}
