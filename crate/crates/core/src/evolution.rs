//! Top level: evolutionary search over weekly delivery patterns.
//!
//! A chromosome holds one admissible pattern per shop. Its fitness is the
//! weekly inventory cost plus the transport cost of solving one VRP per
//! working day with a pluggable lower-level solver. Two drivers are
//! provided: an elitist single-objective GA on total cost and NSGA-II on
//! (inventory cost, transport cost).

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::seq::index;
use rand::Rng;

use crate::aco::{aco_solve, AcoParams};
use crate::instance::{DistanceMatrix, Instance};
use crate::logistics::{InventoryTable, LogisticsError, Pattern, VehicleConfig, Weekday, WORKING_DAYS};
use crate::routing::{DayPlan, LocalSearchConfig, RoutingContext, SolveError};
use crate::savings::cwls_solve;
use crate::seed;
use crate::tabu::{cwts_solve, TabuConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum EvolutionError {
    Logistics(LogisticsError),
    Solve { day: Weekday, source: SolveError },
    ShopCountMismatch { instance: usize, table: usize },
    WrongLength { expected: usize, found: usize },
    Config(&'static str),
}

impl fmt::Display for EvolutionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvolutionError::Logistics(e) => write!(f, "{e}"),
            EvolutionError::Solve { day, source } => write!(f, "{}: {source}", day.short_name()),
            EvolutionError::ShopCountMismatch { instance, table } => write!(
                f,
                "instance has {instance} shops but the inventory table has {table}"
            ),
            EvolutionError::WrongLength { expected, found } => {
                write!(f, "chromosome has {found} genes, expected {expected}")
            }
            EvolutionError::Config(reason) => write!(f, "invalid configuration: {reason}"),
        }
    }
}

impl core::error::Error for EvolutionError {}

impl From<LogisticsError> for EvolutionError {
    fn from(e: LogisticsError) -> Self {
        EvolutionError::Logistics(e)
    }
}

/// Lower-level VRP solver with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VrpSolver {
    Cwls(LocalSearchConfig),
    Aco(AcoParams),
    Cwts(TabuConfig),
}

impl VrpSolver {
    pub fn name(&self) -> &'static str {
        match self {
            VrpSolver::Cwls(_) => "CWLS",
            VrpSolver::Aco(_) => "ACO",
            VrpSolver::Cwts(_) => "CWTS",
        }
    }

    pub fn solve<R: Rng + ?Sized>(
        &self,
        shops: &[usize],
        ctx: &RoutingContext<'_>,
        rng: &mut R,
    ) -> Result<DayPlan, SolveError> {
        match self {
            VrpSolver::Cwls(cfg) => cwls_solve(shops, ctx, cfg, rng),
            VrpSolver::Aco(params) => aco_solve(shops, ctx, params, rng),
            VrpSolver::Cwts(cfg) => cwts_solve(shops, ctx, cfg),
        }
    }
}

/// Static data of one inventory and transportation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    distances: DistanceMatrix,
    table: InventoryTable,
    vehicle: VehicleConfig,
    admissible: Vec<Vec<Pattern>>,
}

impl Problem {
    pub fn new(instance: &Instance, table: InventoryTable, vehicle: VehicleConfig) -> Result<Self, EvolutionError> {
        if instance.n_shops() != table.n_shops() {
            return Err(EvolutionError::ShopCountMismatch {
                instance: instance.n_shops(),
                table: table.n_shops(),
            });
        }
        vehicle.validate()?;
        let admissible = instance
            .shop_nodes()
            .map(|s| table.admissible_patterns(s))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(k) = admissible.iter().position(Vec::is_empty) {
            return Err(LogisticsError::InvalidTable {
                shop: k + 1,
                reason: "no admissible pattern matches the listed frequencies",
            }
            .into());
        }
        Ok(Self {
            distances: instance.distance_matrix(),
            table,
            vehicle,
            admissible,
        })
    }

    pub fn n_shops(&self) -> usize {
        self.table.n_shops()
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn table(&self) -> &InventoryTable {
        &self.table
    }

    pub fn vehicle(&self) -> &VehicleConfig {
        &self.vehicle
    }

    /// Admissible patterns of `shop` (1-based node index).
    pub fn admissible(&self, shop: usize) -> &[Pattern] {
        &self.admissible[shop - 1]
    }

    pub fn random_chromosome<R: Rng + ?Sized>(&self, rng: &mut R) -> Chromosome {
        Chromosome(
            self.admissible
                .iter()
                .map(|opts| opts[rng.gen_range(0..opts.len())])
                .collect(),
        )
    }

    /// Number of distinct admissible chromosomes.
    pub fn search_space_size(&self) -> u128 {
        self.admissible.iter().map(|o| o.len() as u128).product()
    }
}

/// One pattern per shop; gene `k` belongs to shop `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome(pub Vec<Pattern>);

impl Chromosome {
    pub fn genes(&self) -> &[Pattern] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_admissible(&self, problem: &Problem) -> bool {
        self.len() == problem.n_shops()
            && self
                .0
                .iter()
                .enumerate()
                .all(|(k, p)| problem.admissible(k + 1).contains(p))
    }
}

/// Costs of one individual, in euro.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub inventory: f64,
    pub transport: f64,
    pub total: f64,
}

impl CostReport {
    pub fn new(inventory: f64, transport: f64) -> Self {
        Self {
            inventory,
            transport,
            total: inventory + transport,
        }
    }

    /// The two objectives, inventory first.
    pub fn objectives(&self) -> (f64, f64) {
        (self.inventory, self.transport)
    }
}

/// Routes for every working day together with the costs.
#[derive(Debug, Clone, PartialEq)]
pub struct WeekPlan {
    pub days: Vec<DayPlan>,
    pub cost: CostReport,
}

/// Evaluates a chromosome. Day `d` uses the RNG stream `(stream_seed, d)`.
pub fn evaluate(
    chromosome: &Chromosome,
    problem: &Problem,
    solver: &VrpSolver,
    stream_seed: u64,
) -> Result<CostReport, EvolutionError> {
    evaluate_week(chromosome, problem, solver, stream_seed).map(|w| w.cost)
}

/// [`evaluate`], also returning the daily routes.
pub fn evaluate_week(
    chromosome: &Chromosome,
    problem: &Problem,
    solver: &VrpSolver,
    stream_seed: u64,
) -> Result<WeekPlan, EvolutionError> {
    let n = problem.n_shops();
    if chromosome.len() != n {
        return Err(EvolutionError::WrongLength {
            expected: n,
            found: chromosome.len(),
        });
    }
    let mut inventory = 0.0;
    let mut demands = alloc::vec![0u32; n + 1];
    for (k, p) in chromosome.genes().iter().enumerate() {
        let entry = problem.table.lookup(k + 1, p.frequency())?;
        inventory += entry.cost;
        demands[k + 1] = entry.delivery_size;
    }
    let ctx = RoutingContext::new(&problem.distances, &demands, &problem.vehicle);
    let mut distance = 0.0;
    let mut days = Vec::with_capacity(WORKING_DAYS);
    for day in Weekday::ALL {
        let shops: Vec<usize> = chromosome
            .genes()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.serves(day))
            .map(|(k, _)| k + 1)
            .collect();
        let mut rng = seed::stream(stream_seed, &[day.index() as u64]);
        let plan = solver
            .solve(&shops, &ctx, &mut rng)
            .map_err(|source| EvolutionError::Solve { day, source })?;
        distance += plan.total_distance();
        days.push(plan);
    }
    Ok(WeekPlan {
        days,
        cost: CostReport::new(inventory, distance * problem.vehicle.cost_per_km),
    })
}

/// Evaluates many chromosomes; each job carries its own stream seed so the
/// result does not depend on evaluation order.
pub trait BatchEvaluator {
    fn evaluate_batch(&self, jobs: &[(&Chromosome, u64)]) -> Vec<Result<CostReport, EvolutionError>>;
}

/// Evaluates jobs one after the other.
#[derive(Debug, Clone, Copy)]
pub struct SequentialEvaluator<'a> {
    pub problem: &'a Problem,
    pub solver: &'a VrpSolver,
}

impl BatchEvaluator for SequentialEvaluator<'_> {
    fn evaluate_batch(&self, jobs: &[(&Chromosome, u64)]) -> Vec<Result<CostReport, EvolutionError>> {
        jobs.iter()
            .map(|&(c, s)| evaluate(c, self.problem, self.solver, s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub tournament_size: usize,
    pub mutation_prob: f64,
    pub crossover_prob: f64,
    /// Individuals copied unchanged into the next generation
    /// (single-objective mode only).
    pub elite: usize,
    /// Total generations, the initial one included.
    pub generations: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            tournament_size: 2,
            mutation_prob: 0.2,
            crossover_prob: 1.0,
            elite: 10,
            generations: 100,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population_size < 2 {
            return Err(EvolutionError::Config("population size must be at least 2"));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(EvolutionError::Config(
                "tournament size must be in 1..=population size",
            ));
        }
        if !prob(self.mutation_prob) || !prob(self.crossover_prob) {
            return Err(EvolutionError::Config("probabilities must lie in [0, 1]"));
        }
        if self.elite >= self.population_size {
            return Err(EvolutionError::Config("elite must be smaller than the population"));
        }
        if self.generations == 0 {
            return Err(EvolutionError::Config("at least one generation is required"));
        }
        Ok(())
    }
}

/// An evaluated chromosome.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub cost: CostReport,
}

/// Per-generation summary of total costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_total: f64,
    pub median_total: f64,
    pub best_so_far: f64,
    /// Size of the first non-dominated front (multiobjective mode).
    pub front_size: Option<usize>,
}

// Stream keys.
const OPERATORS: u64 = 0x6f70;
const EVALUATION: u64 = 0x6576;

fn evaluation_seed(master: u64, generation: usize, index: usize) -> u64 {
    seed::derive(master, &[EVALUATION, generation as u64, index as u64])
}

fn evaluate_all<E: BatchEvaluator + ?Sized>(
    evaluator: &E,
    chromosomes: Vec<Chromosome>,
    master: u64,
    generation: usize,
) -> Result<Vec<Individual>, EvolutionError> {
    let jobs: Vec<(&Chromosome, u64)> = chromosomes
        .iter()
        .enumerate()
        .map(|(k, c)| (c, evaluation_seed(master, generation, k)))
        .collect();
    let costs = evaluator.evaluate_batch(&jobs);
    chromosomes
        .into_iter()
        .zip(costs)
        .map(|(chromosome, cost)| cost.map(|cost| Individual { chromosome, cost }))
        .collect()
}

/// Two-point crossover. Cut points are distinct and drawn from
/// `1..len`; shorter chromosomes fall back to one cut or plain copies.
pub fn two_point_crossover<R: Rng + ?Sized>(a: &Chromosome, b: &Chromosome, rng: &mut R) -> (Chromosome, Chromosome) {
    let n = a.len();
    let (lo, hi) = match n {
        0 | 1 => return (a.clone(), b.clone()),
        2 => (1, 2),
        _ => {
            let cuts = index::sample(rng, n - 1, 2);
            let (x, y) = (cuts.index(0) + 1, cuts.index(1) + 1);
            (x.min(y), x.max(y))
        }
    };
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    c1.0[lo..hi].copy_from_slice(&b.0[lo..hi]);
    c2.0[lo..hi].copy_from_slice(&a.0[lo..hi]);
    (c1, c2)
}

/// Replaces the pattern of one random shop by a different admissible one.
/// Shops with a single admissible pattern are left unchanged.
pub fn mutate<R: Rng + ?Sized>(c: &mut Chromosome, problem: &Problem, rng: &mut R) {
    if c.is_empty() {
        return;
    }
    let k = rng.gen_range(0..c.len());
    let current = c.0[k];
    let options: Vec<Pattern> = problem
        .admissible(k + 1)
        .iter()
        .copied()
        .filter(|&p| p != current)
        .collect();
    if !options.is_empty() {
        c.0[k] = options[rng.gen_range(0..options.len())];
    }
}

fn breed<R, F>(
    need: usize,
    cfg: &GaConfig,
    problem: &Problem,
    rng: &mut R,
    mut select: F,
) -> Vec<Chromosome>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Chromosome,
{
    let mut children = Vec::with_capacity(need + 1);
    while children.len() < need {
        let p1 = select(rng);
        let p2 = select(rng);
        let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover_prob {
            two_point_crossover(&p1, &p2, rng)
        } else {
            (p1, p2)
        };
        for c in [&mut c1, &mut c2] {
            if rng.gen::<f64>() < cfg.mutation_prob {
                mutate(c, problem, rng);
            }
        }
        children.push(c1);
        if children.len() < need {
            children.push(c2);
        }
    }
    children
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn total_stats(pop: &[Individual]) -> (f64, f64) {
    let mut totals: Vec<f64> = pop.iter().map(|i| i.cost.total).collect();
    totals.sort_by(f64::total_cmp);
    (totals.first().copied().unwrap_or(f64::NAN), median(&totals))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleObjectiveResult {
    /// Lowest total cost seen over the run.
    pub best: Individual,
    pub history: Vec<GenerationStats>,
    pub final_population: Vec<Individual>,
}

/// Elitist generational GA minimising total cost.
pub fn run_single_objective<E: BatchEvaluator + ?Sized>(
    cfg: &GaConfig,
    problem: &Problem,
    evaluator: &E,
    master_seed: u64,
) -> Result<SingleObjectiveResult, EvolutionError> {
    cfg.validate()?;
    let mut rng = seed::stream(master_seed, &[OPERATORS]);
    let initial: Vec<Chromosome> = (0..cfg.population_size)
        .map(|_| problem.random_chromosome(&mut rng))
        .collect();
    let mut pop = evaluate_all(evaluator, initial, master_seed, 0)?;
    let mut best = best_by_total(&pop).clone();
    let mut history = Vec::with_capacity(cfg.generations);
    let (b, m) = total_stats(&pop);
    history.push(GenerationStats {
        generation: 0,
        best_total: b,
        median_total: m,
        best_so_far: best.cost.total,
        front_size: None,
    });

    for generation in 1..cfg.generations {
        pop.sort_by(|a, b| a.cost.total.total_cmp(&b.cost.total));
        let elites: Vec<Individual> = pop[..cfg.elite].to_vec();
        let parents = &pop;
        let children = breed(cfg.population_size - cfg.elite, cfg, problem, &mut rng, |rng| {
            let picks = index::sample(rng, parents.len(), cfg.tournament_size);
            let winner = picks
                .iter()
                .min_by(|&x, &y| parents[x].cost.total.total_cmp(&parents[y].cost.total))
                .expect("non-empty tournament");
            parents[winner].chromosome.clone()
        });
        let children = evaluate_all(evaluator, children, master_seed, generation)?;
        pop = elites;
        pop.extend(children);
        let gen_best = best_by_total(&pop);
        if gen_best.cost.total < best.cost.total {
            best = gen_best.clone();
        }
        let (b, m) = total_stats(&pop);
        history.push(GenerationStats {
            generation,
            best_total: b,
            median_total: m,
            best_so_far: best.cost.total,
            front_size: None,
        });
    }

    Ok(SingleObjectiveResult {
        best,
        history,
        final_population: pop,
    })
}

fn best_by_total(pop: &[Individual]) -> &Individual {
    pop.iter()
        .min_by(|a, b| a.cost.total.total_cmp(&b.cost.total))
        .expect("non-empty population")
}

/// Pareto dominance for minimisation: no worse in both objectives and
/// strictly better in at least one.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Partitions `points` into non-dominated fronts (indices into `points`),
/// best front first.
pub fn fast_non_dominated_sort(points: &[(f64, f64)]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    let mut domination_count = alloc::vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    for p in 0..n {
        for q in 0..n {
            if dominates(points[p], points[q]) {
                dominated_by_me[p].push(q);
            } else if dominates(points[q], points[p]) {
                domination_count[p] += 1;
            }
        }
        if domination_count[p] == 0 {
            current.push(p);
        }
    }
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (indices into `points`),
/// aligned with `front`. Boundary members get `f64::INFINITY`; an
/// objective with zero range contributes nothing.
pub fn crowding_distance(points: &[(f64, f64)], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = alloc::vec![0.0; n];
    if n <= 2 {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        return dist;
    }
    let objective = |k: usize, m: usize| if m == 0 { points[front[k]].0 } else { points[front[k]].1 };
    for m in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| objective(a, m).total_cmp(&objective(b, m)).then(a.cmp(&b)));
        let (lo, hi) = (objective(order[0], m), objective(order[n - 1], m));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let k = order[w];
            dist[k] += (objective(order[w + 1], m) - objective(order[w - 1], m)) / range;
        }
    }
    dist
}

/// Individual annotated with its non-domination rank (1 = best front) and
/// crowding distance.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedIndividual {
    pub individual: Individual,
    pub rank: usize,
    pub crowding: f64,
}

/// Crowded comparison: lower rank first, then larger crowding distance.
pub fn crowded_cmp(a: &RankedIndividual, b: &RankedIndividual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding.total_cmp(&a.crowding))
}

/// Ranks `pop` and keeps the best `n` by fronts, truncating the splitting
/// front by decreasing crowding distance.
pub fn survivor_selection(pop: Vec<Individual>, n: usize) -> Vec<RankedIndividual> {
    let points: Vec<(f64, f64)> = pop.iter().map(|i| i.cost.objectives()).collect();
    let fronts = fast_non_dominated_sort(&points);
    let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(n);
    for (f, front) in fronts.iter().enumerate() {
        if out.len() >= n {
            break;
        }
        let crowd = crowding_distance(&points, front);
        let mut members: Vec<(usize, f64)> = front.iter().copied().zip(crowd).collect();
        if out.len() + members.len() > n {
            members.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            members.truncate(n - out.len());
        }
        for (idx, crowding) in members {
            out.push(RankedIndividual {
                individual: slots[idx].take().expect("each index used once"),
                rank: f + 1,
                crowding,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Result {
    /// First non-dominated front of the final population.
    pub front: Vec<Individual>,
    /// Member of `front` with the lowest total cost.
    pub best_total: Individual,
    pub final_population: Vec<RankedIndividual>,
    pub history: Vec<GenerationStats>,
}

/// NSGA-II on (inventory cost, transport cost).
pub fn run_nsga2<E: BatchEvaluator + ?Sized>(
    cfg: &GaConfig,
    problem: &Problem,
    evaluator: &E,
    master_seed: u64,
) -> Result<Nsga2Result, EvolutionError> {
    cfg.validate()?;
    let n = cfg.population_size;
    let mut rng = seed::stream(master_seed, &[OPERATORS]);
    let initial: Vec<Chromosome> = (0..n).map(|_| problem.random_chromosome(&mut rng)).collect();
    let mut pop = survivor_selection(evaluate_all(evaluator, initial, master_seed, 0)?, n);
    let mut history = Vec::with_capacity(cfg.generations);
    let mut best_so_far = f64::INFINITY;
    record_nsga(&pop, 0, &mut best_so_far, &mut history);

    for generation in 1..cfg.generations {
        let parents = &pop;
        let offspring = breed(n, cfg, problem, &mut rng, |rng| {
            let picks = index::sample(rng, parents.len(), cfg.tournament_size);
            let winner = picks
                .iter()
                .min_by(|&x, &y| crowded_cmp(&parents[x], &parents[y]))
                .expect("non-empty tournament");
            parents[winner].individual.chromosome.clone()
        });
        let offspring = evaluate_all(evaluator, offspring, master_seed, generation)?;
        let mut merged: Vec<Individual> = pop.into_iter().map(|r| r.individual).collect();
        merged.extend(offspring);
        pop = survivor_selection(merged, n);
        record_nsga(&pop, generation, &mut best_so_far, &mut history);
    }

    let front: Vec<Individual> = pop
        .iter()
        .filter(|r| r.rank == 1)
        .map(|r| r.individual.clone())
        .collect();
    let best_total = best_by_total(&front).clone();
    Ok(Nsga2Result {
        front,
        best_total,
        final_population: pop,
        history,
    })
}

fn record_nsga(pop: &[RankedIndividual], generation: usize, best_so_far: &mut f64, history: &mut Vec<GenerationStats>) {
    let inds: Vec<Individual> = pop.iter().map(|r| r.individual.clone()).collect();
    let (b, m) = total_stats(&inds);
    *best_so_far = best_so_far.min(b);
    history.push(GenerationStats {
        generation,
        best_total: b,
        median_total: m,
        best_so_far: *best_so_far,
        front_size: Some(pop.iter().filter(|r| r.rank == 1).count()),
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Distribution, Point};
    use crate::logistics::InventoryEntry;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_shop_problem(x: f64, cost_f2: f64) -> Problem {
        let inst = Instance::new("t", Point::new(0.0, 0.0), [Point::new(x, 0.0)], Distribution::Unknown).unwrap();
        let table = InventoryTable::new(vec![[
            None,
            Some(InventoryEntry {
                cost: cost_f2,
                delivery_size: 3,
            }),
            None,
            None,
            None,
        ]])
        .unwrap();
        Problem::new(&inst, table, VehicleConfig::default()).unwrap()
    }

    #[test]
    fn evaluate_one_shop_by_hand() {
        let problem = one_shop_problem(30.0, 311.0);
        let c = Chromosome(vec![Pattern::new(17).unwrap()]);
        for solver in [
            VrpSolver::Cwls(LocalSearchConfig::default()),
            VrpSolver::Cwts(TabuConfig::default()),
            VrpSolver::Aco(AcoParams {
                iterations: 2,
                ants: 2,
                ..AcoParams::default()
            }),
        ] {
            let cost = evaluate(&c, &problem, &solver, 1).unwrap();
            assert_eq!(cost.inventory, 311.0);
            assert!((cost.transport - 72.0).abs() < 1e-9);
            assert!((cost.total - 383.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shop_without_patterns_is_rejected() {
        let inst = Instance::new("t", Point::new(0.0, 0.0), [Point::new(1.0, 0.0)], Distribution::Unknown).unwrap();
        let entry = InventoryEntry {
            cost: 1.0,
            delivery_size: 1,
        };
        let table = InventoryTable::new(vec![[Some(entry), None, None, None, None]]).unwrap();
        assert!(Problem::new(&inst, table, VehicleConfig::default()).is_err());
    }

    #[test]
    fn evaluate_rejects_inadmissible_gene() {
        let problem = one_shop_problem(30.0, 311.0);
        let c = Chromosome(vec![Pattern::new(31).unwrap()]);
        let r = evaluate(&c, &problem, &VrpSolver::Cwls(LocalSearchConfig::default()), 0);
        assert!(matches!(r, Err(EvolutionError::Logistics(_))));
        let c = Chromosome(vec![]);
        assert!(evaluate(&c, &problem, &VrpSolver::Cwls(LocalSearchConfig::default()), 0).is_err());
    }

    #[test]
    fn sort_examples() {
        assert_eq!(fast_non_dominated_sort(&[(1.0, 1.0)]), vec![vec![0]]);
        assert_eq!(
            fast_non_dominated_sort(&[(1.0, 9.0), (9.0, 1.0), (5.0, 5.0)]),
            vec![vec![0, 1, 2]]
        );
        assert_eq!(
            fast_non_dominated_sort(&[(3.0, 3.0), (1.0, 1.0), (2.0, 2.0)]),
            vec![vec![1], vec![2], vec![0]]
        );
    }

    #[test]
    fn crowding_examples() {
        let pts = [(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)];
        let d = crowding_distance(&pts, &[0, 1, 2]);
        assert_eq!(d[0], f64::INFINITY);
        assert_eq!(d[2], f64::INFINITY);
        assert!((d[1] - 2.0).abs() < 1e-12);

        assert!(crowding_distance(&pts, &[0, 2]).iter().all(|d| d.is_infinite()));

        let flat = [(1.0, 0.0), (1.0, 1.0), (1.0, 3.0)];
        let d = crowding_distance(&flat, &[0, 1, 2]);
        // First objective has zero range; only the second contributes.
        assert!((d[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossover_two_points() {
        let p = |ids: &[u8]| Chromosome(ids.iter().map(|&i| Pattern::new(i).unwrap()).collect());
        let a = p(&[5, 5, 5]);
        let b = p(&[31, 31, 31]);
        let (c1, c2) = two_point_crossover(&a, &b, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(c1, p(&[5, 31, 5]));
        assert_eq!(c2, p(&[31, 5, 31]));
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = GaConfig {
            elite: 100,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = GaConfig {
            mutation_prob: 1.5,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn survivor_truncation_prefers_crowding() {
        let mk = |i: f64, t: f64| Individual {
            chromosome: Chromosome(vec![]),
            cost: CostReport::new(i, t),
        };
        // Five mutually non-dominated points; the middle ones are crowded.
        let pop = vec![mk(0.0, 10.0), mk(1.0, 9.0), mk(1.5, 8.5), mk(5.0, 5.0), mk(10.0, 0.0)];
        let kept = survivor_selection(pop, 3);
        assert_eq!(kept.len(), 3);
        let objs: Vec<(f64, f64)> = kept.iter().map(|r| r.individual.cost.objectives()).collect();
        assert!(objs.contains(&(0.0, 10.0)));
        assert!(objs.contains(&(10.0, 0.0)));
        assert!(objs.contains(&(5.0, 5.0)));
    }
}
