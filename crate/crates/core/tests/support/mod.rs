//! Oracles and property checks shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use evita_core::aco::{aco_run, decay_parameter, AcoParams, AntState, PheromoneMatrix};
use evita_core::evolution::{
    evaluate, fast_non_dominated_sort, mutate, run_nsga2, run_single_objective, survivor_selection,
    two_point_crossover, Chromosome, CostReport, GaConfig, Individual, Problem, SequentialEvaluator, VrpSolver,
};
use evita_core::instance::{DistanceMatrix, Distribution, Instance, Point, DEPOT};
use evita_core::logistics::{InventoryEntry, InventoryTable, Pattern, VehicleConfig};
use evita_core::routing::{local_search, DayPlan, LocalSearchConfig, RoutingContext};
use evita_core::savings::{clarke_wright, cwls_solve};
use evita_core::tabu::{cwts_solve, tabu_search, TabuConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A single-day routing problem.
pub struct Micro {
    pub dm: DistanceMatrix,
    pub demands: Vec<u32>,
    pub vehicle: VehicleConfig,
    pub shops: Vec<usize>,
}

impl Micro {
    pub fn ctx(&self) -> RoutingContext<'_> {
        RoutingContext::new(&self.dm, &self.demands, &self.vehicle)
    }
}

/// `n` shops uniform in a 100 km square, demands 1..=6. One instance in
/// three gets a 5 h working day so that time limits bind as well.
pub fn random_micro(seed: u64, n: usize) -> Micro {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        pts.push(Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)));
    }
    let mut demands = vec![0];
    demands.extend((0..n).map(|_| rng.gen_range(1..=6)));
    let vehicle = if seed % 3 == 0 {
        VehicleConfig {
            max_work_time: 5.0,
            ..VehicleConfig::default()
        }
    } else {
        VehicleConfig::default()
    };
    Micro {
        dm: DistanceMatrix::euclidean(&pts),
        demands,
        vehicle,
        shops: (1..=n).collect(),
    }
}

fn tour_length(order: &[usize], dm: &DistanceMatrix) -> f64 {
    let mut d = 0.0;
    let mut prev = DEPOT;
    for &s in order {
        d += dm.get(prev, s);
        prev = s;
    }
    d + dm.get(prev, DEPOT)
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Shortest feasible tour through `subset`, if any ordering is feasible.
fn best_route(subset: &[usize], ctx: &RoutingContext<'_>) -> Option<f64> {
    let vc = ctx.vehicle;
    let load: u32 = subset.iter().map(|&s| ctx.demands[s]).sum();
    if load > vc.capacity {
        return None;
    }
    let mut best = f64::INFINITY;
    let mut items = subset.to_vec();
    permutations(&mut items, 0, &mut |order| {
        let d = tour_length(order, ctx.distances);
        let duration = d / vc.speed + order.len() as f64 * vc.unload_time;
        if duration <= vc.max_work_time && d < best {
            best = d;
        }
    });
    best.is_finite().then_some(best)
}

/// Optimal day cost by enumerating every set partition of `shops` and every
/// ordering of each block.
pub fn optimal_day(shops: &[usize], ctx: &RoutingContext<'_>) -> Option<f64> {
    if shops.is_empty() {
        return Some(0.0);
    }
    let mut memo: HashMap<Vec<usize>, Option<f64>> = HashMap::new();
    let mut best = f64::INFINITY;
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    fn rec(
        k: usize,
        shops: &[usize],
        blocks: &mut Vec<Vec<usize>>,
        memo: &mut HashMap<Vec<usize>, Option<f64>>,
        ctx: &RoutingContext<'_>,
        best: &mut f64,
    ) {
        if k == shops.len() {
            let mut total = 0.0;
            for b in blocks.iter() {
                let cost = *memo.entry(b.clone()).or_insert_with(|| best_route(b, ctx));
                match cost {
                    Some(c) => total += c,
                    None => return,
                }
            }
            if total < *best {
                *best = total;
            }
            return;
        }
        for i in 0..blocks.len() {
            blocks[i].push(shops[k]);
            rec(k + 1, shops, blocks, memo, ctx, best);
            blocks[i].pop();
        }
        blocks.push(vec![shops[k]]);
        rec(k + 1, shops, blocks, memo, ctx, best);
        blocks.pop();
    }
    rec(0, shops, &mut blocks, &mut memo, ctx, &mut best);
    best.is_finite().then_some(best)
}

/// Checks that `plan` serves `shops` exactly once with feasible routes.
pub fn valid_plan(plan: &DayPlan, shops: &[usize], vc: &VehicleConfig) -> bool {
    plan.covers_exactly(shops) && plan.is_feasible(vc)
}

/// Three shops, every pattern admissible. Costs fall with frequency at
/// different rates and delivery sizes shrink with frequency, so the best
/// patterns trade inventory against transport.
pub fn tiny_problem() -> Problem {
    let inst = Instance::new(
        "tiny",
        Point::new(0.0, 0.0),
        [Point::new(20.0, 0.0), Point::new(0.0, 25.0), Point::new(-18.0, -14.0)],
        Distribution::Unknown,
    )
    .unwrap();
    let row = |costs: [f64; 5], volume: u32| {
        let mut r = [None; 5];
        for (k, c) in costs.into_iter().enumerate() {
            r[k] = Some(InventoryEntry {
                cost: c,
                delivery_size: volume.div_ceil(k as u32 + 1).min(12),
            });
        }
        r
    };
    let table = InventoryTable::new(vec![
        row([160.0, 120.0, 100.0, 93.0, 90.0], 14),
        row([130.0, 115.0, 104.0, 101.0, 99.0], 9),
        row([150.0, 112.0, 95.0, 80.0, 76.0], 20),
    ])
    .unwrap();
    Problem::new(&inst, table, VehicleConfig::default()).unwrap()
}

/// Every admissible chromosome of `problem` with its cost under exact
/// routing.
pub fn enumerate_exact(problem: &Problem) -> Vec<(Chromosome, CostReport)> {
    let mut out = Vec::new();
    let mut genes = Vec::with_capacity(problem.n_shops());
    fn rec(problem: &Problem, genes: &mut Vec<Pattern>, out: &mut Vec<(Chromosome, CostReport)>) {
        let k = genes.len();
        if k == problem.n_shops() {
            let c = Chromosome(genes.clone());
            out.push((c.clone(), exact_cost(problem, &c)));
            return;
        }
        for &p in problem.admissible(k + 1) {
            genes.push(p);
            rec(problem, genes, out);
            genes.pop();
        }
    }
    rec(problem, &mut genes, &mut out);
    assert_eq!(out.len() as u128, problem.search_space_size());
    out
}

pub fn exact_cost(problem: &Problem, c: &Chromosome) -> CostReport {
    let n = problem.n_shops();
    let mut demands = vec![0u32; n + 1];
    let mut inventory = 0.0;
    for (k, p) in c.genes().iter().enumerate() {
        let e = problem.table().lookup(k + 1, p.frequency()).unwrap();
        inventory += e.cost;
        demands[k + 1] = e.delivery_size;
    }
    let ctx = RoutingContext::new(problem.distances(), &demands, problem.vehicle());
    let mut distance = 0.0;
    for day in evita_core::logistics::Weekday::ALL {
        let shops: Vec<usize> = (1..=n).filter(|&s| c.genes()[s - 1].serves(day)).collect();
        distance += optimal_day(&shops, &ctx).expect("every day is routable");
    }
    CostReport::new(inventory, distance * problem.vehicle().cost_per_km)
}

/// Members of `points` not dominated by any other member.
pub fn pareto_set(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&p| !points.iter().any(|&q| evita_core::evolution::dominates(q, p)))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out.dedup();
    out
}

// Property checks. Each takes plain inputs so that it can run under
// `proptest!` or a hand-driven `TestRunner`.

fn ls_cfg(exhaustive: bool) -> LocalSearchConfig {
    LocalSearchConfig {
        exhaustive,
        ..LocalSearchConfig::default()
    }
}

pub fn check_local_search(seed: u64, n: usize, exhaustive: bool) -> Result<(), TestCaseError> {
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let start = aco_plan_or_cw(&m, &mut rng);
    let out = local_search(&start, &ctx, &ls_cfg(exhaustive), &mut rng);
    prop_assert!(out.total_distance() <= start.total_distance());
    prop_assert_eq!(out.served_shops(), start.served_shops());
    prop_assert!(out.is_feasible(&m.vehicle));
    Ok(())
}

/// A random valid plan (often poor) to start local search from.
fn aco_plan_or_cw(m: &Micro, rng: &mut ChaCha8Rng) -> DayPlan {
    evita_core::aco::valid_random_solution(&m.shops, &m.ctx(), rng)
}

pub fn check_route_duration(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    let r = ctx.route(m.shops.clone());
    prop_assert_eq!(r.duration, r.distance / m.vehicle.speed + n as f64 * m.vehicle.unload_time);
    Ok(())
}

pub fn check_solvers_feasible(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    let aco = AcoParams {
        iterations: 5,
        ants: 5,
        ..AcoParams::default()
    };
    let solvers = [
        VrpSolver::Cwls(LocalSearchConfig::default()),
        VrpSolver::Aco(aco),
        VrpSolver::Cwts(TabuConfig::default()),
    ];
    let cw = clarke_wright(&m.shops, &ctx).unwrap();
    prop_assert!(valid_plan(&cw, &m.shops, &m.vehicle));
    for s in solvers {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = s.solve(&m.shops, &ctx, &mut rng).unwrap();
        prop_assert!(valid_plan(&plan, &m.shops, &m.vehicle), "{} returned an invalid plan", s.name());
    }
    Ok(())
}

pub fn check_cw_deterministic(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    prop_assert_eq!(clarke_wright(&m.shops, &ctx).unwrap(), clarke_wright(&m.shops, &ctx).unwrap());
    let run = || {
        cwls_solve(&m.shops, &ctx, &LocalSearchConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    };
    prop_assert_eq!(run(), run());
    Ok(())
}

pub fn check_aco_run(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    let params = AcoParams {
        iterations: 8,
        ants: 6,
        ..AcoParams::default()
    };
    let out = aco_run(&m.shops, &ctx, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    prop_assert!(valid_plan(&out.plan, &m.shops, &m.vehicle));
    let mut prev = out.initial_cost;
    for it in &out.history {
        prop_assert!(it.ants_valid);
        prop_assert!(it.min_pheromone > 0.0);
        prop_assert!(it.best_so_far <= prev);
        prev = it.best_so_far;
    }
    Ok(())
}

/// Random local and a-posteriori updates keep every level positive.
pub fn check_pheromone_positive(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    let params = AcoParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tau = PheromoneMatrix::with_exponent(m.dm.len(), params.tau0, params.alpha);
    let mut rho = params.rho0;
    for _ in 0..20 {
        let a = evita_core::aco::valid_random_solution(&m.shops, &ctx, &mut rng);
        let b = evita_core::aco::valid_random_solution(&m.shops, &ctx, &mut rng);
        tau.deposit_local(a.undirected_arcs(), &ctx);
        let (best, worst) = if a.total_distance() <= b.total_distance() { (a, b) } else { (b, a) };
        tau.update_posteriori(
            &best.undirected_arcs(),
            &worst.undirected_arcs(),
            best.total_distance(),
            rho,
            params.tau0,
        );
        rho = decay_parameter(rho, params.rho_min);
        prop_assert!(tau.min() > 0.0);
    }
    Ok(())
}

pub fn check_decay(start: f64, floor: f64, steps: usize) -> Result<(), TestCaseError> {
    let mut v = start.max(floor);
    for _ in 0..steps {
        let next = decay_parameter(v, floor);
        prop_assert!(next <= v);
        prop_assert!(next >= floor);
        v = next;
    }
    Ok(())
}

/// With gamma = 0 and uniform pheromone the greedy choice is the nearest
/// unvisited shop (lowest index on ties).
pub fn check_nearest_neighbour(seed: u64, n: usize, visited: usize) -> Result<(), TestCaseError> {
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    let params = AcoParams {
        gamma: 0.0,
        ..AcoParams::default()
    };
    let tau = PheromoneMatrix::new(m.dm.len(), params.tau0);
    let mut ant = AntState::at_depot(&m.shops);
    let mut position = DEPOT;
    // Walk to `visited` shops in index order (position tracking only).
    for &s in m.shops.iter().take(visited.min(n - 1)) {
        ant.position = s;
        ant.unvisited.retain(|&u| u != s);
        position = s;
    }
    let nearest = ant
        .unvisited
        .iter()
        .copied()
        .min_by(|&a, &b| m.dm.get(position, a).total_cmp(&m.dm.get(position, b)).then(a.cmp(&b)));
    prop_assert_eq!(evita_core::aco::greedy_choice(&ant, &tau, &ctx, &params), nearest);
    Ok(())
}

pub fn check_tabu(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    let cfg = TabuConfig::default();
    let seed_plan = clarke_wright(&m.shops, &ctx).unwrap();
    let out = tabu_search(seed_plan.clone(), &ctx, &cfg);
    prop_assert!(out.all_visited_valid);
    prop_assert!(out.max_tenure_seen <= cfg.tenure);
    prop_assert!(out.max_tabu_len <= cfg.tenure);
    let mut prev = seed_plan.total_distance();
    for &b in &out.best_history {
        prop_assert!(b <= prev);
        prev = b;
    }
    prop_assert!(valid_plan(&out.best, &m.shops, &m.vehicle));
    prop_assert!(out.best.total_distance() <= seed_plan.total_distance());
    prop_assert_eq!(cwts_solve(&m.shops, &ctx, &cfg).unwrap(), out.best);
    Ok(())
}

/// One tabu iteration from an empty list is steepest descent over the
/// move set.
pub fn check_tabu_steepest(seed: u64, n: usize) -> Result<(), TestCaseError> {
    use evita_core::tabu::{all_moves, apply_move, best_neighbour, TabuList};
    let m = random_micro(seed, n);
    let ctx = m.ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = evita_core::aco::valid_random_solution(&m.shops, &ctx, &mut rng);
    let mut brute: Option<(f64, DayPlan)> = None;
    for mv in all_moves(&plan) {
        if let Some(p) = apply_move(&plan, mv, &ctx) {
            prop_assert!(valid_plan(&p, &m.shops, &m.vehicle));
            if brute.as_ref().map_or(true, |(c, _)| p.total_distance() < *c) {
                brute = Some((p.total_distance(), p));
            }
        }
    }
    let got = best_neighbour(&plan, &TabuList::new(12), f64::INFINITY, &ctx);
    match (brute, got) {
        (None, None) => {}
        (Some((c, _)), Some((q, _))) => {
            prop_assert!((c - q.total_distance()).abs() < 1e-9, "{} vs {}", c, q.total_distance());
        }
        (a, b) => prop_assert!(false, "brute force {:?} vs tabu {:?}", a.is_some(), b.is_some()),
    }
    Ok(())
}

/// A random problem whose shops accept a random subset of frequencies.
pub fn random_problem(seed: u64, n: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point> = (0..n)
        .map(|_| Point::new(rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)))
        .collect();
    let inst = Instance::new("r", Point::new(30.0, 30.0), pts, Distribution::Unknown).unwrap();
    let table = evita_core::logistics::synth_inventory_table(
        seed,
        n,
        &evita_core::logistics::GeneratorProfile::default(),
    )
    .unwrap();
    Problem::new(&inst, table, VehicleConfig::default()).unwrap()
}

pub fn check_operators_admissible(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let problem = random_problem(seed, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = problem.random_chromosome(&mut rng);
    let b = problem.random_chromosome(&mut rng);
    let (mut c1, mut c2) = two_point_crossover(&a, &b, &mut rng);
    mutate(&mut c1, &problem, &mut rng);
    mutate(&mut c2, &problem, &mut rng);
    for c in [&a, &b, &c1, &c2] {
        prop_assert!(c.is_admissible(&problem));
    }
    Ok(())
}

pub fn check_evaluate_total(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let problem = random_problem(seed, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = problem.random_chromosome(&mut rng);
    let cost = evaluate(&c, &problem, &VrpSolver::Cwls(LocalSearchConfig::default()), seed).unwrap();
    prop_assert_eq!(cost.total, cost.inventory + cost.transport);
    Ok(())
}

fn small_ga(population: usize, generations: usize) -> GaConfig {
    GaConfig {
        population_size: population,
        elite: population / 10,
        generations,
        ..GaConfig::default()
    }
}

pub fn check_single_objective_monotone(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let problem = random_problem(seed, n);
    let solver = VrpSolver::Cwls(LocalSearchConfig::default());
    let ev = SequentialEvaluator {
        problem: &problem,
        solver: &solver,
    };
    let r = run_single_objective(&small_ga(20, 8), &problem, &ev, seed).unwrap();
    prop_assert_eq!(r.history.len(), 8);
    for w in r.history.windows(2) {
        prop_assert!(w[1].best_so_far <= w[0].best_so_far);
        // Elites survive, so the generation best never gets worse either.
        prop_assert!(w[1].best_total <= w[0].best_total);
    }
    prop_assert_eq!(r.best.cost.total, r.history.last().unwrap().best_so_far);
    Ok(())
}

pub fn check_nsga2_population(seed: u64, n: usize, population: usize) -> Result<(), TestCaseError> {
    let problem = random_problem(seed, n);
    let solver = VrpSolver::Cwls(LocalSearchConfig::default());
    let ev = SequentialEvaluator {
        problem: &problem,
        solver: &solver,
    };
    let r = run_nsga2(&small_ga(population, 4), &problem, &ev, seed).unwrap();
    prop_assert_eq!(r.final_population.len(), population);
    let pts: Vec<(f64, f64)> = r.front.iter().map(|i| i.cost.objectives()).collect();
    for &p in &pts {
        for &q in &pts {
            prop_assert!(!evita_core::evolution::dominates(q, p));
        }
        for m in &r.final_population {
            prop_assert!(!evita_core::evolution::dominates(m.individual.cost.objectives(), p));
        }
    }
    prop_assert!(r.front.iter().any(|i| i.cost.total == r.best_total.cost.total));
    Ok(())
}

pub fn check_sort(points: &[(f64, f64)]) -> Result<(), TestCaseError> {
    use evita_core::evolution::dominates;
    let fronts = fast_non_dominated_sort(points);
    let mut seen = vec![false; points.len()];
    for f in &fronts {
        prop_assert!(!f.is_empty());
        for &i in f {
            prop_assert!(!seen[i], "index {} in two fronts", i);
            seen[i] = true;
        }
    }
    prop_assert!(seen.iter().all(|&s| s));
    for (k, fk) in fronts.iter().enumerate() {
        for fj in &fronts[..=k] {
            for &a in fk {
                for &b in fj {
                    prop_assert!(!dominates(points[a], points[b]));
                }
            }
        }
        if k > 0 {
            for &a in fk {
                prop_assert!(fronts[k - 1].iter().any(|&b| dominates(points[b], points[a])));
            }
        }
    }
    Ok(())
}

/// Lowering one point's second objective never worsens its rank.
pub fn check_rank_monotone(points: &[(f64, f64)], who: usize, cut: f64) -> Result<(), TestCaseError> {
    let rank = |pts: &[(f64, f64)], i: usize| {
        fast_non_dominated_sort(pts)
            .iter()
            .position(|f| f.contains(&i))
            .unwrap()
    };
    let i = who % points.len();
    let before = rank(points, i);
    let mut moved = points.to_vec();
    moved[i].1 -= cut.abs();
    prop_assert!(rank(&moved, i) <= before);
    Ok(())
}

pub fn check_survivors(points: &[(f64, f64)], keep: usize) -> Result<(), TestCaseError> {
    let pop: Vec<Individual> = points
        .iter()
        .map(|&(a, b)| Individual {
            chromosome: Chromosome(vec![]),
            cost: CostReport::new(a, b),
        })
        .collect();
    let n = keep.min(pop.len());
    let kept = survivor_selection(pop, n);
    prop_assert_eq!(kept.len(), n);
    for w in kept.windows(2) {
        prop_assert!(w[0].rank <= w[1].rank);
    }
    Ok(())
}
