//! Ant colony VRP solver with a savings-augmented transition rule, local
//! and a-posteriori pheromone updates, self-decaying parameters and
//! 2-interchange improvement of every ant's solution.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::DEPOT;
use crate::routing::{local_search, DayPlan, LocalSearchConfig, RoutingContext, SolveError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcoParams {
    pub iterations: usize,
    pub ants: usize,
    /// Pheromone weight.
    pub alpha: f64,
    /// Inverse-distance weight.
    pub beta: f64,
    /// Savings weight.
    pub gamma: f64,
    pub tau0: f64,
    pub rho0: f64,
    pub rho_min: f64,
    pub p0: f64,
    pub p_min: f64,
    pub local_search: LocalSearchConfig,
}

impl Default for AcoParams {
    fn default() -> Self {
        Self {
            iterations: 50,
            ants: 25,
            alpha: 0.2,
            beta: 0.8,
            gamma: 0.3,
            tau0: 0.5,
            rho0: 1.0,
            rho_min: 0.1,
            p0: 0.8,
            p_min: 0.1,
            local_search: LocalSearchConfig::default(),
        }
    }
}

impl AcoParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.iterations == 0 || self.ants == 0 {
            return Err("iterations and ants must be positive");
        }
        if [self.alpha, self.beta, self.gamma]
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err("transition weights must be finite and non-negative");
        }
        if !(self.tau0.is_finite() && self.tau0 > 0.0) {
            return Err("initial pheromone must be positive");
        }
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho0 && unit(self.rho0)) {
            return Err("rho must satisfy 0 < rho_min <= rho0 <= 1");
        }
        if !(self.p_min > 0.0 && self.p_min <= self.p0 && unit(self.p0)) {
            return Err("p must satisfy 0 < p_min <= p0 <= 1");
        }
        Ok(())
    }
}

/// Multiplicative decay by 0.95 with a floor.
pub fn decay_parameter(previous: f64, floor: f64) -> f64 {
    let next = 0.95 * previous;
    if next >= floor {
        next
    } else {
        floor
    }
}

/// Symmetric pheromone levels over all node pairs, with `tau^alpha` kept
/// alongside each level.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneMatrix {
    n: usize,
    alpha: f64,
    tau: Vec<f64>,
    weighted: Vec<f64>,
}

impl PheromoneMatrix {
    pub fn new(n_nodes: usize, tau0: f64) -> Self {
        Self::with_exponent(n_nodes, tau0, 1.0)
    }

    pub fn with_exponent(n_nodes: usize, tau0: f64, alpha: f64) -> Self {
        Self {
            n: n_nodes,
            alpha,
            tau: alloc::vec![tau0; n_nodes * n_nodes],
            weighted: alloc::vec![libm::pow(tau0, alpha); n_nodes * n_nodes],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tau[i * self.n + j]
    }

    /// `tau(i, j)^alpha`.
    #[inline]
    pub fn weighted(&self, i: usize, j: usize) -> f64 {
        self.weighted[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let w = libm::pow(v, self.alpha);
        for k in [i * self.n + j, j * self.n + i] {
            self.tau[k] = v;
            self.weighted[k] = w;
        }
    }

    pub fn min(&self) -> f64 {
        self.tau.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Adds `1 / d(i, j)` to each traversed arc. Zero-length arcs are left
    /// unchanged.
    pub fn deposit_local(&mut self, arcs: impl IntoIterator<Item = (usize, usize)>, ctx: &RoutingContext<'_>) {
        for (i, j) in arcs {
            let d = ctx.distance(i, j);
            if d > 0.0 {
                let v = self.get(i, j) + 1.0 / d;
                self.set(i, j, v);
            }
        }
    }

    /// Resets the worst plan's arcs to `tau0`, then scales the best plan's
    /// arcs by `rho + (1 - rho) / min_cost`. Arcs shared by both plans end
    /// up reinforced.
    pub fn update_posteriori(
        &mut self,
        best_arcs: &[(usize, usize)],
        worst_arcs: &[(usize, usize)],
        min_cost: f64,
        rho: f64,
        tau0: f64,
    ) {
        for &(i, j) in worst_arcs {
            self.set(i, j, tau0);
        }
        if min_cost > 0.0 {
            let factor = rho + (1.0 - rho) / min_cost;
            for &(i, j) in best_arcs {
                let v = self.get(i, j) * factor;
                self.set(i, j, v);
            }
        }
    }
}

/// Partial solution of one ant.
#[derive(Debug, Clone, PartialEq)]
pub struct AntState {
    pub position: usize,
    /// Sorted ascending.
    pub unvisited: Vec<usize>,
    pub closed_routes: Vec<Vec<usize>>,
    pub current_route: Vec<usize>,
    /// km driven on the current route so far, depot departure included.
    pub route_distance: f64,
    pub route_load: u32,
}

impl AntState {
    pub fn at_depot(shops: &[usize]) -> Self {
        let mut unvisited = shops.to_vec();
        unvisited.sort_unstable();
        Self {
            position: DEPOT,
            unvisited,
            closed_routes: Vec::new(),
            current_route: Vec::new(),
            route_distance: 0.0,
            route_load: 0,
        }
    }

    pub fn remaining_load(&self, ctx: &RoutingContext<'_>) -> u32 {
        ctx.vehicle.capacity.saturating_sub(self.route_load)
    }

    /// Working hours left on the current route.
    pub fn remaining_time(&self, ctx: &RoutingContext<'_>) -> f64 {
        ctx.vehicle.max_work_time - self.elapsed(ctx, self.route_distance, self.current_route.len())
    }

    fn elapsed(&self, ctx: &RoutingContext<'_>, distance: f64, stops: usize) -> f64 {
        distance / ctx.vehicle.speed + stops as f64 * ctx.vehicle.unload_time
    }

    /// True when `shop` can be appended to the current route and the
    /// vehicle can still return to the depot in time.
    pub fn can_serve(&self, shop: usize, ctx: &RoutingContext<'_>) -> bool {
        let distance = self.route_distance + ctx.distance(self.position, shop) + ctx.distance(shop, DEPOT);
        let duration = self.elapsed(ctx, distance, self.current_route.len() + 1);
        duration <= ctx.vehicle.max_work_time && ctx.demands[shop] <= self.remaining_load(ctx)
    }

    pub fn is_done(&self) -> bool {
        self.unvisited.is_empty()
    }

    fn close_route(&mut self) {
        if !self.current_route.is_empty() {
            self.closed_routes.push(core::mem::take(&mut self.current_route));
        }
        self.position = DEPOT;
        self.route_distance = 0.0;
        self.route_load = 0;
    }

    fn visit(&mut self, shop: usize, ctx: &RoutingContext<'_>) {
        self.route_distance += ctx.distance(self.position, shop);
        self.route_load += ctx.demands[shop];
        self.current_route.push(shop);
        if let Ok(k) = self.unvisited.binary_search(&shop) {
            self.unvisited.remove(k);
        }
        self.position = shop;
    }

    fn into_plan(mut self, ctx: &RoutingContext<'_>) -> DayPlan {
        self.close_route();
        DayPlan::new(self.closed_routes.into_iter().map(|r| ctx.route(r)).collect())
    }
}

/// `eta^beta * mu^gamma`, the pheromone-free part of the attractiveness.
/// The savings factor is dropped when leaving the depot, where every
/// saving is zero.
fn heuristic_weight(i: usize, j: usize, ctx: &RoutingContext<'_>, params: &AcoParams) -> f64 {
    let d = ctx.distance(i, j);
    let eta = if d > 0.0 { 1.0 / d } else { f64::INFINITY };
    let mut w = libm::pow(eta, params.beta);
    if i != DEPOT {
        w *= libm::pow(ctx.distances.saving(i, j).max(0.0), params.gamma);
    }
    w
}

/// Attractiveness of moving from `i` to `j`: `tau^alpha * eta^beta * mu^gamma`
/// with `eta = 1/d(i, j)` and `mu` the saving of joining `i` and `j`.
pub fn attractiveness(
    i: usize,
    j: usize,
    tau: &PheromoneMatrix,
    ctx: &RoutingContext<'_>,
    params: &AcoParams,
) -> f64 {
    libm::pow(tau.get(i, j), params.alpha) * heuristic_weight(i, j, ctx, params)
}

/// Heuristic weights between the nodes of one day, computed once per run.
#[derive(Debug, Clone)]
pub struct HeuristicCache {
    local: Vec<usize>,
    m: usize,
    w: Vec<f64>,
}

impl HeuristicCache {
    pub fn new(shops: &[usize], ctx: &RoutingContext<'_>, params: &AcoParams) -> Self {
        let mut nodes = Vec::with_capacity(shops.len() + 1);
        nodes.push(DEPOT);
        nodes.extend_from_slice(shops);
        let mut local = alloc::vec![usize::MAX; ctx.distances.len()];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let m = nodes.len();
        let mut w = alloc::vec![0.0; m * m];
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                if a != b {
                    w[a * m + b] = heuristic_weight(i, j, ctx, params);
                }
            }
        }
        Self { local, m, w }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[self.local[i] * self.m + self.local[j]]
    }
}

/// Unvisited shop with the highest attractiveness; ties go to the lowest
/// node index.
pub fn greedy_choice(ant: &AntState, tau: &PheromoneMatrix, ctx: &RoutingContext<'_>, params: &AcoParams) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in &ant.unvisited {
        let s = attractiveness(ant.position, j, tau, ctx, params);
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.map(|(j, _)| j)
}

fn greedy_choice_cached(ant: &AntState, tau: &PheromoneMatrix, h: &HeuristicCache) -> Option<usize> {
    let i = ant.position;
    let mut best: Option<(usize, f64)> = None;
    for &j in &ant.unvisited {
        let s = tau.weighted(i, j) * h.get(i, j);
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.map(|(j, _)| j)
}

/// Next node for `ant`: the greedy choice with probability `p`, a uniform
/// random unvisited shop otherwise. If the chosen shop does not fit the
/// remaining time or load, the ant heads back to the depot.
pub fn transition<R: Rng + ?Sized>(
    ant: &AntState,
    tau: &PheromoneMatrix,
    ctx: &RoutingContext<'_>,
    params: &AcoParams,
    p: f64,
    rng: &mut R,
) -> usize {
    let q: f64 = rng.gen();
    let candidate = if q <= p {
        greedy_choice(ant, tau, ctx, params)
    } else {
        ant.unvisited.choose(rng).copied()
    };
    match candidate {
        Some(j) if ant.can_serve(j, ctx) => j,
        _ => DEPOT,
    }
}

/// [`transition`] with precomputed weights; makes the same choices given
/// the same random draws.
fn transition_cached<R: Rng + ?Sized>(
    ant: &AntState,
    tau: &PheromoneMatrix,
    h: &HeuristicCache,
    ctx: &RoutingContext<'_>,
    p: f64,
    rng: &mut R,
) -> usize {
    let q: f64 = rng.gen();
    let candidate = if q <= p {
        greedy_choice_cached(ant, tau, h)
    } else {
        ant.unvisited.choose(rng).copied()
    };
    match candidate {
        Some(j) if ant.can_serve(j, ctx) => j,
        _ => DEPOT,
    }
}

/// Random permutation of the shops cut greedily into feasible routes.
pub fn valid_random_solution<R: Rng + ?Sized>(shops: &[usize], ctx: &RoutingContext<'_>, rng: &mut R) -> DayPlan {
    let mut order = shops.to_vec();
    order.shuffle(rng);
    let mut ant = AntState::at_depot(shops);
    for s in order {
        if !ant.can_serve(s, ctx) {
            ant.close_route();
        }
        ant.visit(s, ctx);
    }
    ant.into_plan(ctx)
}

/// Per-iteration trace of a colony run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub best_so_far: f64,
    pub iteration_best: f64,
    pub iteration_worst: f64,
    pub min_pheromone: f64,
    pub rho: f64,
    pub p: f64,
    /// Every ant served every shop exactly once with feasible routes.
    pub ants_valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcoOutcome {
    pub plan: DayPlan,
    pub initial_cost: f64,
    pub history: Vec<IterationStats>,
}

/// Runs the colony and returns the best plan found.
pub fn aco_solve<R: Rng + ?Sized>(
    shops: &[usize],
    ctx: &RoutingContext<'_>,
    params: &AcoParams,
    rng: &mut R,
) -> Result<DayPlan, SolveError> {
    aco_run(shops, ctx, params, rng).map(|o| o.plan)
}

/// [`aco_solve`] with a per-iteration trace.
pub fn aco_run<R: Rng + ?Sized>(
    shops: &[usize],
    ctx: &RoutingContext<'_>,
    params: &AcoParams,
    rng: &mut R,
) -> Result<AcoOutcome, SolveError> {
    ctx.check_singletons(shops)?;
    let mut best = valid_random_solution(shops, ctx, rng);
    let initial_cost = best.total_distance();
    let mut history = Vec::with_capacity(params.iterations);
    if shops.is_empty() {
        return Ok(AcoOutcome {
            plan: best,
            initial_cost,
            history,
        });
    }

    let mut tau = PheromoneMatrix::with_exponent(ctx.distances.len(), params.tau0, params.alpha);
    let heuristic = HeuristicCache::new(shops, ctx, params);
    let (mut rho, mut p) = (params.rho0, params.p0);

    for _ in 0..params.iterations {
        let mut ants: Vec<AntState> = (0..params.ants).map(|_| AntState::at_depot(shops)).collect();
        while ants.iter().any(|a| !a.is_done()) {
            for ant in ants.iter_mut().filter(|a| !a.is_done()) {
                let from = ant.position;
                let next = transition_cached(ant, &tau, &heuristic, ctx, p, rng);
                tau.deposit_local([(from, next)], ctx);
                if next == DEPOT {
                    ant.close_route();
                } else {
                    ant.visit(next, ctx);
                    if ant.is_done() {
                        tau.deposit_local([(next, DEPOT)], ctx);
                        ant.close_route();
                    }
                }
            }
        }

        let plans: Vec<DayPlan> = ants
            .into_iter()
            .map(|a| {
                let plan = a.into_plan(ctx);
                local_search(&plan, ctx, &params.local_search, rng)
            })
            .collect();
        let ants_valid = plans
            .iter()
            .all(|pl| pl.covers_exactly(shops) && pl.is_feasible(ctx.vehicle));

        let (mut ib, mut iw) = (0, 0);
        for (k, pl) in plans.iter().enumerate() {
            if pl.total_distance() < plans[ib].total_distance() {
                ib = k;
            }
            if pl.total_distance() > plans[iw].total_distance() {
                iw = k;
            }
        }
        let min_cost = plans[ib].total_distance();
        tau.update_posteriori(
            &plans[ib].undirected_arcs(),
            &plans[iw].undirected_arcs(),
            min_cost,
            rho,
            params.tau0,
        );
        let iteration_worst = plans[iw].total_distance();
        if best.total_distance() > min_cost {
            best = plans.into_iter().nth(ib).expect("index in range");
        }
        history.push(IterationStats {
            best_so_far: best.total_distance(),
            iteration_best: min_cost,
            iteration_worst,
            min_pheromone: tau.min(),
            rho,
            p,
            ants_valid,
        });
        rho = decay_parameter(rho, params.rho_min);
        p = decay_parameter(p, params.p_min);
    }

    Ok(AcoOutcome {
        plan: best,
        initial_cost,
        history,
    })
}
