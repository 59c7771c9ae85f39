//! Tabu search over day plans, seeded with the savings solution (CWTS).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::instance::DEPOT;
use crate::routing::{is_feasible, DayPlan, Route, RoutingContext, SolveError};
use crate::savings::clarke_wright;

/// A neighbourhood move, identified by its kind and shop ids. Swaps store
/// the lower shop id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    /// Exchange two shops of the same route.
    SwapIntraRoute(usize, usize),
    /// Exchange two shops of different routes.
    SwapInterRoute(usize, usize),
    /// Move a shop out of its route into a new route of its own.
    ExtractToNewRoute(usize),
}

impl Move {
    fn swap_intra(a: usize, b: usize) -> Self {
        Move::SwapIntraRoute(a.min(b), a.max(b))
    }

    fn swap_inter(a: usize, b: usize) -> Self {
        Move::SwapInterRoute(a.min(b), a.max(b))
    }
}

/// Recently applied moves with their remaining tenure in iterations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabuList {
    tenure: usize,
    entries: BTreeMap<Move, usize>,
}

impl TabuList {
    pub fn new(tenure: usize) -> Self {
        Self {
            tenure,
            entries: BTreeMap::new(),
        }
    }

    pub fn is_tabu(&self, mv: &Move) -> bool {
        self.entries.contains_key(mv)
    }

    /// Adds `mv` with full tenure; an existing entry is refreshed.
    pub fn insert(&mut self, mv: Move) {
        if self.tenure > 0 {
            self.entries.insert(mv, self.tenure);
        }
    }

    /// Ages every entry by one iteration and drops expired ones.
    pub fn tick(&mut self) {
        self.entries.retain(|_, t| {
            *t -= 1;
            *t > 0
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Move, &usize)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TabuConfig {
    pub tenure: usize,
    /// Consecutive non-improving iterations before stopping.
    pub stagnation_limit: usize,
    /// Hard cap on total iterations.
    pub max_iterations: usize,
}

impl Default for TabuConfig {
    fn default() -> Self {
        Self {
            tenure: 12,
            stagnation_limit: 20,
            max_iterations: 10_000,
        }
    }
}

impl TabuConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.stagnation_limit == 0 || self.max_iterations == 0 {
            return Err("stagnation limit and iteration cap must be positive");
        }
        Ok(())
    }
}

/// Lookup of shop positions inside a plan.
struct Layout {
    /// (shop, route, position), sorted by shop.
    slots: Vec<(usize, usize, usize)>,
}

impl Layout {
    fn of(plan: &DayPlan) -> Self {
        let mut slots: Vec<(usize, usize, usize)> = plan
            .routes()
            .iter()
            .enumerate()
            .flat_map(|(r, route)| route.shops.iter().enumerate().map(move |(p, &s)| (s, r, p)))
            .collect();
        slots.sort_unstable();
        Self { slots }
    }

    fn find(&self, shop: usize) -> Option<(usize, usize)> {
        self.slots
            .binary_search_by_key(&shop, |&(s, _, _)| s)
            .ok()
            .map(|k| (self.slots[k].1, self.slots[k].2))
    }
}

/// Node at extended position `k` of a route (0 and len+1 are the depot).
#[inline]
fn ext(route: &Route, k: usize) -> usize {
    if k == 0 || k > route.shops.len() {
        DEPOT
    } else {
        route.shops[k - 1]
    }
}

/// Distance of `route` after swapping positions `a < b`.
fn intra_swap_distance(route: &Route, a: usize, b: usize, ctx: &RoutingContext<'_>) -> f64 {
    let node = |k: usize| -> usize {
        if k == a + 1 {
            route.shops[b]
        } else if k == b + 1 {
            route.shops[a]
        } else {
            ext(route, k)
        }
    };
    let mut edges = [a, a + 1, b, b + 1];
    edges.sort_unstable();
    let mut delta = 0.0;
    let mut prev = usize::MAX;
    for &k in &edges {
        if k == prev {
            continue;
        }
        prev = k;
        delta += ctx.distance(node(k), node(k + 1)) - ctx.distance(ext(route, k), ext(route, k + 1));
    }
    route.distance + delta
}

/// Distance of `route` with the shop at position `p` replaced by `shop`.
fn replace_distance(route: &Route, p: usize, shop: usize, ctx: &RoutingContext<'_>) -> f64 {
    let (prev, old, next) = (ext(route, p), route.shops[p], ext(route, p + 2));
    route.distance - ctx.distance(prev, old) - ctx.distance(old, next) + ctx.distance(prev, shop) + ctx.distance(shop, next)
}

/// Distance of `route` with position `p` removed.
fn remove_distance(route: &Route, p: usize, ctx: &RoutingContext<'_>) -> f64 {
    let (prev, old, next) = (ext(route, p), route.shops[p], ext(route, p + 2));
    route.distance - ctx.distance(prev, old) - ctx.distance(old, next) + ctx.distance(prev, next)
}

fn fits(distance: f64, stops: usize, load: u32, ctx: &RoutingContext<'_>) -> bool {
    let duration = distance / ctx.vehicle.speed + stops as f64 * ctx.vehicle.unload_time;
    load <= ctx.vehicle.capacity && duration <= ctx.vehicle.max_work_time
}

/// Cost of the neighbour produced by `mv`, or `None` if it is not a valid
/// move for `plan` or yields an infeasible plan.
fn move_cost(plan: &DayPlan, layout: &Layout, mv: Move, ctx: &RoutingContext<'_>) -> Option<f64> {
    let routes = plan.routes();
    let total = plan.total_distance();
    match mv {
        Move::SwapIntraRoute(x, y) => {
            let ((r, a), (r2, b)) = (layout.find(x)?, layout.find(y)?);
            if r != r2 || a == b {
                return None;
            }
            let route = &routes[r];
            let d = intra_swap_distance(route, a.min(b), a.max(b), ctx);
            fits(d, route.len(), route.load, ctx).then(|| total - route.distance + d)
        }
        Move::SwapInterRoute(x, y) => {
            let ((r1, a), (r2, b)) = (layout.find(x)?, layout.find(y)?);
            if r1 == r2 {
                return None;
            }
            let (ra, rb) = (&routes[r1], &routes[r2]);
            let da = replace_distance(ra, a, y, ctx);
            let db = replace_distance(rb, b, x, ctx);
            let la = ra.load - ctx.demands[x] + ctx.demands[y];
            let lb = rb.load - ctx.demands[y] + ctx.demands[x];
            (fits(da, ra.len(), la, ctx) && fits(db, rb.len(), lb, ctx))
                .then(|| total - ra.distance - rb.distance + da + db)
        }
        Move::ExtractToNewRoute(x) => {
            let (r, p) = layout.find(x)?;
            let route = &routes[r];
            if route.len() < 2 {
                return None;
            }
            let d = remove_distance(route, p, ctx);
            let single = 2.0 * ctx.distance(DEPOT, x);
            (fits(d, route.len() - 1, route.load - ctx.demands[x], ctx)
                && fits(single, 1, ctx.demands[x], ctx))
            .then(|| total - route.distance + d + single)
        }
    }
}

/// Applies `mv` to `plan`, recomputing the touched routes. Returns `None`
/// when the move does not apply or breaks feasibility.
pub fn apply_move(plan: &DayPlan, mv: Move, ctx: &RoutingContext<'_>) -> Option<DayPlan> {
    let layout = Layout::of(plan);
    let mut shops: Vec<Vec<usize>> = plan.routes().iter().map(|r| r.shops.clone()).collect();
    match mv {
        Move::SwapIntraRoute(x, y) => {
            let ((r, a), (r2, b)) = (layout.find(x)?, layout.find(y)?);
            if r != r2 || a == b {
                return None;
            }
            shops[r].swap(a, b);
        }
        Move::SwapInterRoute(x, y) => {
            let ((r1, a), (r2, b)) = (layout.find(x)?, layout.find(y)?);
            if r1 == r2 {
                return None;
            }
            shops[r1][a] = y;
            shops[r2][b] = x;
        }
        Move::ExtractToNewRoute(x) => {
            let (r, p) = layout.find(x)?;
            if shops[r].len() < 2 {
                return None;
            }
            shops[r].remove(p);
            shops.push(alloc::vec![x]);
        }
    }
    let routes: Vec<Route> = shops.into_iter().map(|s| ctx.route(s)).collect();
    routes
        .iter()
        .all(|r| is_feasible(r, ctx.vehicle))
        .then(|| DayPlan::new(routes))
}

/// Every move applicable to `plan`, in enumeration order: intra-route
/// swaps, inter-route swaps, extractions, each by ascending shop ids.
pub fn all_moves(plan: &DayPlan) -> Vec<Move> {
    let layout = Layout::of(plan);
    let slots = &layout.slots;
    let mut intra = Vec::new();
    let mut inter = Vec::new();
    for (k, &(x, rx, _)) in slots.iter().enumerate() {
        for &(y, ry, _) in &slots[k + 1..] {
            if rx == ry {
                intra.push(Move::swap_intra(x, y));
            } else {
                inter.push(Move::swap_inter(x, y));
            }
        }
    }
    let extract = slots
        .iter()
        .filter(|&&(_, r, _)| plan.routes()[r].len() > 1)
        .map(|&(x, _, _)| Move::ExtractToNewRoute(x));
    intra.into_iter().chain(inter).chain(extract).collect()
}

/// Cheapest admissible neighbour of `current`.
///
/// Tabu moves are skipped unless they beat `best_known_cost`. The result
/// may be worse than `current`. `None` means no admissible neighbour.
pub fn best_neighbour(
    current: &DayPlan,
    tabu: &TabuList,
    best_known_cost: f64,
    ctx: &RoutingContext<'_>,
) -> Option<(DayPlan, Move)> {
    let layout = Layout::of(current);
    let mut best: Option<(f64, Move)> = None;
    for mv in all_moves(current) {
        let Some(cost) = move_cost(current, &layout, mv, ctx) else {
            continue;
        };
        let is_tabu = tabu.is_tabu(&mv) && cost >= best_known_cost;
        if !is_tabu && best.map_or(true, |(c, _)| cost < c) {
            best = Some((cost, mv));
        }
    }
    let (_, mv) = best?;
    apply_move(current, mv, ctx).map(|plan| (plan, mv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabuOutcome {
    pub best: DayPlan,
    pub iterations: usize,
    /// Best-so-far cost after each iteration.
    pub best_history: Vec<f64>,
    /// Cost of the current solution after each iteration.
    pub current_history: Vec<f64>,
    /// Largest tabu list observed.
    pub max_tabu_len: usize,
    /// Largest remaining tenure observed right after an insertion.
    pub max_tenure_seen: usize,
    /// Every visited plan was feasible and served the initial shops exactly.
    pub all_visited_valid: bool,
}

/// Tabu search from `initial`.
pub fn tabu_search(initial: DayPlan, ctx: &RoutingContext<'_>, cfg: &TabuConfig) -> TabuOutcome {
    let mut tabu = TabuList::new(cfg.tenure);
    let mut best = initial.clone();
    let mut current = initial;
    let mut stagnant = 0;
    let mut out = TabuOutcome {
        best: DayPlan::default(),
        iterations: 0,
        best_history: Vec::new(),
        current_history: Vec::new(),
        max_tabu_len: 0,
        max_tenure_seen: 0,
        all_visited_valid: true,
    };
    let shops = current.served_shops();
    while stagnant < cfg.stagnation_limit && out.iterations < cfg.max_iterations {
        let Some((next, mv)) = best_neighbour(&current, &tabu, best.total_distance(), ctx) else {
            break;
        };
        out.iterations += 1;
        current = next;
        out.all_visited_valid &= current.is_feasible(ctx.vehicle) && current.served_shops() == shops;
        if current.total_distance() < best.total_distance() {
            best = current.clone();
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        tabu.tick();
        tabu.insert(mv);
        out.max_tabu_len = out.max_tabu_len.max(tabu.len());
        out.max_tenure_seen = out
            .max_tenure_seen
            .max(tabu.iter().map(|(_, &t)| t).max().unwrap_or(0));
        out.best_history.push(best.total_distance());
        out.current_history.push(current.total_distance());
    }
    out.best = best;
    out
}

/// Tabu search seeded with the savings construction.
pub fn cwts_solve(shops: &[usize], ctx: &RoutingContext<'_>, cfg: &TabuConfig) -> Result<DayPlan, SolveError> {
    let seed = clarke_wright(shops, ctx)?;
    Ok(tabu_search(seed, ctx, cfg).best)
}
