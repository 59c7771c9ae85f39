//! Route representation, feasibility and the 2-interchange local search
//! shared by the savings and ant colony solvers.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::Rng;

use crate::instance::{DistanceMatrix, DEPOT};
use crate::logistics::VehicleConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// The shop cannot be served even by a dedicated vehicle.
    InfeasibleShop { shop: usize },
    /// A shop index that is not a shop node of the distance matrix.
    UnknownShop { shop: usize },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::InfeasibleShop { shop } => {
                write!(f, "shop {shop} cannot be served by a single vehicle route")
            }
            SolveError::UnknownShop { shop } => write!(f, "shop {shop} is not part of the instance"),
        }
    }
}

impl core::error::Error for SolveError {}

/// Everything a VRP solver needs to know about one delivery day.
///
/// `demands` is indexed by node; entry `DEPOT` is ignored.
#[derive(Debug, Clone, Copy)]
pub struct RoutingContext<'a> {
    pub distances: &'a DistanceMatrix,
    pub demands: &'a [u32],
    pub vehicle: &'a VehicleConfig,
}

impl<'a> RoutingContext<'a> {
    pub fn new(distances: &'a DistanceMatrix, demands: &'a [u32], vehicle: &'a VehicleConfig) -> Self {
        Self {
            distances,
            demands,
            vehicle,
        }
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances.get(i, j)
    }

    /// Driving time in hours.
    #[inline]
    pub fn travel_time(&self, i: usize, j: usize) -> f64 {
        self.distance(i, j) / self.vehicle.speed
    }

    pub fn route(&self, shops: Vec<usize>) -> Route {
        route_metrics(shops, self.demands, self.distances, self.vehicle)
    }

    /// Checks that every shop exists and fits a dedicated route.
    pub fn check_singletons(&self, shops: &[usize]) -> Result<(), SolveError> {
        for &shop in shops {
            if shop == DEPOT || shop >= self.distances.len() || shop >= self.demands.len() {
                return Err(SolveError::UnknownShop { shop });
            }
            if !is_feasible(&self.route(alloc::vec![shop]), self.vehicle) {
                return Err(SolveError::InfeasibleShop { shop });
            }
        }
        Ok(())
    }
}

/// A depot-anchored tour. The depot is implicit at both ends of `shops`.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub shops: Vec<usize>,
    /// Roll containers.
    pub load: u32,
    /// km.
    pub distance: f64,
    /// Hours, driving plus unloading.
    pub duration: f64,
}

impl Route {
    /// Node sequence including the depot at both ends.
    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        core::iter::once(DEPOT)
            .chain(self.shops.iter().copied())
            .chain(core::iter::once(DEPOT))
    }

    /// Consecutive `(from, to)` pairs of the tour, depot legs included.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes().zip(self.nodes().skip(1))
    }

    pub fn len(&self) -> usize {
        self.shops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shops.is_empty()
    }
}

/// Computes load, length and duration of the tour depot → shops → depot.
pub fn route_metrics(
    shops: Vec<usize>,
    demands: &[u32],
    distances: &DistanceMatrix,
    vehicle: &VehicleConfig,
) -> Route {
    let load = shops.iter().map(|&s| demands[s]).sum();
    let mut distance = 0.0;
    let mut prev = DEPOT;
    for &s in &shops {
        distance += distances.get(prev, s);
        prev = s;
    }
    if !shops.is_empty() {
        distance += distances.get(prev, DEPOT);
    }
    let duration = distance / vehicle.speed + shops.len() as f64 * vehicle.unload_time;
    Route {
        shops,
        load,
        distance,
        duration,
    }
}

pub fn is_feasible(route: &Route, vehicle: &VehicleConfig) -> bool {
    route.load <= vehicle.capacity && route.duration <= vehicle.max_work_time
}

/// Routes of one day.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DayPlan {
    routes: Vec<Route>,
    total_distance: f64,
}

impl DayPlan {
    pub fn new(routes: Vec<Route>) -> Self {
        let routes: Vec<Route> = routes.into_iter().filter(|r| !r.is_empty()).collect();
        let total_distance = routes.iter().map(|r| r.distance).sum();
        Self {
            routes,
            total_distance,
        }
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn into_routes(self) -> Vec<Route> {
        self.routes
    }

    /// km.
    pub fn total_distance(&self) -> f64 {
        self.total_distance
    }

    /// Served shops, sorted.
    pub fn served_shops(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.routes.iter().flat_map(|r| r.shops.iter().copied()).collect();
        v.sort_unstable();
        v
    }

    pub fn is_feasible(&self, vehicle: &VehicleConfig) -> bool {
        self.routes.iter().all(|r| is_feasible(r, vehicle))
    }

    /// True when every shop in `shops` appears exactly once and nothing else
    /// is served.
    pub fn covers_exactly(&self, shops: &[usize]) -> bool {
        let mut expected = shops.to_vec();
        expected.sort_unstable();
        self.served_shops() == expected
    }

    /// Undirected arcs `(min, max)` of the plan, deduplicated and sorted.
    pub fn undirected_arcs(&self) -> Vec<(usize, usize)> {
        let mut arcs: Vec<(usize, usize)> = self
            .routes
            .iter()
            .flat_map(|r| r.arcs())
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        arcs.sort_unstable();
        arcs.dedup();
        arcs
    }
}

/// Splits an infeasible tour once, at the first shop whose inclusion makes
/// the prefix tour infeasible. Returns `None` if either part is still
/// infeasible.
pub fn repair(shops: Vec<usize>, ctx: &RoutingContext<'_>) -> Option<Vec<Route>> {
    let whole = ctx.route(shops);
    if is_feasible(&whole, ctx.vehicle) {
        return Some(alloc::vec![whole]);
    }
    let shops = whole.shops;
    let cut = (1..=shops.len())
        .find(|&k| !is_feasible(&ctx.route(shops[..k].to_vec()), ctx.vehicle))?
        - 1;
    if cut == 0 {
        return None;
    }
    let head = ctx.route(shops[..cut].to_vec());
    let tail = ctx.route(shops[cut..].to_vec());
    if is_feasible(&tail, ctx.vehicle) {
        Some(alloc::vec![head, tail])
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalSearchConfig {
    /// Minimum number of random intra-route swaps tried per route.
    pub neighbours: usize,
    /// Try every pair of shops instead of random samples.
    pub exhaustive: bool,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            neighbours: 10,
            exhaustive: false,
        }
    }
}

/// Position of a shop inside a plan: (route index, position in route).
type Slot = (usize, usize);

/// 2-interchange improvement of a feasible plan.
///
/// Every candidate is one swap applied to the input plan (intra-route
/// swaps first, then one swap per pair of routes); routes broken by the
/// swap are repaired by inserting a depot visit. The cheapest candidate
/// strictly better than the input is returned, otherwise the input itself.
pub fn local_search<R: Rng + ?Sized>(
    plan: &DayPlan,
    ctx: &RoutingContext<'_>,
    cfg: &LocalSearchConfig,
    rng: &mut R,
) -> DayPlan {
    let routes = plan.routes();
    let mut best_cost = plan.total_distance();
    let mut best: Option<Vec<Route>> = None;

    let total: f64 = routes.iter().map(|r| r.distance).sum();
    let mut scratch = [Vec::new(), Vec::new()];

    let mut consider = |a: Slot, b: Slot, best_cost: &mut f64| {
        match swap_cost(routes, total, a, b, ctx, &mut scratch) {
            Some(cost) if cost < *best_cost => {
                let (cost, replaced) = evaluate_swap(routes, a, b, ctx).expect("repair succeeded above");
                *best_cost = cost;
                best = Some(assemble(routes, a.0, b.0, replaced));
            }
            _ => {}
        }
    };

    for (r, route) in routes.iter().enumerate() {
        let n = route.len();
        if n < 2 {
            continue;
        }
        if cfg.exhaustive {
            for i in 0..n {
                for j in (i + 1)..n {
                    consider((r, i), (r, j), &mut best_cost);
                }
            }
        } else {
            for _ in 0..n.max(cfg.neighbours) {
                let pair = index::sample(rng, n, 2);
                consider((r, pair.index(0)), (r, pair.index(1)), &mut best_cost);
            }
        }
    }

    for r1 in 0..routes.len() {
        for r2 in (r1 + 1)..routes.len() {
            if cfg.exhaustive {
                for i in 0..routes[r1].len() {
                    for j in 0..routes[r2].len() {
                        consider((r1, i), (r2, j), &mut best_cost);
                    }
                }
            } else {
                let i = rng.gen_range(0..routes[r1].len());
                let j = rng.gen_range(0..routes[r2].len());
                consider((r1, i), (r2, j), &mut best_cost);
            }
        }
    }

    match best {
        Some(routes) => DayPlan::new(routes),
        None => plan.clone(),
    }
}

/// Distances of the routes that [`repair`] would return for `shops`, in
/// order, without building them. Sums run in the same order as in
/// [`route_metrics`], so the values are identical.
fn repair_distances(shops: &[usize], ctx: &RoutingContext<'_>) -> Option<([f64; 2], usize)> {
    let vc = ctx.vehicle;
    let fits = |distance: f64, stops: usize, load: u32| {
        load <= vc.capacity && distance / vc.speed + stops as f64 * vc.unload_time <= vc.max_work_time
    };
    let tour = |part: &[usize]| {
        let mut d = 0.0;
        let mut prev = DEPOT;
        for &s in part {
            d += ctx.distance(prev, s);
            prev = s;
        }
        if !part.is_empty() {
            d += ctx.distance(prev, DEPOT);
        }
        d
    };
    let load: u32 = shops.iter().map(|&s| ctx.demands[s]).sum();
    let whole = tour(shops);
    if fits(whole, shops.len(), load) {
        return Some(([whole, 0.0], 1));
    }
    let mut acc = 0.0;
    let mut prev = DEPOT;
    let mut prefix_load = 0;
    let mut head = 0.0;
    let mut cut = shops.len();
    for (k, &s) in shops.iter().enumerate() {
        acc += ctx.distance(prev, s);
        prev = s;
        prefix_load += ctx.demands[s];
        let closed = acc + ctx.distance(s, DEPOT);
        if !fits(closed, k + 1, prefix_load) {
            cut = k;
            break;
        }
        head = closed;
    }
    if cut == 0 || cut == shops.len() {
        return None;
    }
    let rest = &shops[cut..];
    let tail = tour(rest);
    let tail_load: u32 = rest.iter().map(|&s| ctx.demands[s]).sum();
    fits(tail, rest.len(), tail_load).then_some(([head, tail], 2))
}

/// Plan cost after swapping the shops at `a` and `b` and repairing the
/// affected routes; `None` if a repair fails. `scratch` holds the
/// modified routes.
fn swap_cost(
    routes: &[Route],
    total: f64,
    a: Slot,
    b: Slot,
    ctx: &RoutingContext<'_>,
    scratch: &mut [Vec<usize>; 2],
) -> Option<f64> {
    let [first, second] = scratch;
    first.clear();
    first.extend_from_slice(&routes[a.0].shops);
    if a.0 == b.0 {
        first.swap(a.1, b.1);
        let (d, n) = repair_distances(first, ctx)?;
        let added = d[..n].iter().fold(0.0, |acc, x| acc + x);
        Some(total - routes[a.0].distance + added)
    } else {
        second.clear();
        second.extend_from_slice(&routes[b.0].shops);
        core::mem::swap(&mut first[a.1], &mut second[b.1]);
        let (d1, n1) = repair_distances(first, ctx)?;
        let (d2, n2) = repair_distances(second, ctx)?;
        let added = d1[..n1].iter().chain(&d2[..n2]).fold(0.0, |acc, x| acc + x);
        Some(total - routes[a.0].distance - routes[b.0].distance + added)
    }
}

/// Swaps the shops at `a` and `b`, repairs affected routes and returns the
/// resulting plan cost plus the replacement routes.
fn evaluate_swap(
    routes: &[Route],
    a: Slot,
    b: Slot,
    ctx: &RoutingContext<'_>,
) -> Option<(f64, Vec<Route>)> {
    let total: f64 = routes.iter().map(|r| r.distance).sum();
    if a.0 == b.0 {
        let mut shops = routes[a.0].shops.clone();
        shops.swap(a.1, b.1);
        let replaced = repair(shops, ctx)?;
        let cost = total - routes[a.0].distance + replaced.iter().map(|r| r.distance).sum::<f64>();
        Some((cost, replaced))
    } else {
        let mut first = routes[a.0].shops.clone();
        let mut second = routes[b.0].shops.clone();
        core::mem::swap(&mut first[a.1], &mut second[b.1]);
        let mut replaced = repair(first, ctx)?;
        replaced.extend(repair(second, ctx)?);
        let cost = total - routes[a.0].distance - routes[b.0].distance
            + replaced.iter().map(|r| r.distance).sum::<f64>();
        Some((cost, replaced))
    }
}

/// Rebuilds a route list with routes `r1` and `r2` replaced by `replaced`,
/// which takes the place of `r1`.
fn assemble(routes: &[Route], r1: usize, r2: usize, replaced: Vec<Route>) -> Vec<Route> {
    let mut out = Vec::with_capacity(routes.len() + 2);
    let mut replaced = Some(replaced);
    for (k, r) in routes.iter().enumerate() {
        if k == r1 {
            out.extend(replaced.take().into_iter().flatten());
        } else if k != r2 {
            out.push(r.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Point;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix(points: &[(f64, f64)]) -> DistanceMatrix {
        let pts: Vec<Point> = points.iter().map(|&(x, y)| Point::new(x, y)).collect();
        DistanceMatrix::euclidean(&pts)
    }

    #[test]
    fn single_shop_metrics() {
        let dm = matrix(&[(0.0, 0.0), (30.0, 0.0)]);
        let vc = VehicleConfig::default();
        let r = route_metrics(vec![1], &[0, 2], &dm, &vc);
        assert_eq!(r.distance, 60.0);
        assert_eq!(r.duration, 1.25);
        assert_eq!(r.load, 2);
    }

    #[test]
    fn empty_route_is_zero() {
        let dm = matrix(&[(0.0, 0.0), (30.0, 0.0)]);
        let r = route_metrics(vec![], &[0, 2], &dm, &VehicleConfig::default());
        assert_eq!((r.distance, r.duration, r.load), (0.0, 0.0, 0));
    }

    #[test]
    fn square_route_by_hand() {
        // Depot at origin, shops on the corners of a 10 km square.
        let dm = matrix(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
        let vc = VehicleConfig::default();
        let r = route_metrics(vec![1, 2, 3], &[0, 1, 2, 3], &dm, &vc);
        assert_eq!(r.distance, 40.0);
        assert_eq!(r.load, 6);
        assert!((r.duration - (40.0 / 60.0 + 0.75)).abs() < 1e-12);
        // Crossing order 1 -> 3 -> 2.
        let r = route_metrics(vec![1, 3, 2], &[0, 1, 2, 3], &dm, &vc);
        let diag = 200f64.sqrt();
        assert!((r.distance - (20.0 + 2.0 * diag)).abs() < 1e-12);
    }

    #[test]
    fn feasibility_bounds() {
        let vc = VehicleConfig::default();
        let over = Route {
            shops: vec![1],
            load: 13,
            distance: 1.0,
            duration: 0.5,
        };
        assert!(!is_feasible(&over, &vc));

        let dm = matrix(&[(0.0, 0.0), (15.0, 0.0), (15.0, 0.0)]);
        let r = route_metrics(vec![1, 2], &[0, 1, 1], &dm, &vc);
        assert_eq!(r.distance, 30.0);
        let dm = matrix(&[(0.0, 0.0), (30.0, 0.0), (0.0, 0.0)]);
        let r = route_metrics(vec![1, 2], &[0, 1, 1], &dm, &vc);
        assert_eq!(r.distance, 60.0);
        assert_eq!(r.duration, 1.5);
        assert!(is_feasible(&r, &vc));

        // 33 coincident shops: 8.25 h of unloading alone.
        let pts = vec![(0.0, 0.0); 34];
        let dm = matrix(&pts);
        let demands = vec![0u32; 34];
        let r = route_metrics((1..=33).collect(), &demands, &dm, &vc);
        assert_eq!(r.duration, 8.25);
        assert!(!is_feasible(&r, &vc));
    }

    #[test]
    fn repair_splits_at_first_violation() {
        let dm = matrix(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let vc = VehicleConfig::default();
        let demands = [0, 5, 5, 5];
        let ctx = RoutingContext::new(&dm, &demands, &vc);
        let parts = repair(vec![1, 2, 3], &ctx).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].shops, vec![1, 2]);
        assert_eq!(parts[1].shops, vec![3]);

        let demands = [0, 5, 5, 13];
        let ctx = RoutingContext::new(&dm, &demands, &vc);
        assert!(repair(vec![3, 1], &ctx).is_none());
    }

    #[test]
    fn local_search_fixes_a_crossing() {
        let dm = matrix(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (5.0, 12.0)]);
        let vc = VehicleConfig::default();
        let demands = [0, 1, 1, 1, 1];
        let ctx = RoutingContext::new(&dm, &demands, &vc);
        let plan = DayPlan::new(vec![ctx.route(vec![1, 3, 2, 4])]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = local_search(&plan, &ctx, &LocalSearchConfig::default(), &mut rng);
        assert!(out.total_distance() < plan.total_distance());
        assert!(out.covers_exactly(&[1, 2, 3, 4]));
    }

    #[test]
    fn local_search_fixed_point() {
        let dm = matrix(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
        let vc = VehicleConfig::default();
        let demands = [0, 1, 1, 1];
        let ctx = RoutingContext::new(&dm, &demands, &vc);
        let plan = DayPlan::new(vec![ctx.route(vec![1, 2, 3])]);
        let cfg = LocalSearchConfig {
            neighbours: 10,
            exhaustive: true,
        };
        let out = local_search(&plan, &ctx, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out, plan);
    }

    #[test]
    fn plan_arcs_are_undirected_and_deduplicated() {
        let dm = matrix(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let vc = VehicleConfig::default();
        let demands = [0, 1, 1];
        let ctx = RoutingContext::new(&dm, &demands, &vc);
        let plan = DayPlan::new(vec![ctx.route(vec![2]), ctx.route(vec![1])]);
        assert_eq!(plan.undirected_arcs(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn fast_swap_cost_matches_rebuilt_routes() {
        let dm = matrix(&[
            (0.0, 0.0),
            (30.0, 5.0),
            (-20.0, 50.0),
            (70.0, -40.0),
            (10.0, 10.0),
            (-60.0, -20.0),
            (45.0, 45.0),
            (-35.0, 15.0),
        ]);
        // Tight limits so that many swaps need a repair or fail.
        let vc = VehicleConfig {
            capacity: 7,
            max_work_time: 5.2,
            ..VehicleConfig::default()
        };
        let demands = [0, 3, 2, 4, 1, 3, 2, 2];
        let ctx = RoutingContext::new(&dm, &demands, &vc);
        let plan = DayPlan::new(vec![ctx.route(vec![1, 4, 6]), ctx.route(vec![2, 7]), ctx.route(vec![3, 5])]);
        assert!(plan.is_feasible(&vc));
        let routes = plan.routes();
        let total = plan.total_distance();
        let mut scratch = [Vec::new(), Vec::new()];
        let slots: Vec<Slot> = routes
            .iter()
            .enumerate()
            .flat_map(|(r, route)| (0..route.len()).map(move |k| (r, k)))
            .collect();
        let mut repaired = 0;
        for (x, &a) in slots.iter().enumerate() {
            for &b in &slots[x + 1..] {
                let slow = evaluate_swap(routes, a, b, &ctx).map(|(c, r)| (c, r.len()));
                let fast = swap_cost(routes, total, a, b, &ctx, &mut scratch);
                assert_eq!(slow.map(|s| s.0), fast, "{a:?} {b:?}");
                if slow.is_some_and(|(_, n)| n > if a.0 == b.0 { 1 } else { 2 }) {
                    repaired += 1;
                }
            }
        }
        assert!(repaired > 0);
    }
}
