//! Parallel Clarke & Wright savings construction and CWLS (savings followed
//! by 2-interchange local search).

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::routing::{is_feasible, local_search, DayPlan, LocalSearchConfig, RoutingContext, SolveError};

/// Saving of appending the route starting at `j` to the route ending at `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saving {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Savings of all ordered pairs `i != j`, sorted by decreasing value with
/// ties on (lower `i`, lower `j`).
pub fn savings_list(shops: &[usize], ctx: &RoutingContext<'_>) -> Vec<Saving> {
    let mut out = Vec::with_capacity(shops.len() * shops.len().saturating_sub(1));
    for &i in shops {
        for &j in shops {
            if i != j {
                out.push(Saving {
                    i,
                    j,
                    value: ctx.distances.saving(i, j),
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap_or(Ordering::Equal)
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    out
}

/// Builds a day plan with the parallel savings algorithm. Only strictly
/// positive savings trigger merges.
pub fn clarke_wright(shops: &[usize], ctx: &RoutingContext<'_>) -> Result<DayPlan, SolveError> {
    ctx.check_singletons(shops)?;
    let mut shops = shops.to_vec();
    shops.sort_unstable();

    // route_of[node] indexes `routes`; merged routes leave `None` behind.
    let mut route_of = alloc::vec![usize::MAX; ctx.distances.len()];
    let mut routes: Vec<Option<Vec<usize>>> = Vec::with_capacity(shops.len());
    for (k, &s) in shops.iter().enumerate() {
        route_of[s] = k;
        routes.push(Some(alloc::vec![s]));
    }
    let mut loads: Vec<u32> = shops.iter().map(|&s| ctx.demands[s]).collect();

    for s in savings_list(&shops, ctx) {
        if s.value <= 0.0 {
            break;
        }
        let (ri, rj) = (route_of[s.i], route_of[s.j]);
        if ri == rj {
            continue;
        }
        let (Some(a), Some(b)) = (&routes[ri], &routes[rj]) else {
            continue;
        };
        if a.last() != Some(&s.i) || b.first() != Some(&s.j) {
            continue;
        }
        if loads[ri] + loads[rj] > ctx.vehicle.capacity {
            continue;
        }
        let merged: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
        if !is_feasible(&ctx.route(merged.clone()), ctx.vehicle) {
            continue;
        }
        for &node in &merged {
            route_of[node] = ri;
        }
        loads[ri] += loads[rj];
        routes[ri] = Some(merged);
        routes[rj] = None;
    }

    Ok(DayPlan::new(
        routes.into_iter().flatten().map(|r| ctx.route(r)).collect(),
    ))
}

/// Savings construction followed by one pass of 2-interchange local search.
pub fn cwls_solve<R: Rng + ?Sized>(
    shops: &[usize],
    ctx: &RoutingContext<'_>,
    cfg: &LocalSearchConfig,
    rng: &mut R,
) -> Result<DayPlan, SolveError> {
    let seed = clarke_wright(shops, ctx)?;
    Ok(local_search(&seed, ctx, cfg, rng))
}
