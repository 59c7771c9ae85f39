//! Joint optimisation of delivery patterns and daily vehicle routes for a
//! chain of shops served from one depot.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the
//! experiment runner and the command line live in the `evita` crate.

#![no_std]
extern crate alloc;

pub mod aco;
pub mod evolution;
pub mod instance;
pub mod logistics;
pub mod metrics;
pub mod routing;
pub mod savings;
pub mod seed;
pub mod tabu;

pub use evolution::{evaluate, run_nsga2, run_single_objective, Chromosome, CostReport, GaConfig, Problem, VrpSolver};
pub use instance::{DistanceMatrix, Distribution, Instance, Point, DEPOT};
pub use logistics::{InventoryTable, Pattern, VehicleConfig, Weekday};
pub use routing::{DayPlan, Route, RoutingContext};
