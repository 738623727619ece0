//! Solver library for the road-network capacitated vehicle routing problem
//! with time windows and truck platooning.
//!
//! The crate builds the exact MILP formulation for export to external
//! solvers, runs a three-stage route-then-schedule heuristic (time-window
//! grouping + knapsack assignment, insertion-based route construction,
//! platoon scheduling) with link-cost feedback between iterations, and
//! validates and evaluates solutions from first principles.

pub mod cost;
pub mod error;
pub mod eval;
pub mod generate;
pub mod grouping;
pub mod instance;
pub mod instances;
pub mod model;
pub mod mps;
pub mod network;
pub mod orchestrator;
pub mod routing;
pub mod scheduling;
pub mod solution;

pub use error::{Error, Result};
pub use instance::{CustomerDemand, InstanceFile, Parameters, ProblemInstance};
pub use network::{Arc, DistMatrix, NodeId, RoadNetwork, DEPOT};
pub use orchestrator::{solve, platooning_benefit, SolveConfig};
pub use solution::{RoutePlan, Schedule, Solution};
