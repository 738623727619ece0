//! Solution data model: per-truck routes, schedules and the JSON solution
//! file format.

use crate::cost::{CostBreakdown, Role};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::network::NodeId;
use serde::{Deserialize, Serialize};

/// One truck's route: the customer visiting sequence expanded to a network
/// arc walk, with the remaining load at the tail of every arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub truck: usize,
    /// customers in service order (depot excluded)
    pub customers: Vec<NodeId>,
    /// contiguous arc walk starting and ending at the depot
    pub arc_path: Vec<(NodeId, NodeId)>,
    /// load at the tail of each arc of `arc_path`
    pub load_profile: Vec<f64>,
}

impl RoutePlan {
    /// Node sequence visited by the walk, starting and ending at the depot.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut nodes = Vec::with_capacity(self.arc_path.len() + 1);
        if let Some(&(tail, _)) = self.arc_path.first() {
            nodes.push(tail);
        }
        for &(_, head) in &self.arc_path {
            nodes.push(head);
        }
        nodes
    }

    /// Positions (index into `nodes()`) where each customer is served, in
    /// service order: the first visit of each customer along the walk.
    pub fn service_positions(&self) -> Vec<(NodeId, usize)> {
        let nodes = self.nodes();
        let mut out = Vec::new();
        let mut cursor = 0usize;
        for &c in &self.customers {
            let pos = nodes[cursor..]
                .iter()
                .position(|&n| n == c)
                .map(|p| p + cursor);
            match pos {
                Some(p) => {
                    out.push((c, p));
                    cursor = p;
                }
                None => out.push((c, usize::MAX)),
            }
        }
        out
    }
}

/// Arrival and wait time at one visited node position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeTiming {
    pub node: NodeId,
    pub arrival: f64,
    pub wait: f64,
}

impl NodeTiming {
    pub fn departure(&self) -> f64 {
        self.arrival + self.wait
    }
}

/// Per-truck timings (one entry per node of the walk, including both depot
/// endpoints) and per-arc platoon roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruckSchedule {
    pub truck: usize,
    pub timings: Vec<NodeTiming>,
    pub roles: Vec<Role>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub trucks: Vec<TruckSchedule>,
}

impl Schedule {
    /// Platoon cardinality `|P|` for every (truck, arc position): 1 when the
    /// truck rides alone, otherwise the member count of its platoon.
    pub fn platoon_sizes(&self, routes: &[RoutePlan]) -> Vec<Vec<usize>> {
        // departure-time keyed membership: trucks traversing the same arc in
        // a platoon share the leader and the departure instant
        let mut sizes: Vec<Vec<usize>> = routes
            .iter()
            .map(|r| vec![1usize; r.arc_path.len()])
            .collect();
        for (ti, ts) in self.trucks.iter().enumerate() {
            for (ai, role) in ts.roles.iter().enumerate() {
                if let Role::FollowerOf(leader) = role {
                    let arc = routes[ti].arc_path[ai];
                    // count members of this platoon: leader + followers of it
                    // on the same arc with the same departure
                    let dep = ts.timings[ai].departure();
                    let mut members = 0usize;
                    for (tj, other) in self.trucks.iter().enumerate() {
                        for (aj, r2) in other.roles.iter().enumerate() {
                            if routes[tj].arc_path[aj] == arc
                                && (other.timings[aj].departure() - dep).abs() < 1e-6
                            {
                                let in_platoon = match r2 {
                                    Role::Leader => tj == *leader,
                                    Role::FollowerOf(l2) => l2 == leader,
                                    Role::Alone => false,
                                };
                                if in_platoon {
                                    members += 1;
                                }
                            }
                        }
                    }
                    sizes[ti][ai] = members;
                    // the leader reports the same cardinality
                    if let Some((aj, _)) = routes[*leader]
                        .arc_path
                        .iter()
                        .enumerate()
                        .find(|&(aj, &a)| {
                            a == arc
                                && (self.trucks[*leader].timings[aj].departure() - dep).abs()
                                    < 1e-6
                        })
                    {
                        sizes[*leader][aj] = members;
                    }
                }
            }
        }
        sizes
    }
}

/// Extract per-truck, per-arc platoon cardinalities `|P|`.
pub fn extract_platoon_sets(schedule: &Schedule, routes: &[RoutePlan]) -> Vec<Vec<usize>> {
    schedule.platoon_sizes(routes)
}

/// A complete solution: routes, schedule and evaluated cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<RoutePlan>,
    pub schedule: Schedule,
    pub cost: CostBreakdown,
    pub seed: u64,
    pub iterations: usize,
    pub wall_time_s: f64,
    #[serde(default)]
    pub scheduler_fallbacks: usize,
}

impl Solution {
    pub fn dispatched_trucks(&self) -> usize {
        self.routes.iter().filter(|r| !r.arc_path.is_empty()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("solution JSON: {e}")))
    }

    /// Structural sanity used when reading externally produced files: roles
    /// reference existing trucks, follower links are not self-referential,
    /// and vector lengths line up.
    pub fn check_shape(&self, instance: &ProblemInstance) -> Result<()> {
        for (ti, route) in self.routes.iter().enumerate() {
            let ts = self
                .schedule
                .trucks
                .get(ti)
                .ok_or_else(|| Error::MalformedSolution(format!("no schedule for truck {ti}")))?;
            if ts.roles.len() != route.arc_path.len() {
                return Err(Error::MalformedSolution(format!(
                    "truck {ti}: {} roles for {} arcs",
                    ts.roles.len(),
                    route.arc_path.len()
                )));
            }
            if !route.arc_path.is_empty() && ts.timings.len() != route.arc_path.len() + 1 {
                return Err(Error::MalformedSolution(format!(
                    "truck {ti}: {} timings for {} nodes",
                    ts.timings.len(),
                    route.arc_path.len() + 1
                )));
            }
            if route.load_profile.len() != route.arc_path.len() {
                return Err(Error::MalformedSolution(format!(
                    "truck {ti}: load profile length mismatch"
                )));
            }
            for (ai, role) in ts.roles.iter().enumerate() {
                if let Role::FollowerOf(leader) = role {
                    if *leader == ti {
                        return Err(Error::MalformedSolution(format!(
                            "truck {ti} follows itself on arc {ai}"
                        )));
                    }
                    if *leader >= self.routes.len() {
                        return Err(Error::MalformedSolution(format!(
                            "truck {ti} follows unknown truck {leader}"
                        )));
                    }
                }
            }
            for arc in &route.arc_path {
                if instance.network.arc_id(arc.0, arc.1).is_none() {
                    return Err(Error::MalformedSolution(format!(
                        "truck {ti} uses arc ({}, {}) which is not in the network",
                        arc.0, arc.1
                    )));
                }
            }
        }
        Ok(())
    }
}
