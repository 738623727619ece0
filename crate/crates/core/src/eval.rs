//! Solution evaluation and first-principles feasibility checking.

use crate::cost::{arc_energy, CostBreakdown, LedgerEntry, Role};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::network::{NodeId, DEPOT};
use crate::solution::{RoutePlan, Schedule, Solution};
use std::collections::BTreeMap;
use std::fmt;

/// One violated constraint family, with enough indices to locate it.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// the arc walk is not a contiguous depot-to-depot closed walk
    FlowConservation { truck: usize, detail: String },
    /// a customer is served by several trucks or several times
    MultipleService { node: NodeId },
    UnservedCustomer { node: NodeId },
    /// initial load differs from the sum of assigned demands
    InitialLoadMismatch { truck: usize, expected: f64, got: f64 },
    CapacityExceeded { truck: usize, load: f64 },
    /// the load does not decrement by the served demand along the walk
    LoadStep { truck: usize, arc_index: usize },
    /// leader and follower at once, or follower of a non-leader
    RoleExclusivity { truck: usize, arc_index: usize, detail: String },
    PlatoonSize { arc: (NodeId, NodeId), size: usize, cap: usize },
    /// platoon members do not share the departure time at the arc tail
    Desynchronized { arc: (NodeId, NodeId), trucks: (usize, usize) },
    /// arrival times are inconsistent with departure + travel time
    TimePropagation { truck: usize, position: usize },
    WindowMissed { truck: usize, node: NodeId, detail: String },
    NegativeWait { truck: usize, position: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FlowConservation { truck, detail } => {
                write!(f, "truck {truck}: broken walk ({detail})")
            }
            Violation::MultipleService { node } => {
                write!(f, "customer {node} served more than once")
            }
            Violation::UnservedCustomer { node } => write!(f, "customer {node} never served"),
            Violation::InitialLoadMismatch { truck, expected, got } => write!(
                f,
                "truck {truck}: initial load {got} != assigned demand {expected}"
            ),
            Violation::CapacityExceeded { truck, load } => {
                write!(f, "truck {truck}: load {load} exceeds capacity")
            }
            Violation::LoadStep { truck, arc_index } => {
                write!(f, "truck {truck}: load step at arc {arc_index} is wrong")
            }
            Violation::RoleExclusivity { truck, arc_index, detail } => {
                write!(f, "truck {truck}: role conflict at arc {arc_index} ({detail})")
            }
            Violation::PlatoonSize { arc, size, cap } => {
                write!(f, "platoon of {size} > {cap} on arc {arc:?}")
            }
            Violation::Desynchronized { arc, trucks } => write!(
                f,
                "trucks {} and {} platoon on {arc:?} with different departures",
                trucks.0, trucks.1
            ),
            Violation::TimePropagation { truck, position } => {
                write!(f, "truck {truck}: arrival at position {position} ignores travel time")
            }
            Violation::WindowMissed { truck, node, detail } => {
                write!(f, "truck {truck} misses window at {node}: {detail}")
            }
            Violation::NegativeWait { truck, position } => {
                write!(f, "truck {truck}: negative wait at position {position}")
            }
        }
    }
}

/// Recomputes the cost of a structurally complete solution. Pure function of
/// the routes and schedule; fails only on malformed platoon references.
pub fn evaluate_solution(
    instance: &ProblemInstance,
    routes: &[RoutePlan],
    schedule: &Schedule,
) -> Result<CostBreakdown> {
    let p = &instance.params;
    let mut ledger = Vec::new();
    let mut dispatched = 0usize;
    for (ti, route) in routes.iter().enumerate() {
        if route.arc_path.is_empty() {
            continue;
        }
        dispatched += 1;
        let ts = schedule
            .trucks
            .get(ti)
            .ok_or_else(|| Error::MalformedSolution(format!("no schedule for truck {ti}")))?;
        if ts.roles.len() != route.arc_path.len() {
            return Err(Error::MalformedSolution(format!(
                "truck {ti}: role count does not match arc count"
            )));
        }
        for (ai, &(tail, head)) in route.arc_path.iter().enumerate() {
            let t = instance.network.travel_time(tail, head).ok_or_else(|| {
                Error::MalformedSolution(format!("arc ({tail}, {head}) not in network"))
            })?;
            let role = ts.roles[ai];
            if let Role::FollowerOf(leader) = role {
                if leader == ti {
                    return Err(Error::MalformedSolution(format!(
                        "truck {ti} leads and follows on arc ({tail}, {head})"
                    )));
                }
                if leader >= routes.len() {
                    return Err(Error::MalformedSolution(format!(
                        "truck {ti} follows unknown truck {leader}"
                    )));
                }
            }
            let load = route.load_profile[ai];
            ledger.push(LedgerEntry {
                truck: ti,
                arc: (tail, head),
                role,
                load,
                cost: arc_energy(t, load, role, p),
            });
        }
    }
    Ok(CostBreakdown::new(p.c1 * dispatched as f64, ledger, p.c2))
}

/// Checks every constraint family against the instance from first
/// principles. An empty result means the solution is feasible. Violations
/// are data, not errors.
///
/// Note on revisits: the exact model would also cap node visits at one per
/// truck; shortest-path expansion may legitimately revisit nodes across
/// legs, so revisits are reported separately by [`route_revisits`] instead
/// of here.
pub fn check_feasibility(
    instance: &ProblemInstance,
    routes: &[RoutePlan],
    schedule: &Schedule,
) -> Vec<Violation> {
    let mut v = Vec::new();
    let p = &instance.params;

    // --- route structure, service and loads
    let mut served: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (ti, route) in routes.iter().enumerate() {
        if route.arc_path.is_empty() {
            if !route.customers.is_empty() {
                v.push(Violation::FlowConservation {
                    truck: ti,
                    detail: "customers assigned but no route".into(),
                });
            }
            continue;
        }
        let first = route.arc_path.first().unwrap();
        let last = route.arc_path.last().unwrap();
        if first.0 != DEPOT {
            v.push(Violation::FlowConservation {
                truck: ti,
                detail: format!("starts at node {}", first.0),
            });
        }
        if last.1 != DEPOT {
            v.push(Violation::FlowConservation {
                truck: ti,
                detail: format!("ends at node {}", last.1),
            });
        }
        for w in route.arc_path.windows(2) {
            if w[0].1 != w[1].0 {
                v.push(Violation::FlowConservation {
                    truck: ti,
                    detail: format!("gap between {:?} and {:?}", w[0], w[1]),
                });
            }
        }
        for &(tail, head) in &route.arc_path {
            if instance.network.arc_id(tail, head).is_none() {
                v.push(Violation::FlowConservation {
                    truck: ti,
                    detail: format!("({tail}, {head}) is not a network arc"),
                });
            }
        }
        // customers of this truck appear along the walk in sequence order
        let positions = route.service_positions();
        for (node, pos) in &positions {
            if *pos == usize::MAX {
                v.push(Violation::FlowConservation {
                    truck: ti,
                    detail: format!("assigned customer {node} not on the walk"),
                });
            }
            *served.entry(*node).or_insert(0) += 1;
        }
        // initial load and decrements
        let expected: f64 = route
            .customers
            .iter()
            .filter_map(|c| instance.demand_of(*c).map(|d| d.q))
            .sum();
        match route.load_profile.first() {
            Some(&first_load) => {
                if (first_load - expected).abs() > 1e-6 {
                    v.push(Violation::InitialLoadMismatch {
                        truck: ti,
                        expected,
                        got: first_load,
                    });
                }
                if first_load > p.capacity + 1e-6 {
                    v.push(Violation::CapacityExceeded {
                        truck: ti,
                        load: first_load,
                    });
                }
            }
            None => v.push(Violation::FlowConservation {
                truck: ti,
                detail: "empty load profile".into(),
            }),
        }
        // the load drops by q exactly at the first visit of each customer
        let mut remaining = expected;
        let mut to_serve: Vec<NodeId> = route.customers.clone();
        for (ai, &(tail, _)) in route.arc_path.iter().enumerate() {
            if !to_serve.is_empty() && to_serve[0] == tail {
                let q = instance.demand_of(to_serve[0]).map(|d| d.q).unwrap_or(0.0);
                remaining -= q;
                to_serve.remove(0);
            }
            if (route.load_profile[ai] - remaining).abs() > 1e-6 {
                v.push(Violation::LoadStep { truck: ti, arc_index: ai });
                remaining = route.load_profile[ai]; // resync to avoid cascades
            }
        }
    }
    for c in &instance.customers {
        match served.get(&c.node) {
            None => v.push(Violation::UnservedCustomer { node: c.node }),
            Some(1) => {}
            Some(_) => v.push(Violation::MultipleService { node: c.node }),
        }
    }

    // --- schedule: propagation, windows, platoon consistency
    for (ti, route) in routes.iter().enumerate() {
        let Some(ts) = schedule.trucks.get(ti) else {
            if !route.arc_path.is_empty() {
                v.push(Violation::FlowConservation {
                    truck: ti,
                    detail: "no schedule".into(),
                });
            }
            continue;
        };
        if route.arc_path.is_empty() {
            continue;
        }
        if ts.timings.len() != route.arc_path.len() + 1 {
            v.push(Violation::FlowConservation {
                truck: ti,
                detail: "timing count does not match walk length".into(),
            });
            continue;
        }
        for (pos, timing) in ts.timings.iter().enumerate() {
            if timing.wait < -1e-9 {
                v.push(Violation::NegativeWait { truck: ti, position: pos });
            }
            if pos > 0 {
                let (tail, head) = route.arc_path[pos - 1];
                let t = instance.network.travel_time(tail, head).unwrap_or(0.0);
                let expect = ts.timings[pos - 1].departure() + t;
                if (timing.arrival - expect).abs() > 1e-6 {
                    v.push(Violation::TimePropagation { truck: ti, position: pos });
                }
            }
        }
        // service windows at the first visit of each assigned customer
        for (node, pos) in route.service_positions() {
            if pos == usize::MAX {
                continue;
            }
            let Some(c) = instance.demand_of(node) else { continue };
            let timing = &ts.timings[pos];
            if timing.arrival < c.t_ea - 1e-6 {
                v.push(Violation::WindowMissed {
                    truck: ti,
                    node,
                    detail: format!("arrives {} before {}", timing.arrival, c.t_ea),
                });
            }
            if timing.departure() > c.t_ld + 1e-6 {
                v.push(Violation::WindowMissed {
                    truck: ti,
                    node,
                    detail: format!("departs {} after {}", timing.departure(), c.t_ld),
                });
            }
        }
    }

    // platoon structure per arc: leaders exist, sizes respect the cap,
    // members are synchronized
    #[derive(Default)]
    struct ArcGroup {
        leaders: Vec<(usize, usize, f64)>,
        followers: Vec<(usize, usize, usize, f64)>, // truck, pos, leader, dep
    }
    let mut groups: BTreeMap<(NodeId, NodeId), ArcGroup> = BTreeMap::new();
    for (ti, route) in routes.iter().enumerate() {
        let Some(ts) = schedule.trucks.get(ti) else { continue };
        for (ai, role) in ts.roles.iter().enumerate() {
            if ai >= route.arc_path.len() || ts.timings.len() <= ai {
                continue;
            }
            let arc = route.arc_path[ai];
            let dep = ts.timings[ai].departure();
            match role {
                Role::Alone => {}
                Role::Leader => groups.entry(arc).or_default().leaders.push((ti, ai, dep)),
                Role::FollowerOf(l) => {
                    if *l == ti {
                        v.push(Violation::RoleExclusivity {
                            truck: ti,
                            arc_index: ai,
                            detail: "follows itself".into(),
                        });
                    } else {
                        groups
                            .entry(arc)
                            .or_default()
                            .followers
                            .push((ti, ai, *l, dep));
                    }
                }
            }
        }
    }
    for (arc, g) in &groups {
        for &(ti, ai, leader, dep) in &g.followers {
            match g.leaders.iter().find(|&&(lt, _, _)| lt == leader) {
                None => v.push(Violation::RoleExclusivity {
                    truck: ti,
                    arc_index: ai,
                    detail: format!("follows {leader} which does not lead on {arc:?}"),
                }),
                Some(&(lt, _, ldep)) => {
                    if (dep - ldep).abs() > 1e-6 {
                        v.push(Violation::Desynchronized {
                            arc: *arc,
                            trucks: (ti, lt),
                        });
                    }
                }
            }
        }
        for &(lt, _, _) in &g.leaders {
            let size = 1 + g.followers.iter().filter(|f| f.2 == lt).count();
            if size > p.max_platoon {
                v.push(Violation::PlatoonSize {
                    arc: *arc,
                    size,
                    cap: p.max_platoon,
                });
            }
            if size == 1 {
                v.push(Violation::RoleExclusivity {
                    truck: lt,
                    arc_index: 0,
                    detail: format!("leads on {arc:?} with no followers"),
                });
            }
        }
    }
    v
}

/// Nodes visited more than once by a truck's walk: legal under the relaxed
/// walk semantics but worth reporting since the exact model forbids them.
pub fn route_revisits(routes: &[RoutePlan]) -> Vec<(usize, NodeId)> {
    let mut out = Vec::new();
    for (ti, route) in routes.iter().enumerate() {
        let mut seen = BTreeMap::new();
        let nodes = route.nodes();
        for &n in nodes.iter().take(nodes.len().saturating_sub(1)) {
            *seen.entry(n).or_insert(0usize) += 1;
        }
        for (n, count) in seen {
            if count > 1 {
                out.push((ti, n));
            }
        }
    }
    out
}

/// Feasibility + cost in one call, for the validator CLI.
pub fn validate_solution(
    instance: &ProblemInstance,
    solution: &Solution,
) -> Result<(Vec<Violation>, CostBreakdown)> {
    solution.check_shape(instance)?;
    let violations = check_feasibility(instance, &solution.routes, &solution.schedule);
    let cost = evaluate_solution(instance, &solution.routes, &solution.schedule)?;
    Ok((violations, cost))
}
