//! Stage 2: per-truck route construction (modified insertion heuristic) and
//! expansion of customer sequences into network arc walks.

use crate::error::Result;
use crate::instance::{CustomerDemand, Parameters};
use crate::network::{DistMatrix, NodeId, RoadNetwork, DEPOT};
use crate::solution::RoutePlan;

/// Builds one truck's customer visiting sequence.
///
/// Seed: the customer minimizing `(eta*Q + gamma - eta*q_i) * t_{0,i}`.
/// Selection: the unrouted customer minimizing `(eta*Q + gamma - eta*q_r -
/// eta * sum_served) * t_{sub,r}` with `t_sub,r` the shortest time from `r`
/// to any subtour member including the depot. Insertion between `(j, h)`
/// minimizing `t_jr*(eta*p_h + eta*q_r + gamma) + t_rh*(eta*p_h + gamma) -
/// t_jh*(eta*p_h + gamma)` where `p_h` is the load after departing `h` in
/// the current subtour. Ties break toward the smallest node id and the
/// earliest insertion slot.
pub fn build_route(
    truck_customers: &[CustomerDemand],
    dist: &DistMatrix,
    params: &Parameters,
) -> Vec<NodeId> {
    assert!(!truck_customers.is_empty());
    let eta = params.eta;
    let gamma = params.gamma;
    let q_cap = params.capacity;
    let demand = |node: NodeId| truck_customers.iter().find(|c| c.node == node).unwrap().q;

    let mut seed: Option<(f64, NodeId)> = None;
    for c in truck_customers {
        let score = (eta * q_cap + gamma - eta * c.q) * dist.dist(DEPOT, c.node);
        let better = match seed {
            None => true,
            Some((best, node)) => {
                score < best - 1e-12 || ((score - best).abs() <= 1e-12 && c.node < node)
            }
        };
        if better {
            seed = Some((score, c.node));
        }
    }
    // subtour as a node cycle [0, i, 0]
    let mut subtour: Vec<NodeId> = vec![DEPOT, seed.unwrap().1, DEPOT];

    while subtour.len() - 2 < truck_customers.len() {
        let served: f64 = subtour
            .iter()
            .filter(|&&n| n != DEPOT)
            .map(|&n| demand(n))
            .sum();
        // pick the next customer
        let mut pick: Option<(f64, NodeId)> = None;
        for c in truck_customers {
            if subtour.contains(&c.node) {
                continue;
            }
            let t_sub = subtour
                .iter()
                .map(|&m| dist.dist(c.node, m))
                .fold(f64::INFINITY, f64::min);
            let score = (eta * q_cap + gamma - eta * c.q - eta * served) * t_sub;
            let better = match pick {
                None => true,
                Some((best, node)) => {
                    score < best - 1e-12 || ((score - best).abs() <= 1e-12 && c.node < node)
                }
            };
            if better {
                pick = Some((score, c.node));
            }
        }
        let r = pick.unwrap().1;
        let q_r = demand(r);

        // best insertion slot; p_h recomputed fresh from the current subtour
        let mut slot: Option<(f64, usize)> = None;
        let mut deltas = Vec::with_capacity(subtour.len() - 1);
        for k in 0..subtour.len() - 1 {
            let j = subtour[k];
            let h = subtour[k + 1];
            let p_h: f64 = subtour[k + 2..]
                .iter()
                .filter(|&&n| n != DEPOT)
                .map(|&n| demand(n))
                .sum();
            let delta = dist.dist(j, r) * (eta * p_h + eta * q_r + gamma)
                + dist.dist(r, h) * (eta * p_h + gamma)
                - dist.dist(j, h) * (eta * p_h + gamma);
            deltas.push(delta);
            if slot.is_none() || delta < slot.unwrap().0 - 1e-12 {
                slot = Some((delta, k));
            }
        }
        let (chosen_delta, k) = slot.unwrap();
        debug_assert!(deltas.iter().all(|d| chosen_delta <= d + 1e-9));
        subtour.insert(k + 1, r);
    }
    subtour[1..subtour.len() - 1].to_vec()
}

/// Expands a customer sequence into one contiguous arc walk by concatenating
/// shortest paths under the given per-arc link costs. Legs may revisit nodes
/// touched by other legs; the validator reports such revisits informationally.
pub fn expand_route(
    customer_sequence: &[NodeId],
    link_costs: &[f64],
    net: &RoadNetwork,
) -> Result<Vec<(NodeId, NodeId)>> {
    let mut path = Vec::new();
    let mut prev = DEPOT;
    for &c in customer_sequence.iter().chain(std::iter::once(&DEPOT)) {
        let (leg, _) = net.shortest_path_under(link_costs, prev, c)?;
        path.extend(leg);
        prev = c;
    }
    Ok(path)
}

/// Per-arc remaining load along a walk: starts at the sum of demands and
/// drops by `q_c` right after the first visit of each served customer.
pub fn compute_load_profile(
    arc_path: &[(NodeId, NodeId)],
    customer_sequence: &[NodeId],
    demands: &[CustomerDemand],
) -> Vec<f64> {
    let demand = |node: NodeId| -> f64 {
        demands
            .iter()
            .find(|c| c.node == node)
            .map(|c| c.q)
            .unwrap_or(0.0)
    };
    let mut load: f64 = customer_sequence.iter().map(|&c| demand(c)).sum();
    let mut to_serve: Vec<NodeId> = customer_sequence.to_vec();
    let mut profile = Vec::with_capacity(arc_path.len());
    for &(tail, _head) in arc_path {
        // serving happens on arrival, so a customer at this arc's tail has
        // already been dropped when the truck departs
        if !to_serve.is_empty() && to_serve[0] == tail {
            load -= demand(to_serve.remove(0));
        }
        profile.push(load);
    }
    // final delivery at the last arc head (the depot ends the walk)
    profile
}

/// Convenience: build, expand and profile one truck's route.
pub fn plan_route(
    truck: usize,
    truck_customers: &[CustomerDemand],
    dist: &DistMatrix,
    link_costs: &[f64],
    net: &RoadNetwork,
    params: &Parameters,
) -> Result<RoutePlan> {
    let customers = build_route(truck_customers, dist, params);
    plan_route_with_sequence(truck, &customers, truck_customers, link_costs, net)
}

/// Expansion + load profile for a given sequence (used by the refinement
/// stage which searches over sequence directions).
pub fn plan_route_with_sequence(
    truck: usize,
    customers: &[NodeId],
    truck_customers: &[CustomerDemand],
    link_costs: &[f64],
    net: &RoadNetwork,
) -> Result<RoutePlan> {
    let arc_path = expand_route(customers, link_costs, net)?;
    let load_profile = compute_load_profile(&arc_path, customers, truck_customers);
    Ok(RoutePlan {
        truck,
        customers: customers.to_vec(),
        arc_path,
        load_profile,
    })
}
