//! Stage 1: time-window feasibility grouping and knapsack-DP assignment of
//! customers to trucks.

use crate::error::{Error, Result};
use crate::instance::{CustomerDemand, Parameters};
use crate::network::DistMatrix;

/// Customers that may share a truck, in discovery order.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomerGroup {
    pub members: Vec<CustomerDemand>,
}

/// Customers assigned to trucks; every truck's list keeps the group's
/// iteration order.
#[derive(Debug, Clone, Default)]
pub struct TruckAssignment {
    pub trucks: Vec<Vec<CustomerDemand>>,
}

impl TruckAssignment {
    pub fn loads(&self) -> Vec<f64> {
        self.trucks
            .iter()
            .map(|t| t.iter().map(|c| c.q).sum())
            .collect()
    }
}

/// Least time-window feasibility between two customers: a single truck can
/// serve both only if one window leaves room to travel to the other. The
/// check pairs each direction's slack with the travel time of that
/// direction, which reduces to `max(T_LD_j - T_EA_i, T_LD_i - T_EA_j) >=
/// t_ij` on symmetric networks and stays symmetric on asymmetric ones.
pub fn tw_feasible(i: &CustomerDemand, j: &CustomerDemand, dist: &DistMatrix) -> bool {
    debug_assert_ne!(i.node, j.node);
    j.t_ld - i.t_ea >= dist.dist(i.node, j.node) || i.t_ld - j.t_ea >= dist.dist(j.node, i.node)
}

/// Greedy first-fit partition: open a group with the first unassigned
/// customer, repeatedly add the first unassigned customer feasible with all
/// current members, close the group when none fits.
pub fn group_customers(customers: &[CustomerDemand], dist: &DistMatrix) -> Vec<CustomerGroup> {
    let mut assigned = vec![false; customers.len()];
    let mut groups = Vec::new();
    while let Some(first) = assigned.iter().position(|a| !a) {
        assigned[first] = true;
        let mut members = vec![customers[first]];
        loop {
            let next = customers.iter().enumerate().find(|(idx, cand)| {
                !assigned[*idx] && members.iter().all(|m| tw_feasible(m, cand, dist))
            });
            match next {
                Some((idx, cand)) => {
                    members.push(*cand);
                    assigned[idx] = true;
                }
                None => break,
            }
        }
        groups.push(CustomerGroup { members });
    }
    groups
}

/// Smallest power-of-ten scale (1, 10 or 100) that makes all demands and the
/// capacity integral after rounding; 100 caps the worst case at a 0.005 t
/// rounding error.
pub fn discretize_capacity(demands: &[f64], capacity: f64) -> u32 {
    for scale in [1u32, 10, 100] {
        let fits = |v: f64| {
            let scaled = v * scale as f64;
            (scaled - scaled.round()).abs() < 1e-6
        };
        if demands.iter().all(|&q| fits(q)) && fits(capacity) {
            return scale;
        }
    }
    100
}

/// Knapsack value-function table for one truck over the currently unserved
/// customers (re-indexed contiguously). `values[i]` is the shortest-path
/// closeness score of item `i` to its order predecessor.
fn knapsack_table(weights: &[u64], values: &[f64], cap: u64) -> Vec<Vec<f64>> {
    let n = weights.len();
    let cap = cap as usize;
    let mut f = vec![vec![0.0_f64; cap + 1]; n + 1];
    for i in 1..=n {
        let w = weights[i - 1] as usize;
        for q in 0..=cap {
            f[i][q] = if w <= q {
                f[i - 1][q].max(f[i - 1][q - w] + values[i - 1])
            } else {
                f[i - 1][q]
            };
        }
    }
    f
}

/// Assigns one group's customers to trucks. Each truck greedily takes the
/// subset maximizing the DP value `F(i, q) = max(F(i-1, q), F(i-1, q - q_i) +
/// (t_max + 1 - t_{i-1,i}))` subject to capacity, where `t_{i-1,i}` is the
/// shortest-path time between order-consecutive customers (depot distance
/// for the first). Selected customers are removed and the next truck runs on
/// the re-indexed remainder.
pub fn knapsack_assign(
    group: &CustomerGroup,
    dist: &DistMatrix,
    params: &Parameters,
) -> Result<TruckAssignment> {
    for c in &group.members {
        if c.q > params.capacity {
            return Err(Error::DemandExceedsCapacity {
                node: c.node,
                demand: c.q,
                capacity: params.capacity,
            });
        }
    }
    let demands: Vec<f64> = group.members.iter().map(|c| c.q).collect();
    let scale = discretize_capacity(&demands, params.capacity) as f64;
    let cap = (params.capacity * scale).round() as u64;
    let mut remaining: Vec<CustomerDemand> = group.members.clone();
    let mut trucks = Vec::new();
    while !remaining.is_empty() {
        let weights: Vec<u64> = remaining
            .iter()
            .map(|c| (c.q * scale).round() as u64)
            .collect();
        let values: Vec<f64> = remaining
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let prev = if i == 0 { 0 } else { remaining[i - 1].node };
                dist.t_max() + 1.0 - dist.dist(prev, c.node)
            })
            .collect();
        let f = knapsack_table(&weights, &values, cap);
        // backtrack from F(n, cap)
        let mut selected = vec![false; remaining.len()];
        let mut q = cap as usize;
        for i in (1..=remaining.len()).rev() {
            if f[i][q] != f[i - 1][q] {
                selected[i - 1] = true;
                q -= weights[i - 1] as usize;
            }
        }
        let truck: Vec<CustomerDemand> = remaining
            .iter()
            .zip(&selected)
            .filter(|(_, s)| **s)
            .map(|(c, _)| *c)
            .collect();
        debug_assert!(!truck.is_empty(), "every demand fits a full empty truck");
        remaining = remaining
            .into_iter()
            .zip(selected)
            .filter(|(_, s)| !s)
            .map(|(c, _)| c)
            .collect();
        trucks.push(truck);
    }
    Ok(TruckAssignment { trucks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Arc, RoadNetwork};

    fn line_network(times: &[f64]) -> RoadNetwork {
        // path 0 - 1 - 2 - ... with the given edge times, all bidirectional
        let n = times.len() + 1;
        let mut arcs = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            arcs.push(Arc {
                tail: i,
                head: i + 1,
                travel_time: t,
            });
            arcs.push(Arc {
                tail: i + 1,
                head: i,
                travel_time: t,
            });
        }
        RoadNetwork::new(n, 1..n, arcs).unwrap()
    }

    fn cust(node: usize, q: f64, t_ea: f64, t_ld: f64) -> CustomerDemand {
        CustomerDemand { node, q, t_ea, t_ld }
    }

    #[test]
    fn tw_feasible_examples() {
        let dist = line_network(&[5.0]).all_pairs_shortest_paths().unwrap();
        // wide windows are always mutually feasible
        let a = cust(1, 1.0, 0.0, 36.0);
        let b = cust(1, 1.0, 0.0, 36.0);
        let mut b2 = b;
        b2.node = 0; // distinct nodes for the check; reuse dist(1,0) = 5
        assert!(tw_feasible(&a, &b2, &dist));

        // window shorter than the travel time
        let c = cust(0, 1.0, 0.0, 1.0);
        let d = cust(1, 1.0, 0.0, 1.0);
        assert!(!tw_feasible(&c, &d, &dist));
    }

    #[test]
    fn tw_feasible_boundary() {
        // max(9 - 0, 10 - 8) = 9 >= dist = 9 -> feasible, and symmetric
        let dist = line_network(&[9.0]).all_pairs_shortest_paths().unwrap();
        let i = cust(0, 1.0, 0.0, 10.0);
        let j = cust(1, 1.0, 8.0, 9.0);
        assert!(tw_feasible(&i, &j, &dist));
        assert!(tw_feasible(&j, &i, &dist));
    }

    #[test]
    fn all_feasible_single_group() {
        let net = line_network(&[1.0, 1.0, 1.0]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        let customers = vec![
            cust(1, 1.0, 0.0, 36.0),
            cust(2, 1.0, 0.0, 36.0),
            cust(3, 1.0, 0.0, 36.0),
        ];
        let groups = group_customers(&customers, &dist);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].members, customers);
    }

    #[test]
    fn no_pair_feasible_singletons() {
        let net = line_network(&[10.0, 10.0, 10.0]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        // every window is far too tight for any pairing
        let customers = vec![
            cust(1, 1.0, 0.0, 1.0),
            cust(2, 1.0, 0.0, 1.0),
            cust(3, 1.0, 0.0, 1.0),
        ];
        let groups = group_customers(&customers, &dist);
        assert_eq!(groups.len(), 3);
        for g in groups {
            assert_eq!(g.members.len(), 1);
        }
    }

    #[test]
    fn partial_feasibility_hand_trace() {
        // customers 1,2,3 pairwise feasible; 4 infeasible with 1
        let net = line_network(&[1.0, 1.0, 1.0, 30.0]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        let customers = vec![
            cust(1, 1.0, 0.0, 10.0),
            cust(2, 1.0, 0.0, 10.0),
            cust(3, 1.0, 0.0, 10.0),
            cust(4, 1.0, 0.0, 31.0),
        ];
        let groups = group_customers(&customers, &dist);
        assert_eq!(groups.len(), 2);
        assert_eq!(
            groups[0].members.iter().map(|c| c.node).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert_eq!(groups[1].members[0].node, 4);
    }

    #[test]
    fn groups_form_partition_with_pairwise_feasibility() {
        use rand::{Rng, SeedableRng};
        let net = line_network(&[2.0, 3.0, 1.0, 4.0, 2.0]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        for seed in 0..20 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let customers: Vec<CustomerDemand> = (1..6)
                .map(|node| {
                    let ea = rng.random_range(0.0..20.0);
                    cust(node, 1.0, ea, ea + rng.random_range(0.5..15.0))
                })
                .collect();
            let groups = group_customers(&customers, &dist);
            let total: usize = groups.iter().map(|g| g.members.len()).sum();
            assert_eq!(total, customers.len());
            for g in &groups {
                for i in 0..g.members.len() {
                    for j in (i + 1)..g.members.len() {
                        assert!(tw_feasible(&g.members[i], &g.members[j], &dist));
                    }
                }
            }
        }
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize_capacity(&[3.0, 7.0, 10.0], 20.0), 1);
        assert_eq!(discretize_capacity(&[2.5, 7.5], 20.0), 10);
        assert_eq!(discretize_capacity(&[1.25], 20.0), 100);
    }

    #[test]
    fn single_customer_single_truck() {
        let net = line_network(&[2.0]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        let group = CustomerGroup {
            members: vec![cust(1, 5.0, 0.0, 30.0)],
        };
        let a = knapsack_assign(&group, &dist, &Parameters::default()).unwrap();
        assert_eq!(a.trucks.len(), 1);
        assert_eq!(a.trucks[0][0].node, 1);
    }

    #[test]
    fn close_pair_shares_a_truck() {
        let net = line_network(&[2.0, 0.5]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        let group = CustomerGroup {
            members: vec![cust(1, 8.0, 0.0, 30.0), cust(2, 9.0, 0.0, 30.0)],
        };
        let a = knapsack_assign(&group, &dist, &Parameters::default()).unwrap();
        assert_eq!(a.trucks.len(), 1);
        assert_eq!(a.trucks[0].len(), 2);
    }

    #[test]
    fn capacity_forces_split() {
        let net = line_network(&[2.0, 0.5]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        let group = CustomerGroup {
            members: vec![cust(1, 15.0, 0.0, 30.0), cust(2, 15.0, 0.0, 30.0)],
        };
        let a = knapsack_assign(&group, &dist, &Parameters::default()).unwrap();
        assert_eq!(a.trucks.len(), 2);
        for t in &a.trucks {
            assert_eq!(t.len(), 1);
        }
    }

    #[test]
    fn rejects_oversized_demand() {
        let net = line_network(&[2.0]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        let group = CustomerGroup {
            members: vec![cust(1, 25.0, 0.0, 30.0)],
        };
        let err = knapsack_assign(&group, &dist, &Parameters::default());
        assert!(matches!(err, Err(Error::DemandExceedsCapacity { .. })));
    }

    /// Exhaustive oracle: the first truck's selected subset achieves the
    /// maximum DP value among all capacity-feasible subsets for the same
    /// item order.
    #[test]
    fn first_truck_matches_exhaustive_subset_value() {
        use rand::{Rng, SeedableRng};
        let net = line_network(&[2.0, 3.0, 1.5, 4.0, 2.5, 1.0, 3.5, 2.0, 1.2, 0.8, 2.7, 3.3]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        let params = Parameters::default();
        for seed in 0..12 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..=12usize);
            let members: Vec<CustomerDemand> = (0..n)
                .map(|i| cust(i + 1, rng.random_range(1..=10) as f64, 0.0, 100.0))
                .collect();
            let value = |idx: usize| {
                let prev = if idx == 0 { 0 } else { members[idx - 1].node };
                dist.t_max() + 1.0 - dist.dist(prev, members[idx].node)
            };
            let mut best = 0.0_f64;
            for mask in 0u32..(1 << n) {
                let w: f64 = (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| members[i].q)
                    .sum();
                if w <= params.capacity {
                    let v: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(value).sum();
                    best = best.max(v);
                }
            }
            let group = CustomerGroup { members: members.clone() };
            let assign = knapsack_assign(&group, &dist, &params).unwrap();
            let first_value: f64 = assign.trucks[0]
                .iter()
                .map(|c| {
                    let pos = members.iter().position(|m| m.node == c.node).unwrap();
                    value(pos)
                })
                .sum();
            assert!(
                (first_value - best).abs() < 1e-9,
                "seed {seed}: first truck value {first_value} vs exhaustive {best}"
            );
        }
    }

    /// F(i, q) is non-decreasing in q for fixed i.
    #[test]
    fn value_function_monotone_in_capacity() {
        let weights = vec![3, 7, 5, 2];
        let values = vec![4.0, 9.0, 6.5, 1.0];
        let f = super::knapsack_table(&weights, &values, 17);
        for row in &f {
            for w in row.windows(2) {
                assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn every_customer_assigned_exactly_once() {
        use rand::{Rng, SeedableRng};
        let net = line_network(&[2.0, 3.0, 1.5, 4.0, 2.5, 1.0]);
        let dist = net.all_pairs_shortest_paths().unwrap();
        let params = Parameters::default();
        for seed in 0..10 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100 + seed);
            let members: Vec<CustomerDemand> = (1..7)
                .map(|node| cust(node, rng.random_range(1..=12) as f64, 0.0, 100.0))
                .collect();
            let group = CustomerGroup { members: members.clone() };
            let assign = knapsack_assign(&group, &dist, &params).unwrap();
            let mut seen: Vec<usize> = assign
                .trucks
                .iter()
                .flatten()
                .map(|c| c.node)
                .collect();
            seen.sort_unstable();
            let mut expect: Vec<usize> = members.iter().map(|c| c.node).collect();
            expect.sort_unstable();
            assert_eq!(seen, expect);
            for load in assign.loads() {
                assert!(load <= params.capacity + 1e-9);
            }
        }
    }
}
