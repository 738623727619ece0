//! Directed road network, all-pairs shortest paths and path reconstruction.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub type NodeId = usize;

pub const DEPOT: NodeId = 0;

/// One directed arc with a positive travel time in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    pub travel_time: f64,
}

/// Directed road network. Node 0 is always the depot; customers are a subset
/// of the remaining nodes. The whole graph must be strongly connected so that
/// every shortest-path entry (and hence `t_max`) is finite.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    node_count: usize,
    customers: BTreeSet<NodeId>,
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    arc_index: BTreeMap<(NodeId, NodeId), usize>,
}

impl RoadNetwork {
    pub fn new(
        node_count: usize,
        customer_nodes: impl IntoIterator<Item = NodeId>,
        arcs: Vec<Arc>,
    ) -> Result<Self> {
        let customers: BTreeSet<NodeId> = customer_nodes.into_iter().collect();
        if node_count == 0 {
            return Err(Error::InstanceInvalid("network has no nodes".into()));
        }
        if customers.contains(&DEPOT) {
            return Err(Error::InstanceInvalid(
                "node 0 is the depot and cannot be a customer".into(),
            ));
        }
        if let Some(&bad) = customers.iter().find(|&&c| c >= node_count) {
            return Err(Error::InstanceInvalid(format!(
                "customer node {bad} is out of range (node_count = {node_count})"
            )));
        }
        let mut arc_index = BTreeMap::new();
        let mut out = vec![Vec::new(); node_count];
        for (idx, arc) in arcs.iter().enumerate() {
            if arc.tail >= node_count || arc.head >= node_count {
                return Err(Error::InstanceInvalid(format!(
                    "arc ({}, {}) references a node out of range",
                    arc.tail, arc.head
                )));
            }
            if arc.tail == arc.head {
                return Err(Error::InstanceInvalid(format!(
                    "self-loop arc at node {}",
                    arc.tail
                )));
            }
            if !(arc.travel_time > 0.0) {
                return Err(Error::InstanceInvalid(format!(
                    "arc ({}, {}) has non-positive travel time {}",
                    arc.tail, arc.head, arc.travel_time
                )));
            }
            if arc_index.insert((arc.tail, arc.head), idx).is_some() {
                return Err(Error::InstanceInvalid(format!(
                    "duplicate arc ({}, {})",
                    arc.tail, arc.head
                )));
            }
            out[arc.tail].push(idx);
        }
        let net = RoadNetwork {
            node_count,
            customers,
            arcs,
            out,
            arc_index,
        };
        net.check_connectivity()?;
        Ok(net)
    }

    /// Strong connectivity over all nodes. The module-level contract only
    /// requires depot and customers to be mutually reachable, but `t_max`
    /// ranges over every node pair, so we reject any unreachable node here.
    fn check_connectivity(&self) -> Result<()> {
        let fwd = self.reachable(DEPOT, false);
        if let Some(to) = (0..self.node_count).find(|n| !fwd[*n]) {
            return Err(Error::DisconnectedNetwork { from: DEPOT, to });
        }
        let bwd = self.reachable(DEPOT, true);
        if let Some(from) = (0..self.node_count).find(|n| !bwd[*n]) {
            return Err(Error::DisconnectedNetwork { from, to: DEPOT });
        }
        Ok(())
    }

    fn reachable(&self, start: NodeId, reversed: bool) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for arc in &self.arcs {
                let (a, b) = if reversed {
                    (arc.head, arc.tail)
                } else {
                    (arc.tail, arc.head)
                };
                if a == u && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn customers(&self) -> &BTreeSet<NodeId> {
        &self.customers
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_id(&self, tail: NodeId, head: NodeId) -> Option<usize> {
        self.arc_index.get(&(tail, head)).copied()
    }

    pub fn travel_time(&self, tail: NodeId, head: NodeId) -> Option<f64> {
        self.arc_id(tail, head).map(|i| self.arcs[i].travel_time)
    }

    pub fn out_arcs(&self, node: NodeId) -> impl Iterator<Item = &Arc> {
        self.out[node].iter().map(move |&i| &self.arcs[i])
    }

    /// Floyd-Warshall over the arc travel times, with a `next`-hop matrix for
    /// path reconstruction. Ties keep the decomposition through the smallest
    /// intermediate node (the k-loop runs in ascending order and only strict
    /// improvements update the matrices).
    pub fn all_pairs_shortest_paths(&self) -> Result<DistMatrix> {
        let n = self.node_count;
        let mut dist = vec![f64::INFINITY; n * n];
        let mut next: Vec<Option<NodeId>> = vec![None; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        for arc in &self.arcs {
            let slot = arc.tail * n + arc.head;
            if arc.travel_time < dist[slot] {
                dist[slot] = arc.travel_time;
                next[slot] = Some(arc.head);
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let through = dik + dist[k * n + j];
                    if through < dist[i * n + j] {
                        dist[i * n + j] = through;
                        next[i * n + j] = next[i * n + k];
                    }
                }
            }
        }
        // connectivity was checked at construction; recheck defensively
        for i in 0..n {
            for j in 0..n {
                if !dist[i * n + j].is_finite() {
                    return Err(Error::DisconnectedNetwork { from: i, to: j });
                }
            }
        }
        let t_max = dist.iter().cloned().fold(0.0_f64, f64::max);
        Ok(DistMatrix {
            n,
            dist,
            next,
            t_max,
        })
    }

    /// Shortest path from `from` to `to` under caller-supplied per-arc costs
    /// (indexed like `arcs()`). Ties are broken toward the lexicographically
    /// smallest node sequence. `from == to` yields an empty path of cost 0.
    pub fn shortest_path_under(
        &self,
        costs: &[f64],
        from: NodeId,
        to: NodeId,
    ) -> Result<(Vec<(NodeId, NodeId)>, f64)> {
        assert_eq!(costs.len(), self.arcs.len(), "one cost per arc");
        debug_assert!(costs.iter().all(|c| *c > 0.0));
        if from == to {
            return Ok((Vec::new(), 0.0));
        }
        // Label-correcting search keeping the full best path per node; graphs
        // here are small and the lexicographic tie-break needs the sequences.
        let n = self.node_count;
        let mut best: Vec<Option<(f64, Vec<NodeId>)>> = vec![None; n];
        best[from] = Some((0.0, vec![from]));
        let mut frontier = vec![from];
        while let Some(u) = frontier.pop() {
            let (du, pu) = best[u].clone().expect("frontier nodes have labels");
            for &ai in &self.out[u] {
                let arc = &self.arcs[ai];
                let cand_cost = du + costs[ai];
                let improves = match &best[arc.head] {
                    None => true,
                    Some((d, p)) => {
                        cand_cost < d - 1e-12
                            || ((cand_cost - d).abs() <= 1e-12 && {
                                let mut cand = pu.clone();
                                cand.push(arc.head);
                                cand < *p
                            })
                    }
                };
                if improves {
                    let mut path = pu.clone();
                    path.push(arc.head);
                    best[arc.head] = Some((cand_cost, path));
                    frontier.push(arc.head);
                }
            }
        }
        match best[to].take() {
            Some((cost, nodes)) => {
                let path = nodes.windows(2).map(|w| (w[0], w[1])).collect();
                Ok((path, cost))
            }
            None => Err(Error::DisconnectedNetwork { from, to }),
        }
    }

    /// Original travel times as a cost vector for `shortest_path_under`.
    pub fn base_costs(&self) -> Vec<f64> {
        self.arcs.iter().map(|a| a.travel_time).collect()
    }
}

/// All-pairs shortest path travel times plus reconstruction data.
#[derive(Debug, Clone)]
pub struct DistMatrix {
    n: usize,
    dist: Vec<f64>,
    next: Vec<Option<NodeId>>,
    t_max: f64,
}

impl DistMatrix {
    pub fn dist(&self, from: NodeId, to: NodeId) -> f64 {
        self.dist[from * self.n + to]
    }

    /// Largest finite entry over all node pairs.
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Reconstructs one shortest path as an arc list; empty when `from == to`.
    pub fn path(&self, from: NodeId, to: NodeId) -> Vec<(NodeId, NodeId)> {
        let mut path = Vec::new();
        let mut cur = from;
        while cur != to {
            let hop = self.next[cur * self.n + to].expect("connected by construction");
            path.push((cur, hop));
            cur = hop;
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(tail: NodeId, head: NodeId, t: f64) -> Arc {
        Arc {
            tail,
            head,
            travel_time: t,
        }
    }

    fn two_node() -> RoadNetwork {
        RoadNetwork::new(2, [1], vec![arc(0, 1, 5.0), arc(1, 0, 5.0)]).unwrap()
    }

    #[test]
    fn single_arc_pair() {
        let d = two_node().all_pairs_shortest_paths().unwrap();
        assert_eq!(d.dist(0, 1), 5.0);
        assert_eq!(d.dist(1, 0), 5.0);
        assert_eq!(d.dist(0, 0), 0.0);
        assert_eq!(d.t_max(), 5.0);
    }

    #[test]
    fn toy_network_example() {
        let net = crate::instances::toy_instance().network;
        let d = net.all_pairs_shortest_paths().unwrap();
        // direct link wins over the two-hop 4 + 2.2 alternative
        assert!((d.dist(0, 2) - 6.1).abs() < 1e-12);
        let via_hub = net.travel_time(0, 1).unwrap() + net.travel_time(1, 2).unwrap();
        assert!((via_hub - 6.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_disconnected() {
        let err = RoadNetwork::new(3, [1], vec![arc(0, 1, 1.0), arc(1, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::DisconnectedNetwork { .. }));
    }

    #[test]
    fn rejects_self_loop_and_nonpositive() {
        assert!(RoadNetwork::new(2, [1], vec![arc(0, 0, 1.0)]).is_err());
        assert!(RoadNetwork::new(2, [1], vec![arc(0, 1, 0.0), arc(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn identity_path_is_empty() {
        let net = two_node();
        let (path, cost) = net.shortest_path_under(&net.base_costs(), 1, 1).unwrap();
        assert!(path.is_empty());
        assert_eq!(cost, 0.0);
    }

    /// Independent Bellman-Ford used as an oracle below.
    fn bellman_ford(net: &RoadNetwork, src: NodeId) -> Vec<f64> {
        let n = net.node_count();
        let mut d = vec![f64::INFINITY; n];
        d[src] = 0.0;
        for _ in 0..n {
            for a in net.arcs() {
                if d[a.tail] + a.travel_time < d[a.head] {
                    d[a.head] = d[a.tail] + a.travel_time;
                }
            }
        }
        d
    }

    fn random_connected(seed: u64, n: usize) -> RoadNetwork {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut arcs = Vec::new();
        // ring for connectivity, then random chords
        for i in 0..n {
            let j = (i + 1) % n;
            arcs.push(arc(i, j, rng.random_range(1.0..10.0)));
        }
        for _ in 0..(2 * n) {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j && !arcs.iter().any(|a| a.tail == i && a.head == j) {
                arcs.push(arc(i, j, rng.random_range(1.0..10.0)));
            }
        }
        RoadNetwork::new(n, [1], arcs).unwrap()
    }

    #[test]
    fn floyd_warshall_matches_bellman_ford() {
        for seed in 0..8 {
            let net = random_connected(seed, 10);
            let d = net.all_pairs_shortest_paths().unwrap();
            for src in 0..net.node_count() {
                let bf = bellman_ford(&net, src);
                for to in 0..net.node_count() {
                    assert!(
                        (d.dist(src, to) - bf[to]).abs() < 1e-9,
                        "seed {seed} pair ({src},{to}): {} vs {}",
                        d.dist(src, to),
                        bf[to]
                    );
                }
            }
        }
    }

    #[test]
    fn reconstructed_paths_sum_to_dist() {
        for seed in 0..5 {
            let net = random_connected(seed, 9);
            let d = net.all_pairs_shortest_paths().unwrap();
            for i in 0..net.node_count() {
                for j in 0..net.node_count() {
                    let total: f64 = d
                        .path(i, j)
                        .iter()
                        .map(|&(a, b)| net.travel_time(a, b).unwrap())
                        .sum();
                    assert!((total - d.dist(i, j)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn determinism_across_runs() {
        let net = random_connected(3, 10);
        let a = net.all_pairs_shortest_paths().unwrap();
        let b = net.all_pairs_shortest_paths().unwrap();
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(a.dist(i, j), b.dist(i, j));
                assert_eq!(a.path(i, j), b.path(i, j));
            }
        }
    }

    /// Exhaustive simple-path enumeration oracle on small graphs.
    fn enumerate_min_simple_path(net: &RoadNetwork, from: NodeId, to: NodeId) -> f64 {
        fn go(
            net: &RoadNetwork,
            cur: NodeId,
            to: NodeId,
            seen: &mut Vec<bool>,
            cost: f64,
            best: &mut f64,
        ) {
            if cur == to {
                *best = best.min(cost);
                return;
            }
            for a in net.out_arcs(cur) {
                if !seen[a.head] {
                    seen[a.head] = true;
                    go(net, a.head, to, seen, cost + a.travel_time, best);
                    seen[a.head] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut seen = vec![false; net.node_count()];
        seen[from] = true;
        go(net, from, to, &mut seen, 0.0, &mut best);
        best
    }

    #[test]
    fn dist_matches_exhaustive_simple_paths() {
        for seed in 10..14 {
            let net = random_connected(seed, 7);
            let d = net.all_pairs_shortest_paths().unwrap();
            for i in 0..7 {
                for j in 0..7 {
                    if i == j {
                        continue;
                    }
                    let oracle = enumerate_min_simple_path(&net, i, j);
                    assert!((d.dist(i, j) - oracle).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn discounted_arc_preferred_when_it_shortens() {
        // 0 -> 1 -> 2 versus direct 0 -> 2; discounting (0,1) flips the choice
        let net = RoadNetwork::new(
            3,
            [2],
            vec![
                arc(0, 1, 4.0),
                arc(1, 2, 2.2),
                arc(0, 2, 6.1),
                arc(2, 0, 6.1),
                arc(1, 0, 4.0),
                arc(2, 1, 2.2),
            ],
        )
        .unwrap();
        let mut costs = net.base_costs();
        let (path, cost) = net.shortest_path_under(&costs, 0, 2).unwrap();
        assert_eq!(path, vec![(0, 2)]);
        assert!((cost - 6.1).abs() < 1e-12);
        costs[net.arc_id(0, 1).unwrap()] *= 0.9; // 3.6 + 2.2 = 5.8 < 6.1
        let (path, cost) = net.shortest_path_under(&costs, 0, 2).unwrap();
        assert_eq!(path, vec![(0, 1), (1, 2)]);
        assert!((cost - 5.8).abs() < 1e-12);

        // exhaustive check over all simple paths under the discounted costs
        let oracle = {
            let mut best = f64::INFINITY;
            // paths from 0 to 2 in this 3-node graph: [0,2], [0,1,2]
            let direct = costs[net.arc_id(0, 2).unwrap()];
            let hub = costs[net.arc_id(0, 1).unwrap()] + costs[net.arc_id(1, 2).unwrap()];
            best = best.min(direct).min(hub);
            best
        };
        assert!((cost - oracle).abs() < 1e-12);
    }

    #[test]
    fn lexicographic_tie_break() {
        // two equal-cost routes 0->1->3 and 0->2->3; the smaller node sequence wins
        let net = RoadNetwork::new(
            4,
            [3],
            vec![
                arc(0, 1, 1.0),
                arc(0, 2, 1.0),
                arc(1, 3, 1.0),
                arc(2, 3, 1.0),
                arc(3, 0, 1.0),
            ],
        )
        .unwrap();
        let (path, _) = net.shortest_path_under(&net.base_costs(), 0, 3).unwrap();
        assert_eq!(path, vec![(0, 1), (1, 3)]);
    }
}
