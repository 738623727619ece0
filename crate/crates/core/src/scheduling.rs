//! Stage 3: given fixed routes, decide arrival/wait times and platoon roles
//! to maximize platoon fuel savings subject to time windows.
//!
//! Both schedulers share a difference-constraint timing engine over per-node
//! departure times: chains `dep[p] >= dep[p-1] + travel`, window bounds at
//! service positions, and equality classes for synchronized platoon
//! departures. The earliest solution of the system (forward fixpoint) is
//! feasible iff it meets every upper bound.

use crate::cost::{arc_energy, Role};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::network::NodeId;
use crate::solution::{NodeTiming, RoutePlan, Schedule, TruckSchedule};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy)]
pub struct SchedulerLimits {
    /// exact scheduling is attempted up to this many trucks
    pub max_trucks: usize,
    /// and up to this many distinct shared arcs
    pub max_shared_arcs: usize,
    /// branch-and-bound node budget before falling back
    pub node_budget: usize,
}

impl Default for SchedulerLimits {
    fn default() -> Self {
        SchedulerLimits {
            max_trucks: 4,
            max_shared_arcs: 12,
            node_budget: 1_000_000,
        }
    }
}

/// One traversal of a shared arc: which truck, at which position of its walk,
/// and the load it carries there.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Traversal {
    truck: usize,
    pos: usize,
    load: f64,
    base_cost: f64,
}

struct TimingSystem {
    offsets: Vec<usize>,
    n_vars: usize,
    /// to >= from + delta
    chains: Vec<(usize, usize, f64)>,
    lower: Vec<(usize, f64)>,
    upper: Vec<(usize, f64, NodeId)>,
    horizon: f64,
}

impl TimingSystem {
    fn new(routes: &[RoutePlan], instance: &ProblemInstance) -> Result<Self> {
        let mut offsets = Vec::with_capacity(routes.len());
        let mut n_vars = 0usize;
        for r in routes {
            offsets.push(n_vars);
            n_vars += r.arc_path.len() + 1;
        }
        let mut chains = Vec::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut horizon = 1.0_f64;
        for (ti, r) in routes.iter().enumerate() {
            let mut travel_total = 0.0;
            for (p, &(tail, head)) in r.arc_path.iter().enumerate() {
                let t = instance.network.travel_time(tail, head).ok_or_else(|| {
                    Error::MalformedSolution(format!("arc ({tail}, {head}) not in network"))
                })?;
                chains.push((offsets[ti] + p, offsets[ti] + p + 1, t));
                travel_total += t;
            }
            for (node, pos) in r.service_positions() {
                if pos == usize::MAX {
                    return Err(Error::MalformedSolution(format!(
                        "truck {ti} never visits its customer {node}"
                    )));
                }
                let c = instance.demand_of(node).ok_or_else(|| {
                    Error::MalformedSolution(format!("no demand for node {node}"))
                })?;
                // arrival at pos >= t_ea  <=>  dep[pos-1] >= t_ea - travel
                if pos > 0 {
                    let (tail, head) = r.arc_path[pos - 1];
                    let t = instance.network.travel_time(tail, head).unwrap();
                    lower.push((offsets[ti] + pos - 1, c.t_ea - t));
                }
                // departure from pos <= t_ld
                upper.push((offsets[ti] + pos, c.t_ld, node));
                horizon = horizon.max(c.t_ld);
            }
            horizon += travel_total;
        }
        Ok(TimingSystem {
            offsets,
            n_vars,
            chains,
            lower,
            upper,
            horizon: horizon + 1.0,
        })
    }

    fn var(&self, truck: usize, pos: usize) -> usize {
        self.offsets[truck] + pos
    }

    /// Earliest solution under the given equality classes; `None` when the
    /// system is infeasible. Returns per-var departure times.
    fn earliest(&self, classes: &UnionFind) -> Option<Vec<f64>> {
        let mut lb = vec![0.0_f64; self.n_vars];
        for &(v, c) in &self.lower {
            let r = classes.find(v);
            if c > lb[r] {
                lb[r] = c;
            }
        }
        // fixpoint; each useful pass raises at least one class
        for _pass in 0..=self.n_vars {
            let mut changed = false;
            for &(from, to, delta) in &self.chains {
                let (rf, rt) = (classes.find(from), classes.find(to));
                let cand = lb[rf] + delta;
                if cand > lb[rt] + 1e-12 {
                    lb[rt] = cand;
                    changed = true;
                    if lb[rt] > self.horizon {
                        return None; // positive cycle through equalities
                    }
                }
            }
            if !changed {
                let sol: Vec<f64> = (0..self.n_vars).map(|v| lb[classes.find(v)]).collect();
                for &(v, ub, _node) in &self.upper {
                    if sol[v] > ub + 1e-9 {
                        return None;
                    }
                }
                return Some(sol);
            }
        }
        None
    }

    /// Which upper bound breaks first in the earliest (no-sync) solution.
    fn first_violation(&self, classes: &UnionFind) -> Option<NodeId> {
        let mut lb = vec![0.0_f64; self.n_vars];
        for &(v, c) in &self.lower {
            let r = classes.find(v);
            lb[r] = lb[r].max(c);
        }
        for _ in 0..=self.n_vars {
            let mut changed = false;
            for &(from, to, delta) in &self.chains {
                let (rf, rt) = (classes.find(from), classes.find(to));
                if lb[rf] + delta > lb[rt] + 1e-12 {
                    lb[rt] = lb[rf] + delta;
                    changed = true;
                }
                if lb[rt] > self.horizon {
                    return None;
                }
            }
            if !changed {
                break;
            }
        }
        self.upper
            .iter()
            .find(|&&(v, ub, _)| lb[classes.find(v)] > ub + 1e-9)
            .map(|&(_, _, node)| node)
    }

    /// Latest feasible departure per class, given the equality classes
    /// (backward fixpoint from the upper bounds).
    fn latest(&self, classes: &UnionFind) -> Vec<f64> {
        let mut ub = vec![self.horizon; self.n_vars];
        for &(v, c, _) in &self.upper {
            let r = classes.find(v);
            ub[r] = ub[r].min(c);
        }
        for _ in 0..=self.n_vars {
            let mut changed = false;
            for &(from, to, delta) in &self.chains {
                let (rf, rt) = (classes.find(from), classes.find(to));
                let cand = ub[rt] - delta;
                if cand < ub[rf] - 1e-12 {
                    ub[rf] = cand;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (0..self.n_vars).map(|v| ub[classes.find(v)]).collect()
    }
}

#[derive(Clone)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }
    fn find(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Shared-arc traversal table: arc -> traversals of trucks that ride it.
fn shared_arcs(routes: &[RoutePlan], instance: &ProblemInstance) -> BTreeMap<(NodeId, NodeId), Vec<Traversal>> {
    let mut by_arc: BTreeMap<(NodeId, NodeId), Vec<Traversal>> = BTreeMap::new();
    let p = &instance.params;
    for (ti, r) in routes.iter().enumerate() {
        for (pos, &(tail, head)) in r.arc_path.iter().enumerate() {
            let t = instance.network.travel_time(tail, head).unwrap_or(0.0);
            let load = r.load_profile[pos];
            by_arc.entry((tail, head)).or_default().push(Traversal {
                truck: ti,
                pos,
                load,
                base_cost: arc_energy(t, load, Role::Alone, p),
            });
        }
    }
    by_arc.retain(|_, v| {
        // a platoon needs two distinct trucks on the same arc
        let mut trucks: Vec<usize> = v.iter().map(|t| t.truck).collect();
        trucks.sort_unstable();
        trucks.dedup();
        trucks.len() >= 2
    });
    by_arc
}

/// Builds the final `Schedule` from solved departure times and platoon
/// blocks (per arc: list of groups, each group a list of traversal indices).
fn build_schedule(
    routes: &[RoutePlan],
    instance: &ProblemInstance,
    sys: &TimingSystem,
    dep: &[f64],
    platoons: &BTreeMap<(NodeId, NodeId), Vec<Vec<Traversal>>>,
) -> Schedule {
    let mut trucks = Vec::with_capacity(routes.len());
    for (ti, r) in routes.iter().enumerate() {
        let mut timings = Vec::with_capacity(r.arc_path.len() + 1);
        let nodes = r.nodes();
        for (p, &node) in nodes.iter().enumerate() {
            let arrival = if p == 0 {
                0.0
            } else {
                let (tail, head) = r.arc_path[p - 1];
                dep[sys.var(ti, p - 1)] + instance.network.travel_time(tail, head).unwrap()
            };
            let wait = if p == nodes.len() - 1 {
                0.0 // journey ends on arrival back at the depot
            } else {
                dep[sys.var(ti, p)] - arrival
            };
            timings.push(NodeTiming {
                node,
                arrival,
                wait: if wait.abs() < 1e-12 { 0.0 } else { wait },
            });
        }
        let roles = vec![Role::Alone; r.arc_path.len()];
        trucks.push(TruckSchedule {
            truck: ti,
            timings,
            roles,
        });
    }
    for groups in platoons.values() {
        for group in groups {
            if group.len() < 2 {
                continue;
            }
            // leader: smallest load at the arc tail, ties toward smaller id
            let leader = group
                .iter()
                .min_by(|a, b| {
                    a.load
                        .partial_cmp(&b.load)
                        .unwrap()
                        .then(a.truck.cmp(&b.truck))
                })
                .unwrap();
            for t in group {
                trucks[t.truck].roles[t.pos] = if t.truck == leader.truck && t.pos == leader.pos {
                    Role::Leader
                } else {
                    Role::FollowerOf(leader.truck)
                };
            }
        }
    }
    Schedule { trucks }
}

/// Fuel saved by platooning one group on one arc: every member but the
/// cheapest (the leader) saves `beta` of its base cost.
fn group_saving(group: &[Traversal], beta: f64) -> f64 {
    if group.len() < 2 {
        return 0.0;
    }
    let min_base = group
        .iter()
        .map(|t| t.base_cost)
        .fold(f64::INFINITY, f64::min);
    let total: f64 = group.iter().map(|t| t.base_cost).sum();
    beta * (total - min_base)
}

/// Earliest-start schedule with no platooning at all.
pub fn earliest_schedule(routes: &[RoutePlan], instance: &ProblemInstance) -> Result<Schedule> {
    let sys = TimingSystem::new(routes, instance)?;
    let classes = UnionFind::new(sys.n_vars);
    match sys.earliest(&classes) {
        Some(dep) => Ok(build_schedule(
            routes,
            instance,
            &sys,
            &dep,
            &BTreeMap::new(),
        )),
        None => Err(infeasibility(&sys, &classes)),
    }
}

fn infeasibility(sys: &TimingSystem, classes: &UnionFind) -> Error {
    match sys.first_violation(classes) {
        Some(node) => Error::Infeasible(format!(
            "customer {node} cannot be served inside its window"
        )),
        None => Error::Infeasible("incompatible departure synchronization".into()),
    }
}

/// Greedy platoon formation: process shared arcs in ascending earliest
/// departure, merge trucks whose feasible departure intervals at the arc
/// tail intersect (up to the platoon size cap), and keep a merge only if the
/// whole system stays feasible.
pub fn schedule_greedy(routes: &[RoutePlan], instance: &ProblemInstance) -> Result<Schedule> {
    let sys = TimingSystem::new(routes, instance)?;
    let mut classes = UnionFind::new(sys.n_vars);
    let mut dep = sys
        .earliest(&classes)
        .ok_or_else(|| infeasibility(&sys, &classes))?;
    let mut platoons: BTreeMap<(NodeId, NodeId), Vec<Vec<Traversal>>> = BTreeMap::new();

    if instance.params.beta > 0.0 && instance.params.max_platoon > 1 {
        let by_arc = shared_arcs(routes, instance);
        // ascending earliest departure at the tail, then arc id for ties
        let mut order: Vec<((NodeId, NodeId), f64)> = by_arc
            .iter()
            .map(|(&arc, ts)| {
                let lo = ts
                    .iter()
                    .map(|t| dep[sys.var(t.truck, t.pos)])
                    .fold(f64::INFINITY, f64::min);
                (arc, lo)
            })
            .collect();
        order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));

        for (arc, _) in order {
            let latest = sys.latest(&classes);
            let mut ts: Vec<(Traversal, f64, f64)> = by_arc[&arc]
                .iter()
                .map(|&t| {
                    let v = sys.var(t.truck, t.pos);
                    (t, dep[v], latest[v])
                })
                .collect();
            ts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.truck.cmp(&b.0.truck)));
            let mut idx = 0;
            while idx < ts.len() {
                // grow a group while intervals intersect and the cap allows
                let mut group = vec![ts[idx].0];
                let mut lo = ts[idx].1;
                let mut hi = ts[idx].2;
                let mut next = idx + 1;
                while next < ts.len() && group.len() < instance.params.max_platoon {
                    let cand_lo = lo.max(ts[next].1);
                    let cand_hi = hi.min(ts[next].2);
                    let same_truck = group.iter().any(|g| g.truck == ts[next].0.truck);
                    if cand_lo <= cand_hi + 1e-9 && !same_truck {
                        group.push(ts[next].0);
                        lo = cand_lo;
                        hi = cand_hi;
                        next += 1;
                    } else {
                        break;
                    }
                }
                if group.len() >= 2 {
                    let mut trial = classes.clone();
                    for pair in group.windows(2) {
                        trial.union(
                            sys.var(pair[0].truck, pair[0].pos),
                            sys.var(pair[1].truck, pair[1].pos),
                        );
                    }
                    match sys.earliest(&trial) {
                        Some(new_dep) => {
                            classes = trial;
                            dep = new_dep;
                            platoons.entry(arc).or_default().push(group.clone());
                        }
                        None => {} // rejected: would break a downstream window
                    }
                }
                idx = next.max(idx + 1);
            }
        }
    }
    Ok(build_schedule(routes, instance, &sys, &dep, &platoons))
}

/// Set partitions of `items` into blocks of size at most `cap`, emitted
/// deterministically.
fn partitions_with_cap(items: &[Traversal], cap: usize) -> Vec<Vec<Vec<Traversal>>> {
    fn go(
        rest: &[Traversal],
        cap: usize,
        current: &mut Vec<Vec<Traversal>>,
        out: &mut Vec<Vec<Vec<Traversal>>>,
    ) {
        if rest.is_empty() {
            out.push(current.clone());
            return;
        }
        let first = rest[0];
        let tail = &rest[1..];
        for bi in 0..current.len() {
            let same_truck = current[bi].iter().any(|t| t.truck == first.truck);
            if current[bi].len() < cap && !same_truck {
                current[bi].push(first);
                go(tail, cap, current, out);
                current[bi].pop();
            }
        }
        current.push(vec![first]);
        go(tail, cap, current, out);
        current.pop();
    }
    let mut out = Vec::new();
    go(items, cap, &mut Vec::new(), &mut out);
    out
}

/// Exact platoon scheduling by branch and bound over per-shared-arc platoon
/// partitions with interval propagation. Intended for small route sets; use
/// `schedule_auto` to fall back to the greedy scheduler beyond the limits.
pub fn schedule_exact(
    routes: &[RoutePlan],
    instance: &ProblemInstance,
    limits: &SchedulerLimits,
) -> Result<Schedule> {
    if routes.len() > limits.max_trucks {
        return Err(Error::SizeLimitExceeded(format!(
            "{} trucks exceeds the exact cap of {}",
            routes.len(),
            limits.max_trucks
        )));
    }
    let sys = TimingSystem::new(routes, instance)?;
    let base_classes = UnionFind::new(sys.n_vars);
    if sys.earliest(&base_classes).is_none() {
        return Err(infeasibility(&sys, &base_classes));
    }
    let by_arc = shared_arcs(routes, instance);
    if by_arc.len() > limits.max_shared_arcs {
        return Err(Error::SizeLimitExceeded(format!(
            "{} shared arcs exceeds the exact cap of {}",
            by_arc.len(),
            limits.max_shared_arcs
        )));
    }
    let beta = instance.params.beta;
    let cap = instance.params.max_platoon;

    // per-arc candidate partitions, each scored by its saving
    let mut arcs: Vec<((NodeId, NodeId), Vec<(f64, Vec<Vec<Traversal>>)>)> = Vec::new();
    for (&arc, ts) in &by_arc {
        let mut options: Vec<(f64, Vec<Vec<Traversal>>)> = partitions_with_cap(ts, cap)
            .into_iter()
            .map(|p| {
                let saving: f64 = p.iter().map(|g| group_saving(g, beta)).sum();
                (saving, p)
            })
            .collect();
        options.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        arcs.push((arc, options));
    }
    // branch on the most promising arcs first
    arcs.sort_by(|a, b| b.1[0].0.partial_cmp(&a.1[0].0).unwrap().then(a.0.cmp(&b.0)));
    let suffix_max: Vec<f64> = {
        let mut acc = vec![0.0; arcs.len() + 1];
        for i in (0..arcs.len()).rev() {
            acc[i] = acc[i + 1] + arcs[i].1[0].0;
        }
        acc
    };

    struct Search<'a> {
        sys: &'a TimingSystem,
        arcs: &'a [((NodeId, NodeId), Vec<(f64, Vec<Vec<Traversal>>)>)],
        suffix_max: &'a [f64],
        budget: usize,
        nodes: usize,
        best: f64,
        best_choice: Vec<usize>,
        exhausted: bool,
    }

    impl Search<'_> {
        fn run(&mut self, depth: usize, saving: f64, classes: &UnionFind, choice: &mut Vec<usize>) {
            self.nodes += 1;
            if self.nodes > self.budget {
                self.exhausted = true;
                return;
            }
            if depth == self.arcs.len() {
                if saving > self.best + 1e-12 {
                    self.best = saving;
                    self.best_choice = choice.clone();
                }
                return;
            }
            if saving + self.suffix_max[depth] <= self.best + 1e-12 {
                return; // bound
            }
            for (oi, (s, partition)) in self.arcs[depth].1.iter().enumerate() {
                if self.exhausted {
                    return;
                }
                let mut trial = classes.clone();
                let mut ok = true;
                for group in partition {
                    for pair in group.windows(2) {
                        trial.union(
                            self.sys.var(pair[0].truck, pair[0].pos),
                            self.sys.var(pair[1].truck, pair[1].pos),
                        );
                    }
                }
                if partition.iter().any(|g| g.len() >= 2) {
                    ok = self.sys.earliest(&trial).is_some();
                }
                if ok {
                    choice.push(oi);
                    self.run(depth + 1, saving + s, &trial, choice);
                    choice.pop();
                }
            }
        }
    }

    let mut search = Search {
        sys: &sys,
        arcs: &arcs,
        suffix_max: &suffix_max,
        budget: limits.node_budget,
        nodes: 0,
        best: -1.0,
        best_choice: Vec::new(),
        exhausted: false,
    };
    let mut choice = Vec::new();
    if beta > 0.0 && cap > 1 {
        search.run(0, 0.0, &base_classes, &mut choice);
    } else {
        search.best = 0.0;
    }
    if search.exhausted {
        return Err(Error::SizeLimitExceeded(format!(
            "branch-and-bound node budget of {} exhausted",
            limits.node_budget
        )));
    }

    // rebuild the winning configuration
    let mut classes = UnionFind::new(sys.n_vars);
    let mut platoons: BTreeMap<(NodeId, NodeId), Vec<Vec<Traversal>>> = BTreeMap::new();
    for (depth, &oi) in search.best_choice.iter().enumerate() {
        let (arc, ref options) = arcs[depth];
        let partition = &options[oi].1;
        for group in partition {
            if group.len() >= 2 {
                for pair in group.windows(2) {
                    classes.union(
                        sys.var(pair[0].truck, pair[0].pos),
                        sys.var(pair[1].truck, pair[1].pos),
                    );
                }
                platoons.entry(arc).or_default().push(group.clone());
            }
        }
    }
    let dep = sys
        .earliest(&classes)
        .expect("winning configuration was verified feasible");
    Ok(build_schedule(routes, instance, &sys, &dep, &platoons))
}

/// Exact scheduling when the instance is small enough, greedy otherwise.
/// The flag reports whether a fallback happened.
pub fn schedule_auto(
    routes: &[RoutePlan],
    instance: &ProblemInstance,
    limits: &SchedulerLimits,
) -> Result<(Schedule, bool)> {
    match schedule_exact(routes, instance, limits) {
        Ok(s) => Ok((s, false)),
        Err(Error::SizeLimitExceeded(_)) => schedule_greedy(routes, instance).map(|s| (s, true)),
        Err(e) => Err(e),
    }
}
