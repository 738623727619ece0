//! Exact MILP formulation of the routing-with-platooning problem as an
//! abstract linear model, for export to external exact solvers.
//!
//! Variables (per truck k, arc (i,j), customer c):
//!   x_i_j_k   binary   truck k traverses (i,j)
//!   g_c_k     binary   truck k serves customer c
//!   l_i_j_k   binary   truck k leads a platoon on (i,j)
//!   f_i_j_a_b binary   truck b follows leader a on (i,j)
//!   y_i_k     >= 0     load of truck k at node i
//!   s_i_k     >= 0     arrival time of truck k at node i
//!   w_i_k     >= 0     wait of truck k at node i
//!   vl_i_j_k  >= 0     linearized leader weight term on (i,j)
//!   vf_i_j_k  >= 0     linearized follower weight term on (i,j)
//!
//! Constraint counts for |N| nodes, |A| arcs, |C| customers, |K| trucks and
//! |A'| arcs whose head is not the depot:
//!   flow balance + degree cap        2 * |N| * |K|
//!   single service                   |C|
//!   visit implies service            |C| * |K|
//!   initial load definition + cap    2 * |K|
//!   load propagation                 |A'| * |K|
//!   role exclusivity                 |A| * |K|
//!   platoon size                     |A| * |K|
//!   departure synchronization        2 * |A| * |K| * (|K| - 1)
//!   time propagation                 |A'| * |K|
//!   window bounds                    2 * |C| * |K|
//!   leader/follower linearization    6 * |A| * |K|

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::network::DEPOT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    pub obj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// (variable index, coefficient); indices refer to `MilpModel::vars`
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Minimization model with named variables and constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl MilpModel {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Objective value at a full assignment (one value per variable).
    pub fn objective_at(&self, assignment: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(assignment)
            .map(|(v, x)| v.obj * x)
            .sum()
    }

    /// All constraints and bounds satisfied at the assignment?
    pub fn feasible_at(&self, assignment: &[f64], tol: f64) -> bool {
        if assignment.len() != self.vars.len() {
            return false;
        }
        for (v, &x) in self.vars.iter().zip(assignment) {
            if x < v.lb - tol || x > v.ub + tol {
                return false;
            }
            if v.kind == VarKind::Binary && (x - x.round()).abs() > tol {
                return false;
            }
        }
        self.constraints.iter().all(|c| {
            let lhs: f64 = c.terms.iter().map(|&(vi, coef)| coef * assignment[vi]).sum();
            match c.sense {
                Sense::Le => lhs <= c.rhs + tol,
                Sense::Ge => lhs >= c.rhs - tol,
                Sense::Eq => (lhs - c.rhs).abs() <= tol,
            }
        })
    }
}

struct Builder {
    model: MilpModel,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64, obj: f64) -> usize {
        self.model.vars.push(Variable {
            name,
            kind,
            lb,
            ub,
            obj,
        });
        self.model.vars.len() - 1
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.model.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs,
        });
    }
}

/// Builds the full linearized model. The fleet defaults to one truck per
/// customer, which always admits a feasible solution.
pub fn build_full_model(instance: &ProblemInstance, trucks: Option<usize>) -> Result<MilpModel> {
    instance.validate()?;
    let net = &instance.network;
    let p = &instance.params;
    let dist = net.all_pairs_shortest_paths()?;
    let big_m = instance.big_m(&dist);
    let n_trucks = trucks.unwrap_or(instance.customers.len());
    if n_trucks == 0 {
        return Err(Error::InstanceInvalid("need at least one truck".into()));
    }
    let arcs = net.arcs();
    let nodes = net.node_count();
    let custs = &instance.customers;
    let wmax = p.eta * p.capacity + p.gamma;

    let mut b = Builder {
        model: MilpModel {
            name: "rcvrptw_tp".into(),
            vars: Vec::new(),
            constraints: Vec::new(),
        },
    };

    // --- variables
    let mut x = vec![vec![0usize; n_trucks]; arcs.len()];
    let mut l = vec![vec![0usize; n_trucks]; arcs.len()];
    let mut vl = vec![vec![0usize; n_trucks]; arcs.len()];
    let mut vf = vec![vec![0usize; n_trucks]; arcs.len()];
    let mut f = vec![vec![vec![usize::MAX; n_trucks]; n_trucks]; arcs.len()];
    for (ai, arc) in arcs.iter().enumerate() {
        let energy = p.c2 * p.alpha / p.gamma * arc.travel_time;
        for k in 0..n_trucks {
            let dispatch = if arc.tail == DEPOT { p.c1 } else { 0.0 };
            x[ai][k] = b.var(
                format!("x_{}_{}_{}", arc.tail, arc.head, k),
                VarKind::Binary,
                0.0,
                1.0,
                dispatch,
            );
        }
        for k in 0..n_trucks {
            l[ai][k] = b.var(
                format!("l_{}_{}_{}", arc.tail, arc.head, k),
                VarKind::Binary,
                0.0,
                1.0,
                0.0,
            );
        }
        for k1 in 0..n_trucks {
            for k2 in 0..n_trucks {
                if k1 != k2 {
                    f[ai][k1][k2] = b.var(
                        format!("f_{}_{}_{}_{}", arc.tail, arc.head, k1, k2),
                        VarKind::Binary,
                        0.0,
                        1.0,
                        0.0,
                    );
                }
            }
        }
        for k in 0..n_trucks {
            vl[ai][k] = b.var(
                format!("vl_{}_{}_{}", arc.tail, arc.head, k),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                energy,
            );
            vf[ai][k] = b.var(
                format!("vf_{}_{}_{}", arc.tail, arc.head, k),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                energy * (1.0 - p.beta),
            );
        }
    }
    let mut g = vec![vec![0usize; n_trucks]; custs.len()];
    for (ci, c) in custs.iter().enumerate() {
        for k in 0..n_trucks {
            g[ci][k] = b.var(
                format!("g_{}_{}", c.node, k),
                VarKind::Binary,
                0.0,
                1.0,
                0.0,
            );
        }
    }
    let mut y = vec![vec![0usize; n_trucks]; nodes];
    let mut s = vec![vec![0usize; n_trucks]; nodes];
    let mut w = vec![vec![0usize; n_trucks]; nodes];
    for i in 0..nodes {
        for k in 0..n_trucks {
            y[i][k] = b.var(
                format!("y_{i}_{k}"),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                0.0,
            );
            s[i][k] = b.var(
                format!("s_{i}_{k}"),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                0.0,
            );
            w[i][k] = b.var(
                format!("w_{i}_{k}"),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                0.0,
            );
        }
    }

    // --- flow conservation: inflow == outflow and inflow <= 1 per node/truck
    for j in 0..nodes {
        for k in 0..n_trucks {
            let mut terms = Vec::new();
            for (ai, arc) in arcs.iter().enumerate() {
                if arc.head == j {
                    terms.push((x[ai][k], 1.0));
                } else if arc.tail == j {
                    terms.push((x[ai][k], -1.0));
                }
            }
            b.row(format!("flow_{j}_{k}"), terms, Sense::Eq, 0.0);
            let inflow: Vec<(usize, f64)> = arcs
                .iter()
                .enumerate()
                .filter(|(_, a)| a.head == j)
                .map(|(ai, _)| (x[ai][k], 1.0))
                .collect();
            b.row(format!("deg_{j}_{k}"), inflow, Sense::Le, 1.0);
        }
    }
    // --- single service and visit-implies-service
    for (ci, c) in custs.iter().enumerate() {
        let terms: Vec<(usize, f64)> = (0..n_trucks).map(|k| (g[ci][k], 1.0)).collect();
        b.row(format!("serve_{}", c.node), terms, Sense::Eq, 1.0);
        for k in 0..n_trucks {
            let mut terms = vec![(g[ci][k], 1.0)];
            for (ai, arc) in arcs.iter().enumerate() {
                if arc.head == c.node {
                    terms.push((x[ai][k], -1.0));
                }
            }
            b.row(format!("visit_{}_{}", c.node, k), terms, Sense::Le, 0.0);
        }
    }
    // --- volume: initial load equals assigned demand and fits the capacity
    for k in 0..n_trucks {
        let mut terms = vec![(y[DEPOT][k], 1.0)];
        for (ci, c) in custs.iter().enumerate() {
            terms.push((g[ci][k], -c.q));
        }
        b.row(format!("load0_{k}"), terms, Sense::Eq, 0.0);
        b.row(
            format!("cap_{k}"),
            vec![(y[DEPOT][k], 1.0)],
            Sense::Le,
            p.capacity,
        );
    }
    // --- load propagation along used arcs. The printed constraint only
    // upper-bounds the downstream load, which would let a minimizer zero
    // every load; we emit the reversed inequality so the load at each arc
    // tail is pinned to the true remaining cargo:
    //   y_j >= y_i - q_j*g_j - M*(1 - x_ij)
    for (ai, arc) in arcs.iter().enumerate() {
        if arc.head == DEPOT {
            continue;
        }
        for k in 0..n_trucks {
            let mut terms = vec![(y[arc.head][k], 1.0), (y[arc.tail][k], -1.0)];
            if let Some(ci) = custs.iter().position(|c| c.node == arc.head) {
                terms.push((g[ci][k], custs[ci].q));
            }
            terms.push((x[ai][k], -big_m));
            b.row(
                format!("vol_{}_{}_{}", arc.tail, arc.head, k),
                terms,
                Sense::Ge,
                -big_m,
            );
        }
    }
    // --- platooning: role exclusivity and platoon size
    for (ai, arc) in arcs.iter().enumerate() {
        for k in 0..n_trucks {
            let mut terms = vec![(x[ai][k], 1.0), (l[ai][k], -1.0)];
            for k1 in 0..n_trucks {
                if k1 != k {
                    terms.push((f[ai][k1][k], -1.0));
                }
            }
            b.row(
                format!("role_{}_{}_{}", arc.tail, arc.head, k),
                terms,
                Sense::Eq,
                0.0,
            );
            let mut terms = vec![(l[ai][k], -(p.max_platoon as f64 - 1.0))];
            for k2 in 0..n_trucks {
                if k2 != k {
                    terms.push((f[ai][k][k2], 1.0));
                }
            }
            b.row(
                format!("size_{}_{}_{}", arc.tail, arc.head, k),
                terms,
                Sense::Le,
                0.0,
            );
        }
    }
    // --- synchronized departures for platoon members
    for (ai, arc) in arcs.iter().enumerate() {
        for k1 in 0..n_trucks {
            for k2 in 0..n_trucks {
                if k1 == k2 {
                    continue;
                }
                let dep_diff = |b: &mut Builder, name: String, sign: f64| {
                    let terms = vec![
                        (s[arc.tail][k1], sign),
                        (w[arc.tail][k1], sign),
                        (s[arc.tail][k2], -sign),
                        (w[arc.tail][k2], -sign),
                        (f[ai][k1][k2], big_m),
                    ];
                    b.row(name, terms, Sense::Le, big_m);
                };
                dep_diff(
                    &mut b,
                    format!("sync_{}_{}_{}_{}_a", arc.tail, arc.head, k1, k2),
                    1.0,
                );
                dep_diff(
                    &mut b,
                    format!("sync_{}_{}_{}_{}_b", arc.tail, arc.head, k1, k2),
                    -1.0,
                );
            }
        }
    }
    // --- time propagation along used arcs (heads other than the depot)
    for (ai, arc) in arcs.iter().enumerate() {
        if arc.head == DEPOT {
            continue;
        }
        for k in 0..n_trucks {
            let terms = vec![
                (s[arc.tail][k], 1.0),
                (w[arc.tail][k], 1.0),
                (s[arc.head][k], -1.0),
                (x[ai][k], big_m),
            ];
            b.row(
                format!("time_{}_{}_{}", arc.tail, arc.head, k),
                terms,
                Sense::Le,
                big_m - arc.travel_time,
            );
        }
    }
    // --- service windows. The arrival bound follows the printed form; the
    // departure bound gets a big-M escape for non-serving trucks so that
    // passing through a customer node unserved stays feasible.
    for (ci, c) in custs.iter().enumerate() {
        for k in 0..n_trucks {
            b.row(
                format!("ea_{}_{}", c.node, k),
                vec![(g[ci][k], c.t_ea), (s[c.node][k], -1.0)],
                Sense::Le,
                0.0,
            );
            b.row(
                format!("ld_{}_{}", c.node, k),
                vec![
                    (s[c.node][k], 1.0),
                    (w[c.node][k], 1.0),
                    (g[ci][k], big_m - c.t_ld),
                ],
                Sense::Le,
                big_m,
            );
        }
    }
    // --- linearization of the leader and follower weight terms
    for (ai, arc) in arcs.iter().enumerate() {
        for k in 0..n_trucks {
            let tag = format!("{}_{}_{}", arc.tail, arc.head, k);
            b.row(
                format!("vlc_{tag}"),
                vec![(vl[ai][k], 1.0), (l[ai][k], -wmax)],
                Sense::Le,
                0.0,
            );
            b.row(
                format!("vly_{tag}"),
                vec![(vl[ai][k], 1.0), (y[arc.tail][k], -p.eta)],
                Sense::Le,
                p.gamma,
            );
            b.row(
                format!("vlg_{tag}"),
                vec![
                    (vl[ai][k], 1.0),
                    (y[arc.tail][k], -p.eta),
                    (l[ai][k], -wmax),
                ],
                Sense::Ge,
                p.gamma - wmax,
            );
            let mut fsum: Vec<(usize, f64)> = Vec::new();
            for k1 in 0..n_trucks {
                if k1 != k {
                    fsum.push((f[ai][k1][k], 1.0));
                }
            }
            let mut terms = vec![(vf[ai][k], 1.0)];
            terms.extend(fsum.iter().map(|&(v, _)| (v, -wmax)));
            b.row(format!("vfc_{tag}"), terms, Sense::Le, 0.0);
            b.row(
                format!("vfy_{tag}"),
                vec![(vf[ai][k], 1.0), (y[arc.tail][k], -p.eta)],
                Sense::Le,
                p.gamma,
            );
            let mut terms = vec![(vf[ai][k], 1.0), (y[arc.tail][k], -p.eta)];
            terms.extend(fsum.iter().map(|&(v, _)| (v, -wmax)));
            b.row(format!("vfg_{tag}"), terms, Sense::Ge, p.gamma - wmax);
        }
    }

    Ok(b.model)
}

/// Closed-form variable and constraint counts for a given instance shape.
pub fn expected_counts(instance: &ProblemInstance, trucks: Option<usize>) -> (usize, usize) {
    let a = instance.network.arcs().len();
    let n = instance.network.node_count();
    let c = instance.customers.len();
    let k = trucks.unwrap_or(c);
    let a_nondepot = instance
        .network
        .arcs()
        .iter()
        .filter(|arc| arc.head != DEPOT)
        .count();
    let vars = a * k // x
        + a * k // l
        + a * k * (k - 1) // f
        + 2 * a * k // vl, vf
        + c * k // g
        + 3 * n * k; // y, s, w
    let cons = 2 * n * k // flow + degree
        + c // serve
        + c * k // visit
        + 2 * k // load0 + cap
        + a_nondepot * k // vol
        + 2 * a * k // role + size
        + 2 * a * k * (k - 1) // sync
        + a_nondepot * k // time
        + 2 * c * k // ea + ld
        + 6 * a * k; // linearization
    (vars, cons)
}
