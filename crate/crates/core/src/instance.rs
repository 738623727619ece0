//! Problem instances: cost/physics parameters, customer demands, and the
//! JSON file format used by the CLI and the demo.

use crate::error::{Error, Result};
use crate::network::{Arc, DistMatrix, NodeId, RoadNetwork, DEPOT};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const DEFAULT_SPEED_KMH: f64 = 88.5;

/// Cost and physics parameters. Defaults follow the base experimental setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// fixed dispatch cost per truck leaving the depot ($)
    pub c1: f64,
    /// weight between dispatch and energy cost terms
    pub c2: f64,
    /// fuel cost per hour of an empty truck ($/h)
    pub alpha: f64,
    /// truck static weight (t)
    pub gamma: f64,
    /// marginal fuel coefficient per ton of load
    pub eta: f64,
    /// follower fuel saving ratio in [0, 1)
    pub beta: f64,
    /// maximum platoon size (>= 1)
    pub max_platoon: usize,
    /// truck capacity (t)
    pub capacity: f64,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            c1: 271.0,
            c2: 1.0,
            alpha: 30.7,
            gamma: 10.0,
            eta: 0.1,
            beta: 0.1,
            max_platoon: 4,
            capacity: 20.0,
        }
    }
}

impl Parameters {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InstanceInvalid(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if self.max_platoon < 1 {
            return Err(Error::InstanceInvalid("max_platoon must be >= 1".into()));
        }
        if !(self.capacity > 0.0) {
            return Err(Error::InstanceInvalid("capacity must be positive".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InstanceInvalid("gamma must be positive".into()));
        }
        if self.eta < 0.0 || self.c1 < 0.0 || self.c2 < 0.0 || self.alpha < 0.0 {
            return Err(Error::InstanceInvalid(
                "eta, c1, c2 and alpha must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One delivery demand with its service window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomerDemand {
    pub node: NodeId,
    /// demand size (t)
    pub q: f64,
    /// earliest arrival (h)
    pub t_ea: f64,
    /// latest departure (h)
    pub t_ld: f64,
}

/// A validated problem instance. Customer order is significant: the grouping
/// stage consumes customers in list order and the orchestrator perturbs that
/// order on infeasibility.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub network: RoadNetwork,
    pub customers: Vec<CustomerDemand>,
    pub params: Parameters,
    /// number of trucks available; defaults to the customer count
    pub fleet_size: usize,
}

impl ProblemInstance {
    pub fn new(
        network: RoadNetwork,
        customers: Vec<CustomerDemand>,
        params: Parameters,
        fleet_size: Option<usize>,
    ) -> Result<Self> {
        params.validate()?;
        let inst = ProblemInstance {
            fleet_size: fleet_size.unwrap_or(customers.len()),
            network,
            customers,
            params,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let declared: BTreeSet<NodeId> = self.network.customers().iter().copied().collect();
        let dist = self.network.all_pairs_shortest_paths()?;
        for c in &self.customers {
            if !declared.contains(&c.node) {
                return Err(Error::InstanceInvalid(format!(
                    "demand at node {} but the network does not declare it as a customer",
                    c.node
                )));
            }
            if !seen.insert(c.node) {
                return Err(Error::InstanceInvalid(format!(
                    "duplicate demand for node {}",
                    c.node
                )));
            }
            if !(c.q > 0.0) {
                return Err(Error::InstanceInvalid(format!(
                    "demand at node {} must be positive",
                    c.node
                )));
            }
            if c.q > self.params.capacity {
                return Err(Error::DemandExceedsCapacity {
                    node: c.node,
                    demand: c.q,
                    capacity: self.params.capacity,
                });
            }
            if c.t_ea < 0.0 || c.t_ld < c.t_ea {
                return Err(Error::InstanceInvalid(format!(
                    "window [{}, {}] at node {} is invalid",
                    c.t_ea, c.t_ld, c.node
                )));
            }
            if c.t_ld < dist.dist(DEPOT, c.node) {
                return Err(Error::InstanceInvalid(format!(
                    "node {} cannot be reached before its latest departure ({} < {})",
                    c.node,
                    c.t_ld,
                    dist.dist(DEPOT, c.node)
                )));
            }
        }
        for &node in &declared {
            if !seen.contains(&node) {
                return Err(Error::InstanceInvalid(format!(
                    "network declares customer {node} but no demand is given"
                )));
            }
        }
        if self.customers.is_empty() {
            return Err(Error::InstanceInvalid("instance has no customers".into()));
        }
        if self.fleet_size == 0 {
            return Err(Error::InstanceInvalid("fleet_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn demand_of(&self, node: NodeId) -> Option<&CustomerDemand> {
        self.customers.iter().find(|c| c.node == node)
    }

    /// Scheduling horizon constant: `max T_LD + t_max + 1`, large enough for
    /// the big-M constraints while keeping relaxations tight.
    pub fn big_m(&self, dist: &DistMatrix) -> f64 {
        let max_ld = self
            .customers
            .iter()
            .map(|c| c.t_ld)
            .fold(0.0_f64, f64::max);
        max_ld + dist.t_max() + 1.0
    }
}

// ---------------------------------------------------------------------------
// JSON instance file

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArcFile {
    from: NodeId,
    to: NodeId,
    #[serde(skip_serializing_if = "Option::is_none")]
    km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hours: Option<f64>,
    /// when true, also add the reversed arc with the same weight
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    bidirectional: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    c1: Option<f64>,
    c2: Option<f64>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    eta: Option<f64>,
    beta: Option<f64>,
    #[serde(rename = "L")]
    max_platoon: Option<usize>,
    #[serde(rename = "Q")]
    capacity: Option<f64>,
}

/// On-disk JSON schema. Distances may be given in kilometers (converted at
/// load using `speed_kmh`, default 88.5) or directly in hours; hours win when
/// both are present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub nodes: usize,
    arcs: Vec<ArcFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    speed_kmh: Option<f64>,
    #[serde(default)]
    depot: usize,
    customers: Vec<CustomerDemand>,
    #[serde(default)]
    params: ParamsFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    trucks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn into_instance(self) -> Result<ProblemInstance> {
        if self.depot != DEPOT {
            return Err(Error::InstanceInvalid(format!(
                "depot must be node 0, got {}",
                self.depot
            )));
        }
        let speed = self.speed_kmh.unwrap_or(DEFAULT_SPEED_KMH);
        if !(speed > 0.0) {
            return Err(Error::InstanceInvalid("speed_kmh must be positive".into()));
        }
        let mut arcs = Vec::new();
        for a in &self.arcs {
            let hours = match (a.hours, a.km) {
                (Some(h), _) => h,
                (None, Some(km)) => km / speed,
                (None, None) => {
                    return Err(Error::InstanceInvalid(format!(
                        "arc ({}, {}) needs either `hours` or `km`",
                        a.from, a.to
                    )))
                }
            };
            arcs.push(Arc {
                tail: a.from,
                head: a.to,
                travel_time: hours,
            });
            if a.bidirectional {
                arcs.push(Arc {
                    tail: a.to,
                    head: a.from,
                    travel_time: hours,
                });
            }
        }
        let defaults = Parameters::default();
        let p = &self.params;
        let params = Parameters {
            c1: p.c1.unwrap_or(defaults.c1),
            c2: p.c2.unwrap_or(defaults.c2),
            alpha: p.alpha.unwrap_or(defaults.alpha),
            gamma: p.gamma.unwrap_or(defaults.gamma),
            eta: p.eta.unwrap_or(defaults.eta),
            beta: p.beta.unwrap_or(defaults.beta),
            max_platoon: p.max_platoon.unwrap_or(defaults.max_platoon),
            capacity: p.capacity.unwrap_or(defaults.capacity),
        };
        let network = RoadNetwork::new(
            self.nodes,
            self.customers.iter().map(|c| c.node),
            arcs,
        )?;
        ProblemInstance::new(network, self.customers, params, self.trucks)
    }

    /// Lossless-enough export of an in-memory instance (always hours).
    pub fn from_instance(inst: &ProblemInstance, comment: Option<String>) -> Self {
        InstanceFile {
            nodes: inst.network.node_count(),
            arcs: inst
                .network
                .arcs()
                .iter()
                .map(|a| ArcFile {
                    from: a.tail,
                    to: a.head,
                    km: None,
                    hours: Some(a.travel_time),
                    bidirectional: false,
                })
                .collect(),
            speed_kmh: None,
            depot: DEPOT,
            customers: inst.customers.clone(),
            params: ParamsFile {
                c1: Some(inst.params.c1),
                c2: Some(inst.params.c2),
                alpha: Some(inst.params.alpha),
                gamma: Some(inst.params.gamma),
                eta: Some(inst.params.eta),
                beta: Some(inst.params.beta),
                max_platoon: Some(inst.params.max_platoon),
                capacity: Some(inst.params.capacity),
            },
            trucks: Some(inst.fleet_size),
            comment,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_base_setup() {
        let p = Parameters::default();
        assert_eq!(p.c1, 271.0);
        assert_eq!(p.c2, 1.0);
        assert_eq!(p.alpha, 30.7);
        assert_eq!(p.gamma, 10.0);
        assert_eq!(p.capacity, 20.0);
        assert_eq!(p.beta, 0.1);
        assert_eq!(p.max_platoon, 4);
        assert_eq!(p.eta, 0.1);
    }

    #[test]
    fn km_converted_at_default_speed() {
        let json = r#"{
            "nodes": 2,
            "arcs": [{"from": 0, "to": 1, "km": 177.0, "bidirectional": true}],
            "customers": [{"node": 1, "q": 5.0, "t_ea": 0.0, "t_ld": 30.0}]
        }"#;
        let inst = InstanceFile::from_json(json).unwrap().into_instance().unwrap();
        let t = inst.network.travel_time(0, 1).unwrap();
        assert!((t - 177.0 / 88.5).abs() < 1e-12);
    }

    #[test]
    fn hours_win_over_km() {
        let json = r#"{
            "nodes": 2,
            "arcs": [{"from": 0, "to": 1, "km": 500.0, "hours": 2.0, "bidirectional": true}],
            "customers": [{"node": 1, "q": 5.0, "t_ea": 0.0, "t_ld": 30.0}]
        }"#;
        let inst = InstanceFile::from_json(json).unwrap().into_instance().unwrap();
        assert_eq!(inst.network.travel_time(0, 1).unwrap(), 2.0);
    }

    #[test]
    fn rejects_unreachable_window() {
        let json = r#"{
            "nodes": 2,
            "arcs": [{"from": 0, "to": 1, "hours": 9.0, "bidirectional": true}],
            "customers": [{"node": 1, "q": 5.0, "t_ea": 0.0, "t_ld": 5.0}]
        }"#;
        let err = InstanceFile::from_json(json).unwrap().into_instance();
        assert!(err.is_err());
    }

    #[test]
    fn rejects_overweight_demand() {
        let json = r#"{
            "nodes": 2,
            "arcs": [{"from": 0, "to": 1, "hours": 1.0, "bidirectional": true}],
            "customers": [{"node": 1, "q": 25.0, "t_ea": 0.0, "t_ld": 30.0}]
        }"#;
        let err = InstanceFile::from_json(json).unwrap().into_instance();
        assert!(matches!(err, Err(Error::DemandExceedsCapacity { .. })));
    }

    #[test]
    fn instance_roundtrip() {
        let inst = crate::instances::toy_instance();
        let file = InstanceFile::from_instance(&inst, None);
        let back = InstanceFile::from_json(&file.to_json())
            .unwrap()
            .into_instance()
            .unwrap();
        assert_eq!(back.customers, inst.customers);
        assert_eq!(back.params, inst.params);
        assert_eq!(back.network.arcs().len(), inst.network.arcs().len());
    }
}
