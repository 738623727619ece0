//! Fuel and weight arithmetic shared by the evaluator, heuristics and
//! schedulers.

use crate::instance::Parameters;
use crate::network::NodeId;
use serde::{Deserialize, Serialize};

/// Platoon role of one truck on one traversed arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alone,
    Leader,
    FollowerOf(usize),
}

impl Role {
    pub fn is_follower(&self) -> bool {
        matches!(self, Role::FollowerOf(_))
    }
}

/// Energy cost of one truck traversing an arc of `t` hours while carrying
/// `load` tons: `(alpha/gamma) * t * (eta*load + gamma)`, discounted by
/// `(1 - beta)` for followers.
pub fn arc_energy(t: f64, load: f64, role: Role, params: &Parameters) -> f64 {
    debug_assert!(load >= -1e-9 && load <= params.capacity + 1e-9);
    let base = params.alpha / params.gamma * t * (params.eta * load + params.gamma);
    if role.is_follower() {
        (1.0 - params.beta) * base
    } else {
        base
    }
}

/// One per-arc entry of the cost ledger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub truck: usize,
    pub arc: (NodeId, NodeId),
    pub role: Role,
    pub load: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub dispatch: f64,
    pub energy: f64,
    pub total: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ledger: Vec<LedgerEntry>,
}

impl CostBreakdown {
    pub fn new(dispatch: f64, ledger: Vec<LedgerEntry>, c2: f64) -> Self {
        let energy: f64 = ledger.iter().map(|e| e.cost).sum();
        CostBreakdown {
            dispatch,
            energy,
            total: dispatch + c2 * energy,
            ledger,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Parameters {
        Parameters::default()
    }

    #[test]
    fn full_load_rate_is_twenty_percent_higher() {
        // (eta*Q + gamma)/gamma = 1.2 at the defaults
        let e = arc_energy(1.0, 20.0, Role::Alone, &p());
        assert!((e - 36.84).abs() < 1e-9);
    }

    #[test]
    fn empty_truck_base_rate() {
        let e = arc_energy(1.0, 0.0, Role::Alone, &p());
        assert!((e - 30.7).abs() < 1e-9);
    }

    #[test]
    fn follower_discount() {
        let e = arc_energy(1.0, 0.0, Role::FollowerOf(0), &p());
        assert!((e - 27.63).abs() < 1e-9);
    }

    #[test]
    fn linear_in_time_and_load() {
        let params = p();
        let base = arc_energy(2.0, 8.0, Role::Alone, &params);
        assert!((arc_energy(4.0, 8.0, Role::Alone, &params) - 2.0 * base).abs() < 1e-9);
        let l0 = arc_energy(3.0, 0.0, Role::Alone, &params);
        let l1 = arc_energy(3.0, 1.0, Role::Alone, &params);
        let l2 = arc_energy(3.0, 2.0, Role::Alone, &params);
        assert!(((l2 - l1) - (l1 - l0)).abs() < 1e-9);
        let lead = arc_energy(5.0, 12.5, Role::Leader, &params);
        let follow = arc_energy(5.0, 12.5, Role::FollowerOf(3), &params);
        assert!((follow - (1.0 - params.beta) * lead).abs() < 1e-12);
    }

    #[test]
    fn breakdown_is_additive() {
        let ledger = vec![
            LedgerEntry {
                truck: 0,
                arc: (0, 1),
                role: Role::Alone,
                load: 5.0,
                cost: 10.0,
            },
            LedgerEntry {
                truck: 1,
                arc: (1, 0),
                role: Role::FollowerOf(0),
                load: 0.0,
                cost: 4.5,
            },
        ];
        let b = CostBreakdown::new(100.0, ledger, 1.0);
        assert_eq!(b.energy, 14.5);
        assert_eq!(b.total, 114.5);
    }
}
