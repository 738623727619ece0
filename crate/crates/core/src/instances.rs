//! Built-in instances: the five-node illustration network, the 4x4 grid
//! benchmark, and a best-effort reconstruction of the Yangtze River Delta
//! highway network (transcribed from public maps; distances approximate).

use crate::instance::{CustomerDemand, Parameters, ProblemInstance, DEFAULT_SPEED_KMH};
use crate::network::{Arc, RoadNetwork};

fn bidi(edges: &[(usize, usize, f64)]) -> Vec<Arc> {
    let mut arcs = Vec::with_capacity(edges.len() * 2);
    for &(a, b, t) in edges {
        arcs.push(Arc {
            tail: a,
            head: b,
            travel_time: t,
        });
        arcs.push(Arc {
            tail: b,
            head: a,
            travel_time: t,
        });
    }
    arcs
}

/// Five-node illustration network: depot 0, customers 2 and 4, hub nodes 1
/// and 3. Each customer's demand equals the truck capacity, the energy rate
/// of an empty truck is 1 per hour (1.2 fully loaded) and dispatch cost is
/// zero, so totals are pure energy.
pub fn toy_instance() -> ProblemInstance {
    let edges = [
        (0usize, 1usize, 4.0f64),
        (1, 2, 2.2),
        (1, 4, 2.2),
        (0, 3, 4.0),
        (3, 2, 2.2),
        (3, 4, 2.2),
        (0, 2, 6.1),
        (0, 4, 6.1),
    ];
    let network = RoadNetwork::new(5, [2, 4], bidi(&edges)).unwrap();
    let params = Parameters {
        c1: 0.0,
        alpha: 1.0,
        ..Parameters::default()
    };
    let customers = vec![
        CustomerDemand {
            node: 2,
            q: 20.0,
            t_ea: 0.0,
            t_ld: 100.0,
        },
        CustomerDemand {
            node: 4,
            q: 20.0,
            t_ea: 0.0,
            t_ld: 100.0,
        },
    ];
    ProblemInstance::new(network, customers, params, None).unwrap()
}

/// 4x4 grid benchmark: fifteen lattice nodes (labels 1..15, row-major with
/// the top-left cell absent) around a central depot 0 linked to the four
/// inner nodes 5, 6, 9 and 10. Every edge takes 3 hours. Demands are in
/// `GRID_DEMANDS`; windows are [0, 36] everywhere.
pub fn grid_network(customers: impl IntoIterator<Item = usize>) -> RoadNetwork {
    // lattice coordinates: label l >= 1 sits at ((l) / 4, (l) % 4) .. shifted
    let coord = |l: usize| ((l) / 4, (l) % 4); // valid for 1..=15 (cell (0,0) absent)
    let mut edges = Vec::new();
    for a in 1..=15usize {
        for b in (a + 1)..=15usize {
            let (r1, c1) = coord(a);
            let (r2, c2) = coord(b);
            if r1.abs_diff(r2) + c1.abs_diff(c2) == 1 {
                edges.push((a, b, 3.0));
            }
        }
    }
    for hub in [5usize, 6, 9, 10] {
        edges.push((0, hub, 3.0));
    }
    RoadNetwork::new(16, customers, bidi(&edges)).unwrap()
}

/// Demands of the grid benchmark (node, tons).
pub const GRID_DEMANDS: [(usize, f64); 8] = [
    (12, 5.0),
    (5, 1.4),
    (1, 1.1),
    (2, 1.1),
    (6, 10.0),
    (10, 1.2),
    (14, 0.9),
    (13, 0.6),
];

/// Base fuel rate used by the grid benchmark: 50/3 $/h so one 3-hour edge
/// costs 50 for an empty truck.
pub const GRID_ALPHA: f64 = 50.0 / 3.0;

pub fn grid_instance() -> ProblemInstance {
    let customers: Vec<CustomerDemand> = GRID_DEMANDS
        .iter()
        .map(|&(node, q)| CustomerDemand {
            node,
            q,
            t_ea: 0.0,
            t_ld: 36.0,
        })
        .collect();
    let network = grid_network(customers.iter().map(|c| c.node));
    let params = Parameters {
        alpha: GRID_ALPHA,
        ..Parameters::default()
    };
    ProblemInstance::new(network, customers, params, None).unwrap()
}

/// Reconstructed Yangtze River Delta highway network: 38 city nodes with
/// approximate intercity road distances in kilometers, converted to hours at
/// the default truck speed. Node 0 (the depot) is Nanjing. This transcription
/// is best-effort; no published figures are asserted against it.
pub fn yangtze_edges_km() -> Vec<(usize, usize, f64)> {
    vec![
        (0, 1, 80.0),    // Nanjing - Zhenjiang
        (1, 2, 70.0),    // Zhenjiang - Changzhou
        (2, 3, 60.0),    // Changzhou - Wuxi
        (3, 4, 45.0),    // Wuxi - Suzhou
        (4, 5, 100.0),   // Suzhou - Shanghai
        (0, 6, 100.0),   // Nanjing - Yangzhou
        (1, 6, 60.0),    // Zhenjiang - Yangzhou
        (6, 7, 60.0),    // Yangzhou - Taizhou (JS)
        (7, 8, 130.0),   // Taizhou - Nantong
        (8, 5, 110.0),   // Nantong - Shanghai
        (6, 11, 150.0),  // Yangzhou - Huai'an
        (11, 12, 110.0), // Huai'an - Suqian
        (12, 13, 140.0), // Suqian - Xuzhou
        (13, 14, 210.0), // Xuzhou - Lianyungang
        (11, 14, 170.0), // Huai'an - Lianyungang
        (11, 9, 130.0),  // Huai'an - Yancheng
        (9, 14, 240.0),  // Yancheng - Lianyungang
        (9, 10, 60.0),   // Yancheng - Dongtai
        (10, 8, 140.0),  // Dongtai - Nantong
        (7, 10, 120.0),  // Taizhou - Dongtai
        (0, 15, 60.0),   // Nanjing - Chuzhou
        (15, 16, 130.0), // Chuzhou - Bengbu
        (16, 13, 180.0), // Bengbu - Xuzhou
        (16, 11, 160.0), // Bengbu - Huai'an
        (15, 17, 140.0), // Chuzhou - Hefei
        (0, 17, 160.0),  // Nanjing - Hefei
        (17, 19, 130.0), // Hefei - Wuhu
        (0, 18, 50.0),   // Nanjing - Ma'anshan
        (18, 19, 50.0),  // Ma'anshan - Wuhu
        (19, 20, 90.0),  // Wuhu - Tongling
        (20, 21, 70.0),  // Tongling - Chizhou
        (21, 22, 90.0),  // Chizhou - Anqing
        (17, 22, 180.0), // Hefei - Anqing
        (19, 23, 70.0),  // Wuhu - Xuancheng
        (23, 25, 160.0), // Xuancheng - Huzhou
        (23, 27, 190.0), // Xuancheng - Hangzhou
        (2, 24, 60.0),   // Changzhou - Yixing
        (3, 24, 50.0),   // Wuxi - Yixing
        (24, 25, 70.0),  // Yixing - Huzhou
        (25, 27, 90.0),  // Huzhou - Hangzhou
        (25, 26, 100.0), // Huzhou - Jiaxing
        (26, 5, 100.0),  // Jiaxing - Shanghai
        (26, 27, 90.0),  // Jiaxing - Hangzhou
        (4, 26, 80.0),   // Suzhou - Jiaxing
        (26, 37, 40.0),  // Jiaxing - Haining
        (37, 27, 60.0),  // Haining - Hangzhou
        (27, 28, 70.0),  // Hangzhou - Shaoxing
        (28, 29, 110.0), // Shaoxing - Ningbo
        (29, 30, 80.0),  // Ningbo - Zhoushan
        (27, 31, 110.0), // Hangzhou - Yiwu
        (28, 31, 90.0),  // Shaoxing - Yiwu
        (31, 32, 50.0),  // Yiwu - Jinhua
        (32, 33, 80.0),  // Jinhua - Quzhou
        (32, 34, 130.0), // Jinhua - Lishui
        (34, 35, 130.0), // Lishui - Wenzhou
        (29, 36, 150.0), // Ningbo - Taizhou (ZJ)
        (36, 35, 140.0), // Taizhou - Wenzhou
        (28, 36, 170.0), // Shaoxing - Taizhou
        (33, 34, 180.0), // Quzhou - Lishui
    ]
}

pub fn yangtze_city_names() -> [&'static str; 38] {
    [
        "Nanjing",
        "Zhenjiang",
        "Changzhou",
        "Wuxi",
        "Suzhou",
        "Shanghai",
        "Yangzhou",
        "Taizhou (JS)",
        "Nantong",
        "Yancheng",
        "Dongtai",
        "Huai'an",
        "Suqian",
        "Xuzhou",
        "Lianyungang",
        "Chuzhou",
        "Bengbu",
        "Hefei",
        "Ma'anshan",
        "Wuhu",
        "Tongling",
        "Chizhou",
        "Anqing",
        "Xuancheng",
        "Yixing",
        "Huzhou",
        "Jiaxing",
        "Hangzhou",
        "Shaoxing",
        "Ningbo",
        "Zhoushan",
        "Yiwu",
        "Jinhua",
        "Quzhou",
        "Lishui",
        "Wenzhou",
        "Taizhou (ZJ)",
        "Haining",
    ]
}

pub fn yangtze_network(customers: impl IntoIterator<Item = usize>) -> RoadNetwork {
    let arcs: Vec<Arc> = yangtze_edges_km()
        .into_iter()
        .flat_map(|(a, b, km)| {
            let t = km / DEFAULT_SPEED_KMH;
            [
                Arc {
                    tail: a,
                    head: b,
                    travel_time: t,
                },
                Arc {
                    tail: b,
                    head: a,
                    travel_time: t,
                },
            ]
        })
        .collect();
    RoadNetwork::new(38, customers, arcs).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::DEPOT;

    #[test]
    fn toy_geometry_matches_narrative() {
        let inst = toy_instance();
        let d = inst.network.all_pairs_shortest_paths().unwrap();
        assert!((d.dist(0, 2) - 6.1).abs() < 1e-12);
        assert!((d.dist(0, 4) - 6.1).abs() < 1e-12);
        assert!((inst.network.travel_time(0, 1).unwrap() - 4.0).abs() < 1e-12);
        assert!((inst.network.travel_time(1, 2).unwrap() - 2.2).abs() < 1e-12);
    }

    #[test]
    fn grid_is_connected_with_three_hour_edges() {
        let inst = grid_instance();
        let d = inst.network.all_pairs_shortest_paths().unwrap();
        // opposite lattice corners are six edges apart
        assert!((d.dist(3, 12) - 18.0).abs() < 1e-12);
        assert_eq!(d.t_max(), 18.0);
        for arc in inst.network.arcs() {
            assert_eq!(arc.travel_time, 3.0);
        }
        // depot neighbors the four inner nodes
        for hub in [5, 6, 9, 10] {
            assert!(inst.network.travel_time(DEPOT, hub).is_some());
        }
    }

    #[test]
    fn grid_corner_to_corner_under_uniform_costs() {
        let inst = grid_instance();
        let (path, cost) = inst
            .network
            .shortest_path_under(&inst.network.base_costs(), 3, 12)
            .unwrap();
        assert_eq!(path.len(), 6);
        assert!((cost - 18.0).abs() < 1e-12);
    }

    #[test]
    fn yangtze_reconstruction_is_connected() {
        let net = yangtze_network([5, 13, 27]);
        let d = net.all_pairs_shortest_paths().unwrap();
        assert_eq!(net.node_count(), 38);
        assert!(d.t_max() > 0.0);
        // Nanjing to Shanghai is around 300 km by road in this transcription
        let hours = d.dist(0, 5);
        assert!(hours * DEFAULT_SPEED_KMH > 250.0 && hours * DEFAULT_SPEED_KMH < 420.0);
    }
}
