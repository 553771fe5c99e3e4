use super::*;
use num_bigint::BigUint;
use proptest::prelude::*;

fn pq(id: BusId) -> Bus {
    Bus::new(id, BusKind::Pq).with_load(1.0, 0.5)
}

fn net_from(n: u32, edges: &[(u32, u32)]) -> Network {
    let mut buses = vec![Bus::new(1, BusKind::Slack)];
    buses.extend((2..=n).map(pq));
    let branches = edges
        .iter()
        .enumerate()
        .map(|(k, &(f, t))| Branch::new(k as u32 + 1, f, t, 0.01, 0.02))
        .collect();
    Network::new(buses, branches, 100.0).unwrap()
}

fn triangle() -> Network {
    net_from(3, &[(1, 2), (2, 3), (3, 1)])
}

/// Independent oracle: enumerate every (n-1)-subset of edges and keep the acyclic ones.
fn brute_force_trees(n: usize, edges: &[(usize, usize)]) -> u64 {
    fn rec(n: usize, edges: &[(usize, usize)], start: usize, chosen: &mut Vec<usize>, count: &mut u64) {
        if chosen.len() == n - 1 {
            let mut parent: Vec<usize> = (0..n).collect();
            fn root(p: &mut [usize], mut x: usize) -> usize {
                while p[x] != x {
                    x = p[x];
                }
                x
            }
            for &e in chosen.iter() {
                let (a, b) = (root(&mut parent, edges[e].0), root(&mut parent, edges[e].1));
                if a == b {
                    return;
                }
                parent[a] = b;
            }
            *count += 1;
            return;
        }
        for e in start..edges.len() {
            chosen.push(e);
            rec(n, edges, e + 1, chosen, count);
            chosen.pop();
        }
    }
    let mut count = 0;
    rec(n, edges, 0, &mut Vec::new(), &mut count);
    count
}

#[test]
fn smallest_valid_network() {
    let net = Network::new(
        vec![Bus::new(1, BusKind::Slack), pq(2)],
        vec![Branch::new(1, 1, 2, 0.01, 0.1)],
        100.0,
    )
    .unwrap();
    assert_eq!(net.branch_count(), 1);
    assert!(net.branches()[0].switchable);
}

#[test]
fn construction_errors() {
    let slack = Bus::new(1, BusKind::Slack);
    let err = Network::new(vec![slack.clone(), pq(2)], vec![Branch::new(1, 1, 99, 0.1, 0.1)], 100.0);
    assert_eq!(err.unwrap_err(), GridError::DanglingEndpoint { branch: 1, bus: 99 });

    let err = Network::new(vec![pq(1), pq(2)], vec![Branch::new(1, 1, 2, 0.1, 0.1)], 100.0);
    assert_eq!(err.unwrap_err(), GridError::NoSlack);

    let err = Network::new(
        vec![slack.clone(), Bus::new(2, BusKind::Slack)],
        vec![Branch::new(1, 1, 2, 0.1, 0.1)],
        100.0,
    );
    assert_eq!(err.unwrap_err(), GridError::MultipleSlack(vec![1, 2]));

    let err = Network::new(vec![slack.clone(), pq(1)], vec![Branch::new(1, 1, 1, 0.1, 0.1)], 100.0);
    assert!(matches!(err.unwrap_err(), GridError::DuplicateId { element: "bus", id: 1 }));

    let err = Network::new(
        vec![slack.clone(), pq(2), pq(3)],
        vec![Branch::new(1, 1, 2, 0.1, 0.1)],
        100.0,
    );
    assert_eq!(err.unwrap_err(), GridError::DisconnectedGraph);

    let err = Network::new(vec![slack.clone(), pq(2)], vec![], 100.0);
    assert_eq!(err.unwrap_err(), GridError::NoBranches);

    let err = Network::new(vec![slack, pq(2)], vec![Branch::new(1, 1, 2, 0.0, 0.0)], 100.0);
    assert!(matches!(err.unwrap_err(), GridError::InvalidBranch { id: 1, .. }));
}

#[test]
fn radiality_examples() {
    let tri = triangle();
    assert!(tri.is_radial(&Topology::new([3])).unwrap());
    assert!(!tri.is_radial(&Topology::default()).unwrap());
    let path = net_from(4, &[(1, 2), (2, 3), (3, 4)]);
    assert!(!path.is_radial(&Topology::new([2])).unwrap());
    assert_eq!(tri.is_radial(&Topology::new([7])), Err(GridError::UnknownSwitchId(7)));
}

#[test]
fn spanning_tree_counts_small() {
    let tree = net_from(5, &[(1, 2), (2, 3), (2, 4), (4, 5)]);
    assert_eq!(tree.count_spanning_trees(), BigUint::from(1u32));

    let k4_edges = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];
    let k4 = net_from(4, &k4_edges);
    let idx: Vec<(usize, usize)> = k4_edges.iter().map(|&(a, b)| (a as usize - 1, b as usize - 1)).collect();
    let oracle = brute_force_trees(4, &idx);
    assert_eq!(oracle, 16);
    assert_eq!(oracle, 4u64.pow(4 - 2));
    assert_eq!(k4.count_spanning_trees(), BigUint::from(16u32));
}

#[test]
fn parallel_branches_count_separately() {
    assert_eq!(spanning_tree_count(2, &[(0, 1), (1, 0), (0, 1)]), BigUint::from(3u32));
    assert_eq!(spanning_tree_count(3, &[(0, 1)]), BigUint::from(0u32));
}

#[test]
fn bridge_count_is_product_of_sides() {
    // K4 on {0..3}, a bridge 3-4, then a 5-cycle on {4..8}
    let mut edges = vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4)];
    edges.extend([(4, 5), (5, 6), (6, 7), (7, 8), (8, 4)]);
    let whole = spanning_tree_count(9, &edges);
    let left = spanning_tree_count(4, &edges[..6]);
    let right = spanning_tree_count(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
    assert_eq!(whole, left * right);
    assert_eq!(whole, BigUint::from(16u32 * 5));
}

#[test]
fn mst_examples() {
    let net = Network::new(
        vec![Bus::new(1, BusKind::Slack), pq(2), pq(3)],
        vec![
            Branch::new(1, 1, 2, 0.0, 1.0),
            Branch::new(2, 2, 3, 0.0, 2.0),
            Branch::new(3, 3, 1, 0.0, 3.0),
        ],
        100.0,
    )
    .unwrap();
    assert_eq!(net.impedance_mst().unwrap(), Topology::new([3]));

    // equal weights: branch-id order decides
    let ring = net_from(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]);
    let t1 = ring.minimum_spanning_tree(|_| 1.0).unwrap();
    let t2 = ring.minimum_spanning_tree(|_| 1.0).unwrap();
    assert_eq!(t1, Topology::new([4]));
    assert_eq!(t1, t2);
}

#[test]
fn fundamental_loop_examples() {
    let tri = triangle();
    let lp = tri.fundamental_loop(&Topology::new([3]), 3).unwrap();
    assert_eq!(lp[0], 3);
    let mut sorted = lp.clone();
    sorted.sort();
    assert_eq!(sorted, vec![1, 2, 3]);

    let ring = net_from(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]);
    let lp = ring.fundamental_loop(&Topology::new([2]), 2).unwrap();
    assert_eq!(lp, vec![2, 1, 4, 3]);

    assert_eq!(tri.fundamental_loop(&Topology::new([3]), 1), Err(GridError::SwitchNotOpen(1)));
    assert_eq!(tri.fundamental_loop(&Topology::default(), 1), Err(GridError::NotRadial));
}

/// Random connected multigraph: a random tree plus extra chords.
fn arb_graph() -> impl Strategy<Value = (u32, Vec<(u32, u32)>)> {
    (3u32..9).prop_flat_map(|n| {
        let tree = (2..=n).map(|v| (1..v).prop_map(move |u| (u, v))).collect::<Vec<_>>();
        let chords = prop::collection::vec((1..=n, 1..=n), 1..6);
        (Just(n), tree, chords).prop_map(|(n, tree, chords)| {
            let mut edges = tree;
            edges.extend(chords.into_iter().filter(|(a, b)| a != b));
            (n, edges)
        })
    })
}

proptest! {
    #[test]
    fn loop_exchange_preserves_radiality((n, edges) in arb_graph(), weight_seed in 0u64..1000) {
        let net = net_from(n, &edges);
        let topo = net
            .minimum_spanning_tree(|b| ((b.id as u64 * 2654435761 + weight_seed) % 97) as f64)
            .unwrap();
        prop_assert!(net.is_radial(&topo).unwrap());
        prop_assert_eq!(topo.len() + net.bus_count() - 1, net.branch_count());
        for &s in topo.open_switches() {
            let lp = net.fundamental_loop(&topo, s).unwrap();
            prop_assert_eq!(lp[0], s);
            for &b in &lp[1..] {
                prop_assert!(net.is_radial(&topo.exchange(s, b)).unwrap());
            }
            prop_assert_eq!(topo.exchange(s, s), topo.clone());
        }
    }

    #[test]
    fn count_matches_brute_force((n, edges) in arb_graph()) {
        let idx: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a as usize - 1, b as usize - 1)).collect();
        prop_assume!(idx.len() <= 14);
        let fast = spanning_tree_count(n as usize, &idx);
        prop_assert_eq!(fast, BigUint::from(brute_force_trees(n as usize, &idx)));
    }
}
