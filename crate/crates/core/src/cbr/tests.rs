use proptest::prelude::*;

use super::*;
use crate::grid::{Branch, Bus, BusKind, Network, Topology};
use crate::hatsga::Fault;
use crate::powerflow::PowerFlowOptions;

fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

fn five_bus() -> Network {
    let mut buses = vec![Bus::new(1, BusKind::Slack)];
    buses.extend((2..=5).map(|id| Bus::new(id, BusKind::Pq).with_load(8.0, 3.0)));
    let branches = vec![
        Branch::new(1, 1, 2, 0.01, 0.03),
        Branch::new(2, 2, 3, 0.01, 0.03),
        Branch::new(3, 3, 4, 0.01, 0.03),
        Branch::new(4, 4, 5, 0.01, 0.03),
        Branch::new(5, 5, 1, 0.01, 0.03),
        Branch::new(6, 2, 4, 0.02, 0.06),
    ];
    Network::new(buses, branches, 100.0).unwrap()
}

fn case(id: CaseId, attrs: [f64; 3], kind: ProblemKind, state: NetworkState, solution: Topology) -> Case {
    Case {
        id,
        state,
        problem: Problem {
            kind,
            affected: Fault::default(),
        },
        attributes: AttributeVector::from_values(attrs),
        solution,
        loss: 1.0,
        quality: QualityMetrics::default(),
        occurrences: 1,
        last_used: 0,
    }
}

fn attr_case(id: CaseId, attrs: [f64; 3]) -> Case {
    case(id, attrs, ProblemKind::BusFault, NetworkState::of(&five_bus()), Topology::new([4, 6]))
}

fn attr_query(attrs: [f64; 3]) -> Query {
    Query {
        state: None,
        problem: None,
        attributes: AttributeVector::from_values(attrs),
    }
}

fn unit_ranges() -> Ranges {
    Ranges::default()
}

#[test]
fn local_similarity_examples() {
    assert_eq!(local_similarity(0.3, 0.3, 0.0, 1.0).unwrap(), 1.0);
    assert_eq!(local_similarity(2.0, 2.0, -5.0, 7.0).unwrap(), 1.0);
    assert_eq!(local_similarity(0.0, 1.0, 0.0, 1.0).unwrap(), 0.0);
    assert!(approx(local_similarity(0.02, 0.04, 0.0, 0.1).unwrap(), 0.8));
    // values outside the range are clamped first
    assert_eq!(local_similarity(-3.0, 5.0, 0.0, 1.0).unwrap(), 0.0);
    assert_eq!(
        local_similarity(0.1, 0.2, 1.0, 1.0),
        Err(CbrError::DegenerateRange { min: 1.0, max: 1.0 })
    );
}

#[test]
fn global_similarity_examples() {
    let r = unit_ranges();
    let v = AttributeVector::new(0.1, 0.5, 0.9);
    for mode in [SimilarityMode::WeightedMean, SimilarityMode::Euclidean] {
        assert_eq!(global_similarity(&v, &v, &r, &SimilarityWeights::new(3.0, 1.0, 0.5), mode).unwrap(), 1.0);
    }

    let q = AttributeVector::new(0.2, 0.0, 0.0);
    let c = AttributeVector::new(0.5, 1.0, 1.0);
    let only_first = SimilarityWeights::new(1.0, 0.0, 0.0);
    let g = global_similarity(&q, &c, &r, &only_first, SimilarityMode::WeightedMean).unwrap();
    assert!(approx(g, local_similarity(0.2, 0.5, 0.0, 1.0).unwrap()));

    // locals 0.9, 0.8, 1.0
    let q = AttributeVector::new(0.1, 0.2, 0.7);
    let c = AttributeVector::new(0.2, 0.4, 0.7);
    let g = global_similarity(&q, &c, &r, &SimilarityWeights::default(), SimilarityMode::WeightedMean).unwrap();
    assert!(approx(g, 0.9));

    // euclidean: 1 − sqrt(Σ w d²) with d = (0.1, 0.2, 0) and w = 1/3
    let e = global_similarity(&q, &c, &r, &SimilarityWeights::default(), SimilarityMode::Euclidean).unwrap();
    assert!(approx(e, 1.0 - (0.05f64 / 3.0).sqrt()));

    assert!(matches!(
        global_similarity(&q, &c, &r, &SimilarityWeights::new(0.0, 0.0, 0.0), SimilarityMode::WeightedMean),
        Err(CbrError::InvalidWeights(_))
    ));
    assert!(matches!(
        global_similarity(&q, &c, &r, &SimilarityWeights::new(-1.0, 1.0, 1.0), SimilarityMode::WeightedMean),
        Err(CbrError::InvalidWeights(_))
    ));
}

#[test]
fn named_attributes() {
    let mut m = BTreeMap::new();
    m.insert("pesoploss".to_string(), 0.1);
    m.insert("profile_sum".to_string(), 0.2);
    assert!(matches!(AttributeVector::from_named(&m), Err(CbrError::AttributeMismatch(_))));
    m.insert("pesoprofileVQtd".to_string(), 3.0);
    assert_eq!(AttributeVector::from_named(&m).unwrap(), AttributeVector::new(0.1, 0.2, 3.0));
    m.insert("loss_ratio".to_string(), 0.1);
    assert!(matches!(AttributeVector::from_named(&m), Err(CbrError::AttributeMismatch(_))));
    m.clear();
    m.insert("voltage".to_string(), 1.0);
    assert!(matches!(AttributeVector::from_named(&m), Err(CbrError::AttributeMismatch(_))));
}

#[test]
fn ranges_from_cases() {
    let vs = [AttributeVector::new(0.1, 2.0, 0.0), AttributeVector::new(0.3, 1.0, 0.0)];
    let r = Ranges::spanning(&vs);
    assert_eq!((r.0[0].min, r.0[0].max), (0.0, 0.3));
    assert_eq!(r.0[1].max, 2.0);
    assert_eq!(r.0[2].max, 1.0);
    assert_eq!(Ranges::spanning(&[]), Ranges::default());
}

#[test]
fn identical_query_ranks_first() {
    let cases = vec![attr_case(1, [0.5, 0.5, 0.5]), attr_case(2, [0.2, 0.3, 0.4])];
    let hits = retrieve(&cases, &unit_ranges(), &attr_query([0.2, 0.3, 0.4]), &RetrieveOptions::default()).unwrap();
    assert_eq!(hits[0], Scored { case_id: 2, similarity: 1.0 });
}

#[test]
fn threshold_filters() {
    // A differs by 0.15 on one attribute (0.95); B by 0.3 (0.90)
    let cases = vec![attr_case(1, [0.15, 0.0, 0.0]), attr_case(2, [0.3, 0.0, 0.0])];
    let query = attr_query([0.0, 0.0, 0.0]);
    let mut opts = RetrieveOptions::default();
    let hits = retrieve(&cases, &unit_ranges(), &query, &opts).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].case_id, 1);
    assert!(approx(hits[0].similarity, 0.95));
    opts.threshold = 0.0;
    let hits = retrieve(&cases, &unit_ranges(), &query, &opts).unwrap();
    assert!(approx(hits[1].similarity, 0.9));
}

#[test]
fn priority_reorders() {
    // case 1 close on loss and profile, far on violations; case 2 the reverse
    let cases = vec![attr_case(1, [0.0, 0.0, 0.6]), attr_case(2, [0.3, 0.3, 0.0])];
    let query = attr_query([0.0, 0.0, 0.0]);
    let mut opts = RetrieveOptions {
        threshold: 0.0,
        ..Default::default()
    };
    let equal: Vec<CaseId> = retrieve(&cases, &unit_ranges(), &query, &opts).unwrap().iter().map(|s| s.case_id).collect();
    assert_eq!(equal, vec![1, 2]);
    opts.weights = SimilarityWeights::new(1.0, 1.0, 10.0);
    let prio: Vec<CaseId> = retrieve(&cases, &unit_ranges(), &query, &opts).unwrap().iter().map(|s| s.case_id).collect();
    assert_eq!(prio, vec![2, 1]);
}

#[test]
fn ties_prefer_frequent_then_older() {
    let mut a = attr_case(5, [0.1, 0.1, 0.1]);
    let b = attr_case(3, [0.1, 0.1, 0.1]);
    let c = attr_case(4, [0.1, 0.1, 0.1]);
    a.occurrences = 2;
    let hits = retrieve(&[b, a, c], &unit_ranges(), &attr_query([0.1, 0.1, 0.1]), &RetrieveOptions::default()).unwrap();
    let ids: Vec<CaseId> = hits.iter().map(|s| s.case_id).collect();
    assert_eq!(ids, vec![5, 3, 4]);
    let limited = retrieve(
        &[attr_case(1, [0.0; 3]), attr_case(2, [0.0; 3])],
        &unit_ranges(),
        &attr_query([0.0; 3]),
        &RetrieveOptions {
            limit: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(limited.len(), 1);
}

#[test]
fn structural_filter() {
    let net = five_bus();
    let full = NetworkState::of(&net);
    let degraded = NetworkState::of(&crate::hatsga::apply_fault(&net, &Fault::branches([6])).unwrap().network);
    let cases = vec![
        case(1, [0.0; 3], ProblemKind::BusFault, full.clone(), Topology::new([4, 6])),
        case(2, [0.0; 3], ProblemKind::BranchFault, full.clone(), Topology::new([4, 6])),
        case(3, [0.0; 3], ProblemKind::BranchFault, degraded.clone(), Topology::new([4])),
    ];
    let mut query = Query {
        state: Some(degraded),
        problem: Some(Problem::from_fault(&Fault::branches([6]))),
        attributes: AttributeVector::default(),
    };
    let ids = |q: &Query| -> Vec<CaseId> {
        retrieve(&cases, &unit_ranges(), q, &RetrieveOptions::default()).unwrap().iter().map(|s| s.case_id).collect()
    };
    assert_eq!(ids(&query), vec![2, 3]);
    // a query on the intact network is not covered by a case missing branch 6
    query.state = Some(full);
    assert_eq!(ids(&query), vec![2]);
    query.problem = None;
    query.state = None;
    assert_eq!(ids(&query), vec![1, 2, 3]);
}

#[test]
fn adapt_identity() {
    let net = five_bus();
    let c = case(1, [0.0; 3], ProblemKind::BranchFault, NetworkState::of(&net), Topology::new([4, 6]));
    let a = adapt(&c, &net, &Fault::default()).unwrap();
    assert_eq!(a.topology, Topology::new([4, 6]));
    assert!(a.repairs.is_empty() && a.forced_open.is_empty() && a.opened.is_empty());
}

#[test]
fn adapt_forces_failed_branch_open_and_repairs() {
    let net = five_bus();
    // case feeds bus 4 through branch 3, which now fails
    let c = case(1, [0.0; 3], ProblemKind::BranchFault, NetworkState::of(&net), Topology::new([4, 6]));
    let a = adapt(&c, &net, &Fault::branches([3])).unwrap();
    assert_eq!(a.forced_open, vec![3]);
    assert_eq!(a.repairs, vec![4]);
    assert_eq!(a.topology, Topology::new([6]));
    assert!(a.network.is_radial(&a.topology).unwrap());
    let rev = revise(&a.network, &a.topology, 0.05, &PowerFlowOptions::default());
    assert!(rev.accepted);
}

#[test]
fn adapt_handles_foreign_state() {
    let net = five_bus();
    // branches unknown to the case start open and are closed only as repairs
    let state = NetworkState::of(&crate::hatsga::apply_fault(&net, &Fault::branches([6])).unwrap().network);
    let mut c = case(1, [0.0; 3], ProblemKind::BranchFault, state, Topology::new([4]));
    c.state.active_branches.retain(|b| b.id != 2);
    let a = adapt(&c, &net, &Fault::default()).unwrap();
    assert!(net.is_radial(&a.topology).unwrap());
}

#[test]
fn adapt_unrepairable() {
    let mut buses = vec![Bus::new(1, BusKind::Slack)];
    buses.extend((2..=4).map(|id| Bus::new(id, BusKind::Pq).with_load(1.0, 0.0)));
    let net = Network::new(
        buses,
        vec![
            Branch::new(1, 1, 2, 0.01, 0.03),
            Branch::new(2, 2, 3, 0.01, 0.03),
            Branch::new(3, 3, 1, 0.01, 0.03),
            Branch::new(4, 3, 4, 0.01, 0.03),
        ],
        100.0,
    )
    .unwrap();
    let c = case(1, [0.0; 3], ProblemKind::BranchFault, NetworkState::of(&net), Topology::new([3]));
    assert_eq!(adapt(&c, &net, &Fault::branches([4])), Err(CbrError::Unrepairable { bus: 4 }));
    assert!(matches!(adapt(&c, &net, &Fault::buses([77])), Err(CbrError::InvalidFault(_))));
}

#[test]
fn revise_rejects_bad_topologies() {
    let net = five_bus();
    assert!(revise(&net, &Topology::new([4, 6]), 0.05, &PowerFlowOptions::default()).accepted);
    assert!(!revise(&net, &Topology::new([6]), 0.05, &PowerFlowOptions::default()).accepted);

    // long feeder: the far bus sits more than 5% low
    let mut buses = vec![Bus::new(1, BusKind::Slack)];
    buses.extend((2..=3).map(|id| Bus::new(id, BusKind::Pq).with_load(60.0, 20.0)));
    let weak = Network::new(
        buses,
        vec![Branch::new(1, 1, 2, 0.02, 0.05), Branch::new(2, 2, 3, 0.02, 0.05), Branch::new(3, 3, 1, 0.02, 0.05)],
        100.0,
    )
    .unwrap();
    let r = revise(&weak, &Topology::new([3]), 0.05, &PowerFlowOptions::default());
    assert!(!r.accepted);
    assert!(r.quality.unwrap().violation_count > 0);

    let mut buses = vec![Bus::new(1, BusKind::Slack)];
    buses.push(Bus::new(2, BusKind::Pq).with_load(5000.0, 2000.0));
    let hopeless = Network::new(buses, vec![Branch::new(1, 1, 2, 0.05, 0.2)], 100.0).unwrap();
    let r = revise(&hopeless, &Topology::default(), 0.05, &PowerFlowOptions::default());
    assert!(!r.accepted);
    assert!(r.quality.is_none());
}

fn arb_vector() -> impl Strategy<Value = [f64; 3]> {
    [0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0]
}

proptest! {
    #[test]
    fn local_properties(t in -2.0f64..2.0, c in -2.0f64..2.0, lo in -1.0f64..0.5, width in 0.01f64..3.0) {
        let hi = lo + width;
        let s = local_similarity(t, c, lo, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, local_similarity(c, t, lo, hi).unwrap());
        prop_assert_eq!(local_similarity(t, t, lo, hi).unwrap(), 1.0);
    }

    #[test]
    fn global_in_unit_interval(q in arb_vector(), c in arb_vector(), w in [0.0f64..5.0, 0.0f64..5.0, 0.01f64..5.0], scale in 0.1f64..100.0) {
        let (q, c) = (AttributeVector::from_values(q), AttributeVector::from_values(c));
        let weights = SimilarityWeights::new(w[0], w[1], w[2]);
        let scaled = SimilarityWeights::new(w[0] * scale, w[1] * scale, w[2] * scale);
        for mode in [SimilarityMode::WeightedMean, SimilarityMode::Euclidean] {
            let g = global_similarity(&q, &c, &unit_ranges(), &weights, mode).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            let h = global_similarity(&q, &c, &unit_ranges(), &scaled, mode).unwrap();
            prop_assert!((g - h).abs() < 1e-12);
        }
    }

    #[test]
    fn retrieve_matches_rescoring(base in prop::collection::vec(arb_vector(), 0..60), q in arb_vector(), threshold in 0.5f64..1.0) {
        let cases: Vec<Case> = base.iter().enumerate().map(|(i, v)| attr_case(i as u64, *v)).collect();
        let ranges = Ranges::spanning(cases.iter().map(|c| &c.attributes));
        let opts = RetrieveOptions { threshold, limit: usize::MAX, ..Default::default() };
        let got = retrieve(&cases, &ranges, &attr_query(q), &opts).unwrap();
        let mut want: Vec<(f64, u64)> = cases
            .iter()
            .map(|c| (global_similarity(&AttributeVector::from_values(q), &c.attributes, &ranges, &opts.weights, opts.mode).unwrap(), c.id))
            .filter(|(s, _)| *s >= threshold)
            .collect();
        want.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert_eq!(g.case_id, w.1);
        }
    }
}
