use super::*;
use crate::builtin;
use crate::grid::{Branch, Bus, BusKind};

fn ieee14() -> Network {
    builtin::network("ieee14").unwrap()
}

fn bus_fault(ids: &[BusId]) -> Alert {
    Alert::fault(&Fault::buses(ids.iter().copied()))
}

fn single(net: Network, config: OrchestratorConfig) -> Orchestrator {
    let mut orch = Orchestrator::new(CaseBase::default(), config);
    orch.add_network(net);
    orch
}

fn autonomous() -> OrchestratorConfig {
    OrchestratorConfig {
        mode: Mode::Autonomous,
        ..Default::default()
    }
}

#[test]
fn search_then_reuse() {
    let mut orch = single(ieee14(), autonomous());
    let alert = bus_fault(&[9, 11]);
    let first = orch.handle_alert(&alert, None).unwrap();
    assert_eq!(first.source, PlanSource::Hatsga);
    assert_eq!(first.status, PlanStatus::Applied);
    assert_eq!(first.shed_buses, vec![10]);
    assert_eq!(orch.search_runs(), 1);
    assert_eq!(orch.cases().len(), 1);
    assert_eq!(first.predicted_quality.violation_count, 0);

    let second = orch.handle_alert(&alert, None).unwrap();
    assert_eq!(second.source, PlanSource::CbrReuse);
    let m = second.matched_case.unwrap();
    assert_eq!(m.similarity, 1.0);
    assert_eq!(second.proposal, first.proposal);
    assert!((second.predicted_loss - first.predicted_loss).abs() < 1e-9);
    assert_eq!(orch.search_runs(), 1);
    assert_eq!(orch.cases().len(), 1);
    assert_eq!(orch.cases().get(m.case_id).unwrap().occurrences, 2);
    assert_eq!(orch.state(1).unwrap().plan, Some(second.id));
    assert_eq!(orch.state(1).unwrap().fault, alert.elements());
}

#[test]
fn manual_plans_wait_for_approval() {
    let mut orch = single(ieee14(), OrchestratorConfig::default());
    let plan = orch.handle_alert(&bus_fault(&[12]), None).unwrap();
    assert_eq!(plan.status, PlanStatus::PendingApproval);
    assert!(orch.cases().is_empty());
    assert_eq!(orch.state(1).unwrap().plan, None);

    let applied = orch.approve(plan.id, true).unwrap();
    assert_eq!(applied.status, PlanStatus::Applied);
    assert_eq!(orch.cases().len(), 1);
    assert_eq!(applied.retained_case, Some(orch.cases().cases()[0].id));
    assert_eq!(orch.state(1).unwrap().plan, Some(plan.id));
    assert_eq!(
        orch.approve(plan.id, true),
        Err(OrchestratorError::NotPending {
            id: plan.id,
            status: PlanStatus::Applied
        })
    );
    assert_eq!(orch.approve(99, true), Err(OrchestratorError::UnknownPlan(99)));

    let other = orch.handle_alert(&bus_fault(&[14]), Some(Mode::Manual)).unwrap();
    let rejected = orch.approve(other.id, false).unwrap();
    assert_eq!(rejected.status, PlanStatus::Rejected);
    assert_eq!(orch.cases().len(), 1);
    assert_eq!(orch.plan(other.id).unwrap().status, PlanStatus::Rejected);
}

#[test]
fn bad_alerts() {
    let mut orch = single(ieee14(), autonomous());
    let empty = Alert::default();
    assert_eq!(orch.handle_alert(&empty, None).unwrap_err().code(), "InvalidAlert");
    assert_eq!(orch.handle_alert(&bus_fault(&[99]), None).unwrap_err().code(), "InvalidAlert");
    assert_eq!(orch.handle_alert(&bus_fault(&[1]), None).unwrap_err().code(), "Unrecoverable");
    // no spanning tree without bus 13 keeps every voltage in limits
    assert_eq!(orch.handle_alert(&bus_fault(&[13]), None).unwrap_err().code(), "Unrecoverable");
    assert!(orch.plans().next().is_none());
}

#[test]
fn non_fault_alerts_use_the_whole_network() {
    let mut orch = single(ieee14(), autonomous());
    let alert = Alert {
        kind: AlertKind::QualityViolation,
        ..Default::default()
    };
    let plan = orch.handle_alert(&alert, None).unwrap();
    assert_eq!(plan.source, PlanSource::Hatsga);
    let case = &orch.cases().cases()[0];
    assert_eq!(case.problem.kind, ProblemKind::QualityViolation);
    assert_eq!(case.state.active_buses.len(), 14);
}

#[test]
fn seeding_reports_failures() {
    let scenarios = [bus_fault(&[9]), bus_fault(&[1]), bus_fault(&[11]), bus_fault(&[9])];
    let (base, report) = seed_base(&ieee14(), &scenarios, &OrchestratorConfig::default());
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].code, "Unrecoverable");
    assert_eq!(report.retained.len(), 3);
    assert!(!report.retained[2].inserted);
    assert_eq!(base.len(), 2);

    let (base, report) = seed_base(&ieee14(), &[], &OrchestratorConfig::default());
    assert!(base.is_empty() && report.retained.is_empty() && report.skipped.is_empty());
}

#[test]
fn seeding_merges_duplicates() {
    let scenarios: Vec<Alert> = [1, 2, 3, 4, 5, 1, 2, 3, 4, 5]
        .into_iter()
        .map(|b| Alert::fault(&Fault::branches([b])))
        .collect();
    let (base, report) = seed_base(&ieee14(), &scenarios, &OrchestratorConfig::default());
    assert!(report.skipped.is_empty());
    assert_eq!(base.len(), 5);
    assert!(base.cases().iter().all(|c| c.occurrences == 2));
}

#[test]
fn alerts_address_networks() {
    let mut orch = Orchestrator::new(CaseBase::default(), autonomous());
    let a = orch.add_network(ieee14());
    let b = orch.add_network(line4());
    let alert = Alert::fault(&Fault::branches([2]));
    assert_eq!(orch.handle_alert(&alert, None).unwrap().network, b);
    let on_a = Alert {
        network: Some(a),
        ..alert.clone()
    };
    let plan = orch.handle_alert(&on_a, None).unwrap();
    assert_eq!(plan.network, a);
    assert_eq!(plan.source, PlanSource::Hatsga);
    assert_eq!(orch.state(a).unwrap().bus_count, 14);
    let lost = Alert {
        network: Some(7),
        ..alert
    };
    assert_eq!(orch.handle_alert(&lost, None), Err(OrchestratorError::UnknownNetwork(7)));
    assert_eq!(
        Orchestrator::new(CaseBase::default(), autonomous()).handle_alert(&on_a, None).unwrap_err().code(),
        "UnknownNetwork"
    );
}

#[test]
fn cancelled_search() {
    let net = ieee14();
    let base = CaseBase::default();
    let normal = Topology::default();
    let config = OrchestratorConfig::default();
    let planner = Planner {
        network_id: 1,
        network: &net,
        normal: &normal,
        cases: &base,
        config: &config,
    };
    let stop = AtomicBool::new(true);
    assert_eq!(planner.prepare(&bus_fault(&[9]), Some(&stop)).unwrap_err(), OrchestratorError::Cancelled);
}

/// slack 1 - 2 - 3 - 4, plus a tie 1 - 4 that is normally open.
fn line4() -> Network {
    let buses = vec![
        Bus::new(1, BusKind::Slack),
        Bus::new(2, BusKind::Pq).with_load(5.0, 1.0),
        Bus::new(3, BusKind::Pq).with_load(5.0, 1.0),
        Bus::new(4, BusKind::Pq).with_load(5.0, 1.0),
    ];
    let branches = vec![
        Branch::new(1, 1, 2, 0.01, 0.03),
        Branch::new(2, 2, 3, 0.01, 0.03),
        Branch::new(3, 3, 4, 0.01, 0.03),
        Branch::new(4, 1, 4, 0.01, 0.03),
    ];
    Network::new(buses, branches, 100.0).unwrap()
}

#[test]
fn degraded_state_counts_dark_buses() {
    let net = line4();
    let normal = Topology::new([4]);
    let healthy = degraded_attributes(&net, &normal, &Fault::default(), 0.05).unwrap();
    assert_eq!(healthy.violation_count, 0.0);
    assert!(healthy.loss_ratio > 0.0);

    // losing 2-3 leaves buses 3 and 4 unsupplied until the tie closes
    let cut = degraded_attributes(&net, &normal, &Fault::branches([2]), 0.05).unwrap();
    assert_eq!(cut.violation_count, 2.0);
    assert!(cut.profile_sum >= 2.0);

    // losing 1-2 leaves only the slack energized
    let cut = degraded_attributes(&net, &normal, &Fault::branches([1]), 0.05).unwrap();
    assert_eq!(cut, AttributeVector::new(0.0, 3.0, 3.0));
}

#[test]
fn tie_switch_restores_supply() {
    let net = line4();
    let mut orch = Orchestrator::new(CaseBase::default(), autonomous());
    orch.add_network_with_normal(net, Topology::new([4])).unwrap();
    let a = Alert::fault(&Fault::branches([2]));
    assert_eq!(orch.handle_alert(&a, None).unwrap().source, PlanSource::Hatsga);
    let plan = orch.handle_alert(&a, None).unwrap();
    assert_eq!(plan.source, PlanSource::CbrReuse);
    assert_eq!(plan.proposal, Topology::default());
}
