mod common;

use common::{
    oracle_count_mismatches, oracle_counts, oracle_intervals, oracle_watchdogs, random_case, random_trace, rng,
    Classes,
};
use monforge::sim::{run, EventTrace, MonitorValue, SimOptions, TraceRecord};
use monforge::synth::{build_topology, RuleKind};
use rand::Rng;

#[derive(Default)]
struct Coverage {
    watchdog: usize,
    mismatch: usize,
    saturated: usize,
    intervals: usize,
}

fn check_against_oracles(seed: u64, len: usize, cov: &mut Coverage) {
    let mut r = rng(seed);
    let case = random_case(&mut r, Classes::Free);
    let t = case.topology();
    let gap = [0, 3, 50, 400][r.random_range(0..4)];
    let trace = random_trace(&mut r, &t, len, gap);
    let report = run(&t, &trace, &SimOptions::default()).unwrap();
    let horizon = report.horizon;

    for (id, want) in oracle_counts(&t, &trace) {
        let m = t.monitor(&id).unwrap();
        cov.saturated += usize::from(want == common::counter_max(m.width_bits));
        assert_eq!(report.monitors[&id], MonitorValue::Count { count: want }, "seed {seed} {id}");
    }
    for (id, want) in oracle_intervals(&t, &trace) {
        let MonitorValue::Timer { last_interval, .. } = report.monitors[&id] else { panic!() };
        assert_eq!(last_interval, want, "seed {seed} {id}");
        cov.intervals += usize::from(want.is_some());
    }
    let fired = |kind| {
        let mut v: Vec<(u64, String)> = report
            .interrupts
            .iter()
            .filter(|i| i.cause == kind)
            .map(|i| (i.cycle, i.rqm.clone()))
            .collect();
        v.sort();
        v
    };
    let (wd, cm) = (fired(RuleKind::ThresholdExceeded), fired(RuleKind::CountMismatch));
    assert_eq!(wd, oracle_watchdogs(&t, &trace, horizon), "seed {seed}");
    assert_eq!(cm, oracle_count_mismatches(&t, &trace, horizon), "seed {seed}");
    cov.watchdog += wd.len();
    cov.mismatch += cm.len();
}

#[test]
fn matches_brute_force_on_random_traces() {
    let mut cov = Coverage::default();
    for seed in 0..200 {
        check_against_oracles(seed, 1 + (seed as usize * 37) % 3000, &mut cov);
    }
    assert!(cov.watchdog > 0 && cov.mismatch > 0 && cov.saturated > 0 && cov.intervals > 0);
    eprintln!(
        "watchdog {} mismatch {} saturated {} intervals {}",
        cov.watchdog, cov.mismatch, cov.saturated, cov.intervals
    );
}

#[test]
fn shared_monitors_behave_like_private_copies() {
    for seed in 0..100 {
        let mut r = rng(1000 + seed);
        let case = random_case(&mut r, Classes::Free);
        let t = case.topology();
        let u = t.without_sharing();
        let trace = random_trace(&mut r, &t, 500, 20);
        let a = run(&t, &trace, &SimOptions::default()).unwrap();
        let b = run(&u, &trace, &SimOptions::default()).unwrap();
        assert_eq!(a.rqms, b.rqms, "seed {seed}");
        assert_eq!(a.interrupts, b.interrupts, "seed {seed}");
    }
}

#[test]
fn same_cycle_records_follow_file_order() {
    let p = common::zynq();
    let t = build_topology(&p, &common::library(&["RQM4"])).unwrap();
    let rec = |c, s: &str| TraceRecord {
        cycle: c,
        trigger: s.into(),
        payload: None,
    };
    // A restart and a stop at the deadline cycle both count as in time.
    let trace = EventTrace::new(vec![rec(0, "dma_start"), rec(1000, "dma_start"), rec(1000, "dma_done")]);
    assert!(run(&t, &trace, &SimOptions { horizon: Some(5000), ..Default::default() })
        .unwrap()
        .interrupts
        .is_empty());
    // Stop listed before the start of the same cycle is stray; the timer then runs out.
    let trace = EventTrace::new(vec![rec(10, "dma_done"), rec(10, "dma_start")]);
    let r = run(&t, &trace, &SimOptions { horizon: Some(5000), ..Default::default() }).unwrap();
    assert_eq!(r.interrupts.len(), 1);
    assert_eq!(r.interrupts[0].cycle, 1010);
    assert_eq!(r.stray_stops.len(), 1);
}

#[test]
fn repeated_runs_are_identical() {
    let mut r = rng(99);
    let case = random_case(&mut r, Classes::Free);
    let t = case.topology();
    let trace = random_trace(&mut r, &t, 2000, 30);
    let first = run(&t, &trace, &SimOptions::default()).unwrap().to_json();
    for _ in 0..3 {
        assert_eq!(run(&t, &trace, &SimOptions::default()).unwrap().to_json(), first);
    }
    let csv = trace.to_csv();
    assert_eq!(EventTrace::parse_csv(&csv).unwrap(), trace);
}
