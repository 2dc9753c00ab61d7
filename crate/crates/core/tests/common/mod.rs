//! Random inputs and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use monforge::model::{
    parse_platform, parse_rqms, ComponentKind, MetricKind, MonitorKind, PlatformModel, Role, RqmClass, RqmSpec,
};
use monforge::sim::{EventTrace, TraceRecord};
use monforge::synth::{build_topology, MonitoringTopology, RuleKind};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde_json::{json, Value};

pub const SAMPLES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../samples");

pub fn sample(name: &str) -> String {
    std::fs::read_to_string(format!("{SAMPLES}/{name}")).unwrap()
}

pub fn zynq() -> PlatformModel {
    parse_platform(&sample("zynq.json")).unwrap()
}

pub fn library(ids: &[&str]) -> Vec<RqmSpec> {
    let all = parse_rqms(&sample("rqms_all.json"), &zynq()).unwrap();
    ids.iter().map(|id| all.iter().find(|r| r.id == *id).unwrap().clone()).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SIGNALS: [&str; 5] = ["start", "done", "beat", "err", "req"];

fn subset<T: Copy>(rng: &mut ChaCha8Rng, items: &[T], p: f64) -> Vec<T> {
    items.iter().copied().filter(|_| rng.random_bool(p)).collect()
}

/// A connected platform of 1..=6 components with random trigger points.
pub fn platform_json(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=6);
    let kinds: Vec<ComponentKind> = (0..n).map(|_| *ComponentKind::ALL.choose(rng).unwrap()).collect();
    let ids: Vec<String> = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| format!("{}{i}", k.as_str().to_lowercase()))
        .collect();
    let mut links = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        links.push(json!([ids[i], ids[j]]));
    }
    for _ in 0..rng.random_range(0..=2) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let pair = json!([ids[a], ids[b]]);
        if a != b && !links.contains(&pair) && !links.contains(&json!([ids[b], ids[a]])) {
            links.push(pair);
        }
    }
    let mut tps = Vec::new();
    for id in &ids {
        for sig in subset(rng, &SIGNALS, 0.6) {
            let mut classes: Vec<&str> = subset(rng, &RqmClass::ALL, 0.5).iter().map(|c| c.as_str()).collect();
            if classes.is_empty() || rng.random_bool(0.5) {
                classes.push("MDBG");
                classes.push("MPF");
                classes.sort();
                classes.dedup();
            }
            tps.push(json!({"id": format!("{id}_{sig}"), "location": id, "signal": sig, "classes": classes}));
        }
    }
    let comps: Vec<Value> = ids
        .iter()
        .zip(&kinds)
        .map(|(id, k)| json!({"id": id, "kind": k.as_str()}))
        .collect();
    let doc = json!({"platform": {"name": format!("rand{}", rng.random_range(0..1000)), "components": comps, "links": links, "trigger_points": tps}});
    serde_json::to_string_pretty(&doc).unwrap()
}

/// How classes are drawn for random RQMs.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Classes {
    /// Any class with any metric.
    Free,
    /// Reacting metrics (Watchdog, FaultCheck) are always MDBG, as in the
    /// default library.
    Library,
}

fn random_requirement(rng: &mut ChaCha8Rng, platform: &PlatformModel) -> Value {
    let location = if rng.random_bool(0.5) {
        platform.components.choose(rng).unwrap().id.clone()
    } else {
        Role::ALL.choose(rng).unwrap().as_str().to_string()
    };
    let width = *[1u32, 8, 10, 16, 32, 64, rng.random_range(1..=64)].choose(rng).unwrap();
    if rng.random_bool(0.6) {
        json!({"location": location, "monitor_kind": "EVMON", "width_bits": width,
               "programmable": rng.random_bool(0.3), "signal": SIGNALS.choose(rng).unwrap()})
    } else {
        let mut sigs = SIGNALS.to_vec();
        sigs.shuffle(rng);
        json!({"location": location, "monitor_kind": "TMON", "width_bits": width,
               "signal": sigs[0], "stop_signal": sigs[1]})
    }
}

fn random_rqm(rng: &mut ChaCha8Rng, platform: &PlatformModel, id: &str, classes: Classes) -> Value {
    let metric = *MetricKind::ALL.choose(rng).unwrap();
    let class = match (classes, metric) {
        (Classes::Library, MetricKind::Watchdog | MetricKind::FaultCheck) => RqmClass::MDBG,
        _ if rng.random_bool(0.4) => *[RqmClass::MDBG, RqmClass::MPF].choose(rng).unwrap(),
        _ => *RqmClass::ALL.choose(rng).unwrap(),
    };
    let target = &platform.components.choose(rng).unwrap().id;
    let mut params = serde_json::Map::new();
    match metric {
        MetricKind::FaultCheck => {
            params.insert("scope".into(), json!(["transfer", "compute"].choose(rng).unwrap()));
            params.insert("expected_count".into(), json!(rng.random_range(0..50)));
        }
        MetricKind::Watchdog => {
            params.insert("threshold_cycles".into(), json!(rng.random_range(1..400)));
        }
        _ => {}
    }
    let mut rqm = json!({"id": id, "class": class.as_str(), "target": target, "metric": metric.as_str(), "params": params});
    if metric == MetricKind::EventCount || rng.random_bool(0.4) {
        let n = rng.random_range(1..=2);
        let reqs: Vec<Value> = (0..n).map(|_| random_requirement(rng, platform)).collect();
        rqm["requirement"] = json!(reqs);
    }
    rqm
}

/// Up to `max` RQMs that each synthesize on `platform`; may be empty if
/// the platform offers little to monitor.
pub fn rqms_json(rng: &mut ChaCha8Rng, platform: &PlatformModel, max: usize, classes: Classes) -> String {
    let want = rng.random_range(1..=max);
    let mut kept: Vec<Value> = Vec::new();
    for attempt in 0..want * 20 {
        if kept.len() == want {
            break;
        }
        let rqm = random_rqm(rng, platform, &format!("R{attempt:03}"), classes);
        let single = json!({"rqms": [rqm.clone()]}).to_string();
        let ok = parse_rqms(&single, platform).is_ok_and(|r| build_topology(platform, &r).is_ok());
        if ok {
            kept.push(rqm);
        }
    }
    kept.shuffle(rng);
    serde_json::to_string_pretty(&json!({"rqms": kept})).unwrap()
}

pub struct Case {
    pub platform_json: String,
    pub rqms_json: String,
    pub platform: PlatformModel,
    pub rqms: Vec<RqmSpec>,
}

impl Case {
    pub fn topology(&self) -> MonitoringTopology {
        build_topology(&self.platform, &self.rqms).unwrap()
    }
}

/// A random platform with a nonempty RQM set.
pub fn random_case(rng: &mut ChaCha8Rng, classes: Classes) -> Case {
    loop {
        let platform_json = platform_json(rng);
        let platform = parse_platform(&platform_json).unwrap();
        let rqms_json = rqms_json(rng, &platform, 6, classes);
        let rqms = parse_rqms(&rqms_json, &platform).unwrap();
        if !rqms.is_empty() {
            return Case {
                platform_json,
                rqms_json,
                platform,
                rqms,
            };
        }
    }
}

/// Random trace over the platform's triggers, biased towards monitored ones.
pub fn random_trace(rng: &mut ChaCha8Rng, t: &MonitoringTopology, len: usize, max_gap: u64) -> EventTrace {
    let monitored: Vec<&str> = t.adapters.iter().map(|a| a.trigger.as_str()).collect();
    let all: Vec<&str> = t.platform.trigger_points.iter().map(|tp| tp.id.as_str()).collect();
    let mut cycle = rng.random_range(0..=max_gap);
    let mut records = Vec::with_capacity(len);
    for _ in 0..len {
        let trigger = if !monitored.is_empty() && rng.random_bool(0.9) {
            monitored.choose(rng).unwrap()
        } else {
            all.choose(rng).unwrap()
        };
        records.push(TraceRecord {
            cycle,
            trigger: trigger.to_string(),
            payload: rng.random_bool(0.5).then(|| rng.random_range(0..16)),
        });
        cycle += rng.random_range(0..=max_gap);
    }
    EventTrace::new(records)
}

/// Largest count of a `width`-bit counter, computed without shifts.
pub fn counter_max(width: u32) -> u64 {
    (0..width).fold(0u64, |acc, _| acc.wrapping_mul(2).wrapping_add(1))
}

/// EVMON final counts: matching records, capped at the counter range.
pub fn oracle_counts(t: &MonitoringTopology, trace: &EventTrace) -> BTreeMap<String, u64> {
    t.monitors
        .iter()
        .filter(|m| m.kind == MonitorKind::EVMON)
        .map(|m| {
            let n = trace.records.iter().filter(|r| r.trigger == m.start_trigger).count() as u64;
            (m.id.clone(), n.min(counter_max(m.width_bits)))
        })
        .collect()
}

/// TMON last completed interval: the latest stop preceded (since the
/// previous stop) by a start, measured from the latest such start.
pub fn oracle_intervals(t: &MonitoringTopology, trace: &EventTrace) -> BTreeMap<String, Option<u64>> {
    let mut out = BTreeMap::new();
    for m in t.monitors.iter().filter(|m| m.kind == MonitorKind::TMON) {
        let stop = m.stop_trigger.as_deref().unwrap();
        let mut last = None;
        for (j, r) in trace.records.iter().enumerate() {
            if r.trigger != stop {
                continue;
            }
            // Most recent start before this stop that no other stop consumed.
            let start = trace.records[..j]
                .iter()
                .rev()
                .take_while(|p| p.trigger != stop)
                .find(|p| p.trigger == m.start_trigger);
            if let Some(s) = start {
                last = Some(r.cycle - s.cycle);
            }
        }
        out.insert(m.id.clone(), last);
    }
    out
}

/// (cycle, rqm) of every watchdog interrupt: a start at `s` with no later
/// start or stop of the same timer at a cycle `<= s + threshold` fires at
/// `s + threshold`, if that is within the horizon.
pub fn oracle_watchdogs(t: &MonitoringTopology, trace: &EventTrace, horizon: u64) -> Vec<(u64, String)> {
    let mut fired = Vec::new();
    for rule in t.gm.rules.iter().filter(|r| r.kind == RuleKind::ThresholdExceeded) {
        let threshold = rule.params["threshold_cycles"];
        for id in &rule.monitors {
            let m = t.monitor(id).unwrap();
            let Some(stop) = m.stop_trigger.as_deref() else { continue };
            for (i, r) in trace.records.iter().enumerate() {
                if r.trigger != m.start_trigger {
                    continue;
                }
                let deadline = r.cycle + threshold;
                let answered = trace.records[i + 1..]
                    .iter()
                    .take_while(|n| n.cycle <= deadline)
                    .any(|n| n.trigger == stop || n.trigger == m.start_trigger);
                if !answered && deadline <= horizon {
                    fired.push((deadline, rule.rqm.clone()));
                }
            }
        }
    }
    fired.sort();
    fired
}

/// (cycle, rqm) of every CountMismatch interrupt, replaying counts naively.
pub fn oracle_count_mismatches(t: &MonitoringTopology, trace: &EventTrace, horizon: u64) -> Vec<(u64, String)> {
    let mut fired = Vec::new();
    for rule in t.gm.rules.iter().filter(|r| r.kind == RuleKind::CountMismatch) {
        let expected = rule.params["expected_count"];
        let evmons: Vec<_> = rule
            .monitors
            .iter()
            .map(|id| t.monitor(id).unwrap())
            .filter(|m| m.kind == MonitorKind::EVMON)
            .collect();
        let mut counts = vec![0u64; evmons.len()];
        let mut hit = None;
        for r in &trace.records {
            for (k, m) in evmons.iter().enumerate() {
                if r.trigger == m.start_trigger {
                    counts[k] = (counts[k] + 1).min(counter_max(m.width_bits));
                }
            }
            if counts.iter().any(|&c| c > expected) {
                hit = Some(r.cycle);
                break;
            }
        }
        if hit.is_none() && counts.iter().any(|&c| c != expected) {
            hit = Some(horizon);
        }
        if let Some(c) = hit {
            fired.push((c, rule.rqm.clone()));
        }
    }
    fired.sort();
    fired
}

/// Instance-level driver → sink edges the netlist of `t` should have,
/// clock distribution left out.
pub fn expected_graph(t: &MonitoringTopology) -> std::collections::BTreeSet<(String, String)> {
    let mut edges = std::collections::BTreeSet::new();
    let mut add = |a: &str, b: &str| edges.insert((a.to_string(), b.to_string()));
    for a in &t.adapters {
        let tp = t.platform.trigger(&a.trigger).unwrap();
        add(&format!("u_{}", tp.location), &a.id);
        add(&a.id, &format!("nucleus_{}", tp.location));
    }
    for m in &t.monitors {
        add(&m.nucleus, &m.id);
        add(&m.id, &m.nucleus);
    }
    if t.gmi.present {
        for n in &t.nuclei {
            add(&n.id, "u_gmi");
        }
        add("u_gmi", "u_gm");
    }
    if t.irq.present {
        add("u_gm", "u_irq_ctrl");
        add("u_irq_ctrl", "port:irq");
    }
    edges
}

pub fn without_clock(edges: std::collections::BTreeSet<(String, String)>) -> std::collections::BTreeSet<(String, String)> {
    edges.into_iter().filter(|(a, _)| a != "port:clk").collect()
}
