//! Trace-driven execution of a monitoring layer.
//!
//! Each record is an event instance on a trigger point. It goes through the
//! trigger's adapter to every subscribed monitor whose nucleus filter admits
//! the signal; the global monitor re-evaluates the rules of every monitor that
//! changed, and violations of reacting rules are logged as interrupts.
//!
//! Ordering rules:
//! * records are handled in file order; cycles must not decrease;
//! * a watchdog armed at cycle `s` with threshold `t` expires at `s + t`
//!   unless its timer stops or restarts at a cycle `<= s + t`; an expiry is
//!   processed before any record with a later cycle;
//! * CountMismatch rules fire as soon as a count exceeds the expected value,
//!   and otherwise at the end of the trace if any count differs from it.

mod report;
mod state;
mod trace;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MetricKind, MonitorKind};
use crate::synth::{MonitorInstance, MonitoringTopology, RuleKind};

pub use report::{Decision, Interrupt, MonitorValue, Outcome, RqmResult, SimReport, StrayStop};
pub use state::{step_evmon, step_tmon, EvmonState, TmonEdge, TmonState, TmonStep};
pub use trace::{EventTrace, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid trace: record {index} (cycle {cycle}): {reason}")]
    InvalidTrace {
        index: usize,
        cycle: u64,
        reason: String,
    },
    #[error("trace file: {0}")]
    Csv(String),
    #[error("monitor `{0}` cannot take an event mask: {1}")]
    BadMask(String, &'static str),
    #[error("unknown nucleus `{0}` in filter override")]
    UnknownNucleus(String),
    #[error("horizon {horizon} precedes the last trace cycle {last}")]
    HorizonTooEarly { horizon: u64, last: u64 },
}

/// Runtime setting of a programmable EVMON: an event counts when
/// `payload & mask == value` (a missing payload reads as 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventMask {
    pub mask: u64,
    pub value: u64,
}

impl EventMask {
    pub fn accepts(&self, payload: Option<u64>) -> bool {
        payload.unwrap_or(0) & self.mask == self.value
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    /// Last observed cycle; defaults to the last record's cycle.
    #[serde(default)]
    pub horizon: Option<u64>,
    /// Event masks for programmable EVMONs, by monitor id.
    #[serde(default)]
    pub masks: BTreeMap<String, EventMask>,
    /// Replacement pass-sets for nucleus filters, by nucleus id.
    #[serde(default)]
    pub filters: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Clone, Copy)]
enum MonState {
    Ev(EvmonState),
    Tm(TmonState),
}

struct Subscriber {
    monitor: usize,
    edge: Option<TmonEdge>,
    mask: Option<EventMask>,
}

/// (cycle, insertion order, rule, monitor, monitor generation when armed)
type Deadline = (u64, u64, usize, usize, u64);

struct Engine<'a> {
    topology: &'a MonitoringTopology,
    monitors: Vec<&'a MonitorInstance>,
    states: Vec<MonState>,
    /// Bumped on every TMON start/stop; stale watchdog deadlines are dropped.
    generation: Vec<u64>,
    rules_of: Vec<Vec<usize>>,
    violated: Vec<bool>,
    deadlines: BinaryHeap<Reverse<Deadline>>,
    seq: u64,
    decisions: Vec<Decision>,
    interrupts: Vec<Interrupt>,
    stray_stops: Vec<StrayStop>,
}

/// Replays `trace` through `topology`.
pub fn run(topology: &MonitoringTopology, trace: &EventTrace, options: &SimOptions) -> Result<SimReport, SimError> {
    let monitors: Vec<&MonitorInstance> = topology.monitors.iter().collect();
    let index: HashMap<&str, usize> = monitors.iter().enumerate().map(|(i, m)| (m.id.as_str(), i)).collect();

    for id in options.masks.keys() {
        match index.get(id.as_str()) {
            None => return Err(SimError::BadMask(id.clone(), "no such monitor")),
            Some(&i) if !monitors[i].programmable => {
                return Err(SimError::BadMask(id.clone(), "monitor is not programmable"))
            }
            Some(_) => {}
        }
    }
    for id in options.filters.keys() {
        if !topology.nuclei.iter().any(|n| &n.id == id) {
            return Err(SimError::UnknownNucleus(id.clone()));
        }
    }

    // Adapter fan-out, with the nucleus filter applied up front.
    let mut fanout: HashMap<&str, Vec<Subscriber>> = HashMap::new();
    for adapter in &topology.adapters {
        let Some(tp) = topology.platform.trigger(&adapter.trigger) else {
            continue;
        };
        let subs = fanout.entry(adapter.trigger.as_str()).or_default();
        for sub in &adapter.subscribers {
            let Some(&i) = index.get(sub.as_str()) else { continue };
            let m = monitors[i];
            let filter = options
                .filters
                .get(&m.nucleus)
                .or_else(|| topology.nuclei.iter().find(|n| n.id == m.nucleus).map(|n| &n.filter));
            if !filter.is_some_and(|f| f.contains(&tp.signal)) {
                continue;
            }
            let edge = match m.kind {
                MonitorKind::EVMON => None,
                MonitorKind::TMON if m.start_trigger == adapter.trigger => Some(TmonEdge::Start),
                MonitorKind::TMON => Some(TmonEdge::Stop),
            };
            subs.push(Subscriber {
                monitor: i,
                edge,
                mask: options.masks.get(sub).copied(),
            });
        }
    }

    // Validate the whole trace before touching any state.
    let mut routes: Vec<Option<&[Subscriber]>> = Vec::with_capacity(trace.records.len());
    let mut last = 0u64;
    for (i, r) in trace.records.iter().enumerate() {
        if r.cycle < last {
            return Err(SimError::InvalidTrace {
                index: i,
                cycle: r.cycle,
                reason: format!("cycle decreases from {last}"),
            });
        }
        last = r.cycle;
        if topology.platform.trigger(&r.trigger).is_none() {
            return Err(SimError::InvalidTrace {
                index: i,
                cycle: r.cycle,
                reason: format!("unknown trigger `{}`", r.trigger),
            });
        }
        routes.push(fanout.get(r.trigger.as_str()).map(Vec::as_slice));
    }
    let horizon = match options.horizon {
        Some(h) if h < last => return Err(SimError::HorizonTooEarly { horizon: h, last }),
        Some(h) => h,
        None => last,
    };

    let mut rules_of = vec![Vec::new(); monitors.len()];
    for (ri, rule) in topology.gm.rules.iter().enumerate() {
        for id in &rule.monitors {
            if let Some(&mi) = index.get(id.as_str()) {
                rules_of[mi].push(ri);
            }
        }
    }

    let mut engine = Engine {
        topology,
        states: monitors
            .iter()
            .map(|m| match m.kind {
                MonitorKind::EVMON => MonState::Ev(EvmonState::default()),
                MonitorKind::TMON => MonState::Tm(TmonState::default()),
            })
            .collect(),
        generation: vec![0; monitors.len()],
        monitors,
        rules_of,
        violated: vec![false; topology.gm.rules.len()],
        deadlines: BinaryHeap::new(),
        seq: 0,
        decisions: Vec::new(),
        interrupts: Vec::new(),
        stray_stops: Vec::new(),
    };

    for (r, route) in trace.records.iter().zip(routes) {
        engine.expire_before(r.cycle);
        for sub in route.unwrap_or_default() {
            engine.deliver(sub, r);
        }
    }
    engine.expire_until(horizon);
    Ok(engine.finish(horizon))
}

impl Engine<'_> {
    fn deliver(&mut self, sub: &Subscriber, r: &TraceRecord) {
        let i = sub.monitor;
        let width = self.monitors[i].width_bits;
        match (self.states[i], sub.edge) {
            (MonState::Ev(s), None) => {
                if sub.mask.is_some_and(|m| !m.accepts(r.payload)) {
                    return;
                }
                self.states[i] = MonState::Ev(step_evmon(s, width));
                self.check_counts(i, r.cycle);
            }
            (MonState::Tm(s), Some(edge)) => {
                let step = step_tmon(s, edge, r.cycle, width);
                if step.stray_stop {
                    self.stray_stops.push(StrayStop {
                        cycle: r.cycle,
                        monitor: self.monitors[i].id.clone(),
                    });
                    return;
                }
                self.states[i] = MonState::Tm(step.state);
                self.generation[i] += 1;
                if edge == TmonEdge::Start {
                    self.arm_watchdogs(i, r.cycle);
                }
            }
            _ => unreachable!("edge matches monitor kind"),
        }
    }

    fn arm_watchdogs(&mut self, mi: usize, cycle: u64) {
        for k in 0..self.rules_of[mi].len() {
            let ri = self.rules_of[mi][k];
            let rule = &self.topology.gm.rules[ri];
            if rule.kind != RuleKind::ThresholdExceeded {
                continue;
            }
            let threshold = rule.params.get("threshold_cycles").copied().unwrap_or(0);
            if let Some(deadline) = cycle.checked_add(threshold) {
                self.seq += 1;
                self.deadlines
                    .push(Reverse((deadline, self.seq, ri, mi, self.generation[mi])));
            }
        }
    }

    fn expire_before(&mut self, cycle: u64) {
        while let Some(&Reverse((deadline, _, ri, mi, generation))) = self.deadlines.peek() {
            if deadline >= cycle {
                break;
            }
            self.deadlines.pop();
            self.expire(deadline, ri, mi, generation);
        }
    }

    fn expire_until(&mut self, horizon: u64) {
        while let Some(&Reverse((deadline, _, ri, mi, generation))) = self.deadlines.peek() {
            if deadline > horizon {
                break;
            }
            self.deadlines.pop();
            self.expire(deadline, ri, mi, generation);
        }
    }

    fn expire(&mut self, deadline: u64, ri: usize, mi: usize, generation: u64) {
        let running = matches!(self.states[mi], MonState::Tm(s) if s.running);
        if running && self.generation[mi] == generation {
            self.violate(ri, deadline);
        }
    }

    fn count(&self, id: &str) -> Option<u64> {
        let i = self.monitors.iter().position(|m| m.id == id)?;
        match self.states[i] {
            MonState::Ev(s) => Some(s.count),
            MonState::Tm(_) => None,
        }
    }

    fn check_counts(&mut self, mi: usize, cycle: u64) {
        for k in 0..self.rules_of[mi].len() {
            let ri = self.rules_of[mi][k];
            let rule = &self.topology.gm.rules[ri];
            if rule.kind != RuleKind::CountMismatch || self.violated[ri] {
                continue;
            }
            let expected = rule.params.get("expected_count").copied().unwrap_or(0);
            if matches!(self.states[mi], MonState::Ev(s) if s.count > expected) {
                self.violated[ri] = true;
                self.violate(ri, cycle);
            }
        }
    }

    fn violate(&mut self, ri: usize, cycle: u64) {
        let rule = &self.topology.gm.rules[ri];
        self.violated[ri] = true;
        self.decisions.push(Decision {
            cycle,
            rqm: rule.rqm.clone(),
            outcome: Outcome::Violated,
        });
        if self.topology.irq.present && rule.kind.reacts() {
            self.interrupts.push(Interrupt {
                cycle,
                rqm: rule.rqm.clone(),
                cause: rule.kind,
            });
        }
    }

    fn value(&self, i: usize) -> MonitorValue {
        match self.states[i] {
            MonState::Ev(s) => MonitorValue::Count { count: s.count },
            MonState::Tm(s) => MonitorValue::Timer {
                running: s.running,
                last_interval: s.last_interval,
                overflowed: s.overflowed,
            },
        }
    }

    fn finish(mut self, horizon: u64) -> SimReport {
        // End-of-trace evaluation of every rule.
        let rules = &self.topology.gm.rules;
        let mut results = BTreeMap::new();
        for (ri, rule) in rules.iter().enumerate() {
            if rule.kind == RuleKind::CountMismatch && !self.violated[ri] {
                let expected = rule.params.get("expected_count").copied().unwrap_or(0);
                let mismatch = rule.monitors.iter().filter_map(|id| self.count(id)).any(|c| c != expected);
                if mismatch {
                    self.violate(ri, horizon);
                }
            }
            let outcome = match rule.kind {
                RuleKind::ReportOnly => Outcome::Reported,
                _ if self.violated[ri] => Outcome::Violated,
                _ => Outcome::Satisfied,
            };
            self.decisions.push(Decision {
                cycle: horizon,
                rqm: rule.rqm.clone(),
                outcome,
            });

            let values: Vec<MonitorValue> = rule
                .monitors
                .iter()
                .filter_map(|id| self.monitors.iter().position(|m| &m.id == id))
                .map(|i| self.value(i))
                .collect();
            let count = values.iter().find_map(|v| match v {
                MonitorValue::Count { count } => Some(*count),
                _ => None,
            });
            let interval = values.iter().find_map(|v| match v {
                MonitorValue::Timer { last_interval, .. } => *last_interval,
                _ => None,
            });
            let throughput = match (rule.metric, count, interval) {
                (MetricKind::Throughput, Some(c), Some(t)) if t > 0 => Some(c as f64 / t as f64),
                _ => None,
            };
            results.insert(
                rule.rqm.clone(),
                RqmResult {
                    metric: rule.metric,
                    count,
                    interval,
                    throughput,
                    outcome,
                    values,
                },
            );
        }
        let monitors = (0..self.monitors.len())
            .map(|i| (self.monitors[i].id.clone(), self.value(i)))
            .collect();
        SimReport {
            horizon,
            rqms: results,
            monitors,
            decisions: self.decisions,
            interrupts: self.interrupts,
            stray_stops: self.stray_stops,
        }
    }
}
