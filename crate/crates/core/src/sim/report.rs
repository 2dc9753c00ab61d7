use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use crate::model::MetricKind;
use crate::synth::RuleKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Satisfied,
    Violated,
    Reported,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub cycle: u64,
    pub rqm: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interrupt {
    pub cycle: u64,
    pub rqm: String,
    pub cause: RuleKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrayStop {
    pub cycle: u64,
    pub monitor: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum MonitorValue {
    Count {
        count: u64,
    },
    Timer {
        running: bool,
        last_interval: Option<u64>,
        overflowed: bool,
    },
}

/// Final metric values of one RQM.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RqmResult {
    pub metric: MetricKind,
    /// First bound counter.
    pub count: Option<u64>,
    /// Last completed interval of the first bound timer, in cycles.
    pub interval: Option<u64>,
    /// `count / interval`, Throughput RQMs only.
    pub throughput: Option<f64>,
    pub outcome: Outcome,
    /// Every bound monitor, in binding order.
    pub values: Vec<MonitorValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub horizon: u64,
    pub rqms: BTreeMap<String, RqmResult>,
    pub monitors: BTreeMap<String, MonitorValue>,
    pub decisions: Vec<Decision>,
    pub interrupts: Vec<Interrupt>,
    pub stray_stops: Vec<StrayStop>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn interrupts_csv(&self) -> String {
        let mut out = String::from("cycle,rqm,cause\n");
        for i in &self.interrupts {
            writeln!(out, "{},{},{:?}", i.cycle, i.rqm, i.cause).unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
        let mut out = String::new();
        writeln!(out, "horizon: cycle {}", self.horizon).unwrap();
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:<10} {:<11} {:>12} {:>12} {:>14}  outcome",
            "rqm", "metric", "count", "interval", "throughput"
        )
        .unwrap();
        for (id, r) in &self.rqms {
            let tp = r.throughput.map_or_else(|| "-".to_string(), |t| format!("{t:.6}"));
            writeln!(
                out,
                "{:<10} {:<11} {:>12} {:>12} {:>14}  {:?}",
                id,
                r.metric.as_str(),
                opt(r.count),
                opt(r.interval),
                tp,
                r.outcome
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        if self.interrupts.is_empty() {
            writeln!(out, "no interrupts").unwrap();
        } else {
            writeln!(out, "interrupts:").unwrap();
            for i in &self.interrupts {
                writeln!(out, "  cycle {:>10}  {:<10} {:?}", i.cycle, i.rqm, i.cause).unwrap();
            }
        }
        if !self.stray_stops.is_empty() {
            writeln!(out, "stray stops: {}", self.stray_stops.len()).unwrap();
        }
        out
    }
}
