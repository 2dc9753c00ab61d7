//! RQM placement, event-instance sharing and topology construction.

mod place;
mod share;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MetricKind, MonitorKind, PlatformModel, RqmClass, RqmSpec};

pub use place::{place_triggers, trigger_ids, Assignments, PlacedMonitor};
pub use share::{nucleus_id, share_instances, MonitorInstance};
pub(crate) use share::max_value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("RQM `{rqm}`: no trigger point for signal `{signal}` at `{location}`")]
    NoTriggerPoint {
        rqm: String,
        location: String,
        signal: String,
    },
    #[error("RQM `{rqm}`: trigger point `{trigger}` does not support class {class}")]
    ClassMismatch {
        rqm: String,
        trigger: String,
        class: RqmClass,
    },
    #[error("RQM `{rqm}`: no component plays role {role} for target `{target}`")]
    UnresolvedRole {
        rqm: String,
        role: &'static str,
        target: String,
    },
    #[error("RQM `{rqm}`: unknown component `{component}`")]
    UnknownComponent { rqm: String, component: String },
    #[error("duplicate RQM id `{0}`")]
    DuplicateRqm(String),
}

/// Violation found by [`MonitoringTopology::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid topology: {0}")]
pub struct TopologyError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adapter {
    pub id: String,
    pub trigger: String,
    pub subscribers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nucleus {
    pub id: String,
    pub location: String,
    pub monitors: Vec<String>,
    /// Event (signal) names allowed through to the monitors.
    pub filter: BTreeSet<String>,
}

/// Global monitor interface: one port per connected nucleus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gmi {
    pub present: bool,
    pub nuclei: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    ThresholdExceeded,
    CountMismatch,
    ReportOnly,
}

impl RuleKind {
    pub fn for_metric(metric: MetricKind) -> Self {
        match metric {
            MetricKind::Watchdog => RuleKind::ThresholdExceeded,
            MetricKind::FaultCheck => RuleKind::CountMismatch,
            _ => RuleKind::ReportOnly,
        }
    }

    /// Whether a violation of this rule raises an interrupt.
    pub fn reacts(self) -> bool {
        !matches!(self, RuleKind::ReportOnly)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub rqm: String,
    pub class: RqmClass,
    pub metric: MetricKind,
    pub kind: RuleKind,
    /// Monitors the rule reads, in the RQM's requirement order.
    pub monitors: Vec<String>,
    pub params: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalMonitor {
    pub present: bool,
    pub rules: Vec<DecisionRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterruptController {
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitoringTopology {
    pub platform: PlatformModel,
    pub adapters: Vec<Adapter>,
    pub nuclei: Vec<Nucleus>,
    pub monitors: Vec<MonitorInstance>,
    pub gmi: Gmi,
    pub gm: GlobalMonitor,
    pub irq: InterruptController,
    pub bindings: BTreeMap<String, Vec<String>>,
}

/// Monitor counts with and without event-instance sharing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SharingReport {
    pub monitors_with_sharing: usize,
    pub monitors_without_sharing: usize,
}

/// Builds the full monitoring layer for `rqms` on `platform`.
///
/// The result does not depend on the order of `rqms`.
pub fn build_topology(platform: &PlatformModel, rqms: &[RqmSpec]) -> Result<MonitoringTopology, SynthError> {
    let mut rqms: Vec<&RqmSpec> = rqms.iter().collect();
    rqms.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = rqms.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(SynthError::DuplicateRqm(w[0].id.clone()));
    }
    let rqms: Vec<RqmSpec> = rqms.into_iter().cloned().collect();

    let assignments = place_triggers(platform, &rqms)?;
    let monitors = share_instances(&assignments, &rqms);

    let by_key: BTreeMap<_, &str> = monitors.iter().map(|m| (m.share_key(), m.id.as_str())).collect();
    let mut bindings = BTreeMap::new();
    for rqm in &rqms {
        let mut ids: Vec<String> = Vec::new();
        for p in &assignments[&rqm.id] {
            let key = (
                p.location.as_str(),
                p.kind,
                p.start_trigger.as_str(),
                p.stop_trigger.as_deref(),
            );
            let id = by_key[&key];
            if !ids.iter().any(|x| x == id) {
                ids.push(id.to_string());
            }
        }
        bindings.insert(rqm.id.clone(), ids);
    }

    let rules = rqms
        .iter()
        .map(|rqm| DecisionRule {
            rqm: rqm.id.clone(),
            class: rqm.class,
            metric: rqm.metric,
            kind: RuleKind::for_metric(rqm.metric),
            monitors: bindings[&rqm.id].clone(),
            params: rule_params(rqm),
        })
        .collect();

    Ok(assemble(platform.clone(), monitors, rules, bindings))
}

fn rule_params(rqm: &RqmSpec) -> BTreeMap<String, u64> {
    let keys: &[&str] = match rqm.metric {
        MetricKind::Watchdog => &["threshold_cycles"],
        MetricKind::FaultCheck => &["expected_count"],
        _ => &[],
    };
    keys.iter()
        .chain(["window_cycles"].iter())
        .filter_map(|k| rqm.param_u64(k).map(|v| (k.to_string(), v)))
        .collect()
}

/// Derives adapters, nuclei, GMI and interrupt controller from monitors and rules.
fn assemble(
    platform: PlatformModel,
    monitors: Vec<MonitorInstance>,
    rules: Vec<DecisionRule>,
    bindings: BTreeMap<String, Vec<String>>,
) -> MonitoringTopology {
    let mut subscribers: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for m in &monitors {
        let triggers = std::iter::once(m.start_trigger.as_str()).chain(m.stop_trigger.as_deref());
        for t in triggers {
            subscribers.entry(t).or_default().push(m.id.clone());
        }
    }
    let adapters: Vec<Adapter> = subscribers
        .into_iter()
        .map(|(trigger, mut subs)| {
            subs.sort();
            Adapter {
                id: format!("adapter_{trigger}"),
                trigger: trigger.to_string(),
                subscribers: subs,
            }
        })
        .collect();

    let mut by_location: BTreeMap<&str, (Vec<String>, BTreeSet<String>)> = BTreeMap::new();
    for m in &monitors {
        let entry = by_location.entry(m.location.as_str()).or_default();
        entry.0.push(m.id.clone());
        let triggers = std::iter::once(m.start_trigger.as_str()).chain(m.stop_trigger.as_deref());
        for t in triggers {
            if let Some(tp) = platform.trigger(t) {
                entry.1.insert(tp.signal.clone());
            }
        }
    }
    let nuclei: Vec<Nucleus> = by_location
        .into_iter()
        .map(|(location, (mut mons, filter))| {
            mons.sort();
            Nucleus {
                id: nucleus_id(location),
                location: location.to_string(),
                monitors: mons,
                filter,
            }
        })
        .collect();

    let nonempty = !monitors.is_empty();
    let irq_present = rules
        .iter()
        .any(|r| r.kind.reacts() || r.class == RqmClass::MDBG);
    MonitoringTopology {
        platform,
        adapters,
        gmi: Gmi {
            present: nonempty,
            nuclei: nuclei.iter().map(|n| n.id.clone()).collect(),
        },
        nuclei,
        monitors,
        gm: GlobalMonitor {
            present: nonempty,
            rules,
        },
        irq: InterruptController { present: irq_present },
        bindings,
    }
}

/// Compares the topology's monitor count with one monitor per requirement entry.
pub fn diff_naive(topology: &MonitoringTopology, rqms: &[RqmSpec]) -> SharingReport {
    let without = rqms.iter().map(|r| r.requirement.len()).sum();
    SharingReport {
        monitors_with_sharing: topology.monitors.len(),
        monitors_without_sharing: without,
    }
}

impl MonitoringTopology {
    pub fn monitor(&self, id: &str) -> Option<&MonitorInstance> {
        self.monitors.iter().find(|m| m.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.monitors.is_empty()
    }

    /// Same layer with every shared monitor split into one private copy per
    /// serving RQM. Copies keep the merged width and programmability and are
    /// named `<id>__<rqm>`.
    pub fn without_sharing(&self) -> MonitoringTopology {
        let mut monitors = Vec::new();
        let mut renamed: BTreeMap<(&str, &str), String> = BTreeMap::new();
        for m in &self.monitors {
            for rqm in &m.serving_rqms {
                let id = format!("{}__{}", m.id, rqm);
                renamed.insert((m.id.as_str(), rqm.as_str()), id.clone());
                monitors.push(MonitorInstance {
                    id,
                    serving_rqms: BTreeSet::from([rqm.clone()]),
                    ..m.clone()
                });
            }
        }
        monitors.sort_by(|a, b| (a.share_key(), &a.id).cmp(&(b.share_key(), &b.id)));
        let bindings: BTreeMap<String, Vec<String>> = self
            .bindings
            .iter()
            .map(|(rqm, ids)| {
                let ids = ids
                    .iter()
                    .map(|id| renamed[&(id.as_str(), rqm.as_str())].clone())
                    .collect();
                (rqm.clone(), ids)
            })
            .collect();
        let rules = self
            .gm
            .rules
            .iter()
            .map(|r| DecisionRule {
                monitors: bindings[&r.rqm].clone(),
                ..r.clone()
            })
            .collect();
        assemble(self.platform.clone(), monitors, rules, bindings)
    }

    /// Canonical JSON document; identical topologies give identical bytes.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("topology serializes");
        out.push('\n');
        out
    }

    /// Reads a topology document and checks its structural invariants.
    pub fn from_json(text: &str) -> Result<Self, crate::model::ModelError> {
        let t: MonitoringTopology = serde_json::from_str(text)?;
        t.validate().map_err(|e| crate::model::ModelError::Syntax {
            line: 0,
            column: 0,
            message: e.to_string(),
        })?;
        Ok(t)
    }

    /// Checks the structural invariants of the layer.
    pub fn validate(&self) -> Result<(), TopologyError> {
        let fail = |msg: String| Err(TopologyError(msg));
        let mut ids = BTreeSet::new();
        for m in &self.monitors {
            if !ids.insert(m.id.as_str()) {
                return fail(format!("duplicate monitor `{}`", m.id));
            }
            if m.serving_rqms.is_empty() {
                return fail(format!("monitor `{}` serves no RQM", m.id));
            }
            if !(1..=64).contains(&m.width_bits) {
                return fail(format!("monitor `{}` has width {}", m.id, m.width_bits));
            }
            match (m.kind, &m.stop_trigger) {
                (MonitorKind::TMON, None) => return fail(format!("TMON `{}` has no stop trigger", m.id)),
                (MonitorKind::EVMON, Some(_)) => return fail(format!("EVMON `{}` has a stop trigger", m.id)),
                (MonitorKind::TMON, Some(_)) if m.programmable => {
                    return fail(format!("TMON `{}` is programmable", m.id))
                }
                _ => {}
            }
            for t in std::iter::once(&m.start_trigger).chain(m.stop_trigger.as_ref()) {
                match self.platform.trigger(t) {
                    Some(tp) if tp.location == m.location => {}
                    Some(_) => return fail(format!("monitor `{}` uses trigger `{t}` from another location", m.id)),
                    None => return fail(format!("monitor `{}` uses unknown trigger `{t}`", m.id)),
                }
            }
            if self
                .nuclei
                .iter()
                .find(|n| n.id == m.nucleus)
                .is_none_or(|n| !n.monitors.contains(&m.id) || n.location != m.location)
            {
                return fail(format!("monitor `{}` is not held by nucleus `{}`", m.id, m.nucleus));
            }
        }

        let mut triggers = BTreeSet::new();
        for a in &self.adapters {
            if !triggers.insert(a.trigger.as_str()) {
                return fail(format!("trigger `{}` has more than one adapter", a.trigger));
            }
            if a.subscribers.is_empty() {
                return fail(format!("adapter `{}` has no subscribers", a.id));
            }
            for s in &a.subscribers {
                match self.monitor(s) {
                    Some(m) if m.start_trigger == a.trigger || m.stop_trigger.as_ref() == Some(&a.trigger) => {}
                    _ => return fail(format!("adapter `{}` feeds unrelated monitor `{s}`", a.id)),
                }
            }
        }
        for m in &self.monitors {
            for t in std::iter::once(&m.start_trigger).chain(m.stop_trigger.as_ref()) {
                if !self.adapters.iter().any(|a| &a.trigger == t && a.subscribers.contains(&m.id)) {
                    return fail(format!("monitor `{}` is not subscribed to trigger `{t}`", m.id));
                }
            }
        }

        let mut locations = BTreeSet::new();
        for n in &self.nuclei {
            if !locations.insert(n.location.as_str()) {
                return fail(format!("two nuclei at `{}`", n.location));
            }
            if n.monitors.is_empty() {
                return fail(format!("nucleus `{}` holds no monitor", n.id));
            }
            if n.monitors.iter().any(|id| self.monitor(id).is_none_or(|m| m.nucleus != n.id)) {
                return fail(format!("nucleus `{}` lists a foreign monitor", n.id));
            }
            if !self.gmi.nuclei.contains(&n.id) {
                return fail(format!("nucleus `{}` is not connected to the GMI", n.id));
            }
        }
        if self.gmi.nuclei.len() != self.nuclei.len() {
            return fail("GMI connects unknown nuclei".to_string());
        }

        for (rqm, mons) in &self.bindings {
            if mons.is_empty() {
                return fail(format!("RQM `{rqm}` is bound to no monitor"));
            }
            for id in mons {
                if self.monitor(id).is_none_or(|m| !m.serving_rqms.contains(rqm)) {
                    return fail(format!("RQM `{rqm}` bound to monitor `{id}` that does not serve it"));
                }
            }
        }
        for m in &self.monitors {
            for rqm in &m.serving_rqms {
                if !self.bindings.get(rqm).is_some_and(|b| b.contains(&m.id)) {
                    return fail(format!("monitor `{}` serves unbound RQM `{rqm}`", m.id));
                }
            }
        }
        if self.gm.rules.len() != self.bindings.len()
            || self.gm.rules.iter().any(|r| self.bindings.get(&r.rqm) != Some(&r.monitors))
        {
            return fail("GM rules do not match the RQM bindings".to_string());
        }
        for r in &self.gm.rules {
            if r.kind != RuleKind::for_metric(r.metric) {
                return fail(format!("rule for `{}` has kind {:?} for metric {}", r.rqm, r.kind, r.metric));
            }
        }

        // Five phases: trigger (adapter), capture + filtering (nucleus),
        // decision (GM), reaction (interrupt controller).
        if !self.bindings.is_empty()
            && (self.adapters.is_empty() || self.nuclei.is_empty() || !self.gm.present || !self.gmi.present)
        {
            return fail("nonempty RQM set without adapter, nucleus, GMI or GM".to_string());
        }
        let needs_irq = self
            .gm
            .rules
            .iter()
            .any(|r| r.kind.reacts() || r.class == RqmClass::MDBG);
        if needs_irq != self.irq.present {
            return fail(format!("interrupt controller present = {}, expected {needs_irq}", self.irq.present));
        }
        Ok(())
    }
}
