use std::collections::BTreeMap;

use super::SynthError;
use crate::model::{Location, MonitorKind, PlatformModel, RqmSpec, Role};

/// One requirement entry after its location and signals were bound to
/// concrete trigger points.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlacedMonitor {
    pub location: String,
    pub kind: MonitorKind,
    pub start_trigger: String,
    pub stop_trigger: Option<String>,
    pub width_bits: u32,
    pub programmable: bool,
}

impl PlacedMonitor {
    pub fn triggers(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.start_trigger.as_str()).chain(self.stop_trigger.as_deref())
    }
}

/// Per-RQM placement, keyed by RQM id.
pub type Assignments = BTreeMap<String, Vec<PlacedMonitor>>;

/// Trigger point ids used by one RQM, in requirement order, without repeats.
pub fn trigger_ids(placed: &[PlacedMonitor]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in placed.iter().flat_map(PlacedMonitor::triggers) {
        if !out.iter().any(|o| o == t) {
            out.push(t.to_string());
        }
    }
    out
}

/// Binds every requirement of every RQM to trigger points on `platform`.
///
/// Role locations resolve to the RQM target when it has a matching kind,
/// otherwise to the nearest matching component (ties broken by id).
pub fn place_triggers(platform: &PlatformModel, rqms: &[RqmSpec]) -> Result<Assignments, SynthError> {
    let mut out = Assignments::new();
    for rqm in rqms {
        let mut placed = Vec::with_capacity(rqm.requirement.len());
        for req in &rqm.requirement {
            let location = resolve_location(platform, rqm, &req.location)?;
            let start_trigger = find_trigger(platform, rqm, &location, &req.signal)?;
            let stop_trigger = match (req.monitor_kind, &req.stop_signal) {
                (MonitorKind::TMON, Some(stop)) => Some(find_trigger(platform, rqm, &location, stop)?),
                (MonitorKind::TMON, None) => Some(find_trigger(platform, rqm, &location, "done")?),
                (MonitorKind::EVMON, _) => None,
            };
            placed.push(PlacedMonitor {
                location,
                kind: req.monitor_kind,
                start_trigger,
                stop_trigger,
                width_bits: req.width_bits,
                programmable: req.programmable && req.monitor_kind == MonitorKind::EVMON,
            });
        }
        out.insert(rqm.id.clone(), placed);
    }
    Ok(out)
}

fn resolve_location(platform: &PlatformModel, rqm: &RqmSpec, location: &Location) -> Result<String, SynthError> {
    match location {
        Location::Component(id) => match platform.component(id) {
            Some(c) => Ok(c.id.clone()),
            None => Err(SynthError::UnknownComponent {
                rqm: rqm.id.clone(),
                component: id.clone(),
            }),
        },
        Location::Role(role) => resolve_role(platform, &rqm.target, *role).ok_or_else(|| SynthError::UnresolvedRole {
            rqm: rqm.id.clone(),
            role: role.as_str(),
            target: rqm.target.clone(),
        }),
    }
}

fn resolve_role(platform: &PlatformModel, target: &str, role: Role) -> Option<String> {
    let kinds = role.kinds();
    if let Some(t) = platform.component(target) {
        if kinds.contains(&t.kind) {
            return Some(t.id.clone());
        }
    }
    let dist = platform.distances_from(target);
    platform
        .components
        .iter()
        .filter(|c| kinds.contains(&c.kind))
        .filter_map(|c| dist.get(c.id.as_str()).map(|d| (*d, c.id.as_str())))
        .min()
        .map(|(_, id)| id.to_string())
}

fn find_trigger(platform: &PlatformModel, rqm: &RqmSpec, location: &str, signal: &str) -> Result<String, SynthError> {
    let tp = platform
        .trigger_at(location, signal)
        .ok_or_else(|| SynthError::NoTriggerPoint {
            rqm: rqm.id.clone(),
            location: location.to_string(),
            signal: signal.to_string(),
        })?;
    if !tp.classes.contains(&rqm.class) {
        return Err(SynthError::ClassMismatch {
            rqm: rqm.id.clone(),
            trigger: tp.id.clone(),
            class: rqm.class,
        });
    }
    Ok(tp.id.clone())
}
