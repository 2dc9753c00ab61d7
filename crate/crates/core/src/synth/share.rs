use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::place::Assignments;
use crate::model::{MonitorKind, RqmSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorInstance {
    pub id: String,
    pub kind: MonitorKind,
    pub location: String,
    pub width_bits: u32,
    pub programmable: bool,
    pub nucleus: String,
    pub start_trigger: String,
    pub stop_trigger: Option<String>,
    pub serving_rqms: BTreeSet<String>,
}

impl MonitorInstance {
    /// The fields that decide whether two monitors can be merged.
    pub fn share_key(&self) -> (&str, MonitorKind, &str, Option<&str>) {
        (
            &self.location,
            self.kind,
            &self.start_trigger,
            self.stop_trigger.as_deref(),
        )
    }

    /// Largest value the monitor's register can hold.
    pub fn max_value(&self) -> u64 {
        max_value(self.width_bits)
    }
}

pub(crate) fn max_value(width_bits: u32) -> u64 {
    if width_bits >= 64 {
        u64::MAX
    } else {
        (1u64 << width_bits) - 1
    }
}

pub fn nucleus_id(location: &str) -> String {
    format!("nucleus_{location}")
}

fn monitor_id(kind: MonitorKind, start: &str, stop: Option<&str>) -> String {
    match (kind, stop) {
        (MonitorKind::EVMON, _) => format!("evmon_{start}"),
        (MonitorKind::TMON, Some(stop)) => format!("tmon_{start}__{stop}"),
        (MonitorKind::TMON, None) => format!("tmon_{start}"),
    }
}

/// Merges placed monitors that agree on location, kind and triggers.
///
/// A merged instance takes the widest requested width and is programmable if
/// any request was. Output is sorted by (location, kind, start, stop).
pub fn share_instances(assignments: &Assignments, rqms: &[RqmSpec]) -> Vec<MonitorInstance> {
    type Key = (String, MonitorKind, String, Option<String>);
    let mut merged: BTreeMap<Key, (u32, bool, BTreeSet<String>)> = BTreeMap::new();
    for rqm in rqms {
        let Some(placed) = assignments.get(&rqm.id) else {
            continue;
        };
        for p in placed {
            let key = (
                p.location.clone(),
                p.kind,
                p.start_trigger.clone(),
                p.stop_trigger.clone(),
            );
            let entry = merged.entry(key).or_insert((0, false, BTreeSet::new()));
            entry.0 = entry.0.max(p.width_bits);
            entry.1 |= p.programmable;
            entry.2.insert(rqm.id.clone());
        }
    }

    let mut used_ids = BTreeSet::new();
    merged
        .into_iter()
        .map(|((location, kind, start, stop), (width_bits, programmable, serving_rqms))| {
            let base = monitor_id(kind, &start, stop.as_deref());
            let mut id = base.clone();
            let mut n = 1;
            while !used_ids.insert(id.clone()) {
                id = format!("{base}_{n}");
                n += 1;
            }
            MonitorInstance {
                id,
                kind,
                nucleus: nucleus_id(&location),
                location,
                width_bits,
                programmable,
                start_trigger: start,
                stop_trigger: stop,
                serving_rqms,
            }
        })
        .collect()
}
