//! Platform, trigger-point and monitoring-requirement types.
//!
//! Everything in here is immutable once it comes out of [`parse_platform`]
//! or [`parse_rqms`]; the other modules only ever borrow these values.

mod library;
mod parse;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use library::{default_requirements, LibraryEntry};
pub use parse::{parse_platform, parse_rqms, ModelError};

/// Kind of a platform actor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    Core,
    Interconnection,
    DataManager,
    Accelerator,
    Memory,
    Peripheral,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 6] = [
        ComponentKind::Core,
        ComponentKind::Interconnection,
        ComponentKind::DataManager,
        ComponentKind::Accelerator,
        ComponentKind::Memory,
        ComponentKind::Peripheral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Core => "Core",
            ComponentKind::Interconnection => "Interconnection",
            ComponentKind::DataManager => "DataManager",
            ComponentKind::Accelerator => "Accelerator",
            ComponentKind::Memory => "Memory",
            ComponentKind::Peripheral => "Peripheral",
        }
    }
}

impl FromStr for ComponentKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

/// The six monitoring-requirement classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RqmClass {
    /// Debug.
    MDBG,
    /// Performance.
    MPF,
    /// Power, energy, temperature.
    PET,
    /// Quality of service.
    QoS,
    /// Fault tolerance and reliability.
    FT,
    /// Security.
    Sec,
}

impl RqmClass {
    pub const ALL: [RqmClass; 6] = [
        RqmClass::MDBG,
        RqmClass::MPF,
        RqmClass::PET,
        RqmClass::QoS,
        RqmClass::FT,
        RqmClass::Sec,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RqmClass::MDBG => "MDBG",
            RqmClass::MPF => "MPF",
            RqmClass::PET => "PET",
            RqmClass::QoS => "QoS",
            RqmClass::FT => "FT",
            RqmClass::Sec => "Sec",
        }
    }
}

impl FromStr for RqmClass {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

impl fmt::Display for RqmClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    EventCount,
    Interval,
    Throughput,
    FaultCheck,
    Watchdog,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::EventCount,
        MetricKind::Interval,
        MetricKind::Throughput,
        MetricKind::FaultCheck,
        MetricKind::Watchdog,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::EventCount => "EventCount",
            MetricKind::Interval => "Interval",
            MetricKind::Throughput => "Throughput",
            MetricKind::FaultCheck => "FaultCheck",
            MetricKind::Watchdog => "Watchdog",
        }
    }
}

impl FromStr for MetricKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or(())
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MonitorKind {
    EVMON,
    TMON,
}

impl MonitorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MonitorKind::EVMON => "EVMON",
            MonitorKind::TMON => "TMON",
        }
    }
}

impl fmt::Display for MonitorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Placeholder location, resolved against the RQM target at placement time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Int,
    DataM,
    Core,
    Accel,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Int, Role::DataM, Role::Core, Role::Accel];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Int => "Int",
            Role::DataM => "DataM",
            Role::Core => "Core",
            Role::Accel => "Accel",
        }
    }

    /// Component kinds a role may bind to.
    ///
    /// `Core` covers both processor cores and the compute core of an
    /// accelerator.
    pub fn kinds(self) -> &'static [ComponentKind] {
        match self {
            Role::Int => &[ComponentKind::Interconnection],
            Role::DataM => &[ComponentKind::DataManager],
            Role::Core => &[ComponentKind::Core, ComponentKind::Accelerator],
            Role::Accel => &[ComponentKind::Accelerator],
        }
    }
}

impl FromStr for Role {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|r| r.as_str() == s).ok_or(())
    }
}

/// Where a monitor requirement lives: a concrete component or a role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Component(String),
    Role(Role),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Component(id) => f.write_str(id),
            Location::Role(r) => f.write_str(r.as_str()),
        }
    }
}

impl Serialize for Location {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub kind: ComponentKind,
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerPoint {
    pub id: String,
    pub location: String,
    pub signal: String,
    pub classes: BTreeSet<RqmClass>,
}

impl TriggerPoint {
    /// Name of the wire carrying this trigger's event in emitted netlists.
    pub fn net_name(&self) -> String {
        format!("{}_{}", self.location, self.signal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformModel {
    pub name: String,
    pub components: Vec<Component>,
    pub links: Vec<(String, String)>,
    pub trigger_points: Vec<TriggerPoint>,
}

impl PlatformModel {
    pub fn component(&self, id: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn trigger(&self, id: &str) -> Option<&TriggerPoint> {
        self.trigger_points.iter().find(|t| t.id == id)
    }

    pub fn trigger_at(&self, location: &str, signal: &str) -> Option<&TriggerPoint> {
        self.trigger_points
            .iter()
            .find(|t| t.location == location && t.signal == signal)
    }

    /// Hop distance from `from` to every reachable component.
    pub fn distances_from(&self, from: &str) -> BTreeMap<&str, usize> {
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &self.links {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut dist = BTreeMap::new();
        let Some(start) = self.component(from) else {
            return dist;
        };
        dist.insert(start.id.as_str(), 0);
        let mut queue = VecDeque::from([start.id.as_str()]);
        while let Some(cur) = queue.pop_front() {
            let d = dist[cur];
            for &next in adj.get(cur).map(Vec::as_slice).unwrap_or_default() {
                if !dist.contains_key(next) {
                    dist.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    /// Canonical JSON document, accepted again by [`parse_platform`].
    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({ "platform": self });
        let mut out = serde_json::to_string_pretty(&doc).expect("platform serializes");
        out.push('\n');
        out
    }
}

/// Value of an RQM parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(u64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonitorRequirement {
    pub location: Location,
    pub monitor_kind: MonitorKind,
    pub width_bits: u32,
    pub programmable: bool,
    /// Counted signal (EVMON) or start signal (TMON).
    pub signal: String,
    /// Stop signal, TMON only.
    pub stop_signal: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RqmSpec {
    pub id: String,
    pub class: RqmClass,
    pub target: String,
    pub metric: MetricKind,
    pub params: BTreeMap<String, ParamValue>,
    pub requirement: Vec<MonitorRequirement>,
}

impl RqmSpec {
    pub fn param_u64(&self, key: &str) -> Option<u64> {
        match self.params.get(key) {
            Some(ParamValue::Int(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        match self.params.get(key) {
            Some(ParamValue::Text(s)) => Some(s),
            _ => None,
        }
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`, so every id doubles as an HDL identifier.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
