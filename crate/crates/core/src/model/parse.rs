use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use thiserror::Error;

use super::{
    default_requirements, is_identifier, Component, ComponentKind, Location, MetricKind,
    MonitorKind, MonitorRequirement, ParamValue, PlatformModel, RqmClass, RqmSpec, Role,
    TriggerPoint,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: `{id}` is not a valid identifier")]
    InvalidIdentifier { path: String, id: String },
    #[error("{path}: duplicate {what} id `{id}`")]
    DuplicateId {
        path: String,
        what: &'static str,
        id: String,
    },
    #[error("{path}: reference to undeclared component `{id}`")]
    DanglingReference { path: String, id: String },
    #[error("platform `{platform}` has no components")]
    EmptyPlatform { platform: String },
    #[error("platform `{platform}` is disconnected: `{id}` is not reachable from `{root}`")]
    Disconnected {
        platform: String,
        root: String,
        id: String,
    },
    #[error("{path}: unknown component kind `{kind}`")]
    UnknownComponentKind { path: String, kind: String },
    #[error("{path}: unknown RQM class `{class}`")]
    UnknownRqmClass { path: String, class: String },
    #[error("{path}: unknown metric `{metric}`")]
    UnknownMetric { path: String, metric: String },
    #[error("{path}: unknown monitor kind `{kind}`")]
    UnknownMonitorKind { path: String, kind: String },
    #[error("{path}: trigger `{id}` duplicates the event net `{net}`")]
    DuplicateTriggerNet { path: String, id: String, net: String },
    #[error("{path}: trigger `{id}` supports no RQM class")]
    EmptyClasses { path: String, id: String },
    #[error("{path}: RQM `{rqm}` targets undeclared component `{target}`")]
    UnresolvedTarget {
        path: String,
        rqm: String,
        target: String,
    },
    #[error("{path}: RQM `{rqm}` names location `{location}`, which is neither a component nor a role")]
    UnresolvedLocation {
        path: String,
        rqm: String,
        location: String,
    },
    #[error("{path}: RQM `{rqm}` ({metric}) is missing parameter `{param}`")]
    MissingParam {
        path: String,
        rqm: String,
        metric: MetricKind,
        param: &'static str,
    },
    #[error("{path}: RQM `{rqm}` parameter `{param}` {reason}")]
    InvalidParam {
        path: String,
        rqm: String,
        param: String,
        reason: &'static str,
    },
    #[error("{path}: RQM `{rqm}` ({class} {metric}) has no default requirement; give `requirement` explicitly")]
    NoDefaultRequirement {
        path: String,
        rqm: String,
        class: RqmClass,
        metric: MetricKind,
    },
    #[error("{path}: RQM `{rqm}`: default library maps {metric} only for class {expected}, got {class}")]
    LibraryClassMismatch {
        path: String,
        rqm: String,
        metric: MetricKind,
        class: RqmClass,
        expected: RqmClass,
    },
    #[error("{path}: RQM `{rqm}` requests width {width}, outside 1..=64")]
    InvalidWidth { path: String, rqm: String, width: u32 },
    #[error("{path}: RQM `{rqm}`: {reason}")]
    InvalidRequirement {
        path: String,
        rqm: String,
        reason: &'static str,
    },
}

impl From<serde_json::Error> for ModelError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the message.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        ModelError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlatformDoc {
    platform: RawPlatform,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlatform {
    name: String,
    components: Vec<RawComponent>,
    #[serde(default)]
    links: Vec<(String, String)>,
    #[serde(default)]
    trigger_points: Vec<RawTrigger>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    id: String,
    kind: String,
    #[serde(default)]
    attributes: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrigger {
    id: String,
    location: String,
    signal: String,
    classes: Vec<String>,
}

/// Parses and validates a platform description document.
pub fn parse_platform(text: &str) -> Result<PlatformModel, ModelError> {
    let doc: PlatformDoc = serde_json::from_str(text)?;
    let raw = doc.platform;
    check_ident("platform.name", &raw.name)?;

    let mut components = Vec::with_capacity(raw.components.len());
    let mut ids = BTreeSet::new();
    for (i, c) in raw.components.into_iter().enumerate() {
        let path = format!("platform.components[{i}]");
        check_ident(&path, &c.id)?;
        let kind = c
            .kind
            .parse::<ComponentKind>()
            .map_err(|()| ModelError::UnknownComponentKind {
                path: path.clone(),
                kind: c.kind.clone(),
            })?;
        if !ids.insert(c.id.clone()) {
            return Err(ModelError::DuplicateId {
                path,
                what: "component",
                id: c.id,
            });
        }
        components.push(Component {
            id: c.id,
            kind,
            attributes: c.attributes,
        });
    }
    if components.is_empty() {
        return Err(ModelError::EmptyPlatform { platform: raw.name });
    }

    for (i, (a, b)) in raw.links.iter().enumerate() {
        for end in [a, b] {
            if !ids.contains(end) {
                return Err(ModelError::DanglingReference {
                    path: format!("platform.links[{i}]"),
                    id: end.clone(),
                });
            }
        }
    }

    let mut trigger_points = Vec::with_capacity(raw.trigger_points.len());
    let mut trigger_ids = BTreeSet::new();
    let mut nets = BTreeSet::new();
    for (i, t) in raw.trigger_points.into_iter().enumerate() {
        let path = format!("platform.trigger_points[{i}]");
        check_ident(&path, &t.id)?;
        check_ident(&path, &t.signal)?;
        if !ids.contains(&t.location) {
            return Err(ModelError::DanglingReference {
                path,
                id: t.location,
            });
        }
        if !trigger_ids.insert(t.id.clone()) {
            return Err(ModelError::DuplicateId {
                path,
                what: "trigger point",
                id: t.id,
            });
        }
        let mut classes = BTreeSet::new();
        for c in &t.classes {
            let class = c.parse::<RqmClass>().map_err(|()| ModelError::UnknownRqmClass {
                path: path.clone(),
                class: c.clone(),
            })?;
            classes.insert(class);
        }
        if classes.is_empty() {
            return Err(ModelError::EmptyClasses { path, id: t.id });
        }
        let tp = TriggerPoint {
            id: t.id,
            location: t.location,
            signal: t.signal,
            classes,
        };
        // (location, signal) uniqueness, extended to the derived net name so
        // that `a_b`/`c` and `a`/`b_c` cannot collide in the netlist.
        let net = tp.net_name();
        if !nets.insert(net.clone()) {
            return Err(ModelError::DuplicateTriggerNet { path, id: tp.id, net });
        }
        trigger_points.push(tp);
    }

    let platform = PlatformModel {
        name: raw.name,
        components,
        links: raw.links,
        trigger_points,
    };

    let root = &platform.components[0].id;
    let reach = platform.distances_from(root);
    if let Some(lost) = platform.components.iter().find(|c| !reach.contains_key(c.id.as_str())) {
        return Err(ModelError::Disconnected {
            platform: platform.name.clone(),
            root: root.clone(),
            id: lost.id.clone(),
        });
    }
    Ok(platform)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RqmDoc {
    #[serde(default)]
    rqms: Vec<RawRqm>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRqm {
    id: String,
    class: String,
    target: String,
    metric: String,
    #[serde(default)]
    params: BTreeMap<String, ParamValue>,
    requirement: Option<Vec<RawRequirement>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequirement {
    location: String,
    monitor_kind: String,
    width_bits: u32,
    #[serde(default)]
    programmable: bool,
    signal: Option<String>,
    stop_signal: Option<String>,
}

/// Parses an RQM document against an already validated platform.
///
/// RQMs without a `requirement` list get one from the default library.
pub fn parse_rqms(text: &str, platform: &PlatformModel) -> Result<Vec<RqmSpec>, ModelError> {
    let doc: RqmDoc = serde_json::from_str(text)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(doc.rqms.len());
    for (i, raw) in doc.rqms.into_iter().enumerate() {
        let path = format!("rqms[{i}]");
        check_ident(&path, &raw.id)?;
        if !seen.insert(raw.id.clone()) {
            return Err(ModelError::DuplicateId {
                path,
                what: "RQM",
                id: raw.id,
            });
        }
        out.push(convert_rqm(&path, raw, platform)?);
    }
    Ok(out)
}

fn convert_rqm(path: &str, raw: RawRqm, platform: &PlatformModel) -> Result<RqmSpec, ModelError> {
    let rqm = raw.id;
    let class = raw
        .class
        .parse::<RqmClass>()
        .map_err(|()| ModelError::UnknownRqmClass {
            path: path.to_string(),
            class: raw.class.clone(),
        })?;
    let metric = raw
        .metric
        .parse::<MetricKind>()
        .map_err(|()| ModelError::UnknownMetric {
            path: path.to_string(),
            metric: raw.metric.clone(),
        })?;
    if platform.component(&raw.target).is_none() {
        return Err(ModelError::UnresolvedTarget {
            path: path.to_string(),
            rqm,
            target: raw.target,
        });
    }

    let params = raw.params;
    let int_param = |key: &'static str| -> Result<Option<u64>, ModelError> {
        match params.get(key) {
            None => Ok(None),
            Some(ParamValue::Int(v)) => Ok(Some(*v)),
            Some(ParamValue::Text(_)) => Err(ModelError::InvalidParam {
                path: path.to_string(),
                rqm: rqm.clone(),
                param: key.to_string(),
                reason: "must be a nonnegative integer",
            }),
        }
    };
    let threshold = int_param("threshold_cycles")?;
    let expected = int_param("expected_count")?;
    if int_param("window_cycles")? == Some(0) {
        return Err(ModelError::InvalidParam {
            path: path.to_string(),
            rqm,
            param: "window_cycles".to_string(),
            reason: "must be positive",
        });
    }
    let missing = |param: &'static str| ModelError::MissingParam {
        path: path.to_string(),
        rqm: rqm.clone(),
        metric,
        param,
    };
    match metric {
        MetricKind::Watchdog if threshold.is_none() => return Err(missing("threshold_cycles")),
        MetricKind::FaultCheck if expected.is_none() => return Err(missing("expected_count")),
        _ => {}
    }

    let requirement = match raw.requirement {
        Some(list) => {
            if list.is_empty() {
                return Err(ModelError::InvalidRequirement {
                    path: path.to_string(),
                    rqm,
                    reason: "`requirement` must not be empty",
                });
            }
            list.into_iter()
                .enumerate()
                .map(|(j, r)| convert_requirement(&format!("{path}.requirement[{j}]"), &rqm, r, platform))
                .collect::<Result<Vec<_>, _>>()?
        }
        None => {
            let library_class = match metric {
                MetricKind::Watchdog | MetricKind::FaultCheck => Some(RqmClass::MDBG),
                MetricKind::Interval | MetricKind::Throughput => Some(RqmClass::MPF),
                MetricKind::EventCount => None,
            };
            if let Some(expected) = library_class {
                if expected != class && matches!(class, RqmClass::MDBG | RqmClass::MPF) {
                    return Err(ModelError::LibraryClassMismatch {
                        path: path.to_string(),
                        rqm,
                        metric,
                        class,
                        expected,
                    });
                }
            }
            if metric == MetricKind::FaultCheck && class == RqmClass::MDBG {
                match params.get("scope") {
                    None => return Err(missing("scope")),
                    Some(ParamValue::Text(s)) if s == "transfer" || s == "compute" => {}
                    Some(_) => {
                        return Err(ModelError::InvalidParam {
                            path: path.to_string(),
                            rqm,
                            param: "scope".to_string(),
                            reason: "must be `transfer` or `compute`",
                        })
                    }
                }
            }
            let scope = match params.get("scope") {
                Some(ParamValue::Text(s)) => Some(s.as_str()),
                _ => None,
            };
            default_requirements(class, metric, scope).ok_or_else(|| {
                ModelError::NoDefaultRequirement {
                    path: path.to_string(),
                    rqm: rqm.clone(),
                    class,
                    metric,
                }
            })?
        }
    };

    Ok(RqmSpec {
        id: rqm,
        class,
        target: raw.target,
        metric,
        params,
        requirement,
    })
}

fn convert_requirement(
    path: &str,
    rqm: &str,
    raw: RawRequirement,
    platform: &PlatformModel,
) -> Result<MonitorRequirement, ModelError> {
    let location = if platform.component(&raw.location).is_some() {
        Location::Component(raw.location)
    } else if let Ok(role) = raw.location.parse::<Role>() {
        Location::Role(role)
    } else {
        return Err(ModelError::UnresolvedLocation {
            path: path.to_string(),
            rqm: rqm.to_string(),
            location: raw.location,
        });
    };
    let monitor_kind = match raw.monitor_kind.as_str() {
        "EVMON" => MonitorKind::EVMON,
        "TMON" => MonitorKind::TMON,
        _ => {
            return Err(ModelError::UnknownMonitorKind {
                path: path.to_string(),
                kind: raw.monitor_kind,
            })
        }
    };
    if !(1..=64).contains(&raw.width_bits) {
        return Err(ModelError::InvalidWidth {
            path: path.to_string(),
            rqm: rqm.to_string(),
            width: raw.width_bits,
        });
    }
    let invalid = |reason| ModelError::InvalidRequirement {
        path: path.to_string(),
        rqm: rqm.to_string(),
        reason,
    };
    let (signal, stop_signal) = match monitor_kind {
        MonitorKind::EVMON => {
            if raw.stop_signal.is_some() {
                return Err(invalid("EVMON takes no `stop_signal`"));
            }
            (raw.signal.ok_or_else(|| invalid("EVMON needs a `signal`"))?, None)
        }
        MonitorKind::TMON => {
            if raw.programmable {
                return Err(invalid("TMON cannot be programmable"));
            }
            let start = raw.signal.unwrap_or_else(|| "start".to_string());
            let stop = raw.stop_signal.unwrap_or_else(|| "done".to_string());
            if start == stop {
                return Err(invalid("TMON start and stop signals must differ"));
            }
            (start, Some(stop))
        }
    };
    check_ident(path, &signal)?;
    if let Some(stop) = &stop_signal {
        check_ident(path, stop)?;
    }
    Ok(MonitorRequirement {
        location,
        monitor_kind,
        width_bits: raw.width_bits,
        programmable: raw.programmable,
        signal,
        stop_signal,
    })
}

fn check_ident(path: &str, id: &str) -> Result<(), ModelError> {
    if is_identifier(id) {
        Ok(())
    } else {
        Err(ModelError::InvalidIdentifier {
            path: path.to_string(),
            id: id.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZYNQ: &str = r#"{"platform": {
        "name": "zynq",
        "components": [
            {"id": "arm_core", "kind": "Core"},
            {"id": "axi", "kind": "Interconnection"},
            {"id": "dma", "kind": "DataManager"},
            {"id": "acc", "kind": "Accelerator"},
            {"id": "dram", "kind": "Memory"}
        ],
        "links": [["arm_core", "axi"], ["dma", "axi"], ["acc", "axi"], ["dram", "axi"]],
        "trigger_points": [
            {"id": "axi_beat", "location": "axi", "signal": "beat", "classes": ["MDBG", "MPF"]},
            {"id": "dma_start", "location": "dma", "signal": "start", "classes": ["MDBG", "MPF"]},
            {"id": "dma_done", "location": "dma", "signal": "done", "classes": ["MDBG", "MPF"]}
        ]
    }}"#;

    fn zynq() -> PlatformModel {
        parse_platform(ZYNQ).unwrap()
    }

    #[test]
    fn star_platform() {
        let p = zynq();
        assert_eq!(p.components.len(), 5);
        assert_eq!(p.components[1].kind, ComponentKind::Interconnection);
        assert_eq!(p.trigger_points.len(), 3);
    }

    #[test]
    fn dangling_link_names_the_id() {
        let text = ZYNQ.replace(r#"["dram", "axi"]"#, r#"["gpu", "axi"]"#);
        match parse_platform(&text) {
            Err(ModelError::DanglingReference { id, path }) => {
                assert_eq!(id, "gpu");
                assert_eq!(path, "platform.links[3]");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_node_is_connected() {
        let p = parse_platform(r#"{"platform": {"name": "solo", "components": [{"id": "cpu", "kind": "Core"}]}}"#)
            .unwrap();
        assert_eq!(p.components.len(), 1);
        assert!(p.links.is_empty());
    }

    #[test]
    fn disconnected_graph() {
        let text = ZYNQ.replace(r#", ["dram", "axi"]"#, "");
        let err = parse_platform(&text).unwrap_err();
        assert!(matches!(err, ModelError::Disconnected { ref id, .. } if id == "dram"), "{err}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_platform("{\n  \"platform\": [\n").unwrap_err();
        match err {
            ModelError::Syntax { line, .. } => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_kind_rejected() {
        let text = ZYNQ.replace(r#""kind": "Memory""#, r#""kind": "Gpu""#);
        assert!(matches!(
            parse_platform(&text),
            Err(ModelError::UnknownComponentKind { kind, .. }) if kind == "Gpu"
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = ZYNQ.replace(r#""id": "dram""#, r#""id": "dma""#);
        assert!(matches!(
            parse_platform(&text),
            Err(ModelError::DuplicateId { what: "component", id, .. }) if id == "dma"
        ));
        let text = ZYNQ.replace(r#""id": "dma_done", "location": "dma", "signal": "done""#, r#""id": "dma_done", "location": "dma", "signal": "start""#);
        assert!(matches!(parse_platform(&text), Err(ModelError::DuplicateTriggerNet { .. })));
    }

    #[test]
    fn empty_classes_rejected() {
        let text = ZYNQ.replace(r#""classes": ["MDBG", "MPF"]}
        ]"#, r#""classes": []}
        ]"#);
        assert!(matches!(parse_platform(&text), Err(ModelError::EmptyClasses { .. })));
    }

    #[test]
    fn empty_rqm_documents() {
        let p = zynq();
        assert!(parse_rqms("{}", &p).unwrap().is_empty());
        assert!(parse_rqms(r#"{"rqms": []}"#, &p).unwrap().is_empty());
    }

    #[test]
    fn interval_gets_timer_from_library() {
        let rqms = parse_rqms(
            r#"{"rqms": [{"id": "RQM2", "class": "MPF", "target": "acc", "metric": "Interval"}]}"#,
            &zynq(),
        )
        .unwrap();
        let req = &rqms[0].requirement;
        assert_eq!(req.len(), 1);
        assert_eq!(req[0].location, Location::Role(Role::DataM));
        assert_eq!(req[0].monitor_kind, MonitorKind::TMON);
        assert_eq!(req[0].width_bits, 64);
    }

    #[test]
    fn transfer_fault_check_gets_programmable_counter() {
        let rqms = parse_rqms(
            r#"{"rqms": [{"id": "RQM1", "class": "MDBG", "target": "acc", "metric": "FaultCheck",
                "params": {"expected_count": 64, "scope": "transfer"}}]}"#,
            &zynq(),
        )
        .unwrap();
        let req = &rqms[0].requirement;
        assert_eq!(req.len(), 1);
        assert_eq!(req[0].location, Location::Role(Role::Int));
        assert_eq!(req[0].monitor_kind, MonitorKind::EVMON);
        assert_eq!(req[0].width_bits, 32);
        assert!(req[0].programmable);
    }

    #[test]
    fn rqm_errors() {
        let p = zynq();
        let one = |body: &str| parse_rqms(&format!(r#"{{"rqms": [{body}]}}"#), &p);
        assert!(matches!(
            one(r#"{"id": "r", "class": "Perf", "target": "acc", "metric": "Interval"}"#),
            Err(ModelError::UnknownRqmClass { class, .. }) if class == "Perf"
        ));
        assert!(matches!(
            one(r#"{"id": "r", "class": "MPF", "target": "gpu", "metric": "Interval"}"#),
            Err(ModelError::UnresolvedTarget { target, .. }) if target == "gpu"
        ));
        assert!(matches!(
            one(r#"{"id": "r", "class": "MDBG", "target": "acc", "metric": "Watchdog"}"#),
            Err(ModelError::MissingParam { param: "threshold_cycles", .. })
        ));
        assert!(matches!(
            one(r#"{"id": "r", "class": "MDBG", "target": "acc", "metric": "FaultCheck", "params": {"scope": "compute"}}"#),
            Err(ModelError::MissingParam { param: "expected_count", .. })
        ));
        assert!(matches!(
            one(r#"{"id": "r", "class": "MDBG", "target": "acc", "metric": "FaultCheck", "params": {"expected_count": 3}}"#),
            Err(ModelError::MissingParam { param: "scope", .. })
        ));
        assert!(matches!(
            one(r#"{"id": "r", "class": "MPF", "target": "acc", "metric": "Watchdog", "params": {"threshold_cycles": 3}}"#),
            Err(ModelError::LibraryClassMismatch { .. })
        ));
        assert!(matches!(
            one(r#"{"id": "r", "class": "PET", "target": "acc", "metric": "EventCount"}"#),
            Err(ModelError::NoDefaultRequirement { class: RqmClass::PET, .. })
        ));
        assert!(matches!(
            one(r#"{"id": "r", "class": "MDBG", "target": "acc", "metric": "Watchdog", "params": {"threshold_cycles": "soon"}}"#),
            Err(ModelError::InvalidParam { .. })
        ));
    }

    #[test]
    fn explicit_requirement_checks() {
        let p = zynq();
        let req = |r: &str| {
            parse_rqms(
                &format!(r#"{{"rqms": [{{"id": "r", "class": "PET", "target": "acc", "metric": "EventCount", "requirement": [{r}]}}]}}"#),
                &p,
            )
        };
        let ok = req(r#"{"location": "dram", "monitor_kind": "EVMON", "width_bits": 16, "signal": "beat"}"#).unwrap();
        assert_eq!(ok[0].requirement[0].location, Location::Component("dram".into()));
        assert!(matches!(
            req(r#"{"location": "Int", "monitor_kind": "EVMON", "width_bits": 65, "signal": "beat"}"#),
            Err(ModelError::InvalidWidth { width: 65, .. })
        ));
        assert!(matches!(
            req(r#"{"location": "Int", "monitor_kind": "EVMON", "width_bits": 0, "signal": "beat"}"#),
            Err(ModelError::InvalidWidth { width: 0, .. })
        ));
        assert!(matches!(
            req(r#"{"location": "DataM", "monitor_kind": "TMON", "width_bits": 32, "programmable": true}"#),
            Err(ModelError::InvalidRequirement { .. })
        ));
        assert!(matches!(
            req(r#"{"location": "Bus", "monitor_kind": "EVMON", "width_bits": 8, "signal": "beat"}"#),
            Err(ModelError::UnresolvedLocation { .. })
        ));
        assert!(matches!(
            req(r#"{"location": "Int", "monitor_kind": "PMON", "width_bits": 8}"#),
            Err(ModelError::UnknownMonitorKind { .. })
        ));
    }

    #[test]
    fn serialize_reparse_identical() {
        let p = zynq();
        assert_eq!(parse_platform(&p.to_json()).unwrap(), p);
    }
}
