use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Binding, Direction, Netlist, Width};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LintError {
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("instance `{instance}` uses undeclared module `{module}`")]
    UnknownModule { instance: String, module: String },
    #[error("instance `{instance}` binds unknown parameter `{param}`")]
    UnknownParam { instance: String, param: String },
    #[error("instance `{instance}` binds unknown or repeated port `{port}`")]
    BadPort { instance: String, port: String },
    #[error("instance `{instance}` leaves input `{port}` unconnected")]
    UnboundInput { instance: String, port: String },
    #[error("instance `{instance}` uses undeclared net `{net}`")]
    UndeclaredNet { instance: String, net: String },
    #[error("instance `{instance}` port `{port}` is {expected} bits wide but is bound to {found} bits")]
    WidthMismatch {
        instance: String,
        port: String,
        expected: u64,
        found: u64,
    },
    #[error("net `{0}` has no driver")]
    NoDriver(String),
    #[error("net `{0}` has no sink")]
    NoSink(String),
    #[error("net `{0}` has more than one driver")]
    MultipleDrivers(String),
}

/// Node of the connection graph: an instance, or a top-level port as `port:<name>`.
fn port_node(name: &str) -> String {
    format!("port:{name}")
}

#[derive(Default)]
struct Ends {
    drivers: Vec<String>,
    sinks: Vec<String>,
}

/// Drivers and sinks of every declared net. Returns lint findings for
/// anything that cannot be resolved along the way.
fn net_ends(netlist: &Netlist, errors: &mut Vec<LintError>) -> BTreeMap<String, Ends> {
    let top = &netlist.top;
    let mut widths: BTreeMap<&str, u64> = BTreeMap::new();
    let mut ends: BTreeMap<String, Ends> = BTreeMap::new();
    for p in &top.ports {
        let w = match &p.width {
            Width::Bits(w) => *w,
            Width::Param(_) => 0,
        };
        if widths.insert(&p.name, w).is_some() {
            errors.push(LintError::Duplicate(p.name.clone()));
        }
        let e = ends.entry(p.name.clone()).or_default();
        match p.direction {
            Direction::Input => e.drivers.push(port_node(&p.name)),
            Direction::Output => e.sinks.push(port_node(&p.name)),
        }
    }
    for n in &top.nets {
        if widths.insert(&n.name, n.width).is_some() {
            errors.push(LintError::Duplicate(n.name.clone()));
        }
        ends.entry(n.name.clone()).or_default();
    }

    let mut names = BTreeSet::new();
    for m in &netlist.modules {
        if !names.insert(m.name.as_str()) {
            errors.push(LintError::Duplicate(m.name.clone()));
        }
    }
    let mut inst_names = BTreeSet::new();
    for inst in &top.instances {
        if !inst_names.insert(inst.name.as_str()) {
            errors.push(LintError::Duplicate(inst.name.clone()));
        }
        let Some(module) = netlist.module(&inst.module) else {
            errors.push(LintError::UnknownModule {
                instance: inst.name.clone(),
                module: inst.module.clone(),
            });
            continue;
        };
        let mut params: BTreeMap<&str, u64> = module.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        for (k, v) in &inst.params {
            match params.get_mut(k.as_str()) {
                Some(slot) => *slot = *v,
                None => errors.push(LintError::UnknownParam {
                    instance: inst.name.clone(),
                    param: k.clone(),
                }),
            }
        }
        let mut bound = BTreeSet::new();
        for (pname, binding) in &inst.ports {
            let port = module.ports.iter().find(|p| &p.name == pname);
            let Some(port) = port.filter(|_| bound.insert(pname.as_str())) else {
                errors.push(LintError::BadPort {
                    instance: inst.name.clone(),
                    port: pname.clone(),
                });
                continue;
            };
            let mut found = 0;
            for net in binding.nets() {
                let Some(w) = widths.get(net.as_str()) else {
                    errors.push(LintError::UndeclaredNet {
                        instance: inst.name.clone(),
                        net: net.clone(),
                    });
                    continue;
                };
                found += w;
                let e = ends.get_mut(net).expect("declared net has an entry");
                match port.direction {
                    Direction::Input => e.sinks.push(inst.name.clone()),
                    Direction::Output => e.drivers.push(inst.name.clone()),
                }
            }
            let expected = match &port.width {
                Width::Bits(w) => Some(*w),
                Width::Param(p) => params.get(p.as_str()).copied(),
            };
            if *binding != Binding::Open && expected != Some(found) {
                errors.push(LintError::WidthMismatch {
                    instance: inst.name.clone(),
                    port: pname.clone(),
                    expected: expected.unwrap_or(0),
                    found,
                });
            }
        }
        for p in &module.ports {
            let open = inst
                .ports
                .iter()
                .find(|(n, _)| n == &p.name)
                .is_none_or(|(_, b)| *b == Binding::Open);
            if p.direction == Direction::Input && open {
                errors.push(LintError::UnboundInput {
                    instance: inst.name.clone(),
                    port: p.name.clone(),
                });
            }
        }
    }
    ends
}

/// Structural checks: references resolve, widths agree, and every internal
/// net has exactly one driver and at least one sink.
pub fn lint(netlist: &Netlist) -> Vec<LintError> {
    let mut errors = Vec::new();
    let ends = net_ends(netlist, &mut errors);
    let top_ports: BTreeSet<&str> = netlist.top.ports.iter().map(|p| p.name.as_str()).collect();
    for (net, e) in &ends {
        if e.drivers.len() > 1 {
            errors.push(LintError::MultipleDrivers(net.clone()));
        }
        if top_ports.contains(net.as_str()) {
            continue;
        }
        if e.drivers.is_empty() {
            errors.push(LintError::NoDriver(net.clone()));
        }
        if e.sinks.is_empty() {
            errors.push(LintError::NoSink(net.clone()));
        }
    }
    errors
}

impl Netlist {
    /// Directed driver → sink edges between instances (and top ports),
    /// one per pair joined by at least one net.
    pub fn connection_graph(&self) -> BTreeSet<(String, String)> {
        let mut ignored = Vec::new();
        let ends = net_ends(self, &mut ignored);
        let mut edges = BTreeSet::new();
        for e in ends.values() {
            for d in &e.drivers {
                for s in &e.sinks {
                    edges.insert((d.clone(), s.clone()));
                }
            }
        }
        edges
    }
}
