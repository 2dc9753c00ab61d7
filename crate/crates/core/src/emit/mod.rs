//! Structural netlist of the monitoring layer woven into the platform.
//!
//! The text form is a structural subset of Verilog-2001: module interfaces,
//! `wire` declarations and named-port instances. Every module except the
//! last is an interface-only template; the last one is the top.

mod check;
mod parse;

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::model::PlatformModel;
use crate::synth::MonitoringTopology;

pub use check::{lint, LintError};
pub use parse::{parse_netlist, NetlistError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    fn keyword(self) -> &'static str {
        match self {
            Direction::Input => "input ",
            Direction::Output => "output",
        }
    }
}

/// Bit width of a port: a literal or the value of a module parameter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Width {
    Bits(u64),
    Param(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub width: Width,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub name: String,
    /// Parameters with their default values, in declaration order.
    pub params: Vec<(String, u64)>,
    pub ports: Vec<Port>,
}

/// What an instance port is tied to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Open,
    Net(String),
    /// `{a, b, ...}`, most significant first.
    Concat(Vec<String>),
}

impl Binding {
    pub fn nets(&self) -> &[String] {
        match self {
            Binding::Open => &[],
            Binding::Net(n) => std::slice::from_ref(n),
            Binding::Concat(ns) => ns,
        }
    }

    fn of(mut nets: Vec<String>) -> Binding {
        match nets.len() {
            0 => Binding::Open,
            1 => Binding::Net(nets.pop().unwrap()),
            _ => Binding::Concat(nets),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub module: String,
    pub name: String,
    pub params: Vec<(String, u64)>,
    pub ports: Vec<(String, Binding)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    pub width: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Top {
    pub name: String,
    pub ports: Vec<Port>,
    pub nets: Vec<Net>,
    pub instances: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub modules: Vec<Module>,
    pub top: Top,
}

fn port(name: &str, direction: Direction, width: Width) -> Port {
    Port {
        name: name.to_string(),
        direction,
        width,
    }
}

fn input(name: &str) -> Port {
    port(name, Direction::Input, Width::Bits(1))
}

fn output(name: &str) -> Port {
    port(name, Direction::Output, Width::Bits(1))
}

fn param_width(p: &str) -> Width {
    Width::Param(p.to_string())
}

fn params(kv: &[(&str, u64)]) -> Vec<(String, u64)> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn component_module(id: &str) -> String {
    format!("pc_{id}")
}

pub fn component_instance(id: &str) -> String {
    format!("u_{id}")
}

pub const GMI_INSTANCE: &str = "u_gmi";
pub const GM_INSTANCE: &str = "u_gm";
pub const IRQ_INSTANCE: &str = "u_irq_ctrl";

fn pc_event_port(signal: &str) -> String {
    format!("ev_{signal}")
}

/// Platform stubs: a clock input and one output per trigger point.
fn component_modules(platform: &PlatformModel) -> Vec<Module> {
    let mut comps: Vec<_> = platform.components.iter().collect();
    comps.sort_by(|a, b| a.id.cmp(&b.id));
    comps
        .into_iter()
        .map(|c| {
            let mut ports = vec![input("clk")];
            ports.extend(signals_of(platform, &c.id).iter().map(|s| output(&pc_event_port(s))));
            Module {
                name: component_module(&c.id),
                params: Vec::new(),
                ports,
            }
        })
        .collect()
}

fn signals_of<'a>(platform: &'a PlatformModel, component: &str) -> Vec<&'a str> {
    let mut sigs: Vec<&str> = platform
        .trigger_points
        .iter()
        .filter(|t| t.location == component)
        .map(|t| t.signal.as_str())
        .collect();
    sigs.sort();
    sigs
}

/// Interface templates of the monitoring blocks. Only `gm` depends on the
/// topology, through its rule constants.
fn block_modules(topology: &MonitoringTopology) -> Vec<Module> {
    let data_w = total_width(topology).max(1);
    let mut gm_params = params(&[("N_RULES", topology.gm.rules.len().max(1) as u64), ("DATA_W", data_w)]);
    gm_params.extend(rule_constants(topology));
    vec![
        Module {
            name: "adapter".into(),
            params: Vec::new(),
            ports: vec![input("clk"), input("ev_in"), output("ev_out")],
        },
        Module {
            name: "evmon".into(),
            params: params(&[("WIDTH", 32), ("PROG", 0)]),
            ports: vec![
                input("clk"),
                input("ev"),
                port("count", Direction::Output, param_width("WIDTH")),
            ],
        },
        Module {
            name: "tmon".into(),
            params: params(&[("WIDTH", 64)]),
            ports: vec![
                input("clk"),
                input("start"),
                input("stop"),
                port("interval", Direction::Output, param_width("WIDTH")),
            ],
        },
        Module {
            name: "nucleus".into(),
            params: params(&[("N_EV", 1), ("DATA_W", 1)]),
            ports: vec![
                input("clk"),
                port("ev_in", Direction::Input, param_width("N_EV")),
                port("ev_out", Direction::Output, param_width("N_EV")),
                port("mon_in", Direction::Input, param_width("DATA_W")),
                port("gmi_out", Direction::Output, param_width("DATA_W")),
            ],
        },
        Module {
            name: "gmi".into(),
            params: params(&[("N_NUC", 1), ("DATA_W", 1)]),
            ports: vec![
                input("clk"),
                port("nuc_in", Direction::Input, param_width("DATA_W")),
                port("gm_out", Direction::Output, param_width("DATA_W")),
            ],
        },
        Module {
            name: "gm".into(),
            params: gm_params,
            ports: vec![
                input("clk"),
                port("mon_in", Direction::Input, param_width("DATA_W")),
                port("irq_req", Direction::Output, param_width("N_RULES")),
            ],
        },
        Module {
            name: "irq_ctrl".into(),
            params: params(&[("N_SRC", 1)]),
            ports: vec![
                input("clk"),
                port("req", Direction::Input, param_width("N_SRC")),
                output("irq"),
            ],
        },
    ]
}

fn rule_constants(topology: &MonitoringTopology) -> Vec<(String, u64)> {
    topology
        .gm
        .rules
        .iter()
        .flat_map(|r| r.params.iter().map(move |(k, v)| (format!("{}_{k}", r.rqm), *v)))
        .collect()
}

fn total_width(topology: &MonitoringTopology) -> u64 {
    topology.monitors.iter().map(|m| u64::from(m.width_bits)).sum()
}

fn adapter_net(adapter: &str) -> String {
    format!("{adapter}_ev")
}

fn filtered_net(nucleus: &str, signal: &str) -> String {
    format!("{nucleus}_{signal}")
}

fn value_net(monitor: &str) -> String {
    format!("{monitor}_value")
}

fn gmi_net(nucleus: &str) -> String {
    format!("{nucleus}_gmi")
}

const GMI_GM_NET: &str = "gmi_gm";
const GM_IRQ_NET: &str = "gm_irq_req";

fn clk() -> (String, Binding) {
    ("clk".into(), Binding::Net("clk".into()))
}

fn bind(port: &str, nets: Vec<String>) -> (String, Binding) {
    (port.to_string(), Binding::of(nets))
}

/// Lays out the monitored platform as a netlist.
pub fn build_netlist(topology: &MonitoringTopology) -> Netlist {
    let platform = &topology.platform;
    let mut nets: Vec<Net> = Vec::new();
    let mut wire = |name: String, width: u64| {
        nets.push(Net {
            name: name.clone(),
            width,
        });
        name
    };
    let mut instances = Vec::new();

    // Event nets leaving the platform, one per monitored trigger point.
    let mut event_nets: BTreeMap<&str, String> = BTreeMap::new();
    for a in &topology.adapters {
        let tp = platform.trigger(&a.trigger).expect("adapter trigger exists");
        event_nets.insert(a.trigger.as_str(), wire(tp.net_name(), 1));
    }

    let mut comps: Vec<_> = platform.components.iter().collect();
    comps.sort_by(|a, b| a.id.cmp(&b.id));
    for c in comps {
        let mut ports = vec![clk()];
        for sig in signals_of(platform, &c.id) {
            let tp = platform.trigger_at(&c.id, sig).expect("signal of component");
            let nets = event_nets.get(tp.id.as_str()).cloned().into_iter().collect();
            ports.push(bind(&pc_event_port(sig), nets));
        }
        instances.push(Instance {
            module: component_module(&c.id),
            name: component_instance(&c.id),
            params: Vec::new(),
            ports,
        });
    }

    let mut adapter_out: BTreeMap<&str, String> = BTreeMap::new();
    for a in &topology.adapters {
        let out = wire(adapter_net(&a.id), 1);
        instances.push(Instance {
            module: "adapter".into(),
            name: a.id.clone(),
            params: Vec::new(),
            ports: vec![
                clk(),
                bind("ev_in", vec![event_nets[a.trigger.as_str()].clone()]),
                bind("ev_out", vec![out.clone()]),
            ],
        });
        adapter_out.insert(a.trigger.as_str(), out);
    }

    // Filtered events per nucleus, keyed by trigger id.
    let mut filtered: BTreeMap<&str, String> = BTreeMap::new();
    let mut nucleus_instances = Vec::new();
    for n in &topology.nuclei {
        let triggers: Vec<&str> = topology
            .adapters
            .iter()
            .filter(|a| platform.trigger(&a.trigger).is_some_and(|t| t.location == n.location))
            .map(|a| a.trigger.as_str())
            .collect();
        let mut outs = Vec::new();
        for t in &triggers {
            let signal = &platform.trigger(t).expect("trigger exists").signal;
            let net = wire(filtered_net(&n.id, signal), 1);
            filtered.insert(t, net.clone());
            outs.push(net);
        }
        let data_w: u64 = n
            .monitors
            .iter()
            .filter_map(|id| topology.monitor(id))
            .map(|m| u64::from(m.width_bits))
            .sum();
        let values = n.monitors.iter().map(|m| value_net(m)).collect();
        let gmi = wire(gmi_net(&n.id), data_w);
        nucleus_instances.push(Instance {
            module: "nucleus".into(),
            name: n.id.clone(),
            params: params(&[("N_EV", triggers.len() as u64), ("DATA_W", data_w)]),
            ports: vec![
                clk(),
                bind("ev_in", triggers.iter().map(|t| adapter_out[t].clone()).collect()),
                bind("ev_out", outs),
                bind("mon_in", values),
                bind("gmi_out", vec![gmi]),
            ],
        });
    }

    for m in &topology.monitors {
        let value = wire(value_net(&m.id), u64::from(m.width_bits));
        let start = filtered[m.start_trigger.as_str()].clone();
        let (module, params, mut ports) = match &m.stop_trigger {
            None => (
                "evmon",
                params(&[("WIDTH", m.width_bits.into()), ("PROG", m.programmable.into())]),
                vec![clk(), bind("ev", vec![start])],
            ),
            Some(stop) => (
                "tmon",
                params(&[("WIDTH", m.width_bits.into())]),
                vec![
                    clk(),
                    bind("start", vec![start]),
                    bind("stop", vec![filtered[stop.as_str()].clone()]),
                ],
            ),
        };
        ports.push(bind(if module == "evmon" { "count" } else { "interval" }, vec![value]));
        instances.push(Instance {
            module: module.into(),
            name: m.id.clone(),
            params,
            ports,
        });
    }
    instances.extend(nucleus_instances);

    let data_w = total_width(topology);
    if topology.gmi.present {
        let bus = wire(GMI_GM_NET.into(), data_w);
        instances.push(Instance {
            module: "gmi".into(),
            name: GMI_INSTANCE.into(),
            params: params(&[("N_NUC", topology.gmi.nuclei.len() as u64), ("DATA_W", data_w)]),
            ports: vec![
                clk(),
                bind("nuc_in", topology.gmi.nuclei.iter().map(|n| gmi_net(n)).collect()),
                bind("gm_out", vec![bus]),
            ],
        });
    }
    let n_rules = topology.gm.rules.len() as u64;
    if topology.gm.present {
        let req = if topology.irq.present {
            vec![wire(GM_IRQ_NET.into(), n_rules)]
        } else {
            Vec::new()
        };
        let mut p = params(&[("N_RULES", n_rules), ("DATA_W", data_w)]);
        p.extend(rule_constants(topology));
        instances.push(Instance {
            module: "gm".into(),
            name: GM_INSTANCE.into(),
            params: p,
            ports: vec![clk(), bind("mon_in", vec![GMI_GM_NET.into()]), bind("irq_req", req)],
        });
    }
    let mut top_ports = vec![input("clk")];
    if topology.irq.present {
        top_ports.push(output("irq"));
        instances.push(Instance {
            module: "irq_ctrl".into(),
            name: IRQ_INSTANCE.into(),
            params: params(&[("N_SRC", n_rules)]),
            ports: vec![
                clk(),
                bind("req", vec![GM_IRQ_NET.into()]),
                bind("irq", vec!["irq".into()]),
            ],
        });
    }

    let mut modules = component_modules(platform);
    modules.extend(block_modules(topology));
    Netlist {
        modules,
        top: Top {
            name: format!("monitored_{}", platform.name),
            ports: top_ports,
            nets,
            instances,
        },
    }
}

/// Netlist text of the monitored platform; a pure function of `topology`.
pub fn emit_netlist(topology: &MonitoringTopology) -> String {
    let header = format!(
        "// Monitored platform `{}`: monitoring layer woven into the platform.\n\
         // Structural Verilog-2001 subset: module interfaces, wires and instances only;\n\
         // block behaviour lives in the reference templates, not in this file.\n\
         // GM decision-rule constants are encoded as parameters of module `gm`\n\
         // (fixed at build time), not as runtime-programmable registers.\n",
        topology.platform.name
    );
    let mut out = header;
    out.push('\n');
    out.push_str(&build_netlist(topology).render());
    out
}

fn range(width: &Width) -> String {
    match width {
        Width::Bits(1) => String::new(),
        Width::Bits(w) => format!("[{}:0] ", w - 1),
        Width::Param(p) => format!("[{p}-1:0] "),
    }
}

fn render_ports(out: &mut String, ports: &[Port]) {
    out.push_str("(\n");
    for (i, p) in ports.iter().enumerate() {
        let sep = if i + 1 < ports.len() { "," } else { "" };
        writeln!(out, "  {} wire {}{}{sep}", p.direction.keyword(), range(&p.width), p.name).unwrap();
    }
    out.push_str(");\n");
}

fn render_binding(b: &Binding) -> String {
    match b {
        Binding::Open => String::new(),
        Binding::Net(n) => n.clone(),
        Binding::Concat(ns) => format!("{{{}}}", ns.join(", ")),
    }
}

impl Netlist {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.modules {
            write!(out, "module {} ", m.name).unwrap();
            if !m.params.is_empty() {
                out.push_str("#(\n");
                for (i, (k, v)) in m.params.iter().enumerate() {
                    let sep = if i + 1 < m.params.len() { "," } else { "" };
                    writeln!(out, "  parameter {k} = {v}{sep}").unwrap();
                }
                out.push_str(") ");
            }
            render_ports(&mut out, &m.ports);
            out.push_str("endmodule\n\n");
        }

        let top = &self.top;
        write!(out, "module {} ", top.name).unwrap();
        render_ports(&mut out, &top.ports);
        if !top.nets.is_empty() {
            out.push('\n');
        }
        for n in &top.nets {
            writeln!(out, "  wire {}{};", range(&Width::Bits(n.width)), n.name).unwrap();
        }
        for inst in &top.instances {
            out.push('\n');
            write!(out, "  {} ", inst.module).unwrap();
            if !inst.params.is_empty() {
                let ps: Vec<String> = inst.params.iter().map(|(k, v)| format!(".{k}({v})")).collect();
                write!(out, "#({}) ", ps.join(", ")).unwrap();
            }
            writeln!(out, "{} (", inst.name).unwrap();
            for (i, (p, b)) in inst.ports.iter().enumerate() {
                let sep = if i + 1 < inst.ports.len() { "," } else { "" };
                writeln!(out, "    .{p}({}){sep}", render_binding(b)).unwrap();
            }
            out.push_str("  );\n");
        }
        out.push_str("\nendmodule\n");
        out
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// Monitor instances by block key (`evmon32p`, `tmon64`, ...).
    pub fn monitor_inventory(&self) -> BTreeMap<String, usize> {
        let mut inv = BTreeMap::new();
        for inst in &self.top.instances {
            let param = |k: &str| inst.params.iter().find(|p| p.0 == k).map(|p| p.1);
            let key = match inst.module.as_str() {
                "evmon" => format!(
                    "evmon{}{}",
                    param("WIDTH").unwrap_or(32),
                    if param("PROG").unwrap_or(0) != 0 { "p" } else { "" }
                ),
                "tmon" => format!("tmon{}", param("WIDTH").unwrap_or(64)),
                _ => continue,
            };
            *inv.entry(key).or_insert(0) += 1;
        }
        inv
    }

    /// Instance counts per module.
    pub fn instance_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for inst in &self.top.instances {
            *counts.entry(inst.module.as_str()).or_insert(0) += 1;
        }
        counts
    }
}
