//! Synthesis toolkit for layered hardware monitoring systems.
//!
//! The pipeline takes a platform description and a set of monitoring
//! requirements (RQMs) and produces:
//!
//! * a [`synth::MonitoringTopology`]: adapters, nuclei with EVMON/TMON
//!   instances, the global monitor interface, the global monitor and the
//!   interrupt controller;
//! * a [`cost::CostReport`] with predicted LUT/FF/power/software overhead;
//! * a structural netlist ([`emit`]);
//! * per-RQM results of replaying an event trace through the layer ([`sim`]).

pub mod model;
pub mod cli;
pub mod cost;
pub mod emit;
pub mod sim;
pub mod synth;

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::model::{parse_platform, parse_rqms, PlatformModel, RqmSpec};

    pub const ZYNQ: &str = include_str!("../../../samples/zynq.json");
    pub const ALL_RQMS: &str = include_str!("../../../samples/rqms_all.json");

    pub fn zynq() -> PlatformModel {
        parse_platform(ZYNQ).unwrap()
    }

    /// RQMs from the sample library, picked by id.
    pub fn rqms(ids: &[&str]) -> Vec<RqmSpec> {
        let all = parse_rqms(ALL_RQMS, &zynq()).unwrap();
        ids.iter()
            .map(|id| all.iter().find(|r| r.id == *id).unwrap().clone())
            .collect()
    }
}
