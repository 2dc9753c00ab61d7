//! Linear overhead model: LUT, FF, dynamic power and software overhead of a
//! monitoring layer, relative to the unmonitored platform.
//!
//! Parameters are per block kind, keyed as `evmon<width>[p]` and
//! `tmon<width>`. The shared infrastructure (GMI, GM, interrupt controller)
//! is either its own `infra` entry or lumped with the first 64-bit TMON under
//! `tmon64+infra`, which is what the reference calibration provides since the
//! two are not separable from its observations.

mod calibrate;
mod nnls;
mod report;

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MonitorKind;
use crate::synth::{MonitorInstance, MonitoringTopology};

pub use calibrate::{calibrate, CalibrationInput, Observation, Tolerance};
pub use nnls::nnls;
pub use report::{CostLine, CostReport};

/// Key of the lumped first-TMON + shared-infrastructure entry.
pub const LUMP_KEY: &str = "tmon64+infra";
/// Key of a separately calibrated shared-infrastructure entry.
pub const INFRA_KEY: &str = "infra";
/// Attribution label for infrastructure cost not carried by a monitor.
pub const SHARED_BLOCK: &str = "shared_infrastructure";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("monitor `{monitor}`: no cost parameter for block kind `{key}`")]
    UnknownBlockKind { monitor: String, key: String },
    #[error("calibration infeasible for {metric}: residual {residual:.6} exceeds tolerance {tolerance:.6}")]
    InfeasibleCalibration {
        metric: &'static str,
        residual: f64,
        tolerance: f64,
    },
    #[error("calibration needs at least one observation")]
    NoObservations,
    #[error("invalid cost parameters: {0}")]
    InvalidParams(String),
    #[error("invalid block key `{0}`")]
    BadKey(String),
    #[error(transparent)]
    Parse(#[from] crate::model::ModelError),
}

/// One value per overhead metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    pub lut: f64,
    pub ff: f64,
    pub pwr_mw: f64,
    pub swov_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Lut,
    Ff,
    PwrMw,
    SwovUs,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Lut, Metric::Ff, Metric::PwrMw, Metric::SwovUs];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Lut => "lut",
            Metric::Ff => "ff",
            Metric::PwrMw => "pwr_mw",
            Metric::SwovUs => "swov_us",
        }
    }
}

impl Overhead {
    pub const ZERO: Overhead = Overhead {
        lut: 0.0,
        ff: 0.0,
        pwr_mw: 0.0,
        swov_us: 0.0,
    };

    pub fn new(lut: f64, ff: f64, pwr_mw: f64, swov_us: f64) -> Self {
        Overhead { lut, ff, pwr_mw, swov_us }
    }

    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Lut => self.lut,
            Metric::Ff => self.ff,
            Metric::PwrMw => self.pwr_mw,
            Metric::SwovUs => self.swov_us,
        }
    }

    pub fn set(&mut self, m: Metric, v: f64) {
        match m {
            Metric::Lut => self.lut = v,
            Metric::Ff => self.ff = v,
            Metric::PwrMw => self.pwr_mw = v,
            Metric::SwovUs => self.swov_us = v,
        }
    }

    pub fn map(self, f: impl Fn(Metric, f64) -> f64) -> Self {
        let mut out = self;
        for m in Metric::ALL {
            out.set(m, f(m, self.get(m)));
        }
        out
    }

    /// `100 * self / baseline` per metric.
    pub fn percent_of(self, baseline: &Overhead) -> Self {
        self.map(|m, v| 100.0 * v / baseline.get(m))
    }
}

impl Add for Overhead {
    type Output = Overhead;
    fn add(self, o: Overhead) -> Overhead {
        self.map(|m, v| v + o.get(m))
    }
}

impl AddAssign for Overhead {
    fn add_assign(&mut self, o: Overhead) {
        *self = *self + o;
    }
}

impl Sub for Overhead {
    type Output = Overhead;
    fn sub(self, o: Overhead) -> Overhead {
        self.map(|m, v| v - o.get(m))
    }
}

impl Mul<f64> for Overhead {
    type Output = Overhead;
    fn mul(self, k: f64) -> Overhead {
        self.map(|_, v| v * k)
    }
}

/// Parsed `evmon<w>[p]` / `tmon<w>` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct BlockKey {
    pub kind: MonitorKind,
    pub width_bits: u32,
    pub programmable: bool,
}

impl BlockKey {
    pub fn of(m: &MonitorInstance) -> Self {
        BlockKey {
            kind: m.kind,
            width_bits: m.width_bits,
            programmable: m.programmable,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (kind, rest) = if let Some(r) = s.strip_prefix("evmon") {
            (MonitorKind::EVMON, r)
        } else {
            (MonitorKind::TMON, s.strip_prefix("tmon")?)
        };
        let (digits, programmable) = match rest.strip_suffix('p') {
            Some(d) if kind == MonitorKind::EVMON => (d, true),
            _ => (rest, false),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
            return None;
        }
        let width_bits: u32 = digits.parse().ok()?;
        (1..=64).contains(&width_bits).then_some(BlockKey {
            kind,
            width_bits,
            programmable,
        })
    }
}

impl std::fmt::Display for BlockKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            MonitorKind::EVMON => write!(f, "evmon{}{}", self.width_bits, if self.programmable { "p" } else { "" }),
            MonitorKind::TMON => write!(f, "tmon{}", self.width_bits),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    pub baseline: Overhead,
    pub blocks: BTreeMap<String, Overhead>,
    /// Interpolate linearly in width between calibrated points of the same
    /// class (flat outside the calibrated range).
    #[serde(default = "default_true")]
    pub interpolate: bool,
    /// Charge TMONs after the first at their own `tmon<w>` share instead of
    /// the full lump. Needs `tmon<w>` entries to take effect.
    #[serde(default)]
    pub reuse_tmon_share: bool,
}

impl CostParams {
    pub fn from_json(text: &str) -> Result<Self, CostError> {
        let p: CostParams = serde_json::from_str(text).map_err(crate::model::ModelError::from)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("params serialize");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), CostError> {
        for m in Metric::ALL {
            let b = self.baseline.get(m);
            if !(b.is_finite() && b > 0.0) {
                return Err(CostError::InvalidParams(format!("baseline {} must be positive", m.name())));
            }
        }
        for (key, cost) in &self.blocks {
            if key != LUMP_KEY && key != INFRA_KEY && BlockKey::parse(key).is_none() {
                return Err(CostError::BadKey(key.clone()));
            }
            for m in Metric::ALL {
                let v = cost.get(m);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CostError::InvalidParams(format!("{key}.{} must be nonnegative", m.name())));
                }
            }
        }
        Ok(())
    }

    fn points(&self, kind: MonitorKind, programmable: bool) -> Vec<(u32, Overhead)> {
        let mut pts: Vec<(u32, Overhead)> = self
            .blocks
            .iter()
            .filter_map(|(k, v)| BlockKey::parse(k).map(|bk| (bk, *v)))
            .filter(|(bk, _)| bk.kind == kind && bk.programmable == programmable)
            .map(|(bk, v)| (bk.width_bits, v))
            .collect();
        pts.sort_by_key(|p| p.0);
        pts
    }

    /// Cost of one block, exact or width-interpolated.
    pub fn block_cost(&self, key: BlockKey) -> Option<Overhead> {
        if let Some(v) = self.blocks.get(&key.to_string()) {
            return Some(*v);
        }
        if !self.interpolate {
            return None;
        }
        interpolate(&self.points(key.kind, key.programmable), key.width_bits)
    }
}

fn interpolate(points: &[(u32, Overhead)], width: u32) -> Option<Overhead> {
    let (first, last) = (points.first()?, points.last()?);
    if width <= first.0 {
        return Some(first.1);
    }
    if width >= last.0 {
        return Some(last.1);
    }
    let hi = points.iter().position(|p| p.0 >= width)?;
    let (w0, c0) = points[hi - 1];
    let (w1, c1) = points[hi];
    let t = f64::from(width - w0) / f64::from(w1 - w0);
    Some(c0 + (c1 - c0) * t)
}

/// Predicts the overhead of `topology` under `params`.
pub fn estimate(topology: &MonitoringTopology, params: &CostParams) -> Result<CostReport, CostError> {
    let mut lines = Vec::new();
    if !topology.is_empty() {
        let mut tmons = topology.monitors.iter().filter(|m| m.kind == MonitorKind::TMON);
        if let Some(infra) = params.blocks.get(INFRA_KEY) {
            lines.push(CostLine::new(SHARED_BLOCK, INFRA_KEY, *infra));
        } else if let Some(lump) = params.blocks.get(LUMP_KEY) {
            match tmons.next() {
                Some(first) => lines.push(CostLine::new(&first.id, LUMP_KEY, *lump)),
                None => lines.push(CostLine::new(SHARED_BLOCK, LUMP_KEY, *lump)),
            }
        }
        for m in tmons {
            let key = BlockKey::of(m);
            let lump = params.blocks.get(LUMP_KEY).filter(|_| !params.blocks.contains_key(INFRA_KEY));
            let line = match lump {
                Some(lump) if !params.reuse_tmon_share => CostLine::new(&m.id, LUMP_KEY, *lump),
                Some(lump) => match params.block_cost(key) {
                    Some(c) => CostLine::new(&m.id, &key.to_string(), c),
                    None => CostLine::new(&m.id, LUMP_KEY, *lump),
                },
                None => CostLine::new(&m.id, &key.to_string(), priced(params, m)?),
            };
            lines.push(line);
        }
        for m in topology.monitors.iter().filter(|m| m.kind == MonitorKind::EVMON) {
            lines.push(CostLine::new(&m.id, &BlockKey::of(m).to_string(), priced(params, m)?));
        }
    }
    Ok(CostReport::new(params.baseline, lines))
}

fn priced(params: &CostParams, m: &MonitorInstance) -> Result<Overhead, CostError> {
    let key = BlockKey::of(m);
    params.block_cost(key).ok_or_else(|| CostError::UnknownBlockKind {
        monitor: m.id.clone(),
        key: key.to_string(),
    })
}

/// Shipped reference calibration.
pub fn default_params() -> CostParams {
    CostParams::from_json(include_str!("../../../../calib/table1.json")).expect("shipped calibration is valid")
}
