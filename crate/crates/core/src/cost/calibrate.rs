use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use super::{nnls, BlockKey, CostError, CostParams, Metric, Overhead, INFRA_KEY, LUMP_KEY};

/// A measured configuration: how many blocks of each kind it contains and
/// the overhead measured over the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub name: String,
    pub inventory: BTreeMap<String, f64>,
    pub deltas: Overhead,
}

/// Largest acceptable absolute fit residual, per metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance(pub Overhead);

impl Tolerance {
    /// 0.1 percentage points of the baseline for LUT, FF and SWOV; 1 mW for
    /// power, whose measurements only have 1 mW resolution.
    pub fn default_for(baseline: &Overhead) -> Self {
        Tolerance(Overhead {
            lut: baseline.lut * 1e-3,
            ff: baseline.ff * 1e-3,
            pwr_mw: 1.0,
            swov_us: baseline.swov_us * 1e-3,
        })
    }
}

/// Fits per-block costs to `observations` by non-negative least squares,
/// one metric at a time.
pub fn calibrate(observations: &[Observation], baseline: Overhead, tol: &Tolerance) -> Result<CostParams, CostError> {
    if observations.is_empty() {
        return Err(CostError::NoObservations);
    }
    let keys: Vec<&str> = observations
        .iter()
        .flat_map(|o| o.inventory.keys().map(String::as_str))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for k in &keys {
        if *k != LUMP_KEY && *k != INFRA_KEY && BlockKey::parse(k).is_none() {
            return Err(CostError::BadKey(k.to_string()));
        }
    }
    for o in observations {
        if o.inventory.values().any(|n| !(n.is_finite() && *n >= 0.0)) {
            return Err(CostError::InvalidParams(format!("observation `{}` has a negative count", o.name)));
        }
    }

    let design = DMatrix::from_fn(observations.len(), keys.len(), |r, c| {
        observations[r].inventory.get(keys[c]).copied().unwrap_or(0.0)
    });
    let mut blocks: BTreeMap<String, Overhead> = keys.iter().map(|k| (k.to_string(), Overhead::ZERO)).collect();
    for m in Metric::ALL {
        let rhs = DVector::from_iterator(observations.len(), observations.iter().map(|o| o.deltas.get(m)));
        let x = nnls(&design, &rhs);
        let residual = (&rhs - &design * &x).amax();
        let tolerance = tol.0.get(m);
        if residual > tolerance {
            return Err(CostError::InfeasibleCalibration {
                metric: m.name(),
                residual,
                tolerance,
            });
        }
        for (k, v) in keys.iter().zip(x.iter()) {
            blocks.get_mut(*k).expect("key listed").set(m, *v);
        }
    }

    let params = CostParams {
        baseline,
        blocks,
        interpolate: true,
        reuse_tmon_share: false,
    };
    params.validate()?;
    Ok(params)
}

/// Calibration input document.
///
/// Each observation gives either absolute `deltas` or `percent` of the
/// baseline.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationInput {
    pub baseline: Overhead,
    pub observations: Vec<RawObservation>,
    #[serde(default)]
    pub tolerance: Option<Overhead>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawObservation {
    pub name: String,
    pub inventory: BTreeMap<String, f64>,
    #[serde(default)]
    pub percent: Option<Overhead>,
    #[serde(default)]
    pub deltas: Option<Overhead>,
}

impl CalibrationInput {
    pub fn from_json(text: &str) -> Result<Self, CostError> {
        Ok(serde_json::from_str(text).map_err(crate::model::ModelError::from)?)
    }

    pub fn observations(&self) -> Result<Vec<Observation>, CostError> {
        self.observations
            .iter()
            .map(|o| {
                let deltas = match (&o.percent, &o.deltas) {
                    (Some(p), None) => p.map(|m, v| v * self.baseline.get(m) / 100.0),
                    (None, Some(d)) => *d,
                    _ => {
                        return Err(CostError::InvalidParams(format!(
                            "observation `{}` needs exactly one of `percent` and `deltas`",
                            o.name
                        )))
                    }
                };
                Ok(Observation {
                    name: o.name.clone(),
                    inventory: o.inventory.clone(),
                    deltas,
                })
            })
            .collect()
    }

    pub fn run(&self) -> Result<CostParams, CostError> {
        let tol = self
            .tolerance
            .map(Tolerance)
            .unwrap_or_else(|| Tolerance::default_for(&self.baseline));
        calibrate(&self.observations()?, self.baseline, &tol)
    }
}
