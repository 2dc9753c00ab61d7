use std::fmt::Write;

use serde::Serialize;

use super::{Metric, Overhead};

/// Cost attributed to one block of the layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostLine {
    pub block: String,
    pub key: String,
    pub cost: Overhead,
}

impl CostLine {
    pub fn new(block: &str, key: &str, cost: Overhead) -> Self {
        CostLine {
            block: block.to_string(),
            key: key.to_string(),
            cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub baseline: Overhead,
    pub delta: Overhead,
    pub percent: Overhead,
    pub lines: Vec<CostLine>,
}

impl CostReport {
    pub fn new(baseline: Overhead, lines: Vec<CostLine>) -> Self {
        let delta = lines.iter().fold(Overhead::ZERO, |acc, l| acc + l.cost);
        CostReport {
            baseline,
            delta,
            percent: delta.percent_of(&baseline),
            lines,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let labels = ["LUT", "FF", "PWR [mW]", "SWOV [us]"];
        writeln!(out, "{:<10} {:>12} {:>12} {:>9}", "metric", "baseline", "delta", "delta %").unwrap();
        for (m, label) in Metric::ALL.into_iter().zip(labels) {
            writeln!(
                out,
                "{:<10} {:>12.3} {:>12.3} {:>+8.2}%",
                label,
                self.baseline.get(m),
                self.delta.get(m),
                self.percent.get(m)
            )
            .unwrap();
        }
        if !self.lines.is_empty() {
            let w = self.lines.iter().map(|l| l.block.len()).max().unwrap_or(0).max(5);
            writeln!(out).unwrap();
            writeln!(
                out,
                "{:<w$} {:<13} {:>10} {:>10} {:>9} {:>9}",
                "block", "key", "LUT", "FF", "PWR[mW]", "SWOV[us]"
            )
            .unwrap();
            for l in &self.lines {
                writeln!(
                    out,
                    "{:<w$} {:<13} {:>10.3} {:>10.3} {:>9.3} {:>9.3}",
                    l.block, l.key, l.cost.lut, l.cost.ff, l.cost.pwr_mw, l.cost.swov_us
                )
                .unwrap();
            }
        }
        out
    }
}
