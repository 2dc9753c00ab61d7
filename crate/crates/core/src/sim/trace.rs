use std::fmt::Write;

use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub trigger: String,
    pub payload: Option<u64>,
}

/// Event instances in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTrace {
    pub records: Vec<TraceRecord>,
}

impl EventTrace {
    pub fn new(records: Vec<TraceRecord>) -> Self {
        EventTrace { records }
    }

    /// Reads a `cycle,trigger,payload` CSV file; the payload column may be empty.
    pub fn parse_csv(text: &str) -> Result<Self, SimError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| SimError::Csv(e.to_string()))?;
        let names: Vec<&str> = header.iter().collect();
        if names != ["cycle", "trigger", "payload"] && names != ["cycle", "trigger"] {
            return Err(SimError::Csv(format!(
                "line 1: expected header `cycle,trigger,payload`, found `{}`",
                names.join(",")
            )));
        }
        let mut records = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| SimError::Csv(e.to_string()))?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |what: &str| SimError::Csv(format!("line {line}: {what}"));
            if row.len() < 2 || row.len() > 3 {
                return Err(bad("expected 2 or 3 fields"));
            }
            let cycle = row[0].parse::<u64>().map_err(|_| bad("cycle must be a nonnegative integer"))?;
            let trigger = row[1].to_string();
            if trigger.is_empty() {
                return Err(bad("empty trigger"));
            }
            let payload = match row.get(2) {
                None | Some("") => None,
                Some(p) => Some(p.parse::<u64>().map_err(|_| bad("payload must be a nonnegative integer"))?),
            };
            records.push(TraceRecord { cycle, trigger, payload });
        }
        Ok(EventTrace { records })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,trigger,payload\n");
        for r in &self.records {
            match r.payload {
                Some(p) => writeln!(out, "{},{},{}", r.cycle, r.trigger, p),
                None => writeln!(out, "{},{},", r.cycle, r.trigger),
            }
            .unwrap();
        }
        out
    }
}
