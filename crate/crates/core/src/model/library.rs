//! Default RQM -> monitor requirement library.
//!
//! Only MDBG and MPF requirements have defaults. The assignments are the
//! smallest per-RQM sets whose unions, after sharing, give the calibrated
//! reference inventories:
//!
//! | entry                  | requirement                          |
//! |------------------------|--------------------------------------|
//! | FaultCheck, `transfer` | Int: EVMON 32 (P) on `beat`          |
//! | Interval               | DataM: TMON 64 `start`..`done`       |
//! | FaultCheck, `compute`  | Core: EVMON 10 on `start`, on `done` |
//! | Watchdog               | DataM: TMON 64 `start`..`done`       |
//! | Throughput             | Int: EVMON 32 (P) on `beat` + DataM: TMON 64 |

use super::{Location, MetricKind, MonitorKind, MonitorRequirement, RqmClass, Role};

/// Library key for an RQM without an explicit requirement list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LibraryEntry {
    TransferFaultCheck,
    ComputeFaultCheck,
    Interval,
    Watchdog,
    Throughput,
}

impl LibraryEntry {
    /// Looks up the entry for `(class, metric, scope)`; `scope` is only
    /// consulted for FaultCheck.
    pub fn lookup(class: RqmClass, metric: MetricKind, scope: Option<&str>) -> Option<Self> {
        match (class, metric) {
            (RqmClass::MDBG, MetricKind::FaultCheck) => match scope? {
                "transfer" => Some(Self::TransferFaultCheck),
                "compute" => Some(Self::ComputeFaultCheck),
                _ => None,
            },
            (RqmClass::MDBG, MetricKind::Watchdog) => Some(Self::Watchdog),
            (RqmClass::MPF, MetricKind::Interval) => Some(Self::Interval),
            (RqmClass::MPF, MetricKind::Throughput) => Some(Self::Throughput),
            _ => None,
        }
    }

    pub fn requirements(self) -> Vec<MonitorRequirement> {
        match self {
            Self::TransferFaultCheck => vec![bus_beats()],
            Self::ComputeFaultCheck => vec![
                evmon(Location::Role(Role::Core), 10, false, "start"),
                evmon(Location::Role(Role::Core), 10, false, "done"),
            ],
            Self::Interval | Self::Watchdog => vec![transfer_timer()],
            Self::Throughput => vec![bus_beats(), transfer_timer()],
        }
    }
}

/// Default requirements for an RQM, if the library covers it.
pub fn default_requirements(
    class: RqmClass,
    metric: MetricKind,
    scope: Option<&str>,
) -> Option<Vec<MonitorRequirement>> {
    LibraryEntry::lookup(class, metric, scope).map(LibraryEntry::requirements)
}

fn evmon(location: Location, width_bits: u32, programmable: bool, signal: &str) -> MonitorRequirement {
    MonitorRequirement {
        location,
        monitor_kind: MonitorKind::EVMON,
        width_bits,
        programmable,
        signal: signal.to_string(),
        stop_signal: None,
    }
}

fn bus_beats() -> MonitorRequirement {
    evmon(Location::Role(Role::Int), 32, true, "beat")
}

fn transfer_timer() -> MonitorRequirement {
    MonitorRequirement {
        location: Location::Role(Role::DataM),
        monitor_kind: MonitorKind::TMON,
        width_bits: 64,
        programmable: false,
        signal: "start".to_string(),
        stop_signal: Some("done".to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_mdbg_and_mpf_have_defaults() {
        for class in RqmClass::ALL {
            for metric in MetricKind::ALL {
                for scope in [None, Some("transfer"), Some("compute")] {
                    let hit = default_requirements(class, metric, scope).is_some();
                    if hit {
                        assert!(matches!(class, RqmClass::MDBG | RqmClass::MPF));
                    }
                }
            }
        }
    }

    #[test]
    fn fault_check_needs_scope() {
        assert!(default_requirements(RqmClass::MDBG, MetricKind::FaultCheck, None).is_none());
        assert!(default_requirements(RqmClass::MDBG, MetricKind::FaultCheck, Some("bus")).is_none());
    }

    #[test]
    fn compute_fault_check_is_two_narrow_counters() {
        let req = LibraryEntry::ComputeFaultCheck.requirements();
        assert_eq!(req.len(), 2);
        assert!(req.iter().all(|r| r.width_bits == 10 && !r.programmable));
        assert_ne!(req[0].signal, req[1].signal);
    }
}
