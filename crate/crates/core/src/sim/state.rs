use serde::Serialize;

use crate::synth::max_value;

/// Saturating event counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvmonState {
    pub count: u64,
}

/// Interval timer between a start and a stop event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TmonState {
    pub running: bool,
    pub start_cycle: u64,
    /// Most recent completed start/stop interval.
    pub last_interval: Option<u64>,
    /// Whether `last_interval` did not fit the timer width.
    pub overflowed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmonEdge {
    Start,
    Stop,
}

/// Result of feeding one event to a TMON.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TmonStep {
    pub state: TmonState,
    /// Set when a stop arrived while the timer was idle.
    pub stray_stop: bool,
}

pub fn step_evmon(state: EvmonState, width_bits: u32) -> EvmonState {
    EvmonState {
        count: state.count.saturating_add(1).min(max_value(width_bits)),
    }
}

/// A start (re)arms the timer; a stop while running closes the interval.
pub fn step_tmon(state: TmonState, edge: TmonEdge, cycle: u64, width_bits: u32) -> TmonStep {
    match edge {
        TmonEdge::Start => TmonStep {
            state: TmonState {
                running: true,
                start_cycle: cycle,
                ..state
            },
            stray_stop: false,
        },
        TmonEdge::Stop if state.running => {
            let interval = cycle - state.start_cycle;
            TmonStep {
                state: TmonState {
                    running: false,
                    start_cycle: state.start_cycle,
                    last_interval: Some(interval),
                    overflowed: interval > max_value(width_bits),
                },
                stray_stop: false,
            }
        }
        TmonEdge::Stop => TmonStep {
            state,
            stray_stop: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evmon_saturates_at_width() {
        assert_eq!(step_evmon(EvmonState { count: 1022 }, 10).count, 1023);
        assert_eq!(step_evmon(EvmonState { count: 1023 }, 10).count, 1023);
        assert_eq!(step_evmon(EvmonState { count: u64::MAX }, 64).count, u64::MAX);
        assert_eq!(step_evmon(EvmonState { count: 0 }, 1).count, 1);
        assert_eq!(step_evmon(EvmonState { count: 1 }, 1).count, 1);
    }

    #[test]
    fn evmon_counts_beats() {
        let s = (0..64).fold(EvmonState::default(), |s, _| step_evmon(s, 32));
        assert_eq!(s.count, 64);
    }

    #[test]
    fn tmon_measures_interval() {
        let s = step_tmon(TmonState::default(), TmonEdge::Start, 100, 64).state;
        let s = step_tmon(s, TmonEdge::Stop, 850, 64).state;
        assert_eq!(s.last_interval, Some(750));
        assert!(!s.running && !s.overflowed);
    }

    #[test]
    fn stray_stop_leaves_state_alone() {
        let step = step_tmon(TmonState::default(), TmonEdge::Stop, 50, 64);
        assert!(step.stray_stop);
        assert_eq!(step.state, TmonState::default());
        assert_eq!(step.state.last_interval, None);
    }

    #[test]
    fn narrow_timer_overflows() {
        let s = step_tmon(TmonState::default(), TmonEdge::Start, 0, 8).state;
        let s = step_tmon(s, TmonEdge::Stop, 300, 8).state;
        assert_eq!(s.last_interval, Some(300));
        assert!(s.overflowed);
        let s = step_tmon(s, TmonEdge::Start, 300, 8).state;
        let s = step_tmon(s, TmonEdge::Stop, 555, 8).state;
        assert!(!s.overflowed, "255 fits in 8 bits");
        let s = step_tmon(s, TmonEdge::Start, 555, 8).state;
        assert!(step_tmon(s, TmonEdge::Stop, 811, 8).state.overflowed, "256 does not");
    }

    #[test]
    fn restart_overwrites_start() {
        let s = step_tmon(TmonState::default(), TmonEdge::Start, 10, 64).state;
        let s = step_tmon(s, TmonEdge::Start, 40, 64).state;
        let s = step_tmon(s, TmonEdge::Stop, 100, 64).state;
        assert_eq!(s.last_interval, Some(60));
    }
}
