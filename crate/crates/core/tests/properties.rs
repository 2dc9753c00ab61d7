mod common;

use std::collections::BTreeSet;

use common::{random_case, rng, Classes};
use monforge::cost::{default_params, estimate, Metric, LUMP_KEY};
use monforge::emit::{build_netlist, emit_netlist, lint, parse_netlist};
use monforge::model::{parse_platform, parse_rqms, RqmClass};
use monforge::synth::{build_topology, diff_naive, MonitoringTopology};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rqm_order_does_not_matter(seed in any::<u64>()) {
        let mut r = rng(seed);
        let case = random_case(&mut r, Classes::Free);
        let t = case.topology();
        let mut shuffled = case.rqms.clone();
        shuffled.shuffle(&mut r);
        let u = build_topology(&case.platform, &shuffled).unwrap();
        prop_assert_eq!(t.to_json(), u.to_json());
        prop_assert_eq!(emit_netlist(&t), emit_netlist(&u));
        let p = default_params();
        prop_assert_eq!(estimate(&t, &p).unwrap().to_json(), estimate(&u, &p).unwrap().to_json());
    }

    #[test]
    fn platform_reparse_is_identical(seed in any::<u64>()) {
        let case = random_case(&mut rng(seed), Classes::Free);
        let again = parse_platform(&case.platform.to_json()).unwrap();
        prop_assert_eq!(&again, &case.platform);
        prop_assert_eq!(again.to_json(), case.platform.to_json());
    }

    #[test]
    fn topology_json_round_trips(seed in any::<u64>()) {
        let t = random_case(&mut rng(seed), Classes::Free).topology();
        let back = MonitoringTopology::from_json(&t.to_json()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn every_parsed_rqm_has_requirements(seed in any::<u64>()) {
        let case = random_case(&mut rng(seed), Classes::Free);
        prop_assert!(case.rqms.iter().all(|r| !r.requirement.is_empty()));
        let again = parse_rqms(&case.rqms_json, &case.platform).unwrap();
        prop_assert_eq!(again, case.rqms);
    }

    #[test]
    fn sharing_is_minimal(seed in any::<u64>()) {
        let case = random_case(&mut rng(seed), Classes::Free);
        let t = case.topology();
        let keys: BTreeSet<_> = t.monitors.iter().map(|m| m.share_key()).collect();
        prop_assert_eq!(keys.len(), t.monitors.len());
        let s = diff_naive(&t, &case.rqms);
        prop_assert!(s.monitors_with_sharing <= s.monitors_without_sharing);
        prop_assert!(t.validate().is_ok());
    }

    #[test]
    fn adding_an_rqm_keeps_and_never_narrows_monitors(seed in any::<u64>()) {
        let case = random_case(&mut rng(seed), Classes::Free);
        let full = case.topology();
        let part = build_topology(&case.platform, &case.rqms[..case.rqms.len() - 1]).unwrap();
        for m in &part.monitors {
            let grown = full.monitors.iter().find(|n| n.share_key() == m.share_key());
            prop_assert!(grown.is_some(), "{} disappeared", m.id);
            let grown = grown.unwrap();
            prop_assert!(grown.width_bits >= m.width_bits);
            prop_assert!(grown.programmable || !m.programmable);
        }
        let p = default_params();
        let (a, b) = (estimate(&part, &p).unwrap(), estimate(&full, &p).unwrap());
        for metric in Metric::ALL {
            prop_assert!(b.delta.get(metric) >= a.delta.get(metric) - 1e-9, "{:?}", metric);
        }
    }

    #[test]
    fn five_phases_present(seed in any::<u64>()) {
        let case = random_case(&mut rng(seed), Classes::Free);
        let t = case.topology();
        prop_assert!(!t.adapters.is_empty());
        prop_assert!(!t.nuclei.is_empty());
        prop_assert!(t.gm.present && t.gm.rules.len() == case.rqms.len());
        prop_assert!(t.gmi.present);
        let mdbg = case.rqms.iter().any(|r| r.class == RqmClass::MDBG);
        let reacts = t.gm.rules.iter().any(|r| r.kind.reacts());
        prop_assert_eq!(t.irq.present, mdbg || reacts);
    }

    #[test]
    fn estimates_add_up(seed in any::<u64>()) {
        let mut r = rng(seed);
        let case = random_case(&mut r, Classes::Free);
        let split = r.random_range(0..=case.rqms.len());
        let (a, b) = case.rqms.split_at(split);
        let p = default_params();
        let ta = build_topology(&case.platform, a).unwrap();
        let tb = build_topology(&case.platform, b).unwrap();
        let tu = case.topology();
        let (ea, eb, eu) = (
            estimate(&ta, &p).unwrap().delta,
            estimate(&tb, &p).unwrap().delta,
            estimate(&tu, &p).unwrap().delta,
        );
        let disjoint = ta.monitors.iter().all(|m| tb.monitors.iter().all(|n| n.share_key() != m.share_key()));
        let lump = p.blocks[LUMP_KEY];
        for metric in Metric::ALL {
            let (sum, union) = (ea.get(metric) + eb.get(metric), eu.get(metric));
            prop_assert!(union <= sum + 1e-9, "{:?}: {} > {}", metric, union, sum);
            if disjoint {
                let gap = sum - union;
                let ok = gap.abs() < 1e-9 || (gap - lump.get(metric)).abs() < 1e-9;
                prop_assert!(ok, "{:?}: gap {}", metric, gap);
            }
        }
    }

    #[test]
    fn netlist_round_trip_and_lint(seed in any::<u64>()) {
        let t = random_case(&mut rng(seed), Classes::Free).topology();
        let text = emit_netlist(&t);
        let n = parse_netlist(&text).unwrap();
        prop_assert_eq!(&n, &build_netlist(&t));
        prop_assert_eq!(lint(&n), vec![]);
        let mut want = std::collections::BTreeMap::new();
        for m in &t.monitors {
            *want.entry(monforge::cost::BlockKey::of(m).to_string()).or_insert(0usize) += 1;
        }
        prop_assert_eq!(n.monitor_inventory(), want);
        prop_assert_eq!(common::without_clock(n.connection_graph()), common::expected_graph(&t));
    }
}

#[test]
fn generator_covers_the_space() {
    let mut r = rng(7);
    let (mut multi, mut tmon, mut no_irq, mut shared, mut explicit) = (0, 0, 0, 0, 0);
    for _ in 0..200 {
        let case = random_case(&mut r, Classes::Free);
        let t = case.topology();
        multi += usize::from(case.rqms.len() > 1);
        tmon += usize::from(t.monitors.iter().any(|m| m.stop_trigger.is_some()));
        no_irq += usize::from(!t.irq.present);
        shared += usize::from(t.monitors.iter().any(|m| m.serving_rqms.len() > 1));
        explicit += usize::from(case.rqms_json.contains("\"requirement\""));
    }
    for (what, n) in [("multi", multi), ("tmon", tmon), ("no irq", no_irq), ("shared", shared), ("explicit", explicit)] {
        assert!(n >= 20, "{what}: only {n} of 200 cases");
    }
}
