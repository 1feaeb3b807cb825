mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use h2h::fixtures::{random_instance, RandomConfig};
use h2h::{full_schedule, incremental_reschedule, knapsack_solver, run_h2h, Instance, KnapsackItem};

fn cfg() -> RandomConfig {
    RandomConfig {
        layers: 1..=40,
        accelerators: 1..=6,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steps_never_get_slower(seed in any::<u64>()) {
        let (g, sys) = random_instance(seed, &cfg());
        let r = run_h2h(&g, &sys).unwrap();
        let lat = r.latencies();
        prop_assert!(lat.windows(2).all(|w| w[0] >= w[1]), "{:?}", lat);
        let inst = Instance::new(&g, &sys).unwrap();
        for snap in &r.steps {
            let doc = snap.state.to_document(&inst);
            let gantt = snap.schedule.to_gantt(&inst, &snap.state);
            prop_assert!(common::check_emitted(&g, &sys, &doc, &gantt).is_ok());
        }
    }

    #[test]
    fn pinning_only_lowers_costs(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (g, sys) = random_instance(seed, &cfg());
        let inst = Instance::new(&g, &sys).unwrap();
        let r = h2h::run_h2h_steps(&g, &sys, 1).unwrap();
        let mut m = r.final_state().clone();
        let before = full_schedule(&inst, &m).unwrap();
        let l = pick.index(g.len());
        m.set_pinned(&inst, l, true);
        prop_assume!(m.check(&inst).is_ok());
        let after = full_schedule(&inst, &m).unwrap();
        prop_assert!(after.cost[l].total() <= before.cost[l].total());
        prop_assert!(after.finish.iter().zip(&before.finish).all(|(a, b)| a <= b));
    }

    #[test]
    fn incremental_equals_full_after_moves(seed in any::<u64>(), moves in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..6)) {
        let (g, sys) = random_instance(seed, &cfg());
        let inst = Instance::new(&g, &sys).unwrap();
        let r = h2h::run_h2h_steps(&g, &sys, 3).unwrap();
        let mut m = r.final_state().clone();
        let mut s = full_schedule(&inst, &m).unwrap();
        for (layer, dst) in moves {
            let l = layer.index(g.len());
            let elig = inst.eligible(l);
            m.move_layer(&inst, l, elig[dst.index(elig.len())]);
            let changed: BTreeSet<usize> = g.preds(l).iter().chain(g.succs(l)).map(|&(v, _)| v).chain([l]).collect();
            s = incremental_reschedule(&inst, &m, &s, &changed).unwrap();
            let full = full_schedule(&inst, &m).unwrap();
            prop_assert_eq!(&s.start, &full.start);
            prop_assert_eq!(&s.finish, &full.finish);
        }
    }

    #[test]
    fn knapsack_is_optimal(spec in prop::collection::vec((1u64..5_000_000, 1u32..1000), 0..16), frac in 0.0f64..1.2) {
        let total: u64 = spec.iter().map(|s| s.0).sum();
        let capacity = (total as f64 * frac) as u64;
        let pairs: Vec<(u64, f64)> = spec.iter().map(|&(w, v)| (w, v as f64)).collect();
        let items: Vec<KnapsackItem> = pairs.iter().enumerate().map(|(tag, &(weight, value))| KnapsackItem { tag, weight, value }).collect();
        let sel = knapsack_solver(&items, capacity);
        let weight: u64 = items.iter().zip(&sel).filter(|p| *p.1).map(|p| p.0.weight).sum();
        let value: f64 = items.iter().zip(&sel).filter(|p| *p.1).map(|p| p.0.value).sum();
        prop_assert!(weight <= capacity);
        prop_assert_eq!(value, common::brute_force_knapsack(&pairs, capacity));
    }
}
