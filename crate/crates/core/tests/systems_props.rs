use std::collections::BTreeMap;

use fragilis::systems::{
    classify_quadrant, degrade_threshold, system_threshold, Cutoffs, FragilityProfile, Node, SystemGraph,
};
use proptest::prelude::*;

fn series(thresholds: &[f64]) -> SystemGraph {
    SystemGraph::series(
        thresholds
            .iter()
            .enumerate()
            .map(|(i, &t)| (format!("c{i:02}"), FragilityProfile::new(t, 0.5).unwrap())),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn series_threshold_is_min(ts in prop::collection::vec(0.01..10.0f64, 1..12), extra in 0.01..10.0f64) {
        let min = ts.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(system_threshold(&series(&ts)).threshold, min);
        let mut more = ts.clone();
        more.push(extra);
        prop_assert!(system_threshold(&series(&more)).threshold <= min);
    }

    #[test]
    fn redundant_group_takes_max(a in 0.01..10.0f64, b in 0.01..10.0f64, c in 0.01..10.0f64) {
        let comps: BTreeMap<String, FragilityProfile> = [("a", a), ("b", b), ("c", c)]
            .iter()
            .map(|&(k, t)| (k.to_string(), FragilityProfile::new(t, 0.3).unwrap()))
            .collect();
        let root = Node::Series(vec![
            Node::Redundant(vec![Node::Component("a".into()), Node::Component("b".into())]),
            Node::Component("c".into()),
        ]);
        let g = SystemGraph::new(comps, root).unwrap();
        prop_assert_eq!(system_threshold(&g).threshold, a.max(b).min(c));
    }

    #[test]
    fn degradation_monotone(tau in 0.1..10.0f64, r1 in 0.0..0.9f64, dr in 0.0..0.09f64, s1 in 0.0..5.0f64, ds in 0.0..5.0f64) {
        let base = degrade_threshold(tau, r1, 60, s1).unwrap();
        prop_assert!(base.thresholds.windows(2).all(|w| w[1] <= w[0]));
        let faster = degrade_threshold(tau, r1 + dr, 60, s1).unwrap();
        let harder = degrade_threshold(tau, r1, 60, s1 + ds).unwrap();
        let never = u32::MAX;
        prop_assert!(faster.first_break.unwrap_or(never) <= base.first_break.unwrap_or(never));
        prop_assert!(harder.first_break.unwrap_or(never) <= base.first_break.unwrap_or(never));
    }

    #[test]
    fn quadrant_invariant_under_monotone_rescaling(t in 0.01..10.0f64, r in 0.0..=1.0f64, scale in 0.1..10.0f64) {
        let cut = Cutoffs { threshold: 1.0, recoverability: 0.5 };
        let q = classify_quadrant(&FragilityProfile::new(t, r).unwrap(), &cut).unwrap();
        // x -> scale * x^3 is increasing; apply it to the threshold and the cutoff.
        let f = |x: f64| scale * x.powi(3);
        let cut2 = Cutoffs { threshold: f(1.0), ..cut };
        let q2 = classify_quadrant(&FragilityProfile::new(f(t), r).unwrap(), &cut2).unwrap();
        if (t >= 1.0) == (f(t) >= f(1.0)) {
            prop_assert_eq!(q, q2);
        }
    }
}
