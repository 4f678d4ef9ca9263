use fragilis::assets;
use fragilis::quantile::quantiles;
use fragilis::refclass::{
    read_csv, summarize, summarize_ratios, write_csv, Metric, ProjectRecord, ReferenceClass, Region, Strictness,
    DEFAULT_QUANTILES,
};
use proptest::prelude::*;

/// Sort-based quantile written out directly from the definition
/// `x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] - x[floor(h)])`, `h = (n-1)p`.
fn brute_quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn record_strategy() -> impl Strategy<Value = ProjectRecord> {
    (
        "[a-z]{1,8}",
        "[A-Za-z ,\"]{0,12}",
        0usize..6,
        1900i32..=2100,
        (0.01..1e6f64, 0.01..1e6f64, 1.0..300.0f64, 1.0..300.0f64),
        prop::option::of(0.0..1e5f64),
        prop::option::of(0.0..1e5f64),
    )
        .prop_map(|(id, name, region, year, (ec, ac, em, am), eb, ab)| ProjectRecord {
            id,
            name,
            country: "Somewhere".into(),
            region: Region::ALL[region],
            project_type: "hydroelectric".into(),
            decision_year: year,
            est_cost: ec,
            act_cost: ac,
            est_months: em,
            act_months: am,
            est_benefit: eb,
            act_benefit: ab,
        })
}

fn class_strategy() -> impl Strategy<Value = ReferenceClass> {
    prop::collection::vec(record_strategy(), 1..30).prop_map(|recs| {
        let mut seen = std::collections::HashSet::new();
        let recs = recs.into_iter().filter(|r| seen.insert(r.id.clone())).collect();
        ReferenceClass::new("generated", recs).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn csv_round_trip(class in class_strategy()) {
        let mut buf = Vec::new();
        write_csv(&class, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "generated", Strictness::Strict).unwrap();
        prop_assert!(back.skipped.is_empty());
        prop_assert_eq!(back.class, class);
    }

    #[test]
    fn summarize_is_permutation_invariant(values in prop::collection::vec(0.1..5.0f64, 1..60), seed in any::<u64>()) {
        let mut shuffled = values.clone();
        // Deterministic Fisher-Yates driven by a xorshift.
        let mut x = seed | 1;
        for i in (1..shuffled.len()).rev() {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            shuffled.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let a = summarize_ratios(&values, &[1.0, 1.4], &DEFAULT_QUANTILES).unwrap();
        let b = summarize_ratios(&shuffled, &[1.0, 1.4], &DEFAULT_QUANTILES).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn share_breaking_non_increasing(values in prop::collection::vec(0.1..5.0f64, 1..60)) {
        let thresholds: Vec<f64> = (0..40).map(|i| 0.1 * i as f64).collect();
        let s = summarize_ratios(&values, &thresholds, &[]).unwrap();
        prop_assert!(s.share_breaking.windows(2).all(|w| w[0].share >= w[1].share));
        let at_one = s.share_breaking(1.0).unwrap();
        let count = values.iter().filter(|&&v| v >= 1.0).count() as f64 / values.len() as f64;
        prop_assert_eq!(at_one, count);
    }

    #[test]
    fn quantiles_match_brute_force(values in prop::collection::vec(-10.0..10.0f64, 1..=50), p in 0.0..=1.0f64) {
        let q = quantiles(&values, &[p]).unwrap()[0];
        prop_assert_eq!(q, brute_quantile(&values, p));
        let levels: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let qs = quantiles(&values, &levels).unwrap();
        prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn synthetic_fixture_tracks_dam_anchors() {
    let ing = read_csv(assets::SYNTHETIC_DAMS.as_bytes(), "synthetic", Strictness::Strict).unwrap();
    assert_eq!(ing.class.len(), 245);
    let s = summarize(&ing.class, Metric::Cost, &[1.4]).unwrap();
    assert!((s.median - 1.27).abs() <= 0.05, "median {}", s.median);
    let share = s.share_breaking(1.4).unwrap();
    assert!((share - 0.47).abs() <= 0.04, "share {share}");
    assert!((s.share_over_1 - 0.75).abs() <= 0.04);
}
