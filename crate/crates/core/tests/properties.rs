use std::sync::Arc;

use proptest::prelude::*;
use recourse_core::cf::{dominates, non_dominated_sort, pareto_front_indices};
use recourse_core::eval::{auroc, operating_point, roc_curve, youden_candidates, youden_threshold};
use recourse_core::tabular::{gower_distance, identify_binary_features, Cell, Dataset, FeatureSchema, FeatureSpec, Instance};

fn mixed_schema() -> FeatureSchema<f64> {
    FeatureSchema::new(vec![
        FeatureSpec::numeric("a", -5.0, 5.0),
        FeatureSpec::numeric("b", 0.0, 100.0),
        FeatureSpec::binary01("c"),
        FeatureSpec::categorical("d", &["x", "y", "z"]),
        FeatureSpec::numeric("e", 1.0, 1.0),
    ])
    .unwrap()
}

fn mixed_instance() -> impl Strategy<Value = Instance<f64>> {
    (-5.0..=5.0f64, 0.0..=100.0f64, 0..2u8, 0..3usize).prop_map(|(a, b, c, d)| {
        Instance::new(vec![
            Cell::Num(a),
            Cell::Num(b),
            Cell::Num(c as f64),
            Cell::cat(["x", "y", "z"][d]),
            Cell::Num(1.0),
        ])
    })
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    prop::collection::vec((0..20u8, 0..2usize), 4..60)
        .prop_map(|v| {
            // coarse grid to force ties
            let s = v.iter().map(|(s, _)| *s as f64 / 19.0).collect();
            let l = v.iter().map(|(_, l)| *l).collect();
            (s, l)
        })
        .prop_filter("both classes", |(_, l): &(Vec<f64>, Vec<usize>)| l.contains(&0) && l.contains(&1))
}

fn objective_sets() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec((0..6u8, 0..6u8, 0..6u8), 0..60)
        .prop_map(|v| v.into_iter().map(|(a, b, c)| [a as f64, b as f64, c as f64]).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gower_symmetric_bounded_reflexive(a in mixed_instance(), b in mixed_instance()) {
        let s = mixed_schema();
        let ab = gower_distance(&a, &b, &s).unwrap();
        let ba = gower_distance(&b, &a, &s).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(gower_distance(&a, &a, &s).unwrap(), 0.0);
    }

    #[test]
    fn binary_detection_ignores_row_order(
        rows in prop::collection::vec((0..2u8, 0..3u8, 0..2u8), 1..40),
        seed in any::<u64>(),
    ) {
        let s = FeatureSchema::<f64>::new(vec![
            FeatureSpec::numeric("n", 0.0, 2.0),
            FeatureSpec::numeric("m", 0.0, 2.0),
            FeatureSpec::numeric("k", 0.0, 2.0),
        ]).unwrap();
        let inst: Vec<Instance<f64>> = rows.iter().map(|&(a, b, c)| Instance::from_numbers(&[a as f64, b as f64, c as f64])).collect();
        let mut shuffled = inst.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed as usize).wrapping_mul(31).wrapping_add(i * 7) % (i + 1));
        }
        let s = Arc::new(s);
        let a = identify_binary_features(&Dataset::new(s.clone(), inst.clone(), None).unwrap()).unwrap();
        let b = identify_binary_features(&Dataset::new(s, shuffled, None).unwrap()).unwrap();
        prop_assert_eq!(&a, &b);
        for j in 0..3 {
            let mut vals: Vec<u64> = inst.iter().map(|r| r.get(j).as_num().unwrap().to_bits()).collect();
            vals.sort_unstable();
            vals.dedup();
            prop_assert_eq!(a.contains(&j), vals.len() == 2);
        }
    }

    #[test]
    fn pareto_front_matches_quadratic_oracle(objs in objective_sets()) {
        let oracle: Vec<usize> = (0..objs.len())
            .filter(|&i| !(0..objs.len()).any(|j| j != i && dominates(&objs[j], &objs[i])))
            .collect();
        prop_assert_eq!(pareto_front_indices(&objs), oracle);
    }

    #[test]
    fn nondominated_sort_is_a_layering(objs in objective_sets()) {
        let fronts = non_dominated_sort(&objs);
        let mut seen: Vec<usize> = fronts.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..objs.len()).collect::<Vec<_>>());
        for (r, f) in fronts.iter().enumerate() {
            for &i in f {
                for &j in f {
                    prop_assert!(!dominates(&objs[i], &objs[j]));
                }
                if r > 0 {
                    prop_assert!(fronts[r - 1].iter().any(|&k| dominates(&objs[k], &objs[i])));
                }
            }
        }
    }

    #[test]
    fn auroc_equals_pair_count((s, l) in scored_labels()) {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if l[i] == 1 && l[j] == 0 {
                    pairs += 1.0;
                    wins += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        prop_assert!((auroc(&s, &l).unwrap() - wins / pairs).abs() < 1e-12);
    }

    #[test]
    fn youden_is_brute_force_max((s, l) in scored_labels()) {
        let best = youden_threshold(&s, &l).unwrap();
        let npos = l.iter().filter(|&&y| y == 1).count() as f64;
        let nneg = l.len() as f64 - npos;
        let mut oracle = f64::NEG_INFINITY;
        for t in youden_candidates(&s) {
            let tp = s.iter().zip(&l).filter(|(&x, &y)| y == 1 && x >= t).count() as f64;
            let tn = s.iter().zip(&l).filter(|(&x, &y)| y == 0 && x < t).count() as f64;
            oracle = oracle.max(tp / npos + tn / nneg - 1.0);
        }
        prop_assert!((best.youden_j() - oracle).abs() < 1e-12);
        let op = operating_point(&s, &l, best.threshold).unwrap();
        prop_assert_eq!(op, best);
    }

    #[test]
    fn roc_is_monotone_and_anchored((s, l) in scored_labels()) {
        let roc = roc_curve(&s, &l).unwrap();
        prop_assert_eq!((roc[0].fpr, roc[0].tpr), (0.0, 0.0));
        let last = roc.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in roc.windows(2) {
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
            prop_assert!(w[0].threshold > w[1].threshold);
        }
    }
}
