//! Frontier extraction and frontier-choice properties against independent
//! oracles.

mod common;

use std::collections::BTreeSet;

use navsim_core::commonsense::{score_frontier, select_frontier, CoOccurrenceTable, CommonsensePolicy, FrontierPolicy, PolicyConfig};
use navsim_core::frontier::{cluster, extract_frontier_cells, frontiers, Frontier};
use navsim_core::grid::{Cell, CostMap, Grid, GridMeta, Point, Pose, SemanticMap};
use proptest::prelude::*;

/// Costs drawn to hit every class: free, graded, inscribed, lethal, unknown.
fn cost_map() -> impl Strategy<Value = CostMap> {
    (2usize..40, 2usize..40).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop_oneof![4 => Just(0u8), 1 => 1u8..253, 1 => Just(253u8), 2 => Just(254u8), 3 => Just(255u8)], w * h)
            .prop_map(move |v| {
                let meta = GridMeta::new(w, h, 0.1, Point::new(-1.0, 0.5)).unwrap();
                CostMap::from_grid(meta, Grid::from_vec(w, h, v).unwrap(), Default::default()).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn frontier_cells_match_brute_force(cm in cost_map()) {
        prop_assert_eq!(extract_frontier_cells(&cm), common::brute_frontier(&cm));
    }

    #[test]
    fn frontier_cells_are_known_and_traversable(cm in cost_map()) {
        for c in extract_frontier_cells(&cm) {
            prop_assert!(!cm.is_lethal(c) && !cm.is_unknown(c));
        }
    }

    #[test]
    fn clusters_partition_the_frontier_set(cm in cost_map(), min in 1usize..8) {
        let cells = extract_frontier_cells(&cm);
        let fs = cluster(&cells, min, &cm.meta);
        let expected: BTreeSet<BTreeSet<Cell>> = common::union_find_groups(&cells).into_iter().filter(|c| c.len() >= min).collect();
        let got: BTreeSet<BTreeSet<Cell>> = fs.iter().map(|f| f.cells.clone()).collect();
        prop_assert_eq!(got.len(), fs.len(), "clusters overlap");
        prop_assert_eq!(&got, &expected);
        let covered: usize = fs.iter().map(|f| f.size).sum();
        let dropped: usize = common::union_find_groups(&cells).iter().filter(|c| c.len() < min).map(BTreeSet::len).sum();
        prop_assert_eq!(covered + dropped, cells.len());
        for f in &fs {
            prop_assert_eq!(f.size, f.cells.len());
        }
    }

    #[test]
    fn target_cell_is_the_member_nearest_the_centroid(cm in cost_map()) {
        for f in frontiers(&cm, 1) {
            let t = f.target_cell(&cm.meta);
            prop_assert!(f.cells.contains(&t));
            let dt = cm.meta.grid_to_world(t).dist(f.centroid);
            for c in &f.cells {
                prop_assert!(dt <= cm.meta.grid_to_world(*c).dist(f.centroid));
            }
        }
    }

    #[test]
    fn selection_ignores_positive_affine_rescaling(
        raw in prop::collection::vec(-64i32..64, 1..20),
        sizes in prop::collection::vec(1usize..5, 20),
        k in -4i32..6,
        shift in -100i32..100,
    ) {
        // powers of two and small integers keep every transformed score exact
        let meta = GridMeta::new(100, 100, 0.1, Point::new(0.0, 0.0)).unwrap();
        let fs: Vec<Frontier> = raw
            .iter()
            .enumerate()
            .map(|(i, _)| Frontier::new((0..sizes[i]).map(|j| Cell::new(4 * i, j)).collect(), &meta))
            .collect();
        let scores: Vec<f64> = raw.iter().map(|&s| f64::from(s) / 8.0).collect();
        let a = 2f64.powi(k);
        let moved: Vec<f64> = scores.iter().map(|s| a * s + f64::from(shift)).collect();
        prop_assert_eq!(select_frontier(&fs, &scores).unwrap(), select_frontier(&fs, &moved).unwrap());
    }

    #[test]
    fn score_is_monotone_in_each_affinity(
        labels in prop::collection::vec((0usize..60, 0usize..60, 0usize..4, 0.05f64..1.0), 0..12),
        affinities in prop::collection::vec(0.0f64..=1.0, 4),
        which in 0usize..4,
        bump in 0.0f64..=1.0,
        robot in (0.0f64..6.0, 0.0f64..6.0),
    ) {
        let names = ["sofa", "sink", "bed", "desk"];
        let meta = GridMeta::new(60, 60, 0.1, Point::new(0.0, 0.0)).unwrap();
        let mut sm = SemanticMap::new(meta);
        for &(r, c, l, conf) in &labels {
            sm.write(Cell::new(r, c), names[l], conf).unwrap();
        }
        let table = |aff: &[f64]| {
            let mut t = CoOccurrenceTable::default();
            for (n, a) in names.iter().zip(aff) {
                t.insert("mug", n, *a).unwrap();
            }
            t
        };
        let mut raised = affinities.clone();
        raised[which] = (raised[which] + bump).min(1.0);
        let f = Frontier::new((20..26).map(|c| Cell::new(30, c)).collect(), &meta);
        let pose = Pose::new(robot.0, robot.1, 0.0);
        let cfg = PolicyConfig::default();
        let before = score_frontier(&f, &sm, "mug", &table(&affinities), &cfg, &pose);
        let after = score_frontier(&f, &sm, "mug", &table(&raised), &cfg, &pose);
        prop_assert!(after >= before, "{} < {}", after, before);
    }
}

#[test]
fn policy_choice_is_deterministic() {
    let mut rng = common::rng(11);
    for _ in 0..20 {
        let cm = common::random_frontier_map(&mut rng, 64, 64);
        let mut sm = SemanticMap::new(cm.meta);
        sm.write(Cell::new(10, 10), "kitchen", 0.9).unwrap();
        sm.write(Cell::new(50, 40), "television", 0.6).unwrap();
        let policy = CommonsensePolicy::new(CoOccurrenceTable::builtin(), PolicyConfig::default()).unwrap();
        let pose = Pose::new(1.0, 1.5, 0.0);
        let mut a = frontiers(&cm, 4);
        let mut b = frontiers(&cm, 4);
        if a.is_empty() {
            continue;
        }
        assert_eq!(
            policy.choose(&mut a, &sm, "remote", &pose).unwrap(),
            policy.choose(&mut b, &sm, "remote", &pose).unwrap()
        );
        assert_eq!(a, b);
    }
}
