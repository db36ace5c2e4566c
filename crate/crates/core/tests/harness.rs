//! SR/SPL properties, result files and suite error handling.

use std::path::PathBuf;

use navsim_core::harness::{
    compute_spl, compute_sr, read_results_csv, run_suite, summarize_rows, write_results_csv, HarnessError, ResultRow,
    Scored, SuiteOverrides,
};
use navsim_core::sim::Outcome;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Ep {
    success: bool,
    traveled: f64,
    shortest: f64,
}

impl Scored for Ep {
    fn success(&self) -> bool {
        self.success
    }
    fn traveled(&self) -> f64 {
        self.traveled
    }
    fn shortest(&self) -> f64 {
        self.shortest
    }
}

fn episodes() -> impl Strategy<Value = Vec<Ep>> {
    prop::collection::vec(
        (any::<bool>(), 0.0f64..50.0, 0.01f64..30.0).prop_map(|(success, traveled, shortest)| Ep {
            success,
            traveled,
            shortest,
        }),
        1..60,
    )
}

fn row(world: &str, goal: &str, e: &Ep) -> ResultRow {
    ResultRow {
        world: world.into(),
        goal: goal.into(),
        success: e.success,
        traveled: e.traveled,
        shortest: e.shortest,
        steps: 7,
        false_goal_events: 0,
        seed: 3,
        outcome: if e.success { Outcome::Stopped } else { Outcome::MaxSteps },
        error: None,
    }
}

proptest! {
    #[test]
    fn spl_never_exceeds_sr(eps in episodes()) {
        let sr = compute_sr(&eps).unwrap();
        let spl = compute_spl(&eps).unwrap();
        prop_assert!(0.0 <= spl && spl <= sr + 1e-9 && sr <= 100.0, "spl {} sr {}", spl, sr);
    }

    #[test]
    fn spl_is_permutation_invariant(eps in episodes(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = eps.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = (compute_spl(&eps).unwrap(), compute_spl(&shuffled).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        prop_assert_eq!(compute_sr(&eps).unwrap(), compute_sr(&shuffled).unwrap());
    }

    #[test]
    fn csv_round_trip_reproduces_metrics(eps in episodes()) {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<ResultRow> = eps.iter().enumerate().map(|(i, e)| row(&format!("w{i}"), ["mug", "tv remote"][i % 2], e)).collect();
        let path = dir.path().join("results.csv");
        write_results_csv(&path, &rows).unwrap();
        let back = read_results_csv(&path).unwrap();
        prop_assert_eq!(&back, &rows);
        prop_assert_eq!(compute_sr(&back).unwrap(), compute_sr(&rows).unwrap());
        prop_assert_eq!(compute_spl(&back).unwrap(), compute_spl(&rows).unwrap());
    }
}

#[test]
fn empty_inputs_are_rejected() {
    assert!(matches!(compute_sr::<Ep>(&[]), Err(HarnessError::EmptyResults)));
    assert!(matches!(compute_spl::<Ep>(&[]), Err(HarnessError::EmptyResults)));
    assert!(matches!(summarize_rows(&[]), Err(HarnessError::EmptyResults)));
    assert!(run_suite(&[], &SuiteOverrides::default()).is_empty());
}

#[test]
fn non_positive_shortest_is_invalid() {
    for bad in [0.0, -1.0, f64::NAN] {
        let eps = [
            Ep {
                success: true,
                traveled: 1.0,
                shortest: 1.0,
            },
            Ep {
                success: false,
                traveled: 1.0,
                shortest: bad,
            },
        ];
        assert!(matches!(compute_spl(&eps), Err(HarnessError::InvalidShortest { index: 1, .. })));
    }
}

#[test]
fn unreadable_scenarios_become_error_rows() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    let missing_map = dir.path().join("nomap.json");
    std::fs::write(
        &missing_map,
        r#"{"name": "nomap", "map": "absent.pgm", "start": [1, 1, 0], "goal_category": "mug",
            "objects": [{"label": "mug", "position": {"x": 2.0, "y": 1.0}}]}"#,
    )
    .unwrap();
    let shipped = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../worlds/den_remote.json");
    let rows = run_suite(&[broken, missing_map, dir.path().join("gone.json"), shipped], &SuiteOverrides::default());
    assert_eq!(rows.len(), 4);
    for r in &rows[..3] {
        assert_eq!(r.outcome, Outcome::Error);
        assert!(!r.success);
        assert!(r.error.is_some());
    }
    assert_eq!(rows[0].world, "broken");
    assert_eq!(rows[1].world, "nomap");
    assert_eq!(rows[1].goal, "mug");
    assert!(rows[3].success, "{:?}", rows[3]);
    let summary = summarize_rows(&rows).unwrap();
    let avg = summary.last().unwrap();
    assert_eq!(avg.sr, 25.0);
    assert_eq!(avg.spl, None);
}
