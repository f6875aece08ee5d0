use lyricsense_core::metrics::{
    accuracy, classification_report, confusion, precision_recall_f1, rmse, softmax,
};
use proptest::prelude::*;

// Brute-force one-vs-rest counts straight from the label vectors.
fn ovr(y_true: &[String], y_pred: &[String], class: &str) -> (f64, f64, f64) {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t == class, p == class) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fn_ += 1.0,
            _ => {}
        }
    }
    (tp, fp, fn_)
}

fn labels(c: usize, n: usize) -> impl Strategy<Value = (Vec<String>, Vec<String>, Vec<String>)> {
    let classes: Vec<String> = (0..c).map(|i| format!("c{i}")).collect();
    let pick = proptest::sample::select(classes.clone());
    (
        proptest::collection::vec(pick.clone(), n),
        proptest::collection::vec(pick, n),
    )
        .prop_map(move |(t, p)| (classes.clone(), t, p))
}

fn case() -> impl Strategy<Value = (Vec<String>, Vec<String>, Vec<String>)> {
    (1usize..=6, 1usize..=100).prop_flat_map(|(c, n)| labels(c, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn report_matches_brute_force((classes, y_true, y_pred) in case()) {
        let cm = confusion(&y_true, &y_pred, &classes).unwrap();
        prop_assert_eq!(cm.total() as usize, y_true.len());

        let correct = y_true.iter().zip(&y_pred).filter(|(a, b)| a == b).count() as f64;
        let acc: f64 = accuracy(&cm).unwrap();
        prop_assert!((acc - correct / y_true.len() as f64).abs() < 1e-9);

        let report = classification_report::<f64>(&cm).unwrap();
        let (mut mp, mut mr, mut mf, mut wf) = (0.0, 0.0, 0.0, 0.0);
        for (row, class) in report.rows.iter().zip(&classes) {
            let (tp, fp, fn_) = ovr(&y_true, &y_pred, class);
            let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            prop_assert!((row.scores.precision - p).abs() < 1e-9);
            prop_assert!((row.scores.recall - r).abs() < 1e-9);
            prop_assert!((row.scores.f1 - f).abs() < 1e-9);
            let support = y_true.iter().filter(|t| *t == class).count() as f64;
            prop_assert_eq!(row.scores.support as f64, support);
            mp += p; mr += r; mf += f; wf += f * support;
            let single = precision_recall_f1::<f64>(&cm, class).unwrap();
            prop_assert_eq!(single, row.scores);
        }
        let c = classes.len() as f64;
        prop_assert!((report.macro_avg.precision - mp / c).abs() < 1e-9);
        prop_assert!((report.macro_avg.recall - mr / c).abs() < 1e-9);
        prop_assert!((report.macro_avg.f1 - mf / c).abs() < 1e-9);
        prop_assert!((report.weighted_avg.f1 - wf / y_true.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn f1_between_precision_and_recall((classes, y_true, y_pred) in case()) {
        let cm = confusion(&y_true, &y_pred, &classes).unwrap();
        for class in &classes {
            let s = precision_recall_f1::<f64>(&cm, class).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.f1));
            if s.precision > 0.0 && s.recall > 0.0 {
                prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-12);
                prop_assert!(s.f1 >= s.precision.min(s.recall) - 1e-12);
            }
        }
    }

    #[test]
    fn class_order_permutation_only_reorders_rows((classes, y_true, y_pred) in case()) {
        let mut reversed = classes.clone();
        reversed.reverse();
        let a = classification_report::<f64>(&confusion(&y_true, &y_pred, &classes).unwrap()).unwrap();
        let b = classification_report::<f64>(&confusion(&y_true, &y_pred, &reversed).unwrap()).unwrap();
        for row in &a.rows {
            let other = b.rows.iter().find(|r| r.class == row.class).unwrap();
            prop_assert_eq!(row.scores, other.scores);
        }
        prop_assert_eq!(a.accuracy, b.accuracy);
    }

    #[test]
    fn rmse_matches_loop(pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..100)) {
        let (t, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut acc = 0.0;
        for i in 0..t.len() {
            let e = t[i] - p[i];
            acc += e * e;
        }
        let oracle = (acc / t.len() as f64).sqrt();
        prop_assert!((rmse(&t, &p).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn rmse_of_constant_shift(y in proptest::collection::vec(1960.0f64..2022.0, 1..50), c in -30.0f64..30.0) {
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        prop_assert!((rmse(&y, &shifted).unwrap() - c.abs()).abs() < 1e-9);
    }

    #[test]
    fn softmax_normalized_and_shift_invariant(z in proptest::collection::vec(-50.0f64..50.0, 1..8), c in -100.0f64..100.0) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let q = softmax(&z.iter().map(|v| v + c).collect::<Vec<_>>());
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn random_confusion_matches_pair_counter() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
    let classes = ["a", "b", "c", "d"];
    let t: Vec<&str> = (0..50).map(|_| classes[rng.random_range(0..4)]).collect();
    let p: Vec<&str> = (0..50).map(|_| classes[rng.random_range(0..4)]).collect();
    let cm = confusion(&t, &p, &classes).unwrap();
    for (i, ci) in classes.iter().enumerate() {
        for (j, cj) in classes.iter().enumerate() {
            let n = t.iter().zip(&p).filter(|(a, b)| *a == ci && *b == cj).count() as u64;
            assert_eq!(cm.counts()[i][j], n);
        }
    }
}
