use proptest::prelude::*;
use stdreview_core::agreement::{
    cohen_kappa, evaluate_threshold, krippendorff_alpha, percent_agreement, AgreementError, RatingsMatrix,
    ThresholdPolicy,
};

/// Kappa from an explicit contingency table.
fn kappa_oracle(a: &[usize], b: &[usize], k: usize) -> Option<f64> {
    let n = a.len() as f64;
    let mut table = vec![vec![0.0; k]; k];
    for i in 0..a.len() {
        table[a[i]][b[i]] += 1.0;
    }
    let p_o: f64 = table.iter().enumerate().map(|(c, row)| row[c]).sum::<f64>() / n;
    let mut p_e = 0.0;
    for (c, cells) in table.iter().enumerate() {
        let row: f64 = cells.iter().sum();
        let col: f64 = table.iter().map(|r| r[c]).sum();
        p_e += (row / n) * (col / n);
    }
    if (1.0 - p_e).abs() < 1e-15 {
        None
    } else {
        Some((p_o - p_e) / (1.0 - p_e))
    }
}

/// Alpha by enumerating every ordered pair of values from different raters
/// within a unit. Observed disagreement weights each unit's pairs by
/// 1/(m_u - 1); expected disagreement pairs all pairable values globally.
fn alpha_oracle(rows: &[Vec<Option<usize>>]) -> Option<f64> {
    let units = rows[0].len();
    let mut pooled = Vec::new();
    let mut observed = 0.0;
    for u in 0..units {
        let vals: Vec<usize> = rows.iter().filter_map(|r| r[u]).collect();
        if vals.len() < 2 {
            continue;
        }
        let m = vals.len() as f64;
        for i in 0..vals.len() {
            for j in 0..vals.len() {
                if i != j && vals[i] != vals[j] {
                    observed += 1.0 / (m - 1.0);
                }
            }
        }
        pooled.extend(vals);
    }
    let n = pooled.len() as f64;
    let mut expected = 0.0;
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j && pooled[i] != pooled[j] {
                expected += 1.0;
            }
        }
    }
    if expected == 0.0 {
        return None;
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    Some(1.0 - d_o / d_e)
}

fn labels(rows: &[Vec<Option<usize>>]) -> Vec<Vec<Option<String>>> {
    rows.iter()
        .map(|r| r.iter().map(|v| v.map(|v| format!("c{v}"))).collect())
        .collect()
}

fn matrix(rows: &[Vec<Option<usize>>], k: usize) -> RatingsMatrix {
    let raters = (0..rows.len()).map(|r| format!("r{r}")).collect();
    let units = (0..rows[0].len()).map(|u| format!("u{u}")).collect();
    let domain = (0..k).map(|c| format!("c{c}")).collect();
    RatingsMatrix::new(raters, units, domain, &labels(rows)).unwrap()
}

prop_compose! {
    fn ratings(max_raters: usize, missing: bool)(raters in 2..=max_raters, units in 1usize..=12, k in 1usize..=5)
        (rows in prop::collection::vec(
            prop::collection::vec(
                (0..k, 0u8..100).prop_map(move |(v, p)| if missing && p < 20 { None } else { Some(v) }),
                units,
            ),
            raters,
        ), k in Just(k)) -> (Vec<Vec<Option<usize>>>, usize) {
        (rows, k)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn kappa_matches_contingency_oracle((rows, k) in ratings(2, false)) {
        let m = matrix(&rows, k);
        let a: Vec<usize> = rows[0].iter().map(|v| v.unwrap()).collect();
        let b: Vec<usize> = rows[1].iter().map(|v| v.unwrap()).collect();
        match (cohen_kappa(&m).unwrap(), kappa_oracle(&a, &b, k)) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn alpha_matches_pairwise_oracle((rows, k) in ratings(3, true)) {
        let m = matrix(&rows, k);
        match krippendorff_alpha(&m) {
            Err(AgreementError::NoPairableValues) => {
                prop_assert!(rows[0].iter().enumerate().all(|(u, _)| rows.iter().filter(|r| r[u].is_some()).count() < 2));
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
            Ok(got) => match (got, alpha_oracle(&rows)) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
                (x, y) => prop_assert_eq!(x, y),
            },
        }
    }

    #[test]
    fn statistics_stay_in_range((rows, k) in ratings(3, true)) {
        let m = matrix(&rows, k);
        if let Ok(p) = percent_agreement(&m) {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        if let Ok(Some(x)) = cohen_kappa(&m) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&x));
        }
        if let Ok(Some(x)) = krippendorff_alpha(&m) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&x), "alpha {x}");
        }
    }

    #[test]
    fn unit_and_rater_order_do_not_matter((rows, k) in ratings(2, false), seed in any::<u64>()) {
        let m = matrix(&rows, k);
        let n = m.units().len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|i| (*i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let shuffled = m.permute_units(&order);
        let swapped = m.permute_raters(&[1, 0]);
        for other in [&shuffled, &swapped] {
            prop_assert_eq!(percent_agreement(&m).unwrap(), percent_agreement(other).unwrap());
            let (a, b) = (cohen_kappa(&m).unwrap(), cohen_kappa(other).unwrap());
            prop_assert_eq!(a.is_some(), b.is_some());
            if let (Some(a), Some(b)) = (a, b) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
        let (a, b) = (krippendorff_alpha(&m).unwrap(), krippendorff_alpha(&shuffled).unwrap());
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_non_constant_ratings_agree_perfectly(row in prop::collection::vec(0usize..4, 2..12)) {
        prop_assume!(row.iter().any(|v| *v != row[0]));
        let rows = vec![row.iter().map(|v| Some(*v)).collect::<Vec<_>>(); 2];
        let m = matrix(&rows, 4);
        prop_assert_eq!(percent_agreement(&m).unwrap(), 1.0);
        prop_assert_eq!(cohen_kappa(&m).unwrap(), Some(1.0));
        prop_assert_eq!(krippendorff_alpha(&m).unwrap(), Some(1.0));
        let r = evaluate_threshold(&m, &ThresholdPolicy::default()).unwrap();
        prop_assert!(!r.degenerate);
    }
}

#[test]
fn three_raters_with_a_gap() {
    let rows = vec![
        vec![Some(0), Some(1), Some(1), Some(0)],
        vec![Some(0), Some(1), Some(0), None],
        vec![Some(0), Some(0), Some(1), Some(0)],
    ];
    let got = krippendorff_alpha(&matrix(&rows, 2)).unwrap().unwrap();
    assert!((got - alpha_oracle(&rows).unwrap()).abs() < 1e-12);
}
