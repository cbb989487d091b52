mod common;

use common::{random_dataset, singleton_dataset, Shape};
use proptest::prelude::*;
use wauc_core::{
    per_time_wauc, sigma_matrix, wauc, MarkerDataset, Status, Stratum, StudyDesign, WeightMeasure,
};

const SMALL: Shape = Shape {
    markers: 2,
    times: 2,
    max_subjects: 10,
    max_cluster: 3,
};

/// FPR grid `k/20` so the rank windows can be computed in integers.
const GRID: i64 = 20;

fn ceil_div(a: i64, b: i64) -> i64 {
    (a + b - 1) / b
}

fn pools(ds: &MarkerDataset, stratum: Stratum) -> (Vec<f64>, Vec<f64>) {
    let mut y = ds.stratum_values(Status::NonDiseased, stratum);
    y.sort_by(f64::total_cmp);
    (ds.stratum_values(Status::Diseased, stratum), y)
}

fn brute_auc(x: &[f64], y: &[f64]) -> f64 {
    let mut count = 0u64;
    for a in x {
        for b in y {
            count += u64::from(a > b);
        }
    }
    count as f64 / (x.len() * y.len()) as f64
}

/// Counts pairs whose non-diseased rank lies in `((1 − u2)n, (1 − u1)n]`.
fn brute_pauc(x: &[f64], y_sorted: &[f64], k1: i64, k2: i64) -> f64 {
    let n = y_sorted.len() as i64;
    let lo = ceil_div((GRID - k2) * n, GRID);
    let hi = ceil_div((GRID - k1) * n, GRID).min(n);
    let mut count = 0u64;
    for a in x {
        for (r, b) in y_sorted.iter().enumerate() {
            let rank = r as i64 + 1;
            count += u64::from(rank > lo && rank <= hi && a > b);
        }
    }
    count as f64 / (x.len() * y_sorted.len()) as f64
}

fn brute_sensitivity(x: &[f64], y_sorted: &[f64], k0: i64) -> f64 {
    let n = y_sorted.len() as i64;
    let rank = ceil_div((GRID - k0) * n, GRID).clamp(1, n);
    let threshold = y_sorted[(rank - 1) as usize];
    let mut count = 0u64;
    for a in x {
        count += u64::from(*a > threshold);
    }
    count as f64 / x.len() as f64
}

fn check_stratum(ds: &MarkerDataset, stratum: Stratum, k1: i64, k2: i64, k0: i64) {
    let (x, y) = pools(ds, stratum);
    let eval = |w: WeightMeasure| match stratum.time {
        None => wauc(ds, stratum.marker, &w).unwrap(),
        Some(t) => per_time_wauc(ds, stratum.marker, t, &w).unwrap(),
    };
    let (u1, u2, u0) = (k1 as f64 / 20.0, k2 as f64 / 20.0, k0 as f64 / 20.0);
    assert_eq!(eval(WeightMeasure::FullAuc), brute_auc(&x, &y));
    assert_eq!(
        eval(WeightMeasure::partial(u1, u2).unwrap()),
        brute_pauc(&x, &y, k1, k2)
    );
    assert_eq!(
        eval(WeightMeasure::point_mass(u0).unwrap()),
        brute_sensitivity(&x, &y, k0)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn estimators_match_enumeration(
        seed in any::<u64>(),
        k1 in 0i64..19,
        width in 1i64..20,
        k0 in 1i64..20,
    ) {
        let k2 = (k1 + width).min(GRID);
        let ds = random_dataset(seed, SMALL);
        for l in 0..SMALL.markers {
            check_stratum(&ds, Stratum::pooled(l), k1, k2, k0);
            for t in 0..SMALL.times {
                check_stratum(&ds, Stratum::at_time(l, t), k1, k2, k0);
            }
        }
    }
}

#[test]
fn spec_pauc_window_example() {
    assert_eq!(brute_pauc(&[5.0, 6.0], &[1.0, 2.0, 3.0, 4.0], 0, 10), 0.5);
}

/// Placement-value covariance of correlated AUCs, one value per subject.
fn delong(ds: &MarkerDataset) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let l = ds.n_markers();
    let xs: Vec<Vec<f64>> = (0..l)
        .map(|k| ds.stratum_values(Status::Diseased, Stratum::pooled(k)))
        .collect();
    let ys: Vec<Vec<f64>> = (0..l)
        .map(|k| ds.stratum_values(Status::NonDiseased, Stratum::pooled(k)))
        .collect();
    let (m, n) = (xs[0].len(), ys[0].len());
    let psi = |a: f64, b: f64| if a > b { 1.0 } else { 0.0 };
    let v10: Vec<Vec<f64>> = (0..l)
        .map(|k| {
            xs[k]
                .iter()
                .map(|&a| ys[k].iter().map(|&b| psi(a, b)).sum::<f64>() / n as f64)
                .collect()
        })
        .collect();
    let v01: Vec<Vec<f64>> = (0..l)
        .map(|k| {
            ys[k]
                .iter()
                .map(|&b| xs[k].iter().map(|&a| psi(a, b)).sum::<f64>() / m as f64)
                .collect()
        })
        .collect();
    let cov = |v: &[Vec<f64>], count: usize| -> Vec<Vec<f64>> {
        let means: Vec<f64> = v
            .iter()
            .map(|r| r.iter().sum::<f64>() / count as f64)
            .collect();
        (0..l)
            .map(|a| {
                (0..l)
                    .map(|b| {
                        (0..count)
                            .map(|i| (v[a][i] - means[a]) * (v[b][i] - means[b]))
                            .sum::<f64>()
                            / ((count - 1) * count) as f64
                    })
                    .collect()
            })
            .collect()
    };
    (cov(&v10, m), cov(&v01, n))
}

#[test]
fn sigma_matches_delong_on_singleton_clusters() {
    for seed in 0..50u64 {
        let markers = 1 + (seed % 3) as usize;
        let m = 5 + (seed % 17) as usize;
        let j = 4 + (seed % 13) as usize;
        let ds = singleton_dataset(seed, markers, m, j);
        let cov = sigma_matrix(
            &ds,
            StudyDesign::Pooled { n_markers: markers },
            &WeightMeasure::FullAuc,
        )
        .unwrap();
        let (s10, s01) = delong(&ds);
        assert!(!cov.psd_repaired);
        for a in 0..markers {
            for b in 0..markers {
                assert!(
                    (cov.sigma1[(a, b)] - s10[a][b]).abs() < 1e-12,
                    "seed {seed}"
                );
                assert!(
                    (cov.sigma2[(a, b)] - s01[a][b]).abs() < 1e-12,
                    "seed {seed}"
                );
                let total = s10[a][b] + s01[a][b];
                assert!((cov.sigma[(a, b)] - total).abs() < 1e-12, "seed {seed}");
            }
        }
    }
}
