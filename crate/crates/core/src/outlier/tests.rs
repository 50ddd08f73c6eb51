use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::linalg::Matrix;
use crate::rng;

fn gaussian_cloud(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, &[]);
    (0..n)
        .map(|_| (0..p).map(|_| rng::normal(&mut r)).collect())
        .collect()
}

fn cfg(seed: u64) -> McdConfig {
    McdConfig {
        seed,
        ..McdConfig::default()
    }
}

fn diag_model(d: &[f64]) -> McdModel {
    let mut s = Matrix::zeros(d.len(), d.len());
    for (i, v) in d.iter().enumerate() {
        s[(i, i)] = *v;
    }
    McdModel::from_parts(vec![0.0; d.len()], s).unwrap()
}

#[test]
fn gaussian_cloud_fit_is_near_standard() {
    let x = gaussian_cloud(2000, 2, 1);
    let m = mcd_fit(&x, &cfg(2)).unwrap();
    for v in m.mean() {
        assert!(v.abs() < 0.1, "mean {v}");
    }
    let s = m.covariance();
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((s[(i, j)] - target).abs() < 0.15, "S[{i},{j}] = {}", s[(i, j)]);
        }
    }
    assert!(s.asymmetry() < 1e-9);
    assert!((m.support_fraction() - 1002.0 / 2000.0).abs() < 1e-12);
}

#[test]
fn gross_outliers_do_not_move_the_fit() {
    let clean = gaussian_cloud(1800, 2, 3);
    let base = mcd_fit(&clean, &cfg(4)).unwrap();
    let mut dirty = clean.clone();
    dirty.extend(core::iter::repeat_n(vec![100.0, 100.0], 200));
    let robust = mcd_fit(&dirty, &cfg(4)).unwrap();
    for i in 0..2 {
        assert!((base.mean()[i] - robust.mean()[i]).abs() < 0.15);
        for j in 0..2 {
            assert!((base.covariance()[(i, j)] - robust.covariance()[(i, j)]).abs() < 0.15);
        }
    }
}

#[test]
fn twenty_percent_contamination_breakdown() {
    let mut x = gaussian_cloud(1600, 2, 5);
    let mut r = rng::stream(6, &[]);
    for _ in 0..400 {
        x.push(vec![1e4 + 50.0 * rng::normal(&mut r), -3e3 + 50.0 * rng::normal(&mut r)]);
    }
    let m = mcd_fit(&x, &cfg(7)).unwrap();
    let shift = (m.mean()[0].powi(2) + m.mean()[1].powi(2)).sqrt();
    assert!(shift < 0.2, "{shift}");
}

#[test]
fn too_few_samples() {
    let x = gaussian_cloud(6, 3, 8);
    assert_eq!(
        mcd_fit(&x, &cfg(0)).unwrap_err(),
        OutlierError::TooFewSamples { n: 6, p: 3 }
    );
}

#[test]
fn degenerate_features_rejected() {
    let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let m = mcd_fit(&x, &cfg(0));
    // Collinear data either fails outright or survives only through the ridge.
    if let Ok(m) = m {
        assert!(m.log_det().is_finite());
    }
}

#[test]
fn mahalanobis_closed_forms() {
    let id = diag_model(&[1.0, 1.0]);
    assert_eq!(mahalanobis(&id, &[0.0, 0.0]).unwrap(), 0.0);
    assert!((mahalanobis(&id, &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-9);
    let d = diag_model(&[4.0, 1.0]);
    assert!((mahalanobis(&d, &[2.0, 0.0]).unwrap() - 1.0).abs() < 1e-9);
    assert!(matches!(
        mahalanobis(&d, &[1.0]),
        Err(OutlierError::DimensionMismatch { expected: 2, got: 1 })
    ));
}

#[test]
fn calibration_flags_the_requested_fraction() {
    let x = gaussian_cloud(1000, 3, 9);
    let m = mcd_fit(&x, &cfg(10)).unwrap();
    let count = |m: &McdModel| {
        x.iter()
            .filter(|v| mcd_predict(m, v).unwrap() == Verdict::Outlier)
            .count()
    };
    let c15 = mcd_calibrate(m.clone(), &x, 0.15).unwrap();
    assert_eq!(count(&c15), 150);

    let tiny = mcd_calibrate(m.clone(), &x, 1e-9).unwrap();
    let max = x.iter().map(|v| mahalanobis(&m, v).unwrap()).fold(0.0, f64::max);
    assert_eq!(tiny.threshold(), Some(max));
    assert_eq!(count(&tiny), 0);

    let half = mcd_calibrate(m.clone(), &x, 0.5).unwrap();
    assert!((count(&half) as i64 - 500).abs() <= 1);

    assert_eq!(
        mcd_calibrate(m.clone(), &x, 0.0).unwrap_err(),
        OutlierError::BadContamination(0.0)
    );
    assert!(mcd_calibrate(m.clone(), &x, 0.6).is_err());
    assert_eq!(mcd_calibrate(m, &[], 0.1).unwrap_err(), OutlierError::EmptyTraining);
}

#[test]
fn prediction_boundary_is_inclusive() {
    let m = diag_model(&[1.0, 1.0]);
    assert_eq!(mcd_predict(&m, &[0.0, 0.0]).unwrap_err(), OutlierError::Uncalibrated);
    let m = m.with_threshold(5.0);
    assert_eq!(mcd_predict(&m, &[0.0, 0.0]).unwrap(), Verdict::Inlier);
    assert_eq!(mcd_predict(&m, &[3.0, 4.0]).unwrap(), Verdict::Inlier);
    assert_eq!(mcd_predict(&m, &[30.0, 40.0]).unwrap(), Verdict::Outlier);
}

#[test]
fn sweep_is_monotone_and_selects_max_min() {
    let train = gaussian_cloud(600, 2, 11);
    let test_in = gaussian_cloud(300, 2, 12);
    let test_out: Vec<Vec<f64>> = gaussian_cloud(300, 2, 13)
        .into_iter()
        .map(|v| vec![v[0] + 2.5, v[1]])
        .collect();
    let m = mcd_fit(&train, &cfg(14)).unwrap();
    let res = sweep_contamination(&m, &train, &test_in, &test_out, &default_contamination_grid()).unwrap();
    for w in res.rows.windows(2) {
        assert!(w[1].inlier_acc <= w[0].inlier_acc);
        assert!(w[1].outlier_acc >= w[0].outlier_acc);
    }
    let best = res.best().min_acc();
    assert!(res.rows.iter().all(|r| r.min_acc() <= best));
    let first = res.rows.iter().position(|r| r.min_acc() == best).unwrap();
    assert_eq!(first, res.selected);
}

#[test]
fn separated_features_reach_perfect_sweep() {
    let train = gaussian_cloud(400, 2, 15);
    let test_in = gaussian_cloud(100, 2, 16);
    let test_out: Vec<Vec<f64>> = gaussian_cloud(100, 2, 17)
        .into_iter()
        .map(|v| vec![v[0] + 50.0, v[1] - 50.0])
        .collect();
    let m = mcd_fit(&train, &cfg(18)).unwrap();
    let res = sweep_contamination(&m, &train, &test_in, &test_out, &[0.001, 0.01, 0.1, 0.3]).unwrap();
    assert_eq!(res.best().min_acc(), 1.0);
    assert!(sweep_contamination(&m, &train, &[], &test_out, &[0.1]).is_err());
}

#[test]
fn projection_only_for_wide_features() {
    assert!(Projection::for_sample_size(1000, 512, 1).is_some());
    assert!(Projection::for_sample_size(1000, 100, 1).is_none());
    let p = Projection::new(40, PROJECTED_DIM, 3);
    assert_eq!(p.apply(&[1.0; 40]).len(), PROJECTED_DIM);
    assert_eq!(p, Projection::new(40, PROJECTED_DIM, 3));
}

fn point_masses() -> Vec<Vec<f64>> {
    let mut x = vec![vec![0.0]; 30];
    x.extend(vec![vec![10.0]; 20]);
    x
}

#[test]
fn kmeans_point_masses_are_exact() {
    let m = kmeans_fit(&point_masses(), &KMeansConfig::default()).unwrap();
    let mut c: Vec<f64> = m.centroids().iter().map(|c| c[0]).collect();
    c.sort_by(f64::total_cmp);
    assert_eq!(c, vec![0.0, 10.0]);
    assert_eq!(m.inertia, 0.0);
}

#[test]
fn kmeans_inertia_descends_from_seeding() {
    let mut x = gaussian_cloud(300, 3, 21);
    x.extend(gaussian_cloud(200, 3, 22).into_iter().map(|v| v.iter().map(|a| a + 3.0).collect()));
    for seed in 0..5 {
        let m = kmeans_fit(&x, &KMeansConfig { seed, ..KMeansConfig::default() }).unwrap();
        for w in m.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0]);
        }
        assert!(m.inertia <= m.inertia_trace[0]);
    }
}

#[test]
fn kmeans_restarts_keep_lowest_inertia() {
    let x = gaussian_cloud(200, 2, 23);
    let c = KMeansConfig {
        k: 4,
        restarts: 10,
        seed: 24,
        ..KMeansConfig::default()
    };
    let best = kmeans_fit_restarts(&x, &c).unwrap();
    let all: Vec<f64> = (0..10).map(|i| fit_once(&x, &c, i).unwrap().inertia).collect();
    let min = all.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(best.inertia, min);
}

#[test]
fn kmeans_requires_k_samples() {
    assert!(matches!(
        kmeans_fit(&[vec![1.0]], &KMeansConfig::default()),
        Err(OutlierError::TooFewSamples { .. })
    ));
}

#[test]
fn outlier_cluster_labeling() {
    let m = kmeans_fit(&point_masses(), &KMeansConfig::default()).unwrap();
    let zero_cluster = m.assign(&[0.0]).unwrap();
    let labeled = kmeans_label_outlier_cluster(m.clone(), &[vec![0.0], vec![0.0]]).unwrap();
    assert_eq!(labeled.outlier_cluster, Some(1 - zero_cluster));
    assert_eq!(labeled.predict(&[10.0]).unwrap(), Verdict::Outlier);
    assert_eq!(labeled.predict(&[0.5]).unwrap(), Verdict::Inlier);
    assert_eq!(m.predict(&[0.0]).unwrap_err(), OutlierError::Unlabeled);

    // Two inliers in each cluster; their mean is 4.5, closer to the 0
    // cluster, so the 10 cluster is the outlier cluster.
    let tie = kmeans_label_outlier_cluster(m.clone(), &[vec![0.0], vec![10.0], vec![-4.0], vec![12.0]]);
    let tie = tie.unwrap();
    assert_eq!(tie.outlier_cluster, Some(tie.assign(&[10.0]).unwrap()));
}

#[test]
fn standardized_kmeans_separates_scaled_features() {
    // Feature 0 carries the cluster split; feature 1 is wide noise that
    // dominates raw Euclidean distance.
    let mut r = rng::stream(31, &[]);
    let x: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let c = if i < 100 { 0.0 } else { 1.0 };
            vec![c + 0.05 * rng::normal(&mut r), 1000.0 * rng::normal(&mut r)]
        })
        .collect();
    let m = kmeans_fit_restarts(
        &x,
        &KMeansConfig {
            standardize: true,
            seed: 32,
            ..KMeansConfig::default()
        },
    )
    .unwrap();
    let a = m.assign(&x[0]).unwrap();
    let agree = (0..200)
        .filter(|&i| (m.assign(&x[i]).unwrap() == a) == (i < 100))
        .count();
    assert!(agree >= 190, "{agree}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mahalanobis_scales_along_rays(a in 0.1f64..10.0, b in -5.0f64..5.0, c in -5.0f64..5.0, t in 0.0f64..20.0) {
        let mut s = Matrix::zeros(2, 2);
        s[(0, 0)] = a;
        s[(1, 1)] = 1.0;
        s[(0, 1)] = 0.1;
        s[(1, 0)] = 0.1;
        let m = McdModel::from_parts(vec![1.0, -1.0], s).unwrap();
        let d1 = mahalanobis(&m, &[1.0 + b, -1.0 + c]).unwrap();
        let dt = mahalanobis(&m, &[1.0 + t * b, -1.0 + t * c]).unwrap();
        prop_assert!((dt - t * d1).abs() <= 1e-9 * (1.0 + dt));
    }

    #[test]
    fn kmeans_is_deterministic(seed in 0u64..50) {
        let x = gaussian_cloud(60, 2, seed);
        let c = KMeansConfig { seed, ..KMeansConfig::default() };
        prop_assert_eq!(kmeans_fit(&x, &c).unwrap(), kmeans_fit(&x, &c).unwrap());
    }
}
