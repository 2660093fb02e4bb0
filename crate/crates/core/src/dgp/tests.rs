use super::*;
use crate::rng::rng_from_seed;
use crate::stats::mean_var;
use alloc::vec;
use rand::Rng as _;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn standard_normal_matrix(n: usize, k: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n * k).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn simulation_matrix_is_symmetrized_from_the_lower_triangle() {
    let c = CorrelationTarget::simulation();
    assert!(c.is_symmetrized());
    assert!(!c.is_adjusted());
    assert_eq!(c.get(0, 4), 0.9);
    assert_eq!(c.get(4, 0), 0.9);
    assert_eq!(c.get(1, 3), 0.8);
    let (values, _) = symmetric_eigen(c.matrix(), 5);
    assert!((values[0] - 0.0535).abs() < 1e-3, "{values:?}");
}

#[test]
fn non_positive_definite_targets_are_rejected_or_repaired() {
    let bad = vec![1.0, 0.99, 0.0, 0.99, 1.0, 0.99, 0.0, 0.99, 1.0];
    match CorrelationTarget::new(bad.clone(), 3) {
        Err(Error::NotPositiveDefinite { min_eigenvalue }) => assert!(min_eigenvalue < 0.0),
        other => panic!("{other:?}"),
    }
    let rows: Vec<Vec<f64>> = bad.chunks(3).map(<[f64]>::to_vec).collect();
    let repaired = CorrelationTarget::from_lower_triangle(&rows).unwrap();
    assert!(repaired.is_adjusted());
    assert!(!repaired.is_symmetrized());
    assert!((0..3).all(|i| repaired.get(i, i) == 1.0));
    assert!(CorrelationTarget::new(vec![1.0, 0.2, 0.3, 1.0], 2).is_err());
}

#[test]
fn identity_target_decorrelates() {
    let n = 100_000;
    let mut x = standard_normal_matrix(n, 5, 1);
    // introduce correlation first
    for row in x.chunks_exact_mut(5) {
        row[1] += 0.8 * row[0];
        row[4] -= 0.5 * row[2];
    }
    impose_correlation(&mut x, 5, &CorrelationTarget::identity(5)).unwrap();
    let c = empirical_correlation(&x, 5);
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                assert!(c[i * 5 + j].abs() < 0.02);
            }
        }
    }
}

#[test]
fn imposed_correlation_matches_target_and_keeps_marginals() {
    let n = 100_000;
    let target = CorrelationTarget::simulation();
    let mut x = standard_normal_matrix(n, 5, 2);
    for row in x.chunks_exact_mut(5) {
        row[0] = 3.0 * row[0] - 4.0;
    }
    let before: Vec<(f64, f64)> =
        (0..5).map(|j| mean_var(&x.iter().skip(j).step_by(5).copied().collect::<Vec<_>>())).collect();
    impose_correlation(&mut x, 5, &target).unwrap();
    let c = empirical_correlation(&x, 5);
    assert!(max_abs_diff(&c, target.matrix()) < 0.02);
    for (j, (m0, v0)) in before.iter().enumerate() {
        let (m, v) = mean_var(&x.iter().skip(j).step_by(5).copied().collect::<Vec<_>>());
        assert!((m - m0).abs() < 1e-9);
        assert!((v / v0 - 1.0).abs() < 0.02);
    }
    let once = x.clone();
    impose_correlation(&mut x, 5, &target).unwrap();
    assert!(max_abs_diff(&once, &x) < 1e-8);
}

#[test]
fn imposition_needs_enough_rows() {
    let mut x = standard_normal_matrix(5, 5, 3);
    assert!(impose_correlation(&mut x, 5, &CorrelationTarget::simulation()).is_err());
    let mut constant = vec![1.0; 50];
    assert_eq!(
        impose_correlation(&mut constant, 5, &CorrelationTarget::identity(5)),
        Err(Error::ZeroVariance { column: 0 })
    );
}

#[test]
fn nonlinear_truth_hand_values() {
    assert_eq!(nonlinear_truth(&[0.0; 5]), 23.0);
    // all first-layer pre-activations negative: -1, -3, -3
    assert_eq!(nonlinear_truth(&[-3.0, 1.0, -3.0, -3.0, -3.0]), 4.0);
}

#[test]
fn linear_truth_hand_values() {
    assert_eq!(linear_truth(&[0.0; 5]), 0.0);
    assert_eq!(linear_truth(&[1.0; 5]), 9.0);
}

#[test]
fn noise_variances_match_the_processes() {
    for (dgp, var) in [(Dgp::Nonlinear, 0.49), (Dgp::Linear, 1.0)] {
        let d = dgp.generate(100_000, 4).unwrap();
        let resid: Vec<f64> = d.targets().iter().zip(d.noiseless().unwrap()).map(|(y, f)| y - f).collect();
        let (m, v) = mean_var(&resid);
        assert!((v - var).abs() < 0.02, "{dgp:?}: {v}");
        assert!(m.abs() < 0.01);
    }
}

#[test]
fn generated_regressors_follow_the_design() {
    let d = gen_linear(100_000, 5).unwrap();
    let c = empirical_correlation(d.features(), 5);
    assert!(max_abs_diff(&c, CorrelationTarget::simulation().matrix()) < 1e-9);
    for (j, mu) in Dgp::Linear.means().iter().enumerate() {
        let (m, v) = mean_var(&d.column(j).collect::<Vec<_>>());
        assert!((m - mu).abs() < 0.02 && (v - 1.0).abs() < 0.02);
    }
}

#[test]
fn generation_is_reproducible_and_seed_streams_independent() {
    assert_eq!(gen_nonlinear(300, 9).unwrap(), gen_nonlinear(300, 9).unwrap());
    let a = gen_linear(100_000, 10).unwrap();
    let b = gen_linear(100_000, 11).unwrap();
    let xa: Vec<f64> = a.column(0).collect();
    let xb: Vec<f64> = b.column(0).collect();
    let c = empirical_correlation(&xa.iter().zip(&xb).flat_map(|(p, q)| [*p, *q]).collect::<Vec<_>>(), 2);
    assert!(c[1].abs() < 0.02);
    let ea: Vec<f64> = a.targets().iter().zip(a.noiseless().unwrap()).map(|(y, f)| y - f).collect();
    let eb: Vec<f64> = b.targets().iter().zip(b.noiseless().unwrap()).map(|(y, f)| y - f).collect();
    let c = empirical_correlation(&ea.iter().zip(&eb).flat_map(|(p, q)| [*p, *q]).collect::<Vec<_>>(), 2);
    assert!(c[1].abs() < 0.02);
}

fn nonlinear_signs(x: &[f64]) -> [bool; 5] {
    let a = 1.0 - 3.0 * x[0] - 2.0 * x[1] + x[2] + 5.0 * x[3] - 3.0 * x[4];
    let b = 1.0 + 4.0 * x[0] + 5.0 * x[1] + 2.0 * x[2] + 2.0 * x[3] - 5.0 * x[4];
    let c = 1.0 - 3.0 * x[0] - 4.0 * x[1] + 2.0 * x[2] - 2.0 * x[3] + 3.0 * x[4];
    let (h11, h21, h31) = (a.max(0.0), b.max(0.0), c.max(0.0));
    let d = 1.0 - h11 + 3.0 * h21 + 5.0 * h31;
    let e = 1.0 - 2.0 * h11 + 3.0 * h21 + 5.0 * h31;
    [a > 0.0, b > 0.0, c > 0.0, d > 0.0, e > 0.0]
}

#[test]
fn nonlinear_truth_is_piecewise_linear_along_rays() {
    let mut rng = rng_from_seed(12);
    let h = 1e-3;
    for _ in 0..100 {
        let x0: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let u: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let at = |t: f64| -> Vec<f64> { x0.iter().zip(&u).map(|(a, b)| a + t * b).collect() };
        let mut prev = nonlinear_truth(&at(0.0));
        let mut mid = nonlinear_truth(&at(h));
        for s in 2..1000 {
            let t = s as f64 * h;
            let next = nonlinear_truth(&at(t));
            let curvature = (next - 2.0 * mid + prev).abs();
            let crossed = nonlinear_signs(&at(t - 2.0 * h)) != nonlinear_signs(&at(t))
                || nonlinear_signs(&at(t - h)) != nonlinear_signs(&at(t));
            if curvature > 1e-8 {
                assert!(crossed, "kink without a ReLU boundary at t={t}");
            }
            // continuity: no jumps beyond the local slope scale
            assert!((next - mid).abs() < 1.0);
            prev = mid;
            mid = next;
        }
    }
}

#[test]
fn standardization_conventions() {
    let d = Dataset::from_rows(&[vec![0.0, 5.0], vec![2.0, 7.0]], &[1.0, 3.0]).unwrap();
    let (z, s) = normalize(&d, false).unwrap();
    assert_eq!(z.column(0).collect::<Vec<_>>(), vec![-1.0, 1.0]);
    assert_eq!(z.targets(), d.targets());
    let (z, _) = normalize(&d, true).unwrap();
    assert_eq!(z.targets(), &[-1.0, 1.0]);
    assert_eq!(s.feature_stds, vec![1.0, 1.0]);

    let x = standard_normal_matrix(200, 3, 13);
    let data = Dataset::new(x, vec![0.0; 200], 3).unwrap();
    let (z, _) = normalize(&data, false).unwrap();
    let (zz, _) = normalize(&z, false).unwrap();
    assert!(max_abs_diff(z.features(), zz.features()) < 1e-12);
}

#[test]
fn standardization_round_trips_on_held_out_data() {
    let all = gen_nonlinear(500, 14).unwrap();
    let (train, test) = train_test_split(&all, 400).unwrap();
    let s = Standardizer::fit(&train, true).unwrap();
    let back = s.invert(&s.apply(&test).unwrap()).unwrap();
    assert!(max_abs_diff(back.features(), test.features()) < 1e-12);
    assert!(max_abs_diff(back.targets(), test.targets()) < 1e-12);
    assert!(max_abs_diff(back.noiseless().unwrap(), test.noiseless().unwrap()) < 1e-12);
}

#[test]
fn zero_variance_column_is_named() {
    let d = Dataset::from_rows(&[vec![1.0, 3.0], vec![2.0, 3.0]], &[0.0, 1.0]).unwrap();
    assert_eq!(Standardizer::fit(&d, false), Err(Error::ZeroVariance { column: 1 }));
    let constant_target = Dataset::from_rows(&[vec![1.0], vec![2.0]], &[4.0, 4.0]).unwrap();
    let s = Standardizer::fit(&constant_target, true).unwrap();
    assert_eq!(s.target_std, 1.0);
}

#[test]
fn split_is_disjoint_and_exhaustive() {
    let all = gen_linear(1500, 15).unwrap();
    let (train, test) = train_test_split(&all, 1200).unwrap();
    assert_eq!((train.len(), test.len()), (1200, 300));
    assert_eq!(train.row(0), all.row(0));
    assert_eq!(test.row(0), all.row(1200));
    assert!(train_test_split(&all, 1500).is_err());
}
