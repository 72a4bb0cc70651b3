use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

#[path = "../../tests/common/oracles.rs"]
mod oracles;

fn random_instance(seed: u64, k: usize, d: usize, n: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = (0..d * (k - 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            r.extend((1..d).map(|_| rng.random_range(-2.0..2.0)));
            r
        })
        .collect();
    let labels = (0..n).map(|i| i % k).collect::<Vec<_>>();
    (theta, rows, labels)
}

#[test]
fn one_hot_examples() {
    assert_eq!(one_hot(0, 5).unwrap(), vec![0.0; 4]);
    assert_eq!(one_hot(3, 5).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
    assert_eq!(one_hot(1, 2).unwrap(), vec![1.0]);
    assert!(one_hot(5, 5).is_err());
}

#[test]
fn class_probs_examples() {
    let shape = ModelShape::new(5, 1).unwrap();
    let p = class_probs(&[0.0; 4], &[1.0], shape).unwrap();
    assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));

    let shape = ModelShape::new(2, 1).unwrap();
    let p = class_probs(&[2f64.ln()], &[1.0], shape).unwrap();
    assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);

    let p = class_probs(&[800.0], &[1.0], shape).unwrap();
    assert!(p[0].is_finite() && p[0] <= 1.0 && 1.0 - p[0] < 1e-300);
    let p = class_probs(&[-800.0], &[1.0], shape).unwrap();
    assert!(p[0] >= 0.0 && p[0] < 1e-300);

    assert!(class_probs(&[f64::INFINITY], &[1.0], shape).is_err());
}

#[test]
fn nll_at_zero_is_log_k() {
    for k in [2usize, 5] {
        let shape = ModelShape::new(k, 2).unwrap();
        let d = Design::from_rows(&[vec![1.0, 0.3], vec![1.0, -2.0], vec![1.0, 5.0]]).unwrap();
        let v = nll(&vec![0.0; shape.n_params()], &d, &[0, 1, 1], shape).unwrap();
        assert!((v - (k as f64).ln()).abs() < 1e-14);
    }
    assert!((5f64.ln() - 1.60944).abs() < 1e-5);
}

#[test]
fn nll_matches_softmax_oracle() {
    for seed in 0..5 {
        let (theta, rows, labels) = random_instance(seed, 4, 3, 30);
        let shape = ModelShape::new(4, 3).unwrap();
        let d = Design::from_rows(&rows).unwrap();
        let ours = nll(&theta, &d, &labels, shape).unwrap();
        let oracle = oracles::softmax_nll(&theta, &rows, &labels, 4);
        assert!((ours - oracle).abs() < 1e-12, "{ours} vs {oracle}");
    }
}

#[test]
fn nll_rejects_bad_labels() {
    let shape = ModelShape::new(3, 1).unwrap();
    let d = Design::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
    assert!(nll(&[0.0, 0.0], &d, &[0], shape).is_err());
    assert!(nll(&[0.0, 0.0], &d, &[0, 3], shape).is_err());
    assert!(nll(&[0.0], &d, &[0, 1], shape).is_err());
}

#[test]
fn gradient_zero_on_balanced_intercept_only() {
    let shape = ModelShape::new(3, 1).unwrap();
    let d = Design::from_rows(&vec![vec![1.0]; 6]).unwrap();
    let g = nll_grad(&[0.0, 0.0], &d, &[0, 1, 2, 0, 1, 2], shape).unwrap();
    assert!(g.amax() < 1e-15);
}

#[test]
fn gradient_matches_finite_differences() {
    let (theta, rows, labels) = random_instance(11, 3, 2, 20);
    let shape = ModelShape::new(3, 2).unwrap();
    let d = Design::from_rows(&rows).unwrap();
    let g = nll_grad(&theta, &d, &labels, shape).unwrap();
    let f = |t: &[f64]| oracles::softmax_nll(t, &rows, &labels, 3);
    let fd = oracles::fd_gradient(&f, &theta, 1e-5);
    let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(num / den < 1e-6, "relative error {}", num / den);
}

#[test]
fn hessian_analytic_single_row() {
    let shape = ModelShape::new(3, 1).unwrap();
    let d = Design::from_rows(&[vec![1.0]]).unwrap();
    let h = nll_hess(&[0.0, 0.0], &d, shape).unwrap();
    let expected = [[2.0 / 9.0, -1.0 / 9.0], [-1.0 / 9.0, 2.0 / 9.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((h[(i, j)] - expected[i][j]).abs() < 1e-15);
        }
    }
}

#[test]
fn hessian_matches_differentiated_gradient() {
    let (theta, rows, labels) = random_instance(5, 4, 3, 25);
    let shape = ModelShape::new(4, 3).unwrap();
    let d = Design::from_rows(&rows).unwrap();
    let h = nll_hess(&theta, &d, shape).unwrap();
    let grad = |t: &[f64]| nll_grad(t, &d, &labels, shape).unwrap().as_slice().to_vec();
    let jac = oracles::fd_jacobian(&grad, &theta, 1e-5);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..theta.len() {
        for j in 0..theta.len() {
            num += (h[(i, j)] - jac[i][j]).powi(2);
            den += jac[i][j].powi(2);
        }
    }
    assert!((num / den).sqrt() < 1e-5);
}

#[test]
fn hessian_is_label_free_bitwise() {
    let (theta, rows, _) = random_instance(2, 3, 2, 15);
    let shape = ModelShape::new(3, 2).unwrap();
    let d = Design::from_rows(&rows).unwrap();
    // `nll_hess` takes no labels at all; the MLE objective's Hessian must not
    // change when labels are permuted either.
    let a = MleObjective { design: &d, labels: &[0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2], shape };
    let b = MleObjective { design: &d, labels: &[2, 2, 1, 0, 0, 1, 2, 1, 0, 0, 2, 2, 1, 1, 0], shape };
    assert_eq!(a.hessian(&theta).unwrap(), b.hessian(&theta).unwrap());
}

#[test]
fn intercept_only_closed_form() {
    let shape = ModelShape::new(3, 1).unwrap();
    let mut labels = vec![0; 10];
    labels.extend(vec![1; 10]);
    labels.extend(vec![2; 20]);
    let d = Design::from_rows(&vec![vec![1.0]; 40]).unwrap();
    let (coef, diag) = fit_mle(&d, &labels, shape, &NewtonOptions::default()).unwrap();
    assert!(diag.converged);
    assert!(coef.values[0].abs() < 1e-6);
    assert!((coef.values[1] - 2f64.ln()).abs() < 1e-6);
    // First-order condition at the MLE.
    assert!(nll_grad(&coef.values, &d, &labels, shape).unwrap().amax() <= 1e-8);
}

#[test]
fn fit_mle_absent_class_is_shape_error() {
    let shape = ModelShape::new(3, 1).unwrap();
    let d = Design::from_rows(&vec![vec![1.0]; 4]).unwrap();
    assert!(matches!(fit_mle(&d, &[0, 1, 0, 1], shape, &NewtonOptions::default()), Err(Error::Shape(_))));
}

#[test]
fn fit_mle_detects_separation() {
    let shape = ModelShape::new(2, 2).unwrap();
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64 - 4.5]).collect();
    let labels: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
    let d = Design::from_rows(&rows).unwrap();
    let opts = NewtonOptions { separation_bound: 50.0, ..Default::default() };
    assert!(matches!(fit_mle(&d, &labels, shape, &opts), Err(Error::Separation { .. })));
}

#[test]
fn binary_fit_matches_irls_oracle() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| vec![1.0, rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)]).collect();
        let labels: Vec<usize> = rows
            .iter()
            .map(|x| {
                let eta = 0.3 + 0.8 * x[1] - 0.5 * x[2];
                usize::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()))
            })
            .collect();
        let shape = ModelShape::new(2, 3).unwrap();
        let (coef, _) = fit_mle(&Design::from_rows(&rows).unwrap(), &labels, shape, &NewtonOptions::default()).unwrap();
        let oracle = oracles::binary_irls(&rows, &labels);
        for (a, b) in coef.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn covariate_rescaling_leaves_probabilities_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![1.0, rng.random_range(-2.0..2.0)]).collect();
    let labels: Vec<usize> = rows.iter().map(|x| { let u = x[1] + rng.random_range(-2.5..2.5); if u > 0.7 { 2 } else if u > -0.7 { 1 } else { 0 } }).collect();
    let shape = ModelShape::new(3, 2).unwrap();
    let opts = NewtonOptions::default();
    let (a, _) = fit_mle(&Design::from_rows(&rows).unwrap(), &labels, shape, &opts).unwrap();
    let scaled: Vec<Vec<f64>> = rows.iter().map(|x| vec![1.0, 3.0 * x[1] + 7.0]).collect();
    let (b, _) = fit_mle(&Design::from_rows(&scaled).unwrap(), &labels, shape, &opts).unwrap();
    assert!((b.values[1] * 3.0 - a.values[1]).abs() < 1e-7, "{:?} {:?}", a.values, b.values);
    for (x, xs) in rows.iter().zip(&scaled) {
        let pa = class_probs(&a.values, x, shape).unwrap();
        let pb = class_probs(&b.values, xs, shape).unwrap();
        for (u, v) in pa.iter().zip(&pb) {
            assert!((u - v).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probabilities_normalize(theta in prop::collection::vec(-30.0f64..30.0, 6), x in prop::collection::vec(-3.0f64..3.0, 1)) {
        let shape = ModelShape::new(4, 2).unwrap();
        let row = [1.0, x[0]];
        let p = class_probs(&theta, &row, shape).unwrap();
        let s: f64 = p.iter().sum();
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!(s <= 1.0 + 1e-12);
        // Compare with the direct softmax at moderate scales.
        let logits = [0.0, theta[0] + theta[1] * x[0], theta[2] + theta[3] * x[0], theta[4] + theta[5] * x[0]];
        let m = logits.iter().cloned().fold(f64::MIN, f64::max);
        let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
        for k in 0..3 {
            prop_assert!((p[k] - (logits[k + 1] - m).exp() / z).abs() <= 1e-12);
        }
    }

    #[test]
    fn nll_is_convex_along_segments(seed in 0u64..1000, t in 0.01f64..0.99) {
        let (ta, rows, labels) = random_instance(seed, 3, 2, 12);
        let (tb, _, _) = random_instance(seed + 7919, 3, 2, 12);
        let shape = ModelShape::new(3, 2).unwrap();
        let d = Design::from_rows(&rows).unwrap();
        let mix: Vec<f64> = ta.iter().zip(&tb).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let lhs = nll(&mix, &d, &labels, shape).unwrap();
        let rhs = t * nll(&ta, &d, &labels, shape).unwrap() + (1.0 - t) * nll(&tb, &d, &labels, shape).unwrap();
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn hessian_symmetric_psd(seed in 0u64..1000) {
        let (theta, rows, _) = random_instance(seed, 4, 3, 10);
        let shape = ModelShape::new(4, 3).unwrap();
        let h = nll_hess(&theta, &Design::from_rows(&rows).unwrap(), shape).unwrap();
        prop_assert!((&h - h.transpose()).amax() <= 1e-12);
        let eig = SymmetricEigen::new(h).eigenvalues;
        prop_assert!(eig.iter().all(|&e| e >= -1e-10));
    }
}
