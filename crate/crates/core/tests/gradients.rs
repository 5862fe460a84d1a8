//! Analytic gradients against central finite differences.

use ndarray::Array2;
use propinfer::models::{DenseObjective, GcnObjective, GraphContext, Objective};
use propinfer::rng::rng_from_seed;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const EPS: f64 = 1e-4;

fn max_relative_error(obj: &dyn Objective, params: &[f64], batch: &[usize]) -> f64 {
    let mut grad = vec![0.0; params.len()];
    obj.loss_grad(params, batch, &mut grad);
    let mut scratch = vec![0.0; params.len()];
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        p[i] = params[i] + EPS;
        let up = obj.loss_grad(&p, batch, &mut scratch);
        p[i] = params[i] - EPS;
        let down = obj.loss_grad(&p, batch, &mut scratch);
        p[i] = params[i];
        let numeric = (up - down) / (2.0 * EPS);
        let err = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

fn random_params(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 0.5 * z }).collect()
}

fn dense_data(n: usize, w: usize, classes: usize) -> (Array2<f64>, Vec<usize>) {
    let mut rng = rng_from_seed(99);
    let x = Array2::from_shape_fn((n, w), |_| StandardNormal.sample(&mut rng));
    let y = (0..n).map(|_| rng.random_range(0..classes)).collect();
    (x, y)
}

#[test]
fn logistic_regression_gradient() {
    let (x, y) = dense_data(20, 6, 3);
    let obj = DenseObjective::new(&[6, 3], &x, &y, 1e-3);
    let batch: Vec<usize> = (0..20).collect();
    for point in 0..5 {
        let err = max_relative_error(&obj, &random_params(obj.n_params(), point), &batch);
        assert!(err < 1e-4, "point {point}: {err}");
    }
}

#[test]
fn mlp_gradient() {
    let (x, y) = dense_data(20, 5, 4);
    let obj = DenseObjective::new(&[5, 12, 4], &x, &y, 1e-4);
    let batch: Vec<usize> = (0..20).collect();
    for point in 0..5 {
        let err = max_relative_error(&obj, &random_params(obj.n_params(), 10 + point), &batch);
        assert!(err < 1e-4, "point {point}: {err}");
    }
}

#[test]
fn two_hidden_layer_gradient() {
    let (x, y) = dense_data(20, 4, 2);
    let obj = DenseObjective::new(&[4, 7, 5, 2], &x, &y, 0.0);
    let batch: Vec<usize> = (3..18).collect();
    for point in 0..5 {
        let err = max_relative_error(&obj, &random_params(obj.n_params(), 20 + point), &batch);
        assert!(err < 1e-4, "point {point}: {err}");
    }
}

#[test]
fn gcn_gradient() {
    let n = 30;
    let mut rng = rng_from_seed(5);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.12 {
                edges.push((i, j));
            }
        }
    }
    let features = Array2::from_shape_fn((n, 4), |_| rng.random::<f64>());
    let ctx = GraphContext::new(edges, features);
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let mask: Vec<usize> = (0..n).step_by(3).chain((1..n).step_by(3)).take(20).collect();
    let obj = GcnObjective::new(&ctx, &labels, &mask, 6, 3, 5e-4);
    let batch: Vec<usize> = (0..mask.len()).collect();
    for point in 0..5 {
        let err = max_relative_error(&obj, &random_params(obj.n_params(), 30 + point), &batch);
        assert!(err < 1e-4, "point {point}: {err}");
    }
}
