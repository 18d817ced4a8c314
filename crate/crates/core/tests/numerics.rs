//! Numerical kernels against slow reference computations.

mod common;

use common::rng;
use corrguard::aggregate::geometric_median;
use corrguard::fl::{ModelSpec, Sample};
use corrguard::gradients::{build_correlation_matrix, Centering, GradientUpdate};
use rand::Rng;

fn seeded_updates(seed: u64, count: usize, d: usize) -> Vec<GradientUpdate> {
    let mut r = rng(seed);
    (0..count)
        .map(|id| {
            let delta = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
            GradientUpdate::new(id, delta, 10 + id)
        })
        .collect()
}

/// Textbook single-pass formula on raw sums.
fn pearson_by_sums(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    let saa: f64 = a.iter().map(|x| x * x).sum();
    let sbb: f64 = b.iter().map(|x| x * x).sum();
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt())
}

#[test]
fn correlation_matrix_matches_brute_force() {
    let updates = seeded_updates(21, 5, 40);
    let m = build_correlation_matrix(&updates, Centering::PerVector).unwrap();
    for i in 0..5 {
        assert_eq!(m.get(i, i), 0.0);
        for j in 0..5 {
            if i != j {
                let expected = pearson_by_sums(&updates[i].delta, &updates[j].delta);
                assert!((m.get(i, j) - expected).abs() <= 1e-12, "({i},{j})");
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }
}

fn objective(points: &[Vec<f64>], z: &[f64]) -> f64 {
    points
        .iter()
        .map(|p| p.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .sum()
}

#[test]
fn geometric_median_is_locally_optimal() {
    let updates = seeded_updates(22, 9, 5);
    let points: Vec<Vec<f64>> = updates.iter().map(|u| u.delta.clone()).collect();
    let gm = geometric_median(&updates, 1e-10, 10_000).unwrap();
    assert!(gm.converged);
    let best = objective(&points, &gm.point);
    let mut r = rng(23);
    for _ in 0..200 {
        let probe: Vec<f64> = gm.point.iter().map(|x| x + r.random_range(-1e-3..1e-3)).collect();
        assert!(objective(&points, &probe) >= best - 1e-12);
    }
}

#[test]
fn geometric_median_matches_grid_search_in_2d() {
    let h = 1e-3;
    let mut r = rng(24);
    for _ in 0..3 {
        let updates: Vec<GradientUpdate> = (0..7)
            .map(|id| GradientUpdate::new(id, vec![r.random_range(0.0..1.0), r.random_range(0.0..1.0)], 1))
            .collect();
        let points: Vec<Vec<f64>> = updates.iter().map(|u| u.delta.clone()).collect();
        let steps = (1.0 / h) as usize;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for gx in 0..=steps {
            for gy in 0..=steps {
                let z = [gx as f64 * h, gy as f64 * h];
                let f = objective(&points, &z);
                if f < best.0 {
                    best = (f, z);
                }
            }
        }
        let gm = geometric_median(&updates, 1e-10, 10_000).unwrap();
        let dist = ((gm.point[0] - best.1[0]).powi(2) + (gm.point[1] - best.1[1]).powi(2)).sqrt();
        assert!(dist <= 10.0 * h, "weiszfeld {:?} vs grid {:?}", gm.point, best.1);
    }
}

fn relative_gradient_error(spec: ModelSpec, seed: u64) -> f64 {
    let params = spec.init(seed);
    let mut r = rng(seed);
    let samples: Vec<Sample> = (0..6)
        .map(|_| Sample {
            features: (0..spec.input_dim).map(|_| r.random_range(-1.0..1.0)).collect(),
            label: r.random_range(0..spec.num_classes),
        })
        .collect();
    let batch: Vec<&Sample> = samples.iter().collect();
    // Perturb away from the symmetric zero start.
    let mut values = params.values().to_vec();
    for v in &mut values {
        *v += r.random_range(-0.3..0.3);
    }
    let params = corrguard::fl::ModelParams::new(spec, values.clone()).unwrap();
    let mut grad = vec![0.0; params.len()];
    params.loss_and_gradient(&batch, &mut grad);

    let eps = 1e-5;
    let mut scratch = vec![0.0; params.len()];
    let mut fd = vec![0.0; params.len()];
    for k in 0..values.len() {
        let mut plus = values.clone();
        plus[k] += eps;
        let mut minus = values.clone();
        minus[k] -= eps;
        let lp = corrguard::fl::ModelParams::new(spec, plus).unwrap().loss_and_gradient(&batch, &mut scratch);
        let lm = corrguard::fl::ModelParams::new(spec, minus).unwrap().loss_and_gradient(&batch, &mut scratch);
        fd[k] = (lp - lm) / (2.0 * eps);
    }
    let diff: f64 = grad.iter().zip(&fd).map(|(g, f)| (g - f).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = fd.iter().map(|f| f * f).sum::<f64>().sqrt();
    diff / norm
}

#[test]
fn analytic_gradients_match_central_differences() {
    assert!(relative_gradient_error(ModelSpec::softmax(7, 4), 25) <= 1e-4);
    assert!(relative_gradient_error(ModelSpec::softmax(5, 3).with_hidden(8), 26) <= 1e-4);
}
