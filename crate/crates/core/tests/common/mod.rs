//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use tmpnn::model::Scaling;
use tmpnn::{Dataset, TmpnnModel};

/// All exponent vectors of total degree `<= order` in `dim` variables,
/// grouped by degree, each group in descending lexicographic order.
pub fn enumerate_exponents(dim: usize, order: usize) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for q in 0..=order as u32 {
        rec(dim, q, &mut Vec::new(), &mut out);
    }
    out
}

/// Polynomial `Σ_i w[i][col] Π_j z_j^{e_ij}` with one `powi` product per term.
pub fn eval_polynomial(exponents: &[Vec<u32>], w: &[f64], dim: usize, col: usize, z: &[f64]) -> f64 {
    exponents
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mono: f64 = e.iter().zip(z).map(|(&k, &v)| v.powi(k as i32)).product();
            w[i * dim + col] * mono
        })
        .sum()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, amp: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-amp..amp))
}

/// Adds `U(-amp, amp)` to every map coefficient.
pub fn perturb(model: &mut TmpnnModel, amp: f64, rng: &mut impl Rng) {
    for w in model.map_mut().as_mut_slice() {
        *w += rng.random_range(-amp..amp);
    }
}

/// Central-difference gradient of the batch loss over every trainable
/// parameter.
pub fn fd_gradient(model: &TmpnnModel, x: &Array2<f64>, y: &Array2<f64>, h: f64) -> Vec<f64> {
    let base = model.flat_params();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_flat_params(&p).unwrap();
        let up = probe.loss_and_gradient(x.view(), y.view()).unwrap().0;
        p[i] = base[i] - h;
        probe.set_flat_params(&p).unwrap();
        let down = probe.loss_and_gradient(x.view(), y.view()).unwrap().0;
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// Largest `|a - f| / max(|a|, |f|, floor)` over all entries.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Smooth two-feature regression problem on `[-1, 1]²`.
pub fn smooth_dataset(n: usize, seed: u64) -> Dataset {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x = random_matrix(&mut rng, n, 2, 1.0);
    let y = Array2::from_shape_fn((n, 1), |(i, _)| {
        let (a, b) = (x[[i, 0]], x[[i, 1]]);
        (1.5 * a).sin() + 0.5 * a * b - 0.3 * b * b
    });
    Dataset::from_arrays(x, y).unwrap()
}

pub fn scaling_off(model: &TmpnnModel) -> TmpnnModel {
    let mut m = model.clone();
    m.set_scaling(Scaling::Off).unwrap();
    m
}

/// A small model fitted to [`smooth_dataset`] on raw features.
pub fn trained_smooth_model(order: usize, steps: usize, epochs: usize) -> TmpnnModel {
    use tmpnn::{BatchSize, ModelSpec, TrainConfig};
    let data = smooth_dataset(400, 21);
    let mut model = ModelSpec::new(2, 1)
        .order(order)
        .steps(steps)
        .standardize(false)
        .build()
        .unwrap();
    let config = TrainConfig {
        epochs,
        batch_size: BatchSize::Size(50),
        ..TrainConfig::default()
    };
    model.fit(&data, None, &config).unwrap();
    model
}

/// Distances from the `steps`-step and `2·steps`-step discrete states to the
/// reference solution at `τ = 1`, for each probe state `Z_0`.
pub fn euler_errors(model: &TmpnnModel, probes: &[Vec<f64>]) -> Vec<(f64, f64)> {
    use tmpnn::odeview::{extract_ode, integrate_reference, raise_order, REFERENCE_STEPS};
    let ode = extract_ode(model);
    let doubled = raise_order(model, 2 * model.steps()).unwrap();
    probes
        .iter()
        .map(|x| {
            let coarse = model.forward(x).unwrap();
            let fine = doubled.forward(x).unwrap();
            let z0 = &coarse.trajectory[0];
            let exact = integrate_reference(&ode, z0, REFERENCE_STEPS).unwrap();
            let dist = |z: &[f64]| {
                z.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            };
            (dist(coarse.trajectory.last().unwrap()), dist(fine.trajectory.last().unwrap()))
        })
        .collect()
}
