//! Test-only helpers shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsn_hids::svm::{FeatureVector, KernelParams, Label, Sample};

/// Dense RBF Gram matrix computed directly from the formula.
pub fn gram(data: &[Sample], k: &KernelParams) -> Vec<Vec<f64>> {
    let gamma = 1.0 / (2.0 * k.sigma * k.sigma);
    data.iter()
        .map(|a| {
            data.iter()
                .map(|b| {
                    let d2: f64 =
                        a.x.as_slice()
                            .iter()
                            .zip(b.x.as_slice())
                            .map(|(p, q)| (p - q).powi(2))
                            .sum();
                    let d = if k.squared_norm { d2 } else { d2.sqrt() };
                    (-gamma * d).exp()
                })
                .collect()
        })
        .collect()
}

pub fn dual_value(alpha: &[f64], y: &[f64], kmat: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kmat[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 <= a <= C, y'a = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi + lambda * yi).clamp(0.0, c))
            .collect()
    };
    let h = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    let bound = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if h(&at(mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Maximize the SVM dual by accelerated projected-gradient ascent.
/// Returns the multipliers and the dual value reached.
pub fn dual_oracle(data: &[Sample], c: f64, k: &KernelParams, iterations: usize) -> (Vec<f64>, f64) {
    let n = data.len();
    let kmat = gram(data, k);
    let y: Vec<f64> = data.iter().map(|s| s.y.sign()).collect();
    // Lipschitz bound of the gradient: the trace dominates the top eigenvalue.
    let lip: f64 = (0..n).map(|i| kmat[i][i]).sum();
    let step = 1.0 / lip;

    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 - y[i] * (0..n).map(|j| a[j] * y[j] * kmat[i][j]).sum::<f64>())
            .collect()
    };

    let mut alpha = vec![0.0; n];
    let mut prev = alpha.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        let z: Vec<f64> = alpha.iter().zip(&prev).map(|(a, p)| a + momentum * (a - p)).collect();
        let g = grad(&z);
        let stepped: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi + step * gi).collect();
        prev = alpha;
        alpha = project(&stepped, &y, c);
        t = t_next;
    }
    let value = dual_value(&alpha, &y, &kmat);
    (alpha, value)
}

/// `n` points uniform in the unit box of `dim` dimensions, labelled by a
/// random hyperplane through the box. Both labels are guaranteed.
pub fn random_linear_set(seed: u64, n: usize, dim: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data: Vec<Sample> = (0..n)
            .map(|i| {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = x.iter().zip(&w).map(|(a, b)| (a - 0.5) * b).sum();
                let y = if s >= 0.0 { Label::Positive } else { Label::Negative };
                Sample::new(i as u64, FeatureVector::new(x).unwrap(), y)
            })
            .collect();
        let pos = data.iter().filter(|s| s.y == Label::Positive).count();
        if pos > 0 && pos < n {
            return data;
        }
    }
}

/// Points with random labels (generally not separable).
pub fn random_noisy_set(seed: u64, n: usize, dim: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<Sample> = (0..n)
        .map(|i| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
            let y = if rng.random_bool(0.5) {
                Label::Positive
            } else {
                Label::Negative
            };
            Sample::new(i as u64, FeatureVector::new(x).unwrap(), y)
        })
        .collect();
    data[0].y = Label::Positive;
    data[1].y = Label::Negative;
    data
}

pub fn fv(values: &[f64]) -> FeatureVector {
    FeatureVector::new(values.to_vec()).unwrap()
}

/// Two overlapping Gaussian blobs in the unit box, ids starting at `first_id`.
pub fn blob_draw(seed: u64, first_id: u64, n: usize, dim: usize) -> Vec<Sample> {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.15).unwrap();
    (0..n)
        .map(|i| {
            let positive = i % 2 == 0;
            let centre: f64 = if positive { 0.35 } else { 0.65 };
            let x: Vec<f64> = (0..dim)
                .map(|_| (centre + noise.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            let y = if positive { Label::Positive } else { Label::Negative };
            Sample::new(first_id + i as u64, FeatureVector::new(x).unwrap(), y)
        })
        .collect()
}

/// Synthetic corpus shared by the experiment suites, projected onto the
/// ranking features so every configured subset can be drawn from it.
pub fn corpus() -> &'static wsn_hids::dataset::LabeledDataset {
    use std::sync::OnceLock;
    use wsn_hids::dataset::synth::{generate_dataset_with, SynthConfig};
    use wsn_hids::experiment::ExperimentConfig;
    static CORPUS: OnceLock<wsn_hids::dataset::LabeledDataset> = OnceLock::new();
    CORPUS.get_or_init(|| generate_dataset_with(&SynthConfig::default(), 7, &ExperimentConfig::default().rank_features))
}
