//! Synthetic data generators for verification runs, benchmarks, and tests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ingest::Dataset;

/// Exactly n/2 true values in random order.
pub fn balanced_signs<R: Rng>(n: usize, rng: &mut R) -> Vec<bool> {
    let mut v: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
    v.shuffle(rng);
    v
}

fn signed_magnitudes<R: Rng>(signs: &[bool], rng: &mut R) -> Vec<f64> {
    signs
        .iter()
        .map(|&b| if b { 1.0 } else { -1.0 } * (0.2 + rng.gen::<f64>()))
        .collect()
}

/// Three continuous carriers whose signs form a parity (XOR) triple: the
/// triplet information is 1 bit while every pairwise MI is zero. The first
/// two sign vectors are exactly balanced so the median split recovers them.
pub fn xor_carriers<R: Rng>(n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let sx = balanced_signs(n, rng);
    let sy = balanced_signs(n, rng);
    let sz: Vec<bool> = sx.iter().zip(&sy).map(|(a, b)| a ^ b).collect();
    let x = signed_magnitudes(&sx, rng);
    let y = signed_magnitudes(&sy, rng);
    let z = signed_magnitudes(&sz, rng);
    (x, y, z)
}

/// A sample from a bivariate Gaussian with the given correlation.
pub fn bivariate_gaussian<R: Rng>(n: usize, rho: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let tail = (1.0 - rho * rho).sqrt();
    for _ in 0..n {
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        x.push(u);
        y.push(rho * u + tail * v);
    }
    (x, y)
}

/// Independent standard-normal columns.
pub fn gaussian_dataset<R: Rng>(n_vars: usize, n_obs: usize, rng: &mut R) -> Dataset {
    let values = (0..n_vars)
        .map(|_| (0..n_obs).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let names = (0..n_vars).map(|i| format!("v{i}")).collect();
    Dataset::complete(names, values).unwrap()
}

/// Block-structured dataset: variables in the same block share a latent factor
/// with the given loading; across blocks they are independent.
pub fn planted_blocks<R: Rng>(
    n_vars: usize,
    n_obs: usize,
    n_blocks: usize,
    loading: f64,
    rng: &mut R,
) -> Dataset {
    let factors: Vec<Vec<f64>> = (0..n_blocks)
        .map(|_| (0..n_obs).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let noise = (1.0 - loading * loading).max(0.0).sqrt();
    let values = (0..n_vars)
        .map(|v| {
            let f = &factors[v % n_blocks];
            (0..n_obs)
                .map(|t| loading * f[t] + noise * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let names = (0..n_vars).map(|i| format!("v{i}")).collect();
    Dataset::complete(names, values).unwrap()
}

/// Three variables riding one latent factor with the given loading.
pub fn dependent_triple<R: Rng>(
    n: usize,
    loading: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let f: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let noise = (1.0 - loading * loading).max(0.0).sqrt();
    let mk = |rng: &mut R| -> Vec<f64> {
        f.iter()
            .map(|&v| loading * v + noise * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let x = mk(rng);
    let y = mk(rng);
    let z = mk(rng);
    (x, y, z)
}
