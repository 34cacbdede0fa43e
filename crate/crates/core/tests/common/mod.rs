#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cc_index::geometry::{center_and_normalize, Configuration, MassSystem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn system(masses: &[f64], d: usize, alpha: f64) -> Arc<MassSystem> {
    Arc::new(MassSystem::normalized(masses.to_vec(), d, alpha).unwrap())
}

/// Equal masses, one unequal vector and one with a dominant body.
pub fn mass_vectors(n: usize) -> Vec<Vec<f64>> {
    vec![
        vec![1.0; n],
        (1..=n).map(|k| k as f64).collect(),
        (0..n).map(|k| if k == 0 { 5.0 } else { 1.0 }).collect(),
    ]
}

/// Gaussian configuration with all pairwise distances at least `min_dist`.
pub fn random_configuration(sys: &Arc<MassSystem>, rng: &mut impl Rng, min_dist: f64) -> Configuration {
    loop {
        let coords: Vec<f64> = (0..sys.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = Configuration::new(sys.clone(), coords).unwrap();
        if q.min_distance() >= min_dist {
            return q;
        }
    }
}

pub fn random_normalized(sys: &Arc<MassSystem>, rng: &mut impl Rng) -> Configuration {
    loop {
        let q = center_and_normalize(&random_configuration(sys, rng, 0.05)).unwrap();
        if q.min_distance() > 0.05 {
            return q;
        }
    }
}

pub fn equilateral(d: usize, alpha: f64) -> Configuration {
    let sys = system(&[1.0, 1.0, 1.0], d, alpha);
    let pts: Vec<Vec<f64>> = (0..3)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let mut p = vec![0.0; d];
            p[0] = t.cos();
            p[1] = t.sin();
            p
        })
        .collect();
    Configuration::from_points(sys, &pts).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Independent collinear oracle for equal masses and `n = 4`.
///
/// For equal masses the collinear central configuration of each ordering is
/// the symmetric one `(-1, -s, s, 1)`, with `s` fixed by requiring the
/// accelerations `a_i = sum_j m_j (x_j - x_i) / |x_j - x_i|^(alpha + 2)` to be
/// proportional to the positions: `a_3 / s = a_4`. The root is bracketed in
/// `(0, 1)` and found by bisection.
pub fn moulton_symmetric_ratio(alpha: f64) -> f64 {
    let accel = |x: &[f64; 4], i: usize| -> f64 {
        (0..4)
            .filter(|&j| j != i)
            .map(|j| 0.25 * (x[j] - x[i]) / (x[j] - x[i]).abs().powf(alpha + 2.0))
            .sum()
    };
    let phi = |s: f64| {
        let x = [-1.0, -s, s, 1.0];
        accel(&x, 2) / s - accel(&x, 3)
    };
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    assert!(phi(lo) < 0.0 && phi(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// Distance vectors of the equal-mass collinear classes of four bodies,
/// modulo reflection: one per ordering, orderings related by reversal merged.
pub fn moulton_oracle_classes(alpha: f64) -> Vec<Vec<f64>> {
    let s = moulton_symmetric_ratio(alpha);
    let shape = [-1.0, -s, s, 1.0];
    let norm = (shape.iter().map(|x| 0.25 * x * x).sum::<f64>()).sqrt();
    let mut classes: Vec<Vec<f64>> = Vec::new();
    for order in permutations(4) {
        // body order[k] sits at the k-th position along the line
        let mut x = [0.0; 4];
        for (k, &body) in order.iter().enumerate() {
            x[body] = shape[k] / norm;
        }
        let dv: Vec<f64> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).map(|(i, j)| (x[i] - x[j]).abs()).collect();
        if !classes.iter().any(|c| max_abs_diff(c, &dv) < 1e-9) {
            classes.push(dv);
        }
    }
    classes
}
