#![allow(dead_code)]

use std::f64::consts::PI;

use curvlab_core::curvature::{Chart, CosineTerm};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Identity plus one 0.1-amplitude cosine wave per upper-triangle entry.
pub fn random_torus(n: usize, seed: u64) -> Chart {
    let mut r = rng(seed);
    let mut terms = Vec::new();
    for i in 0..n {
        for j in i..n {
            let wave: Vec<i32> = loop {
                let w: Vec<i32> = (0..n).map(|_| r.gen_range(-1..=1)).collect();
                if w.iter().any(|&k| k != 0) {
                    break w;
                }
            };
            terms.push(CosineTerm {
                row: i,
                col: j,
                amplitude: 0.1 * r.gen_range(-1.0..1.0),
                wave,
                phase: r.gen_range(0.0..2.0 * PI),
            });
        }
    }
    Chart::torus_perturbed(n, &terms).unwrap()
}

/// Uniform point strictly inside the chart box, keeping 10% away from the
/// ends of non-periodic axes.
pub fn random_point(chart: &Chart, r: &mut ChaCha8Rng) -> Vec<f64> {
    chart
        .domain()
        .iter()
        .zip(chart.periodic())
        .map(|(&(a, b), &per)| {
            let m = if per { 0.0 } else { 0.1 * (b - a) };
            r.gen_range(a + m..b - m)
        })
        .collect()
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn assert_close(got: f64, want: f64, rel: f64, what: &str) {
    let err = (got - want).abs() / want.abs().max(1.0);
    assert!(err < rel, "{what}: got {got}, want {want}, rel err {err:e}");
}
