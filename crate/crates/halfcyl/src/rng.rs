//! Deterministic parallel sampling.
//!
//! Every Monte-Carlo sweep is split into fixed-size chunks and each chunk
//! draws from its own ChaCha8 stream keyed by (seed, chunk index). Chunk
//! results are combined in chunk order, so estimates do not depend on thread
//! count or scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

pub const CHUNK: u64 = 1 << 14;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fraction of n draws satisfying a predicate, with binomial standard error.
/// Hit counts are integers, so the parallel reduction is exact.
pub fn mc_fraction<F>(n: u64, seed: u64, f: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    assert!(n > 0);
    let n_chunks = n.div_ceil(CHUNK);
    let hits: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let take = CHUNK.min(n - c * CHUNK);
            let mut h = 0u64;
            for _ in 0..take {
                if f(&mut rng) {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    (p, se)
}

/// Mean and standard error of a real statistic over n draws. Per-chunk sums
/// are accumulated sequentially and combined in chunk order.
pub fn mc_mean<F>(n: u64, seed: u64, f: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    assert!(n > 0);
    let n_chunks = n.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let take = CHUNK.min(n - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..take {
                let v = f(&mut rng);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (mut s, mut s2) = (0.0, 0.0);
    for (a, b) in parts {
        s += a;
        s2 += b;
    }
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}

/// Max of a real statistic over n draws.
pub fn mc_max<F>(n: u64, seed: u64, f: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    assert!(n > 0);
    let n_chunks = n.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let take = CHUNK.min(n - c * CHUNK);
            let mut m = f64::NEG_INFINITY;
            for _ in 0..take {
                m = m.max(f(&mut rng));
            }
            m
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

pub fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Uniform point of the 3-torus [0,2π)³.
pub fn uniform_y(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        2.0 * PI * rng.random::<f64>(),
        2.0 * PI * rng.random::<f64>(),
        2.0 * PI * rng.random::<f64>(),
    ]
}

/// Standard normal pair, Box-Muller. The log argument is in (0,1].
pub fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// Uniform direction on S³ ⊂ R⁴.
pub fn unit_s3(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let (a, b) = normal_pair(rng);
        let (c, d) = normal_pair(rng);
        let n = (a * a + b * b + c * c + d * d).sqrt();
        if n > 1e-12 {
            return [a / n, b / n, c / n, d / n];
        }
    }
}

/// Uniform direction on S² ⊂ R³.
pub fn unit_s2(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let (a, b) = normal_pair(rng);
        let (c, _) = normal_pair(rng);
        let n = (a * a + b * b + c * c).sqrt();
        if n > 1e-12 {
            return [a / n, b / n, c / n];
        }
    }
}

/// Uniform point of the closed 3-ball of radius r.
pub fn ball3(rng: &mut ChaCha8Rng, r: f64) -> [f64; 3] {
    let dir = unit_s2(rng);
    let rad = r * rng.random::<f64>().powf(1.0 / 3.0);
    [dir[0] * rad, dir[1] * rad, dir[2] * rad]
}

/// Uniform point of the closed 4-ball of radius r.
pub fn ball4(rng: &mut ChaCha8Rng, r: f64) -> [f64; 4] {
    let dir = unit_s3(rng);
    let rad = r * rng.random::<f64>().powf(0.25);
    [dir[0] * rad, dir[1] * rad, dir[2] * rad, dir[3] * rad]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_is_deterministic_and_exact() {
        let f = |rng: &mut ChaCha8Rng| rng.random::<f64>() < 0.25;
        let (p1, se1) = mc_fraction(100_000, 7, f);
        let (p2, se2) = mc_fraction(100_000, 7, f);
        assert_eq!(p1, p2);
        assert_eq!(se1, se2);
        assert!((p1 - 0.25).abs() < 5.0 * se1 + 1e-3);
    }

    #[test]
    fn mean_is_deterministic() {
        let f = |rng: &mut ChaCha8Rng| rng.random::<f64>() * 2.0 - 1.0;
        let (m1, _) = mc_mean(1_000_000, 3, f);
        let (m2, _) = mc_mean(1_000_000, 3, f);
        assert_eq!(m1, m2);
        assert!(m1.abs() < 3e-3);
    }

    #[test]
    fn sphere_samples_are_unit() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..1000 {
            let p = unit_s3(&mut rng);
            let n: f64 = p.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = stream_rng(2, 0);
        for _ in 0..1000 {
            let p = ball4(&mut rng, 0.3);
            let n: f64 = p.iter().map(|v| v * v).sum();
            assert!(n <= 0.09 + 1e-12);
        }
        // radial law: mean |z|² over the 4-ball of radius r is r²·2/3
        let (m, se) = mc_mean(200_000, 5, |rng| {
            let p = ball4(rng, 1.0);
            p.iter().map(|v| v * v).sum()
        });
        assert!((m - 2.0 / 3.0).abs() < 4.0 * se + 1e-3);
    }
}
