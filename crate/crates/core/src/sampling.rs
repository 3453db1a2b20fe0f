//! Deterministic samplers: seeded pseudo-random and Halton points.

use alloc::vec::Vec;
use libm::{cos, log, pow, sin, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal variate (Box-Muller).
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    sqrt(-2.0 * log(u1)) * cos(2.0 * core::f64::consts::PI * u2)
}

/// Uniform point on the unit sphere in `R^n`.
pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let norm = sqrt(v.iter().map(|x| x * x).sum());
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform point in the ball `B(center, radius)`.
pub fn in_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let dir = unit_vector(rng, n);
    let r = radius * pow(rng.gen::<f64>(), 1.0 / n as f64);
    center.iter().zip(dir).map(|(c, d)| c + r * d).collect()
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton point `index` in `[0,1)^n` (n <= 12).
pub fn halton(index: u64, n: usize) -> Vec<f64> {
    (0..n).map(|d| radical_inverse(index + 1, PRIMES[d])).collect()
}

/// Quasi-random points filling the ball: Halton points of the enclosing cube,
/// rejected outside the ball.
pub fn halton_ball(count: usize, center: &[f64], radius: f64) -> Vec<Vec<f64>> {
    let n = center.len();
    let mut out = Vec::with_capacity(count);
    let mut idx = 0u64;
    while out.len() < count {
        let h = halton(idx, n);
        idx += 1;
        let p: Vec<f64> = h.iter().map(|x| 2.0 * x - 1.0).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            out.push(center.iter().zip(&p).map(|(c, x)| c + radius * x).collect());
        }
    }
    out
}

/// Rotation matrix (row-major) built from `n(n-1)/2` random Givens rotations.
pub fn random_rotation<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut o = alloc::vec![0.0; n * n];
    for i in 0..n {
        o[i * n + i] = 1.0;
    }
    for p in 0..n {
        for q in (p + 1)..n {
            let th = 2.0 * core::f64::consts::PI * rng.gen::<f64>();
            let (c, s) = (cos(th), sin(th));
            for k in 0..n {
                let a = o[k * n + p];
                let b = o[k * n + q];
                o[k * n + p] = c * a - s * b;
                o[k * n + q] = s * a + c * b;
            }
        }
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        assert_eq!(halton(0, 2), alloc::vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(1, 1), alloc::vec![0.25]);
    }

    #[test]
    fn seeded_streams_repeat() {
        let a: Vec<f64> = (0..5)
            .map({
                let mut r = rng(7);
                move |_| gaussian(&mut r)
            })
            .collect();
        let b: Vec<f64> = (0..5)
            .map({
                let mut r = rng(7);
                move |_| gaussian(&mut r)
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut r = rng(3);
        let n = 4;
        let o = random_rotation(&mut r, n);
        for i in 0..n {
            for j in 0..n {
                let d: f64 = (0..n).map(|k| o[k * n + i] * o[k * n + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-14);
            }
        }
    }
}
