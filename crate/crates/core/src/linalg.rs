//! Small dense symmetric matrices and banded linear systems.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense symmetric `n x n` matrix, stored row-major in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    /// `v v^T`.
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = v[i] * v[j];
            }
        }
        m
    }

    /// Builds from a row-major buffer, symmetrizing `(A + A^T) / 2`.
    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = 0.5 * (data[i * n + j] + data[j * n + i]);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max(fabs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &SymMatrix) -> SymMatrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect();
        SymMatrix { n: self.n, data }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().map(|x| c * x).collect() }
    }

    /// `O^T A O` for a row-major `n x n` matrix `O`.
    pub fn congruence(&self, o: &[f64]) -> SymMatrix {
        let n = self.n;
        let mut ao = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                ao[i * n + j] = (0..n).map(|k| self.get(i, k) * o[k * n + j]).sum();
            }
        }
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|k| o[k * n + i] * ao[k * n + j]).sum();
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    /// Eigenvalues in ascending order (cyclic Jacobi).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev = jacobi_eigenvalues(self);
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }
}

fn jacobi_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.n;
    let mut a = m.data.clone();
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if sqrt(off) <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // row i holds columns i-kl ..= i+kl+ku (extra kl for pivot fill-in)
    rows: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, rows: vec![0.0; n * Self::width(kl, ku)] }
    }

    fn width(kl: usize, ku: usize) -> usize {
        2 * kl + ku + 1
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return None;
        }
        Some(i * Self::width(self.kl, self.ku) + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.rows[s])
    }

    /// Adds `v` to entry `(i, j)`; panics if outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let s = self.slot(i, j).unwrap();
        self.rows[s] += v;
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n) {
                d[i * self.n + j] = self.get(i, j);
            }
        }
        d
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, v| m.max(fabs(*v)))
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    /// A pivot below `1e-12 * max|A|` is reported as singular.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let kl = self.kl;
        let uw = kl + self.ku; // upper bandwidth after fill-in
        let threshold = 1e-12 * self.max_abs();
        let mut a = self.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = fabs(a.get(k, k));
            for i in (k + 1)..=last {
                let v = fabs(a.get(i, k));
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if !(best > threshold) {
                return Err(Error::SingularJacobian { pivot: best });
            }
            let cmax = (k + uw).min(n - 1);
            if piv != k {
                for j in k..=cmax {
                    let sk = a.slot(k, j).unwrap();
                    let sp = a.slot(piv, j).unwrap();
                    a.rows.swap(sk, sp);
                }
                x.swap(k, piv);
            }
            let pivot = a.get(k, k);
            for i in (k + 1)..=last {
                let factor = a.get(i, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in k..=cmax {
                    let akj = a.get(k, j);
                    let s = a.slot(i, j).unwrap();
                    a.rows[s] -= factor * akj;
                }
                x[i] -= factor * x[k];
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + uw).min(n - 1);
            let mut acc = x[k];
            for j in (k + 1)..=cmax {
                acc -= a.get(k, j) * x[j];
            }
            x[k] = acc / a.get(k, k);
        }
        Ok(x)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub(crate) fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(fabs(*v)))
}

/// Solves a dense row-major system with partial pivoting.
pub fn solve_dense(n: usize, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0, |acc: f64, v| acc.max(fabs(*v)));
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| fabs(m[i * n + k]).total_cmp(&fabs(m[j * n + k]))).unwrap();
        let best = fabs(m[piv * n + k]);
        if !(best > 1e-14 * scale) {
            return Err(Error::SingularJacobian { pivot: best });
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let f = m[i * n + k] / m[k * n + k];
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut acc = x[k];
        for j in (k + 1)..n {
            acc -= m[k * n + j] * x[j];
        }
        x[k] = acc / m[k * n + k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_known_spectrum() {
        // [[2,1,0],[1,2,1],[0,1,2]] has eigenvalues 2 - sqrt2, 2, 2 + sqrt2
        let m = SymMatrix::from_row_major(3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        let ev = m.eigenvalues();
        let r2 = core::f64::consts::SQRT_2;
        for (got, want) in ev.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_of_congruence_are_invariant() {
        let m = SymMatrix::from_row_major(3, &[1.0, 0.3, -0.2, 0.3, -2.0, 0.5, -0.2, 0.5, 0.7]).unwrap();
        // a rotation about the z-axis followed by one about x
        let (c, s) = (0.6, 0.8);
        let o = [c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0];
        let ev0 = m.eigenvalues();
        let ev1 = m.congruence(&o).eigenvalues();
        for (a, b) in ev0.iter().zip(&ev1) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn band_solve_matches_dense_residual() {
        let n = 12;
        let mut a = BandMatrix::zeros(n, 3, 4);
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 5).min(n) {
                let v = ((i * 7 + j * 3) % 11) as f64 - 5.0;
                a.add(i, j, if i == j { v + 0.5 } else { v });
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = a.solve(&b).unwrap();
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10, "{ri} vs {bi}");
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let mut a = BandMatrix::zeros(4, 1, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(3, 3, 1.0);
        assert!(matches!(a.solve(&[1.0; 4]), Err(Error::SingularJacobian { .. })));
    }
}
