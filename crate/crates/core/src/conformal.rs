//! Conformal Schouten operator and the maps that act on conformal factors.
//!
//! For `g_u = u^{4/(n-2)} g` the Schouten tensor, written in a `g_u`-orthonormal
//! frame, is
//!
//! ```text
//! A^u = -2/(n-2) u^{-(n+2)/(n-2)} D^2 u + 2n/(n-2)^2 u^{-2n/(n-2)} Du (x) Du
//!       - 2/(n-2)^2 u^{-2n/(n-2)} |Du|^2 I
//! ```
//!
//! on flat space. In the variable `w = u^{-2/(n-2)}` this is
//! `w D^2 w - |Dw|^2 I / 2`.

use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, log, pow, sqrt};
use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureSpec, EigenvalueVector};
use crate::error::{Error, Result};
use crate::field::{stereographic_factor, AnalyticField, BubbleParams, Jet, Kelvin, MoebiusParams, ScalarField};
use crate::linalg::{dot, SymMatrix};

/// Background metric of the conformal class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    Flat,
    /// Round sphere, in the stereographic chart from the north pole.
    RoundSphere,
}

/// Flat Schouten matrix from a jet of `u`.
pub fn schouten_from_jet(jet: &Jet) -> Result<SymMatrix> {
    let n = jet.gradient.len();
    let u = jet.value;
    if !(u > 0.0) {
        return Err(Error::NonpositiveValue(u));
    }
    let nf = n as f64;
    let d = nf - 2.0;
    let lu = log(u);
    let p1 = exp(-(nf + 2.0) / d * lu);
    let p2 = exp(-2.0 * nf / d * lu);
    let g = &jet.gradient;
    let g2 = dot(g, g);
    let mut a = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut v = -2.0 / d * p1 * jet.hessian.get(i, j) + 2.0 * nf / (d * d) * p2 * g[i] * g[j];
            if i == j {
                v -= 2.0 / (d * d) * p2 * g2;
            }
            a.set(i, j, v);
        }
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(a)
}

/// `A^u(p)` for the flat background.
pub fn schouten_flat(u: &dyn ScalarField, p: &[f64]) -> Result<SymMatrix> {
    schouten_from_jet(&u.jet(p)?)
}

/// Schouten matrix of `u^{4/(n-2)} g` in a frame orthonormal for that metric.
///
/// For the round sphere the covariant Hessian uses the Christoffel symbols of
/// the chart metric `e^{2 psi} delta`, `psi = log(2 / (1 + |y|^2))`.
pub fn schouten_conformal_change(u: &dyn ScalarField, background: Background, p: &[f64]) -> Result<SymMatrix> {
    match background {
        Background::Flat => schouten_flat(u, p),
        Background::RoundSphere => {
            let n = u.dim();
            let jet = u.jet(p)?;
            let v = jet.value;
            if !(v > 0.0) {
                return Err(Error::NonpositiveValue(v));
            }
            let nf = n as f64;
            let d = nf - 2.0;
            let q = 1.0 + dot(p, p);
            let e2psi = 4.0 / (q * q);
            let dpsi: Vec<f64> = p.iter().map(|y| -2.0 * y / q).collect();
            let g = &jet.gradient;
            let psi_dot_g = dot(&dpsi, g);
            let grad_sq_g = dot(g, g) / e2psi;
            let kappa0 = sphere_kappa(n);
            let scale = pow(v, 4.0 / d) * e2psi;
            let mut a = SymMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let cov = jet.hessian.get(i, j) - g[i] * dpsi[j] - g[j] * dpsi[i] + delta * psi_dot_g;
                    let tensor = -2.0 / d * cov / v + 2.0 * nf / (d * d) * g[i] * g[j] / (v * v)
                        - 2.0 / (d * d) * grad_sq_g / (v * v) * e2psi * delta
                        + kappa0 * e2psi * delta;
                    a.set(i, j, tensor / scale);
                }
            }
            Ok(a)
        }
    }
}

/// Sorted eigenvalues of the Schouten matrix.
pub fn schouten_eigenvalues(u: &dyn ScalarField, background: Background, p: &[f64]) -> Result<EigenvalueVector> {
    EigenvalueVector::new(schouten_conformal_change(u, background, p)?.eigenvalues())
}

fn sphere_kappa(n: usize) -> f64 {
    let v0 = AnalyticField::Bubble(stereographic_factor(n));
    let a = schouten_flat(&v0, &vec![0.0; n]).expect("stereographic factor is smooth");
    a.get(0, 0)
}

/// `lambda(A_{g_0})` for the unit round sphere, computed from the flat
/// representative of `g_0` in stereographic coordinates.
pub fn round_sphere_schouten(n: usize) -> Result<EigenvalueVector> {
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    let v0 = AnalyticField::Bubble(stereographic_factor(n));
    EigenvalueVector::new(schouten_flat(&v0, &vec![0.0; n])?.eigenvalues())
}

/// Constant `kappa` with `A^{u} = kappa s^2 a^{-4/(n-2)} I` for every bubble.
pub fn bubble_kappa(n: usize) -> f64 {
    let b = AnalyticField::Bubble(BubbleParams::standard(n));
    schouten_flat(&b, &vec![0.0; n]).expect("bubble is smooth").get(0, 0)
}

/// Bubble `a (1 + s^2 |x - center|^2)^{-(n-2)/2}` with `f(lambda(A^u)) = 1`:
/// `a = (s^2 kappa f(e))^{(n-2)/4}`.
pub fn bubble_exact(spec: &CurvatureSpec, s: f64, center: Vec<f64>) -> Result<BubbleParams> {
    let n = spec.dim();
    if center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center.len() });
    }
    let a = pow(s * s * bubble_kappa(n) * spec.value_at_ones(), (n - 2) as f64 / 4.0);
    BubbleParams::new(a, s, center)
}

pub fn bubble_field(a: f64, s: f64, center: Vec<f64>) -> Result<AnalyticField> {
    AnalyticField::bubble(a, s, center)
}

/// Moving-sphere transform `u_{x,lambda}`.
pub fn kelvin_transform<F: ScalarField>(u: F, center: Vec<f64>, lambda: f64) -> Result<Kelvin<F>> {
    if center.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: center.len() });
    }
    Ok(Kelvin { inner: u, params: MoebiusParams::new(center, lambda)? })
}

/// Flat representative of a sphere conformal factor (chart from the north pole).
pub fn stereographic_pull(u_sphere: AnalyticField) -> AnalyticField {
    u_sphere.stereo_pull()
}

/// Sphere conformal factor in the chart, from a flat one.
pub fn stereographic_push(v_flat: AnalyticField) -> AnalyticField {
    v_flat.stereo_push()
}

/// Inverse stereographic projection `R^n -> S^n \ {N}`.
pub fn stereo_lift(y: &[f64]) -> Vec<f64> {
    let r2 = dot(y, y);
    let mut z: Vec<f64> = y.iter().map(|x| 2.0 * x / (1.0 + r2)).collect();
    z.push((r2 - 1.0) / (r2 + 1.0));
    z
}

/// Stereographic projection from the north pole.
pub fn stereo_project(zeta: &[f64]) -> Result<Vec<f64>> {
    let n = zeta.len() - 1;
    let denom = 1.0 - zeta[n];
    if denom.abs() < 1e-14 {
        return Err(Error::SingularCenter);
    }
    Ok(zeta[..n].iter().map(|x| x / denom).collect())
}

/// Radial and tangential Schouten eigenvalues of a radial `u(r)`;
/// `u'/r` is replaced by `u''` at `r = 0`.
pub fn radial_schouten(n: usize, r: f64, u: f64, up: f64, upp: f64) -> Result<(f64, f64)> {
    if !(u > 0.0) {
        return Err(Error::NonpositiveValue(u));
    }
    let d = n as f64 - 2.0;
    let lu = log(u);
    let p1 = exp(-(n as f64 + 2.0) / d * lu);
    let p2 = exp(-2.0 * n as f64 / d * lu);
    let tan_deriv = if r == 0.0 { upp } else { up / r };
    let rad = -2.0 / d * p1 * upp + 2.0 * (n as f64 - 1.0) / (d * d) * p2 * up * up;
    let tan = -2.0 / d * p1 * tan_deriv - 2.0 / (d * d) * p2 * up * up;
    Ok((rad, tan))
}

/// Same eigenvalues in the variable `w = u^{-2/(n-2)}`:
/// `(w w'' - w'^2/2, w w'/r - w'^2/2)`.
pub fn radial_schouten_w(r: f64, w: f64, w1: f64, w2: f64) -> (f64, f64) {
    let tan_deriv = if r == 0.0 { w2 } else { w1 / r };
    (w * w2 - 0.5 * w1 * w1, w * tan_deriv - 0.5 * w1 * w1)
}

/// Radial eigenvalue list `(lambda_rad, lambda_tan, ..., lambda_tan)`.
pub fn radial_eigenvalues(n: usize, rad: f64, tan: f64) -> Vec<f64> {
    let mut v = vec![tan; n];
    v[0] = rad;
    v
}

/// `|y - x|`.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}
