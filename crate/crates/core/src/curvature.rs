//! Elementary symmetric functions, Gårding cones and the curvature functions
//! `f = sigma_k^{1/k}` together with their homotopy deformations
//! `f_t(lambda) = f(t lambda + (1 - t) sigma_1(lambda) e)`.
//!
//! Every curvature function here is homogeneous of degree one, symmetric,
//! positive with componentwise positive gradient on its cone, and concave.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, pow, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, SymMatrix};
use crate::sampling;

/// Eigenvalue vector `(lambda_1, ..., lambda_n)`, `n >= 3`, finite entries.
/// Order is immaterial; entries are kept as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EigenvalueVector(Vec<f64>);

impl EigenvalueVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 3 {
            return Err(Error::DimensionTooSmall(entries.len()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(entries))
    }

    /// `e = (1, ..., 1)`.
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Ascending copy.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }
}

impl TryFrom<Vec<f64>> for EigenvalueVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EigenvalueVector> for Vec<f64> {
    fn from(v: EigenvalueVector) -> Self {
        v.0
    }
}

/// `sigma_0, ..., sigma_kmax` of `lambda` by the product recurrence.
pub fn elementary_symmetric(lambda: &[f64], kmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for (seen, &x) in lambda.iter().enumerate() {
        let top = (seen + 1).min(kmax);
        for j in (1..=top).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    Ok(())
}

/// `sigma_k(lambda)`, the sum over all `k`-subsets of products of entries.
pub fn sigma_k(lambda: &EigenvalueVector, k: usize) -> Result<f64> {
    check_k(k, lambda.len())?;
    Ok(elementary_symmetric(lambda.as_slice(), k)[k])
}

/// Component `i` is `sigma_{k-1}` of `lambda` with entry `i` deleted.
pub fn sigma_k_gradient(lambda: &EigenvalueVector, k: usize) -> Result<Vec<f64>> {
    check_k(k, lambda.len())?;
    Ok(sigma_gradient_raw(lambda.as_slice(), k))
}

fn sigma_gradient_raw(lambda: &[f64], k: usize) -> Vec<f64> {
    let mut rest = Vec::with_capacity(lambda.len());
    (0..lambda.len())
        .map(|i| {
            rest.clear();
            rest.extend(lambda.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x));
            elementary_symmetric(&rest, k - 1)[k - 1]
        })
        .collect()
}

/// Off-diagonal entry `(i, j)` is `sigma_{k-2}` with entries `i, j` deleted.
fn sigma_hessian_raw(lambda: &[f64], k: usize) -> SymMatrix {
    let n = lambda.len();
    let mut h = SymMatrix::zeros(n);
    if k < 2 {
        return h;
    }
    let mut rest = Vec::with_capacity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            rest.clear();
            rest.extend(lambda.iter().enumerate().filter(|(m, _)| *m != i && *m != j).map(|(_, x)| *x));
            h.set(i, j, elementary_symmetric(&rest, k - 2)[k - 2]);
        }
    }
    h
}

/// Membership in the Gårding cone: `sigma_j(lambda) > 0` for all `1 <= j <= k`.
pub fn in_gamma_k(lambda: &EigenvalueVector, k: usize) -> bool {
    k >= 1 && k <= lambda.len() && in_gamma_raw(lambda.as_slice(), k)
}

fn in_gamma_raw(lambda: &[f64], k: usize) -> bool {
    elementary_symmetric(lambda, k)[1..].iter().all(|s| *s > 0.0)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Which member of the curvature-function family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureKind {
    /// `(sigma_k^{1/k}, Gamma_k)`.
    SigmaK { k: usize },
    /// `f_t(lambda) = f(t lambda + (1-t) sigma_1(lambda) e)` with `f = sigma_k^{1/k}`.
    Homotopy { k: usize, t: f64 },
}

/// A curvature function `(f, Gamma)` in dimension `n`.
///
/// Serializes as `{"n": .., "kind": "sigma_k" | "homotopy", "k": .., "t": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecWire", into = "SpecWire")]
pub struct CurvatureSpec {
    n: usize,
    kind: CurvatureKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecWire {
    n: usize,
    kind: WireKind,
    k: usize,
    #[serde(default = "one")]
    t: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum WireKind {
    SigmaK,
    Homotopy,
}

impl TryFrom<SpecWire> for CurvatureSpec {
    type Error = Error;
    fn try_from(w: SpecWire) -> Result<Self> {
        match w.kind {
            WireKind::SigmaK => CurvatureSpec::sigma_k(w.n, w.k),
            WireKind::Homotopy => CurvatureSpec::homotopy(w.n, w.k, w.t),
        }
    }
}

impl From<CurvatureSpec> for SpecWire {
    fn from(s: CurvatureSpec) -> Self {
        match s.kind {
            CurvatureKind::SigmaK { k } => SpecWire { n: s.n, kind: WireKind::SigmaK, k, t: 1.0 },
            CurvatureKind::Homotopy { k, t } => SpecWire { n: s.n, kind: WireKind::Homotopy, k, t },
        }
    }
}

impl CurvatureSpec {
    pub fn sigma_k(n: usize, k: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::DimensionTooSmall(n));
        }
        check_k(k, n)?;
        Ok(Self { n, kind: CurvatureKind::SigmaK { k } })
    }

    pub fn homotopy(n: usize, k: usize, t: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::DimensionTooSmall(n));
        }
        check_k(k, n)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter("homotopy parameter t must lie in [0, 1]"));
        }
        Ok(Self { n, kind: CurvatureKind::Homotopy { k, t } })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> CurvatureKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        match self.kind {
            CurvatureKind::SigmaK { k } | CurvatureKind::Homotopy { k, .. } => k,
        }
    }

    /// Homotopy parameter; `1` for the undeformed family.
    pub fn t(&self) -> f64 {
        match self.kind {
            CurvatureKind::SigmaK { .. } => 1.0,
            CurvatureKind::Homotopy { t, .. } => t,
        }
    }

    /// The undeformed `(sigma_k^{1/k}, Gamma_k)`.
    pub fn base(&self) -> CurvatureSpec {
        CurvatureSpec { n: self.n, kind: CurvatureKind::SigmaK { k: self.k() } }
    }

    /// The member `f_t` of the homotopy family through this spec's base.
    pub fn at_t(&self, t: f64) -> Result<CurvatureSpec> {
        CurvatureSpec::homotopy(self.n, self.k(), t)
    }

    fn check_len(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: lambda.len() });
        }
        Ok(())
    }

    /// `t lambda + (1 - t) sigma_1(lambda) e`.
    fn deform(&self, lambda: &[f64]) -> Vec<f64> {
        let t = self.t();
        if t == 1.0 {
            return lambda.to_vec();
        }
        let s1: f64 = lambda.iter().sum();
        lambda.iter().map(|x| t * x + (1.0 - t) * s1).collect()
    }

    /// Applies the symmetric linear map `L = t I + (1-t) e e^T`.
    fn apply_deformation_adjoint(&self, g: &[f64]) -> Vec<f64> {
        self.deform(g)
    }

    /// Membership in the spec's open cone.
    pub fn in_cone(&self, lambda: &[f64]) -> bool {
        lambda.len() == self.n && in_gamma_raw(&self.deform(lambda), self.k())
    }

    /// `f(lambda)`; raises `ConeViolation` outside the cone.
    pub fn eval(&self, lambda: &[f64]) -> Result<f64> {
        self.check_len(lambda)?;
        let mu = self.deform(lambda);
        let k = self.k();
        let e = elementary_symmetric(&mu, k);
        if e[1..].iter().any(|s| *s <= 0.0) {
            return Err(Error::ConeViolation);
        }
        Ok(root_k(e[k], k))
    }

    /// `grad f(lambda)`.
    pub fn gradient(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_len(lambda)?;
        let mu = self.deform(lambda);
        let k = self.k();
        if !in_gamma_raw(&mu, k) {
            return Err(Error::ConeViolation);
        }
        let sk = elementary_symmetric(&mu, k)[k];
        let f = root_k(sk, k);
        let c = f / (k as f64 * sk);
        let g: Vec<f64> = sigma_gradient_raw(&mu, k).into_iter().map(|x| c * x).collect();
        Ok(self.apply_deformation_adjoint(&g))
    }

    /// Analytic Hessian of `f`.
    pub fn hessian(&self, lambda: &[f64]) -> Result<SymMatrix> {
        self.check_len(lambda)?;
        let mu = self.deform(lambda);
        let k = self.k();
        let n = self.n;
        if !in_gamma_raw(&mu, k) {
            return Err(Error::ConeViolation);
        }
        let sk = elementary_symmetric(&mu, k)[k];
        let f = root_k(sk, k);
        let kf = k as f64;
        let g = sigma_gradient_raw(&mu, k);
        let hs = sigma_hessian_raw(&mu, k);
        let c = f / (kf * sk);
        let mut h = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                h.set(i, j, c * (hs.get(i, j) + (1.0 / kf - 1.0) * g[i] * g[j] / sk));
            }
        }
        let t = self.t();
        if t == 1.0 {
            return Ok(h);
        }
        // L H L with L = t I + (1-t) e e^T
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                l[i * n + j] = (1.0 - t) + if i == j { t } else { 0.0 };
            }
        }
        Ok(h.congruence(&l))
    }

    /// `f(e)`.
    pub fn value_at_ones(&self) -> f64 {
        let t = self.t();
        let scale = t + (1.0 - t) * self.n as f64;
        scale * root_k(binomial(self.n, self.k()), self.k())
    }
}

fn root_k(x: f64, k: usize) -> f64 {
    match k {
        1 => x,
        2 => sqrt(x),
        _ => pow(x, 1.0 / k as f64),
    }
}

/// `f(lambda)` for the spec.
pub fn f_eval(spec: &CurvatureSpec, lambda: &EigenvalueVector) -> Result<f64> {
    spec.eval(lambda.as_slice())
}

/// `f_t(lambda) = f(t lambda + (1-t) sigma_1(lambda) e)` for the base of `base`.
pub fn homotopy_eval(base: &CurvatureSpec, t: f64, lambda: &EigenvalueVector) -> Result<f64> {
    base.at_t(t)?.eval(lambda.as_slice())
}

/// Whether `t lambda + (1-t) sigma_1(lambda) e` lies in the base cone.
pub fn homotopy_membership(base: &CurvatureSpec, t: f64, lambda: &EigenvalueVector) -> bool {
    base.at_t(t).map(|s| s.in_cone(lambda.as_slice())).unwrap_or(false)
}

/// The unique `b > 0` with `f(b e) = 1`.
pub fn normalize_b(spec: &CurvatureSpec) -> f64 {
    1.0 / spec.value_at_ones()
}

/// Options for the sphere maximization behind [`compute_delta1`].
#[derive(Debug, Clone, Copy)]
pub struct Delta1Options {
    pub samples: usize,
    pub refine_iterations: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for Delta1Options {
    fn default() -> Self {
        Self { samples: 100_000, refine_iterations: 50, tol: 1e-8, seed: 0x5eed_d1 }
    }
}

/// Maximum of `f` on the unit sphere intersected with the closed cone.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMaximum {
    pub value: f64,
    pub point: Vec<f64>,
}

/// Dense seeded sampling of the unit sphere followed by Riemannian gradient
/// ascent from the best few samples.
pub fn sphere_maximum(spec: &CurvatureSpec, opts: &Delta1Options) -> SphereMaximum {
    const STARTS: usize = 6;
    let n = spec.dim();
    let mut rng = sampling::rng(opts.seed);
    let mut best: Vec<(f64, Vec<f64>)> = Vec::with_capacity(STARTS + 1);
    for _ in 0..opts.samples {
        let mu = sampling::unit_vector(&mut rng, n);
        let Ok(v) = spec.eval(&mu) else { continue };
        if best.len() < STARTS || v > best[best.len() - 1].0 {
            best.push((v, mu));
            best.sort_by(|a, b| b.0.total_cmp(&a.0));
            best.truncate(STARTS);
        }
    }
    // the diagonal direction is always a candidate start
    let diag: Vec<f64> = vec![1.0 / sqrt(n as f64); n];
    if let Ok(v) = spec.eval(&diag) {
        best.push((v, diag));
    }
    let mut out = SphereMaximum { value: 0.0, point: vec![0.0; n] };
    for (v0, mu0) in best {
        let (v, mu) = ascend_on_sphere(spec, v0, mu0, opts);
        if v > out.value {
            out = SphereMaximum { value: v, point: mu };
        }
    }
    out
}

fn ascend_on_sphere(spec: &CurvatureSpec, mut value: f64, mut mu: Vec<f64>, opts: &Delta1Options) -> (f64, Vec<f64>) {
    let mut step: f64 = 1.0;
    for _ in 0..opts.refine_iterations {
        let Ok(g) = spec.gradient(&mu) else { break };
        let radial = dot(&g, &mu);
        let r: Vec<f64> = g.iter().zip(&mu).map(|(gi, mi)| gi - radial * mi).collect();
        let rn = norm(&r);
        if rn <= opts.tol * value.max(1e-300) * 1e-2 {
            break;
        }
        let mut accepted = false;
        step = (step * 4.0).min(1e3);
        for _ in 0..60 {
            let trial: Vec<f64> = mu.iter().zip(&r).map(|(m, d)| m + step * d).collect();
            let tn = norm(&trial);
            let trial: Vec<f64> = trial.into_iter().map(|x| x / tn).collect();
            if let Ok(v) = spec.eval(&trial) {
                if v > value {
                    value = v;
                    mu = trial;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (value, mu)
}

/// `delta_1 = 1 / max { f(mu) : |mu| = 1, mu in closed cone }`, so that
/// `f(lambda) < 1` for every admissible `|lambda| < delta_1`.
pub fn compute_delta1(spec: &CurvatureSpec, opts: &Delta1Options) -> f64 {
    1.0 / sphere_maximum(spec, opts).value
}

/// Finite-difference step used by [`concavity_probe`].
pub fn concavity_step(lambda: &[f64]) -> f64 {
    1e-4f64.max(1e-4 * norm(lambda))
}

/// Central-difference Hessian of `f` at `lambda`.
pub fn fd_hessian(spec: &CurvatureSpec, lambda: &[f64]) -> Result<SymMatrix> {
    let n = spec.dim();
    let h = concavity_step(lambda);
    let eval = |di: usize, si: f64, dj: usize, sj: f64| -> Result<f64> {
        let mut p = lambda.to_vec();
        p[di] += si * h;
        p[dj] += sj * h;
        spec.eval(&p)
    };
    let f0 = spec.eval(lambda)?;
    let mut hess = SymMatrix::zeros(n);
    for i in 0..n {
        let mut p = lambda.to_vec();
        p[i] += h;
        let fp = spec.eval(&p)?;
        p[i] -= 2.0 * h;
        let fm = spec.eval(&p)?;
        hess.set(i, i, (fp - 2.0 * f0 + fm) / (h * h));
        for j in (i + 1)..n {
            let v = eval(i, 1.0, j, 1.0)? - eval(i, 1.0, j, -1.0)? - eval(i, -1.0, j, 1.0)? + eval(i, -1.0, j, -1.0)?;
            hess.set(i, j, v / (4.0 * h * h));
        }
    }
    Ok(hess)
}

/// True iff the finite-difference Hessian of `f` at `lambda` has all
/// eigenvalues `<= tol`.
pub fn concavity_probe(spec: &CurvatureSpec, lambda: &EigenvalueVector, tol: f64) -> Result<bool> {
    if !spec.in_cone(lambda.as_slice()) {
        return Err(Error::ConeViolation);
    }
    let hess = fd_hessian(spec, lambda.as_slice())?;
    Ok(hess.max_eigenvalue() <= tol)
}

/// `f / |grad f|` at `lambda`, which bounds the distance from `lambda` to the
/// zero level set from below for a concave `f`; at most `|lambda|` by
/// homogeneity.
pub fn boundary_reach(spec: &CurvatureSpec, lambda: &[f64]) -> Result<f64> {
    let f = spec.eval(lambda)?;
    let g = norm(&spec.gradient(lambda)?);
    Ok(if g > 0.0 { f / g } else { norm(lambda) })
}

/// Samples a unit-norm point of the cone whose `f` value is at least `margin`
/// times the value at `e / sqrt(n)`; keeps probes clear of the boundary.
pub fn sample_cone_interior<R: rand::Rng>(spec: &CurvatureSpec, rng: &mut R, margin: f64) -> Vec<f64> {
    let n = spec.dim();
    let reference = spec.value_at_ones() / sqrt(n as f64);
    loop {
        let mut v = sampling::unit_vector(rng, n);
        // bias towards the cone
        for x in v.iter_mut() {
            *x = fabs(*x) * if rng.gen::<f64>() < 0.2 { -0.5 } else { 1.0 };
        }
        let vn = norm(&v);
        let v: Vec<f64> = v.into_iter().map(|x| x / vn).collect();
        if let Ok(f) = spec.eval(&v) {
            if f >= margin * reference {
                return v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ev(v: &[f64]) -> EigenvalueVector {
        EigenvalueVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sigma_k_examples() {
        assert_eq!(sigma_k(&ev(&[1.0, 2.0, 3.0]), 2).unwrap(), 11.0);
        assert_eq!(sigma_k(&ev(&[-1.0, 1.0, 1.0]), 2).unwrap(), -1.0);
        for n in 3..=7 {
            for k in 1..=n {
                assert_relative_eq!(sigma_k(&EigenvalueVector::ones(n), k).unwrap(), binomial(n, k));
            }
        }
        assert!(matches!(sigma_k(&ev(&[1.0, 2.0, 3.0]), 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(sigma_k(&ev(&[1.0, 2.0, 3.0]), 4), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn gradient_examples() {
        let l = ev(&[1.0, 2.0, 3.0]);
        assert_eq!(sigma_k_gradient(&l, 1).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(sigma_k_gradient(&l, 2).unwrap(), vec![5.0, 4.0, 3.0]);
        let l = ev(&[2.0, -3.0, 5.0, 0.5]);
        let g = sigma_k_gradient(&l, 4).unwrap();
        assert_relative_eq!(g[0], -3.0 * 5.0 * 0.5);
        assert_relative_eq!(g[3], 2.0 * -3.0 * 5.0);
    }

    #[test]
    fn cone_examples() {
        assert!(in_gamma_k(&ev(&[-1.0, 1.0, 1.0]), 1));
        assert!(!in_gamma_k(&ev(&[-1.0, 1.0, 1.0]), 2));
    }

    #[test]
    fn f_examples() {
        let s = CurvatureSpec::sigma_k(3, 1).unwrap();
        assert_eq!(f_eval(&s, &EigenvalueVector::ones(3)).unwrap(), 3.0);
        let s = CurvatureSpec::sigma_k(4, 2).unwrap();
        assert_relative_eq!(f_eval(&s, &EigenvalueVector::ones(4)).unwrap(), 6f64.sqrt());
        assert_relative_eq!(f_eval(&s, &ev(&[2.0; 4])).unwrap(), 2.0 * 6f64.sqrt());
        assert_eq!(s.eval(&[-1.0, -1.0, 1.0, 0.5]), Err(Error::ConeViolation));
    }

    #[test]
    fn normalization_examples() {
        assert_relative_eq!(normalize_b(&CurvatureSpec::sigma_k(3, 1).unwrap()), 1.0 / 3.0);
        assert_relative_eq!(normalize_b(&CurvatureSpec::sigma_k(4, 2).unwrap()), 6f64.powf(-0.5));
        let h = CurvatureSpec::homotopy(3, 2, 0.5).unwrap();
        let b = normalize_b(&h);
        assert!((h.eval(&[b; 3]).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn delta1_closed_forms() {
        let opts = Delta1Options { samples: 20_000, ..Default::default() };
        let d = compute_delta1(&CurvatureSpec::sigma_k(3, 1).unwrap(), &opts);
        assert!((d - 1.0 / 3f64.sqrt()).abs() < 1e-8, "{d}");
        for n in 3..=6 {
            let d = compute_delta1(&CurvatureSpec::sigma_k(n, n).unwrap(), &opts);
            assert!((d - (n as f64).sqrt()).abs() < 1e-8 * (n as f64).sqrt(), "n={n}: {d}");
        }
    }

    #[test]
    fn homotopy_identity_and_endpoint() {
        let base = CurvatureSpec::sigma_k(4, 2).unwrap();
        let l = ev(&[0.3, 1.2, 0.9, 2.0]);
        assert_eq!(homotopy_eval(&base, 1.0, &l).unwrap(), f_eval(&base, &l).unwrap());
        let s1: f64 = l.as_slice().iter().sum();
        let at0 = homotopy_eval(&base, 0.0, &l).unwrap();
        assert_relative_eq!(at0, s1 * base.value_at_ones(), max_relative = 1e-14);
        assert!(homotopy_membership(&base, 0.0, &ev(&[-5.0, 3.0, 1.0, 2.0])));
        assert!(!homotopy_membership(&base, 1.0, &ev(&[-5.0, 3.0, 1.0, 2.0])));
    }

    #[test]
    fn analytic_hessian_matches_finite_differences() {
        let s = CurvatureSpec::homotopy(4, 3, 0.7).unwrap();
        let l = [1.0, 0.8, 1.3, 0.6];
        let a = s.hessian(&l).unwrap();
        let fd = fd_hessian(&s, &l).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((a.get(i, j) - fd.get(i, j)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn concavity_linear_case_and_radial_direction() {
        let s = CurvatureSpec::sigma_k(3, 1).unwrap();
        assert!(concavity_probe(&s, &ev(&[0.2, 0.5, 1.0]), 1e-6).unwrap());
        let s = CurvatureSpec::sigma_k(5, 3).unwrap();
        let l = [1.0, 0.7, 1.4, 0.9, 1.1];
        let h = fd_hessian(&s, &l).unwrap();
        // f is linear along rays
        let radial: f64 =
            h.mul_vec(&l).iter().zip(&l).map(|(a, b)| a * b).sum::<f64>() / l.iter().map(|x| x * x).sum::<f64>();
        assert!(radial.abs() < 1e-6, "{radial}");
    }

    #[test]
    fn spec_json_shape() {
        let s = CurvatureSpec::homotopy(4, 2, 0.25).unwrap();
        let wire = SpecWire::from(s);
        assert_eq!(wire.n, 4);
        assert_eq!(wire.k, 2);
        assert_eq!(wire.t, 0.25);
        assert!(CurvatureSpec::try_from(SpecWire { n: 3, kind: WireKind::SigmaK, k: 4, t: 1.0 }).is_err());
    }
}
