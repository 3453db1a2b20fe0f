//! Numerical audits of the Harnack inequality, the gradient lemma, the
//! moving-sphere radius, touching comparisons and the threshold constants.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, log, pow, sqrt};
use serde::{Deserialize, Serialize};

use crate::conformal::{round_sphere_schouten, schouten_flat, stereo_lift, stereo_project};
use crate::curvature::CurvatureSpec;
use crate::error::{Error, Result};
use crate::field::{dist, Jet, Kelvin, MoebiusParams, ScalarField};
use crate::linalg::{dot, norm, solve_dense};
use crate::sampling::{self, halton_ball};

/// Both branch constants of the sup-inf estimate and their maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnackConstant {
    /// `8^{n-2} r^{n-2}` with `r = 2^{n+6} n^4` (touching on the boundary sphere).
    pub main: f64,
    /// `(2 gamma)^{(n-2)/2}` at the threshold `gamma = 2^{n+8} n^4`.
    pub low_gamma: f64,
    pub value: f64,
}

/// The moving-sphere radius `r = 2^{n+6} n^4` fixed in the proof.
pub fn harnack_radius(n: usize) -> f64 {
    pow(2.0, n as f64 + 6.0) * pow(n as f64, 4.0)
}

pub fn harnack_constant(n: usize) -> Result<HarnackConstant> {
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    let m = n as f64 - 2.0;
    let main = pow(8.0 * harnack_radius(n), m);
    let gamma = pow(2.0, n as f64 + 8.0) * pow(n as f64, 4.0);
    let low_gamma = pow(2.0 * gamma, m / 2.0);
    Ok(HarnackConstant { main, low_gamma, value: main.max(low_gamma) })
}

/// The two numeric facts the exclusion of the interior-touching case rests on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseTwoChecks {
    pub r: f64,
    /// `(10n+4)/(n-2)^2 2^{2n/(n-2)} / r`, must be `< 1`.
    pub exclusion: f64,
    /// `(n-2) 2^{n/2} r^{-1/2}`, must be `<= 1/2`.
    pub oscillation: f64,
    pub pass: bool,
}

pub fn harnack_case_two_checks(n: usize) -> CaseTwoChecks {
    let nf = n as f64;
    let r = harnack_radius(n);
    let exclusion = (10.0 * nf + 4.0) / ((nf - 2.0) * (nf - 2.0)) * pow(2.0, 2.0 * nf / (nf - 2.0)) / r;
    let oscillation = (nf - 2.0) * pow(2.0, nf / 2.0) / sqrt(r);
    CaseTwoChecks { r, exclusion, oscillation, pass: exclusion < 1.0 && oscillation <= 0.5 }
}

/// A located extremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditOptions {
    /// Quasi-random samples per ball.
    pub samples: usize,
    /// Offset into the Halton sequence.
    pub seed: u64,
    /// Ball center; the origin when empty.
    pub center: Vec<f64>,
    /// When set, the field is also checked to solve `f(lambda(A^u)) = 1`.
    pub spec: Option<CurvatureSpec>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0, center: Vec::new(), spec: None }
    }
}

impl AuditOptions {
    fn center_for(&self, n: usize) -> Vec<f64> {
        if self.center.is_empty() {
            vec![0.0; n]
        } else {
            self.center.clone()
        }
    }
}

fn project_to_ball(x: &mut [f64], center: &[f64], radius: f64) {
    let d = dist(x, center);
    if d > radius {
        for (xi, ci) in x.iter_mut().zip(center) {
            *xi = ci + (*xi - ci) * radius / d;
        }
    }
}

/// Supremum (`maximize`) or infimum of `u` over the closed ball, by
/// quasi-random sampling followed by projected ascent from the best samples.
pub fn ball_extremum(
    u: &dyn ScalarField,
    center: &[f64],
    radius: f64,
    maximize: bool,
    samples: usize,
    seed: u64,
) -> Result<Extremum> {
    const STARTS: usize = 4;
    let n = u.dim();
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut candidates = halton_ball(samples + seed as usize, center, radius);
    candidates.drain(..seed as usize);
    candidates.push(center.to_vec());
    for d in 0..n {
        for s in [-1.0, 1.0] {
            let mut p = center.to_vec();
            p[d] += s * radius;
            candidates.push(p);
        }
    }
    let mut best: Vec<(f64, Vec<f64>)> = Vec::with_capacity(STARTS + 1);
    for p in candidates {
        let v = sign * u.value(&p)?;
        if best.len() < STARTS || v > best[best.len() - 1].0 {
            best.push((v, p));
            best.sort_by(|a, b| b.0.total_cmp(&a.0));
            best.truncate(STARTS);
        }
    }
    let mut winner = best[0].clone();
    for (v0, p0) in best {
        let (v, p) = ascend_in_ball(u, center, radius, sign, v0, p0)?;
        if v > winner.0 {
            winner = (v, p);
        }
    }
    Ok(Extremum { value: sign * winner.0, point: winner.1 })
}

fn ascend_in_ball(
    u: &dyn ScalarField,
    center: &[f64],
    radius: f64,
    sign: f64,
    mut v: f64,
    mut p: Vec<f64>,
) -> Result<(f64, Vec<f64>)> {
    let mut h = 0.05 * radius;
    for _ in 0..2000 {
        if h < 1e-13 * radius {
            break;
        }
        let g = u.jet(&p)?.gradient;
        let gn = norm(&g);
        if gn == 0.0 {
            break;
        }
        let mut trial: Vec<f64> = p.iter().zip(&g).map(|(x, gi)| x + sign * h * gi / gn).collect();
        project_to_ball(&mut trial, center, radius);
        let tv = sign * u.value(&trial)?;
        if tv > v {
            v = tv;
            p = trial;
            h *= 1.5;
        } else {
            h *= 0.5;
        }
    }
    Ok((v, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub delta: f64,
    pub center: Vec<f64>,
    pub sup_value: f64,
    pub sup_point: Vec<f64>,
    pub inf_value: f64,
    pub inf_point: Vec<f64>,
    pub product: f64,
    /// Product after the reduction to `R = delta = 1`.
    pub reduced_product: f64,
    pub bound: f64,
    pub constant: HarnackConstant,
    pub samples: usize,
    pub solution_certified: bool,
    pub pass: bool,
}

/// `(sup_{B_R} u)(inf_{B_{2R}} u)` against `C(n) delta^{(2-n)/2} R^{2-n}`.
pub fn harnack_audit(
    u: &dyn ScalarField,
    radius: f64,
    delta: f64,
    n: usize,
    opts: &AuditOptions,
) -> Result<HarnackReport> {
    if u.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.dim() });
    }
    if !(radius > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter("R and delta must be positive"));
    }
    let center = opts.center_for(n);
    check_defined_on_ball(u, &center, 3.0 * radius)?;
    let sup = ball_extremum(u, &center, radius, true, opts.samples, opts.seed)?;
    let inf = ball_extremum(u, &center, 2.0 * radius, false, opts.samples, opts.seed)?;
    let constant = harnack_constant(n)?;
    let m = n as f64 - 2.0;
    let product = sup.value * inf.value;
    let bound = constant.value * pow(delta, -m / 2.0) * pow(radius, -m);
    let reduced_product = product * pow(delta, m / 2.0) * pow(radius, m);
    let solution_certified = match &opts.spec {
        Some(spec) => certify_solution(u, spec, &center, 3.0 * radius),
        None => false,
    };
    Ok(HarnackReport {
        n,
        radius,
        delta,
        center,
        sup_value: sup.value,
        sup_point: sup.point,
        inf_value: inf.value,
        inf_point: inf.point,
        product,
        reduced_product,
        bound,
        constant,
        samples: opts.samples,
        solution_certified,
        pass: product >= 0.0 && product <= bound,
    })
}

fn check_defined_on_ball(u: &dyn ScalarField, center: &[f64], radius: f64) -> Result<()> {
    let inner = radius * (1.0 - 1e-12);
    let mut pts = halton_ball(512, center, inner);
    for d in 0..center.len() {
        for s in [-1.0, 1.0] {
            let mut p = center.to_vec();
            p[d] += s * inner;
            pts.push(p);
        }
    }
    for p in pts {
        if !u.contains(&p) {
            return Err(Error::Domain);
        }
        if !(u.value(&p)? > 0.0) {
            return Err(Error::Domain);
        }
    }
    Ok(())
}

fn certify_solution(u: &dyn ScalarField, spec: &CurvatureSpec, center: &[f64], radius: f64) -> bool {
    halton_ball(64, center, 0.99 * radius).iter().all(|p| {
        schouten_flat(u, p).and_then(|a| spec.eval(&a.eigenvalues())).map(|f| fabs(f - 1.0) <= 1e-6).unwrap_or(false)
    })
}

/// `v(x) = delta^{(n-2)/4} R^{(n-2)/2} u(R x)`: reduces the audit at
/// `(R, delta)` to `R = delta = 1`.
#[derive(Debug, Clone)]
pub struct HarnackScaling<F> {
    pub inner: F,
    pub radius: f64,
    pub delta: f64,
}

pub fn harnack_scaling<F: ScalarField>(u: F, radius: f64, delta: f64) -> HarnackScaling<F> {
    HarnackScaling { inner: u, radius, delta }
}

impl<F: ScalarField> HarnackScaling<F> {
    fn factor(&self) -> f64 {
        let m = self.inner.dim() as f64 - 2.0;
        pow(self.delta, m / 4.0) * pow(self.radius, m / 2.0)
    }

    fn inner_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter().map(|x| x * self.radius).collect()
    }
}

impl<F: ScalarField> ScalarField for HarnackScaling<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn contains(&self, p: &[f64]) -> bool {
        self.inner.contains(&self.inner_point(p))
    }
    fn jet(&self, p: &[f64]) -> Result<Jet> {
        let j = self.inner.jet(&self.inner_point(p))?;
        let c = self.factor();
        Ok(Jet {
            value: c * j.value,
            gradient: j.gradient.iter().map(|g| c * self.radius * g).collect(),
            hessian: j.hessian.scale(c * self.radius * self.radius),
        })
    }
}

/// Log-log regression of the product against `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub radii: Vec<f64>,
    pub products: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
}

impl SlopeReport {
    pub fn within(&self, tol: f64) -> bool {
        fabs(self.slope - self.expected) <= tol
    }
}

pub fn harnack_slope(u: &dyn ScalarField, radii: &[f64], delta: f64, opts: &AuditOptions) -> Result<SlopeReport> {
    let n = u.dim();
    let mut products = Vec::with_capacity(radii.len());
    for r in radii {
        products.push(harnack_audit(u, *r, delta, n, opts)?.product);
    }
    let xs: Vec<f64> = radii.iter().map(|r| log(*r)).collect();
    let ys: Vec<f64> = products.iter().map(|p| log(*p)).collect();
    Ok(SlopeReport { radii: radii.to_vec(), products, slope: least_squares_slope(&xs, &ys), expected: 2.0 - n as f64 })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Minimizer of `|lambda|` on the level set `{f = 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCertificate {
    pub delta: f64,
    pub point: Vec<f64>,
    pub multiplier: f64,
    pub kkt_residual: f64,
    pub converged_starts: usize,
}

/// `inf {|M|_F : F(M) = 1} = min {|lambda| : f(lambda) = 1}`, by Newton's
/// method on the Lagrange system `lambda = nu grad f(lambda)`, `f(lambda) = 1`
/// from seeded random cone points.
pub fn certify_delta_matrix(spec: &CurvatureSpec, tol: f64) -> DeltaCertificate {
    const STARTS: usize = 16;
    let n = spec.dim();
    let mut rng = sampling::rng(0xde17a);
    let mut best: Option<DeltaCertificate> = None;
    let mut converged = 0;
    for _ in 0..STARTS {
        let raw = crate::curvature::sample_cone_interior(spec, &mut rng, 0.05);
        let Ok(f) = spec.eval(&raw) else { continue };
        let start: Vec<f64> = raw.iter().map(|x| x / f).collect();
        let Some(cert) = kkt_newton(spec, start, tol) else { continue };
        converged += 1;
        if best.as_ref().map_or(true, |b| cert.delta < b.delta) {
            best = Some(cert);
        }
    }
    let mut out = best.unwrap_or_else(|| {
        let b = crate::curvature::normalize_b(spec);
        DeltaCertificate {
            delta: b * sqrt(n as f64),
            point: vec![b; n],
            multiplier: f64::NAN,
            kkt_residual: f64::NAN,
            converged_starts: 0,
        }
    });
    out.converged_starts = converged;
    out
}

fn kkt_residual(spec: &CurvatureSpec, lam: &[f64], nu: f64) -> Option<(Vec<f64>, f64)> {
    let n = lam.len();
    let g = spec.gradient(lam).ok()?;
    let f = spec.eval(lam).ok()?;
    let mut r: Vec<f64> = (0..n).map(|i| lam[i] - nu * g[i]).collect();
    r.push(f - 1.0);
    let nr = norm(&r);
    Some((r, nr))
}

fn kkt_newton(spec: &CurvatureSpec, mut lam: Vec<f64>, tol: f64) -> Option<DeltaCertificate> {
    let n = lam.len();
    let g = spec.gradient(&lam).ok()?;
    let mut nu = 1.0 / dot(&g, &g);
    let (mut r, mut nr) = kkt_residual(spec, &lam, nu)?;
    for _ in 0..100 {
        if nr <= tol * 1e-3 {
            break;
        }
        let g = spec.gradient(&lam).ok()?;
        let h = spec.hessian(&lam).ok()?;
        let dim = n + 1;
        let mut jac = vec![0.0; dim * dim];
        for i in 0..n {
            for j in 0..n {
                jac[i * dim + j] = if i == j { 1.0 } else { 0.0 } - nu * h.get(i, j);
            }
            jac[i * dim + n] = -g[i];
            jac[n * dim + i] = g[i];
        }
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let step = solve_dense(dim, &jac, &rhs).ok()?;
        let mut theta = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = (0..n).map(|i| lam[i] + theta * step[i]).collect();
            let tnu = nu + theta * step[n];
            if let Some((tr, tn)) = kkt_residual(spec, &trial, tnu) {
                if tn < nr {
                    lam = trial;
                    nu = tnu;
                    r = tr;
                    nr = tn;
                    accepted = true;
                    break;
                }
            }
            theta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if nr > tol {
        return None;
    }
    Some(DeltaCertificate { delta: norm(&lam), point: lam, multiplier: nu, kkt_residual: nr, converged_starts: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma2Options {
    pub hypothesis_samples: usize,
    pub conclusion_samples: usize,
    pub seed: u64,
}

impl Default for Lemma2Options {
    fn default() -> Self {
        Self { hypothesis_samples: 20_000, conclusion_samples: 2_000, seed: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub a: f64,
    pub center: Vec<f64>,
    pub hypothesis_samples: usize,
    pub hypothesis_violations: usize,
    /// `min (u - u_{x,lambda}) / u` over the hypothesis samples.
    pub worst_hypothesis_margin: f64,
    pub hypothesis_holds: bool,
    pub conclusion_samples: usize,
    pub conclusion_violations: usize,
    /// `max |grad u| 2a / ((n-2) u)` over `|x| < a`.
    pub worst_conclusion_ratio: f64,
    pub conclusion_holds: bool,
    /// False only when a hypothesis-certified field violates the conclusion.
    pub sound: bool,
}

/// Samples the hypothesis `u_{x,lambda}(y) <= u(y)` for `x in B_{4a}`,
/// `y in B_{8a}`, `0 < lambda < 2a`, `lambda < |y - x|`, and the conclusion
/// `|grad u(x)| <= (n-2)/(2a) u(x)` for `|x| < a`.
pub fn gradient_bound_check(u: &dyn ScalarField, a: f64, center: &[f64], opts: &Lemma2Options) -> Result<Lemma2Report> {
    use rand::Rng;
    let n = u.dim();
    if center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center.len() });
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter("a must be positive"));
    }
    check_defined_on_ball(u, center, 8.0 * a)?;
    let mut rng = sampling::rng(opts.seed);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..opts.hypothesis_samples {
        let x = sampling::in_ball(&mut rng, center, 4.0 * a);
        let lambda = 2.0 * a * (1.0 - rng.gen::<f64>());
        let y = loop {
            let y = sampling::in_ball(&mut rng, center, 8.0 * a);
            if dist(&y, &x) > lambda {
                break y;
            }
        };
        let k = Kelvin { inner: u, params: MoebiusParams::new(x, lambda)? };
        let uy = u.value(&y)?;
        let margin = (uy - k.value(&y)?) / uy;
        worst = worst.min(margin);
        if margin < -1e-12 {
            violations += 1;
        }
    }
    let mut cviol = 0;
    let mut ratio: f64 = 0.0;
    let limit = (n as f64 - 2.0) / (2.0 * a);
    for _ in 0..opts.conclusion_samples {
        let x = sampling::in_ball(&mut rng, center, a);
        let j = u.jet(&x)?;
        let r = norm(&j.gradient) / (limit * j.value);
        ratio = ratio.max(r);
        if r > 1.0 + 1e-12 {
            cviol += 1;
        }
    }
    let hypothesis_holds = violations == 0;
    let conclusion_holds = cviol == 0;
    Ok(Lemma2Report {
        a,
        center: center.to_vec(),
        hypothesis_samples: opts.hypothesis_samples,
        hypothesis_violations: violations,
        worst_hypothesis_margin: worst,
        hypothesis_holds,
        conclusion_samples: opts.conclusion_samples,
        conclusion_violations: cviol,
        worst_conclusion_ratio: ratio,
        conclusion_holds,
        sound: !hypothesis_holds || conclusion_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MovingSphereOptions {
    /// Directions sampled around the center.
    pub directions: usize,
    /// Radial samples per direction, log-spaced from `lambda` outward.
    pub radial: usize,
    /// Radii `lambda` tested below each candidate `lambda_bar`.
    pub lambdas: usize,
    /// Outer sample radius as a multiple of the search bound.
    pub domain_factor: f64,
    /// Relative bisection tolerance.
    pub tol: f64,
}

impl Default for MovingSphereOptions {
    fn default() -> Self {
        Self { directions: 64, radial: 32, lambdas: 8, domain_factor: 64.0, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingSphereReport {
    pub center: Vec<f64>,
    pub lambda_x: f64,
    pub samples_checked: usize,
    /// Sample points per tested radius.
    pub density: usize,
    /// `min (u - u_{x,lambda}) / u` over the certified samples.
    pub worst_margin: f64,
}

/// Largest `lambda_bar` (up to `search_bound`) such that `u_{x,lambda} <= u`
/// off `B_lambda(x)` at every sample, for the tested `lambda <= lambda_bar`.
pub fn critical_lambda(
    u: &dyn ScalarField,
    x: &[f64],
    search_bound: f64,
    opts: &MovingSphereOptions,
) -> Result<MovingSphereReport> {
    let n = u.dim();
    let dirs: Vec<Vec<f64>> = {
        let mut rng = sampling::rng(0x5fe7e);
        (0..opts.directions).map(|_| sampling::unit_vector(&mut rng, n)).collect()
    };
    let outer = opts.domain_factor * search_bound;
    let mut checked = 0usize;
    let probe = |bar: f64, checked: &mut usize| -> Result<(bool, f64)> {
        let mut worst = f64::INFINITY;
        for j in 1..=opts.lambdas {
            let lambda = bar * j as f64 / opts.lambdas as f64;
            let k = Kelvin { inner: u, params: MoebiusParams::new(x.to_vec(), lambda)? };
            let ratio_max = outer / lambda;
            for d in &dirs {
                for i in 1..=opts.radial {
                    let tau = pow(ratio_max, i as f64 / opts.radial as f64) * (1.0 + 1e-9);
                    let y: Vec<f64> = x.iter().zip(d).map(|(c, di)| c + lambda * tau * di).collect();
                    if !u.contains(&y) {
                        continue;
                    }
                    *checked += 1;
                    let uy = u.value(&y)?;
                    let margin = (uy - k.value(&y)?) / uy;
                    worst = worst.min(margin);
                    if margin < -1e-12 {
                        return Ok((false, margin));
                    }
                }
            }
        }
        Ok((true, worst))
    };
    let (ok_top, worst_top) = probe(search_bound, &mut checked)?;
    let density = opts.directions * opts.radial;
    if ok_top {
        return Ok(MovingSphereReport {
            center: x.to_vec(),
            lambda_x: search_bound,
            samples_checked: checked,
            density,
            worst_margin: worst_top,
        });
    }
    let mut lo = 1e-6 * search_bound;
    let (ok_lo, mut worst) = probe(lo, &mut checked)?;
    if !ok_lo {
        return Err(Error::NotFound);
    }
    let mut hi = search_bound;
    while hi - lo > opts.tol * hi {
        let mid = 0.5 * (lo + hi);
        let (ok, w) = probe(mid, &mut checked)?;
        if ok {
            lo = mid;
            worst = w;
        } else {
            hi = mid;
        }
    }
    Ok(MovingSphereReport { center: x.to_vec(), lambda_x: lo, samples_checked: checked, density, worst_margin: worst })
}

/// Result of a touching-point comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchingReport {
    pub point: Vec<f64>,
    pub value_gap: f64,
    pub gradient_gap: f64,
    /// Largest eigenvalue of `A^u - A^xi` at the point.
    pub max_eigenvalue_difference: f64,
    pub holds: bool,
}

/// Checks `A^u <= A^xi` at a point where `u >= xi` touch.
pub fn touching_comparison(
    u: &dyn ScalarField,
    xi: &dyn ScalarField,
    point: &[f64],
    tol: f64,
) -> Result<TouchingReport> {
    let ju = u.jet(point)?;
    let jx = xi.jet(point)?;
    let value_gap = fabs(ju.value - jx.value);
    let gradient_gap = sqrt(ju.gradient.iter().zip(&jx.gradient).map(|(a, b)| (a - b) * (a - b)).sum());
    let scale = 1.0 + fabs(ju.value);
    let gscale = 1.0 + norm(&ju.gradient);
    if value_gap > tol * scale || gradient_gap > tol * gscale {
        return Err(Error::NotTouching { value_gap, gradient_gap });
    }
    // u >= xi near the point
    let h = 1e-3 * (1.0 + norm(point));
    let n = point.len();
    for d in 0..n {
        for s in [-1.0, 1.0] {
            let mut p = point.to_vec();
            p[d] += s * h;
            if u.contains(&p) && xi.contains(&p) && u.value(&p)? < xi.value(&p)? - tol * scale {
                return Err(Error::NotTouching { value_gap, gradient_gap });
            }
        }
    }
    let au = schouten_flat(u, point)?;
    let ax = schouten_flat(xi, point)?;
    let diff = au.add_scaled(-1.0, &ax);
    let top = diff.max_eigenvalue();
    let mscale = 1.0 + au.frobenius_norm().max(ax.frobenius_norm());
    Ok(TouchingReport {
        point: point.to_vec(),
        value_gap,
        gradient_gap,
        max_eigenvalue_difference: top,
        holds: top <= tol * mscale,
    })
}

/// `xi = beta (eps^2 - |y - center|^2)` touching `u` from below on `B_eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaboloidFit {
    pub beta: f64,
    pub epsilon: f64,
    pub center: Vec<f64>,
    /// Touching point.
    pub point: Vec<f64>,
}

impl ParaboloidFit {
    pub fn field(&self) -> crate::field::AnalyticField {
        crate::field::AnalyticField::Paraboloid {
            beta: self.beta,
            radius_sq: self.epsilon * self.epsilon,
            center: self.center.clone(),
        }
    }
}

/// Largest `beta` with `u >= beta (eps^2 - |y|^2)` on `B_eps`: the minimum of
/// `u / (eps^2 - |y|^2)`, located by sampling and Newton refinement.
pub fn fit_touching_paraboloid(u: &dyn ScalarField, center: &[f64], epsilon: f64) -> Result<ParaboloidFit> {
    let n = u.dim();
    let e2 = epsilon * epsilon;
    let ratio_jet = |p: &[f64]| -> Result<Jet> {
        let z: Vec<f64> = p.iter().zip(center).map(|(a, b)| a - b).collect();
        let q = e2 - dot(&z, &z);
        let mut hess = crate::linalg::SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let d = if i == j { 2.0 / (q * q) } else { 0.0 };
                hess.set(i, j, d + 8.0 * z[i] * z[j] / (q * q * q));
            }
        }
        let h = Jet { value: 1.0 / q, gradient: z.iter().map(|zi| 2.0 * zi / (q * q)).collect(), hessian: hess };
        Ok(u.jet(p)?.product(&h))
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for p in halton_ball(4096, center, 0.999 * epsilon).into_iter().chain(core::iter::once(center.to_vec())) {
        let v = ratio_jet(&p)?.value;
        if best.as_ref().map_or(true, |b| v < b.0) {
            best = Some((v, p));
        }
    }
    let (mut v, mut p) = best.unwrap();
    for _ in 0..100 {
        let j = ratio_jet(&p)?;
        let gn = norm(&j.gradient);
        if gn <= 1e-14 * (1.0 + fabs(j.value)) {
            break;
        }
        let rhs: Vec<f64> = j.gradient.iter().map(|g| -g).collect();
        let mut step = solve_dense(n, &dense(&j.hessian), &rhs).unwrap_or_else(|_| rhs.clone());
        if dot(&step, &j.gradient) >= 0.0 {
            step = rhs;
        }
        let mut theta = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, s)| a + theta * s).collect();
            if dist(&trial, center) < epsilon {
                let tv = ratio_jet(&trial)?;
                if tv.value <= v && norm(&tv.gradient) < gn {
                    p = trial;
                    v = tv.value;
                    moved = true;
                    break;
                }
            }
            theta *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(ParaboloidFit { beta: v, epsilon, center: center.to_vec(), point: p })
}

fn dense(m: &crate::linalg::SymMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = m.get(i, j);
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaxPointOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for MaxPointOptions {
    fn default() -> Self {
        Self { samples: 20_000, seed: 11, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPointReport {
    pub max_value: f64,
    /// Maximum point on `S^n`.
    pub max_point: Vec<f64>,
    /// `f(u_max^{-4/(n-2)} lambda(A_{g_0}))`.
    pub lhs: f64,
    pub holds: bool,
}

/// Locates the maximum of a sphere field (given in the stereographic chart
/// from the north pole) and checks `f(u^{-4/(n-2)} lambda(A_{g_0})) <= 1`
/// there. Sphere points whose chart image lies outside the field's domain
/// are skipped.
pub fn max_point_inequality(
    u_sphere: &dyn ScalarField,
    spec: &CurvatureSpec,
    opts: &MaxPointOptions,
) -> Result<MaxPointReport> {
    let n = spec.dim();
    if u_sphere.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u_sphere.dim() });
    }
    let eval_sphere = |zeta: &[f64]| -> Option<f64> {
        let y = stereo_project(zeta).ok()?;
        if !u_sphere.contains(&y) {
            return None;
        }
        u_sphere.value(&y).ok()
    };
    let mut rng = sampling::rng(opts.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |zeta: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        if let Some(v) = eval_sphere(&zeta) {
            if best.as_ref().map_or(true, |b| v > b.0) {
                *best = Some((v, zeta));
            }
        }
    };
    consider(stereo_lift(&vec![0.0; n]), &mut best);
    for _ in 0..opts.samples {
        consider(sampling::unit_vector(&mut rng, n + 1), &mut best);
    }
    let (mut v, mut zeta) = best.ok_or(Error::Domain)?;
    // compass search in the tangent space, retracting onto the sphere
    let mut h = 0.1;
    while h > 1e-12 {
        let basis = tangent_basis(&zeta);
        let mut improved = false;
        for e in &basis {
            for s in [-1.0, 1.0] {
                let mut trial: Vec<f64> = zeta.iter().zip(e).map(|(z, ei)| z + s * h * ei).collect();
                let nt = norm(&trial);
                trial.iter_mut().for_each(|t| *t /= nt);
                if let Some(tv) = eval_sphere(&trial) {
                    if tv > v {
                        v = tv;
                        zeta = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let base = round_sphere_schouten(n)?;
    let scale = pow(v, -4.0 / (n as f64 - 2.0));
    let lam: Vec<f64> = base.as_slice().iter().map(|x| scale * x).collect();
    let lhs = spec.eval(&lam)?;
    Ok(MaxPointReport { max_value: v, max_point: zeta, lhs, holds: lhs <= 1.0 + opts.tol })
}

/// Orthonormal basis of the tangent space of `S^n` at `zeta` (Gram-Schmidt).
fn tangent_basis(zeta: &[f64]) -> Vec<Vec<f64>> {
    let dim = zeta.len();
    let mut basis: Vec<Vec<f64>> = vec![zeta.to_vec()];
    for k in 0..dim {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
        if basis.len() == dim {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Critical radius of the bubble `a (1 + s^2 |y - c|^2)^{-(n-2)/2}` at `x`:
/// `sqrt(1/s^2 + |x - c|^2)`.
pub fn bubble_critical_lambda(s: f64, bubble_center: &[f64], x: &[f64]) -> f64 {
    let d = dist(x, bubble_center);
    sqrt(1.0 / (s * s) + d * d)
}

/// Closed-form `(sup_{B_R} u)(inf_{B_{2R}} u)` for a bubble centered at the
/// ball center: `a^2 (1 + 4 s^2 R^2)^{-(n-2)/2}`.
pub fn bubble_harnack_product(b: &crate::field::BubbleParams, radius: f64) -> f64 {
    b.a * b.value_at_radius(2.0 * radius)
}
