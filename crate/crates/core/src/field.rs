//! Positive scalar fields on domains of `R^n` with value, gradient and Hessian.
//!
//! Analytic built-ins carry exact derivatives via closed-form chain rules;
//! gridded fields use fourth-order central differences at grid nodes.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, fabs, pow, round, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, SymMatrix};
use crate::stencil::{fornberg_weights, CENTRAL_D1, CENTRAL_D2};

/// Value, gradient and Hessian of a field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
}

impl Jet {
    pub fn constant(n: usize, value: f64) -> Self {
        Self { value, gradient: vec![0.0; n], hessian: SymMatrix::zeros(n) }
    }

    pub fn scale(mut self, c: f64) -> Self {
        self.value *= c;
        self.gradient.iter_mut().for_each(|g| *g *= c);
        self.hessian = self.hessian.scale(c);
        self
    }

    /// Product rule.
    pub fn product(&self, other: &Jet) -> Jet {
        let n = self.gradient.len();
        let gradient = (0..n).map(|i| self.value * other.gradient[i] + other.value * self.gradient[i]).collect();
        let mut hessian = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = self.value * other.hessian.get(i, j)
                    + other.value * self.hessian.get(i, j)
                    + self.gradient[i] * other.gradient[j]
                    + self.gradient[j] * other.gradient[i];
                hessian.set(i, j, v);
            }
        }
        Jet { value: self.value * other.value, gradient, hessian }
    }
}

/// Domain descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Whole,
    /// Open ball.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Complement of the closed ball.
    Exterior {
        center: Vec<f64>,
        radius: f64,
    },
    /// Anything else; membership is decided by the field.
    Restricted,
}

impl Domain {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Domain::Whole | Domain::Restricted => true,
            Domain::Ball { center, radius } => dist(p, center) < *radius,
            Domain::Exterior { center, radius } => dist(p, center) > *radius,
        }
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// A scalar field on a domain of `R^n`.
pub trait ScalarField {
    fn dim(&self) -> usize;

    fn domain(&self) -> Domain {
        Domain::Whole
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.domain().contains(p)
    }

    fn jet(&self, p: &[f64]) -> Result<Jet>;

    fn value(&self, p: &[f64]) -> Result<f64> {
        Ok(self.jet(p)?.value)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn contains(&self, p: &[f64]) -> bool {
        (**self).contains(p)
    }
    fn jet(&self, p: &[f64]) -> Result<Jet> {
        (**self).jet(p)
    }
    fn value(&self, p: &[f64]) -> Result<f64> {
        (**self).value(p)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Box<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn contains(&self, p: &[f64]) -> bool {
        (**self).contains(p)
    }
    fn jet(&self, p: &[f64]) -> Result<Jet> {
        (**self).jet(p)
    }
    fn value(&self, p: &[f64]) -> Result<f64> {
        (**self).value(p)
    }
}

fn check_point(field: &dyn ScalarField, p: &[f64]) -> Result<()> {
    if p.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), got: p.len() });
    }
    if !field.contains(p) {
        return Err(Error::Domain);
    }
    Ok(())
}

/// `u(x) = a (1 + s^2 |x - center|^2)^{-(n-2)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleParams {
    pub a: f64,
    pub s: f64,
    pub center: Vec<f64>,
}

impl BubbleParams {
    pub fn new(a: f64, s: f64, center: Vec<f64>) -> Result<Self> {
        if !(a > 0.0) || !(s > 0.0) {
            return Err(Error::InvalidParameter("bubble amplitude and scale must be positive"));
        }
        if center.len() < 3 {
            return Err(Error::DimensionTooSmall(center.len()));
        }
        Ok(Self { a, s, center })
    }

    /// Unit bubble centered at the origin.
    pub fn standard(n: usize) -> Self {
        Self { a: 1.0, s: 1.0, center: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `c = lim r^{n-2} u` along rays.
    pub fn far_field_constant(&self) -> f64 {
        self.a * pow(self.s, -((self.dim() - 2) as f64))
    }

    pub fn value_at_radius(&self, r: f64) -> f64 {
        let m = (self.dim() - 2) as f64 / 2.0;
        self.a * pow(1.0 + self.s * self.s * r * r, -m)
    }

    fn jet(&self, p: &[f64]) -> Jet {
        let n = self.dim();
        let m = (n - 2) as f64 / 2.0;
        let s2 = self.s * self.s;
        let z: Vec<f64> = p.iter().zip(&self.center).map(|(x, c)| x - c).collect();
        let q = 1.0 + s2 * dot(&z, &z);
        let u = self.a * pow(q, -m);
        let g1 = -2.0 * m * s2 * u / q; // coefficient of z in the gradient
        let gradient = z.iter().map(|zi| g1 * zi).collect();
        let mut hessian = SymMatrix::zeros(n);
        let c2 = 4.0 * m * (m + 1.0) * s2 * s2 * u / (q * q);
        for i in 0..n {
            for j in i..n {
                let d = if i == j { g1 } else { 0.0 };
                hessian.set(i, j, d + c2 * z[i] * z[j]);
            }
        }
        Jet { value: u, gradient, hessian }
    }
}

/// Center and radius of a Kelvin (moving-sphere) transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoebiusParams {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl MoebiusParams {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("Kelvin radius must be positive"));
        }
        Ok(Self { center, radius })
    }

    /// `x + lambda^2 (y - x) / |y - x|^2`.
    pub fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        let rho2: f64 = y.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        if sqrt(rho2) <= SINGULAR_FRACTION * self.radius {
            return Err(Error::SingularCenter);
        }
        let l2 = self.radius * self.radius;
        Ok(y.iter().zip(&self.center).map(|(yi, xi)| xi + l2 * (yi - xi) / rho2).collect())
    }
}

/// Radius of the excluded ball around a Kelvin center, relative to `lambda`.
pub const SINGULAR_FRACTION: f64 = 1e-8;

/// Jet of `y -> (lambda/|y-x|)^{n-2} u(x + lambda^2 (y-x)/|y-x|^2)`.
pub fn kelvin_jet(inner: &dyn ScalarField, m: &MoebiusParams, y: &[f64]) -> Result<Jet> {
    let n = inner.dim();
    if y.len() != n || m.center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let ystar = m.invert(y)?;
    if !inner.contains(&ystar) {
        return Err(Error::Domain);
    }
    let inner_jet = inner.jet(&ystar)?;
    let z: Vec<f64> = y.iter().zip(&m.center).map(|(a, b)| a - b).collect();
    let rho2 = dot(&z, &z);
    let l2 = m.radius * m.radius;
    let nf = n as f64;
    let p = nf - 2.0;

    let phi = pow(l2 / rho2, p / 2.0);
    let dphi: Vec<f64> = z.iter().map(|zb| -p * phi * zb / rho2).collect();
    let mut ddphi = SymMatrix::zeros(n);
    for b in 0..n {
        for c in b..n {
            let d = if b == c { 1.0 / rho2 } else { 0.0 };
            ddphi.set(b, c, -p * phi * (d - nf * z[b] * z[c] / (rho2 * rho2)));
        }
    }

    // Jacobian of the inversion (symmetric)
    let mut jac = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let d = if a == b { 1.0 } else { 0.0 };
            jac[a * n + b] = l2 / rho2 * (d - 2.0 * z[a] * z[b] / rho2);
        }
    }
    let g = &inner_jet.gradient;
    let gu: Vec<f64> = (0..n).map(|b| (0..n).map(|a| g[a] * jac[a * n + b]).sum()).collect();
    let mut hu = inner_jet.hessian.congruence(&jac);
    let gz = dot(g, &z);
    let r4 = rho2 * rho2;
    for b in 0..n {
        for c in b..n {
            let d = if b == c { gz } else { 0.0 };
            let second = l2 * (-2.0 * (g[b] * z[c] + g[c] * z[b] + d) / r4 + 8.0 * gz * z[b] * z[c] / (r4 * rho2));
            hu.set(b, c, hu.get(b, c) + second);
        }
    }
    let composed = Jet { value: inner_jet.value, gradient: gu, hessian: hu };
    let factor = Jet { value: phi, gradient: dphi, hessian: ddphi };
    Ok(factor.product(&composed))
}

/// Kelvin transform `u_{x,lambda}` of an arbitrary field.
#[derive(Debug, Clone)]
pub struct Kelvin<F> {
    pub inner: F,
    pub params: MoebiusParams,
}

impl<F: ScalarField> ScalarField for Kelvin<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn domain(&self) -> Domain {
        kelvin_domain(self.inner.domain(), &self.params)
    }
    fn contains(&self, p: &[f64]) -> bool {
        match self.params.invert(p) {
            Ok(q) => self.inner.contains(&q),
            Err(_) => false,
        }
    }
    fn jet(&self, p: &[f64]) -> Result<Jet> {
        kelvin_jet(&self.inner, &self.params, p)
    }
}

fn kelvin_domain(inner: Domain, m: &MoebiusParams) -> Domain {
    match inner {
        Domain::Whole => Domain::Exterior { center: m.center.clone(), radius: SINGULAR_FRACTION * m.radius },
        _ => Domain::Restricted,
    }
}

/// Radial field `u(|x - center|)` given by a profile `r -> (u, u', u'')`.
pub struct RadialFn<P> {
    pub center: Vec<f64>,
    pub profile: P,
}

impl<P: Fn(f64) -> (f64, f64, f64)> ScalarField for RadialFn<P> {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn jet(&self, p: &[f64]) -> Result<Jet> {
        let z: Vec<f64> = p.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        Ok(radial_jet(&z, &self.profile))
    }
}

/// Jet of a radial function from its profile; at `r = 0`, `u'/r -> u''`.
pub fn radial_jet(z: &[f64], profile: &dyn Fn(f64) -> (f64, f64, f64)) -> Jet {
    let n = z.len();
    let r = sqrt(dot(z, z));
    let (u, up, upp) = profile(r);
    let mut hessian = SymMatrix::zeros(n);
    if r == 0.0 {
        return Jet { value: u, gradient: vec![0.0; n], hessian: SymMatrix::scaled_identity(n, upp) };
    }
    let gradient = z.iter().map(|zi| up * zi / r).collect();
    let tan = up / r;
    for i in 0..n {
        for j in i..n {
            let d = if i == j { tan } else { 0.0 };
            hessian.set(i, j, d + (upp - tan) * z[i] * z[j] / (r * r));
        }
    }
    Jet { value: u, gradient, hessian }
}

/// `(2 / (1 + |y|^2))^{(n-2)/2}`: the round metric in stereographic coordinates.
pub fn stereographic_factor(n: usize) -> BubbleParams {
    BubbleParams { a: pow(2.0, (n - 2) as f64 / 2.0), s: 1.0, center: vec![0.0; n] }
}

fn inverse_stereo_factor_jet(y: &[f64]) -> Jet {
    let n = y.len();
    let m = (n - 2) as f64 / 2.0;
    let q = 1.0 + dot(y, y);
    let h = pow(q / 2.0, m);
    let g1 = 2.0 * m * h / q;
    let c2 = 4.0 * m * (m - 1.0) * h / (q * q);
    let gradient = y.iter().map(|yi| g1 * yi).collect();
    let mut hessian = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let d = if i == j { g1 } else { 0.0 };
            hessian.set(i, j, d + c2 * y[i] * y[j]);
        }
    }
    Jet { value: h, gradient, hessian }
}

/// Radially symmetric field sampled on `0 = r_0 < ... < r_M`, interpolated
/// by local quartics in the conformal variable `w = u^{-2/(n-2)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialTable {
    pub n: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialTable {
    pub fn new(n: usize, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 5 {
            return Err(Error::InvalidParameter("radial table needs >= 5 matching radii and values"));
        }
        if radii[0] != 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("radii must start at 0 and increase"));
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("radial values must be positive"));
        }
        Ok(Self { n, radii, values })
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// `(u, u', u'')` at radius `r`.
    pub fn profile(&self, r: f64) -> (f64, f64, f64) {
        let m = (self.n - 2) as f64 / 2.0;
        let len = self.radii.len();
        let pos = self.radii.partition_point(|x| *x < r).min(len - 1);
        let start = pos.saturating_sub(2).min(len - 5);
        // mirror nodes across the origin for the even extension
        let mut nodes = [0.0; 5];
        let mut w = [0.0; 5];
        let lo = start as isize;
        let shift = if pos < 2 { 2 - pos as isize } else { 0 };
        for j in 0..5 {
            let idx = lo + j as isize - shift;
            let (rr, vv) = if idx < 0 {
                (-self.radii[(-idx) as usize], self.values[(-idx) as usize])
            } else {
                (self.radii[idx as usize], self.values[idx as usize])
            };
            nodes[j] = rr;
            w[j] = pow(vv, -1.0 / m);
        }
        let c = fornberg_weights(r, &nodes, 2);
        let ww: f64 = (0..5).map(|j| c[0][j] * w[j]).sum();
        let w1: f64 = (0..5).map(|j| c[1][j] * w[j]).sum();
        let w2: f64 = (0..5).map(|j| c[2][j] * w[j]).sum();
        conformal_to_profile(ww, w1, w2, m)
    }
}

/// Converts `(w, w', w'')` with `u = w^{-m}` into `(u, u', u'')`.
pub fn conformal_to_profile(w: f64, w1: f64, w2: f64, m: f64) -> (f64, f64, f64) {
    let u = pow(w, -m);
    let up = -m * u / w * w1;
    let upp = -m * u / w * (w2 - (m + 1.0) * w1 * w1 / w);
    (u, up, upp)
}

impl ScalarField for RadialTable {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> Domain {
        Domain::Ball { center: vec![0.0; self.n], radius: self.max_radius() }
    }
    fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.n && sqrt(dot(p, p)) <= self.max_radius()
    }
    fn jet(&self, p: &[f64]) -> Result<Jet> {
        check_point(self, p)?;
        Ok(radial_jet(p, &|r| self.profile(r)))
    }
}

/// Serializable analytic fields; derivatives are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalyticField {
    Constant {
        n: usize,
        value: f64,
    },
    Bubble(BubbleParams),
    /// `offset + sum of bubbles`.
    BubbleSum {
        terms: Vec<BubbleParams>,
        #[serde(default)]
        offset: f64,
    },
    /// `amplitude * exp(rate . x)`.
    Exponential {
        amplitude: f64,
        rate: Vec<f64>,
    },
    /// `beta (radius_sq - |y - center|^2)`, positive on its ball.
    Paraboloid {
        beta: f64,
        radius_sq: f64,
        center: Vec<f64>,
    },
    Kelvin {
        inner: Box<AnalyticField>,
        center: Vec<f64>,
        radius: f64,
    },
    /// `factor * u`.
    Scaled {
        inner: Box<AnalyticField>,
        factor: f64,
    },
    /// `R^{(n-2)/2} u(R x)`.
    Dilated {
        inner: Box<AnalyticField>,
        factor: f64,
    },
    /// `u(O x)` with `O` row-major orthogonal.
    Rotated {
        inner: Box<AnalyticField>,
        matrix: Vec<f64>,
    },
    /// Flat representative `u_sphere * (2/(1+|y|^2))^{(n-2)/2}`.
    StereoPull {
        inner: Box<AnalyticField>,
    },
    /// Sphere field in the chart: `v / (2/(1+|y|^2))^{(n-2)/2}`.
    StereoPush {
        inner: Box<AnalyticField>,
    },
    /// `u - c |y - point|^2`.
    MinusQuadratic {
        inner: Box<AnalyticField>,
        c: f64,
        point: Vec<f64>,
    },
    RadialTable(RadialTable),
}

impl AnalyticField {
    pub fn bubble(a: f64, s: f64, center: Vec<f64>) -> Result<Self> {
        Ok(AnalyticField::Bubble(BubbleParams::new(a, s, center)?))
    }

    pub fn kelvin(self, m: &MoebiusParams) -> Self {
        AnalyticField::Kelvin { inner: Box::new(self), center: m.center.clone(), radius: m.radius }
    }

    pub fn scaled(self, factor: f64) -> Self {
        AnalyticField::Scaled { inner: Box::new(self), factor }
    }

    pub fn dilated(self, factor: f64) -> Self {
        AnalyticField::Dilated { inner: Box::new(self), factor }
    }

    pub fn rotated(self, matrix: Vec<f64>) -> Self {
        AnalyticField::Rotated { inner: Box::new(self), matrix }
    }

    pub fn stereo_pull(self) -> Self {
        AnalyticField::StereoPull { inner: Box::new(self) }
    }

    pub fn stereo_push(self) -> Self {
        AnalyticField::StereoPush { inner: Box::new(self) }
    }

    pub fn minus_quadratic(self, c: f64, point: Vec<f64>) -> Self {
        AnalyticField::MinusQuadratic { inner: Box::new(self), c, point }
    }
}

impl ScalarField for AnalyticField {
    fn dim(&self) -> usize {
        use AnalyticField::*;
        match self {
            Constant { n, .. } => *n,
            Bubble(b) => b.dim(),
            BubbleSum { terms, .. } => terms.first().map_or(0, |b| b.dim()),
            Exponential { rate, .. } => rate.len(),
            Paraboloid { center, .. } => center.len(),
            Kelvin { inner, .. }
            | Scaled { inner, .. }
            | Dilated { inner, .. }
            | Rotated { inner, .. }
            | StereoPull { inner }
            | StereoPush { inner }
            | MinusQuadratic { inner, .. } => inner.dim(),
            RadialTable(t) => t.n,
        }
    }

    fn domain(&self) -> Domain {
        use AnalyticField::*;
        match self {
            Paraboloid { radius_sq, center, .. } => Domain::Ball { center: center.clone(), radius: sqrt(*radius_sq) },
            Kelvin { inner, center, radius } => {
                kelvin_domain(inner.domain(), &MoebiusParams { center: center.clone(), radius: *radius })
            }
            Scaled { inner, .. } | StereoPull { inner } | StereoPush { inner } => inner.domain(),
            Dilated { inner, .. } | Rotated { inner, .. } | MinusQuadratic { inner, .. } => match inner.domain() {
                Domain::Whole => Domain::Whole,
                _ => Domain::Restricted,
            },
            RadialTable(t) => t.domain(),
            _ => Domain::Whole,
        }
    }

    fn contains(&self, p: &[f64]) -> bool {
        use AnalyticField::*;
        if p.len() != self.dim() {
            return false;
        }
        match self {
            Kelvin { inner, center, radius } => {
                let m = MoebiusParams { center: center.clone(), radius: *radius };
                m.invert(p).map(|q| inner.contains(&q)).unwrap_or(false)
            }
            Scaled { inner, .. } | StereoPull { inner } | StereoPush { inner } => inner.contains(p),
            Dilated { inner, factor } => {
                let q: Vec<f64> = p.iter().map(|x| x * factor).collect();
                inner.contains(&q)
            }
            Rotated { inner, matrix } => inner.contains(&rotate(matrix, p)),
            MinusQuadratic { inner, c, point } => {
                inner.contains(p) && inner.value(p).map(|v| v - c * dist2(p, point) > 0.0).unwrap_or(false)
            }
            RadialTable(t) => t.contains(p),
            _ => self.domain().contains(p),
        }
    }

    fn jet(&self, p: &[f64]) -> Result<Jet> {
        use AnalyticField::*;
        if let Kelvin { center, radius, .. } = self {
            MoebiusParams { center: center.clone(), radius: *radius }.invert(p)?;
        }
        check_point(self, p)?;
        let n = self.dim();
        let jet = match self {
            Constant { value, .. } => Jet::constant(n, *value),
            Bubble(b) => b.jet(p),
            BubbleSum { terms, offset } => {
                let mut acc = Jet::constant(n, *offset);
                for b in terms {
                    let j = b.jet(p);
                    acc.value += j.value;
                    acc.gradient.iter_mut().zip(&j.gradient).for_each(|(a, g)| *a += g);
                    acc.hessian = acc.hessian.add_scaled(1.0, &j.hessian);
                }
                acc
            }
            Exponential { amplitude, rate } => {
                let u = amplitude * exp(dot(rate, p));
                Jet {
                    value: u,
                    gradient: rate.iter().map(|k| u * k).collect(),
                    hessian: SymMatrix::outer(rate).scale(u),
                }
            }
            Paraboloid { beta, radius_sq, center } => {
                let d2 = dist2(p, center);
                Jet {
                    value: beta * (radius_sq - d2),
                    gradient: p.iter().zip(center).map(|(x, c)| -2.0 * beta * (x - c)).collect(),
                    hessian: SymMatrix::scaled_identity(n, -2.0 * beta),
                }
            }
            Kelvin { inner, center, radius } => {
                let m = MoebiusParams { center: center.clone(), radius: *radius };
                kelvin_jet(inner.as_ref(), &m, p)?
            }
            Scaled { inner, factor } => inner.jet(p)?.scale(*factor),
            Dilated { inner, factor } => {
                let q: Vec<f64> = p.iter().map(|x| x * factor).collect();
                let j = inner.jet(&q)?;
                let m = (n - 2) as f64 / 2.0;
                let c0 = pow(*factor, m);
                Jet {
                    value: c0 * j.value,
                    gradient: j.gradient.iter().map(|g| c0 * factor * g).collect(),
                    hessian: j.hessian.scale(c0 * factor * factor),
                }
            }
            Rotated { inner, matrix } => {
                let j = inner.jet(&rotate(matrix, p))?;
                // grad = O^T g, hess = O^T H O
                let gradient = (0..n).map(|i| (0..n).map(|k| matrix[k * n + i] * j.gradient[k]).sum()).collect();
                Jet { value: j.value, gradient, hessian: j.hessian.congruence(matrix) }
            }
            StereoPull { inner } => inner.jet(p)?.product(&stereographic_factor(n).jet(p)),
            StereoPush { inner } => inner.jet(p)?.product(&inverse_stereo_factor_jet(p)),
            MinusQuadratic { inner, c, point } => {
                let mut j = inner.jet(p)?;
                j.value -= c * dist2(p, point);
                j.gradient.iter_mut().zip(p.iter().zip(point)).for_each(|(g, (x, q))| *g -= 2.0 * c * (x - q));
                j.hessian = j.hessian.add_scaled(-2.0 * c, &SymMatrix::identity(n));
                j
            }
            RadialTable(t) => t.jet(p)?,
        };
        Ok(jet)
    }
}

fn rotate(matrix: &[f64], p: &[f64]) -> Vec<f64> {
    let n = p.len();
    (0..n).map(|i| (0..n).map(|j| matrix[i * n + j] * p[j]).sum()).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Uniform grid geometry: `origin + spacing * index`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
}

/// Field sampled on a uniform grid, defined at least two cells from the
/// boundary. At nodes, derivatives are fourth-order central differences;
/// between nodes the field is the tensor-product cubic Lagrange interpolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GriddedField {
    pub n: usize,
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GriddedField {
    pub fn new(n: usize, grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if grid.origin.len() != n || grid.shape.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: grid.shape.len() });
        }
        if !(grid.spacing > 0.0) {
            return Err(Error::InvalidParameter("grid spacing must be positive"));
        }
        let total: usize = grid.shape.iter().product();
        if values.len() != total {
            return Err(Error::DimensionMismatch { expected: total, got: values.len() });
        }
        Ok(Self { n, grid, values })
    }

    /// Samples `f` at every node.
    pub fn sample(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = grid.shape.len();
        let total: usize = grid.shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let p: Vec<f64> = (0..n).map(|d| grid.origin[d] + grid.spacing * idx[d] as f64).collect();
            values.push(f(&p));
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < grid.shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self::new(n, grid, values)
    }

    pub fn node_point(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.n).map(|d| self.grid.origin[d] + self.grid.spacing * idx[d] as f64).collect()
    }

    fn flat(&self, idx: &[isize]) -> usize {
        let mut f = 0usize;
        for d in 0..self.n {
            f = f * self.grid.shape[d] + idx[d] as usize;
        }
        f
    }

    /// Grid coordinates of `p` if it lies in the region where the jet is
    /// defined.
    fn grid_coords(&self, p: &[f64]) -> Option<Vec<f64>> {
        if p.len() != self.n {
            return None;
        }
        let h = self.grid.spacing;
        let x: Vec<f64> = (0..self.n).map(|d| (p[d] - self.grid.origin[d]) / h).collect();
        let inside = x.iter().zip(&self.grid.shape).all(|(x, s)| *x >= 2.0 - 1e-9 && *x <= *s as f64 - 3.0 + 1e-9);
        inside.then_some(x)
    }

    /// Jet of the cubic interpolant on the 4^n nodes around `x`.
    fn interpolated_jet(&self, x: &[f64]) -> Jet {
        let n = self.n;
        let h = self.grid.spacing;
        let mut base = Vec::with_capacity(n);
        // weights[d][m][j]: m-th derivative weight of node j in direction d
        let mut weights = Vec::with_capacity(n);
        for d in 0..n {
            let i0 = (libm::floor(x[d]) as isize).clamp(2, self.grid.shape[d] as isize - 4);
            let nodes: Vec<f64> = (-1..=2).map(|o| (i0 + o) as f64).collect();
            weights.push(fornberg_weights(x[d], &nodes, 2));
            base.push(i0 - 1);
        }
        let mut jet = Jet::constant(n, 0.0);
        let count = 4usize.pow(n as u32);
        let mut idx = vec![0isize; n];
        for m in 0..count {
            let mut rest = m;
            for d in (0..n).rev() {
                idx[d] = base[d] + (rest % 4) as isize;
                rest /= 4;
            }
            let v = self.values[self.flat(&idx)];
            let local: Vec<usize> = (0..n).map(|d| (idx[d] - base[d]) as usize).collect();
            let w0: f64 = (0..n).map(|d| weights[d][0][local[d]]).product();
            jet.value += w0 * v;
            for a in 0..n {
                let mut ga = weights[a][1][local[a]];
                for d in (0..n).filter(|d| *d != a) {
                    ga *= weights[d][0][local[d]];
                }
                jet.gradient[a] += ga * v / h;
                for b in a..n {
                    let mut hab = 1.0;
                    for d in 0..n {
                        let order = usize::from(d == a) + usize::from(d == b);
                        hab *= weights[d][order][local[d]];
                    }
                    let cur = jet.hessian.get(a, b);
                    jet.hessian.set(a, b, cur + hab * v / (h * h));
                }
            }
        }
        jet
    }

    /// Node index of `p` if it sits on an interior node.
    pub fn node_of(&self, p: &[f64]) -> Option<Vec<isize>> {
        if p.len() != self.n {
            return None;
        }
        let h = self.grid.spacing;
        let mut idx = Vec::with_capacity(self.n);
        for d in 0..self.n {
            let x = (p[d] - self.grid.origin[d]) / h;
            let i = round(x);
            if fabs(x - i) > 1e-9 || i < 2.0 || i > (self.grid.shape[d] as f64 - 3.0) {
                return None;
            }
            idx.push(i as isize);
        }
        Some(idx)
    }
}

impl ScalarField for GriddedField {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> Domain {
        Domain::Restricted
    }
    fn contains(&self, p: &[f64]) -> bool {
        self.grid_coords(p).is_some()
    }
    fn value(&self, p: &[f64]) -> Result<f64> {
        match self.node_of(p) {
            Some(idx) => Ok(self.values[self.flat(&idx)]),
            None => Ok(self.interpolated_jet(&self.grid_coords(p).ok_or(Error::Domain)?).value),
        }
    }
    fn jet(&self, p: &[f64]) -> Result<Jet> {
        let Some(idx) = self.node_of(p) else {
            return Ok(self.interpolated_jet(&self.grid_coords(p).ok_or(Error::Domain)?));
        };
        let n = self.n;
        let h = self.grid.spacing;
        let at = |shift: &[(usize, isize)]| -> f64 {
            let mut j = idx.clone();
            for (d, s) in shift {
                j[*d] += s;
            }
            self.values[self.flat(&j)]
        };
        let value = at(&[]);
        let mut gradient = vec![0.0; n];
        let mut hessian = SymMatrix::zeros(n);
        for d in 0..n {
            let mut g = 0.0;
            let mut s2 = 0.0;
            for (k, off) in (-2isize..=2).enumerate() {
                let v = at(&[(d, off)]);
                g += CENTRAL_D1[k] * v;
                s2 += CENTRAL_D2[k] * v;
            }
            gradient[d] = g / h;
            hessian.set(d, d, s2 / (h * h));
            for e in (d + 1)..n {
                let mut mixed = 0.0;
                for (k, a) in (-2isize..=2).enumerate() {
                    if CENTRAL_D1[k] == 0.0 {
                        continue;
                    }
                    for (l, b) in (-2isize..=2).enumerate() {
                        if CENTRAL_D1[l] == 0.0 {
                            continue;
                        }
                        mixed += CENTRAL_D1[k] * CENTRAL_D1[l] * at(&[(d, a), (e, b)]);
                    }
                }
                hessian.set(d, e, mixed / (h * h));
            }
        }
        Ok(Jet { value, gradient, hessian })
    }
}

/// Either kind of serializable field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldDescriptor {
    Analytic(AnalyticField),
    Gridded(GriddedField),
}

impl ScalarField for FieldDescriptor {
    fn dim(&self) -> usize {
        match self {
            FieldDescriptor::Analytic(f) => f.dim(),
            FieldDescriptor::Gridded(f) => f.dim(),
        }
    }
    fn domain(&self) -> Domain {
        match self {
            FieldDescriptor::Analytic(f) => f.domain(),
            FieldDescriptor::Gridded(f) => f.domain(),
        }
    }
    fn contains(&self, p: &[f64]) -> bool {
        match self {
            FieldDescriptor::Analytic(f) => f.contains(p),
            FieldDescriptor::Gridded(f) => f.contains(p),
        }
    }
    fn jet(&self, p: &[f64]) -> Result<Jet> {
        match self {
            FieldDescriptor::Analytic(f) => f.jet(p),
            FieldDescriptor::Gridded(f) => f.jet(p),
        }
    }
    fn value(&self, p: &[f64]) -> Result<f64> {
        match self {
            FieldDescriptor::Analytic(f) => f.value(p),
            FieldDescriptor::Gridded(f) => f.value(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn ScalarField, p: &[f64], tol: f64) {
        let n = f.dim();
        let j = f.jet(p).unwrap();
        let h = 1e-5;
        for i in 0..n {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[i] += h;
            b[i] -= h;
            let ja = f.jet(&a).unwrap();
            let jb = f.jet(&b).unwrap();
            let g = (ja.value - jb.value) / (2.0 * h);
            assert!((g - j.gradient[i]).abs() < tol * (1.0 + g.abs()), "grad {i}: {g} vs {}", j.gradient[i]);
            for k in 0..n {
                let hk = (ja.gradient[k] - jb.gradient[k]) / (2.0 * h);
                assert!((hk - j.hessian.get(i, k)).abs() < tol * (1.0 + hk.abs()), "hess {i}{k}");
            }
        }
    }

    #[test]
    fn analytic_jets_match_finite_differences() {
        let b = AnalyticField::bubble(1.3, 0.8, vec![0.1, -0.2, 0.3]).unwrap();
        fd_check(&b, &[0.4, 0.1, -0.7], 1e-7);
        let k = b.clone().kelvin(&MoebiusParams::new(vec![1.0, 0.5, 0.0], 0.7).unwrap());
        fd_check(&k, &[0.4, 0.1, -0.7], 1e-6);
        let e = AnalyticField::Exponential { amplitude: 0.5, rate: vec![0.3, -0.1, 0.2, 0.4] };
        fd_check(&e, &[0.1, 0.2, 0.3, 0.4], 1e-7);
        let pull = b.clone().stereo_pull();
        fd_check(&pull, &[0.4, 0.1, -0.7], 1e-7);
        let push = b.clone().stereo_push();
        fd_check(&push, &[0.4, 0.1, -0.7], 1e-7);
        let d = b.clone().dilated(1.7);
        fd_check(&d, &[0.4, 0.1, -0.7], 1e-7);
    }

    #[test]
    fn kelvin_of_standard_bubble_is_itself() {
        let b = AnalyticField::Bubble(BubbleParams::standard(4));
        let k = b.clone().kelvin(&MoebiusParams::new(vec![0.0; 4], 1.0).unwrap());
        for p in [[0.3, 0.1, -0.2, 2.0], [5.0, 1.0, 0.0, 0.0]] {
            assert!((k.value(&p).unwrap() - b.value(&p).unwrap()).abs() < 1e-15);
        }
        assert_eq!(k.jet(&[0.0; 4]), Err(Error::SingularCenter));
    }

    #[test]
    fn gridded_interpolation_between_nodes() {
        let f = |p: &[f64]| 1.0 + p[0] * p[0] * p[1] - 0.5 * p[2] * p[2] * p[2] + p[0] * p[2];
        let g = GriddedField::sample(GridSpec { origin: vec![-1.0; 3], spacing: 0.25, shape: vec![9; 3] }, f).unwrap();
        // cubic in each variable: reproduced exactly
        let p = [0.13, -0.31, 0.22];
        let j = g.jet(&p).unwrap();
        assert!((j.value - f(&p)).abs() < 1e-13);
        assert!((j.gradient[0] - (2.0 * p[0] * p[1] + p[2])).abs() < 1e-12);
        assert!((j.hessian.get(0, 1) - 2.0 * p[0]).abs() < 1e-11);
        assert!((j.hessian.get(2, 2) + 3.0 * p[2]).abs() < 1e-11);
        assert!(g.contains(&[0.5, 0.5, 0.5]));
        assert!(!g.contains(&[0.51, 0.0, 0.0]));
        assert_eq!(g.jet(&[-0.6, 0.0, 0.0]), Err(Error::Domain));
    }

    #[test]
    fn gridded_derivatives_are_fourth_order() {
        let f = |p: &[f64]| 1.0 + 0.5 * (p[0] + 2.0 * p[1]).sin() * (0.7 * p[2]).cos();
        let p = [0.4, 0.2, 0.6];
        let exact = |p: &[f64]| {
            let a = p[0] + 2.0 * p[1];
            let c = (0.7 * p[2]).cos();
            0.5 * a.sin() * c * -4.0 // d2/dy2
        };
        let err = |h: f64| {
            let shape = 9;
            let origin: Vec<f64> = p.iter().map(|x| x - 4.0 * h).collect();
            let g = GriddedField::sample(GridSpec { origin, spacing: h, shape: vec![shape; 3] }, f).unwrap();
            (g.jet(&p).unwrap().hessian.get(1, 1) - exact(&p)).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let order = (e1 / e2).log2();
        assert!(order > 3.7, "order {order}");
    }
}
