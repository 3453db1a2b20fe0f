//! Radially symmetric solutions of `f(lambda(A^u)) = 1` on `R^n`.
//!
//! The unknowns are the nodal values of `w = u^{-2/(n-2)}`, in which
//! `A^u = w D^2 w - |Dw|^2 I / 2` and every bubble is a quadratic polynomial
//! in `r`. Derivatives use five-point Fornberg stencils on the graded grid
//! `r_i = l tan(phi_i / 2)` with `phi` uniform; the grid is odd in `phi`, so
//! mirror ghosts across the origin stay on the grid.
//!
//! Rows of the discrete system:
//! * row 0: `w'(0) = 0` (one-sided, scaled by `r_1 / w_0`);
//! * rows `1..M-1`: `f(lambda_rad, lambda_tan, ..., lambda_tan) - 1`;
//! * row `M`: far-field gauge `c^{2/(n-2)} (w_M - w_{M-1}) / (r_M^2 - r_{M-1}^2) - 1`,
//!   which holds exactly when `u ~ c r^{2-n}` with a bubble tail.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;
use libm::{atan, fabs, pow, sqrt, tan};
use serde::{Deserialize, Serialize};

use crate::conformal::{bubble_exact, bubble_kappa, radial_eigenvalues};
use crate::curvature::CurvatureSpec;
use crate::error::{Error, Result};
use crate::field::{BubbleParams, RadialTable};
use crate::linalg::{sup_norm, BandMatrix};
use crate::stencil::fornberg_weights;

/// Backtracking line search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DampingConfig {
    pub factor: f64,
    pub max_halvings: usize,
}

impl Default for DampingConfig {
    fn default() -> Self {
        Self { factor: 0.5, max_halvings: 30 }
    }
}

/// Step control in the homotopy parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub initial_dt: f64,
    pub min_dt: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self { initial_dt: 0.1, min_dt: 1e-4 }
    }
}

/// Radial grid: `points` intervals on `[0, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub r_max: f64,
    /// Length scale `l` of the grading; `None` picks `1/s` of the bubble
    /// selected by the far-field constant.
    pub scale: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { points: 800, r_max: 40.0, scale: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Sup-norm residual tolerance.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub damping: DampingConfig,
    pub continuation: ContinuationConfig,
    pub grid: GridConfig,
    /// `c` in `u(r) ~ c r^{2-n}`.
    pub far_field_constant: f64,
    /// Allowed relative deviation of `r u'/u` from `2 - n` at `r_M`.
    pub tail_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 40,
            damping: DampingConfig::default(),
            continuation: ContinuationConfig::default(),
            grid: GridConfig::default(),
            far_field_constant: 1.0,
            tail_tolerance: 1e-2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.newton_tol,
            self.grid.r_max,
            self.far_field_constant,
            self.tail_tolerance,
            self.continuation.initial_dt,
            self.continuation.min_dt,
        ];
        if positive.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter("tolerances, radii and step sizes must be positive"));
        }
        if self.continuation.min_dt > self.continuation.initial_dt {
            return Err(Error::InvalidParameter("min_dt must not exceed initial_dt"));
        }
        if !(self.damping.factor > 0.0 && self.damping.factor < 1.0) {
            return Err(Error::InvalidParameter("damping factor must lie in (0, 1)"));
        }
        if self.grid.points < 8 {
            return Err(Error::InvalidParameter("grid needs at least 8 intervals"));
        }
        if let Some(l) = self.grid.scale {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter("grid scale must be positive"));
            }
        }
        Ok(())
    }
}

/// Bubble scale `s` selected by the far-field constant: `u ~ c r^{2-n}`
/// forces `s = sqrt(kappa f(e)) c^{-2/(n-2)}`.
pub fn gauge_scale(spec: &CurvatureSpec, far_field_constant: f64) -> f64 {
    let n = spec.dim();
    sqrt(bubble_kappa(n) * spec.value_at_ones()) * pow(far_field_constant, -2.0 / (n as f64 - 2.0))
}

/// The exact bubble solving `spec` with far-field constant `c`.
pub fn gauge_bubble(spec: &CurvatureSpec, far_field_constant: f64) -> BubbleParams {
    bubble_exact(spec, gauge_scale(spec, far_field_constant), vec![0.0; spec.dim()]).expect("gauge scale is positive")
}

#[derive(Debug, Clone, PartialEq)]
struct Stencil {
    idx: [usize; 5],
    d1: [f64; 5],
    d2: [f64; 5],
}

/// Radial nodes with their difference stencils.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    radii: Vec<f64>,
    stencils: Vec<Stencil>,
    origin_d1: [f64; 5],
}

impl RadialGrid {
    /// `r_i = l tan(phi_i / 2)`, `phi_i = i phi_max / M`, `r_M = r_max`.
    pub fn graded(points: usize, r_max: f64, scale: f64) -> Result<Self> {
        if points < 8 || !(r_max > 0.0) || !(scale > 0.0) {
            return Err(Error::InvalidParameter("grid needs >= 8 intervals and positive extents"));
        }
        let phi_max = 2.0 * atan(r_max / scale);
        let mut radii: Vec<f64> = (0..=points).map(|i| scale * tan(0.5 * phi_max * i as f64 / points as f64)).collect();
        radii[points] = r_max;
        Self::from_radii(radii)
    }

    /// Stencils for arbitrary increasing radii starting at 0; the node
    /// next to the origin uses the even mirror image `-r_1`, so the grid
    /// should be (nearly) symmetric there.
    pub fn from_radii(radii: Vec<f64>) -> Result<Self> {
        let m = radii.len() - 1;
        if m < 8 || radii[0] != 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("radii must start at 0, increase, and have >= 9 nodes"));
        }
        let mut stencils = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let (idx, nodes): ([usize; 5], [f64; 5]) = match i {
                0 => ([2, 1, 0, 1, 2], [-radii[2], -radii[1], 0.0, radii[1], radii[2]]),
                1 => ([1, 0, 1, 2, 3], [-radii[1], 0.0, radii[1], radii[2], radii[3]]),
                _ if i + 1 >= m => {
                    let s = m - 4;
                    ([s, s + 1, s + 2, s + 3, s + 4], core::array::from_fn(|j| radii[s + j]))
                }
                _ => ([i - 2, i - 1, i, i + 1, i + 2], core::array::from_fn(|j| radii[i - 2 + j])),
            };
            let w = fornberg_weights(radii[i], &nodes, 2);
            stencils.push(Stencil {
                idx,
                d1: core::array::from_fn(|j| w[1][j]),
                d2: core::array::from_fn(|j| w[2][j]),
            });
        }
        let w0 = fornberg_weights(0.0, &radii[..5], 1);
        Ok(Self { radii, stencils, origin_d1: core::array::from_fn(|j| w0[1][j]) })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Index of the last node.
    pub fn last(&self) -> usize {
        self.radii.len() - 1
    }

    fn derivs(&self, i: usize, w: &[f64]) -> (f64, f64) {
        let s = &self.stencils[i];
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for j in 0..5 {
            d1 += s.d1[j] * w[s.idx[j]];
            d2 += s.d2[j] * w[s.idx[j]];
        }
        (d1, d2)
    }

    /// `(w', w'')` at node `i` (symmetric stencil at the origin).
    pub fn derivatives(&self, i: usize, w: &[f64]) -> (f64, f64) {
        self.derivs(i, w)
    }
}

/// `w = u^{-2/(n-2)}` nodewise.
pub fn to_conformal(n: usize, u: &[f64]) -> Result<Vec<f64>> {
    let e = -2.0 / (n as f64 - 2.0);
    u.iter()
        .map(|v| if *v > 0.0 && v.is_finite() { Ok(pow(*v, e)) } else { Err(Error::NonpositiveValue(*v)) })
        .collect()
}

/// `u = w^{-(n-2)/2}` nodewise.
pub fn from_conformal(n: usize, w: &[f64]) -> Vec<f64> {
    let e = -(n as f64 - 2.0) / 2.0;
    w.iter().map(|v| pow(*v, e)).collect()
}

/// Radial and tangential Schouten eigenvalues at node `i`.
pub fn node_eigenvalues(grid: &RadialGrid, w: &[f64], i: usize) -> (f64, f64) {
    let (d1, d2) = grid.derivs(i, w);
    let r = grid.radii[i];
    let tan_deriv = if i == 0 { d2 } else { d1 / r };
    (w[i] * d2 - 0.5 * d1 * d1, w[i] * tan_deriv - 0.5 * d1 * d1)
}

fn far_field_row(grid: &RadialGrid, w: &[f64], c: f64, n: usize) -> (f64, f64) {
    let m = grid.last();
    let r = &grid.radii;
    let scale = pow(c, 2.0 / (n as f64 - 2.0)) / (r[m] * r[m] - r[m - 1] * r[m - 1]);
    (scale * (w[m] - w[m - 1]) - 1.0, scale)
}

/// Residual of the discrete system in the conformal variable `w`.
pub fn residual_w(spec: &CurvatureSpec, grid: &RadialGrid, w: &[f64], c: f64) -> Result<Vec<f64>> {
    let n = spec.dim();
    let m = grid.last();
    if w.len() != m + 1 {
        return Err(Error::DimensionMismatch { expected: m + 1, got: w.len() });
    }
    if let Some(v) = w.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::NonpositiveValue(*v));
    }
    let mut out = vec![0.0; m + 1];
    let r1 = grid.radii[1];
    out[0] = r1 / w[0] * (0..5).map(|j| grid.origin_d1[j] * w[j]).sum::<f64>();
    let mut bad = Vec::new();
    for i in 1..m {
        let (rad, tan) = node_eigenvalues(grid, w, i);
        match spec.eval(&radial_eigenvalues(n, rad, tan)) {
            Ok(f) => out[i] = f - 1.0,
            Err(_) => bad.push(i),
        }
    }
    if !bad.is_empty() {
        return Err(Error::ConeViolationAt { nodes: bad });
    }
    out[m] = far_field_row(grid, w, c, n).0;
    Ok(out)
}

/// Residual of the discrete system for nodal values `u`.
pub fn residual(spec: &CurvatureSpec, grid: &RadialGrid, u: &[f64], c: f64) -> Result<Vec<f64>> {
    residual_w(spec, grid, &to_conformal(spec.dim(), u)?, c)
}

/// Analytic Jacobian of [`residual_w`].
pub fn jacobian_w(spec: &CurvatureSpec, grid: &RadialGrid, w: &[f64], c: f64) -> Result<BandMatrix> {
    let n = spec.dim();
    let m = grid.last();
    let mut jac = BandMatrix::zeros(m + 1, 3, 4);
    let r1 = grid.radii[1];
    let s0: f64 = (0..5).map(|j| grid.origin_d1[j] * w[j]).sum();
    for j in 0..5 {
        jac.add(0, j, r1 / w[0] * grid.origin_d1[j]);
    }
    jac.add(0, 0, -r1 * s0 / (w[0] * w[0]));
    let mut bad = Vec::new();
    for i in 1..m {
        let (d1, d2) = grid.derivs(i, w);
        let r = grid.radii[i];
        let lam = radial_eigenvalues(n, w[i] * d2 - 0.5 * d1 * d1, w[i] * d1 / r - 0.5 * d1 * d1);
        let g = match spec.gradient(&lam) {
            Ok(g) => g,
            Err(_) => {
                bad.push(i);
                continue;
            }
        };
        let g_rad = g[0];
        let g_tan: f64 = g[1..].iter().sum();
        let st = &grid.stencils[i];
        jac.add(i, i, g_rad * d2 + g_tan * d1 / r);
        for j in 0..5 {
            let col = st.idx[j];
            let v = g_rad * (w[i] * st.d2[j] - d1 * st.d1[j]) + g_tan * (w[i] * st.d1[j] / r - d1 * st.d1[j]);
            jac.add(i, col, v);
        }
    }
    if !bad.is_empty() {
        return Err(Error::ConeViolationAt { nodes: bad });
    }
    let (_, scale) = far_field_row(grid, w, c, n);
    jac.add(m, m, scale);
    jac.add(m, m - 1, -scale);
    Ok(jac)
}

/// Jacobian of [`residual`] with respect to the nodal values `u`.
pub fn linearized_operator(spec: &CurvatureSpec, grid: &RadialGrid, u: &[f64], c: f64) -> Result<BandMatrix> {
    let n = spec.dim();
    let w = to_conformal(n, u)?;
    let jw = jacobian_w(spec, grid, &w, c)?;
    let e = -2.0 / (n as f64 - 2.0);
    let m = grid.last();
    let mut ju = BandMatrix::zeros(m + 1, 3, 4);
    for i in 0..=m {
        for j in i.saturating_sub(3)..=(i + 4).min(m) {
            let v = jw.get(i, j);
            if v != 0.0 {
                ju.add(i, j, v * e * w[j] / u[j]);
            }
        }
    }
    Ok(ju)
}

/// Coefficient of `u''` in the linearization at each interior node:
/// `-(2/(n-2)) u^{-(n+2)/(n-2)} df/dlambda_rad`.
pub fn principal_coefficients(spec: &CurvatureSpec, grid: &RadialGrid, u: &[f64]) -> Result<Vec<f64>> {
    let n = spec.dim();
    let w = to_conformal(n, u)?;
    let d = n as f64 - 2.0;
    (1..grid.last())
        .map(|i| {
            let (rad, tan) = node_eigenvalues(grid, &w, i);
            let g = spec.gradient(&radial_eigenvalues(n, rad, tan))?;
            Ok(-2.0 / d * pow(u[i], -(n as f64 + 2.0) / d) * g[0])
        })
        .collect()
}

/// A certified radial solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSolution {
    pub spec: CurvatureSpec,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub residual_norm: f64,
    pub t: f64,
    pub cone_certificate: Vec<bool>,
    pub iterations: usize,
}

impl RadialSolution {
    pub fn n(&self) -> usize {
        self.spec.dim()
    }

    /// Interpolating field on the ball of radius `r_M`.
    pub fn to_table(&self) -> Result<RadialTable> {
        RadialTable::new(self.n(), self.radii.clone(), self.values.clone())
    }

    /// Bubble parameters read off the solution: `a = u(0)` and
    /// `s^2 = (w_M / w_0 - 1) / r_M^2`.
    pub fn fitted_bubble(&self) -> BubbleParams {
        let n = self.n();
        let m = self.radii.len() - 1;
        let w0 = pow(self.values[0], -2.0 / (n as f64 - 2.0));
        let wm = pow(self.values[m], -2.0 / (n as f64 - 2.0));
        let s = sqrt((wm / w0 - 1.0) / (self.radii[m] * self.radii[m]));
        BubbleParams { a: self.values[0], s, center: vec![0.0; n] }
    }

    /// `(sup u)(sup u^{-1})` over the nodes.
    pub fn oscillation(&self) -> f64 {
        let max = self.values.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.values.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    /// Relative sup-norm distance to a bubble sampled on the same radii.
    pub fn distance_to(&self, b: &BubbleParams) -> f64 {
        self.radii
            .iter()
            .zip(&self.values)
            .map(|(r, u)| {
                let e = b.value_at_radius(*r);
                fabs(u - e) / e
            })
            .fold(0.0, f64::max)
    }

    /// Per-node rows `(r, u, lambda_rad, lambda_tan, f - 1)`; `f - 1` is
    /// empty where `lambda` falls outside the cone.
    pub fn node_table(&self) -> Result<Vec<(f64, f64, f64, f64, Option<f64>)>> {
        let n = self.n();
        let grid = RadialGrid::from_radii(self.radii.clone())?;
        let w = to_conformal(n, &self.values)?;
        Ok((0..=grid.last())
            .map(|i| {
                let (rad, tan) = node_eigenvalues(&grid, &w, i);
                let res = self.spec.eval(&radial_eigenvalues(n, rad, tan)).ok().map(|f| f - 1.0);
                (self.radii[i], self.values[i], rad, tan, res)
            })
            .collect())
    }

    /// CSV export with header `r,u,lambda_rad,lambda_tan,f_residual`.
    pub fn to_csv(&self) -> Result<String> {
        let mut s = String::from("r,u,lambda_rad,lambda_tan,f_residual\n");
        for (r, u, rad, tan, res) in self.node_table()? {
            let res = res.map(|x| alloc::format!("{x:e}")).unwrap_or_default();
            let _ = writeln!(s, "{r:e},{u:e},{rad:e},{tan:e},{res}");
        }
        Ok(s)
    }
}

/// Independent post-hoc check of a solution's invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionCheck {
    pub positive: bool,
    pub cone_at_all_nodes: bool,
    pub residual_norm: f64,
    pub tail_slope: f64,
    pub pass: bool,
}

/// Re-derives residual, positivity, cone membership and tail slope from the
/// stored radii and values alone.
pub fn check_solution(sol: &RadialSolution, config: &SolverConfig) -> Result<SolutionCheck> {
    let n = sol.n();
    let grid = RadialGrid::from_radii(sol.radii.clone())?;
    let positive = sol.values.iter().all(|v| *v > 0.0);
    if !positive {
        return Ok(SolutionCheck {
            positive,
            cone_at_all_nodes: false,
            residual_norm: f64::INFINITY,
            tail_slope: f64::NAN,
            pass: false,
        });
    }
    let w = to_conformal(n, &sol.values)?;
    let cone = cone_certificate(&sol.spec, &grid, &w);
    let residual_norm =
        residual_w(&sol.spec, &grid, &w, config.far_field_constant).map(|r| sup_norm(&r)).unwrap_or(f64::INFINITY);
    let slope = tail_slope(&grid, &w, n);
    let expected = 2.0 - n as f64;
    let pass = cone.iter().all(|c| *c)
        && residual_norm <= config.newton_tol
        && fabs(slope - expected) <= config.tail_tolerance * fabs(expected);
    Ok(SolutionCheck { positive, cone_at_all_nodes: cone.iter().all(|c| *c), residual_norm, tail_slope: slope, pass })
}

fn cone_certificate(spec: &CurvatureSpec, grid: &RadialGrid, w: &[f64]) -> Vec<bool> {
    let n = spec.dim();
    (0..=grid.last())
        .map(|i| {
            let (rad, tan) = node_eigenvalues(grid, w, i);
            spec.in_cone(&radial_eigenvalues(n, rad, tan))
        })
        .collect()
}

/// `r u'/u = -(n-2)/2 * r w'/w` at the last node.
fn tail_slope(grid: &RadialGrid, w: &[f64], n: usize) -> f64 {
    let m = grid.last();
    let (d1, _) = grid.derivs(m, w);
    -(n as f64 - 2.0) / 2.0 * grid.radii[m] * d1 / w[m]
}

/// Grid used by the solver for `spec` under `config`.
pub fn solver_grid(spec: &CurvatureSpec, config: &SolverConfig) -> Result<RadialGrid> {
    config.validate()?;
    let scale = config.grid.scale.unwrap_or_else(|| 1.0 / gauge_scale(&spec.base(), config.far_field_constant));
    RadialGrid::graded(config.grid.points, config.grid.r_max, scale)
}

/// Damped Newton iteration from nodal values `initial` on `grid`.
pub fn newton_solve_on(
    spec: &CurvatureSpec,
    grid: &RadialGrid,
    initial: &[f64],
    config: &SolverConfig,
) -> Result<RadialSolution> {
    config.validate()?;
    let n = spec.dim();
    let c = config.far_field_constant;
    let mut w = to_conformal(n, initial)?;
    let mut res = match residual_w(spec, grid, &w, c) {
        Ok(r) => r,
        Err(Error::ConeViolationAt { nodes }) => return Err(Error::ConeExit { nodes }),
        Err(e) => return Err(e),
    };
    let mut norm = sup_norm(&res);
    let mut iterations = 0;
    while norm > config.newton_tol {
        if iterations == config.max_newton {
            return Err(Error::MaxIter { iterations, residual: norm });
        }
        let jac = jacobian_w(spec, grid, &w, c)?;
        let neg: Vec<f64> = res.iter().map(|x| -x).collect();
        let step = jac.solve(&neg)?;
        let mut theta = 1.0;
        let mut accepted = None;
        let mut offending = Vec::new();
        for _ in 0..=config.damping.max_halvings {
            let trial: Vec<f64> = w.iter().zip(&step).map(|(a, d)| a + theta * d).collect();
            if let Some(i) = trial.iter().position(|v| !(*v > 0.0)) {
                offending = vec![i];
            } else {
                match residual_w(spec, grid, &trial, c) {
                    Ok(r) => {
                        let nr = sup_norm(&r);
                        if nr < norm {
                            accepted = Some((trial, r, nr));
                            break;
                        }
                    }
                    Err(Error::ConeViolationAt { nodes }) => offending = nodes,
                    Err(e) => return Err(e),
                }
            }
            theta *= config.damping.factor;
        }
        let Some((trial, r, nr)) = accepted else {
            return Err(Error::ConeExit { nodes: offending });
        };
        w = trial;
        res = r;
        norm = nr;
        iterations += 1;
    }
    let slope = tail_slope(grid, &w, n);
    let expected = 2.0 - n as f64;
    if fabs(slope - expected) > config.tail_tolerance * fabs(expected) {
        return Err(Error::TailCondition { slope, expected });
    }
    let cone_certificate = cone_certificate(spec, grid, &w);
    if let Some(i) = cone_certificate.iter().position(|c| !c) {
        return Err(Error::ConeExit { nodes: vec![i] });
    }
    Ok(RadialSolution {
        spec: *spec,
        radii: grid.radii.clone(),
        values: from_conformal(n, &w),
        residual_norm: norm,
        t: spec.t(),
        cone_certificate,
        iterations,
    })
}

/// [`newton_solve_on`] with the grid prescribed by `config`.
pub fn newton_solve(spec: &CurvatureSpec, initial: &[f64], config: &SolverConfig) -> Result<RadialSolution> {
    let grid = solver_grid(spec, config)?;
    newton_solve_on(spec, &grid, initial, config)
}

/// Nodal values of the gauge bubble times `scale` on the solver grid, the
/// default starting guess of [`newton_solve`].
pub fn gauge_initial_guess(spec: &CurvatureSpec, config: &SolverConfig, scale: f64) -> Result<Vec<f64>> {
    let grid = solver_grid(spec, config)?;
    let b = gauge_bubble(spec, config.far_field_constant);
    Ok(grid.radii.iter().map(|r| scale * b.value_at_radius(*r)).collect())
}

/// One accepted point of a continuation path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub iterations: usize,
    pub oscillation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationPath {
    pub points: Vec<PathPoint>,
    /// Certified solution of the base equation at `t = 1`.
    pub solution: RadialSolution,
}

impl ContinuationPath {
    /// Number of accepted steps after the start at `t = 0`.
    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// `max_t (sup u)(sup u^{-1}) / ((sup u)(sup u^{-1}) at t = 0)`.
    pub fn oscillation_growth(&self) -> f64 {
        let first = self.points[0].oscillation;
        self.points.iter().map(|p| p.oscillation / first).fold(0.0, f64::max)
    }
}

/// Follows `f_t` from the semilinear case `t = 0`, whose bubble solution is
/// known in closed form, to `t = 1`.
pub fn continuation_solve(base: &CurvatureSpec, config: &SolverConfig) -> Result<ContinuationPath> {
    let base = base.base();
    let grid = solver_grid(&base, config)?;
    let c = config.far_field_constant;
    let start_spec = base.at_t(0.0)?;
    let b0 = gauge_bubble(&start_spec, c);
    let init: Vec<f64> = grid.radii.iter().map(|r| b0.value_at_radius(*r)).collect();
    let mut current = newton_solve_on(&start_spec, &grid, &init, config)
        .map_err(|e| Error::AtHomotopyParameter { t: 0.0, source: Box::new(e) })?;
    let mut points = vec![PathPoint { t: 0.0, iterations: current.iterations, oscillation: current.oscillation() }];
    let mut t = 0.0;
    let mut dt = config.continuation.initial_dt;
    while t < 1.0 {
        let t_next = if t + dt >= 1.0 - 1e-12 { 1.0 } else { t + dt };
        let spec_t = base.at_t(t_next)?;
        match newton_solve_on(&spec_t, &grid, &current.values, config) {
            Ok(sol) => {
                t = t_next;
                points.push(PathPoint { t, iterations: sol.iterations, oscillation: sol.oscillation() });
                current = sol;
                dt = (dt * 2.0).min(config.continuation.initial_dt);
            }
            Err(e) => {
                dt *= 0.5;
                if dt < config.continuation.min_dt {
                    return Err(Error::AtHomotopyParameter {
                        t: t_next,
                        source: Box::new(match e {
                            Error::TailCondition { .. } => e,
                            _ => Error::ContinuationStall { t },
                        }),
                    });
                }
            }
        }
    }
    current.spec = base;
    current.t = 1.0;
    Ok(ContinuationPath { points, solution: current })
}
