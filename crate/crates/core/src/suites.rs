//! Randomized property suites run by `verify`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;
use libm::fabs;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{certify_delta_matrix, gradient_bound_check, touching_comparison, Lemma2Options};
use crate::conformal::schouten_flat;
use crate::curvature::{
    boundary_reach, compute_delta1, concavity_probe, fd_hessian, sample_cone_interior, CurvatureSpec, Delta1Options,
    EigenvalueVector,
};
use crate::error::{Error, Result};
use crate::field::{AnalyticField, BubbleParams, Kelvin, MoebiusParams, ScalarField};
use crate::sampling::{self, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Invariance,
    Lemma2,
    Touching,
    Duality,
    Concavity,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Invariance, Suite::Lemma2, Suite::Touching, Suite::Duality, Suite::Concavity];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Invariance => "invariance",
            Suite::Lemma2 => "lemma2",
            Suite::Touching => "touching",
            Suite::Duality => "duality",
            Suite::Concavity => "concavity",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "invariance" => Suite::Invariance,
            "lemma2" => Suite::Lemma2,
            "touching" => Suite::Touching,
            "duality" => Suite::Duality,
            "concavity" => Suite::Concavity,
            "all" => Suite::All,
            _ => return Err(Error::InvalidParameter("unknown suite")),
        })
    }
}

/// Sample sizes for the suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Random fields in the invariance suite.
    pub fields: usize,
    /// Moebius parameters per field.
    pub moebius: usize,
    /// Sample points per (field, Moebius) pair.
    pub points: usize,
    pub certified_fields: usize,
    pub violators: usize,
    pub touching_cases: usize,
    /// Probes per spec in the concavity suite.
    pub concavity_points: usize,
    /// Largest dimension for the duality and concavity suites.
    pub max_dim: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            fields: 100,
            moebius: 10,
            points: 100,
            certified_fields: 50,
            violators: 10,
            touching_cases: 1000,
            concavity_points: 10_000,
            max_dim: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SuiteCheck {
    fn new(name: impl Into<String>, cases: usize, failures: usize, worst: f64, tolerance: f64) -> Self {
        Self { name: name.into(), cases, failures, worst, tolerance, pass: failures == 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<SuiteCheck>,
    pub pass: bool,
}

impl SuiteReport {
    fn from_checks(suite: Suite, checks: Vec<SuiteCheck>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { suite: suite.name().to_string(), checks, pass }
    }
}

/// Runs one suite, or every suite for [`Suite::All`].
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    match suite {
        Suite::Invariance => invariance_suite(opts),
        Suite::Lemma2 => lemma2_suite(opts),
        Suite::Touching => touching_suite(opts),
        Suite::Duality => duality_suite(opts),
        Suite::Concavity => concavity_suite(opts),
        Suite::All => {
            let mut checks = Vec::new();
            for s in Suite::ALL {
                let r = run_suite(s, opts)?;
                for mut c in r.checks {
                    c.name = format!("{}.{}", r.suite, c.name);
                    checks.push(c);
                }
            }
            Ok(SuiteReport::from_checks(Suite::All, checks))
        }
    }
}

fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// A positive sum of one to three bubbles with scales in `[s_lo, s_hi]`.
pub fn random_bubble_sum(rng: &mut SeededRng, n: usize, s_lo: f64, s_hi: f64, spread: f64) -> AnalyticField {
    let terms = rng.gen_range(1..=3);
    let terms = (0..terms)
        .map(|_| {
            let center = sampling::in_ball(rng, &vec![0.0; n], spread);
            BubbleParams::new(uniform(rng, 0.5, 2.0), uniform(rng, s_lo, s_hi), center).expect("valid bubble")
        })
        .collect();
    AnalyticField::BubbleSum { terms, offset: 0.0 }
}

fn max_scale(u: &AnalyticField) -> f64 {
    match u {
        AnalyticField::BubbleSum { terms, .. } => terms.iter().map(|b| b.s).fold(0.0, f64::max),
        AnalyticField::Bubble(b) => b.s,
        _ => 0.0,
    }
}

/// Largest eigenvalue discrepancy between `A` of the Kelvin transform at `y`
/// and `A` of `u` at the inverted point, relative to the spectrum size.
pub fn covariance_error(u: &dyn ScalarField, m: &MoebiusParams, y: &[f64]) -> Result<f64> {
    let k = Kelvin { inner: u, params: m.clone() };
    let lhs = schouten_flat(&k, y)?.eigenvalues();
    let rhs = schouten_flat(u, &m.invert(y)?)?.eigenvalues();
    let scale = rhs.iter().fold(0.0f64, |acc, x| acc.max(fabs(*x))).max(f64::MIN_POSITIVE);
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| fabs(a - b)).fold(0.0, f64::max) / scale)
}

fn invariance_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    const TOL: f64 = 1e-8;
    let mut rng = sampling::rng(opts.seed);
    let mut cases = 0;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for f in 0..opts.fields {
        let n = 3 + f % 3;
        let u = random_bubble_sum(&mut rng, n, 0.5, 2.0, 1.0);
        for _ in 0..opts.moebius {
            let center = sampling::in_ball(&mut rng, &vec![0.0; n], 1.5);
            let m = MoebiusParams::new(center, uniform(&mut rng, 0.5, 2.0))?;
            for _ in 0..opts.points {
                let y = loop {
                    let y = sampling::in_ball(&mut rng, &vec![0.0; n], 3.0);
                    if crate::field::dist(&y, &m.center) > 0.05 {
                        break y;
                    }
                };
                let e = covariance_error(&u, &m, &y)?;
                cases += 1;
                worst = worst.max(e);
                if !(e <= TOL) {
                    failures += 1;
                }
            }
        }
    }
    Ok(SuiteReport::from_checks(
        Suite::Invariance,
        vec![SuiteCheck::new("kelvin_covariance", cases, failures, worst, TOL)],
    ))
}

/// A field accepted by the gradient-lemma hypothesis at scale `a`, for index `i`.
fn certified_field(rng: &mut SeededRng, i: usize) -> (AnalyticField, f64) {
    let n = 3 + i % 3;
    let u = match i % 5 {
        0 => AnalyticField::Constant { n, value: uniform(rng, 0.5, 2.0) },
        _ => {
            let mut u = random_bubble_sum(rng, n, 0.3, 3.0, 0.5);
            if let AnalyticField::BubbleSum { offset, .. } = &mut u {
                if i % 2 == 0 {
                    *offset = uniform(rng, 0.0, 1.0);
                }
            }
            u
        }
    };
    let s = max_scale(&u);
    let a = if s > 0.0 { uniform(rng, 0.3, 0.9) / (2.0 * s) } else { uniform(rng, 0.2, 2.0) };
    (u, a)
}

/// An exponential whose gradient ratio is twice the lemma's bound.
fn violator(rng: &mut SeededRng, i: usize) -> (AnalyticField, f64) {
    let n = 3 + i % 3;
    let a = uniform(rng, 0.2, 1.0);
    let dir = sampling::unit_vector(rng, n);
    let k = 2.0 * (n as f64 - 2.0) / a;
    (AnalyticField::Exponential { amplitude: uniform(rng, 0.5, 2.0), rate: dir.iter().map(|d| k * d).collect() }, a)
}

fn lemma2_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut rng = sampling::rng(opts.seed ^ 0x1e);
    let lopts = Lemma2Options { seed: opts.seed, ..Lemma2Options::default() };
    let mut uncertified = 0;
    let mut unsound = 0;
    let mut worst_ratio: f64 = 0.0;
    for i in 0..opts.certified_fields {
        let (u, a) = certified_field(&mut rng, i);
        let rep = gradient_bound_check(&u, a, &vec![0.0; u.dim()], &lopts)?;
        if !rep.hypothesis_holds {
            uncertified += 1;
        } else if !rep.conclusion_holds {
            unsound += 1;
        }
        worst_ratio = worst_ratio.max(rep.worst_conclusion_ratio);
    }
    let mut accepted = 0;
    let mut worst_margin = f64::INFINITY;
    for i in 0..opts.violators {
        let (u, a) = violator(&mut rng, i);
        let rep = gradient_bound_check(&u, a, &vec![0.0; u.dim()], &lopts)?;
        if rep.hypothesis_holds {
            accepted += 1;
        }
        worst_margin = worst_margin.min(rep.worst_hypothesis_margin);
    }
    Ok(SuiteReport::from_checks(
        Suite::Lemma2,
        vec![
            SuiteCheck::new("certified_fields_accepted", opts.certified_fields, uncertified, worst_ratio, 1.0),
            SuiteCheck::new("conclusion_on_certified", opts.certified_fields, unsound, worst_ratio, 1.0),
            SuiteCheck::new("violators_rejected", opts.violators, accepted, worst_margin, 0.0),
        ],
    ))
}

fn touching_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    const TOL: f64 = 1e-9;
    let mut rng = sampling::rng(opts.seed ^ 0x70);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..opts.touching_cases {
        let n = 3 + i % 3;
        let u = random_bubble_sum(&mut rng, n, 0.3, 2.0, 1.0);
        let p = sampling::in_ball(&mut rng, &vec![0.0; n], 1.5);
        // keep xi positive near p
        let c = uniform(&mut rng, 1e-3, 1.0) * u.value(&p)?;
        let xi = u.clone().minus_quadratic(c, p.clone());
        let rep = touching_comparison(&u, &xi, &p, TOL)?;
        worst = worst.max(rep.max_eigenvalue_difference);
        if !rep.holds {
            failures += 1;
        }
    }
    Ok(SuiteReport::from_checks(
        Suite::Touching,
        vec![SuiteCheck::new("minus_quadratic", opts.touching_cases, failures, worst, TOL)],
    ))
}

/// Every sigma_k spec with `3 <= n <= max_dim`.
pub fn builtin_specs(max_dim: usize) -> Vec<CurvatureSpec> {
    let mut out = Vec::new();
    for n in 3..=max_dim {
        for k in 1..=n {
            out.push(CurvatureSpec::sigma_k(n, k).expect("valid spec"));
        }
    }
    out
}

fn duality_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    const TOL: f64 = 1e-8;
    let d1 = Delta1Options { seed: opts.seed, ..Delta1Options::default() };
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    let specs = builtin_specs(opts.max_dim);
    for spec in &specs {
        let dm = certify_delta_matrix(spec, 1e-12).delta;
        let e = fabs(dm / compute_delta1(spec, &d1) - 1.0);
        worst = worst.max(e);
        if !(e <= TOL) {
            failures += 1;
        }
    }
    Ok(SuiteReport::from_checks(
        Suite::Duality,
        vec![SuiteCheck::new("delta_matrix_equals_delta1", specs.len(), failures, worst, TOL)],
    ))
}

/// Relative boundary reach below which the specified finite-difference step
/// is no longer accurate to the probe tolerance.
pub const FD_STABLE_REACH: f64 = 0.4;

fn concavity_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    const TOL: f64 = 1e-6;
    let mut rng = sampling::rng(opts.seed ^ 0xc0);
    let mut specs = builtin_specs(opts.max_dim);
    for n in 3..=opts.max_dim {
        for t in [0.25, 0.5, 0.75] {
            specs.push(CurvatureSpec::homotopy(n, 2, t)?);
        }
    }
    let cases = specs.len() * opts.concavity_points;
    let (mut fd_fail, mut an_fail, mut mono_fail) = (0, 0, 0);
    let (mut fd_worst, mut an_worst, mut mono_worst) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for spec in &specs {
        for _ in 0..opts.concavity_points {
            // anywhere in the cone, down to 1e-3 of the reference value
            let lambda = sample_cone_interior(spec, &mut rng, 1e-3);
            let top = spec.hessian(&lambda)?.max_eigenvalue();
            an_worst = an_worst.max(top);
            if top > TOL {
                an_fail += 1;
            }
            let gmin = spec.gradient(&lambda)?.into_iter().fold(f64::INFINITY, f64::min);
            mono_worst = mono_worst.min(gmin);
            if gmin < -TOL {
                mono_fail += 1;
            }
            // finite differences only where the step resolves the curvature
            let lambda = loop {
                let l = sample_cone_interior(spec, &mut rng, 1e-3);
                if boundary_reach(spec, &l)? >= FD_STABLE_REACH {
                    break l;
                }
            };
            fd_worst = fd_worst.max(fd_hessian(spec, &lambda)?.max_eigenvalue());
            if !concavity_probe(spec, &EigenvalueVector::new(lambda)?, TOL)? {
                fd_fail += 1;
            }
        }
    }
    Ok(SuiteReport::from_checks(
        Suite::Concavity,
        vec![
            SuiteCheck::new("concavity_fd", cases, fd_fail, fd_worst, TOL),
            SuiteCheck::new("concavity_analytic", cases, an_fail, an_worst, TOL),
            SuiteCheck::new("monotonicity", cases, mono_fail, mono_worst, TOL),
        ],
    ))
}
