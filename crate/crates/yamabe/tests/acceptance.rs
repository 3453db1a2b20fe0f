//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::process::Command;
use std::time::Instant;

use rand::Rng;
use yamabe_core::analysis::{certify_delta_matrix, harnack_audit, harnack_slope, AuditOptions};
use yamabe_core::conformal::{bubble_exact, radial_schouten, schouten_flat};
use yamabe_core::curvature::{compute_delta1, CurvatureSpec, Delta1Options};
use yamabe_core::field::{AnalyticField, BubbleParams};
use yamabe_core::radial::{continuation_solve, gauge_bubble, gauge_scale, newton_solve, solver_grid, SolverConfig};
use yamabe_core::sampling;
use yamabe_core::suites::{builtin_specs, run_suite, Suite, SuiteOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn conformal_covariance() -> Outcome {
    let start = Instant::now();
    let rep = run_suite(Suite::Invariance, &SuiteOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let c = &rep.checks[0];
    outcome(rep.pass && secs < 60.0, format!("{} cases, worst relative error {:.1e}, {secs:.1} s", c.cases, c.worst))
}

fn bubble_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = sampling::rng(11);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 3..=5 {
        for k in 1..=n {
            let spec = CurvatureSpec::sigma_k(n, k).unwrap();
            let s = rng.gen_range(0.5..4.0);
            let center = sampling::in_ball(&mut rng, &vec![0.0; n], 1.0);
            let u = AnalyticField::Bubble(bubble_exact(&spec, s, center).unwrap());
            for _ in 0..1000 {
                let p = sampling::in_ball(&mut rng, &vec![0.0; n], 5.0);
                let f = spec.eval(&schouten_flat(&u, &p).unwrap().eigenvalues()).unwrap();
                worst = worst.max((f - 1.0).abs());
                cases += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-9 && secs < 30.0, format!("{cases} points, max |f - 1| = {worst:.1e}, {secs:.2} s"))
}

/// Closed-form `(u, u', u'')` of `offset + sum a (1 + s^2 r^2)^{-(n-2)/2}`.
fn radial_profile(n: usize, terms: &[(f64, f64)], offset: f64, r: f64) -> (f64, f64, f64) {
    let m = n as f64 - 2.0;
    let mut out = (offset, 0.0, 0.0);
    for (a, s) in terms {
        let s2 = s * s;
        let q: f64 = 1.0 + s2 * r * r;
        out.0 += a * q.powf(-m / 2.0);
        out.1 += -m * a * s2 * r * q.powf(-(m + 2.0) / 2.0);
        out.2 +=
            -m * a * s2 * q.powf(-(m + 2.0) / 2.0) + m * (m + 2.0) * a * s2 * s2 * r * r * q.powf(-(m + 4.0) / 2.0);
    }
    out
}

fn radial_reduction() -> Outcome {
    let mut rng = sampling::rng(12);
    let mut worst: f64 = 0.0;
    for field in 0..20 {
        let n = 3 + field % 3;
        let count = rng.gen_range(1..=3);
        let terms: Vec<(f64, f64)> = (0..count).map(|_| (rng.gen_range(0.5..2.0), rng.gen_range(0.3..3.0))).collect();
        let offset = if field % 2 == 0 { 0.0 } else { rng.gen_range(0.0..0.5) };
        let u = AnalyticField::BubbleSum {
            terms: terms.iter().map(|(a, s)| BubbleParams::new(*a, *s, vec![0.0; n]).unwrap()).collect(),
            offset,
        };
        for _ in 0..100 {
            let r = rng.gen_range(0.01..6.0);
            let dir = sampling::unit_vector(&mut rng, n);
            let p: Vec<f64> = dir.iter().map(|d| r * d).collect();
            let full = schouten_flat(&u, &p).unwrap().eigenvalues();
            let (uu, up, upp) = radial_profile(n, &terms, offset, r);
            let (rad, tan) = radial_schouten(n, r, uu, up, upp).unwrap();
            let mut reduced = vec![tan; n];
            reduced[0] = rad;
            reduced.sort_by(f64::total_cmp);
            let scale = full.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let err = full.iter().zip(&reduced).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            worst = worst.max(err);
        }
    }
    outcome(worst <= 1e-10, format!("2000 points, worst relative eigenvalue gap {worst:.1e}"))
}

fn solver_recovery() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, k) in [(3, 1), (3, 2), (4, 2), (4, 3)] {
        let spec = CurvatureSpec::sigma_k(n, k).unwrap();
        let grid = solver_grid(&spec, &cfg).unwrap();
        let exact = bubble_exact(&spec, gauge_scale(&spec, cfg.far_field_constant), vec![0.0; n]).unwrap();
        let init: Vec<f64> = grid.radii().iter().map(|r| 1.01 * exact.value_at_radius(*r)).collect();
        match newton_solve(&spec, &init, &cfg) {
            Ok(sol) => {
                let dist = sol.distance_to(&exact);
                pass &= sol.iterations <= 5 && sol.residual_norm <= 1e-10 && dist <= 1e-6;
                parts
                    .push(format!("({n},{k}) {} it, res {:.0e}, dist {:.0e}", sol.iterations, sol.residual_norm, dist));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({n},{k}) {e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(pass && secs < 120.0, format!("{}; {secs:.2} s", parts.join("; ")))
}

fn continuation() -> Outcome {
    let cfg = SolverConfig::default();
    let spec = CurvatureSpec::sigma_k(4, 2).unwrap();
    match continuation_solve(&spec, &cfg) {
        Ok(path) => {
            let dist = path.solution.distance_to(&gauge_bubble(&spec, cfg.far_field_constant));
            let growth = path.oscillation_growth();
            let t_end = path.points.last().unwrap().t;
            outcome(
                path.steps() <= 50 && t_end == 1.0 && dist <= 1e-6 && growth <= 10.0,
                format!("{} steps, distance {dist:.1e}, oscillation growth {growth:.3}", path.steps()),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn harnack() -> Outcome {
    let opts = AuditOptions { samples: 20_000, ..AuditOptions::default() };
    let radii = [0.5, 1.0, 2.0, 4.0];
    let mut bound_failures = 0;
    let mut slope_misses = Vec::new();
    let mut min_margin = f64::INFINITY;
    for n in 3..=5 {
        let spec = CurvatureSpec::sigma_k(n, 1).unwrap();
        let delta = certify_delta_matrix(&spec, 1e-12).delta;
        for s in [1.0, 10.0, 100.0, 1000.0] {
            let u = AnalyticField::Bubble(bubble_exact(&spec, s, vec![0.0; n]).unwrap());
            for r in radii {
                let rep = harnack_audit(&u, r, delta, n, &opts).unwrap();
                min_margin = min_margin.min((rep.bound / rep.product).log10());
                if !rep.pass {
                    bound_failures += 1;
                }
            }
            let slope = harnack_slope(&u, &radii, delta, &opts).unwrap();
            if !slope.within(0.01) {
                slope_misses.push(format!("n={n} s={s}: {:.4} vs {}", slope.slope, slope.expected));
            }
        }
    }
    outcome(
        bound_failures == 0 && slope_misses.is_empty(),
        format!(
            "bound failures {bound_failures}/48 (smallest margin {min_margin:.1} decades); slope misses {}/12 [{}]",
            slope_misses.len(),
            slope_misses.join("; ")
        ),
    )
}

fn gradient_lemma() -> Outcome {
    let rep = run_suite(Suite::Lemma2, &SuiteOptions::default()).unwrap();
    let detail = rep
        .checks
        .iter()
        .map(|c| format!("{} {}/{} failures", c.name, c.failures, c.cases))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(rep.pass, detail)
}

fn duality() -> Outcome {
    let d1 = Delta1Options::default();
    let mut worst_product: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for spec in builtin_specs(6) {
        let dm = certify_delta_matrix(&spec, 1e-12).delta;
        let d = compute_delta1(&spec, &d1);
        worst_product = worst_product.max((dm * d - 1.0).abs());
        worst_ratio = worst_ratio.max((dm / d - 1.0).abs());
    }
    outcome(
        worst_product <= 1e-8,
        format!("max |delta_matrix * delta1 - 1| = {worst_product:.3e}; max |delta_matrix / delta1 - 1| = {worst_ratio:.1e}"),
    )
}

fn concavity() -> Outcome {
    let rep = run_suite(Suite::Concavity, &SuiteOptions::default()).unwrap();
    let detail = rep
        .checks
        .iter()
        .map(|c| format!("{} {}/{} failures (worst {:.1e})", c.name, c.failures, c.cases, c.worst))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(rep.pass, detail)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"seed": 7, "params": {"spec": {"kind": "sigma_k", "n": 4, "k": 2}, "initial_perturbation": 0.01}}"#,
    )
    .unwrap();
    let field = dir.path().join("bubble.json");
    std::fs::write(&field, r#"{"type": "bubble", "a": 1.0, "s": 10.0, "center": [0.0, 0.0, 0.0]}"#).unwrap();
    let bin = env!("CARGO_BIN_EXE_yamabe");
    let runs: Vec<Vec<String>> = vec![
        vec!["--config".into(), config.display().to_string(), "solve".into()],
        vec!["--seed".into(), "3".into(), "verify".into(), "duality".into()],
        vec!["--format".into(), "csv".into(), "bubble".into(), "--n".into(), "5".into(), "--k".into(), "3".into()],
        vec![
            "--seed".into(),
            "9".into(),
            "audit-harnack".into(),
            "--field".into(),
            field.display().to_string(),
            "--n".into(),
            "3".into(),
            "--samples".into(),
            "5000".into(),
        ],
    ];
    let mut identical = 0;
    let mut notes = Vec::new();
    for args in &runs {
        // the output path is part of the recorded config, so both runs share it
        let out = dir.path().join("run.out");
        let run = || {
            let _ = std::fs::remove_file(&out);
            let status = Command::new(bin).args(args).arg("--out").arg(&out).output().unwrap();
            (status.status.code(), std::fs::read(&out).unwrap_or_default())
        };
        let (c1, b1) = run();
        let (c2, b2) = run();
        if c1 == c2 && !b1.is_empty() && b1 == b2 {
            identical += 1;
        } else {
            notes.push(format!("{} differs", args.join(" ")));
        }
    }
    outcome(
        identical == runs.len(),
        format!(
            "{identical}/{} commands byte-identical{}",
            runs.len(),
            notes.iter().map(|n| format!("; {n}")).collect::<String>()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("conformal covariance", conformal_covariance),
        ("bubble exactness", bubble_exactness),
        ("radial reduction", radial_reduction),
        ("solver recovery", solver_recovery),
        ("continuation", continuation),
        ("harnack audit", harnack),
        ("gradient lemma soundness", gradient_lemma),
        ("duality identity", duality),
        ("concavity and monotonicity", concavity),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
