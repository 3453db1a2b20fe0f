use approx::assert_relative_eq;
use yamabe_core::analysis::*;
use yamabe_core::conformal::{bubble_exact, stereographic_push};
use yamabe_core::curvature::{compute_delta1, normalize_b, CurvatureSpec, Delta1Options};
use yamabe_core::field::{AnalyticField, BubbleParams, ScalarField};
use yamabe_core::radial::{gauge_bubble, newton_solve, solver_grid, SolverConfig};
use yamabe_core::sampling;

fn quick() -> AuditOptions {
    AuditOptions { samples: 20_000, ..AuditOptions::default() }
}

#[test]
fn branch_constants_rederived() {
    for n in 3..=10usize {
        let c = harnack_constant(n).unwrap();
        let nf = n as f64;
        // 8^{n-2} r^{n-2} = 2^{(n+9)(n-2)} n^{4(n-2)}
        let closed = 2f64.powf((nf + 9.0) * (nf - 2.0)) * nf.powf(4.0 * (nf - 2.0));
        assert_relative_eq!(c.main, closed, max_relative = 1e-12);
        assert!(c.low_gamma <= c.main);
        assert_eq!(c.value, c.main);
        if n > 3 {
            assert!(c.value > harnack_constant(n - 1).unwrap().value);
        }
    }
}

#[test]
fn bubble_family_passes_the_harnack_bound() {
    let spec = CurvatureSpec::sigma_k(3, 1).unwrap();
    let delta = certify_delta_matrix(&spec, 1e-12).delta;
    for s in [1.0, 10.0, 100.0, 1000.0] {
        let b = bubble_exact(&spec, s, vec![0.0; 3]).unwrap();
        let u = AnalyticField::Bubble(b.clone());
        let rep = harnack_audit(&u, 1.0, delta, 3, &quick()).unwrap();
        assert!(rep.pass);
        assert_relative_eq!(rep.product, bubble_harnack_product(&b, 1.0), max_relative = 1e-9);
    }
}

#[test]
fn product_is_invariant_under_the_scaling_reduction() {
    let b = AnalyticField::Bubble(BubbleParams::new(1.3, 2.0, vec![0.1, 0.0, -0.2, 0.05]).unwrap());
    let (r, delta) = (0.7, 2.5);
    let direct = harnack_audit(&b, r, delta, 4, &quick()).unwrap();
    let scaled = harnack_scaling(&b, r, delta);
    let reduced = harnack_audit(&scaled, 1.0, 1.0, 4, &quick()).unwrap();
    assert_relative_eq!(direct.reduced_product, reduced.product, max_relative = 1e-10);
    // pure dilation with radii rescaled
    let dil = harnack_scaling(&b, r, 1.0);
    let d = harnack_audit(&dil, 1.0, 1.0, 4, &quick()).unwrap();
    assert_relative_eq!(d.product, direct.product * r.powf(2.0), max_relative = 1e-10);
}

#[test]
fn constant_is_audited_but_not_certified() {
    let spec = CurvatureSpec::sigma_k(3, 2).unwrap();
    let u = AnalyticField::Constant { n: 3, value: 2.0 };
    let opts = AuditOptions { spec: Some(spec), ..quick() };
    let rep = harnack_audit(&u, 1.0, 1.0, 3, &opts).unwrap();
    assert_eq!(rep.product, 4.0);
    assert!(!rep.solution_certified);
    let b = AnalyticField::Bubble(bubble_exact(&spec, 1.0, vec![0.0; 3]).unwrap());
    assert!(harnack_audit(&b, 1.0, 1.0, 3, &opts).unwrap().solution_certified);
}

#[test]
fn audit_needs_the_triple_ball() {
    let u = AnalyticField::Paraboloid { beta: 1.0, radius_sq: 4.0, center: vec![0.0; 3] };
    assert_eq!(harnack_audit(&u, 1.0, 1.0, 3, &quick()).unwrap_err().code(), "DOMAIN");
}

#[test]
fn slope_regression_matches_the_closed_form() {
    // the product of a bubble is a^2 (1 + 4 s^2 R^2)^{-(n-2)/2}
    let spec = CurvatureSpec::sigma_k(3, 1).unwrap();
    let b = bubble_exact(&spec, 100.0, vec![0.0; 3]).unwrap();
    let radii = [0.5, 1.0, 2.0, 4.0];
    let rep = harnack_slope(&AnalyticField::Bubble(b.clone()), &radii, 1.0, &quick()).unwrap();
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = radii.iter().map(|r| bubble_harnack_product(&b, *r).ln()).collect();
    assert_relative_eq!(rep.slope, least_squares_slope(&xs, &ys), max_relative = 1e-8);
    assert!(rep.within(0.01));
}

#[test]
fn delta_matches_level_set_minimum() {
    for n in 3..=6 {
        for k in 1..=n {
            let spec = CurvatureSpec::sigma_k(n, k).unwrap();
            let cert = certify_delta_matrix(&spec, 1e-12);
            // the minimizer is the diagonal point b e (convex superlevel set, symmetric f)
            let expected = normalize_b(&spec) * (n as f64).sqrt();
            assert_relative_eq!(cert.delta, expected, max_relative = 1e-9);
            assert!(cert.converged_starts > 0);
        }
    }
    let s1 = CurvatureSpec::sigma_k(3, 1).unwrap();
    assert_relative_eq!(certify_delta_matrix(&s1, 1e-12).delta, 3f64.powf(-0.5), max_relative = 1e-12);
    // sigma_n^{1/n}: f(e) = 1, minimizer e
    let sn = CurvatureSpec::sigma_k(4, 4).unwrap();
    assert_relative_eq!(certify_delta_matrix(&sn, 1e-12).delta, 2.0, max_relative = 1e-12);
}

#[test]
fn delta_agrees_with_the_sphere_maximum() {
    let opts = Delta1Options { samples: 20_000, ..Delta1Options::default() };
    for (n, k) in [(3, 1), (4, 2), (5, 3)] {
        let spec = CurvatureSpec::sigma_k(n, k).unwrap();
        let d = certify_delta_matrix(&spec, 1e-12).delta;
        let d1 = compute_delta1(&spec, &opts);
        assert_relative_eq!(d / d1, 1.0, max_relative = 1e-8);
    }
}

#[test]
fn gradient_bound_on_bubbles_constants_and_violators() {
    let n = 3;
    let b = AnalyticField::Bubble(BubbleParams::new(1.0, 1.0, vec![0.0; n]).unwrap());
    let rep = gradient_bound_check(&b, 0.45, &vec![0.0; n], &Lemma2Options::default()).unwrap();
    assert!(rep.hypothesis_holds && rep.conclusion_holds);
    let one = AnalyticField::Constant { n, value: 1.0 };
    let rep = gradient_bound_check(&one, 1.0, &vec![0.0; n], &Lemma2Options::default()).unwrap();
    assert!(rep.hypothesis_holds && rep.conclusion_holds);
    assert_eq!(rep.worst_conclusion_ratio, 0.0);
    let a = 0.5;
    let steep = AnalyticField::Exponential { amplitude: 1.0, rate: vec![2.0 * (n as f64 - 2.0) / a, 0.0, 0.0] };
    let rep = gradient_bound_check(&steep, a, &vec![0.0; n], &Lemma2Options::default()).unwrap();
    assert!(!rep.hypothesis_holds);
    assert!(!rep.conclusion_holds);
    assert!(rep.sound);
}

#[test]
fn critical_radius_of_a_bubble() {
    let s = 2.0;
    let b = AnalyticField::Bubble(BubbleParams::new(1.0, s, vec![0.0; 3]).unwrap());
    let rep = critical_lambda(&b, &[0.0; 3], 5.0, &MovingSphereOptions::default()).unwrap();
    assert_relative_eq!(rep.lambda_x, 1.0 / s, max_relative = 1e-5);
    let x = [0.3, -0.2, 0.1];
    let rep = critical_lambda(&b, &x, 5.0, &MovingSphereOptions::default()).unwrap();
    assert!(rep.lambda_x > 0.0 && rep.worst_margin >= -1e-12);
    assert_relative_eq!(rep.lambda_x, bubble_critical_lambda(s, &[0.0; 3], &x), max_relative = 1e-4);
    // denser sampling cannot certify a larger radius beyond the tolerance
    let dense = MovingSphereOptions { directions: 256, ..MovingSphereOptions::default() };
    let rep2 = critical_lambda(&b, &x, 5.0, &dense).unwrap();
    assert!(rep2.lambda_x <= rep.lambda_x * (1.0 + 2e-6));
}

#[test]
fn touching_constructions() {
    let n = 4;
    let b = AnalyticField::Bubble(BubbleParams::new(1.0, 1.5, vec![0.05, -0.02, 0.0, 0.03]).unwrap());
    // identical functions
    let same = touching_comparison(&b, &b, &[0.1, 0.2, 0.0, -0.1], 1e-10).unwrap();
    assert!(same.holds && same.max_eigenvalue_difference.abs() < 1e-12);
    // paraboloid fitted below the bubble
    let fit = fit_touching_paraboloid(&b, &vec![0.0; n], 0.5).unwrap();
    let xi = fit.field();
    let rep = touching_comparison(&b, &xi, &fit.point, 1e-8).unwrap();
    assert!(rep.holds, "{rep:?}");
    assert!(rep.max_eigenvalue_difference < 0.0);
    for p in sampling::halton_ball(2000, &vec![0.0; n], 0.499) {
        assert!(b.value(&p).unwrap() >= xi.value(&p).unwrap() - 1e-12);
    }
    // a non-touching pair is rejected
    let lower = b.clone().scaled(0.5);
    assert_eq!(touching_comparison(&b, &lower, &fit.point, 1e-8).unwrap_err().code(), "NOT_TOUCHING");
}

#[test]
fn max_point_inequality_cases() {
    for (n, k) in [(3, 1), (4, 2), (5, 3)] {
        let spec = CurvatureSpec::sigma_k(n, k).unwrap();
        let fe = spec.value_at_ones();
        let a = (fe / 2.0).powf((n as f64 - 2.0) / 4.0);
        let rep =
            max_point_inequality(&AnalyticField::Constant { n, value: a }, &spec, &MaxPointOptions::default()).unwrap();
        assert!((rep.lhs - 1.0).abs() <= 1e-10);
        assert!(rep.holds);
        let big = AnalyticField::Constant { n, value: 0.5 * a };
        assert!(!max_point_inequality(&big, &spec, &MaxPointOptions::default()).unwrap().holds);
        // bubble solutions pushed to the sphere
        for s in [0.5, 1.0, 3.0] {
            let v = AnalyticField::Bubble(bubble_exact(&spec, s, vec![0.0; n]).unwrap());
            let rep = max_point_inequality(&stereographic_push(v), &spec, &MaxPointOptions::default()).unwrap();
            assert!(rep.holds, "s = {s}: {rep:?}");
            let want = if s >= 1.0 { 1.0 / (s * s) } else { s * s };
            assert_relative_eq!(rep.lhs, want, max_relative = 1e-8);
        }
    }
}

#[test]
fn solver_output_satisfies_the_max_point_inequality() {
    let cfg = SolverConfig::default();
    let spec = CurvatureSpec::sigma_k(3, 2).unwrap();
    let grid = solver_grid(&spec, &cfg).unwrap();
    let init: Vec<f64> = grid.radii().iter().map(|r| 1.01 * gauge_bubble(&spec, 1.0).value_at_radius(*r)).collect();
    let sol = newton_solve(&spec, &init, &cfg).unwrap();
    let table = AnalyticField::RadialTable(sol.to_table().unwrap());
    let rep = max_point_inequality(&stereographic_push(table), &spec, &MaxPointOptions::default()).unwrap();
    assert!(rep.holds);
}
