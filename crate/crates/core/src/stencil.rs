//! Finite-difference weights on arbitrary nodes (Fornberg's recursion).

use alloc::vec;
use alloc::vec::Vec;

/// Weights `w[d][j]` such that `sum_j w[d][j] f(nodes[j])` approximates the
/// `d`-th derivative of `f` at `x0`, for `d = 0..=max_deriv`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let np = nodes.len();
    let mut c = vec![vec![0.0; np]; max_deriv + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..np {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Fourth-order central first-derivative weights for unit spacing.
pub const CENTRAL_D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
/// Fourth-order central second-derivative weights for unit spacing.
pub const CENTRAL_D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes_reproduce_classical_stencils() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        for j in 0..5 {
            assert!((w[1][j] - CENTRAL_D1[j]).abs() < 1e-14);
            assert!((w[2][j] - CENTRAL_D2[j]).abs() < 1e-13);
        }
        assert!((w[0][2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_on_quartics_for_irregular_nodes() {
        let nodes = [0.0, 0.13, 0.4, 0.55, 1.1];
        let x0 = 0.47;
        let w = fornberg_weights(x0, &nodes, 2);
        let f = |x: f64| 3.0 - 2.0 * x + 0.5 * x * x - x.powi(3) + 0.25 * x.powi(4);
        let d1 = |x: f64| -2.0 + x - 3.0 * x * x + x.powi(3);
        let d2 = |x: f64| 1.0 - 6.0 * x + 3.0 * x * x;
        let apply = |row: &[f64]| row.iter().zip(&nodes).map(|(c, x)| c * f(*x)).sum::<f64>();
        assert!((apply(&w[0]) - f(x0)).abs() < 1e-12);
        assert!((apply(&w[1]) - d1(x0)).abs() < 1e-11);
        assert!((apply(&w[2]) - d2(x0)).abs() < 1e-10);
    }
}
