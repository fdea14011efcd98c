//! Shared test oracles, independent of the library's solution paths.

#![allow(dead_code)]

use convaug::scalar::{Matrix, Vector};

/// Euclidean projection onto `{x : A x <= b}` by brute-force enumeration of
/// active sets: for every subset of rows, solve the equality-constrained
/// stationarity system and keep the candidate satisfying primal feasibility
/// and dual nonnegativity. Exact for small, nondegenerate systems.
pub fn enum_projection(y: &Vector<f64>, a: &Matrix<f64>, b: &Vector<f64>) -> Vector<f64> {
    let m = a.nrows();
    let d = a.ncols();
    assert!(m <= 16, "enumeration oracle is for small systems");
    let feasible = |x: &Vector<f64>| -> bool {
        let r = a * x - b;
        r.iter().all(|&v| v <= 1e-9)
    };
    if feasible(y) {
        return y.clone();
    }
    let mut best: Option<(f64, Vector<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if rows.len() > d {
            continue;
        }
        let k = rows.len();
        let a_s = Matrix::<f64>::from_fn(k, d, |i, j| a[(rows[i], j)]);
        let b_s = Vector::<f64>::from_fn(k, |i, _| b[rows[i]]);
        let gram = &a_s * a_s.transpose();
        let rhs = &a_s * y - b_s;
        let Some(lam) = gram.lu().solve(&rhs) else {
            continue;
        };
        if lam.iter().any(|&l| l < -1e-9) {
            continue;
        }
        let x = y - a_s.transpose() * &lam;
        if feasible(&x) {
            let dist = (&x - y).norm();
            match &best {
                Some((bd, _)) if *bd <= dist => {}
                _ => best = Some((dist, x)),
            }
        }
    }
    best.expect("projection exists for a non-empty polytope").1
}

/// Error recursion of gradient descent on a quadratic: `e_{t+1} = (I - eta H) e_t`.
pub fn gd_error_trace(
    h: &Matrix<f64>,
    eta: f64,
    e0: &Vector<f64>,
    steps: usize,
) -> Vec<f64> {
    let d = h.nrows();
    let iter_mat = Matrix::<f64>::identity(d, d) - h * eta;
    let mut out = Vec::with_capacity(steps + 1);
    let mut e = e0.clone();
    out.push(e.norm());
    for _ in 0..steps {
        e = &iter_mat * e;
        out.push(e.norm());
    }
    out
}
