//! Dense primal active-set solver for strictly convex quadratic programs over
//! polytopes. Used to locate constrained fixed points exactly and as the
//! direct reference solve inside the control loop; sized for desk-scale
//! problems (a few dozen variables).

use thiserror::Error;

use crate::problems::Polytope;
use crate::scalar::{sc, Matrix, Scalar, Vector};

#[derive(Debug, Error)]
pub enum QpError {
    #[error("dimension mismatch between objective and constraints")]
    DimensionMismatch,
    #[error("KKT system singular with working set {0:?}")]
    SingularKkt(Vec<usize>),
    #[error("active-set iteration limit {0} exhausted")]
    IterationLimit(usize),
}

#[derive(Debug, Clone)]
pub struct QpSolution<T> {
    pub x: Vector<T>,
    /// Indices of constraints active at the solution.
    pub active: Vec<usize>,
    pub iterations: usize,
}

/// Minimizes `1/2 x^T H x + c^T x` subject to `A x <= b` (H symmetric positive
/// definite). Starts from the polytope's interior witness.
pub fn solve_qp<T: Scalar>(
    h: &Matrix<T>,
    c: &Vector<T>,
    constraints: &Polytope<T>,
) -> Result<QpSolution<T>, QpError> {
    let d = h.nrows();
    if h.ncols() != d || c.len() != d || constraints.dim() != d {
        return Err(QpError::DimensionMismatch);
    }
    let a = constraints.rows();
    let b = constraints.rhs();
    let m = constraints.num_constraints();

    let mut x = constraints.witness().clone();
    let mut working: Vec<usize> = Vec::new();
    let step_tol = sc::<T>(1e-12);
    let mult_tol = sc::<T>(1e-10);
    let max_iters = 30 * (d + m) + 50;

    for it in 0..max_iters {
        let g = h * &x + c;
        let k = working.len();

        // Equality-constrained subproblem on the working set:
        // [H A_W^T; A_W 0] [p; lam] = [-g; 0]
        let mut kkt = Matrix::<T>::zeros(d + k, d + k);
        kkt.view_mut((0, 0), (d, d)).copy_from(h);
        for (row, &ci) in working.iter().enumerate() {
            for j in 0..d {
                kkt[(d + row, j)] = a[(ci, j)];
                kkt[(j, d + row)] = a[(ci, j)];
            }
        }
        let mut rhs = Vector::<T>::zeros(d + k);
        for j in 0..d {
            rhs[j] = -g[j];
        }
        let sol = kkt
            .full_piv_lu()
            .solve(&rhs)
            .ok_or_else(|| QpError::SingularKkt(working.clone()))?;
        let p = sol.rows(0, d).into_owned();

        if p.norm() <= step_tol * (T::one() + x.norm()) {
            // stationary on the working set; check multiplier signs
            let mut drop_idx = None;
            let mut most_negative = -mult_tol;
            for (row, &ci) in working.iter().enumerate() {
                let lam = sol[d + row];
                if lam < most_negative {
                    most_negative = lam;
                    drop_idx = Some((row, ci));
                }
            }
            match drop_idx {
                None => {
                    return Ok(QpSolution {
                        x,
                        active: working,
                        iterations: it,
                    })
                }
                Some((row, _)) => {
                    working.remove(row);
                }
            }
        } else {
            // step to the nearest blocking constraint
            let mut alpha = T::one();
            let mut blocker = None;
            for ci in 0..m {
                if working.contains(&ci) {
                    continue;
                }
                let api = a.row(ci).transpose().dot(&p);
                if api > step_tol {
                    let slack = b[ci] - a.row(ci).transpose().dot(&x);
                    let ratio = slack / api;
                    if ratio < alpha {
                        alpha = ratio;
                        blocker = Some(ci);
                    }
                }
            }
            if alpha < T::zero() {
                alpha = T::zero();
            }
            x += &p * alpha;
            if let Some(ci) = blocker {
                working.push(ci);
            }
        }
    }
    Err(QpError::IterationLimit(max_iters))
}

/// Euclidean projection of `y` onto the polytope, solved exactly as the
/// quadratic program `min 1/2 |x - y|^2 s.t. A x <= b`.
pub fn project_qp<T: Scalar>(y: &Vector<T>, constraints: &Polytope<T>) -> Result<Vector<T>, QpError> {
    let d = y.len();
    let h = Matrix::<T>::identity(d, d);
    let c = -y;
    solve_qp(&h, &c, constraints).map(|s| s.x)
}
