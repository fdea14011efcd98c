//! Problem classes and concrete instance constructors: strongly convex and
//! gradient-dominated objectives, regression quadratics, polytopic feasible
//! sets, and condensed receding-horizon control programs.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    conditioned_symmetric, geometric_spectrum, is_symmetric, symmetric_eigen_bounds, symmetrize,
};
use crate::rng::{normal, normal_vector, SeedSplitter};
use crate::scalar::{sc, Matrix, Scalar, Vector};

/// Absolute interior margin required of a polytope witness point.
pub const WITNESS_MARGIN: f64 = 1e-8;
/// Relative symmetry tolerance for quadratic Hessians.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("hessian must be symmetric to relative tolerance {SYMMETRY_TOL}")]
    NotSymmetric,
    #[error("degenerate instance: smallest eigenvalue {mu} below {tol} relative to largest {beta}")]
    DegenerateInstance { mu: f64, beta: f64, tol: f64 },
    #[error("problem requires strong convexity but smallest curvature is {mu}")]
    NotStronglyConvex { mu: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("polytope witness violates interior margin: worst slack {0}")]
    EmptyInterior(f64),
    #[error("condensed hessian is not positive definite (min eigenvalue {0})")]
    NotPositiveDefinite(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("stationarity check failed at stored optimizer: gradient norm {0}")]
    BadOptimizer(f64),
    #[error("serialization: {0}")]
    Serialization(String),
}

/// Structural class a smooth problem declares membership of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemClass {
    Rsi,
    PlConvex,
    StronglyConvex,
    Quadratic,
}

impl ProblemClass {
    pub fn is_strongly_convex(self) -> bool {
        matches!(self, ProblemClass::StronglyConvex | ProblemClass::Quadratic)
    }
}

/// Curvature extremes of a symmetric matrix.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureInfo<T> {
    pub mu: T,
    pub beta: T,
    pub kappa: T,
}

impl<T: Scalar> CurvatureInfo<T> {
    pub fn require_strongly_convex(&self) -> Result<(), ProblemError> {
        if self.mu <= T::zero() {
            return Err(ProblemError::NotStronglyConvex {
                mu: self.mu.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }
}

/// Smallest/largest eigenvalue and condition number of a symmetric matrix.
pub fn curvature_constants<T: Scalar>(h: &Matrix<T>) -> Result<CurvatureInfo<T>, ProblemError> {
    if !is_symmetric(h, sc(SYMMETRY_TOL)) {
        return Err(ProblemError::NotSymmetric);
    }
    let (mu, beta) = symmetric_eigen_bounds(h);
    let kappa = if mu > T::zero() { beta / mu } else { sc(f64::INFINITY) };
    Ok(CurvatureInfo { mu, beta, kappa })
}

// ---------------------------------------------------------------------------
// Quadratic problems
// ---------------------------------------------------------------------------

/// Strongly convex quadratic `F(x) = 1/2 x^T H x + c^T x + offset` with its
/// minimizer and curvature extremes attached.
#[derive(Debug, Clone)]
pub struct QuadraticProblem<T> {
    pub id: String,
    hessian: Matrix<T>,
    linear: Vector<T>,
    offset: T,
    x_star: Vector<T>,
    mu: T,
    beta: T,
    pub seed: Option<u64>,
}

impl<T: Scalar> QuadraticProblem<T> {
    /// Validates the Hessian, solves for the minimizer and computes curvature.
    pub fn new(
        id: impl Into<String>,
        hessian: Matrix<T>,
        linear: Vector<T>,
        offset: T,
    ) -> Result<Self, ProblemError> {
        if hessian.nrows() != linear.len() {
            return Err(ProblemError::DimensionMismatch(format!(
                "hessian is {}x{}, linear term has length {}",
                hessian.nrows(),
                hessian.ncols(),
                linear.len()
            )));
        }
        if !is_symmetric(&hessian, sc(SYMMETRY_TOL)) {
            return Err(ProblemError::NotSymmetric);
        }
        let (mu, beta) = symmetric_eigen_bounds(&hessian);
        let tol = sc::<T>(1e-14);
        if mu <= tol * beta {
            return Err(ProblemError::DegenerateInstance {
                mu: mu.to_f64().unwrap_or(f64::NAN),
                beta: beta.to_f64().unwrap_or(f64::NAN),
                tol: 1e-14,
            });
        }
        let x_star = hessian
            .clone()
            .lu()
            .solve(&(-&linear))
            .ok_or(ProblemError::DegenerateInstance {
                mu: mu.to_f64().unwrap_or(f64::NAN),
                beta: beta.to_f64().unwrap_or(f64::NAN),
                tol: 1e-14,
            })?;
        let p = Self {
            id: id.into(),
            hessian,
            linear,
            offset,
            x_star,
            mu,
            beta,
            seed: None,
        };
        p.check_stationarity()?;
        Ok(p)
    }

    /// Rebuilds an instance from stored parts (deserialization path); the
    /// stored curvature constants are kept verbatim, stationarity re-checked.
    pub fn from_parts(
        id: impl Into<String>,
        hessian: Matrix<T>,
        linear: Vector<T>,
        offset: T,
        x_star: Vector<T>,
        mu: T,
        beta: T,
        seed: Option<u64>,
    ) -> Result<Self, ProblemError> {
        if !is_symmetric(&hessian, sc(SYMMETRY_TOL)) {
            return Err(ProblemError::NotSymmetric);
        }
        let p = Self {
            id: id.into(),
            hessian,
            linear,
            offset,
            x_star,
            mu,
            beta,
            seed,
        };
        if p.mu > T::zero() {
            p.check_stationarity()?;
        }
        Ok(p)
    }

    fn check_stationarity(&self) -> Result<(), ProblemError> {
        let g = self.gradient(&self.x_star).norm();
        // 1e-9 at double precision; widened in proportion to machine epsilon
        // for lower-precision scalars
        let tol = sc::<T>(1e-9).max(T::eps() * sc(100.0) * self.kappa());
        let bound = tol * (T::one() + self.linear.norm());
        if g > bound {
            return Err(ProblemError::BadOptimizer(g.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn hessian(&self) -> &Matrix<T> {
        &self.hessian
    }

    pub fn linear_term(&self) -> &Vector<T> {
        &self.linear
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn x_star(&self) -> &Vector<T> {
        &self.x_star
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn kappa(&self) -> T {
        self.beta / self.mu
    }

    pub fn objective(&self, x: &Vector<T>) -> T {
        (x.dot(&(&self.hessian * x))) * sc::<T>(0.5) + self.linear.dot(x) + self.offset
    }

    pub fn gradient(&self, x: &Vector<T>) -> Vector<T> {
        &self.hessian * x + &self.linear
    }

    /// Wraps the quadratic as a generic smooth problem (shared closures).
    pub fn to_smooth(&self) -> SmoothProblem<T> {
        let this = Arc::new(self.clone());
        let o = Arc::clone(&this);
        let g = Arc::clone(&this);
        SmoothProblem {
            id: self.id.clone(),
            dim: self.dim(),
            objective: Arc::new(move |x| o.objective(x)),
            gradient: Arc::new(move |x| g.gradient(x)),
            optimizers: vec![self.x_star.clone()],
            mu: self.mu,
            beta: self.beta,
            class: ProblemClass::Quadratic,
        }
    }
}

/// Smooth problem with oracle access, a finite optimizer set, and declared
/// curvature constants.
#[derive(Clone)]
pub struct SmoothProblem<T> {
    pub id: String,
    pub dim: usize,
    pub objective: Arc<dyn Fn(&Vector<T>) -> T + Send + Sync>,
    pub gradient: Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>,
    pub optimizers: Vec<Vector<T>>,
    pub mu: T,
    pub beta: T,
    pub class: ProblemClass,
}

impl<T: Scalar> std::fmt::Debug for SmoothProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothProblem")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("mu", &self.mu)
            .field("beta", &self.beta)
            .field("class", &self.class)
            .finish()
    }
}

impl<T: Scalar> SmoothProblem<T> {
    pub fn objective(&self, x: &Vector<T>) -> T {
        (self.objective)(x)
    }

    pub fn gradient(&self, x: &Vector<T>) -> Vector<T> {
        (self.gradient)(x)
    }

    /// Euclidean distance to the nearest declared optimizer.
    pub fn distance_to_optimum(&self, x: &Vector<T>) -> T {
        self.optimizers
            .iter()
            .map(|o| (x - o).norm())
            .fold(sc::<T>(f64::INFINITY), |a, b| a.min(b))
    }

    /// Central finite-difference check of the gradient oracle at random
    /// probes. Returns the worst relative error observed.
    pub fn gradient_consistency<R: Rng>(&self, rng: &mut R, probes: usize, scale: T) -> T {
        let h = sc::<T>(1e-6);
        let mut worst = T::zero();
        for _ in 0..probes {
            let x = normal_vector::<T, _>(rng, self.dim) * scale;
            let g = self.gradient(&x);
            let mut fd = Vector::<T>::zeros(self.dim);
            for i in 0..self.dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                fd[i] = (self.objective(&xp) - self.objective(&xm)) / (h + h);
            }
            let denom = T::one() + g.norm();
            worst = worst.max((g - fd).norm() / denom);
        }
        worst
    }

    /// Worst slack in the restricted secant inequality
    /// `grad F(x)^T (x - x*) >= (mu/2) dist(x, X*)^2` over random probes.
    /// Nonnegative slack means the inequality held everywhere sampled.
    pub fn rsi_slack<R: Rng>(&self, rng: &mut R, probes: usize, scale: T) -> T {
        let half = sc::<T>(0.5);
        let mut worst = sc::<T>(f64::INFINITY);
        for _ in 0..probes {
            let x = normal_vector::<T, _>(rng, self.dim) * scale;
            let dist = self.distance_to_optimum(&x);
            let xs = self
                .optimizers
                .iter()
                .min_by(|a, b| {
                    (x.clone() - *a)
                        .norm()
                        .partial_cmp(&(x.clone() - *b).norm())
                        .unwrap()
                })
                .expect("optimizer set is non-empty");
            let lhs = self.gradient(&x).dot(&(&x - xs));
            let rhs = half * self.mu * dist * dist;
            worst = worst.min(lhs - rhs);
        }
        worst
    }

    /// Numerical estimate of the largest RSI constant supported by sampling.
    pub fn estimate_rsi_constant<R: Rng>(&self, rng: &mut R, probes: usize, scale: T) -> T {
        let two = sc::<T>(2.0);
        let mut best = sc::<T>(f64::INFINITY);
        for _ in 0..probes {
            let x = normal_vector::<T, _>(rng, self.dim) * scale;
            let dist = self.distance_to_optimum(&x);
            if dist <= sc(1e-9) {
                continue;
            }
            let xs = self
                .optimizers
                .iter()
                .min_by(|a, b| {
                    (x.clone() - *a)
                        .norm()
                        .partial_cmp(&(x.clone() - *b).norm())
                        .unwrap()
                })
                .expect("optimizer set is non-empty");
            let ratio = two * self.gradient(&x).dot(&(&x - xs)) / (dist * dist);
            best = best.min(ratio);
        }
        best
    }
}

/// Gradient-dominated, nonconvex exemplar `F(x) = |x|^2 + 3 sum_i sin^2(x_i)`.
///
/// The optimizer set is the origin; the declared secant constant is the
/// sampled/analytic infimum rounded down, and the smoothness constant is the
/// exact bound on `|F''|`.
pub fn pl_sine<T: Scalar>(dim: usize) -> SmoothProblem<T> {
    let two = sc::<T>(2.0);
    let three = sc::<T>(3.0);
    SmoothProblem {
        id: format!("pl-sine-d{dim}"),
        dim,
        objective: Arc::new(move |x: &Vector<T>| {
            let mut acc = T::zero();
            for i in 0..x.len() {
                acc += x[i] * x[i] + three * x[i].sin() * x[i].sin();
            }
            acc
        }),
        gradient: Arc::new(move |x: &Vector<T>| {
            Vector::from_iterator(x.len(), (0..x.len()).map(|i| two * x[i] + three * (two * x[i]).sin()))
        }),
        optimizers: vec![Vector::zeros(dim)],
        mu: sc(1.39),
        beta: sc(8.0),
        class: ProblemClass::Rsi,
    }
}

// ---------------------------------------------------------------------------
// Regression instances
// ---------------------------------------------------------------------------

/// Samples a least-squares instance `min |Ax - b|^2` with `A = base + dA`,
/// `b = b_mean 1 + db`, returning it as the equivalent quadratic with
/// `H = 2 A^T A`, `c = -2 A^T b`, `offset = b^T b`.
pub fn sample_regression_instance<T: Scalar>(
    base_a: &Matrix<T>,
    noise_std_a: T,
    b_mean: T,
    noise_std_b: T,
    seed: u64,
) -> Result<QuadraticProblem<T>, ProblemError> {
    if base_a.nrows() != base_a.ncols() {
        return Err(ProblemError::DimensionMismatch(
            "base matrix must be square".into(),
        ));
    }
    if noise_std_a < T::zero() || noise_std_b < T::zero() {
        return Err(ProblemError::InvalidParameter(
            "noise standard deviations must be nonnegative".into(),
        ));
    }
    let d = base_a.nrows();
    let mut rng = SeedSplitter::new(seed).stream("regression", 0);
    let mut a = base_a.clone();
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] += noise_std_a * normal::<T, _>(&mut rng);
        }
    }
    let mut b = Vector::<T>::from_element(d, b_mean);
    for i in 0..d {
        b[i] += noise_std_b * normal::<T, _>(&mut rng);
    }
    let two = sc::<T>(2.0);
    let h = symmetrize(&(a.transpose() * &a)) * two;
    let c = -(a.transpose() * &b) * two;
    let offset = b.dot(&b);
    let mut p = QuadraticProblem::new(format!("regression-d{d}-seed{seed}"), h, c, offset)?;
    p.seed = Some(seed);
    Ok(p)
}

/// Synthetic ill-conditioned base matrix: geometric singular spectrum under a
/// random orthogonal conjugation, targeting condition number `kappa`.
pub fn ill_conditioned_base<T: Scalar>(dim: usize, kappa: T, seed: u64) -> Matrix<T> {
    let spectrum = geometric_spectrum(dim, T::one(), kappa);
    let mut rng = SeedSplitter::new(seed).stream("base-matrix", 0);
    conditioned_symmetric(&mut rng, &spectrum)
}

/// Random strongly convex quadratic: geometric spectrum `mu = 1 .. beta = kappa`
/// under random rotation, minimizer drawn standard normal and rescaled, zero
/// minimum value.
pub fn random_sc_quadratic<T: Scalar>(
    dim: usize,
    kappa: T,
    seed: u64,
) -> Result<QuadraticProblem<T>, ProblemError> {
    let mut rng = SeedSplitter::new(seed).stream("sc-quadratic", 0);
    let spectrum = geometric_spectrum(dim, T::one(), kappa);
    let h = conditioned_symmetric::<T, _>(&mut rng, &spectrum);
    let x_star = normal_vector::<T, _>(&mut rng, dim) / sc::<T>((dim as f64).sqrt());
    let c: Vector<T> = -(&h * &x_star);
    let offset = x_star.dot(&(&h * &x_star)) * sc::<T>(0.5);
    let mut p = QuadraticProblem::new(format!("sc-quad-d{dim}-seed{seed}"), h, c, offset)?;
    p.seed = Some(seed);
    Ok(p)
}

// ---------------------------------------------------------------------------
// Polytopes
// ---------------------------------------------------------------------------

/// Box description extracted from an axis-aligned polytope.
#[derive(Debug, Clone)]
pub struct BoxBounds<T> {
    pub lower: Vector<T>,
    pub upper: Vector<T>,
}

impl<T: Scalar> BoxBounds<T> {
    pub fn clamp(&self, x: &Vector<T>) -> Vector<T> {
        Vector::from_iterator(
            x.len(),
            (0..x.len()).map(|i| x[i].clamp(self.lower[i], self.upper[i])),
        )
    }
}

/// Intersection of half-spaces `a_i^T x <= b_i` with a strictly interior
/// witness certifying non-emptiness.
#[derive(Debug, Clone)]
pub struct Polytope<T> {
    rows: Matrix<T>,
    rhs: Vector<T>,
    witness: Vector<T>,
}

impl<T: Scalar> Polytope<T> {
    pub fn new(rows: Matrix<T>, rhs: Vector<T>, witness: Vector<T>) -> Result<Self, ProblemError> {
        if rows.nrows() != rhs.len() || rows.ncols() != witness.len() {
            return Err(ProblemError::DimensionMismatch(format!(
                "rows {}x{}, rhs {}, witness {}",
                rows.nrows(),
                rows.ncols(),
                rhs.len(),
                witness.len()
            )));
        }
        let slack = &rhs - &rows * &witness;
        let worst = slack.iter().copied().fold(sc::<T>(f64::INFINITY), |a, b| a.min(b));
        if worst < sc(WITNESS_MARGIN) {
            return Err(ProblemError::EmptyInterior(worst.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { rows, rhs, witness })
    }

    /// Symmetric box `|x_i| <= bound`: rows `0..d` are the upper bounds,
    /// rows `d..2d` the lower bounds.
    pub fn box_bound(dim: usize, bound: T) -> Result<Self, ProblemError> {
        if bound <= T::zero() {
            return Err(ProblemError::InvalidParameter(
                "box bound must be positive".into(),
            ));
        }
        let mut rows = Matrix::<T>::zeros(2 * dim, dim);
        let mut rhs = Vector::<T>::zeros(2 * dim);
        for i in 0..dim {
            rows[(i, i)] = T::one();
            rhs[i] = bound;
            rows[(dim + i, i)] = -T::one();
            rhs[dim + i] = bound;
        }
        Self::new(rows, rhs, Vector::zeros(dim))
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Matrix<T> {
        &self.rows
    }

    pub fn rhs(&self) -> &Vector<T> {
        &self.rhs
    }

    pub fn witness(&self) -> &Vector<T> {
        &self.witness
    }

    /// Largest constraint violation at `x` (nonpositive inside the set).
    pub fn violation(&self, x: &Vector<T>) -> T {
        let r = &self.rows * x - &self.rhs;
        r.iter().copied().fold(sc::<T>(f64::NEG_INFINITY), |a, b| a.max(b))
    }

    pub fn contains(&self, x: &Vector<T>, tol: T) -> bool {
        self.violation(x) <= tol
    }

    /// Recognizes an axis-aligned box (every row touching exactly one
    /// coordinate). Unbounded coordinates get infinite bounds.
    pub fn as_box(&self) -> Option<BoxBounds<T>> {
        let d = self.dim();
        let mut lower = Vector::<T>::from_element(d, sc(f64::NEG_INFINITY));
        let mut upper = Vector::<T>::from_element(d, sc(f64::INFINITY));
        for r in 0..self.rows.nrows() {
            let mut nz = None;
            for j in 0..d {
                if self.rows[(r, j)] != T::zero() {
                    if nz.is_some() {
                        return None;
                    }
                    nz = Some(j);
                }
            }
            let j = nz?;
            let s = self.rows[(r, j)];
            let bound = self.rhs[r] / s;
            if s > T::zero() {
                upper[j] = upper[j].min(bound);
            } else {
                lower[j] = lower[j].max(bound);
            }
        }
        Some(BoxBounds { lower, upper })
    }
}

// ---------------------------------------------------------------------------
// Receding-horizon control problems
// ---------------------------------------------------------------------------

/// Finite-horizon linear-quadratic control problem in stacked (condensed)
/// form over the input sequence, with an infinity-norm input box.
#[derive(Debug, Clone)]
pub struct MpcProblem<T> {
    pub dyn_a: Matrix<T>,
    pub dyn_b: Matrix<T>,
    pub horizon: usize,
    pub q: Matrix<T>,
    pub r: Matrix<T>,
    pub q_terminal: Matrix<T>,
    pub input_bound: T,
    stacked_f: Matrix<T>,
    stacked_g: Matrix<T>,
    stacked_q: Matrix<T>,
    stacked_r: Matrix<T>,
    condensed_hessian: Matrix<T>,
    condensed_mu: T,
    condensed_beta: T,
}

impl<T: Scalar> MpcProblem<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dyn_a: Matrix<T>,
        dyn_b: Matrix<T>,
        horizon: usize,
        q: Matrix<T>,
        r: Matrix<T>,
        q_terminal: Matrix<T>,
        input_bound: T,
    ) -> Result<Self, ProblemError> {
        let n = dyn_a.nrows();
        let m = dyn_b.ncols();
        if dyn_a.ncols() != n || dyn_b.nrows() != n {
            return Err(ProblemError::DimensionMismatch(
                "state matrix must be square and input matrix conformable".into(),
            ));
        }
        if horizon == 0 {
            return Err(ProblemError::InvalidParameter("horizon must be >= 1".into()));
        }
        if input_bound <= T::zero() {
            return Err(ProblemError::InvalidParameter(
                "input bound must be positive".into(),
            ));
        }
        for (name, mat, dim) in [("Q", &q, n), ("Q_T", &q_terminal, n), ("R", &r, m)] {
            if mat.nrows() != dim || mat.ncols() != dim {
                return Err(ProblemError::DimensionMismatch(format!(
                    "{name} must be {dim}x{dim}"
                )));
            }
            if !is_symmetric(mat, sc(SYMMETRY_TOL)) {
                return Err(ProblemError::NotSymmetric);
            }
        }
        let (q_min, _) = symmetric_eigen_bounds(&q);
        let (qt_min, _) = symmetric_eigen_bounds(&q_terminal);
        let (r_min, _) = symmetric_eigen_bounds(&r);
        let psd_tol = sc::<T>(-1e-10);
        if q_min < psd_tol || qt_min < psd_tol {
            return Err(ProblemError::InvalidParameter(
                "Q and Q_T must be positive semidefinite".into(),
            ));
        }
        if r_min <= T::zero() {
            return Err(ProblemError::InvalidParameter(
                "R must be positive definite".into(),
            ));
        }

        // prediction matrices: block row k (1-indexed) of F is A^k, and
        // G[k, j] = A^{k-j-1} B for j < k
        let t_len = horizon;
        let mut stacked_f = Matrix::<T>::zeros(n * t_len, n);
        let mut stacked_g = Matrix::<T>::zeros(n * t_len, m * t_len);
        let mut a_pow = Matrix::<T>::identity(n, n);
        let mut powers = Vec::with_capacity(t_len + 1);
        powers.push(a_pow.clone());
        for _ in 0..t_len {
            a_pow = &dyn_a * &a_pow;
            powers.push(a_pow.clone());
        }
        for k in 1..=t_len {
            stacked_f
                .view_mut(((k - 1) * n, 0), (n, n))
                .copy_from(&powers[k]);
            for j in 0..k {
                let blk = &powers[k - j - 1] * &dyn_b;
                stacked_g
                    .view_mut(((k - 1) * n, j * m), (n, m))
                    .copy_from(&blk);
            }
        }
        let mut stacked_q = Matrix::<T>::zeros(n * t_len, n * t_len);
        for k in 0..t_len {
            let blk = if k + 1 == t_len { &q_terminal } else { &q };
            stacked_q.view_mut((k * n, k * n), (n, n)).copy_from(blk);
        }
        let mut stacked_r = Matrix::<T>::zeros(m * t_len, m * t_len);
        for k in 0..t_len {
            stacked_r.view_mut((k * m, k * m), (m, m)).copy_from(&r);
        }

        let half_hessian = symmetrize(&(stacked_g.transpose() * &stacked_q * &stacked_g + &stacked_r));
        let condensed_hessian = &half_hessian * sc::<T>(2.0);
        let (mu, beta) = symmetric_eigen_bounds(&condensed_hessian);
        if mu <= T::zero() {
            return Err(ProblemError::NotPositiveDefinite(
                mu.to_f64().unwrap_or(f64::NAN),
            ));
        }

        Ok(Self {
            dyn_a,
            dyn_b,
            horizon,
            q,
            r,
            q_terminal,
            input_bound,
            stacked_f,
            stacked_g,
            stacked_q,
            stacked_r,
            condensed_hessian,
            condensed_mu: mu,
            condensed_beta: beta,
        })
    }

    /// The two-state double-integrator example with identity weights,
    /// horizon 20 and input box 0.25.
    pub fn double_integrator_example() -> Result<Self, ProblemError> {
        Self::new(
            Matrix::from_row_slice(2, 2, &[sc(1.0), sc(1.0), sc(0.0), sc(1.0)]),
            Matrix::from_row_slice(2, 1, &[sc(0.0), sc(1.0)]),
            20,
            Matrix::identity(2, 2),
            Matrix::identity(1, 1),
            Matrix::identity(2, 2),
            sc(0.25),
        )
    }

    pub fn state_dim(&self) -> usize {
        self.dyn_a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.dyn_b.ncols()
    }

    pub fn stacked_f(&self) -> &Matrix<T> {
        &self.stacked_f
    }

    pub fn stacked_g(&self) -> &Matrix<T> {
        &self.stacked_g
    }

    pub fn stacked_q(&self) -> &Matrix<T> {
        &self.stacked_q
    }

    pub fn stacked_r(&self) -> &Matrix<T> {
        &self.stacked_r
    }

    /// Curvature extremes of the condensed objective's Hessian.
    pub fn condensed_curvature(&self) -> CurvatureInfo<T> {
        CurvatureInfo {
            mu: self.condensed_mu,
            beta: self.condensed_beta,
            kappa: self.condensed_beta / self.condensed_mu,
        }
    }

    /// Reciprocal of the condensed objective's smoothness constant; the
    /// gradient step used by the projected-gradient baseline.
    pub fn nominal_step_size(&self) -> T {
        T::one() / self.condensed_beta
    }

    /// Condensed program for initial state `x0`: the quadratic over the
    /// stacked input (objective `u^T (G^T Q G + R) u + 2 x0^T F^T Q G u + const`)
    /// and the input box as `2 m T` half-spaces.
    pub fn condensed(&self, x0: &Vector<T>) -> Result<(QuadraticProblem<T>, Polytope<T>), ProblemError> {
        if x0.len() != self.state_dim() {
            return Err(ProblemError::DimensionMismatch(format!(
                "x0 has length {}, state dimension is {}",
                x0.len(),
                self.state_dim()
            )));
        }
        let qf = &self.stacked_q * (&self.stacked_f * x0);
        let c = self.stacked_g.transpose() * &qf * sc::<T>(2.0);
        let offset = (&self.stacked_f * x0).dot(&qf);
        let qp = QuadraticProblem::from_parts(
            format!("mpc-qp-h{}", self.horizon),
            self.condensed_hessian.clone(),
            c,
            offset,
            self.unconstrained_minimizer(x0)?,
            self.condensed_mu,
            self.condensed_beta,
            None,
        )?;
        let polytope = Polytope::box_bound(self.input_dim() * self.horizon, self.input_bound)?;
        Ok((qp, polytope))
    }

    fn unconstrained_minimizer(&self, x0: &Vector<T>) -> Result<Vector<T>, ProblemError> {
        let qf = &self.stacked_q * (&self.stacked_f * x0);
        let c = self.stacked_g.transpose() * &qf * sc::<T>(2.0);
        self.condensed_hessian
            .clone()
            .cholesky()
            .ok_or(ProblemError::NotPositiveDefinite(f64::NAN))
            .map(|ch| ch.solve(&(-c)))
    }

    /// One dynamics step `x+ = A x + B u + w`.
    pub fn step(&self, x: &Vector<T>, u: &Vector<T>, w: Option<&Vector<T>>) -> Vector<T> {
        let mut next = &self.dyn_a * x + &self.dyn_b * u;
        if let Some(w) = w {
            next += w;
        }
        next
    }

    /// Stacked prediction `F x0 + G u` over the horizon.
    pub fn stacked_prediction(&self, x0: &Vector<T>, u: &Vector<T>) -> Vector<T> {
        &self.stacked_f * x0 + &self.stacked_g * u
    }

    /// Noise-free forward simulation of the dynamics under the stacked input,
    /// returned in the same stacked layout as [`Self::stacked_prediction`].
    pub fn simulate_stacked(&self, x0: &Vector<T>, u: &Vector<T>) -> Vector<T> {
        let n = self.state_dim();
        let m = self.input_dim();
        let mut out = Vector::<T>::zeros(n * self.horizon);
        let mut x = x0.clone();
        for k in 0..self.horizon {
            let uk = u.rows(k * m, m).into_owned();
            x = self.step(&x, &uk, None);
            out.rows_mut(k * n, n).copy_from(&x);
        }
        out
    }
}

/// Convenience wrapper matching the operation-level interface: builds the
/// stacked problem and immediately condenses it at `x0`.
#[allow(clippy::too_many_arguments)]
pub fn build_stacked_mpc<T: Scalar>(
    dyn_a: Matrix<T>,
    dyn_b: Matrix<T>,
    horizon: usize,
    q: Matrix<T>,
    r: Matrix<T>,
    q_terminal: Matrix<T>,
    input_bound: T,
    x0: &Vector<T>,
) -> Result<(QuadraticProblem<T>, Polytope<T>), ProblemError> {
    MpcProblem::new(dyn_a, dyn_b, horizon, q, r, q_terminal, input_bound)?.condensed(x0)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn mat_to_rows<T: Scalar>(m: &Matrix<T>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)].to_f64().expect("scalar convertible to f64"));
        }
    }
    out
}

fn rows_to_mat<T: Scalar>(rows: usize, cols: usize, data: &[f64]) -> Result<Matrix<T>, ProblemError> {
    if data.len() != rows * cols {
        return Err(ProblemError::Serialization(format!(
            "expected {} entries for a {}x{} matrix, got {}",
            rows * cols,
            rows,
            cols,
            data.len()
        )));
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| sc(data[i * cols + j])))
}

fn vec_to_f64<T: Scalar>(v: &Vector<T>) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().expect("scalar convertible to f64")).collect()
}

fn f64_to_vec<T: Scalar>(data: &[f64]) -> Vector<T> {
    Vector::from_iterator(data.len(), data.iter().map(|&x| sc(x)))
}

/// On-disk problem schema. Matrices are stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceJson {
    Quadratic {
        id: String,
        dim: usize,
        hessian: Vec<f64>,
        linear: Vec<f64>,
        offset: f64,
        x_star: Vec<f64>,
        mu: f64,
        beta: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Polytope {
        rows: usize,
        dim: usize,
        matrix: Vec<f64>,
        rhs: Vec<f64>,
        witness: Vec<f64>,
    },
    Mpc {
        state_dim: usize,
        input_dim: usize,
        horizon: usize,
        dyn_a: Vec<f64>,
        dyn_b: Vec<f64>,
        q: Vec<f64>,
        r: Vec<f64>,
        q_terminal: Vec<f64>,
        input_bound: f64,
    },
    PlSine {
        dim: usize,
    },
}

impl<T: Scalar> QuadraticProblem<T> {
    pub fn to_json(&self) -> InstanceJson {
        InstanceJson::Quadratic {
            id: self.id.clone(),
            dim: self.dim(),
            hessian: mat_to_rows(&self.hessian),
            linear: vec_to_f64(&self.linear),
            offset: self.offset.to_f64().expect("scalar convertible"),
            x_star: vec_to_f64(&self.x_star),
            mu: self.mu.to_f64().expect("scalar convertible"),
            beta: self.beta.to_f64().expect("scalar convertible"),
            seed: self.seed,
        }
    }

    pub fn from_json(json: &InstanceJson) -> Result<Self, ProblemError> {
        match json {
            InstanceJson::Quadratic {
                id,
                dim,
                hessian,
                linear,
                offset,
                x_star,
                mu,
                beta,
                seed,
            } => QuadraticProblem::from_parts(
                id.clone(),
                rows_to_mat(*dim, *dim, hessian)?,
                f64_to_vec(linear),
                sc(*offset),
                f64_to_vec(x_star),
                sc(*mu),
                sc(*beta),
                *seed,
            ),
            _ => Err(ProblemError::Serialization("expected kind=quadratic".into())),
        }
    }
}

impl<T: Scalar> Polytope<T> {
    pub fn to_json(&self) -> InstanceJson {
        InstanceJson::Polytope {
            rows: self.rows.nrows(),
            dim: self.rows.ncols(),
            matrix: mat_to_rows(&self.rows),
            rhs: vec_to_f64(&self.rhs),
            witness: vec_to_f64(&self.witness),
        }
    }

    pub fn from_json(json: &InstanceJson) -> Result<Self, ProblemError> {
        match json {
            InstanceJson::Polytope {
                rows,
                dim,
                matrix,
                rhs,
                witness,
            } => Polytope::new(
                rows_to_mat(*rows, *dim, matrix)?,
                f64_to_vec(rhs),
                f64_to_vec(witness),
            ),
            _ => Err(ProblemError::Serialization("expected kind=polytope".into())),
        }
    }
}

impl<T: Scalar> SmoothProblem<T> {
    /// Serializes the built-in smooth exemplars (closures are not portable,
    /// so only named constructions round-trip).
    pub fn to_json(&self) -> Option<InstanceJson> {
        if self.id.starts_with("pl-sine-") {
            Some(InstanceJson::PlSine { dim: self.dim })
        } else {
            None
        }
    }

    pub fn from_json(json: &InstanceJson) -> Result<Self, ProblemError> {
        match json {
            InstanceJson::PlSine { dim } => Ok(pl_sine(*dim)),
            InstanceJson::Quadratic { .. } => {
                Ok(QuadraticProblem::<T>::from_json(json)?.to_smooth())
            }
            _ => Err(ProblemError::Serialization(
                "expected kind=pl-sine or kind=quadratic".into(),
            )),
        }
    }
}

impl<T: Scalar> MpcProblem<T> {
    pub fn to_json(&self) -> InstanceJson {
        InstanceJson::Mpc {
            state_dim: self.state_dim(),
            input_dim: self.input_dim(),
            horizon: self.horizon,
            dyn_a: mat_to_rows(&self.dyn_a),
            dyn_b: mat_to_rows(&self.dyn_b),
            q: mat_to_rows(&self.q),
            r: mat_to_rows(&self.r),
            q_terminal: mat_to_rows(&self.q_terminal),
            input_bound: self.input_bound.to_f64().expect("scalar convertible"),
        }
    }

    pub fn from_json(json: &InstanceJson) -> Result<Self, ProblemError> {
        match json {
            InstanceJson::Mpc {
                state_dim,
                input_dim,
                horizon,
                dyn_a,
                dyn_b,
                q,
                r,
                q_terminal,
                input_bound,
            } => MpcProblem::new(
                rows_to_mat(*state_dim, *state_dim, dyn_a)?,
                rows_to_mat(*state_dim, *input_dim, dyn_b)?,
                *horizon,
                rows_to_mat(*state_dim, *state_dim, q)?,
                rows_to_mat(*input_dim, *input_dim, r)?,
                rows_to_mat(*state_dim, *state_dim, q_terminal)?,
                sc(*input_bound),
            ),
            _ => Err(ProblemError::Serialization("expected kind=mpc".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_regression_case() {
        // noise-free identity base with b = 0.5: H = 2I, c = -[1,1], x* = [0.5,0.5]
        let base = Matrix::<f64>::identity(2, 2);
        let p = sample_regression_instance(&base, 0.0, 0.5, 0.0, 0).unwrap();
        assert_relative_eq!(p.hessian()[(0, 0)], 2.0);
        assert_relative_eq!(p.hessian()[(1, 1)], 2.0);
        assert_relative_eq!(p.hessian()[(0, 1)], 0.0);
        assert_relative_eq!(p.linear_term()[0], -1.0);
        assert_relative_eq!(p.linear_term()[1], -1.0);
        assert_relative_eq!(p.x_star()[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(p.x_star()[1], 0.5, max_relative = 1e-12);
        // objective reproduces |Ax-b|^2
        let x = Vector::from_vec(vec![0.3, -0.2]);
        assert_relative_eq!(p.objective(&x), (0.3f64 - 0.5).powi(2) + (-0.2f64 - 0.5).powi(2), max_relative = 1e-12);
    }

    #[test]
    fn regression_rejects_negative_noise() {
        let base = Matrix::<f64>::identity(2, 2);
        assert!(sample_regression_instance(&base, -1.0, 0.5, 0.0, 0).is_err());
    }

    #[test]
    fn regression_deterministic_in_seed() {
        let base = ill_conditioned_base::<f64>(6, 50.0, 3);
        let a = sample_regression_instance(&base, 0.1, 0.5, 0.2, 9).unwrap();
        let b = sample_regression_instance(&base, 0.1, 0.5, 0.2, 9).unwrap();
        assert_eq!(a.hessian(), b.hessian());
        assert_eq!(a.linear_term(), b.linear_term());
    }

    #[test]
    fn curvature_trivial_cases() {
        let id = Matrix::<f64>::identity(3, 3);
        let c = curvature_constants(&id).unwrap();
        assert_relative_eq!(c.mu, 1.0);
        assert_relative_eq!(c.beta, 1.0);
        assert_relative_eq!(c.kappa, 1.0);

        let d = Matrix::<f64>::from_diagonal(&Vector::from_vec(vec![1.0, 100.0]));
        let c = curvature_constants(&d).unwrap();
        assert_relative_eq!(c.mu, 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.beta, 100.0, max_relative = 1e-12);
        assert_relative_eq!(c.kappa, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn curvature_rejects_asymmetric() {
        let m = Matrix::<f64>::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(curvature_constants(&m).is_err());
    }

    #[test]
    fn strong_convexity_gate() {
        let m = Matrix::<f64>::from_diagonal(&Vector::from_vec(vec![0.0, 1.0]));
        let c = curvature_constants(&m).unwrap();
        assert!(c.require_strongly_convex().is_err());
    }

    #[test]
    fn box_polytope_roundtrip_and_witness() {
        let p = Polytope::<f64>::box_bound(3, 0.25).unwrap();
        assert_eq!(p.num_constraints(), 6);
        assert!(p.contains(&Vector::zeros(3), 0.0));
        let b = p.as_box().unwrap();
        assert_relative_eq!(b.upper[1], 0.25);
        assert_relative_eq!(b.lower[2], -0.25);
        let json = serde_json::to_string(&p.to_json()).unwrap();
        let back = Polytope::<f64>::from_json(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.rows(), p.rows());
    }

    #[test]
    fn polytope_rejects_thin_interior() {
        // witness exactly on the boundary fails the interior margin
        let rows = Matrix::<f64>::from_row_slice(1, 1, &[1.0]);
        let rhs = Vector::from_vec(vec![0.0]);
        assert!(Polytope::new(rows, rhs, Vector::from_vec(vec![0.0])).is_err());
    }

    #[test]
    fn mpc_zero_initial_state_has_zero_minimizer() {
        let mpc = MpcProblem::<f64>::double_integrator_example().unwrap();
        let (qp, _) = mpc.condensed(&Vector::zeros(2)).unwrap();
        assert!(qp.x_star().norm() < 1e-12);
        assert_relative_eq!(qp.objective(&Vector::zeros(20)), 0.0);
    }

    #[test]
    fn mpc_rejects_indefinite_r() {
        let bad = MpcProblem::<f64>::new(
            Matrix::identity(2, 2),
            Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
            5,
            Matrix::identity(2, 2),
            Matrix::from_row_slice(1, 1, &[0.0]),
            Matrix::identity(2, 2),
            0.25,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn quadratic_json_roundtrip_is_byte_stable() {
        let p = random_sc_quadratic::<f64>(4, 10.0, 11).unwrap();
        let s1 = serde_json::to_string(&p.to_json()).unwrap();
        let back = QuadraticProblem::<f64>::from_json(&serde_json::from_str(&s1).unwrap()).unwrap();
        let s2 = serde_json::to_string(&back.to_json()).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn pl_sine_gradient_matches_finite_differences() {
        let p = pl_sine::<f64>(4);
        let mut rng = SeedSplitter::new(2).stream("fd", 0);
        let worst = p.gradient_consistency(&mut rng, 20, 2.0);
        assert!(worst <= 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn pl_sine_json_roundtrip() {
        let p = pl_sine::<f64>(5);
        let json = p.to_json().unwrap();
        let s1 = serde_json::to_string(&json).unwrap();
        let back = SmoothProblem::<f64>::from_json(&serde_json::from_str(&s1).unwrap()).unwrap();
        assert_eq!(back.dim, 5);
        assert_eq!(back.id, p.id);
        let s2 = serde_json::to_string(&back.to_json().unwrap()).unwrap();
        assert_eq!(s1, s2);
    }
}
