//! Baseline one-step solvers with worst-case linear-rate certificates:
//! gradient descent for secant-inequality classes, the accelerated two-point
//! method for strongly convex objectives, the proximal point method, and
//! projected gradient descent over polytopes.

use std::sync::Arc;

use thiserror::Error;

use crate::poly::Polynomial;
use crate::problems::{Polytope, ProblemClass, QuadraticProblem, SmoothProblem};
use crate::qp::solve_qp;
use crate::scalar::{sc, Matrix, Scalar, Vector};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("baseline requires a strictly positive curvature constant, got {0}")]
    NonPositiveMu(f64),
    #[error("baseline requires condition number >= 1, got {0}")]
    InvalidKappa(f64),
    #[error("problem class {0:?} is outside this baseline's scope")]
    UnsupportedClass(ProblemClass),
    #[error("step size {eta} outside the admissible interval (0, {max}]")]
    InvalidStepSize { eta: f64, max: f64 },
    #[error("proximal parameter must be positive, got {0}")]
    InvalidProxParameter(f64),
    #[error("no proximal oracle available for a non-quadratic objective")]
    MissingProxOracle,
    #[error("baseline carries no rate certificate")]
    MissingCertificate,
    #[error("projection failed to reach tolerance {tol} within {iters} iterations (violation {violation})")]
    ProjectionBudget { iters: usize, tol: f64, violation: f64 },
    #[error("constrained fixed point solve failed: {0}")]
    FixedPointSolve(String),
}

/// Worst-case linear convergence certificate: `dist_t <= p(t) gamma^t dist_0`.
#[derive(Debug, Clone)]
pub struct RateCertificate<T> {
    poly: Polynomial<T>,
    gamma: T,
    monotone: bool,
}

impl<T: Scalar> RateCertificate<T> {
    pub fn new(poly: Polynomial<T>, gamma: T, monotone: bool) -> Self {
        debug_assert!(gamma >= T::zero() && gamma < T::one());
        Self { poly, gamma, monotone }
    }

    /// Monotone certificate (`p = 1`).
    pub fn monotone(gamma: T) -> Self {
        Self::new(Polynomial::one(), gamma, true)
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn poly(&self) -> &Polynomial<T> {
        &self.poly
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn p(&self, t: usize) -> T {
        self.poly.eval_usize(t)
    }

    /// The certified bound `p(t) gamma^t` at step `t`.
    pub fn bound_at(&self, t: usize) -> T {
        self.p(t) * self.gamma.powi(t as i32)
    }

    /// Sampled validity: positive non-decreasing polynomial and rate in [0,1).
    pub fn validate(&self, horizon: usize) -> bool {
        self.gamma >= T::zero()
            && self.gamma < T::one()
            && self.poly.is_positive_nondecreasing(horizon)
    }

    /// Same rate and degree with the polynomial rescaled by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            poly: self.poly.scaled(c),
            gamma: self.gamma,
            monotone: self.monotone && c <= T::one(),
        }
    }
}

/// A baseline algorithm bound to one problem instance: the one-step map, the
/// state-to-decision output map, its certificate, Lipschitz constant, and the
/// known fixed points in state space.
#[derive(Clone)]
pub struct BaselineSpec<T> {
    pub id: String,
    pub problem_id: String,
    pub state_dim: usize,
    pub decision_dim: usize,
    step: Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>,
    output: Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>,
    lift: Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>,
    certificate: Option<RateCertificate<T>>,
    pub lipschitz: T,
    fixed_points: Vec<Vector<T>>,
}

impl<T: Scalar> std::fmt::Debug for BaselineSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BaselineSpec")
            .field("id", &self.id)
            .field("problem_id", &self.problem_id)
            .field("state_dim", &self.state_dim)
            .field("lipschitz", &self.lipschitz)
            .field("certificate", &self.certificate)
            .finish()
    }
}

impl<T: Scalar> BaselineSpec<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        id: impl Into<String>,
        problem_id: impl Into<String>,
        state_dim: usize,
        decision_dim: usize,
        step: Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>,
        output: Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>,
        lift: Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>,
        certificate: Option<RateCertificate<T>>,
        lipschitz: T,
        fixed_points: Vec<Vector<T>>,
    ) -> Self {
        Self {
            id: id.into(),
            problem_id: problem_id.into(),
            state_dim,
            decision_dim,
            step,
            output,
            lift,
            certificate,
            lipschitz,
            fixed_points,
        }
    }

    pub fn step(&self, state: &Vector<T>) -> Vector<T> {
        (self.step)(state)
    }

    pub fn output(&self, state: &Vector<T>) -> Vector<T> {
        (self.output)(state)
    }

    /// Initial state for a decision-space starting point.
    pub fn init_state(&self, x0: &Vector<T>) -> Vector<T> {
        (self.lift)(x0)
    }

    pub fn certificate(&self) -> Option<&RateCertificate<T>> {
        self.certificate.as_ref()
    }

    pub fn require_certificate(&self) -> Result<&RateCertificate<T>, BaselineError> {
        self.certificate.as_ref().ok_or(BaselineError::MissingCertificate)
    }

    pub fn fixed_points(&self) -> &[Vector<T>] {
        &self.fixed_points
    }

    /// Euclidean distance from a state to the fixed-point set.
    pub fn distance_to_fix(&self, state: &Vector<T>) -> T {
        self.fixed_points
            .iter()
            .map(|f| (state - f).norm())
            .fold(sc::<T>(f64::INFINITY), |a, b| a.min(b))
    }

    /// Replaces the certificate polynomial by the constant `c` (an empirical
    /// envelope constant fitted over an instance family).
    pub fn with_certificate_constant(mut self, c: T) -> Self {
        if let Some(cert) = self.certificate.take() {
            self.certificate = Some(RateCertificate::new(
                Polynomial::constant(c),
                cert.gamma(),
                cert.is_monotone() && c <= T::one(),
            ));
        }
        self
    }

    /// Checks that every declared fixed point is invariant under the step map.
    pub fn fixed_points_invariant(&self, tol: T) -> bool {
        self.fixed_points.iter().all(|f| {
            let next = self.step(f);
            (next - f).norm() <= tol * (T::one() + f.norm())
        })
    }

    /// Bare trajectory of the baseline from a decision-space start.
    pub fn rollout(&self, x0: &Vector<T>, steps: usize) -> Vec<Vector<T>> {
        let mut states = Vec::with_capacity(steps + 1);
        let mut state = self.init_state(x0);
        states.push(state.clone());
        for _ in 0..steps {
            state = self.step(&state);
            states.push(state.clone());
        }
        states
    }
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// Gradient descent tuned for the restricted-secant class: step `mu / beta^2`,
/// certified monotone rate `sqrt(1 - mu^2 / beta^2)`, Lipschitz `1 + eta beta`.
pub fn gd_rsi<T: Scalar>(problem: &SmoothProblem<T>) -> Result<BaselineSpec<T>, BaselineError> {
    match problem.class {
        ProblemClass::Rsi | ProblemClass::StronglyConvex | ProblemClass::Quadratic => {}
        other => return Err(BaselineError::UnsupportedClass(other)),
    }
    if problem.mu <= T::zero() {
        return Err(BaselineError::NonPositiveMu(problem.mu.to_f64().unwrap_or(f64::NAN)));
    }
    let eta = problem.mu / (problem.beta * problem.beta);
    let gamma = (T::one() - (problem.mu / problem.beta) * (problem.mu / problem.beta)).sqrt();
    let grad = Arc::clone(&problem.gradient);
    let step = Arc::new(move |x: &Vector<T>| x - grad(x) * eta);
    let identity = Arc::new(|x: &Vector<T>| x.clone());
    Ok(BaselineSpec::from_parts(
        "gd",
        problem.id.clone(),
        problem.dim,
        problem.dim,
        step,
        identity.clone(),
        identity,
        Some(RateCertificate::monotone(gamma)),
        T::one() + eta * problem.beta,
        problem.optimizers.clone(),
    ))
}

/// Accelerated two-point method for strongly convex objectives. State stacks
/// the current and previous iterate; `eta = 1/beta`,
/// `alpha = (sqrt(kappa)-1)/(sqrt(kappa)+1)`, certified (non-monotone) rate
/// `sqrt(1 - 1/sqrt(kappa))`.
pub fn nag<T: Scalar>(problem: &SmoothProblem<T>) -> Result<BaselineSpec<T>, BaselineError> {
    if !problem.class.is_strongly_convex() {
        return Err(BaselineError::UnsupportedClass(problem.class));
    }
    if problem.mu <= T::zero() {
        return Err(BaselineError::NonPositiveMu(problem.mu.to_f64().unwrap_or(f64::NAN)));
    }
    let kappa = problem.beta / problem.mu;
    if kappa < T::one() {
        return Err(BaselineError::InvalidKappa(kappa.to_f64().unwrap_or(f64::NAN)));
    }
    let eta = T::one() / problem.beta;
    let sk = kappa.sqrt();
    let alpha = (sk - T::one()) / (sk + T::one());
    let gamma = (T::one() - T::one() / sk).sqrt();
    let d = problem.dim;
    let grad = Arc::clone(&problem.gradient);
    let one_plus = T::one() + alpha;
    let step = Arc::new(move |xi: &Vector<T>| {
        let x = xi.rows(0, d).into_owned();
        let x_prev = xi.rows(d, d).into_owned();
        let y = &x * one_plus - &x_prev * alpha;
        let x_next = &y - grad(&y) * eta;
        let mut out = Vector::<T>::zeros(2 * d);
        out.rows_mut(0, d).copy_from(&x_next);
        out.rows_mut(d, d).copy_from(&x);
        out
    });
    let output = Arc::new(move |xi: &Vector<T>| xi.rows(0, d).into_owned());
    let lift = Arc::new(move |x0: &Vector<T>| {
        let mut out = Vector::<T>::zeros(2 * d);
        out.rows_mut(0, d).copy_from(x0);
        out.rows_mut(d, d).copy_from(x0);
        out
    });
    let fixed_points = problem
        .optimizers
        .iter()
        .map(|xs| {
            let mut f = Vector::<T>::zeros(2 * d);
            f.rows_mut(0, d).copy_from(xs);
            f.rows_mut(d, d).copy_from(xs);
            f
        })
        .collect();
    let block_gain = (one_plus * one_plus + alpha * alpha).sqrt();
    let lipschitz = ((T::one() + eta * problem.beta) * (T::one() + eta * problem.beta)
        * block_gain
        * block_gain
        + T::one())
    .sqrt();
    Ok(BaselineSpec::from_parts(
        "nag",
        problem.id.clone(),
        2 * d,
        d,
        step,
        output,
        lift,
        Some(RateCertificate::new(Polynomial::one(), gamma, false)),
        lipschitz,
        fixed_points,
    ))
}

/// Both branches of the proximal-point rate formula,
/// `(1/sqrt(1 + c mu), 1/sqrt(1 + c^2/(beta mu)))`. The certificate takes
/// their minimum; callers can inspect the branches individually.
pub fn prox_rate_branches<T: Scalar>(mu: T, beta: T, c: T) -> (T, T) {
    let b1 = T::one() / (T::one() + c * mu).sqrt();
    let b2 = T::one() / (T::one() + c * c / (beta * mu)).sqrt();
    (b1, b2)
}

/// Proximal point method on a quadratic: the resolvent step
/// `(I + cH)^{-1} (x - c q)` in closed form.
pub fn proximal_point_quadratic<T: Scalar>(
    problem: &QuadraticProblem<T>,
    c: T,
) -> Result<BaselineSpec<T>, BaselineError> {
    if c <= T::zero() {
        return Err(BaselineError::InvalidProxParameter(c.to_f64().unwrap_or(f64::NAN)));
    }
    let d = problem.dim();
    let resolvent = Matrix::<T>::identity(d, d) + problem.hessian() * c;
    let chol = resolvent
        .cholesky()
        .ok_or_else(|| BaselineError::FixedPointSolve("resolvent not positive definite".into()))?;
    let shift = problem.linear_term() * c;
    let step = Arc::new(move |x: &Vector<T>| chol.solve(&(x - &shift)));
    let identity = Arc::new(|x: &Vector<T>| x.clone());
    let (b1, b2) = prox_rate_branches(problem.mu(), problem.beta(), c);
    let gamma = b1.min(b2);
    Ok(BaselineSpec::from_parts(
        "prox",
        problem.id.clone(),
        d,
        d,
        step,
        identity.clone(),
        identity,
        Some(RateCertificate::monotone(gamma)),
        T::one() / (T::one() + c * problem.mu()),
        vec![problem.x_star().clone()],
    ))
}

/// Proximal point method with a caller-supplied proximal oracle for
/// non-quadratic convex objectives. The oracle must return
/// `argmin_z F(z) + |z - x|^2 / (2c)`.
pub fn proximal_point_with_oracle<T: Scalar>(
    problem: &SmoothProblem<T>,
    oracle: Option<Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>>,
    c: T,
) -> Result<BaselineSpec<T>, BaselineError> {
    if c <= T::zero() {
        return Err(BaselineError::InvalidProxParameter(c.to_f64().unwrap_or(f64::NAN)));
    }
    let oracle = oracle.ok_or(BaselineError::MissingProxOracle)?;
    let (b1, b2) = prox_rate_branches(problem.mu, problem.beta, c);
    let gamma = b1.min(b2);
    let step = Arc::new(move |x: &Vector<T>| oracle(x));
    let identity = Arc::new(|x: &Vector<T>| x.clone());
    Ok(BaselineSpec::from_parts(
        "prox",
        problem.id.clone(),
        problem.dim,
        problem.dim,
        step,
        identity.clone(),
        identity,
        Some(RateCertificate::monotone(gamma)),
        T::one(),
        problem.optimizers.clone(),
    ))
}

/// Default iteration budget for iterated polytope projections.
pub const PROJECTION_MAX_ITERS: usize = 20_000;
/// Default feasibility tolerance for iterated polytope projections.
pub const PROJECTION_TOL: f64 = 1e-10;

/// Componentwise clamp onto the symmetric box `|x_i| <= bound`.
pub fn project_box<T: Scalar>(x: &Vector<T>, bound: T) -> Vector<T> {
    Vector::from_iterator(x.len(), x.iter().map(|&v| v.clamp(-bound, bound)))
}

/// Euclidean projection onto a polytope. Axis-aligned boxes are clamped
/// exactly; general half-space intersections use Dykstra's alternating
/// projections, which converge to the true projection.
pub fn project_polytope<T: Scalar>(
    x: &Vector<T>,
    polytope: &Polytope<T>,
    max_iters: usize,
    tol: T,
) -> Result<Vector<T>, BaselineError> {
    if let Some(b) = polytope.as_box() {
        return Ok(b.clamp(x));
    }
    let m = polytope.num_constraints();
    let a = polytope.rows();
    let rhs = polytope.rhs();
    let row_norms_sq: Vec<T> = (0..m)
        .map(|i| a.row(i).transpose().norm_squared())
        .collect();
    let mut y = x.clone();
    let mut corrections = vec![Vector::<T>::zeros(x.len()); m];
    let mut iters = 0usize;
    while iters < max_iters {
        let mut moved = T::zero();
        for i in 0..m {
            iters += 1;
            let z = &y + &corrections[i];
            let viol = a.row(i).transpose().dot(&z) - rhs[i];
            let y_new = if viol > T::zero() && row_norms_sq[i] > T::zero() {
                &z - a.row(i).transpose() * (viol / row_norms_sq[i])
            } else {
                z.clone()
            };
            corrections[i] = &z - &y_new;
            moved += (&y_new - &y).norm();
            y = y_new;
        }
        if polytope.violation(&y) <= tol && moved <= tol {
            return Ok(y);
        }
    }
    let violation = polytope.violation(&y);
    if violation <= tol {
        return Ok(y);
    }
    Err(BaselineError::ProjectionBudget {
        iters: max_iters,
        tol: tol.to_f64().unwrap_or(f64::NAN),
        violation: violation.to_f64().unwrap_or(f64::NAN),
    })
}

/// Projected gradient descent on a strongly convex quadratic over a polytope:
/// `x+ = proj(x - eta (Hx + q))` with certified monotone rate `1 - eta mu` for
/// `eta` in `(0, 1/beta]`. The fixed point is the constrained minimizer,
/// located by a direct active-set solve.
pub fn projected_gradient<T: Scalar>(
    problem: &QuadraticProblem<T>,
    polytope: &Polytope<T>,
    eta: T,
) -> Result<BaselineSpec<T>, BaselineError> {
    if problem.mu() <= T::zero() {
        return Err(BaselineError::NonPositiveMu(problem.mu().to_f64().unwrap_or(f64::NAN)));
    }
    let max_eta = T::one() / problem.beta();
    if eta <= T::zero() || eta > max_eta * (T::one() + sc(1e-12)) {
        return Err(BaselineError::InvalidStepSize {
            eta: eta.to_f64().unwrap_or(f64::NAN),
            max: max_eta.to_f64().unwrap_or(f64::NAN),
        });
    }
    let fixed = solve_qp(problem.hessian(), problem.linear_term(), polytope)
        .map_err(|e| BaselineError::FixedPointSolve(e.to_string()))?
        .x;
    let gamma = T::one() - eta * problem.mu();
    let hess = problem.hessian().clone();
    let lin = problem.linear_term().clone();
    let poly = polytope.clone();
    let step = Arc::new(move |x: &Vector<T>| {
        let free = x - (&hess * x + &lin) * eta;
        project_polytope(&free, &poly, PROJECTION_MAX_ITERS, sc(PROJECTION_TOL))
            .expect("projection within budget on validated polytope")
    });
    let identity = Arc::new(|x: &Vector<T>| x.clone());
    Ok(BaselineSpec::from_parts(
        "pgd",
        problem.id.clone(),
        problem.dim(),
        problem.dim(),
        step,
        identity.clone(),
        identity,
        Some(RateCertificate::monotone(gamma)),
        T::one() + eta * problem.beta(),
        vec![fixed],
    ))
}

/// Builds the named baseline for a problem, using the canonical tuning.
pub fn by_id<T: Scalar>(
    id: &str,
    problem: &SmoothProblem<T>,
    quadratic: Option<&QuadraticProblem<T>>,
    polytope: Option<&Polytope<T>>,
) -> Result<BaselineSpec<T>, BaselineError> {
    match id {
        "gd" => gd_rsi(problem),
        "nag" => nag(problem),
        "prox" => {
            let q = quadratic.ok_or(BaselineError::MissingProxOracle)?;
            proximal_point_quadratic(q, T::one())
        }
        "pgd" => {
            let q = quadratic.ok_or_else(|| {
                BaselineError::FixedPointSolve("projected gradient needs a quadratic problem".into())
            })?;
            let p = polytope.ok_or_else(|| {
                BaselineError::FixedPointSolve("projected gradient needs a polytope".into())
            })?;
            projected_gradient(q, p, T::one() / q.beta())
        }
        other => Err(BaselineError::FixedPointSolve(format!(
            "unknown baseline id '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::random_sc_quadratic;
    use approx::assert_relative_eq;

    fn quad(kappa: f64, seed: u64) -> QuadraticProblem<f64> {
        random_sc_quadratic(6, kappa, seed).unwrap()
    }

    #[test]
    fn gd_perfectly_conditioned_reaches_optimum_in_one_step() {
        // kappa = 1: eta = 1/beta, gamma = 0, one step lands on x*
        let p = quad(1.0 + 1e-15, 0);
        let smooth = p.to_smooth();
        let spec = gd_rsi(&smooth).unwrap();
        let cert = spec.require_certificate().unwrap();
        assert!(cert.gamma() < 1e-6);
        let x0 = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let x1 = spec.step(&x0);
        assert!((x1 - p.x_star()).norm() < 1e-9);
    }

    #[test]
    fn gd_paper_tuning() {
        // mu = 1, beta = 10: eta = 0.01, gamma = sqrt(0.99)
        let h = Matrix::<f64>::from_diagonal(&Vector::from_vec(vec![1.0, 10.0]));
        let p = QuadraticProblem::new("diag", h, Vector::zeros(2), 0.0).unwrap();
        let spec = gd_rsi(&p.to_smooth()).unwrap();
        let cert = spec.require_certificate().unwrap();
        assert_relative_eq!(cert.gamma(), 0.99f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(spec.lipschitz, 1.0 + 0.01 * 10.0, max_relative = 1e-12);
        // step map applied to an axis point: x - 0.01 * H x
        let e0 = Vector::from_vec(vec![1.0, 0.0]);
        let s = spec.step(&e0);
        assert_relative_eq!(s[0], 0.99, max_relative = 1e-12);
    }

    #[test]
    fn nag_zero_momentum_at_kappa_one() {
        let p = quad(1.0 + 1e-15, 1);
        let spec = nag(&p.to_smooth()).unwrap();
        // alpha = 0: the step reduces to gradient descent with eta = 1/beta
        let x0 = Vector::from_vec(vec![0.4, 0.0, 1.0, -0.3, 0.2, 0.9]);
        let xi = spec.init_state(&x0);
        let next = spec.step(&xi);
        let x1 = spec.output(&next);
        assert!((x1 - p.x_star()).norm() < 1e-9);
    }

    #[test]
    fn nag_kappa_100_constants() {
        let h = Matrix::<f64>::from_diagonal(&Vector::from_vec(vec![1.0, 100.0]));
        let p = QuadraticProblem::new("diag", h, Vector::zeros(2), 0.0).unwrap();
        let spec = nag(&p.to_smooth()).unwrap();
        let cert = spec.require_certificate().unwrap();
        assert_relative_eq!(cert.gamma(), 0.9f64.sqrt(), max_relative = 1e-12);
        assert!(!cert.is_monotone());
        // fixed point [x*; x*] invariant
        assert!(spec.fixed_points_invariant(1e-12));
    }

    #[test]
    fn prox_rate_min_of_branches() {
        // mu = 1, beta = 10, c = 1: gamma = min(1/sqrt(2), 1/sqrt(1.1))
        let (b1, b2) = prox_rate_branches(1.0f64, 10.0, 1.0);
        assert_relative_eq!(b1, 1.0 / 2.0f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(b2, 1.0 / 1.1f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(b1.min(b2), std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-12);
    }

    #[test]
    fn prox_large_c_lands_near_optimum() {
        let p = quad(50.0, 2);
        let spec = proximal_point_quadratic(&p, 1e6).unwrap();
        let x0 = Vector::from_element(6, 2.0);
        let x1 = spec.step(&x0);
        assert!((x1 - p.x_star()).norm() < 1e-4);
    }

    #[test]
    fn prox_requires_oracle_for_non_quadratic() {
        let p = crate::problems::pl_sine::<f64>(3);
        assert!(matches!(
            proximal_point_with_oracle(&p, None, 1.0),
            Err(BaselineError::MissingProxOracle)
        ));
    }

    #[test]
    fn pgd_unconstrained_box_equals_gd() {
        let p = quad(10.0, 3);
        let poly = Polytope::box_bound(6, 1e6).unwrap();
        let eta = 1.0 / p.beta();
        let spec = projected_gradient(&p, &poly, eta).unwrap();
        let x0 = Vector::from_element(6, 0.5);
        let manual = &x0 - p.gradient(&x0) * eta;
        assert!((spec.step(&x0) - manual).norm() < 1e-14);
        let cert = spec.require_certificate().unwrap();
        assert_relative_eq!(cert.gamma(), 1.0 - eta * p.mu(), max_relative = 1e-12);
    }

    #[test]
    fn pgd_rejects_bad_step() {
        let p = quad(10.0, 4);
        let poly = Polytope::box_bound(6, 1.0).unwrap();
        assert!(projected_gradient(&p, &poly, 2.0 / p.beta()).is_err());
        assert!(projected_gradient(&p, &poly, 0.0).is_err());
    }

    #[test]
    fn clamp_examples() {
        let x = Vector::from_vec(vec![0.5]);
        assert_relative_eq!(project_box(&x, 0.25)[0], 0.25);
        // interior point unchanged
        let y = Vector::from_vec(vec![0.1, -0.2]);
        let p = project_box(&y, 0.25);
        assert_eq!(p, y);
    }

    #[test]
    fn dykstra_matches_clamp_on_boxes_and_is_interior_identity() {
        let poly = Polytope::<f64>::box_bound(3, 0.5).unwrap();
        let x = Vector::from_vec(vec![0.1, 0.2, -0.3]);
        let y = project_polytope(&x, &poly, 1000, 1e-10).unwrap();
        assert_eq!(x, y);
    }
}
