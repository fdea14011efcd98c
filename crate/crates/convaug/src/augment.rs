//! Augmented update rules: the baseline step plus an additive, exponentially
//! decaying innovation. Covers decay envelopes, sparse injection schedules
//! with their rate-degradation arithmetic, trajectory reconstruction against
//! a monotone baseline, polytope feasibility correction of innovations, and
//! step-map composition.

use std::sync::Arc;

use thiserror::Error;

use crate::baselines::{BaselineSpec, RateCertificate};
use crate::poly::Polynomial;
use crate::problems::{Polytope, SmoothProblem};
use crate::rng::{unit_vector, SeedSplitter};
use crate::scalar::{sc, Scalar, Vector};

/// Scan cap when searching for the smallest admissible injection period.
pub const PERIOD_SCAN_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("injection period {period} gives envelope mass {rho} >= 1; smallest valid period is {minimal:?}")]
    InvalidPeriod {
        period: usize,
        rho: f64,
        minimal: Option<usize>,
    },
    #[error("degradation factor {tau} outside the open interval (1, {max})")]
    InvalidTau { tau: f64, max: f64 },
    #[error("no admissible period found below the scan cap {0}")]
    PeriodScanExhausted(usize),
    #[error("state became non-finite at step {0}")]
    Diverged(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("replay innovation sequence has length {got}, expected {want}")]
    ReplayLength { got: usize, want: usize },
    #[error("reconstruction requires a monotone baseline certificate")]
    NonMonotoneBaseline,
    #[error("target trajectory must contain at least two states")]
    TargetTooShort,
    #[error("correction anchor violates the constraints by {0}")]
    InfeasibleAnchor(f64),
    #[error("baseline error: {0}")]
    Baseline(#[from] crate::baselines::BaselineError),
}

// ---------------------------------------------------------------------------
// Decay envelopes
// ---------------------------------------------------------------------------

/// The signal class bounded by `p(t) gamma^t` for a positive non-decreasing
/// polynomial `p`.
#[derive(Debug, Clone)]
pub struct DecayEnvelope<T> {
    poly: Polynomial<T>,
    gamma: T,
}

/// Result of checking a recorded signal against an absolute envelope bound.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeCheck<T> {
    pub pass: bool,
    pub worst_ratio: T,
    pub worst_index: usize,
}

impl<T: Scalar> DecayEnvelope<T> {
    pub fn new(poly: Polynomial<T>, gamma: T) -> Self {
        debug_assert!(gamma >= T::zero() && gamma < T::one());
        Self { poly, gamma }
    }

    pub fn from_certificate(cert: &RateCertificate<T>) -> Self {
        Self::new(cert.poly().clone(), cert.gamma())
    }

    pub fn constant(c: T, gamma: T) -> Self {
        Self::new(Polynomial::constant(c), gamma)
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn poly(&self) -> &Polynomial<T> {
        &self.poly
    }

    /// `p(t) gamma^t`.
    pub fn bound_at(&self, t: usize) -> T {
        self.poly.eval_usize(t) * self.gamma.powi(t as i32)
    }

    /// Scales the polynomial by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self::new(self.poly.scaled(c), self.gamma)
    }

    /// Smallest constant `c` with `|v_t| <= c p(t) gamma^t` over entries above
    /// the numerical floor. `None` when no entry is above the floor.
    pub fn fit_constant(&self, magnitudes: &[T], floor: T) -> Option<T> {
        let mut c: Option<T> = None;
        for (t, &m) in magnitudes.iter().enumerate() {
            if m <= floor {
                continue;
            }
            let bound = self.bound_at(t);
            if bound <= T::zero() {
                return Some(sc(f64::INFINITY));
            }
            let ratio = m / bound;
            c = Some(match c {
                None => ratio,
                Some(prev) => prev.max(ratio),
            });
        }
        c
    }

    /// Absolute membership: `|v_t| <= p(t) gamma^t (1 + rel_slack)` for all
    /// recorded `t`. Returns the worst ratio and where it occurred.
    pub fn check(&self, magnitudes: &[T], rel_slack: T) -> EnvelopeCheck<T> {
        let mut worst_ratio = T::zero();
        let mut worst_index = 0usize;
        for (t, &m) in magnitudes.iter().enumerate() {
            let bound = self.bound_at(t);
            let ratio = if bound > T::zero() {
                m / bound
            } else if m == T::zero() {
                T::zero()
            } else {
                sc(f64::INFINITY)
            };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_index = t;
            }
        }
        EnvelopeCheck {
            pass: worst_ratio <= T::one() + rel_slack,
            worst_ratio,
            worst_index,
        }
    }
}

// ---------------------------------------------------------------------------
// Injection schedules and rate degradation
// ---------------------------------------------------------------------------

/// Deterministic generator for the auxiliary injected sequence `w_k`.
#[derive(Debug, Clone)]
pub enum SignalGenerator<T> {
    Zero {
        dim: usize,
    },
    /// `w_k = amplitude * rate^k * (random unit direction derived from seed, k)`.
    GeometricNoise {
        dim: usize,
        amplitude: T,
        rate: T,
        seed: u64,
    },
    /// Explicit prefix; zero beyond the stored values.
    Sequence {
        dim: usize,
        values: Vec<Vector<T>>,
    },
}

impl<T: Scalar> SignalGenerator<T> {
    pub fn dim(&self) -> usize {
        match self {
            SignalGenerator::Zero { dim } => *dim,
            SignalGenerator::GeometricNoise { dim, .. } => *dim,
            SignalGenerator::Sequence { dim, .. } => *dim,
        }
    }

    pub fn at(&self, k: usize) -> Vector<T> {
        match self {
            SignalGenerator::Zero { dim } => Vector::zeros(*dim),
            SignalGenerator::GeometricNoise {
                dim,
                amplitude,
                rate,
                seed,
            } => {
                let mut rng = SeedSplitter::new(*seed).stream("injected-signal", k as u64);
                unit_vector::<T, _>(&mut rng, *dim) * (*amplitude * rate.powi(k as i32))
            }
            SignalGenerator::Sequence { dim, values } => values
                .get(k)
                .cloned()
                .unwrap_or_else(|| Vector::zeros(*dim)),
        }
    }
}

/// Result of degrading a certificate by period-`N` injection.
#[derive(Debug, Clone, Copy)]
pub struct DegradedRate<T> {
    /// `p(N) gamma^N`, the per-block contraction of the composed map.
    pub rho: T,
    /// `p(N)^{1/N} gamma`, the per-step rate after degradation.
    pub rate: T,
    /// Polynomial degree of the degraded envelope (`m + 1`).
    pub degree: usize,
}

fn minimal_valid_period<T: Scalar>(cert: &RateCertificate<T>) -> Option<usize> {
    (1..=PERIOD_SCAN_CAP).find(|&n| cert.p(n) * cert.gamma().powi(n as i32) < T::one())
}

/// Worst-case rate after injecting a decaying signal every `period` steps:
/// the rate rises from `gamma` to `p(N)^{1/N} gamma` and the envelope degree
/// grows by one. Exact for monotone certificates (`p = 1`): the rate is
/// unchanged.
pub fn degraded_rate<T: Scalar>(
    cert: &RateCertificate<T>,
    period: usize,
) -> Result<DegradedRate<T>, AugmentError> {
    if period == 0 {
        return Err(AugmentError::InvalidPeriod {
            period,
            rho: f64::INFINITY,
            minimal: minimal_valid_period(cert),
        });
    }
    let gamma = cert.gamma();
    let rho = cert.p(period) * gamma.powi(period as i32);
    if rho >= T::one() {
        return Err(AugmentError::InvalidPeriod {
            period,
            rho: rho.to_f64().unwrap_or(f64::NAN),
            minimal: minimal_valid_period(cert),
        });
    }
    let rate = if cert.poly().is_one() {
        gamma
    } else {
        cert.p(period).powf(T::one() / sc(period as f64)) * gamma
    };
    Ok(DegradedRate {
        rho,
        rate,
        degree: cert.degree() + 1,
    })
}

/// Smallest period `N` with `p(N) < tau^N`, for a degradation target
/// `tau` in `(1, 1/gamma)`. The resulting degraded rate is at most
/// `tau * gamma`.
pub fn min_injection_period<T: Scalar>(
    cert: &RateCertificate<T>,
    tau: T,
) -> Result<usize, AugmentError> {
    let gamma = cert.gamma();
    let max = if gamma > T::zero() {
        T::one() / gamma
    } else {
        sc(f64::INFINITY)
    };
    if tau <= T::one() || tau >= max {
        return Err(AugmentError::InvalidTau {
            tau: tau.to_f64().unwrap_or(f64::NAN),
            max: max.to_f64().unwrap_or(f64::NAN),
        });
    }
    (1..=PERIOD_SCAN_CAP)
        .find(|&n| cert.p(n) < tau.powi(n as i32))
        .ok_or(AugmentError::PeriodScanExhausted(PERIOD_SCAN_CAP))
}

/// Sparse injection schedule: emits `w_{(t+1)/N - 1}` when `(t+1) mod N == 0`
/// and zero otherwise, with `rho = p(N) gamma^N < 1` validated against the
/// baseline certificate.
#[derive(Debug, Clone)]
pub struct InjectionSchedule<T> {
    period: usize,
    rho: T,
    generator: SignalGenerator<T>,
}

impl<T: Scalar> InjectionSchedule<T> {
    pub fn new(
        cert: &RateCertificate<T>,
        period: usize,
        generator: SignalGenerator<T>,
    ) -> Result<Self, AugmentError> {
        let d = degraded_rate(cert, period)?;
        Ok(Self {
            period,
            rho: d.rho,
            generator,
        })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn generator(&self) -> &SignalGenerator<T> {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn value_at(&self, t: usize) -> Vector<T> {
        sparse_inject(self, t)
    }
}

/// The sparse emission rule of an injection schedule.
pub fn sparse_inject<T: Scalar>(schedule: &InjectionSchedule<T>, t: usize) -> Vector<T> {
    let n = schedule.period;
    if (t + 1) % n == 0 {
        schedule.generator.at((t + 1) / n - 1)
    } else {
        Vector::zeros(schedule.generator.dim())
    }
}

// ---------------------------------------------------------------------------
// Proof-chain envelopes
// ---------------------------------------------------------------------------

/// Envelope guaranteed for a monotone baseline of rate `gamma` under
/// every-step innovations bounded by `v_poly(t) gamma^t`:
/// `dist_t <= gamma^t (dist_0 + q(t - 1) / gamma)` with `q` the running sum
/// of `v_poly`. Degree rises by one; the rate is unchanged.
pub fn every_step_augmentation_envelope<T: Scalar>(
    gamma: T,
    v_poly: &Polynomial<T>,
    dist0: T,
) -> DecayEnvelope<T> {
    assert!(gamma > T::zero() && gamma < T::one());
    let q = v_poly.cumulative_sum();
    let r = q.shifted(-T::one()).scaled(T::one() / gamma).add_constant(dist0);
    DecayEnvelope::new(r, gamma)
}

/// Envelope from the composed-map argument for sparse injection with period
/// `n` into a `p(t) gamma^t` baseline, with injected values bounded by
/// `w_poly(k) rho^k`. This is the explicit constant carried by the
/// composition chain; an empirically fitted constant is usually much smaller,
/// and neither is tight.
pub fn sparse_augmentation_envelope<T: Scalar>(
    cert: &RateCertificate<T>,
    n: usize,
    w_poly: &Polynomial<T>,
    dist0: T,
) -> Result<DecayEnvelope<T>, AugmentError> {
    let d = degraded_rate(cert, n)?;
    let rho = d.rho;
    let q_w = w_poly.cumulative_sum();
    // per-block bound: dist(block k) <= rho^k (dist0 + q_w(k-1) / rho)
    let block_poly = q_w.shifted(-T::one()).scaled(T::one() / rho).add_constant(dist0);
    let n_t: T = sc(n as f64);
    let front = cert.p(n.saturating_sub(1)) * cert.gamma()
        / rho.powf(sc::<T>(2.0) - T::one() / n_t);
    let r = block_poly.arg_scaled(n_t).scaled(front);
    Ok(DecayEnvelope::new(r, d.rate))
}

// ---------------------------------------------------------------------------
// Innovation sources and augmented runs
// ---------------------------------------------------------------------------

/// A perturbation source that carries internal recurrent state across the
/// steps of one rollout.
pub trait StatefulInnovation<T: Scalar>: Send + Sync {
    fn begin(&self, xi0: &Vector<T>, problem: &SmoothProblem<T>) -> Box<dyn InnovationCursor<T> + '_>;
    fn state_dim(&self) -> usize;
}

pub trait InnovationCursor<T: Scalar> {
    /// Innovation to add after the baseline step at time `t`; `state` is the
    /// pre-step state `xi_t`.
    fn next(&mut self, t: usize, state: &Vector<T>, problem: &SmoothProblem<T>) -> Vector<T>;
}

/// Where the additive innovation comes from.
#[derive(Clone)]
pub enum PerturbationSource<T: Scalar> {
    /// Bare baseline.
    None,
    /// Sparse schedule of pre-bounded decaying signals.
    Schedule(InjectionSchedule<T>),
    /// Previously recorded innovations, replayed verbatim.
    Replay(Vec<Vector<T>>),
    /// Learned or otherwise stateful source.
    Stateful(Arc<dyn StatefulInnovation<T>>),
}

impl<T: Scalar> std::fmt::Debug for PerturbationSource<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PerturbationSource::None => write!(f, "None"),
            PerturbationSource::Schedule(s) => write!(f, "Schedule(period={})", s.period()),
            PerturbationSource::Replay(v) => write!(f, "Replay(len={})", v.len()),
            PerturbationSource::Stateful(_) => write!(f, "Stateful"),
        }
    }
}

/// Constraint handling during an augmented run.
#[derive(Debug, Clone)]
pub struct FeasibilityPolicy<T> {
    pub polytope: Polytope<T>,
    /// Apply the innovation correction before adding. When false the
    /// constraints are only monitored (negative-control mode).
    pub correct: bool,
    pub max_iters: usize,
    pub tol: T,
}

impl<T: Scalar> FeasibilityPolicy<T> {
    /// Correction enabled with the default budget `10 * M * d` and
    /// tolerance 1e-10.
    pub fn correcting(polytope: Polytope<T>) -> Self {
        let max_iters = 10 * polytope.num_constraints() * polytope.dim();
        Self {
            polytope,
            correct: true,
            max_iters,
            tol: sc(1e-10),
        }
    }

    /// Monitoring only; innovations pass through unmodified.
    pub fn monitoring(polytope: Polytope<T>) -> Self {
        let mut p = Self::correcting(polytope);
        p.correct = false;
        p
    }
}

/// Completed augmented trajectory with per-step innovations, distances to the
/// baseline's fixed-point set, and feasibility flags.
#[derive(Debug, Clone)]
pub struct AugmentedRun<T> {
    pub problem_id: String,
    pub baseline_id: String,
    pub states: Vec<Vector<T>>,
    pub outputs: Vec<Vector<T>>,
    pub innovations: Vec<Vector<T>>,
    pub distances: Vec<T>,
    pub feasible: Vec<bool>,
    pub correction_fallbacks: usize,
}

impl<T: Scalar> AugmentedRun<T> {
    /// Number of steps taken (states run one longer).
    pub fn steps(&self) -> usize {
        self.innovations.len()
    }

    pub fn innovation_norms(&self) -> Vec<T> {
        self.innovations.iter().map(|v| v.norm()).collect()
    }

    pub fn final_distance(&self) -> T {
        *self.distances.last().expect("run has at least the initial state")
    }

    /// Per-step state increments `xi_{t+1} - xi_t`.
    pub fn update_norms(&self) -> Vec<T> {
        self.states
            .windows(2)
            .map(|w| (&w[1] - &w[0]).norm())
            .collect()
    }

    pub fn all_feasible(&self) -> bool {
        self.feasible.iter().all(|&f| f)
    }
}

/// Runs `xi_{t+1} = step(xi_t) + v_t` for `steps` steps from the lifted
/// initial decision `x0`, recording states, innovations, distances and
/// feasibility of the decision outputs.
pub fn run_augmented<T: Scalar>(
    problem: &SmoothProblem<T>,
    baseline: &BaselineSpec<T>,
    source: &PerturbationSource<T>,
    x0: &Vector<T>,
    steps: usize,
    feasibility: Option<&FeasibilityPolicy<T>>,
) -> Result<AugmentedRun<T>, AugmentError> {
    if x0.len() != baseline.decision_dim {
        return Err(AugmentError::DimensionMismatch(format!(
            "x0 has length {}, baseline decision dimension is {}",
            x0.len(),
            baseline.decision_dim
        )));
    }
    match source {
        PerturbationSource::Schedule(s) if s.dim() != baseline.state_dim => {
            return Err(AugmentError::DimensionMismatch(format!(
                "schedule emits dimension {}, baseline state dimension is {}",
                s.dim(),
                baseline.state_dim
            )))
        }
        PerturbationSource::Replay(vs) if vs.len() != steps => {
            return Err(AugmentError::ReplayLength {
                got: vs.len(),
                want: steps,
            })
        }
        PerturbationSource::Stateful(s) if s.state_dim() != baseline.state_dim => {
            return Err(AugmentError::DimensionMismatch(format!(
                "stateful source emits dimension {}, baseline state dimension is {}",
                s.state_dim(),
                baseline.state_dim
            )))
        }
        _ => {}
    }

    let xi0 = baseline.init_state(x0);
    let mut cursor = match source {
        PerturbationSource::Stateful(s) => Some(s.begin(&xi0, problem)),
        _ => None,
    };

    let feas_tol = sc::<T>(1e-10);
    let mut states = Vec::with_capacity(steps + 1);
    let mut outputs = Vec::with_capacity(steps + 1);
    let mut innovations = Vec::with_capacity(steps);
    let mut distances = Vec::with_capacity(steps + 1);
    let mut feasible = Vec::with_capacity(steps + 1);
    let mut fallbacks = 0usize;

    let record = |state: &Vector<T>,
                  states: &mut Vec<Vector<T>>,
                  outputs: &mut Vec<Vector<T>>,
                  distances: &mut Vec<T>,
                  feasible: &mut Vec<bool>| {
        let out = baseline.output(state);
        distances.push(baseline.distance_to_fix(state));
        feasible.push(match feasibility {
            Some(fp) => fp.polytope.contains(&out, feas_tol),
            None => true,
        });
        outputs.push(out);
        states.push(state.clone());
    };

    let mut state = xi0;
    record(&state, &mut states, &mut outputs, &mut distances, &mut feasible);

    for t in 0..steps {
        let base_next = baseline.step(&state);
        let mut v = match source {
            PerturbationSource::None => Vector::zeros(baseline.state_dim),
            PerturbationSource::Schedule(s) => s.value_at(t),
            PerturbationSource::Replay(vs) => vs[t].clone(),
            PerturbationSource::Stateful(_) => cursor
                .as_mut()
                .expect("cursor initialized for stateful source")
                .next(t, &state, problem),
        };
        if let Some(fp) = feasibility {
            if fp.correct && v.norm() > T::zero() {
                let (corrected, outcome) =
                    feasibility_correct(&v, &fp.polytope, &base_next, fp.max_iters, fp.tol)?;
                if matches!(outcome, CorrectionOutcome::FellBackToZero) {
                    fallbacks += 1;
                }
                v = corrected;
            }
        }
        let next = &base_next + &v;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(AugmentError::Diverged(t + 1));
        }
        innovations.push(v);
        state = next;
        record(&state, &mut states, &mut outputs, &mut distances, &mut feasible);
    }

    Ok(AugmentedRun {
        problem_id: problem.id.clone(),
        baseline_id: baseline.id.clone(),
        states,
        outputs,
        innovations,
        distances,
        feasible,
        correction_fallbacks: fallbacks,
    })
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

/// Recovers the innovation sequence that makes the (monotone) baseline
/// reproduce a realized target trajectory exactly:
/// `v_t = chi_{t+1} - step(chi_t)`. Replaying the result from `chi_0`
/// regenerates the target.
pub fn reconstruct_innovation<T: Scalar>(
    problem: &SmoothProblem<T>,
    baseline: &BaselineSpec<T>,
    target: &[Vector<T>],
) -> Result<Vec<Vector<T>>, AugmentError> {
    let cert = baseline.require_certificate()?;
    if !cert.is_monotone() {
        return Err(AugmentError::NonMonotoneBaseline);
    }
    if target.len() < 2 {
        return Err(AugmentError::TargetTooShort);
    }
    for chi in target {
        if chi.len() != baseline.state_dim {
            return Err(AugmentError::DimensionMismatch(format!(
                "target state has length {}, baseline state dimension is {} (problem {})",
                chi.len(),
                baseline.state_dim,
                problem.id
            )));
        }
    }
    Ok(target
        .windows(2)
        .map(|w| &w[1] - baseline.step(&w[0]))
        .collect())
}

// ---------------------------------------------------------------------------
// Feasibility correction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionOutcome {
    /// The innovation already satisfied the constraints.
    Unchanged,
    /// The innovation was moved onto the feasible set.
    Corrected,
    /// The iteration budget ran out; the zero innovation (always admissible
    /// from a feasible anchor) was returned instead.
    FellBackToZero,
}

/// Shrinks an innovation so the perturbed iterate `anchor + v` stays in the
/// polytope. Boxes are clamped exactly; general half-space systems use cyclic
/// relaxation (unit relaxation parameter) over violated constraints.
pub fn feasibility_correct<T: Scalar>(
    v: &Vector<T>,
    polytope: &Polytope<T>,
    anchor: &Vector<T>,
    max_iters: usize,
    tol: T,
) -> Result<(Vector<T>, CorrectionOutcome), AugmentError> {
    let anchor_violation = polytope.violation(anchor);
    if anchor_violation > tol {
        return Err(AugmentError::InfeasibleAnchor(
            anchor_violation.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let candidate = anchor + v;
    if polytope.violation(&candidate) <= T::zero() {
        return Ok((v.clone(), CorrectionOutcome::Unchanged));
    }
    if let Some(b) = polytope.as_box() {
        let clamped = b.clamp(&candidate);
        return Ok((clamped - anchor, CorrectionOutcome::Corrected));
    }
    let a = polytope.rows();
    let rhs = polytope.rhs();
    let m = polytope.num_constraints();
    let row_norms_sq: Vec<T> = (0..m)
        .map(|i| a.row(i).transpose().norm_squared())
        .collect();
    let mut y = candidate;
    let mut visits = 0usize;
    while visits < max_iters {
        let mut worst = T::zero();
        for i in 0..m {
            visits += 1;
            let viol = a.row(i).transpose().dot(&y) - rhs[i];
            if viol > T::zero() && row_norms_sq[i] > T::zero() {
                y -= a.row(i).transpose() * (viol / row_norms_sq[i]);
                worst = worst.max(viol);
            }
        }
        if worst <= tol {
            return Ok((y - anchor, CorrectionOutcome::Corrected));
        }
    }
    if polytope.violation(&y) <= tol {
        return Ok((y - anchor, CorrectionOutcome::Corrected));
    }
    Ok((
        Vector::zeros(v.len()),
        CorrectionOutcome::FellBackToZero,
    ))
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

/// `n`-fold composition of a baseline step with the matching certificate.
#[derive(Debug, Clone)]
pub struct ComposedBaseline<T: Scalar> {
    pub spec: BaselineSpec<T>,
    /// Envelope mass per block; `None` for `n = 1` (the spec is unchanged).
    pub rho: Option<T>,
    /// Whether the composed spec carries a valid monotone certificate.
    pub certified: bool,
}

/// Composes the step map `n` times. Fixed points are preserved. For `n >= 2`
/// the composed map gets a monotone certificate with rate `p(n) gamma^n`
/// whenever that mass is below one; otherwise the certificate is omitted.
pub fn compose_baseline<T: Scalar>(
    baseline: &BaselineSpec<T>,
    n: usize,
) -> Result<ComposedBaseline<T>, AugmentError> {
    if n == 0 {
        return Err(AugmentError::InvalidPeriod {
            period: 0,
            rho: f64::INFINITY,
            minimal: Some(1),
        });
    }
    if n == 1 {
        return Ok(ComposedBaseline {
            spec: baseline.clone(),
            rho: None,
            certified: baseline.certificate().is_some(),
        });
    }
    let (certificate, rho, certified) = match baseline.certificate() {
        Some(cert) => {
            let rho = cert.p(n) * cert.gamma().powi(n as i32);
            if rho < T::one() {
                (Some(RateCertificate::monotone(rho)), Some(rho), true)
            } else {
                (None, Some(rho), false)
            }
        }
        None => (None, None, false),
    };
    let inner = baseline.clone();
    let step = Arc::new(move |x: &Vector<T>| {
        let mut s = inner.step(x);
        for _ in 1..n {
            s = inner.step(&s);
        }
        s
    });
    let out_src = baseline.clone();
    let output = Arc::new(move |x: &Vector<T>| out_src.output(x));
    let lift_src = baseline.clone();
    let lift = Arc::new(move |x: &Vector<T>| lift_src.init_state(x));
    let mut lip = T::one();
    for _ in 0..n {
        lip *= baseline.lipschitz;
    }
    let spec = BaselineSpec::from_parts(
        format!("{}-x{}", baseline.id, n),
        baseline.problem_id.clone(),
        baseline.state_dim,
        baseline.decision_dim,
        step,
        output,
        lift,
        certificate,
        lip,
        baseline.fixed_points().to_vec(),
    );
    Ok(ComposedBaseline {
        spec,
        rho,
        certified,
    })
}
