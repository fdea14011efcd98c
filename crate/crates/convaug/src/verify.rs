//! Empirical certification harness: distance traces, envelope checks, tail
//! rate estimation, regularity of update sequences, and fixed-point identity
//! tests for composed maps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{compose_baseline, AugmentedRun, DecayEnvelope};
use crate::baselines::BaselineSpec;
use crate::scalar::{sc, Scalar, Vector};

/// Distances below this are treated as numerically converged and excluded
/// from rate fits (double-precision floor).
pub const CONVERGENCE_FLOOR: f64 = 1e-12;
/// Relative slack applied to envelope bounds.
pub const ENVELOPE_SLACK: f64 = 1e-9;
/// Fraction of the usable range used for tail fits.
pub const TAIL_FRACTION: f64 = 0.5;
/// Minimum usable points for a rate fit.
pub const MIN_FIT_POINTS: usize = 10;
/// Default additive slack on fitted rates.
pub const RATE_SLACK: f64 = 0.01;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("insufficient data: {usable} usable points, need at least {needed}")]
    InsufficientData { usable: usize, needed: usize },
}

/// Options for rate fits and membership decisions.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub floor: f64,
    pub tail_fraction: f64,
    pub min_points: usize,
    pub rate_slack: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            floor: CONVERGENCE_FLOOR,
            tail_fraction: TAIL_FRACTION,
            min_points: MIN_FIT_POINTS,
            rate_slack: RATE_SLACK,
        }
    }
}

/// Least-squares tail fit of a decaying trace.
#[derive(Debug, Clone, Copy)]
pub struct RateEstimate<T> {
    pub gamma_hat: T,
    /// Degree of the model the fit assumed (pure exponential).
    pub degree: usize,
    /// Root-mean-square residual of the log fit.
    pub residual: T,
    pub t_lo: usize,
    pub t_hi: usize,
}

/// Euclidean distances from every recorded state to the nearest point of
/// `fixpoints`.
pub fn distance_trace<T: Scalar>(run: &AugmentedRun<T>, fixpoints: &[Vector<T>]) -> Vec<T> {
    run.states
        .iter()
        .map(|s| {
            fixpoints
                .iter()
                .map(|f| (s - f).norm())
                .fold(sc::<T>(f64::INFINITY), |a, b| a.min(b))
        })
        .collect()
}

/// Result of a normalized envelope check on a distance trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceEnvelopeCheck<T> {
    pub pass: bool,
    pub worst_ratio: T,
    pub worst_index: usize,
}

/// Checks `trace[t] <= p(t) gamma^t trace[0] (1 + slack)` for all `t`.
/// A trace starting at (numerical) zero passes vacuously, and entries below
/// the convergence floor are treated as converged and skipped (additive
/// floating-point floors would otherwise corrupt the ratio once the envelope
/// decays past machine precision).
pub fn check_envelope<T: Scalar>(
    trace: &[T],
    envelope: &DecayEnvelope<T>,
) -> TraceEnvelopeCheck<T> {
    let floor = sc::<T>(CONVERGENCE_FLOOR);
    if trace.is_empty() || trace[0] <= floor {
        return TraceEnvelopeCheck {
            pass: true,
            worst_ratio: T::zero(),
            worst_index: 0,
        };
    }
    let scaled = envelope.scaled(trace[0]);
    let slack = sc::<T>(ENVELOPE_SLACK);
    let mut worst_ratio = T::zero();
    let mut worst_index = 0usize;
    for (t, &d) in trace.iter().enumerate() {
        if d <= floor {
            continue;
        }
        let bound = scaled.bound_at(t);
        let ratio = if bound > T::zero() { d / bound } else { sc(f64::INFINITY) };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_index = t;
        }
    }
    TraceEnvelopeCheck {
        pass: worst_ratio <= T::one() + slack,
        worst_ratio,
        worst_index,
    }
}

fn usable_indices<T: Scalar>(values: &[T], floor: T) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite() && **v > floor)
        .map(|(i, _)| i)
        .collect()
}

/// Log-linear least-squares fit over the tail of the usable range.
pub fn estimate_rate<T: Scalar>(
    trace: &[T],
    opts: &FitOptions,
) -> Result<RateEstimate<T>, VerifyError> {
    let usable = usable_indices(trace, sc(opts.floor));
    if usable.len() < opts.min_points {
        return Err(VerifyError::InsufficientData {
            usable: usable.len(),
            needed: opts.min_points,
        });
    }
    let tail_len = ((usable.len() as f64) * opts.tail_fraction).ceil() as usize;
    let tail_len = tail_len.max(opts.min_points).min(usable.len());
    let tail = &usable[usable.len() - tail_len..];

    // least squares on ln(trace[t]) = a + b t
    let n: T = sc(tail.len() as f64);
    let mut sum_t = T::zero();
    let mut sum_y = T::zero();
    let mut sum_tt = T::zero();
    let mut sum_ty = T::zero();
    for &i in tail {
        let t: T = sc(i as f64);
        let y = trace[i].ln();
        sum_t += t;
        sum_y += y;
        sum_tt += t * t;
        sum_ty += t * y;
    }
    let denom = n * sum_tt - sum_t * sum_t;
    if denom == T::zero() {
        return Err(VerifyError::InsufficientData {
            usable: tail.len(),
            needed: opts.min_points,
        });
    }
    let slope = (n * sum_ty - sum_t * sum_y) / denom;
    let intercept = (sum_y - slope * sum_t) / n;
    let mut ss = T::zero();
    for &i in tail {
        let t: T = sc(i as f64);
        let e = trace[i].ln() - (intercept + slope * t);
        ss += e * e;
    }
    Ok(RateEstimate {
        gamma_hat: slope.exp(),
        degree: 0,
        residual: (ss / n).sqrt(),
        t_lo: tail[0],
        t_hi: *tail.last().expect("tail is non-empty"),
    })
}

/// Empirical membership decision for a recorded signal against an envelope
/// shape: the minimal constant is fitted, and the signal passes when its tail
/// does not decay slower than `gamma + rate_slack` (signals that die below
/// the floor before a fit is possible pass vacuously).
#[derive(Debug, Clone, Copy)]
pub struct MembershipReport<T> {
    pub pass: bool,
    pub fitted_constant: Option<T>,
    pub tail_rate: Option<T>,
    pub usable_points: usize,
}

pub fn envelope_membership<T: Scalar>(
    magnitudes: &[T],
    envelope: &DecayEnvelope<T>,
    opts: &FitOptions,
) -> MembershipReport<T> {
    let floor = sc::<T>(opts.floor);
    let fitted_constant = envelope.fit_constant(magnitudes, floor);
    let usable = usable_indices(magnitudes, floor);
    if usable.len() < opts.min_points {
        return MembershipReport {
            pass: true,
            fitted_constant,
            tail_rate: None,
            usable_points: usable.len(),
        };
    }
    match estimate_rate(magnitudes, opts) {
        // a fitted tail rate at or above one is never admissible, whatever
        // the slack: the signal is not decaying at all
        Ok(est) => MembershipReport {
            pass: est.gamma_hat <= envelope.gamma() + sc(opts.rate_slack)
                && est.gamma_hat < T::one(),
            fitted_constant,
            tail_rate: Some(est.gamma_hat),
            usable_points: usable.len(),
        },
        Err(_) => MembershipReport {
            pass: true,
            fitted_constant,
            tail_rate: None,
            usable_points: usable.len(),
        },
    }
}

/// Fits the smallest constant `c` such that every trace satisfies
/// `trace[t] <= c p(t) gamma^t trace[0]`. `None` when no trace has a usable
/// starting distance.
pub fn fit_envelope_constant<T: Scalar>(
    traces: &[Vec<T>],
    envelope: &DecayEnvelope<T>,
    opts: &FitOptions,
) -> Option<T> {
    let floor = sc::<T>(opts.floor);
    let mut c: Option<T> = None;
    for trace in traces {
        if trace.is_empty() || trace[0] <= floor {
            continue;
        }
        if let Some(ct) = envelope.scaled(trace[0]).fit_constant(trace, floor) {
            c = Some(match c {
                None => ct,
                Some(prev) => prev.max(ct),
            });
        }
    }
    c
}

/// Regularity of the realized algorithm: its update increments
/// `u_t = xi_{t+1} - xi_t` must themselves decay within the envelope's rate.
pub fn check_regularity<T: Scalar>(
    run: &AugmentedRun<T>,
    envelope: &DecayEnvelope<T>,
    opts: &FitOptions,
) -> bool {
    if run.states.len() < 2 {
        return false;
    }
    let updates = run.update_norms();
    envelope_membership(&updates, envelope, opts).pass
}

/// Forward fixed-point identity plus long-run convergence of the composed
/// map: every declared fixed point must be invariant under the `n`-fold step
/// (to `tol`), and iterating the composed map from each probe must approach
/// the fixed-point set.
pub fn check_fixed_point_identity<T: Scalar>(
    baseline: &BaselineSpec<T>,
    n: usize,
    probes: &[Vector<T>],
    iterations: usize,
    tol: T,
) -> bool {
    let composed = match compose_baseline(baseline, n) {
        Ok(c) => c.spec,
        Err(_) => return false,
    };
    for f in baseline.fixed_points() {
        let moved = (composed.step(f) - f).norm();
        if moved > tol * (T::one() + f.norm()) {
            return false;
        }
    }
    if n == 1 {
        return true;
    }
    for probe in probes {
        let mut x = probe.clone();
        let d0 = baseline.distance_to_fix(&x);
        for _ in 0..iterations {
            x = composed.step(&x);
        }
        let d_end = baseline.distance_to_fix(&x);
        // convergence at (ten times) the certified pace; a spurious fixed
        // point of the composed map would stall near its starting distance
        let paced = match composed.certificate() {
            Some(cert) => sc::<T>(10.0) * cert.bound_at(iterations) * d0,
            None => sc::<T>(0.5) * d0,
        };
        let threshold = (sc::<T>(1e-8) * (T::one() + d0)).max(paced.min(sc::<T>(0.9) * d0));
        if d_end > threshold {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Envelope parameters as stored in verification reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeJson {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub gamma: f64,
}

impl EnvelopeJson {
    pub fn from_envelope<T: Scalar>(e: &DecayEnvelope<T>) -> Self {
        Self {
            degree: e.degree(),
            coeffs: e
                .poly()
                .coeffs()
                .iter()
                .map(|c| c.to_f64().expect("scalar convertible"))
                .collect(),
            gamma: e.gamma().to_f64().expect("scalar convertible"),
        }
    }

    pub fn to_envelope<T: Scalar>(&self) -> DecayEnvelope<T> {
        DecayEnvelope::new(
            crate::poly::Polynomial::new(self.coeffs.iter().map(|&c| sc(c)).collect()),
            sc(self.gamma),
        )
    }
}

/// One emitted verification record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_ref: Option<String>,
}
