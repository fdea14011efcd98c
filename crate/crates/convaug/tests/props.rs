//! Property-based invariants over the envelope arithmetic, projections, and
//! injection schedules.

use convaug::augment::{degraded_rate, min_injection_period, DecayEnvelope, InjectionSchedule, SignalGenerator};
use convaug::baselines::{project_box, RateCertificate};
use convaug::poly::Polynomial;
use convaug::scalar::Vector;
use proptest::prelude::*;

fn small_poly() -> impl Strategy<Value = Polynomial<f64>> {
    (prop::collection::vec(0.0f64..2.0, 1..4), 0.01f64..2.0).prop_map(|(mut coeffs, c0)| {
        coeffs[0] = c0; // positive constant term keeps p positive non-decreasing
        Polynomial::new(coeffs)
    })
}

proptest! {
    #[test]
    fn cumulative_sum_is_the_running_sum(p in small_poly()) {
        let q = p.cumulative_sum();
        let mut acc = 0.0;
        for t in 0..40usize {
            acc += p.eval_usize(t);
            let err = (q.eval_usize(t) - acc).abs();
            prop_assert!(err <= 1e-8 * (1.0 + acc.abs()), "t={t}: {err}");
        }
    }

    #[test]
    fn degraded_rate_lies_between_gamma_and_one(
        gamma in 0.5f64..0.99,
        c in 1.0f64..5.0,
        n in 1usize..200,
    ) {
        let cert = RateCertificate::new(Polynomial::constant(c), gamma, c <= 1.0);
        match degraded_rate(&cert, n) {
            Ok(d) => {
                prop_assert!(d.rho < 1.0);
                prop_assert!(d.rate >= gamma - 1e-12);
                prop_assert!(d.rate < 1.0);
                prop_assert_eq!(d.degree, 1);
            }
            Err(_) => {
                // only permissible when the mass really is >= 1
                prop_assert!(c * gamma.powi(n as i32) >= 1.0);
            }
        }
    }

    #[test]
    fn monotone_certificates_never_degrade(gamma in 0.1f64..0.999, n in 1usize..500) {
        let cert = RateCertificate::monotone(gamma);
        let d = degraded_rate(&cert, n).unwrap();
        prop_assert_eq!(d.rate, gamma);
    }

    #[test]
    fn min_period_is_minimal(gamma in 0.5f64..0.95, c in 1.1f64..20.0) {
        let cert = RateCertificate::new(Polynomial::constant(c), gamma, false);
        let tau = 1.0 + 0.9 * (1.0 / gamma - 1.0);
        let n = min_injection_period(&cert, tau).unwrap();
        prop_assert!(c < tau.powi(n as i32));
        if n > 1 {
            prop_assert!(c >= tau.powi((n - 1) as i32));
        }
    }

    #[test]
    fn box_projection_is_idempotent_and_nonexpansive(
        x in prop::collection::vec(-5.0f64..5.0, 1..8),
        y in prop::collection::vec(-5.0f64..5.0, 1..8),
        bound in 0.1f64..2.0,
    ) {
        let n = x.len().min(y.len());
        let xv = Vector::from_vec(x[..n].to_vec());
        let yv = Vector::from_vec(y[..n].to_vec());
        let px = project_box(&xv, bound);
        let py = project_box(&yv, bound);
        // inside the box, idempotent
        prop_assert!(px.amax() <= bound);
        prop_assert_eq!(&project_box(&px, bound), &px);
        // nonexpansive
        prop_assert!((px - py).norm() <= (xv - yv).norm() + 1e-12);
    }

    #[test]
    fn sparse_injection_pattern(period in 1usize..17, steps in 1usize..120) {
        let cert = RateCertificate::monotone(0.5);
        let sched = InjectionSchedule::new(
            &cert,
            period,
            SignalGenerator::GeometricNoise { dim: 2, amplitude: 1.0, rate: 0.5, seed: 0 },
        ).unwrap();
        for t in 0..steps {
            let v = sched.value_at(t);
            if (t + 1) % period == 0 {
                prop_assert!(v.norm() > 0.0);
            } else {
                prop_assert_eq!(v.norm(), 0.0);
            }
        }
    }

    #[test]
    fn envelope_bound_is_monotone_in_constant(
        gamma in 0.2f64..0.99,
        c in 0.1f64..10.0,
        t in 0usize..500,
    ) {
        let small = DecayEnvelope::constant(c, gamma);
        let big = DecayEnvelope::constant(2.0 * c, gamma);
        prop_assert!(small.bound_at(t) <= big.bound_at(t));
        // and it matches the closed form
        let expect = c * gamma.powi(t as i32);
        prop_assert!((small.bound_at(t) - expect).abs() <= 1e-12 * (1.0 + expect));
    }
}
