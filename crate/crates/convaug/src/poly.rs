//! Positive, non-decreasing polynomials used by rate certificates and decay
//! envelopes.

use crate::scalar::{sc, Matrix, Scalar, Vector};

/// Polynomial with ascending coefficients, `p(t) = c0 + c1 t + ... + cm t^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    /// Builds a polynomial from ascending coefficients. Trailing zeros are
    /// kept so the declared degree is preserved.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "polynomial needs at least one coefficient");
        Self { coeffs }
    }

    /// The constant polynomial `p(t) = 1`.
    pub fn one() -> Self {
        Self::new(vec![T::one()])
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// True iff this is exactly the constant-one polynomial.
    pub fn is_one(&self) -> bool {
        self.coeffs[0] == T::one() && self.coeffs[1..].iter().all(|c| *c == T::zero())
    }

    pub fn eval(&self, t: T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + *c;
        }
        acc
    }

    pub fn eval_usize(&self, t: usize) -> T {
        self.eval(sc(t as f64))
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self::new(self.coeffs.iter().map(|a| *a * c).collect())
    }

    pub fn add_constant(&self, c: T) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += c;
        Self::new(coeffs)
    }

    /// Sampled check that `p(0) > 0` and `p(t+1) >= p(t)` for `t` in `0..=horizon`.
    pub fn is_positive_nondecreasing(&self, horizon: usize) -> bool {
        let mut prev = self.eval_usize(0);
        if prev <= T::zero() {
            return false;
        }
        for t in 1..=horizon {
            let cur = self.eval_usize(t);
            if cur < prev {
                return false;
            }
            prev = cur;
        }
        true
    }

    /// The polynomial `q` with `q(t) = sum_{k=0}^{t} p(k)`, of degree `m + 1`.
    ///
    /// The partial sums of a degree-`m` polynomial are themselves polynomial;
    /// the coefficients are recovered by interpolating `m + 2` accumulated
    /// values (a Vandermonde solve, exact at these tiny degrees).
    pub fn cumulative_sum(&self) -> Self {
        let m = self.degree();
        let pts = m + 2;
        let mut values = Vector::<T>::zeros(pts);
        let mut acc = T::zero();
        for t in 0..pts {
            acc += self.eval_usize(t);
            values[t] = acc;
        }
        let vander = Matrix::<T>::from_fn(pts, pts, |i, j| {
            let ti: T = sc(i as f64);
            ti.powi(j as i32)
        });
        let coeffs = vander
            .lu()
            .solve(&values)
            .expect("Vandermonde system with distinct nodes is nonsingular");
        Self::new(coeffs.iter().copied().collect())
    }

    /// The polynomial `t -> p(t + delta)` (binomial re-expansion).
    pub fn shifted(&self, delta: T) -> Self {
        let m = self.degree();
        let mut out = vec![T::zero(); m + 1];
        // binomial table
        for (j, &cj) in self.coeffs.iter().enumerate() {
            // expand c_j (t + delta)^j
            let mut binom = T::one();
            for k in 0..=j {
                // binom = C(j, k)
                out[k] += cj * binom * delta.powi((j - k) as i32);
                if k < j {
                    binom = binom * sc((j - k) as f64) / sc((k + 1) as f64);
                }
            }
        }
        Self::new(out)
    }

    /// The polynomial `t -> p(t / n)` (coefficients scaled by `n^{-j}`).
    pub fn arg_scaled(&self, n: T) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        let mut pow = T::one();
        for c in &self.coeffs {
            coeffs.push(*c / pow);
            pow *= n;
        }
        Self::new(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_matches_horner() {
        let p = Polynomial::new(vec![1.0, 2.0, 3.0]);
        assert_relative_eq!(p.eval(2.0), 1.0 + 4.0 + 12.0);
    }

    #[test]
    fn cumulative_sum_of_one_plus_t() {
        // sum_{k=0}^{t} (1+k) = (t+1)(t+2)/2
        let p = Polynomial::new(vec![1.0f64, 1.0]);
        let q = p.cumulative_sum();
        assert_eq!(q.degree(), 2);
        for t in 0..30 {
            let expect = ((t + 1) * (t + 2)) as f64 / 2.0;
            assert_relative_eq!(q.eval_usize(t), expect, max_relative = 1e-12);
        }
        // q interpolates through -1 at zero sum
        assert_relative_eq!(q.eval(-1.0), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn shifted_reexpands() {
        let p = Polynomial::new(vec![2.0f64, -1.0, 0.5]);
        let s = p.shifted(-1.0);
        for t in 0..10 {
            assert_relative_eq!(s.eval_usize(t), p.eval(t as f64 - 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn arg_scaled_divides_argument() {
        let p = Polynomial::new(vec![1.0f64, 3.0, 2.0]);
        let s = p.arg_scaled(4.0);
        for t in 0..12 {
            assert_relative_eq!(s.eval_usize(t), p.eval(t as f64 / 4.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn monotonicity_check() {
        assert!(Polynomial::new(vec![1.0f64, 1.0]).is_positive_nondecreasing(1000));
        assert!(!Polynomial::new(vec![1.0f64, -1.0]).is_positive_nondecreasing(1000));
        assert!(!Polynomial::new(vec![0.0f64]).is_positive_nondecreasing(10));
    }
}
