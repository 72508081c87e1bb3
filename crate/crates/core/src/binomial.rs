//! Binomial tails and the number of false alarms, in log10 space.

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::params::check_probability;

const LN_10: f64 = std::f64::consts::LN_10;

/// `log10 P(K >= k)` for `K ~ Binomial(n, p)`.
///
/// Sums the terms on the short side of the mode, starting from the largest
/// one, with compensated accumulation; `k = n + 1` gives `-inf`.
pub fn log_binomial_tail(k: u64, n: u64, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    if k > n + 1 {
        return Err(Error::InvalidParameter(format!("tail index {k} exceeds n + 1 = {}", n + 1)));
    }
    if k == 0 || p == 1.0 {
        return Ok(0.0);
    }
    if k > n || p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let ln_term = |i: u64| ln_binomial(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q;

    if k as f64 > n as f64 * p {
        let odds = p / (1.0 - p);
        let mut sum = Neumaier::new(1.0);
        let mut r = 1.0;
        for i in k..n {
            r *= (n - i) as f64 / (i + 1) as f64 * odds;
            sum.add(r);
            if r < sum.value() * 1e-17 {
                break;
            }
        }
        Ok((ln_term(k) + sum.value().ln()) / LN_10)
    } else {
        let odds = (1.0 - p) / p;
        let mut sum = Neumaier::new(1.0);
        let mut r = 1.0;
        for i in (1..k).rev() {
            r *= i as f64 / (n - i + 1) as f64 * odds;
            sum.add(r);
            if r < sum.value() * 1e-17 {
                break;
            }
        }
        let lower = (ln_term(k - 1) + sum.value().ln()).exp();
        Ok((-lower).ln_1p() / LN_10)
    }
}

/// `log10(n_tests * P(K >= k))`.
pub fn log10_nfa(k: u64, n: u64, p: f64, n_tests: f64) -> Result<f64> {
    if !(n_tests >= 0.0) {
        return Err(Error::InvalidParameter(format!("number of tests {n_tests} is negative")));
    }
    let tail = log_binomial_tail(k, n, p)?;
    if n_tests == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(n_tests.log10() + tail)
}

/// Expected number of false alarms `n_tests * P(K >= k)`.
pub fn nfa(k: u64, n: u64, p: f64, n_tests: f64) -> Result<f64> {
    Ok(10f64.powf(log10_nfa(k, n, p, n_tests)?))
}

/// Number of candidate tests: one per unordered pair of white pixels and
/// per width.
pub fn n_tests(m_white: u64, n_widths: usize) -> f64 {
    let m = m_white as f64;
    if m_white < 2 {
        return 0.0;
    }
    n_widths as f64 * m * (m - 1.0) / 2.0
}

/// Tail values for every `k in 0..=n + 1` at fixed `(n, p)`.
#[derive(Clone, Debug)]
pub struct TailTable {
    n: u64,
    log10: Vec<f64>,
}

impl TailTable {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        let log10 = (0..=n + 1).map(|k| log_binomial_tail(k, n, p)).collect::<Result<_>>()?;
        Ok(Self { n, log10 })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn log10(&self, k: u64) -> f64 {
        self.log10[k.min(self.n + 1) as usize]
    }
}

struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    fn new(first: f64) -> Self {
        Self { sum: first, carry: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trivial_tails() {
        assert_eq!(log_binomial_tail(0, 40, 0.3).unwrap(), 0.0);
        assert_eq!(log_binomial_tail(41, 40, 0.3).unwrap(), f64::NEG_INFINITY);
        let single = log_binomial_tail(30, 30, 0.5).unwrap();
        assert!((single - 30.0 * 0.5f64.log10()).abs() < 1e-12);
        assert!(log_binomial_tail(42, 40, 0.3).is_err());
        assert!(log_binomial_tail(3, 40, 1.3).is_err());
    }

    #[test]
    fn worked_threshold_example() {
        let at = |k| 99_971.0 * 10f64.powf(log_binomial_tail(k, 30, 0.5).unwrap());
        assert!(at(27) <= 1.0);
        assert!(at(26) > 1.0);
    }

    #[test]
    fn nfa_trivia() {
        assert_eq!(nfa(5, 10, 0.3, 0.0).unwrap(), 0.0);
        assert!((nfa(0, 10, 0.3, 1234.0).unwrap() - 1234.0).abs() < 1e-9);
        assert!(log10_nfa(1, 10, 0.3, -1.0).is_err());
    }

    #[test]
    fn test_counts() {
        assert_eq!(n_tests(0, 1), 0.0);
        assert_eq!(n_tests(1, 3), 0.0);
        assert_eq!(n_tests(3, 1), 3.0);
        assert_eq!(n_tests(489, 1), 119_316.0);
        assert_eq!(n_tests(489, 4), 4.0 * 119_316.0);
    }

    #[test]
    fn large_n_deep_tail_is_finite() {
        let v = log_binomial_tail(20_000, 100_000, 0.05).unwrap();
        assert!(v.is_finite() && v < -1000.0);
    }

    proptest! {
        #[test]
        fn nonincreasing_in_k(n in 1u64..400, p in 0.0..=1.0f64) {
            let t = TailTable::new(n, p).unwrap();
            for k in 0..=n {
                prop_assert!(t.log10(k + 1) <= t.log10(k) + 1e-12);
            }
        }

        #[test]
        fn complement_identity(n in 1u64..300, k in 1u64..300, p in 0.01..0.99f64) {
            prop_assume!(k <= n);
            // P(K >= k) + P(K <= k - 1) = 1, with the lower tail taken on the mirrored binomial.
            let upper = 10f64.powf(log_binomial_tail(k, n, p).unwrap());
            let lower = 10f64.powf(log_binomial_tail(n - k + 1, n, 1.0 - p).unwrap());
            prop_assert!((upper + lower - 1.0).abs() < 1e-12);
        }
    }
}
