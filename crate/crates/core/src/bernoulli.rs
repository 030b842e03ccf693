//! Bernoulli numbers (B_1 = -1/2) and Bernoulli polynomials.

use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::Rational;

fn table() -> &'static RwLock<Vec<Rational>> {
    static TABLE: OnceLock<RwLock<Vec<Rational>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(vec![Rational::one()]))
}

/// Binomial coefficients C(n, 0..=n).
pub fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(c.clone());
    }
    row
}

/// `B_0, ..., B_m`, extending the shared table as needed.
pub fn bernoulli_numbers(m: usize) -> Vec<Rational> {
    {
        let t = table().read().expect("bernoulli table lock");
        if t.len() > m {
            return t[..=m].to_vec();
        }
    }
    let mut t = table().write().expect("bernoulli table lock");
    // Σ_{j=0}^{k} C(k+1, j) B_j = 0
    while t.len() <= m {
        let k = t.len();
        let row = binomial_row(k + 1);
        let mut acc = Rational::zero();
        for (j, b) in t.iter().enumerate() {
            if !b.is_zero() {
                acc += b * Rational::from_integer(row[j].clone());
            }
        }
        let next = -acc / Rational::from_integer(row[k].clone());
        t.push(next);
    }
    t[..=m].to_vec()
}

pub fn bernoulli_number(k: usize) -> Rational {
    bernoulli_numbers(k).pop().expect("non-empty")
}

/// `B_m(x) = Σ C(m,k) B_k x^{m-k}`.
pub fn bernoulli_poly(m: usize, x: &Rational) -> Rational {
    let b = bernoulli_numbers(m);
    let row = binomial_row(m);
    let mut acc = Rational::zero();
    let mut xp = Rational::one();
    for k in (0..=m).rev() {
        acc += &b[k] * Rational::from_integer(row[k].clone()) * &xp;
        xp *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime;
    use crate::rational::{frac, int};

    #[test]
    fn small_values() {
        let b = bernoulli_numbers(12);
        assert_eq!(b[0], int(1));
        assert_eq!(b[1], frac(-1, 2));
        assert_eq!(b[2], frac(1, 6));
        assert_eq!(b[4], frac(-1, 30));
        assert_eq!(b[6], frac(1, 42));
        assert_eq!(b[12], frac(-691, 2730));
        for k in (3..12).step_by(2) {
            assert!(b[k].is_zero());
        }
    }

    #[test]
    fn von_staudt_clausen() {
        // B_k + Σ_{(p-1) | k} 1/p is an integer for even k
        let b = bernoulli_numbers(60);
        for k in (2..=60).step_by(2) {
            let mut s = b[k].clone();
            for p in 2..=(k as u64 + 1) {
                if is_prime(p) && (k as u64).is_multiple_of(p - 1) {
                    s += frac(1, p as i64);
                }
            }
            assert!(s.is_integer(), "k = {k}");
        }
    }

    #[test]
    fn polynomial_difference() {
        // B_m(x+1) - B_m(x) = m x^{m-1}
        for m in 1..10usize {
            for x in [frac(1, 3), int(2), frac(-5, 7)] {
                let lhs = bernoulli_poly(m, &(&x + int(1))) - bernoulli_poly(m, &x);
                let mut rhs = int(m as i64);
                for _ in 0..m - 1 {
                    rhs *= &x;
                }
                assert_eq!(lhs, rhs);
            }
        }
        assert_eq!(bernoulli_poly(2, &int(0)), frac(1, 6));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_row(4), [1, 4, 6, 4, 1].map(BigInt::from).to_vec());
    }
}
