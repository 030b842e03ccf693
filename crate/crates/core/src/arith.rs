//! Small-integer number theory: factorisation, square-freeness, Kronecker symbols.

use crate::error::{Error, Result};

/// Distinct prime divisors of `n` in increasing order (trial division).
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    if n.is_multiple_of(2) {
        out.push(2);
        while n.is_multiple_of(2) {
            n /= 2;
        }
    }
    let mut p = 3u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 2;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_square_free(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    prime_factors(n).iter().all(|&p| !(n / p).is_multiple_of(p))
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n) == [n]
}

/// All positive divisors of a square-free `n`, ordered by the subset bitmask of its primes.
pub fn squarefree_divisors(n: u64) -> Vec<u64> {
    let primes = prime_factors(n);
    (0..1u64 << primes.len())
        .map(|mask| {
            primes
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p)
                .product()
        })
        .collect()
}

/// Exponent of 2 in a non-zero integer.
pub fn v2_i64(n: i64) -> u32 {
    debug_assert!(n != 0);
    n.trailing_zeros()
}

/// Ceiling of log2(n) for n ≥ 1.
pub fn ceil_log2(n: u64) -> u32 {
    debug_assert!(n >= 1);
    64 - (n - 1).leading_zeros()
}

/// Fundamental discriminant of Q(√d) for square-free d ≥ 2.
pub fn fundamental_discriminant(d: u64) -> Result<u64> {
    if !is_square_free(d) {
        return Err(Error::NotSquareFree(d));
    }
    Ok(if d % 4 == 1 { d } else { 4 * d })
}

/// Jacobi symbol (a/n) for odd positive n, by quadratic reciprocity.
pub fn jacobi(a: i64, n: u64) -> i8 {
    assert!(n % 2 == 1, "jacobi symbol needs an odd modulus");
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        let s = a.trailing_zeros();
        a >>= s;
        // second supplement: (2/n) = -1 iff n ≡ ±3 (mod 8)
        if s % 2 == 1 && matches!(n % 8, 3 | 5) {
            sign = -sign;
        }
        // reciprocity for odd a, n
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Kronecker symbol (disc/a) for a discriminant `disc` ≡ 0, 1 (mod 4), any integer `a`.
pub fn kronecker(disc: i64, a: i64) -> i8 {
    if a == 0 {
        return if disc.abs() == 1 { 1 } else { 0 };
    }
    let mut sign = 1i8;
    // (disc/-1) is the sign of disc
    if a < 0 && disc < 0 {
        sign = -sign;
    }
    let mut a = a.unsigned_abs();
    let s = a.trailing_zeros();
    if s > 0 {
        if disc % 2 == 0 {
            return 0;
        }
        // (disc/2) = (2/|disc|) for odd disc ≡ 1 (mod 4)
        if s % 2 == 1 && matches!(disc.rem_euclid(8), 3 | 5) {
            sign = -sign;
        }
        a >>= s;
    }
    if a == 1 {
        return sign;
    }
    sign * jacobi(disc, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Legendre symbol by Euler's criterion; oracle for `jacobi` at prime moduli.
    fn legendre_brute(a: i64, p: u64) -> i8 {
        let r = a.rem_euclid(p as i64) as u64;
        if r == 0 {
            return 0;
        }
        let is_square = (1..p).any(|x| x * x % p == r);
        if is_square {
            1
        } else {
            -1
        }
    }

    #[test]
    fn factorisation() {
        assert_eq!(prime_factors(105), vec![3, 5, 7]);
        assert_eq!(prime_factors(2405), vec![5, 13, 37]);
        assert_eq!(prime_factors(1), Vec::<u64>::new());
        assert_eq!(prime_factors(64), vec![2]);
        assert!(is_square_free(105));
        assert!(!is_square_free(4));
        assert!(!is_square_free(0));
        assert!(is_prime(17) && !is_prime(15) && !is_prime(1));
    }

    #[test]
    fn divisors_of_squarefree() {
        let mut divs = squarefree_divisors(105);
        divs.sort_unstable();
        assert_eq!(divs, vec![1, 3, 5, 7, 15, 21, 35, 105]);
        assert_eq!(squarefree_divisors(1), vec![1]);
    }

    #[test]
    fn jacobi_matches_euler_criterion() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            for a in -40i64..40 {
                assert_eq!(jacobi(a, p), legendre_brute(a, p), "({a}/{p})");
            }
        }
    }

    #[test]
    fn jacobi_is_multiplicative_in_modulus() {
        for a in -30i64..30 {
            assert_eq!(jacobi(a, 15), jacobi(a, 3) * jacobi(a, 5));
            assert_eq!(jacobi(a, 105), jacobi(a, 3) * jacobi(a, 5) * jacobi(a, 7));
        }
    }

    #[test]
    fn kronecker_at_two() {
        // (5/2) = -1: 2 is not a square mod 5
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(17, 2), 1);
        assert_eq!(kronecker(12, 2), 0);
        assert_eq!(kronecker(5, -3), kronecker(5, 3));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
    }
}
