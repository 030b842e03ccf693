//! Exact arithmetic in Q(ζ_{2^n}) and the normalised 2-adic valuation `ord2`.
//!
//! An element at level `n ≥ 2` is a dense vector of `2^{n-1}` rational
//! coefficients over the power basis `1, ζ, …, ζ^{2^{n-1}-1}` of
//! `ζ = ζ_{2^n}`, reduced modulo `x^{2^{n-1}} + 1`. Levels 0 and 1 are Q and
//! carry a single coefficient. The roots form a compatible system:
//! `ζ_{2^k} = ζ_{2^n}^{2^{n-k}}`.
//!
//! Since 2 is totally ramified in Q(ζ_{2^n}) with a single prime above it,
//! `ord2(α) = ord2(N(α)) / 2^{n-1}`, normalised so that `ord2(2) = 1`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Number of coefficients used at a level: `2^{n-1}` for `n ≥ 1`, and 1 at level 0.
pub fn degree(level: u32) -> usize {
    if level <= 1 {
        1
    } else {
        1usize << (level - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CyclotomicNumber {
    level: u32,
    coeffs: Vec<Rational>,
}

impl CyclotomicNumber {
    pub fn zero(level: u32) -> Self {
        Self {
            level,
            coeffs: vec![Rational::zero(); degree(level)],
        }
    }

    pub fn one(level: u32) -> Self {
        Self::from_rational(Rational::one(), level)
    }

    /// Constant embedding of a rational.
    pub fn from_rational(q: Rational, level: u32) -> Self {
        let mut out = Self::zero(level);
        out.coeffs[0] = q;
        out
    }

    pub fn from_integer(n: i64, level: u32) -> Self {
        Self::from_rational(rational::int(n), level)
    }

    pub fn from_coeffs(level: u32, coeffs: Vec<Rational>) -> Result<Self> {
        let expected = degree(level);
        if coeffs.len() != expected {
            return Err(Error::BadLength {
                level,
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { level, coeffs })
    }

    /// Integer coefficients, mostly for tests and fixtures.
    pub fn from_ints(level: u32, coeffs: &[i64]) -> Result<Self> {
        Self::from_coeffs(level, coeffs.iter().map(|&c| rational::int(c)).collect())
    }

    /// `ζ_{2^k}^exponent` written at `level`, using `ζ_{2^k} = ζ_{2^level}^{2^{level-k}}`.
    pub fn root_of_unity(level: u32, k: u32, exponent: i64) -> Result<Self> {
        if k > level {
            return Err(Error::RootTooFine { k, level });
        }
        if level == 0 {
            return Ok(Self::one(0));
        }
        let order = 1i128 << level;
        let total = (exponent as i128 * (1i128 << (level - k))).rem_euclid(order) as u64;
        Ok(Self::signed_power(level, total))
    }

    /// `ζ_{2^level}^t` for `0 ≤ t < 2^level`, folded into the power basis.
    fn signed_power(level: u32, t: u64) -> Self {
        let n = degree(level) as u64;
        let mut out = Self::zero(level);
        if t < n {
            out.coeffs[t as usize] = Rational::one();
        } else {
            out.coeffs[(t - n) as usize] = -Rational::one();
        }
        out
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Coefficients in ascending powers of ζ.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// The rational value, if every non-constant coefficient vanishes.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn check_level(&self, other: &Self) -> Result<()> {
        if self.level == other.level {
            Ok(())
        } else {
            Err(Error::LevelMismatch(self.level, other.level))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            level: self.level,
            coeffs,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            level: self.level,
            coeffs,
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let (a, da) = self.integer_form();
        let (b, db) = other.integer_form();
        let prod = negacyclic_mul(&a, &b);
        let den = da * db;
        let coeffs = prod
            .into_iter()
            .map(|c| Rational::new(c, den.clone()))
            .collect();
        Ok(Self {
            level: self.level,
            coeffs,
        })
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self {
            level: self.level,
            coeffs: self.coeffs.iter().map(|c| c * q).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.level);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Re-expresses the element at a finer level by spreading coefficients with stride
    /// `2^{target - level}`.
    pub fn embed_to_level(&self, target: u32) -> Result<Self> {
        if target < self.level {
            return Err(Error::BadEmbedding {
                from: self.level,
                to: target,
            });
        }
        if self.level <= 1 {
            return Ok(Self::from_rational(self.coeffs[0].clone(), target));
        }
        let stride = 1usize << (target - self.level);
        let mut out = Self::zero(target);
        for (i, c) in self.coeffs.iter().enumerate() {
            out.coeffs[i * stride] = c.clone();
        }
        Ok(out)
    }

    /// The Galois automorphism σ_t: ζ ↦ ζ^t for odd t.
    pub fn galois(&self, t: i64) -> Self {
        assert!(t % 2 != 0, "σ_t needs odd t");
        if self.level <= 1 {
            return self.clone();
        }
        let order = 1i128 << self.level;
        let n = degree(self.level) as u64;
        let mut out = Self::zero(self.level);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = (i as i128 * t as i128).rem_euclid(order) as u64;
            if e < n {
                out.coeffs[e as usize] += c;
            } else {
                out.coeffs[(e - n) as usize] -= c;
            }
        }
        out
    }

    /// Common-denominator form: `self = ints / den` with `den > 0`.
    pub fn integer_form(&self) -> (Vec<BigInt>, BigInt) {
        let den = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        (ints, den)
    }

    /// Norm to Q, i.e. the resultant of the representing polynomial with `x^{2^{n-1}} + 1`.
    ///
    /// Computed down the tower: for `ζ ↦ -ζ` generating Gal(Q(ζ_{2^n})/Q(ζ_{2^{n-1}})),
    /// `α(x)·α(-x)` is even in `x` and is the relative norm one level down.
    pub fn norm(&self) -> Rational {
        let (mut poly, den) = self.integer_form();
        let deg = poly.len();
        while poly.len() > 1 {
            let conj: Vec<BigInt> = poly
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 0 { c.clone() } else { -c })
                .collect();
            let prod = negacyclic_mul(&poly, &conj);
            poly = prod.into_iter().step_by(2).collect();
        }
        let den_pow = num_traits::pow(den, deg);
        Rational::new(poly.pop().expect("non-empty"), den_pow)
    }

    pub fn ord2(&self) -> DyadicValuation {
        if self.is_zero() {
            return DyadicValuation::Infinite;
        }
        let v = rational::v2(&self.norm()).expect("norm of a non-zero element is non-zero");
        DyadicValuation::Finite(Rational::new(
            BigInt::from(v),
            BigInt::from(degree(self.level) as u64),
        ))
    }
}

/// Product in Z[x]/(x^n + 1) of two coefficient vectors of equal length n.
fn negacyclic_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let n = a.len();
    let mut out = vec![BigInt::zero(); n];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            let k = i + j;
            if k < n {
                out[k] += x * y;
            } else {
                out[k - n] -= x * y;
            }
        }
    }
    out
}

/// `true` iff `ord2(a - b) ≥ ord2(modulus)`.
///
/// Ideals of the local ring Z_2[ζ] ∩ Q(ζ) are determined by valuation, so this is exact
/// membership of `a - b` in `modulus · (Z_2[ζ] ∩ Q(ζ))`.
pub fn congruent_mod(
    a: &CyclotomicNumber,
    b: &CyclotomicNumber,
    modulus: &CyclotomicNumber,
) -> Result<bool> {
    a.check_level(b)?;
    a.check_level(modulus)?;
    if modulus.is_zero() {
        return Err(Error::ZeroModulus);
    }
    Ok(a.checked_sub(b)?.ord2() >= modulus.ord2())
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&CyclotomicNumber> for &CyclotomicNumber {
            type Output = CyclotomicNumber;
            /// Panics on a level mismatch; use the `checked_*` form to get an error instead.
            fn $method(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $trait<CyclotomicNumber> for CyclotomicNumber {
            type Output = CyclotomicNumber;
            fn $method(self, rhs: CyclotomicNumber) -> CyclotomicNumber {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&CyclotomicNumber> for CyclotomicNumber {
            type Output = CyclotomicNumber;
            fn $method(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        CyclotomicNumber {
            level: self.level,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        -&self
    }
}

impl fmt::Display for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let root = format!("ζ{}", 1u64 << self.level);
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (sign, mag) = if c.is_negative() {
                ("-", -c)
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag_str = if mag.is_integer() {
                mag.numer().to_string()
            } else {
                format!("{}/{}", mag.numer(), mag.denom())
            };
            match i {
                0 => write!(f, "{mag_str}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag_str}·")?;
                    }
                    if i == 1 {
                        write!(f, "{root}")?;
                    } else {
                        write!(f, "{root}^{i}")?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CyclotomicRepr {
    level: u32,
    coeffs: Vec<[IntText; 2]>,
}

/// A big integer carried as a JSON string (numbers are accepted on input).
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntText {
    Text(String),
    Number(i64),
}

impl IntText {
    fn parse(&self) -> std::result::Result<BigInt, String> {
        match self {
            IntText::Text(s) => s.parse().map_err(|_| format!("bad integer {s:?}")),
            IntText::Number(n) => Ok(BigInt::from(*n)),
        }
    }
}

impl Serialize for CyclotomicNumber {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CyclotomicRepr {
            level: self.level,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| {
                    [
                        IntText::Text(c.numer().to_string()),
                        IntText::Text(c.denom().to_string()),
                    ]
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CyclotomicNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = CyclotomicRepr::deserialize(d)?;
        let coeffs = repr
            .coeffs
            .iter()
            .map(|[n, d]| {
                let n = n.parse()?;
                let d = d.parse()?;
                if d.is_zero() {
                    return Err("zero denominator".to_string());
                }
                Ok(BigRational::new(n, d))
            })
            .collect::<std::result::Result<Vec<_>, String>>()
            .map_err(D::Error::custom)?;
        CyclotomicNumber::from_coeffs(repr.level, coeffs).map_err(D::Error::custom)
    }
}

/// A value of `ord2`: a rational, or +∞ for zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DyadicValuation {
    Finite(Rational),
    Infinite,
}

impl DyadicValuation {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            DyadicValuation::Finite(q) => Some(q),
            DyadicValuation::Infinite => None,
        }
    }

    pub fn of_rational(q: &Rational) -> Self {
        match rational::v2(q) {
            Some(v) => DyadicValuation::Finite(rational::int(v)),
            None => DyadicValuation::Infinite,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "inf" {
            Ok(DyadicValuation::Infinite)
        } else {
            rational::parse(s).map(DyadicValuation::Finite)
        }
    }
}

impl From<Rational> for DyadicValuation {
    fn from(q: Rational) -> Self {
        DyadicValuation::Finite(q)
    }
}

impl PartialOrd for DyadicValuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicValuation {
    fn cmp(&self, other: &Self) -> Ordering {
        use DyadicValuation::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => Ordering::Less,
            (Infinite, Finite(_)) => Ordering::Greater,
            (Infinite, Infinite) => Ordering::Equal,
        }
    }
}

impl Add for &DyadicValuation {
    type Output = DyadicValuation;
    fn add(self, rhs: &DyadicValuation) -> DyadicValuation {
        match (self, rhs) {
            (DyadicValuation::Finite(a), DyadicValuation::Finite(b)) => {
                DyadicValuation::Finite(a + b)
            }
            _ => DyadicValuation::Infinite,
        }
    }
}

impl fmt::Display for DyadicValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DyadicValuation::Finite(q) => write!(f, "{}", rational::format(q)),
            DyadicValuation::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for DyadicValuation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DyadicValuation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let s = String::deserialize(d)?;
        DyadicValuation::parse(&s).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use proptest::prelude::*;

    fn zeta(level: u32, k: u32) -> CyclotomicNumber {
        CyclotomicNumber::root_of_unity(level, k, 1).unwrap()
    }

    fn fin(num: i64, den: i64) -> DyadicValuation {
        DyadicValuation::Finite(frac(num, den))
    }

    /// Determinant of the multiplication-by-α matrix via fraction-free Bareiss elimination;
    /// an independent route to the norm.
    #[allow(clippy::needless_range_loop)]
    fn norm_by_determinant(a: &CyclotomicNumber) -> Rational {
        let (ints, den) = a.integer_form();
        let n = ints.len();
        // column j is α·ζ^j
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for j in 0..n {
            for (i, c) in ints.iter().enumerate() {
                let k = i + j;
                if k < n {
                    m[k][j] += c;
                } else {
                    m[k - n][j] -= c;
                }
            }
        }
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                    Some(r) => {
                        m.swap(k, r);
                        sign = -sign;
                    }
                    None => return Rational::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = v / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        Rational::new(sign * &m[n - 1][n - 1], num_traits::pow(den, n))
    }

    fn arb_element(level: u32) -> impl Strategy<Value = CyclotomicNumber> {
        prop::collection::vec((-20i64..20, 1i64..6), degree(level)).prop_map(move |cs| {
            CyclotomicNumber::from_coeffs(level, cs.into_iter().map(|(n, d)| frac(n, d)).collect())
                .unwrap()
        })
    }

    fn arb_leveled() -> impl Strategy<Value = (CyclotomicNumber, CyclotomicNumber, CyclotomicNumber)>
    {
        (0u32..=6).prop_flat_map(|l| (arb_element(l), arb_element(l), arb_element(l)))
    }

    #[test]
    fn rational_embedding() {
        let one = CyclotomicNumber::from_rational(int(1), 3);
        assert_eq!(one.coeffs(), &[int(1), int(0), int(0), int(0)]);
        assert!(CyclotomicNumber::from_rational(int(0), 5).is_zero());
        let q = CyclotomicNumber::from_rational(frac(-1, 12), 2);
        assert_eq!(q.coeffs(), &[frac(-1, 12), int(0)]);
    }

    #[test]
    fn roots_of_unity() {
        assert_eq!(
            zeta(3, 2),
            CyclotomicNumber::from_ints(3, &[0, 0, 1, 0]).unwrap()
        );
        assert_eq!(zeta(3, 1), CyclotomicNumber::from_integer(-1, 3));
        assert_eq!(
            CyclotomicNumber::root_of_unity(4, 4, 8).unwrap(),
            CyclotomicNumber::from_integer(-1, 4)
        );
        assert_eq!(
            CyclotomicNumber::root_of_unity(1, 1, 3).unwrap().coeffs(),
            &[int(-1)]
        );
        assert_eq!(
            CyclotomicNumber::root_of_unity(0, 0, 7).unwrap().coeffs(),
            &[int(1)]
        );
        assert!(matches!(
            CyclotomicNumber::root_of_unity(3, 4, 1),
            Err(Error::RootTooFine { .. })
        ));
    }

    #[test]
    fn basic_products() {
        let one = CyclotomicNumber::one(2);
        let i = zeta(2, 2);
        assert_eq!(
            &(&one - &i) * &(&one + &i),
            CyclotomicNumber::from_integer(2, 2)
        );
        assert_eq!(&zeta(3, 3) * &zeta(3, 3), zeta(3, 2));
        let a = CyclotomicNumber::from_ints(3, &[1, -2, 0, 5]).unwrap();
        assert_eq!(&a + &CyclotomicNumber::zero(3), a);
        assert!(matches!(
            a.checked_mul(&zeta(2, 2)),
            Err(Error::LevelMismatch(3, 2))
        ));
    }

    #[test]
    fn embedding() {
        let a = CyclotomicNumber::from_ints(2, &[1, 1]).unwrap();
        let e = a.embed_to_level(4).unwrap();
        assert_eq!(
            e,
            CyclotomicNumber::from_ints(4, &[1, 0, 0, 0, 1, 0, 0, 0]).unwrap()
        );
        let seven = CyclotomicNumber::from_integer(7, 1);
        assert_eq!(
            seven.embed_to_level(5).unwrap(),
            CyclotomicNumber::from_integer(7, 5)
        );
        assert!(matches!(
            e.embed_to_level(3),
            Err(Error::BadEmbedding { .. })
        ));
        // ζ_8 embedded at level 5 is ζ_32^4
        assert_eq!(zeta(3, 3).embed_to_level(5).unwrap(), zeta(5, 3));
    }

    #[test]
    fn norms() {
        for n in 2..=7 {
            let a = &CyclotomicNumber::one(n) - &zeta(n, n);
            assert_eq!(a.norm(), int(2), "level {n}");
        }
        assert_eq!(CyclotomicNumber::from_integer(2, 3).norm(), int(16));
        assert_eq!(CyclotomicNumber::zero(4).norm(), int(0));
        assert_eq!(
            CyclotomicNumber::from_rational(frac(-3, 2), 1).norm(),
            frac(-3, 2)
        );
    }

    #[test]
    fn valuations() {
        assert_eq!(CyclotomicNumber::from_integer(2, 4).ord2(), fin(1, 1));
        let one = CyclotomicNumber::one(2);
        assert_eq!((&one - &zeta(2, 2)).ord2(), fin(1, 2));
        assert_eq!(CyclotomicNumber::zero(3).ord2(), DyadicValuation::Infinite);
        assert_eq!(
            CyclotomicNumber::from_rational(frac(3, 8), 0).ord2(),
            fin(-3, 1)
        );
        for n in 2..=6 {
            let a = &CyclotomicNumber::one(n) - &zeta(n, n);
            assert_eq!(
                a.ord2(),
                DyadicValuation::Finite(crate::rational::pow2(1 - n as i64))
            );
        }
    }

    #[test]
    fn product_of_one_minus_roots() {
        // brute-force product, then ord2; expected 1 - 2^{1-n}
        for n in 2..=6u32 {
            let one = CyclotomicNumber::one(n);
            let prod = (2..=n).fold(one.clone(), |acc, k| &acc * &(&one - &zeta(n, k)));
            let expected = &int(1) - crate::rational::pow2(1 - n as i64);
            assert_eq!(prod.ord2(), DyadicValuation::Finite(expected), "n = {n}");
        }
    }

    #[test]
    fn congruences() {
        let a = CyclotomicNumber::from_ints(2, &[3, 1]).unwrap();
        let two = CyclotomicNumber::from_integer(2, 2);
        assert!(congruent_mod(&a, &a, &two).unwrap());
        let b = &a - &(&CyclotomicNumber::one(2) - &zeta(2, 2));
        assert!(!congruent_mod(&a, &b, &two).unwrap());
        assert!(matches!(
            congruent_mod(&a, &b, &CyclotomicNumber::zero(2)),
            Err(Error::ZeroModulus)
        ));
        // 2(1+ζ4) has valuation 3/2
        let m = &two * &(&CyclotomicNumber::one(2) + &zeta(2, 2));
        assert_eq!(m.ord2(), fin(3, 2));
    }

    #[test]
    fn display() {
        let a =
            CyclotomicNumber::from_coeffs(3, vec![frac(-1, 2), int(0), int(1), int(-3)]).unwrap();
        assert_eq!(a.to_string(), "-1/2 + ζ8^2 - 3·ζ8^3");
        assert_eq!(CyclotomicNumber::zero(2).to_string(), "0");
        assert_eq!(DyadicValuation::Infinite.to_string(), "inf");
        assert_eq!(fin(3, 4).to_string(), "3/4");
    }

    #[test]
    fn json_shape() {
        let a = CyclotomicNumber::from_coeffs(2, vec![frac(-1, 12), int(3)]).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"level":2,"coeffs":[["-1","12"],["3","1"]]}"#);
        let numeric: CyclotomicNumber =
            serde_json::from_str(r#"{"level":2,"coeffs":[[-1,12],[3,1]]}"#).unwrap();
        assert_eq!(numeric, a);
        assert!(
            serde_json::from_str::<CyclotomicNumber>(r#"{"level":3,"coeffs":[["1","1"]]}"#)
                .is_err()
        );
        assert!(
            serde_json::from_str::<CyclotomicNumber>(r#"{"level":0,"coeffs":[["1","0"]]}"#)
                .is_err()
        );
    }

    #[test]
    fn norm_matches_determinant_oracle() {
        let samples = [
            CyclotomicNumber::from_ints(3, &[1, 2, -3, 4]).unwrap(),
            CyclotomicNumber::from_coeffs(4, (0..8).map(|i| frac(i * i - 7, i + 1)).collect())
                .unwrap(),
            CyclotomicNumber::from_ints(5, &(0..16).map(|i| (i * 7) % 5 - 2).collect::<Vec<_>>())
                .unwrap(),
        ];
        for a in &samples {
            assert_eq!(a.norm(), norm_by_determinant(a));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]

        #[test]
        fn ring_axioms((a, b, c) in arb_leveled()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
        }

        #[test]
        fn valuation_is_multiplicative_and_ultrametric((a, b, _c) in arb_leveled()) {
            prop_assume!(!a.is_zero() && !b.is_zero());
            prop_assert_eq!((&a * &b).ord2(), &a.ord2() + &b.ord2());
            let sum = (&a + &b).ord2();
            let (va, vb) = (a.ord2(), b.ord2());
            prop_assert!(sum >= va.clone().min(vb.clone()));
            if va != vb {
                prop_assert_eq!(sum, va.min(vb));
            }
        }

        #[test]
        fn norm_is_multiplicative((a, b, _c) in arb_leveled()) {
            prop_assert_eq!((&a * &b).norm(), a.norm() * b.norm());
        }

        #[test]
        fn embedding_is_a_homomorphism_and_keeps_ord2((a, b, _c) in arb_leveled(), extra in 0u32..3) {
            let t = a.level() + extra;
            let ea = a.embed_to_level(t).unwrap();
            let eb = b.embed_to_level(t).unwrap();
            prop_assert_eq!((&a * &b).embed_to_level(t).unwrap(), &ea * &eb);
            prop_assert_eq!(ea.ord2(), a.ord2());
        }

        #[test]
        fn galois_action_is_an_automorphism((a, b, _c) in arb_leveled(), t in (0i64..64).prop_map(|t| 2 * t + 1)) {
            prop_assert_eq!((&a * &b).galois(t), &a.galois(t) * &b.galois(t));
            prop_assert_eq!((&a + &b).galois(t), &a.galois(t) + &b.galois(t));
            prop_assert_eq!(a.galois(t).ord2(), a.ord2());
        }

        #[test]
        fn json_round_trip((a, _b, _c) in arb_leveled()) {
            let back: CyclotomicNumber = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
