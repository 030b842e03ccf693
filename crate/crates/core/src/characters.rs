//! The characters χ_n, ψ_d and their products χ_n·ψ_d^j.
//!
//! χ_n is the even primitive character modulo 2^{n+2} of order 2^n fixed by
//! `χ_n(5) = ζ_{2^n}` and `χ_n(-1) = 1`. With this choice `χ_{n-1} = χ_n^2`,
//! matching the compatible system of roots used by [`CyclotomicNumber`].
//! ψ_d is the Kronecker symbol of the fundamental discriminant of Q(√d).

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::cyclotomic::{degree, CyclotomicNumber};
use crate::error::{Error, Result};

/// Largest layer the 64-bit discrete logarithm supports.
pub const MAX_LAYER: u32 = 60;

/// A character value: zero, or `±ζ^index` in the power basis of its level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CharValue {
    Zero,
    Unit { index: usize, negative: bool },
}

impl CharValue {
    pub const ONE: CharValue = CharValue::Unit {
        index: 0,
        negative: false,
    };

    /// `ζ_{2^level}^t`, folded so that `index < degree(level)`.
    pub fn from_exponent(level: u32, t: u64) -> Self {
        if level == 0 {
            return CharValue::ONE;
        }
        let order = 1u64 << level;
        let n = degree(level) as u64;
        let t = t % order;
        if t < n {
            CharValue::Unit {
                index: t as usize,
                negative: false,
            }
        } else {
            CharValue::Unit {
                index: (t - n) as usize,
                negative: true,
            }
        }
    }

    pub fn negate(self) -> Self {
        match self {
            CharValue::Zero => CharValue::Zero,
            CharValue::Unit { index, negative } => CharValue::Unit {
                index,
                negative: !negative,
            },
        }
    }

    pub fn is_zero(self) -> bool {
        self == CharValue::Zero
    }

    /// Raises the value to the `t`-th power.
    pub fn power(self, t: u64, level: u32) -> Self {
        match self {
            CharValue::Zero => CharValue::Zero,
            CharValue::Unit { index, negative } if level == 0 => CharValue::Unit {
                index,
                negative: negative && t % 2 == 1,
            },
            CharValue::Unit { index, negative } => {
                let order = 1u128 << level;
                let total = index as u128 + if negative { degree(level) as u128 } else { 0 };
                CharValue::from_exponent(level, (total * t as u128 % order) as u64)
            }
        }
    }

    pub fn to_cyclotomic(self, level: u32) -> CyclotomicNumber {
        match self {
            CharValue::Zero => CyclotomicNumber::zero(level),
            CharValue::Unit { index, negative } => {
                let mut coeffs = vec![crate::rational::int(0); degree(level)];
                coeffs[index] = crate::rational::int(if negative { -1 } else { 1 });
                CyclotomicNumber::from_coeffs(level, coeffs).expect("length matches level")
            }
        }
    }
}

/// A Dirichlet character with values in Q(ζ_{2^level}) ∪ {±1}, periodic modulo `modulus()`.
pub trait DirichletCharacter: Sync {
    fn level(&self) -> u32;
    fn modulus(&self) -> u64;
    fn value(&self, a: i64) -> CharValue;

    fn is_even(&self) -> bool {
        self.value(-1) == self.value(1)
    }

    fn eval(&self, a: i64) -> CyclotomicNumber {
        self.value(a).to_cyclotomic(self.level())
    }
}

/// χ_n · ψ_d^power, with `layer = n` (0 for no χ-part) and `twist = d` (1 for no ψ-part).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CharSpecRepr", into = "CharSpecRepr")]
pub struct CharSpec {
    layer: u32,
    twist: u64,
    twist_power: u8,
    allow_even_twist: bool,
}

#[derive(Serialize, Deserialize)]
struct CharSpecRepr {
    n: u32,
    d: u64,
    power: u8,
}

impl TryFrom<CharSpecRepr> for CharSpec {
    type Error = Error;
    fn try_from(r: CharSpecRepr) -> Result<Self> {
        if r.d.is_multiple_of(2) {
            if r.n != 0 || r.power != 1 {
                return Err(Error::InvalidCharacter(format!(
                    "even twist {} is only allowed as ψ_d at layer 0",
                    r.d
                )));
            }
            CharSpec::psi_even(r.d)
        } else {
            CharSpec::new(r.n, r.d, r.power)
        }
    }
}

impl From<CharSpec> for CharSpecRepr {
    fn from(s: CharSpec) -> Self {
        CharSpecRepr {
            n: s.layer,
            d: s.twist,
            power: s.twist_power,
        }
    }
}

impl CharSpec {
    pub fn new(layer: u32, twist: u64, twist_power: u8) -> Result<Self> {
        if layer > MAX_LAYER {
            return Err(Error::InvalidCharacter(format!(
                "layer {layer} > {MAX_LAYER}"
            )));
        }
        if twist_power > 2 {
            return Err(Error::InvalidCharacter(format!(
                "twist power {twist_power} not in 0..=2"
            )));
        }
        if twist.is_multiple_of(2) {
            return Err(Error::InvalidCharacter(format!(
                "twist {twist} must be odd"
            )));
        }
        if !arith::is_square_free(twist) {
            return Err(Error::NotSquareFree(twist));
        }
        Ok(Self {
            layer,
            twist,
            twist_power,
            allow_even_twist: false,
        })
    }

    pub fn trivial() -> Self {
        Self {
            layer: 0,
            twist: 1,
            twist_power: 0,
            allow_even_twist: false,
        }
    }

    /// χ_n alone.
    pub fn chi(layer: u32) -> Result<Self> {
        Self::new(layer, 1, 0)
    }

    /// ψ_d for odd square-free d.
    pub fn psi(twist: u64) -> Result<Self> {
        Self::new(0, twist, 1)
    }

    /// ψ_{d} for even square-free d (conductor 4d), permitted at layer 0 only.
    pub fn psi_even(twist: u64) -> Result<Self> {
        if !twist.is_multiple_of(2) {
            return Self::psi(twist);
        }
        if !arith::is_square_free(twist) {
            return Err(Error::NotSquareFree(twist));
        }
        Ok(Self {
            layer: 0,
            twist,
            twist_power: 1,
            allow_even_twist: true,
        })
    }

    pub fn layer(&self) -> u32 {
        self.layer
    }

    pub fn twist(&self) -> u64 {
        self.twist
    }

    pub fn twist_power(&self) -> u8 {
        self.twist_power
    }

    pub fn allow_even_twist(&self) -> bool {
        self.allow_even_twist
    }

    /// The twist that actually affects values (1 when the power is 0).
    pub fn effective_twist(&self) -> u64 {
        if self.twist_power == 0 {
            1
        } else {
            self.twist
        }
    }

    /// Same character with `power = 0 ⇔ d = 1` normalised, used as a cache key.
    pub fn canonical(&self) -> Self {
        if self.effective_twist() == 1 {
            Self {
                twist: 1,
                twist_power: 0,
                allow_even_twist: false,
                ..*self
            }
        } else {
            *self
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.layer == 0 && self.effective_twist() == 1
    }

    /// Fundamental discriminant of the twist, if there is one.
    pub fn discriminant(&self) -> Option<u64> {
        match self.effective_twist() {
            1 => None,
            d => Some(if d % 4 == 1 { d } else { 4 * d }),
        }
    }

    /// The natural modulus `lcm(2^{n+2}, Δ)` (1 for the trivial character).
    pub fn modulus(&self) -> u64 {
        let two_part = if self.layer == 0 {
            1
        } else {
            1u64 << (self.layer + 2)
        };
        match self.discriminant() {
            None => two_part,
            Some(disc) => two_part.lcm(&disc),
        }
    }

    /// Exact conductor, found by testing from which divisors of the modulus the
    /// character is induced.
    pub fn conductor(&self) -> u64 {
        let ev = self.evaluator();
        let m = self.modulus();
        let mut f = m;
        for p in arith::prime_factors(m) {
            while f.is_multiple_of(p) && induced_from(&ev, m, f / p) {
                f /= p;
            }
        }
        f
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus()
    }

    /// The primitive character inducing this one.
    pub fn primitive(&self) -> Self {
        if self.twist_power == 2 {
            Self {
                twist: 1,
                twist_power: 0,
                allow_even_twist: false,
                ..*self
            }
        } else {
            self.canonical()
        }
    }

    pub fn evaluator(&self) -> CharEvaluator {
        CharEvaluator {
            spec: *self,
            chi: (self.layer > 0).then(|| TwoAdicLog::new(self.layer)),
            disc: self.discriminant().map(|d| d as i64),
        }
    }

    /// `χ_n(a)·ψ_d(a)^power` as an element of Q(ζ_{2^n}).
    pub fn char_eval(&self, a: i64) -> CyclotomicNumber {
        self.evaluator().eval(a)
    }
}

impl fmt::Display for CharSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.layer > 0 {
            parts.push(format!("χ{}", self.layer));
        }
        match (self.effective_twist(), self.twist_power) {
            (1, _) => {}
            (d, 2) => parts.push(format!("ψ{d}²")),
            (d, _) => parts.push(format!("ψ{d}")),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("·"))
        }
    }
}

fn induced_from<C: DirichletCharacter>(chi: &C, m: u64, f: u64) -> bool {
    (0..m / f)
        .map(|t| 1 + t * f)
        .filter(|a| a.gcd(&m) == 1)
        .all(|a| chi.value(a as i64) == CharValue::ONE)
}

/// Discrete logarithm base 5 on `(Z/2^{n+2})^× / {±1}` by binary lifting.
#[derive(Clone, Debug)]
struct TwoAdicLog {
    layer: u32,
    mask: u64,
    /// `5^{-2^j} mod 2^{n+2}` for j < n.
    inv_pows: Vec<u64>,
}

impl TwoAdicLog {
    fn new(layer: u32) -> Self {
        let modulus_bits = layer + 2;
        let mask = if modulus_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << modulus_bits) - 1
        };
        let mul = |a: u64, b: u64| ((a as u128 * b as u128) as u64) & mask;
        // 5 has order 2^n, so 5^{-1} = 5^{2^n - 1}
        let mut inv5 = 1u64;
        let mut base = 5u64;
        let mut e = (1u64 << layer) - 1;
        while e > 0 {
            if e & 1 == 1 {
                inv5 = mul(inv5, base);
            }
            base = mul(base, base);
            e >>= 1;
        }
        let mut inv_pows = Vec::with_capacity(layer as usize);
        let mut cur = inv5;
        for _ in 0..layer {
            inv_pows.push(cur);
            cur = mul(cur, cur);
        }
        Self {
            layer,
            mask,
            inv_pows,
        }
    }

    /// `e` in `[0, 2^n)` with `a ≡ ±5^e (mod 2^{n+2})`, for odd `a`.
    fn log(&self, a: i64) -> u64 {
        let mut x = (a as u64) & self.mask;
        if x & 3 == 3 {
            x = x.wrapping_neg() & self.mask;
        }
        let mut e = 0u64;
        for j in 0..self.layer {
            if (x >> (j + 2)) & 1 == 1 {
                e |= 1 << j;
                x = ((x as u128 * self.inv_pows[j as usize] as u128) as u64) & self.mask;
            }
        }
        debug_assert_eq!(x, 1);
        e
    }
}

/// A [`CharSpec`] with its discrete-log tables prepared for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CharEvaluator {
    spec: CharSpec,
    chi: Option<TwoAdicLog>,
    disc: Option<i64>,
}

impl CharEvaluator {
    pub fn spec(&self) -> &CharSpec {
        &self.spec
    }
}

impl DirichletCharacter for CharEvaluator {
    fn level(&self) -> u32 {
        self.spec.layer
    }

    fn modulus(&self) -> u64 {
        self.spec.modulus()
    }

    fn value(&self, a: i64) -> CharValue {
        let mut negative = false;
        if let Some(disc) = self.disc {
            match arith::kronecker(disc, a) {
                0 => return CharValue::Zero,
                -1 => negative = self.spec.twist_power == 1,
                _ => {}
            }
        }
        let base = match &self.chi {
            None => CharValue::ONE,
            Some(_) if a % 2 == 0 => return CharValue::Zero,
            Some(log) => CharValue::from_exponent(log.layer, log.log(a)),
        };
        if negative {
            base.negate()
        } else {
            base
        }
    }
}

/// χ_n(a) as a cyclotomic number at level n.
pub fn chi_eval(n: u32, a: i64) -> Result<CyclotomicNumber> {
    if n < 1 {
        return Err(Error::InvalidCharacter("χ_n needs n ≥ 1".into()));
    }
    Ok(CharSpec::chi(n)?.char_eval(a))
}

/// ψ_d(a) ∈ {-1, 0, 1} for square-free d ≥ 1 (odd or even).
pub fn psi_eval(d: u64, a: i64) -> Result<i8> {
    if !arith::is_square_free(d) {
        return Err(Error::NotSquareFree(d));
    }
    if d == 1 {
        return Ok(1);
    }
    let disc = if d % 4 == 1 { d } else { 4 * d };
    Ok(arith::kronecker(disc as i64, a))
}

/// `p* = (-1/p)·p` and `f_p = ord2((p* - 1)/4)` for an odd prime p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrobeniusConstant {
    pub prime: u64,
    pub p_star: i64,
    pub f_p: u32,
}

pub fn frobenius_constant(p: u64) -> Result<FrobeniusConstant> {
    if p.is_multiple_of(2) || !arith::is_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    let p_star = if p % 4 == 1 { p as i64 } else { -(p as i64) };
    let f_p = arith::v2_i64((p_star - 1) / 4);
    Ok(FrobeniusConstant {
        prime: p,
        p_star,
        f_p,
    })
}

/// `Σ_{p | d} 2^{f_p}` and `max f_p` over the primes of an odd square-free d.
pub fn frobenius_sum(d: u64) -> Result<(u64, u32)> {
    let mut sum = 0u64;
    let mut max = 0u32;
    for p in arith::prime_factors(d) {
        let fc = frobenius_constant(p)?;
        sum += 1u64 << fc.f_p;
        max = max.max(fc.f_p);
    }
    Ok((sum, max))
}
