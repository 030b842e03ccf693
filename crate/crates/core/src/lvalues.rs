//! Exact L-values `L(χ, 1-m) = -B_{m,χ}/m` and the zeta values built from them.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::bernoulli::{bernoulli_numbers, binomial_row};
use crate::cache::LValueCache;
use crate::characters::{CharSpec, DirichletCharacter};
use crate::cyclotomic::{CyclotomicNumber, DyadicValuation};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::sums::{full_period_moments, power_sum};

/// An exact L-value with its valuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LValueResult {
    pub spec: CharSpec,
    pub m: u32,
    pub value: CyclotomicNumber,
    pub ord2: DyadicValuation,
    /// Primes whose Euler factors are missing from the Dirichlet series (empty for primitive L).
    pub euler_factors_removed: Vec<u64>,
}

impl LValueResult {
    fn new(
        spec: CharSpec,
        m: u32,
        value: CyclotomicNumber,
        euler_factors_removed: Vec<u64>,
    ) -> Self {
        let ord2 = value.ord2();
        Self {
            spec,
            m,
            value,
            ord2,
            euler_factors_removed,
        }
    }
}

/// Refuses sums whose length `2^n·d` exceeds `2^max_log2` unless overridden.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeGuard {
    pub max_log2: u32,
    pub allow_large: bool,
}

impl Default for SizeGuard {
    fn default() -> Self {
        Self {
            max_log2: 24,
            allow_large: false,
        }
    }
}

impl SizeGuard {
    pub fn unlimited() -> Self {
        Self {
            allow_large: true,
            ..Self::default()
        }
    }

    pub fn check(&self, n: u32, d: u64) -> Result<()> {
        if self.allow_large {
            return Ok(());
        }
        let size = (1u128 << n.min(127)) * d as u128;
        if size > 1u128 << self.max_log2 {
            return Err(Error::SizeGuard { n, d });
        }
        Ok(())
    }

    fn check_spec(&self, spec: &CharSpec) -> Result<()> {
        self.check(spec.layer(), spec.effective_twist())
    }
}

/// Which of the two half-range character sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumKind {
    /// `S(N) = ½ Σ_{a=1}^{N} χ(a) a^{m-1}`
    S,
    /// `T(D) = (2/(mD)) Σ_{a=1}^{D/2} χ(a) a^m`
    T,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterSum {
    pub kind: SumKind,
    pub bound: u64,
    pub spec: CharSpec,
    pub m: u32,
    pub value: CyclotomicNumber,
}

/// `B_{m,χ} = Σ_k C(m,k) B_k D0^{k-1} Σ_{a=1}^{D0} χ(a) a^{m-k}`.
///
/// This is the Bernoulli number of the character exactly as given, so for an
/// imprimitive character it yields the L-value with the missing Euler factors
/// removed. `d0` must be a multiple of the modulus.
pub fn gen_bernoulli(spec: &CharSpec, m: u32, d0: u64) -> Result<CyclotomicNumber> {
    generalized_bernoulli(&spec.evaluator(), m, d0)
}

/// [`gen_bernoulli`] for any periodic character.
pub fn generalized_bernoulli<C: DirichletCharacter>(
    chi: &C,
    m: u32,
    d0: u64,
) -> Result<CyclotomicNumber> {
    let modulus = chi.modulus();
    if d0 == 0 || !d0.is_multiple_of(modulus) {
        return Err(Error::BadSummationModulus { d0, modulus });
    }
    let moments = full_period_moments(chi, d0, m);
    Ok(combine_moments(&moments, m, d0))
}

fn combine_moments(moments: &[CyclotomicNumber], m: u32, d0: u64) -> CyclotomicNumber {
    let b = bernoulli_numbers(m as usize);
    let row = binomial_row(m as usize);
    let level = moments[0].level();
    let d0 = BigInt::from(d0);
    let mut total = CyclotomicNumber::zero(level);
    for k in 0..=m as usize {
        if b[k].is_zero() {
            continue;
        }
        let d_pow = if k == 0 {
            Rational::new(BigInt::one(), d0.clone())
        } else {
            Rational::from_integer(d0.pow(k as u32 - 1))
        };
        let c = &b[k] * Rational::from_integer(row[k].clone()) * d_pow;
        total = &total + &moments[m as usize - k].scale(&c);
    }
    total
}

fn l_from_bernoulli(b: CyclotomicNumber, m: u32) -> CyclotomicNumber {
    b.scale(&-Rational::new(BigInt::one(), BigInt::from(m)))
}

/// Computes L-values, consulting an optional cache and a size guard.
#[derive(Clone, Debug, Default)]
pub struct LValueEngine {
    guard: SizeGuard,
    cache: Option<Arc<LValueCache>>,
}

impl LValueEngine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_guard(mut self, guard: SizeGuard) -> Self {
        self.guard = guard;
        self
    }

    pub fn with_cache(mut self, cache: Arc<LValueCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn guard(&self) -> SizeGuard {
        self.guard
    }

    pub fn cache(&self) -> Option<&Arc<LValueCache>> {
        self.cache.as_ref()
    }

    /// `L(χ, 1-m)` for a primitive (or trivial) character.
    pub fn l_value(&self, spec: &CharSpec, m: u32) -> Result<LValueResult> {
        let conductor = spec.conductor();
        if conductor != spec.modulus() {
            return Err(Error::NotPrimitive {
                spec: spec.to_string(),
                conductor,
                modulus: spec.modulus(),
            });
        }
        self.dirichlet_l_value(spec, m)
    }

    /// `L(χ, 1-m)` of the Dirichlet series `Σ χ(a) a^{-s}` of the character as
    /// given. For `χ_n ψ_d^2` this is the L-value of χ_n with the Euler factors
    /// at the primes of d removed.
    pub fn dirichlet_l_value(&self, spec: &CharSpec, m: u32) -> Result<LValueResult> {
        if m == 0 {
            return Err(Error::InvalidInput("m must be at least 1".into()));
        }
        self.guard.check_spec(spec)?;
        let spec = spec.canonical();
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&spec, m)) {
            return Ok(hit);
        }
        let result = compute_uncached(&spec, m)?;
        if let Some(cache) = &self.cache {
            cache.insert(result.clone())?;
        }
        Ok(result)
    }

    /// `L^{(D)}(χ, 1-m) = Π_{p | D} (1 - χ(p) p^{m-1}) · L(χ, 1-m)` with χ
    /// replaced by the primitive character inducing `spec`.
    pub fn l_value_imprimitive(&self, spec: &CharSpec, strip: u64, m: u32) -> Result<LValueResult> {
        if strip == 0 {
            return Err(Error::ZeroModulus);
        }
        let primitive = spec.primitive();
        let base = self.l_value(&primitive, m)?;
        let ev = primitive.evaluator();
        let level = primitive.layer();
        let mut value = base.value;
        let mut removed = Vec::new();
        for p in arith::prime_factors(strip) {
            let chi_p = ev.eval(p as i64);
            if chi_p.is_zero() {
                continue;
            }
            let p_pow = Rational::from_integer(BigInt::from(p).pow(m - 1));
            let factor = &CyclotomicNumber::one(level) - &chi_p.scale(&p_pow);
            value = &value * &factor;
            removed.push(p);
        }
        Ok(LValueResult::new(*spec, m, value, removed))
    }

    /// `L(χ, -1) = -(1/(2kD)) Σ_{a=1}^{kD} χ(a) a^2` by a plain serial loop over
    /// `a`, with D the modulus. Independent of the Bernoulli route.
    pub fn l_value_minus1_quadsum(&self, spec: &CharSpec, k: u64) -> Result<CyclotomicNumber> {
        if spec.primitive().is_trivial() {
            return Err(Error::InvalidCharacter(format!(
                "{spec} is principal; the quadratic-sum formula needs a nontrivial character"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidInput("k must be positive".into()));
        }
        self.guard.check_spec(spec)?;
        let ev = spec.evaluator();
        if !ev.is_even() {
            return Err(Error::InvalidCharacter(format!("{spec} is not even")));
        }
        let bound = k * spec.modulus();
        let level = spec.layer();
        let mut total = CyclotomicNumber::zero(level);
        for a in 1..=bound {
            let v = ev.eval(a as i64);
            if !v.is_zero() {
                total =
                    &total + &v.scale(&Rational::from_integer(BigInt::from(a) * BigInt::from(a)));
            }
        }
        let scale = -Rational::new(BigInt::one(), BigInt::from(2 * bound));
        Ok(total.scale(&scale))
    }

    /// `S(N) = ½ Σ_{a=1}^{N} χ(a) a^{m-1}`.
    pub fn char_sum_s(&self, spec: &CharSpec, bound: u64, m: u32) -> Result<CharacterSum> {
        if m == 0 {
            return Err(Error::InvalidInput("m must be at least 1".into()));
        }
        self.guard.check_spec(spec)?;
        let ev = spec.evaluator();
        let raw = if bound > 0 && bound.is_multiple_of(spec.modulus()) {
            full_period_moments(&ev, bound, m - 1)
                .pop()
                .expect("non-empty")
        } else {
            power_sum(&ev, 1, bound, m - 1, None)
        };
        Ok(CharacterSum {
            kind: SumKind::S,
            bound,
            spec: *spec,
            m,
            value: raw.scale(&rational::frac(1, 2)),
        })
    }

    /// `T(D) = (2/(mD)) Σ_{a=1}^{D/2} χ(a) a^m`.
    pub fn char_sum_t(&self, spec: &CharSpec, bound: u64, m: u32) -> Result<CharacterSum> {
        if bound == 0 || !bound.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "T(D) needs even D > 0, got {bound}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidInput("m must be at least 1".into()));
        }
        self.guard.check_spec(spec)?;
        let ev = spec.evaluator();
        let raw = power_sum(&ev, 1, bound / 2, m, None);
        let scale = Rational::new(BigInt::from(2), BigInt::from(m as u64 * bound));
        Ok(CharacterSum {
            kind: SumKind::T,
            bound,
            spec: *spec,
            m,
            value: raw.scale(&scale),
        })
    }

    /// `ζ_{Q_n}(1-m) = ζ(1-m) · Π_{ℓ=1}^{n} N(L(χ_ℓ, 1-m))`.
    pub fn zeta_qn(&self, n: u32, m: u32) -> Result<Rational> {
        check_even_m(m)?;
        self.guard.check(n, 1)?;
        let mut total = self.rational_l_value(&CharSpec::trivial(), m)?;
        for level in 1..=n {
            total *= self.l_value(&CharSpec::chi(level)?, m)?.value.norm();
        }
        Ok(total)
    }

    /// `ζ_{K_n}(1-m)` for `K_n = Q_n(√d)`:
    /// `ζ_{Q_n}(1-m) · L(ψ_d, 1-m) · Π_{ℓ=1}^{n} N(L(χ_ℓ ψ_d, 1-m))`.
    pub fn zeta_kn(&self, d: u64, n: u32, m: u32) -> Result<Rational> {
        check_even_m(m)?;
        if d < 3 || d.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "d must be odd and at least 3, got {d}"
            )));
        }
        self.guard.check(n, d)?;
        let mut total = self.zeta_qn(n, m)?;
        total *= self.rational_l_value(&CharSpec::psi(d)?, m)?;
        for level in 1..=n {
            total *= self.l_value(&CharSpec::new(level, d, 1)?, m)?.value.norm();
        }
        Ok(total)
    }

    fn rational_l_value(&self, spec: &CharSpec, m: u32) -> Result<Rational> {
        let r = self.l_value(spec, m)?;
        r.value.as_rational().cloned().ok_or_else(|| {
            Error::Inconsistent(format!("L({spec}, {}) is not rational", 1 - m as i64))
        })
    }
}

fn check_even_m(m: u32) -> Result<()> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "m must be even and at least 2, got {m}"
        )));
    }
    Ok(())
}

/// Direct computation without cache or guard, used by the cache's own audit.
pub(crate) fn compute_uncached(spec: &CharSpec, m: u32) -> Result<LValueResult> {
    let d0 = spec.modulus();
    let value = l_from_bernoulli(gen_bernoulli(spec, m, d0)?, m);
    let conductor = spec.conductor();
    let removed = arith::prime_factors(spec.modulus())
        .into_iter()
        .filter(|p| !conductor.is_multiple_of(*p))
        .collect();
    Ok(LValueResult::new(*spec, m, value, removed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn engine() -> LValueEngine {
        LValueEngine::new()
    }

    #[test]
    fn classical_values() {
        let e = engine();
        assert_eq!(
            e.l_value(&CharSpec::trivial(), 2).unwrap().value,
            CyclotomicNumber::from_rational(frac(-1, 12), 0)
        );
        assert_eq!(
            e.l_value(&CharSpec::trivial(), 1).unwrap().value,
            CyclotomicNumber::from_rational(frac(-1, 2), 0)
        );
        assert_eq!(
            e.l_value(&CharSpec::chi(1).unwrap(), 2).unwrap().value,
            CyclotomicNumber::from_integer(-1, 1)
        );
        let psi5 = e.l_value(&CharSpec::psi(5).unwrap(), 2).unwrap();
        assert_eq!(psi5.value.as_rational().unwrap(), &frac(-2, 5));
        assert_eq!(psi5.ord2.finite().unwrap(), &int(1));
        let psi10 = e.l_value(&CharSpec::psi_even(10).unwrap(), 2).unwrap();
        assert_eq!(psi10.value.as_rational().unwrap(), &int(-14));
    }

    #[test]
    fn bernoulli_of_chi1() {
        let spec = CharSpec::chi(1).unwrap();
        let b8 = gen_bernoulli(&spec, 2, 8).unwrap();
        assert_eq!(b8, CyclotomicNumber::from_integer(2, 1));
        assert_eq!(gen_bernoulli(&spec, 2, 24).unwrap(), b8);
        assert!(gen_bernoulli(&spec, 2, 12).is_err());
        assert_eq!(
            gen_bernoulli(&CharSpec::trivial(), 2, 1).unwrap(),
            CyclotomicNumber::from_rational(frac(1, 6), 0)
        );
    }

    #[test]
    fn odd_m_vanishes_for_even_characters() {
        let e = engine();
        for m in [3u32, 5] {
            assert!(e
                .l_value(&CharSpec::new(2, 5, 1).unwrap(), m)
                .unwrap()
                .value
                .is_zero());
        }
    }

    #[test]
    fn rejects_imprimitive_and_guards_size() {
        let e = engine();
        let sq = CharSpec::new(2, 3, 2).unwrap();
        assert!(matches!(e.l_value(&sq, 2), Err(Error::NotPrimitive { .. })));
        assert!(e.dirichlet_l_value(&sq, 2).is_ok());
        assert!(e
            .l_value_minus1_quadsum(&CharSpec::psi(3).unwrap(), 1)
            .is_ok());
        assert!(e
            .l_value_minus1_quadsum(&CharSpec::new(0, 3, 2).unwrap(), 1)
            .is_err());
        assert!(e.l_value_minus1_quadsum(&CharSpec::trivial(), 1).is_err());
        let big = CharSpec::new(20, 33, 1).unwrap();
        assert!(matches!(e.l_value(&big, 2), Err(Error::SizeGuard { .. })));
        assert!(SizeGuard::default().check(24, 1).is_ok());
        assert!(SizeGuard::default().check(23, 3).is_err());
        assert!(SizeGuard::unlimited().check(40, 3).is_ok());
    }

    #[test]
    fn zeta_small_layers() {
        let e = engine();
        assert_eq!(e.zeta_qn(0, 2).unwrap(), frac(-1, 12));
        assert_eq!(e.zeta_qn(1, 2).unwrap(), frac(1, 12));
        let k0 = e.zeta_kn(5, 0, 2).unwrap();
        assert_eq!(k0, frac(-1, 12) * frac(-2, 5));
        assert!(e.zeta_kn(4, 1, 2).is_err());
        assert!(e.zeta_qn(1, 3).is_err());
    }

    #[test]
    fn char_sums_fold_consistently() {
        let e = engine();
        let spec = CharSpec::new(2, 5, 1).unwrap();
        let d = spec.modulus();
        let s_full = e.char_sum_s(&spec, d, 4).unwrap();
        let naive = crate::sums::naive_power_sum(&spec.evaluator(), 1, d, 3).scale(&frac(1, 2));
        assert_eq!(s_full.value, naive);
        let t = e.char_sum_t(&spec, d, 2).unwrap();
        assert_eq!(t.kind, SumKind::T);
        assert!(e.char_sum_t(&spec, 7, 2).is_err());
    }

    #[test]
    fn result_json_round_trip() {
        let r = engine()
            .l_value(&CharSpec::new(2, 3, 1).unwrap(), 2)
            .unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: LValueResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
