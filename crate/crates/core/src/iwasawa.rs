//! Closed-form valuations along the tower, K-group orders and Iwasawa invariants.
//!
//! Everything here is cheap arithmetic on top of exact L-values from
//! [`crate::lvalues`].

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::characters::{frobenius_sum, CharSpec};
use crate::cyclotomic::DyadicValuation;
use crate::error::{Error, Result};
use crate::lvalues::LValueEngine;
use crate::rational::{self, Rational};

fn check_odd_squarefree(d: u64) -> Result<()> {
    if d == 0 || d.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("d must be odd, got {d}")));
    }
    if !arith::is_square_free(d) {
        return Err(Error::NotSquareFree(d));
    }
    Ok(())
}

fn check_twist(d: u64) -> Result<()> {
    check_odd_squarefree(d)?;
    if d < 3 {
        return Err(Error::InvalidInput(format!(
            "d must be at least 3, got {d}"
        )));
    }
    Ok(())
}

fn check_m(m: u32) -> Result<()> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "m must be even and at least 2, got {m}"
        )));
    }
    Ok(())
}

fn ord2_m(m: u32) -> u32 {
    m.trailing_zeros()
}

/// `1 + 2^{1-n}(-1 + Σ_{p|d} 2^{f_p})`; for d = 1 this is `1 - 2^{1-n}`.
pub fn predicted_lvalue_ord(d: u64, n: u32, m: u32) -> Result<Rational> {
    check_odd_squarefree(d)?;
    check_m(m)?;
    if n < 1 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let (sum, _) = frobenius_sum(d)?;
    Ok(rational::int(1)
        + rational::pow2(1 - n as i64) * (rational::int(sum as i64) - rational::int(1)))
}

/// Layers from which the closed-form valuation is known to hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdBound {
    pub d: u64,
    /// `max_{p|d} f_p`
    pub f: u32,
    /// number of distinct prime divisors of d
    pub tau: u32,
    /// `⌈f + log2 τ + 2⌉`, valid for every even m
    pub ceiling: u32,
    /// `f + 2`, available for m = 2 only
    pub refined: Option<u32>,
}

impl NdBound {
    /// The bound used for m: the refined one when present.
    pub fn effective(&self) -> u32 {
        self.refined.unwrap_or(self.ceiling)
    }
}

pub fn n_d_bound(d: u64, m: u32) -> Result<NdBound> {
    check_odd_squarefree(d)?;
    check_m(m)?;
    if d == 1 {
        return Err(Error::InvalidInput(
            "d = 1 has no twist; the closed form holds from n = 1".into(),
        ));
    }
    let (_, f) = frobenius_sum(d)?;
    let tau = arith::prime_factors(d).len() as u32;
    Ok(NdBound {
        d,
        f,
        tau,
        ceiling: f + 2 + arith::ceil_log2(tau as u64),
        refined: (m == 2).then_some(f + 2),
    })
}

fn finite_ord(v: DyadicValuation, what: impl FnOnce() -> String) -> Result<Rational> {
    match v {
        DyadicValuation::Finite(q) => Ok(q),
        DyadicValuation::Infinite => Err(Error::Inconsistent(format!("{} vanishes", what()))),
    }
}

/// `ν' = ord2(L(ψ_d,1-m)/(4m)) - 2^{n_d} + n_d(1 - Σ 2^{f_p}) + Σ_{k=1}^{n_d} 2^{k-1} ord2 L(χ_k ψ_d, 1-m)`
/// with `n_d` the effective bound for m.
pub fn nu_prime(engine: &LValueEngine, d: u64, m: u32) -> Result<Rational> {
    let nd = n_d_bound(d, m)?.effective();
    nu_prime_at(engine, d, m, nd)
}

/// `ν'` evaluated with an explicit cut-off layer.
pub fn nu_prime_at(engine: &LValueEngine, d: u64, m: u32, nd: u32) -> Result<Rational> {
    check_twist(d)?;
    check_m(m)?;
    let (sum, _) = frobenius_sum(d)?;
    let psi = engine.l_value(&CharSpec::psi(d)?, m)?;
    let mut total = finite_ord(psi.ord2, || format!("L(ψ{d}, {})", 1 - m as i64))?
        - rational::int(2 + ord2_m(m) as i64);
    total -= rational::pow2(nd as i64);
    total += rational::int(nd as i64) * (rational::int(1) - rational::int(sum as i64));
    for k in 1..=nd {
        let l = engine.l_value(&CharSpec::new(k, d, 1)?, m)?;
        let v = finite_ord(l.ord2, || format!("L(χ{k}ψ{d}, {})", 1 - m as i64))?;
        total += rational::pow2(k as i64 - 1) * v;
    }
    Ok(total)
}

/// Base field of a tower: Q, or a real quadratic field Q(√d).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldBase {
    Rationals,
    Quadratic { d: u64 },
}

/// The n-th layer `F_n` of the cyclotomic Z_2-tower over a base field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldLayerSpec {
    pub base: FieldBase,
    pub layer: u32,
    pub degree: u64,
    pub r1: u64,
    /// Number of primes above 2, when known for the family.
    pub g2: Option<u32>,
}

fn single_prime_above_two(d: u64) -> bool {
    let p = if d.is_multiple_of(2) { d / 2 } else { d };
    arith::is_prime(p) && p % 2 == 1 && matches!(p % 8, 3 | 5)
}

impl FieldLayerSpec {
    /// `Q_n`; the prime 2 is totally ramified, so g2 = 1.
    pub fn rationals(layer: u32) -> Self {
        let degree = 1u64 << layer;
        Self {
            base: FieldBase::Rationals,
            layer,
            degree,
            r1: degree,
            g2: Some(1),
        }
    }

    /// `Q(√d)_n` for odd square-free d ≥ 3, or d = 2p with p an odd prime.
    /// g2 = 1 is filled in for d = p or 2p with p ≡ ±3 (mod 8).
    pub fn quadratic(d: u64, layer: u32) -> Result<Self> {
        if d.is_multiple_of(2) {
            let p = d / 2;
            if !(p % 2 == 1 && arith::is_prime(p)) {
                return Err(Error::UnsupportedField(format!(
                    "even d must be twice an odd prime, got {d}"
                )));
            }
        } else {
            check_twist(d)?;
        }
        let degree = 2u64 << layer;
        Ok(Self {
            base: FieldBase::Quadratic { d },
            layer,
            degree,
            r1: degree,
            g2: single_prime_above_two(d).then_some(1),
        })
    }

    /// Overrides the number of primes above 2.
    pub fn with_g2(mut self, g2: u32) -> Self {
        self.g2 = Some(g2);
        self
    }

    /// `ζ_{F_n}(1-m)` from L-values.
    pub fn zeta(&self, engine: &LValueEngine, m: u32) -> Result<Rational> {
        match self.base {
            FieldBase::Rationals => engine.zeta_qn(self.layer, m),
            // Q_n contains √2, so Q(√2p)_n = Q(√p)_n once n ≥ 1
            FieldBase::Quadratic { d } if d % 2 == 0 && self.layer >= 1 => {
                engine.zeta_kn(d / 2, self.layer, m)
            }
            FieldBase::Quadratic { d } if d % 2 == 0 => {
                let zeta = engine.zeta_qn(0, m)?;
                let l = engine.l_value(&CharSpec::psi_even(d)?, m)?;
                let l = l.value.as_rational().cloned().ok_or_else(|| {
                    Error::Inconsistent(format!("L(ψ{d}, {}) is not rational", 1 - m as i64))
                })?;
                Ok(zeta * l)
            }
            FieldBase::Quadratic { d } => engine.zeta_kn(d, self.layer, m),
        }
    }
}

impl fmt::Display for FieldLayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.base {
            FieldBase::Rationals => write!(f, "Q_{}", self.layer),
            FieldBase::Quadratic { d } => write!(f, "Q(√{d})_{}", self.layer),
        }
    }
}

/// `ord2 w_m(F_n) = n + 2 + ord2(m)`.
pub fn w_m_ord2(field: &FieldLayerSpec, m: u32) -> Result<u32> {
    check_m(m)?;
    Ok(field.layer + 2 + ord2_m(m))
}

/// `e = ord2 |K_{2m-2}(O_F)(2)|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KGroupOrder {
    pub field: FieldLayerSpec,
    pub m: u32,
    pub e: u64,
}

/// `e = ord2(w_m ζ_F(1-m))`, less `[F:Q]` when 4 | m.
pub fn k_group_ord2(engine: &LValueEngine, field: &FieldLayerSpec, m: u32) -> Result<KGroupOrder> {
    let w = w_m_ord2(field, m)?;
    let zeta = field.zeta(engine, m)?;
    let zeta_ord = rational::v2(&zeta)
        .ok_or_else(|| Error::Inconsistent(format!("ζ_{field}({}) vanishes", 1 - m as i64)))?;
    let mut e = w as i64 + zeta_ord;
    if m.is_multiple_of(4) {
        e -= field.degree as i64;
    }
    if e < 0 {
        return Err(Error::Inconsistent(format!(
            "negative 2-order {e} for K_{} of {field}",
            2 * m - 2
        )));
    }
    Ok(KGroupOrder {
        field: *field,
        m,
        e: e as u64,
    })
}

/// How an invariant triple was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Derivation {
    /// Quadratic base: closed formula in terms of ν'.
    #[serde(rename = "closed form")]
    ClosedForm,
    /// Base Q: the general formula `λ = 1 - [F:Q] + Σ` with an empty sum.
    #[serde(rename = "derived from proof form")]
    ProofForm,
}

/// `e(n) = μ·2^n + λ·n + ν` for `n ≥ n_threshold`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantTriple {
    pub d: u64,
    pub m: u32,
    pub mu: i64,
    pub lambda: i64,
    pub nu: i64,
    #[serde(with = "rational_text")]
    pub nu_prime: Rational,
    pub n_threshold: u32,
    pub derivation: Derivation,
}

impl InvariantTriple {
    pub fn e_at(&self, n: u32) -> i64 {
        self.mu * (1i64 << n) + self.lambda * n as i64 + self.nu
    }
}

mod rational_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational::format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        rational::parse(&text).map_err(serde::de::Error::custom)
    }
}

pub fn invariant_triple(engine: &LValueEngine, d: u64, m: u32) -> Result<InvariantTriple> {
    check_odd_squarefree(d)?;
    check_m(m)?;
    let shift = 2 + ord2_m(m) as i64;
    if d == 1 {
        return Ok(InvariantTriple {
            d,
            m,
            mu: if ord2_m(m) == 1 { 1 } else { 0 },
            lambda: 0,
            nu: 0,
            nu_prime: rational::int(-shift),
            n_threshold: 1,
            derivation: Derivation::ProofForm,
        });
    }
    let bound = n_d_bound(d, m)?;
    let (sum, _) = frobenius_sum(d)?;
    let nu_prime = nu_prime(engine, d, m)?;
    let nu = &nu_prime + rational::int(shift);
    if !nu.is_integer() {
        return Err(Error::Inconsistent(format!(
            "ν = {} is not an integer",
            rational::format(&nu)
        )));
    }
    Ok(InvariantTriple {
        d,
        m,
        mu: if ord2_m(m) == 1 { 2 } else { 0 },
        lambda: sum as i64 - 1,
        nu: rational::ceil_i64(&nu),
        nu_prime,
        n_threshold: bound.effective(),
        derivation: Derivation::ClosedForm,
    })
}

/// Outcome of squeezing the 2-rank between `r1 + g2 - 1` and `ord2 |K_2|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TameKernelStructure {
    ElementaryAbelian { rank: u64 },
    Undetermined { lower: u64, upper: u64 },
}

impl fmt::Display for TameKernelStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ElementaryAbelian { rank } => write!(f, "(Z/2)^{rank}"),
            Self::Undetermined { lower, upper } => {
                write!(f, "undetermined ({lower} <= 2-rank <= {upper})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TameKernelReport {
    pub field: FieldLayerSpec,
    pub r1: u64,
    pub g2: u32,
    pub order_ord2: u64,
    pub structure: TameKernelStructure,
}

/// The 2-part of `K_2(O_F)` when the rank bound meets the order.
pub fn tame_kernel_structure(
    engine: &LValueEngine,
    field: &FieldLayerSpec,
) -> Result<TameKernelReport> {
    let g2 = field.g2.ok_or_else(|| {
        Error::UnsupportedField(format!(
            "{field}: number of primes above 2 is not known for this family"
        ))
    })?;
    let order = k_group_ord2(engine, field, 2)?.e;
    let lower = (field.r1 + g2 as u64).saturating_sub(1);
    if lower > order {
        return Err(Error::Inconsistent(format!(
            "{field}: rank bound {lower} exceeds 2-order {order}; g2 = {g2} cannot be right"
        )));
    }
    let structure = if lower == order {
        TameKernelStructure::ElementaryAbelian { rank: order }
    } else {
        TameKernelStructure::Undetermined {
            lower,
            upper: order,
        }
    };
    Ok(TameKernelReport {
        field: *field,
        r1: field.r1,
        g2,
        order_ord2: order,
        structure,
    })
}

fn twisted_spec(d: u64, n: u32) -> Result<CharSpec> {
    if d == 1 {
        CharSpec::chi(n)
    } else {
        CharSpec::new(n, d, 1)
    }
}

/// `ord2 L(χ_n ψ_d, 1-m)` computed exactly.
pub fn computed_lvalue_ord(engine: &LValueEngine, d: u64, n: u32, m: u32) -> Result<Rational> {
    let r = engine.l_value(&twisted_spec(d, n)?, m)?;
    finite_ord(r.ord2, || format!("L(χ{n}ψ{d}, {})", 1 - m as i64))
}

/// Least `n0 ≤ n_max` with computed = predicted valuation for every `n0 ≤ n ≤ n_max`.
pub fn empirical_threshold(
    engine: &LValueEngine,
    d: u64,
    m: u32,
    n_max: u32,
) -> Result<Option<u32>> {
    let mut threshold = None;
    for n in (1..=n_max).rev() {
        if computed_lvalue_ord(engine, d, n, m)? != predicted_lvalue_ord(d, n, m)? {
            break;
        }
        threshold = Some(n);
    }
    Ok(threshold)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepConfig {
    pub ds: Vec<u64>,
    pub n_min: u32,
    pub n_max: u32,
    pub ms: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub d: u64,
    pub n: u32,
    pub m: u32,
    #[serde(serialize_with = "rational_text::serialize")]
    pub ord2_computed: Rational,
    #[serde(serialize_with = "rational_text::serialize")]
    pub ord2_predicted: Rational,
    #[serde(rename = "match")]
    pub matches: bool,
    pub n_d_ceiling: u32,
    pub n_d_refined: Option<u32>,
}

/// Computes every `(d, n, m)` point in parallel; rows come back in grid order.
pub fn sweep(engine: &LValueEngine, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.n_min < 1 || config.n_min > config.n_max {
        return Err(Error::InvalidInput(format!(
            "need 1 <= n-min <= n-max, got {}..{}",
            config.n_min, config.n_max
        )));
    }
    let mut points = Vec::new();
    for &d in &config.ds {
        check_odd_squarefree(d)?;
        for &m in &config.ms {
            check_m(m)?;
            for n in config.n_min..=config.n_max {
                engine.guard().check(n, d)?;
                points.push((d, n, m));
            }
        }
    }
    points
        .into_par_iter()
        .map(|(d, n, m)| {
            let (ceiling, refined) = if d == 1 {
                (1, Some(1))
            } else {
                let b = n_d_bound(d, m)?;
                (b.ceiling, b.refined)
            };
            let computed = computed_lvalue_ord(engine, d, n, m)?;
            let predicted = predicted_lvalue_ord(d, n, m)?;
            Ok(SweepRow {
                d,
                n,
                m,
                matches: computed == predicted,
                ord2_computed: computed,
                ord2_predicted: predicted,
                n_d_ceiling: ceiling,
                n_d_refined: refined,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 8] = [
    "d",
    "n",
    "m",
    "ord2_computed",
    "ord2_predicted",
    "match",
    "n_d_ceiling",
    "n_d_refined",
];

/// CSV with a fixed header; a missing refined bound is written as `-`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            rational::format(&r.ord2_computed),
            rational::format(&r.ord2_predicted),
            r.matches.to_string(),
            r.n_d_ceiling.to_string(),
            r.n_d_refined
                .map_or_else(|| "-".to_string(), |v| v.to_string()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `Σ_{p|d} 2^{f_p} - 1`, the λ-invariant over Q(√d).
pub fn lambda_of(d: u64) -> Result<i64> {
    check_twist(d)?;
    Ok(frobenius_sum(d)?.0 as i64 - 1)
}

/// `ord2 ζ_{K_n}(1-m) - (2·2^n + (Σ 2^{f_p} - 2)·n)`, constant (= ν') past the threshold.
pub fn zeta_kn_residual(engine: &LValueEngine, d: u64, n: u32, m: u32) -> Result<Rational> {
    let zeta = engine.zeta_kn(d, n, m)?;
    let v = rational::v2(&zeta).ok_or_else(|| Error::Inconsistent("ζ vanishes".into()))?;
    let (sum, _) = frobenius_sum(d)?;
    let main = 2 * (1i64 << n) + (sum as i64 - 2) * n as i64;
    Ok(rational::int(v - main))
}
