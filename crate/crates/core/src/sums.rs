//! Exact character-weighted power sums `Σ χ(a) a^j`.
//!
//! The range is split into blocks summed in parallel; each block accumulates
//! per-coefficient `i128` totals and spills into `BigInt` on overflow. Addition
//! of integers is associative, so the result never depends on the partition.

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;

use crate::bernoulli::binomial_row;
use crate::characters::{CharValue, DirichletCharacter};
use crate::cyclotomic::{degree, CyclotomicNumber};
use crate::rational::Rational;

/// Restricts a sum to `a ≡ residue (mod modulus)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResidueFilter {
    pub modulus: u64,
    pub residue: u64,
}

impl ResidueFilter {
    pub fn new(modulus: u64, residue: u64) -> Self {
        Self {
            modulus,
            residue: residue % modulus,
        }
    }

    fn accepts(&self, a: u64) -> bool {
        a % self.modulus == self.residue
    }
}

/// Per-block accumulator: `exps.len() × degree` integer slots.
struct Accumulator {
    width: usize,
    small: Vec<i128>,
    big: Option<Vec<BigInt>>,
}

impl Accumulator {
    fn new(slots: usize, width: usize) -> Self {
        Self {
            width,
            small: vec![0; slots],
            big: None,
        }
    }

    fn spill(&mut self, slot: usize, amount: BigInt) {
        let len = self.small.len();
        let big = self.big.get_or_insert_with(|| vec![BigInt::zero(); len]);
        big[slot] += amount;
    }

    fn add(&mut self, slot: usize, term: &Term, negative: bool) {
        match term {
            Term::Small(t) => {
                let t = if negative { -*t } else { *t };
                match self.small[slot].checked_add(t) {
                    Some(s) => self.small[slot] = s,
                    None => {
                        let old = std::mem::take(&mut self.small[slot]);
                        self.spill(slot, BigInt::from(old) + BigInt::from(t));
                    }
                }
            }
            Term::Big(t) => self.spill(slot, if negative { -t.clone() } else { t.clone() }),
        }
    }

    fn into_totals(self) -> Vec<BigInt> {
        let mut out: Vec<BigInt> = self.small.into_iter().map(BigInt::from).collect();
        if let Some(big) = self.big {
            for (o, b) in out.iter_mut().zip(big) {
                *o += b;
            }
        }
        out
    }
}

enum Term {
    Small(i128),
    Big(BigInt),
}

fn power_term(a: u64, e: u32) -> Term {
    match (a as u128)
        .checked_pow(e)
        .and_then(|v| i128::try_from(v).ok())
    {
        Some(v) => Term::Small(v),
        None => Term::Big(BigInt::from(a).pow(e)),
    }
}

fn sum_block<C: DirichletCharacter>(
    chi: &C,
    lo: u64,
    hi: u64,
    exps: &[u32],
    filter: Option<ResidueFilter>,
    width: usize,
) -> Vec<BigInt> {
    let mut acc = Accumulator::new(exps.len() * width, width);
    for a in lo..hi {
        if filter.is_some_and(|f| !f.accepts(a)) {
            continue;
        }
        let (index, negative) = match chi.value(a as i64) {
            CharValue::Zero => continue,
            CharValue::Unit { index, negative } => (index, negative),
        };
        for (k, &e) in exps.iter().enumerate() {
            let slot = k * acc.width + index;
            acc.add(slot, &power_term(a, e), negative);
        }
    }
    acc.into_totals()
}

/// `Σ_{a=start}^{end} χ(a) a^e` for each `e` in `exps`, computed in parallel.
pub fn power_sums<C: DirichletCharacter>(
    chi: &C,
    start: u64,
    end: u64,
    exps: &[u32],
    filter: Option<ResidueFilter>,
) -> Vec<CyclotomicNumber> {
    let level = chi.level();
    let width = degree(level);
    let slots = exps.len() * width;
    let totals = if end < start || exps.is_empty() {
        vec![BigInt::zero(); slots]
    } else {
        let len = end - start + 1;
        // keep per-block accumulator memory proportional to the block length
        let min_block = (4 * slots as u64).max(1 << 12);
        let max_blocks = (rayon::current_num_threads() as u64 * 8).max(1);
        let blocks = (len / min_block).clamp(1, max_blocks);
        let block_len = len.div_ceil(blocks);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let lo = start + b * block_len;
                let hi = (lo + block_len).min(end + 1);
                sum_block(chi, lo, hi, exps, filter, width)
            })
            .reduce(
                || vec![BigInt::zero(); slots],
                |mut x, y| {
                    for (a, b) in x.iter_mut().zip(y) {
                        *a += b;
                    }
                    x
                },
            )
    };
    totals
        .chunks(width)
        .map(|c| {
            let coeffs = c.iter().cloned().map(Rational::from_integer).collect();
            CyclotomicNumber::from_coeffs(level, coeffs).expect("width matches level")
        })
        .collect()
}

/// `Σ_{a=start}^{end} χ(a) a^e` for a single exponent.
pub fn power_sum<C: DirichletCharacter>(
    chi: &C,
    start: u64,
    end: u64,
    e: u32,
    filter: Option<ResidueFilter>,
) -> CyclotomicNumber {
    power_sums(chi, start, end, &[e], filter)
        .pop()
        .expect("one exponent")
}

/// Straight serial loop, used as a reference for the optimised paths.
pub fn naive_power_sum<C: DirichletCharacter>(
    chi: &C,
    start: u64,
    end: u64,
    e: u32,
) -> CyclotomicNumber {
    let level = chi.level();
    let mut total = CyclotomicNumber::zero(level);
    for a in start..=end {
        let v = chi.eval(a as i64);
        if !v.is_zero() {
            total = &total + &v.scale(&Rational::from_integer(BigInt::from(a).pow(e)));
        }
    }
    total
}

/// Full-period moments `P_j = Σ_{a=1}^{d0} χ(a) a^j` for `j = 0..=max_exp`.
///
/// When the character is even and `d0` is an even multiple of its modulus, the
/// sum runs only over `a < d0/2`, pairing each `a` with `d0 - a` and expanding
/// `(d0 - a)^j` binomially. Otherwise the plain range is summed.
pub fn full_period_moments<C: DirichletCharacter>(
    chi: &C,
    d0: u64,
    max_exp: u32,
) -> Vec<CyclotomicNumber> {
    let exps: Vec<u32> = (0..=max_exp).collect();
    let foldable = d0.is_multiple_of(2)
        && chi.modulus() > 0
        && d0.is_multiple_of(chi.modulus())
        && chi.is_even();
    if !foldable {
        return power_sums(chi, 1, d0, &exps, None);
    }
    let h = d0 / 2;
    let half = power_sums(chi, 1, h - 1, &exps, None);
    let level = chi.level();
    let boundary = |a: u64, j: u32| -> CyclotomicNumber {
        chi.eval(a as i64)
            .scale(&Rational::from_integer(BigInt::from(a).pow(j)))
    };
    let d0_big = BigInt::from(d0);
    (0..=max_exp)
        .map(|j| {
            let row = binomial_row(j as usize);
            let mut total = half[j as usize].clone();
            for i in 0..=j {
                let mut c = &row[i as usize] * d0_big.pow(j - i);
                if i % 2 == 1 {
                    c = -c;
                }
                if !c.is_zero() {
                    total = &total + &half[i as usize].scale(&Rational::from_integer(c));
                }
            }
            total = &total + &boundary(h, j);
            &total + &boundary(d0, j)
        })
        .inspect(|v| debug_assert_eq!(v.level(), level))
        .collect()
}
