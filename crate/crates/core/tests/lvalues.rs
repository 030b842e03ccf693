use dyadic_core::characters::{CharEvaluator, CharSpec, CharValue, DirichletCharacter};
use dyadic_core::cyclotomic::CyclotomicNumber;
use dyadic_core::lvalues::{gen_bernoulli, generalized_bernoulli};
use dyadic_core::rational::{self, frac, int, pow2, Rational};
use dyadic_core::LValueEngine;

/// χ^t for odd t: the Galois conjugate of a character with values in Q(ζ_{2^n}).
struct Conjugate {
    inner: CharEvaluator,
    t: u64,
}

impl DirichletCharacter for Conjugate {
    fn level(&self) -> u32 {
        self.inner.level()
    }
    fn modulus(&self) -> u64 {
        self.inner.modulus()
    }
    fn value(&self, a: i64) -> CharValue {
        self.inner.value(a).power(self.t, self.inner.level())
    }
}

fn l_of<C: DirichletCharacter>(chi: &C, m: u32) -> CyclotomicNumber {
    let b = generalized_bernoulli(chi, m, chi.modulus()).unwrap();
    b.scale(&-frac(1, m as i64))
}

/// Product of L(χ^t, 1-m) over every odd t < 2^level, as a rational number.
fn conjugate_product(spec: CharSpec, m: u32) -> Rational {
    let level = spec.layer();
    let mut product = CyclotomicNumber::one(level);
    for t in (1..(1u64 << level)).step_by(2) {
        let c = Conjugate {
            inner: spec.evaluator(),
            t,
        };
        product = &product * &l_of(&c, m);
    }
    product
        .as_rational()
        .cloned()
        .expect("conjugate product is rational")
}

#[test]
fn zeta_kn_matches_explicit_conjugates() {
    let e = LValueEngine::new();
    for (d, n) in [(3u64, 2u32), (5, 2), (7, 3)] {
        for m in [2u32, 4] {
            let mut expected = e.zeta_qn(0, m).unwrap();
            expected *= e
                .l_value(&CharSpec::psi(d).unwrap(), m)
                .unwrap()
                .value
                .as_rational()
                .unwrap();
            for level in 1..=n {
                expected *= conjugate_product(CharSpec::chi(level).unwrap(), m);
                expected *= conjugate_product(CharSpec::new(level, d, 1).unwrap(), m);
            }
            assert_eq!(e.zeta_kn(d, n, m).unwrap(), expected, "d={d} n={n} m={m}");
        }
    }
}

#[test]
fn conjugates_share_valuation() {
    let spec = CharSpec::new(3, 15, 1).unwrap();
    let base = l_of(&spec.evaluator(), 2).ord2();
    for t in [3u64, 5, 7] {
        let c = Conjugate {
            inner: spec.evaluator(),
            t,
        };
        let l = l_of(&c, 2);
        assert_eq!(l.ord2(), base);
        assert_eq!(l, l_of(&spec.evaluator(), 2).galois(t as i64));
    }
}

#[test]
fn bernoulli_independent_of_summation_modulus() {
    for (n, d, p) in [
        (0u32, 5u64, 1u8),
        (1, 1, 0),
        (2, 3, 1),
        (3, 15, 2),
        (2, 21, 1),
    ] {
        let spec = CharSpec::new(n, d, p).unwrap();
        let m0 = spec.modulus();
        for m in [2u32, 4] {
            let base = gen_bernoulli(&spec, m, m0).unwrap();
            for k in [2u64, 3, 5] {
                assert_eq!(
                    gen_bernoulli(&spec, m, k * m0).unwrap(),
                    base,
                    "{spec} m={m} k={k}"
                );
            }
        }
    }
}

#[test]
fn imprimitive_identity() {
    let e = LValueEngine::new();
    for (n, d) in [(2u32, 3u64), (2, 5), (3, 15)] {
        let big_d = (1u64 << (n + 2)) * d;
        for m in [2u32, 4] {
            let stripped = e
                .l_value_imprimitive(&CharSpec::chi(n).unwrap(), big_d, m)
                .unwrap();
            let direct = e
                .dirichlet_l_value(&CharSpec::new(n, d, 2).unwrap(), m)
                .unwrap();
            assert_eq!(stripped.value, direct.value);
            let mut primes = direct.euler_factors_removed.clone();
            primes.sort();
            assert_eq!(stripped.euler_factors_removed, primes);
        }
    }
    let plain = e.l_value(&CharSpec::chi(3).unwrap(), 2).unwrap();
    assert_eq!(
        e.l_value_imprimitive(&CharSpec::chi(3).unwrap(), 1, 2)
            .unwrap()
            .value,
        plain.value
    );
}

#[test]
fn strip_factor_valuation() {
    // ord2(1 - χ_n(p) p^{m-1}) = 2^{1-n+f_p} once n > f_p + 1
    for (p, fp) in [(3u64, 0u32), (5, 0), (7, 1), (17, 2)] {
        for n in (fp + 2)..=6 {
            for m in [2u32, 4] {
                let chi_p = CharSpec::chi(n).unwrap().char_eval(p as i64);
                let factor = &CyclotomicNumber::one(n) - &chi_p.scale(&int(p.pow(m - 1) as i64));
                assert_eq!(
                    factor.ord2().finite().unwrap(),
                    &pow2(1 - n as i64 + fp as i64)
                );
            }
        }
    }
}

#[test]
fn quadratic_sum_oracle_across_k() {
    let e = LValueEngine::new();
    for spec in [
        CharSpec::chi(2).unwrap(),
        CharSpec::new(2, 5, 1).unwrap(),
        CharSpec::psi(7).unwrap(),
    ] {
        let bernoulli = e.dirichlet_l_value(&spec, 2).unwrap().value;
        for k in 1..=3 {
            assert_eq!(e.l_value_minus1_quadsum(&spec, k).unwrap(), bernoulli);
        }
    }
    assert_eq!(
        e.l_value_minus1_quadsum(&CharSpec::chi(1).unwrap(), 1)
            .unwrap(),
        CyclotomicNumber::from_integer(-1, 1)
    );
}

#[test]
fn zeta_qn_valuations_and_examples() {
    let e = LValueEngine::new();
    let z3 = e.zeta_qn(3, 4).unwrap();
    assert_eq!(rational::v2(&z3), Some(1));
    assert_eq!(rational::v2(&e.zeta_qn(1, 2).unwrap()), Some(-2));
    let q5 = e.zeta_kn(5, 0, 2).unwrap();
    assert_eq!(q5, frac(1, 30));
}

#[test]
fn twisted_chi1_is_even_twist() {
    // χ_1 ψ_d and ψ_{2d} are the same character, so their L-values agree
    let e = LValueEngine::new();
    for d in [3u64, 5, 7, 13] {
        let a = e
            .l_value(&CharSpec::new(1, d, 1).unwrap(), 2)
            .unwrap()
            .value;
        let b = e
            .l_value(&CharSpec::psi_even(2 * d).unwrap(), 2)
            .unwrap()
            .value;
        assert_eq!(a.as_rational(), b.as_rational());
    }
}

#[test]
fn quadratic_l_values_match_real_quadratic_zeta() {
    // ζ_K(-1) = ζ(-1) L(ψ,-1) with ζ_K(-1) = 1/30, 1/6, 1/6 for Q(√5), Q(√3), Q(√13)
    let e = LValueEngine::new();
    let l = |d| {
        e.l_value(&CharSpec::psi(d).unwrap(), 2)
            .unwrap()
            .value
            .as_rational()
            .cloned()
            .unwrap()
    };
    assert_eq!(l(5), frac(-2, 5));
    assert_eq!(l(3), frac(-2, 1));
    assert_eq!(l(13), frac(-2, 1));
}
