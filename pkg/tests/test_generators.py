import math
from fractions import Fraction

import mpmath as mp
import pytest

import oracles
from fchi import InputError
from fchi.generators import (
    CATALOG,
    alpha_generator,
    catalog_coeff,
    conjugate_coeffs,
    conjugate_generator,
    exponential,
    from_spec,
    generalized_binomial,
    harmonic,
    jeffreys,
    jensen_shannon,
    kl,
    polynomial_generator,
    reverse_kl,
)

SAMPLE_U = (0.1, 0.5, 0.9, 1.0, 1.3, 2.0, 7.25)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_coeffs_match_taylor_oracle(name):
    gen = CATALOG[name]()
    coeffs = oracles.taylor_coeffs(oracles.MP_F[name], 20)
    # exp carries float coefficients e/i!; the rest are exact rationals
    tol = mp.mpf("1e-15") if name == "exp" else mp.mpf("1e-25")
    for i in range(2, 21):
        assert oracles.rel_err(gen.coeff(i), coeffs[i]) < tol
    assert oracles.rel_err(gen.f_at_one, coeffs[0]) < mp.mpf("1e-30")
    assert oracles.rel_err(gen.fprime_at_one, coeffs[1]) < mp.mpf("1e-30")


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_eval_matches_oracle(name):
    gen = CATALOG[name]()
    f = oracles.MP_F[name]
    for u in SAMPLE_U:
        # js and exp lose a couple of digits to cancellation near u = 1
        assert oracles.rel_err(gen.eval(u), f(mp.mpf(u))) < mp.mpf("1e-12")


def test_eval_zero_limits():
    assert kl().eval(0) == math.inf
    assert reverse_kl().eval(0) == 0.0
    assert jeffreys().eval(0) == math.inf
    assert jensen_shannon().eval(0) == pytest.approx(math.log(2), rel=1e-15)
    assert harmonic().eval(0) == 0.0
    assert exponential().eval(0) == 1.0
    assert alpha_generator(3).eval(0) == pytest.approx(-0.5, rel=1e-15)
    assert alpha_generator(-3).eval(0) == math.inf


def test_eval_rejects_negative():
    with pytest.raises(ValueError):
        kl().eval(-0.25)


def test_coeff_order_validation():
    for bad in (1, 0, -3, 2.0):
        with pytest.raises(ValueError):
            kl().coeff(bad)


def test_known_exact_coefficients():
    assert kl().coeff(5) == Fraction(-1, 5)
    assert reverse_kl().coeff(4) == Fraction(1, 12)
    assert jeffreys().coeff(6) == Fraction(1, 5)
    assert harmonic().coeff(3) == Fraction(1, 8)
    assert jensen_shannon().coeff(2) == Fraction(1, 4)
    assert jensen_shannon().coeff(23) == Fraction(-182361, 92274688)
    assert exponential().coeff(3) == pytest.approx(math.e / 6, rel=1e-16)


def test_exponential_coeff_large_order():
    c = exponential().coeff(200)
    want = mp.e / mp.factorial(200)
    assert oracles.rel_err(c, want) < mp.mpf("1e-12")


def test_generalized_binomial():
    assert generalized_binomial(5, 2) == Fraction(10)
    assert generalized_binomial(5, 7) == 0
    assert generalized_binomial(Fraction(1, 2), 3) == Fraction(1, 16)
    assert generalized_binomial(Fraction(-1), 3) == Fraction(-1)
    out = generalized_binomial(0.5, 3)
    assert isinstance(out, float)
    assert out == pytest.approx(1 / 16, rel=1e-15)
    with pytest.raises(ValueError):
        generalized_binomial(2, -1)


@pytest.mark.parametrize("alpha", [0, 3, -3, 7, 0.5, Fraction(1, 3)])
def test_alpha_second_coefficient_is_half(alpha):
    c = alpha_generator(alpha).coeff(2)
    if isinstance(c, Fraction):
        assert c == Fraction(1, 2)
    else:
        assert c == pytest.approx(0.5, abs=1e-15)


def test_alpha_coeffs_match_taylor_oracle():
    for alpha in (3, -5, 0, 0.5):
        gen = alpha_generator(alpha)
        coeffs = oracles.taylor_coeffs(oracles.f_alpha(alpha), 12)
        tol = mp.mpf("1e-22") if alpha in (3, -5) else mp.mpf("1e-13")
        for i in range(2, 13):
            if coeffs[i] == 0:
                assert gen.coeff(i) == 0
            else:
                assert oracles.rel_err(gen.coeff(i), coeffs[i]) < tol


def test_alpha_exactness_split():
    assert isinstance(alpha_generator(3).coeff(4), Fraction)
    assert isinstance(alpha_generator(5).coeff(3), Fraction)
    assert isinstance(alpha_generator(0).coeff(3), float)
    assert isinstance(alpha_generator(0.5).coeff(3), float)
    # odd alpha makes (1+alpha)/2 an integer, so f is a polynomial of that
    # degree and the coefficients terminate right after it
    assert alpha_generator(3).coeff(4) == 0
    assert alpha_generator(5).coeff(3) != 0
    assert alpha_generator(5).coeff(4) == 0


def test_alpha_rejects_unit_values():
    for bad in (1, -1, 1.0):
        with pytest.raises(ValueError):
            alpha_generator(bad)


def test_alpha_eval_matches_oracle():
    for alpha in (3, -3, 0, 0.5):
        gen = alpha_generator(alpha)
        f = oracles.f_alpha(alpha)
        for u in SAMPLE_U:
            assert oracles.rel_err(gen.eval(u), f(mp.mpf(u))) < mp.mpf("1e-13")


def test_polynomial_generator():
    gen = polynomial_generator([2, 0, 1, 5])
    # c_i = sum_j a_j C(j, i)
    assert gen.coeff(2) == Fraction(1 + 5 * 3)
    assert gen.coeff(3) == Fraction(5)
    assert gen.coeff(4) == 0
    assert gen.f_at_one == Fraction(8)
    assert gen.fprime_at_one == Fraction(17)
    for u in SAMPLE_U:
        assert gen.eval(u) == pytest.approx(2 + u**2 + 5 * u**3, rel=1e-15)
    # deriv_sup(k) bounds the (k+1)-th derivative: f''' = 30, f'''' = 0
    assert gen.deriv_sup(2, 0.0, 4.0) == 30.0
    assert gen.deriv_sup(3, 0.0, 4.0) == 0.0


def test_polynomial_quadratic_distance():
    gen = polynomial_generator([1, -2, 1])
    assert gen.name == "poly:1,-2,1"
    assert gen.coeff(2) == 1
    assert gen.coeff(3) == 0
    assert gen.f_at_one == 0
    assert gen.eval(Fraction(3, 2)) == Fraction(1, 4)


def test_from_spec_names_and_aliases():
    assert from_spec("kl") is kl()
    assert from_spec(" js ") is jensen_shannon()
    assert from_spec("alpha:3") is alpha_generator(3)
    assert from_spec("alpha:0.5").name == "alpha:0.5"
    assert from_spec("alpha:1/3").coeff(2) == pytest.approx(0.5, abs=1e-15)
    assert from_spec("poly:1,-2,1").coeff(2) == 1
    assert from_spec("poly:1/3,2/3").f_at_one == Fraction(1)


def test_from_spec_errors():
    with pytest.raises(InputError):
        from_spec("mystery")
    with pytest.raises(InputError):
        from_spec("alpha:1")
    with pytest.raises(InputError):
        from_spec("alpha:abc")
    with pytest.raises(InputError):
        from_spec("poly:1,x")
    with pytest.raises(InputError):
        from_spec("poly:1/0")


MP_DERIV_CASES = [
    ("kl", oracles.f_kl),
    ("rkl", oracles.f_rkl),
    ("jeffreys", oracles.f_jeffreys),
    ("js", oracles.f_js),
    ("harmonic", oracles.f_harmonic),
    ("exp", oracles.f_exponential),
]


@pytest.mark.parametrize("name,f", MP_DERIV_CASES)
def test_deriv_sup_is_endpoint_max(name, f):
    """Each catalog |f^(k+1)| is monotone, so the sup is an endpoint value."""
    gen = CATALOG[name]()
    m, M = 0.4, 2.5
    for k in range(1, 7):
        end = max(abs(mp.diff(f, mp.mpf(m), k + 1)), abs(mp.diff(f, mp.mpf(M), k + 1)))
        got = gen.deriv_sup(k, m, M)
        assert oracles.rel_err(got, end) < mp.mpf("1e-12")
        for u in (0.6, 1.0, 1.7):
            inner = abs(mp.diff(f, mp.mpf(u), k + 1))
            assert mp.mpf(got) * (1 + mp.mpf("1e-12")) >= inner


def test_deriv_sup_alpha_endpoint_max():
    for alpha in (3, 0, 0.5, -3):
        gen = alpha_generator(alpha)
        f = oracles.f_alpha(alpha)
        for k in range(1, 6):
            end = max(
                abs(mp.diff(f, mp.mpf("0.4"), k + 1)),
                abs(mp.diff(f, mp.mpf("2.5"), k + 1)),
            )
            got = gen.deriv_sup(k, 0.4, 2.5)
            if end == 0:
                assert got == 0.0
            else:
                assert oracles.rel_err(got, end) < mp.mpf("1e-10")


def test_deriv_sup_at_zero_edge():
    assert kl().deriv_sup(2, 0.0, 2.0) == math.inf
    assert reverse_kl().deriv_sup(2, 0.0, 2.0) == math.inf
    assert jeffreys().deriv_sup(2, 0.0, 2.0) == math.inf
    assert jensen_shannon().deriv_sup(2, 0.0, 2.0) == math.inf
    # harmonic and exp stay bounded as m -> 0
    assert harmonic().deriv_sup(2, 0.0, 2.0) == pytest.approx(12.0, rel=1e-12)
    assert exponential().deriv_sup(5, 0.0, 2.0) == pytest.approx(math.exp(2), rel=1e-15)
    # unbounded exponent range saturates instead of raising
    assert exponential().deriv_sup(2, 0.0, 1e5) == math.inf


def test_deriv_sup_validation():
    with pytest.raises(ValueError):
        kl().deriv_sup(0, 0.5, 2.0)
    with pytest.raises(ValueError):
        kl().deriv_sup(2, 1.5, 2.0)
    with pytest.raises(ValueError):
        kl().deriv_sup(2, 0.5, 0.9)


def test_conjugate_swaps_kl_and_rkl():
    conj = conjugate_coeffs(kl(), 15)
    want = [reverse_kl().coeff(i) for i in range(2, 16)]
    assert conj == want
    conj_back = conjugate_coeffs(reverse_kl(), 15)
    assert conj_back == [kl().coeff(i) for i in range(2, 16)]


@pytest.mark.parametrize("factory", [jeffreys, jensen_shannon, harmonic])
def test_symmetric_generators_are_self_conjugate(factory):
    gen = factory()
    assert conjugate_coeffs(gen, 14) == [gen.coeff(i) for i in range(2, 15)]


def test_conjugate_alpha_negates_alpha():
    conj = conjugate_coeffs(alpha_generator(3), 12)
    want = [alpha_generator(-3).coeff(i) for i in range(2, 13)]
    assert conj == want


def test_conjugate_generator_object():
    cg = conjugate_generator(kl(), 20)
    assert cg.name == "conj(kl)"
    assert cg.f_at_one == 0
    assert cg.fprime_at_one == kl().f_at_one - kl().fprime_at_one
    assert cg.coeff(5) == reverse_kl().coeff(5)
    with pytest.raises(ValueError):
        cg.coeff(21)
    # u f(1/u) pointwise
    for u in (0.5, 2.0):
        assert cg.eval(u) == pytest.approx(u * kl().eval(1 / u), rel=1e-15)
    assert cg.deriv_sup(3, 0.5, 2.0) == math.inf


def test_conjugation_is_an_involution():
    gen = jensen_shannon()
    twice = conjugate_coeffs(conjugate_generator(gen, 30), 12)
    assert twice == [gen.coeff(i) for i in range(2, 13)]


def test_conjugate_float_path():
    conj = conjugate_coeffs(exponential(), 10)
    f_star = lambda u: u * oracles.f_exponential(1 / u)
    coeffs = oracles.taylor_coeffs(f_star, 10)
    for i, c in enumerate(conj, start=2):
        assert isinstance(c, float)
        assert oracles.rel_err(c, coeffs[i]) < mp.mpf("1e-13")


def test_catalog_coeff_delegates_to_the_method():
    assert catalog_coeff(kl(), 2) == Fraction(1, 2)
    for name, factory in CATALOG.items():
        gen = factory()
        for i in (2, 5, 11):
            assert catalog_coeff(gen, i) == gen.coeff(i)


def test_catalog_coeff_rejects_bad_arguments():
    with pytest.raises(ValueError):
        catalog_coeff("kl", 2)
    with pytest.raises(ValueError):
        catalog_coeff(kl(), 1)
