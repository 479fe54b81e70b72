"""Tests for the sparse polynomial layer."""

import random
from fractions import Fraction

import pytest

from diffelim.exactfield import BadPrimeError, PrimeField
from diffelim.multipoly import Polynomial, VarSet

XY = VarSet(states=("x1", "x2"))
PXY = VarSet(params=("mu1",), states=("x1", "x2"))


def poly(varset, terms):
    return Polynomial(varset, terms)


def x(i, varset=XY):
    return Polynomial.variable(varset, f"x{i}")


def test_varset_basics():
    assert PXY.r == 1 and PXY.n == 2
    assert PXY.names == ("mu1", "x1", "x2")
    assert PXY.index("x2") == 2
    with pytest.raises(KeyError):
        PXY.index("zz")
    with pytest.raises(ValueError):
        VarSet(params=("a",), states=("a",))


def test_zero_terms_dropped():
    p = poly(XY, {(1, 0): 0, (0, 1): 3})
    assert p.terms == {(0, 1): 3}
    assert Polynomial.zero(XY).is_zero()


def test_product_of_sum_and_difference():
    p = (x(1) + x(2)) * (x(1) - x(2))
    assert p == x(1) ** 2 - x(2) ** 2


def test_additive_identity():
    p = x(1) * 7 - x(2)
    assert p + Polynomial.zero(XY) == p
    assert p + 0 == p


def test_hand_expanded_combination():
    # 7*(x1 + 8*x2) - 8*(7*x1 + x2) expands to -49*x1 + 48*x2
    p = (x(1) + 8 * x(2)) * 7 + (7 * x(1) + x(2)) * (-8)
    assert p == -49 * x(1) + 48 * x(2)


def test_partial_derivatives():
    assert (x(1) ** 2 * x(2)).partial("x1") == 2 * x(1) * x(2)
    mu_x2 = Polynomial.variable(PXY, "mu1") * Polynomial.variable(PXY, "x2")
    assert mu_x2.partial("x1").is_zero()
    assert (x(1) + x(2)).partial("x2") == Polynomial.constant(XY, 1)
    with pytest.raises(KeyError):
        x(1).partial("nope")


def test_eval_linear_forms():
    f = PrimeField(10007)
    p = (x(1) + x(2)).reduce_mod(f)
    assert p.eval({"x1": 1, "x2": 2}) == 3
    q = (8 * x(1) + 9 * x(2)).reduce_mod(f)
    assert q.eval({"x1": 1, "x2": 2}) == 26


def test_eval_at_zero_gives_constant_term():
    f = PrimeField(10007)
    rng = random.Random(2)
    for _ in range(20):
        terms = {
            (rng.randrange(3), rng.randrange(3)): rng.randint(-50, 50)
            for _ in range(5)
        }
        p = poly(XY, terms).reduce_mod(f)
        assert p.eval({"x1": 0, "x2": 0}) == terms.get((0, 0), 0) % 10007


def test_eval_requires_assignment():
    f = PrimeField(10007)
    p = (x(1) + x(2)).reduce_mod(f)
    with pytest.raises(KeyError):
        p.eval({"x1": 1})


def test_degree_in_groups():
    # observation of a quadratic instance: degree 2 in the states
    obs = poly(
        XY,
        {(2, 0): 31, (1, 1): -34, (1, 0): 60, (0, 2): -74, (0, 1): 96, (0, 0): 58},
    )
    assert obs.degree_in("states") == 2
    # dynamics linear in the single parameter
    dyn = poly(
        PXY,
        {(1, 1, 0): 37, (0, 1, 0): -9, (1, 0, 1): -28, (0, 0, 1): 52, (1, 0, 0): 73, (0, 0, 0): -46},
    )
    assert dyn.degree_in("params") == 1
    assert dyn.degree_in("states") == 1
    assert Polynomial.constant(XY, 5).degree_in("states") == 0
    assert Polynomial.zero(XY).degree_in("params") == 0


def test_reduce_mod():
    f7 = PrimeField(7)
    p = x(1) - 55
    assert p.reduce_mod(f7) == Polynomial(XY, {(1, 0): 1, (0, 0): 1}, f7)
    assert Polynomial.zero(XY).reduce_mod(f7).is_zero()
    f = PrimeField(10007)
    half_x = Polynomial(XY, {(1, 0): Fraction(1, 2)})
    assert half_x.reduce_mod(f) == Polynomial(XY, {(1, 0): 5004}, f)
    bad = Polynomial(XY, {(1, 0): Fraction(1, 7)})
    with pytest.raises(BadPrimeError):
        bad.reduce_mod(f7)


def _random_poly(rng, varset=XY, deg=3, nterms=6):
    terms = {}
    for _ in range(nterms):
        mono = tuple(rng.randrange(deg) for _ in varset.names)
        terms[mono] = rng.randint(-20, 20)
    return Polynomial(varset, terms)


def test_ring_axioms_randomized():
    rng = random.Random(31)
    for _ in range(60):
        p, q, s = (_random_poly(rng) for _ in range(3))
        assert (p + q) * s == p * s + q * s
        assert (p * q) * s == p * (q * s)
        assert p + q == q + p
        if not p.is_zero() and not q.is_zero():
            assert (p * q).total_degree() == p.total_degree() + q.total_degree()


def test_eval_is_ring_homomorphism():
    rng = random.Random(17)
    f = PrimeField(10007)
    for _ in range(40):
        p, q = _random_poly(rng), _random_poly(rng)
        point = {"x1": rng.randrange(10007), "x2": rng.randrange(10007)}
        pm, qm = p.reduce_mod(f), q.reduce_mod(f)
        assert (pm * qm).eval(point) == pm.eval(point) * qm.eval(point) % 10007
        assert (pm + qm).eval(point) == (pm.eval(point) + qm.eval(point)) % 10007


def test_partial_satisfies_leibniz():
    rng = random.Random(23)
    for _ in range(40):
        p, q = _random_poly(rng), _random_poly(rng)
        for v in ("x1", "x2"):
            lhs = (p * q).partial(v)
            rhs = p * q.partial(v) + q * p.partial(v)
            assert lhs == rhs


def test_mismatched_operands_rejected():
    other = VarSet(states=("z",))
    with pytest.raises(ValueError):
        x(1) + Polynomial.variable(other, "z")
    f = PrimeField(10007)
    with pytest.raises(ValueError):
        x(1) + x(2).reduce_mod(f)
