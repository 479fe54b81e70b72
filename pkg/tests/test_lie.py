"""Tests for Lie derivatives, towers, and order estimation."""

import random

import pytest

from diffelim.exactfield import PrimeField
from diffelim.lie import estimate_order, lie_derivative, lie_tower
from diffelim.multipoly import Polynomial, VarSet
from diffelim.system import OdeSystem, degree_profile, random_dense_system


def test_linear_system_tower(linear2):
    vs = linear2.varset
    x1, x2 = (Polynomial.variable(vs, n) for n in vs.states)
    assert lie_derivative(linear2, x1 + x2) == 8 * x1 + 9 * x2
    assert lie_derivative(linear2, 8 * x1 + 9 * x2) == 71 * x1 + 73 * x2
    tower = lie_tower(linear2, 2)
    assert tower.entries == (x1 + x2, 8 * x1 + 9 * x2, 71 * x1 + 73 * x2)
    assert tower.depth == 2


def test_parametric_double_derivative(param_linear2):
    vs = param_linear2.varset
    mu1, mu2, x1, x2 = (Polynomial.variable(vs, n) for n in vs.names)
    first = lie_derivative(param_linear2, x1 + x2)
    assert first == mu1 * x2 + mu2 * x1
    second = lie_derivative(param_linear2, first)
    assert second == mu1 * mu2 * (x1 + x2)


def test_tower_depth_zero_is_output(linear2):
    assert lie_tower(linear2, 0).entries == (linear2.output,)
    with pytest.raises(ValueError):
        lie_tower(linear2, -1)


def test_tan_tanh_tower_degrees(tan_tanh):
    tower = lie_tower(tan_tanh, 2)
    degrees = [e.degree_in("states") for e in tower.entries]
    assert degrees[0] == 2
    assert degrees[1] <= 3 and degrees[2] <= 4


def test_varset_mismatch_rejected(linear2):
    other = Polynomial.variable(VarSet(states=("z",)), "z")
    with pytest.raises(ValueError):
        lie_derivative(linear2, other)


def test_estimate_order_linear(linear2):
    field = PrimeField(10007)
    assert estimate_order(linear2, field, trials=3, rng=random.Random(0)) == 2


def test_estimate_order_tan_tanh(tan_tanh):
    field = PrimeField(10007)
    assert estimate_order(tan_tanh, field, trials=3, rng=random.Random(0)) == 2


def test_estimate_order_degenerate_pair():
    # x1' = x1, x2' = x2, y = x1: the second tower row repeats the first.
    vs = VarSet(states=("x1", "x2"))
    x1 = Polynomial.variable(vs, "x1")
    x2 = Polynomial.variable(vs, "x2")
    sysm = OdeSystem(vs, [x1, x2], x1)
    field = PrimeField(10007)
    assert estimate_order(sysm, field, trials=5, rng=random.Random(1)) == 1


def test_estimate_order_never_exceeds_n():
    rng = random.Random(12)
    field = PrimeField((1 << 31) - 1)
    for _ in range(10):
        n = rng.randint(1, 3)
        sysm = random_dense_system(
            n=n, r=0, D_x=rng.randint(1, 2), d_x=rng.randint(1, 2),
            coeff_bound=50, seed=rng.randrange(10**6),
        )
        assert 1 <= estimate_order(sysm, field, trials=2, rng=rng) <= n


def test_lie_operator_linearity_and_leibniz():
    rng = random.Random(8)
    for _ in range(20):
        sysm = random_dense_system(
            n=2, r=1, D_x=2, d_x=2, D_mu=1, coeff_bound=30,
            seed=rng.randrange(10**6),
        )
        vs = sysm.varset

        def rand_poly():
            terms = {
                tuple(rng.randrange(3) for _ in vs.names): rng.randint(-9, 9)
                for _ in range(4)
            }
            return Polynomial(vs, terms)

        p, q = rand_poly(), rand_poly()
        a, b = rng.randint(-5, 5), rng.randint(-5, 5)
        assert lie_derivative(sysm, a * p + b * q) == (
            a * lie_derivative(sysm, p) + b * lie_derivative(sysm, q)
        )
        assert lie_derivative(sysm, p * q) == (
            p * lie_derivative(sysm, q) + q * lie_derivative(sysm, p)
        )


def test_tower_degree_bounds_hold_exactly():
    # deg_x L^i f <= d_x + i(D_x - 1) and deg_mu L^i f <= d_mu + i D_mu
    rng = random.Random(77)
    for _ in range(30):
        prof_args = dict(
            n=rng.randint(1, 3),
            r=rng.randint(0, 2),
            D_x=rng.randint(1, 3),
            d_x=rng.randint(1, 3),
        )
        if prof_args["r"]:
            prof_args["D_mu"] = rng.randint(0, 2)
            prof_args["d_mu"] = rng.randint(0, 2)
        sysm = random_dense_system(coeff_bound=100, seed=rng.randrange(10**6), **prof_args)
        prof = degree_profile(sysm)
        tower = lie_tower(sysm, prof.n)
        for i, entry in enumerate(tower.entries):
            assert entry.degree_in("states") <= prof.d_x + i * (prof.D_x - 1)
            assert entry.degree_in("params") <= prof.d_mu + i * prof.D_mu
