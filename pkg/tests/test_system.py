"""Tests for system construction, profiling, generators, and closures."""

import random

import pytest

from diffelim.multipoly import Polynomial, VarSet
from diffelim.system import (
    DegreeProfile,
    OdeSystem,
    SystemValidationError,
    dalg_combine,
    degree_profile,
    random_dense_system,
)


def test_profile_of_linear_system(linear2):
    assert degree_profile(linear2) == DegreeProfile(n=2, r=0, d_x=1, D_x=1)


def test_profile_of_parametric_system(param_linear2):
    assert degree_profile(param_linear2) == DegreeProfile(
        n=2, r=2, d_x=1, D_x=1, d_mu=0, D_mu=1
    )


def test_profile_of_tan_tanh(tan_tanh):
    assert degree_profile(tan_tanh) == DegreeProfile(n=2, r=0, d_x=2, D_x=2)


def test_constant_observation_rejected():
    vs = VarSet(states=("x1",))
    g = Polynomial.variable(vs, "x1")
    with pytest.raises(SystemValidationError, match="d_x"):
        OdeSystem(vs, [g], Polynomial.constant(vs, 5))


def test_constant_dynamics_rejected():
    vs = VarSet(states=("x1",))
    with pytest.raises(SystemValidationError, match="D_x"):
        OdeSystem(vs, [Polynomial.constant(vs, 1)], Polynomial.variable(vs, "x1"))


def test_profile_validation():
    with pytest.raises(SystemValidationError):
        DegreeProfile(n=2, r=0, d_x=0, D_x=1)


def test_dense_generator_degrees_and_shape():
    sysm = random_dense_system(n=2, r=0, D_x=1, d_x=2, coeff_bound=100, seed=5)
    prof = degree_profile(sysm)
    assert (prof.D_x, prof.d_x, prof.r) == (1, 2, 0)
    # dense quadratic observation carries all six monomials generically
    assert len(sysm.output.terms) == 6
    assert all(len(g.terms) == 3 for g in sysm.rhs)


def test_dense_generator_parametric_shape():
    sysm = random_dense_system(n=2, r=1, D_x=1, d_x=2, D_mu=1, d_mu=0, coeff_bound=100, seed=5)
    prof = degree_profile(sysm)
    assert (prof.D_mu, prof.d_mu) == (1, 0)
    assert all(len(g.terms) == 6 for g in sysm.rhs)  # (1 + mu) x (1 + x1 + x2)
    assert sysm.output.degree_in("params") == 0


def test_dense_generator_deterministic():
    a = random_dense_system(n=2, r=1, D_x=2, d_x=1, D_mu=1, coeff_bound=50, seed=9)
    b = random_dense_system(n=2, r=1, D_x=2, d_x=1, D_mu=1, coeff_bound=50, seed=9)
    c = random_dense_system(n=2, r=1, D_x=2, d_x=1, D_mu=1, coeff_bound=50, seed=10)
    assert a == b
    assert a != c


def test_dense_generator_requested_degrees_attained():
    rng = random.Random(0)
    for _ in range(25):
        Dx, dx = rng.randint(1, 3), rng.randint(1, 3)
        Dmu, dmu = rng.randint(0, 2), rng.randint(0, 2)
        sysm = random_dense_system(
            n=2, r=1, D_x=Dx, d_x=dx, D_mu=Dmu, d_mu=dmu,
            coeff_bound=1000, seed=rng.randrange(10**6),
        )
        prof = degree_profile(sysm)
        assert (prof.D_x, prof.d_x, prof.D_mu, prof.d_mu) == (Dx, dx, Dmu, dmu)


def test_dense_generator_rejects_bad_degrees():
    with pytest.raises(SystemValidationError):
        random_dense_system(n=2, r=0, D_x=1, d_x=0)
    with pytest.raises(ValueError):
        random_dense_system(n=2, r=0, D_x=1, d_x=1, coeff_bound=0)


def _single_state(name, rhs_terms, out_exp):
    vs = VarSet(states=(name,))
    rhs = Polynomial(vs, rhs_terms)
    return OdeSystem(vs, [rhs], Polynomial(vs, {(out_exp,): 1}))


def test_product_combination_builds_tan_tanh(tan_tanh):
    a = _single_state("x1", {(0,): 1, (2,): 1}, 1)   # x1' = 1 + x1^2
    b = _single_state("x2", {(0,): 1, (2,): -1}, 1)  # x2' = 1 - x2^2
    combined = dalg_combine(a, b, "product")
    assert combined == tan_tanh


def test_sum_with_self_renames_states():
    a = _single_state("x1", {(0,): 1, (2,): 1}, 1)
    combined = dalg_combine(a, a, "sum")
    assert combined.varset.states == ("x1", "x1_2")
    first = Polynomial.variable(combined.varset, "x1")
    second = Polynomial.variable(combined.varset, "x1_2")
    assert combined.output == first + second
    assert combined.rhs[0] == 1 + first**2
    assert combined.rhs[1] == 1 + second**2


def test_product_degree_additivity():
    rng = random.Random(4)
    for _ in range(10):
        a = random_dense_system(n=1, r=0, D_x=2, d_x=rng.randint(1, 3),
                                coeff_bound=20, seed=rng.randrange(10**6))
        b = random_dense_system(n=2, r=0, D_x=1, d_x=rng.randint(1, 2),
                                coeff_bound=20, seed=rng.randrange(10**6))
        prod = dalg_combine(a, b, "product")
        assert prod.output.degree_in("states") == (
            a.output.degree_in("states") + b.output.degree_in("states")
        )
        # sum and difference land on the same stacked dynamics
        assert dalg_combine(a, b, "sum").rhs == prod.rhs


def test_param_collision_rejected():
    a = random_dense_system(n=1, r=1, D_x=1, d_x=1, D_mu=1, seed=1)
    b = random_dense_system(n=1, r=1, D_x=1, d_x=1, D_mu=1, seed=2)
    with pytest.raises(ValueError, match="collide"):
        dalg_combine(a, b, "sum")


def test_unknown_combination_rejected():
    a = _single_state("x1", {(0,): 1, (2,): 1}, 1)
    with pytest.raises(ValueError):
        dalg_combine(a, a, "quotient")
