"""Polynomial dynamical systems x' = g(mu, x) with observation y = f(mu, x).

Also hosts the random dense generators used by the statistics harness and
the closure constructors that stack two systems to observe the sum,
difference, or product of their outputs.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Sequence

from .multipoly import Polynomial, VarSet


class SystemValidationError(ValueError):
    """The model violates the d_x >= 1, D_x >= 1 hypothesis of the support bound."""


class OdeSystem:
    """x' = g(mu, x), y = f(mu, x) with all polynomials over one VarSet.

    The observation must genuinely involve a state (d_x >= 1) and at least
    one right-hand side must be non-constant in the states (D_x >= 1);
    systems outside that class are rejected at construction.
    """

    __slots__ = ("varset", "rhs", "output")

    def __init__(self, varset: VarSet, rhs: Sequence[Polynomial], output: Polynomial):
        rhs = tuple(rhs)
        if varset.n < 1:
            raise SystemValidationError("at least one state variable is required")
        if len(rhs) != varset.n:
            raise SystemValidationError(
                f"{varset.n} states need {varset.n} derivative polynomials, got {len(rhs)}"
            )
        for p in (*rhs, output):
            if p.varset != varset:
                raise SystemValidationError("all polynomials must share the system VarSet")
            if p.domain is not None:
                raise SystemValidationError("systems are defined over Q")
        if output.degree_in("states") < 1:
            raise SystemValidationError(
                "the observation does not involve any state (d_x = 0); "
                "the support bound requires d_x >= 1"
            )
        if max(p.degree_in("states") for p in rhs) < 1:
            raise SystemValidationError(
                "every right-hand side is constant in the states (D_x = 0); "
                "the support bound requires D_x >= 1"
            )
        object.__setattr__(self, "varset", varset)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "output", output)

    def __setattr__(self, name, value):
        raise AttributeError("OdeSystem is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, OdeSystem)
            and other.varset == self.varset
            and other.rhs == self.rhs
            and other.output == self.output
        )

    def __repr__(self):
        return f"OdeSystem(states={self.varset.states}, params={self.varset.params})"


@dataclass(frozen=True)
class DegreeProfile:
    """Group degrees of a system: the data feeding the support bound."""

    n: int
    r: int
    d_x: int
    D_x: int
    d_mu: int = 0
    D_mu: int = 0

    def __post_init__(self):
        if self.d_x < 1 or self.D_x < 1:
            raise SystemValidationError("degree profile requires d_x >= 1 and D_x >= 1")
        if min(self.n, self.r, self.d_mu, self.D_mu) < 0:
            raise SystemValidationError("degree profile entries must be non-negative")


def degree_profile(sys: OdeSystem) -> DegreeProfile:
    """d_x = deg_x f, D_x = max_i deg_x g_i, and the parameter analogues."""
    return DegreeProfile(
        n=sys.varset.n,
        r=sys.varset.r,
        d_x=sys.output.degree_in("states"),
        D_x=max(p.degree_in("states") for p in sys.rhs),
        d_mu=sys.output.degree_in("params"),
        D_mu=max(p.degree_in("params") for p in sys.rhs),
    )


def _monomials_of_bidegree(varset: VarSet, d_mu: int, d_x: int):
    """All exponent tuples with |param part| <= d_mu and |state part| <= d_x."""
    r, n = varset.r, varset.n

    def block(width, limit):
        for total in range(limit + 1):
            for cuts in itertools.combinations(range(total + width - 1), width - 1):
                exps = []
                prev = -1
                for c in cuts:
                    exps.append(c - prev - 1)
                    prev = c
                exps.append(total + width - 2 - prev)
                yield tuple(exps)

    if r == 0:
        param_part = [()]
    else:
        param_part = list(block(r, d_mu))
    state_part = list(block(n, d_x))
    for a in param_part:
        for b in state_part:
            yield a + b


def _random_dense_poly(varset: VarSet, d_mu: int, d_x: int, coeff_bound: int, rng: random.Random) -> Polynomial:
    terms = {}
    for mono in _monomials_of_bidegree(varset, d_mu, d_x):
        terms[mono] = rng.randint(-coeff_bound, coeff_bound)
    return Polynomial(varset, terms)


def random_dense_system(
    n: int,
    r: int,
    D_x: int,
    d_x: int,
    D_mu: int = 0,
    d_mu: int = 0,
    coeff_bound: int = 1000,
    seed: int = 0,
    rng: random.Random | None = None,
) -> OdeSystem:
    """Random dense model: f of bidegree (d_mu, d_x), each g_i of (D_mu, D_x).

    Integer coefficients are uniform on [-coeff_bound, coeff_bound]; zeros
    are allowed, so the requested degrees are attained only generically
    (overwhelmingly likely for any usable bound).
    """
    if d_x < 1 or D_x < 1:
        raise SystemValidationError("dense generation requires d_x >= 1 and D_x >= 1")
    if coeff_bound < 1:
        raise ValueError("coeff_bound must be at least 1")
    if rng is None:
        rng = random.Random(seed)
    varset = VarSet(
        params=tuple(f"mu{i + 1}" for i in range(r)),
        states=tuple(f"x{i + 1}" for i in range(n)),
    )
    rhs = [_random_dense_poly(varset, D_mu, D_x, coeff_bound, rng) for _ in range(n)]
    output = _random_dense_poly(varset, d_mu, d_x, coeff_bound, rng)
    return OdeSystem(varset, rhs, output)


def _fresh_name(base: str, taken: set[str]) -> str:
    if base not in taken:
        return base
    for k in itertools.count(2):
        candidate = f"{base}_{k}"
        if candidate not in taken:
            return candidate
    raise AssertionError("unreachable")


def _transplant(p: Polynomial, old: VarSet, new: VarSet, rename: dict[str, str]) -> Polynomial:
    terms = {}
    width = len(new)
    for mono, coeff in p.terms.items():
        exp = [0] * width
        for i, e in enumerate(mono):
            if e:
                exp[new.index(rename[old.names[i]])] = e
        terms[tuple(exp)] = coeff
    return Polynomial(new, terms)


def dalg_combine(a: OdeSystem, b: OdeSystem, op: str) -> OdeSystem:
    """Stack two systems and observe the sum/difference/product of their outputs.

    States of ``b`` are renamed away from collisions; parameter names must
    already be disjoint (shared parameters would silently tie the models
    together).
    """
    if op not in ("sum", "difference", "product"):
        raise ValueError(f"unsupported combination {op!r}")
    shared_params = set(a.varset.params) & set(b.varset.params)
    if shared_params:
        raise ValueError(f"parameter names collide: {sorted(shared_params)}")

    taken = set(a.varset.names)
    rename = {}
    for name in b.varset.params:
        rename[name] = name
        taken.add(name)
    for name in b.varset.states:
        fresh = _fresh_name(name, taken)
        rename[name] = fresh
        taken.add(fresh)

    merged = VarSet(
        params=a.varset.params + b.varset.params,
        states=a.varset.states + tuple(rename[s] for s in b.varset.states),
    )
    ident = {name: name for name in a.varset.names}
    rhs = [_transplant(p, a.varset, merged, ident) for p in a.rhs]
    rhs += [_transplant(p, b.varset, merged, rename) for p in b.rhs]
    fa = _transplant(a.output, a.varset, merged, ident)
    fb = _transplant(b.output, b.varset, merged, rename)
    if op == "sum":
        output = fa + fb
    elif op == "difference":
        output = fa - fb
    else:
        output = fa * fb
    return OdeSystem(merged, rhs, output)
