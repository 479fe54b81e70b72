"""Independent correctness oracles for a candidate minimal equation.

Three routes with different cost/assurance trade-offs: exact symbolic
substitution of the Lie tower (expensive but definitive), random point
checks over a prime field, and a truncated power-series solution check
that never touches the Lie tower and therefore cross-checks it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .exactfield import PrimeField
from .lie import lie_tower
from .multipoly import Polynomial
from .system import OdeSystem


def _candidate_order(sys: OdeSystem, cand: Polynomial) -> int:
    if cand.varset.params != sys.varset.params:
        raise ValueError("candidate parameters do not match the system")
    nu = len(cand.varset.states) - 1
    if nu < 0:
        raise ValueError("candidate involves no derivative variables")
    return nu


def substitute_tower(sys: OdeSystem, cand: Polynomial) -> Polynomial:
    """Replace each y^(i) by L^i f and expand exactly over Q."""
    nu = _candidate_order(sys, cand)
    tower = lie_tower(sys, nu).entries
    r = sys.varset.r
    n = sys.varset.n
    powcache: dict[tuple[int, int], Polynomial] = {}

    def tower_power(i: int, e: int) -> Polynomial:
        key = (i, e)
        got = powcache.get(key)
        if got is None:
            got = tower[i] ** e
            powcache[key] = got
        return got

    result = Polynomial.zero(sys.varset)
    for mono, coeff in cand.terms.items():
        l, e = mono[:r], mono[r:]
        term = Polynomial(sys.varset, {l + (0,) * n: coeff})
        for i, ei in enumerate(e):
            if ei:
                term = term * tower_power(i, ei)
        result = result + term
    return result


def verify_symbolic(sys: OdeSystem, cand: Polynomial) -> bool:
    """True iff the substituted candidate is the zero polynomial of Q[mu, x]."""
    nu = _candidate_order(sys, cand)
    if nu > sys.varset.n:
        raise ValueError(
            f"candidate order {nu} exceeds the state dimension {sys.varset.n}"
        )
    return substitute_tower(sys, cand).is_zero()


def verify_probabilistic(
    sys: OdeSystem,
    cand: Polynomial,
    field: PrimeField,
    trials: int = 20,
    rng: random.Random | None = None,
) -> bool:
    """Schwartz-Zippel surrogate: the substituted polynomial vanishes at
    random field points."""
    if trials < 1:
        raise ValueError("at least one trial is required")
    if rng is None:
        rng = random.Random(0)
    nu = _candidate_order(sys, cand)
    tower = [entry.reduce_mod(field) for entry in lie_tower(sys, nu).entries]
    cand_mod = cand.reduce_mod(field)
    names = sys.varset.names
    for _ in range(trials):
        values = field.sample(rng, len(names))
        point = dict(zip(names, values))
        tower_vals = [entry.eval(point) for entry in tower]
        cand_point = {name: point[name] for name in sys.varset.params}
        cand_point.update(
            (state, tower_vals[i]) for i, state in enumerate(cand.varset.states)
        )
        if cand_mod.eval(cand_point) != 0:
            return False
    return True


# -- truncated power series --------------------------------------------------


@dataclass(frozen=True)
class SeriesVector:
    """Per-state truncated power series solution around t = 0."""

    entries: tuple[tuple[int, ...], ...]
    field: PrimeField
    order: int  # coefficients are valid through t^order


def _series_mul(a, b, p, trunc):
    out = [0] * trunc
    for i, ai in enumerate(a[:trunc]):
        if ai:
            top = min(trunc - i, len(b))
            for j in range(top):
                bj = b[j]
                if bj:
                    out[i + j] = (out[i + j] + ai * bj) % p
    return out


def _eval_poly_series(poly, param_vals, state_series, trunc, p):
    """Evaluate a polynomial at scalar parameters and power-series states."""
    r = poly.varset.r
    powcache: dict[tuple[int, int], list[int]] = {}

    def series_power(i, e):
        key = (i, e)
        got = powcache.get(key)
        if got is None:
            if e == 1:
                got = list(state_series[i][:trunc])
            else:
                half = series_power(i, e // 2)
                got = _series_mul(half, half, p, trunc)
                if e % 2:
                    got = _series_mul(got, state_series[i], p, trunc)
            powcache[key] = got
        return got

    total = [0] * trunc
    for mono, coeff in poly.terms.items():
        scalar = coeff % p
        for t in range(r):
            if mono[t]:
                scalar = scalar * pow(param_vals[t], mono[t], p) % p
        if scalar == 0:
            continue
        term = None
        for i, e in enumerate(mono[r:]):
            if e:
                sp = series_power(i, e)
                term = sp if term is None else _series_mul(term, sp, p, trunc)
        if term is None:
            total[0] = (total[0] + scalar) % p
        else:
            for k in range(trunc):
                if term[k]:
                    total[k] = (total[k] + scalar * term[k]) % p
    return total


def series_solution(
    sys: OdeSystem,
    init: tuple[int, ...],
    params: tuple[int, ...],
    T: int,
    field: PrimeField,
) -> SeriesVector:
    """Unique truncated solution with x(0) = init, built degree by degree.

    The recurrence divides by k + 1, so the field characteristic must
    exceed T.
    """
    if T < 1:
        raise ValueError("series order must be at least 1")
    p = field.modulus
    if p <= T:
        raise ValueError(f"field characteristic {p} must exceed the order {T}")
    if len(init) != sys.varset.n or len(params) != sys.varset.r:
        raise ValueError("initial condition or parameter vector has wrong length")
    rhs_mod = [g.reduce_mod(field) for g in sys.rhs]
    series = [[v % p] + [0] * T for v in init]
    for k in range(T):
        for i, g in enumerate(rhs_mod):
            gk = _eval_poly_series(g, params, series, k + 1, p)[k]
            series[i][k + 1] = gk * pow(k + 1, -1, p) % p
    return SeriesVector(tuple(tuple(s) for s in series), field, T)


def _series_derivative(a, p):
    return [(j + 1) * a[j + 1] % p for j in range(len(a) - 1)]


def verify_series(
    sys: OdeSystem,
    cand: Polynomial,
    T: int,
    field: PrimeField,
    trials: int = 3,
    rng: random.Random | None = None,
) -> bool:
    """Check the candidate against truncated series solutions of the ODE.

    Fully independent of the Lie tower: solves the system as power series
    from random initial conditions, forms y = f(x(t)), differentiates the
    series formally, and demands that the candidate's residual vanishes
    through order T - nu in every trial.
    """
    if trials < 1:
        raise ValueError("at least one trial is required")
    nu = _candidate_order(sys, cand)
    if T < nu + 2:
        raise ValueError(f"series order {T} must be at least nu + 2 = {nu + 2}")
    if rng is None:
        rng = random.Random(0)
    p = field.modulus
    f_mod = sys.output.reduce_mod(field)
    cand_mod = cand.reduce_mod(field)
    for _ in range(trials):
        init = tuple(field.sample(rng, sys.varset.n))
        params = tuple(field.sample(rng, sys.varset.r))
        sol = series_solution(sys, init, params, T, field)
        y_series = _eval_poly_series(f_mod, params, [list(s) for s in sol.entries], T + 1, p)
        derivs = [y_series]
        for _ in range(nu):
            derivs.append(_series_derivative(derivs[-1], p))
        trunc = T + 1 - nu
        residual = _eval_poly_series(cand_mod, params, derivs, trunc, p)
        if any(residual):
            return False
    return True
