"""The candidate-monomial polytope: weights, enumeration, and the ansatz order.

A candidate monomial for the minimal equation is a pair (l, e): parameter
exponents l (length r) and derivative exponents e (length nu+1) standing
for mu^l * y^e0 (y')^e1 ... (y^(nu))^e_nu. The admissible set is cut out by
three weighted inequalities; weights grow linearly with the derivative
index, with slopes driven by the system's group degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .system import DegreeProfile


class OutMonomial(NamedTuple):
    """Exponents (l, e) of one candidate monomial mu^l * prod_i (y^(i))^e_i."""

    l: tuple[int, ...]
    e: tuple[int, ...]


@dataclass(frozen=True)
class BoundSpec:
    """Weights and right-hand sides of the three support inequalities."""

    nu: int
    r: int
    w_x: tuple[int, ...]
    w_mu: tuple[int, ...]
    rhs_multi: int
    rhs_global: int
    rhs_y: int


def bound_spec(profile: DegreeProfile, nu: int) -> BoundSpec:
    """Instantiate the inequality system for a degree profile and order nu."""
    if nu < 0:
        raise ValueError("nu must be non-negative")
    w_x = tuple(profile.d_x + i * (profile.D_x - 1) for i in range(nu + 1))
    w_mu = tuple(profile.d_mu + i * profile.D_mu for i in range(nu + 1))
    rhs_y = math.prod(w_x)
    rhs_multi = sum(
        w_mu[i] * math.prod(w_x[j] for j in range(nu + 1) if j != i)
        for i in range(nu + 1)
    )
    rhs_global = math.prod(wx + wm for wx, wm in zip(w_x, w_mu))
    return BoundSpec(
        nu=nu,
        r=profile.r,
        w_x=w_x,
        w_mu=w_mu,
        rhs_multi=rhs_multi,
        rhs_global=rhs_global,
        rhs_y=rhs_y,
    )


def satisfies(spec: BoundSpec, mono: OutMonomial) -> bool:
    """Direct check of the three inequalities (the brute-force oracle uses this)."""
    lsum = sum(mono.l)
    sx = sum(w * e for w, e in zip(spec.w_x, mono.e))
    smu = sum(w * e for w, e in zip(spec.w_mu, mono.e))
    if spec.r == 0:
        return sx <= spec.rhs_y
    return (
        lsum + smu <= spec.rhs_multi
        and lsum + sx <= spec.rhs_global
        and sx <= spec.rhs_y
    )


def ansatz_key(mono: OutMonomial):
    """Prefix-search order: total derivative degree, then parameter degree,
    then lexicographic on (e_nu, ..., e_0, l)."""
    return (sum(mono.e), sum(mono.l), tuple(reversed(mono.e)) + mono.l)


def leading_key(mono: OutMonomial):
    """Normalization order: lexicographic on (e_nu, ..., e_0, l).

    The maximum under this key is the monomial whose coefficient is pinned
    to 1 in the reported minimal equation (the highest-derivative corner of
    the support).
    """
    return tuple(reversed(mono.e)) + mono.l


def _iter_e(spec: BoundSpec):
    """Derivative exponent vectors satisfying all inequalities at l = 0,
    together with the remaining budgets for |l|.

    With no parameters only the pure derivative inequality applies, so the
    parameter-weighted cap is skipped there.
    """
    nu = spec.nu
    parametric = spec.r > 0

    def rec(i, e, used_x, used_mu):
        if i > nu:
            yield tuple(e), spec.rhs_multi - used_mu, spec.rhs_global - used_x
            return
        wx, wmu = spec.w_x[i], spec.w_mu[i]
        cap = (spec.rhs_y - used_x) // wx
        if parametric and wmu > 0:
            cap = min(cap, (spec.rhs_multi - used_mu) // wmu)
        for v in range(cap + 1):
            e.append(v)
            yield from rec(i + 1, e, used_x + v * wx, used_mu + v * wmu)
            e.pop()

    yield from rec(0, [], 0, 0)


def _iter_l(r: int, budget: int):
    def rec(i, l, left):
        if i == r:
            yield tuple(l)
            return
        for v in range(left + 1):
            l.append(v)
            yield from rec(i + 1, l, left - v)
            l.pop()

    yield from rec(0, [], budget)


def enumerate_support(spec: BoundSpec) -> list[OutMonomial]:
    """All admissible (l, e), sorted by the ansatz order."""
    out = []
    for e, mu_left, global_left in _iter_e(spec):
        budget = min(mu_left, global_left)
        if spec.r == 0:
            out.append(OutMonomial((), e))
        else:
            for l in _iter_l(spec.r, budget):
                out.append(OutMonomial(l, e))
    out.sort(key=ansatz_key)
    return out


def support_count(spec: BoundSpec) -> int:
    """Cardinality of the support without materializing the parameter block.

    For each derivative vector e the admissible l form a simplex
    |l| <= budget, contributing C(budget + r, r) points.
    """
    total = 0
    r = spec.r
    for _e, mu_left, global_left in _iter_e(spec):
        budget = min(mu_left, global_left)
        total += math.comb(budget + r, r)
    return total


class UnsupportedDimensionError(ValueError):
    """Lattice-point counting is limited to ambient dimension six."""


def _phase1_feasible(points: list[tuple[int, ...]], target: Sequence[int]) -> bool:
    """Exact membership of target in conv(points) via phase-1 simplex.

    Variables are the convex weights; Bland's rule guarantees termination.
    All arithmetic is over Fraction, so the answer is exact.
    """
    m = len(points)
    dim = len(target)
    nrows = dim + 1
    # Constraint rows: sum_i lambda_i * p_i = target, sum_i lambda_i = 1.
    rows = []
    for k in range(dim):
        rows.append([Fraction(p[k]) for p in points] + [Fraction(target[k])])
    rows.append([Fraction(1)] * m + [Fraction(1)])
    for row in rows:
        if row[-1] < 0:
            for j in range(len(row)):
                row[j] = -row[j]
    # Append the artificial identity block.
    for i, row in enumerate(rows):
        rhs = row.pop()
        row.extend(Fraction(1) if j == i else Fraction(0) for j in range(nrows))
        row.append(rhs)
    ncols = m + nrows
    basis = list(range(m, ncols))
    # Phase-1 objective: minimize the artificial sum; its tableau row is the
    # negated column-sum of the constraint rows over the decision columns.
    obj = [Fraction(0)] * (ncols + 1)
    for row in rows:
        for j in range(ncols + 1):
            obj[j] += row[j]
    for j, b in enumerate(basis):
        obj[b] = Fraction(0)

    while True:
        enter = None
        for j in range(ncols):
            if obj[j] > 0 and j not in basis:
                enter = j
                break
        if enter is None:
            break
        leave_row = None
        best = None
        for i, row in enumerate(rows):
            if row[enter] > 0:
                ratio = row[-1] / row[enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave_row]):
                    best = ratio
                    leave_row = i
        if leave_row is None:
            raise ArithmeticError("phase-1 objective unbounded; inconsistent tableau")
        piv = rows[leave_row][enter]
        rows[leave_row] = [v / piv for v in rows[leave_row]]
        for i, row in enumerate(rows):
            if i != leave_row and row[enter]:
                f = row[enter]
                rows[i] = [a - f * b for a, b in zip(row, rows[leave_row])]
        if obj[enter]:
            f = obj[enter]
            obj = [a - f * b for a, b in zip(obj, rows[leave_row])]
        basis[leave_row] = enter
    return obj[-1] == 0


def hull_lattice_count(points: Iterable[OutMonomial]) -> int:
    """Number of integer points in the convex hull of the given exponents.

    Diagnostic only (mirrors the lattice-point column of the experiment
    tables); elimination never calls it. Ambient dimension r + nu + 1 is
    capped at 6.
    """
    vectors = sorted({tuple(p.l) + tuple(p.e) for p in points})
    if not vectors:
        return 0
    dim = len(vectors[0])
    if any(len(v) != dim for v in vectors):
        raise ValueError("points live in different ambient dimensions")
    if dim > 6:
        raise UnsupportedDimensionError(
            f"ambient dimension {dim} exceeds the supported limit of 6"
        )
    known = set(vectors)
    lo = [min(v[k] for v in vectors) for k in range(dim)]
    hi = [max(v[k] for v in vectors) for k in range(dim)]

    def boxes(k):
        if k == dim:
            yield ()
            return
        for rest in boxes(k + 1):
            for val in range(lo[k], hi[k] + 1):
                yield (val,) + rest

    count = 0
    for candidate in boxes(0):
        if candidate in known or _phase1_feasible(vectors, candidate):
            count += 1
    return count
