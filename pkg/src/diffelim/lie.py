"""Lie derivatives along the system vector field and order estimation.

Over Q with the zero derivation the coefficient-derivative term of the Lie
operator vanishes identically; the operator here keeps only the
transport part sum_i g_i * d/dx_i.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .exactfield import PrimeField
from .multipoly import Polynomial
from .system import OdeSystem


def lie_derivative(sys: OdeSystem, p: Polynomial) -> Polynomial:
    """sum_i g_i * dp/dx_i (+ coefficient derivation, identically zero over Q)."""
    if p.varset != sys.varset:
        raise ValueError("polynomial is not over the system's VarSet")
    result = Polynomial.zero(sys.varset, p.domain)
    for name, g in zip(sys.varset.states, sys.rhs):
        dp = p.partial(name)
        if not dp.is_zero():
            result = result + g * dp
    return result


@dataclass(frozen=True)
class LieTower:
    """Iterated Lie derivatives [f, Lf, ..., L^depth f] of the observation."""

    system: OdeSystem
    entries: tuple[Polynomial, ...]

    @property
    def depth(self) -> int:
        return len(self.entries) - 1


def lie_tower(sys: OdeSystem, depth: int) -> LieTower:
    if depth < 0:
        raise ValueError("tower depth must be non-negative")
    entries = [sys.output]
    for _ in range(depth):
        entries.append(lie_derivative(sys, entries[-1]))
    return LieTower(sys, tuple(entries))


def _rank_mod_p(rows: list[list[int]], p: int) -> int:
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = None
        for i in range(rank, len(rows)):
            if rows[i][col] % p:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        rows[rank] = [v * inv % p for v in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] % p:
                f = rows[i][col]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def estimate_order(
    sys: OdeSystem,
    field: PrimeField,
    trials: int = 3,
    rng: random.Random | None = None,
) -> int:
    """Probable order of the minimal equation: generic rank of the tower Jacobian.

    Evaluates the n x n matrix (d L^(i-1) f / d x_j) at random field points
    (parameters are sampled alongside the states, realizing the rank over
    the parametric function field generically) and returns the maximum rank
    over the trials. Never exceeds n; an underestimate is caught downstream
    by verification plus the order-escalation fallback.
    """
    if trials < 1:
        raise ValueError("at least one trial is required")
    if rng is None:
        rng = random.Random(0)
    n = sys.varset.n
    tower = lie_tower(sys, n - 1)
    jacobian = [
        [entry.partial(name) for name in sys.varset.states] for entry in tower.entries
    ]
    jac_mod = [[q.reduce_mod(field) for q in row] for row in jacobian]
    best = 0
    for _ in range(trials):
        values = field.sample(rng, len(sys.varset))
        point = dict(zip(sys.varset.names, values))
        rows = [[q.eval(point) for q in row] for row in jac_mod]
        best = max(best, _rank_mod_p(rows, field.modulus))
        if best == n:
            break
    return best
