"""Evaluation-interpolation engine for the minimal differential equation.

Pipeline per system: estimate the order, enumerate the candidate-monomial
support, evaluate the Lie tower at random field points to build linear
constraints, locate the first prefix of the ansatz order carrying a kernel
vector, lift the kernel across primes by CRT + rational reconstruction,
and hand the candidate to the verification oracles.

Linear algebra runs per prime. Moduli below 2^31 use vectorized numpy
row operations (products of two residues stay inside int64); larger moduli
fall back to plain Python integers. Both backends implement the same
left-to-right Gauss-Jordan sweep that stops at the first dependent column.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactfield import (
    BadPrimeError,
    PrimeField,
    crt_combine,
    derived_rng,
    random_prime,
    rational_reconstruct,
)
from .lie import LieTower, estimate_order, lie_tower
from .multipoly import Polynomial, VarSet
from .support import OutMonomial, bound_spec, enumerate_support, leading_key
from .system import OdeSystem, degree_profile

_NUMPY_MODULUS_LIMIT = 1 << 31


class BoundExceededError(RuntimeError):
    """No relation was found inside the full candidate support."""


class SupportTooLargeError(RuntimeError):
    """The candidate support exceeds the configured unknown cap."""


class LiftFailedError(RuntimeError):
    """Rational reconstruction did not stabilize within the prime budget."""


class VerificationFailedError(RuntimeError):
    """All primes were spent and the candidate still fails verification."""


@dataclass(frozen=True)
class SolveOptions:
    order: int | None = None
    prime_bits: int = 62
    max_primes: int = 8
    margin: int = 10
    seed: int = 0
    verify_mode: str = "prob"  # off | prob | symbolic | series
    verify_trials: int = 20
    series_terms: int | None = None
    unknown_cap: int = 5000
    order_trials: int = 3
    initial_window: int = 64


@dataclass(frozen=True)
class SolveStats:
    bound_count: int
    term_count: int
    prefix_length: int
    primes_used: int
    sample_points_used: int


@dataclass(frozen=True)
class EliminationResult:
    nu: int
    f_min: Polynomial
    stats: SolveStats
    primes: tuple[int, ...]
    seed: int
    timings_ms: dict[str, float] = dataclass_field(default_factory=dict)

    @property
    def support(self) -> tuple[OutMonomial, ...]:
        r = self.f_min.varset.r
        return tuple(
            OutMonomial(mono[:r], mono[r:]) for mono in sorted(self.f_min.terms)
        )


def evaluation_row(
    tower_values: Sequence[int],
    param_values: Sequence[int],
    monomials: Sequence[OutMonomial],
    field: PrimeField,
) -> list[int]:
    """One constraint row: the value of every candidate monomial at a point."""
    p = field.modulus
    row = []
    for l, e in monomials:
        v = 1
        for t, lt in enumerate(l):
            if lt:
                v = v * pow(param_values[t], lt, p) % p
        for i, ei in enumerate(e):
            if ei:
                v = v * pow(tower_values[i], ei, p) % p
        row.append(v)
    return row


# -- matrix construction ---------------------------------------------------


def _sample_points(field: PrimeField, rng, count: int, width: int) -> list[list[int]]:
    return [field.sample(rng, width) for _ in range(count)]


def _eval_poly_at_points_py(poly: Polynomial, points: list[list[int]], p: int) -> list[int]:
    out = []
    for pt in points:
        total = 0
        for mono, coeff in poly.terms.items():
            v = coeff
            for idx, exp in enumerate(mono):
                if exp:
                    v = v * pow(pt[idx], exp, p) % p
            total = (total + v) % p
        out.append(total)
    return out


def _build_matrix_py(
    tower_mod: Sequence[Polynomial],
    monomials: Sequence[OutMonomial],
    points: list[list[int]],
    r: int,
    field: PrimeField,
) -> list[list[int]]:
    tvals = [_eval_poly_at_points_py(entry, points, field.modulus) for entry in tower_mod]
    rows = []
    for idx, pt in enumerate(points):
        tower_values = [tv[idx] for tv in tvals]
        rows.append(evaluation_row(tower_values, pt[:r], monomials, field))
    return rows


def _eval_poly_at_points_np(poly: Polynomial, pts: np.ndarray, p: int) -> np.ndarray:
    m = pts.shape[0]
    powcache: dict[int, list[np.ndarray]] = {}

    def power(idx: int, exp: int) -> np.ndarray:
        tab = powcache.setdefault(idx, [np.ones(m, dtype=np.int64)])
        while len(tab) <= exp:
            tab.append(tab[-1] * pts[:, idx] % p)
        return tab[exp]

    total = np.zeros(m, dtype=np.int64)
    for mono, coeff in poly.terms.items():
        v = np.full(m, coeff, dtype=np.int64)
        for idx, exp in enumerate(mono):
            if exp:
                v = v * power(idx, exp) % p
        total = (total + v) % p
    return total


def _build_matrix_np(
    tower_mod: Sequence[Polynomial],
    monomials: Sequence[OutMonomial],
    points: list[list[int]],
    r: int,
    field: PrimeField,
) -> np.ndarray:
    p = field.modulus
    pts = np.array(points, dtype=np.int64)
    m = pts.shape[0]
    tvals = [_eval_poly_at_points_np(entry, pts, p) for entry in tower_mod]

    ppow: list[list[np.ndarray]] = [[np.ones(m, dtype=np.int64)] for _ in range(r)]
    tpow: list[list[np.ndarray]] = [[np.ones(m, dtype=np.int64)] for _ in tvals]

    def power(table, base, exp):
        while len(table) <= exp:
            table.append(table[-1] * base % p)
        return table[exp]

    A = np.empty((m, len(monomials)), dtype=np.int64)
    for idx, (l, e) in enumerate(monomials):
        col = None
        for t, lt in enumerate(l):
            if lt:
                v = power(ppow[t], pts[:, t], lt)
                col = v if col is None else col * v % p
        for i, ei in enumerate(e):
            if ei:
                v = power(tpow[i], tvals[i], ei)
                col = v if col is None else col * v % p
        A[:, idx] = 1 if col is None else col
    return A


# -- first-dependent-column elimination -------------------------------------

_BLAS_MODULUS_LIMIT = 1 << 26
_BLAS_MIN_COLUMNS = 600
_BLAS_BLOCK = 128
_LIMB = 8192.0  # 2^13; splitting one matmul operand keeps products < 2^53


def _matmul_mod(X: np.ndarray, Y: np.ndarray, p: int) -> np.ndarray:
    """Exact (X @ Y) mod p on int64 matrices with entries in [0, p), p < 2^26.

    The left operand splits into 13-bit limbs and the products run as
    float64 dgemm, where every accumulated value stays below 2^53 and is
    therefore exact; everything elementwise stays in int64, whose modulo
    is far cheaper than float fmod.
    """
    Yf = Y.astype(np.float64)
    hi = (X >> 13).astype(np.float64)
    lo = (X & 8191).astype(np.float64)
    hiY = (hi @ Yf).astype(np.int64) % p
    loY = (lo @ Yf).astype(np.int64)
    return ((hiY << 13) + loY) % p


def _invert_mod_np(B: np.ndarray, p: int) -> np.ndarray | None:
    """Inverse of an int64 matrix mod p (p < 2^31), or None if singular."""
    n = B.shape[0]
    M = np.concatenate([B % p, np.eye(n, dtype=np.int64)], axis=1)
    for c in range(n):
        nz = np.nonzero(M[c:, c])[0]
        if nz.size == 0:
            return None
        pr = c + int(nz[0])
        if pr != c:
            M[[c, pr]] = M[[pr, c]]
        inv = pow(int(M[c, c]), -1, p)
        M[c] = M[c] * inv % p
        factors = M[:, c].copy()
        factors[c] = 0
        if np.any(factors):
            M[:, :] = (M - factors[:, None] * M[c]) % p
    return M[:, n:]


def _first_kernel_blas(A: np.ndarray, p: int, block: int = _BLAS_BLOCK):
    """Blocked Gauss-Jordan sweep: panel row-ops, BLAS trailing updates.

    Same contract as _first_kernel_np; the trailing update per panel runs
    as exact dgemm products, which is what makes multi-prime lifting
    affordable at a few thousand unknowns.
    """
    m, K = A.shape
    used = 0
    for j0 in range(0, K, block):
        j1 = min(j0 + block, K)
        nb = j1 - j0
        used0 = used
        pristine = A[:, j0:j1].copy()
        for jj in range(nb):
            col = A[used:, j0 + jj]
            nz = np.nonzero(col)[0]
            if nz.size == 0:
                coeffs = A[:used, j0 + jj]
                return j0 + jj, [(-int(c)) % p for c in coeffs] + [1]
            pr = used + int(nz[0])
            if pr != used:
                A[[used, pr]] = A[[pr, used]]
                pristine[[used, pr]] = pristine[[pr, used]]
            inv = pow(int(A[used, j0 + jj]), -1, p)
            A[used, j0 + jj : j1] = A[used, j0 + jj : j1] * inv % p
            factors = A[:, j0 + jj].copy()
            factors[used] = 0
            if np.any(factors):
                A[:, j0 + jj : j1] = (
                    A[:, j0 + jj : j1] - factors[:, None] * A[used, j0 + jj : j1]
                ) % p
            used += 1
        if j1 == K:
            break
        # Trailing update: with B the pristine pivot block, the composite
        # Jordan transformation sends a trailing column c to
        #   c[rho]    -> Binv @ c[rho]
        #   c[other]  -> c[other] - pristine[other, :] @ (Binv @ c[rho]).
        B = pristine[used0:used, :]
        Binv = _invert_mod_np(B, p)
        if Binv is None:
            raise BadPrimeError(f"pivot block singular mod {p}")
        W = _matmul_mod(Binv, A[used0:used, j1:], p)
        U = _matmul_mod(pristine, W, p)
        A[:, j1:] = (A[:, j1:] - U) % p
        A[used0:used, j1:] = W
    return None


def _first_kernel_np(A: np.ndarray, p: int):
    """Gauss-Jordan sweep over columns; stop at the first dependent one.

    Pivot rows are swapped to the top in column order, so when column j
    turns out dependent, rows 0..used-1 of that column hold its expansion
    in the preceding columns. Returns (j, kernel vector of length j+1).
    """
    m, K = A.shape
    used = 0
    for j in range(K):
        colvals = A[used:, j]
        nz = np.nonzero(colvals)[0]
        if nz.size == 0:
            coeffs = A[:used, j]
            vec = [(-int(c)) % p for c in coeffs] + [1]
            return j, vec
        pr = used + int(nz[0])
        if pr != used:
            A[[used, pr]] = A[[pr, used]]
        inv = pow(int(A[used, j]), -1, p)
        A[used, j:] = A[used, j:] * inv % p
        factors = A[:, j].copy()
        factors[used] = 0
        if np.any(factors):
            A[:, j:] = (A[:, j:] - factors[:, None] * A[used, j:]) % p
        used += 1
    return None


def _first_kernel_py(rows: list[list[int]], p: int):
    m = len(rows)
    K = len(rows[0]) if rows else 0
    used = 0
    for j in range(K):
        pr = None
        for i in range(used, m):
            if rows[i][j]:
                pr = i
                break
        if pr is None:
            vec = [(-rows[t][j]) % p for t in range(used)] + [1]
            return j, vec
        rows[used], rows[pr] = rows[pr], rows[used]
        inv = pow(rows[used][j], -1, p)
        prow = rows[used][j:]
        if inv != 1:
            prow = [v * inv % p for v in prow]
        rows[used] = rows[used][:j] + prow
        for i in range(m):
            if i != used and rows[i][j]:
                f = rows[i][j]
                ri = rows[i]
                rows[i] = ri[:j] + [(a - f * b) % p for a, b in zip(ri[j:], prow)]
        used += 1
    return None


def _first_kernel(tower_mod, monomials, points, r, field):
    if field.modulus < _NUMPY_MODULUS_LIMIT:
        A = _build_matrix_np(tower_mod, monomials, points, r, field)
        if field.modulus < _BLAS_MODULUS_LIMIT and A.shape[1] >= _BLAS_MIN_COLUMNS:
            return _first_kernel_blas(A, field.modulus)
        return _first_kernel_np(A, field.modulus)
    rows = _build_matrix_py(tower_mod, monomials, points, r, field)
    return _first_kernel_py(rows, field.modulus)


def kernel_prefix(
    sys: OdeSystem,
    monomials: Sequence[OutMonomial],
    nu: int,
    field: PrimeField,
    rng,
    margin: int = 10,
    tower: LieTower | None = None,
    initial_window: int = 64,
):
    """Smallest prefix of the ansatz order with a kernel, over one prime.

    The candidate columns are scanned in ansatz order against batches of
    evaluation rows; the window over the prefix doubles with fresh sample
    points per batch until a dependent column appears. Returns
    (prefix_length, kernel vector, points_used); the vector's last entry
    (the ordering-greatest monomial of the relation) is normalized to 1.

    Raises BoundExceededError when the full support carries no relation.
    """
    if tower is None:
        tower = lie_tower(sys, nu)
    try:
        tower_mod = [entry.reduce_mod(field) for entry in tower.entries]
    except BadPrimeError:
        raise
    N = len(monomials)
    r = sys.varset.r
    width = len(sys.varset)
    K = min(N, max(initial_window, 2 * margin))
    points_used = 0
    while True:
        m = K + margin
        points = _sample_points(field, rng, m, width)
        points_used += m
        found = _first_kernel(tower_mod, monomials[:K], points, r, field)
        if found is not None:
            j, vec = found
            return j + 1, vec, points_used
        if K == N:
            raise BoundExceededError(
                f"no relation inside the {N}-monomial support at order {nu}"
            )
        K = min(4 * K, N)


def _kernel_at_prefix(sys, monomials, k, field, rng, margin, tower):
    """Kernel vector over a fresh prime, restricted to a known prefix length."""
    tower_mod = [entry.reduce_mod(field) for entry in tower.entries]
    width = len(sys.varset)
    points = _sample_points(field, rng, k + margin, width)
    found = _first_kernel(tower_mod, monomials[:k], points, sys.varset.r, field)
    if found is None or found[0] != k - 1:
        raise BadPrimeError(
            f"prime {field.modulus} disagrees with the established prefix {k}"
        )
    return found[1], k + margin


# -- lifting and assembly ----------------------------------------------------


def _reconstruct_vector(values: Sequence[int], modulus: int) -> list[Fraction] | None:
    out = []
    for v in values:
        q = rational_reconstruct(v % modulus, modulus)
        if q is None:
            return None
        out.append(q)
    return out


def _assemble_fmin(
    sys: OdeSystem, monomials: Sequence[OutMonomial], coeffs: Sequence[Fraction], nu: int
) -> Polynomial:
    """Build the reported polynomial: rescale so the lexicographically
    highest derivative monomial carries coefficient 1."""
    nonzero = [(mono, c) for mono, c in zip(monomials, coeffs) if c]
    lead = max(nonzero, key=lambda mc: leading_key(mc[0]))[1]
    varset = VarSet(
        params=sys.varset.params,
        states=tuple(f"y'{i}" for i in range(nu + 1)),
    )
    terms = {mono.l + mono.e: c / lead for mono, c in nonzero}
    return Polynomial(varset, terms)


def _run_verification(sys, cand, mode, options, nu, prime_bits, seed):
    from . import verify as verify_mod

    if mode == "off":
        return True
    if mode == "symbolic":
        return verify_mod.verify_symbolic(sys, cand)
    rng = derived_rng(seed, "verify")
    for _ in range(5):  # a prime dividing some denominator forces a redraw
        vfield = PrimeField(random_prime(max(prime_bits, 30), rng))
        try:
            if mode == "prob":
                return verify_mod.verify_probabilistic(
                    sys, cand, vfield, trials=options.verify_trials, rng=rng
                )
            if mode == "series":
                T = options.series_terms or 2 * nu + 4
                return verify_mod.verify_series(sys, cand, T, vfield, trials=3, rng=rng)
            raise ValueError(f"unknown verify mode {mode!r}")
        except BadPrimeError:
            continue
    raise BadPrimeError("could not find a verification prime avoiding all denominators")


def eliminate(sys: OdeSystem, options: SolveOptions = SolveOptions()) -> EliminationResult:
    """Full pipeline; see the module docstring.

    The order is estimated probabilistically unless pinned by
    ``options.order``. An estimated order escalates up to n when the kernel
    search comes back empty; a pinned order fails fast instead so callers
    can probe specific orders.
    """
    timings: dict[str, float] = {}
    t_total = time.perf_counter()
    profile = degree_profile(sys)
    seed = options.seed

    t0 = time.perf_counter()
    if options.order is not None:
        if options.order < 1:
            raise ValueError("order override must be at least 1")
        nu_first = options.order
        nu_last = options.order
    else:
        order_rng = derived_rng(seed, "order")
        order_field = PrimeField(random_prime(options.prime_bits, derived_rng(seed, "order-prime")))
        nu_first = max(1, estimate_order(sys, order_field, options.order_trials, order_rng))
        nu_last = sys.varset.n
    timings["order_ms"] = (time.perf_counter() - t0) * 1000.0

    last_error: Exception | None = None
    for nu in range(nu_first, nu_last + 1):
        try:
            result = _eliminate_at_order(sys, profile, nu, options, timings)
            timings["total_ms"] = (time.perf_counter() - t_total) * 1000.0
            return result
        except BoundExceededError as exc:
            last_error = exc
            continue
    assert last_error is not None
    raise last_error


def _eliminate_at_order(sys, profile, nu, options, timings):
    seed = options.seed
    t0 = time.perf_counter()
    spec = bound_spec(profile, nu)
    monomials = enumerate_support(spec)
    N = len(monomials)
    timings["bound_ms"] = (time.perf_counter() - t0) * 1000.0
    if N > options.unknown_cap:
        raise SupportTooLargeError(
            f"candidate support has {N} monomials, above the cap of "
            f"{options.unknown_cap}; dense kernel elimination would need "
            f"O(N^2) memory. Raise --unknown-cap to proceed anyway."
        )

    tower = lie_tower(sys, nu)
    prime_rng = derived_rng(seed, "primes")
    primes_seen: list[int] = []
    points_used = 0

    def fresh_field() -> PrimeField:
        if len(primes_seen) >= options.max_primes:
            raise LiftFailedError(
                f"exceeded the budget of {options.max_primes} primes "
                f"(order {nu}, support {N}); coefficients may need more "
                "primes: raise --max-primes"
            )
        p = random_prime(options.prime_bits, prime_rng, avoid=primes_seen)
        primes_seen.append(p)
        return PrimeField(p)

    # First prime fixes the prefix length; one fresh-point retry guards
    # against an unlucky draw before the order escalates.
    t0 = time.perf_counter()
    k_star = None
    vec0 = None
    search_attempts = 2
    while k_star is None:
        field0 = fresh_field()
        rng = derived_rng(seed, f"points/{len(primes_seen) - 1}")
        try:
            k_star, vec0, used = kernel_prefix(
                sys,
                monomials,
                nu,
                field0,
                rng,
                margin=options.margin,
                tower=tower,
                initial_window=options.initial_window,
            )
            points_used += used
        except BadPrimeError:
            continue
        except BoundExceededError:
            search_attempts -= 1
            if search_attempts == 0:
                timings["kernel_ms"] = (time.perf_counter() - t0) * 1000.0
                raise
    timings["kernel_ms"] = (time.perf_counter() - t0) * 1000.0

    # CRT / reconstruction loop: accumulate primes until the lifted vector
    # reconstructs and the candidate passes verification (or, with
    # verification off, until two consecutive lifts agree). Follow-up primes
    # solve only over the first prime's nonzero positions; a false zero
    # there (true coefficient divisible by the prime) surfaces as a
    # structural failure and flips the solve back to the full prefix.
    t_lift = time.perf_counter()
    verify_ms = 0.0
    crt_vec = [v % primes_seen[-1] for v in vec0]
    crt_mod = primes_seen[-1]
    support_idx = [i for i, v in enumerate(vec0) if v]
    restrict = len(support_idx) < k_star
    prev_recon: list[Fraction] | None = None
    candidate: Polynomial | None = None
    verify_failures = 0
    while True:
        recon = _reconstruct_vector(crt_vec, crt_mod)
        accepted = False
        if recon is not None:
            if options.verify_mode == "off":
                accepted = prev_recon is not None and recon == prev_recon
            else:
                candidate = _assemble_fmin(sys, monomials, recon, nu)
                tv = time.perf_counter()
                ok = _run_verification(
                    sys, candidate, options.verify_mode, options, nu,
                    options.prime_bits, seed,
                )
                verify_ms += (time.perf_counter() - tv) * 1000.0
                if ok:
                    accepted = True
                else:
                    verify_failures += 1
            prev_recon = recon
        if accepted:
            break
        try:
            fieldk = fresh_field()
        except LiftFailedError:
            if verify_failures:
                raise VerificationFailedError(
                    f"candidate failed {options.verify_mode} verification with "
                    f"{verify_failures} lift(s); prime budget exhausted"
                ) from None
            raise
        rng = derived_rng(seed, f"points/{len(primes_seen) - 1}")
        try:
            if restrict:
                sub = [monomials[i] for i in support_idx]
                try:
                    vsub, used = _kernel_at_prefix(
                        sys, sub, len(sub), fieldk, rng, options.margin, tower
                    )
                    veck = [0] * k_star
                    for t, i in enumerate(support_idx):
                        veck[i] = vsub[t]
                except BadPrimeError:
                    restrict = False
                    veck, used = _kernel_at_prefix(
                        sys, monomials, k_star, fieldk, rng, options.margin, tower
                    )
            else:
                veck, used = _kernel_at_prefix(
                    sys, monomials, k_star, fieldk, rng, options.margin, tower
                )
        except BadPrimeError:
            continue
        points_used += used
        crt_vec = [
            crt_combine([(a, crt_mod), (b, fieldk.modulus)])[0]
            for a, b in zip(crt_vec, veck)
        ]
        crt_mod *= fieldk.modulus
    timings["verify_ms"] = timings.get("verify_ms", 0.0) + verify_ms
    timings["lift_ms"] = (time.perf_counter() - t_lift) * 1000.0 - verify_ms

    assert recon is not None
    if candidate is None:
        candidate = _assemble_fmin(sys, monomials, recon, nu)
    term_count = sum(1 for c in recon if c)
    stats = SolveStats(
        bound_count=N,
        term_count=term_count,
        prefix_length=k_star,
        primes_used=len(primes_seen),
        sample_points_used=points_used,
    )
    return EliminationResult(
        nu=nu,
        f_min=candidate,
        stats=stats,
        primes=tuple(primes_seen),
        seed=seed,
        timings_ms=timings,
    )


def term_count_stats(sys: OdeSystem, options: SolveOptions = SolveOptions(prime_bits=31)) -> dict:
    """Support size and modular term count without the rational lift.

    One generic prime preserves the support of the minimal equation, so
    the statistics harness counts nonzero kernel entries directly instead
    of lifting coefficients that can run to hundreds of digits.
    """
    profile = degree_profile(sys)
    seed = options.seed
    if options.order is not None:
        nu_first = nu_last = options.order
    else:
        order_rng = derived_rng(seed, "order")
        order_field = PrimeField(random_prime(options.prime_bits, derived_rng(seed, "order-prime")))
        nu_first = max(1, estimate_order(sys, order_field, options.order_trials, order_rng))
        nu_last = sys.varset.n

    last_error: Exception | None = None
    for nu in range(nu_first, nu_last + 1):
        spec = bound_spec(profile, nu)
        monomials = enumerate_support(spec)
        if len(monomials) > options.unknown_cap:
            raise SupportTooLargeError(
                f"candidate support has {len(monomials)} monomials, above the "
                f"cap of {options.unknown_cap}"
            )
        tower = lie_tower(sys, nu)
        prime_rng = derived_rng(seed, "primes")
        field = PrimeField(random_prime(options.prime_bits, prime_rng))
        rng = derived_rng(seed, "points/0")
        try:
            k_star, vec, points_used = kernel_prefix(
                sys, monomials, nu, field, rng,
                margin=options.margin, tower=tower,
                initial_window=options.initial_window,
            )
        except BoundExceededError as exc:
            last_error = exc
            continue
        return {
            "nu": nu,
            "bound_count": len(monomials),
            "term_count": sum(1 for v in vec if v),
            "prefix_length": k_star,
            "prime": field.modulus,
            "sample_points_used": points_used,
            "support": tuple(m for m, v in zip(monomials, vec) if v),
        }
    assert last_error is not None
    raise last_error
