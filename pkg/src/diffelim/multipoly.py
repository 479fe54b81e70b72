"""Sparse multivariate polynomials over Q and over prime fields.

A :class:`VarSet` fixes an ordered list of variable names split into a
parameter block and a state block; a :class:`Polynomial` maps exponent
tuples (aligned with the VarSet) to nonzero coefficients. Coefficients are
ints/Fractions when the domain is Q (``domain is None``) and canonical
residues when the domain is a :class:`~diffelim.exactfield.PrimeField`.

Polynomials are immutable values: every operation returns a fresh object,
so concurrent use needs no locking.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from .exactfield import PrimeField


class VarSet:
    """Ordered variable names: parameters first, then states."""

    __slots__ = ("params", "states", "names", "_index")

    def __init__(self, params: Iterable[str] = (), states: Iterable[str] = ()):
        params = tuple(params)
        states = tuple(states)
        names = params + states
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def __setattr__(self, name, value):
        raise AttributeError("VarSet is immutable")

    @property
    def r(self) -> int:
        return len(self.params)

    @property
    def n(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def __eq__(self, other):
        return (
            isinstance(other, VarSet)
            and other.params == self.params
            and other.states == self.states
        )

    def __hash__(self):
        return hash((self.params, self.states))

    def __repr__(self):
        return f"VarSet(params={self.params}, states={self.states})"


def _norm_coeff(c):
    """Collapse integral Fractions to int so equal values compare equal."""
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


class Polynomial:
    """Sparse polynomial: {exponent tuple -> nonzero coefficient}."""

    __slots__ = ("varset", "domain", "terms")

    def __init__(self, varset: VarSet, terms: Mapping[tuple, object], domain: PrimeField | None = None):
        width = len(varset)
        cleaned = {}
        for mono, coeff in terms.items():
            if len(mono) != width:
                raise ValueError("exponent tuple does not match the VarSet")
            if domain is not None:
                coeff = coeff % domain.modulus
            else:
                coeff = _norm_coeff(coeff)
            if coeff:
                cleaned[tuple(mono)] = coeff
        object.__setattr__(self, "varset", varset)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "terms", cleaned)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, varset: VarSet, domain: PrimeField | None = None) -> "Polynomial":
        return cls(varset, {}, domain)

    @classmethod
    def constant(cls, varset: VarSet, value, domain: PrimeField | None = None) -> "Polynomial":
        return cls(varset, {(0,) * len(varset): value}, domain)

    @classmethod
    def variable(cls, varset: VarSet, name: str, domain: PrimeField | None = None) -> "Polynomial":
        exp = [0] * len(varset)
        exp[varset.index(name)] = 1
        return cls(varset, {tuple(exp): 1}, domain)

    # -- ring structure ----------------------------------------------------

    def _check_compatible(self, other: "Polynomial"):
        if self.varset != other.varset:
            raise ValueError("polynomials live over different VarSets")
        if self.domain != other.domain:
            raise ValueError("polynomials live over different coefficient domains")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            return self + Polynomial.constant(self.varset, other, self.domain)
        self._check_compatible(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            terms[mono] = terms.get(mono, 0) + coeff
        return Polynomial(self.varset, terms, self.domain)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.varset, {m: -c for m, c in self.terms.items()}, self.domain)

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.varset, other, self.domain)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            if other == 0:
                return Polynomial.zero(self.varset, self.domain)
            return Polynomial(
                self.varset, {m: c * other for m, c in self.terms.items()}, self.domain
            )
        self._check_compatible(other)
        terms: dict[tuple, object] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                terms[mono] = terms.get(mono, 0) + c1 * c2
        return Polynomial(self.varset, terms, self.domain)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers are not defined")
        result = Polynomial.constant(self.varset, 1, self.domain)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base if e > 1 else base
            e >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            if other == 0:
                return not self.terms
            return self == Polynomial.constant(self.varset, other, self.domain)
        return (
            self.varset == other.varset
            and self.domain == other.domain
            and self.terms == other.terms
        )

    def is_zero(self) -> bool:
        return not self.terms

    # -- calculus and degrees ----------------------------------------------

    def partial(self, name: str) -> "Polynomial":
        """Formal partial derivative with respect to one variable."""
        idx = self.varset.index(name)
        terms: dict[tuple, object] = {}
        for mono, coeff in self.terms.items():
            e = mono[idx]
            if e == 0:
                continue
            dropped = mono[:idx] + (e - 1,) + mono[idx + 1 :]
            terms[dropped] = terms.get(dropped, 0) + e * coeff
        return Polynomial(self.varset, terms, self.domain)

    def degree_in(self, group: str) -> int:
        """Max summed exponent over the 'params' or 'states' block; 0 for the zero polynomial."""
        if group == "params":
            lo, hi = 0, self.varset.r
        elif group == "states":
            lo, hi = self.varset.r, len(self.varset)
        else:
            raise ValueError("group must be 'params' or 'states'")
        if not self.terms:
            return 0
        return max(sum(m[lo:hi]) for m in self.terms)

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    # -- evaluation and reduction -------------------------------------------

    def reduce_mod(self, field: PrimeField) -> "Polynomial":
        """Coefficient-wise image over the prime field (Q polynomials only)."""
        if self.domain is not None:
            raise ValueError("polynomial is already over a prime field")
        terms = {m: field.from_rational(c) for m, c in self.terms.items()}
        return Polynomial(self.varset, terms, field)

    def eval(self, point: Mapping[str, int]) -> int:
        """Exact evaluation over a prime field at a full assignment of residues."""
        field = self.domain
        if field is None:
            raise ValueError("evaluate after reduce_mod; Q-evaluation is not used here")
        values = []
        for i, name in enumerate(self.varset.names):
            needed = any(m[i] for m in self.terms)
            if name in point:
                values.append(point[name] % field.modulus)
            elif needed:
                raise KeyError(f"no value assigned to {name!r}")
            else:
                values.append(0)
        p = field.modulus
        total = 0
        powcache: dict[tuple[int, int], int] = {}
        for mono, coeff in self.terms.items():
            term = coeff
            for idx, e in enumerate(mono):
                if e == 0:
                    continue
                key = (idx, e)
                v = powcache.get(key)
                if v is None:
                    v = pow(values[idx], e, p)
                    powcache[key] = v
                term = term * v % p
            total = (total + term) % p
        return total

    def map_coeffs(self, fn) -> "Polynomial":
        return Polynomial(self.varset, {m: fn(c) for m, c in self.terms.items()}, self.domain)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms, reverse=True):
            coeff = self.terms[mono]
            factors = [
                name if e == 1 else f"{name}^{e}"
                for name, e in zip(self.varset.names, mono)
                if e
            ]
            body = "*".join(factors)
            if not body:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append(body)
            elif coeff == -1:
                parts.append(f"-{body}")
            else:
                parts.append(f"{coeff}*{body}")
        return " + ".join(parts).replace("+ -", "- ")
