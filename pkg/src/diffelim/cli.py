"""Command-line front end: model files, subcommands, and canonical output.

Model file grammar (# starts a line comment; whitespace is free):

    params: a, b        # optional
    vars: x1, x2
    x1' = a*x1 + x2^2
    x2' = x1 - 1/2
    y = x1*x2

Expressions use integer or rational literals (``3``, ``3/10``), ``+ - * ^``
and parentheses; ``^`` takes a non-negative integer exponent and binds
tighter than unary minus. The reported minimal equation names derivatives
``y'0, y'1, ...`` and is itself a valid expression over those names, so it
can be parsed back.
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys
from fractions import Fraction

from .exactfield import PrimeField, derived_rng, random_prime
from .multipoly import Polynomial, VarSet
from .solver import (
    BoundExceededError,
    EliminationResult,
    LiftFailedError,
    SolveOptions,
    SupportTooLargeError,
    VerificationFailedError,
    eliminate,
    term_count_stats,
)
from .support import (
    OutMonomial,
    bound_spec,
    hull_lattice_count,
    leading_key,
    support_count,
)
from .system import (
    DegreeProfile,
    OdeSystem,
    SystemValidationError,
    degree_profile,
    random_dense_system,
)

RESERVED_OUTPUT_NAME = "y"


class ModelError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)


# -- expression tokenizer and parser -----------------------------------------


class _Token:
    __slots__ = ("kind", "text", "col")

    def __init__(self, kind, text, col):
        self.kind = kind
        self.text = text
        self.col = col


def _tokenize(text: str, line: int) -> list[_Token]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t":
            i += 1
            continue
        col = i + 1
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], col))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[i:j]
            # Derivative names like y'2 are single tokens.
            if j < n and text[j] == "'" and j + 1 < n and text[j + 1].isdigit():
                k = j + 1
                while k < n and text[k].isdigit():
                    k += 1
                name = text[i:k]
                j = k
            tokens.append(_Token("name", name, col))
            i = j
        elif c in "+-*^()/":
            tokens.append(_Token(c, c, col))
            i += 1
        else:
            raise ModelError(f"unexpected character {c!r}", line, col)
    tokens.append(_Token("end", "", n + 1))
    return tokens


class _ExprParser:
    """Recursive descent over: expr > term > factor > base."""

    def __init__(self, tokens, line, varset, domain=None):
        self.tokens = tokens
        self.pos = 0
        self.line = line
        self.varset = varset
        self.domain = domain

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok.kind != kind:
            raise ModelError(
                f"expected {kind!r}, found {tok.text or 'end of line'!r}",
                self.line,
                tok.col,
            )
        self.pos += 1
        return tok

    def parse(self) -> Polynomial:
        result = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ModelError(f"trailing input {tok.text!r}", self.line, tok.col)
        return result

    def expr(self) -> Polynomial:
        result = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.take().kind
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Polynomial:
        result = self.factor()
        while self.peek().kind == "*":
            self.take()
            result = result * self.factor()
        return result

    def factor(self) -> Polynomial:
        base = self.base()
        if self.peek().kind == "^":
            self.take()
            tok = self.take("int")
            base = base ** int(tok.text)
        return base

    def base(self) -> Polynomial:
        tok = self.peek()
        if tok.kind == "-":
            self.take()
            return -self.factor()
        if tok.kind == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        if tok.kind == "int":
            self.take()
            value = int(tok.text)
            if self.peek().kind == "/":
                self.take()
                denom_tok = self.take("int")
                denom = int(denom_tok.text)
                if denom == 0:
                    raise ModelError("zero denominator", self.line, denom_tok.col)
                return Polynomial.constant(self.varset, Fraction(value, denom), self.domain)
            return Polynomial.constant(self.varset, value, self.domain)
        if tok.kind == "name":
            self.take()
            try:
                return Polynomial.variable(self.varset, tok.text, self.domain)
            except KeyError:
                raise ModelError(f"undeclared name {tok.text!r}", self.line, tok.col) from None
        raise ModelError(
            f"expected a value, found {tok.text or 'end of line'!r}", self.line, tok.col
        )


def parse_expression(text: str, varset: VarSet, line: int = 0) -> Polynomial:
    return _ExprParser(_tokenize(text, line), line, varset).parse()


# -- model files --------------------------------------------------------------


def _split_names(body: str, line: int) -> list[str]:
    names = [part.strip() for part in body.split(",")]
    for name in names:
        if not name or not (name[0].isalpha() or name[0] == "_") or not all(
            ch.isalnum() or ch == "_" for ch in name
        ):
            raise ModelError(f"invalid name {name!r}", line)
        if name == RESERVED_OUTPUT_NAME:
            raise ModelError(f"{RESERVED_OUTPUT_NAME!r} is reserved for the output", line)
    if len(set(names)) != len(names):
        raise ModelError("duplicate names in declaration", line)
    return names


def parse_model(text: str) -> OdeSystem:
    """Parse a model file into an OdeSystem; all errors carry line/col."""
    params: list[str] = []
    states: list[str] = []
    deriv_lines: dict[str, tuple[str, int]] = {}
    output_line: tuple[str, int] | None = None
    seen_vars = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("params:"):
            if seen_vars or params:
                raise ModelError("params: must appear once, before vars:", lineno)
            params = _split_names(stripped[len("params:"):], lineno)
            continue
        if stripped.startswith("vars:"):
            if seen_vars:
                raise ModelError("duplicate vars: line", lineno)
            states = _split_names(stripped[len("vars:"):], lineno)
            seen_vars = True
            continue
        if "=" not in stripped:
            raise ModelError("expected NAME' = EXPR or y = EXPR", lineno)
        lhs, rhs = stripped.split("=", 1)
        lhs = lhs.strip()
        if lhs == RESERVED_OUTPUT_NAME:
            if output_line is not None:
                raise ModelError("duplicate output line", lineno)
            output_line = (rhs, lineno)
        elif lhs.endswith("'"):
            name = lhs[:-1].strip()
            if name in deriv_lines:
                raise ModelError(f"duplicate derivative line for {name!r}", lineno)
            deriv_lines[name] = (rhs, lineno)
        else:
            raise ModelError(
                f"left-hand side must be {RESERVED_OUTPUT_NAME!r} or a state derivative", lineno
            )

    if not seen_vars:
        raise ModelError("missing vars: line")
    if output_line is None:
        raise ModelError(f"missing output line '{RESERVED_OUTPUT_NAME} = ...'")
    if set(params) & set(states):
        raise ModelError("a name cannot be both a parameter and a state")
    for name in deriv_lines:
        if name not in states:
            raise ModelError(f"derivative line for undeclared state {name!r}",
                             deriv_lines[name][1])
    for name in states:
        if name not in deriv_lines:
            raise ModelError(f"state {name!r} has no derivative line")

    varset = VarSet(params=tuple(params), states=tuple(states))
    rhs_polys = []
    for name in states:
        body, lineno = deriv_lines[name]
        rhs_polys.append(parse_expression(body, varset, lineno))
    out_body, out_lineno = output_line
    output = parse_expression(out_body, varset, out_lineno)
    try:
        return OdeSystem(varset, rhs_polys, output)
    except SystemValidationError as exc:
        raise ModelError(str(exc)) from exc


# -- canonical formatting ------------------------------------------------------


def _format_coeff(c) -> str:
    if isinstance(c, Fraction) and c.denominator != 1:
        return f"{c.numerator}/{c.denominator}"
    return str(int(c))


def _format_monomial(names, mono) -> str:
    parts = []
    for name, e in zip(names, mono):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def format_polynomial(p: Polynomial, key=None) -> str:
    """Render with terms sorted descending by ``key`` (default: plain
    exponent order); the output reparses to the same polynomial."""
    if not p.terms:
        return "0"
    if key is None:
        order = sorted(p.terms, reverse=True)
    else:
        order = sorted(p.terms, key=key, reverse=True)
    chunks = []
    for mono in order:
        coeff = p.terms[mono]
        body = _format_monomial(p.varset.names, mono)
        negative = coeff < 0
        mag = -coeff if negative else coeff
        if not body:
            text = _format_coeff(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{_format_coeff(mag)}*{body}"
        if not chunks:
            chunks.append(("-" if negative else "") + text)
        else:
            chunks.append(("- " if negative else "+ ") + text)
    return " ".join(chunks)


def format_fmin(f_min: Polynomial) -> str:
    """Canonical minimal-equation string: descending by derivative order."""
    r = f_min.varset.r

    def key(mono):
        return leading_key(OutMonomial(mono[:r], mono[r:]))

    return format_polynomial(f_min, key=key)


def parse_fmin(text: str, params: tuple[str, ...], nu: int) -> Polynomial:
    """Parse a minimal-equation string back over (params, y'0..y'nu)."""
    varset = VarSet(params=params, states=tuple(f"y'{i}" for i in range(nu + 1)))
    return parse_expression(text, varset)


def fmin_order(text: str) -> int:
    """Highest derivative index mentioned in a minimal-equation string."""
    best = -1
    for tok in _tokenize(text, 0):
        if tok.kind == "name" and tok.text.startswith("y'"):
            best = max(best, int(tok.text[2:]))
    if best < 0:
        raise ModelError("candidate mentions no derivative variable y'k")
    return best


def render_model(sys_: OdeSystem) -> str:
    lines = []
    if sys_.varset.params:
        lines.append("params: " + ", ".join(sys_.varset.params))
    lines.append("vars: " + ", ".join(sys_.varset.states))
    for name, g in zip(sys_.varset.states, sys_.rhs):
        lines.append(f"{name}' = " + format_polynomial(g))
    lines.append("y = " + format_polynomial(sys_.output))
    return "\n".join(lines) + "\n"


# -- subcommands ---------------------------------------------------------------


def _json_safe(value):
    if isinstance(value, int) and abs(value) >= (1 << 53):
        return str(value)
    return value


def _result_json(result: EliminationResult, np_count=None, match=False) -> dict:
    doc = {
        "order": result.nu,
        "bound_count": result.stats.bound_count,
        "term_count": result.stats.term_count,
        "f_min": format_fmin(result.f_min),
        "primes_used": result.stats.primes_used,
        "seed": _json_safe(result.seed),
        "timings_ms": {k: round(v, 3) for k, v in result.timings_ms.items()},
    }
    if np_count is not None:
        doc["np_count"] = np_count
    if match:
        r = result.f_min.varset.r
        lead = max(
            result.f_min.terms,
            key=lambda m: leading_key(OutMonomial(m[:r], m[r:])),
        )
        doc["paper_normalization"] = (
            f"coefficient of {_format_monomial(result.f_min.varset.names, lead)} "
            "normalized to 1; published displays may differ by a constant factor"
        )
    return doc


def _load_model(path: str) -> OdeSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


def cmd_solve(args) -> int:
    try:
        system = _load_model(args.model)
    except OSError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except ModelError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    options = SolveOptions(
        order=args.order,
        prime_bits=args.prime_bits,
        max_primes=args.max_primes,
        margin=args.margin,
        seed=args.seed,
        verify_mode=args.verify,
        unknown_cap=args.unknown_cap,
    )
    try:
        result = eliminate(system, options)
    except (BoundExceededError, SupportTooLargeError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2 if isinstance(exc, BoundExceededError) else 1
    except VerificationFailedError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 3
    except LiftFailedError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    np_count = None
    if args.np_count:
        np_count = hull_lattice_count(result.support)
    print(format_fmin(result.f_min))
    if args.json:
        doc = _result_json(result, np_count=np_count, match=args.match)
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    if np_count is not None and not args.json:
        print(f"# lattice points in Newton polytope: {np_count}", file=_sys.stderr)
    return 0


def _profile_from_args(args) -> DegreeProfile:
    missing = [k for k in ("n", "dx", "Dx") if getattr(args, k) is None]
    if missing:
        raise SystemValidationError(
            f"profile flags required without a model file: --{', --'.join(missing)}"
        )
    return DegreeProfile(
        n=args.n,
        r=args.r,
        d_x=args.dx,
        D_x=args.Dx,
        d_mu=args.dmu,
        D_mu=args.Dmu,
    )


def cmd_bound(args) -> int:
    try:
        if args.model:
            system = _load_model(args.model)
            profile = degree_profile(system)
        else:
            profile = _profile_from_args(args)
    except (ModelError, SystemValidationError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    nu = args.order if args.order is not None else profile.n
    spec = bound_spec(profile, nu)
    count = support_count(spec)
    print(f"order: {nu}")
    print(f"w_x: {' '.join(map(str, spec.w_x))}")
    if profile.r:
        print(f"w_mu: {' '.join(map(str, spec.w_mu))}")
        print(f"rhs_mixed: {spec.rhs_multi}")
        print(f"rhs_global: {spec.rhs_global}")
    print(f"rhs_derivative: {spec.rhs_y}")
    print(f"bound_count: {count}")
    return 0


def cmd_stats(args) -> int:
    header = "bound_count term_count ratio"
    if args.np_count:
        header += " np_count"
    print(header)
    for run in range(args.runs):
        seed = args.seed + run
        system = random_dense_system(
            n=args.n,
            r=args.r,
            D_x=args.Dx,
            d_x=args.dx,
            D_mu=args.Dmu,
            d_mu=args.dmu,
            coeff_bound=args.coeff_bound,
            seed=seed,
        )
        options = SolveOptions(
            order=args.order,
            prime_bits=args.prime_bits,
            margin=args.margin,
            seed=seed,
            unknown_cap=args.unknown_cap,
        )
        try:
            stats = term_count_stats(system, options)
        except (BoundExceededError, SupportTooLargeError) as exc:
            print(f"error: {exc}", file=_sys.stderr)
            return 2 if isinstance(exc, BoundExceededError) else 1
        ratio = 100.0 * stats["term_count"] / stats["bound_count"]
        row = f"{stats['bound_count']} {stats['term_count']} {ratio:.0f}%"
        if args.np_count:
            row += f" {hull_lattice_count(stats['support'])}"
        print(row)
    return 0


def cmd_gen(args) -> int:
    try:
        system = random_dense_system(
            n=args.n,
            r=args.r,
            D_x=args.Dx,
            d_x=args.dx,
            D_mu=args.Dmu,
            d_mu=args.dmu,
            coeff_bound=args.coeff_bound,
            seed=args.seed,
        )
    except (SystemValidationError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    text = render_model(system)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    from . import verify as verify_mod

    try:
        system = _load_model(args.model)
        if os.path.exists(args.candidate):
            with open(args.candidate, "r", encoding="utf-8") as fh:
                cand_text = fh.read().strip()
        else:
            cand_text = args.candidate
        nu = fmin_order(cand_text)
        cand = parse_fmin(cand_text, system.varset.params, nu)
    except (OSError, ModelError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    rng = derived_rng(args.seed, "verify-cli")
    if args.mode == "symbolic":
        ok = verify_mod.verify_symbolic(system, cand)
    else:
        field = PrimeField(random_prime(args.prime_bits, rng))
        if args.mode == "prob":
            ok = verify_mod.verify_probabilistic(system, cand, field, args.trials, rng)
        else:
            T = args.series_terms or (2 * nu + 4)
            ok = verify_mod.verify_series(system, cand, T, field, trials=args.trials, rng=rng)
    print("verified" if ok else "REJECTED")
    return 0 if ok else 3


def _add_profile_flags(parser, require=False):
    parser.add_argument("--n", type=int, default=None if not require else 2,
                        help="state dimension")
    parser.add_argument("--r", type=int, default=0, help="parameter count")
    parser.add_argument("--Dx", type=int, default=None, help="state degree of the dynamics")
    parser.add_argument("--dx", type=int, default=None, help="state degree of the observation")
    parser.add_argument("--Dmu", type=int, default=0, help="parameter degree of the dynamics")
    parser.add_argument("--dmu", type=int, default=0, help="parameter degree of the observation")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="diffelim",
        description="Minimal differential equation of a polynomial observation "
        "of a polynomial dynamical system, by exact evaluation-interpolation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute the minimal differential equation")
    p_solve.add_argument("model", help="model file path")
    p_solve.add_argument("--order", type=int, default=None,
                         help="pin the derivative order instead of estimating it")
    p_solve.add_argument("--prime-bits", type=int, default=62, dest="prime_bits")
    p_solve.add_argument("--max-primes", type=int, default=8, dest="max_primes")
    p_solve.add_argument("--margin", type=int, default=10)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--verify", choices=["off", "prob", "symbolic", "series"],
                         default="prob")
    p_solve.add_argument("--unknown-cap", type=int, default=5000, dest="unknown_cap")
    p_solve.add_argument("--json", default=None, help="also write a JSON report here")
    p_solve.add_argument("--np-count", action="store_true", dest="np_count",
                         help="count lattice points of the result's Newton polytope")
    p_solve.add_argument("--match", action="store_true",
                         help="annotate the JSON with the normalization convention")
    p_solve.set_defaults(func=cmd_solve)

    p_bound = sub.add_parser("bound", help="support bound size for a model or profile")
    p_bound.add_argument("model", nargs="?", default=None)
    _add_profile_flags(p_bound)
    p_bound.add_argument("--order", type=int, default=None)
    p_bound.set_defaults(func=cmd_bound)

    p_stats = sub.add_parser("stats", help="bound vs. actual term counts on random models")
    _add_profile_flags(p_stats)
    p_stats.add_argument("--order", type=int, default=None)
    p_stats.add_argument("--seed", type=int, default=0)
    p_stats.add_argument("--runs", type=int, default=1)
    p_stats.add_argument("--coeff-bound", type=int, default=1000, dest="coeff_bound")
    p_stats.add_argument("--prime-bits", type=int, default=31, dest="prime_bits")
    p_stats.add_argument("--margin", type=int, default=10)
    p_stats.add_argument("--unknown-cap", type=int, default=5000, dest="unknown_cap")
    p_stats.add_argument("--np-count", action="store_true", dest="np_count")
    p_stats.set_defaults(func=cmd_stats)

    p_gen = sub.add_parser("gen", help="write a random dense model file")
    _add_profile_flags(p_gen)
    p_gen.add_argument("--coeff-bound", type=int, default=100, dest="coeff_bound")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("-o", "--output", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_verify = sub.add_parser("verify", help="check a candidate equation against a model")
    p_verify.add_argument("model")
    p_verify.add_argument("candidate", help="equation string or path to a file holding one")
    p_verify.add_argument("--mode", choices=["prob", "symbolic", "series"], default="prob")
    p_verify.add_argument("--trials", type=int, default=20)
    p_verify.add_argument("--series-terms", type=int, default=None, dest="series_terms")
    p_verify.add_argument("--prime-bits", type=int, default=62, dest="prime_bits")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, SystemValidationError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
