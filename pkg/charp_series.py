"""
Truncated Power Series
Version: 1.0
Purpose: Sparse univariate power series over F_{p^k}, substitution by coordinate changes and bar compression
"""

import json
import logging
import math
from dataclasses import dataclass
from math import comb
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from sympy import multiplicity

from charp_errors import ParseError, PreconditionError, TruncationError
from charp_field import (ExpressionParser, FieldCtx, FieldElem, common_context, embed,
                         inverse_frobenius, parse_element)

logger = logging.getLogger(__name__)

Coefficient = Union[int, FieldElem]


def p_valuation(n: int, p: int) -> int:
    """e(n): the exponent of p in n (n >= 1)."""
    if n < 1:
        raise PreconditionError(f"p-adic valuation needs a positive integer, got {n}")
    return int(multiplicity(p, n))


@dataclass(frozen=True)
class Series:
    """
    sum c_n x^n known exactly for n <= trunc. coeffs never stores zeros or
    exponents beyond trunc.
    """

    ctx: FieldCtx
    trunc: int
    coeffs: Dict[int, FieldElem]

    def __post_init__(self):
        if self.trunc < 0:
            raise PreconditionError(f"Truncation order must be >= 0, got {self.trunc}")
        clean = {}
        for n, c in self.coeffs.items():
            if n < 0:
                raise PreconditionError(f"Negative exponent {n} in a power series")
            if n <= self.trunc and c:
                clean[n] = c
        object.__setattr__(self, 'coeffs', clean)

    __hash__ = None

    # ---- constructors ----

    @classmethod
    def from_terms(cls, ctx: FieldCtx, terms: Mapping[int, Coefficient], trunc: Optional[int] = None) -> 'Series':
        converted = {n: (c if isinstance(c, FieldElem) else ctx.scalar(c)) for n, c in terms.items()}
        converted = {n: embed(c, ctx) for n, c in converted.items()}
        if trunc is None:
            trunc = max(converted, default=1)
        return cls(ctx, trunc, converted)

    @classmethod
    def monomial(cls, ctx: FieldCtx, n: int, trunc: int, coeff: Coefficient = 1) -> 'Series':
        return cls.from_terms(ctx, {n: coeff}, trunc)

    @classmethod
    def zero(cls, ctx: FieldCtx, trunc: int) -> 'Series':
        return cls(ctx, trunc, {})

    # ---- queries ----

    def support(self) -> List[int]:
        return sorted(self.coeffs)

    def ord(self) -> Union[int, float]:
        """Order of vanishing; math.inf for the zero jet."""
        return min(self.coeffs) if self.coeffs else math.inf

    def coeff(self, n: int) -> FieldElem:
        if n > self.trunc:
            raise TruncationError(f"Coefficient of x^{n} is beyond trunc {self.trunc}")
        return self.coeffs.get(n, self.ctx.zero)

    def is_zero(self) -> bool:
        return not self.coeffs

    def constant_term(self) -> FieldElem:
        return self.coeffs.get(0, self.ctx.zero)

    def max_exponent(self) -> int:
        return max(self.coeffs, default=0)

    # ---- truncation and fields ----

    def jet(self, k: int) -> 'Series':
        return Series(self.ctx, min(self.trunc, k), self.coeffs)

    def as_polynomial(self, trunc: int) -> 'Series':
        """Treat the stored terms as an exact polynomial known up to trunc."""
        return Series(self.ctx, trunc, self.coeffs)

    def embed(self, target: FieldCtx) -> 'Series':
        if target is self.ctx:
            return self
        return Series(target, self.trunc, {n: embed(c, target) for n, c in self.coeffs.items()})

    def without_constant(self) -> 'Series':
        return Series(self.ctx, self.trunc, {n: c for n, c in self.coeffs.items() if n})

    # ---- arithmetic ----

    def __add__(self, other: 'Series') -> 'Series':
        return add(self, other)

    def __sub__(self, other: 'Series') -> 'Series':
        return add(self, -other)

    def __neg__(self) -> 'Series':
        return Series(self.ctx, self.trunc, {n: -c for n, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, Series):
            return mul(self, other)
        if isinstance(other, (int, FieldElem)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def scale(self, c: Coefficient) -> 'Series':
        f = self
        if isinstance(c, FieldElem) and c.ctx != self.ctx:
            f = self.embed(common_context(self.ctx, c.ctx))
        c = embed(c, f.ctx) if isinstance(c, FieldElem) else f.ctx.scalar(c)
        return Series(f.ctx, f.trunc, {n: v * c for n, v in f.coeffs.items()})

    # ---- text ----

    def to_text(self) -> str:
        if not self.coeffs:
            return '0'
        parts = []
        for n in self.support():
            c = self.coeffs[n]
            ctext = c.to_text()
            if '+' in ctext:
                ctext = f"({ctext})"
            if n == 0:
                parts.append(ctext)
                continue
            mono = 'x' if n == 1 else f"x^{n}"
            parts.append(mono if ctext == '1' else f"{ctext}*{mono}")
        return ' + '.join(parts)

    def __str__(self):
        return self.to_text()

    def to_dict(self) -> Dict[str, Any]:
        return {'terms': [[n, self.coeffs[n].to_text()] for n in self.support()], 'trunc': self.trunc}


def unify(*series: Series) -> List[Series]:
    """Embed all arguments into one common field context."""
    ctx = series[0].ctx
    for s in series[1:]:
        ctx = common_context(ctx, s.ctx)
    return [s.embed(ctx) for s in series]


def add(f: Series, g: Series) -> Series:
    if f.ctx != g.ctx:
        f, g = unify(f, g)
    trunc = min(f.trunc, g.trunc)
    out = {n: c for n, c in f.coeffs.items() if n <= trunc}
    for n, c in g.coeffs.items():
        if n <= trunc:
            out[n] = out[n] + c if n in out else c
    return Series(f.ctx, trunc, out)


def mul(f: Series, g: Series) -> Series:
    if f.ctx != g.ctx:
        f, g = unify(f, g)
    trunc = min(f.trunc, g.trunc)
    out: Dict[int, FieldElem] = {}
    for n, a in f.coeffs.items():
        for m, b in g.coeffs.items():
            s = n + m
            if s <= trunc:
                out[s] = out[s] + a * b if s in out else a * b
    return Series(f.ctx, trunc, out)


# ==================== DENSE KERNELS ====================

def _dense(f: Series, trunc: int) -> List[FieldElem]:
    zero = f.ctx.zero
    vec = [zero] * (trunc + 1)
    for n, c in f.coeffs.items():
        if n <= trunc:
            vec[n] = c
    return vec


def _dense_mul(a: List[FieldElem], b: List[FieldElem], trunc: int) -> List[FieldElem]:
    out = [a[0].ctx.zero] * (trunc + 1)
    nonzero_b = [(j, bj) for j, bj in enumerate(b) if bj]
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in nonzero_b:
            s = i + j
            if s > trunc:
                break
            out[s] = out[s] + ai * bj
    return out


def power_table(phi: Series, upto: int, trunc: int) -> List[List[FieldElem]]:
    """Dense phi^0 .. phi^upto, each truncated at trunc."""
    base = _dense(phi, trunc)
    one = [phi.ctx.zero] * (trunc + 1)
    one[0] = phi.ctx.one
    powers = [one]
    for _ in range(upto):
        powers.append(_dense_mul(powers[-1], base, trunc))
    return powers


# ==================== COORDINATE CHANGES ====================

@dataclass(frozen=True)
class CoordChange:
    """phi = a1*x + a2*x^2 + ... with a1 != 0, acting by f -> f(phi(x))."""

    series: Series

    def __post_init__(self):
        s = self.series
        if s.ord() != 1:
            raise PreconditionError(f"Coordinate change needs order 1, got {s.to_text()}")

    __hash__ = None

    @classmethod
    def identity(cls, ctx: FieldCtx, trunc: int) -> 'CoordChange':
        return cls(Series(ctx, trunc, {1: ctx.one}))

    @classmethod
    def from_coeffs(cls, ctx: FieldCtx, coeffs: Sequence[Coefficient], trunc: Optional[int] = None) -> 'CoordChange':
        """coeffs[0] is a1, coeffs[1] is a2, ..."""
        terms = {i + 1: c for i, c in enumerate(coeffs)}
        return cls(Series.from_terms(ctx, terms, trunc if trunc is not None else len(coeffs)))

    @property
    def ctx(self) -> FieldCtx:
        return self.series.ctx

    @property
    def trunc(self) -> int:
        return self.series.trunc

    def linear_coeff(self) -> FieldElem:
        return self.series.coeff(1)

    def is_identity(self) -> bool:
        return self.series.coeffs == {1: self.ctx.one}

    def embed(self, target: FieldCtx) -> 'CoordChange':
        return CoordChange(self.series.embed(target))

    def then(self, other: 'CoordChange') -> 'CoordChange':
        """self o other, i.e. x -> self(other(x)); f o (self o other) = (f o self) o other."""
        return CoordChange(compose(self.series, other))

    def inverse(self) -> 'CoordChange':
        phi = self.series
        trunc = phi.trunc
        ctx = phi.ctx
        a1_inv = phi.coeff(1).inverse()
        psi = Series(ctx, trunc, {1: a1_inv})
        for n in range(2, trunc + 1):
            err = compose(phi, psi).coeff(n)
            if err:
                coeffs = dict(psi.coeffs)
                coeffs[n] = -err * a1_inv
                psi = Series(ctx, trunc, coeffs)
        return CoordChange(psi)

    def to_pairs(self) -> List[List[Any]]:
        return self.series.to_dict()['terms']

    def to_text(self) -> str:
        return self.series.to_text()


def compose(f: Series, phi: Union[CoordChange, Series], trunc: Optional[int] = None) -> Series:
    """
    f(phi(x)) by Horner evaluation over truncated dense vectors. phi may be a
    bare series of order >= 1 (plain substitution).
    """
    phi_series = phi.series if isinstance(phi, CoordChange) else phi
    if phi_series.ord() < 1:
        raise PreconditionError("Substituted series must have order >= 1")
    if f.ctx != phi_series.ctx:
        f, phi_series = unify(f, phi_series)
    out_trunc = min(f.trunc, phi_series.trunc)
    if trunc is not None:
        out_trunc = min(out_trunc, trunc)
    ctx = f.ctx
    exps = sorted((n for n in f.coeffs if n <= out_trunc), reverse=True)
    if not exps:
        return Series.zero(ctx, out_trunc)

    base = _dense(phi_series, out_trunc)
    power_cache: Dict[int, List[FieldElem]] = {1: base}

    def phi_power(k: int) -> List[FieldElem]:
        if k not in power_cache:
            half = phi_power(k // 2)
            sq = _dense_mul(half, half, out_trunc)
            power_cache[k] = _dense_mul(sq, base, out_trunc) if k % 2 else sq
        return power_cache[k]

    acc = [ctx.zero] * (out_trunc + 1)
    acc[0] = f.coeffs[exps[0]]
    for prev, n in zip(exps, exps[1:]):
        acc = _dense_mul(acc, phi_power(prev - n), out_trunc)
        acc[0] = acc[0] + f.coeffs[n]
    if exps[-1] > 0:
        acc = _dense_mul(acc, phi_power(exps[-1]), out_trunc)
    return Series(ctx, out_trunc, {i: c for i, c in enumerate(acc) if c})


def apply_elementary(f: Series, u: FieldElem, l: int) -> Series:
    """
    f(x + u*x^(l+1)) termwise: with n = p^e * n', the term c_n x^n becomes
    c_n * sum_j C(n', j) u^(j p^e) x^(n + j l p^e).
    """
    if l < 1:
        raise PreconditionError(f"Elementary change needs shift l >= 1, got {l}")
    if u.ctx != f.ctx:
        f = f.embed(common_context(f.ctx, u.ctx))
    ctx = f.ctx
    u = embed(u, ctx)
    p = ctx.p
    trunc = f.trunc
    out: Dict[int, FieldElem] = {}
    for n, c in f.coeffs.items():
        if n == 0 or not u:
            out[n] = out[n] + c if n in out else c
            continue
        e = p_valuation(n, p)
        core = n // p ** e
        step = l * p ** e
        w = u ** (p ** e)
        wj = ctx.one
        for j in range(core + 1):
            s = n + j * step
            if s > trunc:
                break
            b = comb(core, j) % p
            if b:
                term = c * wj * b
                out[s] = out[s] + term if s in out else term
            wj = wj * w
    return Series(ctx, trunc, out)


def apply_scaling(f: Series, a: FieldElem) -> Series:
    """f(a*x)."""
    if a.ctx != f.ctx:
        f = f.embed(common_context(f.ctx, a.ctx))
    a = embed(a, f.ctx)
    if not a:
        raise PreconditionError("Scaling factor must be nonzero")
    return Series(f.ctx, f.trunc, {n: c * a ** n for n, c in f.coeffs.items()})


def derivative(f: Series) -> Series:
    p = f.ctx.p
    out = {n - 1: c * n for n, c in f.coeffs.items() if n % p}
    return Series(f.ctx, max(f.trunc - 1, 0), out)


def series_valuation(f: Series) -> int:
    """e(f): minimum p-adic valuation over the (nonconstant) support."""
    exps = [n for n in f.coeffs if n]
    if not exps:
        raise PreconditionError("e(f) is undefined for a constant series")
    return min(p_valuation(n, f.ctx.p) for n in exps)


def to_bar(f: Series) -> Tuple[Series, int]:
    """(fbar, e) with f(x) = fbar(x^(p^e)) and e(fbar) = 0."""
    if f.is_zero():
        raise PreconditionError("Cannot compress the zero series")
    if f.ord() < 1:
        raise PreconditionError("Bar compression needs ord(f) >= 1")
    e = series_valuation(f)
    if e == 0:
        return f, 0
    q = f.ctx.p ** e
    return Series(f.ctx, f.trunc // q, {n // q: c for n, c in f.coeffs.items()}), e


def from_bar(fbar: Series, e: int, trunc: Optional[int] = None) -> Series:
    q = fbar.ctx.p ** e
    if trunc is None:
        trunc = fbar.trunc * q
    return Series(fbar.ctx, trunc, {n * q: c for n, c in fbar.coeffs.items()})


def transport_change(psi: CoordChange, e: int) -> CoordChange:
    """
    chi with chi(x)^(p^e) = psi(x^(p^e)): coefficients are p^e-th roots.
    chi.trunc is psi.trunc * p^e for every e >= 0; at e = 0 chi is psi itself.
    """
    if e < 0:
        raise PreconditionError(f"Transport level must be >= 0, got {e}")
    if e == 0:
        return psi
    s = psi.series
    chi = Series(s.ctx, s.trunc * s.ctx.p ** e,
                 {i: inverse_frobenius(c, e) for i, c in s.coeffs.items()})
    return CoordChange(chi)


# ==================== TEXT FORMS ====================

def parse_series(text: str, ctx: FieldCtx, trunc: Optional[int] = None) -> Series:
    """Parse e.g. 'x^2 + (g+1)*x^5 + x^7'; duplicate exponents are rejected."""
    if not text.strip():
        raise ParseError("Empty series", text, 0)
    terms = ExpressionParser(text, ctx, allow_x=True).parse_terms()
    coeffs: Dict[int, FieldElem] = {}
    for exponent, coeff, pos in terms:
        if exponent in coeffs:
            raise ParseError(f"Duplicate exponent {exponent}", text, pos)
        coeffs[exponent] = coeff
    top = max(coeffs, default=1)
    if trunc is None:
        trunc = max(top, 1)
    elif top > trunc:
        raise ParseError(f"Exponent {top} exceeds trunc {trunc}", text, -1)
    return Series(ctx, trunc, coeffs)


def series_from_json(payload: Union[str, Mapping[str, Any]], ctx: FieldCtx) -> Series:
    """{"terms": [[n, "coeff"], ...], "trunc": N}."""
    if isinstance(payload, str):
        try:
            payload = json.loads(payload)
        except json.JSONDecodeError as e:
            raise ParseError(f"Invalid series JSON: {e.msg}", payload, e.pos)
    if not isinstance(payload, Mapping) or 'terms' not in payload:
        raise ParseError("Series JSON needs a 'terms' list", str(payload), 0)
    coeffs: Dict[int, FieldElem] = {}
    for item in payload['terms']:
        try:
            n, ctext = int(item[0]), str(item[1])
        except (TypeError, ValueError, IndexError):
            raise ParseError(f"Bad term {item!r}", str(payload), -1)
        if n in coeffs:
            raise ParseError(f"Duplicate exponent {n}", str(payload), -1)
        coeffs[n] = parse_element(ctext, ctx)
    trunc = int(payload.get('trunc', max(coeffs, default=1)))
    if coeffs and max(coeffs) > trunc:
        raise ParseError(f"Exponent {max(coeffs)} exceeds trunc {trunc}", str(payload), -1)
    return Series(ctx, trunc, coeffs)
