"""
Finite Field Arithmetic
Version: 1.0
Purpose: Exact arithmetic in F_{p^k} with lazy extensions, Frobenius maps and roots of additive polynomials
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from sympy import factorint, isprime
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_irreducible_p

from charp_config import Budget, default_budget
from charp_errors import BudgetExceededError, FieldMismatchError, ParseError, PreconditionError

logger = logging.getLogger(__name__)

# exp/log tables are built for fields up to this many elements
TABLE_LIMIT = 1 << 14


# ==================== RAW POLYNOMIAL KERNELS ====================
# Representations are tuples of ints in [0, p), lowest degree first.

def _mulmod(a: Sequence[int], b: Sequence[int], modulus: Sequence[int], p: int) -> Tuple[int, ...]:
    k = len(modulus) - 1
    if k == 1:
        return ((a[0] * b[0]) % p,)
    prod = [0] * (2 * k - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    prod[i + j] += ai * bj
    for top in range(2 * k - 2, k - 1, -1):
        c = prod[top] % p
        if c:
            base = top - k
            for i in range(k):
                prod[base + i] -= c * modulus[i]
    return tuple(x % p for x in prod[:k])


def _powmod(a: Sequence[int], n: int, modulus: Sequence[int], p: int) -> Tuple[int, ...]:
    k = len(modulus) - 1
    result = (1,) + (0,) * (k - 1)
    base = tuple(a)
    while n:
        if n & 1:
            result = _mulmod(result, base, modulus, p)
        n >>= 1
        if n:
            base = _mulmod(base, base, modulus, p)
    return result


def _rep_to_index(rep: Sequence[int], p: int) -> int:
    index = 0
    for c in reversed(rep):
        index = index * p + c
    return index


def _index_to_rep(index: int, p: int, k: int) -> Tuple[int, ...]:
    digits = []
    for _ in range(k):
        index, r = divmod(index, p)
        digits.append(r)
    return tuple(digits)


def _poly_text(coeffs: Sequence[int], var: str = 'g') -> str:
    """Render a low-degree-first coefficient list as e.g. 2*g^2+g+1."""
    parts = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if not c:
            continue
        if i == 0:
            parts.append(str(c))
            continue
        mono = var if i == 1 else f"{var}^{i}"
        parts.append(mono if c == 1 else f"{c}*{mono}")
    return '+'.join(parts) if parts else '0'


@lru_cache(maxsize=None)
def smallest_irreducible(p: int, k: int) -> Tuple[int, ...]:
    """
    Lexicographically smallest monic irreducible of degree k over F_p.

    Candidates (c0, ..., c_{k-1}) are scanned with c0 most significant;
    the result is returned lowest degree first, leading 1 included.
    """
    if k == 1:
        return (0, 1)
    for tail in itertools.product(range(p), repeat=k):
        if tail[0] == 0:
            continue
        poly = tail + (1,)
        if gf_irreducible_p(ZZ.map(list(reversed(poly))), p, ZZ):
            return poly
    raise BudgetExceededError(f"No irreducible polynomial of degree {k} over F_{p}")


def is_irreducible(modulus: Sequence[int], p: int) -> bool:
    if len(modulus) == 2:
        return True
    return bool(gf_irreducible_p(ZZ.map(list(reversed(modulus))), p, ZZ))


# ==================== FIELD CONTEXT ====================

@dataclass
class _FieldTables:
    elements: List['FieldElem']
    exp: List[int]
    log: List[int]
    generator: int


@dataclass(frozen=True, eq=False)
class FieldCtx:
    """
    F_{p^k} = F_p[g]/(modulus). Contexts compare equal when p and modulus
    agree; the parent link records how this field was built from a smaller one.
    """

    p: int
    modulus: Tuple[int, ...]
    parent: Optional['FieldCtx'] = None
    parent_gen_image: Optional[Tuple[int, ...]] = None
    _cache: Dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def deg(self) -> int:
        return len(self.modulus) - 1

    @property
    def order(self) -> int:
        return self.p ** self.deg

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FieldCtx):
            return NotImplemented
        return self.p == other.p and self.modulus == other.modulus

    def __hash__(self):
        return hash((self.p, self.modulus))

    def __repr__(self):
        return f"FieldCtx({self.to_text()})"

    def to_text(self) -> str:
        return f"p={self.p},deg={self.deg},modulus={_poly_text(self.modulus)}"

    def to_dict(self) -> Dict:
        return {'p': self.p, 'deg': self.deg, 'modulus': _poly_text(self.modulus)}

    # ---- element construction ----

    def _raw(self, rep: Tuple[int, ...]) -> 'FieldElem':
        tables = self.tables
        if tables is not None:
            return tables.elements[_rep_to_index(rep, self.p)]
        return FieldElem(self, rep)

    def from_index(self, index: int) -> 'FieldElem':
        tables = self.tables
        if tables is not None:
            return tables.elements[index]
        return FieldElem(self, _index_to_rep(index, self.p, self.deg))

    def element(self, rep: Sequence[int]) -> 'FieldElem':
        rep = tuple(int(c) for c in rep)
        if len(rep) != self.deg or any(c < 0 or c >= self.p for c in rep):
            raise ValueError(f"Invalid representation {rep} for {self.to_text()}")
        return self._raw(rep)

    def scalar(self, n: int) -> 'FieldElem':
        return self._raw(((n % self.p),) + (0,) * (self.deg - 1))

    @property
    def zero(self) -> 'FieldElem':
        return self.scalar(0)

    @property
    def one(self) -> 'FieldElem':
        return self.scalar(1)

    @property
    def gen(self) -> 'FieldElem':
        if self.deg == 1:
            raise PreconditionError("The prime field has no generator symbol")
        return self._raw((0, 1) + (0,) * (self.deg - 2))

    def elements(self) -> Iterator['FieldElem']:
        """All elements in index order (0, 1, ..., p-1, g, ...)."""
        for index in range(self.order):
            yield self.from_index(index)

    def nonzero_elements(self) -> Iterator['FieldElem']:
        for index in range(1, self.order):
            yield self.from_index(index)

    # ---- exp/log tables ----

    @property
    def tables(self) -> Optional[_FieldTables]:
        if 'tables' not in self._cache:
            self._cache['tables'] = self._build_tables() if self.order <= TABLE_LIMIT else None
        return self._cache['tables']

    def _build_tables(self) -> _FieldTables:
        p, k, q = self.p, self.deg, self.order
        elements = [FieldElem(self, _index_to_rep(i, p, k)) for i in range(q)]
        gen_rep = primitive_rep(self)
        exp = [0] * (q - 1)
        log = [-1] * q
        rep = (1,) + (0,) * (k - 1)
        for i in range(q - 1):
            index = _rep_to_index(rep, p)
            exp[i] = index
            log[index] = i
            rep = _mulmod(rep, gen_rep, self.modulus, p)
        return _FieldTables(elements, exp, log, _rep_to_index(gen_rep, p))


def primitive_rep(ctx: FieldCtx) -> Tuple[int, ...]:
    """Smallest-index generator of the multiplicative group."""
    if 'primitive' in ctx._cache:
        return ctx._cache['primitive']
    q = ctx.order
    if q == 2:
        found = (1,)
    else:
        cofactors = [(q - 1) // r for r in factorint(q - 1)]
        one = (1,) + (0,) * (ctx.deg - 1)
        found = None
        for index in range(2, q):
            rep = _index_to_rep(index, ctx.p, ctx.deg)
            if all(_powmod(rep, c, ctx.modulus, ctx.p) != one for c in cofactors):
                found = rep
                break
    ctx._cache['primitive'] = found
    return found


# ==================== FIELD ELEMENTS ====================

class FieldElem:
    """Element of a FieldCtx stored as its coefficient vector in g."""

    __slots__ = ('ctx', 'rep', 'index')

    def __init__(self, ctx: FieldCtx, rep: Tuple[int, ...]):
        self.ctx = ctx
        self.rep = rep
        self.index = _rep_to_index(rep, ctx.p)

    def _coerce(self, other) -> 'FieldElem':
        if isinstance(other, FieldElem):
            if other.ctx is not self.ctx and other.ctx != self.ctx:
                raise FieldMismatchError(
                    f"Cannot combine elements of {self.ctx.to_text()} and {other.ctx.to_text()}")
            return other
        if isinstance(other, int):
            return self.ctx.scalar(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        ctx = self.ctx
        if ctx.p == 2:
            return ctx.from_index(self.index ^ other.index)
        p = ctx.p
        return ctx._raw(tuple((a + b) % p for a, b in zip(self.rep, other.rep)))

    __radd__ = __add__

    def __neg__(self):
        p = self.ctx.p
        if p == 2:
            return self
        return self.ctx._raw(tuple((-a) % p for a in self.rep))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        ctx = self.ctx
        if not self.index or not other.index:
            return ctx.zero
        tables = ctx.tables
        if tables is not None:
            return tables.elements[tables.exp[(tables.log[self.index] + tables.log[other.index]) % (ctx.order - 1)]]
        return FieldElem(ctx, _mulmod(self.rep, other.rep, ctx.modulus, ctx.p))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        ctx = self.ctx
        if not self.index:
            if n < 0:
                raise ZeroDivisionError("0 has no inverse in a field")
            return ctx.one if n == 0 else ctx.zero
        n %= ctx.order - 1
        tables = ctx.tables
        if tables is not None:
            return tables.elements[tables.exp[(tables.log[self.index] * n) % (ctx.order - 1)]]
        return FieldElem(ctx, _powmod(self.rep, n, ctx.modulus, ctx.p))

    def inverse(self) -> 'FieldElem':
        if not self.index:
            raise ZeroDivisionError("division by zero in a finite field")
        return self ** -1

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __eq__(self, other):
        if isinstance(other, int):
            return self.index == self.ctx.scalar(other).index
        if not isinstance(other, FieldElem):
            return NotImplemented
        return self.index == other.index and (self.ctx is other.ctx or self.ctx == other.ctx)

    def __hash__(self):
        return hash((self.ctx.p, self.ctx.modulus, self.index))

    def __bool__(self):
        return self.index != 0

    def __repr__(self):
        return f"FieldElem({self.to_text()} in {self.ctx.to_text()})"

    def __str__(self):
        return self.to_text()

    def to_text(self) -> str:
        return _poly_text(self.rep)

    def frobenius(self, i: int = 1) -> 'FieldElem':
        return frobenius(self, i)


# ==================== MODULE OPERATIONS ====================

def prime_field(p: int) -> FieldCtx:
    if not isprime(p):
        raise PreconditionError(f"Characteristic {p} is not prime")
    return _field_of_degree(p, 1)


@lru_cache(maxsize=None)
def _field_of_degree(p: int, k: int) -> FieldCtx:
    return FieldCtx(p, smallest_irreducible(p, k))


def field_of_degree(p: int, k: int, budget: Optional[Budget] = None) -> FieldCtx:
    """F_{p^k} built directly over F_p with the canonical modulus."""
    budget = budget or default_budget()
    if not isprime(p):
        raise PreconditionError(f"Characteristic {p} is not prime")
    if k < 1:
        raise PreconditionError(f"Extension degree must be >= 1, got {k}")
    if k > budget.max_field_degree:
        raise BudgetExceededError(f"Degree {k} exceeds max field degree {budget.max_field_degree}")
    return _field_of_degree(p, k)


def field_from_modulus(p: int, modulus: Sequence[int]) -> FieldCtx:
    modulus = tuple(int(c) % p for c in modulus)
    if not isprime(p):
        raise PreconditionError(f"Characteristic {p} is not prime")
    if len(modulus) < 2 or modulus[-1] != 1:
        raise PreconditionError(f"Modulus {_poly_text(modulus)} is not monic of positive degree")
    if len(modulus) == 2:
        return _field_of_degree(p, 1)
    if not is_irreducible(modulus, p):
        raise PreconditionError(f"Modulus {_poly_text(modulus)} is reducible over F_{p}")
    if modulus == smallest_irreducible(p, len(modulus) - 1):
        return _field_of_degree(p, len(modulus) - 1)
    return FieldCtx(p, modulus)


def arith(a: FieldElem, b: FieldElem, op: str) -> FieldElem:
    if a.ctx != b.ctx:
        raise FieldMismatchError(f"Context mismatch: {a.ctx.to_text()} vs {b.ctx.to_text()}")
    if op == 'add':
        return a + b
    if op == 'sub':
        return a - b
    if op == 'mul':
        return a * b
    if op == 'div':
        return a / b
    raise ValueError(f"Unknown field operation {op!r}")


def frobenius(a: FieldElem, i: int = 1) -> FieldElem:
    """a^(p^i)."""
    ctx = a.ctx
    return a ** (ctx.p ** (i % ctx.deg))


def inverse_frobenius(a: FieldElem, i: int = 1) -> FieldElem:
    """The unique b with b^(p^i) = a."""
    ctx = a.ctx
    return a ** (ctx.p ** ((ctx.deg - i % ctx.deg) % ctx.deg))


def _evaluate(poly: Sequence[int], x: FieldElem) -> FieldElem:
    acc = x.ctx.zero
    for c in reversed(poly):
        acc = acc * x + c
    return acc


def _find_root(poly: Sequence[int], target: FieldCtx) -> Tuple[int, ...]:
    """First root, in powers of a subfield generator, of an irreducible F_p-polynomial."""
    k = len(poly) - 1
    sub_order = target.p ** k
    omega = target._raw(primitive_rep(target))
    zeta = omega ** ((target.order - 1) // (sub_order - 1))
    candidate = target.one
    for _ in range(sub_order - 1):
        if not _evaluate(poly, candidate):
            return candidate.rep
        candidate = candidate * zeta
    raise FieldMismatchError(f"{_poly_text(poly)} has no root in {target.to_text()}")


def extend(ctx: FieldCtx, m: int, budget: Optional[Budget] = None) -> FieldCtx:
    """Degree-m extension of ctx, with the image of ctx's generator recorded."""
    if m < 1:
        raise PreconditionError(f"Extension factor must be >= 1, got {m}")
    if m == 1:
        return ctx
    budget = budget or default_budget()
    new_deg = ctx.deg * m
    if new_deg > budget.max_field_degree:
        raise BudgetExceededError(
            f"Extension to degree {new_deg} exceeds max field degree {budget.max_field_degree}",
            {'p': ctx.p, 'degree': new_deg})
    known = ctx._cache.setdefault('extensions', {})
    if m in known:
        return known[m]
    modulus = smallest_irreducible(ctx.p, new_deg)
    image = None
    if ctx.deg > 1:
        image = _find_root(ctx.modulus, _field_of_degree(ctx.p, new_deg))
    extended = FieldCtx(ctx.p, modulus, parent=ctx, parent_gen_image=image)
    known[m] = extended
    logger.info(f"Extended {ctx.to_text()} to {extended.to_text()}")
    return extended


def _chain_to(source: FieldCtx, target: FieldCtx) -> Optional[List[FieldCtx]]:
    path = []
    node = target
    while node is not None and node != source:
        path.append(node)
        node = node.parent
    return None if node is None else list(reversed(path))


def is_subfield(source: FieldCtx, target: FieldCtx) -> bool:
    """F_{p^a} sits in F_{p^b} exactly when a divides b."""
    return source.p == target.p and target.deg % source.deg == 0


def shares_tower(first: FieldCtx, second: FieldCtx) -> bool:
    """Equal fields, or one reached from the other through recorded parent links."""
    if first.p != second.p:
        return False
    if first == second or first.deg == 1 or second.deg == 1:
        return True
    return _chain_to(first, second) is not None or _chain_to(second, first) is not None


def _gen_powers(child: FieldCtx) -> List[FieldElem]:
    powers = child._cache.get('gen_powers')
    if powers is None:
        gamma = child._raw(child.parent_gen_image)
        powers = [child.one]
        for _ in range(child.parent.deg - 1):
            powers.append(powers[-1] * gamma)
        child._cache['gen_powers'] = powers
    return powers


def _root_powers(source: FieldCtx, target: FieldCtx) -> List[FieldElem]:
    """Powers of the first root of source's modulus in target, memoized on target."""
    known = target._cache.setdefault('root_powers', {})
    key = (source.p, source.modulus)
    if key not in known:
        gamma = target._raw(_find_root(source.modulus, target))
        powers = [target.one]
        for _ in range(source.deg - 1):
            powers.append(powers[-1] * gamma)
        known[key] = powers
    return known[key]


def _combine(rep: Sequence[int], powers: List[FieldElem], ctx: FieldCtx) -> FieldElem:
    acc = ctx.zero
    for c, power in zip(rep, powers):
        if c:
            acc = acc + power * c
    return acc


def embed(a: FieldElem, target: FieldCtx) -> FieldElem:
    """
    Image of a in target. A recorded chain of parent extensions is followed
    when there is one; otherwise a's generator goes to the first root of its
    modulus in target, which is the image extend() records for one step.
    """
    source = a.ctx
    if source is target:
        return a
    if source == target:
        return target._raw(a.rep)
    if source.p != target.p:
        raise FieldMismatchError(f"Characteristics differ: {source.p} vs {target.p}")
    if source.deg == 1:
        return target.scalar(a.rep[0])
    if target.deg % source.deg:
        raise FieldMismatchError(
            f"{source.to_text()} is not a subfield of {target.to_text()}: "
            f"degree {source.deg} does not divide {target.deg}")
    path = _chain_to(source, target)
    if path is None:
        return _combine(a.rep, _root_powers(source, target), target)
    value = a
    for child in path:
        if child.parent.deg == 1:
            value = child.scalar(value.rep[0])
            continue
        value = _combine(value.rep, _gen_powers(child), child)
    return value


def common_context(first: FieldCtx, second: FieldCtx) -> FieldCtx:
    if first == second:
        return first
    if is_subfield(first, second):
        return second
    if is_subfield(second, first):
        return first
    if first.p != second.p:
        raise FieldMismatchError(f"Characteristics differ: {first.p} vs {second.p}")
    raise FieldMismatchError(
        f"No common field for {first.to_text()} and {second.to_text()}: "
        f"extend to degree {math.lcm(first.deg, second.deg)} first")


# ==================== ADDITIVE EQUATIONS ====================

def _solve_mod_p(columns: List[Tuple[int, ...]], rhs: Tuple[int, ...], p: int) -> Optional[List[int]]:
    """One solution x of sum x_i * columns[i] = rhs over F_p, free variables set to 0."""
    n_rows, n_cols = len(rhs), len(columns)
    rows = [[columns[c][r] for c in range(n_cols)] + [rhs[r]] for r in range(n_rows)]
    pivots = []
    row = 0
    for col in range(n_cols):
        pivot = next((r for r in range(row, n_rows) if rows[r][col] % p), None)
        if pivot is None:
            continue
        rows[row], rows[pivot] = rows[pivot], rows[row]
        inv = pow(rows[row][col], p - 2, p)
        rows[row] = [(v * inv) % p for v in rows[row]]
        for r in range(n_rows):
            if r != row and rows[r][col] % p:
                factor = rows[r][col]
                rows[r] = [(v - factor * w) % p for v, w in zip(rows[r], rows[row])]
        pivots.append(col)
        row += 1
        if row == n_rows:
            break
    if any(rows[r][-1] % p for r in range(row, n_rows)):
        return None
    solution = [0] * n_cols
    for r, col in enumerate(pivots):
        solution[col] = rows[r][-1]
    return solution


def additive_value(terms: Mapping[int, FieldElem], x: FieldElem) -> FieldElem:
    """sum_e a_e * x^(p^e)."""
    acc = x.ctx.zero
    for level, coeff in terms.items():
        acc = acc + coeff * (x ** (x.ctx.p ** level))
    return acc


def _solve_additive_in(ctx: FieldCtx, terms: Dict[int, FieldElem], constant: FieldElem) -> Optional[FieldElem]:
    if ctx.deg == 1:
        slope = ctx.zero
        for coeff in terms.values():
            slope = slope + coeff
        if not slope:
            return ctx.zero if not constant else None
        return -constant / slope
    basis = [ctx._raw(tuple(1 if i == j else 0 for j in range(ctx.deg))) for i in range(ctx.deg)]
    columns = [additive_value(terms, b).rep for b in basis]
    solution = _solve_mod_p(columns, (-constant).rep, ctx.p)
    if solution is None:
        return None
    return ctx._raw(tuple(solution))


def solve_additive(terms: Mapping[int, FieldElem], constant: FieldElem,
                   budget: Optional[Budget] = None) -> Tuple[FieldElem, FieldCtx]:
    """
    Root X of sum_e a_e X^(p^e) + b = 0.

    The left side is F_p-linear on every F_{p^D}, so each candidate field is
    searched by linear algebra; extensions of degree 2, 3, ... are tried
    until a root appears or the degree budget runs out.
    """
    budget = budget or default_budget()
    live = {level: c for level, c in terms.items() if c}
    if not live:
        raise PreconditionError("Additive equation has no nonzero coefficient")
    base = constant.ctx
    for coeff in live.values():
        base = common_context(base, coeff.ctx)

    r = 1
    while base.deg * r <= budget.max_field_degree:
        ctx = extend(base, r, budget)
        coeffs = {level: embed(c, ctx) for level, c in live.items()}
        b = embed(constant, ctx)
        root = _solve_additive_in(ctx, coeffs, b)
        if root is not None:
            if additive_value(coeffs, root) + b:
                raise PreconditionError("Additive root failed substitution check")
            return root, ctx
        r += 1

    raise BudgetExceededError(
        f"No root of additive equation within degree {budget.max_field_degree} over F_{base.p}",
        {'levels': sorted(live), 'base_field': base.to_text()})


def search_additive_root(terms: Mapping[int, FieldElem], constant: FieldElem,
                         budget: Optional[Budget] = None) -> Optional[FieldElem]:
    """Exhaustive root search in the coefficients' own field (no extension)."""
    budget = budget or default_budget()
    ctx = constant.ctx
    for coeff in terms.values():
        ctx = common_context(ctx, coeff.ctx)
    if ctx.order > budget.search_limit:
        raise BudgetExceededError(f"Field of size {ctx.order} exceeds search limit {budget.search_limit}")
    coeffs = {level: embed(c, ctx) for level, c in terms.items()}
    b = embed(constant, ctx)
    for x in ctx.elements():
        if not (additive_value(coeffs, x) + b):
            return x
    return None


def nth_root(a: FieldElem, n: int, budget: Optional[Budget] = None) -> Tuple[FieldElem, FieldCtx]:
    """Some x with x^n = a, extending the field when the base has none."""
    budget = budget or default_budget()
    ctx = a.ctx
    if n < 1:
        raise PreconditionError(f"Root index must be >= 1, got {n}")
    if not a:
        return a, ctx
    p = ctx.p
    s = 0
    while n % p == 0:
        n //= p
        s += 1
    b = inverse_frobenius(a, s) if s else a
    if n == 1:
        return b, ctx

    r = 1
    while ctx.deg * r <= budget.max_field_degree:
        field_r = extend(ctx, r, budget)
        target = embed(b, field_r)
        q = field_r.order
        g = math.gcd(n, q - 1)
        if target ** ((q - 1) // g) == field_r.one:
            root = _nth_root_in(field_r, target, n, g, budget)
            return root, field_r
        r += 1
    raise BudgetExceededError(f"No {n}-th root of {a.to_text()} within the degree budget")


def _nth_root_in(ctx: FieldCtx, target: FieldElem, n: int, g: int, budget: Budget) -> FieldElem:
    tables = ctx.tables
    q1 = ctx.order - 1
    if tables is not None:
        log_b = tables.log[target.index]
        reduced = q1 // g
        x = ((log_b // g) * pow(n // g, -1, reduced)) % reduced if reduced > 1 else 0
        root = tables.elements[tables.exp[x]]
    elif ctx.order <= budget.search_limit:
        root = next(x for x in ctx.nonzero_elements() if x ** n == target)
    else:
        raise BudgetExceededError(f"Root extraction in a field of size {ctx.order} exceeds the search limit")
    if root ** n != target:
        raise PreconditionError("n-th root failed substitution check")
    return root


# ==================== TEXT FORMS ====================

class ExpressionParser:
    """
    Recursive-descent parser for field elements in g and, with allow_x,
    sums of monomials coeff*x^n.
    """

    def __init__(self, text: str, ctx: FieldCtx, allow_x: bool = False):
        self.text = text
        self.ctx = ctx
        self.allow_x = allow_x
        self.pos = 0

    def error(self, message: str, pos: Optional[int] = None):
        raise ParseError(message, self.text, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ''

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"Expected {ch!r}")
        self.pos += 1

    def integer(self) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("Expected an integer")
        return int(self.text[start:self.pos])

    def at_end(self) -> bool:
        return self.peek() == ''

    # ---- elements ----

    def element_expr(self) -> FieldElem:
        negate = False
        if self.peek() in ('+', '-'):
            negate = self.text[self.pos] == '-'
            self.pos += 1
        value = self.element_term()
        if negate:
            value = -value
        while self.peek() in ('+', '-'):
            sign = self.text[self.pos]
            self.pos += 1
            term = self.element_term()
            value = value + term if sign == '+' else value - term
        return value

    def element_term(self) -> FieldElem:
        value = self.element_factor()
        while self.peek() == '*':
            self.pos += 1
            value = value * self.element_factor()
        return value

    def element_factor(self) -> FieldElem:
        ch = self.peek()
        start = self.pos
        if ch == '(':
            self.pos += 1
            value = self.element_expr()
            self.expect(')')
            return value
        if ch.isdigit():
            n = self.integer()
            if n >= self.ctx.p:
                self.error(f"Coefficient {n} lies outside F_{self.ctx.p}", start)
            return self.ctx.scalar(n)
        if ch == 'g':
            if self.ctx.deg == 1:
                self.error("Unknown generator symbol 'g' in a prime field", start)
            self.pos += 1
            power = 1
            if self.peek() == '^':
                self.pos += 1
                power = self.integer()
            return self.ctx.gen ** power
        if ch == 'x' and self.allow_x:
            self.error("Variable x is not allowed inside a coefficient", start)
        self.error(f"Unexpected symbol {ch!r}" if ch else "Unexpected end of input", start)

    def parse_element(self) -> FieldElem:
        value = self.element_expr()
        if not self.at_end():
            self.error(f"Trailing input {self.text[self.pos:]!r}")
        return value

    # ---- monomial sums ----

    def monomial(self) -> Tuple[int, FieldElem]:
        coeff = self.ctx.one
        exponent = None
        while True:
            ch = self.peek()
            start = self.pos
            if ch == 'x':
                if exponent is not None:
                    self.error("Repeated variable x in one term", start)
                self.pos += 1
                exponent = 1
                if self.peek() == '^':
                    self.pos += 1
                    exponent = self.integer()
            else:
                coeff = coeff * self.element_factor()
            if self.peek() != '*':
                break
            self.pos += 1
        return (0 if exponent is None else exponent), coeff

    def parse_terms(self) -> List[Tuple[int, FieldElem, int]]:
        """(exponent, coefficient, position) per top-level term."""
        terms = []
        sign = '+'
        if self.peek() in ('+', '-'):
            sign = self.text[self.pos]
            self.pos += 1
        while True:
            self.skip()
            start = self.pos
            exponent, coeff = self.monomial()
            terms.append((exponent, -coeff if sign == '-' else coeff, start))
            ch = self.peek()
            if ch == '':
                break
            if ch not in ('+', '-'):
                self.error(f"Unexpected symbol {ch!r}")
            sign = ch
            self.pos += 1
        return terms


def parse_element(text: str, ctx: FieldCtx) -> FieldElem:
    if not text.strip():
        raise ParseError("Empty field element", text, 0)
    return ExpressionParser(text, ctx).parse_element()


def parse_field(text: str, budget: Optional[Budget] = None) -> FieldCtx:
    """Parse 'p=2,deg=2,modulus=g^2+g+1' (modulus optional)."""
    values = {}
    for part in text.split(','):
        if '=' not in part:
            raise ParseError(f"Expected key=value in field spec, got {part!r}", text, text.find(part))
        key, value = part.split('=', 1)
        values[key.strip()] = value.strip()
    try:
        p = int(values['p'])
        deg = int(values.get('deg', '1'))
    except (KeyError, ValueError):
        raise ParseError("Field spec needs integer p and deg", text, 0)
    return field_from_spec(p, deg, values.get('modulus'), budget)


def field_from_spec(p: int, deg: int = 1, modulus: Optional[str] = None,
                    budget: Optional[Budget] = None) -> FieldCtx:
    if not modulus:
        return field_of_degree(p, deg, budget)
    if not isprime(p):
        raise PreconditionError(f"Characteristic {p} is not prime")
    coeffs = _parse_int_poly(modulus, p)
    if len(coeffs) - 1 != deg:
        raise ParseError(f"Modulus {modulus!r} does not have degree {deg}", modulus, 0)
    try:
        return field_from_modulus(p, coeffs)
    except PreconditionError as e:
        raise ParseError(e.message, modulus, 0)


def _parse_int_poly(text: str, p: int) -> List[int]:
    """Integer-coefficient polynomial in g, reduced mod p, lowest degree first."""
    coeffs: Dict[int, int] = {}
    for raw in text.replace('-', '+-').split('+'):
        term = raw.strip().replace(' ', '')
        if not term:
            continue
        sign = -1 if term.startswith('-') else 1
        term = term.lstrip('-')
        try:
            if 'g' in term:
                head, _, tail = term.partition('g')
                head = head.rstrip('*')
                c = int(head) if head else 1
                exponent = int(tail.lstrip('^')) if tail else 1
            else:
                c, exponent = int(term), 0
        except ValueError:
            raise ParseError(f"Cannot read modulus term {raw.strip()!r}", text, text.find(raw.strip()))
        coeffs[exponent] = coeffs.get(exponent, 0) + sign * c
    if not coeffs:
        raise ParseError("Empty modulus", text, 0)
    top = max(coeffs)
    return [coeffs.get(i, 0) % p for i in range(top + 1)]
