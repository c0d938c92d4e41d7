"""
Jet Orbit Oracle
Version: 1.0
Purpose: Exhaustive orbits of truncated coordinate changes on jet spaces over small finite fields, used as ground truth for the engine
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

from charp_config import Budget, default_budget
from charp_errors import BudgetExceededError, CharpError, FieldMismatchError, InvariantViolation, PreconditionError
from charp_field import FieldCtx, FieldElem, common_context, embed, extend, shares_tower
from charp_profile import profile_of_support, valuation
from charp_reduce import NormalFormResult, normal_form
from charp_series import CoordChange, Series, compose, power_table, unify

logger = logging.getLogger(__name__)


class UnionFind:
    """Disjoint sets with union by rank and path compression."""

    def __init__(self, items: Iterable[int]):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in self.parent}
        self.size = {x: 1 for x in self.parent}

    def find(self, x: int) -> int:
        y = self.parent[x]
        if self.parent[y] != y:
            y = self.parent[x] = self.find(y)
        return y

    def union(self, x: int, y: int):
        x, y = self.find(x), self.find(y)
        if x == y:
            return
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        elif self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        self.parent[y] = x
        self.size[x] += self.size[y]
        del self.rank[y]

    def roots(self) -> List[int]:
        return sorted(self.rank)

    def groups(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return out

    def __len__(self):
        return len(self.rank)


# ==================== DATA TYPES ====================

@dataclass
class OrbitClass:
    representative: int
    members: List[int]
    invariants: Dict[str, Any]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class OrbitTable:
    field: FieldCtx
    jet_order: int
    group: List[CoordChange]
    classes: List[OrbitClass]
    orbit_of: Dict[int, int]
    witness: Dict[int, int]

    # ---- jet indexing ----

    def jet_series(self, index: int) -> Series:
        return Series(self.field, self.jet_order, dict(enumerate(decode_jet(self.field, self.jet_order, index), 1)))

    def index_of(self, f: Series) -> int:
        if f.trunc < self.jet_order:
            raise PreconditionError(f"Jet of order {self.jet_order} needs trunc >= {self.jet_order}, got {f.trunc}")
        if f.constant_term():
            raise PreconditionError("Jets in the orbit table have no constant term")
        if common_context(f.ctx, self.field) != self.field:
            raise FieldMismatchError(f"Series over {f.ctx.to_text()} does not live in {self.field.to_text()}")
        f = f.embed(self.field)
        return encode_jet(self.field, [f.coeff(i) for i in range(1, self.jet_order + 1)])

    def representative_of(self, f: Series) -> int:
        return self.orbit_of[self.index_of(f)]

    def same_orbit(self, f: Series, g: Series) -> bool:
        return self.representative_of(f) == self.representative_of(g)

    def witness_for(self, f: Series) -> CoordChange:
        """phi with rep o phi = f at jet level."""
        return self.group[self.witness[self.index_of(f)]]

    def class_of(self, f: Series) -> OrbitClass:
        rep = self.representative_of(f)
        return next(c for c in self.classes if c.representative == rep)

    # ---- reports ----

    def to_dict(self) -> Dict[str, Any]:
        return {
            'field': self.field.to_text(),
            'jet': self.jet_order,
            'group_size': len(self.group),
            'orbits': len(self.classes),
            'classes': [
                {
                    'representative': self.jet_series(c.representative).to_text(),
                    'size': c.size,
                    'invariants': c.invariants,
                }
                for c in self.classes
            ],
        }

    def csv_rows(self) -> List[List[Any]]:
        rows = [['representative', 'size', 'm', 'e', 'q', 'k', 'd', 'mu']]
        for c in self.classes:
            inv = c.invariants
            rows.append([self.jet_series(c.representative).to_text(), c.size] +
                        [inv.get(key, '') for key in ('m', 'e', 'q', 'k', 'd', 'mu')])
        return rows


@dataclass
class EquivalenceResult:
    equivalent: bool
    field: FieldCtx
    witness: Optional[CoordChange] = None

    def to_dict(self) -> Dict[str, Any]:
        if self.equivalent:
            return {'equivalent': True, 'field': self.field.to_text(), 'phi': self.witness.to_pairs()}
        return {'equivalent': False, 'field': self.field.to_text(),
                'message': f"not equivalent over F_{self.field.order}"}


@dataclass
class ValidationReport:
    field: str
    jet_order: int
    m_filter: Optional[int]
    orbits: int = 0
    jets_checked: int = 0
    base_field_hits: int = 0
    extension_hits: int = 0
    unresolved: List[str] = field(default_factory=list)
    uniqueness_orbits: int = 0
    invariant_classes: int = 0

    @property
    def passed(self) -> bool:
        return not self.unresolved

    def to_dict(self) -> Dict[str, Any]:
        return {
            'field': self.field,
            'jet': self.jet_order,
            'm_filter': self.m_filter,
            'orbits': self.orbits,
            'jets_checked': self.jets_checked,
            'base_field_hits': self.base_field_hits,
            'extension_hits': self.extension_hits,
            'unresolved': self.unresolved,
            'uniqueness_orbits': self.uniqueness_orbits,
            'invariant_classes': self.invariant_classes,
        }


# ==================== JET CODING ====================

def encode_jet(ctx: FieldCtx, coeffs: List[FieldElem]) -> int:
    """(c_1, ..., c_d) -> integer with c_1 as the most significant digit."""
    index = 0
    for c in coeffs:
        index = index * ctx.order + c.index
    return index


def decode_jet(ctx: FieldCtx, d: int, index: int) -> List[FieldElem]:
    digits = []
    for _ in range(d):
        index, r = divmod(index, ctx.order)
        digits.append(ctx.from_index(r))
    return list(reversed(digits))


def jet_invariants(f: Series) -> Dict[str, Any]:
    """m always; the full profile only when the jet shows an exponent prime to p."""
    support = f.support()
    p = f.ctx.p
    if not any(valuation(n, p) == 0 for n in support):
        return {'m': support[0], 'certified': False}
    prof = profile_of_support(support, p)
    return {'m': prof.m, 'e': prof.e, 'q': prof.q, 'k': prof.kcap, 'd': prof.d, 'mu': prof.q - 1,
            'certified': True}


# ==================== OPERATIONS ====================

def _check_budget(ctx: FieldCtx, d: int, budget: Budget):
    if d < 1:
        raise PreconditionError(f"Jet order must be >= 1, got {d}")
    if ctx.order ** d > budget.group_budget:
        raise BudgetExceededError(
            f"|F|^d = {ctx.order}^{d} exceeds group budget {budget.group_budget}",
            {'field': ctx.to_text(), 'd': d, 'budget': budget.group_budget},
        )


def enumerate_group(ctx: FieldCtx, d: int, budget: Optional[Budget] = None) -> List[CoordChange]:
    """All a1*x + ... + ad*x^d with a1 != 0; (|F|-1)*|F|^(d-1) of them."""
    budget = budget or default_budget()
    _check_budget(ctx, d, budget)
    elements = list(ctx.elements())
    group = []
    for a1 in elements[1:]:
        for tail in itertools.product(elements, repeat=d - 1):
            group.append(CoordChange.from_coeffs(ctx, (a1,) + tail, d))
    return group


def _act(vec: List[FieldElem], powers: List[List[FieldElem]], d: int, zero: FieldElem) -> List[FieldElem]:
    out = [zero] * d
    for n in range(1, d + 1):
        c = vec[n - 1]
        if not c:
            continue
        row = powers[n]
        for t in range(n, d + 1):
            if row[t]:
                out[t - 1] = out[t - 1] + c * row[t]
    return out


def orbit_partition(ctx: FieldCtx, d: int, budget: Optional[Budget] = None) -> OrbitTable:
    """
    Scan jets in index order; the first unvisited jet is its orbit's minimum,
    and its images under the whole group are exactly that orbit.
    """
    budget = budget or default_budget()
    group = enumerate_group(ctx, d, budget)
    tables = [power_table(phi.series, d, d) for phi in group]
    total = ctx.order ** d
    zero = ctx.zero
    uf = UnionFind(range(1, total))
    visited = bytearray(total)
    witness: Dict[int, int] = {}

    for index in range(1, total):
        if visited[index]:
            continue
        vec = decode_jet(ctx, d, index)
        for gi, powers in enumerate(tables):
            image = encode_jet(ctx, _act(vec, powers, d, zero))
            if not visited[image]:
                visited[image] = 1
                witness[image] = gi
            uf.union(index, image)

    classes = []
    orbit_of: Dict[int, int] = {}
    for members in uf.groups().values():
        members.sort()
        rep = members[0]
        for x in members:
            orbit_of[x] = rep
        rep_series = Series(ctx, d, dict(enumerate(decode_jet(ctx, d, rep), 1)))
        classes.append(OrbitClass(rep, members, jet_invariants(rep_series)))
    classes.sort(key=lambda c: c.representative)
    logger.info(f"Orbit partition over {ctx.to_text()} at jet order {d}: {len(classes)} orbits, group size {len(group)}")
    return OrbitTable(ctx, d, group, classes, orbit_of, witness)


def check_equivalence(f: Series, g: Series, ctx: FieldCtx, d: int,
                      budget: Optional[Budget] = None) -> EquivalenceResult:
    """Search every truncated change over ctx for j^d(f o phi) = j^d(g)."""
    budget = budget or default_budget()
    ctx = common_context(common_context(ctx, f.ctx), g.ctx)
    if min(f.trunc, g.trunc) < d:
        raise PreconditionError(f"Both series need trunc >= {d}")
    f, g = f.embed(ctx).jet(d), g.embed(ctx).jet(d)
    for phi in enumerate_group(ctx, d, budget):
        if compose(f, phi).coeffs == g.coeffs:
            return EquivalenceResult(True, ctx, phi)
    return EquivalenceResult(False, ctx)


def _extension_check(f: Series, nf: Series, base: FieldCtx, d: int, budget: Budget) -> bool:
    """Equivalence of two jets over the normal form's field or its quadratic extension."""
    candidates = [base]
    try:
        candidates.append(extend(base, 2, budget))
    except BudgetExceededError:
        pass
    for ctx in candidates:
        if ctx.order ** d > budget.group_budget:
            logger.warning(f"Skipping extension check over {ctx.to_text()}: group over budget")
            continue
        if check_equivalence(f, nf, ctx, d, budget).equivalent:
            return True
    return False


def validate_classification(ctx: FieldCtx, d: int, m_filter: Optional[int] = None,
                            budget: Optional[Budget] = None,
                            table: Optional[OrbitTable] = None) -> ValidationReport:
    """
    For every jet with e=0 and d(f) <= d: the engine's normal form shares the
    jet's orbit, orbits at m=p carry one lambda-vector, and invariants are
    constant on orbits. Violations raise InvariantViolation.
    """
    budget = budget or default_budget()
    table = table or orbit_partition(ctx, d, budget)
    report = ValidationReport(ctx.to_text(), d, m_filter, orbits=len(table.classes))
    p = ctx.p
    lambdas_by_orbit: Dict[int, Tuple[Tuple[int, ...], NormalFormResult, int]] = {}

    for cls in table.classes:
        for index in cls.members:
            f = table.jet_series(index)
            inv = jet_invariants(f)
            if inv != cls.invariants:
                raise InvariantViolation(
                    f"Invariants differ inside an orbit: {f.to_text()} vs representative",
                    {'jet': f.to_text(), 'invariants': inv, 'representative': cls.invariants},
                )
            if not inv['certified'] or inv['d'] > d:
                continue
            if m_filter is not None and inv['m'] != m_filter:
                continue

            prof_dbar = 2 * inv['q'] - inv['m']
            try:
                result = normal_form(f.as_polynomial(max(d, prof_dbar)), budget)
            except CharpError as e:
                raise InvariantViolation(f"Engine failed on {f.to_text()}: {e}", {'jet': f.to_text()})
            report.jets_checked += 1
            nf_jet = result.series.as_polynomial(d)

            if result.ctx == ctx and table.representative_of(nf_jet) == cls.representative:
                report.base_field_hits += 1
            elif _extension_check(f, nf_jet, result.ctx, d, budget):
                report.extension_hits += 1
            else:
                logger.warning(f"Normal form {nf_jet.to_text()} of {f.to_text()} not matched within the field budget")
                report.unresolved.append(f.to_text())

            if inv['m'] == p:
                key = tuple(sorted(result.lambdas))
                seen = lambdas_by_orbit.get(cls.representative)
                if seen is None:
                    lambdas_by_orbit[cls.representative] = (key, result, index)
                    continue
                seen_key, seen_result, seen_index = seen
                if not shares_tower(seen_result.ctx, result.ctx):
                    logger.warning(f"Normal forms of {f.to_text()} and its orbit mate live in unrelated towers")
                    report.unresolved.append(f.to_text())
                    continue
                a, b = unify(seen_result.series, result.series)
                if seen_key != key or a.coeffs != b.coeffs:
                    raise InvariantViolation(
                        "Jets in one orbit have different lambda-vectors at m=p",
                        {'first': table.jet_series(seen_index).to_text(), 'second': f.to_text(),
                         'first_nf': seen_result.series.to_text(), 'second_nf': result.series.to_text()},
                    )
        report.invariant_classes += 1

    report.uniqueness_orbits = len(lambdas_by_orbit)
    logger.info(f"Validated {report.jets_checked} jets over {ctx.to_text()} at order {d}: "
                f"{report.base_field_hits} in-field, {report.extension_hits} via extension, "
                f"{len(report.unresolved)} unresolved")
    return report
