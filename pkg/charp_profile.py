"""
Support Profile Calculator
Version: 1.0
Purpose: Combinatorial invariants (m, e, q, k, dbar, d) and Lambda-sets of support sets, with the case dispatch and bound checks
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from charp_config import Budget, default_budget
from charp_errors import BudgetExceededError, InvariantViolation, PreconditionError, TruncationError
from charp_series import Series, p_valuation

logger = logging.getLogger(__name__)


class CaseTag(str, Enum):
    """Which branch of the Lambda dispatch a support falls into"""
    CASE0 = "Case0"
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"
    CASE4 = "Case4"
    CASE5 = "Case5"


class BasicInvariants(NamedTuple):
    m: int
    e: int
    q: int
    kcap: int
    dbar: int
    d: int


@dataclass
class SubProfile:
    """Delta_0 = {n in Delta : n < q} with its valuation e_0 and q_0."""
    delta0: List[int]
    e0: int
    q0: int
    kcap0: int


@dataclass
class SupportProfile:
    """Full invariant bundle of a support set"""
    delta: List[int]
    p: int
    m: int
    e: int
    q: int
    kcap: int
    dbar: int
    d: int
    case_tag: CaseTag
    lambda_bar: List[int] = field(default_factory=list)
    lambda0: List[int] = field(default_factory=list)
    lambda1: List[int] = field(default_factory=list)
    lambda1_prime: List[int] = field(default_factory=list)
    lambda1_dblprime: List[int] = field(default_factory=list)
    lambda_set: List[int] = field(default_factory=list)
    sub: Optional[SubProfile] = None

    @property
    def mu_finite(self) -> bool:
        return self.e == 0

    @property
    def mu(self):
        return self.q - 1 if self.e == 0 else float('inf')

    def basic(self) -> BasicInvariants:
        return BasicInvariants(self.m, self.e, self.q, self.kcap, self.dbar, self.d)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        return {
            'm': self.m,
            'e': self.e,
            'q': self.q,
            'k': self.kcap,
            'dbar': self.dbar,
            'd': self.d,
            'case': self.case_tag.value,
            'lambda': self.lambda_set,
            'lambda_bar': self.lambda_bar,
            'lambda0': self.lambda0,
            'lambda1': self.lambda1,
            'lambda1_prime': self.lambda1_prime,
            'lambda1_dblprime': self.lambda1_dblprime,
            'sub': data['sub'],
            'support': self.delta,
            'p': self.p,
        }


@dataclass
class BoundReport:
    delta: List[int]
    p: int
    q: int
    lambda_count: int
    bound: int
    equality_required: bool
    ok: bool
    case: str = ""
    known_gap: bool = False

    @property
    def unexplained(self) -> bool:
        return not self.ok and not self.known_gap

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class IdentityCheck:
    """floor(d / p^e(n)) against k + n/p^e(n) - 1 for one witness n of k."""
    n: int
    lhs: int
    rhs: int

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


# ==================== HELPERS ====================

@lru_cache(maxsize=65536)
def valuation(n: int, p: int) -> int:
    return p_valuation(n, p)


def _normalize(delta: Iterable[int]) -> Tuple[int, ...]:
    ds = tuple(sorted(set(delta)))
    if not ds:
        raise PreconditionError("Support set is empty")
    if ds[0] < 1:
        raise PreconditionError(f"Support set must contain only positive integers, got {ds[0]}")
    return ds


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def k_delta(n: int, q: int, e: int, p: int) -> int:
    """ceil((q - n) / (p^e(n) - p^e)) for n < q."""
    return _ceil_div(q - n, p ** valuation(n, p) - p ** e)


# ==================== INVARIANTS ====================

def basic_invariants(delta: Iterable[int], p: int) -> BasicInvariants:
    ds = _normalize(delta)
    m = ds[0]
    e = min(valuation(n, p) for n in ds)
    q = next(n for n in ds if valuation(n, p) == e)
    if m == q:
        kcap = 1
    else:
        kcap = max(k_delta(n, q, e, p) for n in ds if n < q)
    return BasicInvariants(m, e, q, kcap, 2 * q - m, q + p ** e * (kcap - 1))


def lambda_bar(delta: Iterable[int], p: int) -> List[int]:
    m, e, q, _, dbar, _ = basic_invariants(delta, p)
    out = {n for n in range(m + 1, dbar + 1) if valuation(n, p) > e}
    out.add(q)
    return sorted(out)


def _lambda_parts(ds: Tuple[int, ...], p: int, inv: BasicInvariants) -> Dict[str, Any]:
    m, e, q, kcap, _, d = inv
    em = valuation(m, p)
    parts: Dict[str, Any] = {
        'lambda0': [], 'lambda1': [], 'lambda1_prime': [], 'lambda1_dblprime': [], 'sub': None,
    }
    window = range(q, d + 1)
    parts['lambda1'] = list(window)
    parts['lambda1_prime'] = [n for n in window if valuation(n, p) != 1]
    parts['lambda1_dblprime'] = [n for n in window if valuation(n, p) == 0]

    if em == 0:
        parts['case'] = CaseTag.CASE0
        parts['lambda'] = []
        return parts

    delta0 = [n for n in ds if n < q]
    inv0 = basic_invariants(delta0, p)
    e0, q0 = inv0.e, inv0.q
    parts['sub'] = SubProfile(delta0, e0, q0, inv0.kcap)
    lam0 = [n for n in lambda_bar(delta0, p) if n < q]
    parts['lambda0'] = lam0

    if em == e0:
        parts['case'] = CaseTag.CASE1
        parts['lambda'] = [n for n in window if valuation(n, p) < em]
    elif e0 > 1:
        parts['case'] = CaseTag.CASE2
        parts['lambda'] = sorted(set(lam0) | set(parts['lambda1']))
    elif kcap > k_delta(q0, q, e, p):
        parts['case'] = CaseTag.CASE3
        parts['lambda'] = sorted(set(lam0) | set(parts['lambda1']))
    elif inv0.kcap >= (q - q0) // p:
        parts['case'] = CaseTag.CASE4
        parts['lambda'] = sorted(set(lam0) | set(parts['lambda1_prime']))
    else:
        parts['case'] = CaseTag.CASE5
        parts['lambda'] = sorted(set(lam0) | set(parts['lambda1_dblprime']))
    return parts


def lambda_of(delta: Iterable[int], p: int) -> Tuple[List[int], CaseTag]:
    """Lambda(Delta) and its case tag; Delta must have e(Delta) = 0."""
    ds = _normalize(delta)
    inv = basic_invariants(ds, p)
    if inv.e != 0:
        raise PreconditionError(f"Lambda is defined directly only for e(Delta)=0, got e={inv.e}; compress first")
    parts = _lambda_parts(ds, p, inv)
    return parts['lambda'], parts['case']


def profile_of_support(delta: Iterable[int], p: int) -> SupportProfile:
    """
    Profile of any support. For e(Delta) > 0 the Lambda-sets come from the
    compressed support Delta / p^e and are scaled back by p^e.
    """
    ds = _normalize(delta)
    inv = basic_invariants(ds, p)
    scale = p ** inv.e
    if inv.e == 0:
        bar_ds, bar_inv = ds, inv
    else:
        bar_ds = tuple(n // scale for n in ds)
        bar_inv = basic_invariants(bar_ds, p)
    parts = _lambda_parts(bar_ds, p, bar_inv)

    def up(values: Sequence[int]) -> List[int]:
        return [n * scale for n in values]

    sub = parts['sub']
    if sub is not None and scale > 1:
        sub = SubProfile(up(sub.delta0), sub.e0 + inv.e, sub.q0 * scale, sub.kcap0)

    return SupportProfile(
        delta=list(ds),
        p=p,
        m=inv.m,
        e=inv.e,
        q=inv.q,
        kcap=inv.kcap,
        dbar=inv.dbar,
        d=scale * bar_inv.d,
        case_tag=parts['case'],
        lambda_bar=lambda_bar(ds, p),
        lambda0=up(parts['lambda0']),
        lambda1=up(parts['lambda1']),
        lambda1_prime=up(parts['lambda1_prime']),
        lambda1_dblprime=up(parts['lambda1_dblprime']),
        lambda_set=up(parts['lambda']),
        sub=sub,
    )


def profile_of_series(f: Series, require_finite_mu: bool = False) -> SupportProfile:
    """
    Profile of supp(f). With require_finite_mu the jet must show an exponent
    prime to p; otherwise e(f) > 0 cannot be told apart from a short jet.
    """
    if f.is_zero():
        raise PreconditionError("Cannot profile the zero series")
    if f.ord() < 1:
        raise PreconditionError("Series has a constant term; strip it before profiling")
    support = f.support()
    prof = profile_of_support(support, f.ctx.p)
    if require_finite_mu and prof.e > 0:
        raise TruncationError(
            f"No exponent prime to p within trunc {f.trunc}; cannot certify a finite Milnor number",
            {'support': support, 'trunc': f.trunc},
        )
    return prof


# ==================== CHECKS ====================

def in_known_gap(prof: SupportProfile) -> bool:
    """
    Supports where the counting argument for #Lambda <= floor(q/p) does not
    go through: Case3, and Case4, whose count relies on p * q0 >= d. At p = 2
    the first violation is Delta = {4, 10, 17} (Case4, p * q0 = 20 < d = 23),
    with #Lambda = 9 against a bound of 8.
    """
    return prof.case_tag in (CaseTag.CASE3, CaseTag.CASE4)


def bound_report(delta: Iterable[int], p: int) -> BoundReport:
    """#Lambda against floor(q/p), with equality expected when m = p. Never raises on a violation."""
    ds = _normalize(delta)
    inv = basic_invariants(ds, p)
    if inv.e != 0:
        raise PreconditionError(f"Bound check needs e(Delta)=0, got {inv.e}")
    prof = profile_of_support(ds, p)
    lam = prof.lambda_set
    bound = inv.q // p
    equality = inv.m == p
    ok = len(lam) <= bound and (not equality or len(lam) == bound)
    return BoundReport(list(ds), p, inv.q, len(lam), bound, equality, ok,
                       prof.case_tag.value, in_known_gap(prof))


def verify_bound(delta: Iterable[int], p: int) -> BoundReport:
    """#Lambda <= floor(q/p), with equality when m = p."""
    report = bound_report(delta, p)
    if not report.ok:
        raise InvariantViolation(f"Lambda bound violated for {report.delta} (p={p}, {report.case})",
                                 report.to_dict())
    return report


def determinacy_identity(delta: Iterable[int], p: int) -> List[IdentityCheck]:
    """
    For each n with k_Delta(n) = k(Delta): floor(d / p^e(n)) = k + n/p^e(n) - 1.
    Empty when m = q (k is set to 1 without a witness).
    """
    ds = _normalize(delta)
    m, e, q, kcap, _, d = basic_invariants(ds, p)
    if e != 0:
        raise PreconditionError(f"Identity check needs e(Delta)=0, got {e}")
    checks = []
    for n in ds:
        if n >= q:
            break
        if k_delta(n, q, e, p) == kcap:
            scale = p ** valuation(n, p)
            checks.append(IdentityCheck(n, d // scale, kcap + n // scale - 1))
    return checks


def lambda_is_determined_by_prefix(delta: Iterable[int], padding: Iterable[int], p: int) -> bool:
    """Adding elements above q never changes Lambda."""
    ds = _normalize(delta)
    q = basic_invariants(ds, p).q
    extra = [n for n in padding if n > q]
    return lambda_of(ds, p)[0] == lambda_of(list(ds) + extra, p)[0]


def support_sets(p: int, nmax: int, max_size: Optional[int] = None,
                 budget: Optional[Budget] = None) -> Iterator[List[int]]:
    """Every nonempty Delta in [1, nmax] with e(Delta)=0, by ascending bitmask."""
    budget = budget or default_budget()
    if nmax > budget.enumeration_nmax:
        raise BudgetExceededError(
            f"nmax={nmax} exceeds enumeration budget {budget.enumeration_nmax}",
            {'nmax': nmax, 'limit': budget.enumeration_nmax},
        )
    logger.debug(f"Enumerating supports of [1, {nmax}] for p={p}")
    for mask in range(1, 1 << nmax):
        delta = [i + 1 for i in range(nmax) if mask >> i & 1]
        if max_size is not None and len(delta) > max_size:
            continue
        if all((n % p) == 0 for n in delta):
            continue
        yield delta


def enumerate_supports(p: int, nmax: int, max_size: Optional[int] = None,
                       budget: Optional[Budget] = None) -> Iterator[SupportProfile]:
    for delta in support_sets(p, nmax, max_size, budget):
        yield profile_of_support(delta, p)
