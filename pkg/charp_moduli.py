"""
Moduli Calculator
Version: 1.0
Purpose: Milnor number, right modality, unfolding basis and mu-constant stratum of univariate series
"""

import logging
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from charp_config import Budget, default_budget
from charp_errors import BudgetExceededError, InvariantViolation, PreconditionError
from charp_field import FieldElem
from charp_profile import lambda_of, profile_of_series
from charp_series import Series, derivative

logger = logging.getLogger(__name__)

INFINITY = math.inf
MuValue = Union[int, float]


@dataclass
class ModuliReport:
    mu: MuValue
    e: int
    modality: Optional[int] = None
    unfolding_basis: List[int] = field(default_factory=list)
    stratum_dim: Optional[int] = None
    stratum_free_exponents: List[int] = field(default_factory=list)
    lambda_count: Optional[int] = None
    d: Optional[int] = None

    @property
    def finite(self) -> bool:
        return self.mu != INFINITY

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['mu'] = self.mu if self.finite else 'infinity'
        return data


@dataclass
class StratumSample:
    """Outcome of random perturbations inside and outside the mu-constant stratum."""
    mu: int
    dropping: int = 0
    preserving: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class CoveringReport:
    mu: int
    p: int
    supports: int
    max_lambda: int
    bound: int
    witness: List[int]

    @property
    def ok(self) -> bool:
        return self.max_lambda <= self.bound

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['ok'] = self.ok
        return data


def _nonconstant(f: Series) -> Series:
    g = f.without_constant()
    if g.is_zero():
        raise PreconditionError("Milnor number needs a nonconstant series")
    return g


def milnor(f: Series) -> MuValue:
    """ord(f') cross-checked against q(f) - 1; INFINITY when every exponent is divisible by p."""
    g = _nonconstant(f)
    prof = profile_of_series(g)
    slope = derivative(g)
    if prof.e > 0:
        if not slope.is_zero():
            raise InvariantViolation("Derivative nonzero although e(f) > 0", {'series': g.to_text()})
        return INFINITY
    direct = slope.ord()
    if direct != prof.q - 1:
        raise InvariantViolation(f"ord(f')={direct} disagrees with q-1={prof.q - 1}", {'series': g.to_text()})
    return direct


def _finite_mu(f: Series) -> int:
    mu = milnor(f)
    if mu == INFINITY:
        raise PreconditionError("Milnor number is infinite", {'series': f.to_text()})
    return int(mu)


def modality(f: Series) -> int:
    return _finite_mu(f) // f.ctx.p


def unfolding_basis(f: Series) -> List[int]:
    """Exponents 1..mu; x^(mu+1) must generate <x*f'>, i.e. ord(x*f') = mu + 1."""
    mu = _finite_mu(f)
    if derivative(f.without_constant()).ord() + 1 != mu + 1:
        raise InvariantViolation("x^(mu+1) is not the generator of <x*f'>", {'series': f.to_text()})
    return list(range(1, mu + 1))


def stratum_dim(f: Series) -> Tuple[int, List[int]]:
    mu = _finite_mu(f)
    p = f.ctx.p
    free = [i for i in range(1, mu + 1) if i % p == 0]
    if len(free) != mu // p:
        raise InvariantViolation(f"Free exponent count {len(free)} differs from mu//p", {'mu': mu, 'p': p})
    return len(free), free


def unfold(f: Series, params: Mapping[int, FieldElem]) -> Series:
    """f + sum t_i x^i over the unfolding basis."""
    mu = _finite_mu(f)
    bad = [i for i in params if not 1 <= i <= mu]
    if bad:
        raise PreconditionError(f"Unfolding parameters {bad} outside 1..{mu}")
    return f + Series.from_terms(f.ctx, dict(params), f.trunc)


def sample_stratum(f: Series, rng: random.Random, samples: int = 10) -> StratumSample:
    """
    A parameter with t_i != 0 at some i prime to p must drop mu to the
    smallest such i minus one; parameters on the free exponents keep mu.
    """
    mu = _finite_mu(f)
    ctx = f.ctx
    p = ctx.p
    report = StratumSample(mu)
    if mu == 0:
        return report
    basis = list(range(1, mu + 1))
    moving = [i for i in basis if i % p]
    free = [i for i in basis if i % p == 0]

    def random_nonzero() -> FieldElem:
        return ctx.from_index(rng.randrange(1, ctx.order))

    for _ in range(samples):
        params = {i: ctx.from_index(rng.randrange(ctx.order)) for i in basis}
        pivot = rng.choice(moving)
        params[pivot] = random_nonzero()
        expected = min(i for i in moving if params[i]) - 1
        got = milnor(unfold(f, params))
        if got != expected:
            raise InvariantViolation(f"Perturbation gave mu={got}, expected {expected}",
                                     {'series': f.to_text(), 'params': {i: c.to_text() for i, c in params.items()}})
        report.dropping += 1

        if free:
            params = {i: ctx.from_index(rng.randrange(ctx.order)) for i in free}
            got = milnor(unfold(f, params))
            if got != mu:
                raise InvariantViolation(f"Free perturbation changed mu to {got}", {'series': f.to_text()})
            report.preserving += 1
    return report


def covering_bound(mu: int, p: int, budget: Optional[Budget] = None) -> CoveringReport:
    """
    max #Lambda(Delta) over supports of nearby series with Milnor number mu:
    Delta contains mu+1 and is otherwise arbitrary in [1, mu], since exponents
    above q never change Lambda.
    """
    budget = budget or default_budget()
    if mu < 1:
        raise PreconditionError(f"mu must be >= 1, got {mu}")
    if (mu + 1) % p == 0:
        raise PreconditionError(f"x^(mu+1) needs exponent prime to p; p={p} divides {mu + 1}")
    if mu > budget.enumeration_nmax:
        raise BudgetExceededError(f"mu={mu} exceeds enumeration budget {budget.enumeration_nmax}")
    best, witness, count = -1, [], 0
    for mask in range(1 << mu):
        delta = [i + 1 for i in range(mu) if mask >> i & 1] + [mu + 1]
        lam, _ = lambda_of(delta, p)
        count += 1
        if len(lam) > best:
            best, witness = len(lam), delta
    report = CoveringReport(mu, p, count, best, mu // p, witness)
    if not report.ok:
        raise InvariantViolation(f"Covering family exceeds mu//p for mu={mu}, p={p}", report.to_dict())
    logger.debug(f"Covering bound mu={mu} p={p}: max #Lambda={best} over {count} supports")
    return report


def moduli_report(f: Series) -> ModuliReport:
    g = _nonconstant(f)
    prof = profile_of_series(g)
    mu = milnor(g)
    if mu == INFINITY:
        return ModuliReport(mu=INFINITY, e=prof.e, d=prof.d)
    dim, free = stratum_dim(g)
    return ModuliReport(
        mu=mu,
        e=0,
        modality=modality(g),
        unfolding_basis=unfolding_basis(g),
        stratum_dim=dim,
        stratum_free_exponents=free,
        lambda_count=len(prof.lambda_set),
        d=prof.d,
    )
