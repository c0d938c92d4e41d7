"""
Normal Form Engine
Version: 1.0
Purpose: Monomialization, pre-normal forms, jet matching and full normal forms with explicit coordinate-change witnesses
"""

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

from charp_config import Budget, default_budget
from charp_errors import BudgetExceededError, EngineError, PreconditionError, TruncationError
from charp_field import FieldCtx, FieldElem, common_context, embed, nth_root, solve_additive
from charp_profile import CaseTag, profile_of_series, valuation
from charp_series import (CoordChange, Series, apply_elementary, apply_scaling, compose, from_bar,
                          series_valuation, to_bar, transport_change, unify)

logger = logging.getLogger(__name__)


# ==================== RESULT TYPES ====================

@dataclass
class ElimStep:
    """One substitution x -> x + u*x^(l+1) that sets the coefficient at t."""
    t: int
    l: int
    u: FieldElem
    terms: Dict[int, FieldElem]
    constant: FieldElem
    ctx: FieldCtx

    @property
    def is_noop(self) -> bool:
        return self.l == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t,
            'l': self.l,
            'u': self.u.to_text(),
            'equation': {str(level): c.to_text() for level, c in sorted(self.terms.items())},
            'constant': self.constant.to_text(),
            'field': self.ctx.to_text(),
        }


@dataclass
class NormalFormResult:
    m: int
    lambdas: Dict[int, FieldElem]
    phi: CoordChange
    guarantee_order: int
    case_tag: CaseTag
    ctx: FieldCtx
    leading: FieldElem
    e: int = 0
    constant: Optional[FieldElem] = None
    steps: List[ElimStep] = field(default_factory=list)

    @property
    def series(self) -> Series:
        """c0 + leading*x^m + sum lambda_n x^n, exact up to guarantee_order."""
        terms = {self.m: self.leading}
        terms.update({n: c for n, c in self.lambdas.items() if c})
        if self.constant is not None and self.constant:
            terms[0] = self.constant
        return Series(self.ctx, self.guarantee_order, terms)

    def lambda_vector(self) -> Tuple[FieldElem, ...]:
        return tuple(self.lambdas[n] for n in sorted(self.lambdas))

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'm': self.m,
            'lambda': {str(n): self.lambdas[n].to_text() for n in sorted(self.lambdas)},
            'phi': self.phi.to_pairs(),
            'guarantee_order': self.guarantee_order,
            'field': self.ctx.to_text(),
            'case': self.case_tag.value,
            'e': self.e,
            'normal_form': self.series.to_text(),
        }
        if self.leading != 1:
            data['leading'] = self.leading.to_text()
        if self.constant is not None and self.constant:
            data['constant'] = self.constant.to_text()
        return data


@dataclass
class DeterminacyBound:
    order: int
    infinite_mu: bool
    e: int

    def to_dict(self) -> Dict[str, Any]:
        return {'d': self.order, 'infinite_mu': self.infinite_mu, 'e': self.e}


# ==================== ELIMINATION ENGINE ====================

def _choose_shift(h: Series, t: int, keep: Set[int]) -> Optional[Tuple[int, Dict[int, FieldElem]]]:
    """
    Smallest l such that x -> x + u*x^(l+1) reaches t through a linear
    (j = 1) landing, every lower landing is a kept exponent and no
    higher-order landing hits t. Returns l with the additive equation terms.
    """
    p = h.ctx.p
    lower = sorted((n, c) for n, c in h.coeffs.items() if 0 < n < t)
    if not lower:
        return None
    for l in range(1, t - lower[0][0] + 1):
        terms: Dict[int, FieldElem] = {}
        valid = True
        for n, c in lower:
            e = valuation(n, p)
            core = n // p ** e
            step = l * p ** e
            j, s = 1, n + step
            while s <= t and j <= core:
                if comb(core, j) % p:
                    if s == t:
                        if j > 1:
                            valid = False
                            break
                        terms[e] = terms[e] + c * core if e in terms else c * core
                    elif s not in keep:
                        valid = False
                        break
                j += 1
                s += step
            if not valid:
                break
        if valid and any(terms.values()):
            return l, terms
    return None


def eliminate_at(h: Series, t: int, keep: Iterable[int], goal: Optional[FieldElem] = None,
                 budget: Optional[Budget] = None) -> Tuple[ElimStep, Series]:
    """
    Set the coefficient of x^t to goal (zero by default) with one elementary
    substitution, solving the additive equation for u. Coefficients below t
    outside keep are left unchanged.
    """
    keep = set(keep)
    if t in keep:
        raise PreconditionError(f"Target exponent {t} is in the keep set")
    if t > h.trunc:
        raise TruncationError(f"Target exponent {t} exceeds working trunc {h.trunc}")
    if goal is not None and goal.ctx != h.ctx:
        h = h.embed(common_context(h.ctx, goal.ctx))
    ctx = h.ctx
    target = embed(goal, ctx) if goal is not None else ctx.zero
    constant = h.coeff(t) - target
    if not constant:
        return ElimStep(t, 0, ctx.zero, {}, constant, ctx), h

    choice = _choose_shift(h, t, keep)
    if choice is None:
        raise EngineError(f"No valid shift eliminates x^{t}",
                          {'series': h.to_text(), 't': t, 'keep': sorted(keep), 'field': ctx.to_text()})
    l, terms = choice
    u, root_ctx = solve_additive(terms, constant, budget)
    if root_ctx != ctx:
        logger.info(f"Elimination at x^{t} extended the field to {root_ctx.to_text()}")
        h = h.embed(root_ctx)
    updated = apply_elementary(h, u, l)

    if updated.coeff(t) != embed(target, root_ctx):
        raise EngineError(f"Elimination at x^{t} left coefficient {updated.coeff(t).to_text()}",
                          {'series': h.to_text(), 't': t, 'l': l, 'u': u.to_text()})
    for n in range(1, t):
        if n not in keep and updated.coeff(n) != h.coeff(n):
            raise EngineError(f"Elimination at x^{t} disturbed x^{n}",
                              {'series': h.to_text(), 't': t, 'l': l, 'u': u.to_text()})

    step = ElimStep(t, l, u, terms, constant, root_ctx)
    logger.debug(f"eliminate t={t} l={l} u={u.to_text()} in {root_ctx.to_text()}")
    return step, updated


def _run_engine(h: Series, phi: Series, start: int, stop: int, keep: Set[int],
                budget: Budget, steps: List[ElimStep]) -> Tuple[Series, Series]:
    for t in range(start, stop + 1):
        if t in keep or not h.coeff(t):
            continue
        step, h = eliminate_at(h, t, keep, budget=budget)
        if step.ctx != phi.ctx:
            phi = phi.embed(step.ctx)
        phi = apply_elementary(phi, step.u, step.l)
        steps.append(step)
    return h, phi


def _normalize_leading(h: Series, phi: Series, m: int, budget: Budget) -> Tuple[Series, Series]:
    """Scale x -> a*x so the x^m coefficient becomes 1, if a lies in the working field."""
    c = h.coeff(m)
    if c == 1:
        return h, phi
    local = budget.model_copy(update={'max_field_degree': h.ctx.deg})
    try:
        a, _ = nth_root(c.inverse(), m, local)
    except BudgetExceededError:
        logger.debug(f"Leading coefficient {c.to_text()} kept: no {m}-th root of its inverse in {h.ctx.to_text()}")
        return h, phi
    return apply_scaling(h, a), apply_scaling(phi, a)


def _classifiable(f: Series) -> Series:
    if f.is_zero():
        raise PreconditionError("The zero series cannot be classified")
    if f.ord() < 1:
        raise PreconditionError("Series has a constant term; strip it first")
    return f


# ==================== OPERATIONS ====================

def reduce_monomial(f: Series, budget: Optional[Budget] = None) -> Tuple[Series, CoordChange]:
    """x^m with its witness when e(m(f)) = e(f)."""
    budget = budget or default_budget()
    f = _classifiable(f)
    p = f.ctx.p
    m = f.ord()
    e = series_valuation(f)
    if valuation(m, p) != e:
        raise PreconditionError(f"Monomialization needs e(m)=e(f); got e({m})={valuation(m, p)}, e(f)={e}")
    if e > 0:
        fbar, _ = to_bar(f)
        hbar, psi = reduce_monomial(fbar, budget)
        return from_bar(hbar, e), transport_change(psi, e)

    if f.trunc < m + 1:
        raise TruncationError(f"Monomialization needs trunc >= {m + 1}, got {f.trunc}")
    h = f
    phi = CoordChange.identity(f.ctx, f.trunc).series
    h, phi = _normalize_leading(h, phi, m, budget)
    h, phi = _run_engine(h, phi, m + 1, f.trunc, {m}, budget, [])
    if h.support() != [m]:
        raise EngineError(f"Monomialization left {h.to_text()}", {'input': f.to_text()})
    return h, CoordChange(phi)


def prenormal(f: Series, budget: Optional[Budget] = None) -> Tuple[Series, CoordChange]:
    """
    Support inside {m} and lambda_bar: monomialize the valuation-0 part to
    x^q, carry the rest along and cut at dbar.
    """
    budget = budget or default_budget()
    f = _classifiable(f)
    prof = profile_of_series(f)
    if prof.e != 0:
        raise PreconditionError(f"Pre-normal form needs e(f)=0, got {prof.e}")
    if f.trunc < prof.dbar:
        raise TruncationError(f"Pre-normal form needs trunc >= dbar={prof.dbar}, got {f.trunc}")
    p = f.ctx.p
    work = max(f.trunc, prof.dbar + 1)
    f0 = Series(f.ctx, work, {n: c for n, c in f.coeffs.items() if valuation(n, p) == 0})
    f1 = Series(f.ctx, work, {n: c for n, c in f.coeffs.items() if valuation(n, p) > 0})

    xq, phi = reduce_monomial(f0, budget)
    g = (xq + compose(f1, phi)).jet(prof.dbar)

    allowed = {prof.m, *prof.lambda_bar}
    stray = [n for n in g.support() if n not in allowed]
    if stray:
        raise EngineError(f"Pre-normal form has exponents {stray} outside lambda_bar", {'input': f.to_text()})
    return g, phi


def match_jets(f: Series, g: Series, budget: Optional[Budget] = None) -> CoordChange:
    """phi with j^dbar(f o phi) = j^dbar(g), for f, g sharing e and their d-jet."""
    budget = budget or default_budget()
    f, g = unify(_classifiable(f), _classifiable(g))
    e = series_valuation(f)
    if series_valuation(g) != e:
        raise PreconditionError(f"Jet matching needs e(f)=e(g), got {e} and {series_valuation(g)}")
    if e > 0:
        fbar, _ = to_bar(f)
        gbar, _ = to_bar(g)
        return transport_change(match_jets(fbar, gbar, budget), e)

    prof = profile_of_series(f)
    d, dbar = prof.d, prof.dbar
    if min(f.trunc, g.trunc) < dbar:
        raise TruncationError(f"Jet matching needs trunc >= dbar={dbar}, got {min(f.trunc, g.trunc)}")
    if f.jet(d).coeffs != g.jet(d).coeffs:
        raise PreconditionError(f"Series differ below d={d}", {'f': f.to_text(), 'g': g.to_text()})

    h = f.jet(dbar)
    phi = CoordChange.identity(f.ctx, dbar).series
    for t in range(d + 1, dbar + 1):
        goal = embed(g.coeff(t), h.ctx)
        if h.coeff(t) == goal:
            continue
        step, h = eliminate_at(h, t, set(), goal=goal, budget=budget)
        if step.ctx != phi.ctx:
            phi = phi.embed(step.ctx)
        phi = apply_elementary(phi, step.u, step.l)

    witness = CoordChange(phi)
    lhs, rhs = unify(compose(f, witness).jet(dbar), g.jet(dbar))
    if lhs != rhs:
        raise EngineError("Jet matching witness failed substitution check",
                          {'f': f.to_text(), 'g': g.to_text(), 'phi': witness.to_text()})
    return witness


def normal_form(f: Series, budget: Optional[Budget] = None) -> NormalFormResult:
    """
    x^m + sum over Lambda of lambda_n x^n, with the coordinate change whose
    action carries f to it up to x^d.
    """
    budget = budget or default_budget()
    if f.is_zero():
        raise PreconditionError("The zero series cannot be classified")
    constant = f.constant_term()
    g = f.without_constant()
    if g.is_zero():
        raise PreconditionError("Pure constants have no normal form")

    gbar, e = to_bar(g)
    if e > 0:
        inner = normal_form(gbar, budget)
        scale = g.ctx.p ** e
        return NormalFormResult(
            m=inner.m * scale,
            lambdas={n * scale: c for n, c in inner.lambdas.items()},
            phi=transport_change(inner.phi, e),
            guarantee_order=inner.guarantee_order * scale,
            case_tag=inner.case_tag,
            ctx=inner.ctx,
            leading=inner.leading,
            e=e,
            constant=embed(constant, inner.ctx) if constant else None,
            steps=inner.steps,
        )

    prof = profile_of_series(g)
    if g.trunc < prof.dbar:
        raise TruncationError(f"Normal form needs trunc >= dbar={prof.dbar}, got {g.trunc}",
                              {'dbar': prof.dbar, 'trunc': g.trunc})
    work = max(g.trunc, prof.dbar + 1)
    h = g.as_polynomial(work)
    phi = CoordChange.identity(g.ctx, work).series
    m, d = prof.m, prof.d
    keep = {m, *prof.lambda_set}

    h, phi = _normalize_leading(h, phi, m, budget)
    steps: List[ElimStep] = []
    h, phi = _run_engine(h, phi, m + 1, d, keep, budget, steps)
    nf = h.jet(d)

    stray = [n for n in nf.support() if n not in keep]
    if stray:
        raise EngineError(f"Normal form has exponents {stray} outside Lambda", {'input': g.to_text()})
    if prof.case_tag != CaseTag.CASE0 and not nf.coeff(prof.q):
        raise EngineError(f"Normal form lost its x^{prof.q} term", {'input': g.to_text()})
    witness = CoordChange(phi)
    lhs, rhs = unify(compose(g.as_polynomial(work), witness).jet(d), nf)
    if lhs != rhs:
        raise EngineError("Normal form witness failed substitution check", {'input': g.to_text()})

    ctx = nf.ctx
    logger.debug(f"Normal form of {g.to_text()}: {nf.to_text()} over {ctx.to_text()} in {len(steps)} steps")
    return NormalFormResult(
        m=m,
        lambdas={n: nf.coeff(n) for n in prof.lambda_set},
        phi=witness,
        guarantee_order=d,
        case_tag=prof.case_tag,
        ctx=ctx,
        leading=nf.coeff(m),
        e=0,
        constant=embed(constant, ctx) if constant else None,
        steps=steps,
    )


def determinacy_bound(f: Series) -> DeterminacyBound:
    """d(f); infinite_mu marks the e(f) > 0 case where only same-e series are covered."""
    if f.is_zero():
        raise PreconditionError("The zero series has no determinacy bound")
    g = f.without_constant()
    if g.is_zero():
        raise PreconditionError("Pure constants have no determinacy bound")
    prof = profile_of_series(g)
    return DeterminacyBound(order=prof.d, infinite_mu=prof.e > 0, e=prof.e)
