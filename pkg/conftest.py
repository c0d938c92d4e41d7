"""
Shared fixtures and hypothesis strategies for the classifier tests
"""

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from charp_config import Budget
from charp_field import field_of_degree, prime_field
from charp_series import CoordChange, Series

settings.register_profile(
    'charp',
    max_examples=40,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile('charp')


@pytest.fixture
def F2():
    return prime_field(2)


@pytest.fixture
def F3():
    return prime_field(3)


@pytest.fixture
def F5():
    return prime_field(5)


@pytest.fixture
def F4():
    return field_of_degree(2, 2)


@pytest.fixture
def budget():
    return Budget()


@pytest.fixture
def small_config():
    """Suite scales small enough for a unit-test run."""
    return {
        'budget': {'group_budget': 1_000_000, 'max_field_degree': 24, 'search_limit': 4096,
                   'enumeration_nmax': 24},
        'logging': {'level': 'WARNING', 'log_file': ''},
        'suites': {
            'seed': 7,
            'bound_nmax': 8,
            'invariance_pairs': 10,
            'witness_series': 10,
            'witness_max_mu': 8,
            'determinacy_pairs': 6,
            'modality_series': 5,
            'modality_max_mu': 10,
            'covering_max_mu': 4,
            'fields': [2, 3],
            'oracle_scales': [{'p': 2, 'deg': 1, 'jet': 4}],
        },
    }


# ==================== STRATEGIES ====================

PRIMES = st.sampled_from([2, 3, 5])


def elements(ctx, nonzero=False):
    return st.integers(1 if nonzero else 0, ctx.order - 1).map(ctx.from_index)


@st.composite
def finite_mu_series(draw, ctx, max_mu=10):
    """f with e(f) = 0 and mu(f) <= max_mu, exact up to dbar(f) + 1."""
    p = ctx.p
    q = draw(st.sampled_from([n for n in range(2, max_mu + 2) if n % p]))
    coeffs = {q: draw(elements(ctx, nonzero=True))}
    for n in range(p, q, p):
        if draw(st.booleans()):
            coeffs[n] = draw(elements(ctx, nonzero=True))
    m = min(coeffs)
    trunc = 2 * q - m + 1
    for n in range(q + 1, trunc + 1):
        coeffs[n] = draw(elements(ctx))
    return Series(ctx, trunc, coeffs)


@st.composite
def coord_changes(draw, ctx, trunc):
    a1 = draw(elements(ctx, nonzero=True))
    tail = draw(st.lists(elements(ctx), min_size=trunc - 1, max_size=trunc - 1))
    return CoordChange.from_coeffs(ctx, [a1] + tail, trunc)


@st.composite
def series_with_change(draw, max_mu=10):
    ctx = prime_field(draw(PRIMES))
    f = draw(finite_mu_series(ctx, max_mu))
    return f, draw(coord_changes(ctx, f.trunc))


@st.composite
def supports(draw, nmax=14):
    """Nonempty subsets of [1, nmax] containing an exponent prime to p, with p."""
    p = draw(st.sampled_from([2, 3]))
    delta = draw(st.sets(st.integers(1, nmax), min_size=1, max_size=6))
    prime_to_p = draw(st.sampled_from([n for n in range(1, nmax + 1) if n % p]))
    return sorted(delta | {prime_to_p}), p
