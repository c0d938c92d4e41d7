"""
Tests for the classification verification suite
"""

import json
import random

import pytest

from charp_config import load_config
from charp_field import prime_field
from charp_moduli import milnor
from charp_profile import BoundReport, profile_of_series
from charp_validator import ClassificationValidator, random_change, random_series

CHECKS = [
    'lambda_bound', 'prefix_determinism', 'determinacy_identity', 'invariance', 'witness_validity',
    'determinacy', 'modality_stratum', 'covering_bound', 'named_example', 'oracle',
]


@pytest.fixture
def results(small_config):
    validator = ClassificationValidator(config=small_config)
    return validator, validator.run_all_validations()


def test_small_suite_passes(results):
    _, data = results
    assert list(data['checks']) == CHECKS
    assert data['summary']['failed'] == 0
    assert data['summary']['total'] == len(CHECKS)
    assert data['health_score'] >= 50


def test_bound_statistics(results):
    _, data = results
    stats = data['statistics']
    # nmax=8: 255 nonempty subsets minus 15 all-even (p=2) and minus 3 multiples of 3 (p=3)
    assert stats['by_prime']['2']['supports'] == 240
    assert stats['by_prime']['3']['supports'] == 252
    assert stats['total_supports'] == 492


def test_report_text(results, tmp_path):
    validator, _ = results
    path = tmp_path / 'report.txt'
    text = validator.generate_report(str(path))
    assert 'CHAR-P CLASSIFICATION VALIDATION REPORT' in text
    assert '✓ Lambda Bound: PASS (violations 0)' in text
    assert 'Combinatorial checks (weight 25, score 100.0/100)' in text
    assert 'over the bound 0' in text
    assert path.read_text(encoding='utf-8') == text


def test_json_export(results, tmp_path):
    validator, data = results
    path = tmp_path / 'results.json'
    validator.export_to_json(str(path))
    assert json.loads(path.read_text()) == json.loads(json.dumps(data))


def test_same_seed_same_results(small_config):
    first = ClassificationValidator(config=small_config, seed=11).run_all_validations()
    second = ClassificationValidator(config=small_config, seed=11).run_all_validations()
    assert first == second
    assert first['seed'] == 11


def test_seed_defaults_to_config(small_config):
    assert ClassificationValidator(config=small_config).seed == 7


def test_health_score_weights_check_groups(small_config):
    validator = ClassificationValidator(config=small_config)
    validator.validation_results = {'checks': {
        'lambda_bound': {'status': 'WARN'},
        'prefix_determinism': {'status': 'PASS'},
        'determinacy_identity': {'status': 'PASS'},
        'witness_validity': {'status': 'FAIL'},
        'oracle': {'status': 'PASS'},
    }}
    validator.calculate_health_score()
    summary = validator.validation_results['summary']
    assert summary['by_group']['combinatorial']['score'] == 83.33
    assert summary['by_group']['engine'] == {'checks': 1, 'failed': 1, 'score': 0.0}
    assert 'moduli' not in summary['by_group']
    # (25 * 5/6 + 15) / 80
    assert validator.validation_results['health_score'] == 44.79
    assert (summary['passed'], summary['warned'], summary['failed']) == (3, 1, 1)


def _bound_only(small_config, monkeypatch, supports):
    monkeypatch.setattr('charp_validator.support_sets', lambda p, nmax, budget=None: iter(supports))
    config = dict(small_config, suites=dict(small_config['suites'], fields=[2]))
    validator = ClassificationValidator(config=config)
    validator.validation_results = {'checks': {}}
    validator.check_lambda_bound()
    return validator.validation_results['checks']['lambda_bound']


def test_known_gap_violation_warns(small_config, monkeypatch):
    check = _bound_only(small_config, monkeypatch, [[2, 5], [4, 10, 17]])
    assert check['status'] == 'WARN'
    assert (check['violations'], check['known_gap']) == (1, 1)
    assert check['supports'] == {'2': 2}
    assert check['issues'] == ['p=2 delta=[4, 10, 17] Case4: #Lambda 9, bound 8']


def test_unexplained_violation_fails(small_config, monkeypatch):
    broken = BoundReport([2, 5], 2, 5, 3, 2, True, False, 'Case1', False)
    monkeypatch.setattr('charp_validator.bound_report', lambda delta, p: broken)
    check = _bound_only(small_config, monkeypatch, [[2, 5]])
    assert check['status'] == 'FAIL'
    assert (check['violations'], check['known_gap']) == (1, 0)

@pytest.mark.parametrize('p', [2, 3, 5])
def test_random_series_has_finite_mu(p):
    ctx = prime_field(p)
    rng = random.Random(p)
    for _ in range(20):
        f = random_series(ctx, rng, max_mu=10)
        prof = profile_of_series(f, require_finite_mu=True)
        assert f.trunc == prof.dbar + 1
        assert milnor(f) <= 10


def test_random_change_is_invertible():
    ctx = prime_field(3)
    phi = random_change(ctx, random.Random(1), 6)
    assert phi.then(phi.inverse()).is_identity()


@pytest.mark.slow
def test_default_suite():
    data = ClassificationValidator(config=load_config()).run_all_validations()
    assert data['summary']['failed'] == 0
    bound = data['checks']['lambda_bound']
    assert bound['status'] == 'WARN'
    assert bound['violations'] == bound['known_gap'] == 48
    assert data['statistics']['by_prime']['3']['violations'] == 0
