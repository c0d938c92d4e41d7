"""
Classification Verification Suite
Version: 1.0
Purpose: Run the bound, invariance, witness, determinacy, modality and orbit-oracle checks and produce quality reports
"""

import json
import logging
import random
from datetime import datetime
from typing import Any, Dict, List, Optional

import pandas as pd

from charp_config import Budget, budget_from_config, load_config, setup_logging
from charp_errors import BudgetExceededError, CharpError
from charp_field import FieldCtx, FieldElem, field_of_degree, prime_field
from charp_moduli import covering_bound, milnor, modality, sample_stratum, stratum_dim
from charp_oracle import validate_classification
from charp_profile import (bound_report, determinacy_identity, lambda_is_determined_by_prefix, profile_of_series,
                           profile_of_support, support_sets)
from charp_reduce import match_jets, normal_form
from charp_series import CoordChange, Series, compose, unify

logger = logging.getLogger(__name__)

IDENTITY_NMAX = 12

CHECK_GROUPS = {
    'combinatorial': ('lambda_bound', 'prefix_determinism', 'determinacy_identity'),
    'engine': ('invariance', 'witness_validity', 'determinacy'),
    'moduli': ('modality_stratum', 'covering_bound', 'named_example'),
    'oracle': ('oracle',),
}
# points out of 100 per group
GROUP_WEIGHTS = {'combinatorial': 25, 'engine': 40, 'moduli': 20, 'oracle': 15}
STATUS_CREDIT = {'PASS': 1.0, 'WARN': 0.5, 'FAIL': 0.0}
# integer counters shown next to a check's status
COUNT_KEYS = ('checked', 'witnesses', 'pairs', 'series', 'cases', 'violations', 'extended_fields')


# ==================== RANDOM INPUTS ====================

def random_element(ctx: FieldCtx, rng: random.Random, nonzero: bool = False) -> FieldElem:
    return ctx.from_index(rng.randrange(1 if nonzero else 0, ctx.order))


def random_series(ctx: FieldCtx, rng: random.Random, max_mu: int) -> Series:
    """
    Random f with e(f) = 0 and mu(f) <= max_mu, given exactly up to
    trunc = dbar(f) + 1. Below q only exponents divisible by p appear.
    """
    p = ctx.p
    q = rng.choice([n for n in range(2, max_mu + 2) if n % p])
    coeffs = {q: random_element(ctx, rng, nonzero=True)}
    for n in range(p, q, p):
        if rng.random() < 0.5:
            coeffs[n] = random_element(ctx, rng, nonzero=True)
    m = min(coeffs)
    trunc = 2 * q - m + 1
    for n in range(q + 1, trunc + 1):
        coeffs[n] = random_element(ctx, rng)
    return Series(ctx, trunc, coeffs)


def random_change(ctx: FieldCtx, rng: random.Random, trunc: int) -> CoordChange:
    coeffs = [random_element(ctx, rng, nonzero=True)]
    coeffs += [random_element(ctx, rng) for _ in range(trunc - 1)]
    return CoordChange.from_coeffs(ctx, coeffs, trunc)


class ClassificationValidator:
    """
    Acceptance suite for the classifier: every check records PASS, WARN or
    FAIL with its counts and a counterexample when one exists.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None, budget: Optional[Budget] = None,
                 seed: Optional[int] = None):
        self.config = config or load_config()
        self.suites = self.config['suites']
        self.budget = budget or budget_from_config(self.config)
        self.seed = self.suites.get('seed', 2012) if seed is None else seed
        self.validation_results: Dict[str, Any] = {}
        self._bound_rows: List[Dict[str, Any]] = []

    def _rng(self, salt: str) -> random.Random:
        return random.Random(f"{self.seed}:{salt}")

    def _fields(self, allowed=None) -> List[int]:
        primes = [int(p) for p in self.suites.get('fields', [2, 3, 5])]
        return [p for p in primes if allowed is None or p in allowed]

    def _fail(self, check_name: str, error: CharpError, **extra):
        logger.error(f"{check_name} failed: {error}")
        self.validation_results['checks'][check_name] = {
            'status': 'FAIL',
            'error': str(error),
            'details': error.details,
            **extra,
        }

    def run_all_validations(self) -> Dict[str, Any]:
        """
        Run complete validation suite
        """
        logger.info(f"Starting classification validation (seed={self.seed})...")

        self.validation_results = {
            'seed': self.seed,
            'fields': self._fields(),
            'checks': {},
        }
        self._bound_rows = []

        self.check_lambda_bound()
        self.check_prefix_determinism()
        self.check_determinacy_identity()
        self.check_invariance()
        self.check_witness_validity()
        self.check_determinacy()
        self.check_modality_stratum()
        self.check_covering_bound()
        self.check_named_example()
        self.check_oracle()
        self.generate_statistics()

        self.calculate_health_score()

        logger.info("Validation complete!")
        return self.validation_results

    # ==================== COMBINATORIAL CHECKS ====================

    def check_lambda_bound(self):
        """#Lambda <= floor(q/p) on every support of [1, nmax], equality at m = p"""
        check_name = "lambda_bound"
        nmax = self.suites.get('bound_nmax', 18)
        counts = {}
        violations = []
        try:
            for p in self._fields({2, 3}):
                checked = 0
                for delta in support_sets(p, nmax, budget=self.budget):
                    report = bound_report(delta, p)
                    self._bound_rows.append({'p': p, 'q': report.q, 'lambda': report.lambda_count,
                                             'bound': report.bound, 'equality': report.equality_required,
                                             'violation': not report.ok})
                    if not report.ok:
                        violations.append(report)
                    checked += 1
                counts[str(p)] = checked
        except BudgetExceededError as e:
            self.validation_results['checks'][check_name] = {
                'status': 'WARN', 'message': f"Skipped: {e}", 'supports': counts}
            return
        except CharpError as e:
            self._fail(check_name, e, supports=counts)
            return

        unexplained = [r for r in violations if r.unexplained]
        shown = unexplained or violations
        if unexplained:
            status = 'FAIL'
            message = f"{len(unexplained)} supports exceed the bound outside Case3/Case4"
        elif violations:
            status = 'WARN'
            message = f"{len(violations)} supports exceed the bound, all in the Case3/Case4 gap"
        else:
            status = 'PASS'
            message = f"{sum(counts.values())} supports within the bound"
        if violations:
            logger.warning(f"{check_name}: {message}")
        self.validation_results['checks'][check_name] = {
            'status': status,
            'nmax': nmax,
            'supports': counts,
            'violations': len(violations),
            'known_gap': len(violations) - len(unexplained),
            'message': message,
            'issues': [f"p={r.p} delta={r.delta} {r.case}: #Lambda {r.lambda_count}, bound {r.bound}"
                       for r in shown[:10]],
        }

    def check_prefix_determinism(self):
        """Exponents above q never change Lambda"""
        check_name = "prefix_determinism"
        rng = self._rng(check_name)
        issues = []
        checked = 0
        for p in self._fields({2, 3}):
            for delta in support_sets(p, 10, budget=self.budget):
                q = profile_of_support(delta, p).q
                padding = [n for n in range(q + 1, q + 2 * p + 3) if rng.random() < 0.5]
                checked += 1
                if not lambda_is_determined_by_prefix(delta, padding, p):
                    issues.append(f"p={p} delta={delta} padding={padding}")

        self.validation_results['checks'][check_name] = {
            'status': 'PASS' if not issues else 'FAIL',
            'checked': checked,
            'issues': issues[:10],
        }

    def check_determinacy_identity(self):
        """floor(d / p^e(n)) = k + n/p^e(n) - 1 for every witness n of k"""
        check_name = "determinacy_identity"
        issues = []
        witnesses = 0
        for p in self._fields({2, 3}):
            for delta in support_sets(p, IDENTITY_NMAX, budget=self.budget):
                for check in determinacy_identity(delta, p):
                    witnesses += 1
                    if not check.holds:
                        issues.append(f"p={p} delta={delta} n={check.n}: {check.lhs} != {check.rhs}")

        self.validation_results['checks'][check_name] = {
            'status': 'PASS' if not issues else 'FAIL',
            'witnesses': witnesses,
            'issues': issues[:10],
        }

    # ==================== ENGINE CHECKS ====================

    def check_invariance(self):
        """(m, e, q, k, dbar, d) and mu are unchanged by random coordinate changes"""
        check_name = "invariance"
        pairs = self.suites.get('invariance_pairs', 500)
        max_mu = self.suites.get('witness_max_mu', 15)
        issues = []
        checked = 0
        try:
            for p in self._fields():
                ctx = prime_field(p)
                rng = self._rng(f"{check_name}:{p}")
                for _ in range(pairs):
                    f = random_series(ctx, rng, max_mu)
                    phi = random_change(ctx, rng, f.trunc)
                    g = compose(f, phi)
                    before = profile_of_series(f).basic()
                    after = profile_of_series(g).basic()
                    checked += 1
                    if before != after or milnor(f) != milnor(g):
                        issues.append(f"{f.to_text()} under {phi.to_text()}: {before} vs {after}")
        except CharpError as e:
            self._fail(check_name, e, checked=checked)
            return

        self.validation_results['checks'][check_name] = {
            'status': 'PASS' if not issues else 'FAIL',
            'pairs': checked,
            'issues': issues[:10],
        }

    def check_witness_validity(self):
        """j^d(f o phi) is exactly the emitted normal form, supported on {m} and Lambda"""
        check_name = "witness_validity"
        count = self.suites.get('witness_series', 200)
        max_mu = self.suites.get('witness_max_mu', 15)
        issues = []
        checked = 0
        extended = 0
        try:
            for p in self._fields():
                ctx = prime_field(p)
                rng = self._rng(f"{check_name}:{p}")
                for _ in range(count):
                    f = random_series(ctx, rng, max_mu)
                    prof = profile_of_series(f)
                    result = normal_form(f, self.budget)
                    checked += 1
                    if result.ctx != ctx:
                        extended += 1
                    lhs, rhs = unify(compose(f, result.phi).jet(result.guarantee_order), result.series)
                    allowed = {prof.m, *prof.lambda_set}
                    if lhs.coeffs != rhs.coeffs:
                        issues.append(f"witness mismatch for {f.to_text()}")
                    elif not set(rhs.support()) <= allowed:
                        issues.append(f"support {rhs.support()} of {f.to_text()} leaves Lambda")
                    elif prof.lambda_set and not result.lambdas[prof.q]:
                        issues.append(f"lambda_q vanished for {f.to_text()}")
        except CharpError as e:
            self._fail(check_name, e, checked=checked)
            return

        self.validation_results['checks'][check_name] = {
            'status': 'PASS' if not issues else 'FAIL',
            'series': checked,
            'extended_fields': extended,
            'issues': issues[:10],
        }

    def check_determinacy(self):
        """Series sharing their d-jet are matched up to dbar by an explicit change"""
        check_name = "determinacy"
        pairs = self.suites.get('determinacy_pairs', 100)
        max_mu = self.suites.get('witness_max_mu', 15)
        primes = self._fields()
        issues = []
        checked = 0
        try:
            ctx2 = prime_field(2)
            f = Series.from_terms(ctx2, {2: 1, 5: 1, 7: 1}, 9)
            g = Series.from_terms(ctx2, {2: 1, 5: 1, 7: 1, 8: 1}, 9)
            phi = match_jets(f, g, self.budget)
            forced_extension = phi.ctx.deg > 1
            if not forced_extension:
                issues.append("x^2+x^5+x^7 vs x^2+x^5+x^7+x^8 matched without leaving F_2")

            for i in range(pairs):
                p = primes[i % len(primes)]
                ctx = prime_field(p)
                rng = self._rng(f"{check_name}:{i}")
                f = random_series(ctx, rng, max_mu)
                prof = profile_of_series(f)
                tail = {n: random_element(ctx, rng) for n in range(prof.d + 1, f.trunc + 1)}
                g = f + Series(ctx, f.trunc, tail)
                phi = match_jets(f, g, self.budget)
                lhs, rhs = unify(compose(f, phi).jet(prof.dbar), g.jet(prof.dbar))
                checked += 1
                if lhs.coeffs != rhs.coeffs:
                    issues.append(f"{f.to_text()} vs {g.to_text()}")
        except CharpError as e:
            self._fail(check_name, e, checked=checked)
            return

        self.validation_results['checks'][check_name] = {
            'status': 'PASS' if not issues else 'FAIL',
            'pairs': checked,
            'forced_extension': forced_extension,
            'issues': issues[:10],
        }

    # ==================== MODULI CHECKS ====================

    def check_modality_stratum(self):
        """modality = floor(mu/p) = stratum dimension, confirmed by perturbation sampling"""
        check_name = "modality_stratum"
        count = self.suites.get('modality_series', 50)
        max_mu = self.suites.get('modality_max_mu', 20)
        issues = []
        checked = 0
        try:
            for p in self._fields({2, 3}):
                ctx = prime_field(p)
                rng = self._rng(f"{check_name}:{p}")
                for _ in range(count):
                    f = random_series(ctx, rng, max_mu)
                    mu = milnor(f)
                    dim, _ = stratum_dim(f)
                    if not modality(f) == mu // p == dim:
                        issues.append(f"{f.to_text()}: modality {modality(f)}, mu//p {mu // p}, dim {dim}")
                    sample_stratum(f, rng, samples=3)
                    checked += 1
        except CharpError as e:
            self._fail(check_name, e, checked=checked)
            return

        self.validation_results['checks'][check_name] = {
            'status': 'PASS' if not issues else 'FAIL',
            'series': checked,
            'issues': issues[:10],
        }

    def check_covering_bound(self):
        """No nearby support carries more than floor(mu/p) moduli"""
        check_name = "covering_bound"
        max_mu = self.suites.get('covering_max_mu', 6)
        rows = []
        try:
            for p in self._fields({2, 3}):
                for mu in range(1, max_mu + 1):
                    if (mu + 1) % p == 0:
                        continue
                    report = covering_bound(mu, p, self.budget)
                    rows.append(report.to_dict())
        except CharpError as e:
            self._fail(check_name, e, cases=len(rows))
            return

        self.validation_results['checks'][check_name] = {
            'status': 'PASS',
            'cases': len(rows),
            'tight_cases': sum(1 for r in rows if r['max_lambda'] == r['bound']),
            'message': f"max #Lambda <= floor(mu/p) for mu <= {max_mu}",
        }

    def check_named_example(self):
        """x^(p+1): mu = p, modality 1 and no moduli in the normal form"""
        check_name = "named_example"
        issues = []
        for p in (2, 3, 5):
            ctx = prime_field(p)
            f = Series.monomial(ctx, p + 1, p + 2)
            prof = profile_of_series(f)
            mu, mod = milnor(f), modality(f)
            if mu != p or mod != 1 or prof.lambda_set:
                issues.append(f"p={p}: mu={mu}, modality={mod}, Lambda={prof.lambda_set}")
            elif not mod > len(prof.lambda_set):
                issues.append(f"p={p}: modality does not exceed #Lambda")

        self.validation_results['checks'][check_name] = {
            'status': 'PASS' if not issues else 'FAIL',
            'issues': issues,
        }

    # ==================== ORACLE ====================

    def check_oracle(self):
        """Normal forms land in the input's orbit; m = p orbits have one lambda-vector"""
        check_name = "oracle"
        scales = self.suites.get('oracle_scales', [])
        reports = []
        skipped = []
        try:
            for scale in scales:
                ctx = field_of_degree(scale['p'], scale.get('deg', 1), self.budget)
                try:
                    report = validate_classification(ctx, scale['jet'], scale.get('m'), self.budget)
                except BudgetExceededError as e:
                    logger.warning(f"Oracle scale {scale} skipped: {e}")
                    skipped.append(scale)
                    continue
                reports.append(report.to_dict())
        except CharpError as e:
            self._fail(check_name, e, scales=reports)
            return

        unresolved = [jet for r in reports for jet in r['unresolved']]
        self.validation_results['checks'][check_name] = {
            'status': 'WARN' if unresolved or skipped else 'PASS',
            'scales': reports,
            'skipped': skipped,
            'issues': [f"unresolved: {jet}" for jet in unresolved[:10]],
        }

    # ==================== SUMMARY ====================

    def generate_statistics(self):
        """Lambda statistics over the enumerated supports"""
        df = pd.DataFrame(self._bound_rows, columns=['p', 'q', 'lambda', 'bound', 'equality', 'violation'])
        if df.empty:
            self.validation_results['statistics'] = {'total_supports': 0}
            return

        stats = {
            'total_supports': int(len(df)),
            'equality_cases': int(df['equality'].sum()),
            'by_prime': {},
        }
        for p, group in df.groupby('p'):
            slack = group['bound'] - group['lambda']
            stats['by_prime'][str(p)] = {
                'supports': int(len(group)),
                'lambda_mean': round(float(group['lambda'].mean()), 4),
                'lambda_max': int(group['lambda'].max()),
                'tight': int((slack == 0).sum()),
                'violations': int(group['violation'].sum()),
                'max_q': int(group['q'].max()),
            }

        self.validation_results['statistics'] = stats

    def calculate_health_score(self):
        """Weighted mean of the group scores; a check earns 1 for PASS and 0.5 for WARN."""
        checks = self.validation_results['checks']
        by_group = {}
        earned = 0.0
        weight_total = 0
        for group, names in CHECK_GROUPS.items():
            statuses = [checks[name]['status'] for name in names if name in checks]
            if not statuses:
                continue
            credit = sum(STATUS_CREDIT.get(s, 0.0) for s in statuses) / len(statuses)
            by_group[group] = {
                'checks': len(statuses),
                'failed': statuses.count('FAIL'),
                'score': round(100 * credit, 2),
            }
            earned += GROUP_WEIGHTS[group] * credit
            weight_total += GROUP_WEIGHTS[group]

        statuses = [c['status'] for c in checks.values()]
        self.validation_results['health_score'] = round(100 * earned / weight_total, 2) if weight_total else 0.0
        self.validation_results['summary'] = {
            'passed': statuses.count('PASS'),
            'warned': statuses.count('WARN'),
            'failed': len(statuses) - statuses.count('PASS') - statuses.count('WARN'),
            'total': len(statuses),
            'by_group': by_group,
        }

    @staticmethod
    def _check_lines(name: str, result: Dict[str, Any]) -> List[str]:
        status = result.get('status', 'UNKNOWN')
        symbol = {'PASS': "✓", 'WARN': "⚠"}.get(status, "✗")
        counted = ', '.join(f"{key} {result[key]}" for key in COUNT_KEYS if isinstance(result.get(key), int))
        lines = [f"{symbol} {name.replace('_', ' ').title()}: {status}" + (f" ({counted})" if counted else "")]
        for key in ('message', 'error'):
            if key in result:
                lines.append(f"    {result[key]}")
        lines.extend(f"    - {issue}" for issue in result.get('issues') or [])
        return lines

    def _bound_lines(self) -> List[str]:
        stats = self.validation_results.get('statistics', {})
        lines = [f"  {stats.get('total_supports', 0)} supports enumerated, "
                 f"{stats.get('equality_cases', 0)} with m = p"]
        for p, row in stats.get('by_prime', {}).items():
            lines.append(f"  p={p}: mean #Lambda {row['lambda_mean']}, max {row['lambda_max']}, "
                         f"tight {row['tight']}, over the bound {row['violations']}")
        return lines

    def generate_report(self, output_file: Optional[str] = None) -> str:
        """Text report, one section per check group"""
        results = self.validation_results
        checks = results['checks']
        summary = results.get('summary', {})
        lines = [
            "=" * 80,
            "CHAR-P CLASSIFICATION VALIDATION REPORT",
            "=" * 80,
            f"Generated: {datetime.now().isoformat()}",
            f"Seed: {results.get('seed')}    Fields: {results.get('fields')}",
            f"Health Score: {results.get('health_score', 0)}/100 "
            f"({summary.get('failed', 0)} of {summary.get('total', 0)} checks failed)",
            "",
        ]
        for group, names in CHECK_GROUPS.items():
            ran = [name for name in names if name in checks]
            if not ran:
                continue
            score = summary.get('by_group', {}).get(group, {}).get('score', 0)
            lines.append(f"{group.title()} checks (weight {GROUP_WEIGHTS[group]}, score {score}/100)")
            lines.append("-" * 80)
            for name in ran:
                lines.extend(self._check_lines(name, checks[name]))
            if 'lambda_bound' in ran:
                lines.extend(self._bound_lines())
            lines.append("")

        report_text = "\n".join(lines)

        if output_file:
            with open(output_file, 'w', encoding='utf-8') as f:
                f.write(report_text)
            logger.info(f"Validation report saved to {output_file}")
        return report_text

    def export_to_json(self, output_file: str = 'charp_validation_results.json'):
        """Export validation results to JSON"""
        with open(output_file, 'w') as f:
            json.dump(self.validation_results, f, indent=2)
        logger.info(f"Validation results exported to {output_file}")


if __name__ == '__main__':
    config = load_config()
    setup_logging(config)

    validator = ClassificationValidator(config=config)
    results = validator.run_all_validations()

    print(validator.generate_report('charp_validation_report.txt'))
    validator.export_to_json()

    if results['summary']['failed']:
        raise SystemExit(3)
