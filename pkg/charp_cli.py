"""
Char-p Classifier Command Line
Version: 1.0
Purpose: Parse fields and series, dispatch classification jobs and emit deterministic JSON, text or CSV reports
"""

import argparse
import json
import logging
import random
import sys
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, Field, field_validator

from charp_config import Budget, budget_from_config, load_config, setup_logging
from charp_errors import CharpError
from charp_field import FieldCtx, field_from_spec, prime_field
from charp_moduli import INFINITY, milnor, modality, moduli_report, sample_stratum, stratum_dim, unfolding_basis
from charp_oracle import orbit_partition, validate_classification
from charp_profile import bound_report, profile_of_series, profile_of_support, support_sets
from charp_reduce import determinacy_bound, match_jets, normal_form
from charp_series import Series, parse_series as _parse_text, series_from_json

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    'invariants', 'normal-form', 'milnor', 'modality', 'determinacy', 'match-jets',
    'verify-lambda-bound', 'orbits', 'unfolding', 'stratum', 'validate',
)


class JobSpec(BaseModel):
    """One CLI invocation, fully resolved."""
    subcommand: str
    p: int = Field(2, ge=2, description="Characteristic")
    deg: int = Field(1, ge=1, description="Extension degree of the coefficient field")
    modulus: Optional[str] = None
    series: List[str] = Field(default_factory=list)
    support: Optional[List[int]] = None
    trunc: Optional[int] = Field(None, ge=1)
    output_format: str = 'json'
    seed: int = 2012
    budget: Optional[int] = Field(None, ge=1)
    nmax: int = Field(18, ge=1)
    max_size: Optional[int] = Field(None, ge=1)
    jet: int = Field(4, ge=1)
    validate_orbits: bool = False
    m_filter: Optional[int] = None
    samples: int = Field(10, ge=0)
    config_file: Optional[str] = None

    @field_validator('subcommand')
    @classmethod
    def validate_subcommand(cls, v):
        if v not in SUBCOMMANDS:
            raise ValueError(f'unknown subcommand {v!r}')
        return v

    @field_validator('output_format')
    @classmethod
    def validate_format(cls, v):
        if v not in ('json', 'text', 'csv'):
            raise ValueError('format must be json, text or csv')
        return v


# ==================== INPUT ====================

def parse_series(text: str, ctx: FieldCtx, trunc: Optional[int] = None) -> Series:
    """Series from text or, when it starts with '{', from the JSON form."""
    if text.lstrip().startswith('{'):
        s = series_from_json(text, ctx)
        return s if trunc is None else s.as_polynomial(trunc)
    return _parse_text(text, ctx, trunc)


def resolve_trunc(f: Series) -> int:
    """max(top exponent, dbar + 1) for inputs given as polynomials."""
    g = f.without_constant()
    if g.is_zero():
        return max(f.trunc, 1)
    return max(f.max_exponent(), profile_of_series(g).dbar + 1)


def _load_series(job: JobSpec, ctx: FieldCtx, text: str) -> Series:
    if job.trunc is not None:
        return parse_series(text, ctx, job.trunc)
    f = parse_series(text, ctx)
    return f.as_polynomial(resolve_trunc(f))


# ==================== HANDLERS ====================

def _series_context(ctx: FieldCtx, f: Series) -> Dict[str, Any]:
    return {'field': ctx.to_text(), 'trunc': f.trunc}


def _handle_series(job: JobSpec, ctx: FieldCtx, budget: Budget) -> Dict[str, Any]:
    expected = 2 if job.subcommand == 'match-jets' else 1
    if len(job.series) != expected:
        raise CharpError(f"{job.subcommand} takes {expected} series argument(s), got {len(job.series)}")
    f = _load_series(job, ctx, job.series[0])
    cmd = job.subcommand

    if cmd == 'invariants':
        report = profile_of_series(f.without_constant()).to_dict()
    elif cmd == 'normal-form':
        result = normal_form(f, budget)
        report = result.to_dict()
        report['trunc'] = f.trunc
        return report
    elif cmd == 'milnor':
        mu = milnor(f)
        report = {'mu': mu if mu != INFINITY else 'infinity'}
    elif cmd == 'modality':
        mu = milnor(f)
        report = {'mu': mu if mu != INFINITY else 'infinity', 'modality': modality(f)}
    elif cmd == 'determinacy':
        report = determinacy_bound(f).to_dict()
    elif cmd == 'match-jets':
        g = _load_series(job, ctx, job.series[1])
        phi = match_jets(f, g, budget)
        report = {'phi': phi.to_pairs(), 'field': phi.ctx.to_text(), 'trunc': min(f.trunc, g.trunc)}
        return report
    elif cmd == 'unfolding':
        basis = unfolding_basis(f)
        report = {'mu': len(basis), 'basis': basis}
    else:
        dim, free = stratum_dim(f)
        report = {'dim': dim, 'free': free, 'moduli': moduli_report(f).to_dict()}
        if job.samples:
            report['sample'] = sample_stratum(f, random.Random(job.seed), job.samples).to_dict()
    report.update(_series_context(ctx, f))
    return report


def _handle_bound(job: JobSpec, budget: Budget) -> Tuple[Dict[str, Any], pd.DataFrame]:
    prime_field(job.p)
    rows = []
    violations = []
    for delta in support_sets(job.p, job.nmax, job.max_size, budget):
        r = bound_report(delta, job.p)
        rows.append({'q': r.q, 'lambda': r.lambda_count, 'bound': r.bound,
                     'equality': r.equality_required, 'violation': not r.ok})
        if not r.ok:
            violations.append({'support': r.delta, 'case': r.case, 'lambda': r.lambda_count,
                               'bound': r.bound, 'known_gap': r.known_gap})
    df = pd.DataFrame(rows, columns=['q', 'lambda', 'bound', 'equality', 'violation'])
    table = (df.groupby('q')
               .agg(supports=('lambda', 'size'), max_lambda=('lambda', 'max'), bound=('bound', 'first'),
                    equality_cases=('equality', 'sum'), violations=('violation', 'sum'))
               .reset_index())
    if violations:
        logger.warning(f"Lambda bound exceeded on {len(violations)} supports (p={job.p}, nmax={job.nmax}), "
                       f"first {violations[0]['support']}")
    summary = {
        'p': job.p,
        'nmax': job.nmax,
        'supports': int(len(df)),
        'violations': len(violations),
        'known_gap_violations': sum(1 for v in violations if v['known_gap']),
        'equality_cases': int(df['equality'].sum()) if len(df) else 0,
        'by_q': [{k: int(v) for k, v in row.items()} for row in table.to_dict(orient='records')],
        'violating_supports': violations,
    }
    return summary, table


def _handle_orbits(job: JobSpec, ctx: FieldCtx, budget: Budget) -> Tuple[Dict[str, Any], pd.DataFrame]:
    table = orbit_partition(ctx, job.jet, budget)
    report = table.to_dict()
    if job.validate_orbits:
        report['validation'] = validate_classification(ctx, job.jet, job.m_filter, budget, table).to_dict()
    rows = table.csv_rows()
    return report, pd.DataFrame(rows[1:], columns=rows[0])


def _handle_validate(job: JobSpec, config: Dict[str, Any], budget: Budget) -> Dict[str, Any]:
    from charp_validator import ClassificationValidator

    validator = ClassificationValidator(config=config, budget=budget, seed=job.seed)
    return validator.run_all_validations()


def run(job: JobSpec) -> Tuple[int, str]:
    """Execute a job; returns (exit code, rendered report)."""
    try:
        config = load_config(job.config_file)
        budget = budget_from_config(config, group_budget=job.budget)
        logger.info(f"Running {job.subcommand} (p={job.p}, deg={job.deg})")
        table = None
        if job.subcommand == 'verify-lambda-bound':
            report, table = _handle_bound(job, budget)
        elif job.subcommand == 'validate':
            report = _handle_validate(job, config, budget)
        else:
            ctx = field_from_spec(job.p, job.deg, job.modulus, budget)
            if job.subcommand == 'orbits':
                report, table = _handle_orbits(job, ctx, budget)
            elif job.subcommand == 'invariants' and job.support is not None:
                report = profile_of_support(job.support, job.p).to_dict()
            else:
                report = _handle_series(job, ctx, budget)
        code = 0
        if job.subcommand == 'validate' and report.get('summary', {}).get('failed', 0):
            code = 3
        elif job.subcommand == 'verify-lambda-bound' and report['violations']:
            code = 3
        return code, render(report, job.output_format, table)
    except CharpError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code, render(e.to_dict(), job.output_format)


# ==================== OUTPUT ====================

def _flatten(report: Dict[str, Any], prefix: str = '') -> List[Tuple[str, Any]]:
    items = []
    for key, value in report.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            items.extend(_flatten(value, name + '.'))
        else:
            items.append((name, json.dumps(value, separators=(',', ':')) if isinstance(value, list) else value))
    return items


def render(report: Dict[str, Any], fmt: str, table: Optional[pd.DataFrame] = None) -> str:
    if fmt == 'json':
        return json.dumps(report, separators=(',', ':'))
    if fmt == 'csv':
        if table is None:
            table = pd.DataFrame(_flatten(report), columns=['key', 'value'])
        return table.to_csv(index=False).rstrip('\n')
    return '\n'.join(f"{key}: {value}" for key, value in _flatten(report))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--p', type=int, default=2, help='characteristic')
    common.add_argument('--deg', type=int, default=1, help='extension degree of the coefficient field')
    common.add_argument('--modulus', default=None, help="defining polynomial in g, e.g. 'g^2+g+1'")
    common.add_argument('--trunc', type=int, default=None, help='truncation order of series inputs')
    common.add_argument('--format', dest='output_format', choices=['json', 'text', 'csv'], default='json')
    common.add_argument('--seed', type=int, default=2012)
    common.add_argument('--budget', type=int, default=None, help='group/enumeration budget (overrides CHARP_BUDGET)')
    common.add_argument('--config', dest='config_file', default=None)
    common.add_argument('--log-level', default=None)

    parser = argparse.ArgumentParser(prog='charp', description='Right classification of power series in characteristic p')
    sub = parser.add_subparsers(dest='subcommand', required=True)

    for name in ('normal-form', 'milnor', 'modality', 'determinacy', 'unfolding'):
        sub.add_parser(name, parents=[common]).add_argument('series')
    inv = sub.add_parser('invariants', parents=[common])
    inv.add_argument('series', nargs='?')
    inv.add_argument('--support', default=None, help="comma-separated support set instead of a series")
    stratum = sub.add_parser('stratum', parents=[common])
    stratum.add_argument('series')
    stratum.add_argument('--samples', type=int, default=10)
    match = sub.add_parser('match-jets', parents=[common])
    match.add_argument('series', nargs=2)
    bound = sub.add_parser('verify-lambda-bound', parents=[common])
    bound.add_argument('--nmax', type=int, default=18)
    bound.add_argument('--max-size', type=int, default=None)
    orbits = sub.add_parser('orbits', parents=[common])
    orbits.add_argument('--jet', type=int, default=4)
    orbits.add_argument('--validate', dest='validate_orbits', action='store_true')
    orbits.add_argument('--m', dest='m_filter', type=int, default=None)
    sub.add_parser('validate', parents=[common])
    return parser


def job_from_args(args: argparse.Namespace) -> JobSpec:
    values = {k: v for k, v in vars(args).items() if v is not None and k != 'log_level'}
    series = values.pop('series', None)
    if series is not None:
        values['series'] = list(series) if isinstance(series, list) else [series]
    support = values.pop('support', None)
    if support is not None:
        values['support'] = [int(x) for x in support.split(',') if x.strip()]
    return JobSpec(**values)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(load_config(args.config_file), args.log_level)
    try:
        job = job_from_args(args)
    except ValueError as e:
        # pydantic ValidationError and bad --support lists
        logger.error(f"Invalid job: {e}")
        print(render({'error': 'JobSpecError', 'message': str(e)}, getattr(args, 'output_format', 'json')))
        return 2
    code, output = run(job)
    print(output)
    return code


if __name__ == '__main__':
    sys.exit(main())
