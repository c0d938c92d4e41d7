"""
Char-p Classifier Configuration
Version: 1.0
Purpose: Load budgets, suite scales and logging settings from charp_config.json, .env and CLI overrides
"""

import copy
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

CONFIG_FILE = Path(__file__).parent / 'charp_config.json'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

DEFAULT_CONFIG: Dict[str, Any] = {
    'budget': {
        'group_budget': 1_000_000,
        'max_field_degree': 24,
        'search_limit': 4096,
        'enumeration_nmax': 24,
    },
    'logging': {
        'level': 'INFO',
        'log_file': '',
    },
    'suites': {
        'seed': 2012,
        'bound_nmax': 18,
        'invariance_pairs': 500,
        'witness_series': 200,
        'witness_max_mu': 15,
        'determinacy_pairs': 100,
        'modality_series': 50,
        'modality_max_mu': 20,
        'covering_max_mu': 6,
        'fields': [2, 3, 5],
        'oracle_scales': [
            {'p': 2, 'deg': 1, 'jet': 5},
            {'p': 2, 'deg': 1, 'jet': 7, 'm': 2},
            {'p': 3, 'deg': 1, 'jet': 4},
            {'p': 2, 'deg': 2, 'jet': 4},
        ],
    },
}

# env var -> key inside the 'budget' section
ENV_BUDGET_KEYS = {
    'CHARP_BUDGET': 'group_budget',
    'CHARP_MAX_FIELD_DEGREE': 'max_field_degree',
    'CHARP_SEARCH_LIMIT': 'search_limit',
}


class Budget(BaseModel):
    """Desk-scale caps; every operation that can blow up takes one."""

    group_budget: int = Field(1_000_000, ge=1, description="Max |field|^d for group/jet enumeration")
    max_field_degree: int = Field(24, ge=1, le=64, description="Max working extension degree over F_p")
    search_limit: int = Field(4096, ge=2, description="Max field size for exhaustive element search")
    enumeration_nmax: int = Field(24, ge=1, le=30, description="Max nmax for powerset support enumeration")

    @field_validator('search_limit')
    @classmethod
    def validate_search_limit(cls, v):
        if v > 1 << 20:
            raise ValueError('search_limit above 2^20 is not a desk-scale search')
        return v


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_file: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from file, then apply CHARP_* environment overrides
    """
    path = Path(config_file) if config_file else CONFIG_FILE
    config = copy.deepcopy(DEFAULT_CONFIG)

    if path.exists():
        with open(path, 'r') as f:
            config = _merge(config, json.load(f))
    else:
        logger.info(f"Config file {path} not found, using defaults")

    for env_name, key in ENV_BUDGET_KEYS.items():
        raw = os.getenv(env_name)
        if raw:
            try:
                config['budget'][key] = int(raw)
            except ValueError:
                logger.warning(f"Ignoring non-integer {env_name}={raw!r}")

    if os.getenv('CHARP_LOG_LEVEL'):
        config['logging']['level'] = os.getenv('CHARP_LOG_LEVEL')
    if os.getenv('CHARP_LOG_FILE'):
        config['logging']['log_file'] = os.getenv('CHARP_LOG_FILE')

    return config


def budget_from_config(config: Optional[Dict[str, Any]] = None, **overrides) -> Budget:
    values = dict((config or load_config())['budget'])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Budget(**values)


def default_budget() -> Budget:
    """Budget from the built-in defaults plus CHARP_* environment variables."""
    values = dict(DEFAULT_CONFIG['budget'])
    for env_name, key in ENV_BUDGET_KEYS.items():
        raw = os.getenv(env_name)
        if raw and raw.isdigit():
            values[key] = int(raw)
    return Budget(**values)


def setup_logging(config: Optional[Dict[str, Any]] = None, level: Optional[str] = None):
    """Configure root logging for entry points; library modules only get loggers."""
    settings = (config or DEFAULT_CONFIG)['logging']
    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.get('log_file'):
        handlers.append(logging.FileHandler(settings['log_file']))
    logging.basicConfig(
        level=getattr(logging, (level or settings.get('level') or 'INFO').upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
