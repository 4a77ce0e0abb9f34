import os
import logging
from typing import Dict, Optional, Union

from dotenv import load_dotenv

from config.settings import settings
from utils.exceptions import InvalidConfigurationError

logger = logging.getLogger(__name__)

# Environment variable -> Settings attribute
_INTEGER_OVERRIDES = {
    'WALGEBRA_FLOOR_PADDING': 'FLOOR_PADDING',
    'WALGEBRA_MARGIN': 'CONVERGENCE_MARGIN',
    'WALGEBRA_JOBS': 'DEFAULT_JOBS',
    'WALGEBRA_INDEX_LIMIT': 'INFINITE_INDEX_LIMIT',
    'WALGEBRA_ORACLE_SAMPLES': 'ORACLE_SAMPLES',
    'WALGEBRA_SEED': 'RANDOM_SEED',
}


def load_runtime_overrides(env_file: Optional[str] = '.env') -> Dict[str, Union[int, str]]:
    """
    Load optional tuning overrides from environment variables or a .env file.

    Nothing is required; unset variables keep the defaults in config.settings.

    Args:
        env_file: Path to .env file (default: .env in current directory)

    Returns:
        Dictionary of applied overrides (setting name -> value)
    """
    if env_file and os.path.isfile(env_file):
        load_dotenv(env_file)
        logger.info(f"Loaded environment variables from {env_file}")

    applied: Dict[str, Union[int, str]] = {}
    for variable, attribute in _INTEGER_OVERRIDES.items():
        raw = os.environ.get(variable)
        if raw is None or raw == '':
            continue
        try:
            value = int(raw)
        except ValueError:
            raise InvalidConfigurationError(variable, f"Expected an integer, got '{raw}'")
        if value < 0:
            raise InvalidConfigurationError(variable, f"Expected a non-negative integer, got {value}")
        setattr(settings, attribute, value)
        applied[attribute] = value
        logger.debug(f"Override {attribute}={value} from {variable}")

    fmt = os.environ.get('WALGEBRA_FORMAT')
    if fmt:
        if fmt not in ('text', 'latex', 'json'):
            raise InvalidConfigurationError('WALGEBRA_FORMAT', f"Unknown output format '{fmt}'")
        settings.DEFAULT_FORMAT = fmt
        applied['DEFAULT_FORMAT'] = fmt

    return applied
