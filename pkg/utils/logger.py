import logging
import os
import yaml
from pathlib import Path
from typing import Optional

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "default_config.yaml"

# ZSL_LOG values and the logging levels they select
ENV_LEVELS = {
    'error': logging.ERROR,
    'info': logging.INFO,
    'debug': logging.DEBUG
}


def setup_logger(config_path: Optional[str] = None, log_file: Optional[str] = None):
    """Configure root logging from the YAML `logging_config` section.

    The ZSL_LOG environment variable overrides the configured level.
    """
    with open(config_path or DEFAULT_CONFIG_PATH, 'r') as f:
        config = yaml.safe_load(f)

    log_config = config['logging_config']
    level = getattr(logging, log_config['level'])

    env_level = os.environ.get('ZSL_LOG')
    bad_env_level = env_level is not None and env_level.lower() not in ENV_LEVELS
    if env_level is not None and not bad_env_level:
        level = ENV_LEVELS[env_level.lower()]

    handlers = [logging.StreamHandler()]
    file_path = log_file or log_config.get('file')
    if file_path:
        Path(file_path).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(file_path))

    logging.basicConfig(
        level=level,
        format=log_config['format'],
        handlers=handlers,
        force=True
    )

    logger = logging.getLogger('zsl_ldf')
    if bad_env_level:
        logger.warning(f"Ignoring unknown ZSL_LOG value '{env_level}'")
    return logger
