"""
Configuration management for the ordinal encoding experiment harness.

Handles environment settings (logging, default output directory, worker
count) and parses the flat key-value experiment configuration files.
"""

import os
import logging
import math
from typing import Any, Callable, Dict, Optional, Tuple

from .exceptions import ConfigurationError
from .models import ExperimentConfig, Scheme


class Config:
    """
    Environment configuration manager.

    Reads settings from environment variables once; experiment files are
    handled separately by ``load_experiment_config``.
    """

    def __init__(self):
        """Initialize configuration manager."""
        self.logger = logging.getLogger(__name__)
        self._config = self._load_configuration()
        self._validate_configuration()

    def _load_configuration(self) -> Dict[str, Any]:
        """
        Load configuration from environment variables.

        Returns:
            Dictionary containing all configuration settings
        """
        return {
            'environment': os.getenv('ENVIRONMENT', 'development').lower(),
            'debug': os.getenv('DEBUG', 'false').lower() == 'true',
            'harness': self._get_harness_config(),
            'logging': self._get_logging_config()
        }

    def _get_harness_config(self) -> Dict[str, Any]:
        """Get harness defaults."""
        return {
            'output_dir': os.getenv('ORDINAL_OUTPUT_DIR', 'runs'),
            'workers': _env_int('ORDINAL_WORKERS', 1),
        }

    def _get_logging_config(self) -> Dict[str, Any]:
        """Get logging configuration."""
        return {
            'level': os.getenv('LOG_LEVEL', 'INFO').upper(),
            'format': os.getenv('LOG_FORMAT', '%(asctime)s - %(name)s - %(levelname)s - %(message)s'),
            'file_enabled': os.getenv('LOG_TO_FILE', 'false').lower() == 'true',
            'file_path': os.getenv('LOG_FILE_PATH', 'ordinal.log'),
            # 10MB
            'max_file_size': _env_int('LOG_MAX_FILE_SIZE', 10485760),
            'backup_count': _env_int('LOG_BACKUP_COUNT', 5),
        }

    def _validate_configuration(self) -> None:
        """
        Validate the loaded configuration.

        Raises:
            ConfigurationError: If configuration is invalid
        """
        level = self._config['logging']['level']
        if not isinstance(logging.getLevelName(level), int):
            raise ConfigurationError(f"LOG_LEVEL '{level}' is not a logging level", "LOG_LEVEL")
        if self._config['harness']['workers'] < 1:
            raise ConfigurationError("ORDINAL_WORKERS must be at least 1", "ORDINAL_WORKERS")

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value by key.

        Args:
            key: Configuration key (supports dot notation, e.g., 'logging.level')
            default: Default value if key not found

        Returns:
            Configuration value
        """
        value = self._config
        try:
            for k in key.split('.'):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def is_debug(self) -> bool:
        """Check if debug mode is enabled."""
        return self._config['debug']

    def setup_logging(self) -> None:
        """Configure the root logger; records go to stderr so stdout stays clean."""
        log_config = self._config['logging']
        level = logging.DEBUG if self.is_debug() else getattr(logging, log_config['level'])

        logging.basicConfig(level=level, format=log_config['format'], force=True)

        if log_config['file_enabled']:
            from logging.handlers import RotatingFileHandler

            file_handler = RotatingFileHandler(
                log_config['file_path'],
                maxBytes=log_config['max_file_size'],
                backupCount=log_config['backup_count']
            )
            file_handler.setFormatter(logging.Formatter(log_config['format']))
            logging.getLogger().addHandler(file_handler)

    def to_dict(self) -> Dict[str, Any]:
        return {section: (dict(values) if isinstance(values, dict) else values)
                for section, values in self._config.items()}


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got '{raw}'", name)


# Global configuration instance
_config_instance: Optional[Config] = None


def get_config() -> Config:
    """
    Get the global configuration instance.

    Returns:
        Config instance
    """
    global _config_instance

    if _config_instance is None:
        _config_instance = Config()

    return _config_instance


def reload_config() -> Config:
    """
    Reload configuration from environment variables.

    Returns:
        New Config instance
    """
    global _config_instance
    _config_instance = Config()
    return _config_instance


# Experiment file parsing

def _parse_float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ('true', 'yes', '1'):
        return True
    if lowered in ('false', 'no', '0'):
        return False
    raise ValueError(f"'{text}' is not a boolean")


def _parse_list(item: Callable[[str], Any]) -> Callable[[str], Tuple[Any, ...]]:
    def parse(text: str) -> Tuple[Any, ...]:
        parts = [p.strip() for p in text.split(',') if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(item(p) for p in parts)
    return parse


def parse_positions(text: str) -> Tuple[float, ...]:
    # Positions may be written as multiples of pi, e.g. "0, 0.5pi, pi, 1.5pi".
    def one(part: str) -> float:
        part = part.replace(' ', '').lower()
        if part.endswith('pi'):
            coefficient = part[:-2]
            return (float(coefficient) if coefficient else 1.0) * math.pi
        return _parse_float(part)
    return _parse_list(one)(text)


def _parse_scheme(text: str) -> Scheme:
    try:
        return Scheme(text.strip())
    except ValueError:
        choices = ", ".join(s.value for s in Scheme)
        raise ValueError(f"unknown scheme '{text}' (expected one of: {choices})")


# key -> parser; every key an experiment file may contain.
EXPERIMENT_KEYS: Dict[str, Callable[[str], Any]] = {
    'scheme': _parse_scheme,
    's': _parse_float,
    'positions': parse_positions,
    'target_mass': _parse_float,
    'num_classes': int,
    'angular_noise': _parse_float,
    'distractor_dims': int,
    'label_noise': _parse_float,
    'noise_structure': str,
    'data_seed': int,
    'train_sizes': _parse_list(int),
    'validation_per_class': int,
    'test_per_class': int,
    'eval_labels': str,
    'steps': int,
    'checkpoint_interval': int,
    'batch_size': int,
    'learning_rate': _parse_float,
    'beta1': _parse_float,
    'beta2': _parse_float,
    'epsilon': _parse_float,
    'hidden_layers': _parse_list(int),
    'activation': str,
    'seeds': _parse_list(int),
    'output_dir': str,
    'workers': int,
    'save_checkpoints': _parse_bool,
}


def parse_experiment_text(text: str) -> Dict[str, Any]:
    """
    Parse flat key-value text into typed values.

    Raises:
        ConfigurationError: On unknown, duplicate or malformed keys.
    """
    values: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigurationError(f"line {number}: expected 'key = value'", key or None)
        if key not in EXPERIMENT_KEYS:
            raise ConfigurationError(f"line {number}: unknown key '{key}'", key)
        if key in values:
            raise ConfigurationError(f"line {number}: duplicate key '{key}'", key)
        try:
            values[key] = EXPERIMENT_KEYS[key](value)
        except ValueError as e:
            raise ConfigurationError(f"line {number}: invalid value for '{key}': {e}", key)
    return values


def build_experiment_config(values: Dict[str, Any]) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed values, filling environment defaults."""
    if 'scheme' not in values:
        raise ConfigurationError("missing required key 'scheme'", "scheme")
    env = get_config()
    values = dict(values)
    values.setdefault('output_dir', env.get('harness.output_dir'))
    values.setdefault('workers', env.get('harness.workers'))
    return ExperimentConfig(**values)


def load_experiment_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Load and validate an experiment configuration file.

    Args:
        path: Path of the key-value file
        overrides: Already-typed values that replace file values (command-line flags)

    Returns:
        ExperimentConfig: Validated configuration

    Raises:
        ConfigurationError: If the file is unreadable or invalid
    """
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read config file '{path}': {e}")
    values = parse_experiment_text(text)
    values.update(overrides or {})
    config = build_experiment_config(values)
    logging.getLogger(__name__).info(f"Loaded experiment config {path} ({config.variant})")
    return config
