"""
Run configuration validation for the AQS simulator
Parses the JSON run file into a SessionConfig with field-precise errors
"""
import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from aqs_protocol import ConfigError, SessionConfig
from dqotp import DecoyLoop, SecretKey
from qubit_core import (
    IdealComparator,
    InvalidArgumentError,
    Qubit,
    QubitSeq,
    STANDARD_LABELS,
    SwapTestComparator,
)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-9
DEFAULT_SWAP_REPETITIONS = 5
DEFAULT_LOOP = ("0", "1", "+", "-")
DEFAULT_SUCCESS_THRESHOLD = 0.0


class ConfigFileError(ValueError):
    """Run configuration could not be parsed or validated"""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class RunConfig:
    """Validated run file: the session, the message to sign and attack settings"""
    session: SessionConfig
    message: QubitSeq
    raw: Dict[str, Any]
    success_threshold: float = DEFAULT_SUCCESS_THRESHOLD
    oracle: bool = False

    def with_seed(self, seed: int) -> 'RunConfig':
        raw = dict(self.raw)
        raw['seed'] = seed
        session = replace(self.session, seed=seed)
        try:
            session.validate()
        except ConfigError as e:
            raise ConfigFileError(e.field, str(e))
        return replace(self, session=session, raw=raw)


class RunConfigValidator:
    """Field validators for the run configuration file"""

    BITS_PATTERN = re.compile(r'^[01]+$')
    MESSAGE_PATTERN = re.compile(r'^[01+\-]+$')
    MAX_CONFIG_BYTES = 1024 * 1024
    REQUIRED_KEYS = ('n', 'key_a', 'key_b', 'message', 'r_loop', 'comparator', 'seed')

    @classmethod
    def validate_n(cls, value: Any) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ConfigFileError('n', f"must be a positive integer, got {value!r}")
        return value

    @classmethod
    def validate_key(cls, value: Any, field: str) -> SecretKey:
        if not isinstance(value, str) or not cls.BITS_PATTERN.match(value):
            raise ConfigFileError(field, f"must be a bit string, got {value!r}")
        try:
            return SecretKey(value)
        except InvalidArgumentError as e:
            raise ConfigFileError(field, str(e))

    @classmethod
    def validate_message(cls, value: Any) -> QubitSeq:
        """Basis string such as '0000' or a list of [[re, im], [re, im]] amplitude pairs"""
        if isinstance(value, str):
            if not cls.MESSAGE_PATTERN.match(value):
                raise ConfigFileError('message', f"basis string may only use 0 1 + -, got {value!r}")
            return QubitSeq.from_labels(value)

        if not isinstance(value, list) or not value:
            raise ConfigFileError('message', "must be a basis string or a non-empty list of amplitude pairs")
        qubits = []
        for index, pair in enumerate(value):
            field = f"message[{index}]"
            alpha, beta = (cls._complex(entry, f"{field}[{k}]") for k, entry in enumerate(cls._pair(pair, field)))
            try:
                qubits.append(Qubit(alpha, beta))
            except InvalidArgumentError as e:
                raise ConfigFileError(field, str(e))
        return QubitSeq(tuple(qubits))

    @classmethod
    def _pair(cls, value: Any, field: str) -> List[Any]:
        if not isinstance(value, list) or len(value) != 2:
            raise ConfigFileError(field, f"expected a pair, got {value!r}")
        return value

    @classmethod
    def _complex(cls, value: Any, field: str) -> complex:
        re_im = cls._pair(value, field)
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in re_im):
            raise ConfigFileError(field, f"expected [re, im] numbers, got {value!r}")
        return complex(re_im[0], re_im[1])

    @classmethod
    def validate_loop(cls, value: Any) -> DecoyLoop:
        if not isinstance(value, list) or not value:
            raise ConfigFileError('r_loop', "must be a non-empty list of state labels")
        for index, label in enumerate(value):
            if label not in STANDARD_LABELS:
                raise ConfigFileError(f"r_loop[{index}]", f"unknown state label {label!r}")
        return DecoyLoop(tuple(value))

    @classmethod
    def validate_comparator(cls, value: Any) -> Union[IdealComparator, SwapTestComparator]:
        if not isinstance(value, dict) or 'kind' not in value:
            raise ConfigFileError('comparator', "must be an object with a 'kind' field")
        kind = value['kind']
        try:
            if kind == 'ideal':
                epsilon = value.get('epsilon', DEFAULT_EPSILON)
                if not isinstance(epsilon, (int, float)) or isinstance(epsilon, bool):
                    raise ConfigFileError('comparator.epsilon', f"must be a number, got {epsilon!r}")
                return IdealComparator(float(epsilon))
            if kind == 'swap':
                m = value.get('m', DEFAULT_SWAP_REPETITIONS)
                if isinstance(m, bool) or not isinstance(m, int):
                    raise ConfigFileError('comparator.m', f"must be a positive integer, got {m!r}")
                return SwapTestComparator(m)
        except InvalidArgumentError as e:
            raise ConfigFileError('comparator', str(e))
        raise ConfigFileError('comparator.kind', f"must be 'ideal' or 'swap', got {kind!r}")

    @classmethod
    def validate_seed(cls, value: Any) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2 ** 64:
            raise ConfigFileError('seed', f"must be an unsigned 64-bit integer, got {value!r}")
        return value

    @classmethod
    def validate_config_structure(cls, config: Any) -> RunConfig:
        """Validate every field and build the session configuration"""
        if not isinstance(config, dict):
            raise ConfigFileError('<root>', "config must be a JSON object")
        for key in cls.REQUIRED_KEYS:
            if key not in config:
                raise ConfigFileError(key, "missing required field")

        n = cls.validate_n(config['n'])
        message = cls.validate_message(config['message'])
        if len(message) != n:
            raise ConfigFileError('message', f"length {len(message)} does not match n={n}")

        session = SessionConfig(
            n=n,
            key_a=cls.validate_key(config['key_a'], 'key_a'),
            key_b=cls.validate_key(config['key_b'], 'key_b'),
            loop=cls.validate_loop(config['r_loop']),
            comparator=cls.validate_comparator(config['comparator']),
            seed=cls.validate_seed(config['seed']),
        )
        try:
            session.validate()
        except ConfigError as e:
            raise ConfigFileError(e.field, str(e))

        attack = config.get('attack', {})
        if not isinstance(attack, dict):
            raise ConfigFileError('attack', "must be an object")
        threshold = attack.get('success_threshold', DEFAULT_SUCCESS_THRESHOLD)
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)) or not 0 <= threshold <= 1:
            raise ConfigFileError('attack.success_threshold', f"must lie in [0, 1], got {threshold!r}")
        oracle = attack.get('oracle', False)
        if not isinstance(oracle, bool):
            raise ConfigFileError('attack.oracle', f"must be true or false, got {oracle!r}")

        return RunConfig(session, message, dict(config), float(threshold), oracle)


def parse_run_config(text: str, source: str = '<string>') -> RunConfig:
    if len(text) > RunConfigValidator.MAX_CONFIG_BYTES:
        raise ConfigFileError('<root>', f"config too large: {len(text)} > {RunConfigValidator.MAX_CONFIG_BYTES}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigFileError(f"{source}:{e.lineno}:{e.colno}", e.msg)
    return RunConfigValidator.validate_config_structure(data)


def load_run_config(config_path: Union[str, Path], seed_override: Optional[int] = None) -> RunConfig:
    """Read and validate a run file; the file itself is never modified"""
    path = Path(config_path)
    if not path.is_file():
        raise ConfigFileError(str(path), "config file not found")
    with open(path, 'r', encoding='utf-8') as f:
        content = f.read()
    run_config = parse_run_config(content, source=str(path))
    if seed_override is not None:
        run_config = run_config.with_seed(RunConfigValidator.validate_seed(seed_override))
    logger.info(f"Configuration loaded and validated: {path}")
    return run_config
