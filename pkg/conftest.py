"""Shared fixtures; living at the repository root also puts the flat modules on sys.path"""
import json

import pytest

from aqs_protocol import SessionConfig
from dqotp import DecoyLoop, SecretKey
from qubit_core import IdealComparator, QubitSeq, SwapTestComparator

EXAMPLE_CONFIG = {
    "n": 4,
    "key_a": "1011",
    "key_b": "101101",
    "message": "0000",
    "r_loop": ["0", "1", "+"],
    "comparator": {"kind": "ideal", "epsilon": 1e-9},
    "seed": 7,
}


@pytest.fixture
def example_key():
    return SecretKey("1011")


@pytest.fixture
def example_loop():
    return DecoyLoop(("0", "1", "+"))


@pytest.fixture
def example_cfg(example_key, example_loop):
    """The worked-example session: n = 4, K_A = 1011"""
    return SessionConfig(4, example_key, SecretKey("101101"), example_loop, IdealComparator(), seed=7)


@pytest.fixture
def swap_cfg(example_cfg):
    return SessionConfig(example_cfg.n, example_cfg.key_a, example_cfg.key_b, example_cfg.loop,
                         SwapTestComparator(5), seed=7)


@pytest.fixture
def zeros():
    return QubitSeq.from_labels("0000")


@pytest.fixture
def raw_config():
    return json.loads(json.dumps(EXAMPLE_CONFIG))


@pytest.fixture
def config_file(tmp_path, raw_config):
    """Write a run file and return a factory that accepts field overrides"""

    def write(**overrides):
        data = dict(raw_config)
        data.update(overrides)
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write
