"""Config schema, lossless serialization, and the atomic writer."""

import json
import math

import numpy as np
import pytest

from foldcont.config import RunConfig, atomic_write, fmt_float, json_dumps_17
from foldcont.errors import ConfigError


def test_defaults_present():
    cfg = RunConfig()
    assert cfg.get("continuation", "ds_init") == 0.1
    assert cfg.get("problem", "nonlinearity") == "exp"
    assert cfg.get("shape", "epsilons") == (1e-2, 1e-3, 1e-4)
    assert cfg.get("run", "jobs") == 1


def test_unknown_keys_rejected():
    cfg = RunConfig()
    with pytest.raises(ConfigError):
        cfg.get("continuation", "nope")
    with pytest.raises(ConfigError):
        cfg.set("continuation", "nope", "1")
    with pytest.raises(ConfigError):
        RunConfig.from_text("[nosuchsection]\nfoo = 1\n")


def test_value_parsing_and_errors():
    cfg = RunConfig()
    cfg.set("continuation", "max_steps", "250")
    assert cfg.get("continuation", "max_steps") == 250
    cfg.set("shape", "skip_hadamard", "yes")
    assert cfg.get("shape", "skip_hadamard") is True
    cfg.set("shape", "epsilons", "1e-1,1e-2")
    assert cfg.get("shape", "epsilons") == (0.1, 0.01)
    with pytest.raises(ConfigError):
        cfg.set("shape", "skip_hadamard", "maybe")
    with pytest.raises(ConfigError):
        cfg.set("continuation", "ds_init", "not-a-number")


def test_dump_roundtrip_lossless():
    cfg = RunConfig()
    # a float with no short decimal representation
    cfg.set("continuation", "ds_init", str(math.pi / 7))
    cfg.set("continuation", "fold_tol", "1.2345678901234567e-9")
    text = cfg.dump()
    back = RunConfig.from_text(text)
    for key, val in cfg.values.items():
        assert back.values[key] == val, key


def test_dump_uses_17_significant_digits():
    cfg = RunConfig()
    x = math.pi / 7
    cfg.set("shape", "mu_target", str(x))
    assert f"mu_target = {format(x, '.17g')}" in cfg.dump()


def test_domain_defaults_applied_on_resolve():
    cfg = RunConfig()
    cfg.set("problem", "domain", "disk:32x64")
    cfg.resolve()
    assert cfg.get("continuation", "mu_floor") == 0.15
    assert cfg.get("continuation", "norm_cap") == 9.0


def test_explicit_value_wins_over_domain_default():
    cfg = RunConfig()
    cfg.set("problem", "domain", "disk:32x64")
    cfg.set("continuation", "norm_cap", "5.0")
    cfg.resolve()
    assert cfg.get("continuation", "norm_cap") == 5.0
    assert cfg.get("continuation", "mu_floor") == 0.15


def test_resolve_validates_bounds():
    cfg = RunConfig()
    cfg.set("continuation", "mu_floor", "-1.0")
    with pytest.raises(ConfigError):
        cfg.resolve()


def test_from_file_missing(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_file(str(tmp_path / "absent.cfg"))


def test_json_dumps_17_roundtrip():
    obj = {"a": math.pi / 7, "b": [1, 2.5, None, True, False],
           "c": {"s": "x\"y"}, "d": np.float64(1.0) / 3.0,
           "n": np.int64(7)}
    text = json_dumps_17(obj)
    back = json.loads(text)
    assert back["a"] == obj["a"]
    assert back["d"] == float(obj["d"])
    assert back["n"] == 7
    assert back["b"] == [1, 2.5, None, True, False]


def test_json_dumps_17_nonfinite_as_strings():
    text = json_dumps_17({"x": float("nan"), "y": float("inf")})
    back = json.loads(text)
    assert back["x"] == "nan"
    assert back["y"] == "inf"


def test_fmt_float_exact():
    for x in (0.1, 1.0 / 3.0, 3.513830719125161, 1e-300):
        assert float(fmt_float(x)) == x


def test_atomic_write(tmp_path):
    path = tmp_path / "sub" / "out.txt"
    atomic_write(str(path), "payload\n")
    assert path.read_text() == "payload\n"
    atomic_write(str(path), "replaced\n")
    assert path.read_text() == "replaced\n"
    # no stray temp files left behind
    assert sorted(p.name for p in path.parent.iterdir()) == ["out.txt"]
