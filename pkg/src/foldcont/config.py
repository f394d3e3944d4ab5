"""Run configuration: flat key=value sections, strict schema, lossless dump.

Unknown sections or keys are rejected.  Floats are serialized with 17
significant digits so a dumped config reproduces the run bit-for-bit.
"""

from __future__ import annotations

import configparser
import io
import json
import os
import tempfile

from .errors import ConfigError

__all__ = ["RunConfig", "fmt_float", "json_dumps_17", "atomic_write"]


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


# (type tag, default); type tags: int, float, str, bool, floatlist
_SCHEMA = {
    "problem": {
        "nonlinearity": ("str", "exp"),
        "domain": ("str", "interval:512"),
        "diffeo_amplitude": ("float", 0.0),
        "diffeo_modes": ("int", 4),
    },
    "continuation": {
        "ds_init": ("float", 0.1),
        "ds_min": ("float", 1e-8),
        "ds_max": ("float", 0.5),
        "mu_floor": ("float", 0.05),
        "norm_cap": ("float", 10.0),
        "max_steps": ("int", 1000),
        "omega": ("float", 0.5),
        "newton_tol": ("float", 1e-10),
        "max_newton": ("int", 25),
        "switch_ratio": ("float", 0.2),
        "fold_tol": ("float", 1e-8),
        "snapshot_every": ("int", 1),
        "eig_k": ("int", 4),
        "cr_window": ("int", 4),
    },
    "shape": {
        "mu_target": ("float", 1.0),
        "field_index": ("int", 0),
        "field_scale": ("float", 1.0),
        "epsilons": ("floatlist", (1e-2, 1e-3, 1e-4)),
        "hadamard_threshold": ("float", 0.05),
        "skip_hadamard": ("bool", False),
    },
    "experiment": {
        "n_samples": ("int", 20),
        "amplitude": ("float", 0.02),
        "n_modes": ("int", 3),
    },
    "oracle": {
        "b_grid": ("floatlist", (0.5, 1.0, 2.0)),
        "fold_bisect": ("bool", True),
    },
    "spectrum": {
        "mu": ("float", 1.0),
        "k": ("int", 6),
    },
    "run": {
        "seed": ("int", 0),
        "out_dir": ("str", "out"),
        "jobs": ("int", 1),
    },
}

# defaults that depend on the domain kind, applied unless set explicitly
_DOMAIN_DEFAULTS = {
    "disk": {("continuation", "mu_floor"): 0.15,
             ("continuation", "norm_cap"): 9.0},
}


def _parse_value(tag, raw):
    if tag == "int":
        return int(raw)
    if tag == "float":
        return float(raw)
    if tag == "str":
        return str(raw)
    if tag == "bool":
        low = str(raw).strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if tag == "floatlist":
        raw = str(raw).strip()
        if not raw:
            return ()
        return tuple(float(v) for v in raw.split(","))
    raise ValueError(f"unknown schema tag {tag}")


def _format_value(tag, val):
    if tag == "float":
        return fmt_float(val)
    if tag == "floatlist":
        return ",".join(fmt_float(v) for v in val)
    if tag == "bool":
        return "true" if val else "false"
    return str(val)


class RunConfig:
    """Validated flat configuration with domain-aware defaults."""

    def __init__(self):
        self.values = {}
        self.explicit = set()
        for sec, keys in _SCHEMA.items():
            for key, (tag, default) in keys.items():
                self.values[(sec, key)] = default

    def get(self, section: str, key: str):
        try:
            return self.values[(section, key)]
        except KeyError:
            raise ConfigError(f"unknown config key [{section}] {key}")

    def set(self, section: str, key: str, value):
        if (section, key) not in self.values:
            raise ConfigError(f"unknown config key [{section}] {key}")
        tag = _SCHEMA[section][key][0]
        if isinstance(value, str):
            try:
                value = _parse_value(tag, value)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for [{section}] {key}: {exc}") from exc
        self.values[(section, key)] = value
        self.explicit.add((section, key))

    def resolve(self):
        """Apply domain-dependent defaults and validate cross-field rules."""
        kind = str(self.get("problem", "domain")).split(":", 1)[0]
        for (sec, key), val in _DOMAIN_DEFAULTS.get(kind, {}).items():
            if (sec, key) not in self.explicit:
                self.values[(sec, key)] = val
        if self.get("continuation", "mu_floor") <= 0.0:
            raise ConfigError("[continuation] mu_floor must be positive")
        if self.get("continuation", "norm_cap") <= 0.0:
            raise ConfigError("[continuation] norm_cap must be positive")
        return self

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        read = cp.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path!r}")
        cfg = cls()
        for sec in cp.sections():
            if sec not in _SCHEMA:
                raise ConfigError(f"unknown config section [{sec}]")
            for key, raw in cp.items(sec):
                cfg.set(sec, key, raw)
        return cfg

    def dump(self) -> str:
        out = io.StringIO()
        for sec in _SCHEMA:
            out.write(f"[{sec}]\n")
            for key, (tag, _) in _SCHEMA[sec].items():
                out.write(f"{key} = "
                          f"{_format_value(tag, self.values[(sec, key)])}\n")
            out.write("\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        cfg = cls()
        for sec in cp.sections():
            if sec not in _SCHEMA:
                raise ConfigError(f"unknown config section [{sec}]")
            for key, raw in cp.items(sec):
                cfg.set(sec, key, raw)
        return cfg


# ----------------------------------------------------------------------
# deterministic JSON with 17-significant-digit floats
# ----------------------------------------------------------------------

def _json_write(obj, out):
    if obj is None:
        out.write("null")
    elif obj is True:
        out.write("true")
    elif obj is False:
        out.write("false")
    elif isinstance(obj, int):
        out.write(str(obj))
    elif isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            out.write(json.dumps(str(obj)))
        else:
            out.write(fmt_float(obj))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        out.write("[")
        for i, item in enumerate(obj):
            if i:
                out.write(", ")
            _json_write(item, out)
        out.write("]")
    elif isinstance(obj, dict):
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.write(", ")
            out.write(json.dumps(str(k)))
            out.write(": ")
            _json_write(v, out)
        out.write("}")
    else:
        # numpy scalars and the like
        if hasattr(obj, "item"):
            _json_write(obj.item(), out)
        else:
            raise TypeError(f"not JSON-serializable: {type(obj)}")


def json_dumps_17(obj) -> str:
    out = io.StringIO()
    _json_write(obj, out)
    return out.getvalue()


def atomic_write(path: str, text: str):
    """Write via a temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
