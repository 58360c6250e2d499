"""Run configuration: a flat, typed ``key = value`` document.

Values are integers, reals, rationals (``1/4``, kept exact), booleans,
strings, or comma-separated lists of those; ``linspace(a, b, n)`` expands to
an evenly spaced list. ``#`` starts a comment. ``key: value`` is accepted as
well as ``key = value``.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import numpy as np

from .dynamics import DriveParams
from .lattice import InitialConditionSpec
from .observables import DEFAULT_ORDERS
from .simulation import SamplingPlan
from .studies import PointSpec, SweepSpec

MODES = ("single", "twin", "sweep", "scaling")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


_INT = re.compile(r"^[+-]?\d+$")
_RATIONAL = re.compile(r"^[+-]?\d+\s*/\s*\d+$")
_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)$")


def parse_scalar(text: str):
    text = text.strip()
    if _INT.match(text):
        return int(text)
    if _RATIONAL.match(text):
        num, den = (int(p) for p in text.split("/"))
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    try:
        return float(text)
    except ValueError:
        return text.strip("\"'")


def parse_value(text: str):
    text = text.strip()
    m = _LINSPACE.match(text)
    if m:
        a, b = float(parse_scalar(m.group(1))), float(parse_scalar(m.group(2)))
        return [float(v) for v in np.round(np.linspace(a, b, int(m.group(3))), 12)]
    if "," in text:
        return [parse_scalar(p) for p in text.split(",") if p.strip()]
    return parse_scalar(text)


def _is_real(v) -> bool:
    return isinstance(v, (int, float, Fraction)) and not isinstance(v, bool)


def _real(v, key):
    if not _is_real(v):
        raise ConfigError(f"expected a number, got {v!r}", key)
    return v if isinstance(v, Fraction) else float(v)


def _int(v, key):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ConfigError(f"expected an integer, got {v!r}", key)
    return v


def _bool(v, key):
    if not isinstance(v, bool):
        raise ConfigError(f"expected true/false, got {v!r}", key)
    return v


def _str(v, key):
    return str(v)


def _list(conv):
    def convert(v, key):
        items = v if isinstance(v, list) else [v]
        return tuple(conv(x, key) for x in items)
    return convert


def _order(v, key):
    v = _real(v, key)
    return v if isinstance(v, Fraction) else Fraction(str(v))


def _realizations(v, key):
    if v == "auto":
        return "auto"
    return _int(v, key)


_CONVERTERS = {
    "L": _int, "omega": _real, "g": _real, "h": _real, "W": _real, "delta": _real,
    "seed": _int, "n_periods": _int, "mode": _str, "output": _str,
    "dense_until": _int, "geometric_samples": _int, "align": _int,
    "window_start": _int, "window_end": _int,
    "snapshot_times": _list(_int), "slice_axis": _str, "slice_layer": _int,
    "snapshot_format": _str,
    "renormalize_every": _int, "checkpoint_every": _int,
    "stop_at_thermalization": _bool,
    "g_values": _list(_real), "omega_values": _list(_real), "L_values": _list(_int),
    "realizations": _realizations, "workers": _int, "orders": _list(_order),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with every default filled in."""

    L: int
    omega: float
    g: float | Fraction
    n_periods: int
    h: float = 0.1
    W: float = 0.1
    delta: float = 0.01
    seed: int = 0
    mode: str = "twin"
    output: str = "out"
    dense_until: int = 2048
    geometric_samples: int = 2000
    align: int = 1
    window_start: int = 100
    window_end: int = 10_000
    snapshot_times: tuple = ()
    slice_axis: str = "z"
    slice_layer: int = 1
    snapshot_format: str = "csv"
    renormalize_every: int = 1000
    checkpoint_every: int = 1_000_000
    stop_at_thermalization: bool = False
    g_values: tuple = ()
    omega_values: tuple = ()
    L_values: tuple = ()
    realizations: int | str = 1
    workers: int = 1
    orders: tuple = DEFAULT_ORDERS

    def __post_init__(self):
        self.validate()

    def validate(self):
        def bad(key, msg):
            raise ConfigError(msg, key)

        if self.L < 2:
            bad("L", f"lattice edge must be >= 2, got {self.L}")
        if not float(self.omega) > 0:
            bad("omega", "must be > 0")
        if self.n_periods < 0:
            bad("n_periods", "must be >= 0")
        if self.W < 0:
            bad("W", "must be >= 0")
        if self.delta < 0:
            bad("delta", "must be >= 0")
        if self.seed < 0:
            bad("seed", "must be >= 0")
        if self.mode not in MODES:
            bad("mode", f"must be one of {', '.join(MODES)}")
        if self.window_end <= self.window_start or self.window_start < 0:
            bad("window_end", "spectral window must satisfy 0 <= window_start < window_end")
        if self.slice_axis not in ("x", "y", "z"):
            bad("slice_axis", "must be x, y or z")
        if not 0 <= self.slice_layer < self.L:
            bad("slice_layer", f"must lie in [0, {self.L})")
        if self.snapshot_format not in ("csv", "binary"):
            bad("snapshot_format", "must be csv or binary")
        if self.align < 1 or self.dense_until < 0 or self.geometric_samples < 0:
            bad("align", "sampling parameters must be non-negative (align >= 1)")
        if any(L < 2 for L in self.L_values):
            bad("L_values", "every lattice edge must be >= 2")
        if any(not float(w) > 0 for w in self.omega_values):
            bad("omega_values", "every omega must be > 0")
        if self.realizations != "auto" and self.realizations < 1:
            bad("realizations", "must be >= 1 or 'auto'")
        if self.workers < 1:
            bad("workers", "must be >= 1")
        if self.mode == "sweep" and not (self.g_values or self.omega_values or self.L_values):
            bad("g_values", "sweep mode needs at least one of g_values, omega_values, L_values")
        if self.mode == "scaling" and not self.L_values:
            bad("L_values", "scaling mode needs L_values")

    # derived objects

    @property
    def params(self) -> DriveParams:
        return DriveParams(float(self.omega), self.g, float(self.h))

    @property
    def ic(self) -> InitialConditionSpec:
        return InitialConditionSpec(float(self.W), float(self.delta), self.seed)

    @property
    def plan(self) -> SamplingPlan:
        return SamplingPlan(self.dense_until, self.geometric_samples, self.align,
                            (self.window_start, self.window_end), tuple(self.snapshot_times))

    def point(self) -> PointSpec:
        return PointSpec(
            self.L, self.params, self.ic, self.n_periods, self.plan,
            twin=self.mode != "single",
            stop_at_thermalization=self.stop_at_thermalization,
            renormalize_every=self.renormalize_every,
            candidates=tuple(Fraction(o) for o in self.orders),
        )

    def sweep_spec(self) -> SweepSpec:
        realizations = self.realizations
        if self.mode == "scaling" and realizations == 1:
            realizations = "auto"
        return SweepSpec(self.point(), tuple(self.g_values), tuple(self.omega_values),
                         tuple(self.L_values), realizations)

    # serialization

    def to_dict(self) -> dict:
        return {k: _plain(v) for k, v in asdict(self).items()}

    def to_text(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            if isinstance(v, list):
                if not v:
                    continue
                v = ", ".join(str(x) for x in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def replace(self, **changes) -> RunConfig:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return RunConfig(**data)


def _plain(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _convert(key: str, value, line: int | None = None):
    if key not in _CONVERTERS:
        raise ConfigError("unknown key", key, line)
    try:
        return _CONVERTERS[key](value, key)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], key, line) from None


def parse_pairs(text: str) -> dict:
    """``key -> typed value`` for every assignment in ``text``."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(.*)$", line)
        if not m:
            raise ConfigError(f"cannot parse {raw.strip()!r}; expected 'key = value'", line=lineno)
        key, value = m.group(1), m.group(2).strip()
        if not value:
            raise ConfigError("missing value", key, lineno)
        if key in values:
            raise ConfigError("duplicate key", key, lineno)
        try:
            values[key] = _convert(key, parse_value(value), lineno)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), key, lineno) from None
    return values


def build_config(values: dict) -> RunConfig:
    required = ("L", "omega", "g", "n_periods")
    missing = [k for k in required if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    for key in values:
        if key not in _CONVERTERS:
            raise ConfigError("unknown key", key)
    return RunConfig(**values)


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a configuration document.

    ``overrides`` (``key -> raw string``) replace file values, as command-line
    flags do.
    """
    values = parse_pairs(text)
    for key, raw in (overrides or {}).items():
        values[key] = _convert(key, parse_value(raw) if isinstance(raw, str) else raw)
    return build_config(values)
