"""INI configuration for the command-line runs.

Sections and keys (all optional; command-line flags override file values):

``[model]``   name, dim, cells, theta, theta_bar, amp, amplitude
``[grid]``    spacing, half_width, dt
``[run]``     T, method, direction, angles, n_xi, initial, observers, out, workers
``[verify]``  eps, eta_hi, eta_lo, shape_scale
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass

SCHEMA = {
    "model": {"name": str, "dim": int, "cells": int, "theta": float, "theta_bar": float,
              "amp": float, "amplitude": float},
    "grid": {"spacing": float, "half_width": float, "dt": float},
    "run": {"T": float, "method": str, "direction": str, "angles": int, "n_xi": int,
            "initial": str, "observers": str, "out": str, "workers": int},
    "verify": {"eps": float, "eta_hi": float, "eta_lo": float, "shape_scale": float},
}


class ConfigError(ValueError):
    pass


@dataclass
class ResolvedConfig:
    values: dict

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for sec in SCHEMA:
            items = self.values.get(sec, {})
            if items:
                cp[sec] = {k: repr(v) if isinstance(v, float) else str(v) for k, v in sorted(items.items())}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _convert(section, key, raw):
    try:
        kind = SCHEMA[section][key]
    except KeyError:
        raise ConfigError(f"unknown key [{section}] {key}") from None
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None


def parse_ini(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    out = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        out[sec] = {k: _convert(sec, k, v) for k, v in cp[sec].items()}
    return out


def load(path: str | os.PathLike | None, overrides: dict) -> ResolvedConfig:
    """Merge a config file with command-line overrides (``None`` values are ignored)."""
    values: dict = {}
    if path:
        try:
            text = open(path, encoding="utf-8").read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values = parse_ini(text)
    for sec, items in overrides.items():
        for k, v in items.items():
            if v is not None:
                values.setdefault(sec, {})[k] = _convert(sec, k, v)
    return ResolvedConfig(values)


def worker_cap(requested: int | None = None) -> int:
    """Worker count limited by ``WULFFSPREAD_THREADS`` (default 1)."""
    env = os.environ.get("WULFFSPREAD_THREADS")
    cap = None
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ConfigError(f"WULFFSPREAD_THREADS={env!r} is not an integer") from None
    n = requested or 1
    return min(n, cap) if cap else n
