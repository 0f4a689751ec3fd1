"""Experiment configuration: flat, typed ``key = value`` sections.

Values are literals only (numbers, words, comma-separated number lists,
``none`` for an unset optional).  Unknown sections and keys are rejected,
and every error names the offending line.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, FracScatError
from .grid import make_grid
from .potentials import Family


def _opt_float(text: str):
    return None if text.strip().lower() == "none" else float(text)


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _word(text: str) -> str:
    t = text.strip()
    if not re.fullmatch(r"[A-Za-z0-9_./+-]+", t):
        raise ValueError(f"not a plain word: {text!r}")
    return t


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Any, Any]]] = {
    "grid": {"n": (int, 1), "N": (int, 64), "L": (float, 16.0), "memory_cap": (int, 4096)},
    "potential": {"family": (_word, "gaussian"), "a": (float, 0.5), "w": (float, 2.0),
                  "beta0": (_opt_float, None), "samples": (_word, ""),
                  "cutoff_centre": (float, 0.8), "cutoff_width": (float, 0.04)},
    "operator": {"s": (float, 1.0), "sigma": (float, 1.0), "delta": (float, 1.5),
                 "alpha": (float, 0.5), "tolerance": (float, 1e-6)},
    "quadrature": {"nodes": (int, 16), "panel_width": (float, 4.0), "t_min": (_opt_float, None),
                   "t_max": (_opt_float, None), "tol": (float, 1e-15)},
    "limiting_absorption": {"lam": (float, 1.0), "eps0": (_opt_float, None),
                            "ratio": (float, 0.5), "depth": (int, 8), "order": (int, 1),
                            "floor_factor": (float, 2.0), "tau_min": (float, 1.0),
                            "tau_max": (float, 1000.0), "tau_count": (int, 13)},
    "distorted": {"sign": (int, -1), "ratio": (float, 0.7), "depth": (int, 12),
                  "order": (int, 3), "scan_points": (int, 20), "times": (_float_list, [0.3, 0.7, 1.9])},
    "scattering": {"T": (float, 8.0), "dt": (float, 0.25), "nodes": (int, 8),
                   "band": (_float_list, [2.0, 3.5]), "momenta": (int, 4),
                   "centres": (_float_list, [-1.5, 1.5]), "width": (float, 1.5),
                   "arrangement": (_word, "centred"), "fw_check": (_bool, True)},
    "spectral": {"threshold": (float, 0.2), "powers": (_float_list, [0.5, 0.8, 1.0, 1.5]),
                 "gauge_band": (float, 0.5)},
    "output": {"dir": (_word, "fracscat-out")},
    "run": {"seed": (int, 0)},
}


@dataclass
class ExperimentConfig:
    """Typed view of every section; ``values[section][key]``."""

    values: dict[str, dict[str, Any]] = field(default_factory=dict)
    source: str = ""

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    def canonical(self) -> str:
        lines = []
        for section in sorted(self.values):
            lines.append(f"[{section}]")
            for key in sorted(self.values[section]):
                lines.append(f"{key} = {self.values[section][key]!r}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def grid(self):
        g = self.values["grid"]
        return make_grid(g["n"], g["N"], g["L"], memory_cap=g["memory_cap"])


def defaults() -> ExperimentConfig:
    return ExperimentConfig({sec: {k: (list(v[1]) if isinstance(v[1], list) else v[1])
                                   for k, v in keys.items()}
                             for sec, keys in SCHEMA.items()})


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section:
            k = re.split(r"[=:]", stripped, maxsplit=1)[0].strip()
            if k == key:
                return i
    return None


def _where(path: str, text: str, section: str, key: str | None = None) -> str:
    line = _line_of(text, section, key)
    loc = f"{path}:{line}" if line else path
    return f"{loc}: [{section}]" + (f" {key}" if key else "")


def parse_config(text: str, path: str = "<config>") -> ExperimentConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = defaults()
    cfg.source = path
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{_where(path, text, section)}: unknown section")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{_where(path, text, section, key)}: unknown key")
            conv = SCHEMA[section][key][0]
            try:
                cfg.values[section][key] = conv(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{_where(path, text, section, key)}: bad value {raw!r} "
                                  f"({exc})") from None
    _validate(cfg, text, path)
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(p))


def _validate(cfg: ExperimentConfig, text: str, path: str) -> None:
    def fail(section, key, msg):
        raise ConfigError(f"{_where(path, text, section, key)}: {msg}")

    try:
        cfg.grid()
    except FracScatError as exc:
        fail("grid", "N", str(exc))
    try:
        Family(cfg["potential"]["family"])
    except ValueError:
        fail("potential", "family", f"unknown family {cfg['potential']['family']!r}")
    if cfg["potential"]["family"] == "custom_samples" and not cfg["potential"]["samples"]:
        fail("potential", "samples", "custom_samples needs a samples path")
    s = cfg["operator"]["s"]
    if not 0 < s < 2:
        fail("operator", "s", "order s must lie in (0, 2)")
    if cfg["operator"]["sigma"] <= 0.5:
        fail("operator", "sigma", "weight sigma must exceed 1/2")
    la = cfg["limiting_absorption"]
    if la["lam"] <= 0:
        fail("limiting_absorption", "lam", "lam must be positive")
    if not 0 < la["ratio"] < 1:
        fail("limiting_absorption", "ratio", "ratio must lie in (0, 1)")
    if cfg["distorted"]["sign"] not in (1, -1):
        fail("distorted", "sign", "sign must be 1 or -1")
    sc = cfg["scattering"]
    if sc["T"] <= 0 or sc["dt"] <= 0:
        fail("scattering", "T", "T and dt must be positive")
    if len(sc["band"]) != 2 or not 0 < sc["band"][0] < sc["band"][1]:
        fail("scattering", "band", "band must be two increasing positive wave numbers")
    if sc["band"][1] >= cfg.grid().xi_max:
        fail("scattering", "band", "band edge must lie below the Nyquist frequency")
    if sc["arrangement"] not in ("centred", "outgoing", "incoming"):
        fail("scattering", "arrangement", "use centred, outgoing or incoming")
    if sc["momenta"] < 1:
        fail("scattering", "momenta", "need at least one momentum")
