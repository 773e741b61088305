"""Plain-text experiment configuration.

Configs are line-oriented ``key = value`` text with optional ``[section]``
headers; all numeric parameters live in the file so runs are auditable.
Unknown keys are rejected with their line number, duplicates report both
occurrences, and typed constraints are checked before anything runs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "parse_config_file"]

EXPERIMENTS = (
    "speed",
    "spreading-theorem",
    "wave",
    "envelope",
    "subadditivity",
    "tw-speed",
    "invariant-suite",
)

SECTIONS = ("experiment", "nonlinearity", "medium", "grid", "output")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _parse_seeds(raw: str):
    """Either an explicit list ``7 8 9`` or ``count@base`` shorthand."""
    raw = raw.strip()
    if "@" in raw:
        count_s, base_s = raw.split("@", 1)
        count, base = int(count_s), int(base_s)
        if count <= 0:
            raise ValueError("seed count must be positive")
        return tuple(base + i for i in range(count))
    return tuple(int(tok) for tok in raw.split())


def _parse_floats(raw: str):
    return tuple(float(tok) for tok in raw.split())


# key -> (type converter, default); None default means "required by some experiments"
_SCHEMA = {
    "experiment": (str, None),
    "T": (float, 200.0),
    "N": (int, 200),
    "stride": (int, 10),
    "n_list": (_parse_floats, (5.0, 10.0, 20.0, 40.0, 80.0)),
    "eps": (float, 0.05),
    "h": (float, 0.9),
    "k": (float, None),  # defaults to theta0
    "xi_max": (int, 260),
    "burn_in": (float, 5.0),
    "box_half_width": (float, 3.5),
    "q": (float, 0.05),
    "s": (float, 0.08),
    "window_R": (float, 30.0),
    "wave_tol": (float, 1e-4),
    "seeds": (_parse_seeds, (7,)),
    "family": (str, "quadratic"),
    "theta0": (float, 0.25),
    "medium_family": (str, "iid-uniform"),
    "g": (float, None),
    "g_min": (float, 1.0),
    "g_max": (float, 2.0),
    "dx": (float, 0.05),
    "dt": (float, 0.01),
    "margin_ahead": (float, 55.0),
    "margin_behind": (float, 45.0),
    "observe_every": (int, 10),
    "scheme": (str, "imex-cn"),
    "dir": (str, "results"),
    "workers": (int, 1),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed, validated experiment description plus its reproducibility hash."""

    values: dict
    raw_text: str
    content_hash: str

    def __getattr__(self, name):
        # guard pickling: never recurse while 'values' itself is absent
        if name.startswith("__"):
            raise AttributeError(name)
        try:
            values = object.__getattribute__(self, "values")
        except AttributeError:
            raise AttributeError(name) from None
        try:
            return values[name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def k_level(self) -> float:
        k = self.values["k"]
        return self.values["theta0"] if k is None else k

    def nonlinearity(self):
        from .reaction import make_nonlinearity

        return make_nonlinearity(self.values["family"], self.values["theta0"])

    def medium(self, seed: int):
        from .reaction import sample_medium

        return sample_medium(seed, self.values["medium_family"], self.values["g_min"], self.values["g_max"])

    def field(self, seed: int):
        from .reaction import ReactionField

        return ReactionField(self.nonlinearity(), self.medium(seed))

    def grid(self, **overrides):
        from .solver import GridConfig

        kw = dict(
            dx=self.values["dx"], dt=self.values["dt"], scheme=self.values["scheme"],
            margin_ahead=self.values["margin_ahead"], margin_behind=self.values["margin_behind"],
            observe_every=self.values["observe_every"],
        )
        kw.update(overrides)
        return GridConfig(**kw)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text.

    Raises:
        ConfigError: first invalid line (unknown key/section, bad value,
            duplicate key, or constraint violation), with its line number.
    """
    values = {}
    seen_lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, _, rawval = line.partition("=")
        key = key.strip()
        rawval = rawval.split("#", 1)[0].strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen_lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen_lines[key]})", lineno)
        seen_lines[key] = lineno
        conv, _default = _SCHEMA[key]
        try:
            values[key] = conv(rawval)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key!r}: {rawval!r} ({exc})", lineno) from None

    # homogeneous shorthand
    if "g" in values:
        for bound in ("g_min", "g_max"):
            if bound in values:
                raise ConfigError(
                    f"'g' (line {seen_lines['g']}) conflicts with '{bound}' (line {seen_lines[bound]})",
                    seen_lines[bound],
                )
        values["g_min"] = values["g_max"] = values.pop("g")
    values.pop("g", None)

    filled = {}
    for key, (_conv, default) in _SCHEMA.items():
        if key == "g":
            continue
        filled[key] = values.get(key, default)

    _validate(filled, seen_lines)
    digest = hashlib.sha256(text.replace("\r\n", "\n").encode()).hexdigest()
    return ExperimentConfig(values=filled, raw_text=text, content_hash=digest)


def _constraint_line(seen: dict, *keys: str) -> Optional[int]:
    for key in keys:
        if key in seen:
            return seen[key]
    return None


def _validate(v: dict, seen: dict) -> None:
    if v["experiment"] is None:
        raise ConfigError("missing required key 'experiment'")
    if v["experiment"] not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {EXPERIMENTS}, got {v['experiment']!r}",
            _constraint_line(seen, "experiment"),
        )
    if not 0.0 < v["theta0"] < 1.0:
        raise ConfigError(f"constraint theta0 in (0,1) violated: {v['theta0']}", _constraint_line(seen, "theta0"))
    if v["g_min"] <= 0:
        raise ConfigError(f"constraint g_min > 0 violated: {v['g_min']}", _constraint_line(seen, "g_min", "g"))
    if v["g_min"] > v["g_max"]:
        raise ConfigError(
            f"constraint g_min <= g_max violated: g_min={v['g_min']} > g_max={v['g_max']}",
            _constraint_line(seen, "g_min", "g_max", "g"),
        )
    if not v["theta0"] < v["h"] < 1.0:
        raise ConfigError(f"constraint h in (theta0, 1) violated: {v['h']}", _constraint_line(seen, "h"))
    if v["k"] is not None and not 0.0 < v["k"] <= v["theta0"]:
        raise ConfigError(f"constraint k in (0, theta0] violated: {v['k']}", _constraint_line(seen, "k"))
    if v["eps"] <= 0:
        raise ConfigError(f"constraint eps > 0 violated: {v['eps']}", _constraint_line(seen, "eps"))
    if v["dx"] <= 0 or v["dt"] <= 0:
        raise ConfigError("constraint dx, dt > 0 violated", _constraint_line(seen, "dx", "dt"))
    if len(v["n_list"]) < 3:
        raise ConfigError("constraint len(n_list) >= 3 violated", _constraint_line(seen, "n_list"))
    if not v["seeds"]:
        raise ConfigError("constraint seeds nonempty violated", _constraint_line(seen, "seeds"))
    if v["workers"] < 1:
        raise ConfigError(f"constraint workers >= 1 violated: {v['workers']}", _constraint_line(seen, "workers"))
    if v["family"] not in ("quadratic", "smooth"):
        raise ConfigError(f"unknown nonlinearity family {v['family']!r}", _constraint_line(seen, "family"))
    if v["medium_family"] not in ("iid-uniform", "random-constant"):
        raise ConfigError(f"unknown medium family {v['medium_family']!r}", _constraint_line(seen, "medium_family"))


def parse_config_file(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
