"""Scenario configuration and the figure presets.

A scenario file is YAML with lower_snake_case keys::

    model:
      family: chain        # chain | jordan2 | jordan2-loss | pt2
      n: 10
      t_l: 1.0
      t_r: 0.0
      gamma: 0.0
      beta: 0.0            # 1 = periodic, 0 = open
    initial_site: 10       # or initial_state: [[re, im], ...]
    t_max: 100
    dt: 0.01
    method: expm-step      # expm-step | expm-direct | rk4
    observe: [right, left, biorthogonal, signed_log]
    fits:
      - {series: "abs_x:1", kind: power, window: [10, 100]}
    output: {path: run.csv, format: csv}

Fit series are ``norm``, ``left_norm``, ``bi_norm``, ``abs_x:<site>`` and
``abs_y:<site>``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from .dynamics import DEFAULT_DT, METHODS, localized_state, normalized, time_grid
from .model import HamiltonianSpec

__all__ = [
    "OBSERVABLES",
    "EXP_WINDOW",
    "POWER_WINDOW",
    "ConfigError",
    "FitSpec",
    "ScenarioConfig",
    "PRESETS",
    "load_mapping",
    "config_from_mapping",
    "parse_initial",
]

OBSERVABLES = ("right", "left", "biorthogonal", "signed_log")
EXP_WINDOW = (20.0, 50.0)
POWER_WINDOW = (10.0, 100.0)

_MODEL_KEYS = {f.name for f in fields(HamiltonianSpec)}


class ConfigError(ValueError):
    """Invalid scenario field; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class FitSpec:
    series: str
    kind: str
    window: tuple[float, float]

    def __post_init__(self):
        if self.kind not in ("exp", "power"):
            raise ConfigError("fits.kind", f"must be 'exp' or 'power', got {self.kind!r}")
        lo, hi = self.window
        if not lo < hi:
            raise ConfigError("fits.window", f"need lo < hi, got {self.window}")
        name = self.series.split(":")[0]
        if name not in ("norm", "left_norm", "bi_norm", "abs_x", "abs_y"):
            raise ConfigError("fits.series", f"unknown series {self.series!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    model: HamiltonianSpec = field(default_factory=HamiltonianSpec)
    # 1-based site index, or an explicit state (normalised on use)
    initial: int | tuple[complex, ...] = 10
    t_max: float = 10.0
    dt: float = DEFAULT_DT
    method: str = "expm-step"
    observe: frozenset = frozenset({"right"})
    fits: tuple[FitSpec, ...] = ()
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        n = self.model.dim
        if isinstance(self.initial, (int, np.integer)):
            if not 1 <= self.initial <= n:
                raise ConfigError("initial_site", f"must be in 1..{n}, got {self.initial}")
        elif len(self.initial) != n:
            raise ConfigError("initial_state", f"needs {n} components, got {len(self.initial)}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt", "must be positive")
        if not self.t_max > self.dt:
            raise ConfigError("t_max", "must exceed dt")
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {METHODS}")
        bad = set(self.observe) - set(OBSERVABLES)
        if bad:
            raise ConfigError("observe", f"unknown observables {sorted(bad)}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", "must be csv or json")

    @property
    def needs_left(self) -> bool:
        return bool({"left", "biorthogonal", "signed_log"} & set(self.observe))

    def initial_state(self) -> np.ndarray:
        if isinstance(self.initial, (int, np.integer)):
            return localized_state(self.model.dim, int(self.initial))
        try:
            return normalized(np.array(self.initial, dtype=complex))
        except ValueError as exc:
            raise ConfigError("initial_state", str(exc)) from None

    def times(self) -> np.ndarray:
        return time_grid(self.t_max, self.dt)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def describe(self) -> dict:
        init = self.initial
        if not isinstance(init, (int, np.integer)):
            init = [[float(np.real(z)), float(np.imag(z))] for z in init]
        return {
            "model": self.model.to_dict(),
            "initial": init,
            "t_max": self.t_max,
            "dt": self.dt,
            "method": self.method,
            "observe": sorted(self.observe),
            "fits": [asdict(f) for f in self.fits],
        }


def _chain(beta, t_r=0.0, gamma=0.0):
    return HamiltonianSpec("chain", n=10, t_l=1.0, t_r=t_r, gamma=gamma, beta=beta)


def _preset(model, site, t_max, observe, fits=()):
    return ScenarioConfig(model=model, initial=site, t_max=t_max,
                          observe=frozenset(observe), fits=tuple(fits))


_EXP_NORM = FitSpec("norm", "exp", EXP_WINDOW)
_EXP_LEFT = FitSpec("left_norm", "exp", EXP_WINDOW)
_POW_NORM = FitSpec("norm", "power", POWER_WINDOW)
_POW_LEFT = FitSpec("left_norm", "power", POWER_WINDOW)

# Periodic biorthogonal runs stop early: conj(y_j) x_j grows like
# exp(2 max Im(lam) t) while the sum stays 1, and rounding in the
# propagated states swamps the 1e-9 conservation budget beyond these times.
PRESETS: dict[str, ScenarioConfig] = {
    "fig2a": _preset(_chain(1.0), 10, 100.0, ["right"], [_EXP_NORM]),
    "fig2b": _preset(_chain(0.0), 10, 100.0, ["right"],
                     [FitSpec("abs_x:1", "power", POWER_WINDOW), _POW_NORM]),
    "fig2c": _preset(_chain(1.0, gamma=0.5), 10, 100.0, ["right"], [_EXP_NORM]),
    "fig2d": _preset(_chain(0.0, gamma=0.5), 10, 100.0, ["right"], [_EXP_NORM]),
    "fig2e": _preset(_chain(1.0), 1, 100.0, ["right"], [_EXP_NORM]),
    "fig2f": _preset(_chain(0.0), 1, 100.0, ["right"]),
    "fig3a": _preset(_chain(1.0), 10, 100.0, ["left"], [_EXP_LEFT]),
    "fig3b": _preset(_chain(0.0), 10, 100.0, ["left"], [_POW_LEFT]),
    "fig3c": _preset(_chain(1.0, gamma=0.5), 10, 100.0, ["left"], [_EXP_LEFT]),
    "fig3d": _preset(_chain(0.0, gamma=0.5), 10, 100.0, ["left"], [_EXP_LEFT]),
    "fig4a": _preset(_chain(1.0), 10, 8.0, ["biorthogonal"]),
    "fig4b": _preset(_chain(0.0), 10, 100.0, ["biorthogonal"]),
    "fig4c": _preset(_chain(1.0, t_r=0.5), 10, 15.0, ["biorthogonal"]),
    "fig4d": _preset(_chain(0.0, t_r=0.5), 10, 100.0, ["biorthogonal"]),
    "fig5a": _preset(_chain(1.0, t_r=0.5), 10, 15.0, ["right"]),
    "fig5b": _preset(_chain(1.0, t_r=0.5), 10, 15.0, ["left"]),
    "fig5c": _preset(_chain(1.0, t_r=0.5), 10, 15.0, ["biorthogonal", "signed_log"]),
    "fig5d": _preset(_chain(0.0, t_r=0.5), 10, 100.0, ["right"], [_POW_NORM]),
    "fig5e": _preset(_chain(0.0, t_r=0.5), 10, 100.0, ["left"]),
    "fig5f": _preset(_chain(0.0, t_r=0.5), 10, 100.0, ["biorthogonal"]),
}


def load_mapping(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "scenario file must hold a mapping")
    return data


def parse_initial(text: str) -> int | tuple[complex, ...]:
    """Parse ``site:<k>`` or ``vec:<z1>,<z2>,...`` (Python complex literals)."""
    kind, _, value = text.partition(":")
    try:
        if kind == "site":
            return int(value)
        if kind == "vec":
            return tuple(complex(z.strip().replace(" ", "")) for z in value.split(","))
    except ValueError:
        pass
    raise ConfigError("init", f"expected site:<k> or vec:<z1>,<z2>,..., got {text!r}")


def _initial_from(data: dict):
    if "initial_state" in data:
        raw = data["initial_state"]
        try:
            return tuple(complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in raw)
        except (TypeError, ValueError):
            raise ConfigError("initial_state", "expected a list of [re, im] pairs") from None
    if "initial_site" in data:
        site = data["initial_site"]
        if isinstance(site, bool) or not isinstance(site, int):
            raise ConfigError("initial_site", "must be an integer")
        return site
    return None


def config_from_mapping(data: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Overlay a parsed scenario mapping on ``base`` (defaults if omitted)."""
    base = base or ScenarioConfig()
    known = {"model", "initial_site", "initial_state", "t_max", "dt", "method",
             "observe", "fits", "output", "preset"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    if "preset" in data:
        name = data["preset"]
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}")
        base = PRESETS[name]

    changes: dict = {}
    model = data.get("model") or {}
    if not isinstance(model, dict):
        raise ConfigError("model", "must be a mapping")
    bad = set(model) - _MODEL_KEYS
    if bad:
        raise ConfigError(f"model.{sorted(bad)[0]}", "unknown key")
    try:
        spec = base.model.replace(**model)
    except (TypeError, ValueError) as exc:
        raise ConfigError("model", str(exc)) from None
    changes["model"] = spec

    init = _initial_from(data)
    if init is not None:
        changes["initial"] = init
    elif isinstance(base.initial, (int, np.integer)) and base.initial > spec.dim:
        changes["initial"] = spec.dim
    for key in ("t_max", "dt"):
        if key in data:
            try:
                changes[key] = float(data[key])
            except (TypeError, ValueError):
                raise ConfigError(key, "must be a number") from None
    if "method" in data:
        changes["method"] = str(data["method"])
    if "observe" in data:
        obs = data["observe"]
        if isinstance(obs, str):
            obs = [o.strip() for o in obs.split(",") if o.strip()]
        changes["observe"] = frozenset(obs)
    if "fits" in data:
        try:
            changes["fits"] = tuple(
                FitSpec(str(f["series"]), str(f["kind"]), (float(f["window"][0]), float(f["window"][1])))
                for f in data["fits"]
            )
        except (KeyError, TypeError, IndexError):
            raise ConfigError("fits", "each fit needs series, kind and window [lo, hi]") from None
    out = data.get("output")
    if isinstance(out, dict):
        if "path" in out:
            changes["output"] = str(out["path"])
        if "format" in out:
            changes["format"] = str(out["format"])
    elif out is not None:
        changes["output"] = str(out)
    try:
        return replace(base, **changes)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("scenario", str(exc)) from None
