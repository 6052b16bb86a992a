"""Log-distance path loss with optional log-normal shadowing.

RSS(d) = A - 10 n log10(d), with the reference distance fixed at 1 m so that
``a_ref`` is the received power one meter from the transmitter. Shadowing is a
zero-mean Gaussian term in dB added on top.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from gridloc.errors import DomainError, ValidationError

DEFAULT_RSSI_OFFSET = -45.0
MODEL_PRESETS = ("outdoor", "indoor")


@dataclass(frozen=True)
class PathLossModel:
    a_ref: float
    n: float
    sigma: float = 0.0
    quantize: bool = False

    def __post_init__(self):
        if not math.isfinite(self.a_ref):
            raise ValidationError("a_ref must be finite")
        if not (self.n > 0 and math.isfinite(self.n)):
            raise ValidationError(f"path loss exponent must be > 0, got {self.n}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def d0(self) -> float:
        return 1.0

    def with_sigma(self, sigma: float) -> PathLossModel:
        return PathLossModel(self.a_ref, self.n, sigma, self.quantize)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class RegisterReading:
    """Raw radio register value plus the chip's fixed dBm offset."""

    rssi_val: int
    offset: float = DEFAULT_RSSI_OFFSET


def rss_at_distance(model: PathLossModel, d):
    """Noiseless received power in dBm at distance ``d`` (scalar or array)."""
    if np.any(np.asarray(d) <= 0):
        raise DomainError(f"distance must be > 0, got {d}")
    return model.a_ref - 10.0 * model.n * np.log10(d)


def rss_at_distance_noisy(model: PathLossModel, d, rng: np.random.Generator, size=None):
    """Received power with a Gaussian shadowing draw from ``rng``.

    ``size`` draws independent samples at the same distance. With
    ``model.quantize`` set, values are rounded to whole dBm.
    """
    rss = rss_at_distance(model, d) + rng.normal(0.0, model.sigma, size)
    if model.quantize:
        rss = np.round(rss)
    return rss


def distance_from_rss(model: PathLossModel, rss):
    """Invert the noiseless model: the distance that would produce ``rss``."""
    return 10.0 ** ((model.a_ref - rss) / (10.0 * model.n))


def rss_from_register(reading: RegisterReading) -> float:
    return reading.rssi_val + reading.offset


def model_from_dict(data: Mapping[str, Any]) -> PathLossModel:
    if not isinstance(data, Mapping):
        raise ValidationError("model: expected a JSON object")
    values = {}
    for key in ("a_ref", "n"):
        if key not in data:
            raise ValidationError(f"model.{key}: missing")
    for key in ("a_ref", "n", "sigma"):
        if key in data:
            try:
                values[key] = float(data[key])
            except (TypeError, ValueError):
                raise ValidationError(f"model.{key}: expected a number, got {data[key]!r}") from None
    if "d0" in data and float(data["d0"]) != 1.0:
        raise ValidationError("model.d0: only a 1 m reference distance is supported")
    quantize = data.get("quantize", False)
    if not isinstance(quantize, bool):
        raise ValidationError("model.quantize: expected true/false")
    return PathLossModel(quantize=quantize, **values)


def preset_model(name: str) -> PathLossModel:
    if name not in MODEL_PRESETS:
        raise ValidationError(f"unknown model preset {name!r}; choose from {', '.join(MODEL_PRESETS)}")
    text = resources.files("gridloc.presets").joinpath(f"{name}.json").read_text()
    return model_from_dict(json.loads(text))


def load_model(spec: str | Path) -> PathLossModel:
    """Model from a preset name or a JSON file path."""
    if str(spec) in MODEL_PRESETS:
        return preset_model(str(spec))
    path = Path(spec)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return model_from_dict(data)
