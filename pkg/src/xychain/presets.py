"""Named configuration fragments that can be layered under a config file."""

from __future__ import annotations

import typing
from dataclasses import dataclass, field

from xychain.errors import ConfigurationError

__all__ = [
    "PRESETS",
    "Preset",
    "get_preset",
    "list_presets",
]


@dataclass(frozen=True)
class Preset:
    """A partial config, in the same nested layout as a config file."""

    name: str
    description: str
    values: typing.Mapping[str, typing.Any] = field(default_factory=dict)


PRESETS: tuple[Preset, ...] = (
    Preset(
        "fig2_fit",
        "Two ions with a 200 Hz linear and 150 Hz quadratic S_z shift on site 2.",
        {
            "chain": {
                "n_ions": 2,
                "site_shifts": [[0.0, 0.0], [200.0, 150.0]],
            },
        },
    ),
    Preset(
        "paper_2ion",
        "Two ions with J_12 = 1.31 kHz.",
        {
            "chain": {"n_ions": 2},
            "couplings": {"source": "power_law", "j0": 1310.0, "alpha": 1.0},
        },
    ),
    Preset(
        "paper_ramp",
        "Exponential (S_z)^2 ramp from 5 kHz with tau = 0.167 ms over 1 ms.",
        {
            "ramp": {
                "shape": "exponential",
                "d0": 5000.0,
                "tau": 0.167e-3,
                "duration": 1.0e-3,
            },
        },
    ),
    Preset(
        "alpha036",
        "Three ions with power-law couplings J_0 = 1 kHz, alpha = 0.36.",
        {
            "chain": {"n_ions": 3},
            "couplings": {"source": "power_law", "j0": 1000.0, "alpha": 0.36},
        },
    ),
)


def list_presets() -> list[Preset]:
    """Every preset, in a fixed order.

    Examples:
        >>> [p.name for p in list_presets()]
        ['fig2_fit', 'paper_2ion', 'paper_ramp', 'alpha036']
    """
    return list(PRESETS)


def get_preset(name: str) -> Preset:
    for preset in PRESETS:
        if preset.name == name:
            return preset

    known = ", ".join(p.name for p in PRESETS)
    raise ConfigurationError(f"unknown preset {name!r} (known: {known})", context="presets")
