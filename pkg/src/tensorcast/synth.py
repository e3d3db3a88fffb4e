"""Synthetic spectrum-occupancy tensors.

Occupancy probability factorizes over time of day, day and frequency:

* time of day: a 3-component Gaussian mixture (afternoon/evening peaks),
  rescaled so its largest value over the day is 1;
* day: a Gaussian draw around a day-of-week weight ``mu[n % 7]`` with standard
  deviation ``0.1 * mu``, clamped to ``[0, 1.5]`` and divided by 1.5;
* frequency: uniform, i.e. every bin has the same marginal.

Each slot is split into ``subslots`` sensing intervals, each occupied
independently with that probability.  The PSD entry is
``signal_power * (fraction of occupied intervals)`` plus Gaussian sensor
noise, clamped at zero.  The slot counts as occupied in the ground truth when
at least half of its intervals are busy; with ``subslots = 1`` the entry is a
single Bernoulli draw and the ground truth is that draw.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields

import numpy as np

DAY_CLAMP = 1.5


@dataclass(frozen=True)
class Scenario:
    F: int = 20
    T: int = 240
    N: int = 100
    weights: tuple = (0.5, 0.3, 0.2)
    means: tuple = (150.0, 180.0, 210.0)
    sigma: float = 20.0
    day_weights: tuple = (1.0, 1.0, 1.0, 1.0, 0.5, 0.2, 0.2)
    day_noise: float = 0.1
    p_max: float = 0.9
    signal_power: float = 1.0
    noise_floor_sigma: float = 0.05
    subslots: int = 16
    seed: int = 0

    def __post_init__(self):
        if min(self.F, self.T, self.N) < 1:
            raise ValueError("F, T and N must be >= 1")
        if len(self.weights) != len(self.means):
            raise ValueError("mixture weights and means differ in length")
        if not np.isclose(sum(self.weights), 1.0):
            raise ValueError("mixture weights must sum to 1")
        if len(self.day_weights) != 7:
            raise ValueError("day_weights needs exactly 7 entries")
        if self.sigma <= 0 or self.day_noise < 0 or min(self.day_weights) < 0:
            raise ValueError("sigma must be positive; day weights and day noise nonnegative")
        if not 0 < self.p_max <= 1:
            raise ValueError("p_max must lie in (0, 1]")
        if self.signal_power <= 0 or self.noise_floor_sigma < 0 or self.subslots < 1:
            raise ValueError("signal_power > 0, noise_floor_sigma >= 0 and subslots >= 1 required")

    @property
    def dims(self):
        return self.F, self.T, self.N

    @property
    def day_sigmas(self):
        return tuple(self.day_noise * mu for mu in self.day_weights)


def _mixture(t, s):
    t = np.asarray(t, dtype=np.float64)
    dens = sum(w * np.exp(-0.5 * ((t - m) / s.sigma) ** 2) for w, m in zip(s.weights, s.means))
    return dens / (s.sigma * np.sqrt(2 * np.pi))


def time_profile(t, s):
    """Mixture density at slot(s) ``t``, scaled so the daily peak is 1."""
    return _mixture(t, s) / _mixture(np.arange(s.T), s).max()


def day_profile(n, s, rng):
    """Day activity for day(s) ``n``: ``N(mu_j, (0.1 mu_j)^2)``, ``j = n % 7``, clamped at 0."""
    j = np.asarray(n) % 7
    mu = np.asarray(s.day_weights)[j]
    sd = np.asarray(s.day_sigmas)[j]
    return np.maximum(rng.normal(mu, sd), 0.0)


def occupancy_probability(s, day_values):
    """``(T, N)`` matrix of per-slot occupancy probabilities."""
    day = np.clip(day_values, 0.0, DAY_CLAMP) / DAY_CLAMP
    return s.p_max * np.outer(time_profile(np.arange(s.T), s), day)


def expected_tensor(s, day_values=None):
    """Noise-free mean PSD (sensor-noise clamping ignored).

    With ``day_values`` omitted the day-of-week means are used.
    """
    if day_values is None:
        day_values = np.asarray(s.day_weights)[np.arange(s.N) % 7]
    p = occupancy_probability(s, day_values)
    return s.signal_power * np.broadcast_to(p, (s.F, s.T, s.N)).copy()


def generate(s):
    """Draw a PSD tensor and its boolean ground-truth occupancy."""
    rng = np.random.default_rng(s.seed)
    days = day_profile(np.arange(s.N), s, rng)
    p = np.broadcast_to(occupancy_probability(s, days), s.dims)
    busy = rng.binomial(s.subslots, p) / s.subslots
    truth = busy >= 0.5
    x = s.signal_power * busy
    if s.noise_floor_sigma > 0:
        x = x + rng.normal(0.0, s.noise_floor_sigma, s.dims)
    return np.maximum(x, 0.0), truth


def generate_mask(dims, missing_ratio, seed=0):
    """Mask with exactly ``round(ratio * size)`` missing entries, chosen uniformly."""
    if not 0 <= missing_ratio < 1:
        raise ValueError(f"missing_ratio must lie in [0, 1), got {missing_ratio}")
    dims = tuple(int(d) for d in dims)
    size = int(np.prod(dims))
    n_missing = int(round(missing_ratio * size))
    rng = np.random.default_rng(seed)
    flat = np.ones(size, dtype=bool)
    flat[rng.choice(size, n_missing, replace=False)] = False
    # flat index uses the canonical first-index-fastest order
    return flat.reshape(dims, order="F")


_TUPLES = {"weights", "means", "day_weights"}


def scenario_to_config(s):
    """Render as an INI ``[scenario]`` section (tuples comma-separated)."""
    lines = ["[scenario]"]
    for key, value in asdict(s).items():
        if key in _TUPLES:
            value = ", ".join(repr(float(v)) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def scenario_from_config(text, **overrides):
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_string(text)
    section = parser["scenario"] if parser.has_section("scenario") else {}
    kinds = {f.name: f.default for f in fields(Scenario)}
    values = {}
    for key, raw in section.items():
        if key not in kinds:
            raise ValueError(f"unknown scenario key {key!r}")
        if key in _TUPLES:
            values[key] = tuple(float(v) for v in raw.split(","))
        else:
            values[key] = type(kinds[key])(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Scenario(**values)


def load_scenario(path, **overrides):
    with open(path) as fh:
        return scenario_from_config(fh.read(), **overrides)
