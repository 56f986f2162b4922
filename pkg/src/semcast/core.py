"""Domain types shared by every part of the planner.

All quantities are stored in SI units (W, Hz, s, bits). Conversion from
the engineering units used in configuration files happens in
:mod:`semcast.config`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InfeasibleRequirement, ScenarioError


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SignalGeometry:
    """Pixel statistics of the source image.

    ``class_pixel_fraction`` is the average class size relative to the whole
    image, so a full partition into ``num_classes`` equal classes gives
    ``1 / num_classes``.
    """

    total_pixels: int = 131072
    class_pixel_fraction: float = 0.1
    num_classes: int = 35
    class_counts: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        if self.total_pixels <= 0:
            raise ScenarioError("total_pixels must be positive")
        if not 0.0 < self.class_pixel_fraction <= 1.0:
            raise ScenarioError("class_pixel_fraction must lie in (0, 1]")
        if self.num_classes < 1:
            raise ScenarioError("num_classes must be at least 1")

    def avg_class_pixels(self) -> float:
        return self.class_pixel_fraction * self.total_pixels


class IntentMatrix:
    """Binary K x L matrix; entry (k, l) is 1 when user k wants class l reconstructed."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        arr = np.array(entries)
        if arr.ndim != 2:
            raise ScenarioError("intent matrix must be two-dimensional")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ScenarioError("intent matrix entries must be 0 or 1")
        object.__setattr__(self, "entries", _frozen(arr, dtype=np.int8))

    def __setattr__(self, name, value):
        raise AttributeError("IntentMatrix is immutable")

    def __eq__(self, other):
        return isinstance(other, IntentMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        return f"IntentMatrix({self.entries.tolist()})"

    @property
    def num_users(self) -> int:
        return self.entries.shape[0]

    @property
    def num_classes(self) -> int:
        return self.entries.shape[1]

    def active_classes(self) -> np.ndarray:
        """Indices (0-based) of classes with at least one interested user."""
        return np.flatnonzero(self.entries.any(axis=0))

    def users_of(self, l: int) -> np.ndarray:
        return np.flatnonzero(self.entries[:, l])

    def classes_of(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.entries[k])


@dataclass(frozen=True)
class Requirements:
    """Per-user quality targets (smaller metric value means better quality).

    ``reconstruction`` is K x L; an ``inf`` entry means the user places no
    requirement on that class. ``synthesis`` is one value per user.
    """

    reconstruction: np.ndarray
    synthesis: np.ndarray

    def __post_init__(self):
        recon = _frozen(self.reconstruction)
        synth = _frozen(self.synthesis)
        if recon.ndim != 2 or synth.ndim != 1:
            raise ScenarioError("reconstruction must be K x L and synthesis length K")
        if recon.shape[0] != synth.shape[0]:
            raise ScenarioError("reconstruction and synthesis disagree on K")
        if np.isnan(recon).any() or (recon <= 0).any():
            raise ScenarioError("reconstruction requirements must be positive")
        if not np.isfinite(synth).all() or (synth <= 0).any():
            raise ScenarioError("synthesis requirements must be finite and positive")
        object.__setattr__(self, "reconstruction", recon)
        object.__setattr__(self, "synthesis", synth)

    @classmethod
    def uniform(cls, num_users: int, num_classes: int, recon: float, synth: float) -> "Requirements":
        return cls(np.full((num_users, num_classes), float(recon)), np.full(num_users, float(synth)))


@dataclass(frozen=True)
class RadioParams:
    """Link-budget parameters in SI units.

    ``bandwidths`` holds B_0 (multicast) followed by B_1..B_L.
    """

    bandwidths: np.ndarray
    noise_density: float
    power_budget: float
    pathloss_ref: float
    pathloss_exp: float
    distances: np.ndarray

    def __post_init__(self):
        bw = _frozen(self.bandwidths)
        d = _frozen(self.distances)
        if bw.ndim != 1 or bw.size < 2 or (bw <= 0).any():
            raise ScenarioError("need positive bandwidths B_0..B_L with L >= 1")
        if d.ndim != 1 or d.size < 1 or (d <= 0).any():
            raise ScenarioError("user distances must be positive")
        for name in ("noise_density", "power_budget", "pathloss_ref", "pathloss_exp"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ScenarioError(f"{name} must be positive")
        object.__setattr__(self, "bandwidths", bw)
        object.__setattr__(self, "distances", d)

    @property
    def num_users(self) -> int:
        return self.distances.size

    @property
    def num_classes(self) -> int:
        return self.bandwidths.size - 1

    def mean_gains(self) -> np.ndarray:
        """Large-scale gain eps_o * d^-phi (unit-mean scattering)."""
        return self.pathloss_ref * self.distances ** (-self.pathloss_exp)

    def with_power_budget(self, power_budget: float) -> "RadioParams":
        return RadioParams(self.bandwidths, self.noise_density, power_budget,
                           self.pathloss_ref, self.pathloss_exp, self.distances)

    def with_distances(self, distances) -> "RadioParams":
        return RadioParams(self.bandwidths, self.noise_density, self.power_budget,
                           self.pathloss_ref, self.pathloss_exp, distances)


@dataclass(frozen=True)
class ComputeSpec:
    """On-device generation latency per user, in seconds."""

    generation_latency: np.ndarray

    def __post_init__(self):
        tg = _frozen(self.generation_latency)
        if tg.ndim != 1 or not np.isfinite(tg).all() or (tg < 0).any():
            raise ScenarioError("generation latencies must be finite and non-negative")
        object.__setattr__(self, "generation_latency", tg)

    @classmethod
    def uniform(cls, num_users: int, latency: float) -> "ComputeSpec":
        return cls(np.full(num_users, float(latency)))

    @classmethod
    def from_flops(cls, model_flops: float, processor_flops) -> "ComputeSpec":
        pf = np.asarray(processor_flops, dtype=float)
        if model_flops < 0 or (pf <= 0).any():
            raise ScenarioError("model FLOPs must be >= 0 and processor FLOP/s > 0")
        return cls(model_flops / pf)


@dataclass(frozen=True)
class Scenario:
    geometry: SignalGeometry
    intent: IntentMatrix
    requirements: Requirements
    radio: RadioParams
    compute: ComputeSpec
    recon_curve: object
    synth_curve: object

    def __post_init__(self):
        K, L = self.intent.entries.shape
        if K < 1:
            raise ScenarioError("scenario needs at least one user")
        if self.requirements.reconstruction.shape != (K, L):
            raise ScenarioError(f"reconstruction requirements must be {K}x{L}")
        if self.requirements.synthesis.shape != (K,):
            raise ScenarioError(f"synthesis requirements must have length {K}")
        if self.radio.num_users != K:
            raise ScenarioError(f"expected {K} user distances, got {self.radio.num_users}")
        if self.radio.num_classes != L:
            raise ScenarioError(f"expected {L + 1} bandwidths, got {self.radio.bandwidths.size}")
        if self.compute.generation_latency.shape != (K,):
            raise ScenarioError(f"expected {K} generation latencies")
        if self.geometry.num_classes != L:
            raise ScenarioError("geometry.num_classes disagrees with the intent matrix")

    @property
    def num_users(self) -> int:
        return self.intent.num_users

    @property
    def num_classes(self) -> int:
        return self.intent.num_classes

    def replace(self, **changes) -> "Scenario":
        fields = dict(geometry=self.geometry, intent=self.intent, requirements=self.requirements,
                      radio=self.radio, compute=self.compute, recon_curve=self.recon_curve,
                      synth_curve=self.synth_curve)
        fields.update(changes)
        return Scenario(**fields)


def effective_requirements(scenario: Scenario) -> tuple[float, dict[int, float]]:
    """Tightest synthesis target and per-active-class reconstruction target.

    Returns ``(E_s, {l: E_l})`` with 0-based class indices; classes nobody is
    interested in are absent from the map.
    """
    entries = scenario.intent.entries
    recon = scenario.requirements.reconstruction
    if entries.shape[0] < 1:
        raise ScenarioError("at least one user is required")
    per_class = {}
    for l in scenario.intent.active_classes():
        value = float(recon[entries[:, l] == 1, l].min())
        if not np.isfinite(value):
            raise InfeasibleRequirement(f"active class {l} has no finite reconstruction requirement")
        per_class[int(l)] = value
    return float(scenario.requirements.synthesis.min()), per_class


def intent_graph_stats(intent: IntentMatrix) -> tuple[int, np.ndarray]:
    """Number of active classes and the number of intended classes per user."""
    return int(intent.active_classes().size), intent.entries.sum(axis=1).astype(int)
