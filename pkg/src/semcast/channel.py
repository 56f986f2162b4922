"""Block-fading channel draws and Shannon-rate link abstraction."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import RadioParams

FADING_MODES = ("rayleigh", "mean")


@dataclass(frozen=True)
class ChannelRealization:
    """Per-user power gains |h_k|^2 for one transmission episode."""

    gains: np.ndarray
    scattering: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim != 1 or not (g > 0).all():
            raise ValueError("channel gains must be a positive vector")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @classmethod
    def fixed(cls, gains) -> "ChannelRealization":
        return cls(np.asarray(gains, dtype=float))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def draw_channel(radio: RadioParams, rng_seed=None, fading: str = "rayleigh",
                 scattering=None) -> ChannelRealization:
    """Gains ``eps_o * d_k^-phi * |h~_k|^2`` with ``|h~_k|^2 ~ Exp(1)``.

    ``fading="mean"`` replaces the scattering draw by its unit mean, leaving
    only large-scale path loss. ``scattering`` forces the |h~_k|^2 values.
    """
    if scattering is None:
        if fading == "rayleigh":
            rng = _rng(rng_seed)
            # |CN(0,1)|^2 from its two real components; user k takes draws 2k and 2k+1
            re, im = rng.standard_normal((radio.num_users, 2)).T * np.sqrt(0.5)
            scattering = re * re + im * im
        elif fading == "mean":
            scattering = np.ones(radio.num_users)
        else:
            raise ValueError(f"unknown fading mode {fading!r}; expected one of {FADING_MODES}")
    scattering = np.asarray(scattering, dtype=float)
    if scattering.shape != (radio.num_users,):
        raise ValueError("need one scattering value per user")
    return ChannelRealization(radio.mean_gains() * scattering, scattering)


def snr(p, gain, B, N0):
    return np.asarray(p, dtype=float) * gain / (B * N0)


def shannon_rate(p, gain, B, N0):
    """Achievable rate ``B log2(1 + p gain / (B N0))`` in bits/s."""
    return B * np.log2(1.0 + snr(p, gain, B, N0))


def stream_latency(bits, rate):
    bits = np.asarray(bits, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if (bits < 0).any():
        raise ValueError("bit count must be non-negative")
    if (rate <= 0).any():
        raise ValueError("stream rate must be positive (zero power on a needed stream?)")
    out = bits / rate
    return float(out) if out.ndim == 0 else out


def dump_realizations(path, realizations) -> None:
    """Write ``trial,user,gain`` rows for a sequence of realizations."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "user", "gain"])
        for t, ch in enumerate(realizations):
            for k, g in enumerate(ch.gains):
                w.writerow([t, k, repr(float(g))])
