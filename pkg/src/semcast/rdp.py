"""Rate to quality-metric curves of the form ``a * exp(-b * r) + c``.

The metric is "smaller is better" (1 - MS-SSIM, LPIPS, ...), so curves are
strictly decreasing in the compression rate ``r`` (bits per pixel).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import FitDiverged, InfeasibleRequirement, MalformedFile


class RequirementAlreadyMet(UserWarning):
    """Target is at or above the zero-rate metric value; rate 0 suffices."""


@dataclass(frozen=True)
class RdpCurve:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c >= 0):
            raise ValueError("curve needs a > 0, b > 0, c >= 0")

    def __call__(self, r):
        return self.evaluate(r)

    def evaluate(self, r):
        r_arr = np.asarray(r, dtype=float)
        if (r_arr < 0).any():
            raise ValueError("rate must be non-negative")
        out = self.a * np.exp(-self.b * r_arr) + self.c
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, r):
        return -self.a * self.b * np.exp(-self.b * np.asarray(r, dtype=float))

    def invert(self, target: float) -> float:
        """Smallest rate meeting ``target``; closed form ``ln(a / (target - c)) / b``."""
        rate, _ = self.invert_flagged(target)
        return rate

    def invert_flagged(self, target: float) -> tuple[float, bool]:
        """Like :meth:`invert`, also reporting whether the target was met at zero rate."""
        if not target > self.c:
            raise InfeasibleRequirement(
                f"target {target!r} is not above the curve floor {self.c!r}")
        if target >= self.a + self.c:
            warnings.warn(f"target {target!r} already met at rate 0", RequirementAlreadyMet,
                          stacklevel=3)
            return 0.0, True
        return math.log(self.a / (target - self.c)) / self.b, False

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


# Published fits for JPEG over Cityscapes: reconstruction uses 1 - MS-SSIM,
# synthesis uses LPIPS of the diffusion output.
RECONSTRUCTION_CURVE = RdpCurve(0.199, 3.454, 0.008)
SYNTHESIS_CURVE = RdpCurve(0.214, 5.14, 0.566)


@dataclass(frozen=True)
class FitResult:
    curve: RdpCurve
    rms: float
    n_samples: int


def _linear_part(b, rates, metrics, floor_free=True):
    e = np.exp(-b * rates)
    if floor_free:
        design = np.column_stack([e, np.ones_like(e)])
        (a, c), *_ = np.linalg.lstsq(design, metrics, rcond=None)
        if c >= 0:
            return a, c
    a = float(e @ metrics / (e @ e))
    return a, 0.0


def _sse(b, rates, metrics):
    a, c = _linear_part(b, rates, metrics)
    resid = a * np.exp(-b * rates) + c - metrics
    return float(resid @ resid)


def fit_curve(samples) -> FitResult:
    """Least-squares fit of ``a * exp(-b r) + c`` to (rate, metric) samples.

    Variable projection: for fixed decay ``b`` the amplitude and floor solve a
    linear least-squares problem, leaving a one-dimensional search over ``b``.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("samples must be (rate, metric) pairs")
    if data.shape[0] < 4:
        raise ValueError(f"need at least 4 samples, got {data.shape[0]}")
    rates, metrics = data[:, 0], data[:, 1]
    if np.unique(rates).size != rates.size:
        raise ValueError("sample rates must be distinct")
    if (metrics <= 0).any() or (rates < 0).any():
        raise ValueError("metrics must be positive and rates non-negative")

    span = rates.max() - rates.min()
    grid = np.geomspace(1e-3, 1e3, 241) / max(span, 1e-12)
    sse = np.array([_sse(b, rates, metrics) for b in grid])
    i = int(np.argmin(sse))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(_sse, bounds=(lo, hi), args=(rates, metrics), method="bounded",
                          options={"xatol": 1e-14 * hi, "maxiter": 500})
    b = float(res.x) if res.fun <= sse[i] else float(grid[i])
    a, c = _linear_part(b, rates, metrics)

    initial = _sse(1.0 / max(span, 1e-12), rates, metrics)
    final = _sse(b, rates, metrics)
    if not np.isfinite(final) or (final > initial and initial > 0) or a <= 0:
        raise FitDiverged(f"fit failed to improve on the initial guess (sse {final:g})")
    return FitResult(RdpCurve(float(a), b, float(c)), math.sqrt(final / rates.size), rates.size)


def read_samples_csv(path) -> np.ndarray:
    """Read a two-column (rate_bpp, metric) CSV; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as fh:
        for n, row in enumerate(csv.reader(fh)):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if n == 0:
                    continue
                raise MalformedFile(f"{path}: bad sample row {n + 1}: {row!r}")
    if not rows:
        raise MalformedFile(f"{path}: no samples")
    return np.array(rows)
