from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Allocation:
    """Per-stream powers (W) and rates (bpp), index 0 being the semantic map.

    Inactive classes carry zero power and zero rate. ``map_latency`` is
    T_k^g + T_k0 and ``class_latency`` the slowest intended class per user.
    """

    powers: np.ndarray
    rates: np.ndarray
    epigraph: np.ndarray
    map_latency: np.ndarray
    class_latency: np.ndarray

    @property
    def user_latency(self) -> np.ndarray:
        return np.maximum(self.map_latency, self.class_latency)


@dataclass(frozen=True)
class SolveReport:
    allocation: Allocation
    objective: float
    iterations: int
    converged: bool
    max_violation: float
    kkt_residual: float
    method: str = "sqp"
    # (before, after) merit of each accepted step, same penalty weights
    merit_trace: tuple = field(default=(), repr=False)
    multipliers: np.ndarray | None = field(default=None, repr=False)

    def csv_row(self) -> dict:
        a = self.allocation
        row = {
            "method": self.method,
            "objective_ms": f"{self.objective * 1e3:.9g}",
            "per_user_latency_ms": f"{self.objective * 1e3 / a.epigraph.size:.9g}",
            "iterations": str(self.iterations),
            "converged": str(int(self.converged)),
            "max_violation": f"{self.max_violation:.3e}",
            "kkt_residual": f"{self.kkt_residual:.3e}",
        }
        for s, (p, r) in enumerate(zip(a.powers, a.rates)):
            row[f"p{s}_mW"] = f"{p * 1e3:.9g}"
            row[f"r{s}_bpp"] = f"{r:.9g}"
        return row

    def to_text(self) -> str:
        a = self.allocation
        K = a.epigraph.size
        lines = [
            f"method            {self.method}",
            f"converged         {self.converged} ({self.iterations} iterations)",
            f"sum latency       {self.objective * 1e3:.6f} ms",
            f"per-user latency  {self.objective * 1e3 / K:.6f} ms",
            f"max violation     {self.max_violation:.3e}",
            f"KKT residual      {self.kkt_residual:.3e}",
            "",
            "stream  power_mW      rate_bpp",
        ]
        for s, (p, r) in enumerate(zip(a.powers, a.rates)):
            if s == 0 or p > 0:
                name = "map" if s == 0 else f"c{s}"
                lines.append(f"{name:<7} {p * 1e3:<13.6f} {r:.6f}")
        lines += ["", "user  latency_ms    map_ms        class_ms"]
        for k in range(K):
            lines.append(f"{k:<5} {a.user_latency[k] * 1e3:<13.6f} "
                         f"{a.map_latency[k] * 1e3:<13.6f} {a.class_latency[k] * 1e3:.6f}")
        return "\n".join(lines) + "\n"
