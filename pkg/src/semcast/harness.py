"""Monte Carlo experiment driver.

A plan is a list of sweep points (K, P_T, requirement pair, T^g) plus trial
count and master seed. Trial ``t`` draws distances, intents and fading from
three streams ``SeedSequence(seed, spawn_key=(t, stream))``, so results do
not depend on worker count, chunking, or the order of the sweep axes.

The key deliberately omits the sweep point. Every point sees the same draws
for trial ``t`` (common random numbers), and since the per-user streams are
consumed in user order, user ``k`` sits at the same distance with the same
fade whatever K is. Comparisons across any sweep axis are therefore paired.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelRealization, draw_channel
from .config import DEFAULTS, default_scenario
from .core import IntentMatrix, Scenario, SignalGeometry
from .errors import ExperimentFailed, PolicyUnsatisfiable, SemcastError
from .metrics import BENCHMARKS, fgm_metrics, metrics_from_solution, ngm_metrics
from .optimizer import SqpOptions, sqp_solve

log = logging.getLogger(__name__)

POLICIES = ("distinct-single", "non-overlapped", "overlapped", "explicit")
METRICS = ("latency", "spectral_efficiency", "power_ratio", "compression_rate", "total_bits")
MAX_FAILURE_FRACTION = 0.01


def assign_intents(K: int, L: int, policy: str = "distinct-single", seed=None, *,
                   per_user: int = 1, total_classes: Optional[int] = None,
                   matrix=None) -> IntentMatrix:
    """Draw an intent matrix under one of the supported policies.

    ``distinct-single``: one class per user, no class shared.
    ``non-overlapped``: ``per_user`` classes per user, none shared.
    ``overlapped``: ``per_user`` classes per user drawn round a ring of
    ``total_classes`` classes, so neighbours share classes and all of them are used.
    ``explicit``: ``matrix`` as given.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if policy == "explicit":
        if matrix is None:
            raise PolicyUnsatisfiable("explicit policy needs a matrix")
        intent = IntentMatrix(matrix)
        if intent.entries.shape != (K, L):
            raise PolicyUnsatisfiable(f"explicit matrix is {intent.entries.shape}, expected {(K, L)}")
        return intent
    if per_user < 1:
        raise PolicyUnsatisfiable("per_user must be at least 1")
    I = np.zeros((K, L), dtype=np.int8)
    if policy in ("distinct-single", "non-overlapped"):
        n = 1 if policy == "distinct-single" else per_user
        if K * n > L:
            raise PolicyUnsatisfiable(f"{K} users x {n} distinct classes exceeds {L} classes")
        cls = rng.choice(L, K * n, replace=False).reshape(K, n)
        I[np.arange(K)[:, None], cls] = 1
    elif policy == "overlapped":
        T = total_classes if total_classes is not None else K
        if not per_user <= T <= L:
            raise PolicyUnsatisfiable(f"need per_user <= total_classes <= L, got {per_user}, {T}, {L}")
        if K + per_user - 1 < T:
            raise PolicyUnsatisfiable(f"{K} users x {per_user} classes on a ring cannot cover {T} classes")
        cls = rng.choice(L, T, replace=False)
        for k in range(K):
            I[k, cls[(k + np.arange(per_user)) % T]] = 1
    else:
        raise PolicyUnsatisfiable(f"unknown intent policy {policy!r}; expected one of {POLICIES}")
    return IntentMatrix(I)


@dataclass(frozen=True)
class SweepPoint:
    num_users: int
    power_budget: float = DEFAULTS["power_budget_w"]  # W
    recon: float = DEFAULTS["recon_requirement"]
    synth: float = DEFAULTS["synth_requirement"]
    generation_latency: float = DEFAULTS["generation_latency_s"]  # s


@dataclass(frozen=True)
class ExperimentPlan:
    points: tuple
    trials: int = 6000
    seed: int = 0
    benchmarks: tuple = BENCHMARKS
    num_classes: int = DEFAULTS["num_classes"]
    geometry: Optional[SignalGeometry] = None
    intent_policy: str = "distinct-single"
    per_user: int = 1
    total_classes: Optional[int] = None
    intent_matrix: Optional[tuple] = None
    fading: str = "mean"
    distance_range: tuple = DEFAULTS["distance_range_m"]
    fixed_distances: Optional[tuple] = None
    fixed_gains: Optional[tuple] = None
    solver: SqpOptions = field(default_factory=SqpOptions)
    failure_dir: Optional[str] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "points", tuple(self.points))
        unknown = set(self.benchmarks) - set(BENCHMARKS)
        if unknown:
            raise ValueError(f"unknown benchmarks {sorted(unknown)}")

    @classmethod
    def grid(cls, num_users: Sequence[int], power_budgets: Sequence[float] = (DEFAULTS["power_budget_w"],),
             requirements: Sequence[tuple] = ((DEFAULTS["recon_requirement"], DEFAULTS["synth_requirement"]),),
             generation_latencies: Sequence[float] = (DEFAULTS["generation_latency_s"],),
             **kwargs) -> "ExperimentPlan":
        pts = [SweepPoint(int(k), float(p), float(er), float(es), float(tg))
               for k, p, (er, es), tg in itertools.product(num_users, power_budgets, requirements,
                                                           generation_latencies)]
        return cls(points=tuple(pts), **kwargs)

    def trial_rng(self, trial: int, stream: int) -> np.random.Generator:
        """Stream 0: distances, 1: intents, 2: fading."""
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(trial, stream)))

    def trial_instance(self, point: int, trial: int) -> tuple[Scenario, ChannelRealization]:
        """Scenario and channel of one trial; reproducible in isolation."""
        sp = self.points[point]
        K, L = sp.num_users, self.num_classes
        if self.fixed_distances is not None:
            d = np.asarray(self.fixed_distances, dtype=float)
        else:
            d = self.trial_rng(trial, 0).uniform(*self.distance_range, K)
        intent = assign_intents(K, L, self.intent_policy, self.trial_rng(trial, 1), per_user=self.per_user,
                                total_classes=self.total_classes, matrix=self.intent_matrix)
        sc = default_scenario(intent, d, power_budget=sp.power_budget, recon=sp.recon, synth=sp.synth,
                              generation_latency=sp.generation_latency, geometry=self.geometry)
        if self.fixed_gains is not None:
            ch = ChannelRealization.fixed(self.fixed_gains)
        else:
            ch = draw_channel(sc.radio, self.trial_rng(trial, 2), fading=self.fading)
        return sc, ch


@dataclass(frozen=True)
class AggregateResult:
    """Per-point, per-benchmark mean and standard error of every metric.

    ``samples[i]`` holds the raw per-trial values of point ``i`` with shape
    (trials, benchmarks, metrics); failed trials are NaN throughout.
    """

    plan: ExperimentPlan
    samples: tuple
    failed: tuple  # per point

    def values(self, point: int, benchmark: str, metric: str) -> np.ndarray:
        s = self.samples[point][:, self.plan.benchmarks.index(benchmark), METRICS.index(metric)]
        return s[np.isfinite(s)]

    def mean(self, point: int, benchmark: str, metric: str) -> float:
        return float(self.values(point, benchmark, metric).mean())

    def stderr(self, point: int, benchmark: str, metric: str) -> float:
        v = self.values(point, benchmark, metric)
        return float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0


def _dump_failure(plan: ExperimentPlan, point: int, trial: int, sc: Scenario, ch, err: str):
    if plan.failure_dir is None:
        return
    rec = {
        "point": point, "trial": trial, "error": err,
        "radio": {"distances_m": sc.radio.distances.tolist(),
                  "power_budget_mw": sc.radio.power_budget * 1e3},
        "intent": {"matrix": sc.intent.entries.tolist()},
        "requirements": {"reconstruction": sc.requirements.reconstruction.tolist(),
                         "synthesis": sc.requirements.synthesis.tolist()},
        "compute": {"generation_latency_ms": (sc.compute.generation_latency * 1e3).tolist()},
        "geometry": {"total_pixels": sc.geometry.total_pixels,
                     "class_pixel_fraction": sc.geometry.class_pixel_fraction},
        "channel": {"gains": ch.gains.tolist()} if ch is not None else {},
    }
    os.makedirs(plan.failure_dir, exist_ok=True)
    path = Path(plan.failure_dir) / f"fail_p{point}_t{trial}.json"
    path.write_text(json.dumps(rec, indent=1))


def run_trial(plan: ExperimentPlan, point: int, trial: int) -> Optional[np.ndarray]:
    """Metrics array (benchmarks x metrics) for one trial, or None on failure."""
    sc = ch = None
    try:
        sc, ch = plan.trial_instance(point, trial)
        out = np.empty((len(plan.benchmarks), len(METRICS)))
        for b, name in enumerate(plan.benchmarks):
            if name == "proposed":
                rep = sqp_solve(sc, ch, plan.solver)
                if not rep.converged:
                    raise SemcastError(f"SQP did not converge (KKT {rep.kkt_residual:.2e})")
                m = metrics_from_solution(rep, sc, ch)
            elif name == "ngm":
                m = ngm_metrics(sc, ch)
            else:
                m = fgm_metrics(sc, ch)
            out[b] = [getattr(m, f) for f in ("per_user_latency", "spectral_efficiency", "power_ratio",
                                               "compression_rate", "total_bits")]
        return out
    except (SemcastError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("point %d trial %d failed: %s", point, trial, exc)
        if sc is not None:
            _dump_failure(plan, point, trial, sc, ch, repr(exc))
        return None


def _run_block(args):
    plan, point, start, stop = args
    return point, start, [run_trial(plan, point, t) for t in range(start, stop)]


def run_experiment(plan: ExperimentPlan, jobs: int = 1, chunk: int = 250) -> AggregateResult:
    """Run every trial of every point; raises ExperimentFailed past 1% failures."""
    nb, nm = len(plan.benchmarks), len(METRICS)
    samples = [np.full((plan.trials, nb, nm), np.nan) for _ in plan.points]
    blocks = [(plan, i, s, min(s + chunk, plan.trials))
              for i in range(len(plan.points)) for s in range(0, plan.trials, chunk)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_block, blocks))
    else:
        results = [_run_block(b) for b in blocks]
    for point, start, rows in results:
        for offset, row in enumerate(rows):
            if row is not None:
                samples[point][start + offset] = row
    failed = tuple(int(np.isnan(s[:, 0, 0]).sum()) for s in samples)
    for i, f in enumerate(failed):
        if f > MAX_FAILURE_FRACTION * plan.trials:
            raise ExperimentFailed(f"point {i}: {f} of {plan.trials} trials failed")
    return AggregateResult(plan, tuple(samples), failed)


UNITS = {
    # name: (latency scale, latency unit, power scale, power unit)
    "milli": (1e3, "ms", 1e3, "mW"),
    "si": (1.0, "s", 1.0, "W"),
}


def csv_header(units: str = "milli") -> list:
    ls, lu, ps, pu = UNITS[units]
    head = ["point", "num_users", f"power_budget_{pu}", "recon_requirement", "synth_requirement",
            f"generation_latency_{lu}", "benchmark", "trials", "failed"]
    names = {"latency": f"latency_{lu}", "spectral_efficiency": "spectral_efficiency_bps_hz",
             "power_ratio": "power_ratio", "compression_rate": "compression_rate_bpp",
             "total_bits": "total_bits"}
    for m in METRICS:
        head += [f"{names[m]}_mean", f"{names[m]}_se"]
    return head


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def emit_csv(result: Optional[AggregateResult], path=None, units: str = "milli") -> str:
    """Write one row per (point, benchmark); returns the CSV text.

    ``result=None`` (an empty sweep) yields the header alone.
    """
    if units not in UNITS:
        raise ValueError(f"unknown units {units!r}; expected one of {sorted(UNITS)}")
    ls, _, ps, _ = UNITS[units]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(units))
    if result is not None:
        plan = result.plan
        for i, sp in enumerate(plan.points):
            for b in plan.benchmarks:
                row = [i, sp.num_users, _fmt(sp.power_budget * ps), _fmt(sp.recon), _fmt(sp.synth),
                       _fmt(sp.generation_latency * ls), b, plan.trials, result.failed[i]]
                for m in METRICS:
                    scale = ls if m == "latency" else 1.0
                    row += [_fmt(result.mean(i, b, m) * scale), _fmt(result.stderr(i, b, m) * scale)]
                w.writerow(row)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def with_points(plan: ExperimentPlan, points) -> ExperimentPlan:
    return replace(plan, points=tuple(points))
