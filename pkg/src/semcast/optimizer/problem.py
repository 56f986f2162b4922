"""Constraint functions of the epigraph latency problem.

Two views of the same problem live here:

* :func:`constraint_functions` / :func:`constraint_gradients` work on the
  full natural-unit vector ``[p_0..p_L, r_0..r_L, z_1..z_K]`` (W, bpp, s).
* :class:`LatencyProblem` is the solver's internal form: inactive classes
  removed, powers scaled by the budget and latencies by a reference time,
  evaluated through :mod:`semcast.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..channel import ChannelRealization
from ..core import Scenario, effective_requirements
from ..errors import DegenerateStream

POWER_FLOOR = 1e-9  # W; keeps 1/R finite on active streams

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ConstraintValues:
    f: float
    g: np.ndarray  # (K,)
    h: np.ndarray  # (K, L)
    i: float
    j: np.ndarray  # (L,), NaN for inactive classes
    q: float

    def min_value(self) -> float:
        vals = [self.g.min(), self.h.min(), self.i, self.q]
        j = self.j[np.isfinite(self.j)]
        if j.size:
            vals.append(j.min())
        return float(min(vals))


@dataclass(frozen=True)
class ConstraintGradients:
    f: np.ndarray  # (n,)
    g: np.ndarray  # (K, n)
    h: np.ndarray  # (K, L, n)
    i: np.ndarray  # (n,)
    j: np.ndarray  # (L, n), zero rows for inactive classes
    q: np.ndarray  # (n,)


def _split(z, K, L):
    z = np.asarray(z, dtype=float)
    if z.shape != (2 * (L + 1) + K,):
        raise ValueError(f"decision vector must have length {2 * (L + 1) + K}")
    return z[:L + 1], z[L + 1:2 * (L + 1)], z[2 * (L + 1):]


def _rate_and_slope(p, gain, B, N0):
    """Shannon rate and its derivative in p."""
    noise = B * N0
    rate = B * np.log2(1.0 + p * gain / noise)
    slope = B * gain / ((noise + p * gain) * LN2)
    return rate, slope


def constraint_functions(z, scenario: Scenario, channel: ChannelRealization) -> ConstraintValues:
    """Evaluate f, g_k, h_kl, i, j_l, q at ``z`` (all feasible iff >= 0)."""
    K, L = scenario.num_users, scenario.num_classes
    p, r, zk = _split(z, K, L)
    E_s, E_r = effective_requirements(scenario)
    radio = scenario.radio
    gain = channel.gains
    X = scenario.geometry.total_pixels
    Xbar = scenario.geometry.avg_class_pixels()
    I = scenario.intent.entries

    R0, _ = _rate_and_slope(p[0], gain, radio.bandwidths[0], radio.noise_density)
    with np.errstate(divide="ignore"):
        T0 = r[0] * X / R0
    g = zk - scenario.compute.generation_latency - T0

    h = np.repeat(zk[:, None], L, axis=1)
    j = np.full(L, np.nan)
    for l in range(L):
        users = I[:, l] == 1
        if not users.any():
            continue
        Rl, _ = _rate_and_slope(p[l + 1], gain[users], radio.bandwidths[l + 1], radio.noise_density)
        with np.errstate(divide="ignore"):
            h[users, l] = zk[users] - r[l + 1] * Xbar / Rl
        j[l] = E_r[l] - scenario.recon_curve.evaluate(r[l + 1])
    i = radio.power_budget - p.sum()
    q = E_s - scenario.synth_curve.evaluate(r[0])
    return ConstraintValues(float(zk.sum()), g, h, float(i), j, float(q))


def constraint_gradients(z, scenario: Scenario, channel: ChannelRealization) -> ConstraintGradients:
    """Analytic partial derivatives of every constraint w.r.t. ``z``."""
    K, L = scenario.num_users, scenario.num_classes
    p, r, _ = _split(z, K, L)
    n = 2 * (L + 1) + K
    radio = scenario.radio
    gain = channel.gains
    X = scenario.geometry.total_pixels
    Xbar = scenario.geometry.avg_class_pixels()
    I = scenario.intent.entries
    zcol = 2 * (L + 1) + np.arange(K)

    if p[0] < POWER_FLOOR:
        raise DegenerateStream(f"multicast stream power {p[0]!r} W below {POWER_FLOOR} W")
    df = np.zeros(n)
    df[zcol] = 1.0

    R0, dR0 = _rate_and_slope(p[0], gain, radio.bandwidths[0], radio.noise_density)
    dg = np.zeros((K, n))
    dg[np.arange(K), zcol] = 1.0
    dg[:, L + 1] = -X / R0
    dg[:, 0] = r[0] * X / R0 ** 2 * dR0

    dh = np.zeros((K, L, n))
    dh[np.arange(K), :, zcol] = 1.0
    dj = np.zeros((L, n))
    for l in range(L):
        users = np.flatnonzero(I[:, l])
        if users.size == 0:
            continue
        if p[l + 1] < POWER_FLOOR:
            raise DegenerateStream(f"class {l} stream power {p[l + 1]!r} W below {POWER_FLOOR} W")
        Rl, dRl = _rate_and_slope(p[l + 1], gain[users], radio.bandwidths[l + 1], radio.noise_density)
        dh[users, l, L + 2 + l] = -Xbar / Rl
        dh[users, l, l + 1] = r[l + 1] * Xbar / Rl ** 2 * dRl
        dj[l, L + 2 + l] = -float(scenario.recon_curve.derivative(r[l + 1]))

    di = np.zeros(n)
    di[:L + 1] = -1.0
    dq = np.zeros(n)
    dq[L + 1] = -float(scenario.synth_curve.derivative(r[0]))
    return ConstraintGradients(df, dg, dh, di, dj, dq)


class LatencyProblem:
    """Scaled, reduced problem handed to the SQP and reduced solvers.

    Streams are the multicast map (index 0) followed by the active classes.
    Powers are fractions of the budget; latencies are in units of ``tau``.
    """

    def __init__(self, scenario: Scenario, channel: ChannelRealization,
                 power_floor: float = POWER_FLOOR, tau: float | None = None):
        if channel.gains.shape != (scenario.num_users,):
            raise ValueError("channel realization does not match the number of users")
        self.scenario = scenario
        self.channel = channel
        K = scenario.num_users
        radio = scenario.radio
        E_s, E_r = effective_requirements(scenario)
        self.active = np.array(sorted(E_r), dtype=np.int_)
        ns = self.active.size + 1
        self.K, self.ns = K, ns
        self.n = 2 * ns + K
        P = radio.power_budget
        self.power_budget = P

        curves = [scenario.synth_curve] + [scenario.recon_curve] * (ns - 1)
        targets = [E_s] + [E_r[int(l)] for l in self.active]
        self.rate_floor = np.array([cv.invert(t) for cv, t in zip(curves, targets)])
        self.qa = np.array([cv.a for cv in curves])
        self.qb = np.array([cv.b for cv in curves])
        self.qc = np.array([cv.c for cv in curves])
        self.qt = np.array(targets, dtype=float)

        X = scenario.geometry.total_pixels
        Xbar = scenario.geometry.avg_class_pixels()
        gains = channel.gains
        N0 = radio.noise_density
        users, streams, offs, bits, bws = [], [], [], [], []
        for k in range(K):
            users.append(k)
            streams.append(0)
            offs.append(scenario.compute.generation_latency[k])
            bits.append(X)
            bws.append(radio.bandwidths[0])
        for s, l in enumerate(self.active, start=1):
            for k in scenario.intent.users_of(int(l)):
                users.append(int(k))
                streams.append(s)
                offs.append(0.0)
                bits.append(Xbar)
                bws.append(radio.bandwidths[l + 1])
        self.lat_user = np.array(users, dtype=np.int_)
        self.lat_stream = np.array(streams, dtype=np.int_)
        bits = np.array(bits, dtype=float)
        bws = np.array(bws, dtype=float)
        self._offs_s = np.array(offs, dtype=float)
        self._bits_per_sec = bits / bws  # seconds per bpp at 1 bit/s/Hz
        self.lat_alpha = P * gains[self.lat_user] / (bws * N0)
        self.nt = self.lat_user.size
        self.m = self.nt + 1 + 3 * ns
        self.pfloor = power_floor / P
        self.tau = tau if tau is not None else self._reference_latency()
        self.lat_off = self._offs_s / self.tau
        self.lat_coef = self._bits_per_sec / self.tau

    def _reference_latency(self) -> float:
        p = np.full(self.ns, 1.0 / self.ns)
        lat = self.term_latencies_seconds(p, self.rate_floor)
        per_user = np.zeros(self.K)
        np.maximum.at(per_user, self.lat_user, lat)
        ref = float(per_user.mean())
        return ref if ref > 0 else 1.0

    # index helpers
    def p_slice(self):
        return slice(0, self.ns)

    def r_slice(self):
        return slice(self.ns, 2 * self.ns)

    def z_slice(self):
        return slice(2 * self.ns, self.n)

    def term_latencies_seconds(self, p_frac, rates) -> np.ndarray:
        """Latency of every (user, stream) term, including generation offsets."""
        l2 = np.log2(1.0 + self.lat_alpha * p_frac[self.lat_stream])
        with np.errstate(divide="ignore", invalid="ignore"):
            comm = np.where(rates[self.lat_stream] > 0,
                            rates[self.lat_stream] * self._bits_per_sec / l2, 0.0)
        return self._offs_s + comm

    def user_latencies_seconds(self, p_frac, rates) -> np.ndarray:
        lat = self.term_latencies_seconds(p_frac, rates)
        out = np.full(self.K, -np.inf)
        np.maximum.at(out, self.lat_user, lat)
        return out

    def evaluate(self, x):
        return kernels.eval_constraints(
            np.ascontiguousarray(x, dtype=float), self.ns, self.K, self.lat_user, self.lat_stream,
            self.lat_off, self.lat_coef, self.lat_alpha, self.qa, self.qb, self.qc, self.qt,
            self.pfloor)

    def power_curvature(self, x, weights) -> np.ndarray:
        """Diagonal second derivative in each stream power of ``sum_t w_t * latency_t``."""
        p = x[self.p_slice()]
        r = x[self.r_slice()]
        ap = self.lat_alpha * p[self.lat_stream]
        l2 = np.log1p(ap) / LN2
        d1 = self.lat_alpha / ((1.0 + ap) * LN2)
        d2 = -self.lat_alpha ** 2 / ((1.0 + ap) ** 2 * LN2)
        # d^2/dp^2 of coef * r / l2
        curv = self.lat_coef * r[self.lat_stream] * (2 * d1 * d1 / l2 ** 3 - d2 / l2 ** 2)
        out = np.zeros(self.ns)
        np.add.at(out, self.lat_stream, weights * curv)
        return out

    def lagrangian_curvature(self, x, lam) -> np.ndarray:
        """Diagonal of the Lagrangian Hessian for multipliers ``lam`` (p-r coupling dropped)."""
        lam = np.maximum(np.asarray(lam, dtype=float), 0.0)
        out = np.zeros(self.n)
        out[self.p_slice()] = self.power_curvature(x, lam[:self.nt])
        r = x[self.r_slice()]
        lq = lam[self.nt + 1:self.nt + 1 + self.ns]
        out[self.r_slice()] = lq * self.qa * self.qb ** 2 * np.exp(-self.qb * r)
        return out

    def objective_gradient(self) -> np.ndarray:
        g = np.zeros(self.n)
        g[self.z_slice()] = 1.0
        return g

    def pack(self, p_frac, rates, z_seconds) -> np.ndarray:
        return np.concatenate([p_frac, rates, np.asarray(z_seconds) / self.tau])

    def full_vector(self, x) -> np.ndarray:
        """Map an internal iterate to the natural-unit ``[p, r, z]`` vector."""
        L = self.scenario.num_classes
        p = np.zeros(L + 1)
        r = np.zeros(L + 1)
        p[0] = x[0] * self.power_budget
        r[0] = x[self.ns]
        p[self.active + 1] = x[1:self.ns] * self.power_budget
        r[self.active + 1] = x[self.ns + 1:2 * self.ns]
        return np.concatenate([p, r, x[self.z_slice()] * self.tau])
