"""Independent reference computations used by the tests.

Nothing here imports the solver; latencies are recomputed from the raw
model so a bug shared with the solver cannot hide. The gradient check
compares the analytic constraint gradients with central differences of the
constraint values.
"""

import itertools
import math

import numpy as np

from semcast.channel import draw_channel
from semcast.config import default_scenario
from semcast.optimizer.problem import constraint_functions, constraint_gradients


def pinned_rates(scenario):
    """Analytic lower-bound rates from the closed-form inverse of a*exp(-b r)+c."""
    I = scenario.intent.entries
    rs = scenario.synth_curve
    rr = scenario.recon_curve
    es = scenario.requirements.synthesis.min()
    r0 = math.log(rs.a / (es - rs.c)) / rs.b
    active = [l for l in range(I.shape[1]) if I[:, l].any()]
    rl = {}
    for l in active:
        el = scenario.requirements.reconstruction[I[:, l] == 1, l].min()
        rl[l] = math.log(rr.a / (el - rr.c)) / rr.b
    return r0, rl, active


def sum_latency(scenario, gains, p0, pl):
    """Sum over users of max(Tg + T_k0, max_l T_kl) for powers in W."""
    radio = scenario.radio
    geo = scenario.geometry
    I = scenario.intent.entries
    r0, rl, active = pinned_rates(scenario)
    N0 = radio.noise_density
    total = 0.0
    for k in range(I.shape[0]):
        B0 = radio.bandwidths[0]
        R0 = B0 * math.log2(1 + p0 * gains[k] / (B0 * N0))
        lat = scenario.compute.generation_latency[k] + r0 * geo.total_pixels / R0
        for l, p in zip(active, pl):
            if I[k, l]:
                Bl = radio.bandwidths[l + 1]
                R = Bl * math.log2(1 + p * gains[k] / (Bl * N0))
                lat = max(lat, rl[l] * geo.class_pixel_fraction * geo.total_pixels / R)
        total += lat
    return total


def _simplex(n, steps):
    cuts = np.array(list(itertools.combinations(range(steps + n - 1), n - 1)), dtype=float)
    cuts = cuts.reshape(-1, n - 1)
    edges = np.hstack([np.full((len(cuts), 1), -1.0), cuts, np.full((len(cuts), 1), steps + n - 1.0)])
    return (np.diff(edges, axis=1) - 1) / steps


def _batch_latency(scenario, gains, active, fracs):
    """sum_latency for many power splits at once (rows of ``fracs``)."""
    radio, geo = scenario.radio, scenario.geometry
    I = scenario.intent.entries
    r0, rl, _ = pinned_rates(scenario)
    N0 = radio.noise_density
    P = radio.power_budget
    with np.errstate(divide="ignore", invalid="ignore"):
        total = np.zeros(len(fracs))
        for k in range(I.shape[0]):
            B0 = radio.bandwidths[0]
            lat = scenario.compute.generation_latency[k] + r0 * geo.total_pixels / (
                B0 * np.log2(1 + fracs[:, 0] * P * gains[k] / (B0 * N0)))
            for j, l in enumerate(active):
                if I[k, l]:
                    Bl = radio.bandwidths[l + 1]
                    R = Bl * np.log2(1 + fracs[:, j + 1] * P * gains[k] / (Bl * N0))
                    lat = np.maximum(lat, rl[l] * geo.class_pixel_fraction * geo.total_pixels / R)
            total += lat
    total[np.any(fracs <= 0, axis=1)] = np.inf
    return total


def grid_oracle(scenario, gains, points=10_000, zoom_rounds=6):
    """Brute-force minimum over the power simplex (sum p = P_T), rates pinned.

    A uniform simplex grid of about ``points`` nodes is followed by local
    grids of shrinking radius around the incumbent.
    """
    _, _, active = pinned_rates(scenario)
    ns = len(active) + 1
    P = scenario.radio.power_budget
    if ns == 1:
        return sum_latency(scenario, gains, P, []), np.array([P])
    steps = 1
    while math.comb(steps + ns - 1, ns - 1) < points:
        steps += 1
    fracs = _simplex(ns, steps)
    vals = _batch_latency(scenario, gains, active, fracs)
    best = int(np.argmin(vals))
    best_f, best_x = vals[best], fracs[best]
    radius = 2.0 / steps
    for _ in range(zoom_rounds):
        offsets = np.linspace(-radius, radius, 41)
        delta = np.array(list(itertools.product(offsets, repeat=ns - 1)))
        cand = np.empty((len(delta), ns))
        cand[:, 1:] = best_x[1:] + delta
        cand[:, 0] = 1.0 - cand[:, 1:].sum(axis=1)
        vals = _batch_latency(scenario, gains, active, cand)
        i = int(np.argmin(vals))
        if vals[i] < best_f:
            best_f, best_x = vals[i], cand[i]
        radius /= 10.0
    # report the exact scalar evaluation of the incumbent
    return sum_latency(scenario, gains, best_x[0] * P, best_x[1:] * P), best_x * P


def bisection_single_user(scenario, gain):
    """K=1, L=1, T^g=0: the optimum equalises map and class latency."""
    P = scenario.radio.power_budget
    r0, rl, _ = pinned_rates(scenario)
    radio, geo = scenario.radio, scenario.geometry
    N0 = radio.noise_density

    def t0(p):
        B = radio.bandwidths[0]
        return r0 * geo.total_pixels / (B * math.log2(1 + p * gain / (B * N0)))

    def t1(p):
        B = radio.bandwidths[1]
        return rl[0] * geo.class_pixel_fraction * geo.total_pixels / (B * math.log2(1 + p * gain / (B * N0)))

    lo, hi = 1e-15 * P, P * (1 - 1e-15)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t0(mid) > t1(P - mid):
            lo = mid
        else:
            hi = mid
    p0 = 0.5 * (lo + hi)
    return max(t0(p0), t1(P - p0)), p0


def random_instance(rng):
    K, L = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    I = (rng.random((K, L)) < 0.5).astype(int)
    I[0, rng.integers(L)] = 1
    sc = default_scenario(I, rng.uniform(150, 550, K), generation_latency=float(rng.uniform(0, 4e-3)))
    ch = draw_channel(sc.radio, int(rng.integers(1 << 30)))
    return sc, ch


def feasible_point(rng, sc, ch):
    """Random strictly feasible (p, r, z) with a slack power budget."""
    K, L = sc.num_users, sc.num_classes
    active = sc.intent.active_classes()
    p = np.zeros(L + 1)
    w = rng.dirichlet(np.ones(active.size + 1)) * rng.uniform(0.5, 1.0) * sc.radio.power_budget
    p[0] = w[0]
    p[active + 1] = w[1:]
    r = np.zeros(L + 1)
    r[0] = sc.synth_curve.invert(sc.requirements.synthesis.min()) * rng.uniform(1.0, 1.5)
    r[active + 1] = sc.recon_curve.invert(0.0285) * rng.uniform(1.0, 1.5, active.size)
    z0 = np.concatenate([p, r, np.zeros(K)])
    vals = constraint_functions(z0, sc, ch)
    need = np.maximum(-vals.g, (-vals.h).max(axis=1))
    z0[2 * (L + 1):] = need * rng.uniform(1.0, 1.2, K)
    return z0


def gradient_error(sc, ch, z):
    """Worst relative gap between analytic and central-difference gradients."""
    grads = constraint_gradients(z, sc, ch)
    K, L = sc.num_users, sc.num_classes
    active = sc.intent.active_classes().tolist()
    # zero entries (inactive streams) take the step of their block's scale
    scale = np.concatenate([np.full(L + 1, sc.radio.power_budget), np.ones(L + 1), np.full(K, 1e-3)])
    worst = 0.0
    for i in range(z.size):
        h = 1e-7 * (abs(z[i]) if z[i] != 0 else scale[i])
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        fp, fm = constraint_functions(zp, sc, ch), constraint_functions(zm, sc, ch)
        pairs = [((fp.f - fm.f) / (2 * h), grads.f[i]),
                 ((fp.i - fm.i) / (2 * h), grads.i[i]),
                 ((fp.q - fm.q) / (2 * h), grads.q[i])]
        pairs += list(zip((fp.g - fm.g) / (2 * h), grads.g[:, i]))
        pairs += list(zip(((fp.h - fm.h) / (2 * h)).ravel(), grads.h[:, :, i].ravel()))
        for l in active:
            pairs.append(((fp.j[l] - fm.j[l]) / (2 * h), grads.j[l, i]))
        for fd, an in pairs:
            if fd != an:
                worst = max(worst, abs(fd - an) / max(abs(fd), abs(an)))
    return worst
