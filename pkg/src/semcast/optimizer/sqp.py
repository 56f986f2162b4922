"""SQP solver for the epigraph form of the sum-latency problem.

Each iteration linearises the constraints, solves the quadratic model of
the Lagrangian (damped-BFGS Hessian) with the dual active-set QP kernel,
and takes a backtracking step on the l1 exact-penalty merit function.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import kernels
from ..channel import ChannelRealization
from ..core import Scenario
from ..errors import QpInfeasible
from .problem import POWER_FLOOR, LatencyProblem, constraint_functions
from .report import Allocation, SolveReport

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SqpOptions:
    max_iter: int = 500
    tol: float = 1e-8
    init: str = "warm"  # or "random"
    seed: Optional[int] = None
    power_floor: float = POWER_FLOOR
    armijo: float = 1e-4
    second_order_correction: bool = True
    hessian: str = "bfgs"  # or "exact": diagonal Lagrangian curvature


def _violation(c):
    return float(np.maximum(-c, 0.0).sum())


def _initial_point(prob: LatencyProblem, opts: SqpOptions) -> np.ndarray:
    if opts.init == "warm":
        p = np.full(prob.ns, 1.0 / prob.ns)
        r = prob.rate_floor.copy()
        slack = np.full(prob.K, 1.01)
    elif opts.init == "random":
        rng = np.random.default_rng(opts.seed)
        p = rng.dirichlet(np.ones(prob.ns)) * rng.uniform(0.7, 1.0)
        p = np.maximum(p, 10 * prob.pfloor)
        r = prob.rate_floor * rng.uniform(1.0, 1.5, prob.ns) + rng.uniform(0, 0.05, prob.ns)
        slack = rng.uniform(1.01, 1.5, prob.K)
    else:
        raise ValueError(f"unknown init mode {opts.init!r}")
    z = prob.user_latencies_seconds(p, r) * slack
    return prob.pack(p, r, z)


def _solve_qp(H, grad, J, c):
    d, lam, status, _ = kernels.solve_qp(H, grad, J, c)
    if status == kernels.QP_OK:
        return d, lam
    if status == kernels.QP_NOT_SPD:
        raise QpInfeasible("Hessian approximation lost positive definiteness")
    # Elastic relaxation: one extra variable s >= 0 enters every nonlinear
    # row, penalised linearly and quadratically.
    n = grad.size
    m = c.size
    rho = 1e3 * (1.0 + np.abs(grad).max())
    He = np.zeros((n + 1, n + 1))
    He[:n, :n] = H
    He[n, n] = 1.0
    ge = np.append(grad, rho)
    Je = np.zeros((m + 1, n + 1))
    Je[:m, :n] = J
    Je[:m, n] = 1.0
    Je[m, n] = 1.0
    ce = np.append(c, 0.0)
    de, lame, status, _ = kernels.solve_qp(He, ge, Je, ce)
    if status != kernels.QP_OK:
        raise QpInfeasible(f"relaxed QP failed with status {status}")
    return de[:n], lame[:m]


def _initial_hessian(prob: LatencyProblem, x) -> np.ndarray:
    # Every user's latency rows share unit multiplier mass at a solution;
    # spread it evenly to seed the power curvature.
    per_user = np.bincount(prob.lat_user, minlength=prob.K).astype(float)
    weights = 1.0 / per_user[prob.lat_user]
    diag = np.ones(prob.n)
    diag[prob.p_slice()] = np.maximum(prob.power_curvature(x, weights), 1.0)
    return np.diag(diag)


def _restrict_powers(prob: LatencyProblem, x, c):
    # Latency blows up like 1/p as a power nears zero, which no quadratic
    # model captures; cap each step at halving the power.
    base = prob.nt + 1 + prob.ns
    rows = slice(base, base + prob.ns)
    c = c.copy()
    p = x[prob.p_slice()]
    c[rows] = np.where(p > 2 * prob.pfloor, 0.5 * p, c[rows])
    return c


def _reset_epigraph(prob: LatencyProblem, x):
    # the epigraph variables carry no information of their own: put each on
    # its user's actual latency so only the physical rows can be violated
    p = x[prob.p_slice()]
    if np.any(p <= 0):
        return x
    x = x.copy()
    x[prob.z_slice()] = prob.user_latencies_seconds(p, x[prob.r_slice()]) / prob.tau
    return x


def _curvature_hessian(prob: LatencyProblem, x, lam) -> np.ndarray:
    return np.diag(np.maximum(prob.lagrangian_curvature(x, lam), _HESS_FLOOR))


_HESS_FLOOR = 1e-3


def _bfgs_update(H, s, y):
    Hs = H @ s
    sHs = float(s @ Hs)
    sy = float(s @ y)
    if sHs <= 1e-300:
        return H
    if sy < 0.2 * sHs:
        theta = 0.8 * sHs / (sHs - sy)
        y = theta * y + (1.0 - theta) * Hs
        sy = float(s @ y)
    H = H + np.outer(y, y) / sy - np.outer(Hs, Hs) / sHs
    return 0.5 * (H + H.T)


def kkt_residual(prob: LatencyProblem, x) -> float:
    """First-order optimality measure at ``x`` (stationarity, complementarity, feasibility).

    Multipliers come from the QP model with an identity Hessian, whose step
    is zero exactly at a KKT point.
    """
    c, J = prob.evaluate(x)
    grad = prob.objective_gradient()
    _, lam = _solve_qp(np.eye(prob.n), grad, J, c)
    return _kkt(grad, J, c, lam)


def _kkt(grad, J, c, lam):
    stat = grad - J.T @ lam
    comp = np.abs(lam * c)
    return float(max(np.abs(stat).max(), comp.max(initial=0.0), _violation(c)))


def build_report(prob: LatencyProblem, p_frac, rates, *, method, iterations, converged,
                 kkt_residual, merit_trace=(), multipliers=None) -> SolveReport:
    """Canonicalise a solution and package it as a :class:`SolveReport`.

    Rates snap to their analytic lower bounds (latency is increasing in every
    rate, so that face holds an optimum) and powers are projected back onto
    the budget.
    """
    rates = prob.rate_floor.copy()
    p = np.maximum(np.asarray(p_frac, dtype=float), prob.pfloor)
    total = p.sum()
    if total > 1.0:
        p = p / total
    z = prob.user_latencies_seconds(p, rates)
    x = prob.pack(p, rates, z)
    full = prob.full_vector(x)
    sc = prob.scenario
    K, L = sc.num_users, sc.num_classes
    vals = constraint_functions(full, sc, prob.channel)
    max_violation = max(0.0, -vals.min_value())

    terms = prob.term_latencies_seconds(p, rates)
    map_lat = terms[:K].copy()
    class_lat = np.zeros(K)
    if terms.size > K:
        np.maximum.at(class_lat, prob.lat_user[K:], terms[K:])
    alloc = Allocation(
        powers=full[:L + 1],
        rates=full[L + 1:2 * (L + 1)],
        epigraph=full[2 * (L + 1):],
        map_latency=map_lat,
        class_latency=class_lat,
    )
    return SolveReport(
        allocation=alloc,
        objective=float(alloc.epigraph.sum()),
        iterations=iterations,
        converged=converged,
        max_violation=max_violation,
        kkt_residual=kkt_residual,
        method=method,
        merit_trace=tuple(merit_trace),
        multipliers=multipliers,
    )


def sqp_solve(scenario: Scenario, channel: ChannelRealization,
              options: Optional[SqpOptions] = None) -> SolveReport:
    """Minimise the sum of user latencies; returns the canonical optimum.

    Raises :class:`~semcast.errors.InfeasibleRequirement` when a quality
    target cannot be met at any rate. Non-convergence is reported through
    ``converged=False`` rather than raised.
    """
    opts = options or SqpOptions()
    prob = LatencyProblem(scenario, channel, power_floor=opts.power_floor)
    x = _initial_point(prob, opts)
    grad = prob.objective_gradient()
    if opts.hessian not in ("exact", "bfgs"):
        raise ValueError(f"unknown hessian mode {opts.hessian!r}")
    H = _initial_hessian(prob, x)
    weights = np.ones(prob.m)
    c, J = prob.evaluate(x)
    trace = []
    converged = False
    lam = np.zeros(prob.m)
    it = 0

    def merit_of(xt, ct):
        return float(grad @ xt) + float(weights @ np.maximum(-ct, 0.0))

    while it < opts.max_iter:
        d, lam = _solve_qp(H, grad, J, _restrict_powers(prob, x, c))
        dnorm = float(np.linalg.norm(d))
        if dnorm < opts.tol:
            # take the final step so multipliers and constraints refer to one point
            x = x + d
            c, J = prob.evaluate(x)
            _, lam = _solve_qp(H, grad, J, _restrict_powers(prob, x, c))
            converged = True
            break
        # per-row exact-penalty weights, kept above the multipliers
        weights = np.maximum(1.1 * lam + 1e-3, 0.5 * (weights + lam))
        merit = merit_of(x, c)
        slope = float(grad @ d) - float(weights @ np.maximum(-c, 0.0))
        # merit differences below this are rounding noise
        noise = 64 * np.finfo(float).eps * (1.0 + abs(merit))

        def accept(step, direction):
            xt = _reset_epigraph(prob, x + step * direction)
            ct, Jt = prob.evaluate(xt)
            mt = merit_of(xt, ct)
            if np.isfinite(mt) and mt <= merit + opts.armijo * step * slope + noise:
                return xt, ct, Jt
            return None

        found = accept(1.0, d)
        if found is None and opts.second_order_correction:
            # second-order correction against the Maratos effect
            c_t, _ = prob.evaluate(x + d)
            if np.all(np.isfinite(c_t)):
                try:
                    d2, _ = _solve_qp(H, grad, J, _restrict_powers(prob, x, c_t - J @ d))
                except QpInfeasible:
                    d2 = None
                if d2 is not None:
                    found = accept(1.0, d2)
        step = 0.5
        while found is None and step > 1e-12:
            found = accept(step, d)
            step *= 0.5
        it += 1
        if found is None:
            log.debug("line search failed at iteration %d (|d|=%.3e)", it, dnorm)
            break
        x_new, c_new, J_new = found
        trace.append((merit, merit_of(x_new, c_new)))
        log.debug("it %d |d| %.3e merit %.12g step %.3g", it, dnorm, merit,
                  float(np.linalg.norm(x_new - x)) / dnorm)

        s = x_new - x
        y = (J.T @ lam) - (J_new.T @ lam)  # grad of f is constant
        x, c, J = x_new, c_new, J_new
        if opts.hessian == "bfgs":
            H = _bfgs_update(H, s, y)
        else:
            H = _curvature_hessian(prob, x, lam)

    kkt = _kkt(grad, J, c, lam)
    if converged and kkt >= max(opts.tol, 1e-7):
        converged = False
    ps = prob.p_slice()
    return build_report(prob, x[ps], x[prob.r_slice()], method="sqp", iterations=it,
                        converged=converged, kkt_residual=kkt, merit_trace=trace,
                        multipliers=lam)
