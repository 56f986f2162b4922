"""Pure-Python (numpy) versions of the solver's inner kernels.

These mirror ``_kernels.pyx`` operation for operation and are used when the
compiled extension is unavailable (or forced via ``SEMCAST_PURE_PYTHON=1``).

Decision vector layout, with ``ns`` streams and ``K`` users::

    x = [p_0 .. p_{ns-1}, r_0 .. r_{ns-1}, z_0 .. z_{K-1}]

Constraint rows, all of the form ``c(x) >= 0``::

    latency rows   z_k - off - r_s * coef / log2(1 + alpha * p_s)
    power row      1 - sum(p)
    quality rows   target_s - (a_s exp(-b_s r_s) + c_s)
    power floors   p_s - floor
    rate floors    r_s
"""

import math

import numpy as np
from scipy.linalg import solve_triangular

LN2 = math.log(2.0)

QP_OK = 0
QP_INFEASIBLE = 1
QP_MAXITER = 2
QP_NOT_SPD = 3


def eval_constraints(x, ns, K, lat_user, lat_stream, lat_off, lat_coef, lat_alpha,
                     qa, qb, qc, qt, pfloor):
    nt = lat_user.shape[0]
    n = 2 * ns + K
    m = nt + 1 + 3 * ns
    c = np.empty(m)
    J = np.zeros((m, n))

    p = x[:ns]
    r = x[ns:2 * ns]
    z = x[2 * ns:]

    ps = p[lat_stream]
    rs = r[lat_stream]
    ap = lat_alpha * ps
    l2 = np.log1p(ap) / LN2
    c[:nt] = z[lat_user] - lat_off - rs * lat_coef / l2
    rows = np.arange(nt)
    J[rows, 2 * ns + lat_user] = 1.0
    J[rows, ns + lat_stream] = -lat_coef / l2
    J[rows, lat_stream] = rs * lat_coef / (l2 * l2) * _dlog2(lat_alpha, ap)

    c[nt] = 1.0 - p.sum()
    J[nt, :ns] = -1.0

    e = np.exp(-qb * r)
    base = nt + 1
    idx = np.arange(ns)
    c[base:base + ns] = qt - (qa * e + qc)
    J[base + idx, ns + idx] = qa * qb * e

    base += ns
    c[base:base + ns] = p - pfloor
    J[base + idx, idx] = 1.0

    base += ns
    c[base:base + ns] = r
    J[base + idx, ns + idx] = 1.0
    return c, J


def _dlog2(alpha, ap):
    # d log2(1 + alpha p) / dp
    return alpha / ((1.0 + ap) * LN2)


def _givens(a, b):
    if b == 0.0:
        return 1.0, 0.0, a
    h = math.hypot(a, b)
    return a / h, b / h, h


def solve_qp(H, g, A, b, tol=1e-12, max_iter=0):
    """Goldfarb-Idnani dual active-set method.

    Minimises ``g.d + 0.5 d.H.d`` subject to ``A d + b >= 0`` with ``H``
    symmetric positive definite. Returns ``(d, lam, status, iterations)``
    where ``lam`` holds the multiplier of every row (zero when inactive).
    """
    n = g.shape[0]
    m = b.shape[0]
    if max_iter <= 0:
        max_iter = 20 * (n + m) + 50
    lam = np.zeros(m)
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return np.zeros(n), lam, QP_NOT_SPD, 0
    # J = L^{-T}; unconstrained minimiser d = -H^{-1} g = -J J^T g
    Linv = np.linalg.solve(L, np.eye(n))
    Jm = np.ascontiguousarray(Linv.T)
    d = -(Jm @ (Jm.T @ g))
    R = np.zeros((n, n))
    active = []
    u = np.zeros(n + 1)
    q = 0
    it = 0
    row_scale = 1.0 + np.abs(A).sum(axis=1)

    while True:
        s = A @ d + b
        if active:
            s[active] = np.inf
        viol = s / row_scale
        pidx = int(np.argmin(viol)) if m else -1
        if pidx < 0 or viol[pidx] >= -tol:
            for j, a_idx in enumerate(active):
                lam[a_idx] = u[j]
            return d, lam, QP_OK, it
        u[q] = 0.0
        npv = A[pidx]
        while True:
            it += 1
            if it > max_iter:
                for j, a_idx in enumerate(active):
                    lam[a_idx] = u[j]
                return d, lam, QP_MAXITER, it
            dv = Jm.T @ npv
            zdir = Jm[:, q:] @ dv[q:]
            if q:
                rdir = _back_substitute(R, dv, q)
            else:
                rdir = dv[:0]
            t1 = math.inf
            lpos = -1
            for j in range(q):
                if rdir[j] > 1e-14:
                    ratio = u[j] / rdir[j]
                    if ratio < t1:
                        t1 = ratio
                        lpos = j
            zn = float(zdir @ npv)
            if math.sqrt(float(zdir @ zdir)) > 1e-14 and zn > 0.0:
                sp = float(npv @ d) + b[pidx]
                t2 = -sp / zn
            else:
                t2 = math.inf
            t = min(t1, t2)
            if t == math.inf:
                for j, a_idx in enumerate(active):
                    lam[a_idx] = u[j]
                return d, lam, QP_INFEASIBLE, it
            if t2 == math.inf:
                u[:q] -= t * rdir
                u[q] += t
                q = _drop(Jm, R, u, active, lpos, q)
                continue
            d = d + t * zdir
            u[:q] -= t * rdir
            u[q] += t
            if t == t2:
                q = _add(Jm, R, dv.copy(), q)
                active.append(pidx)
                break
            q = _drop(Jm, R, u, active, lpos, q)


def _back_substitute(R, dv, q):
    return solve_triangular(R[:q, :q], dv[:q], lower=False, check_finite=False)


def _add(Jm, R, dv, q):
    n = Jm.shape[0]
    for j in range(n - 1, q, -1):
        cth, sth, h = _givens(dv[j - 1], dv[j])
        if sth == 0.0:
            continue
        dv[j - 1] = h
        dv[j] = 0.0
        a = Jm[:, j - 1].copy()
        bcol = Jm[:, j]
        Jm[:, j - 1] = cth * a + sth * bcol
        Jm[:, j] = -sth * a + cth * bcol
    R[:q + 1, q] = dv[:q + 1]
    return q + 1


def _drop(Jm, R, u, active, lpos, q):
    # u has q + 1 live entries: q active multipliers then the pending one
    active.pop(lpos)
    u[lpos:q] = u[lpos + 1:q + 1]
    u[q] = 0.0
    R[:, lpos:q - 1] = R[:, lpos + 1:q]
    R[:, q - 1] = 0.0
    for j in range(lpos, q - 1):
        cth, sth, h = _givens(R[j, j], R[j + 1, j])
        if sth == 0.0:
            continue
        rj = R[j, j:q - 1].copy()
        rj1 = R[j + 1, j:q - 1]
        R[j, j:q - 1] = cth * rj + sth * rj1
        R[j + 1, j:q - 1] = -sth * rj + cth * rj1
        R[j + 1, j] = 0.0
        a = Jm[:, j].copy()
        bcol = Jm[:, j + 1]
        Jm[:, j] = cth * a + sth * bcol
        Jm[:, j + 1] = -sth * a + cth * bcol
    return q - 1
