# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, exp, sqrt, hypot, INFINITY

cnp.import_array()

cdef double LN2 = log(2.0)

QP_OK = 0
QP_INFEASIBLE = 1
QP_MAXITER = 2
QP_NOT_SPD = 3


def eval_constraints(double[::1] x, Py_ssize_t ns, Py_ssize_t K,
                     const long[::1] lat_user, const long[::1] lat_stream,
                     const double[::1] lat_off, const double[::1] lat_coef,
                     const double[::1] lat_alpha,
                     const double[::1] qa, const double[::1] qb,
                     const double[::1] qc, const double[::1] qt, double pfloor):
    cdef Py_ssize_t nt = lat_user.shape[0]
    cdef Py_ssize_t n = 2 * ns + K
    cdef Py_ssize_t m = nt + 1 + 3 * ns
    c_arr = np.empty(m)
    J_arr = np.zeros((m, n))
    cdef double[::1] c = c_arr
    cdef double[:, ::1] J = J_arr
    cdef Py_ssize_t t, s, k, base
    cdef double ap, l2, rs, e, psum

    for t in range(nt):
        s = lat_stream[t]
        k = lat_user[t]
        ap = lat_alpha[t] * x[s]
        l2 = log1p(ap) / LN2
        rs = x[ns + s]
        c[t] = x[2 * ns + k] - lat_off[t] - rs * lat_coef[t] / l2
        J[t, 2 * ns + k] = 1.0
        J[t, ns + s] = -lat_coef[t] / l2
        J[t, s] = rs * lat_coef[t] / (l2 * l2) * (lat_alpha[t] / ((1.0 + ap) * LN2))

    psum = 0.0
    for s in range(ns):
        psum += x[s]
        J[nt, s] = -1.0
    c[nt] = 1.0 - psum

    base = nt + 1
    for s in range(ns):
        e = exp(-qb[s] * x[ns + s])
        c[base + s] = qt[s] - (qa[s] * e + qc[s])
        J[base + s, ns + s] = qa[s] * qb[s] * e
    base += ns
    for s in range(ns):
        c[base + s] = x[s] - pfloor
        J[base + s, s] = 1.0
    base += ns
    for s in range(ns):
        c[base + s] = x[ns + s]
        J[base + s, ns + s] = 1.0
    return c_arr, J_arr


cdef inline void _rotate_cols(double[:, ::1] M, Py_ssize_t i, Py_ssize_t j,
                              double cth, double sth) noexcept nogil:
    cdef Py_ssize_t r
    cdef double a, b
    for r in range(M.shape[0]):
        a = M[r, i]
        b = M[r, j]
        M[r, i] = cth * a + sth * b
        M[r, j] = -sth * a + cth * b


def solve_qp(double[:, ::1] H, double[::1] g, double[:, ::1] A, double[::1] b,
             double tol=1e-12, Py_ssize_t max_iter=0):
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t i, j, r, q = 0, it = 0, pidx, lpos, na = 0
    cdef double acc, t, t1, t2, zn, znorm, sp, ratio, best, v, h, cth, sth, a0, b0
    if max_iter <= 0:
        max_iter = 20 * (n + m) + 50

    d_arr = np.zeros(n)
    lam_arr = np.zeros(m)
    cdef double[::1] d = d_arr
    cdef double[::1] lam = lam_arr
    cdef double[:, ::1] L = np.zeros((n, n))
    cdef double[:, ::1] Jm = np.zeros((n, n))
    cdef double[:, ::1] R = np.zeros((n, n))
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] dv = np.zeros(n)
    cdef double[::1] zdir = np.zeros(n)
    cdef double[::1] rdir = np.zeros(n)
    cdef double[::1] s = np.zeros(m)
    cdef double[::1] row_scale = np.zeros(m)
    cdef long[::1] active = np.zeros(n + 1, dtype=np.int_)
    cdef char[::1] is_active = np.zeros(m, dtype=np.int8)

    # Cholesky H = L L^T
    for j in range(n):
        acc = H[j, j]
        for r in range(j):
            acc -= L[j, r] * L[j, r]
        if acc <= 0.0:
            return d_arr, lam_arr, QP_NOT_SPD, 0
        L[j, j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = H[i, j]
            for r in range(j):
                acc -= L[i, r] * L[j, r]
            L[i, j] = acc / L[j, j]
    # Jm = L^{-T}: solve L Y = I, then transpose
    for j in range(n):
        for i in range(j, n):
            acc = 1.0 if i == j else 0.0
            for r in range(j, i):
                acc -= L[i, r] * Jm[j, r]
            Jm[j, i] = acc / L[i, i]
    # d = -Jm Jm^T g
    for i in range(n):
        acc = 0.0
        for r in range(n):
            acc += Jm[r, i] * g[r]
        dv[i] = acc
    for i in range(n):
        acc = 0.0
        for r in range(n):
            acc += Jm[i, r] * dv[r]
        d[i] = -acc

    for i in range(m):
        acc = 1.0
        for j in range(n):
            acc += abs(A[i, j])
        row_scale[i] = acc

    while True:
        best = INFINITY
        pidx = -1
        for i in range(m):
            if is_active[i]:
                continue
            acc = b[i]
            for j in range(n):
                acc += A[i, j] * d[j]
            s[i] = acc
            v = acc / row_scale[i]
            if v < best:
                best = v
                pidx = i
        if pidx < 0 or best >= -tol:
            for j in range(q):
                lam[active[j]] = u[j]
            return d_arr, lam_arr, QP_OK, it
        u[q] = 0.0
        while True:
            it += 1
            if it > max_iter:
                for j in range(q):
                    lam[active[j]] = u[j]
                return d_arr, lam_arr, QP_MAXITER, it
            for i in range(n):
                acc = 0.0
                for r in range(n):
                    acc += Jm[r, i] * A[pidx, r]
                dv[i] = acc
            znorm = 0.0
            zn = 0.0
            for i in range(n):
                acc = 0.0
                for r in range(q, n):
                    acc += Jm[i, r] * dv[r]
                zdir[i] = acc
                znorm += acc * acc
                zn += acc * A[pidx, i]
            for i in range(q - 1, -1, -1):
                acc = dv[i]
                for j in range(i + 1, q):
                    acc -= R[i, j] * rdir[j]
                rdir[i] = acc / R[i, i]
            t1 = INFINITY
            lpos = -1
            for j in range(q):
                if rdir[j] > 1e-14:
                    ratio = u[j] / rdir[j]
                    if ratio < t1:
                        t1 = ratio
                        lpos = j
            if sqrt(znorm) > 1e-14 and zn > 0.0:
                sp = b[pidx]
                for j in range(n):
                    sp += A[pidx, j] * d[j]
                t2 = -sp / zn
            else:
                t2 = INFINITY
            t = t1 if t1 < t2 else t2
            if t == INFINITY:
                for j in range(q):
                    lam[active[j]] = u[j]
                return d_arr, lam_arr, QP_INFEASIBLE, it
            if t2 != INFINITY:
                for i in range(n):
                    d[i] += t * zdir[i]
            for j in range(q):
                u[j] -= t * rdir[j]
            u[q] += t
            if t2 != INFINITY and t == t2:
                # add constraint pidx
                for j in range(n - 1, q, -1):
                    a0 = dv[j - 1]
                    b0 = dv[j]
                    if b0 == 0.0:
                        continue
                    h = hypot(a0, b0)
                    cth = a0 / h
                    sth = b0 / h
                    dv[j - 1] = h
                    dv[j] = 0.0
                    _rotate_cols(Jm, j - 1, j, cth, sth)
                for i in range(q + 1):
                    R[i, q] = dv[i]
                active[q] = pidx
                is_active[pidx] = 1
                q += 1
                break
            # drop constraint at position lpos
            is_active[active[lpos]] = 0
            for j in range(lpos, q):
                active[j] = active[j + 1]
                u[j] = u[j + 1]
            u[q] = 0.0
            for j in range(lpos, q - 1):
                for i in range(n):
                    R[i, j] = R[i, j + 1]
            for i in range(n):
                R[i, q - 1] = 0.0
            for j in range(lpos, q - 1):
                a0 = R[j, j]
                b0 = R[j + 1, j]
                if b0 == 0.0:
                    continue
                h = hypot(a0, b0)
                cth = a0 / h
                sth = b0 / h
                for r in range(j, q - 1):
                    a0 = R[j, r]
                    b0 = R[j + 1, r]
                    R[j, r] = cth * a0 + sth * b0
                    R[j + 1, r] = -sth * a0 + cth * b0
                R[j + 1, j] = 0.0
                _rotate_cols(Jm, j, j + 1, cth, sth)
            q -= 1
