# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled twin of engine_py.Engine.

Same state variables, same float-operation order, same per-stream draw
order; the only differences are typing and the batch (run-to-horizon) shape.
Any semantic change here must be made in engine_py.py too — the parity test
compares full event logs bit for bit.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, expm1, log1p, INFINITY

cnp.import_array()


cdef inline double _workload(double[::1] thresh, long long[::1] X, Py_ssize_t I):
    cdef double w = 0.0
    cdef Py_ssize_t k
    for k in range(I):
        w += thresh[k] * X[k]
    return w


cdef inline double _draw(list streams, double[:, ::1] bufs, Py_ssize_t[::1] pos,
                         Py_ssize_t si):
    cdef Py_ssize_t p = pos[si]
    cdef Py_ssize_t k, block = bufs.shape[1]
    cdef cnp.ndarray fresh
    cdef double[::1] fv
    if p >= block:
        fresh = streams[si].refill()
        fv = fresh
        for k in range(block):
            bufs[si, k] = fv[k]
        p = 0
    pos[si] = p + 1
    return bufs[si, p]


def simulate(X0_in, cap_in, hbar_in, rbar_in,
             double bsn, double b_sq, double T,
             int code, int istar, double astar_jobs,
             thresh_in, a_jobs_in, rho_in,
             list streams, bint record, bint acc_weight):
    cdef Py_ssize_t I = len(X0_in)
    cdef Py_ssize_t nstreams = len(streams)
    cdef Py_ssize_t i, k, si, L, best_cls
    cdef int best_kind, kind
    cdef double best_t, tc, rem, t_next, dt, hx, m, w, srho
    cdef double c, z, logq, contrib

    cdef long long[::1] X = np.array(X0_in, dtype=np.int64)
    cdef long long[::1] cap = np.ascontiguousarray(cap_in, dtype=np.int64)
    cdef double[::1] hbar = np.ascontiguousarray(hbar_in, dtype=np.float64)
    cdef double[::1] rbar = np.ascontiguousarray(rbar_in, dtype=np.float64)
    cdef double[::1] thresh = np.ascontiguousarray(thresh_in, dtype=np.float64)
    cdef double[::1] a_jobs = np.ascontiguousarray(a_jobs_in, dtype=np.float64)
    cdef double[::1] rho = np.ascontiguousarray(rho_in, dtype=np.float64)

    cdef double[::1] Tcum = np.zeros(I)
    cdef double[::1] next_arr = np.zeros(I)
    cdef double[::1] next_epoch = np.zeros(I)
    cdef double[::1] B = np.zeros(I)
    cdef long long[::1] A = np.zeros(I, dtype=np.int64)
    cdef long long[::1] Sc = np.zeros(I, dtype=np.int64)
    cdef long long[::1] Rf = np.zeros(I, dtype=np.int64)
    cdef long long[::1] Ro = np.zeros(I, dtype=np.int64)

    # stream buffers: one eager block per stream, ascending index (as in the twin)
    blocks = [np.ascontiguousarray(streams[si].refill(), dtype=np.float64)
              for si in range(nstreams)]
    cdef Py_ssize_t block = len(blocks[0])
    for si in range(nstreams):
        if len(blocks[si]) != block:
            raise ValueError("streams must use a common block size")
    cdef double[:, ::1] bufs = np.empty((nstreams, block))
    for si in range(nstreams):
        for k in range(block):
            bufs[si, k] = blocks[si][k]
    cdef Py_ssize_t[::1] pos = np.zeros(nstreams, dtype=np.intp)

    cdef double t = 0.0
    cdef double H = 0.0
    cdef double run_max = -INFINITY
    cdef double run_sum = 0.0

    # event log, grown geometrically
    cdef Py_ssize_t capa = 1024 if record else 0
    cdef Py_ssize_t size = 0
    log_t_arr = np.empty(capa, dtype=np.float64)
    log_kind_arr = np.empty(capa, dtype=np.int8)
    log_cls_arr = np.empty(capa, dtype=np.int16)
    log_X_arr = np.empty((capa, I), dtype=np.int64)
    cdef double[::1] log_t = log_t_arr
    cdef signed char[::1] log_kind = log_kind_arr
    cdef short[::1] log_cls = log_cls_arr
    cdef long long[:, ::1] log_X = log_X_arr

    for i in range(I):
        next_arr[i] = _draw(streams, bufs, pos, 2 * i)
    for i in range(I):
        next_epoch[i] = _draw(streams, bufs, pos, 2 * i + 1)

    # ---- policy decision, mirroring engine_py._compute_B ----
    cdef long long total
    for i in range(I):
        B[i] = 0.0
    if code == 0:
        total = 0
        for i in range(I):
            total += X[i]
        if total != 0:
            L = I - 1
            for i in range(I - 1, -1, -1):
                if X[i] < a_jobs[i]:
                    L = i
                    break
            srho = 0.0
            for i in range(I):
                if i != L and X[i] > 0:
                    srho += rho[i]
            if srho > 0.0:
                for i in range(I):
                    if i != L and X[i] > 0:
                        B[i] = rho[i] / srho
            else:
                B[I - 1] = 1.0
    elif code == 1:
        for i in range(I):
            if X[i] > 0:
                B[i] = 1.0
                break
    else:
        srho = 0.0
        for i in range(I):
            if X[i] > 0:
                srho += rho[i]
        if srho > 0.0:
            for i in range(I):
                if X[i] > 0:
                    B[i] = rho[i] / srho

    if record:
        log_t[size] = 0.0
        log_kind[size] = 0
        log_cls[size] = -1
        for i in range(I):
            log_X[size, i] = X[i]
        size += 1

    while T > 0.0:
        best_t = INFINITY
        best_kind = -1
        best_cls = -1
        for i in range(I):
            if B[i] > 0.0:
                rem = next_epoch[i] - Tcum[i]
                if rem < 0.0:
                    rem = 0.0
                tc = t + rem / B[i]
                if tc < best_t:
                    best_t = tc
                    best_kind = 2
                    best_cls = i
        for i in range(I):
            if next_arr[i] < best_t:
                best_t = next_arr[i]
                best_kind = 1
                best_cls = i
        t_next = best_t if best_t < T else T
        dt = t_next - t
        if dt > 0.0:
            hx = 0.0
            for i in range(I):
                hx += hbar[i] * X[i]
            m = hx / bsn
            if acc_weight:
                c = b_sq * m
                if c > 0.0:
                    z = c * dt
                    if z > 30.0:
                        logq = z - log(c) + log1p(-exp(-z))
                    else:
                        logq = log(expm1(z) / c)
                else:
                    logq = log(dt)
                contrib = b_sq * H + logq
                if contrib > run_max:
                    run_sum = run_sum * exp(run_max - contrib) + 1.0
                    run_max = contrib
                else:
                    run_sum += exp(contrib - run_max)
            H += m * dt
            for i in range(I):
                Tcum[i] += B[i] * dt
            t = t_next
        if best_t >= T:
            if record:
                if size >= capa:
                    capa = capa * 2
                    log_t_arr = np.resize(log_t_arr, capa)
                    log_kind_arr = np.resize(log_kind_arr, capa)
                    log_cls_arr = np.resize(log_cls_arr, capa)
                    log_X_arr = np.resize(log_X_arr, (capa, I))
                    log_t = log_t_arr
                    log_kind = log_kind_arr
                    log_cls = log_cls_arr
                    log_X = log_X_arr
                log_t[size] = T
                log_kind[size] = 5
                log_cls[size] = -1
                for i in range(I):
                    log_X[size, i] = X[i]
                size += 1
            break
        if best_kind == 2:
            i = best_cls
            Tcum[i] = next_epoch[i]  # exact resync, kills drift
            X[i] -= 1
            Sc[i] += 1
            next_epoch[i] += _draw(streams, bufs, pos, 2 * i + 1)
            kind = 2
        else:
            i = best_cls
            A[i] += 1
            if X[i] >= cap[i]:
                Rf[i] += 1
                H += rbar[i] / bsn
                kind = 3
            elif code == 0 and i == istar and _workload(thresh, X, I) >= astar_jobs:
                Ro[i] += 1
                H += rbar[i] / bsn
                kind = 4
            else:
                X[i] += 1
                kind = 1
            next_arr[i] += _draw(streams, bufs, pos, 2 * i)
        if record:
            if size >= capa:
                capa = capa * 2
                log_t_arr = np.resize(log_t_arr, capa)
                log_kind_arr = np.resize(log_kind_arr, capa)
                log_cls_arr = np.resize(log_cls_arr, capa)
                log_X_arr = np.resize(log_X_arr, (capa, I))
                log_t = log_t_arr
                log_kind = log_kind_arr
                log_cls = log_cls_arr
                log_X = log_X_arr
            log_t[size] = t
            log_kind[size] = kind
            log_cls[size] = best_cls
            for i in range(I):
                log_X[size, i] = X[i]
            size += 1
        # ---- recompute policy ----
        for i in range(I):
            B[i] = 0.0
        if code == 0:
            total = 0
            for i in range(I):
                total += X[i]
            if total != 0:
                L = I - 1
                for i in range(I - 1, -1, -1):
                    if X[i] < a_jobs[i]:
                        L = i
                        break
                srho = 0.0
                for i in range(I):
                    if i != L and X[i] > 0:
                        srho += rho[i]
                if srho > 0.0:
                    for i in range(I):
                        if i != L and X[i] > 0:
                            B[i] = rho[i] / srho
                else:
                    B[I - 1] = 1.0
        elif code == 1:
            for i in range(I):
                if X[i] > 0:
                    B[i] = 1.0
                    break
        else:
            srho = 0.0
            for i in range(I):
                if X[i] > 0:
                    srho += rho[i]
            if srho > 0.0:
                for i in range(I):
                    if X[i] > 0:
                        B[i] = rho[i] / srho

    return {
        "t": t if T > 0.0 else 0.0,
        "X": np.asarray(X),
        "Tcum": np.asarray(Tcum),
        "A": np.asarray(A),
        "Sc": np.asarray(Sc),
        "Rf": np.asarray(Rf),
        "Ro": np.asarray(Ro),
        "H": H,
        "run_max": run_max,
        "run_sum": run_sum,
        "log_t": log_t_arr[:size].copy(),
        "log_kind": log_kind_arr[:size].copy(),
        "log_cls": log_cls_arr[:size].copy(),
        "log_X": log_X_arr[:size].copy(),
    }
