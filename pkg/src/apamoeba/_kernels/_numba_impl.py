"""numba-compiled kernels; same signatures and semantics as ``_numpy_impl``."""
import math

import numpy as np
from numba import njit

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi

_opts = dict(cache=True, nogil=True)


@njit(**_opts)
def _eval_point(amp, W, x):
    K, d = W.shape
    acc = 0j
    for k in range(K):
        ph = 0.0
        for j in range(d):
            ph += W[k, j] * x[j]
        acc += amp[k] * complex(math.cos(ph), math.sin(ph))
    return acc


@njit(**_opts)
def _eval_with_grad(amp, W, x, grad):
    K, d = W.shape
    acc = 0j
    for j in range(d):
        grad[j] = 0j
    for k in range(K):
        ph = 0.0
        for j in range(d):
            ph += W[k, j] * x[j]
        term = amp[k] * complex(math.cos(ph), math.sin(ph))
        acc += term
        for j in range(d):
            grad[j] += 1j * term * W[k, j]
    return acc


@njit(**_opts)
def _solve_small(A, b, out):
    # Gaussian elimination with partial pivoting on a copy
    n = b.shape[0]
    M = A.copy()
    r = b.copy()
    for c in range(n):
        p = c
        for i in range(c + 1, n):
            if abs(M[i, c]) > abs(M[p, c]):
                p = i
        if p != c:
            for j in range(n):
                tmp = M[c, j]
                M[c, j] = M[p, j]
                M[p, j] = tmp
            tmp = r[c]
            r[c] = r[p]
            r[p] = tmp
        piv = M[c, c]
        for i in range(c + 1, n):
            f = M[i, c] / piv
            for j in range(c, n):
                M[i, j] -= f * M[c, j]
            r[i] -= f * r[c]
    for c in range(n - 1, -1, -1):
        s = r[c]
        for j in range(c + 1, n):
            s -= M[c, j] * out[j]
        out[c] = s / M[c, c]


@njit(**_opts)
def fiber_search(amp, W, samples, n_starts, max_iter):
    C, K = amp.shape
    d = W.shape[1]
    S = samples.shape[0]
    E = np.empty((S, K), dtype=np.complex128)
    for s in range(S):
        for k in range(K):
            ph = 0.0
            for j in range(d):
                ph += W[k, j] * samples[s, j]
            E[s, k] = complex(math.cos(ph), math.sin(ph))
    n_starts = min(n_starts, S)
    minmod = np.empty(C)
    argmin = np.empty((C, d))
    mod = np.empty(S)
    grad = np.empty(d, dtype=np.complex128)
    A = np.empty((d, d))
    b = np.empty(d)
    step = np.empty(d)
    x = np.empty(d)
    trial = np.empty(d)
    for c in range(C):
        for s in range(S):
            acc = 0j
            for k in range(K):
                acc += amp[c, k] * E[s, k]
            mod[s] = abs(acc)
        order = np.argsort(mod, kind="mergesort")
        best = np.inf
        for st in range(n_starts):
            for j in range(d):
                x[j] = samples[order[st], j]
            f = _eval_with_grad(amp[c], W, x, grad)
            cur = abs(f)
            for _ in range(max_iter):
                tr = 0.0
                for i in range(d):
                    b[i] = (grad[i].conjugate() * f).real
                    for j in range(d):
                        A[i, j] = (grad[i].conjugate() * grad[j]).real
                    tr += A[i, i]
                mu = 1e-12 * tr + 1e-300
                for i in range(d):
                    A[i, i] += mu
                _solve_small(A, -b, step)
                t = 1.0
                moved = False
                for _h in range(8):
                    for j in range(d):
                        trial[j] = x[j] + t * step[j]
                    ft = abs(_eval_point(amp[c], W, trial))
                    if ft < cur:
                        for j in range(d):
                            x[j] = trial[j]
                        moved = True
                        break
                    t *= 0.5
                if not moved:
                    break
                f = _eval_with_grad(amp[c], W, x, grad)
                cur = abs(f)
            if cur < best:
                best = cur
                for j in range(d):
                    argmin[c, j] = x[j]
        minmod[c] = best
    return minmod, argmin


@njit(**_opts)
def log_abs_means(logamp, phase, W, pts, clip):
    Y, K = logamp.shape
    B, n, p = pts.shape
    means = np.zeros((Y, B))
    clipped = np.zeros((Y, B), dtype=np.int64)
    amp = np.empty((Y, K), dtype=np.complex128)
    top = np.empty(Y)
    for yi in range(Y):
        m = -np.inf
        for k in range(K):
            if logamp[yi, k] > m:
                m = logamp[yi, k]
        top[yi] = m
        for k in range(K):
            r = math.exp(logamp[yi, k] - m)
            amp[yi, k] = complex(r * math.cos(phase[k]), r * math.sin(phase[k]))
    e = np.empty(K, dtype=np.complex128)
    for bi in range(B):
        for s in range(n):
            for k in range(K):
                ph = 0.0
                for j in range(p):
                    ph += W[k, j] * pts[bi, s, j]
                e[k] = complex(math.cos(ph), math.sin(ph))
            for yi in range(Y):
                acc = 0j
                for k in range(K):
                    acc += e[k] * amp[yi, k]
                a = abs(acc)
                v = math.log(a) + top[yi] if a > 0.0 else -np.inf
                if v < -clip:
                    v = -clip
                    clipped[yi, bi] += 1
                means[yi, bi] += v
        for yi in range(Y):
            means[yi, bi] /= n
    return means, clipped


@njit(**_opts)
def _line_value(amp, omega, t):
    acc = 0j
    for k in range(amp.shape[0]):
        ph = omega[k] * t
        acc += amp[k] * complex(math.cos(ph), math.sin(ph))
    return acc


@njit(**_opts)
def track_argument(amp, omega, t0, t1, h0, floor, max_depth=40):
    n = max(1, int(math.ceil((t1 - t0) / h0)))
    total = 0.0
    f0 = _line_value(amp, omega, t0)
    minmod = abs(f0)
    if minmod < floor:
        return 0.0, minmod, 1
    # explicit stack of pending right endpoints, nearest on top
    stack_t = np.empty(max_depth + 2)
    stack_f = np.empty(max_depth + 2, dtype=np.complex128)
    left = t0
    for i in range(n):
        bnd = t0 + (t1 - t0) * (i + 1) / n
        stack_t[0] = bnd
        stack_f[0] = _line_value(amp, omega, bnd)
        top = 1
        while top > 0:
            tb = stack_t[top - 1]
            fb = stack_f[top - 1]
            m = abs(fb)
            if m < minmod:
                minmod = m
            if minmod < floor:
                return total, minmod, 1
            q = fb / f0
            d = math.atan2(q.imag, q.real)
            if abs(d) < HALF_PI:
                total += d
                left = tb
                f0 = fb
                top -= 1
            else:
                if top > max_depth:
                    return total, minmod, 2
                tm = 0.5 * (left + tb)
                stack_t[top] = tm
                stack_f[top] = _line_value(amp, omega, tm)
                top += 1
    return total, minmod, 0


@njit(**_opts)
def kronecker_scan(mu, a, eps, h, t_start, n_steps):
    p = mu.shape[0]
    best_err = np.inf
    best_i = -1
    for i in range(n_steps):
        t = t_start + i * h
        s = 0.0
        for j in range(p):
            w = mu[j] * t - a[j]
            w -= TWO_PI * np.rint(w / TWO_PI)
            s += w * w
        err = math.sqrt(s)
        if err < best_err:
            best_err = err
            best_i = i
        if err < eps:
            return i, err, i
    return -1, best_err, best_i
