"""Pure-numpy kernels. Reference path; also used when numba is disabled."""
import numpy as np

HALF_PI = 0.5 * np.pi
TWO_PI = 2.0 * np.pi


def phase_sum(amp, W, pts):
    """Rows of ``amp`` (M, K) paired with rows of ``pts`` (M, d): sum_k amp_k e^{i W_k.pt}."""
    return np.sum(amp * np.exp(1j * (pts @ W.T)), axis=1)


def _value_and_grad(amp, W, pts):
    terms = amp * np.exp(1j * (pts @ W.T))
    return terms.sum(axis=1), (1j * terms) @ W


def fiber_search(amp, W, samples, n_starts, max_iter):
    """Minimise |F(xi)|, F(xi) = sum_k amp[c, k] exp(i W_k . xi), for every row c.

    Sampling on the shared point set ``samples`` (S, d) is followed by damped
    Gauss-Newton descent from the ``n_starts`` best samples.
    Returns ``(min_modulus (C,), argmin (C, d))``.
    """
    amp = np.asarray(amp, dtype=np.complex128)
    C, K = amp.shape
    d = W.shape[1]
    S = samples.shape[0]
    E = np.exp(1j * (samples @ W.T))
    mod = np.abs(amp @ E.T)
    n_starts = min(n_starts, S)
    order = np.argsort(mod, axis=1, kind="stable")[:, :n_starts]
    x = samples[order].reshape(C * n_starts, d)
    a = np.repeat(amp, n_starts, axis=0)
    f, g = _value_and_grad(a, W, x)
    cur = np.abs(f)
    eye = np.eye(d)
    for _ in range(max_iter):
        A = np.real(np.einsum("mi,mj->mij", g.conj(), g))
        b = np.real(g.conj() * f[:, None])
        mu = 1e-12 * np.trace(A, axis1=1, axis2=2) + 1e-300
        step = -np.linalg.solve(A + mu[:, None, None] * eye, b[..., None])[..., 0]
        accepted = np.zeros(len(x), dtype=bool)
        t = 1.0
        for _ in range(8):
            trial = x + t * step
            ft = phase_sum(a, W, trial)
            ok = (~accepted) & (np.abs(ft) < cur)
            x[ok] = trial[ok]
            accepted |= ok
            t *= 0.5
        if not accepted.any():
            break
        f, g = _value_and_grad(a, W, x)
        cur = np.abs(f)
    cur = cur.reshape(C, n_starts)
    best = np.argmin(cur, axis=1)
    rows = np.arange(C)
    return cur[rows, best], x.reshape(C, n_starts, d)[rows, best]


def log_abs_means(logamp, phase, W, pts, clip):
    """Per-batch means of clipped log|f| for several base points sharing samples.

    ``logamp`` (Y, K) holds log|c_k| - <y, lambda_k>, ``phase`` (K,) arg c_k,
    ``pts`` (B, n, p) the x samples. Returns ``(means (Y, B), clipped (Y, B))``.
    """
    B, n, p = pts.shape
    top = logamp.max(axis=1)
    amp = np.exp(logamp - top[:, None] + 1j * phase[None, :])
    E = np.exp(1j * (pts.reshape(B * n, p) @ W.T))
    with np.errstate(divide="ignore"):
        vals = np.log(np.abs(E @ amp.T)) + top[None, :]
    low = vals < -clip
    vals = np.where(low, -clip, vals)
    means = vals.reshape(B, n, -1).mean(axis=1).T
    clipped = low.reshape(B, n, -1).sum(axis=1).T
    return means, clipped


def _line_values(amp, omega, t):
    return np.exp(1j * np.multiply.outer(t, omega)) @ amp


def track_argument(amp, omega, t0, t1, h0, floor, max_depth=40):
    """Continuous increment of arg f(t), f(t) = sum_k amp_k e^{i omega_k t}, on [t0, t1].

    Every accepted step changes the argument by less than pi/2; offending
    intervals are bisected. Returns ``(increment, min_modulus, status)`` with
    status 0 = ok, 1 = modulus below ``floor``, 2 = bisection depth exhausted.
    """
    n = max(1, int(np.ceil((t1 - t0) / h0)))
    t = t0 + (t1 - t0) * np.arange(n + 1) / n
    f = _line_values(amp, omega, t)
    minmod = np.abs(f).min()
    if minmod < floor:
        return 0.0, minmod, 1
    lo_t, hi_t, lo_f, hi_f = t[:-1], t[1:], f[:-1], f[1:]
    total = 0.0
    for _ in range(max_depth):
        d = np.angle(hi_f / lo_f)
        bad = np.abs(d) >= HALF_PI
        total += d[~bad].sum()
        if not bad.any():
            return total, minmod, 0
        lo_t, hi_t, lo_f, hi_f = lo_t[bad], hi_t[bad], lo_f[bad], hi_f[bad]
        mid_t = 0.5 * (lo_t + hi_t)
        mid_f = _line_values(amp, omega, mid_t)
        minmod = min(minmod, np.abs(mid_f).min())
        if minmod < floor:
            return total, minmod, 1
        lo_t, hi_t = np.concatenate([lo_t, mid_t]), np.concatenate([mid_t, hi_t])
        lo_f, hi_f = np.concatenate([lo_f, mid_f]), np.concatenate([mid_f, hi_f])
    return total, minmod, 2


def kronecker_scan(mu, a, eps, h, t_start, n_steps, chunk=1 << 18):
    """First grid index i with ||mu t_i - a - 2 pi m|| < eps, t_i = t_start + i h.

    Returns ``(first_hit or -1, best_error, best_index)`` over the scanned range.
    """
    best_err, best_i = np.inf, -1
    for start in range(0, n_steps, chunk):
        i = np.arange(start, min(start + chunk, n_steps))
        t = t_start + i * h
        w = np.multiply.outer(t, mu) - a
        w -= TWO_PI * np.rint(w / TWO_PI)
        err = np.sqrt(np.sum(w * w, axis=1))
        k = int(np.argmin(err))
        if err[k] < best_err:
            best_err, best_i = float(err[k]), int(i[k])
        hit = np.flatnonzero(err < eps)
        if hit.size:
            first = int(i[hit[0]])
            return first, float(err[hit[0]]), first
    return -1, best_err, best_i
