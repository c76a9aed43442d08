"""Pure NumPy versions of the kernels in ``_core.pyx``.

Each function reproduces the compiled kernel's floating-point operation
order: dot products accumulate one inner index at a time (vectorised across
output entries, never reduced pairwise) and scalar reductions use
``np.cumsum``, which is strictly left to right. The two backends therefore
agree bit for bit. ``num_threads`` is accepted for signature parity only.
"""

import numpy as np

STATUS_RUNNING = 0
STATUS_CONVERGED_STEP = 1
STATUS_CONVERGED_VALUE = 2
STATUS_REACHED_TARGET = 3
STATUS_SAFEGUARD_EXHAUSTED = 4

NAME = "python"


def seqsum(a):
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size == 0:
        return 0.0
    return float(np.cumsum(a)[-1])


def _seqsum_prod(a, b):
    return seqsum(a * b)


def matmul(a, b, num_threads=1):
    out = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        out += np.multiply.outer(a[:, k], b[k, :])
    return out


def residual(vs, w, h, num_threads=1):
    out = vs - matmul(w, h)
    return out, _seqsum_prod(out, out)


def gradient(R, w, h, num_threads=1):
    acc = np.zeros(w.shape)
    for j in range(R.shape[1]):
        acc += np.multiply.outer(R[:, j], h[:, j])
    gw = -2.0 * acc
    acc = np.zeros(h.shape)
    for i in range(R.shape[0]):
        acc += np.multiply.outer(w[i, :], R[i, :])
    gh = -2.0 * acc
    return gw, gh


def _try_step(vs, w, h, gw, gh, inner, eps):
    Z = 1.0 - eps * inner
    if not Z > 0.0:
        return None
    mw = 1.0 - eps * gw
    mh = 1.0 - eps * gh
    if not mw.min() > 0.0 or not mh.min() > 0.0:
        return None
    w_new = w * mw / Z
    h_new = h * mh / Z
    total = seqsum(w_new) + seqsum(h_new)
    w_new /= total
    h_new /= total
    R_new, F_new = residual(vs, w_new, h_new)
    return w_new, h_new, R_new, F_new


def mwu_step(vs, w, h, eps, num_threads=1):
    R, _ = residual(vs, w, h)
    gw, gh = gradient(R, w, h)
    inner = _seqsum_prod(w, gw) + _seqsum_prod(h, gh)
    return _try_step(vs, w, h, gw, gh, inner, eps)


def mwu_iterate(vs, w, h, R, F, F0, eps, n_iters, step_tol, value_tol,
                target, mono_tol, eps_floor, scale4, records, num_threads=1):
    done = 0
    status = STATUS_RUNNING
    halvings = 0
    for t in range(n_iters):
        gw, gh = gradient(R, w, h)
        inner = _seqsum_prod(w, gw) + _seqsum_prod(h, gh)
        while True:
            if eps < eps_floor:
                status = STATUS_SAFEGUARD_EXHAUSTED
                break
            step = _try_step(vs, w, h, gw, gh, inner, eps)
            if step is not None and step[3] <= F + mono_tol:
                break
            eps = eps * 0.5
            halvings += 1
        if status == STATUS_SAFEGUARD_EXHAUSTED:
            break
        w_new, h_new, R_new, F_new = step
        change = max(np.abs(w_new - w).max(), np.abs(h_new - h).max())
        w[...] = w_new
        h[...] = h_new
        R[...] = R_new
        records[t, 0] = F_new * scale4
        records[t, 1] = change
        records[t, 2] = eps
        records[t, 3] = seqsum(w) + seqsum(h)
        records[t, 4] = min(1.0, w.min(), h.min())
        done = t + 1
        if target >= 0.0 and F_new < target * F0:
            status = STATUS_REACHED_TARGET
        elif change <= step_tol:
            status = STATUS_CONVERGED_STEP
        elif abs(F_new - F) <= value_tol * abs(F):
            status = STATUS_CONVERGED_VALUE
        F = F_new
        if status != STATUS_RUNNING:
            break
    return done, status, eps, F, halvings
