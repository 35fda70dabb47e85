"""Hot inner loops, compiled with numba when available.

Set ``ZIPSIM_DISABLE_NUMBA=1`` to force the pure-numpy paths (useful for
debugging and for the benchmark in ``benchmarks/bench_kernels.py``). Both
paths are kept numerically identical up to float rounding.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ZIPSIM_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via env flag
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# DTW
# ---------------------------------------------------------------------------

@njit(cache=True)
def _dtw_numba(x, y):
    n = x.shape[0]
    m = y.shape[0]
    c = x.shape[1]
    prev = np.full(m + 1, np.inf)
    cur = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[0] = np.inf
        for j in range(1, m + 1):
            cost = 0.0
            for k in range(c):
                cost += abs(x[i - 1, k] - y[j - 1, k])
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = cost + best
        prev, cur = cur, prev
    return prev[m]


def _dtw_numpy(x, y):
    """Anti-diagonal wavefront: every cell on diagonal i+j=s is independent."""
    n, m = x.shape[0], y.shape[0]
    # diag[i] holds D[i, s - i]; index 0 is the padding row
    d2 = np.full(n + 1, np.inf)
    d1 = np.full(n + 1, np.inf)
    d2[0] = 0.0  # D[0, 0] on diagonal s = 0
    for s in range(2, n + m + 1):
        lo, hi = max(1, s - m), min(n, s - 1)
        cur = np.full(n + 1, np.inf)
        if lo <= hi:
            i = np.arange(lo, hi + 1)
            j = s - i
            cost = np.abs(x[i - 1] - y[j - 1]).sum(axis=1)
            best = np.minimum(np.minimum(d2[i - 1], d1[i - 1]), d1[i])
            cur[i] = cost + best
        d2, d1 = d1, cur
    return float(d1[n])


def dtw_raw(x: np.ndarray, y: np.ndarray, use_numba: bool | None = None) -> float:
    """Unconstrained DTW with L1 local cost on ``(n, c)`` float arrays."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if use_numba is None:
        use_numba = NUMBA_AVAILABLE
    if use_numba and NUMBA_AVAILABLE:
        return float(_dtw_numba(x, y))
    return _dtw_numpy(x, y)


# ---------------------------------------------------------------------------
# Discrete linear state-space stepping (zero-order hold)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _lti_numba(phi, gamma, u, x0):
    steps = u.shape[0]
    ns = x0.shape[0]
    ni = u.shape[1]
    out = np.empty((steps, ns))
    x = x0.copy()
    for t in range(steps):
        for a in range(ns):
            out[t, a] = x[a]
        nxt = np.zeros(ns)
        for a in range(ns):
            acc = 0.0
            for b in range(ns):
                acc += phi[a, b] * x[b]
            for b in range(ni):
                acc += gamma[a, b] * u[t, b]
            nxt[a] = acc
        x = nxt
    return out


def _lti_numpy(phi, gamma, u, x0):
    out = np.empty((u.shape[0], x0.shape[0]))
    drive = u @ gamma.T
    x = x0.copy()
    for t in range(u.shape[0]):
        out[t] = x
        x = phi @ x + drive[t]
    return out


def lti_run(phi: np.ndarray, gamma: np.ndarray, u: np.ndarray, x0: np.ndarray,
            use_numba: bool | None = None) -> np.ndarray:
    """Iterate ``x[t+1] = phi @ x[t] + gamma @ u[t]``; returns states x[0..T-1]."""
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if use_numba is None:
        use_numba = NUMBA_AVAILABLE
    if use_numba and NUMBA_AVAILABLE:
        return _lti_numba(phi, gamma, u, x0)
    return _lti_numpy(phi, gamma, u, x0)


# ---------------------------------------------------------------------------
# One-pole low-pass, in place (keeps float32 buffers float32)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _one_pole_numba(x, a):
    b = 1.0 - a
    y = 0.0
    for n in range(x.shape[0]):
        y = b * x[n] + a * y
        x[n] = y


def _one_pole_numpy(x, a, chunk=1 << 20):
    from scipy.signal import lfilter

    zi = np.zeros(1)
    for s in range(0, len(x), chunk):
        seg, zi = lfilter([1.0 - a], [1.0, -a], x[s:s + chunk], zi=zi)
        x[s:s + chunk] = seg


def one_pole_lowpass(x: np.ndarray, cutoff: float, sample_rate: float,
                     use_numba: bool | None = None) -> np.ndarray:
    """Filter ``x`` in place with ``y[n] = (1-a) x[n] + a y[n-1]``, ``a = exp(-2 pi fc / fs)``."""
    a = float(np.exp(-2.0 * np.pi * cutoff / sample_rate))
    if use_numba is None:
        use_numba = NUMBA_AVAILABLE
    if use_numba and NUMBA_AVAILABLE:
        _one_pole_numba(x, a)
    else:
        _one_pole_numpy(x, a)
    return x
