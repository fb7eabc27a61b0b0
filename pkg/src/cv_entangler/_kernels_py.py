"""Pure-Python implementation of the dense-coding capacity kernels.

Mirrors ``_kernels.pyx`` operation for operation; used when the compiled
extension is unavailable or ``CV_ENTANGLER_PURE_PYTHON=1`` is set.

``basis`` is a ``(3, 6, 6)`` array ``(K0, Kplus, Kminus)`` describing the
state ``K0 + e^{2r} Kplus + e^{-2r} Kminus`` in ``(A, B, C)`` mode order.
Beam-splitter settings are angles: ``t = cos(theta)``, ``R = sin(theta)``
with ``theta`` in ``[0, pi]``, so ``t`` is a signed amplitude and ``R >= 0``.
"""

import math

import numpy as np

_X = (0, 2, 4)
_P = (1, 3, 5)


def _blocks(basis, r):
    e, ei = math.exp(2.0 * r), math.exp(-2.0 * r)
    k0, kp, km = basis
    g = k0 + e * kp + ei * km
    gx = [[float(g[i, j]) for j in _X] for i in _X]
    gp = [[float(g[i, j]) for j in _P] for i in _P]
    n0 = (g[0, 0] + g[1, 1]) / 4.0 - 0.5
    return gx, gp, float(n0)


def _quad(m, u, v):
    return sum(u[i] * m[i][j] * v[j] for i in range(3) for j in range(3))


def _evaluate(gx, gp, n0, th1, th2, nbar, free_gain):
    power = nbar - n0
    if power < 0.0:
        return -math.inf, 0.0, power
    t1, s1 = math.cos(th1), math.sin(th1)
    t2, s2 = math.cos(th2), math.sin(th2)
    wx = (t2, s2 * t1, s2 * s1)
    a = (s2, -t2 * t1, -t2 * s1)
    b = (0.0, -t2 * s1, t2 * t1)
    nx = _quad(gx, wx, wx)
    bb = _quad(gp, b, b)
    gain = -_quad(gp, a, b) / bb if free_gain and bb > 0.0 else 0.0
    v = (a[0] + gain * b[0], a[1] + gain * b[1], a[2] + gain * b[2])
    npow = _quad(gp, v, v)
    cap = 0.5 * math.log1p(2.0 * power * t2 * t2 / nx) + 0.5 * math.log1p(2.0 * power * s2 * s2 / npow)
    return cap, gain, power


def capacity_point(basis, r, th1, th2, nbar, free_gain=True):
    """Return ``(capacity, gain, signal_power)``; capacity is ``-inf`` if infeasible."""
    gx, gp, n0 = _blocks(np.asarray(basis, dtype=float), r)
    return _evaluate(gx, gp, n0, th1, th2, nbar, free_gain)


def capacity_grid(basis, rs, th1s, th2s, nbar, free_gain=True):
    """Capacity and optimal gain on the full ``rs x th1s x th2s`` grid."""
    basis = np.asarray(basis, dtype=float)
    rs = np.asarray(rs, dtype=float)
    t1, s1 = np.cos(th1s)[:, None], np.sin(th1s)[:, None]
    t2, s2 = np.cos(th2s)[None, :], np.sin(th2s)[None, :]
    zero = np.zeros(np.broadcast(t1, t2).shape)
    wx = (t2 + zero, s2 * t1, s2 * s1)
    a = (s2 + zero, -t2 * t1, -t2 * s1)
    b = (zero, -t2 * s1, t2 * t1)

    def quad(m, u, v):
        return sum(u[i] * m[i, j] * v[j] for i in range(3) for j in range(3))

    caps = np.empty((len(rs), len(th1s), len(th2s)))
    gains = np.empty_like(caps)
    for k, r in enumerate(rs):
        g = basis[0] + math.exp(2.0 * r) * basis[1] + math.exp(-2.0 * r) * basis[2]
        gx, gp = g[np.ix_(_X, _X)], g[np.ix_(_P, _P)]
        power = nbar - ((g[0, 0] + g[1, 1]) / 4.0 - 0.5)
        if power < 0.0:
            caps[k], gains[k] = -np.inf, 0.0
            continue
        nx = quad(gx, wx, wx)
        bb = quad(gp, b, b)
        if free_gain:
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = np.where(bb > 0.0, -quad(gp, a, b) / bb, 0.0)
        else:
            gain = zero
        v = tuple(a[i] + gain * b[i] for i in range(3))
        npow = quad(gp, v, v)
        caps[k] = 0.5 * np.log1p(2.0 * power * t2**2 / nx) + 0.5 * np.log1p(2.0 * power * s2**2 / npow)
        gains[k] = gain
    return caps, gains
