"""Collaborative dense coding with a three-mode Gaussian state.

Alice (mode A) adds Gaussian signals ``x0, p0`` of variance ``P`` to her mode
and sends it to Bob.  Bob mixes his mode B with Charlie's mode C on an
unbalanced beam splitter (UBS1), measures ``p`` on output C, feeds the
outcome forward as ``p_B -> p_B + g * pbar``, mixes A and B on UBS2 and
finally measures ``x`` on output A and ``p`` on output B.

Each UBS acts as ``out_1 = t * in_1 + R * in_2``, ``out_2 = R * in_1 - t * in_2``
with ``R = sqrt(1 - t**2)``.  The transmissivity amplitude ``t`` is signed:
``t < 0`` is the same splitter with the opposite output sign convention,
realised by pi phase shifts on one input and one output port.

Signal and noise powers are quoted in covariance-matrix units (vacuum
quadrature = 1); only their ratio enters the capacity.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import gaussian as gs
from . import kernels
from .protocols import A, B, C, Protocol, exp_basis, state_at

GRID_POINTS = 33
STEP_TOL = 1e-6
#: Excess over a baseline below which two capacities count as equal.
CROSSING_MARGIN = 1e-9
#: Smallest squeezing tried by the refinement started away from the vacuum.
R_FLOOR = 1e-9
#: Photon numbers up to this value are treated as the vacuum; the expansion of
#: the states in ``e^{+-2r}`` leaves a rounding-level photon floor at ``r = 0``.
NBAR_FLOOR = 1e-12


@dataclass(frozen=True)
class DecodingConfig:
    """Settings of the decoder: signed UBS amplitudes, feed-forward gain, signal variance."""

    t1: float
    t2: float
    g: float = 0.0
    P: float = 0.0

    def __post_init__(self):
        for name in ("t1", "t2"):
            value = getattr(self, name)
            if not -1.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [-1, 1], got {value}")
        if not math.isfinite(self.g):
            raise ValueError(f"gain must be finite, got {self.g}")
        if not self.P >= 0.0:
            raise ValueError(f"signal variance must be nonnegative, got {self.P}")

    @property
    def r1(self):
        return math.sqrt(max(0.0, 1.0 - self.t1 * self.t1))

    @property
    def r2(self):
        return math.sqrt(max(0.0, 1.0 - self.t2 * self.t2))


@dataclass(frozen=True)
class ObservableDecomposition:
    """Measured outputs written as linear functions of the inputs.

    Row 0 is the ``x`` measurement on output A and row 1 the ``p`` measurement
    on output B.  ``signal_coeffs[k]`` multiplies ``(x0, p0)`` and
    ``noise_vectors[k]`` multiplies the state quadratures
    ``(x_A, p_A, x_B, p_B, x_C, p_C)``.
    """

    signal_coeffs: np.ndarray
    noise_vectors: np.ndarray

    def signal_powers(self, P):
        return 2.0 * P * np.sum(self.signal_coeffs**2, axis=1)

    def noise_powers(self, gamma):
        return np.einsum("ki,ij,kj->k", self.noise_vectors, gamma, self.noise_vectors)


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    snr: tuple
    config: DecodingConfig
    nbar: float
    protocol: int = None
    squeezing: float = None
    evaluations: int = field(default=0, compare=False)


def ubs(i, j, t, n):
    """Symplectic matrix of an unbalanced splitter with signed amplitude ``t``."""
    if t >= 0:
        return gs.beamsplitter(i, j, t, n)
    return gs.phase_flip(j, n) @ gs.beamsplitter(i, j, -t, n) @ gs.phase_flip(i, n)


def propagate(gamma, config):
    """Decompose both measured observables of the decoding chain.

    The chain is tracked as a ``6 x 8`` matrix whose row ``k`` expresses the
    current quadrature ``k`` in terms of the six input quadratures and the
    two signals.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (6, 6):
        raise ValueError(f"dense coding needs a three-mode state, got shape {gamma.shape}")
    xa, pa, xb, pb, xc, pc = range(6)
    track = np.hstack([np.eye(6), np.zeros((6, 2))])
    track[xa, 6] += 1.0
    track[pa, 7] += 1.0
    track = ubs(B, C, config.t1, 3) @ track
    pbar = track[pc].copy()
    track[pb] += config.g * pbar
    track = ubs(A, B, config.t2, 3) @ track
    outputs = track[[xa, pb]]
    return ObservableDecomposition(signal_coeffs=outputs[:, 6:], noise_vectors=outputs[:, :6])


def capacity(gamma, config, protocol=None, squeezing=None):
    """Capacity ``sum_k 0.5 ln(1 + S_k / N_k)`` (nats) of the decoding chain."""
    gamma = np.asarray(gamma, dtype=float)
    decomposition = propagate(gamma, config)
    signal = decomposition.signal_powers(config.P)
    noise = decomposition.noise_powers(gamma)
    snr = tuple(float(s / n) for s, n in zip(signal, noise))
    return CapacityResult(
        capacity=float(sum(0.5 * math.log1p(s) for s in snr)),
        snr=snr,
        config=config,
        nbar=float(gs.photon_number(gamma, A, config.P)),
        protocol=protocol,
        squeezing=squeezing,
    )


def baseline_capacities(nbar):
    """Coherent-state (heterodyne) and squeezed-state (homodyne) capacities."""
    if nbar < 0:
        raise ValueError(f"mean photon number must be nonnegative, got {nbar}")
    return math.log1p(nbar), math.log1p(2.0 * nbar)


@lru_cache(maxsize=None)
def _basis(protocol):
    return np.ascontiguousarray(np.stack(exp_basis(protocol)))


def _photon_floor(basis, r):
    g = basis[0] + math.exp(2 * r) * basis[1] + math.exp(-2 * r) * basis[2]
    return (g[0, 0] + g[1, 1]) / 4.0 - 0.5


def max_squeezing(protocol, nbar):
    """Largest ``r`` whose state leaves a nonnegative signal budget at ``nbar``."""
    basis = _basis(Protocol(protocol))
    if nbar <= _photon_floor(basis, 0.0) + NBAR_FLOOR:
        return 0.0
    hi = 1.0
    while _photon_floor(basis, hi) < nbar:
        hi *= 2.0
    r = brentq(lambda s: _photon_floor(basis, s) - nbar, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    # back off until the budget is feasible; doubling steps keep this short
    step = np.spacing(r)
    while r > 0.0 and _photon_floor(basis, r) > nbar:
        r = max(r - step, 0.0)
        step *= 2.0
    return r


def _compass_search(f, x0, lower, upper, steps, step_tol):
    x = np.array(x0, dtype=float)
    steps = np.array(steps, dtype=float)
    best = f(x)
    evaluations = 1
    dims = np.flatnonzero(steps > 0)
    while dims.size and steps[dims].max() >= step_tol:
        moved = False
        for d in dims:
            for sign in (1.0, -1.0):
                y = x.copy()
                y[d] = min(max(x[d] + sign * steps[d], lower[d]), upper[d])
                if y[d] == x[d]:
                    continue
                value = f(y)
                evaluations += 1
                if value > best:
                    x, best, moved = y, value, True
                    break
        if not moved:
            steps = steps / 2.0
    return x, best, evaluations


def optimize_capacity(protocol, nbar, ignore_charlie=False, grid_points=GRID_POINTS, step_tol=STEP_TOL):
    """Maximise the capacity of ``protocol`` at mean photon number ``nbar``.

    Free parameters are the squeezing ``r`` and both UBS settings; the gain
    is optimal in closed form and the signal variance is fixed by the
    photon-number budget.  A ``grid_points``-per-axis grid over
    ``r in [0, r_max]`` and both splitter angles in ``[0, pi]`` is refined by
    compass search down to ``step_tol``, started from the best grid point and
    from the best point with ``r > 0``.  The second run keeps ``r >= R_FLOOR``:
    at ``r = 0`` the state is the vacuum, every UBS1 angle is equally good and
    a search that reaches it can no longer find the squeezed optimum.  ``ignore_charlie`` pins ``t1 = 1`` and ``g = 0``.
    """
    protocol = Protocol(protocol)
    if not nbar >= 0:
        raise ValueError(f"mean photon number must be nonnegative, got {nbar}")
    basis = _basis(protocol)
    free_gain = not ignore_charlie
    r_max = max_squeezing(protocol, nbar)
    if r_max == 0.0:
        # vacuum state: heterodyne-like balanced split, nothing to feed forward
        config = DecodingConfig(t1=1.0, t2=math.sqrt(0.5), g=0.0, P=float(nbar))
        result = capacity(state_at(protocol, 0.0), config, protocol=int(protocol), squeezing=0.0)
        return replace(result, evaluations=1)
    rs = np.linspace(0.0, r_max, grid_points)
    th1s = np.zeros(1) if ignore_charlie else np.linspace(0.0, np.pi, grid_points)
    th2s = np.linspace(0.0, np.pi, grid_points)
    caps, _ = kernels.capacity_grid(basis, rs, th1s, th2s, nbar, free_gain)

    # (grid index, lower bound on r); the second start never falls back to r = 0
    starts = [(np.unravel_index(np.argmax(caps), caps.shape), 0.0)]
    if r_max > R_FLOOR and grid_points > 1:
        k, i, j = np.unravel_index(np.argmax(caps[1:]), caps[1:].shape)
        starts.append(((k + 1, i, j), R_FLOOR))

    def objective(z):
        return kernels.capacity_point(basis, z[0], z[1], z[2], nbar, free_gain)[0]

    spacing = [rs[1] - rs[0] if grid_points > 1 else 0.0, 0.0 if ignore_charlie else np.pi / (grid_points - 1),
               np.pi / (grid_points - 1)]
    best_z, best_cap, evaluations = None, -np.inf, caps.size
    for (k, i, j), r_low in starts:
        z, value, n_eval = _compass_search(
            objective, (rs[k], th1s[i], th2s[j]), (r_low, 0.0, 0.0), (r_max, np.pi, np.pi), spacing, step_tol
        )
        evaluations += n_eval
        if value > best_cap:
            best_z, best_cap = z, value

    r, th1, th2 = best_z
    _, gain, _ = kernels.capacity_point(basis, r, th1, th2, nbar, free_gain)
    gamma = state_at(protocol, r)
    # budget from the exact state, not its exponential expansion
    power = max(nbar - gs.photon_number(gamma, A), 0.0)
    config = DecodingConfig(t1=math.cos(th1), t2=math.cos(th2), g=gain, P=power)
    result = capacity(gamma, config, protocol=int(protocol), squeezing=float(r))
    return CapacityResult(
        capacity=result.capacity,
        snr=result.snr,
        config=config,
        nbar=result.nbar,
        protocol=int(protocol),
        squeezing=float(r),
        evaluations=evaluations,
    )


def worker_count():
    """Thread cap from ``CV_ENTANGLER_THREADS`` (0 or unset = one per CPU)."""
    raw = os.environ.get("CV_ENTANGLER_THREADS", "0")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"CV_ENTANGLER_THREADS must be an integer, got {raw!r}") from None
    if count < 0:
        raise ValueError("CV_ENTANGLER_THREADS must be nonnegative")
    return count or os.cpu_count() or 1


@dataclass(frozen=True)
class SweepRow:
    nbar: float
    result: CapacityResult
    coherent: float
    squeezed: float


def capacity_sweep(protocol, nbar_grid, ignore_charlie=False, workers=None):
    """Optimised capacity and both baselines at every ``nbar`` of an ascending grid."""
    grid = [float(n) for n in nbar_grid]
    if not grid:
        raise ValueError("photon-number grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("photon-number grid must be ascending")
    workers = worker_count() if workers is None else workers

    def point(nbar):
        return optimize_capacity(protocol, nbar, ignore_charlie=ignore_charlie)

    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(point, grid))
    else:
        results = [point(n) for n in grid]
    return [SweepRow(n, res, *baseline_capacities(n)) for n, res in zip(grid, results)]


@dataclass(frozen=True)
class Crossing:
    nbar: float
    bracket: tuple
    trace: tuple


def capacity_excess(protocol, nbar, baseline="coh"):
    result = optimize_capacity(protocol, nbar)
    coh, sq = baseline_capacities(nbar)
    return result.capacity - (coh if baseline == "coh" else sq), result


def find_crossing(protocol, baseline, lo, hi, xtol=1e-3, margin=CROSSING_MARGIN):
    """Bisect for the photon number where the optimised capacity overtakes a baseline.

    ``baseline`` is ``"coh"`` or ``"sq"``.  The capacity counts as exceeding
    the baseline once the excess is larger than ``margin``.  Every optimiser
    result evaluated along the way is returned in ``trace``.
    """
    if baseline not in ("coh", "sq"):
        raise ValueError(f"baseline must be 'coh' or 'sq', got {baseline!r}")
    trace = []

    def exceeds(nbar):
        excess, result = capacity_excess(protocol, nbar, baseline)
        trace.append((nbar, excess, result))
        return excess > margin

    if exceeds(lo) or not exceeds(hi):
        raise ValueError(f"no crossing bracketed in [{lo}, {hi}] for protocol {protocol} vs {baseline}")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if exceeds(mid):
            hi = mid
        else:
            lo = mid
    return Crossing(nbar=0.5 * (lo + hi), bracket=(lo, hi), trace=tuple(trace))
