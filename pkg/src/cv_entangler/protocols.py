"""Three-mode fully separable states and the beam splitter that entangles them.

Mode order is always ``(A, B, C)``: Alice's transmitted mode, Bob's mode and
the mode that enters (protocol 1) or already sits at (protocols 2 and 3) the
second port of the balanced beam splitter acting on ``A`` and ``C``.

Protocol 1
    ``A`` x-squeezed, ``B`` vacuum; both x quadratures get the same classical
    displacement of variance ``(1 - e^{-2r})/2``; ``A`` is then split with a
    vacuum ``C``.
Protocol 2
    ``A`` x-squeezed, ``C`` p-squeezed, ``B`` vacuum; displacements ``x`` on
    ``(x_A, x_B)`` with weights ``(1, sqrt 2)`` and ``p`` on ``(p_C, p_B)`` with
    weights ``(-1, sqrt 2)``, both of variance ``(e^{2r} - 1)/2``; then ``A``
    and ``C`` are mixed.
Protocol 3
    Protocol 2 with the smaller displacement variance ``(1 - e^{-2r})/2``.
"""

import enum
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import gaussian as gs

MODE_LABELS = "ABC"
A, B, C = 0, 1, 2

_SQRT2 = np.sqrt(2.0)


class Protocol(enum.IntEnum):
    P1 = 1
    P2 = 2
    P3 = 3


def protocol1_variance(r):
    """Displacement variance that exactly undoes the squeezing of mode A."""
    return -0.5 * np.expm1(-2.0 * r)


def protocol2_variance(r):
    return 0.5 * np.expm1(2.0 * r)


protocol3_variance = protocol1_variance


def _check_r(r):
    if not r > 0 or not np.isfinite(r):
        raise ValueError(f"squeezing parameter must be positive and finite, got {r}")


def _balanced_ac(gamma):
    return gs.apply_transform(gamma, gs.beamsplitter(A, C, 1.0 / _SQRT2, 3))


def _p1_pre(r):
    gamma = gs.tensor(gs.squeezed_vacuum(r, "x"), gs.vacuum(1))
    return gs.inject_noise(gamma, [1.0, 0.0, 1.0, 0.0], protocol1_variance(r))


def _p23_pre(r, variance):
    gamma = gs.tensor(gs.squeezed_vacuum(r, "x"), gs.vacuum(1), gs.squeezed_vacuum(r, "p"))
    gamma = gs.inject_noise(gamma, [1.0, 0.0, _SQRT2, 0.0, 0.0, 0.0], variance)
    return gs.inject_noise(gamma, [0.0, 0.0, 0.0, _SQRT2, 0.0, -1.0], variance)


def protocol1_pre_bs(r):
    """Two-mode ``(A, B)`` state of protocol 1 before the beam splitter."""
    _check_r(r)
    return _p1_pre(r)


def protocol1_state(r):
    """Three-mode state of protocol 1 after splitting ``A`` with a vacuum ``C``."""
    _check_r(r)
    return _balanced_ac(gs.tensor(_p1_pre(r), gs.vacuum(1)))


def protocol2_pre_bs(r):
    _check_r(r)
    return _p23_pre(r, protocol2_variance(r))


def protocol3_pre_bs(r):
    _check_r(r)
    return _p23_pre(r, protocol3_variance(r))


def protocol2_state(r):
    _check_r(r)
    return _balanced_ac(_p23_pre(r, protocol2_variance(r)))


def protocol3_state(r):
    _check_r(r)
    return _balanced_ac(_p23_pre(r, protocol3_variance(r)))


def pre_bs_state(protocol, r):
    """Three-mode pre-beam-splitter state (protocol 1 gets its vacuum ``C`` appended)."""
    protocol = Protocol(protocol)
    if protocol is Protocol.P1:
        return gs.tensor(protocol1_pre_bs(r), gs.vacuum(1))
    return protocol2_pre_bs(r) if protocol is Protocol.P2 else protocol3_pre_bs(r)


def protocol_state(protocol, r):
    protocol = Protocol(protocol)
    builder = {Protocol.P1: protocol1_state, Protocol.P2: protocol2_state, Protocol.P3: protocol3_state}
    return builder[protocol](r)


def state_at(protocol, r):
    """Post-beam-splitter state that also accepts ``r = 0`` (the vacuum limit)."""
    if r == 0:
        return gs.vacuum(3)
    return protocol_state(protocol, r)


def exp_basis(protocol):
    """Matrices ``(K0, Kplus, Kminus)`` with ``state(r) = K0 + e^{2r} Kplus + e^{-2r} Kminus``.

    Every entry of each protocol state is such a combination, because the
    squeezed variances are ``e^{+-2r}`` and the displacement variances are
    affine in ``e^{+-2r}``.  The coefficients are recovered by solving the
    3x3 system from three exact evaluations.
    """
    rs = 0.5 * np.log([2.0, 3.0, 5.0])
    design = np.array([[1.0, np.exp(2 * r), np.exp(-2 * r)] for r in rs])
    states = np.stack([protocol_state(protocol, r) for r in rs])
    coeffs = np.linalg.solve(design, states.reshape(3, -1)).reshape(3, 6, 6)
    return tuple(np.ascontiguousarray(c) for c in coeffs)


@dataclass(frozen=True)
class PPTEntry:
    name: str
    transposed: tuple
    kept: tuple
    min_eigenvalue: float
    separable: bool

    @property
    def verdict(self):
        return "separable" if self.separable else "entangled"


@dataclass(frozen=True)
class SeparabilityReport:
    """Minimum PPT eigenvalues for every ``1 | rest`` splitting and every pair.

    ``entries`` holds the single-mode splittings first (``A|BC, B|AC, ...``)
    and then the two-mode reductions, each transposed in its first mode.
    """

    entries: tuple
    nonclassicality: float
    min_symplectic: float
    physical: bool
    tolerance: float = gs.PPT_TOL
    n_modes: int = field(default=3)

    def __getitem__(self, name):
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    @property
    def entangled(self):
        return tuple(e.name for e in self.entries if not e.separable)

    def eigenvalues(self):
        return np.array([e.min_eigenvalue for e in self.entries])


def mode_labels(n):
    return MODE_LABELS[:n] if n <= len(MODE_LABELS) else tuple(f"M{k + 1}" for k in range(n))


def bipartitions(n):
    """``(name, transposed modes, kept modes)`` for the report of an ``n``-mode state."""
    labels = mode_labels(n)
    splits = []
    if n >= 2:
        for j in range(n):
            rest = "".join(labels[k] for k in range(n) if k != j)
            splits.append((f"{labels[j]}|{rest}", (j,), tuple(range(n))))
    if n >= 3:
        for i, j in itertools.combinations(range(n), 2):
            splits.append((f"{labels[i]}{labels[j]}", (0,), (i, j)))
    return splits


def separability_report(gamma, tol=gs.PPT_TOL, physical_tol=gs.PHYSICAL_TOL):
    """PPT eigenvalues, verdicts, nonclassicality and physicality of ``gamma``."""
    gamma = gs.symmetrize(np.asarray(gamma, dtype=float))
    n = gs.n_modes(gamma)
    min_sym = float(gs.min_symplectic_test(gamma))
    physical = min_sym >= -physical_tol
    if not physical:
        warnings.warn(
            f"covariance matrix is unphysical: min eig(gamma + i Omega) = {min_sym:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    entries = []
    for name, transposed, kept in bipartitions(n):
        reduced = gamma if len(kept) == n else gs.partial_trace(gamma, kept)
        lam = float(gs.min_eig_ppt(reduced, transposed))
        entries.append(PPTEntry(name, transposed, kept, lam, lam >= -tol))
    return SeparabilityReport(
        entries=tuple(entries),
        nonclassicality=gs.nonclassicality(gamma),
        min_symplectic=min_sym,
        physical=physical,
        tolerance=tol,
        n_modes=n,
    )


def classify(gamma, tol=gs.PPT_TOL, physical_tol=gs.PHYSICAL_TOL):
    """Separability report of a three-mode state (``A|BC, B|AC, C|AB, AB, AC, BC``)."""
    if gs.n_modes(gamma) != 3:
        raise ValueError("classify expects a three-mode covariance matrix")
    return separability_report(gamma, tol, physical_tol)
