"""Covariance-matrix algebra for Gaussian states.

Conventions used throughout the package:

* quadrature ordering is ``(x_1, p_1, ..., x_n, p_n)``;
* the vacuum covariance matrix is the identity, so a single vacuum
  quadrature has variance 1/2 in ``<x^2>`` units and ``gamma = 2 <xi xi^T>``;
* a classical Gaussian displacement of variance ``V`` along weight vector
  ``w`` adds ``2 V w w^T`` to the covariance matrix.

Every function is pure: inputs are never modified and fresh arrays are
returned.  Functions that test eigenvalues accept stacked matrices of shape
``(..., 2n, 2n)`` so Monte Carlo code can batch them.
"""

import numpy as np
from scipy.linalg import block_diag

#: Default tolerance for the physicality test ``gamma + i Omega >= 0``.
PHYSICAL_TOL = 1e-9
#: Default tolerance below zero still reported as a PPT (separable) verdict.
PPT_TOL = 1e-9

_SYMMETRY_RTOL = 1e-12


def symplectic_form(n):
    """Return the ``2n x 2n`` symplectic form, a direct sum of ``[[0, 1], [-1, 0]]``."""
    if n < 1:
        raise ValueError(f"mode count must be positive, got {n}")
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def n_modes(gamma):
    """Number of modes of a covariance matrix (or of a stack of them)."""
    dim = np.shape(gamma)[-1]
    if dim % 2 or dim == 0 or np.shape(gamma)[-2] != dim:
        raise ValueError(f"covariance matrix must be 2n x 2n, got shape {np.shape(gamma)}")
    return dim // 2


def symmetrize(gamma):
    return 0.5 * (gamma + np.swapaxes(gamma, -1, -2))


def check_cm(gamma, physical_tol=PHYSICAL_TOL):
    """Validate a covariance matrix and return it as a float array.

    Raises
    ------
    ValueError
        If the matrix is not square with even dimension, not symmetric to
        within a relative ``1e-12``, has a non-positive diagonal entry, or
        violates ``gamma + i Omega >= -physical_tol``.
    """
    gamma = np.asarray(gamma, dtype=float)
    n_modes(gamma)
    scale = max(np.max(np.abs(gamma)), 1.0)
    if np.max(np.abs(gamma - gamma.T)) > _SYMMETRY_RTOL * scale:
        raise ValueError("covariance matrix is not symmetric")
    if np.any(np.diag(gamma) <= 0):
        raise ValueError("covariance matrix has a non-positive diagonal entry")
    if not is_physical(gamma, physical_tol):
        raise ValueError("covariance matrix violates the uncertainty principle")
    return gamma


def hermitian_eigvals(real, imag):
    """Ascending eigenvalues of the Hermitian matrix ``real + 1j * imag``.

    Computed from the real symmetric embedding ``[[real, -imag], [imag, real]]``,
    whose spectrum is that of the Hermitian matrix with every eigenvalue
    doubled in multiplicity; every second embedded eigenvalue is kept.
    Broadcasts over leading axes.
    """
    top = np.concatenate([real, -imag], axis=-1)
    bottom = np.concatenate([imag, real], axis=-1)
    embedded = np.concatenate([top, bottom], axis=-2)
    return np.linalg.eigvalsh(embedded)[..., ::2]


def hermitian_min_eig(real, imag):
    """Smallest eigenvalue of the Hermitian matrix ``real + 1j * imag``."""
    return hermitian_eigvals(real, imag)[..., 0]


def min_symplectic_test(gamma):
    """Return ``min eig(gamma + i Omega)``; nonnegative for physical states."""
    gamma = np.asarray(gamma, dtype=float)
    omega = symplectic_form(n_modes(gamma))
    return hermitian_min_eig(gamma, np.broadcast_to(omega, gamma.shape))


def is_physical(gamma, tol=PHYSICAL_TOL):
    return bool(np.all(min_symplectic_test(gamma) >= -tol))


def vacuum(n):
    """Covariance matrix of ``n`` vacuum modes (the identity)."""
    if n < 1:
        raise ValueError(f"mode count must be positive, got {n}")
    return np.eye(2 * n)


def squeezed_vacuum(r, axis="x"):
    """Single-mode squeezed vacuum.

    ``axis="x"`` squeezes position, giving ``diag(e^{-2r}, e^{2r})``; ``axis="p"``
    squeezes momentum.  Negative ``r`` squeezes the conjugate quadrature.
    """
    if not np.isfinite(r):
        raise ValueError(f"squeezing parameter must be finite, got {r}")
    low, high = np.exp(-2.0 * r), np.exp(2.0 * r)
    if axis == "x":
        return np.diag([low, high])
    if axis == "p":
        return np.diag([high, low])
    raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")


def squeezer(mode, r, n, axis="x"):
    """Symplectic matrix of a single-mode squeezer acting on ``mode``.

    The squeezed quadrature is scaled by ``e^{-r}`` and its conjugate by
    ``e^{r}``, so that ``squeezer @ vacuum @ squeezer.T`` is a squeezed vacuum.
    """
    _check_mode(mode, n)
    S = np.eye(2 * n)
    low, high = np.exp(-r), np.exp(r)
    if axis == "x":
        S[2 * mode, 2 * mode], S[2 * mode + 1, 2 * mode + 1] = low, high
    elif axis == "p":
        S[2 * mode, 2 * mode], S[2 * mode + 1, 2 * mode + 1] = high, low
    else:
        raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")
    return S


def beamsplitter(i, j, t, n):
    """Symplectic matrix of a beam splitter mixing modes ``i`` and ``j``.

    ``t`` is the amplitude transmissivity (``t**2`` is the intensity
    transmissivity) and ``R = sqrt(1 - t**2)``.  Both quadratures of the
    outputs are::

        out_i = t * in_i + R * in_j
        out_j = R * in_i - t * in_j

    so ``t = 1/sqrt(2)`` is the balanced splitter ``(a +- c)/sqrt(2)``.
    """
    _check_mode(i, n)
    _check_mode(j, n)
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {t}")
    R = np.sqrt(1.0 - t * t)
    S = np.eye(2 * n)
    for q in (0, 1):
        a, b = 2 * i + q, 2 * j + q
        S[a, a], S[a, b] = t, R
        S[b, a], S[b, b] = R, -t
    return S


def phase_flip(mode, n):
    """Symplectic matrix of a pi phase shift: ``x -> -x, p -> -p`` on ``mode``."""
    _check_mode(mode, n)
    S = np.eye(2 * n)
    S[2 * mode, 2 * mode] = S[2 * mode + 1, 2 * mode + 1] = -1.0
    return S


def rotation(mode, phi, n):
    """Phase rotation of ``mode`` by angle ``phi``."""
    _check_mode(mode, n)
    S = np.eye(2 * n)
    c, s = np.cos(phi), np.sin(phi)
    x, p = 2 * mode, 2 * mode + 1
    S[x, x], S[x, p], S[p, x], S[p, p] = c, s, -s, c
    return S


def is_symplectic(S, atol=1e-12):
    S = np.asarray(S, dtype=float)
    omega = symplectic_form(n_modes(S))
    return bool(np.allclose(S @ omega @ S.T, omega, rtol=0.0, atol=atol))


def apply_transform(gamma, S):
    """Evolve ``gamma`` by the symplectic matrix ``S``: ``S gamma S^T``, symmetrized."""
    gamma = np.asarray(gamma, dtype=float)
    S = np.asarray(S, dtype=float)
    if S.shape != gamma.shape:
        raise ValueError(f"transform shape {S.shape} does not match covariance shape {gamma.shape}")
    return symmetrize(S @ gamma @ S.T)


def inject_noise(gamma, weights, variance):
    """Add a correlated classical Gaussian displacement.

    Every quadrature ``k`` is displaced by ``weights[k] * d`` with a common
    random ``d`` of zero mean and variance ``variance`` (quadrature units,
    vacuum variance 1/2), which maps ``gamma -> gamma + 2 V w w^T``.
    """
    gamma = np.asarray(gamma, dtype=float)
    w = np.asarray(weights, dtype=float)
    if w.shape != (gamma.shape[0],):
        raise ValueError(f"need {gamma.shape[0]} weights, got shape {w.shape}")
    if variance < 0:
        raise ValueError(f"displacement variance must be nonnegative, got {variance}")
    return symmetrize(gamma + 2.0 * variance * np.outer(w, w))


def tensor(*gammas):
    """Covariance matrix of a product state; later factors get higher mode indices."""
    if not gammas:
        raise ValueError("tensor needs at least one factor")
    for g in gammas:
        n_modes(g)
    return block_diag(*[np.asarray(g, dtype=float) for g in gammas])


def quadrature_indices(modes):
    return [2 * m + q for m in modes for q in (0, 1)]


def partial_trace(gamma, modes_kept):
    """Reduced covariance matrix on ``modes_kept``, in the order given."""
    gamma = np.asarray(gamma, dtype=float)
    n = n_modes(gamma)
    modes_kept = list(modes_kept)
    if not modes_kept:
        raise ValueError("must keep at least one mode")
    if len(set(modes_kept)) != len(modes_kept):
        raise ValueError(f"repeated mode in {modes_kept}")
    for m in modes_kept:
        _check_mode(m, n)
    idx = quadrature_indices(modes_kept)
    return gamma[np.ix_(idx, idx)]


def partial_transpose(gamma, modes):
    """Partial transposition: flip the sign of row and column ``p_j`` for each ``j``.

    ``modes`` may be a single index or an iterable of indices.
    """
    gamma = np.asarray(gamma, dtype=float)
    n = n_modes(gamma)
    modes = [modes] if np.isscalar(modes) else list(modes)
    signs = np.ones(2 * n)
    for m in modes:
        _check_mode(m, n)
        signs[2 * m + 1] = -1.0
    return gamma * np.multiply.outer(signs, signs)


def min_eig_ppt(gamma, modes):
    """Smallest eigenvalue of ``gamma^(T_J) + i Omega`` for the mode set ``J``.

    Negative means the state is entangled across ``J | rest``.  For ``1 x (n-1)``
    Gaussian splittings a nonnegative value means separable.  Accepts a
    stack of covariance matrices and returns one value per matrix.
    """
    gamma = np.asarray(gamma, dtype=float)
    n = n_modes(gamma)
    modes = [modes] if np.isscalar(modes) else list(modes)
    if not modes or len(set(modes)) >= n:
        raise ValueError(f"mode set {modes} is not a proper nonempty subset of {n} modes")
    omega = symplectic_form(n)
    transposed = partial_transpose(gamma, modes)
    return hermitian_min_eig(transposed, np.broadcast_to(omega, transposed.shape))


def nonclassicality(gamma):
    """Smallest eigenvalue of ``gamma``; below 1 means the state is squeezed."""
    return float(np.linalg.eigvalsh(np.asarray(gamma, dtype=float))[0])


def photon_number(gamma, mode=0, extra_signal=0.0):
    """Mean photon number of ``mode``, including a classical modulation.

    ``extra_signal`` is the modulation variance per quadrature in quadrature
    units, so it contributes one photon per unit.
    """
    gamma = np.asarray(gamma, dtype=float)
    _check_mode(mode, n_modes(gamma))
    if extra_signal < 0:
        raise ValueError(f"signal variance must be nonnegative, got {extra_signal}")
    x, p = 2 * mode, 2 * mode + 1
    return (gamma[x, x] + gamma[p, p]) / 4.0 - 0.5 + extra_signal


def _check_mode(mode, n):
    if not 0 <= mode < n:
        raise ValueError(f"mode index {mode} out of range for {n} modes")
