"""Dense complex linear algebra used by every other module.

All routines take and return plain ``numpy`` arrays of dtype ``complex128``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotNormal, NotPositive, NumericalFailure

_TINY = 1e-300


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds shared by the whole package.

    ``rank_tol`` is relative to the largest singular value, ``unitary_tol``
    bounds ``||u*u - 1||`` and ``equality_tol`` bounds coefficient-level
    operator equality.
    """

    rank_tol: float = 1e-9
    unitary_tol: float = 1e-8
    equality_tol: float = 1e-10

    def __post_init__(self):
        for name in ("rank_tol", "unitary_tol", "equality_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.conj().T


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def svd(a) -> SvdResult:
    """Thin SVD ``a = u diag(sigma) v*`` with ``sigma`` descending."""
    m = as_matrix(a)
    if m.size == 0:
        r, c = m.shape
        return SvdResult(np.zeros((r, 0), complex), np.zeros(0), np.zeros((c, 0), complex))
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return SvdResult(u, s, vh.conj().T)


def _rank_cutoff(sigma: np.ndarray, tol: Tolerance) -> float:
    smax = float(sigma[0]) if sigma.size else 0.0
    if smax < _TINY:
        return tol.rank_tol
    return tol.rank_tol * smax


def numeric_rank(a, tol: Tolerance = DEFAULT_TOL) -> int:
    """Number of singular values above ``rank_tol * sigma_max``."""
    s = svd(a).sigma
    if s.size == 0:
        return 0
    return int(np.count_nonzero(s > _rank_cutoff(s, tol)))


def polar(a, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Polar decomposition ``a = v p`` with ``p = (a*a)^(1/2)``.

    ``v`` is the partial isometry with initial space ``range(p)``; it is zero on
    ``ker(a)`` rather than an arbitrary unitary extension.
    """
    res = svd(a)
    keep = res.sigma > _rank_cutoff(res.sigma, tol) if res.sigma.size else res.sigma > 0
    v = res.u[:, keep] @ dagger(res.v[:, keep])
    p = (res.v * res.sigma) @ dagger(res.v)
    return v, hermitian_part(p)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def psd_sqrt(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Positive square root of a Hermitian positive semidefinite matrix.

    Eigenvalues down to ``-10 * rank_tol`` are clamped to zero.
    """
    h = hermitian_part(as_matrix(a))
    if h.size == 0:
        return h.copy()
    w, q = np.linalg.eigh(h)
    if w[0] < -10 * tol.rank_tol:
        raise NotPositive(f"minimum eigenvalue {w[0]:.3e} is negative")
    root = np.sqrt(np.clip(w, 0.0, None))
    return hermitian_part((q * root) @ dagger(q))


def hermitian_function(a, f, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Apply a real function to the spectrum of a Hermitian matrix."""
    h = hermitian_part(as_matrix(a))
    if h.size == 0:
        return h.copy()
    w, q = np.linalg.eigh(h)
    return hermitian_part((q * np.asarray(f(w), dtype=float)) @ dagger(q))


def eig_normal(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Eigenvalues (with multiplicity) of a normal matrix."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise NotNormal("matrix is not square")
    scale = 1.0 + np.linalg.norm(m, 2) ** 2 if m.size else 1.0
    comm = dagger(m) @ m - m @ dagger(m)
    if m.size and np.linalg.norm(comm, 2) > tol.unitary_tol * scale:
        raise NotNormal(f"||A*A - AA*|| = {np.linalg.norm(comm, 2):.3e}")
    vals = np.linalg.eigvals(m) if m.size else np.zeros(0, complex)
    order = np.lexsort((np.round(np.abs(vals), 12), np.round(np.angle(vals), 12)))
    return vals[order]


def match_multisets(a, b, tol: float) -> bool:
    """Greedy nearest-neighbour pairing of two complex multisets."""
    left = list(np.asarray(a, dtype=complex))
    right = list(np.asarray(b, dtype=complex))
    if len(left) != len(right):
        return False
    for z in left:
        if not right:
            return False
        dist = [abs(z - w) for w in right]
        k = int(np.argmin(dist))
        if dist[k] > tol:
            return False
        right.pop(k)
    return True


def normalize_phases(q: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is positive real.

    Ties are broken by the smallest row index after rounding magnitudes.
    """
    q = np.array(q, dtype=complex, copy=True)
    for j in range(q.shape[1]):
        mags = np.round(np.abs(q[:, j]), 10)
        if mags.size == 0 or mags.max() == 0:
            continue
        k = int(np.argmax(mags))
        phase = q[k, j] / abs(q[k, j])
        q[:, j] *= np.conj(phase)
    return q


def range_basis(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``range(a)`` ordered by descending singular value."""
    res = svd(a)
    if res.sigma.size == 0:
        return np.zeros((as_matrix(a).shape[0], 0), complex)
    keep = res.sigma > _rank_cutoff(res.sigma, tol)
    return normalize_phases(res.u[:, keep])


def kernel_basis(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``ker(a)`` taken from the trailing right singular vectors."""
    m = as_matrix(a)
    n = m.shape[1]
    if n == 0:
        return np.zeros((0, 0), complex)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    sig = np.zeros(n)
    sig[: s.size] = s
    cut = _rank_cutoff(np.sort(sig)[::-1], tol)
    null = sig <= cut
    return normalize_phases(vh.conj().T[:, null])


def projection_basis(p, threshold: float = 0.5) -> np.ndarray:
    """Orthonormal basis of the range of an (approximate) orthogonal projection."""
    h = hermitian_part(as_matrix(p))
    if h.size == 0:
        return np.zeros((h.shape[0], 0), complex)
    w, q = np.linalg.eigh(h)
    return normalize_phases(q[:, w > threshold][:, ::-1])


def opnorm(a) -> float:
    m = np.asarray(a, dtype=complex)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def is_unitary(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        return False
    eye = np.eye(m.shape[0])
    return (
        opnorm(dagger(m) @ m - eye) <= tol.unitary_tol
        and opnorm(m @ dagger(m) - eye) <= tol.unitary_tol
    )


def is_partial_isometry(a, atol: float = 1e-9) -> bool:
    m = as_matrix(a)
    return opnorm(m @ dagger(m) @ m - m) <= atol
