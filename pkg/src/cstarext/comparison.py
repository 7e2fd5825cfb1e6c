"""Projection comparison and partial-isometry averages.

In a factor two projections are comparable by dimension. Finite blocks compare
ranks; in a shift block a projection in the Toeplitz class is either finite
rank (symbol 0) or of finite corank (symbol 1), and all infinite projections
are equivalent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraElement, CentralProjection
from .errors import NotAContraction, NotAProjection, ShapeMismatch, UnsupportedShiftElement, UnsupportedShiftProjection
from .linalg import DEFAULT_TOL, Tolerance, _rank_cutoff, dagger, kernel_basis, opnorm, polar, projection_basis, psd_sqrt, svd
from .shift import ShiftClassOperator

CONTRACTION_SLACK = 1e-9


@dataclass(frozen=True)
class _ShiftProjection:
    """Range basis of a Toeplitz-class projection.

    ``basis`` spans the range inside ``span{e_0..e_{n-1}}``; for a cofinite
    projection the range also contains every ``e_j`` with ``j >= n``.
    """

    basis: np.ndarray
    n: int
    cofinite: bool

    @property
    def rank(self) -> float:
        return math.inf if self.cofinite else self.basis.shape[1]

    def vector(self, ell: int) -> np.ndarray:
        a = self.basis.shape[1]
        if ell < a:
            return self.basis[:, ell]
        if not self.cofinite:
            raise IndexError(ell)
        v = np.zeros(self.n + ell - a + 1, complex)
        v[self.n + ell - a] = 1.0
        return v


def _check_projection_matrix(e: np.ndarray, atol: float = 1e-9):
    if opnorm(e @ e - e) > atol or opnorm(e - dagger(e)) > atol:
        raise NotAProjection("block is not an orthogonal projection")


def _shift_projection(e: ShiftClassOperator, atol: float = 1e-9) -> _ShiftProjection:
    if not (e @ e - e).is_zero(atol) or not (e - e.H).is_zero(atol):
        raise NotAProjection("shift block is not an orthogonal projection")
    mono = e.symbol.as_monomial()
    if e.symbol.is_zero:
        return _ShiftProjection(projection_basis(e.perturbation), e.support_bound, False)
    if mono is not None and mono[0] == 0 and abs(mono[1] - 1) <= atol:
        n = e.support_bound
        return _ShiftProjection(projection_basis(np.eye(n) + e.perturbation), n, True)
    raise UnsupportedShiftProjection("shift projection must be finite rank or finite corank")


def _outer_sum(pairs) -> np.ndarray:
    size = max((max(g.size, h.size) for g, h in pairs), default=0)
    out = np.zeros((size, size), complex)
    for g, h in pairs:
        out[: g.size, : h.size] += np.outer(g, h.conj())
    return out


def _shift_witness(pe: _ShiftProjection, pf: _ShiftProjection) -> ShiftClassOperator:
    """Partial isometry pairing the range bases of ``pe`` and ``pf`` in order."""
    if not (pe.cofinite and pf.cofinite):
        count = int(min(pe.rank, pf.rank))
        return ShiftClassOperator.finite(_outer_sum([(pf.vector(k), pe.vector(k)) for k in range(count)]))
    a, b = pe.basis.shape[1], pf.basis.shape[1]
    head = max(a, b)
    finite = ShiftClassOperator.finite(_outer_sum([(pf.vector(k), pe.vector(k)) for k in range(head)]))
    # tail: e_{ne + l - a} -> e_{nf + l - b} for l >= head, a power of S or S*
    start = pe.n + head - a
    delta = (pf.n + head - b) - start
    shift = ShiftClassOperator.shift(delta)
    if start:
        shift = shift - shift @ ShiftClassOperator.finite(np.eye(start))
    return shift + finite


@dataclass(frozen=True)
class ComparisonResult:
    """Central projections ``p, q, r`` with ``pe ~ pf``, ``qe < qf`` and ``rf < re``.

    ``witness`` is a partial isometry with ``w*w <= e`` and ``ww* <= f``; equality
    holds on the side(s) dictated by the block's class.
    """

    p: CentralProjection
    q: CentralProjection
    r: CentralProjection
    witness: AlgebraElement
    ranks: tuple

    def to_json(self) -> dict:
        from .serialize import element_to_json

        def rk(v):
            return "inf" if v == math.inf else int(v)

        return {
            "p": self.p.indices,
            "q": self.q.indices,
            "r": self.r.indices,
            "ranks": [[rk(a), rk(b)] for a, b in self.ranks],
            "witness": element_to_json(self.witness),
        }


def compare_block(e, f, atol: float = 1e-9):
    """Return ``(rank_e, rank_f, witness)`` for one block."""
    if isinstance(e, ShiftClassOperator):
        pe, pf = _shift_projection(e, atol), _shift_projection(f, atol)
        return pe.rank, pf.rank, _shift_witness(pe, pf)
    _check_projection_matrix(e, atol)
    _check_projection_matrix(f, atol)
    he, hf = projection_basis(e), projection_basis(f)
    k = min(he.shape[1], hf.shape[1])
    return he.shape[1], hf.shape[1], hf[:, :k] @ dagger(he[:, :k])


def compare_projections(e: AlgebraElement, f: AlgebraElement) -> ComparisonResult:
    if e.shape != f.shape:
        raise ShapeMismatch("projections live in different shapes")
    p, q, r, ranks, wit = set(), set(), set(), [], []
    for i, (eb, fb) in enumerate(zip(e.blocks, f.blocks)):
        if isinstance(eb, ShiftClassOperator) != isinstance(fb, ShiftClassOperator):
            raise ShapeMismatch("block kinds differ")
        re_, rf_, w = compare_block(eb, fb)
        ranks.append((re_, rf_))
        wit.append(w)
        (p if re_ == rf_ else q if re_ < rf_ else r).add(i)
    shape = e.shape
    return ComparisonResult(
        CentralProjection(shape, frozenset(p)),
        CentralProjection(shape, frozenset(q)),
        CentralProjection(shape, frozenset(r)),
        AlgebraElement(shape, wit),
        tuple(ranks),
    )


@dataclass(frozen=True)
class PolarData:
    """Polar pieces of one block: ``x = v |x|`` and ``sqrt(1 - |x|^2)``."""

    v: object
    modulus: object
    defect_root: object
    kernel: object
    cokernel: object


def _finite_polar_data(m: np.ndarray, tol: Tolerance) -> PolarData:
    v, p = polar(m, tol)
    n = m.shape[0]
    root = psd_sqrt(np.eye(n) - p @ p, tol)
    k = kernel_basis(m, tol)
    c = kernel_basis(dagger(m), tol)
    return PolarData(v, p, root, k @ dagger(k), c @ dagger(c))


def _pad(m: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((size, size), complex)
    out[: m.shape[0], : m.shape[1]] = m
    return out


def _shift_polar_data(x: ShiftClassOperator, tol: Tolerance) -> PolarData:
    """Polar data from an SVD of the finite head of ``x``.

    With symbol ``c z^k`` and ``n`` past the support, ``x`` maps
    ``span{e_0..e_{n-1}}`` into ``span{e_0..e_{n+k-1}}`` and acts as ``c S^k``
    on the rest, with orthogonal ranges. Working on the head avoids squaring
    small singular values through ``x*x``.
    """
    mono = x.symbol.as_monomial()
    if not (x.symbol.is_zero or mono is not None):
        raise UnsupportedShiftElement(
            "averaging needs a shift block whose symbol is a scalar multiple of a power of z"
        )
    k, c = mono if mono is not None else (0, 0.0)
    mag = abs(c)
    n = x.support_bound + max(-k, 0) + 1
    rows = n + k
    size = max(n, rows)
    head = x.truncate(size)[:rows, :n]
    res = svd(head)
    sigma = np.clip(res.sigma, 0.0, 1.0)
    keep = res.sigma > _rank_cutoff(np.append(res.sigma, mag), tol)
    vk, uk = res.v[:, keep], res.u[:, keep]

    modulus = (res.v * sigma) @ dagger(res.v)
    root = np.eye(n) - res.v @ dagger(res.v) + (res.v * np.sqrt(1.0 - sigma**2)) @ dagger(res.v)
    ker = np.eye(n) - vk @ dagger(vk)
    coker = np.eye(rows) - uk @ dagger(uk)
    v_head = uk @ dagger(vk)
    if mag == 0:
        v = ShiftClassOperator.finite(_pad(v_head, size))
        return PolarData(
            v,
            ShiftClassOperator.finite(modulus),
            ShiftClassOperator.embed(root, 1.0),
            ShiftClassOperator.embed(ker, 1.0),
            ShiftClassOperator.embed(coker, 1.0),
        )
    phase = c / mag
    shift_head = ShiftClassOperator({k: phase}).truncate(size)[:rows, :n]
    v = ShiftClassOperator({k: phase}, _pad(v_head - shift_head, size))
    return PolarData(
        v,
        ShiftClassOperator.embed(modulus, mag),
        ShiftClassOperator.embed(root, math.sqrt(max(1.0 - mag**2, 0.0))),
        ShiftClassOperator.finite(ker),
        ShiftClassOperator.finite(coker),
    )


def polar_data(payload, tol: Tolerance = DEFAULT_TOL) -> PolarData:
    if isinstance(payload, ShiftClassOperator):
        return _shift_polar_data(payload, tol)
    return _finite_polar_data(np.asarray(payload), tol)


def _check_contraction(x: AlgebraElement, window: int):
    from .algebra import operator_norm

    nrm = operator_norm(x, window)
    if nrm > 1 + CONTRACTION_SLACK:
        raise NotAContraction(f"||x|| = {nrm:.12g} exceeds 1")


def polar_element(x: AlgebraElement, tol: Tolerance = DEFAULT_TOL) -> tuple[AlgebraElement, AlgebraElement]:
    """Blockwise polar decomposition ``x = v |x|``."""
    data = [polar_data(b, tol) for b in x.blocks]
    return (
        AlgebraElement(x.shape, [d.v for d in data]),
        AlgebraElement(x.shape, [d.modulus for d in data]),
    )


def partial_isometry_average(
    x: AlgebraElement, tol: Tolerance = DEFAULT_TOL, window: int = 256
) -> tuple[AlgebraElement, AlgebraElement]:
    """``x = (v1 + v2)/2`` with ``v_k = v u_k`` and ``u_{1,2} = |x| +- i sqrt(1 - |x|^2)``."""
    _check_contraction(x, window)
    v1, v2 = [], []
    for b in x.blocks:
        d = polar_data(b, tol)
        u1 = d.modulus + 1j * d.defect_root
        u2 = d.modulus - 1j * d.defect_root
        v1.append(d.v @ u1)
        v2.append(d.v @ u2)
    return AlgebraElement(x.shape, v1), AlgebraElement(x.shape, v2)


def decompose_average(
    x: AlgebraElement, tol: Tolerance = DEFAULT_TOL, window: int = 256
) -> tuple[AlgebraElement, AlgebraElement]:
    """Write a contraction as the midpoint of two C*-extreme points.

    With ``e`` the kernel projection and ``f`` the cokernel projection, the
    comparison witness ``w`` (``w*w <= e``, ``ww* <= f``) fills the gap:
    ``x1 = w + v u1`` and ``x2 = -w + v u2``.
    """
    _check_contraction(x, window)
    x1, x2 = [], []
    for b in x.blocks:
        d = polar_data(b, tol)
        _, _, w = compare_block(d.kernel, d.cokernel, atol=1e-8)
        u1 = d.modulus + 1j * d.defect_root
        u2 = d.modulus - 1j * d.defect_root
        x1.append(w + d.v @ u1)
        x2.append(-w + d.v @ u2)
    return AlgebraElement(x.shape, x1), AlgebraElement(x.shape, x2)

