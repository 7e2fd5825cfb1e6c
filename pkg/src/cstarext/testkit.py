"""Random generators and brute-force oracles used to test the main code paths.

Every generator takes a ``numpy.random.Generator``. ``RngStream`` derives
independent PCG64 generators from a 64-bit seed and an index path through
``SeedSequence`` spawn keys, which are platform independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .algebra import AlgebraElement, AlgebraShape, FiniteFactor, ShiftFactor
from .errors import NotUnitary
from .linalg import dagger, is_unitary, match_multisets, opnorm, psd_sqrt
from .shift import ShiftClassOperator

ORACLE_FIXED_DIRECTIONS = 32
ORACLE_RANDOM_DIRECTIONS = 96


@dataclass(frozen=True)
class RngStream:
    """Deterministic PCG64 stream addressed by ``(seed, index path)``."""

    seed: int
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def split(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.path + (int(index),))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))


def _ginibre(n: int, rng: np.random.Generator, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR with the diagonal of ``R`` made positive."""
    if n < 1:
        raise ValueError("n must be positive")
    q, r = np.linalg.qr(_ginibre(n, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_contraction(n: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian matrix with singular values redrawn uniformly from ``[0, 1]``."""
    u, _, vh = np.linalg.svd(_ginibre(n, rng))
    s = np.sort(rng.uniform(0.0, 1.0, n))[::-1]
    return (u * s) @ vh


def random_partial_isometry(n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    u, v = haar_unitary(n, rng), haar_unitary(n, rng)
    return u[:, :rank] @ dagger(v[:, :rank])


def _phase(rng: np.random.Generator) -> complex:
    return complex(np.exp(2j * np.pi * rng.uniform()))


def random_shift_unitary(rng: np.random.Generator, max_corner: int = 4) -> ShiftClassOperator:
    m = int(rng.integers(1, max_corner + 1))
    return ShiftClassOperator.embed(haar_unitary(m, rng), _phase(rng))


def canonical_shift_isometry(unitary: np.ndarray, r: int, phase: complex = 1.0) -> ShiftClassOperator:
    """``U (+) phase * S_r``: ``U`` on ``span{e_0..e_{k-1}}``, then ``e_j -> phase e_{j+r}``."""
    k = unitary.shape[0]
    f = np.zeros((k + r, k + r), complex)
    f[:k, :k] = unitary
    for j in range(k):
        f[j + r, j] -= phase
    return ShiftClassOperator({r: phase}, f)


def random_shift_isometry(max_unitary_dim: int, rng: np.random.Generator, r: int | None = None):
    """Isometry ``V (U (+) c S_r) V*`` with a finite-corner unitary ``V``.

    Returns ``(operator, metadata)``; the metadata records the Wold
    invariants by construction.
    """
    k = int(rng.integers(0, max_unitary_dim + 1))
    r = int(rng.integers(1, 4)) if r is None else r
    u = haar_unitary(k, rng) if k else np.zeros((0, 0), complex)
    c = _phase(rng)
    a0 = canonical_shift_isometry(u, r, c)
    m = k + r + int(rng.integers(0, 3))
    v = ShiftClassOperator.embed(haar_unitary(m, rng), 1.0)
    a = v @ a0 @ v.H
    spectrum = np.linalg.eigvals(u) if k else np.zeros(0, complex)
    meta = {"multiplicity": r, "unitary_dim": k, "spectrum": spectrum, "phase": c}
    return a, meta


def _tail_shift(power: int, start: int, coeff: complex = 1.0) -> ShiftClassOperator:
    """``coeff * S^power (1 - P_start)`` with ``P_start`` the projection onto the first ``start`` vectors."""
    s = ShiftClassOperator.shift(power, coeff)
    if start == 0:
        return s
    return s - s @ ShiftClassOperator.finite(np.eye(start))


def random_shift_contraction(rng: np.random.Generator, max_corner: int = 4) -> ShiftClassOperator:
    """Contraction ``V1 (C (+) c S^k) V2`` with monomial symbol.

    ``C`` is a random contraction on a corner, ``|c| <= 1`` and ``k`` may be
    zero; the result is frequently not extreme.
    """
    m = int(rng.integers(1, max_corner + 1))
    k = int(rng.integers(0, 3))
    kind = rng.integers(0, 3)
    c = 0.0 if kind == 0 else _phase(rng) * (1.0 if kind == 1 else rng.uniform(0.2, 1.0))
    x0 = ShiftClassOperator.finite(random_contraction(m, rng))
    if c != 0:
        x0 = x0 + _tail_shift(k, m, c)
    size = m + k
    v1 = ShiftClassOperator.embed(haar_unitary(size, rng))
    v2 = ShiftClassOperator.embed(haar_unitary(size, rng))
    x = v1 @ x0 @ v2
    return x.H if rng.uniform() < 0.5 else x


def _nonextreme_shift(rng: np.random.Generator) -> ShiftClassOperator:
    s = ShiftClassOperator.shift(1)
    one = ShiftClassOperator.identity()
    choice = int(rng.integers(0, 5))
    if choice == 0:
        return s * float(rng.uniform(0.1, 0.9))
    if choice == 1:
        # both defects nonzero: S kills e_0, range misses e_0 and e_1
        return s @ (one - ShiftClassOperator.matrix_unit(0, 0))
    if choice == 2:
        return ShiftClassOperator.matrix_unit(0, 0) * _phase(rng)
    if choice == 3:
        return ShiftClassOperator({1: 0.5, -1: 0.5})
    while True:
        x = random_shift_contraction(rng)
        if not (x.is_isometry() or x.is_coisometry()):
            return x


def _extreme_shift(rng: np.random.Generator) -> ShiftClassOperator:
    choice = int(rng.integers(0, 3))
    if choice == 0:
        return random_shift_unitary(rng)
    a, _ = random_shift_isometry(3, rng)
    return a if choice == 1 else a.H


def _nonextreme_finite(n: int, rng: np.random.Generator) -> np.ndarray:
    choice = int(rng.integers(0, 3))
    if choice == 0:
        return random_contraction(n, rng)
    if choice == 1:
        return haar_unitary(n, rng) * float(rng.uniform(0.1, 0.95))
    # rank < n leaves both defects nonzero
    return random_partial_isometry(n, int(rng.integers(0, n)), rng)


def random_shape(rng: np.random.Generator, max_blocks: int = 3, max_dim: int = 6, shift_blocks: int = 0) -> AlgebraShape:
    """Random shape with exactly ``shift_blocks`` shift factors placed at random."""
    low = 0 if shift_blocks else 1
    nfin = int(rng.integers(low, max(max_blocks - shift_blocks, low) + 1))
    blocks = [FiniteFactor(int(rng.integers(1, max_dim + 1))) for _ in range(nfin)]
    for _ in range(shift_blocks):
        blocks.insert(int(rng.integers(0, len(blocks) + 1)), ShiftFactor())
    return AlgebraShape(tuple(blocks))


def random_element(kind: str, shape: AlgebraShape, rng: np.random.Generator) -> AlgebraElement:
    """Element of ``shape`` drawn from a named family.

    ``unitary`` and ``contraction`` act blockwise; ``isometry_shift`` puts a
    Wold-type isometry in every shift block; ``extreme`` mixes unitaries,
    isometries and coisometries; ``nonextreme`` makes at least one block fail.
    """
    blocks = []
    bad = int(rng.integers(0, len(shape))) if kind == "nonextreme" else -1
    for i, b in enumerate(shape):
        shift = isinstance(b, ShiftFactor)
        if kind == "unitary":
            blocks.append(random_shift_unitary(rng) if shift else haar_unitary(b.dim, rng))
        elif kind == "contraction":
            blocks.append(random_shift_contraction(rng) if shift else random_contraction(b.dim, rng))
        elif kind == "isometry_shift":
            blocks.append(random_shift_isometry(3, rng)[0] if shift else haar_unitary(b.dim, rng))
        elif kind in ("extreme", "nonextreme"):
            if i == bad:
                blocks.append(_nonextreme_shift(rng) if shift else _nonextreme_finite(b.dim, rng))
            elif kind == "nonextreme" and rng.uniform() < 0.3:
                blocks.append(random_shift_contraction(rng) if shift else random_contraction(b.dim, rng))
            else:
                blocks.append(_extreme_shift(rng) if shift else haar_unitary(b.dim, rng))
        else:
            raise ValueError(f"unknown kind {kind!r}")
    return AlgebraElement(shape, blocks)


def _commuting_positive_finite(a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    t, z = scipy.linalg.schur(a, output="complex")
    mu = rng.uniform(0.5, 2.0, a.shape[0])
    return (z * mu) @ dagger(z)


def similarity_pair(shape: AlgebraShape, rng: np.random.Generator, mode: str | None = None):
    """``(a, b, t)`` with isometric ``a``, invertible ``t`` and ``b = t a t^-1``.

    ``mode`` is ``unitary`` (``t`` unitary), ``positive`` (``t`` positive and
    commuting with ``a``) or ``mixed`` (a product of both).
    """
    mode = mode or ("unitary", "positive", "mixed")[int(rng.integers(0, 3))]
    av, bv, tv = [], [], []
    for b in shape:
        if isinstance(b, ShiftFactor):
            a0_u = haar_unitary(int(rng.integers(1, 4)), rng) if rng.uniform() < 0.7 else np.zeros((0, 0), complex)
            k = a0_u.shape[0]
            r = int(rng.integers(1, 4))
            c = _phase(rng)
            a0 = canonical_shift_isometry(a0_u, r, c)
            m = k + r + int(rng.integers(0, 3))
            v = ShiftClassOperator.embed(haar_unitary(m, rng))
            a = v @ a0 @ v.H
            w = ShiftClassOperator.embed(haar_unitary(m + 2, rng), _phase(rng))
            if k:
                pk = _commuting_positive_finite(a0_u, rng)
            else:
                pk = np.zeros((0, 0), complex)
            lam = float(rng.uniform(0.5, 2.0))
            corner = np.eye(m, dtype=complex) * lam
            corner[:k, :k] = pk
            p = v @ ShiftClassOperator.embed(corner, lam) @ v.H
            t = w if mode == "unitary" else p if mode == "positive" else w @ p
            bb = w @ a @ w.H if mode != "positive" else a
        else:
            a = haar_unitary(b.dim, rng)
            w = haar_unitary(b.dim, rng)
            p = _commuting_positive_finite(a, rng)
            t = w if mode == "unitary" else p if mode == "positive" else w @ p
            bb = w @ a @ dagger(w) if mode != "positive" else a
        av.append(a)
        bv.append(bb)
        tv.append(t)
    return AlgebraElement(shape, av), AlgebraElement(shape, bv), AlgebraElement(shape, tv), mode


def finite_corpus(count: int, seed: int, max_blocks: int = 3, max_dim: int = 6) -> list[AlgebraElement]:
    """Finite-shape elements: extreme, non-extreme and generic contractions."""
    root = RngStream(seed)
    out = []
    for i in range(count):
        rng = root.split(i).generator()
        shape = random_shape(rng, max_blocks, max_dim)
        kind = ("extreme", "nonextreme", "contraction", "unitary")[int(rng.integers(0, 4))]
        out.append(random_element(kind, shape, rng))
    return out


def shift_corpus(count: int, seed: int, max_blocks: int = 3, max_dim: int = 4) -> list[AlgebraElement]:
    """Elements whose shape contains one or two shift blocks."""
    root = RngStream(seed, (1,))
    out = []
    for i in range(count):
        rng = root.split(i).generator()
        nshift = 1 if rng.uniform() < 0.7 else 2
        shape = random_shape(rng, max_blocks, max_dim, shift_blocks=nshift)
        kind = ("extreme", "nonextreme", "contraction", "isometry_shift")[int(rng.integers(0, 4))]
        out.append(random_element(kind, shape, rng))
    return out


# oracles


def oracle_extreme_bruteforce(x: AlgebraElement, seed: int = 0) -> bool:
    """Decide extremality by searching for ``y != 0`` with ``||x +- y|| <= 1``.

    Candidates are ``D_r^(1/2) z D_l^(1/2)`` for ``z`` from a fixed grid of
    matrix units and Fourier-type unitaries plus Gaussian directions, each
    scaled down until admissible. Works on finite shapes only.
    """
    if not x.shape.is_finite:
        raise ValueError("oracle handles finite shapes only")
    rng = np.random.default_rng(seed)
    for m in x.blocks:
        m = np.asarray(m)
        n = m.shape[0]
        dl = psd_sqrt(np.eye(n) - dagger(m) @ m)
        dr = psd_sqrt(np.eye(n) - m @ dagger(m))
        for z in _oracle_directions(n, rng):
            y = dr @ z @ dl
            ny = opnorm(y)
            if ny < 1e-6:
                continue
            y = y / ny
            for _ in range(30):
                if max(opnorm(m + y), opnorm(m - y)) <= 1 + 1e-9:
                    return False
                y = y * 0.5
                if opnorm(y) < 1e-6:
                    break
    return True


def _oracle_directions(n: int, rng: np.random.Generator):
    fourier = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
    fixed = [np.eye(n, dtype=complex), fourier, dagger(fourier)]
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), complex)
            e[i, j] = 1.0
            fixed.append(e)
    for z in fixed[:ORACLE_FIXED_DIRECTIONS]:
        yield z
    for _ in range(ORACLE_RANDOM_DIRECTIONS):
        yield _ginibre(n, rng)


def oracle_unitary_equiv(u, v, tol: float = 1e-7) -> bool:
    """Unitaries are unitarily equivalent iff their spectra agree with multiplicity."""
    u, v = np.asarray(u, complex), np.asarray(v, complex)
    for m in (u, v):
        if not is_unitary(m):
            raise NotUnitary("oracle_unitary_equiv needs unitary input")
    if u.shape != v.shape:
        return False
    return match_multisets(np.linalg.eigvals(u), np.linalg.eigvals(v), tol)
