"""Wold decomposition of isometries and similarity to unitary equivalence.

An isometry ``a`` splits as ``a|K`` unitary on ``K = cap a^n H`` plus a
unilateral shift of multiplicity ``r = rank(1 - aa*)`` on
``K^perp = (+) a^n R`` with ``R = range(1 - aa*)``. Inside the Toeplitz class
``R`` is finite dimensional; ``K`` is detected on a window and certified
rather than proven, and anything that does not certify raises
``KNotStabilized``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import DEFAULT_WINDOW, AlgebraElement, block_norm
from .errors import KNotStabilized, NotIsometry, NumericalFailure, SimilarityMismatch, WindowTooSmall
from .linalg import DEFAULT_TOL, Tolerance, dagger, is_unitary, normalize_phases, numeric_rank, opnorm, polar, projection_basis
from .shift import ShiftClassOperator

EXIT_MASS = 1e-13
CLUSTER_TOL = 1e-8
RECONSTRUCTION_TOL = 1e-7
SIMILARITY_TOL = 1e-8


@dataclass(frozen=True)
class WoldForm:
    """Wold data of one block.

    ``unitary_basis`` spans ``K`` (columns on the analysis window) and
    ``unitary_matrix`` is ``a|K`` in that basis. ``wandering_basis`` spans
    ``R = range(1 - aa*)``.
    """

    block: int
    multiplicity: int
    wandering_basis: np.ndarray
    unitary_basis: np.ndarray
    unitary_matrix: np.ndarray
    window: int
    finite: bool = False

    @property
    def dim_k(self) -> int:
        return self.unitary_basis.shape[1]

    def spectrum(self) -> np.ndarray:
        if self.dim_k == 0:
            return np.zeros(0, complex)
        vals = np.linalg.eigvals(self.unitary_matrix)
        return vals[np.argsort(np.angle(vals))]

    def to_json(self) -> dict:
        from .serialize import complex_to_pair, matrix_to_json, vectors_to_json

        unitary = None
        if self.dim_k:
            unitary = {
                "k_basis": vectors_to_json(_trim_rows(self.unitary_basis)),
                "u_matrix": matrix_to_json(self.unitary_matrix),
                "spectrum": [complex_to_pair(z) for z in self.spectrum()],
            }
        return {
            "block": self.block,
            "multiplicity": self.multiplicity,
            "unitary_part": unitary,
            "wandering_basis": vectors_to_json(_trim_rows(self.wandering_basis)),
            "window": self.window,
        }


def _trim_rows(q: np.ndarray, atol: float = 1e-15) -> np.ndarray:
    if q.size == 0:
        return q
    live = np.nonzero(np.abs(q).max(axis=1) > atol)[0]
    return q[: (live[-1] + 1 if live.size else 0)]


def _pad_rows(q: np.ndarray, n: int) -> np.ndarray:
    if q.shape[0] >= n:
        return q[:n]
    return np.vstack([q, np.zeros((n - q.shape[0], q.shape[1]), complex)])


def wandering_basis(a: ShiftClassOperator, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``range(1 - aa*)`` for a shift-block isometry."""
    d = a.defects().right
    if not d.symbol.is_zero:
        raise NotIsometry("defect 1 - aa* is not finite rank")
    q = projection_basis(d.perturbation) if d.support_bound else np.zeros((0, 0), complex)
    r = numeric_rank(d.perturbation, tol) if d.support_bound else 0
    if q.shape[1] != r:
        raise NumericalFailure("defect 1 - aa* is not a projection")
    return q


def orbit(a: ShiftClassOperator, q: np.ndarray, window: int, cap: int | None = None, extra: int = 1) -> list[np.ndarray]:
    """``[a^n q]`` restricted to ``[0, window)`` until the orbit leaves the window.

    Truncating the iterates at ``max(window, support)`` keeps the leading
    ``window`` rows exact, since beyond the support ``a`` only moves mass
    by the symbol degrees.
    """
    cap = 4 * window + 64 if cap is None else cap
    length = max(window, a.support_bound) + max(abs(a.symbol.min_degree), abs(a.symbol.max_degree), 1)
    x = _pad_rows(np.asarray(q, complex), length)
    out = []
    tail = 0
    for _ in range(cap):
        xw = x[:window]
        out.append(xw)
        if np.linalg.norm(xw) < EXIT_MASS:
            tail += 1
            if tail > extra:
                return out
        x = a.apply(x, length)
    raise WindowTooSmall(f"orbit did not leave the window {window} after {cap} steps")


def _detect_k(a: ShiftClassOperator, q: np.ndarray, window: int):
    """``K`` on the leading half-window as the eigenvalue-1 space of ``1 - sum a^n q q* a*^n``."""
    terms = orbit(a, q, window)
    g = np.hstack(terms) if terms else np.zeros((window, 0), complex)
    half = window // 2
    gh = g[:half]
    c = np.eye(half) - gh @ dagger(gh)
    w, vec = np.linalg.eigh(0.5 * (c + dagger(c)))
    off = np.minimum(np.abs(w), np.abs(w - 1.0))
    if off.max(initial=0.0) > CLUSTER_TOL:
        raise KNotStabilized(f"window {window}: orbit projection does not split (spread {off.max():.2e})")
    basis = normalize_phases(vec[:, w > 0.5])
    return _pad_rows(basis, window), terms


def _certify(a: ShiftClassOperator, q: np.ndarray, window: int, tol: Tolerance):
    b1, terms = _detect_k(a, q, window)
    b2, _ = _detect_k(a, q, 2 * window)
    if b1.shape[1] != b2.shape[1]:
        raise KNotStabilized(f"dim K changes between windows {window} and {2 * window}")
    proj1 = b1 @ dagger(b1)
    proj2 = (b2 @ dagger(b2))[:window, :window]
    if opnorm(proj1 - proj2) > CLUSTER_TOL:
        raise KNotStabilized("detected K differs between windows")
    ab = a.apply(b1, window)
    u = dagger(b1) @ ab
    if b1.shape[1] and (opnorm(ab - b1 @ u) > CLUSTER_TOL or not is_unitary(u, tol)):
        raise KNotStabilized("compression of a to detected K is not unitary")
    # a = a e + sum_n (a^{n+1} q)(a^n q)* exactly on the window
    assembled = b1 @ u @ dagger(b1)
    for n in range(len(terms) - 1):
        assembled = assembled + terms[n + 1] @ dagger(terms[n])
    err = opnorm(assembled - a.truncate(window))
    if err > RECONSTRUCTION_TOL:
        raise KNotStabilized(f"reconstruction error {err:.2e} on window {window}")
    return b1, u


def wold_block(a, window: int = DEFAULT_WINDOW, tol: Tolerance = DEFAULT_TOL, block: int = 0) -> WoldForm:
    """Wold data of one isometric block payload, escalating the window once."""
    if not isinstance(a, ShiftClassOperator):
        m = np.asarray(a, complex)
        if opnorm(dagger(m) @ m - np.eye(m.shape[0])) > 1e-9:
            raise NotIsometry(f"block {block} is not unitary")
        n = m.shape[0]
        return WoldForm(block, 0, np.zeros((n, 0), complex), np.eye(n, dtype=complex), m.copy(), n, True)
    if not a.is_isometry(tol):
        raise NotIsometry(f"block {block} is not an isometry")
    q = wandering_basis(a, tol)
    if q.shape[1] == 0:
        raise KNotStabilized("unitary shift-block element: K is the whole space")
    last = None
    for w in (window, 2 * window):
        try:
            basis, u = _certify(a, q, w, tol)
        except (KNotStabilized, WindowTooSmall) as exc:
            last = exc
            continue
        return WoldForm(block, q.shape[1], q, basis, u, w)
    raise KNotStabilized(str(last))


def wold_decompose(a: AlgebraElement, block: int, window: int = DEFAULT_WINDOW, tol: Tolerance = DEFAULT_TOL) -> WoldForm:
    if not 0 <= block < len(a.shape):
        raise IndexError(f"block {block} out of range")
    return wold_block(a.blocks[block], window, tol, block)


def assemble(form: WoldForm, a: ShiftClassOperator, window: int) -> np.ndarray:
    """Window matrix of ``(a|K) (+) (shift part)`` rebuilt from the Wold data."""
    b = _pad_rows(form.unitary_basis, window)
    out = b @ form.unitary_matrix @ dagger(b)
    terms = orbit(a, form.wandering_basis, window)
    for n in range(len(terms) - 1):
        out = out + terms[n + 1] @ dagger(terms[n])
    return out


def orthocomplement_properties_check(form: WoldForm, a, steps: int = 32, atol: float = 1e-8) -> bool:
    """Check ``a^n R`` orthonormal across ``n <= steps`` and ``K`` invariant and orthogonal to them."""
    if form.finite:
        m = np.asarray(a, complex)
        return opnorm(m @ form.unitary_basis - form.unitary_basis @ form.unitary_matrix) <= atol
    q = form.wandering_basis
    vecs = [q]
    x = q
    for _ in range(steps):
        x = a.apply(x)
        vecs.append(x)
    length = max(v.shape[0] for v in vecs)
    g = np.hstack([_pad_rows(v, length) for v in vecs])
    if opnorm(dagger(g) @ g - np.eye(g.shape[1])) > atol:
        return False
    if form.dim_k == 0:
        return True
    b = form.unitary_basis
    n = max(length, b.shape[0])
    bk = _pad_rows(b, n)
    ab = a.apply(bk, n)
    if opnorm(ab - bk @ form.unitary_matrix) > atol:
        return False
    return opnorm(dagger(bk) @ _pad_rows(g, n)) <= atol


# similarity


def _relative_intertwining(a, b, t, window: int) -> float:
    diff = b @ t - t @ a
    nt = block_norm(t, window).value
    return block_norm(diff, window).value / max(nt, 1e-300)


def _shift_v(a: ShiftClassOperator, b: ShiftClassOperator, t: ShiftClassOperator, tol: Tolerance):
    """``v`` in coordinates: ``(q_a, q_b, W)`` with ``v = q_b W q_a*``.

    ``t*`` maps ``range(1 - bb*)`` onto ``range(1 - aa*)``, so with
    ``N = q_a* t* q_b`` the operator ``(t^-1)* p_0`` equals ``q_b N^-1 q_a*``
    and its polar factor is ``q_b polar(N^-1) q_a*``. No inverse of ``t``
    itself is needed.
    """
    qa, qb = wandering_basis(a, tol), wandering_basis(b, tol)
    if qa.shape[1] != qb.shape[1]:
        raise SimilarityMismatch("defect ranks of a and b differ")
    tq = t.H.apply(qb)
    n = max(tq.shape[0], qa.shape[0])
    tq, qa_p = _pad_rows(tq, n), _pad_rows(qa, n)
    mat = dagger(qa_p) @ tq
    if opnorm(tq - qa_p @ mat) > SIMILARITY_TOL * max(1.0, opnorm(tq)):
        raise SimilarityMismatch("t* does not map range(1 - bb*) into range(1 - aa*)")
    if mat.size and np.linalg.svd(mat, compute_uv=False).min() < 1e-12:
        raise SimilarityMismatch("t is not invertible on the wandering spaces")
    w, _ = polar(np.linalg.inv(mat)) if mat.size else (mat, None)
    return qa, qb, w


def build_v(a: AlgebraElement, b: AlgebraElement, t: AlgebraElement, tol: Tolerance = DEFAULT_TOL) -> AlgebraElement:
    """Partial isometry with ``v*v = 1 - aa*`` and ``vv* = 1 - bb*`` blockwise."""
    out = []
    for i, (ab, bb, tb) in enumerate(zip(a.blocks, b.blocks, t.blocks)):
        if not isinstance(ab, ShiftClassOperator):
            out.append(np.zeros_like(np.asarray(ab)))
            continue
        if not (ab.is_isometry(tol) and bb.is_isometry(tol)):
            raise NotIsometry(f"block {i}: a and b must be isometries")
        qa, qb, w = _shift_v(ab, bb, tb, tol)
        n = max(qa.shape[0], qb.shape[0], 1)
        out.append(ShiftClassOperator.finite(_pad_rows(qb, n) @ w @ dagger(_pad_rows(qa, n))))
    return AlgebraElement(a.shape, out)


def _s_window(a: ShiftClassOperator, b: ShiftClassOperator, v: ShiftClassOperator, window: int, tol: Tolerance) -> np.ndarray:
    qa, qb = wandering_basis(a, tol), wandering_basis(b, tol)
    n = max(qa.shape[0], qb.shape[0], v.support_bound, 1)
    vp = np.zeros((n, n), complex)
    k = v.support_bound
    vp[:k, :k] = v.perturbation
    w = dagger(_pad_rows(qb, n)) @ vp @ _pad_rows(qa, n)
    oa = orbit(a, qa, window)
    ob = orbit(b, qb, window)
    s = np.zeros((window, window), complex)
    for x, y in zip(oa, ob):
        s += y @ w @ dagger(x)
    return s


def build_s(a: AlgebraElement, b: AlgebraElement, v: AlgebraElement, window: int = DEFAULT_WINDOW, tol: Tolerance = DEFAULT_TOL) -> list:
    """Window matrices of ``s = sum_n b^n v a*^n`` per block (zero on finite blocks)."""
    out = []
    for ab, bb, vb in zip(a.blocks, b.blocks, v.blocks):
        if isinstance(ab, ShiftClassOperator):
            out.append(_s_window(ab, bb, vb, window, tol))
        else:
            out.append(np.zeros_like(np.asarray(ab)))
    return out


@dataclass(frozen=True)
class SimilarityResult:
    """Unitary ``u`` with ``b = u a u*`` and its residuals.

    ``blocks`` holds a matrix for finite blocks, a class element when ``u``
    is exact in a shift block, and otherwise the leading ``window x window``
    corner of ``u``.
    """

    blocks: tuple
    window: int
    unitarity: tuple
    conjugation: tuple
    intertwining: tuple

    @property
    def max_unitarity(self) -> float:
        return max(self.unitarity)

    @property
    def max_conjugation(self) -> float:
        return max(self.conjugation)

    @property
    def verified(self) -> bool:
        return self.max_unitarity <= 1e-8 and self.max_conjugation <= 1e-7

    def to_json(self) -> dict:
        from .serialize import matrix_to_json, shift_to_json

        blocks = []
        for u in self.blocks:
            if isinstance(u, ShiftClassOperator):
                blocks.append({"kind": "shift_class", "operator": shift_to_json(u)})
            elif isinstance(u, WindowedBlock):
                blocks.append({"kind": "windowed", "window": u.window, "matrix": matrix_to_json(u.matrix)})
            else:
                blocks.append({"kind": "finite", "matrix": matrix_to_json(u)})
        return {
            "blocks": blocks,
            "conjugation_residual": list(self.conjugation),
            "intertwining_residual": list(self.intertwining),
            "unitarity_residual": list(self.unitarity),
            "verified": self.verified,
            "window": self.window,
        }


@dataclass(frozen=True)
class WindowedBlock:
    window: int
    matrix: np.ndarray


def _window_residuals(u_work: np.ndarray, a: ShiftClassOperator, b: ShiftClassOperator, work: int, window: int):
    eye = np.eye(window)
    uu = (dagger(u_work) @ u_work)[:window, :window]
    uu2 = (u_work @ dagger(u_work))[:window, :window]
    unit = max(opnorm(uu - eye), opnorm(uu2 - eye))
    conj = (u_work @ a.truncate(work) @ dagger(u_work))[:window, :window]
    return unit, opnorm(b.truncate(work)[:window, :window] - conj)


def _shift_unitary_case(a, b, t, tol: Tolerance):
    """Unitary ``a``: the only certified cases are ``t`` unitary or ``t`` positive commuting with ``a``."""
    if t.is_unitary(tol):
        return t
    if t.is_hermitian() and (t @ a - a @ t).is_zero(tol.equality_tol):
        # polar factor of a positive invertible operator is the identity
        return ShiftClassOperator.identity()
    raise KNotStabilized("unitary shift-block element with a general similarity: K is infinite dimensional")


def _shift_similarity(a, b, t, window: int, tol: Tolerance):
    if a.is_unitary(tol):
        u = _shift_unitary_case(a, b, t, tol)
        unit = max(
            block_norm(u.H @ u - ShiftClassOperator.identity(), window).value,
            block_norm(u @ u.H - ShiftClassOperator.identity(), window).value,
        )
        conj = block_norm(b - u @ a @ u.H, window).value
        return u, unit, conj
    fa, fb = wold_block(a, window, tol), wold_block(b, window, tol)
    if fa.multiplicity != fb.multiplicity or fa.dim_k != fb.dim_k:
        raise SimilarityMismatch("Wold invariants of a and b differ")
    pad = 2 * max(a.reach(), b.reach(), t.reach(), fa.window - window, fb.window - window) + 16
    work = max(window, fa.window, fb.window) + pad
    u = np.zeros((work, work), complex)
    if fa.dim_k:
        ba, bb = _pad_rows(fa.unitary_basis, work), _pad_rows(fb.unitary_basis, work)
        t0 = dagger(bb) @ t.apply(ba, work)
        w0, _ = polar(t0, tol)
        u += bb @ w0 @ dagger(ba)
    qa, qb, wv = _shift_v(a, b, t, tol)
    for x, y in zip(orbit(a, qa, work), orbit(b, qb, work)):
        u += y @ wv @ dagger(x)
    unit, conj = _window_residuals(u, a, b, work, window)
    return WindowedBlock(window, u[:window, :window].copy()), unit, conj


def similarity_to_unitary_equivalence(
    a: AlgebraElement, b: AlgebraElement, t: AlgebraElement, window: int = DEFAULT_WINDOW, tol: Tolerance = DEFAULT_TOL
) -> SimilarityResult:
    """Given isometries with ``b t = t a`` for invertible ``t``, find a unitary ``u`` with ``b = u a u*``."""
    if not (a.shape == b.shape == t.shape):
        raise SimilarityMismatch("a, b and t must share one shape")
    blocks, unit, conj, inter = [], [], [], []
    for i, (ab, bb, tb) in enumerate(zip(a.blocks, b.blocks, t.blocks)):
        rel = _relative_intertwining(ab, bb, tb, window)
        if rel > SIMILARITY_TOL:
            raise SimilarityMismatch(f"block {i}: ||bt - ta|| / ||t|| = {rel:.2e}")
        inter.append(rel)
        if isinstance(ab, ShiftClassOperator):
            if not (ab.is_isometry(tol) and bb.is_isometry(tol)):
                raise NotIsometry(f"block {i}: a and b must be isometries")
            u, ru, rc = _shift_similarity(ab, bb, tb, window, tol)
        else:
            ma, mb, mt = (np.asarray(m, complex) for m in (ab, bb, tb))
            n = ma.shape[0]
            for m in (ma, mb):
                if opnorm(dagger(m) @ m - np.eye(n)) > 1e-9:
                    raise NotIsometry(f"block {i}: a and b must be unitary")
            if np.linalg.svd(mt, compute_uv=False).min() < 1e-12:
                raise SimilarityMismatch(f"block {i}: t is singular")
            u, _ = polar(mt, tol)
            ru = opnorm(dagger(u) @ u - np.eye(n))
            rc = opnorm(mb - u @ ma @ dagger(u))
        blocks.append(u)
        unit.append(ru)
        conj.append(rc)
    return SimilarityResult(tuple(blocks), window, tuple(unit), tuple(conj), tuple(inter))
