"""Extremality tests for contractions in a direct sum of factors.

Two routes reach the same verdict:

* the linear route checks that ``x`` is a partial isometry and that in every
  block at least one of ``1 - x*x`` and ``1 - xx*`` vanishes;
* the C*-route checks that every block is an isometry or a coisometry.

A failing element comes with a certificate ``y != 0`` with ``||x +- y|| <= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .algebra import (
    DEFAULT_WINDOW,
    AlgebraElement,
    AlgebraShape,
    CentralProjection,
    FiniteFactor,
    block_norm,
    compress,
    operator_norm,
)
from .comparison import CONTRACTION_SLACK, _check_contraction
from .errors import (
    CertificateConstructionFailed,
    CoefficientNotInvertible,
    CoefficientsNotPartitionOfUnity,
    EmptySelection,
    KNotStabilized,
    NotAContraction,
    NotNormal,
    ShapeMismatch,
    SumMismatch,
    SymbolVanishesOnCircle,
)
from .linalg import DEFAULT_TOL, Tolerance, dagger, eig_normal, is_partial_isometry, is_unitary, match_multisets, opnorm, psd_sqrt
from .shift import ShiftClassOperator, winding_number

MIN_CERTIFICATE = 1e-6


class Verdict(str, Enum):
    EXTREME = "CStarExtreme"
    NOT_EXTREME = "NotExtreme"


class BlockKind(str, Enum):
    UNITARY = "unitary"
    ISOMETRY = "isometry"
    COISOMETRY = "coisometry"


class Reason(str, Enum):
    NOT_PARTIAL_ISOMETRY = "NotPartialIsometry"
    BOTH_DEFECTS_NONZERO = "BothDefectsNonzeroInBlock"


@dataclass(frozen=True)
class ExtremalReport:
    """Outcome of an extremality test.

    For extreme points ``projections`` holds ``(p1, p2, p3)``: ``x p1`` unitary,
    ``x p2`` a non-unitary isometry, ``x p3`` a non-unitary coisometry. For
    non-extreme points ``certificate`` is the perturbation ``y``.
    """

    verdict: Verdict
    shape: AlgebraShape
    kinds: tuple | None = None
    projections: tuple | None = None
    certificate: AlgebraElement | None = None
    reason: Reason | None = None
    block: int | None = None
    certificate_norm: float | None = None

    @property
    def is_extreme(self) -> bool:
        return self.verdict is Verdict.EXTREME

    def to_json(self) -> dict:
        from .serialize import element_to_json

        out = {"verdict": self.verdict.value}
        if self.is_extreme:
            p1, p2, p3 = self.projections
            out["kinds"] = [k.value for k in self.kinds]
            out.update(p1=p1.indices, p2=p2.indices, p3=p3.indices)
        else:
            out["reason"] = self.reason.value
            out["block"] = self.block
            out["certificate"] = element_to_json(self.certificate)
            out["certificate_norm"] = self.certificate_norm
        return out


def _finite_status(m: np.ndarray):
    n = m.shape[0]
    eye = np.eye(n)
    pi = is_partial_isometry(m, 1e-9)
    left_zero = opnorm(eye - dagger(m) @ m) <= 1e-9
    right_zero = opnorm(eye - m @ dagger(m)) <= 1e-9
    return pi, left_zero, right_zero


def _shift_status(op: ShiftClassOperator, tol: Tolerance):
    d = op.defects()
    return op.is_partial_isometry(1e-9), d.left.is_zero(tol.equality_tol), d.right.is_zero(tol.equality_tol)


def _status(payload, tol: Tolerance):
    if isinstance(payload, ShiftClassOperator):
        return _shift_status(payload, tol)
    return _finite_status(np.asarray(payload))


def _kind(left_zero: bool, right_zero: bool) -> BlockKind:
    if left_zero and right_zero:
        return BlockKind.UNITARY
    return BlockKind.ISOMETRY if left_zero else BlockKind.COISOMETRY


def _extreme_report(shape: AlgebraShape, kinds) -> ExtremalReport:
    sets = {k: frozenset(i for i, kk in enumerate(kinds) if kk is k) for k in BlockKind}
    proj = tuple(CentralProjection(shape, sets[k]) for k in (BlockKind.UNITARY, BlockKind.ISOMETRY, BlockKind.COISOMETRY))
    return ExtremalReport(Verdict.EXTREME, shape, kinds=tuple(kinds), projections=proj)


def _finite_certificate_direction(m: np.ndarray, tol: Tolerance) -> np.ndarray:
    """``D_r^(1/2) z D_l^(1/2)`` with ``z`` pairing the defect eigenvectors."""
    n = m.shape[0]
    u, s, vh = np.linalg.svd(m)
    v = dagger(vh)
    gap = 1.0 - s**2
    sel = gap > tol.rank_tol
    z = u[:, sel] @ dagger(v[:, sel])
    d_left = psd_sqrt(np.eye(n) - dagger(m) @ m, tol)
    d_right = psd_sqrt(np.eye(n) - m @ dagger(m), tol)
    return d_right @ z @ d_left


def _defect_vector(d: ShiftClassOperator) -> np.ndarray:
    """A unit vector in the range of a nonzero defect projection."""
    if d.symbol.is_zero:
        w, q = np.linalg.eigh(0.5 * (d.perturbation + dagger(d.perturbation)))
        return q[:, -1]
    # cofinite range: every far basis vector qualifies
    n = d.support_bound
    v = np.zeros(n + 1, complex)
    v[n] = 1.0
    return v


def _shift_certificate_direction(op: ShiftClassOperator, partial_isometry: bool) -> ShiftClassOperator:
    d = op.defects()
    if not partial_isometry:
        # D_r x D_l = x D_l^2 stays in the class
        return op @ d.left @ d.left
    xi_l = _defect_vector(d.left)
    xi_r = _defect_vector(d.right)
    size = max(xi_l.size, xi_r.size)
    y = np.zeros((size, size), complex)
    y[: xi_r.size, : xi_l.size] = np.outer(xi_r, xi_l.conj())
    return ShiftClassOperator.finite(y)


def _certificate(x: AlgebraElement, block: int, partial_isometry: bool, tol: Tolerance, window: int):
    payload = x.blocks[block]
    if isinstance(payload, ShiftClassOperator):
        y0 = _shift_certificate_direction(payload, partial_isometry)
    else:
        y0 = _finite_certificate_direction(np.asarray(payload), tol)
    scale = 1.0
    for _ in range(40):
        y = y0 * scale
        ny = block_norm(y, window).value
        if ny < MIN_CERTIFICATE:
            break
        if max(block_norm(payload + y, window).value, block_norm(payload - y, window).value) <= 1 + CONTRACTION_SLACK:
            blocks = [np.zeros_like(b) if not isinstance(b, ShiftClassOperator) else ShiftClassOperator.zero() for b in x.blocks]
            blocks[block] = y
            return AlgebraElement(x.shape, blocks), ny
        scale *= 0.5
    raise CertificateConstructionFailed(f"no admissible perturbation found in block {block}")


def _not_extreme(x, block, pi, tol, window) -> ExtremalReport:
    reason = Reason.BOTH_DEFECTS_NONZERO if pi else Reason.NOT_PARTIAL_ISOMETRY
    y, ny = _certificate(x, block, pi, tol, window)
    return ExtremalReport(Verdict.NOT_EXTREME, x.shape, certificate=y, reason=reason, block=block, certificate_norm=ny)


def linear_extreme_test(x: AlgebraElement, tol: Tolerance = DEFAULT_TOL, window: int = DEFAULT_WINDOW) -> ExtremalReport:
    """Extreme-point test through partial isometries and defect supports."""
    _check_contraction(x, window)
    status = [_status(b, tol) for b in x.blocks]
    for i, (pi, _, _) in enumerate(status):
        if not pi:
            return _not_extreme(x, i, False, tol, window)
    for i, (_, lz, rz) in enumerate(status):
        if not (lz or rz):
            return _not_extreme(x, i, True, tol, window)
    return _extreme_report(x.shape, [_kind(lz, rz) for _, lz, rz in status])


def cstar_extreme_classify(x: AlgebraElement, tol: Tolerance = DEFAULT_TOL, window: int = DEFAULT_WINDOW) -> ExtremalReport:
    """Classify ``x`` as unitary/isometry/coisometry blockwise, or certify failure."""
    _check_contraction(x, window)
    kinds = []
    for i, b in enumerate(x.blocks):
        if isinstance(b, ShiftClassOperator):
            iso, co = b.is_isometry(tol), b.is_coisometry(tol)
        else:
            # a one-sided inverse in a matrix algebra is two-sided
            iso = co = is_unitary(b, tol)
        if not (iso or co):
            pi = _status(b, tol)[0]
            return _not_extreme(x, i, pi, tol, window)
        kinds.append(_kind(iso, co))
    return _extreme_report(x.shape, kinds)


@dataclass(frozen=True)
class ProbeResult:
    strongly_extreme: bool
    pair: tuple | None = None
    separation: float | None = None


def strong_extreme_probe(x: AlgebraElement, tol: Tolerance = DEFAULT_TOL, window: int = DEFAULT_WINDOW) -> ProbeResult:
    """C*-extreme points are extreme for every quotient; otherwise return ``x +- y``."""
    rep = cstar_extreme_classify(x, tol, window)
    if rep.is_extreme:
        return ProbeResult(True)
    y = rep.certificate
    return ProbeResult(False, (x + y, x - y), 2.0 * rep.certificate_norm)


# proper C*-convex combinations


@dataclass(frozen=True)
class ProperCombination:
    """``x = sum t_i* a_i t_i`` with invertible ``t_i`` and ``sum t_i* t_i = 1``."""

    coefficients: tuple
    points: tuple

    def __post_init__(self):
        if len(self.coefficients) != len(self.points):
            raise ShapeMismatch("coefficients and points differ in length")
        if len(self.coefficients) < 2:
            raise EmptySelection("a proper combination needs at least two terms")
        shapes = {t.shape for t in self.coefficients} | {a.shape for a in self.points}
        if len(shapes) != 1:
            raise ShapeMismatch("all terms must share one shape")

    @property
    def shape(self) -> AlgebraShape:
        return self.coefficients[0].shape

    def value(self) -> AlgebraElement:
        total = AlgebraElement.zero(self.shape)
        for t, a in zip(self.coefficients, self.points):
            total = total + t.H @ a @ t
        return total


@dataclass(frozen=True)
class CombinationResult:
    """Per-term verdicts of ``a_i ~ x``: True, False, or None when undecided."""

    equivalences: tuple
    residual: float
    extreme: bool
    notes: tuple = field(default_factory=tuple)

    @property
    def all_equivalent(self) -> bool:
        return all(e is True for e in self.equivalences)

    def to_json(self) -> dict:
        return {
            "valid": True,
            "certified_within_model": True,
            "residual": self.residual,
            "x_extreme": self.extreme,
            "equivalences": [("undetermined" if e is None else bool(e)) for e in self.equivalences],
        }


def _block_diff_norm(payload, window: int) -> float:
    return block_norm(payload, window).value


def _check_invertible(t: AlgebraElement, window: int):
    for i, b in enumerate(t.blocks):
        if isinstance(b, ShiftClassOperator):
            try:
                wind = winding_number(b.symbol)
            except SymbolVanishesOnCircle as exc:
                raise CoefficientNotInvertible(f"block {i}: symbol vanishes on the circle") from exc
            smin = np.linalg.svd(b.truncate(window), compute_uv=False).min()
            if wind != 0 or smin < 1e-6:
                raise CoefficientNotInvertible(f"block {i}: not invertible (winding {wind}, smin {smin:.2e})")
        else:
            s = np.linalg.svd(np.asarray(b), compute_uv=False)
            if s.min() < 1e-8:
                raise CoefficientNotInvertible(f"block {i}: smallest singular value {s.min():.2e}")


def _finite_equivalent(a: np.ndarray, x: np.ndarray, tol: Tolerance):
    sa = np.linalg.svd(a, compute_uv=False)
    sx = np.linalg.svd(x, compute_uv=False)
    if np.max(np.abs(sa - sx)) > 1e-7:
        return False
    try:
        ea, ex = eig_normal(a, tol), eig_normal(x, tol)
    except NotNormal:
        return None
    return match_multisets(ea, ex, 1e-7)


def _shift_equivalent(a: ShiftClassOperator, x: ShiftClassOperator, tol: Tolerance, window: int):
    from .wold import wold_block

    if a.allclose(x, tol.equality_tol):
        return True
    ia, ix = a.is_isometry(tol), x.is_isometry(tol)
    ca, cx = a.is_coisometry(tol), x.is_coisometry(tol)
    if ia != ix or ca != cx:
        return False
    if ia and ca:
        return None
    if ia or ca:
        pa, px = (a, x) if ia else (a.H, x.H)
        try:
            fa, fx = wold_block(pa, window, tol), wold_block(px, window, tol)
        except KNotStabilized:
            return None
        if fa.multiplicity != fx.multiplicity or fa.dim_k != fx.dim_k:
            return False
        return match_multisets(fa.spectrum(), fx.spectrum(), 1e-7)
    return None


def _equivalent(a: AlgebraElement, x: AlgebraElement, tol: Tolerance, window: int):
    verdicts = []
    for ab, xb in zip(a.blocks, x.blocks):
        if isinstance(ab, ShiftClassOperator):
            verdicts.append(_shift_equivalent(ab, xb, tol, window))
        else:
            verdicts.append(_finite_equivalent(np.asarray(ab), np.asarray(xb), tol))
    if any(v is False for v in verdicts):
        return False
    if all(v is True for v in verdicts):
        return True
    return None


def verify_proper_combination(
    x: AlgebraElement, combo: ProperCombination, tol: Tolerance = DEFAULT_TOL, window: int = 128
) -> CombinationResult:
    """Validate ``x = sum t_i* a_i t_i`` and test each ``a_i`` against ``x``."""
    if combo.shape != x.shape:
        raise ShapeMismatch("combination and element shapes differ")
    gram = AlgebraElement.zero(x.shape)
    for t in combo.coefficients:
        gram = gram + t.H @ t
    defect = gram - AlgebraElement.identity(x.shape)
    if max(_block_diff_norm(b, window) for b in defect.blocks) > 1e-9:
        raise CoefficientsNotPartitionOfUnity("sum t_i* t_i differs from 1")
    for t in combo.coefficients:
        _check_invertible(t, window)
    for k, a in enumerate(combo.points):
        if operator_norm(a, window) > 1 + CONTRACTION_SLACK:
            raise NotAContraction(f"point {k} is not a contraction")
    residual = max(_block_diff_norm(b, window) for b in (combo.value() - x).blocks)
    if residual > 1e-8:
        raise SumMismatch(f"||sum t_i* a_i t_i - x|| = {residual:.3e}")
    extreme = cstar_extreme_classify(x, tol, window).is_extreme
    eq = tuple(_equivalent(a, x, tol, window) for a in combo.points)
    return CombinationResult(eq, residual, extreme)


# algebra-level classification


@dataclass(frozen=True)
class AlgebraClassification:
    """Whether every C*-extreme point is an isometry or a coisometry."""

    iso_or_coiso_only: bool
    witness: AlgebraElement | None = None

    def to_json(self) -> dict:
        from .serialize import element_to_json

        out = {"iso_or_coiso_only": self.iso_or_coiso_only}
        if self.witness is not None:
            out["witness"] = element_to_json(self.witness)
        return out


def classify_algebra(shape: AlgebraShape) -> AlgebraClassification:
    """At most one infinite factor means every extreme point is one-sided invertible."""
    shifts = shape.shift_indices
    if len(shifts) <= 1:
        return AlgebraClassification(True)
    blocks = []
    for i, b in enumerate(shape):
        if isinstance(b, FiniteFactor):
            blocks.append(np.eye(b.dim, dtype=complex))
        elif i == shifts[0]:
            blocks.append(ShiftClassOperator.shift(1))
        elif i == shifts[1]:
            blocks.append(ShiftClassOperator.shift(-1))
        else:
            blocks.append(ShiftClassOperator.identity())
    return AlgebraClassification(False, AlgebraElement(shape, blocks))


def componentwise_consistency(
    x: AlgebraElement, split: CentralProjection, tol: Tolerance = DEFAULT_TOL, window: int = DEFAULT_WINDOW
) -> bool:
    """Extremality of ``x`` matches extremality of both compressions ``xp`` and ``x(1-p)``."""
    if split.shape != x.shape:
        raise ShapeMismatch("split and element shapes differ")
    if split.is_zero or split.complement().is_zero:
        raise EmptySelection("split must be a nonzero proper central projection")
    whole = cstar_extreme_classify(x, tol, window).is_extreme
    left = cstar_extreme_classify(compress(x, split), tol, window).is_extreme
    right = cstar_extreme_classify(compress(x, split.complement()), tol, window).is_extreme
    return whole == (left and right)


__all__ = [
    "AlgebraClassification",
    "BlockKind",
    "CombinationResult",
    "ExtremalReport",
    "ProbeResult",
    "ProperCombination",
    "Reason",
    "Verdict",
    "classify_algebra",
    "componentwise_consistency",
    "cstar_extreme_classify",
    "linear_extreme_test",
    "strong_extreme_probe",
    "verify_proper_combination",
]
