"""The ambient algebra: a finite direct sum of factor blocks.

A :class:`FiniteFactor` block is ``M_n``; a :class:`ShiftFactor` block is
``B(l^2(N))`` represented through the Toeplitz class. Every block is a factor,
so central projections are exactly the sums of block identities and are stored
as sets of block indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, NamedTuple, Sequence, Union

import numpy as np

from .errors import EmptySelection, ShapeMismatch
from .linalg import opnorm
from .shift import ShiftClassOperator

DEFAULT_WINDOW = 256


@dataclass(frozen=True)
class FiniteFactor:
    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or isinstance(self.dim, bool) or self.dim < 1:
            raise ShapeMismatch(f"finite factor dimension must be a positive integer, got {self.dim!r}")

    def __str__(self):
        return f"M{self.dim}"


@dataclass(frozen=True)
class ShiftFactor:
    def __str__(self):
        return "S"


BlockShape = Union[FiniteFactor, ShiftFactor]
Payload = Union[np.ndarray, ShiftClassOperator]


@dataclass(frozen=True)
class AlgebraShape:
    blocks: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ShapeMismatch("an algebra shape needs at least one block")
        for b in self.blocks:
            if not isinstance(b, (FiniteFactor, ShiftFactor)):
                raise ShapeMismatch(f"unknown block {b!r}")

    @classmethod
    def of(cls, *specs) -> "AlgebraShape":
        """``AlgebraShape.of(2, "shift", 3)`` is ``M_2 + B(l^2) + M_3``."""
        blocks = []
        for s in specs:
            if isinstance(s, (FiniteFactor, ShiftFactor)):
                blocks.append(s)
            elif isinstance(s, str) and s.strip().lower() in ("s", "shift"):
                blocks.append(ShiftFactor())
            else:
                blocks.append(FiniteFactor(int(s)))
        return cls(tuple(blocks))

    @classmethod
    def parse(cls, text: str) -> "AlgebraShape":
        parts = [p for p in text.replace("+", ",").split(",") if p.strip()]
        specs = []
        for p in parts:
            p = p.strip()
            if p.lower() in ("s", "shift"):
                specs.append("shift")
            else:
                try:
                    specs.append(int(p.lstrip("Mm")))
                except ValueError:
                    raise ShapeMismatch(f"cannot parse block {p!r}") from None
        return cls.of(*specs)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    def __str__(self):
        return "+".join(str(b) for b in self.blocks)

    @property
    def is_finite(self) -> bool:
        return all(isinstance(b, FiniteFactor) for b in self.blocks)

    @property
    def shift_indices(self) -> list[int]:
        return [i for i, b in enumerate(self.blocks) if isinstance(b, ShiftFactor)]

    def restrict(self, indices: Sequence[int]) -> "AlgebraShape":
        return AlgebraShape(tuple(self.blocks[i] for i in indices))


def _check_payload(block: BlockShape, payload) -> Payload:
    if isinstance(block, ShiftFactor):
        if not isinstance(payload, ShiftClassOperator):
            raise ShapeMismatch("shift block needs a ShiftClassOperator payload")
        return payload
    if isinstance(payload, ShiftClassOperator):
        raise ShapeMismatch("finite block needs a matrix payload")
    m = np.array(payload, dtype=complex)
    if m.ndim == 0 and block.dim == 1:
        m = m.reshape(1, 1)
    if m.shape != (block.dim, block.dim):
        raise ShapeMismatch(f"expected a {block.dim}x{block.dim} matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ShapeMismatch("matrix entries must be finite")
    m.setflags(write=False)
    return m


class AlgebraElement:
    """Per-block payloads aligned with an :class:`AlgebraShape`."""

    __slots__ = ("shape", "blocks")

    def __init__(self, shape: AlgebraShape, blocks: Sequence):
        if len(blocks) != len(shape):
            raise ShapeMismatch(f"{len(blocks)} payloads for {len(shape)} blocks")
        self.shape = shape
        self.blocks = tuple(_check_payload(b, p) for b, p in zip(shape, blocks))

    @classmethod
    def identity(cls, shape: AlgebraShape) -> "AlgebraElement":
        return cls(
            shape,
            [
                ShiftClassOperator.identity() if isinstance(b, ShiftFactor) else np.eye(b.dim)
                for b in shape
            ],
        )

    @classmethod
    def zero(cls, shape: AlgebraShape) -> "AlgebraElement":
        return cls(
            shape,
            [
                ShiftClassOperator.zero() if isinstance(b, ShiftFactor) else np.zeros((b.dim, b.dim))
                for b in shape
            ],
        )

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, i) -> Payload:
        return self.blocks[i]

    def __repr__(self):
        return f"AlgebraElement(shape={self.shape})"

    def replace(self, index: int, payload) -> "AlgebraElement":
        blocks = list(self.blocks)
        blocks[index] = payload
        return AlgebraElement(self.shape, blocks)

    def _same_shape(self, other):
        if not isinstance(other, AlgebraElement):
            raise TypeError(f"expected AlgebraElement, got {type(other).__name__}")
        if other.shape != self.shape:
            raise ShapeMismatch(f"shapes differ: {self.shape} vs {other.shape}")

    def __add__(self, other):
        self._same_shape(other)
        return AlgebraElement(self.shape, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._same_shape(other)
        return AlgebraElement(self.shape, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return AlgebraElement(self.shape, [-a for a in self.blocks])

    def __matmul__(self, other):
        self._same_shape(other)
        return AlgebraElement(self.shape, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, s):
        if isinstance(s, AlgebraElement):
            return NotImplemented
        return AlgebraElement(self.shape, [a * complex(s) for a in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / complex(s))

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(
            self.shape,
            [a.H if isinstance(a, ShiftClassOperator) else a.conj().T for a in self.blocks],
        )

    @property
    def H(self) -> "AlgebraElement":
        return self.adjoint()

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement) or other.shape != self.shape:
            return False
        for a, b in zip(self.blocks, other.blocks):
            if isinstance(a, ShiftClassOperator):
                if a != b:
                    return False
            elif not np.array_equal(a, b):
                return False
        return True

    __hash__ = None

    def max_coefficient(self) -> float:
        """Largest coefficient magnitude over all blocks (finite entries, symbol and perturbation)."""
        out = 0.0
        for a in self.blocks:
            if isinstance(a, ShiftClassOperator):
                out = max(out, a.max_coefficient())
            elif a.size:
                out = max(out, float(np.max(np.abs(a))))
        return out

    def allclose(self, other: "AlgebraElement", atol: float = 1e-12) -> bool:
        return (self - other).max_coefficient() <= atol


@dataclass(frozen=True)
class CentralProjection:
    shape: AlgebraShape
    selected: frozenset = frozenset()

    def __post_init__(self):
        sel = frozenset(int(i) for i in self.selected)
        object.__setattr__(self, "selected", sel)
        bad = [i for i in sel if not 0 <= i < len(self.shape)]
        if bad:
            raise ShapeMismatch(f"block indices {sorted(bad)} out of range")

    @classmethod
    def full(cls, shape: AlgebraShape) -> "CentralProjection":
        return cls(shape, frozenset(range(len(shape))))

    def complement(self) -> "CentralProjection":
        return CentralProjection(self.shape, frozenset(range(len(self.shape))) - self.selected)

    @property
    def indices(self) -> list[int]:
        return sorted(self.selected)

    @property
    def is_zero(self) -> bool:
        return not self.selected


@dataclass(frozen=True)
class BlockIdeal:
    """The closed ideal of elements vanishing outside the ``killed`` blocks."""

    shape: AlgebraShape
    killed: frozenset

    def __post_init__(self):
        k = frozenset(int(i) for i in self.killed)
        object.__setattr__(self, "killed", k)
        n = len(self.shape)
        if not k or len(k) >= n or any(not 0 <= i < n for i in k):
            raise ShapeMismatch("a block ideal must kill a nonempty proper subset of blocks")

    @property
    def surviving(self) -> CentralProjection:
        return CentralProjection(self.shape, frozenset(range(len(self.shape))) - self.killed)


def all_block_ideals(shape: AlgebraShape) -> Iterator[BlockIdeal]:
    n = len(shape)
    for size in range(1, n):
        for killed in combinations(range(n), size):
            yield BlockIdeal(shape, frozenset(killed))


def identity(shape: AlgebraShape) -> AlgebraElement:
    return AlgebraElement.identity(shape)


def central_projection_element(p: CentralProjection) -> AlgebraElement:
    one = AlgebraElement.identity(p.shape)
    zero = AlgebraElement.zero(p.shape)
    return AlgebraElement(
        p.shape, [one[i] if i in p.selected else zero[i] for i in range(len(p.shape))]
    )


def compress(x: AlgebraElement, p: CentralProjection) -> AlgebraElement:
    """``p x`` viewed as an element of ``p M`` (the sub-direct-sum of selected blocks)."""
    if p.shape != x.shape:
        raise ShapeMismatch("projection and element shapes differ")
    if p.is_zero:
        raise EmptySelection("cannot compress to the zero projection")
    idx = p.indices
    return AlgebraElement(x.shape.restrict(idx), [x[i] for i in idx])


def quotient_map(x: AlgebraElement, ideal: BlockIdeal) -> AlgebraElement:
    """Image of ``x`` in ``M / I``; for a block ideal this deletes the killed blocks."""
    if ideal.shape != x.shape:
        raise ShapeMismatch("ideal and element shapes differ")
    return compress(x, ideal.surviving)


class BlockNorm(NamedTuple):
    value: float
    symbol_sup: float | None
    truncation: float | None
    truncation_2w: float | None
    converged: bool


class NormReport(NamedTuple):
    value: float
    blocks: tuple
    window: int

    @property
    def converged(self) -> bool:
        return all(b.converged for b in self.blocks)


def block_norm(payload: Payload, window: int = DEFAULT_WINDOW, check_convergence: bool = False) -> BlockNorm:
    if not isinstance(payload, ShiftClassOperator):
        v = opnorm(payload)
        return BlockNorm(v, None, None, None, True)
    if window < 16:
        raise ValueError("window must be at least 16")
    sup = payload.symbol.sup_on_circle(1024)
    trunc = payload.truncated_norm(window)
    trunc2 = payload.truncated_norm(2 * window) if check_convergence else None
    converged = True if trunc2 is None else abs(trunc2 - trunc) <= 1e-6 * max(1.0, trunc2)
    return BlockNorm(max(sup, trunc), sup, trunc, trunc2, converged)


def norm_report(x: AlgebraElement, window: int = DEFAULT_WINDOW) -> NormReport:
    blocks = tuple(block_norm(b, window, check_convergence=True) for b in x.blocks)
    return NormReport(max(b.value for b in blocks), blocks, window)


def operator_norm(x: AlgebraElement, window: int = DEFAULT_WINDOW) -> float:
    """Max of block norms; shift blocks use ``max(sup|symbol|, ||truncation||)``."""
    return max(block_norm(b, window).value for b in x.blocks)


def ideal_distance(x: AlgebraElement, ideal: BlockIdeal, window: int = DEFAULT_WINDOW) -> float:
    """``dist(x, I)``: in a direct sum this is the norm on the surviving blocks."""
    return operator_norm(quotient_map(x, ideal), window)
