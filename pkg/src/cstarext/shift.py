"""Toeplitz-class operators on l^2(N): ``T(p) + F``.

``p`` is a Laurent polynomial in the shift and ``F`` a finitely supported
matrix. Entry ``(i, j)`` of ``T(p) + F`` is ``p[i - j] + F[i, j]``, so the
unilateral shift ``S e_j = e_{j+1}`` has symbol ``z`` and ``S*`` has symbol
``z^-1``. The class is a *-algebra and every operation here is exact up to
floating point rounding.
"""

from __future__ import annotations

from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import NumericalFailure, SymbolVanishesOnCircle
from .linalg import DEFAULT_TOL, Tolerance, opnorm

# coefficients at or below this magnitude are dropped by canonicalization
DROP = 1e-14


class LaurentSymbol:
    """Finitely supported map ``degree -> coefficient``."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, complex] | Iterable[tuple[int, complex]] | None = None):
        items = coeffs.items() if isinstance(coeffs, Mapping) else (coeffs or ())
        acc: dict[int, complex] = {}
        for k, c in items:
            acc[int(k)] = acc.get(int(k), 0j) + complex(c)
        self._coeffs = {k: acc[k] for k in sorted(acc) if abs(acc[k]) > DROP}

    @classmethod
    def monomial(cls, degree: int, coeff: complex = 1.0) -> "LaurentSymbol":
        return cls({degree: coeff})

    def items(self):
        return self._coeffs.items()

    def __getitem__(self, k: int) -> complex:
        return self._coeffs.get(k, 0j)

    def __len__(self):
        return len(self._coeffs)

    def __iter__(self):
        return iter(self._coeffs)

    def __eq__(self, other):
        if not isinstance(other, LaurentSymbol):
            return NotImplemented
        return self._coeffs == other._coeffs

    __hash__ = None

    def __repr__(self):
        return f"LaurentSymbol({self._coeffs!r})"

    @property
    def is_zero(self) -> bool:
        return not self._coeffs

    @property
    def min_degree(self) -> int:
        return min(self._coeffs) if self._coeffs else 0

    @property
    def max_degree(self) -> int:
        return max(self._coeffs) if self._coeffs else 0

    def as_monomial(self) -> tuple[int, complex] | None:
        if len(self._coeffs) != 1:
            return None
        ((k, c),) = self._coeffs.items()
        return k, c

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for k, c in self._coeffs.items():
            out = out + c * z**k
        return out

    def __add__(self, other: "LaurentSymbol") -> "LaurentSymbol":
        return LaurentSymbol(list(self.items()) + list(other.items()))

    def __neg__(self) -> "LaurentSymbol":
        return LaurentSymbol({k: -c for k, c in self.items()})

    def __sub__(self, other: "LaurentSymbol") -> "LaurentSymbol":
        return self + (-other)

    def scale(self, s: complex) -> "LaurentSymbol":
        return LaurentSymbol({k: s * c for k, c in self.items()})

    def __mul__(self, other: "LaurentSymbol") -> "LaurentSymbol":
        return LaurentSymbol(
            (a + b, ca * cb) for a, ca in self.items() for b, cb in other.items()
        )

    def adjoint(self) -> "LaurentSymbol":
        return LaurentSymbol({-k: np.conj(c) for k, c in self.items()})

    def max_abs(self) -> float:
        return max((abs(c) for c in self._coeffs.values()), default=0.0)

    def sup_on_circle(self, samples: int = 1024) -> float:
        if self.is_zero:
            return 0.0
        theta = 2 * np.pi * np.arange(samples) / samples
        return float(np.max(np.abs(self(np.exp(1j * theta)))))


def winding_number(p: LaurentSymbol, samples: int = 256) -> int:
    """Winding number of ``theta -> p(e^{i theta})`` about the origin.

    Summed argument increments; escalates to 4096 samples when the rounding
    residual exceeds 0.05.
    """
    if samples < 256:
        raise ValueError("winding_number needs at least 256 samples")
    for n in (samples, max(samples, 4096)):
        theta = 2 * np.pi * np.arange(n + 1) / n
        vals = p(np.exp(1j * theta))
        if np.min(np.abs(vals)) <= 1e-6:
            raise SymbolVanishesOnCircle("symbol vanishes on the unit circle")
        w = float(np.sum(np.angle(vals[1:] / vals[:-1])) / (2 * np.pi))
        resid = abs(w - round(w))
        if resid <= 0.05:
            return int(round(w))
    if resid < 0.1:
        return int(round(w))
    raise NumericalFailure(f"winding number residual {resid:.3f} too large")


def _canonical(f: np.ndarray) -> np.ndarray:
    f = np.array(f, dtype=complex, copy=True)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError("perturbation must be a square matrix")
    if not np.all(np.isfinite(f)):
        raise ValueError("perturbation has non-finite entries")
    f[np.abs(f) <= DROP] = 0
    nz = np.nonzero(f)
    n = 0 if nz[0].size == 0 else int(max(nz[0].max(), nz[1].max())) + 1
    out = np.ascontiguousarray(f[:n, :n])
    out.setflags(write=False)
    return out


def _pad(f: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=complex)
    k = f.shape[0]
    out[:k, :k] = f
    return out


class Defects(NamedTuple):
    left: "ShiftClassOperator"
    right: "ShiftClassOperator"
    finite_rank: bool


class ShiftClassOperator:
    """Immutable operator ``T(symbol) + perturbation`` on ``l^2(N)``."""

    __slots__ = ("symbol", "perturbation")

    def __init__(self, symbol: LaurentSymbol | Mapping[int, complex] | None = None, perturbation=None):
        self.symbol = symbol if isinstance(symbol, LaurentSymbol) else LaurentSymbol(symbol)
        if perturbation is None:
            perturbation = np.zeros((0, 0), complex)
        self.perturbation = _canonical(perturbation)

    # constructors

    @classmethod
    def from_entries(cls, symbol=None, entries: Mapping[tuple[int, int], complex] | None = None):
        entries = dict(entries or {})
        n = 1 + max((max(i, j) for i, j in entries), default=-1)
        f = np.zeros((n, n), complex)
        for (i, j), c in entries.items():
            if i < 0 or j < 0:
                raise ValueError("perturbation indices must be nonnegative")
            f[i, j] += c
        return cls(symbol, f)

    @classmethod
    def identity(cls) -> "ShiftClassOperator":
        return cls({0: 1.0})

    @classmethod
    def zero(cls) -> "ShiftClassOperator":
        return cls()

    @classmethod
    def shift(cls, power: int = 1, coeff: complex = 1.0) -> "ShiftClassOperator":
        """``coeff * S^power`` for ``power >= 0`` and ``coeff * S*^|power|`` otherwise."""
        return cls({power: coeff})

    @classmethod
    def finite(cls, f) -> "ShiftClassOperator":
        return cls(None, f)

    @classmethod
    def matrix_unit(cls, i: int, j: int, coeff: complex = 1.0) -> "ShiftClassOperator":
        return cls.from_entries(None, {(i, j): coeff})

    @classmethod
    def embed(cls, corner, scalar: complex = 1.0) -> "ShiftClassOperator":
        """``corner`` on ``span{e_0..e_{m-1}}`` and ``scalar`` times identity elsewhere."""
        corner = np.asarray(corner, dtype=complex)
        m = corner.shape[0]
        if scalar == 0:
            return cls(None, corner)
        return cls({0: scalar}, corner - scalar * np.eye(m))

    # structure

    @property
    def support_bound(self) -> int:
        return self.perturbation.shape[0]

    @property
    def is_finite_rank(self) -> bool:
        return self.symbol.is_zero

    def entries(self) -> dict[tuple[int, int], complex]:
        f = self.perturbation
        return {(int(i), int(j)): complex(f[i, j]) for i, j in zip(*np.nonzero(f))}

    def max_coefficient(self) -> float:
        pert = float(np.max(np.abs(self.perturbation))) if self.perturbation.size else 0.0
        return max(self.symbol.max_abs(), pert)

    def is_zero(self, atol: float = DEFAULT_TOL.equality_tol) -> bool:
        return self.max_coefficient() <= atol

    def reach(self) -> int:
        """Index bound beyond which the operator acts as ``T(symbol)`` only."""
        return self.support_bound + max(abs(self.symbol.min_degree), abs(self.symbol.max_degree))

    def __eq__(self, other):
        if not isinstance(other, ShiftClassOperator):
            return NotImplemented
        return self.symbol == other.symbol and np.array_equal(self.perturbation, other.perturbation)

    __hash__ = None

    def allclose(self, other: "ShiftClassOperator", atol: float = 1e-12) -> bool:
        return (self - other).is_zero(atol)

    def __repr__(self):
        return f"ShiftClassOperator(symbol={dict(self.symbol.items())!r}, support={self.support_bound})"

    # arithmetic

    def __add__(self, other):
        if not isinstance(other, ShiftClassOperator):
            return NotImplemented
        n = max(self.support_bound, other.support_bound)
        return ShiftClassOperator(
            self.symbol + other.symbol, _pad(self.perturbation, n) + _pad(other.perturbation, n)
        )

    def __neg__(self):
        return ShiftClassOperator(-self.symbol, -self.perturbation)

    def __sub__(self, other):
        if not isinstance(other, ShiftClassOperator):
            return NotImplemented
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, ShiftClassOperator):
            return NotImplemented
        s = complex(s)
        return ShiftClassOperator(self.symbol.scale(s), s * self.perturbation)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / complex(s))

    def __matmul__(self, other):
        if not isinstance(other, ShiftClassOperator):
            return NotImplemented
        return sc_mul(self, other)

    def adjoint(self) -> "ShiftClassOperator":
        return ShiftClassOperator(self.symbol.adjoint(), self.perturbation.conj().T)

    @property
    def H(self) -> "ShiftClassOperator":
        return self.adjoint()

    # dense views

    def entry(self, i: int, j: int) -> complex:
        val = self.symbol[i - j]
        if i < self.support_bound and j < self.support_bound:
            val += self.perturbation[i, j]
        return complex(val)

    def truncate(self, n: int) -> np.ndarray:
        """Leading ``n x n`` compression."""
        if n < 1:
            raise ValueError("window must be positive")
        out = np.zeros((n, n), complex)
        for d, c in self.symbol.items():
            if abs(d) < n:
                out += c * np.eye(n, k=-d)
        k = min(n, self.support_bound)
        out[:k, :k] += self.perturbation[:k, :k]
        return out

    def apply(self, x, length: int | None = None) -> np.ndarray:
        """Exact action on finitely supported vectors (columns of ``x``)."""
        x = np.asarray(x, dtype=complex)
        vec = x.ndim == 1
        if vec:
            x = x[:, None]
        m, cols = x.shape
        full = max(m + max(self.symbol.max_degree, 0), self.support_bound, 1)
        out = np.zeros((full, cols), complex)
        for d, c in self.symbol.items():
            lo = max(0, -d)
            if lo < m:
                out[lo + d : m + d] += c * x[lo:m]
        k = min(self.support_bound, m)
        if k:
            out[: self.support_bound] += self.perturbation[:, :k] @ x[:k]
        if length is not None:
            if length <= full:
                out = out[:length]
            else:
                out = np.vstack([out, np.zeros((length - full, cols), complex)])
        return out[:, 0] if vec else out

    # defects and predicates

    def defects(self) -> Defects:
        one = ShiftClassOperator.identity()
        left = one - self.H @ self
        right = one - self @ self.H
        return Defects(left, right, left.is_finite_rank and right.is_finite_rank)

    def is_isometry(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.defects().left.is_zero(tol.equality_tol)

    def is_coisometry(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.defects().right.is_zero(tol.equality_tol)

    def is_unitary(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        d = self.defects()
        return d.left.is_zero(tol.equality_tol) and d.right.is_zero(tol.equality_tol)

    def is_partial_isometry(self, atol: float = 1e-9) -> bool:
        return (self @ self.H @ self - self).is_zero(atol)

    def is_hermitian(self, atol: float = DEFAULT_TOL.equality_tol) -> bool:
        return (self - self.H).is_zero(atol)

    def truncated_norm(self, window: int) -> float:
        return opnorm(self.truncate(window))


def sc_mul(a: ShiftClassOperator, b: ShiftClassOperator) -> ShiftClassOperator:
    """Exact product of two Toeplitz-class operators.

    ``T(p) T(q) = T(pq) + C`` with ``C[i, j] = -sum_{k<0} p[i-k] q[k-j]``; the
    cross terms with the perturbations are finitely supported as well.
    """
    p, q = a.symbol, b.symbol
    f, g = a.perturbation, b.perturbation
    na, nb = f.shape[0], g.shape[0]
    m = max(
        na,
        nb,
        nb + max(p.max_degree, 0) if nb else 0,
        na + max(-q.min_degree, 0) if na else 0,
        max(p.max_degree, 0),
        max(-q.min_degree, 0),
    )
    out = np.zeros((m, m), complex)
    for dp, cp in p.items():
        if dp < 1:
            continue
        for dq, cq in q.items():
            if dq > -1:
                continue
            for k in range(max(-dp, dq), 0):
                out[k + dp, k - dq] -= cp * cq
    if nb:
        for dp, cp in p.items():
            lo = max(0, -dp)
            if lo < nb:
                out[lo + dp : nb + dp, :nb] += cp * g[lo:nb]
    if na:
        for dq, cq in q.items():
            lo = max(0, dq)
            if lo < na:
                out[:na, lo - dq : na - dq] += cq * f[:, lo:na]
    if na and nb:
        k = max(na, nb)
        out[:k, :k] += _pad(f, k) @ _pad(g, k)
    return ShiftClassOperator(p * q, out)


def hermitian_function(h: ShiftClassOperator, func, tol: Tolerance = DEFAULT_TOL) -> ShiftClassOperator:
    """``func(h)`` for Hermitian ``h = c*1 + F`` with real constant symbol ``c``.

    Returns ``func(c) * 1 + (func(c + F_N) - func(c)) `` on the support block.
    Callers must check that the symbol is constant.
    """
    mono = h.symbol.as_monomial()
    if h.symbol.is_zero:
        c = 0.0
    elif mono is not None and mono[0] == 0:
        c = float(np.real(mono[1]))
    else:
        raise ValueError("hermitian_function needs a constant symbol")
    n = h.support_bound
    fc = float(func(np.array([c]))[0])
    if n == 0:
        return ShiftClassOperator({0: fc})
    block = 0.5 * (h.perturbation + h.perturbation.conj().T) + c * np.eye(n)
    w, v = np.linalg.eigh(block)
    fb = (v * np.asarray(func(w), dtype=float)) @ v.conj().T
    return ShiftClassOperator({0: fc}, fb - fc * np.eye(n))
