"""Polynomial and rational matrices in the forward shift operator q.

Coefficients are stored ascending: coeffs[i] multiplies q**i. A polynomial
matrix P(q) = sum_i P_i q^i acts on a signal z through the difference
expression sum_i P_i z(k+i); the finite-horizon Toeplitz lift below turns
that expression into an ordinary matrix acting on stacked windows.

Rational arithmetic keeps numerators and denominators reduced (monic
denominator, common factors cancelled with a tolerance-based Euclid GCD) so
that interconnections of transfer functions do not accumulate spurious
pole-zero pairs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.polynomial.polynomial as npp

from .errors import (
    CoprimenessWarning,
    DegreeZero,
    DimensionMismatch,
    HorizonTooShort,
    IllPosedInterconnection,
    SingularDenominator,
    ZeroMatrix,
    ZeroPolynomial,
)

TRIM_REL = 1e-12
GCD_TOL = 1e-10
STABILITY_TOL = 1e-10


def _trim(coeffs: np.ndarray) -> np.ndarray:
    """Drop trailing coefficients below TRIM_REL times the largest magnitude."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float)).ravel()
    if c.size == 0:
        return np.zeros(1)
    top = np.max(np.abs(c))
    if top == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(c) > TRIM_REL * top)[0]
    return c[: keep[-1] + 1].copy()


class Poly:
    """Scalar polynomial with ascending real coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        if isinstance(coeffs, Poly):
            self.coeffs = coeffs.coeffs.copy()
        else:
            self.coeffs = _trim(np.asarray(coeffs, dtype=float))

    @classmethod
    def constant(cls, c: float) -> "Poly":
        return cls([float(c)])

    @classmethod
    def shift(cls) -> "Poly":
        """The monomial q."""
        return cls([0.0, 1.0])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    @property
    def leading(self) -> float:
        return float(self.coeffs[-1])

    def __call__(self, z):
        return npp.polyval(z, self.coeffs)

    def __add__(self, other) -> "Poly":
        other = other if isinstance(other, Poly) else Poly.constant(other)
        return Poly(npp.polyadd(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(-self.coeffs)

    def __sub__(self, other) -> "Poly":
        other = other if isinstance(other, Poly) else Poly.constant(other)
        return Poly(npp.polysub(self.coeffs, other.coeffs))

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return Poly(npp.polymul(self.coeffs, other.coeffs))
        return Poly(self.coeffs * float(other))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Poly({self.coeffs.tolist()})"

    def monic(self) -> "Poly":
        if self.is_zero:
            raise ZeroPolynomial("zero polynomial has no monic form")
        return Poly(self.coeffs / self.leading)

    def roots(self) -> np.ndarray:
        if self.is_zero:
            raise ZeroPolynomial("zero polynomial has no roots")
        if self.degree == 0:
            return np.array([], dtype=complex)
        return npp.polyroots(self.coeffs)

    def is_stable(self, tol: float = STABILITY_TOL) -> bool:
        """All roots strictly inside the unit circle with margin ``tol``."""
        if self.degree == 0:
            return not self.is_zero
        return bool(np.max(np.abs(self.roots())) < 1.0 - tol)

    def close_to(self, other: "Poly", tol: float = 1e-9) -> bool:
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.coeffs)] = self.coeffs
        b[: len(other.coeffs)] = other.coeffs
        scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1.0)
        return bool(np.max(np.abs(a - b)) <= tol * scale)


def poly_roots(p: Poly) -> np.ndarray:
    """Roots as companion-matrix eigenvalues; requires degree >= 1."""
    p = Poly(p)
    if p.is_zero:
        raise ZeroPolynomial("zero polynomial has no well-defined roots")
    if p.degree == 0:
        raise DegreeZero("constant polynomial has no roots")
    return p.roots()


def poly_gcd(a: Poly, b: Poly, tol: float = GCD_TOL) -> Poly:
    """Monic greatest common divisor by the Euclidean algorithm.

    Remainders are renormalized every round; a remainder counts as zero once
    its largest coefficient drops below ``tol`` times the working scale, which
    keeps near-common factors from surviving on rounding noise alone.
    """
    a, b = Poly(a), Poly(b)
    if a.is_zero and b.is_zero:
        raise ZeroPolynomial("gcd(0, 0) is undefined")
    if a.is_zero:
        return b.monic()
    if b.is_zero:
        return a.monic()
    f, g = (a, b) if a.degree >= b.degree else (b, a)
    f = Poly(f.coeffs / np.max(np.abs(f.coeffs)))
    g = Poly(g.coeffs / np.max(np.abs(g.coeffs)))
    while True:
        _, rem = npp.polydiv(f.coeffs, g.coeffs)
        r = Poly(rem)
        scale = np.max(np.abs(f.coeffs)) + np.max(np.abs(g.coeffs))
        if r.is_zero or np.max(np.abs(r.coeffs)) <= tol * scale:
            return g.monic()
        f, g = g, Poly(r.coeffs / np.max(np.abs(r.coeffs)))


def poly_exact_div(a: Poly, b: Poly) -> Poly:
    """Quotient a/b assuming b divides a up to the GCD tolerance."""
    if b.is_zero:
        raise ZeroPolynomial("division by zero polynomial")
    quo, _ = npp.polydiv(a.coeffs, b.coeffs)
    return Poly(quo)


def poly_lcm(a: Poly, b: Poly, tol: float = GCD_TOL) -> Poly:
    """Monic least common multiple."""
    if a.is_zero or b.is_zero:
        raise ZeroPolynomial("lcm with zero polynomial")
    g = poly_gcd(a, b, tol)
    return (poly_exact_div(a, g) * b).monic()


class Rational:
    """Reduced rational function num/den with monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=1.0, reduce: bool = True):
        num = num if isinstance(num, Poly) else Poly(num)
        den = den if isinstance(den, Poly) else Poly(den)
        if den.is_zero:
            raise ZeroPolynomial("rational function with zero denominator")
        if num.is_zero:
            self.num, self.den = Poly([0.0]), Poly([1.0])
            return
        if reduce:
            g = poly_gcd(num, den)
            if g.degree > 0:
                num = poly_exact_div(num, g)
                den = poly_exact_div(den, g)
        c = den.leading
        self.num = Poly(num.coeffs / c)
        self.den = Poly(den.coeffs / c)

    @classmethod
    def constant(cls, c: float) -> "Rational":
        return cls(Poly.constant(c), Poly.constant(1.0), reduce=False)

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_proper(self) -> bool:
        return self.is_zero or self.num.degree <= self.den.degree

    def __call__(self, z):
        return self.num(z) / self.den(z)

    def __add__(self, other) -> "Rational":
        other = other if isinstance(other, Rational) else Rational.constant(other)
        return Rational(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "Rational":
        return Rational(-self.num, self.den, reduce=False)

    def __sub__(self, other) -> "Rational":
        other = other if isinstance(other, Rational) else Rational.constant(other)
        return self + (-other)

    def __rsub__(self, other) -> "Rational":
        return (-self) + other

    def __mul__(self, other) -> "Rational":
        if not isinstance(other, Rational):
            return Rational(self.num * float(other), self.den, reduce=False)
        # cross-reduce before multiplying to keep degrees down
        a = Rational(self.num, other.den)
        b = Rational(other.num, self.den)
        return Rational(a.num * b.num, a.den * b.den, reduce=False)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Rational":
        other = other if isinstance(other, Rational) else Rational.constant(other)
        if other.is_zero:
            raise ZeroPolynomial("division by zero rational function")
        return self * Rational(other.den, other.num)

    def __rtruediv__(self, other) -> "Rational":
        return Rational.constant(other) / self

    def __repr__(self) -> str:
        return f"Rational({self.num.coeffs.tolist()}, {self.den.coeffs.tolist()})"

    def poles(self) -> np.ndarray:
        return self.den.roots() if self.den.degree > 0 else np.array([], dtype=complex)

    def is_stable(self, tol: float = STABILITY_TOL) -> bool:
        return self.den.is_stable(tol)

    def close_to(self, other: "Rational", tol: float = 1e-9) -> bool:
        diff = self - other
        return diff.is_zero or np.max(np.abs(diff.num.coeffs)) <= tol * max(
            np.max(np.abs(self.num.coeffs)), np.max(np.abs(other.num.coeffs)), 1.0
        )


class PolyMatrix:
    """Matrix polynomial stored as a stack of coefficient matrices.

    ``coeffs`` has shape (lag+1, rows, cols); coeffs[i] multiplies q**i.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        if isinstance(coeffs, PolyMatrix):
            self.coeffs = coeffs.coeffs.copy()
            return
        arr = np.asarray(coeffs, dtype=float)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        if arr.ndim != 3:
            raise DimensionMismatch(
                f"coefficient stack must be (lag+1, n, m), got shape {arr.shape}"
            )
        top = np.max(np.abs(arr)) if arr.size else 0.0
        if top == 0.0:
            arr = arr[:1]
        else:
            last = 0
            for i in range(arr.shape[0]):
                if np.max(np.abs(arr[i])) > TRIM_REL * top:
                    last = i
            arr = arr[: last + 1]
        self.coeffs = arr.copy()

    @classmethod
    def from_entries(cls, grid: Sequence[Sequence]) -> "PolyMatrix":
        """Build from a 2-D grid of Poly / scalar entries."""
        rows = len(grid)
        cols = len(grid[0])
        polys = [[e if isinstance(e, Poly) else Poly.constant(e) for e in r] for r in grid]
        lag = max(p.degree for r in polys for p in r)
        out = np.zeros((lag + 1, rows, cols))
        for i, r in enumerate(polys):
            if len(r) != cols:
                raise DimensionMismatch("ragged entry grid")
            for j, p in enumerate(r):
                out[: p.degree + 1, i, j] = p.coeffs
        return cls(out)

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int, m: int) -> "PolyMatrix":
        return cls(np.zeros((n, m)))

    @classmethod
    def poly_times_identity(cls, p: Poly, n: int) -> "PolyMatrix":
        return cls(p.coeffs[:, None, None] * np.eye(n)[None, :, :])

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[1:]

    @property
    def lag(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def is_zero(self) -> bool:
        return self.lag == 0 and not np.any(self.coeffs)

    def entry(self, i: int, j: int) -> Poly:
        return Poly(self.coeffs[:, i, j])

    def submatrix(self, rows, cols) -> "PolyMatrix":
        return PolyMatrix(self.coeffs[:, rows][:, :, cols])

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.coeffs.transpose(0, 2, 1))

    def __call__(self, z):
        """Evaluate at a (possibly complex) scalar point."""
        powers = z ** np.arange(self.coeffs.shape[0])
        return np.tensordot(powers, self.coeffs, axes=(0, 0))

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"add {self.shape} with {other.shape}")
        k = max(self.coeffs.shape[0], other.coeffs.shape[0])
        out = np.zeros((k,) + self.shape)
        out[: self.coeffs.shape[0]] += self.coeffs
        out[: other.coeffs.shape[0]] += other.coeffs
        return PolyMatrix(out)

    def __neg__(self) -> "PolyMatrix":
        return PolyMatrix(-self.coeffs)

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return self + (-other)

    def __mul__(self, scalar) -> "PolyMatrix":
        if isinstance(scalar, Poly):
            out = np.zeros((self.lag + scalar.degree + 1,) + self.shape)
            for i, c in enumerate(scalar.coeffs):
                out[i : i + self.lag + 1] += c * self.coeffs
            return PolyMatrix(out)
        return PolyMatrix(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.shape[1] != other.shape[0]:
            raise DimensionMismatch(f"matmul {self.shape} with {other.shape}")
        ka, kb = self.coeffs.shape[0], other.coeffs.shape[0]
        out = np.zeros((ka + kb - 1, self.shape[0], other.shape[1]))
        for i in range(ka):
            for j in range(kb):
                out[i + j] += self.coeffs[i] @ other.coeffs[j]
        return PolyMatrix(out)

    def __repr__(self) -> str:
        return f"PolyMatrix(shape={self.shape}, lag={self.lag})"

    def padded(self, lag: int) -> np.ndarray:
        """Coefficient stack zero-extended to the given lag."""
        if lag < self.lag:
            raise DimensionMismatch(f"cannot pad lag {self.lag} down to {lag}")
        out = np.zeros((lag + 1,) + self.shape)
        out[: self.coeffs.shape[0]] = self.coeffs
        return out

    def det(self) -> Poly:
        """Determinant polynomial.

        Small matrices use cofactor expansion; larger ones evaluate at
        roots of unity and recover the coefficients by FFT, which is exact
        up to rounding since deg(det) <= n * lag.
        """
        n, m = self.shape
        if n != m:
            raise DimensionMismatch(f"determinant of non-square {self.shape}")
        if n <= 4:
            return self._det_cofactor()
        npts = n * self.lag + 1
        theta = 2.0 * np.pi * np.arange(npts) / npts
        pts = np.exp(1j * theta)
        vals = np.array([np.linalg.det(self(z)) for z in pts])
        coeffs = np.fft.fft(vals) / npts
        return Poly(coeffs.real)

    def _det_cofactor(self) -> Poly:
        n = self.shape[0]
        if n == 1:
            return self.entry(0, 0)
        total = Poly([0.0])
        keep = list(range(1, n))
        for j in range(n):
            minor = self.submatrix(keep, [c for c in range(n) if c != j])
            term = self.entry(0, j) * minor._det_cofactor()
            total = total + (term if j % 2 == 0 else -term)
        return total

    def is_stable(self, tol: float = STABILITY_TOL) -> bool:
        """All roots of det strictly inside the unit circle."""
        d = self.det()
        if d.is_zero:
            raise SingularDenominator("matrix polynomial is singular for every q")
        return d.is_stable(tol)


def lag(p: PolyMatrix) -> int:
    """Degree of the highest nonzero coefficient matrix."""
    if p.is_zero:
        raise ZeroMatrix("zero polynomial matrix has no lag")
    return p.lag


def _cluster_centroids(points: np.ndarray, rel: float = 1e-6) -> list:
    """Centroids of root clusters (multiple roots split by ~eps^(1/m))."""
    centroids = []
    remaining = list(points)
    while remaining:
        seed = remaining.pop()
        members = [seed]
        rest = []
        for z in remaining:
            if abs(z - seed) <= rel * max(1.0, abs(seed)):
                members.append(z)
            else:
                rest.append(z)
        remaining = rest
        if len(members) > 1:
            centroids.append(sum(members) / len(members))
    return centroids


def is_coprime(d: PolyMatrix, n: PolyMatrix, tol: float = 1e-9) -> bool:
    """Left-coprimeness of a kernel pair (D, N).

    The composite [-N(lambda) D(lambda)] can only lose row rank where D
    itself drops rank, so it suffices to test at the roots of det D.
    Multiple roots come back from the eigensolver split by more than the
    rank cut tolerates, so cluster centroids are tested as well; testing
    extra points is harmless because rank only drops at true roots.
    """
    rows = d.shape[0]
    if d.shape[1] != rows:
        raise DimensionMismatch(f"D must be square, got {d.shape}")
    if n.shape[0] != rows:
        raise DimensionMismatch(f"N has {n.shape[0]} rows, D has {rows}")
    det = d.det()
    if det.is_zero:
        raise SingularDenominator("det D is the zero polynomial")
    if det.degree == 0:
        return True
    roots = det.roots()
    for point in list(roots) + _cluster_centroids(roots):
        comp = np.hstack([-n(point), d(point)])
        sv = np.linalg.svd(comp, compute_uv=False)
        if sv[0] == 0.0 or np.count_nonzero(sv >= tol * sv[0]) < rows:
            return False
    return True


def toeplitz_lift(p: PolyMatrix, horizon: int, lag: int | None = None) -> np.ndarray:
    """Banded upper-triangular lift of P(q) onto stacked length-L windows.

    Row block i of the result applies sum_j P_j z(i+j), i = 0..L-lag-1, to a
    stacked window z|_L; the output has shape ((L-lag) * rows, L * cols).
    Passing ``lag`` larger than the natural lag pads with zero coefficient
    blocks, shortening the lift.
    """
    ell = p.lag if lag is None else int(lag)
    if horizon < ell + 1:
        raise HorizonTooShort(
            f"horizon {horizon} leaves no constraint rows at lag {ell}"
        )
    stack = p.padded(ell)
    n, m = p.shape
    rows = horizon - ell
    out = np.zeros((rows * n, horizon * m))
    for i in range(rows):
        for j in range(ell + 1):
            out[i * n : (i + 1) * n, (i + j) * m : (i + j + 1) * m] = stack[j]
    return out


class RationalMatrix:
    """Dense matrix of reduced rational functions."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Sequence]):
        rows = []
        width = None
        for r in entries:
            row = [self._coerce(e) for e in r]
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DimensionMismatch("ragged rational matrix")
            rows.append(row)
        if not rows or width == 0:
            raise DimensionMismatch("rational matrix needs at least one entry")
        self.entries = rows

    @staticmethod
    def _coerce(e) -> Rational:
        if isinstance(e, Rational):
            return e
        if isinstance(e, Poly):
            return Rational(e, Poly.constant(1.0), reduce=False)
        return Rational.constant(float(e))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, n: int, m: int) -> "RationalMatrix":
        return cls([[0.0] * m for _ in range(n)])

    @classmethod
    def block(cls, grid: Sequence[Sequence["RationalMatrix"]]) -> "RationalMatrix":
        rows = []
        for blockrow in grid:
            heights = {b.shape[0] for b in blockrow}
            if len(heights) != 1:
                raise DimensionMismatch("block row heights differ")
            for i in range(heights.pop()):
                rows.append([e for b in blockrow for e in b.entries[i]])
        return cls(rows)

    @property
    def shape(self) -> tuple:
        return (len(self.entries), len(self.entries[0]))

    def entry(self, i: int, j: int) -> Rational:
        return self.entries[i][j]

    def submatrix(self, rows, cols) -> "RationalMatrix":
        return RationalMatrix([[self.entries[i][j] for j in cols] for i in rows])

    def __call__(self, z):
        n, m = self.shape
        out = np.empty((n, m), dtype=complex)
        for i in range(n):
            for j in range(m):
                out[i, j] = self.entries[i][j](z)
        return out

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"add {self.shape} with {other.shape}")
        return RationalMatrix(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ]
        )

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix([[-e for e in r] for r in self.entries])

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + (-other)

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise DimensionMismatch(f"matmul {self.shape} with {other.shape}")
        out = []
        for i in range(n):
            row = []
            for j in range(m):
                acc = Rational.constant(0.0)
                for t in range(k):
                    acc = acc + self.entries[i][t] * other.entries[t][j]
                row.append(acc)
            out.append(row)
        return RationalMatrix(out)

    def __mul__(self, scalar) -> "RationalMatrix":
        return RationalMatrix([[e * scalar for e in r] for r in self.entries])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"RationalMatrix(shape={self.shape})"

    def transpose(self) -> "RationalMatrix":
        n, m = self.shape
        return RationalMatrix([[self.entries[i][j] for i in range(n)] for j in range(m)])

    def inverse(self) -> "RationalMatrix":
        """Gauss-Jordan elimination in exact rational arithmetic."""
        n, m = self.shape
        if n != m:
            raise DimensionMismatch(f"inverse of non-square {self.shape}")
        work = [list(r) for r in self.entries]
        aug = [
            [Rational.constant(1.0 if i == j else 0.0) for j in range(n)]
            for i in range(n)
        ]
        for col in range(n):
            piv = next((r for r in range(col, n) if not work[r][col].is_zero), None)
            if piv is None:
                raise SingularDenominator("rational matrix is singular for every q")
            work[col], work[piv] = work[piv], work[col]
            aug[col], aug[piv] = aug[piv], aug[col]
            p = work[col][col]
            work[col] = [e / p for e in work[col]]
            aug[col] = [e / p for e in aug[col]]
            for r in range(n):
                if r == col or work[r][col].is_zero:
                    continue
                f = work[r][col]
                work[r] = [a - f * b for a, b in zip(work[r], work[col])]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
        return RationalMatrix(aug)

    def is_proper(self) -> bool:
        return all(e.is_proper for r in self.entries for e in r)

    def is_stable(self, tol: float = STABILITY_TOL) -> bool:
        return all(e.is_stable(tol) for r in self.entries for e in r)


def rational_add(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    return a + b


def rational_mul(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    return a @ b


def rational_neg(a: RationalMatrix) -> RationalMatrix:
    return -a


def lft_lower(f: RationalMatrix, k: RationalMatrix) -> RationalMatrix:
    """Close the bottom channels of a partitioned map with feedback ``k``.

    ``f`` maps (w, u) to (z, y); ``k`` maps y to u. The result is
    F11 + F12 K (I - F22 K)^-1 F21, the map w -> z with the loop closed.
    """
    nu, ny = k.shape
    p, m = f.shape
    if p <= ny or m <= nu:
        raise DimensionMismatch(
            f"plant {f.shape} too small to close {k.shape} feedback"
        )
    rz, ry = range(p - ny), range(p - ny, p)
    cw, cu = range(m - nu), range(m - nu, m)
    f11 = f.submatrix(rz, cw)
    f12 = f.submatrix(rz, cu)
    f21 = f.submatrix(ry, cw)
    f22 = f.submatrix(ry, cu)
    eye = RationalMatrix.identity(ny)
    try:
        gain = (eye - (f22 @ k)).inverse()
    except SingularDenominator:
        raise IllPosedInterconnection(
            "I - F22*K is singular as a rational matrix; feedback loop is ill posed"
        ) from None
    return f11 + f12 @ (k @ (gain @ f21))


def lft_upper(f: RationalMatrix, k: RationalMatrix) -> RationalMatrix:
    """Close the top channels: f maps (u, w) to (y, z), k maps y to u."""
    nu, ny = k.shape
    p, m = f.shape
    if p <= ny or m <= nu:
        raise DimensionMismatch(
            f"plant {f.shape} too small to close {k.shape} feedback"
        )
    # permute so the feedback channels sit at the bottom, then reuse the
    # lower construction
    rows = list(range(ny, p)) + list(range(ny))
    cols = list(range(nu, m)) + list(range(nu))
    return lft_lower(f.submatrix(rows, cols), k)


@dataclass(frozen=True)
class IoRepresentation:
    """Left polynomial-fraction form D(q) y_out = N(q) u_in with named blocks.

    ``output_channels`` and ``input_channels`` are ((name, size), ...) tuples
    splitting the rows of D (equally, its columns) and the columns of N.
    Rows are grouped by output block; within a block every equation is
    lifted with the common block lag so stacked constraint heights agree.
    """

    D: PolyMatrix
    N: PolyMatrix
    output_channels: tuple
    input_channels: tuple

    def __post_init__(self):
        p = sum(s for _, s in self.output_channels)
        m = sum(s for _, s in self.input_channels)
        if self.D.shape != (p, p):
            raise DimensionMismatch(
                f"D is {self.D.shape}, output partition implies ({p}, {p})"
            )
        if self.N.shape != (p, m):
            raise DimensionMismatch(
                f"N is {self.N.shape}, partitions imply ({p}, {m})"
            )

    @property
    def n_out(self) -> int:
        return self.D.shape[0]

    @property
    def n_in(self) -> int:
        return self.N.shape[1]

    def out_slice(self, name: str) -> slice:
        return _partition_slice(self.output_channels, name)

    def in_slice(self, name: str) -> slice:
        return _partition_slice(self.input_channels, name)

    def channel_size(self, name: str, side: str = "out") -> int:
        part = self.output_channels if side == "out" else self.input_channels
        for n, size in part:
            if n == name:
                return size
        raise KeyError(f"no block named {name!r}")

    def row_block_lag(self, name: str) -> int:
        s = self.out_slice(name)
        rows = list(range(s.start, s.stop))
        d = self.D.submatrix(rows, list(range(self.n_out)))
        n = self.N.submatrix(rows, list(range(self.n_in)))
        return max(d.lag, n.lag)

    @property
    def lag(self) -> int:
        return max(self.row_block_lag(name) for name, _ in self.output_channels)

    def transfer_at(self, z) -> np.ndarray:
        """Frequency response D(z)^-1 N(z) at a complex point."""
        return np.linalg.solve(self.D(z), self.N(z))

    def is_stable(self, tol: float = STABILITY_TOL) -> bool:
        return self.D.is_stable(tol)


def _partition_slice(partition: tuple, name: str) -> slice:
    start = 0
    for n, size in partition:
        if n == name:
            return slice(start, start + size)
        start += size
    raise KeyError(f"no block named {name!r} in partition {partition}")


def rational_to_io(
    r: RationalMatrix,
    row_partition: Sequence[tuple],
    col_partition: Sequence[tuple] | None = None,
    tol: float = GCD_TOL,
) -> IoRepresentation:
    """Clear denominators of a rational map into a left fraction form.

    Each output block gets a single scalar common denominator (the monic LCM
    over the block's entries), so its D block is lcm(q) * I and all equations
    in the block share one lag. Emits CoprimenessWarning when a block's
    (D, N) pair loses rank at a denominator root (degenerate cancellation).
    """
    row_partition = tuple((str(n), int(s)) for n, s in row_partition)
    if col_partition is None:
        col_partition = (("in", r.shape[1]),)
    col_partition = tuple((str(n), int(s)) for n, s in col_partition)
    p = sum(s for _, s in row_partition)
    m = sum(s for _, s in col_partition)
    if r.shape != (p, m):
        raise DimensionMismatch(f"map is {r.shape}, partitions imply ({p}, {m})")
    d_grid = [[Poly.constant(0.0)] * p for _ in range(p)]
    n_grid = [[Poly.constant(0.0)] * m for _ in range(p)]
    row = 0
    for name, size in row_partition:
        lcm = Poly.constant(1.0)
        for i in range(row, row + size):
            for j in range(m):
                e = r.entries[i][j]
                if not e.is_zero:
                    lcm = poly_lcm(lcm, e.den, tol)
        for i in range(row, row + size):
            d_grid[i][i] = lcm
            for j in range(m):
                e = r.entries[i][j]
                if not e.is_zero:
                    n_grid[i][j] = e.num * poly_exact_div(lcm, e.den)
        d_block = PolyMatrix.from_entries([dr[row : row + size] for dr in d_grid[row : row + size]])
        n_block = PolyMatrix.from_entries([nr for nr in n_grid[row : row + size]])
        if not is_coprime(d_block, n_block):
            warnings.warn(
                f"output block {name!r}: (D, N) pair is not left coprime",
                CoprimenessWarning,
            )
        row += size
    return IoRepresentation(
        D=PolyMatrix.from_entries(d_grid),
        N=PolyMatrix.from_entries(n_grid),
        output_channels=row_partition,
        input_channels=col_partition,
    )
