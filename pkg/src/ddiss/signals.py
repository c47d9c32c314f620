"""Trajectories, data dictionaries, Hankel matrices and rank diagnostics.

A length-N trajectory of an n-channel signal is stored as an (N, n) array.
Stacked finite-horizon vectors are always time-major: ``z|_L`` is the
concatenation ``(z(0), ..., z(L-1))`` with each sample's channels contiguous,
which is exactly the layout of one Hankel-matrix column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTrajectory,
    HorizonTooLong,
    ParseError,
    PrefixExceedsHorizon,
)

DEFAULT_RANK_TOL = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """Ordered samples of a vector-valued discrete-time signal.

    ``samples`` has shape (N, dim); sample k is ``samples[k]``.
    """

    samples: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.samples, dtype=float))
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DimensionMismatch(
                f"trajectory samples must be (N, n), got shape {arr.shape}"
            )
        object.__setattr__(self, "samples", arr)

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def stacked(self) -> np.ndarray:
        """Time-major stacked vector (z(0), ..., z(N-1)) of length N*dim."""
        return self.samples.reshape(-1)

    def window(self, start: int, length: int) -> "Trajectory":
        if start < 0 or start + length > self.length:
            raise HorizonTooLong(
                f"window [{start}, {start + length}) outside trajectory of length {self.length}"
            )
        return Trajectory(self.samples[start : start + length])


@dataclass(frozen=True)
class DataDictionary:
    """A recorded input-output trajectory, the only plant knowledge used."""

    u: Trajectory
    y: Trajectory

    def __post_init__(self):
        if self.u.length != self.y.length:
            raise DimensionMismatch(
                f"input has {self.u.length} samples but output has {self.y.length}"
            )
        if self.u.length < 1:
            raise EmptyTrajectory("data dictionary needs at least one sample")
        if self.u.dim < 1 or self.y.dim < 1:
            raise DimensionMismatch("input and output must each have >= 1 channel")

    @property
    def length(self) -> int:
        return self.u.length

    @property
    def n_u(self) -> int:
        return self.u.dim

    @property
    def n_y(self) -> int:
        return self.y.dim


@dataclass(frozen=True)
class Selector:
    """Matrix [I 0] extracting the first ``prefix`` samples of a stacked signal."""

    horizon: int
    prefix: int
    dim: int
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        if not 0 <= self.prefix <= self.horizon:
            raise PrefixExceedsHorizon(
                f"prefix {self.prefix} outside [0, horizon={self.horizon}]"
            )
        m = np.zeros((self.prefix * self.dim, self.horizon * self.dim))
        np.fill_diagonal(m[:, : self.prefix * self.dim], 1.0)
        object.__setattr__(self, "matrix", m)


def build_hankel(z: Trajectory, depth: int) -> np.ndarray:
    """Block-Hankel matrix of ``z`` with ``depth`` block rows.

    Column j is the stacked window (z(j), ..., z(j+depth-1)); the result has
    shape (depth*dim, N-depth+1).
    """
    n, dim = z.length, z.dim
    if n == 0:
        raise EmptyTrajectory("cannot build a Hankel matrix from zero samples")
    if not 1 <= depth <= n:
        raise HorizonTooLong(f"depth {depth} outside [1, N={n}]")
    cols = n - depth + 1
    h = np.empty((depth * dim, cols))
    for j in range(cols):
        h[:, j] = z.samples[j : j + depth].reshape(-1)
    return h


def stacked_hankel(d: DataDictionary, depth: int) -> np.ndarray:
    """[H_L(u); H_L(y)] with a shared depth; shape ((n_u+n_y)*depth, N-depth+1)."""
    return np.vstack([build_hankel(d.u, depth), build_hankel(d.y, depth)])


def numerical_rank(mat: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Rank as the number of singular values >= rank_tol * sigma_max."""
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sv >= rank_tol * sv[0]))


def is_persistently_exciting(
    u: Trajectory, order: int, rank_tol: float = DEFAULT_RANK_TOL
) -> bool:
    """True when the depth-``order`` Hankel matrix of ``u`` has full row rank."""
    h = build_hankel(u, order)
    return numerical_rank(h, rank_tol) == order * u.dim


def check_fundamental_rank(
    d: DataDictionary, depth: int, state_dim: int, rank_tol: float = DEFAULT_RANK_TOL
) -> bool:
    """Test whether the data spans the whole depth-L behavior of the plant.

    True iff rank [H_L(u); H_L(y)] equals n_u*L + n_x, the dimension of the
    restricted behavior of an n_x-state system. Under this condition the
    Hankel columns parametrize every admissible length-L trajectory.
    """
    h = stacked_hankel(d, depth)
    return numerical_rank(h, rank_tol) == d.n_u * depth + state_dim


def zero_prefix_selector(horizon: int, prefix: int, dim: int) -> Selector:
    """Selector pinning the first ``prefix`` samples of a stacked signal to zero."""
    return Selector(horizon=horizon, prefix=prefix, dim=dim)


def load_dictionary(path) -> DataDictionary:
    """Read a data dictionary from CSV with header ``k,u1,...,y1,...``.

    Rows must be sorted by integer k starting at 0 with no gaps; every row
    must carry one value per declared channel.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "k":
            raise ParseError(f"{path}: first header column must be 'k', got {header[:1]}")
        n_u = sum(1 for h in header if h.startswith("u"))
        n_y = sum(1 for h in header if h.startswith("y"))
        expect = ["k"] + [f"u{i}" for i in range(1, n_u + 1)] + [
            f"y{i}" for i in range(1, n_y + 1)
        ]
        if header != expect or n_u < 1 or n_y < 1:
            raise ParseError(
                f"{path}: header must be k,u1..u<nu>,y1..y<ny>, got {header}"
            )
        u_rows, y_rows = [], []
        for idx, row in enumerate(reader):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            rownum = idx + 2  # 1-based, after header
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {rownum} has {len(row)} fields, expected {len(header)}"
                )
            try:
                k = int(row[0])
            except ValueError:
                raise ParseError(f"{path}: row {rownum}: bad time index {row[0]!r}") from None
            if k != len(u_rows):
                raise ParseError(
                    f"{path}: row {rownum}: time index {k}, expected {len(u_rows)}"
                )
            vals = []
            for col, cell in zip(header[1:], row[1:]):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: row {rownum}, column {col}: bad float {cell!r}"
                    ) from None
            u_rows.append(vals[:n_u])
            y_rows.append(vals[n_u:])
    if not u_rows:
        raise ParseError(f"{path}: no data rows")
    return DataDictionary(u=Trajectory(np.array(u_rows)), y=Trajectory(np.array(y_rows)))


def save_dictionary(d: DataDictionary, path) -> None:
    """Write a data dictionary in the CSV schema accepted by load_dictionary."""
    path = Path(path)
    header = ["k"] + [f"u{i}" for i in range(1, d.n_u + 1)] + [
        f"y{i}" for i in range(1, d.n_y + 1)
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(d.length):
            writer.writerow(
                [k]
                + [repr(float(v)) for v in d.u.samples[k]]
                + [repr(float(v)) for v in d.y.samples[k]]
            )
