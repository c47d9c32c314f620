"""Finite-horizon dissipativity certificates over data-driven constraint sets.

The workhorse objects are dense constraint matrices whose nullspaces
parametrize every signal tuple the measured data and the interconnection
equations admit. A quadratic supply rate is then checked for nonnegativity
on that nullspace, which turns each verdict into a plain symmetric
eigenvalue problem: no solver, no model identification.

Stacked-vector layout, used everywhere: signals are channel-block stacked,
time-major inside each block, matching Hankel matrix columns. The constraint
matrix over a length-L window has column blocks [g | w|_L | z|_L] where g
ranges over Hankel column combinations.
"""

from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import (
    DegenerateNullspace,
    DimensionMismatch,
    NoFiniteGain,
    PrefixExceedsHorizon,
    PrefixPolicyViolated,
    RankConditionViolated,
)
from .polymat import IoRepresentation, PolyMatrix, toeplitz_lift
from .signals import (
    DEFAULT_RANK_TOL,
    DataDictionary,
    build_hankel,
    check_fundamental_rank,
    zero_prefix_selector,
)

DEFAULT_PSD_TOL = 1e-8
DEFAULT_BISECT_TOL = 1e-4
BISECT_MAX_ITERS = 60
GAIN_SEARCH_CAP = 1e6


@dataclass(frozen=True)
class SupplyRate:
    """Quadratic supply s(w, z) = [w; z]' [[Q, S], [S', R]] [w; z].

    Q and R are symmetrized on construction so downstream eigenvalue tests
    never see an accidental asymmetry.
    """

    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        s = np.atleast_2d(np.asarray(self.S, dtype=float))
        r = np.atleast_2d(np.asarray(self.R, dtype=float))
        if q.shape[0] != q.shape[1]:
            raise DimensionMismatch(f"Q must be square, got {q.shape}")
        if r.shape[0] != r.shape[1]:
            raise DimensionMismatch(f"R must be square, got {r.shape}")
        if s.shape != (q.shape[0], r.shape[0]):
            raise DimensionMismatch(
                f"S is {s.shape}, expected ({q.shape[0]}, {r.shape[0]})"
            )
        object.__setattr__(self, "Q", 0.5 * (q + q.T))
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "R", 0.5 * (r + r.T))

    @property
    def n_w(self) -> int:
        return self.Q.shape[0]

    @property
    def n_z(self) -> int:
        return self.R.shape[0]

    @classmethod
    def l2_gain(cls, gamma: float, n_w: int = 1, n_z: int = 1) -> "SupplyRate":
        """gamma^2 |w|^2 - |z|^2, nonnegative iff the gain is at most gamma."""
        return cls(gamma * gamma * np.eye(n_w), np.zeros((n_w, n_z)), -np.eye(n_z))

    @classmethod
    def passivity(cls, n: int = 1) -> "SupplyRate":
        return cls(np.zeros((n, n)), np.eye(n), np.zeros((n, n)))

    @classmethod
    def input_feedforward_passivity(cls, shortfall: float, n: int = 1) -> "SupplyRate":
        """Passivity with an input feedforward term -shortfall * |w|^2."""
        return cls(-shortfall * np.eye(n), np.eye(n), np.zeros((n, n)))

    @classmethod
    def passivity_shortage(cls, beta: float, n: int = 1) -> "SupplyRate":
        return cls(np.zeros((n, n)), np.eye(n), beta * np.eye(n))

    def scaled(self, alpha: float) -> "SupplyRate":
        return SupplyRate(alpha * self.Q, alpha * self.S, alpha * self.R)


def lift_supply(supply: SupplyRate, horizon: int) -> np.ndarray:
    """Sum of the per-sample supply over a length-``horizon`` window.

    Acts on the stacked vector [w|_L; z|_L]; since both blocks are time-major
    the lifted matrix is a 2x2 grid of Kronecker products with I_L.
    """
    if horizon < 1:
        raise DimensionMismatch(f"horizon must be >= 1, got {horizon}")
    eye = np.eye(horizon)
    return np.block(
        [
            [np.kron(eye, supply.Q), np.kron(eye, supply.S)],
            [np.kron(eye, supply.S.T), np.kron(eye, supply.R)],
        ]
    )


def nullspace(mat: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the right nullspace via full SVD.

    Columns are the right singular vectors whose singular values fall below
    rank_tol relative to the largest; a matrix with no rows maps to the
    identity.
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.shape[0] == 0 or mat.size == 0:
        return np.eye(mat.shape[1])
    _, sv, vt = np.linalg.svd(mat)
    if sv[0] <= 0.0:
        return np.eye(mat.shape[1])
    rank = int(np.count_nonzero(sv >= rank_tol * sv[0]))
    return vt[rank:].T


@dataclass(frozen=True)
class Certificate:
    """Outcome of one projected positive-semidefiniteness test.

    ``degenerate`` marks verdicts that hold vacuously because the constraint
    set admitted no nontrivial signals; such certificates pass but should be
    treated as uninformative.
    """

    dissipative: bool
    min_eig: float
    nullspace_dim: int
    rank_tol: float
    psd_tol: float
    horizon: int
    prefix: int
    gamma: float | None = None
    degenerate: bool = False

    @property
    def verdict(self) -> str:
        return "dissipative" if self.dissipative else "not-certified"


def _projected_verdict(m: np.ndarray, psd_tol: float) -> tuple:
    """(min_eig, dissipative) for a projected quadratic form."""
    if m.size == 0:
        return 0.0, True
    m = 0.5 * (m + m.T)
    eig = np.linalg.eigvalsh(m)
    scale = max(1.0, float(np.max(np.abs(eig))))
    min_eig = float(eig[0])
    return min_eig, min_eig >= -psd_tol * scale


def check_data_only_dissipativity(
    d: DataDictionary,
    supply: SupplyRate,
    horizon: int,
    prefix: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    psd_tol: float = DEFAULT_PSD_TOL,
    state_dim: int | None = None,
    plant_lag_bound: int | None = None,
) -> Certificate:
    """Dissipativity of the data-generating system w.r.t. a supply over (u, y).

    Hankel columns of depth ``horizon`` span every admissible window; rows
    selecting the first ``prefix`` samples of u and y pin the latent initial
    condition to zero. The supply is then checked on the nullspace of those
    selector rows. ``prefix`` must dominate the plant's lag for the zero
    pinning to be valid; pass ``plant_lag_bound`` to have that enforced, and
    ``state_dim`` to get a warning when the data does not span the full
    behavior (the verdict is then only valid for the spanned subset).
    """
    if supply.n_w != d.n_u or supply.n_z != d.n_y:
        raise DimensionMismatch(
            f"supply is over ({supply.n_w}, {supply.n_z}) channels, "
            f"data has ({d.n_u}, {d.n_y})"
        )
    if not 0 <= prefix <= horizon:
        raise PrefixExceedsHorizon(f"prefix {prefix} outside [0, horizon={horizon}]")
    if plant_lag_bound is not None and prefix < plant_lag_bound:
        raise PrefixPolicyViolated(
            f"prefix {prefix} below the plant lag bound {plant_lag_bound}"
        )
    if state_dim is not None and not check_fundamental_rank(
        d, horizon, state_dim, rank_tol
    ):
        warnings.warn(
            "data does not span the full plant behavior at this depth; "
            "the verdict covers only the recorded span",
            RankConditionViolated,
        )
    h_u = build_hankel(d.u, horizon)
    h_y = build_hankel(d.y, horizon)
    # prefix selectors applied to Hankels are plain row slices
    k = np.vstack([h_u[: prefix * d.n_u], h_y[: prefix * d.n_y]])
    z = nullspace(k, rank_tol)
    if z.shape[1] == 0:
        raise DegenerateNullspace(
            "zero-prefix constraint leaves no admissible trajectories"
        )
    h = np.vstack([h_u, h_y])
    hz = h @ z
    m = hz.T @ lift_supply(supply, horizon) @ hz
    min_eig, ok = _projected_verdict(m, psd_tol)
    return Certificate(
        dissipative=ok,
        min_eig=min_eig,
        nullspace_dim=z.shape[1],
        rank_tol=rank_tol,
        psd_tol=psd_tol,
        horizon=horizon,
        prefix=prefix,
    )


def bisect_l2_gain(
    gw: np.ndarray,
    gz: np.ndarray,
    hi0: float,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    psd_tol: float = DEFAULT_PSD_TOL,
    max_iters: int = BISECT_MAX_ITERS,
    cap: float = GAIN_SEARCH_CAP,
) -> float:
    """Smallest certified gamma for the family gamma^2 Gw - Gz >= 0.

    Gw and Gz are the projected Gram matrices of the w and z rows of a shared
    nullspace basis, so one symmetric eigensolve answers each feasibility
    query. Feasibility is monotone in gamma; the returned value is the
    feasible upper end of the final bracket, hence itself certified.
    """
    if gw.size == 0:
        return 0.0

    def feasible(gamma: float) -> bool:
        _, ok = _projected_verdict(gamma * gamma * gw - gz, psd_tol)
        return ok

    if feasible(0.0):
        return 0.0
    # clamp: a degenerate record (zero input energy) suggests an infinite
    # bracket, which must fail over at the cap instead of overflowing
    hi = min(max(float(hi0), 1.0), cap)
    while not feasible(hi):
        if hi > cap:
            raise NoFiniteGain(
                f"no feasible gain below {cap:g}; the loop is unstable over "
                "this window or the constraint blocks are inconsistent"
            )
        hi *= 2.0
    lo = 0.0
    for _ in range(max_iters):
        if hi - lo <= bisect_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def data_only_l2_gain(
    d: DataDictionary,
    horizon: int,
    prefix: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    psd_tol: float = DEFAULT_PSD_TOL,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    plant_lag_bound: int | None = None,
) -> float:
    """Smallest gamma certified by check_data_only_dissipativity at (L, nu)."""
    if not 0 <= prefix <= horizon:
        raise PrefixExceedsHorizon(f"prefix {prefix} outside [0, horizon={horizon}]")
    if plant_lag_bound is not None and prefix < plant_lag_bound:
        raise PrefixPolicyViolated(
            f"prefix {prefix} below the plant lag bound {plant_lag_bound}"
        )
    h_u = build_hankel(d.u, horizon)
    h_y = build_hankel(d.y, horizon)
    k = np.vstack([h_u[: prefix * d.n_u], h_y[: prefix * d.n_y]])
    z = nullspace(k, rank_tol)
    if z.shape[1] == 0:
        raise DegenerateNullspace(
            "zero-prefix constraint leaves no admissible trajectories"
        )
    uz = h_u @ z
    yz = h_y @ z
    u_norm = float(np.linalg.norm(d.u.samples))
    y_norm = float(np.linalg.norm(d.y.samples))
    hi0 = 2.0 * (y_norm / u_norm + 1.0) if u_norm > 0.0 else float("inf")
    return bisect_l2_gain(uz.T @ uz, yz.T @ yz, hi0, bisect_tol, psd_tol)


@dataclass(frozen=True)
class FiniteHorizonLfr:
    """Lifted interconnection of Hankel data with a model-based filter.

    The six Toeplitz blocks encode the filter equations mapping plant
    channels (u, y) and the exogenous input w to the performance output z,
    all lifted over the same window and row-aligned to a common lag; the
    Hankel blocks parametrize the plant. ``u_norm`` and ``y_norm`` carry the
    raw data energies used to seed gain brackets.
    """

    t_du: np.ndarray
    t_nuy: np.ndarray
    t_nuw: np.ndarray
    t_dz: np.ndarray
    t_nzy: np.ndarray
    t_nzw: np.ndarray
    h_u: np.ndarray
    h_y: np.ndarray
    horizon: int
    prefix: int
    n_u: int
    n_y: int
    n_w: int
    n_z: int
    u_norm: float
    y_norm: float

    def __post_init__(self):
        L = self.horizon
        expect = {
            "t_du": L * self.n_u,
            "t_nuy": L * self.n_y,
            "t_nuw": L * self.n_w,
            "t_dz": L * self.n_z,
            "t_nzy": L * self.n_y,
            "t_nzw": L * self.n_w,
            "h_u": None,
            "h_y": None,
        }
        for name, cols in expect.items():
            block = getattr(self, name)
            if cols is not None and block.shape[1] != cols:
                raise DimensionMismatch(
                    f"block {name} has {block.shape[1]} columns, expected {cols}"
                )
        if self.h_u.shape[1] != self.h_y.shape[1]:
            raise DimensionMismatch("Hankel blocks disagree on column count")
        if self.h_u.shape[0] != L * self.n_u or self.h_y.shape[0] != L * self.n_y:
            raise DimensionMismatch("Hankel block heights do not match the horizon")
        if not 0 <= self.prefix <= L:
            raise PrefixExceedsHorizon(
                f"prefix {self.prefix} outside [0, horizon={L}]"
            )


def _lift_aligned(
    p: PolyMatrix, horizon: int, block_lag: int, common_lag: int
) -> np.ndarray:
    """Toeplitz lift with the row equations aligned to a shared lag.

    A block of lag below the common one is advanced in time (multiplied by a
    power of the shift), which drops its equations on the first few samples
    instead of the last; those instants sit inside the zero prefix that the
    selector rows enforce, so no admissible constraint is lost.
    """
    rows, cols = p.shape
    if p.is_zero:
        return np.zeros(((horizon - common_lag) * rows, horizon * cols))
    shift = common_lag - block_lag
    if shift > 0:
        p = PolyMatrix(
            np.concatenate([np.zeros((shift, rows, cols)), p.coeffs], axis=0)
        )
    return toeplitz_lift(p, horizon, lag=common_lag)


def build_closed_loop_lfr(
    d: DataDictionary,
    m_io: IoRepresentation,
    horizon: int,
    prefix: int,
    plant_lag_bound: int,
    enforce_nu_policy: bool = True,
) -> FiniteHorizonLfr:
    """Assemble the lifted blocks for a data-plant / model-filter loop.

    ``m_io`` must have output channels named "u" and "z" and input channels
    named "y" and "w": the filter produces the plant input and the
    performance output from the plant output and the exogenous signal. The
    prefix must cover both the plant's lag bound and one more than the
    filter's lag (the equations dropped by lag alignment); set
    ``enforce_nu_policy=False`` only to probe what fails without it.
    """
    try:
        u_rows = m_io.out_slice("u")
        z_rows = m_io.out_slice("z")
        y_cols = m_io.in_slice("y")
        w_cols = m_io.in_slice("w")
    except KeyError as exc:
        raise DimensionMismatch(
            f"interconnection must expose u/z outputs and y/w inputs: {exc}"
        ) from exc
    n_u = u_rows.stop - u_rows.start
    n_z = z_rows.stop - z_rows.start
    n_y = y_cols.stop - y_cols.start
    n_w = w_cols.stop - w_cols.start
    if d.n_u != n_u or d.n_y != n_y:
        raise DimensionMismatch(
            f"data carries ({d.n_u}, {d.n_y}) channels, interconnection "
            f"expects ({n_u}, {n_y})"
        )
    ui = list(range(u_rows.start, u_rows.stop))
    zi = list(range(z_rows.start, z_rows.stop))
    yi = list(range(y_cols.start, y_cols.stop))
    wi = list(range(w_cols.start, w_cols.stop))
    if not m_io.D.submatrix(ui, zi).is_zero or not m_io.D.submatrix(zi, ui).is_zero:
        raise DimensionMismatch(
            "interconnection D couples the u and z row blocks; the closed-loop "
            "assembly needs them decoupled"
        )
    common = m_io.lag
    if enforce_nu_policy:
        required = max(plant_lag_bound, common + 1)
        if prefix < required:
            raise PrefixPolicyViolated(
                f"prefix {prefix} below max(plant lag bound {plant_lag_bound}, "
                f"interconnection lag {common} + 1) = {required}"
            )
    if not 0 <= prefix <= horizon:
        raise PrefixExceedsHorizon(f"prefix {prefix} outside [0, horizon={horizon}]")
    lag_u = m_io.row_block_lag("u")
    lag_z = m_io.row_block_lag("z")
    return FiniteHorizonLfr(
        t_du=_lift_aligned(m_io.D.submatrix(ui, ui), horizon, lag_u, common),
        t_nuy=_lift_aligned(m_io.N.submatrix(ui, yi), horizon, lag_u, common),
        t_nuw=_lift_aligned(m_io.N.submatrix(ui, wi), horizon, lag_u, common),
        t_dz=_lift_aligned(m_io.D.submatrix(zi, zi), horizon, lag_z, common),
        t_nzy=_lift_aligned(m_io.N.submatrix(zi, yi), horizon, lag_z, common),
        t_nzw=_lift_aligned(m_io.N.submatrix(zi, wi), horizon, lag_z, common),
        h_u=build_hankel(d.u, horizon),
        h_y=build_hankel(d.y, horizon),
        horizon=horizon,
        prefix=prefix,
        n_u=n_u,
        n_y=n_y,
        n_w=n_w,
        n_z=n_z,
        u_norm=float(np.linalg.norm(d.u.samples)),
        y_norm=float(np.linalg.norm(d.y.samples)),
    )


def assemble_closed_loop_B(lfr: FiniteHorizonLfr) -> np.ndarray:
    """Constraint matrix over [g | w|_L | z|_L] for the closed loop.

    Rows: the filter's u equations applied to the Hankel-parametrized plant
    signals, the z equations, and the zero-prefix selectors on w and z.
    """
    L, nu = lfr.horizon, lfr.prefix
    n_g = lfr.h_u.shape[1]
    wu = lfr.t_nuy.shape[0]
    vw = zero_prefix_selector(L, nu, lfr.n_w).matrix
    vz = zero_prefix_selector(L, nu, lfr.n_z).matrix
    return np.vstack(
        [
            np.hstack(
                [
                    lfr.t_nuy @ lfr.h_y - lfr.t_du @ lfr.h_u,
                    lfr.t_nuw,
                    np.zeros((wu, L * lfr.n_z)),
                ]
            ),
            np.hstack([lfr.t_nzy @ lfr.h_y, lfr.t_nzw, -lfr.t_dz]),
            np.hstack(
                [np.zeros((vw.shape[0], n_g)), vw, np.zeros((vw.shape[0], L * lfr.n_z))]
            ),
            np.hstack(
                [np.zeros((vz.shape[0], n_g)), np.zeros((vz.shape[0], L * lfr.n_w)), vz]
            ),
        ]
    )


def check_closed_loop_dissipativity(
    b: np.ndarray,
    supply: SupplyRate,
    horizon: int,
    prefix: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    psd_tol: float = DEFAULT_PSD_TOL,
) -> Certificate:
    """Projected supply test on the nullspace of an assembled constraint matrix.

    The bordered supply acts only on the trailing (w, z) column blocks; the
    leading g block contributes nothing. A trivial nullspace certifies
    vacuously and is flagged on the certificate instead of raising, since a
    fully pinned loop is dissipative by emptiness.
    """
    signal_cols = horizon * (supply.n_w + supply.n_z)
    n_g = b.shape[1] - signal_cols
    if n_g < 0:
        raise DimensionMismatch(
            f"constraint matrix has {b.shape[1]} columns, fewer than the "
            f"{signal_cols} signal columns implied by the supply"
        )
    z = nullspace(b, rank_tol)
    if z.shape[1] == 0:
        return Certificate(
            dissipative=True,
            min_eig=0.0,
            nullspace_dim=0,
            rank_tol=rank_tol,
            psd_tol=psd_tol,
            horizon=horizon,
            prefix=prefix,
            degenerate=True,
        )
    tail = z[n_g:]
    m = tail.T @ lift_supply(supply, horizon) @ tail
    min_eig, ok = _projected_verdict(m, psd_tol)
    return Certificate(
        dissipative=ok,
        min_eig=min_eig,
        nullspace_dim=z.shape[1],
        rank_tol=rank_tol,
        psd_tol=psd_tol,
        horizon=horizon,
        prefix=prefix,
    )


def finite_horizon_l2_gain_dd(
    source,
    horizon: int | None = None,
    prefix: int | None = None,
    m_io: IoRepresentation | None = None,
    plant_lag_bound: int | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
    psd_tol: float = DEFAULT_PSD_TOL,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    enforce_nu_policy: bool = True,
) -> float:
    """Smallest certified l2-gain from w to z over the lifted window.

    ``source`` is either a prepared FiniteHorizonLfr or a DataDictionary, in
    which case ``m_io``, ``horizon``, ``prefix`` and ``plant_lag_bound`` are
    required to build one. The nullspace is computed once; each bisection
    step costs a single symmetric eigensolve.
    """
    if isinstance(source, FiniteHorizonLfr):
        lfr = source
    else:
        if m_io is None or horizon is None or prefix is None or plant_lag_bound is None:
            raise DimensionMismatch(
                "building from data needs m_io, horizon, prefix and plant_lag_bound"
            )
        lfr = build_closed_loop_lfr(
            source, m_io, horizon, prefix, plant_lag_bound, enforce_nu_policy
        )
    z = nullspace(assemble_closed_loop_B(lfr), rank_tol)
    if z.shape[1] == 0:
        return 0.0
    n_g = lfr.h_u.shape[1]
    zw = z[n_g : n_g + lfr.horizon * lfr.n_w]
    zz = z[n_g + lfr.horizon * lfr.n_w :]
    hi0 = (
        2.0 * (lfr.y_norm / lfr.u_norm + 1.0) if lfr.u_norm > 0.0 else float("inf")
    )
    return bisect_l2_gain(zw.T @ zw, zz.T @ zz, hi0, bisect_tol, psd_tol)


def _block_participates(n_f_block: PolyMatrix) -> bool:
    return not n_f_block.is_zero


def assemble_generalized_plant_B(
    d: DataDictionary,
    f_io: IoRepresentation,
    horizon: int,
    prefix: int,
    controller: IoRepresentation | None = None,
    plant_lag_bound: int | None = None,
) -> np.ndarray:
    """Constraint matrix over [g | w | f | z | e] for a three-channel plant.

    ``f_io`` must expose output channels (u, z, e) and input channels
    (y, w, f): f is the internal actuation produced by a controller from the
    internal measurement e. Closing the loop appends the controller rows
    D_k f = N_k e. Zero-prefix selectors apply to w and z only.

    Row alignment: blocks that take part in eliminating (f, e) -- the e
    definitions, any block reading f, and the controller itself -- keep
    their natural heights so the substitution stays exact; the remaining
    blocks are advanced to the deepest lag among those participants, exactly
    mirroring how the equivalent eliminated loop is lifted. With no
    controller every block keeps its natural height.
    """
    try:
        u_rows = f_io.out_slice("u")
        z_rows = f_io.out_slice("z")
        e_rows = f_io.out_slice("e")
        y_cols = f_io.in_slice("y")
        w_cols = f_io.in_slice("w")
        f_cols = f_io.in_slice("f")
    except KeyError as exc:
        raise DimensionMismatch(
            f"generalized plant must expose u/z/e outputs and y/w/f inputs: {exc}"
        ) from exc
    dims = {
        "u": u_rows.stop - u_rows.start,
        "z": z_rows.stop - z_rows.start,
        "e": e_rows.stop - e_rows.start,
        "y": y_cols.stop - y_cols.start,
        "w": w_cols.stop - w_cols.start,
        "f": f_cols.stop - f_cols.start,
    }
    if d.n_u != dims["u"] or d.n_y != dims["y"]:
        raise DimensionMismatch(
            f"data carries ({d.n_u}, {d.n_y}) channels, plant expects "
            f"({dims['u']}, {dims['y']})"
        )
    if plant_lag_bound is not None and prefix < plant_lag_bound:
        raise PrefixPolicyViolated(
            f"prefix {prefix} below the plant lag bound {plant_lag_bound}"
        )
    if not 0 <= prefix <= horizon:
        raise PrefixExceedsHorizon(f"prefix {prefix} outside [0, horizon={horizon}]")
    idx = {
        "u": list(range(u_rows.start, u_rows.stop)),
        "z": list(range(z_rows.start, z_rows.stop)),
        "e": list(range(e_rows.start, e_rows.stop)),
        "y": list(range(y_cols.start, y_cols.stop)),
        "w": list(range(w_cols.start, w_cols.stop)),
        "f": list(range(f_cols.start, f_cols.stop)),
    }
    for a in ("u", "z", "e"):
        for b in ("u", "z", "e"):
            if a != b and not f_io.D.submatrix(idx[a], idx[b]).is_zero:
                raise DimensionMismatch(
                    f"generalized plant D couples the {a} and {b} row blocks"
                )
    block_lag = {name: f_io.row_block_lag(name) for name in ("u", "z", "e")}
    if controller is not None:
        dk = controller.D
        nk = controller.N
        if dk.shape != (dims["f"], dims["f"]) or nk.shape != (dims["f"], dims["e"]):
            raise DimensionMismatch(
                f"controller blocks are {dk.shape} / {nk.shape}, expected "
                f"({dims['f']}, {dims['f']}) / ({dims['f']}, {dims['e']})"
            )
        ctrl_lag = max(dk.lag, nk.lag)
        participating = {"e"} | {
            name
            for name in ("u", "z")
            if _block_participates(f_io.N.submatrix(idx[name], idx["f"]))
        }
        align = max([ctrl_lag] + [block_lag[name] for name in participating])
    else:
        participating = {"u", "z", "e"}
        align = 0

    h_u = build_hankel(d.u, horizon)
    h_y = build_hankel(d.y, horizon)
    n_g = h_u.shape[1]
    L = horizon
    col_width = {
        "g": n_g,
        "w": L * dims["w"],
        "f": L * dims["f"],
        "z": L * dims["z"],
        "e": L * dims["e"],
    }
    order = ("g", "w", "f", "z", "e")

    def lift(p: PolyMatrix, own: int, target: int) -> np.ndarray:
        return _lift_aligned(p, L, own, target)

    rows = []
    for name in ("u", "z", "e"):
        target = block_lag[name] if name in participating else max(align, block_lag[name])
        own = block_lag[name]
        d_blk = lift(f_io.D.submatrix(idx[name], idx[name]), own, target)
        n_y_blk = lift(f_io.N.submatrix(idx[name], idx["y"]), own, target)
        n_w_blk = lift(f_io.N.submatrix(idx[name], idx["w"]), own, target)
        n_f_blk = lift(f_io.N.submatrix(idx[name], idx["f"]), own, target)
        height = d_blk.shape[0]
        pieces = {
            "g": n_y_blk @ h_y,
            "w": n_w_blk,
            "f": n_f_blk,
            "z": np.zeros((height, col_width["z"])),
            "e": np.zeros((height, col_width["e"])),
        }
        if name == "u":
            pieces["g"] = pieces["g"] - d_blk @ h_u
        else:
            pieces[name] = pieces[name] - d_blk
        rows.append(np.hstack([pieces[c] for c in order]))
    if controller is not None:
        t_dk = lift(dk, ctrl_lag, ctrl_lag)
        t_nk = lift(nk, ctrl_lag, ctrl_lag)
        height = t_dk.shape[0]
        rows.append(
            np.hstack(
                [
                    np.zeros((height, col_width["g"])),
                    np.zeros((height, col_width["w"])),
                    t_dk,
                    np.zeros((height, col_width["z"])),
                    -t_nk,
                ]
            )
        )
    vw = zero_prefix_selector(L, prefix, dims["w"]).matrix
    vz = zero_prefix_selector(L, prefix, dims["z"]).matrix
    rows.append(
        np.hstack(
            [
                np.zeros((vw.shape[0], col_width["g"])),
                vw,
                np.zeros((vw.shape[0], col_width["f"] + col_width["z"] + col_width["e"])),
            ]
        )
    )
    rows.append(
        np.hstack(
            [
                np.zeros((vz.shape[0], col_width["g"] + col_width["w"] + col_width["f"])),
                vz,
                np.zeros((vz.shape[0], col_width["e"])),
            ]
        )
    )
    return np.vstack(rows)
