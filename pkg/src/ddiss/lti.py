"""State-space systems, finite-horizon operators and frequency-domain oracles.

Discrete-time systems use the forward recursion x(k+1) = A x(k) + B u(k),
y(k) = C x(k) + D u(k). Stacked response matrices follow the same time-major
layout as the signal module, so y|_L = obs_L x0 + conv_L u|_L holds with the
operators returned by :func:`toeplitz_operator`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DdissError,
    DimensionMismatch,
    HorizonTooLong,
    IllPosedInterconnection,
    UnstableSystem,
)
from .polymat import (
    STABILITY_TOL,
    Poly,
    Rational,
    RationalMatrix,
)
from .signals import DEFAULT_RANK_TOL, DataDictionary, Trajectory, numerical_rank


@dataclass(frozen=True)
class StateSpace:
    """Linear system (A, B, C, D); ``time`` is "dt" or "ct"."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    time: str = "dt"

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise DimensionMismatch(f"B has {self.B.shape[0]} rows, A is {n}x{n}")
        if self.C.shape[1] != n:
            raise DimensionMismatch(f"C has {self.C.shape[1]} cols, A is {n}x{n}")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise DimensionMismatch(
                f"D is {self.D.shape}, expected ({self.C.shape[0]}, {self.B.shape[1]})"
            )
        if self.time not in ("dt", "ct"):
            raise DimensionMismatch(f"time must be 'dt' or 'ct', got {self.time!r}")

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def spectral_abscissa(self) -> float:
        if self.n_x == 0:  # static systems count as stable
            return -np.inf if self.time == "ct" else 0.0
        ev = np.linalg.eigvals(self.A)
        return float(np.max(ev.real)) if self.time == "ct" else float(np.max(np.abs(ev)))

    def is_stable(self, tol: float = STABILITY_TOL) -> bool:
        bound = -tol if self.time == "ct" else 1.0 - tol
        return self.spectral_abscissa() < bound


def simulate(ss: StateSpace, u: Trajectory, x0: np.ndarray | None = None) -> Trajectory:
    """Forward simulation returning the output trajectory."""
    if ss.time != "dt":
        raise DimensionMismatch("simulate expects a discrete-time system")
    if u.dim != ss.n_u:
        raise DimensionMismatch(f"input has {u.dim} channels, system expects {ss.n_u}")
    x = np.zeros(ss.n_x) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x.shape != (ss.n_x,):
        raise DimensionMismatch(f"x0 has shape {x.shape}, expected ({ss.n_x},)")
    y = np.empty((u.length, ss.n_y))
    for k in range(u.length):
        y[k] = ss.C @ x + ss.D @ u.samples[k]
        x = ss.A @ x + ss.B @ u.samples[k]
    return Trajectory(y)


def discretize_zoh(ss: StateSpace, h: float) -> StateSpace:
    """Exact zero-order-hold discretization with sample time h.

    Uses the matrix exponential of the augmented block [[A, B], [0, 0]] * h,
    so A_d = exp(A h) and B_d = int_0^h exp(A s) ds B without requiring A to
    be invertible.
    """
    if ss.time != "ct":
        raise DimensionMismatch("discretize_zoh expects a continuous-time system")
    if h <= 0:
        raise DimensionMismatch(f"sample time must be positive, got {h}")
    n, m = ss.n_x, ss.n_u
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = ss.A
    aug[:n, n:] = ss.B
    e = scipy.linalg.expm(aug * h)
    return StateSpace(A=e[:n, :n], B=e[:n, n:], C=ss.C, D=ss.D, time="dt")


def integrate_zoh_rk4(
    ss: StateSpace,
    u: Trajectory,
    h: float,
    substeps: int = 1000,
    x0: np.ndarray | None = None,
) -> Trajectory:
    """Reference integration of a continuous-time system under held inputs.

    Classic Runge-Kutta with ``substeps`` stages per sample interval; the
    output is read at the sample instants. Used to cross-check the exact
    discretization independently of the matrix exponential.
    """
    if ss.time != "ct":
        raise DimensionMismatch("integrate_zoh_rk4 expects a continuous-time system")
    x = np.zeros(ss.n_x) if x0 is None else np.asarray(x0, dtype=float).ravel()
    dt = h / substeps
    y = np.empty((u.length, ss.n_y))
    for k in range(u.length):
        uk = u.samples[k]
        y[k] = ss.C @ x + ss.D @ uk
        bu = ss.B @ uk
        for _ in range(substeps):
            k1 = ss.A @ x + bu
            k2 = ss.A @ (x + 0.5 * dt * k1) + bu
            k3 = ss.A @ (x + 0.5 * dt * k2) + bu
            k4 = ss.A @ (x + dt * k3) + bu
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Trajectory(y)


@dataclass(frozen=True)
class ToeplitzOperator:
    """Finite-horizon response pair: y|_L = observability @ x0 + matrix @ u|_L."""

    matrix: np.ndarray
    observability: np.ndarray
    horizon: int


def toeplitz_operator(ss: StateSpace, horizon: int) -> ToeplitzOperator:
    """Stacked response maps over length-``horizon`` windows."""
    if ss.time != "dt":
        raise DimensionMismatch("toeplitz_operator expects a discrete-time system")
    if horizon < 1:
        raise DimensionMismatch(f"horizon must be >= 1, got {horizon}")
    n, m, p = ss.n_x, ss.n_u, ss.n_y
    obs = np.empty((horizon * p, n))
    powers = [np.eye(n)]
    for _ in range(horizon - 1):
        powers.append(ss.A @ powers[-1])
    for i in range(horizon):
        obs[i * p : (i + 1) * p] = ss.C @ powers[i]
    conv = np.zeros((horizon * p, horizon * m))
    # first block column: D, CB, CAB, ...
    col = [ss.D] + [ss.C @ powers[i] @ ss.B for i in range(horizon - 1)]
    for j in range(horizon):
        for i in range(j, horizon):
            conv[i * p : (i + 1) * p, j * m : (j + 1) * m] = col[i - j]
    return ToeplitzOperator(matrix=conv, observability=obs, horizon=horizon)


def finite_horizon_gain_mb(ss: StateSpace, horizon: int) -> float:
    """Largest l2 amplification over length-``horizon`` windows from rest."""
    if horizon == 0:
        return 0.0
    op = toeplitz_operator(ss, horizon)
    return float(np.linalg.svd(op.matrix, compute_uv=False)[0])


def _golden_max(fun, a: float, b: float, iters: int = 80):
    """Golden-section search for the maximum of a unimodal function."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fun(x2)
    xm = 0.5 * (a + b)
    return xm, fun(xm)


def hinf_norm(sys, n_grid: int = 2000, refine_iters: int = 80) -> float:
    """Peak gain over the unit circle for a stable discrete-time system.

    Scans a uniform frequency grid on [0, pi], then sharpens the peak with a
    golden-section search on the bracketing interval. The result is a tight
    lower bound on the true norm; the grid is dense enough for the lightly
    resonant systems handled here.
    """
    if n_grid < 64:
        raise DdissError(f"frequency grid needs at least 64 points, got {n_grid}")
    if isinstance(sys, StateSpace):
        if sys.time != "dt":
            raise DimensionMismatch("hinf_norm expects a discrete-time system")
        if not sys.is_stable():
            raise UnstableSystem(
                f"spectral radius {sys.spectral_abscissa():.6f} is not inside the unit circle"
            )
        eye = np.eye(sys.n_x)

        def gain(theta: float) -> float:
            z = np.exp(1j * theta)
            g = sys.C @ np.linalg.solve(z * eye - sys.A, sys.B) + sys.D
            return float(np.linalg.svd(g, compute_uv=False)[0])

    else:
        mat = sys if isinstance(sys, RationalMatrix) else RationalMatrix([[sys]])
        if not mat.is_stable():
            raise UnstableSystem("transfer function has poles on or outside the unit circle")

        def gain(theta: float) -> float:
            g = np.atleast_2d(mat(np.exp(1j * theta)))
            return float(np.linalg.svd(g, compute_uv=False)[0])

    thetas = np.linspace(0.0, np.pi, n_grid)
    vals = np.array([gain(t) for t in thetas])
    k = int(np.argmax(vals))  # first index wins ties, favoring smaller theta
    best = vals[k]
    lo = thetas[max(k - 1, 0)]
    hi = thetas[min(k + 1, n_grid - 1)]
    if hi > lo:
        _, refined = _golden_max(gain, lo, hi, refine_iters)
        best = max(best, refined)
    return float(best)


def build_extended_state(d: DataDictionary, depth: int) -> Trajectory:
    """Past-window state sequence built purely from recorded data.

    For each time k = depth..N-1 the sample stacks the previous ``depth``
    input samples followed by the previous ``depth`` output samples.
    """
    if depth < 1:
        raise DimensionMismatch(f"depth must be >= 1, got {depth}")
    if depth >= d.length:
        raise HorizonTooLong(f"depth {depth} leaves no samples in a record of {d.length}")
    count = d.length - depth
    chi = np.empty((count, depth * (d.n_u + d.n_y)))
    for i in range(count):
        chi[i, : depth * d.n_u] = d.u.samples[i : i + depth].reshape(-1)
        chi[i, depth * d.n_u :] = d.y.samples[i : i + depth].reshape(-1)
    return Trajectory(chi)


def check_extended_rank(
    d: DataDictionary, depth: int, rank_tol: float = DEFAULT_RANK_TOL
) -> bool:
    """Full-rank test for the current-input / past-window sample matrix.

    The stacked matrix [u(k); chi(k)] over k = depth..N-1 must reach rank
    n_u + depth * (n_u + n_y) for the past window to act as a state with
    freely assignable input. Once depth exceeds the system lag the samples
    satisfy extra linear relations and the test necessarily fails.
    """
    chi = build_extended_state(d, depth)
    stacked = np.hstack([d.u.samples[depth:], chi.samples]).T
    return numerical_rank(stacked, rank_tol) == stacked.shape[0]


def realize(r) -> StateSpace:
    """Controllable canonical realization of a proper transfer function.

    Accepts a scalar Rational or a RationalMatrix; matrix inputs get an
    entrywise realization joined by direct sum, which is not minimal but is
    exact.
    """
    if isinstance(r, Rational):
        r = RationalMatrix([[r]])
    p, m = r.shape
    blocks = []
    for i in range(p):
        for j in range(m):
            e = r.entry(i, j)
            if not e.is_proper:
                raise DimensionMismatch(
                    f"entry ({i}, {j}) is improper; only causal systems can be realized"
                )
            blocks.append((i, j, _realize_siso(e)))
    n_total = sum(b[2][0].shape[0] for b in blocks)
    A = np.zeros((n_total, n_total))
    B = np.zeros((n_total, m))
    C = np.zeros((p, n_total))
    D = np.zeros((p, m))
    at = 0
    for i, j, (a, b, c, d) in blocks:
        n = a.shape[0]
        A[at : at + n, at : at + n] = a
        B[at : at + n, j] = b
        C[i, at : at + n] = c
        D[i, j] = d
        at += n
    return StateSpace(A=A, B=B, C=C, D=D, time="dt")


def _realize_siso(e: Rational):
    den = e.den
    n = den.degree
    if n == 0:
        return np.zeros((0, 0)), np.zeros(0), np.zeros(0), float(e.num.coeffs[0] / den.coeffs[0])
    num = np.zeros(n + 1)
    num[: e.num.degree + 1] = e.num.coeffs
    d = num[n]  # den is monic, so the feedthrough is the leading numerator coeff
    strict = num[:n] - d * den.coeffs[:n]
    a = np.zeros((n, n))
    if n > 1:
        a[: n - 1, 1:] = np.eye(n - 1)
    a[n - 1, :] = -den.coeffs[:n]
    b = np.zeros(n)
    b[n - 1] = 1.0
    return a, b, strict, d


def ss_to_rational(ss: StateSpace, tol: float = 1e-9) -> RationalMatrix:
    """Transfer function of a discrete-time realization.

    The common denominator is the characteristic polynomial; numerators are
    recovered by sampling G(z) det(zI - A) on a circle enclosing the spectrum
    and inverting the FFT. Common factors cancel in the Rational reduction.
    """
    if ss.time != "dt":
        raise DimensionMismatch("ss_to_rational expects a discrete-time system")
    n = ss.n_x
    den = Poly(np.poly(ss.A)[::-1].real) if n > 0 else Poly([1.0])
    npts = n + 2
    radius = 2.0 * max(1.0, float(np.max(np.abs(np.linalg.eigvals(ss.A))) if n else 1.0))
    pts = radius * np.exp(2j * np.pi * np.arange(npts) / npts)
    eye = np.eye(n)
    vals = np.empty((npts, ss.n_y, ss.n_u), dtype=complex)
    for k, z in enumerate(pts):
        g = ss.C @ np.linalg.solve(z * eye - ss.A, ss.B) + ss.D if n else ss.D
        vals[k] = g * den(z)
    coeffs = np.fft.fft(vals, axis=0) / npts
    scale = radius ** np.arange(npts)
    coeffs = (coeffs.T / scale).T.real  # undo the circle radius per power
    entries = []
    for i in range(ss.n_y):
        row = []
        for j in range(ss.n_u):
            c = coeffs[: n + 1, i, j].copy()
            top = max(np.max(np.abs(c)), np.max(np.abs(den.coeffs)))
            c[np.abs(c) <= tol * top] = 0.0
            row.append(Rational(Poly(c), den))
        entries.append(row)
    return RationalMatrix(entries)


def _as_static_controller(k, time: str) -> StateSpace:
    """Wrap a gain matrix (or scalar) as a zero-state system."""
    if isinstance(k, StateSpace):
        return k
    gain = np.atleast_2d(np.asarray(k, dtype=float))
    return StateSpace(
        A=np.zeros((0, 0)),
        B=np.zeros((0, gain.shape[0])),
        C=np.zeros((gain.shape[0], 0)),
        D=gain,
        time=time,
    )


def _ss_lft_lower(f: StateSpace, k: StateSpace) -> StateSpace:
    # meas rows (bottom of f's outputs) feed k; ctrl cols (right of f's
    # inputs) are driven by k, so the block heights come from k's own shape
    meas, ctrl = k.n_u, k.n_y
    if f.n_y <= meas or f.n_u <= ctrl:
        raise DimensionMismatch(
            f"plant with {f.n_u} inputs / {f.n_y} outputs cannot close a "
            f"controller reading {meas} and driving {ctrl} channels"
        )
    nw = f.n_u - ctrl
    nz = f.n_y - meas
    B1, B2 = f.B[:, :nw], f.B[:, nw:]
    C1, C2 = f.C[:nz], f.C[nz:]
    D11, D12 = f.D[:nz, :nw], f.D[:nz, nw:]
    D21, D22 = f.D[nz:, :nw], f.D[nz:, nw:]
    loop = np.eye(meas) - D22 @ k.D
    if np.linalg.matrix_rank(loop) < meas or np.linalg.cond(loop) > 1e12:
        raise IllPosedInterconnection("I - D22*Dk is numerically singular")
    R = np.linalg.inv(loop)
    # y = R (C2 x + D22 Ck xk + D21 w), u = Ck xk + Dk y
    A = np.block(
        [
            [f.A + B2 @ k.D @ R @ C2, B2 @ (k.C + k.D @ R @ D22 @ k.C)],
            [k.B @ R @ C2, k.A + k.B @ R @ D22 @ k.C],
        ]
    )
    B = np.vstack([B1 + B2 @ k.D @ R @ D21, k.B @ R @ D21])
    C = np.hstack([C1 + D12 @ k.D @ R @ C2, D12 @ (k.C + k.D @ R @ D22 @ k.C)])
    D = D11 + D12 @ k.D @ R @ D21
    return StateSpace(A=A, B=B, C=C, D=D, time=f.time)


def ss_lft(f: StateSpace, k, kind: str = "lower") -> StateSpace:
    """Feedback interconnection of a partitioned plant with a controller.

    ``kind="lower"``: the last ``k.n_u`` plant outputs feed the controller
    and the last ``k.n_y`` plant inputs are driven by it; the remaining
    (leading) channels stay external. ``kind="upper"`` closes the leading
    channels instead. ``k`` may be a StateSpace or a constant gain matrix;
    a zero gain recovers the open (1, 1) block of the partition.
    """
    k = _as_static_controller(k, f.time)
    if f.time != k.time:
        raise DimensionMismatch("cannot interconnect systems on different time axes")
    if kind == "lower":
        return _ss_lft_lower(f, k)
    if kind != "upper":
        raise DimensionMismatch(f"kind must be 'lower' or 'upper', got {kind!r}")
    meas, ctrl = k.n_u, k.n_y
    if f.n_y <= meas or f.n_u <= ctrl:
        raise DimensionMismatch(
            f"plant with {f.n_u} inputs / {f.n_y} outputs cannot close a "
            f"controller reading {meas} and driving {ctrl} channels"
        )
    rows = list(range(meas, f.n_y)) + list(range(meas))
    cols = list(range(ctrl, f.n_u)) + list(range(ctrl))
    permuted = StateSpace(
        A=f.A,
        B=f.B[:, cols],
        C=f.C[rows],
        D=f.D[np.ix_(rows, cols)],
        time=f.time,
    )
    return _ss_lft_lower(permuted, k)


def random_stable_system(
    n_u: int, n_x: int, n_y: int, seed: int, spectral_radius: float = 0.8
) -> StateSpace:
    """Random discrete-time system with the spectrum rescaled inside the circle."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n_x, n_x))
    rho = np.max(np.abs(np.linalg.eigvals(A)))
    if rho > 0:
        A *= spectral_radius / rho
    return StateSpace(
        A=A,
        B=rng.standard_normal((n_x, n_u)),
        C=rng.standard_normal((n_y, n_x)),
        D=rng.standard_normal((n_y, n_u)),
        time="dt",
    )


def measured_lag(ss: StateSpace, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Smallest window length whose observability map reaches full rank."""
    if ss.n_x == 0:
        return 0
    target = numerical_rank(toeplitz_operator(ss, ss.n_x).observability, rank_tol)
    for depth in range(1, ss.n_x + 1):
        obs = toeplitz_operator(ss, depth).observability
        if numerical_rank(obs, rank_tol) == target:
            return depth
    return ss.n_x
