"""Command-line front end: diagnose, check, gain, reproduce, simulate.

Exit codes are a stable contract: 0 success (or certified dissipative),
1 not certified / no finite gain, 2 malformed input file or arguments,
3 violated precondition, 4 dimension mismatch between inputs, 5 reproduction
outside its acceptance thresholds.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .dissipativity import (
    DEFAULT_BISECT_TOL,
    DEFAULT_PSD_TOL,
    SupplyRate,
    check_closed_loop_dissipativity,
    assemble_closed_loop_B,
    build_closed_loop_lfr,
    check_data_only_dissipativity,
    data_only_l2_gain,
    finite_horizon_l2_gain_dd,
)
from .errors import DdissError, NoFiniteGain, ParseError
from .experiments import (
    ExperimentConfig,
    run_example1,
    run_example2,
    run_fig1,
)
from .fileio import (
    load_experiment_overrides,
    load_supply,
    load_system,
    write_certificate,
)
from .lti import StateSpace, finite_horizon_gain_mb, realize, simulate
from .polymat import IoRepresentation, Rational
from .signals import (
    DEFAULT_RANK_TOL,
    DataDictionary,
    Trajectory,
    build_hankel,
    check_fundamental_rank,
    is_persistently_exciting,
    load_dictionary,
    numerical_rank,
    save_dictionary,
)


def _parse_l_range(text: str):
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError as exc:
        raise ParseError(f"--L-range must look like lo:hi, got {text!r}") from exc
    if lo > hi:
        raise ParseError(f"--L-range is empty: {text}")
    return lo, hi


def _l_values(args):
    if args.L is not None and args.L_range is not None:
        raise ParseError("give either --L or --L-range, not both")
    if args.L is not None:
        return [args.L]
    if args.L_range is not None:
        lo, hi = _parse_l_range(args.L_range)
        return list(range(lo, hi + 1))
    raise ParseError("a window length is required: use --L or --L-range")


def _load_model(path):
    model = load_system(path)
    if isinstance(model, StateSpace) and model.time != "dt":
        raise ParseError(f"{path}: model must be discrete time at this point")
    return model


def cmd_diagnose(args) -> int:
    d = load_dictionary(args.data)
    L = args.L if args.L is not None else 10
    print(f"samples: {d.length}  inputs: {d.n_u}  outputs: {d.n_y}")
    pe = is_persistently_exciting(d.u, L, args.rank_tol)
    print(f"input persistently exciting at order {L}: {'yes' if pe else 'no'}")
    if args.state_dim is not None:
        ok = check_fundamental_rank(d, L, args.state_dim, args.rank_tol)
        expected = d.n_u * L + args.state_dim
        print(
            f"depth-{L} span rank reaches n_u*L + n_x = {expected}: "
            f"{'yes' if ok else 'no'}"
        )
    h = np.vstack([build_hankel(d.u, L), build_hankel(d.y, L)])
    svals = np.linalg.svd(h, compute_uv=False)
    rank = numerical_rank(h, args.rank_tol)
    print(f"stacked depth-{L} window matrix: {h.shape[0]}x{h.shape[1]} rank {rank}")
    shown = ", ".join(f"{v:.3e}" for v in svals[: min(8, len(svals))])
    print(f"leading singular values: {shown}")
    return 0


def _supply_for(args, n_w: int, n_z: int) -> SupplyRate:
    if args.supply is not None:
        supply = load_supply(args.supply, n_w=n_w, n_z=n_z)
        if args.gamma is not None:
            raise ParseError("give either --supply or --gamma, not both")
        return supply
    if args.gamma is not None:
        return SupplyRate.l2_gain(args.gamma, n_w=n_w, n_z=n_z)
    raise DdissError("a supply rate is required: use --supply or --gamma")


def cmd_check(args) -> int:
    d = load_dictionary(args.data)
    L = args.L
    if L is None:
        raise ParseError("check needs a window length --L")
    nu = args.nu if args.nu is not None else 0
    lag_bound = args.lag_bound if args.lag_bound is not None else nu
    if args.model is not None:
        m_io = _load_model(args.model)
        if not isinstance(m_io, IoRepresentation):
            raise ParseError(
                f"{args.model}: check needs an io interconnection model"
            )
        supply = _supply_for(
            args, m_io.channel_size("w", "in"), m_io.channel_size("z", "out")
        )
        lfr = build_closed_loop_lfr(d, m_io, L, nu, lag_bound)
        cert = check_closed_loop_dissipativity(
            assemble_closed_loop_B(lfr), supply, L, nu, args.rank_tol, args.psd_tol
        )
    else:
        supply = _supply_for(args, d.n_u, d.n_y)
        cert = check_data_only_dissipativity(
            d, supply, L, nu, args.rank_tol, args.psd_tol,
            plant_lag_bound=args.lag_bound,
        )
    text = write_certificate(cert, args.out)
    sys.stdout.write(text)
    return 0 if cert.dissipative else 1


def cmd_gain(args) -> int:
    d = load_dictionary(args.data)
    l_values = _l_values(args)
    nu = args.nu if args.nu is not None else 0
    lag_bound = args.lag_bound if args.lag_bound is not None else nu
    model = _load_model(args.model) if args.model is not None else None
    interconnection = model if isinstance(model, IoRepresentation) else None
    oracle_ss = None
    if args.with_oracle:
        if model is None or interconnection is not None:
            raise DdissError(
                "--with-oracle needs --model pointing at a tf or ss reference"
            )
        oracle_ss = realize(model) if isinstance(model, Rational) else model
    header = "L,gamma_dd" + (",gamma_mb" if oracle_ss is not None else "")
    lines = [header]
    hit_infeasible = False
    for L in l_values:
        try:
            if interconnection is not None:
                g = finite_horizon_l2_gain_dd(
                    d, horizon=L, prefix=nu, m_io=interconnection,
                    plant_lag_bound=lag_bound, rank_tol=args.rank_tol,
                    psd_tol=args.psd_tol, bisect_tol=args.bisect_tol,
                )
            else:
                g = data_only_l2_gain(
                    d, L, nu, rank_tol=args.rank_tol, psd_tol=args.psd_tol,
                    bisect_tol=args.bisect_tol, plant_lag_bound=args.lag_bound,
                )
            cell = repr(g)
        except NoFiniteGain:
            hit_infeasible = True
            cell = "inf"
        if oracle_ss is not None:
            cell += f",{finite_horizon_gain_mb(oracle_ss, L - nu)!r}"
        lines.append(f"{L},{cell}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 1 if hit_infeasible else 0


def _reproduce_example1(cfg: ExperimentConfig, lines: list):
    rep = run_example1(cfg)
    dd, mb = rep.column("gamma_dd"), rep.column("gamma_mb")
    peak = float(rep.column("hinf")[0])
    checks = []
    hinf_ok = abs(peak - 1.0428) <= 1e-3
    checks.append(("peak gain 1.0428 within 1e-3", hinf_ok, f"got {peak!r}"))
    live = mb > 1e-12
    rel = float(np.max(np.abs(dd[live] - mb[live]) / mb[live], initial=0.0))
    checks.append(("gamma_dd tracks gamma_mb within 1e-3", rel <= 1e-3, f"max {rel!r}"))
    tail = float(dd[-1])
    tail_ok = 0.95 * peak <= tail <= peak + 1e-6
    checks.append(("final gamma_dd inside [0.95, 1.0] x peak", tail_ok, f"got {tail!r}"))
    ok = all(c[1] for c in checks)
    for name, passed, detail in checks:
        lines.append(f"{name}: {'pass' if passed else 'FAIL'} ({detail})")
    if ok:
        lines.append("H-infinity ≈ 1.0428 reproduced")
    return ok, rep


def _reproduce_example2(cfg: ExperimentConfig, controller, lines: list):
    rep = run_example2(cfg, controller)
    dd, mb = rep.column("gamma_dd"), rep.column("gamma_mb")
    peak = float(rep.column("hinf")[0])
    live = mb > 1e-12
    rel = float(np.max(np.abs(dd[live] - mb[live]) / mb[live], initial=0.0))
    tail = float(dd[-1])
    checks = [
        ("gamma_dd tracks gamma_mb within 1e-3", rel <= 1e-3, f"max {rel!r}"),
        (
            "final gamma_dd within 10% of the peak gain",
            tail >= 0.9 * peak and tail <= peak + 1e-6,
            f"got {tail!r} against peak {peak!r}",
        ),
    ]
    ok = all(c[1] for c in checks)
    for name, passed, detail in checks:
        lines.append(f"{name}: {'pass' if passed else 'FAIL'} ({detail})")
    return ok, rep


def _reproduce_fig1(cfg: ExperimentConfig, lines: list):
    rep = run_fig1(cfg)
    lag = rep.lag
    fund_ok = all(bool(f) for L, f, _ in rep.rows if L >= lag)
    ext_ok = all(not bool(e) for L, _, e in rep.rows if L > lag)
    checks = [
        (f"span condition holds for every L >= measured lag {lag}", fund_ok, ""),
        (f"extended-state condition fails for every L > {lag}", ext_ok, ""),
    ]
    ok = all(c[1] for c in checks)
    for name, passed, detail in checks:
        suffix = f" ({detail})" if detail else ""
        lines.append(f"{name}: {'pass' if passed else 'FAIL'}{suffix}")
    return ok, rep


REPRODUCTION_DEFAULTS = {
    "example1": ExperimentConfig(seed=0, n_samples=300, l_range=(3, 40), prefix=3),
    "example2": ExperimentConfig(seed=0, n_samples=400, l_range=(15, 60), prefix=15),
    "fig1": ExperimentConfig(seed=0, n_samples=400, l_range=(1, 20), prefix=0),
}


def cmd_reproduce(args) -> int:
    if args.name not in REPRODUCTION_DEFAULTS:
        raise ParseError(
            f"unknown reproduction {args.name!r}; pick one of "
            f"{', '.join(sorted(REPRODUCTION_DEFAULTS))}"
        )
    base = REPRODUCTION_DEFAULTS[args.name]
    overrides = {}
    if args.config is not None:
        overrides.update(load_experiment_overrides(args.config))
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg_kwargs = dict(
        seed=base.seed, n_samples=base.n_samples, l_range=base.l_range,
        prefix=base.prefix,
    )
    cfg_kwargs.update(overrides)
    cfg_kwargs.pop("output_path", None)
    cfg = ExperimentConfig(**cfg_kwargs)
    controller = None
    if args.controller is not None:
        controller = load_system(args.controller)
        if not isinstance(controller, Rational):
            raise ParseError(f"{args.controller}: controller must be a tf system")
    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"reproduction: {args.name}", f"seed: {cfg.seed}"]
    if args.name == "example1":
        ok, rep = _reproduce_example1(cfg, lines)
    elif args.name == "example2":
        ok, rep = _reproduce_example2(cfg, controller, lines)
    else:
        ok, rep = _reproduce_fig1(cfg, lines)
    rep.write(out_dir / f"{args.name}.csv")
    lines.append(f"overall: {'pass' if ok else 'FAIL'}")
    summary = "\n".join(lines) + "\n"
    (out_dir / f"{args.name}_summary.txt").write_text(summary)
    sys.stdout.write(summary)
    return 0 if ok else 5


def cmd_simulate(args) -> int:
    if args.model is None:
        raise ParseError("simulate needs --model")
    model = _load_model(args.model)
    if isinstance(model, Rational):
        model = realize(model)
    if not isinstance(model, StateSpace):
        raise ParseError(f"{args.model}: simulate needs a tf or ss system")
    n = args.L if args.L is not None else 300
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    u = Trajectory(rng.uniform(-1.0, 1.0, size=(n, model.n_u)))
    d_out = args.out if args.out else "data.csv"
    save_dictionary(DataDictionary(u, simulate(model, u)), d_out)
    print(f"wrote {n} samples to {d_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddiss",
        description=(
            "Finite-horizon dissipativity checks that mix measured input/output "
            "data with model-based interconnection filters"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="trajectory CSV")
        p.add_argument("--L", type=int, default=None, help="window length")
        p.add_argument("--nu", type=int, default=None, help="zeroed prefix length")
        p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
        p.add_argument("--psd-tol", type=float, default=DEFAULT_PSD_TOL)
        p.add_argument("--out", default=None, help="output file")

    p = sub.add_parser("diagnose", help="excitation and rank diagnostics")
    common(p)
    p.add_argument("--state-dim", type=int, default=None)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("check", help="certify dissipativity at one window")
    common(p)
    p.add_argument("--model", default=None, help="io interconnection TOML")
    p.add_argument("--supply", default=None, help="supply TOML")
    p.add_argument("--gamma", type=float, default=None, help="l2 supply shortcut")
    p.add_argument("--lag-bound", type=int, default=None,
                   help="plant lag bound for the prefix policy (defaults to --nu)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gain", help="smallest certified l2 gain per window")
    common(p)
    p.add_argument("--L-range", default=None, help="inclusive window range lo:hi")
    p.add_argument("--model", default=None,
                   help="io interconnection, or tf/ss oracle reference")
    p.add_argument("--with-oracle", action="store_true",
                   help="append a model-based gain column (needs tf/ss --model)")
    p.add_argument("--lag-bound", type=int, default=None)
    p.add_argument("--bisect-tol", type=float, default=DEFAULT_BISECT_TOL)
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("reproduce", help="rerun a bundled study and grade it")
    p.add_argument("name", help="example1, example2 or fig1")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="TOML with an [experiment] table")
    p.add_argument("--controller", default=None, help="tf TOML (example2 only)")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("simulate", help="generate a data CSV from a model")
    p.add_argument("--model", required=True, help="tf or ss TOML")
    p.add_argument("--L", type=int, default=None, help="number of samples")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output CSV (default data.csv)")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DdissError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
