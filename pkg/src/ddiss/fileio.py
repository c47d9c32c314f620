"""TOML loaders for systems and supply rates, plus certificate rendering.

System files carry a ``[system]`` table with ``type`` equal to "tf" (scalar
transfer function, ascending coefficients), "ss" (state space, row-major
matrices, continuous-time entries discretized at load when a sample time is
given), or "io" (a rational interconnection matrix with named channel
partitions). Supply files carry a ``[supply]`` table naming a preset or an
explicit quadratic form.
"""

from __future__ import annotations

from pathlib import Path

try:
    import tomllib as tomli
except ImportError:
    import tomli

from .dissipativity import Certificate, SupplyRate
from .errors import ParseError
from .lti import StateSpace, discretize_zoh
from .polymat import Poly, Rational, RationalMatrix, rational_to_io


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"no such file: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _section(doc: dict, name: str, path) -> dict:
    if name not in doc or not isinstance(doc[name], dict):
        raise ParseError(f"{path}: missing [{name}] table")
    return doc[name]


def _poly(obj, what: str) -> Poly:
    if not isinstance(obj, list) or not obj or not all(
        isinstance(v, (int, float)) for v in obj
    ):
        raise ParseError(f"{what} must be a non-empty list of numbers")
    return Poly([float(v) for v in obj])


def _rational(obj, what: str) -> Rational:
    if isinstance(obj, (int, float)):
        return Rational.constant(float(obj))
    if isinstance(obj, dict):
        if "num" not in obj or "den" not in obj:
            raise ParseError(f"{what} needs num and den coefficient lists")
        return Rational(_poly(obj["num"], f"{what}.num"), _poly(obj["den"], f"{what}.den"))
    raise ParseError(f"{what} must be a number or a {{num, den}} table")


def _matrix(obj, what: str):
    if not isinstance(obj, list) or not obj:
        raise ParseError(f"{what} must be a non-empty nested list")
    return obj


def _partition(obj, what: str) -> list:
    if not isinstance(obj, list) or not obj:
        raise ParseError(f"{what} must be a list of [name, size] pairs")
    out = []
    for item in obj:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not isinstance(item[0], str)
            or not isinstance(item[1], int)
        ):
            raise ParseError(f"{what} entries must be [name, size] pairs")
        out.append((item[0], item[1]))
    return out


def load_system(path):
    """Parse a system file; returns Rational, StateSpace or IoRepresentation."""
    doc = load_toml(path)
    sec = _section(doc, "system", path)
    kind = sec.get("type")
    if kind == "tf":
        r = _rational(
            {"num": sec.get("num"), "den": sec.get("den")}, f"{path}: tf system"
        )
        if not r.is_proper:
            raise ParseError(f"{path}: transfer function is not proper")
        return r
    if kind == "ss":
        try:
            ss = StateSpace(
                A=_matrix(sec.get("A"), "A"),
                B=_matrix(sec.get("B"), "B"),
                C=_matrix(sec.get("C"), "C"),
                D=_matrix(sec.get("D"), "D"),
                time=sec.get("time", "dt"),
            )
        except ParseError:
            raise
        except Exception as exc:
            raise ParseError(f"{path}: bad state-space data: {exc}") from exc
        if ss.time == "ct":
            if "h" not in sec:
                raise ParseError(
                    f"{path}: continuous-time system needs a sample time h"
                )
            ss = discretize_zoh(ss, float(sec["h"]))
        return ss
    if kind == "io":
        rows = _matrix(sec.get("entries"), f"{path}: entries")
        grid = [
            [_rational(e, f"{path}: entry[{i}][{j}]") for j, e in enumerate(row)]
            for i, row in enumerate(rows)
        ]
        return rational_to_io(
            RationalMatrix(grid),
            row_partition=_partition(sec.get("row_partition"), f"{path}: row_partition"),
            col_partition=_partition(sec.get("col_partition"), f"{path}: col_partition"),
        )
    raise ParseError(f"{path}: system type must be tf, ss or io, got {kind!r}")


SUPPLY_PRESETS = ("l2", "passivity", "iff-passivity", "shortage", "custom")


def load_supply(path, n_w: int = 1, n_z: int = 1) -> SupplyRate:
    """Parse a supply file; channel sizes default to the caller's values."""
    doc = load_toml(path)
    sec = _section(doc, "supply", path)
    n_w = int(sec.get("n_w", n_w))
    n_z = int(sec.get("n_z", n_z))
    kind = sec.get("type")
    if kind == "l2":
        if "gamma" not in sec:
            raise ParseError(f"{path}: l2 supply needs gamma")
        return SupplyRate.l2_gain(float(sec["gamma"]), n_w=n_w, n_z=n_z)
    if kind in ("passivity", "iff-passivity", "shortage") and n_w != n_z:
        raise ParseError(f"{path}: {kind} supply needs square channels")
    if kind == "passivity":
        return SupplyRate.passivity(n_w)
    if kind == "iff-passivity":
        if "nu_param" not in sec:
            raise ParseError(f"{path}: iff-passivity supply needs nu_param")
        return SupplyRate.input_feedforward_passivity(float(sec["nu_param"]), n_w)
    if kind == "shortage":
        if "beta" not in sec:
            raise ParseError(f"{path}: shortage supply needs beta")
        return SupplyRate.passivity_shortage(float(sec["beta"]), n_w)
    if kind == "custom":
        missing = [k for k in ("Q", "S", "R") if k not in sec]
        if missing:
            raise ParseError(f"{path}: custom supply needs Q, S and R")
        return SupplyRate(sec["Q"], sec["S"], sec["R"])
    raise ParseError(
        f"{path}: supply type must be one of {', '.join(SUPPLY_PRESETS)}, got {kind!r}"
    )


def render_certificate(cert: Certificate) -> str:
    """Plain key: value text; gamma only appears for gain-style queries."""
    lines = [f"verdict: {cert.verdict}"]
    if cert.gamma is not None:
        lines.append(f"gamma: {cert.gamma!r}")
    lines += [
        f"min_eig: {cert.min_eig!r}",
        f"nullspace_dim: {cert.nullspace_dim}",
        f"horizon: {cert.horizon}",
        f"prefix: {cert.prefix}",
        f"rank_tol: {cert.rank_tol!r}",
        f"psd_tol: {cert.psd_tol!r}",
        f"degenerate: {'true' if cert.degenerate else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def write_certificate(cert: Certificate, path=None) -> str:
    text = render_certificate(cert)
    if path is not None:
        Path(path).write_text(text)
    return text


def load_experiment_overrides(path) -> dict:
    """Read an optional [experiment] table into ExperimentConfig keywords."""
    doc = load_toml(path)
    sec = doc.get("experiment", {})
    if not isinstance(sec, dict):
        raise ParseError(f"{path}: [experiment] must be a table")
    out = {}
    for key in ("seed", "n_samples", "prefix"):
        if key in sec:
            out[key] = int(sec[key])
    if "noise" in sec:
        out["noise"] = float(sec["noise"])
    if "l_range" in sec:
        lr = sec["l_range"]
        if not (isinstance(lr, list) and len(lr) == 2):
            raise ParseError(f"{path}: l_range must be [lo, hi]")
        out["l_range"] = (int(lr[0]), int(lr[1]))
    if "output_path" in sec:
        out["output_path"] = str(sec["output_path"])
    return out
