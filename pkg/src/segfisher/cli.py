"""Command-line front end: ``segfisher {info-grid,domain,efficiency,verify}``.

Exit codes: 0 ok, 2 input error, 3 empty domain, 4 verification failure.
CSV numbers use ``%.10g``; JSON numbers are shortest round-trip reprs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Optional, Sequence

import numpy as np

from segfisher import matcalc as mc
from segfisher.checks import (
    FAMILIES,
    format_report,
    max_disagreement,
    run_checks,
    segment_info_routes,
)
from segfisher.errors import SegfisherError
from segfisher.estimate import McExperiment, run_efficiency_experiment
from segfisher.gaussian import circulant_matrix, gaussian_family, tridiagonal_matrix
from segfisher.segment import (
    SegmentModel,
    ThetaInterval,
    info_theta_quadratic,
    interval_from_spectrum,
    segment_spectrum,
)
from segfisher.wishart import wishart_family
from segfisher.wishart_noncentral import nc_wishart_family

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EMPTY_DOMAIN = 3
EXIT_VERIFY = 4

ENDPOINT_MARGIN = 1e-9
GRID_COLUMNS = ("theta", "status", "J_quadratic", "J_trace", "J_logdet", "J_eigen", "max_rel_disagreement")


class InputError(Exception):
    pass


class EmptyDomainError(Exception):
    pass


# -- formatting -------------------------------------------------------------------


def fmt_csv(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return "%.10g" % x
    return str(x)


def _json_value(x: Any) -> Any:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


def dump_json(obj: Any) -> str:
    return json.dumps(_json_value(obj), indent=2, allow_nan=False) + "\n"


def dump_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_csv(v) for v in row])
    return buf.getvalue()


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- argument helpers ----------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        start, stop, count = float(a), float(b), int(n)
    except ValueError as exc:
        raise InputError(f"theta grid must be start:stop:count, got {text!r}") from exc
    if count < 1 or not (math.isfinite(start) and math.isfinite(stop)):
        raise InputError(f"invalid theta grid {text!r}")
    return np.linspace(start, stop, count)


def _matrix(path: Optional[str]) -> Optional[np.ndarray]:
    return None if path is None else mc.load_matrix(path, symmetric=True)


def _preset(name: str, d: Optional[int]) -> np.ndarray:
    if d is None:
        raise InputError("--preset needs --d")
    return circulant_matrix(d) if name == "circulant" else tridiagonal_matrix(d)


def _shape(args) -> float:
    if args.p is None:
        raise InputError(f"family {args.family} needs --p")
    return float(args.p)


def covariance_pair(args) -> tuple[np.ndarray, np.ndarray]:
    """``(C, D)`` for the Gaussian covariance / Wishart scale segment."""
    if args.preset:
        C = _preset(args.preset, args.d)
        return C, np.eye(C.shape[0])
    if args.C is not None or args.D is not None:
        if args.C is None or args.D is None:
            raise InputError("--C and --D must be given together")
        return _matrix(args.C), _matrix(args.D)
    if args.A is not None and args.B is not None:
        A, B = _matrix(args.A), _matrix(args.B)
        if args.family == "gaussian":
            return -2.0 * A, -2.0 * B
        p = _shape(args)
        return A / p, B / p
    raise InputError("give --C/--D, --A/--B or --preset")


def mean_pair(args) -> tuple[np.ndarray, np.ndarray]:
    """``(A, B)`` of the mean segment ``theta*A + B``."""
    if args.family == "ncwishart":
        if args.preset:
            A = _preset(args.preset, args.d)
            return A, np.eye(A.shape[0])
        if args.A is None or args.B is None:
            raise InputError("ncwishart needs a mean segment --A/--B (or --preset)")
        return _matrix(args.A), _matrix(args.B)
    if args.A is not None and args.B is not None and not args.preset and args.C is None:
        return _matrix(args.A), _matrix(args.B)
    C, D = covariance_pair(args)
    if args.family == "gaussian":
        return -0.5 * C, -0.5 * D
    p = _shape(args)
    return p * C, p * D


def family_model(args, d: int):
    if args.family == "gaussian":
        return gaussian_family(d)
    if args.family == "wishart":
        return wishart_family(d, _shape(args))
    if args.a is None:
        raise InputError("ncwishart needs --a")
    return nc_wishart_family(d, _shape(args), _matrix(args.a))


def anchored_domain(args) -> tuple[ThetaInterval, np.ndarray, float]:
    """Domain component containing ``--theta0`` and the spectrum at the anchor."""
    theta0 = float(args.theta0)
    if args.family is None:
        if args.C is not None or args.preset:
            C, D = covariance_pair(args)
        elif args.A is not None and args.B is not None:
            C, D = _matrix(args.A), _matrix(args.B)
        else:
            raise InputError("give --C/--D, --A/--B or --preset")
        sign = 1
    else:
        A, B = mean_pair(args)
        sign = family_model(args, A.shape[0]).mean_cone_sign
        C, D = sign * A, sign * B
    if not np.any(C):
        raise InputError("segment direction is zero")
    R = theta0 * C + D
    if not mc.is_pd(R):
        raise EmptyDomainError(f"theta0={theta0} is not inside the domain; choose another --theta0")
    lam = segment_spectrum(C, R)
    return interval_from_spectrum(theta0, lam), lam, theta0


def clamp_inside(theta: float, iv: ThetaInterval) -> tuple[float, bool]:
    """Move a requested endpoint strictly inside ``iv``; report whether it moved."""
    for end, direction in ((iv.lower, 1.0), (iv.upper, -1.0)):
        if math.isfinite(end):
            margin = ENDPOINT_MARGIN * max(1.0, abs(end))
            if abs(theta - end) <= margin:
                return end + direction * margin, True
    return theta, False


# -- commands ------------------------------------------------------------------------


def cmd_info_grid(args) -> int:
    grid = parse_grid(args.theta_grid)
    iv, _, theta0 = anchored_domain(args)
    rows = []
    if args.family in ("gaussian", "wishart"):
        C, D = covariance_pair(args)
        p = 0.5 if args.family == "gaussian" else _shape(args)
        fam = family_model(args, C.shape[0])
    else:
        A, B = mean_pair(args)
        fam = family_model(args, A.shape[0])
    for theta in grid:
        theta, clamped = clamp_inside(float(theta), iv)
        if theta not in iv:
            rows.append([theta, "out-of-domain", None, None, None, None, None])
            continue
        status = "clamped" if clamped else "ok"
        if args.family == "ncwishart":
            jq = info_theta_quadratic(SegmentModel(A, B, fam, theta0=theta), theta)
            rows.append([theta, status, jq, None, None, None, None])
            continue
        r = segment_info_routes(args.family, C, D, theta, p=p, anchor=theta0, fam=fam)
        rows.append([theta, status, r["quadratic"], r["trace"], r["logdet"], r["eigen"], max_disagreement(r)])
    if args.format == "json":
        text = dump_json({"family": args.family, "domain": [iv.lower, iv.upper], "rows": [dict(zip(GRID_COLUMNS, r)) for r in rows]})
    else:
        text = dump_csv(GRID_COLUMNS, rows)
    emit(text, args.out)
    if all(r[1] == "out-of-domain" for r in rows):
        print("error: no grid point lies inside the domain", file=sys.stderr)
        return EXIT_EMPTY_DOMAIN
    return EXIT_OK


def cmd_domain(args) -> int:
    iv, lam, theta0 = anchored_domain(args)
    if args.format == "json":
        text = dump_json({"lower": iv.lower, "upper": iv.upper, "anchor": theta0, "spectrum": lam.tolist()})
    elif args.format == "csv":
        text = dump_csv(("lower", "upper", "anchor", "spectrum"), [[iv.lower, iv.upper, theta0, " ".join(fmt_csv(x) for x in lam)]])
    else:
        text = f"{iv}\nspectrum: {' '.join(fmt_csv(float(x)) for x in lam)}\n"
    emit(text, args.out)
    return EXIT_OK


def experiment_config(args) -> dict[str, Any]:
    cfg: dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
    overrides = {
        "family": args.family,
        "p": args.p,
        "theta": args.theta,
        "n": args.n,
        "replicates": args.replicates,
        "seed": args.seed,
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("A", "B", "C", "D", "a"):
        path = getattr(args, key)
        if path is not None:
            cfg[key] = mc.matrix_to_json(_matrix(path))
            other = {"A": "C", "B": "D", "C": "A", "D": "B"}.get(key)
            cfg.pop(other, None)
    if args.u is not None:
        cfg["u"] = _load_vector(args.u)
    if args.estimator_C is not None:
        cfg["estimator_C"] = "inverseA" if args.estimator_C == "inverseA" else mc.matrix_to_json(_matrix(args.estimator_C))
    return cfg


def _load_vector(path: str) -> list[float]:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read vector {path}: {exc}") from exc
    if isinstance(obj, dict):
        obj = obj.get("data")
    return [float(v) for v in np.asarray(obj, dtype=float).reshape(-1)]


def cmd_efficiency(args) -> int:
    exp = McExperiment.from_dict(experiment_config(args))
    summary = run_efficiency_experiment(exp).to_dict()
    if args.format == "csv":
        flat = {k: v for k, v in summary.items() if k != "diagnostics"}
        flat.update({f"diag_{k}": v for k, v in summary["diagnostics"].items()})
        text = dump_csv(list(flat), [list(flat.values())])
    else:
        text = dump_json(summary)
    emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    families = FAMILIES
    if args.families:
        families = tuple(f.strip() for item in args.families for f in item.split(",") if f.strip())
        unknown = set(families) - set(FAMILIES)
        if unknown:
            raise InputError(f"unknown families: {', '.join(sorted(unknown))}")
    results = run_checks(families, variance_fault=args.inject_wrong_variance)
    if args.format == "json":
        text = dump_json(
            [{"family": r.family, "check": r.name, "residual": r.residual, "tolerance": r.tolerance, "passed": r.passed} for r in results]
        )
    else:
        text = format_report(results) + "\n"
    emit(text, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# -- parser --------------------------------------------------------------------------


def _segment_flags(sp: argparse.ArgumentParser, family_required: bool) -> None:
    sp.add_argument("--family", choices=FAMILIES, required=family_required)
    sp.add_argument("--p", type=float, help="Wishart shape parameter")
    sp.add_argument("--a", metavar="FILE", help="noncentrality matrix")
    for name, what in (("C", "covariance/scale direction"), ("D", "covariance/scale offset"), ("A", "mean direction"), ("B", "mean offset")):
        sp.add_argument(f"--{name}", metavar="FILE", help=what)
    sp.add_argument("--preset", choices=("circulant", "tridiagonal"), help="structured direction with offset I")
    sp.add_argument("--d", type=int, help="dimension for --preset")
    sp.add_argument("--theta0", type=float, default=0.0, help="anchor inside the domain (default 0)")
    sp.add_argument("--out", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segfisher", description="Fisher information of segment submodels.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("info-grid", help="J(theta) on a grid by four independent routes")
    _segment_flags(sp, True)
    sp.add_argument("--theta-grid", required=True, metavar="START:STOP:COUNT")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_info_grid)

    sp = sub.add_parser("domain", help="interval of theta keeping the segment in the domain")
    _segment_flags(sp, False)
    sp.add_argument("--format", choices=("text", "csv", "json"), default="text")
    sp.set_defaults(func=cmd_domain)

    sp = sub.add_parser("efficiency", help="Monte Carlo efficiency of theta_hat")
    sp.add_argument("--config", metavar="FILE", help="experiment JSON; flags override its fields")
    sp.add_argument("--family", choices=FAMILIES)
    sp.add_argument("--p", type=float)
    for name in ("a", "A", "B", "C", "D"):
        sp.add_argument(f"--{name}", metavar="FILE")
    sp.add_argument("--u", metavar="FILE", help="Gaussian location vector")
    sp.add_argument("--theta", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--estimator-C", dest="estimator_C", metavar="FILE|inverseA")
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp.add_argument("--out", metavar="FILE")
    sp.set_defaults(func=cmd_efficiency)

    sp = sub.add_parser("verify", help="run the cross-formula and oracle checks")
    sp.add_argument("--families", action="append", metavar="LIST", help="comma-separated subset of " + ",".join(FAMILIES))
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.add_argument("--out", metavar="FILE")
    sp.add_argument("--inject-wrong-variance", type=float, default=None, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify)
    return parser


def _join_grid_values(argv: Sequence[str]) -> list[str]:
    # "--theta-grid -0.4:0.4:5" would otherwise be read as an option
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok == "--theta-grid":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_grid_values(argv))
    try:
        return args.func(args)
    except EmptyDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_DOMAIN
    except (InputError, SegfisherError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
