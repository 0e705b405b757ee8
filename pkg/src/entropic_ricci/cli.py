"""Command-line front end: chain files, analysis reports and parameter sweeps.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for bad
input (unreadable or invalid chain files, bad arguments).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chain import MarkovTriple, build_triple, spectral_gap
from .curvature import CurvatureConfig
from .errors import ParseError, RicciError, ValidationError
from .families import FAMILIES, make_family
from .inequalities import (
    EXACT_CUT_LIMIT,
    MLSIConfig,
    buser_constant,
    cheeger,
    inequality_report,
    mixing_time_bound,
    mixing_time_exact,
    mlsi_estimate,
)
from .metric import diameter_upper
from .report import _jsonable
from .verifier import CHECKS, VerifierConfig, certified_kappa, entropy_decay_rate, run_all_checks

log = logging.getLogger(__name__)

CSV_COLUMNS = ("param", "|X|", "kappa", "lambda1", "h", "mlsi", "D_upper",
               "liyau_slack", "buser_slack", "mixing_exact", "mixing_bound")
FAMILY_PARAMS = {"p": float, "q": float, "L": int, "d": int, "n": int, "K": int, "density": float}


# --- chain files ----------------------------------------------------------------------


def _field(doc: dict, name: str, path):
    if name not in doc:
        raise ParseError(f"{path}: missing field '{name}'")
    return doc[name]


def _matrix(value, name: str, path, size: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != size:
        raise ParseError(f"{path}: field '{name}' must be a list of {size} rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != size:
            raise ParseError(f"{path}: field '{name}' row {i} must have {size} entries")
        try:
            rows.append([float(v) for v in row])
        except (TypeError, ValueError):
            raise ParseError(f"{path}: field '{name}' row {i} has a non-numeric entry") from None
    return np.array(rows, dtype=float).reshape(size, size)


def parse_chain_document(text: str, path="<chain>") -> tuple[MarkovTriple, dict]:
    """Parse chain JSON text into ``(triple, metadata)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    states = _field(doc, "states", path)
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states) or not states:
        raise ParseError(f"{path}: field 'states' must be a non-empty list of strings")
    rates = _matrix(_field(doc, "rates", path), "rates", path, len(states))
    pi = doc.get("pi")
    if pi is not None:
        if not isinstance(pi, list) or len(pi) != len(states):
            raise ParseError(f"{path}: field 'pi' must be a list of {len(states)} numbers")
        try:
            pi = [float(v) for v in pi]
        except (TypeError, ValueError):
            raise ParseError(f"{path}: field 'pi' has a non-numeric entry") from None
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict) or not all(isinstance(v, str) for v in metadata.values()):
        raise ParseError(f"{path}: field 'metadata' must map strings to strings")
    extra = set(doc) - {"states", "rates", "pi", "metadata"}
    if extra:
        raise ParseError(f"{path}: unknown fields {sorted(extra)}")
    try:
        T = build_triple(states, rates, pi)
    except (RicciError, ValueError) as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return T, metadata


def parse_chain_file(path) -> MarkovTriple:
    """Read and validate a chain JSON file."""
    return read_chain_file(path)[0]


def read_chain_file(path) -> tuple[MarkovTriple, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    return parse_chain_document(text, path)


def emit_chain(T: MarkovTriple, metadata: dict | None = None) -> str:
    """Canonical JSON for a chain; parsing it back and emitting again gives the same bytes."""
    doc = {
        "states": [str(s) for s in T.states],
        "rates": T.rates.tolist(),
        "pi": T.pi.tolist(),
        "metadata": dict(sorted((metadata or {}).items())),
    }
    return json.dumps(doc, indent=2) + "\n"


# --- analysis -----------------------------------------------------------------------------


def _verifier_config(args) -> VerifierConfig:
    checks = None
    if args.checks and args.checks != "all":
        checks = tuple(c.strip() for c in args.checks.split(",") if c.strip())
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise ParseError(f"unknown checks {unknown}; choose from {', '.join(CHECKS)}")
    return VerifierConfig(
        seed=args.seed,
        steps=args.steps,
        checks=checks,
        curvature=CurvatureConfig(starts=args.starts, seed=args.seed),
    )


def _family_params(args, override: dict | None = None) -> dict:
    params = {k: getattr(args, k) for k in FAMILY_PARAMS if getattr(args, k, None) is not None}
    if args.family == "random_reversible":
        params["seed"] = args.family_seed
    params.update(override or {})
    return params


def _load(args, override=None) -> tuple[MarkovTriple, dict]:
    if args.chain:
        T, meta = read_chain_file(args.chain)
        return T, {"chain_file": str(args.chain), "metadata": meta}
    params = _family_params(args, override)
    try:
        T = make_family(args.family, **params)
    except (RicciError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc
    return T, {"family": args.family, "params": params}


def analyze(T: MarkovTriple, cfg: VerifierConfig, starts: int = 16) -> dict:
    """Curvature estimate, inequality constants and all checks as a JSON-ready dict."""
    suite = run_all_checks(T, cfg)
    kappa = suite.kappa
    ineq = inequality_report(T, kappa, mlsi_cfg=MLSIConfig(starts=starts, seed=cfg.seed))
    return {
        "chain": {"n": T.n, "q_star": T.q_star, "pi_star": T.pi_star, "states": [str(s) for s in T.states]},
        "curvature": {**suite.estimate.to_dict(), "kappa_certified": kappa},
        "inequalities": ineq.to_dict(),
        "checks": [r.to_dict() for r in suite.reports],
        "passed": suite.passed,
    }


def summary_row(T: MarkovTriple, cfg: VerifierConfig, param="", eps: float = 0.01, starts: int = 16) -> dict:
    """One CSV row of headline constants."""
    _, _, kappa = certified_kappa(T, cfg)
    lam = spectral_gap(T)
    D = diameter_upper(T)
    h = cheeger(T, "exact" if T.n <= EXACT_CUT_LIMIT else "anneal")
    mlsi = mlsi_estimate(T, MLSIConfig(starts=starts, seed=cfg.seed))
    rate = entropy_decay_rate(T, list(np.geomspace(0.01, 20.0, 60) / lam))
    buser = h - buser_constant(max(kappa, 0.0), lam, T.q_star) if kappa >= -1e-6 else math.nan
    return {
        "param": param,
        "|X|": T.n,
        "kappa": kappa,
        "lambda1": lam,
        "h": h,
        "mlsi": mlsi,
        "D_upper": D,
        "liyau_slack": lam - 1.0 / (math.e * D * D),
        "buser_slack": buser,
        "mixing_exact": mixing_time_exact(T, eps),
        "mixing_bound": mixing_time_bound(D, rate, eps),
    }


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _provenance(args, source) -> dict:
    return {
        "tool": "entropic_ricci",
        "version": __version__,
        "seed": args.seed,
        "steps": args.steps,
        "starts": args.starts,
        "checks": args.checks,
        "source": source,
    }


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run_analyze(args) -> int:
    T, source = _load(args)
    cfg = _verifier_config(args)
    if args.emit == "csv":
        _write(rows_to_csv([summary_row(T, cfg, "", args.eps, args.starts)]), args.out)
        return 0
    report = analyze(T, cfg, args.starts)
    report["provenance"] = _provenance(args, source)
    _write(_dumps(report), args.out)
    return 0 if report["passed"] else 1


def parse_range(text: str) -> list[int]:
    """``"3..10"`` (inclusive) or a comma list ``"3,5,8"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ParseError(f"bad range {text!r}; use A..B or a comma list") from None


def run_sweep(args) -> int:
    if not args.family:
        raise ParseError("sweep needs --family")
    ranged = [k for k in FAMILY_PARAMS if isinstance(getattr(args, k, None), str)]
    if len(ranged) != 1:
        raise ParseError("sweep needs exactly one parameter given as a range, e.g. --L 3..10")
    name = ranged[0]
    values = parse_range(getattr(args, name))
    setattr(args, name, None)
    cfg = _verifier_config(args)
    rows = []
    for v in values:
        T, _ = _load(args, {name: v})
        rows.append(summary_row(T, cfg, v, args.eps, args.starts))
    if args.emit == "json":
        _write(_dumps({"provenance": _provenance(args, {"family": args.family, "sweep": name}),
                       "rows": rows}), args.out)
    else:
        _write(rows_to_csv(rows), args.out)
    return 0


def _param_type(kind, allow_range):
    def conv(text):
        if allow_range and (".." in text or "," in text):
            return text
        try:
            return kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {kind.__name__}, got {text!r}") from None

    return conv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entropic-ricci", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("analyze", "curvature, constants and all checks for one chain"),
                           ("sweep", "one CSV row per value of a family parameter")):
        p = sub.add_parser(name, help=helptext)
        src = p.add_mutually_exclusive_group(required=name == "analyze")
        src.add_argument("--chain", type=Path, help="chain JSON file")
        src.add_argument("--family", choices=FAMILIES)
        for param, kind in FAMILY_PARAMS.items():
            p.add_argument(f"--{param}", type=_param_type(kind, name == "sweep" and kind is int))
        p.add_argument("--family-seed", type=int, default=0, help="seed of random_reversible")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--steps", type=int, default=32, help="time steps of the transport solver")
        p.add_argument("--starts", type=int, default=16, help="random starts of the optimisers")
        p.add_argument("--checks", default="all", help="comma-separated check ids or 'all'")
        p.add_argument("--eps", type=float, default=0.01, help="mixing-time accuracy for CSV rows")
        p.add_argument("--out", type=Path)
        p.add_argument("--emit", choices=("json", "csv"), default="json" if name == "analyze" else "csv")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return run_analyze(args)
        return run_sweep(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
