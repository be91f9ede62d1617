"""Command-line interface: ``hyperdual <command> ...``.

Exit codes: 0 success, 1 an identity check failed, 2 invalid input, 3 a
resource cap was exceeded. Every option may also come from a JSON config file
(``--config``); flags given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classical import DEFAULT_EXACT_CAP, McParams, SpinModel, heat_capacity_exact
from .criticality import FAMILIES, ScanResult, VerdictConfig, finite_size_verdict, scan
from .duality import (
    DEFAULT_BETAS,
    DEFAULT_DBETAS,
    verify_fidelity_heat_capacity,
    verify_magnetization_energy,
    verify_partition_correspondence,
)
from .errors import HypergraphError, ResourceError
from .gf2 import DEFAULT_ENUMERATION_CAP
from .hypergraph import (
    Hypergraph,
    dual,
    ghz_ring,
    ising_square,
    read_hypergraph,
    stabilizer_spec,
    toric_code,
    write_hypergraph,
)
from .quantum import DEFAULT_DENSE_CAP, build_css, fidelity, quadratic_fidelity, verify_ground_state

EXIT_OK = 0
EXIT_IDENTITY = 1
EXIT_INVALID = 2
EXIT_RESOURCE = 3

DEFAULT_SEED = 42
SCAN_COLUMNS = ("model", "L", "T", "method", "E", "E_err", "Cv", "Cv_err", "m", "m_err", "binder", "binder_err", "seed")
FIDELITY_COLUMNS = ("beta", "F_exact", "F_quadratic", "Cv_dual", "residual")
GROUND_STATE_BETAS = (0.0, 0.5, 1.0)
FIDELITY_BETAS = (1.0,)


@dataclass(frozen=True)
class Caps:
    dense: int = DEFAULT_DENSE_CAP
    enum: int = DEFAULT_ENUMERATION_CAP
    exact: int = DEFAULT_EXACT_CAP


def parse_caps(text: str) -> Caps:
    """``dense=12,enum=30,exact=24``; omitted keys keep their defaults."""
    values = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep or key not in Caps.__dataclass_fields__:
            raise argparse.ArgumentTypeError(f"bad cap {item!r}; expected dense=, enum= or exact=")
        try:
            values[key] = int(val)
        except ValueError:
            raise argparse.ArgumentTypeError(f"cap {key} must be an integer, got {val!r}") from None
        if values[key] <= 0:
            raise argparse.ArgumentTypeError(f"cap {key} must be positive")
    return Caps(**values)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def fmt(x: float | int) -> str:
    """Locale-independent round-trip formatting (17 significant digits)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _emit(doc: dict, path: str | None, out) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats by None so documents stay valid JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


# --- commands ---------------------------------------------------------------


def summary_line(h: Hypergraph) -> str:
    spec = stabilizer_spec(h)
    return f"N={h.n_vertices} |E|={h.n_edges} M={spec.m} K={spec.k}"


def cmd_build(args, out) -> int:
    family = args.family
    if family == "from-file":
        if not args.source:
            raise ValueError("build from-file needs an input path")
        h = read_hypergraph(args.source)
    elif family == "ghz_ring":
        h = ghz_ring(_required(args.n, "--n"))
    elif family == "toric_code":
        h = toric_code(_required(args.L, "--L"))[0]
    elif family == "ising_square":
        h = ising_square(_required(args.L, "--L"))
    else:
        raise ValueError(f"unknown family {family!r}")
    if args.out:
        write_hypergraph(h, args.out)
    else:
        json.dump(h.to_document(), out)
        out.write("\n")
    print(summary_line(h), file=sys.stderr if not args.out else out)
    return EXIT_OK


def _required(value, flag: str) -> int:
    if value is None:
        raise ValueError(f"{flag} is required for this family")
    return value


def cmd_dual(args, out) -> int:
    h = dual(read_hypergraph(args.input))
    if args.out:
        write_hypergraph(h, args.out)
    else:
        json.dump(h.to_document(), out)
        out.write("\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    caps: Caps = args.caps
    h = read_hypergraph(args.input)
    betas = args.betas or list(DEFAULT_BETAS)
    dbetas = args.dbetas or list(DEFAULT_DBETAS)
    fid_betas = args.fidelity_betas or list(FIDELITY_BETAS)
    ground = [verify_ground_state(h, b, caps.dense) for b in GROUND_STATE_BETAS]
    corr = verify_partition_correspondence(h, betas, caps.exact, caps.enum)
    mag = verify_magnetization_energy(h, betas, caps.exact, caps.enum)
    fid = [verify_fidelity_heat_capacity(h, b, dbetas, caps.exact, caps.enum) for b in fid_betas]
    passed = corr.passed and mag.passed and all(g.passed for g in ground) and all(f.passed for f in fid)
    doc = {
        "hypergraph": {"n": h.n_vertices, "n_edges": h.n_edges, "summary": summary_line(h)},
        "partition_correspondence": corr.to_dict(),
        "magnetization_energy": mag.to_dict(),
        "fidelity_heat_capacity": [f.to_dict() for f in fid],
        "ground_state": [g.to_dict() for g in ground],
        "passed": passed,
    }
    _emit(_clean(doc), args.report, out)
    return EXIT_OK if passed else EXIT_IDENTITY


def cmd_fidelity(args, out) -> int:
    caps: Caps = args.caps
    h = read_hypergraph(args.input)
    betas = args.betas or [b for b in DEFAULT_BETAS if b > 0]
    if any(b <= 0 for b in betas):
        raise ValueError("fidelity needs positive beta values")
    css = build_css(h, caps.enum)
    model = SpinModel(dual(h))
    rows = []
    for b in betas:
        f_exact = fidelity(css, b, args.dbeta)
        f_quad = quadratic_fidelity(css, b, args.dbeta)
        cv = heat_capacity_exact(model, b, caps.exact)
        rows.append((b, f_exact, f_quad, cv, abs(f_exact - f_quad)))
    _write_csv(FIDELITY_COLUMNS, rows, args.out, out)
    return EXIT_OK


def _write_csv(header: Sequence[str], rows, path: str | None, out) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())


def scan_rows(result: ScanResult):
    for L in result.sizes:
        for k, t in enumerate(result.temperatures):
            o = result.curves[L][k]
            yield (
                result.family,
                L,
                t,
                result.methods[L][k],
                o.energy,
                o.energy_err,
                o.heat_capacity,
                o.heat_capacity_err,
                o.magnetization,
                o.magnetization_err,
                o.binder,
                o.binder_err,
                result.seeds[L][k],
            )


def _temperature_grid(args) -> list[float]:
    if args.temps:
        return args.temps
    if args.nt < 2:
        raise ValueError("--nt must be at least 2")
    return [float(t) for t in np.linspace(args.tmin, args.tmax, args.nt)]


def _run_scan(args) -> ScanResult:
    if not args.sizes:
        raise ValueError("--sizes is required")
    params = McParams(
        n_equil=args.equil, n_sweeps=args.sweeps, measure_every=args.every, algorithm=args.algorithm
    )
    return scan(
        args.family,
        args.sizes,
        _temperature_grid(args),
        mc_params=params,
        master_seed=args.seed,
        threads=args.threads,
        exact_cap=args.caps.exact,
    )


def cmd_scan(args, out) -> int:
    result = _run_scan(args)
    _write_csv(SCAN_COLUMNS, scan_rows(result), args.out, out)
    return EXIT_OK


def cmd_diagnose(args, out) -> int:
    result = _run_scan(args)
    _write_csv(SCAN_COLUMNS, scan_rows(result), args.out, out)
    config = VerdictConfig(growth_per_doubling=args.growth, z=args.z)
    verdict = finite_size_verdict(result, config)
    doc = {"model": result.family, "sizes": result.sizes, "seed": args.seed, **verdict.to_dict()}
    _emit(_clean(doc), args.verdict, out if args.out else sys.stderr)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default 42)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for scan cells")
    common.add_argument("--caps", type=parse_caps, default=Caps(), help="e.g. dense=12,enum=30,exact=24")
    common.add_argument("--config", help="JSON file with option defaults")

    parser = argparse.ArgumentParser(prog="hyperdual", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", parents=[common], help="write a hypergraph document")
    p.add_argument("family", choices=["ghz_ring", "toric_code", "ising_square", "from-file"])
    p.add_argument("source", nargs="?", help="input document for from-file")
    p.add_argument("--n", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("-o", "--out")
    p.set_defaults(handler=cmd_build)

    p = sub.add_parser("dual", parents=[common], help="write the dual hypergraph")
    p.add_argument("input")
    p.add_argument("-o", "--out")
    p.set_defaults(handler=cmd_dual)

    p = sub.add_parser("verify", parents=[common], help="check the quantum/classical identities")
    p.add_argument("input")
    p.add_argument("--betas", type=_float_list)
    p.add_argument("--dbetas", type=_float_list)
    p.add_argument("--fidelity-betas", type=_float_list, help="beta values of the fidelity check (default 1)")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("fidelity", parents=[common], help="exact vs quadratic fidelity CSV")
    p.add_argument("input")
    p.add_argument("--betas", type=_float_list)
    p.add_argument("--dbeta", type=float, default=1e-2)
    p.add_argument("-o", "--out")
    p.set_defaults(handler=cmd_fidelity)

    for name, handler, text in (
        ("scan", cmd_scan, "temperature scan CSV"),
        ("diagnose", cmd_diagnose, "temperature scan CSV plus criticality verdict"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("family", choices=sorted(FAMILIES))
        p.add_argument("--sizes", type=_int_list, help="comma-separated sizes (at least 3)")
        p.add_argument("--temps", type=_float_list, help="explicit temperature grid")
        p.add_argument("--tmin", type=float, default=1.8)
        p.add_argument("--tmax", type=float, default=2.8)
        p.add_argument("--nt", type=int, default=41)
        p.add_argument("--sweeps", type=int, default=McParams.n_sweeps)
        p.add_argument("--equil", type=int, default=McParams.n_equil)
        p.add_argument("--every", type=int, default=McParams.measure_every)
        p.add_argument("--algorithm", choices=["auto", "metropolis", "wolff"], default="auto")
        p.add_argument("-o", "--out", help="CSV path (stdout if omitted)")
        if name == "diagnose":
            p.add_argument("--verdict", help="verdict document path")
            p.add_argument("--growth", type=float, default=VerdictConfig.growth_per_doubling)
            p.add_argument("--z", type=float, default=VerdictConfig.z)
        p.set_defaults(handler=handler)
    parser.commands = sub.choices  # type: ignore[attr-defined]
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    with open(args.config, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError("config file must hold a JSON object")
    if "caps" in config:
        caps = config["caps"]
        text = ",".join(f"{k}={v}" for k, v in caps.items()) if isinstance(caps, dict) else str(caps)
        config["caps"] = parse_caps(text)
    # config values become defaults, so explicit flags still win
    parser.commands[args.command].set_defaults(**config)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        if args.threads < 1:
            raise ValueError("--threads must be >= 1")
        return args.handler(args, out)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (HypergraphError, ValueError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:
        # argparse usage errors
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
