"""Command-line front end.

Every command writes one document: JSON ``{"config", "results", "runtime_ms"}``
or CSV with a ``# config=`` comment line, a header row and data rows. The
config block holds every resolved argument that affects the numbers, so
``relucond replay --config report.json`` reruns the same computation.

Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure,
3 a ``--check`` acceptance test failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from .errors import InputError, NumericalError
from .estimators import sampled_bilip, sqrt2_certificate
from .exact import MAX_COLS, MAX_ROWS, bound_readings_check, brute_force_bilip, related_bounds
from .gaussian_lab import (
    ConeSpec,
    ExperimentConfig,
    angle_preservation_check,
    beta_sweep,
    epsilon_net_sphere,
    expectation_identity_check,
    gaussian_width_mc,
    mc_lemma_checks,
    rip_check,
    small_distance_profile,
    theorem_band_check,
)
from .geometry import LayerMap

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3
SQRT2 = math.sqrt(2.0)
# settings that never change a number; kept out of the config block
_EXECUTION_KEYS = {"out", "format", "workers", "check", "command_fn", "replay_config"}

_REAL = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


# ---------------------------------------------------------------- input


def read_matrix_file(path) -> np.ndarray:
    """Parse "m n" followed by m rows of n reals. Blank lines are ignored."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read matrix file ({exc.strerror})") from None
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    lines = [(no, toks) for no, toks in lines if toks]
    if not lines:
        raise InputError(f"{path}: empty file, expected header 'm n'")
    no, head = lines[0]
    if len(head) != 2 or not all(t.isdigit() for t in head):
        raise InputError(f"{path}:{no}: malformed header, expected two positive integers 'm n'")
    m, n = int(head[0]), int(head[1])
    if m < 1 or n < 1:
        raise InputError(f"{path}:{no}: dimensions must be positive, got {m} x {n}")
    rows = lines[1:]
    if len(rows) < m:
        where = rows[-1][0] + 1 if rows else no + 1
        raise InputError(f"{path}:{where}: expected {m} rows, found {len(rows)}")
    if len(rows) > m:
        raise InputError(f"{path}:{rows[m][0]}: expected {m} rows, found {len(rows)}")
    A = np.empty((m, n))
    for i, (no, toks) in enumerate(rows):
        if len(toks) != n:
            raise InputError(f"{path}:{no}: expected {n} entries, found {len(toks)}")
        for j, tok in enumerate(toks):
            if not _REAL.fullmatch(tok):
                raise InputError(f"{path}:{no}: entry {tok!r} is not a finite decimal real")
            A[i, j] = float(tok)
        if not np.all(np.isfinite(A[i])):
            raise InputError(f"{path}:{no}: entry overflows to infinity")
    return A


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {v}")
    return v


# ---------------------------------------------------------------- output


def _plain(v):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (dict, list)):
        return json.dumps(v, separators=(",", ":"))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(doc: dict, fmt: str) -> str:
    doc = _plain(doc)
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# config=" + json.dumps(doc["config"], separators=(",", ":")) + "\n")
    buf.write(f"# runtime_ms={doc['runtime_ms']}\n")
    header: list[str] = []
    for row in doc["results"]:
        for k in row:
            if k not in header:
                header.append(k)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in doc["results"]:
        w.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def _cfg(args, **extra) -> ExperimentConfig:
    cone = getattr(args, "cone", "full")
    kw = dict(
        n=args.n,
        m=getattr(args, "m", 1000),
        seed=args.seed,
        pair_count=args.pairs,
        cone=ConeSpec.parse(cone, args.n),
        workers=args.workers,
    )
    kw.update(extra)
    return ExperimentConfig(**kw)


def cmd_analyze(args):
    A = read_matrix_file(args.matrix)
    m, n = A.shape
    bias = np.zeros(m) if args.bias is None else np.asarray(args.bias, dtype=float)
    if bias.shape != (m,):
        raise InputError(f"bias has {bias.size} entries, matrix has {m} rows")
    layer = LayerMap(A, bias)
    results = []
    exact_ok = m <= MAX_ROWS and n <= MAX_COLS
    U_hi = None
    if exact_ok:
        rep = related_bounds(A)
        results.append({"table": "bounds", **rep.to_dict()})
        if layer.unbiased:
            U_hi = rep.U_exact
    else:
        results.append({"table": "bounds", "skipped": f"exact analysis limited to m <= {MAX_ROWS}, n <= {MAX_COLS}"})
    br = sampled_bilip(layer, args.pairs, args.seed, U_hi=U_hi, workers=args.workers)
    results.append({"table": "bracket", **br.to_dict()})
    cert = sqrt2_certificate(A, args.probes, args.seed)
    results.append({"table": "certificate", **cert.to_dict()})
    if n <= 2 and layer.unbiased:
        oracle = brute_force_bilip(A, resolution=args.resolution)
        results.append({"table": "oracle", **oracle.to_dict()})
        if exact_ok:
            results.append({"table": "readings", **bound_readings_check(A, args.resolution)})
    passed = cert.cert_ratio >= SQRT2 - 1e-9 and (br.U_hi is None or br.U_lo <= br.U_hi * (1 + 1e-12))
    return results, passed


def cmd_certify(args):
    A = read_matrix_file(args.matrix)
    cert = sqrt2_certificate(A, args.probes, args.seed)
    return [cert.to_dict()], cert.cert_ratio >= SQRT2 - 1e-9


def cmd_sweep(args):
    rep = beta_sweep(args.n, args.m, args.seed, args.pairs, args.probes, args.workers)
    return rep.rows, rep.passed


def cmd_lemmas(args):
    cfg = _cfg(args, alpha=args.alpha, beta_param=args.beta, mc_rows=args.rows)
    lem = mc_lemma_checks(cfg)
    ident = expectation_identity_check(cfg)
    rows = [{"table": "lemmas", **r} for r in lem.rows] + [{"table": "identity", **r} for r in ident.rows]
    return rows, bool(lem.passed and ident.passed)


def cmd_band(args):
    rep = theorem_band_check(_cfg(args, delta=args.delta, C=args.C))
    return rep.rows, rep.passed


def cmd_small(args):
    rep = small_distance_profile(_cfg(args), args.eps)
    return rep.rows, rep.passed


def cmd_angle(args):
    rep = angle_preservation_check(_cfg(args))
    worst = rep.rows[-1]["max_deviation"]
    return rep.rows, worst is not None and worst <= args.tolerance


def cmd_rip(args):
    rep = rip_check(_cfg(args, delta=args.delta))
    return rep.rows, rep.passed


def cmd_width(args):
    spec = ConeSpec.parse(args.cone, args.n)
    mean, se = gaussian_width_mc(spec, args.draws, args.seed, args.workers)
    row = {"cone": spec.to_dict(), "draws": args.draws, "mean": mean, "se": se}
    passed = True
    if spec.kind == "full_space" and spec.n <= 2:
        target = math.sqrt(2 / math.pi) if spec.n == 1 else math.sqrt(math.pi / 2)
        row["closed_form"] = target
        passed = abs(mean - target) <= 4 * se
    elif spec.kind == "sparse_cone" and spec.k < spec.n:
        scale = math.sqrt(2 * spec.k * math.log(spec.n / spec.k))
        row["factor"] = mean / scale
        passed = 1.0 <= mean / scale <= 3.0
    return [row], passed


def cmd_net(args):
    net = epsilon_net_sphere(args.n, args.eps, args.seed, args.probes, args.pool)
    return [net.to_dict()], net.verified


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p, stochastic=True):
    if stochastic:
        p.add_argument("--seed", type=_seed, required=True)
        p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--check", action="store_true", help="exit 3 if the acceptance test fails")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relucond", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", help="exact bounds, sampled bracket and certificate for a matrix file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--bias", type=_float_list, default=None, help="comma-separated bias vector")
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--probes", type=int, default=1000)
    p.add_argument("--resolution", type=int, default=4096)
    _common(p)
    p.set_defaults(command_fn=cmd_analyze)

    p = sub.add_parser("certify", help="antipodal sqrt(2) certificate for a matrix file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--probes", type=int, default=1000)
    _common(p)
    p.set_defaults(command_fn=cmd_certify)

    p = sub.add_parser("sweep", help="beta_lo and certificate for Gaussian layers over m")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=_int_list, required=True, help="comma-separated increasing m values")
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--probes", type=int, default=1000)
    _common(p)
    p.set_defaults(command_fn=cmd_sweep)

    p = sub.add_parser("lemmas", help="truncated second-moment bounds and the expectation identity")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--rows", type=int, default=1_000_000)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=10.0)
    _common(p)
    p.set_defaults(command_fn=cmd_lemmas)

    p = sub.add_parser("band", help="distortion band violations for one Gaussian layer")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--m", type=int, default=20_000)
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--C", type=float, default=0.5, help="regime split |x-y| >= C max(|x|,|y|)")
    p.add_argument("--cone", default="full", help="full or sparse:K")
    _common(p)
    p.set_defaults(command_fn=cmd_band)

    p = sub.add_parser("small", help="squared ratio profile for nearly coincident pairs")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--m", type=int, default=5000)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--eps", type=_float_list, default=[1e-1, 1e-2, 1e-3, 1e-4])
    p.add_argument("--cone", default="full")
    _common(p)
    p.set_defaults(command_fn=cmd_small)

    p = sub.add_parser("angle", help="output angles against the predicted angle map")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--m", type=int, default=20_000)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--cone", default="full")
    _common(p)
    p.set_defaults(command_fn=cmd_angle)

    p = sub.add_parser("rip", help="restricted isometry of A / sqrt(m) on cone differences")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--m", type=int, default=5000)
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--cone", default="full")
    _common(p)
    p.set_defaults(command_fn=cmd_rip)

    p = sub.add_parser("width", help="Monte-Carlo Gaussian width of (S - S) in the unit ball")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cone", default="full")
    p.add_argument("--draws", type=int, default=100_000)
    _common(p)
    p.set_defaults(command_fn=cmd_width)

    p = sub.add_parser("net", help="greedy eps-net of the unit sphere")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--probes", type=int, default=10_000)
    p.add_argument("--pool", type=int, default=20_000)
    _common(p)
    p.set_defaults(command_fn=cmd_net)

    p = sub.add_parser("replay", help="rerun the config block of an earlier report")
    p.add_argument("--config", dest="replay_config", required=True, help="JSON report or config file")
    p.add_argument("--workers", type=int, default=1)
    _common(p, stochastic=False)
    return parser


def _config_of(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _EXECUTION_KEYS}


def _replay_args(parser, args):
    try:
        doc = json.loads(Path(args.replay_config).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"{args.replay_config}: cannot load config ({exc})") from None
    config = doc.get("config", doc) if isinstance(doc, dict) else None
    if not isinstance(config, dict) or config.get("command") in (None, "replay"):
        raise InputError(f"{args.replay_config}: no replayable command in config")
    try:
        base = parser.parse_args([config["command"]] + _required_stub(config))
    except SystemExit:
        raise InputError(f"{args.replay_config}: config does not form a valid command") from None
    for k, v in config.items():
        if not hasattr(base, k):
            raise InputError(f"{args.replay_config}: unknown config field {k!r}")
        setattr(base, k, v)
    for k in ("out", "format", "workers", "check"):
        setattr(base, k, getattr(args, k))
    return base


def _required_stub(config: dict) -> list[str]:
    # satisfy required flags; the real values are copied from the config afterwards
    stub = []
    for flag in ("seed", "matrix", "n", "m", "eps"):
        if flag in config:
            stub += [f"--{flag}", "1" if flag != "matrix" else "-"]
    return stub


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    t0 = time.perf_counter()
    try:
        if args.command == "replay":
            args = _replay_args(parser, args)
        results, passed = args.command_fn(args)
    except InputError as exc:
        print(f"relucond: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"relucond: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    doc = {
        "config": _config_of(args),
        "results": results,
        "runtime_ms": round((time.perf_counter() - t0) * 1000.0, 3),
    }
    text = render(doc, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.check and not passed:
        print(f"relucond: {args.command} check failed", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
