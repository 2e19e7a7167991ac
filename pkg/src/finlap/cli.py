"""
Command-line front end.

    finlap forge --out cert.json [--omega 0.1 --pairs 5 --smoothness 2 --sigma 0.9 --bits 256]
    finlap zeros --in cert.json --out cert_zeros.json [--tol 1e-12]
    finlap eval --in cert.json --grid "b,lin:0:10:11" [--out values.csv]
    finlap verify --in cert.json [--out report.json] [--seed 7]
    finlap export-plot --in cert.json --out plots/ [--samples 1000]

Exit codes: 0 ok, 2 usage or invalid configuration, 3 I/O, 4 numeric failure
(including a certificate that fails verification).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

from .basis import Partition
from .errors import NumericFailure
from .forge import Certificate, ForgeParams, forge
from .scaled_arith import PrecisionPolicy
from .series import AlternatingSeries, eval_G_complex, eval_g_log, eval_H
from .verify import (
    DEFAULT_TAU_GRID,
    VerifyReport,
    check_alternation,
    check_imaginary_axis,
    check_left_halfplane,
    check_oscillation,
    check_ratio_divergence,
    check_sign_definite_growth,
    default_left_grid,
)
from .zeros import DEFAULT_REL_TOL, confirm_sign_change, find_zeros

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    in_path: str | None = None
    out: str | None = None
    omega: float = 0.1
    pairs: int = 5
    smoothness: int = 2
    sigma: float = 0.9
    bits: int = 256
    j_max: int = 64
    tol: float | None = None
    grid: str = ""
    samples: int = 1000
    tau_max: float = 1000.0
    seed: int | None = None

    def validate(self) -> None:
        if not self.omega > 0:
            raise UsageError("--omega must be positive")
        if self.pairs < 1:
            raise UsageError("--pairs must be >= 1")
        if self.smoothness < 1:
            raise UsageError("--smoothness must be >= 1")
        if not 0 < self.sigma < 1:
            raise UsageError("--sigma must lie in (0, 1)")
        if not 53 <= self.bits <= 8192:
            raise UsageError("--bits must lie in [53, 8192]")
        if self.j_max < 2 * self.pairs + 2:
            raise UsageError("--jmax must be at least 2 * pairs + 2")
        if self.tol is not None and not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.samples < 0:
            raise UsageError("--samples must be non-negative")

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> RunConfig:
        values = {"subcommand": ns.command}
        if ns.config:
            try:
                loaded = json.loads(Path(ns.config).read_text())
            except OSError as exc:
                raise OSError(f"cannot read config {ns.config}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise UsageError(f"config is not valid JSON: {exc}") from exc
            known = {f.name for f in fields(cls)} - {"subcommand"}
            unknown = sorted(set(loaded) - known)
            if unknown:
                raise UsageError(f"unknown config keys: {', '.join(unknown)}")
            values.update(loaded)
        for f in fields(cls):
            v = getattr(ns, f.name, None)
            if v is not None and f.name != "subcommand":
                values[f.name] = v
        cfg = cls(**values)
        cfg.validate()
        return cfg


def parse_grid(text: str, checkpoints: list[float] | None = None) -> list[float]:
    """Comma-separated numbers, ``b`` (certificate checkpoints), ``lin:a:b:n`` or ``geom:a:b:n``."""
    out: list[float] = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        if item == "b":
            if checkpoints is None:
                raise UsageError("grid item 'b' needs a certificate")
            out.extend(checkpoints)
        elif item.startswith(("lin:", "geom:")):
            kind, *parts = item.split(":")
            if len(parts) != 3:
                raise UsageError(f"bad grid item {item!r}")
            try:
                a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            except ValueError as exc:
                raise UsageError(f"bad grid item {item!r}") from exc
            if n < 1 or (kind == "geom" and not (a > 0 and b > 0)):
                raise UsageError(f"bad grid item {item!r}")
            if n == 1:
                out.append(a)
            elif kind == "lin":
                out.extend(a + (b - a) * i / (n - 1) for i in range(n))
            else:
                out.extend(a * (b / a) ** (i / (n - 1)) for i in range(n))
        else:
            try:
                out.append(float(item))
            except ValueError as exc:
                raise UsageError(f"bad grid item {item!r}") from exc
    if any(not math.isfinite(k) or k < 0 for k in out):
        raise UsageError("grid values must be finite and non-negative")
    return out


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def _load_cert(cfg: RunConfig) -> Certificate:
    if not cfg.in_path:
        raise UsageError("--in is required")
    text = Path(cfg.in_path).read_text(encoding="utf-8")
    try:
        return Certificate.loads(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{cfg.in_path} is not a valid certificate: {exc}") from exc


def _log_str(x) -> str:
    return repr(float(x))


def cmd_forge(cfg: RunConfig) -> int:
    if not cfg.out:
        raise UsageError("--out is required")
    policy = PrecisionPolicy(mantissa_bits=cfg.bits, max_bits=max(8192, cfg.bits))
    series = AlternatingSeries.geometric(cfg.j_max, partition=Partition(cfg.sigma),
                                         p=cfg.smoothness)
    params = ForgeParams(omega=cfg.omega, pairs=cfg.pairs, policy=policy)
    cert = forge(series, params)
    _write(cfg.out, cert.dumps())
    print(f"forged {len(cert.checkpoints)} checkpoints; b_max = {cert.b[-1]!r}", file=sys.stderr)
    return EXIT_OK


def cmd_zeros(cfg: RunConfig) -> int:
    cert = _load_cert(cfg)
    rel_tol = cfg.tol if cfg.tol is not None else DEFAULT_REL_TOL
    zeros = find_zeros(cert, rel_tol=rel_tol)
    series = cert.series()
    for z in zeros:
        if not confirm_sign_change(series, z, rel_tol, cert.params.policy):
            raise NumericFailure(f"sign change not confirmed around k = {z.k!r}")
    out = cert.with_zeros(zeros)
    _write(cfg.out or cfg.in_path, out.dumps())
    print(f"{len(zeros)} zeros located", file=sys.stderr)
    return EXIT_OK


def cmd_eval(cfg: RunConfig) -> int:
    cert = _load_cert(cfg)
    series = cert.series()
    grid = parse_grid(cfg.grid, cert.b)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "sign_H", "log_abs_H", "log_tail_bound"])
    for k in grid:
        tv = eval_H(series, k, tol=cfg.tol, policy=cert.params.policy)
        tail = tv.tail_bound
        w.writerow([repr(k), tv.sign, _log_str(tv.value.logmag), _log_str(tail.logmag)])
    _write(cfg.out, buf.getvalue())
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    cert = _load_cert(cfg)
    series = cert.series()
    left = default_left_grid()
    taus = list(DEFAULT_TAU_GRID)
    if cfg.seed is not None:
        rng = random.Random(cfg.seed)
        left += [complex(-50 * rng.random(), 100 * rng.random() - 50) for _ in range(20)]
        taus += [1e4 * rng.random() for _ in range(20)]
    report = VerifyReport([
        check_alternation(cert, series),
        check_ratio_divergence(2, 3, p=series.p, partition=series.partition),
        check_left_halfplane(series, left),
        check_imaginary_axis(series, taus),
        check_sign_definite_growth(series.positive_variant()),
        check_oscillation(series),
    ])
    if cfg.out:
        payload = report.to_json()
        payload["seed"] = cfg.seed
        _write(cfg.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_export_plot(cfg: RunConfig) -> int:
    cert = _load_cert(cfg)
    if not cfg.out:
        raise UsageError("--out (a directory) is required")
    series = cert.series()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    n = cfg.samples

    g_buf = io.StringIO()
    w = csv.writer(g_buf, lineterminator="\n")
    w.writerow(["x", "g", "sign_g", "log_abs_g"])
    lo = Fraction(3, 4)
    for i in range(n):
        x = lo + (1 - lo) * Fraction(i + 1, n + 1)
        v = eval_g_log(series, x)
        w.writerow([repr(float(x)), repr(v.to_float()), v.sign, _log_str(v.logmag)])
    (outdir / "g_samples.csv").write_text(g_buf.getvalue(), encoding="utf-8")

    t_buf = io.StringIO()
    w = csv.writer(t_buf, lineterminator="\n")
    w.writerow(["tau", "abs_G_itau"])
    for i in range(n):
        tau = cfg.tau_max * i / (n - 1) if n > 1 else 0.0
        w.writerow([repr(tau), repr(abs(eval_G_complex(series, complex(0, tau))))])
    (outdir / "imag_axis.csv").write_text(t_buf.getvalue(), encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "forge": cmd_forge,
    "zeros": cmd_zeros,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "export-plot": cmd_export_plot,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finlap", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--in", dest="in_path")
        p.add_argument("--out")
        p.add_argument("--config", help="JSON file of RunConfig keys")
        p.add_argument("--omega", type=float)
        p.add_argument("--pairs", type=int)
        p.add_argument("--smoothness", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--bits", type=int)
        p.add_argument("--jmax", dest="j_max", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--grid")
        p.add_argument("--samples", type=int)
        p.add_argument("--tau-max", dest="tau_max", type=float)
        p.add_argument("--seed", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_namespace(ns)
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"finlap: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"finlap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericFailure as exc:
        print(f"finlap: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
