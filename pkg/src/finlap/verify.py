"""
Checks of every finitely decidable property of a forged series.

Each check recomputes its values through :mod:`finlap.basis` and
:mod:`finlap.series` directly; nothing is read back from the forge's own sums
except the numbers being audited. Failures are results, not exceptions.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field

import mpmath

from .basis import DEFAULT_PARTITION, Partition, moment_ratio
from .errors import FinlapError
from .forge import Certificate
from .series import AlternatingSeries, c0, eval_G_complex, eval_g_log, eval_H

DOUBLING_GRID = tuple(float(2 ** i) for i in range(15))
DEFAULT_TAU_GRID = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0,
                    1000.0, 2000.0, 5000.0, 1e4, -1.0, -10.0, -100.0, -1000.0)
CONSISTENCY_RTOL = 1e-9

NOT_FINITELY_CHECKABLE = (
    ("limsup of |G(k)| as k -> +inf is infinite",
     "an asymptotic statement reached by contradiction; no finite sample of G decides it"),
    ("a transform bounded along the positive real axis forces g = 0",
     "its proof is non-constructive; only the finite consequences on the imaginary axis "
     "and the left half-plane are sampled"),
)


@dataclass
class CheckResult:
    name: str
    claim: str
    passed: bool
    worst_margin: float | None
    samples: int
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list[CheckResult]
    not_checked: list[tuple[str, str]] = field(
        default_factory=lambda: list(NOT_FINITELY_CHECKABLE))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"passed": self.passed,
                "checks": [asdict(c) for c in self.checks],
                "not_checked": [{"claim": c, "reason": r} for c, r in self.not_checked]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            margin = "-" if c.worst_margin is None else f"{c.worst_margin:.6g}"
            lines.append(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.claim} "
                         f"(worst margin {margin}, samples {c.samples})"
                         + (f" -- {c.detail}" if c.detail else ""))
        for claim, reason in self.not_checked:
            lines.append(f"[NOT CHECKED] {claim}: {reason}")
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


def check_alternation(cert: Certificate, series: AlternatingSeries | None = None) -> CheckResult:
    """
    Recompute ``G(b_j)`` and require sign ``(-1)**j`` with ``|G| >= 0.99 omega``
    after subtracting the truncation bound, and agreement with the recorded
    final margin.

    The worst margin is ``min_j log(s_j G(b_j) / omega)``.
    """
    claim = "G(b_j) has sign (-1)^j and |G(b_j)| >= omega at every checkpoint"
    series = cert.series() if series is None else series
    cps = cert.checkpoints
    if not cps:
        return CheckResult("alternation", claim, True, None, 0, "no checkpoints (vacuous)")
    problems = []
    if any(not a.b < b.b for a, b in zip(cps, cps[1:])):
        problems.append("checkpoints not strictly increasing")
    log_omega = math.log(cert.omega)
    floor = math.log(cert.omega * (1 - 1e-2))
    worst = math.inf
    for c in cps:
        try:
            tv = eval_H(series, c.b, policy=cert.params.policy,
                        log_tol=log_omega - c.b - math.log(100.0))
        except FinlapError as exc:
            problems.append(f"b_{c.j}: {exc}")
            continue
        g = tv.value.scale_exp(c.b)
        tail = tv.tail_bound.scale_exp(c.b)
        with mpmath.workprec(cert.params.policy.mantissa_bits + 96):
            if g.sign == c.sign:
                lower = g.logmag + mpmath.log1p(-mpmath.exp(tail.logmag - g.logmag)) \
                    if tail.sign else g.logmag
                worst = min(worst, float(lower - log_omega))
                if lower < floor:
                    problems.append(f"b_{c.j}: margin below omega")
            else:
                worst = -math.inf
                problems.append(f"b_{c.j}: wrong sign")
            rec = c.final
            tol = CONSISTENCY_RTOL * max(1.0, abs(float(rec.logmag)))
            if rec.sign != g.sign or abs(float(g.logmag - rec.logmag)) > tol:
                problems.append(f"b_{c.j}: recorded margin not reproduced")
    return CheckResult("alternation", claim, not problems, worst, len(cps), "; ".join(problems))


def check_ratio_divergence(j: int = 2, m: int = 3, k_grid=DOUBLING_GRID, *, p: int = 2,
                           partition: Partition = DEFAULT_PARTITION) -> CheckResult:
    """``G_m / G_j`` strictly increasing on the grid with overall growth above 1e3."""
    if m <= j:
        raise ValueError("ratio divergence needs m > j")
    claim = f"G_{m}(k)/G_{j}(k) increases without bound (disjoint supports)"
    logs = [moment_ratio(m, j, k, p=p, partition=partition).logmag for k in k_grid]
    monotone = all(a < b for a, b in zip(logs, logs[1:]))
    growth = float(logs[-1] - logs[0])
    ok = monotone and growth > math.log(1e3)
    detail = "" if monotone else "ratio not strictly increasing"
    return CheckResult("ratio_divergence", claim, ok, growth - math.log(1e3), len(logs), detail)


def default_left_grid() -> list[complex]:
    re = [-50 + 50 * i / 9 for i in range(10)]
    im = [-50 + 100 * i / 9 for i in range(10)]
    return [complex(x, y) for x in re for y in im]


def check_left_halfplane(series: AlternatingSeries, grid=None) -> CheckResult:
    """``|G(k)| <= c0 (1 + 1e-10)`` for ``Re k <= 0``; worst margin is ``max |G| / c0``."""
    claim = "|G(k)| <= c0 on the closed left half-plane"
    grid = default_left_grid() if grid is None else list(grid)
    bound = c0(series)
    worst = max((abs(eval_G_complex(series, k)) / bound for k in grid), default=0.0)
    return CheckResult("left_halfplane", claim, worst <= 1 + 1e-10, worst, len(grid))


def check_imaginary_axis(series: AlternatingSeries, tau_grid=DEFAULT_TAU_GRID) -> CheckResult:
    """Boundedness by ``c0`` on the imaginary axis plus the decay ``|G(1000i)| < |G(10i)|``."""
    claim = "|G(i tau)| <= c0 and |G(i tau)| decays (Riemann-Lebesgue trend)"
    bound = c0(series)
    vals = [abs(eval_G_complex(series, complex(0, t))) for t in tau_grid]
    worst = max(vals, default=0.0) / bound
    g10 = abs(eval_G_complex(series, 10j))
    g1000 = abs(eval_G_complex(series, 1000j))
    problems = []
    if worst > 1 + 1e-10:
        problems.append("bound exceeded")
    if not g1000 < g10:
        problems.append("no decay from tau=10 to tau=1000")
    if not g1000 < 0.01 * bound:
        problems.append(f"|G(1000i)|/c0 = {g1000 / bound:.3g} >= 0.01")
    return CheckResult("imaginary_axis", claim, not problems, worst, len(vals) + 2,
                       "; ".join(problems) or f"|G(1000i)|/c0 = {g1000 / bound:.3g}")


def check_sign_definite_growth(f_series: AlternatingSeries,
                               k_grid=(0.0,) + DOUBLING_GRID) -> CheckResult:
    """For the all-positive series: strictly increasing with ``G(1024)/G(0) > 1e6``."""
    claim = "a sign-definite series has |G(k)| -> inf"
    if f_series.alternating or f_series.negate:
        return CheckResult("sign_definite_growth", claim, False, None, 0,
                           "series is not sign-definite")
    logs = {k: eval_H(f_series, k).value.scale_exp(k) for k in k_grid}
    if any(v.sign != 1 for v in logs.values()):
        return CheckResult("sign_definite_growth", claim, False, None, len(logs),
                           "non-positive value")
    seq = [logs[k].logmag for k in k_grid]
    monotone = all(a < b for a, b in zip(seq, seq[1:]))
    g0 = eval_H(f_series, 0.0).value.logmag
    g1024 = eval_H(f_series, 1024.0).value.scale_exp(1024.0).logmag
    growth = float(g1024 - g0)
    ok = monotone and growth > math.log(1e6)
    return CheckResult("sign_definite_growth", claim, ok, growth - math.log(1e6), len(seq),
                       "" if monotone else "not strictly increasing")


def supports_inside(partition: Partition, n: int, j_max: int) -> list[int]:
    """Indices whose whole support lies in ``[1 - 2**-n, 1]``."""
    edge = 1 - Fraction(1, 2 ** n)
    return [j for j in range(2, j_max + 1) if partition.support(j)[0] >= edge]


def predicted_sign_changes(n: int, j_max: int) -> int:
    """Supports ``j >= n`` lie in ``[1 - 2**-n, 1]``; consecutive ones differ in sign."""
    return max(0, j_max - max(n, 2))


def check_oscillation(series: AlternatingSeries, n_values=range(2, 11)) -> CheckResult:
    """Sign changes of g at support midpoints inside ``[1 - 2**-n, 1]``."""
    claim = "g changes sign infinitely often near x = 1"
    problems = []
    worst = math.inf
    for n in n_values:
        idx = supports_inside(series.partition, n, series.j_max)
        signs = [eval_g_log(series, series.bump(j).midpoint).sign for j in idx]
        changes = sum(1 for a, b in zip(signs, signs[1:]) if a * b == -1)
        expected = predicted_sign_changes(n, series.j_max)
        if len(idx) - 1 != expected:
            problems.append(f"n={n}: {len(idx)} supports inside, scheme predicts {expected + 1}")
        if changes != expected:
            problems.append(f"n={n}: {changes} sign changes, expected {expected}")
        worst = min(worst, changes - expected)
    return CheckResult("oscillation", claim, not problems, float(worst), len(list(n_values)),
                       "; ".join(problems))


def run_all(cert: Certificate, series: AlternatingSeries | None = None) -> VerifyReport:
    series = cert.series() if series is None else series
    checks = [
        check_alternation(cert, series),
        check_ratio_divergence(2, 3, p=series.p, partition=series.partition),
        check_left_halfplane(series),
        check_imaginary_axis(series),
        check_sign_definite_growth(series.positive_variant()),
        check_oscillation(series),
    ]
    return VerifyReport(checks)
