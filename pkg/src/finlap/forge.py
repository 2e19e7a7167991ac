"""
Construction of alternation checkpoints ``b_2 < b_3 < ...``.

At checkpoint ``b_j`` the transform must satisfy ``s_j G(b_j) >= omega`` with
``s_j = (-1)**j``. The construction is inductive:

1. Cap ``eps_j`` so that ``eps_j G_j(b_p) <= budget_j`` at every earlier
   checkpoint, where ``budget_j = (factor - 1) * omega * 2**-(j-2)``. The
   budgets sum to less than ``(factor - 1) * omega``, so no later term can
   pull an earlier checkpoint below ``omega``.
2. Grow ``k`` geometrically from ``b_{j-1}`` until the partial sum through
   ``j`` has sign ``s_j`` and magnitude at least ``factor * omega``. This
   terminates because ``G_j / G_i`` diverges for ``i < j``.

Coefficients past the last checkpoint are capped against every checkpoint,
so the stored finite series satisfies all the recorded inequalities.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, replace
from typing import Any

import mpmath
from mpmath import mpf

from .basis import Partition
from .errors import NumericFailure, SearchExhausted
from .scaled_arith import DEFAULT_POLICY, LN2, LogSigned, PrecisionPolicy, ls_sum_escalating
from .series import AlternatingSeries, eval_H, scaled_terms

SCHEMA_VERSION = 1


def float_down(x: mpf) -> float:
    """Largest float not exceeding ``x``."""
    f = float(x)
    if mpf(f) > x:
        f = math.nextafter(f, -math.inf)
    return f


@dataclass(frozen=True)
class ForgeParams:
    omega: float = 0.1
    pairs: int = 5
    selection_margin_factor: float = 2.0
    k_growth_factor: float = 2.0
    max_doublings: int = 20000
    start_k: float = 1.0
    policy: PrecisionPolicy = DEFAULT_POLICY

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.pairs < 1:
            raise ValueError("pairs must be >= 1: nothing to construct")
        if not self.selection_margin_factor > 1:
            raise ValueError("selection_margin_factor must exceed 1")
        if not self.k_growth_factor > 1:
            raise ValueError("k_growth_factor must exceed 1")
        if not self.start_k > 0:
            raise ValueError("start_k must be positive")

    @property
    def last_index(self) -> int:
        return 2 * self.pairs + 1

    @property
    def target(self) -> float:
        return self.selection_margin_factor * self.omega

    def budget(self, j: int) -> float:
        """Erosion allowance of term ``j >= 3`` at every earlier checkpoint."""
        return (self.selection_margin_factor - 1) * self.omega * 2.0 ** -(j - 2)


def _pair(v: LogSigned) -> list:
    return [0, None] if v.sign == 0 else [v.sign, float(v.logmag)]


def _unpair(p) -> LogSigned:
    sign, logmag = p
    return LogSigned.zero() if sign == 0 else LogSigned(int(sign), float(logmag))


@dataclass(frozen=True)
class Checkpoint:
    """One alternation checkpoint; all values in unscaled G units as (sign, log|.|)."""

    j: int
    b: float
    at_selection: LogSigned
    erosion: LogSigned
    final: LogSigned
    final_tail: LogSigned

    @property
    def sign(self) -> int:
        return (-1) ** self.j

    def to_json(self) -> dict:
        return {"j": self.j, "k": self.b, "at_selection": _pair(self.at_selection),
                "erosion": _pair(self.erosion), "final": _pair(self.final),
                "final_tail": _pair(self.final_tail)}

    @classmethod
    def from_json(cls, d: dict) -> Checkpoint:
        return cls(int(d["j"]), float(d["k"]), _unpair(d["at_selection"]),
                   _unpair(d["erosion"]), _unpair(d["final"]), _unpair(d["final_tail"]))


@dataclass(frozen=True)
class ZeroRecord:
    """
    A located zero of G between checkpoints ``b_j`` and ``b_{j+1}``.

    ``[lo, hi]`` is the float bracket; ``refined = (man, exp)`` is the exact
    point ``man * 2**exp`` inside it where ``residual`` was measured, and
    ``k`` is that point rounded to a float.
    """

    j: int
    k: float
    lo: float
    hi: float
    iterations: int
    residual: LogSigned
    residual_rel: float
    refined: tuple[int, int] = (0, 0)
    polish_iterations: int = 0

    @property
    def refined_mpf(self) -> mpf:
        man, exp = self.refined
        if not man:
            return mpf(self.k)
        with mpmath.workprec(max(53, man.bit_length())):
            return mpmath.ldexp(mpf(man), exp)

    def to_json(self) -> dict:
        return {"between": [self.j, self.j + 1], "k": self.k, "lo": self.lo, "hi": self.hi,
                "iterations": self.iterations, "residual": _pair(self.residual),
                "residual_rel_log": self.residual_rel, "refined": list(self.refined),
                "polish_iterations": self.polish_iterations}

    @classmethod
    def from_json(cls, d: dict) -> ZeroRecord:
        man, exp = d.get("refined", (0, 0))
        return cls(int(d["between"][0]), float(d["k"]), float(d["lo"]), float(d["hi"]),
                   int(d["iterations"]), _unpair(d["residual"]), float(d["residual_rel_log"]),
                   (int(man), int(exp)), int(d.get("polish_iterations", 0)))


@dataclass(frozen=True)
class Certificate:
    """Machine-checkable record of a forged series and its checkpoints."""

    params: ForgeParams
    sigma: float
    p: int
    log_eps: tuple[float, ...]
    checkpoints: tuple[Checkpoint, ...]
    spent: tuple[LogSigned, ...]
    zeros: tuple[ZeroRecord, ...] = ()
    scheme: str = "dyadic"
    version: int = SCHEMA_VERSION

    @property
    def omega(self) -> float:
        return self.params.omega

    @property
    def b(self) -> list[float]:
        return [c.b for c in self.checkpoints]

    def series(self) -> AlternatingSeries:
        return AlternatingSeries(self.log_eps, Partition(self.sigma, self.scheme), self.p)

    def with_zeros(self, zeros) -> Certificate:
        return replace(self, zeros=tuple(zeros))

    def to_json(self) -> dict[str, Any]:
        pol = self.params.policy
        return {
            "version": self.version,
            "scheme": self.scheme,
            "p": self.p,
            "sigma": self.sigma,
            "omega": self.params.omega,
            "params": {
                "pairs": self.params.pairs,
                "selection_margin_factor": self.params.selection_margin_factor,
                "k_growth_factor": self.params.k_growth_factor,
                "max_doublings": self.params.max_doublings,
                "start_k": self.params.start_k,
                "policy": asdict(pol),
            },
            "scale": "margins are (sign, natural log of |G|) at k = b; H = exp(-k) G",
            "eps": [[1, v] for v in self.log_eps],
            "b": self.b,
            "margins": [c.to_json() for c in self.checkpoints],
            "erosion_spent": [{"j": i + 3, "budget": self.params.budget(i + 3), "spent": _pair(s)}
                              for i, s in enumerate(self.spent)],
            "zeros": [z.to_json() for z in self.zeros],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> Certificate:
        if d.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported certificate version {d.get('version')!r}")
        pp = d["params"]
        params = ForgeParams(
            omega=float(d["omega"]), pairs=int(pp["pairs"]),
            selection_margin_factor=float(pp["selection_margin_factor"]),
            k_growth_factor=float(pp["k_growth_factor"]),
            max_doublings=int(pp["max_doublings"]), start_k=float(pp["start_k"]),
            policy=PrecisionPolicy(**pp["policy"]))
        checkpoints = tuple(Checkpoint.from_json(m) for m in d["margins"])
        if [c.b for c in checkpoints] != [float(x) for x in d["b"]]:
            raise ValueError("b list disagrees with margin records")
        for sign, _ in d["eps"]:
            if sign != 1:
                raise ValueError("eps entries must be positive")
        return cls(params=params, sigma=float(d["sigma"]), p=int(d["p"]),
                   log_eps=tuple(float(v) for _, v in d["eps"]),
                   checkpoints=checkpoints,
                   spent=tuple(_unpair(e["spent"]) for e in d["erosion_spent"]),
                   zeros=tuple(ZeroRecord.from_json(z) for z in d["zeros"]),
                   scheme=d["scheme"], version=int(d["version"]))

    @classmethod
    def loads(cls, text: str) -> Certificate:
        return cls.from_json(json.loads(text))


def _partial_G(series: AlternatingSeries, k: float, upto: int, lo: int,
               policy: PrecisionPolicy) -> LogSigned:
    """``sum_{i=lo}^{upto} s_i eps_i G_i(k)`` in G units."""
    def terms(pol):
        return scaled_terms(series, k, upto, pol)[lo - 2:]
    total, _, _ = ls_sum_escalating(terms, policy)
    return total.scale_exp(k)


def _cap_log_eps(series: AlternatingSeries, j: int, bs: list[float], params: ForgeParams,
                 current: float, previous: float | None) -> tuple[float, LogSigned]:
    bump = series.bump(j)
    worst = max(bump.moment(b, params.policy).logmag for b in bs)
    with mpmath.workprec(params.policy.mantissa_bits + 96):
        cap = float_down(mpmath.log(params.budget(j)) - worst)
        new = min(current, cap)
        if previous is not None and not new < previous:
            new = float_down(mpf(previous) - mpf(LN2))
        spent = LogSigned(1, mpf(new) + worst)
    return new, spent


def forge(series: AlternatingSeries, params: ForgeParams) -> Certificate:
    """Run the checkpoint construction; see the module docstring."""
    last = params.last_index
    if series.j_max < last + 1:
        raise ValueError(f"series stores terms through {series.j_max}; need at least {last + 1}")
    policy = params.policy
    log_eps = list(series.log_eps)
    spent: list[LogSigned] = []
    bs: list[float] = []
    at_selection: list[LogSigned] = []
    log_target = math.log(params.target)

    def working(upto):
        # Coefficients past ``upto`` are not final yet and take no part in the sums.
        return AlternatingSeries(tuple(log_eps[:upto - 1]), series.partition, series.p)

    for j in range(2, last + 1):
        if j >= 3:
            log_eps[j - 2], used = _cap_log_eps(series, j, bs, params,
                                                  log_eps[j - 2], log_eps[j - 3])
            spent.append(used)
        current = working(j)
        s_j = (-1) ** j
        k = params.start_k if j == 2 else bs[-1] * params.k_growth_factor
        for _ in range(params.max_doublings):
            if not math.isfinite(k):
                break
            total = _partial_G(current, k, j, 2, policy)
            if total.sign == s_j and total.logmag >= log_target:
                bs.append(k)
                at_selection.append(total)
                break
            k *= params.k_growth_factor
        else:
            raise SearchExhausted(f"no checkpoint for term {j} within "
                                  f"{params.max_doublings} growth steps", step=j)
        if len(bs) < j - 1:
            raise SearchExhausted(f"checkpoint search for term {j} overflowed k", step=j)

    for j in range(last + 1, series.j_max + 1):
        log_eps[j - 2], used = _cap_log_eps(series, j, bs, params,
                                             log_eps[j - 2], log_eps[j - 3])
        spent.append(used)

    final_series = AlternatingSeries(tuple(log_eps), series.partition, series.p)
    checkpoints = []
    for idx, b in enumerate(bs):
        j = idx + 2
        tv = eval_H(final_series, b, policy=policy,
                    log_tol=math.log(params.omega) - b - math.log(100.0))
        final = tv.value.scale_exp(b)
        tail = tv.tail_bound.scale_exp(b)
        if final.sign != (-1) ** j or final.logmag < math.log(params.omega):
            raise NumericFailure(f"checkpoint {j} lost its margin after later terms were added")
        erosion = (_partial_G(final_series, b, final_series.j_max, j + 1, policy)
                   if j < final_series.j_max else LogSigned.zero())
        checkpoints.append(Checkpoint(j, b, at_selection[idx], erosion, final, tail))

    return Certificate(params=params, sigma=series.partition.sigma, p=series.p,
                       log_eps=tuple(log_eps), checkpoints=tuple(checkpoints),
                       spent=tuple(spent), scheme=series.partition.scheme)


@dataclass(frozen=True)
class ErosionRow:
    j: int
    b: float
    at_selection: LogSigned
    erosion: LogSigned
    final: LogSigned
    final_ok: bool


def erosion_report(cert: Certificate) -> list[ErosionRow]:
    """Per checkpoint: margin at selection, signed effect of all later terms, final margin."""
    series = cert.series()
    policy = cert.params.policy
    rows = []
    log_omega = math.log(cert.omega)
    for c in cert.checkpoints:
        at_sel = _partial_G(series, c.b, c.j, 2, policy)
        erosion = (_partial_G(series, c.b, series.j_max, c.j + 1, policy)
                   if c.j < series.j_max else LogSigned.zero())
        final = _partial_G(series, c.b, series.j_max, 2, policy)
        ok = final.sign == c.sign and final.logmag >= log_omega
        rows.append(ErosionRow(c.j, c.b, at_sel, erosion, final, ok))
    return rows


def total_budget(params: ForgeParams, j_max: int) -> Fraction:
    """Exact sum of the budgets of terms ``3 .. j_max``; always below ``(factor - 1) omega``."""
    allowance = (Fraction(params.selection_margin_factor) - 1) * Fraction(params.omega)
    return allowance * (1 - Fraction(1, 2 ** max(0, j_max - 2)))
