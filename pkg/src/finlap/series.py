"""
The bump series ``g = sum_j s_j eps_j f_j`` and its finite Laplace transform.

For real ``k >= 0`` the transform is evaluated in the scaled form
``H(k) = exp(-k) G(k)``: each term is bounded by ``eps_j`` and ``H`` has the
same zeros and signs as ``G``. Coefficients are stored as float natural logs
so that values like ``exp(-1e17)`` survive serialisation exactly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, replace
from typing import Sequence

import mpmath
from mpmath import mpf

from .basis import DEFAULT_PARTITION, Bump, Partition, _exact_mpf, beta_pp
from .errors import CannotMeetTolerance
from .scaled_arith import (
    DEFAULT_POLICY,
    LN2,
    LogSigned,
    PrecisionPolicy,
    ls_sum,
    ls_sum_escalating,
)

DEFAULT_J_MAX = 64


@dataclass(frozen=True)
class AlternatingSeries:
    """
    Coefficients ``eps_j`` for ``j = 2 .. j_max`` stored as ``log_eps``.

    With ``alternating`` the signs are ``(-1)**j`` (the function g), otherwise
    all ``+1`` (the sign-definite companion f). ``open_tail`` marks a series
    whose unstored coefficients are only known to obey ``eps_j <= 2**-j``;
    a closed series is exactly the finite sum of its stored terms.
    ``capped=False`` drops the ``eps_j <= 2**-j`` requirement (closed series only).
    """

    log_eps: tuple[float, ...]
    partition: Partition = DEFAULT_PARTITION
    p: int = 2
    alternating: bool = True
    open_tail: bool = False
    negate: bool = False
    capped: bool = True

    def __post_init__(self):
        object.__setattr__(self, "log_eps", tuple(float(v) for v in self.log_eps))
        if not self.log_eps:
            raise ValueError("series needs at least one coefficient")
        if self.open_tail and not self.capped:
            raise ValueError("an open tail is only bounded under the geometric cap")
        for i, v in enumerate(self.log_eps):
            j = i + 2
            if not math.isfinite(v):
                raise ValueError(f"eps_{j} must be positive and finite")
            if self.capped and v > -j * LN2 * (1 - 1e-15):
                raise ValueError(f"eps_{j} exceeds the geometric cap 2**-{j}")
        for i in range(1, len(self.log_eps)):
            if not self.log_eps[i] < self.log_eps[i - 1]:
                raise ValueError(f"eps must be strictly decreasing (index {i + 2})")

    @classmethod
    def geometric(cls, j_max: int = DEFAULT_J_MAX, **kwargs) -> AlternatingSeries:
        """``eps_j = 2**-j`` up to ``j_max`` with an open geometric tail."""
        kwargs.setdefault("open_tail", True)
        return cls(tuple(-j * LN2 for j in range(2, j_max + 1)), **kwargs)

    @classmethod
    def from_eps(cls, eps: Sequence[float], **kwargs) -> AlternatingSeries:
        return cls(tuple(math.log(e) for e in eps), **kwargs)

    @property
    def j_max(self) -> int:
        return len(self.log_eps) + 1

    @property
    def indices(self) -> range:
        return range(2, self.j_max + 1)

    def sign(self, j: int) -> int:
        s = (-1) ** j if self.alternating else 1
        return -s if self.negate else s

    def eps(self, j: int) -> float:
        return math.exp(self.log_eps[j - 2])

    def log_eps_mpf(self, j: int) -> mpf:
        return mpf(self.log_eps[j - 2])

    def bump(self, j: int) -> Bump:
        return self.partition.bump(j, self.p)

    def positive_variant(self) -> AlternatingSeries:
        return replace(self, alternating=False)

    def negated(self) -> AlternatingSeries:
        """The series of ``-g``, used as a tampering control."""
        return replace(self, negate=not self.negate)

    @property
    def open_tail_bound(self) -> float:
        return 2.0 ** -self.j_max if self.open_tail else 0.0


@dataclass(frozen=True)
class TransformValue:
    """``H(k)`` summed through term ``truncation`` with ``|H - value| <= tail_bound``."""

    k: float
    value: LogSigned
    truncation: int
    tail_bound: LogSigned
    depth: float = 0.0
    bits: int = 0

    @property
    def sign(self) -> int:
        return self.value.sign

    def log_abs_G(self) -> mpf:
        """``log |G(k)|`` recovered from the scaled value."""
        return self.value.scale_exp(self.k).logmag


def _locate(x) -> int | None:
    """Index ``j`` with ``x_j <= x < x_{j+1}``, or None for ``x < 3/4``."""
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    if x < Fraction(3, 4):
        return None
    gap = 1 - Fraction(x)
    # gap in (2**-(j+1), 2**-j]
    j = gap.denominator.bit_length() - gap.numerator.bit_length()
    while gap > Fraction(1, 2 ** j):
        j -= 1
    while gap <= Fraction(1, 2 ** (j + 1)):
        j += 1
    return j


def eval_g(series: AlternatingSeries, x: float) -> float:
    """``g(x)``; at most one bump is non-zero at any ``x``."""
    j = _locate(x)
    if j is None or j > series.j_max:
        return 0.0
    value = series.bump(j)(x)
    if value == 0.0:
        return 0.0
    return series.sign(j) * series.eps(j) * value


def eval_g_log(series: AlternatingSeries, x) -> LogSigned:
    """
    ``g(x)`` in log-signed form, exact in sign even when ``eps_j`` underflows.

    ``x`` may be a Fraction, so points closer to 1 than float spacing work.
    """
    j = _locate(x)
    if j is None or j > series.j_max:
        return LogSigned.zero()
    lv = series.bump(j).log_value(x)
    if lv == mpf("-inf"):
        return LogSigned.zero()
    with mpmath.workprec(128):
        return LogSigned(series.sign(j), series.log_eps_mpf(j) + lv)


def _log_term_bound(series: AlternatingSeries, j: int, k: mpf) -> mpf:
    """Upper bound on ``log(eps_j exp(-k) G_j(k))`` without evaluating the moment."""
    bump = series.bump(j)
    c = _exact_mpf(bump.c)
    bound = series.log_eps_mpf(j) - k * (1 - c)
    lam = k * _exact_mpf(bump.width)
    if lam > 0:
        # integral s^p (1-s)^p e^{-lam s} <= p! / lam^(p+1)
        beta = beta_pp(series.p)
        cap = (mpmath.log(math.factorial(series.p)) - (series.p + 1) * mpmath.log(lam)
               - mpmath.log(beta.numerator) + mpmath.log(beta.denominator))
        bound += min(mpf(0), cap)
    return bound


def _log_add(a: mpf, b: mpf) -> mpf:
    if a == mpf("-inf"):
        return b
    if b == mpf("-inf"):
        return a
    hi, lo = max(a, b), min(a, b)
    return hi + mpmath.log1p(mpmath.exp(lo - hi))


def _truncation(series: AlternatingSeries, k: mpf, log_tol) -> tuple[int, mpf]:
    """Smallest J whose rigorous tail bound is at most ``exp(log_tol)``."""
    tail = mpf("-inf")
    if series.open_tail:
        tail = -series.j_max * mpf(LN2)
    if log_tol is None:
        return series.j_max, tail
    if tail > log_tol:
        raise CannotMeetTolerance(
            f"open tail bound 2**-{series.j_max} exceeds the requested tolerance")
    J = series.j_max
    while J > 2:
        candidate = _log_add(tail, _log_term_bound(series, J, k))
        if candidate > log_tol:
            break
        tail = candidate
        J -= 1
    return J, tail


def scaled_terms(series: AlternatingSeries, k, upto: int | None,
                 policy: PrecisionPolicy) -> list[LogSigned]:
    """Terms ``s_j eps_j exp(-k) G_j(k)`` for ``j = 2 .. upto``."""
    upto = series.j_max if upto is None else upto
    terms = []
    for j in range(2, upto + 1):
        g = series.bump(j).moment(k, policy)
        logmag = mpmath.fsub(mpmath.fadd(g.logmag, series.log_eps_mpf(j), exact=True),
                             k, exact=True)
        terms.append(LogSigned(series.sign(j), logmag))
    return terms


def eval_H(series: AlternatingSeries, k: float, tol: float | None = None,
           policy: PrecisionPolicy = DEFAULT_POLICY, *, log_tol=None,
           upto: int | None = None) -> TransformValue:
    """
    Scaled transform ``H(k) = exp(-k) G(k)`` for real ``k >= 0``.

    ``tol`` (or ``log_tol`` when the tolerance underflows a float) bounds the
    truncation error; with neither, every stored term is summed. ``upto``
    forces a partial sum through that index and reports no tail. Precision is
    escalated until the cancellation in the sum is resolved.
    """
    if k < 0:
        raise ValueError("eval_H is defined for k >= 0")
    if tol is not None:
        if tol <= 0:
            raise ValueError("tol must be positive")
        log_tol = math.log(tol)
    with mpmath.workprec(policy.mantissa_bits + 96):
        kk = mpf(k)
        if upto is not None:
            J, tail = upto, mpf("-inf")
        else:
            J, tail = _truncation(series, kk, None if log_tol is None else mpf(log_tol))
    total, depth, used = ls_sum_escalating(
        lambda pol: scaled_terms(series, k, J, pol), policy)
    tail_ls = LogSigned.zero() if tail == mpf("-inf") else LogSigned(1, tail)
    return TransformValue(float(k), total, J, tail_ls, depth, used.mantissa_bits)


def eval_G_complex(series: AlternatingSeries, k: complex, tol: float = 1e-12,
                   wp: int = 96) -> complex:
    """``G(k)`` for ``Re k <= 0`` and ``|k| <= 1e6``; every moment is bounded by 1 there."""
    k = complex(k)
    if k.real > 0:
        raise ValueError("eval_G_complex requires Re k <= 0")
    if abs(k) > 1e6:
        raise ValueError("|k| must not exceed 1e6")
    tail = series.open_tail_bound
    if tail > tol:
        raise CannotMeetTolerance("open tail exceeds tolerance")
    J = series.j_max
    while J > 2 and tail + series.eps(J) <= tol:
        tail += series.eps(J)
        J -= 1
    with mpmath.workprec(wp):
        total = mpmath.mpc(0)
        for j in range(2, J + 1):
            weight = series.sign(j) * mpmath.exp(series.log_eps_mpf(j))
            total += weight * series.bump(j).moment_complex(k, wp)
        return complex(total)


def c0(series: AlternatingSeries) -> float:
    """``integral |g| = sum eps_j`` (plus the cap of an open tail)."""
    return math.fsum([series.eps(j) for j in series.indices] + [series.open_tail_bound])


def H_at_zero(series: AlternatingSeries) -> LogSigned:
    """``G(0) = sum s_j eps_j`` directly from the coefficients."""
    terms = [LogSigned(series.sign(j), series.log_eps[j - 2]) for j in series.indices]
    return ls_sum(terms, DEFAULT_POLICY)[0]
