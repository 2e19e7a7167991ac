"""
Signed log-domain reals with an explicit precision contract.

A :class:`LogSigned` stores ``sign * exp(logmag)``. The log-magnitude is an
``mpmath.mpf`` so values such as ``exp(-1e21)`` stay representable, and
:func:`ls_sum` reports how many bits a sum lost to cancellation instead of
silently returning noise.

Arithmetic runs under ``mpmath.workprec``, which changes the global mpmath
context for the duration of a call. Values themselves are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import mpmath
from mpmath import mpf

from .errors import PrecisionExhausted

LN2 = math.log(2.0)
NEG_INF = mpf("-inf")


@dataclass(frozen=True)
class PrecisionPolicy:
    """Working precision for log-domain sums.

    ``mantissa_bits`` is the relative precision of every scaled summand;
    ``guard_bits`` is the minimum number of bits that must survive
    cancellation; escalation stops at ``max_bits``.
    """

    mantissa_bits: int = 256
    guard_bits: int = 32
    max_bits: int = 8192

    def __post_init__(self):
        if self.mantissa_bits < 53:
            raise ValueError("mantissa_bits must be >= 53")
        if self.guard_bits < 16:
            raise ValueError("guard_bits must be >= 16")
        if self.max_bits < self.mantissa_bits:
            raise ValueError("max_bits must be >= mantissa_bits")

    def with_bits(self, bits: int) -> PrecisionPolicy:
        return PrecisionPolicy(bits, self.guard_bits, max(self.max_bits, bits))

    def ladder(self) -> Iterator[PrecisionPolicy]:
        """Yield this policy, then policies with doubled mantissa up to ``max_bits``."""
        bits = self.mantissa_bits
        while bits <= self.max_bits:
            yield self.with_bits(bits)
            bits *= 2


DEFAULT_POLICY = PrecisionPolicy()


def _to_mpf_exact(value) -> mpf:
    if isinstance(value, mpf):
        return value
    if isinstance(value, float):
        return mpf(value)  # exact: mpf(float) never needs more than 53 bits
    if isinstance(value, int):
        with mpmath.workprec(max(53, value.bit_length())):
            return mpf(value)
    if isinstance(value, str):
        with mpmath.workprec(max(mpmath.mp.prec, 256)):
            return mpf(value)
    raise TypeError(f"cannot use {type(value).__name__} as a log-magnitude")


@dataclass(frozen=True)
class LogSigned:
    """``sign * exp(logmag)`` with ``sign`` in {-1, 0, +1}; zero iff logmag is -inf."""

    sign: int
    logmag: mpf

    def __post_init__(self):
        logmag = _to_mpf_exact(self.logmag)
        if mpmath.isnan(logmag) or logmag == mpmath.inf:
            raise ValueError(f"invalid log-magnitude {logmag}")
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign}")
        if (self.sign == 0) != (logmag == NEG_INF):
            raise ValueError("sign is 0 exactly when logmag is -inf")
        object.__setattr__(self, "logmag", logmag)

    @classmethod
    def zero(cls) -> LogSigned:
        return cls(0, NEG_INF)

    @classmethod
    def from_log(cls, logmag, sign: int = 1) -> LogSigned:
        return cls(sign, logmag)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __neg__(self) -> LogSigned:
        return LogSigned(-self.sign, self.logmag)

    def __mul__(self, other: LogSigned) -> LogSigned:
        return ls_mul(self, other)

    def scale_exp(self, shift) -> LogSigned:
        """Multiply by ``exp(shift)`` exactly (log addition without rounding)."""
        if self.sign == 0:
            return self
        return LogSigned(self.sign, mpmath.fadd(self.logmag, _to_mpf_exact(shift), exact=True))

    def to_mpf(self, prec: int = 256) -> mpf:
        if self.sign == 0:
            return mpf(0)
        with mpmath.workprec(prec):
            return self.sign * mpmath.exp(self.logmag)

    def to_float(self) -> float:
        """Nearest float; overflows to ``inf`` and underflows to 0 like ``math.exp``."""
        if self.sign == 0:
            return 0.0
        if self.logmag > 710:
            return self.sign * math.inf
        if self.logmag < -746:
            return self.sign * 0.0
        return float(self.to_mpf(80))

    def log_float(self) -> float:
        """Log-magnitude as a float (``-inf`` for zero)."""
        return float(self.logmag)

    def pair(self) -> tuple[int, float]:
        """The ``(sign, log magnitude)`` pair used by file formats."""
        return self.sign, self.log_float()

    def __repr__(self) -> str:
        return f"LogSigned({self.sign:+d}, {mpmath.nstr(self.logmag, 20)})"


def encode(value, policy: PrecisionPolicy = DEFAULT_POLICY) -> LogSigned:
    """Convert a plain real (int, float, Fraction or mpf) to log-signed form."""
    if isinstance(value, Fraction):
        if value == 0:
            return LogSigned.zero()
        sign = 1 if value > 0 else -1
        with mpmath.workprec(policy.mantissa_bits + 16):
            num = mpf(abs(value.numerator))
            den = mpf(value.denominator)
            return LogSigned(sign, mpmath.log(num) - mpmath.log(den))
    v = _to_mpf_exact(value)
    if v == 0:
        return LogSigned.zero()
    if not mpmath.isfinite(v):
        raise ValueError(f"cannot encode non-finite value {value!r}")
    with mpmath.workprec(policy.mantissa_bits + 16):
        return LogSigned(1 if v > 0 else -1, mpmath.log(abs(v)))


def decode(value: LogSigned, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpf:
    return value.to_mpf(policy.mantissa_bits + 16)


def ls_mul(a: LogSigned, b: LogSigned) -> LogSigned:
    if a.sign == 0 or b.sign == 0:
        return LogSigned.zero()
    return LogSigned(a.sign * b.sign, mpmath.fadd(a.logmag, b.logmag, exact=True))


def _exactly_cancels(terms: list[LogSigned]) -> bool:
    totals: dict[mpf, int] = {}
    for t in terms:
        totals[t.logmag] = totals.get(t.logmag, 0) + t.sign
    return all(v == 0 for v in totals.values())


def _magnitude_bits(values: Iterable[mpf]) -> int:
    biggest = max((abs(v) for v in values), default=mpf(0))
    return int(mpmath.ceil(biggest)).bit_length() if biggest > 0 else 0


def ls_sum(terms: Iterable[LogSigned],
           policy: PrecisionPolicy = DEFAULT_POLICY) -> tuple[LogSigned, float]:
    """
    Signed sum of log-domain terms.

    Returns ``(total, cancellation_depth)`` where the depth is
    ``max(term logmag) - total logmag`` in nats (negative when terms
    reinforce, ``inf`` for an exact zero). Summands are scaled by the
    largest magnitude, so each carries ``policy.mantissa_bits`` of relative
    precision; if cancellation leaves fewer than ``policy.guard_bits`` bits
    the result is untrustworthy and :class:`PrecisionExhausted` is raised.

    An exact zero is only reported when the terms cancel in identical
    pairs; any other vanishing sum is treated as exhausted precision.
    """
    live = sorted((t for t in terms if t.sign != 0),
                  key=lambda t: (-t.logmag, -t.sign))
    if not live:
        return LogSigned.zero(), math.inf
    n = len(live)
    top = live[0].logmag
    if n == 1:
        return live[0], 0.0
    count_bits = n.bit_length()
    wp = policy.mantissa_bits + _magnitude_bits(t.logmag for t in live) + count_bits + 8
    with mpmath.workprec(wp):
        scaled = [t.sign * mpmath.exp(t.logmag - top) for t in live]
        total = mpmath.fsum(scaled)
        if total == 0:
            if _exactly_cancels(live):
                return LogSigned.zero(), math.inf
            raise PrecisionExhausted("sum vanished at working precision", math.inf)
        log_total = mpmath.log(abs(total))
        depth = -float(log_total)
        depth_bits = depth / LN2
        if depth_bits + policy.guard_bits + count_bits + 2 > policy.mantissa_bits:
            raise PrecisionExhausted(
                f"cancellation of {depth_bits:.1f} bits exceeds a "
                f"{policy.mantissa_bits}-bit mantissa with {policy.guard_bits} guard bits",
                depth_bits)
        return LogSigned(1 if total > 0 else -1, top + log_total), depth


def ls_sum_escalating(make_terms, policy: PrecisionPolicy = DEFAULT_POLICY):
    """
    Retry ``ls_sum(make_terms(p), p)`` up the policy's precision ladder.

    ``make_terms`` receives the current policy so summands can be recomputed
    at matching precision. Returns ``(total, depth, policy_used)``.
    """
    last = None
    for p in policy.ladder():
        try:
            total, depth = ls_sum(make_terms(p), p)
            return total, depth, p
        except PrecisionExhausted as exc:
            last = exc
    raise PrecisionExhausted(
        f"cancellation not resolved at {policy.max_bits} bits", last.depth_bits if last else None)
