"""Zeros of G forced between consecutive alternation checkpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from mpmath import mpf

from .errors import MarginCheckFailed, PrecisionExhausted, SignLost
from .forge import Certificate, ZeroRecord
from .scaled_arith import LN2, LogSigned, PrecisionPolicy
from .series import AlternatingSeries, eval_H

DEFAULT_REL_TOL = 1e-12


@dataclass(frozen=True)
class ZeroBracket:
    """``H`` changes sign on ``[lo, hi]``; ``j`` is the index of the left checkpoint."""

    j: int
    lo: float
    hi: float
    h_lo: LogSigned
    h_hi: LogSigned

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("bracket needs lo < hi")
        if self.h_lo.sign * self.h_hi.sign != -1:
            raise ValueError("bracket endpoints must have opposite signs")


def _policy(cert: Certificate | None, policy: PrecisionPolicy | None) -> PrecisionPolicy:
    if policy is not None:
        return policy
    return cert.params.policy if cert is not None else PrecisionPolicy()


def sign_of_H(series: AlternatingSeries, k: float, policy: PrecisionPolicy) -> LogSigned:
    """Fully summed ``H(k)``; escalates precision and reports a lost sign as :class:`SignLost`."""
    try:
        return eval_H(series, k, policy=policy).value
    except PrecisionExhausted as exc:
        raise SignLost(f"sign of H({k!r}) unresolved at {policy.max_bits} bits") from exc


def bracket_zeros(cert: Certificate, series: AlternatingSeries | None = None,
                  policy: PrecisionPolicy | None = None) -> list[ZeroBracket]:
    """One bracket per adjacent checkpoint pair whose recomputed signs differ."""
    series = cert.series() if series is None else series
    policy = _policy(cert, policy)
    floor = math.log(cert.omega * (1 - 1e-2))
    values = []
    for c in cert.checkpoints:
        h = sign_of_H(series, c.b, policy)
        if h.sign != c.sign or h.scale_exp(c.b).logmag < floor:
            raise MarginCheckFailed(
                f"checkpoint b_{c.j} = {c.b!r} does not reproduce its recorded margin")
        values.append(h)
    out = []
    for i in range(len(values) - 1):
        if values[i].sign * values[i + 1].sign == -1:
            a, b = cert.checkpoints[i], cert.checkpoints[i + 1]
            out.append(ZeroBracket(a.j, a.b, b.b, values[i], values[i + 1]))
    return out


def _polish(series: AlternatingSeries, lo: float, hi: float, s_lo: int,
            policy: PrecisionPolicy, max_steps: int):
    """
    Continue bisecting with exact binary midpoints until the residual is at
    most ``2**-guard_bits`` of the largest summand.

    Returns ``(point, H(point), log residual relative to the largest term, steps)``.
    """
    target = -policy.guard_bits * LN2
    lo_m, hi_m = mpf(lo), mpf(hi)
    point = mpmath.ldexp(mpmath.fadd(lo_m, hi_m, exact=True), -1)
    tv = eval_H(series, point, policy=policy)
    steps = 0
    while tv.sign != 0 and -tv.depth > target and steps < max_steps:
        if tv.sign == s_lo:
            lo_m = point
        else:
            hi_m = point
        point = mpmath.ldexp(mpmath.fadd(lo_m, hi_m, exact=True), -1)
        tv = eval_H(series, point, policy=policy)
        steps += 1
    rel = -math.inf if tv.sign == 0 else -tv.depth
    return point, tv.value, rel, steps


def bisect(bracket: ZeroBracket, series: AlternatingSeries, rel_tol: float = DEFAULT_REL_TOL,
           policy: PrecisionPolicy | None = None, *, polish: bool = True,
           max_polish_steps: int = 400) -> ZeroRecord:
    """
    Bisect on the sign of ``H`` until ``hi - lo <= rel_tol * k``.

    With ``polish`` the search then continues on exact binary midpoints
    inside ``[lo, hi]`` until ``|H|`` is at most ``2**-guard_bits`` times the
    largest summand. At large ``k`` adjacent floats are too far apart for
    that, so the refined point is stored exactly alongside the float ``k``.
    """
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    policy = _policy(None, policy)
    lo, hi = bracket.lo, bracket.hi
    s_lo = bracket.h_lo.sign
    iterations = 0
    while hi - lo > rel_tol * (lo + (hi - lo) / 2):
        mid = lo + (hi - lo) / 2
        if not lo < mid < hi:
            break
        h = sign_of_H(series, mid, policy)
        iterations += 1
        if h.sign == 0:
            lo = hi = mid
            break
        if h.sign == s_lo:
            lo = mid
        else:
            hi = mid
    try:
        point, residual, rel, steps = _polish(series, lo, hi, s_lo, policy,
                                              max_polish_steps if polish else 0)
    except PrecisionExhausted as exc:
        raise SignLost(f"sign of H unresolved near k = {lo!r}") from exc
    man, exp = point.man_exp
    k = float(point)
    return ZeroRecord(bracket.j, k, lo, hi, iterations, residual, rel,
                      (int(man), int(exp)), steps)


def find_zeros(cert: Certificate, series: AlternatingSeries | None = None,
               rel_tol: float = DEFAULT_REL_TOL,
               policy: PrecisionPolicy | None = None) -> list[ZeroRecord]:
    series = cert.series() if series is None else series
    policy = _policy(cert, policy)
    zeros = [bisect(br, series, rel_tol, policy) for br in bracket_zeros(cert, series, policy)]
    for a, b in zip(zeros, zeros[1:]):
        if not a.k < b.k:
            raise MarginCheckFailed("zeros are not strictly increasing")
    return zeros


def confirm_sign_change(series: AlternatingSeries, zero: ZeroRecord, rel_tol: float,
                        policy: PrecisionPolicy | None = None) -> bool:
    """``H`` has opposite signs at ``k -/+ 10 * rel_tol * k``."""
    policy = _policy(None, policy)
    w = 10 * rel_tol * zero.k
    left = sign_of_H(series, zero.k - w, policy)
    right = sign_of_H(series, zero.k + w, policy)
    return left.sign * right.sign == -1
