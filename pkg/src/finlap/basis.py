"""
Dyadic partition of (0, 1), polynomial bumps and their exponential moments.

Interval ``j >= 2`` is ``[x_j, x_{j+1}]`` with ``x_j = 1 - 2**-j``. Each bump
lives on the centred ``sigma``-fraction ``[a_j, c_j]`` of its interval, so
neighbouring supports are separated by a positive gap. The bump profile is

    f_j(x) = (x - a_j)**p * (c_j - x)**p / N_j,    N_j = w**(2p+1) * B(p+1, p+1)

and its moment ``G_j(k) = integral f_j(x) exp(k x) dx`` is evaluated in the
factored form ``exp(k c_j) * M(k w)`` (``exp(k a_j) * M(-k w)`` for k < 0) with

    M(mu) = 1F1(p+1; 2p+2; -mu) = integral_0^1 s^p (1-s)^p exp(-mu s) ds / B(p+1, p+1).

``M`` is computed by one of three routes depending on ``mu``:

* ``mu <= 1``: the Taylor series of ``1F1``, alternating with decreasing terms.
* ``1 < mu <= switch``: Kummer's transformation ``M = exp(-mu) 1F1(p+1; 2p+2; mu)``,
  a series of positive terms only.
* ``mu > switch``: repeated integration by parts, which terminates after
  ``p + 1`` terms per endpoint; the terms decrease by a factor of at least 8,
  so cancellation costs under one bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mpf

from .errors import ToleranceNotMet
from .scaled_arith import DEFAULT_POLICY, LogSigned, PrecisionPolicy


def partition_point(j: int) -> float:
    """Left end ``x_j = 1 - 2**-j`` of the j-th interval."""
    if j < 2:
        raise ValueError(f"partition index must be >= 2, got {j}")
    return 1.0 - 2.0 ** -j


def beta_pp(p: int) -> Fraction:
    """``B(p+1, p+1) = (p!)**2 / (2p+1)!``."""
    return Fraction(math.factorial(p) ** 2, math.factorial(2 * p + 1))


def beta_normalizer(width, p: int) -> Fraction:
    """``integral_0^w t^p (w-t)^p dt`` for a support of width ``w``, exactly."""
    return Fraction(width) ** (2 * p + 1) * beta_pp(p)


def _exact_mpf(q: Fraction) -> mpf:
    # Dyadic rationals convert exactly when the precision covers the numerator.
    with mpmath.workprec(max(mpmath.mp.prec, q.numerator.bit_length() + 8)):
        return mpf(q.numerator) / q.denominator


@dataclass(frozen=True)
class Partition:
    """Dyadic interval scheme with supports shrunk to a centred fraction ``sigma``."""

    sigma: float = 0.9
    scheme: str = "dyadic"

    def __post_init__(self):
        if self.scheme != "dyadic":
            raise ValueError(f"unknown partition scheme {self.scheme!r}")
        if not 0.0 < self.sigma < 1.0:
            raise ValueError("sigma must lie in (0, 1)")

    def point(self, j: int) -> Fraction:
        if j < 2:
            raise ValueError(f"partition index must be >= 2, got {j}")
        return 1 - Fraction(1, 2 ** j)

    def support(self, j: int) -> tuple[Fraction, Fraction]:
        """Closed support ``[a_j, c_j]``, exact."""
        if j < 2:
            raise ValueError(f"partition index must be >= 2, got {j}")
        q = Fraction(1, 2 ** (j + 2))
        s = Fraction(self.sigma)
        return 1 - (3 + s) * q, 1 - (3 - s) * q

    def bump(self, j: int, p: int = 2) -> Bump:
        return _bump(self, j, p)


@lru_cache(maxsize=4096)
def _bump(partition: Partition, j: int, p: int) -> Bump:
    a, c = partition.support(j)
    return Bump(j, a, c, p)


DEFAULT_PARTITION = Partition()


def mu_switch(p: int) -> int:
    """Above this ``mu`` the integration-by-parts form is used."""
    return max(32, 8 * p * (p + 1))


def _ibp_coefficients(p: int) -> list[int]:
    # (p+n)! * C(p, n): magnitudes of the endpoint derivatives of s^p (1-s)^p.
    return [math.factorial(p + n) * math.comb(p, n) for n in range(p + 1)]


def _series_small(p: int, z, wp: int):
    """Taylor series of 1F1(p+1; 2p+2; z), for |z| up to ``mu_switch``."""
    total = term = mpf(1)
    tiny = mpf(2) ** (-wp - 8)
    n = 0
    while True:
        term = term * (p + 1 + n) / (2 * p + 2 + n) * z / (n + 1)
        total += term
        n += 1
        if n > abs(z) and abs(term) <= tiny * abs(total):
            return total


def _log_kummer_positive(p: int, mu: mpf, wp: int) -> mpf:
    """log M(mu) via exp(-mu) * 1F1(p+1; 2p+2; mu); every term positive."""
    total = term = mpf(1)
    tiny = mpf(2) ** (-wp - 8)
    n = 0
    while True:
        ratio = (p + 1 + n) * mu / ((2 * p + 2 + n) * (n + 1))
        term = term * ratio
        total += term
        n += 1
        if ratio < 0.5 and term <= tiny * total:
            return -mu + mpmath.log(total)


def _ibp_integral(p: int, mu, wp: int):
    """integral_0^1 s^p (1-s)^p exp(-mu s) ds by finite integration by parts."""
    coeffs = _ibp_coefficients(p)
    inv = 1 / mu
    head = inv ** (p + 1)
    near_zero = mpf(0)
    near_one = mpf(0)
    power = head
    for n, c in enumerate(coeffs):
        near_zero += (-1) ** n * c * power
        near_one += c * power
        power *= inv
    return near_zero - (-1) ** p * mpmath.exp(-mu) * near_one


def log_kummer_m(p: int, mu, wp: int) -> mpf:
    """``log M(mu)`` for real ``mu >= 0`` at ``wp`` bits."""
    with mpmath.workprec(wp):
        mu = mpf(mu)
        if mu < 0:
            raise ValueError("mu must be non-negative")
        if mu == 0:
            return mpf(0)
        if mu <= 1:
            return mpmath.log(_series_small(p, -mu, wp))
        if mu <= mu_switch(p):
            return _log_kummer_positive(p, mu, wp)
        beta = mpf(beta_pp(p).numerator) / beta_pp(p).denominator
        return mpmath.log(_ibp_integral(p, mu, wp)) - mpmath.log(beta)


def kummer_m_complex(p: int, mu, wp: int = 128):
    """``M(mu)`` for complex ``mu`` with non-negative real part."""
    with mpmath.workprec(wp):
        mu = mpmath.mpc(mu)
        if mu.real < 0:
            raise ValueError("complex moments need Re(mu) >= 0")
        r = abs(mu)
        if r <= mu_switch(p):
            # Terms peak near exp(|mu|); carry that many extra bits.
            extra = int(r * 1.4427) + 16
            with mpmath.workprec(wp + extra):
                return +_series_small(p, -mu, wp)
        beta = mpf(beta_pp(p).numerator) / beta_pp(p).denominator
        return _ibp_integral(p, mu, wp) / beta


def _working_bits(policy: PrecisionPolicy, k) -> int:
    mag = int(abs(mpf(k))) + 1
    return policy.mantissa_bits + policy.guard_bits + mag.bit_length() + 16


def _as_mpf(k) -> mpf:
    if isinstance(k, Fraction):
        return _exact_mpf(k)
    if isinstance(k, int):
        with mpmath.workprec(max(53, k.bit_length())):
            return mpf(k)
    return mpf(k)


@dataclass(frozen=True)
class Bump:
    """Normalised polynomial bump on ``[a, c]``."""

    j: int
    a: Fraction
    c: Fraction
    p: int = 2

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("smoothness order p must be >= 1")
        if not self.a < self.c:
            raise ValueError("empty support")

    @property
    def width(self) -> Fraction:
        return self.c - self.a

    @property
    def normalizer(self) -> Fraction:
        return beta_normalizer(self.width, self.p)

    @property
    def midpoint(self) -> Fraction:
        return (self.a + self.c) / 2

    def __call__(self, x: float) -> float:
        a, c = float(self.a), float(self.c)
        if not a < x < c:
            return 0.0
        return ((x - a) * (c - x)) ** self.p / float(self.normalizer)

    def log_value(self, x, prec: int = 128) -> mpf:
        """``log f_j(x)``; ``-inf`` outside the open support."""
        with mpmath.workprec(prec):
            x = _as_mpf(x)
            a, c = _exact_mpf(self.a), _exact_mpf(self.c)
            if not a < x < c:
                return mpf("-inf")
            n = self.normalizer
            return (self.p * (mpmath.log(x - a) + mpmath.log(c - x))
                    - mpmath.log(n.numerator) + mpmath.log(n.denominator))

    def log_m(self, k, policy: PrecisionPolicy = DEFAULT_POLICY) -> mpf:
        """``log M(|k| w)``, the decay factor left after removing ``exp(k c)``."""
        wp = _working_bits(policy, k)
        with mpmath.workprec(wp):
            mu = abs(_as_mpf(k)) * _exact_mpf(self.width)
            return log_kummer_m(self.p, mu, wp)

    def moment(self, k, policy: PrecisionPolicy = DEFAULT_POLICY) -> LogSigned:
        wp = _working_bits(policy, k)
        with mpmath.workprec(wp):
            kk = _as_mpf(k)
            end = self.c if kk >= 0 else self.a
            mu = abs(kk) * _exact_mpf(self.width)
            return LogSigned(1, kk * _exact_mpf(end) + log_kummer_m(self.p, mu, wp))

    def moment_complex(self, k, wp: int = 128) -> mpmath.mpc:
        """``G_j(k)`` for complex ``k`` with ``Re k <= 0`` (mirror-factored about ``a``)."""
        with mpmath.workprec(wp):
            k = mpmath.mpc(k)
            if k.real > 0:
                raise ValueError("complex moments are only provided for Re k <= 0")
            mu = -k * _exact_mpf(self.width)
            return mpmath.exp(k * _exact_mpf(self.a)) * kummer_m_complex(self.p, mu, wp)


def _bump_for(j: int, p: int, partition: Partition) -> Bump:
    return partition.bump(j, p)


def normalizer(j: int, p: int = 2, partition: Partition = DEFAULT_PARTITION) -> float:
    return float(_bump_for(j, p, partition).normalizer)


def moment(j: int, k, policy: PrecisionPolicy = DEFAULT_POLICY, *, p: int = 2,
           partition: Partition = DEFAULT_PARTITION) -> LogSigned:
    """``G_j(k)`` for real ``k`` as a log-signed value (always positive)."""
    return _bump_for(j, p, partition).moment(k, policy)


def moment_imag(j: int, tau: float, *, p: int = 2,
                partition: Partition = DEFAULT_PARTITION) -> complex:
    """``G_j(i tau)``; bounded by 1 in modulus."""
    if abs(tau) > 1e6:
        raise ValueError("|tau| must not exceed 1e6")
    return complex(_bump_for(j, p, partition).moment_complex(mpmath.mpc(0, tau)))


def moment_ratio(m: int, j: int, k, policy: PrecisionPolicy = DEFAULT_POLICY, *,
                 p: int = 2, partition: Partition = DEFAULT_PARTITION) -> LogSigned:
    """``G_m(k) / G_j(k)`` for ``m > j``, without forming either moment."""
    if not m > j >= 2:
        raise ValueError(f"need m > j >= 2, got m={m}, j={j}")
    if k < 0:
        raise ValueError("ratio is defined here for k >= 0")
    bm, bj = _bump_for(m, p, partition), _bump_for(j, p, partition)
    wp = _working_bits(policy, k)
    with mpmath.workprec(wp):
        kk = _as_mpf(k)
        gap = _exact_mpf(bm.c - bj.c)
        return LogSigned(1, kk * gap + bm.log_m(k, policy) - bj.log_m(k, policy))


def _quad_points(bump: Bump, k) -> list:
    a, c = _exact_mpf(bump.a), _exact_mpf(bump.c)
    w = c - a
    pts = [a, c]
    re, im = mpmath.re(k), mpmath.im(k)
    if abs(re) * w > 4:
        # Mass concentrates within ~(p+1)/|k| of the dominant endpoint.
        depth = int(mpmath.ceil(mpmath.log(abs(re) * w, 2))) + 4
        for i in range(1, depth + 1):
            off = w * mpf(2) ** -i
            pts.append(c - off if re > 0 else a + off)
    if im != 0:
        pieces = int(mpmath.ceil(abs(im) * w / mpmath.pi)) + 1
        pts.extend(a + w * i / pieces for i in range(1, pieces))
    return sorted(set(pts))


def quadrature_oracle(j: int, k, *, p: int = 2, partition: Partition = DEFAULT_PARTITION,
                      dps: int = 40, rel_tol: float = 1e-12, bump: Bump | None = None):
    """
    Adaptive quadrature of ``integral f_j(x) exp(k x) dx`` in the original variable.

    Shares nothing with the closed-form route except the bump definition.
    Returns an ``mpf`` (real ``k``) or ``mpc`` (complex ``k``). Pass ``bump``
    to integrate a bump that is not part of the partition.
    """
    if bump is None:
        bump = _bump_for(j, p, partition)
    p = bump.p
    with mpmath.workdps(dps):
        a, c = _exact_mpf(bump.a), _exact_mpf(bump.c)
        norm = _exact_mpf(bump.normalizer)
        kk = mpmath.mpmathify(k)

        # Scale so the integrand is O(1): quad stops on an absolute tolerance.
        ref = c if mpmath.re(kk) >= 0 else a
        width_scale = (c - a) ** (2 * p)

        def integrand(x):
            return ((x - a) * (c - x)) ** p / width_scale * mpmath.exp(kk * (x - ref))

        value, err = mpmath.quad(integrand, _quad_points(bump, kk), error=True, maxdegree=10)
        factor = width_scale / norm * mpmath.exp(kk * ref)
        value *= factor
        err *= abs(factor)
        if value == 0 or err > rel_tol * abs(value):
            raise ToleranceNotMet(
                f"quadrature error {mpmath.nstr(err, 3)} exceeds {rel_tol} relative")
        return value


def mollifier_moment(j: int, k, *, partition: Partition = DEFAULT_PARTITION, dps: int = 30):
    """
    Moment of the C-infinity profile ``exp(-1/(1-s^2))`` on the same support.

    Quadrature only; offered for comparison with the polynomial bumps.
    """
    a, c = partition.support(j)
    with mpmath.workdps(dps):
        a, c = _exact_mpf(a), _exact_mpf(c)
        mid, half = (a + c) / 2, (c - a) / 2
        kk = mpmath.mpmathify(k)

        def profile(x):
            s = (x - mid) / half
            return mpmath.exp(-1 / (1 - s * s)) if abs(s) < 1 else mpf(0)

        pts = [a, mid, c]
        norm = mpmath.quad(profile, pts)
        return mpmath.quad(lambda x: profile(x) * mpmath.exp(kk * x), pts) / norm
