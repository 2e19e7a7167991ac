import dataclasses
import math

import pytest

from finlap.errors import MarginCheckFailed, SignLost
from finlap.scaled_arith import LN2, LogSigned, PrecisionPolicy
from finlap.series import eval_H
from finlap.zeros import (
    ZeroBracket,
    bisect,
    bracket_zeros,
    confirm_sign_change,
    find_zeros,
)


def test_single_pair_gives_one_bracket(small_cert):
    brackets = bracket_zeros(small_cert)
    assert len(brackets) == 1
    assert (brackets[0].lo, brackets[0].hi) == tuple(small_cert.b)


def test_three_pairs_give_five_ordered_brackets(cert_m3):
    brackets = bracket_zeros(cert_m3)
    assert len(brackets) == 5
    assert all(a.hi <= b.lo for a, b in zip(brackets, brackets[1:]))


def test_bracket_endpoints_clear_the_margin(cert_m3):
    series = cert_m3.series()
    floor = math.log(cert_m3.omega * (1 - 1 / 100))
    for br in bracket_zeros(cert_m3):
        for k in (br.lo, br.hi):
            assert eval_H(series, k).value.scale_exp(k).logmag >= floor


def test_bracket_validation():
    pos, neg = LogSigned(1, 0.0), LogSigned(-1, 0.0)
    with pytest.raises(ValueError):
        ZeroBracket(2, 5.0, 5.0, pos, neg)
    with pytest.raises(ValueError):
        ZeroBracket(2, 1.0, 5.0, pos, pos)


def test_bisection_contract(small_cert):
    series = small_cert.series()
    (br,) = bracket_zeros(small_cert)
    z = bisect(br, series, rel_tol=1e-12)
    assert br.lo < z.lo <= z.k <= z.hi < br.hi
    assert z.hi - z.lo <= 1e-12 * z.k
    assert confirm_sign_change(series, z, 1e-12)


def test_doubling_tolerance_saves_one_iteration(small_cert):
    series = small_cert.series()
    (br,) = bracket_zeros(small_cert)
    fine = bisect(br, series, rel_tol=1e-10, polish=False)
    coarse = bisect(br, series, rel_tol=2e-10, polish=False)
    assert fine.iterations - coarse.iterations in (0, 1, 2)


def test_default_zeros(default_cert, default_zeros):
    assert len(default_zeros) == 2 * default_cert.params.pairs - 1
    ks = [z.k for z in default_zeros]
    assert all(a < b for a, b in zip(ks, ks[1:]))
    for z, (left, right) in zip(default_zeros, zip(default_cert.b, default_cert.b[1:])):
        assert left < z.lo <= z.k <= z.hi < right
        assert z.hi - z.lo <= 1e-12 * z.k


def test_residual_below_guard_fraction_of_largest_term(default_cert, default_zeros):
    target = -default_cert.params.policy.guard_bits * LN2
    for z in default_zeros:
        assert z.residual_rel <= target
        assert z.lo <= float(z.refined_mpf) <= z.hi
        tv = eval_H(default_cert.series(), z.refined_mpf)
        assert tv.value == z.residual


def test_rejects_non_positive_tolerance(small_cert):
    (br,) = bracket_zeros(small_cert)
    with pytest.raises(ValueError):
        bisect(br, small_cert.series(), rel_tol=0)


def test_stale_certificate_is_detected(small_cert):
    with pytest.raises(MarginCheckFailed):
        find_zeros(small_cert, small_cert.series().negated())
    moved = dataclasses.replace(small_cert.checkpoints[1], b=small_cert.b[1] / 2)
    tampered = dataclasses.replace(small_cert,
                                   checkpoints=small_cert.checkpoints[:1] + (moved,))
    with pytest.raises(MarginCheckFailed):
        bracket_zeros(tampered)


def test_sign_lost_when_precision_is_capped(small_cert):
    tight = PrecisionPolicy(mantissa_bits=60, guard_bits=16, max_bits=60)
    (br,) = bracket_zeros(small_cert, policy=tight)
    with pytest.raises(SignLost):
        bisect(br, small_cert.series(), rel_tol=1e-14, policy=tight)
