"""One test per acceptance criterion, each at its stated tolerance."""

import time
from fractions import Fraction

import mpmath

from finlap import AlternatingSeries, ForgeParams, forge
from finlap.basis import beta_normalizer, moment, moment_imag, quadrature_oracle
from finlap.cli import main
from finlap.scaled_arith import PrecisionPolicy
from finlap.series import c0, eval_G_complex, eval_H
from finlap.verify import (
    NOT_FINITELY_CHECKABLE,
    check_alternation,
    check_imaginary_axis,
    check_left_halfplane,
    check_oscillation,
    check_ratio_divergence,
    check_sign_definite_growth,
)
from finlap.zeros import confirm_sign_change

REL_TOL = 1e-12


def test_criterion_01_forge(acceptance_log):
    start = time.perf_counter()
    cert = forge(AlternatingSeries.geometric(),
                 ForgeParams(omega=0.1, pairs=5, policy=PrecisionPolicy(mantissa_bits=256)))
    elapsed = time.perf_counter() - start
    result = check_alternation(cert)
    margins_ok = all(c.final.sign == c.sign and c.final.logmag >= mpmath.log(0.1)
                     for c in cert.checkpoints)
    ok = elapsed < 60 and result.passed and margins_ok and len(cert.checkpoints) == 10
    acceptance_log(1, ok, f"forge {elapsed:.2f}s (<60s), alternation {result.passed}, "
                          f"worst log(margin/omega) {result.worst_margin:.3g}")
    assert ok, result.detail


def test_criterion_02_zeros(default_cert, default_series, default_zeros, acceptance_log):
    ks = [z.k for z in default_zeros]
    increasing = all(a < b for a, b in zip(ks, ks[1:]))
    widths = max((z.hi - z.lo) / z.k for z in default_zeros)
    confirmed = all(confirm_sign_change(default_series, z, REL_TOL, default_cert.params.policy)
                    for z in default_zeros)
    ok = len(default_zeros) >= 9 and increasing and confirmed and widths <= REL_TOL
    acceptance_log(2, ok, f"{len(default_zeros)} zeros, increasing {increasing}, "
                          f"sign changes confirmed {confirmed}, max rel width {widths:.2e}")
    assert ok


def test_criterion_03_oracle_equivalence(acceptance_log):
    worst = 0.0
    with mpmath.workdps(40):
        for j in range(2, 7):
            for k in (0, 1, 10, 100, 1000):
                closed = mpmath.exp(moment(j, k).logmag)
                oracle = quadrature_oracle(j, k)
                worst = max(worst, float(abs(closed - oracle) / oracle))
            for tau in (1.0, 10.0, 100.0):
                closed = moment_imag(j, tau)
                oracle = complex(quadrature_oracle(j, mpmath.mpc(0, tau)))
                worst = max(worst, abs(closed - oracle) / abs(oracle))
    ok = worst <= 1e-10
    acceptance_log(3, ok, f"worst relative disagreement {worst:.2e} (<=1e-10)")
    assert ok


def test_criterion_04_exact_anchors(default_series, acceptance_log):
    m0 = max(abs(float(mpmath.exp(moment(j, 0).logmag)) - 1) for j in range(2, 65))
    direct = mpmath.fsum(default_series.sign(j) * mpmath.exp(default_series.log_eps_mpf(j))
                         for j in default_series.indices)
    via_h = eval_H(default_series, 0).value.to_float()
    g0 = abs(via_h - float(direct)) / abs(float(direct))
    n = abs(float(beta_normalizer(Fraction(1), 2)) - 1 / 30)
    ok = m0 <= 1e-12 and g0 <= 1e-12 and n <= 1e-14
    acceptance_log(4, ok, f"|moment(j,0)-1| {m0:.1e}, G(0) rel {g0:.1e}, normalizer {n:.1e}")
    assert ok


def test_criterion_05_bounds(default_series, acceptance_log):
    left = check_left_halfplane(default_series)
    axis = check_imaginary_axis(default_series)
    ratio = abs(eval_G_complex(default_series, 1000j)) / c0(default_series)
    ok = left.passed and axis.passed and ratio < 0.01
    acceptance_log(5, ok, f"left half-plane max|G|/c0 {left.worst_margin:.4f}, imaginary axis "
                          f"max|G|/c0 {axis.worst_margin:.4f}, |G(1000i)|/c0 {ratio:.2e}")
    assert ok


def test_criterion_06_ratio_divergence(acceptance_log):
    result = check_ratio_divergence(2, 3)
    acceptance_log(6, result.passed, f"G3/G2 monotone on 2^0..2^14, "
                                     f"log growth over 1e3 {result.worst_margin:.3g}")
    assert result.passed


def test_criterion_07_sign_definite_growth(default_series, acceptance_log):
    result = check_sign_definite_growth(default_series.positive_variant())
    acceptance_log(7, result.passed, f"G_f increasing, log(G_f(1024)/G_f(0)/1e6) "
                                     f"{result.worst_margin:.3g}")
    assert result.passed


def test_criterion_08_oscillation(default_series, acceptance_log):
    result = check_oscillation(default_series)
    acceptance_log(8, result.passed, "sign changes match the predicted count for n = 2..10"
                   + (f": {result.detail}" if result.detail else ""))
    assert result.passed


def test_criterion_09_unverifiable_claims_and_negative_controls(default_cert, default_series,
                                                               acceptance_log):
    import dataclasses
    first = dataclasses.replace(default_cert.checkpoints[0], b=default_cert.b[0] * 1.1)
    perturbed = dataclasses.replace(default_cert,
                                    checkpoints=(first,) + default_cert.checkpoints[1:])
    perturbed_fails = not check_alternation(perturbed).passed
    flipped_fails = not check_alternation(default_cert, default_series.negated()).passed
    documented = len(NOT_FINITELY_CHECKABLE) == 2
    ok = perturbed_fails and flipped_fails and documented
    acceptance_log(9, ok, f"2 claims reported as not checked {documented}, perturbed b_2 "
                          f"fails {perturbed_fails}, flipped signs fail {flipped_fails}")
    assert ok


def test_criterion_10_determinism(tmp_path, acceptance_log):
    runs = []
    for name in ("first", "second"):
        d = tmp_path / name
        d.mkdir()
        codes = (main(["forge", "--out", str(d / "cert.json")]),
                 main(["verify", "--in", str(d / "cert.json"), "--out", str(d / "report.json"),
                       "--seed", "7"]))
        runs.append((codes, (d / "cert.json").read_bytes(), (d / "report.json").read_bytes()))
    ok = runs[0] == runs[1] and runs[0][0] == (0, 0)
    acceptance_log(10, ok, "certificate and report byte-identical across two runs")
    assert ok
