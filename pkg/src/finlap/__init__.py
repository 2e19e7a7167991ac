"""Certified construction of a nonzero g on (0, 1) whose finite Laplace transform
G(k) = integral_0^1 g(x) exp(k x) dx changes sign along k -> +inf."""

from .basis import Bump, Partition, moment, moment_imag, moment_ratio, normalizer, partition_point
from .forge import Certificate, ForgeParams, erosion_report, forge
from .scaled_arith import LogSigned, PrecisionPolicy, ls_mul, ls_sum
from .series import AlternatingSeries, TransformValue, c0, eval_G_complex, eval_g, eval_H
from .verify import VerifyReport, run_all
from .zeros import ZeroBracket, bisect, bracket_zeros, find_zeros

__all__ = [
    "AlternatingSeries", "Bump", "Certificate", "ForgeParams", "LogSigned", "Partition",
    "PrecisionPolicy", "TransformValue", "VerifyReport", "ZeroBracket", "bisect",
    "bracket_zeros", "c0", "erosion_report", "eval_G_complex", "eval_H", "eval_g",
    "find_zeros", "forge", "ls_mul", "ls_sum", "moment", "moment_imag", "moment_ratio",
    "normalizer", "partition_point", "run_all",
]
