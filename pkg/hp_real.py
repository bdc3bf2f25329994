"""
High-precision real arithmetic module for the q-series verification suite
Handles the precision context, exp, erf, pi, Hermite polynomials and the
parabolic cylinder functions D_n (integer n >= 0) and D_{-1}
"""
from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

from dotenv import load_dotenv
from mpmath import mpf
from mpmath.ctx_mp import MPContext

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

# HReal is an mpmath mpf bound to the context of a PrecisionContext
HReal = mpf

MIN_DIGITS = 30
EXP_RANGE = 10 ** 4
ERF_RANGE = 50
MAX_HERMITE = 200


class RangeError(ValueError):
    """Raised when an argument falls outside a function's supported range"""


@dataclass(frozen=True)
class PrecisionContext:
    """
    Working precision P (decimal digits) plus G guard digits

    Every numeric operation takes one of these; arithmetic runs at P + G
    digits in a per-thread mpmath context.
    """
    digits: int = 50
    guard: int = 10

    def __post_init__(self):
        if self.digits < MIN_DIGITS:
            raise ValueError(f"precision must be >= {MIN_DIGITS} digits, got {self.digits}")
        if self.guard < 0:
            raise ValueError("guard digits must be >= 0")

    @property
    def working_digits(self) -> int:
        return self.digits + self.guard

    @property
    def ctx(self) -> MPContext:
        return _context_for(self.working_digits)

    def mpf(self, x) -> HReal:
        return to_hreal(x, self)

    def extended(self, extra: int) -> "PrecisionContext":
        """Same guard, P raised by extra digits"""
        return PrecisionContext(self.digits + extra, self.guard)

    def eps(self) -> HReal:
        """10^{-P} in this context"""
        return self.ctx.mpf(10) ** (-self.digits)


_local = threading.local()


def _context_for(working_digits: int) -> MPContext:
    contexts = getattr(_local, "contexts", None)
    if contexts is None:
        contexts = _local.contexts = {}
    ctx = contexts.get(working_digits)
    if ctx is None:
        ctx = MPContext()
        ctx.dps = working_digits
        contexts[working_digits] = ctx
        logger.debug("created mpmath context at %s digits on %s", working_digits, threading.current_thread().name)
    return ctx


def default_precision() -> PrecisionContext:
    """Precision from QSERIES_PRECISION / QSERIES_GUARD_DIGITS (defaults 50 / 10)"""
    digits = int(os.environ.get("QSERIES_PRECISION", "50"))
    guard = int(os.environ.get("QSERIES_GUARD_DIGITS", "10"))
    return PrecisionContext(digits, guard)


def resolve_precision(precision: PrecisionContext | int | None) -> PrecisionContext:
    if precision is None:
        return default_precision()
    if isinstance(precision, int):
        return PrecisionContext(precision)
    return precision


def to_hreal(x, precision: PrecisionContext | int | None = None) -> HReal:
    """
    Convert int, Fraction, decimal string or mpf into the context's mpf

    Fractions and strings are converted exactly up to the working precision,
    never through a binary float.
    """
    ctx = resolve_precision(precision).ctx
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    if isinstance(x, str):
        return to_hreal(parse_decimal(x), precision)
    return ctx.mpf(x)


def parse_decimal(text: str) -> Fraction:
    """Parse "1/2", "0.5", "-3" or "2e-4" into an exact Fraction"""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a decimal or rational number: {text!r}") from e


def render(x, digits: int) -> str:
    """Decimal string with exactly `digits` significant digits"""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    ctx = _context_for(digits + 5)
    value = ctx.mpf(x)
    if value == 0:
        return "0"
    return ctx.nstr(value, digits, strip_zeros=False, min_fixed=-4, max_fixed=digits)


def hp_exp(x, precision: PrecisionContext | int | None = None) -> HReal:
    """e^x for |x| <= 10^4"""
    p = resolve_precision(precision)
    x = to_hreal(x, p)
    if abs(x) > EXP_RANGE:
        raise RangeError(f"hp_exp argument {render(x, 10)} outside |x| <= {EXP_RANGE}")
    return p.ctx.exp(x)


def hp_erf(x, precision: PrecisionContext | int | None = None) -> HReal:
    """erf(x) for |x| <= 50"""
    p = resolve_precision(precision)
    x = to_hreal(x, p)
    if abs(x) > ERF_RANGE:
        raise RangeError(f"hp_erf argument {render(x, 10)} outside |x| <= {ERF_RANGE}")
    return p.ctx.erf(x)


def hp_pi(precision: PrecisionContext | int | None = None) -> HReal:
    """pi at the working precision, cached per thread and precision"""
    p = resolve_precision(precision)
    cache = getattr(_local, "pi", None)
    if cache is None:
        cache = _local.pi = {}
    value = cache.get(p.working_digits)
    if value is None:
        value = cache[p.working_digits] = +p.ctx.pi
    return value


def hermite(n: int, x):
    """
    Physicists' Hermite polynomial H_n(x) by H_{n+1} = 2x H_n - 2n H_{n-1}

    Works for any ring element x (mpf, Fraction, int); the result has the
    type of the arithmetic on x.

    Args:
        n (int): degree, 0 <= n <= 200
        x: evaluation point

    Returns:
        H_n(x)
    """
    if n < 0 or n > MAX_HERMITE:
        raise ValueError(f"hermite degree must be in 0..{MAX_HERMITE}")
    h_prev, h = 1, 2 * x
    if n == 0:
        return x * 0 + 1
    for j in range(1, n):
        h_prev, h = h, 2 * x * h - 2 * j * h_prev
    return h


@lru_cache(maxsize=None)
def hermite_at_zero(n: int) -> int:
    """H_n(0): 0 for odd n, (-1)^m (2m)!/m! for n = 2m"""
    if n % 2:
        return 0
    m = n // 2
    return (-1) ** m * factorial(2 * m) // factorial(m)


def pcf_D(n: int, x, precision: PrecisionContext | int | None = None) -> HReal:
    """D_n(x) = 2^{-n/2} e^{-x^2/4} H_n(x/sqrt 2)"""
    if n < 0 or n > MAX_HERMITE:
        raise ValueError(f"pcf_D order must be in 0..{MAX_HERMITE}")
    p = resolve_precision(precision)
    ctx = p.ctx
    x = to_hreal(x, p)
    return hp_exp(-x * x / 4, p) * hermite(n, x / ctx.sqrt(2)) / ctx.sqrt(2) ** n


def pcf_Dm1(x, precision: PrecisionContext | int | None = None) -> HReal:
    """
    D_{-1}(x) = sqrt(pi/2) e^{x^2/4} (1 - erf(x/sqrt 2))

    1 - erf is taken as erfc so that large positive x keeps full precision.
    """
    p = resolve_precision(precision)
    ctx = p.ctx
    x = to_hreal(x, p)
    if abs(x) > ERF_RANGE:
        raise RangeError(f"pcf_Dm1 argument {render(x, 10)} outside |x| <= {ERF_RANGE}")
    return ctx.sqrt(hp_pi(p) / 2) * hp_exp(x * x / 4, p) * ctx.erfc(x / ctx.sqrt(2))


def pcf_Dm1_difference(x, precision: PrecisionContext | int | None = None) -> HReal:
    """D_{-1}(-x) - D_{-1}(x) = sqrt(2 pi) e^{x^2/4} erf(x/sqrt 2)"""
    p = resolve_precision(precision)
    ctx = p.ctx
    x = to_hreal(x, p)
    return ctx.sqrt(2 * hp_pi(p)) * hp_exp(x * x / 4, p) * hp_erf(x / ctx.sqrt(2), p)
