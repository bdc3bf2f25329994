"""
Exact arithmetic module for the q-series verification suite
Handles Bernoulli numbers and polynomials, zeta and Hurwitz zeta values at
negative integers, real primitive characters and their L-values
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import List

from sympy import factorint
from sympy.functions.combinatorial.numbers import kronecker_symbol

logger = logging.getLogger(__name__)

# BigRational is Fraction: numerator/denominator are always reduced and the
# denominator is kept positive by the constructor.
BigRational = Fraction

FUNDAMENTAL_TEST_SET = (-8, -4, -3, 5, 8, 12, 13)


class NotFundamentalError(ValueError):
    """Raised when an integer does not encode a real primitive nonprincipal character"""


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """
    Bernoulli number B_n with the convention B_1 = -1/2

    Args:
        n (int): index, n >= 0

    Returns:
        Fraction: exact B_n
    """
    if n < 0:
        raise ValueError("bernoulli index must be >= 0")
    if n == 0:
        return Fraction(1)
    if n == 1:
        return Fraction(-1, 2)
    if n % 2 == 1:
        return Fraction(0)
    # sum_{k=0}^{n} C(n+1, k) B_k = 0
    s = sum((comb(n + 1, k) * bernoulli(k) for k in range(n)), Fraction(0))
    return -s / (n + 1)


def bernoulli_poly(n: int, x: Fraction) -> Fraction:
    """Bernoulli polynomial B_n(x) = sum_k C(n,k) B_k x^(n-k)"""
    if n < 0:
        raise ValueError("bernoulli_poly degree must be >= 0")
    x = Fraction(x)
    return sum((comb(n, k) * bernoulli(k) * x ** (n - k) for k in range(n + 1)), Fraction(0))


def zeta_neg(n: int) -> Fraction:
    """Riemann zeta at -n; zeta(0) = -1/2 is special-cased"""
    if n < 0:
        raise ValueError("zeta_neg expects n >= 0")
    if n == 0:
        return Fraction(-1, 2)
    return -bernoulli(n + 1) / (n + 1)


def hurwitz_neg(n: int, x: Fraction) -> Fraction:
    """
    Hurwitz zeta at -n on the branch 0 < x <= 1

    Args:
        n (int): n >= 0
        x (Fraction): shift parameter

    Returns:
        Fraction: zeta(-n, x) = -B_{n+1}(x)/(n+1)
    """
    x = Fraction(x)
    if n < 0:
        raise ValueError("hurwitz_neg expects n >= 0")
    if x <= 0 or x > 1:
        raise ValueError(f"hurwitz_neg needs 0 < x <= 1, got {x}")
    return -bernoulli_poly(n + 1, x) / (n + 1)


@lru_cache(maxsize=None)
def lm_value(l: int, m: int, n: int) -> Fraction:
    """L_{l,m}(-2n) = (2l)^{2n} (zeta(-2n, m/2l) - zeta(-2n, (l+m)/2l))"""
    if l <= 0 or not 0 < m < l:
        raise ValueError(f"lm_value needs 0 < m < l, got l={l}, m={m}")
    if n < 0:
        raise ValueError("lm_value expects n >= 0")
    a = Fraction(m, 2 * l)
    b = Fraction(l + m, 2 * l)
    return Fraction(2 * l) ** (2 * n) * (hurwitz_neg(2 * n, a) - hurwitz_neg(2 * n, b))


def _is_squarefree(m: int) -> bool:
    if m == 0:
        return False
    return all(e == 1 for e in factorint(abs(m)).values())


def is_fundamental_discriminant(d: int) -> bool:
    """True for d = 1 and every fundamental discriminant of a quadratic field"""
    if d == 1:
        return True
    if d % 4 == 1:
        return _is_squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _is_squarefree(m)
    return False


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n)"""
    return int(kronecker_symbol(d, n))


@lru_cache(maxsize=None)
def _residue_table(d: int) -> tuple:
    # chi_d has period |d|, so one pass over the residues covers every n
    return tuple(kronecker(d, a) for a in range(abs(d)))


@dataclass(frozen=True)
class CharacterSpec:
    """Real primitive nonprincipal Dirichlet character given by a fundamental discriminant"""
    discriminant: int
    modulus: int = field(init=False)
    parity: str = field(init=False)

    def __post_init__(self):
        d = self.discriminant
        if d == 1:
            raise NotFundamentalError("d = 1 is the principal character")
        if not is_fundamental_discriminant(d):
            raise NotFundamentalError(f"{d} is not a fundamental discriminant")
        object.__setattr__(self, "modulus", abs(d))
        object.__setattr__(self, "parity", "even" if d > 0 else "odd")

    def __call__(self, n: int) -> int:
        return _residue_table(self.discriminant)[n % self.modulus]

    @property
    def is_even(self) -> bool:
        return self.parity == "even"


def _exp_series(a: int, order: int) -> List[Fraction]:
    # coefficients of e^{a t} up to t^{order-1}
    return [Fraction(a ** j, factorial(j)) for j in range(order)]


def series_divide(num: List[Fraction], den: List[Fraction]) -> List[Fraction]:
    """Truncated power series quotient num/den over Fraction, den[0] != 0"""
    if not den or den[0] == 0:
        raise ZeroDivisionError("series_divide needs a nonzero constant term")
    out: List[Fraction] = []
    inv = 1 / Fraction(den[0])
    for i in range(len(num)):
        s = Fraction(num[i])
        for j in range(1, min(i, len(den) - 1) + 1):
            s -= den[j] * out[i - j]
        out.append(s * inv)
    return out


@lru_cache(maxsize=None)
def _generalized_bernoulli_table(d: int, order: int) -> tuple:
    chi = CharacterSpec(d)
    f = chi.modulus
    # sum_a chi(a) t e^{at} / (e^{ft} - 1), numerator and denominator divided by t
    num = [Fraction(0)] * order
    for a in range(1, f + 1):
        c = chi(a)
        if c:
            for j, coeff in enumerate(_exp_series(a, order)):
                num[j] += c * coeff
    den = [Fraction(f ** (j + 1), factorial(j + 1)) for j in range(order)]
    quotient = series_divide(num, den)
    logger.debug("generalized Bernoulli table for d=%s filled to order %s", d, order)
    return tuple(q * factorial(j) for j, q in enumerate(quotient))


def generalized_bernoulli(d: int, n: int) -> Fraction:
    """B_{n,chi} for the character of discriminant d"""
    if n < 0:
        raise ValueError("generalized_bernoulli expects n >= 0")
    return _generalized_bernoulli_table(d, n + 2)[n]


@lru_cache(maxsize=None)
def _l_chi_neg(d: int, n: int) -> Fraction:
    return -generalized_bernoulli(d, n + 1) / (n + 1)


def l_chi_neg(chi: CharacterSpec | int, n: int) -> Fraction:
    """
    L(-n, chi) = -B_{n+1,chi}/(n+1)

    Args:
        chi (CharacterSpec | int): character or its discriminant
        n (int): n >= 0

    Returns:
        Fraction: exact value, memoized per (d, n)
    """
    if n < 0:
        raise ValueError("l_chi_neg expects n >= 0")
    if not isinstance(chi, CharacterSpec):
        chi = CharacterSpec(chi)
    return _l_chi_neg(chi.discriminant, n)


@lru_cache(maxsize=None)
def base_change_series(M: int, order: int) -> tuple:
    """
    Taylor coefficients in x of (1 - e^{-x}) / (1 - e^{-Mx})

    Args:
        M (int): base multiplier (2^k for the D1 chain)
        order (int): number of coefficients

    Returns:
        tuple of Fraction: phi_0 .. phi_{order-1}, phi_0 = 1/M
    """
    if M < 1 or order < 1:
        raise ValueError("base_change_series needs M >= 1 and order >= 1")
    # both sides divided by x
    num = [Fraction((-1) ** j, factorial(j + 1)) for j in range(order)]
    den = [Fraction((-1) ** j * M ** (j + 1), factorial(j + 1)) for j in range(order)]
    return tuple(series_divide(num, den))
