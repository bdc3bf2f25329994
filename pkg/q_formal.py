"""
Formal q-series module for the q-series verification suite
Handles truncated power series in q with Laurent-polynomial coefficients in z,
q-Pochhammer symbols, Bailey pairs and chains, and the exact coefficient-wise
check of the multi-sum identities
"""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Dict, Iterable, List, Optional, Tuple

logger = logging.getLogger(__name__)

FAMILIES = ("A", "B", "C")
CHAINS = ("S1", "S2", "D1")

# Registered right-hand-side variants per family. Family B carries the three
# readings of the base-change bookkeeping.
VARIANTS: Dict[str, Tuple[str, ...]] = {
    "A": ("proof",),
    "B": ("beta0", "beta1", "beta2"),
    "C": ("proof",),
}


class OrderMismatchError(ValueError):
    """Raised when two series with different truncation orders are combined"""


class NonUnitError(ArithmeticError):
    """Raised when the q^0 coefficient of a divisor is not a Laurent monomial"""


class InexactDivisionError(ArithmeticError):
    """Raised when a series quotient leaves a nonzero integer remainder"""


class UnknownVariantError(ValueError):
    """Raised for a variant identifier that is not registered"""


# ---------------------------------------------------------------------------
# raw {z_exp: coeff} helpers

def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = ea + eb
            out[e] = out.get(e, 0) + ca * cb
    return out


def _accumulate(acc: dict, src: dict, scale: int = 1, shift: int = 0) -> None:
    for e, c in src.items():
        key = e + shift
        acc[key] = acc.get(key, 0) + scale * c


def _clean(d: dict) -> dict:
    return {e: c for e, c in d.items() if c}


class LaurentPoly:
    """Laurent polynomial in z with integer coefficients, stored as {z_exp: coeff}"""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[dict] = None):
        self._terms = _clean(terms or {})

    @classmethod
    def _wrap(cls, terms: dict) -> "LaurentPoly":
        obj = cls.__new__(cls)
        obj._terms = terms
        return obj

    @classmethod
    def monomial(cls, coeff: int, z_exp: int = 0) -> "LaurentPoly":
        return cls({z_exp: coeff})

    @property
    def terms(self) -> Dict[int, int]:
        return dict(sorted(self._terms.items()))

    @property
    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def coefficient(self, z_exp: int) -> int:
        return self._terms.get(z_exp, 0)

    def exponent_range(self) -> Optional[Tuple[int, int]]:
        if not self._terms:
            return None
        return min(self._terms), max(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, int):
            other = LaurentPoly.monomial(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        acc = dict(self._terms)
        _accumulate(acc, other._terms)
        return LaurentPoly._wrap(_clean(acc))

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        acc = dict(self._terms)
        _accumulate(acc, other._terms, -1)
        return LaurentPoly._wrap(_clean(acc))

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly._wrap({e: -c for e, c in self._terms.items()})

    def __mul__(self, other) -> "LaurentPoly":
        if isinstance(other, int):
            return LaurentPoly({e: c * other for e, c in self._terms.items()})
        return LaurentPoly._wrap(_clean(_poly_mul(self._terms, other._terms)))

    __rmul__ = __mul__

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in sorted(self._terms.items()):
            mono = "" if e == 0 else ("z" if e == 1 else f"z^{e}")
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"LaurentPoly({self})"


_ZERO_POLY = LaurentPoly()


class LaurentQSeries:
    """
    Truncated power series sum_{e<N} c_e(z) q^e with LaurentPoly coefficients

    All arithmetic is modulo q^N. Instances are immutable.
    """

    __slots__ = ("order", "_coeffs", "_z_free")

    def __init__(self, order: int, coeffs: Iterable[LaurentPoly] = ()):
        if order < 1:
            raise ValueError("truncation order must be >= 1")
        rows = list(coeffs)[:order]
        rows += [_ZERO_POLY] * (order - len(rows))
        self.order = order
        self._coeffs = tuple(rows)
        self._z_free = None

    @classmethod
    def _from_raw(cls, order: int, rows: List[dict]) -> "LaurentQSeries":
        return cls(order, [LaurentPoly._wrap(_clean(r)) for r in rows])

    @classmethod
    def zero(cls, order: int) -> "LaurentQSeries":
        return cls(order)

    @classmethod
    def one(cls, order: int) -> "LaurentQSeries":
        return cls.monomial(order, 1)

    @classmethod
    def monomial(cls, order: int, coeff: int, z_exp: int = 0, q_exp: int = 0) -> "LaurentQSeries":
        if q_exp < 0:
            raise ValueError("q exponent must be >= 0")
        rows = [dict() for _ in range(order)]
        if q_exp < order:
            rows[q_exp][z_exp] = coeff
        return cls._from_raw(order, rows)

    @classmethod
    def from_terms(cls, order: int, terms: Dict[Tuple[int, int], int]) -> "LaurentQSeries":
        """Build from {(q_exp, z_exp): coeff}; orders >= N are dropped"""
        rows = [dict() for _ in range(order)]
        for (q_exp, z_exp), c in terms.items():
            if q_exp < 0:
                raise ValueError("q exponent must be >= 0")
            if q_exp < order:
                rows[q_exp][z_exp] = rows[q_exp].get(z_exp, 0) + c
        return cls._from_raw(order, rows)

    @classmethod
    def from_q_coefficients(cls, coeffs: Iterable[int], order: int) -> "LaurentQSeries":
        rows = [{0: c} if c else {} for c in coeffs]
        return cls._from_raw(order, rows[:order])

    def __getitem__(self, q_exp: int) -> LaurentPoly:
        return self._coeffs[q_exp]

    def __iter__(self):
        return iter(self._coeffs)

    def __len__(self):
        return self.order

    @property
    def is_zero(self) -> bool:
        return not any(self._coeffs)

    @property
    def is_z_free(self) -> bool:
        if self._z_free is None:
            self._z_free = all(not p._terms or p._terms.keys() == {0} for p in self._coeffs)
        return self._z_free

    def q_coefficients(self) -> List[int]:
        """Integer coefficients of a z-free series"""
        if not self.is_z_free:
            raise ValueError("series depends on z")
        return [p._terms.get(0, 0) for p in self._coeffs]

    def shift(self, q_exp: int, z_exp: int = 0, coeff: int = 1) -> "LaurentQSeries":
        """Multiply by the monomial coeff * z^z_exp * q^q_exp"""
        if q_exp < 0:
            raise ValueError("q exponent must be >= 0")
        N = self.order
        if q_exp >= N:
            return LaurentQSeries.zero(N)
        rows = [dict() for _ in range(N)]
        for i in range(N - q_exp):
            src = self._coeffs[i]._terms
            if src:
                rows[i + q_exp] = {e + z_exp: c * coeff for e, c in src.items()}
        return LaurentQSeries._from_raw(N, rows)

    def truncate(self, order: int) -> "LaurentQSeries":
        if order > self.order:
            raise OrderMismatchError(f"cannot extend a series of order {self.order} to {order}")
        return LaurentQSeries(order, self._coeffs[:order])

    def __add__(self, other: "LaurentQSeries") -> "LaurentQSeries":
        _check_orders(self, other)
        return LaurentQSeries(self.order, [a + b for a, b in zip(self._coeffs, other._coeffs)])

    def __sub__(self, other: "LaurentQSeries") -> "LaurentQSeries":
        _check_orders(self, other)
        return LaurentQSeries(self.order, [a - b for a, b in zip(self._coeffs, other._coeffs)])

    def __neg__(self) -> "LaurentQSeries":
        return LaurentQSeries(self.order, [-a for a in self._coeffs])

    def __mul__(self, other) -> "LaurentQSeries":
        if isinstance(other, int):
            return LaurentQSeries(self.order, [a * other for a in self._coeffs])
        return qs_mul(self, other)

    def __rmul__(self, other) -> "LaurentQSeries":
        if isinstance(other, int):
            return self * other
        return NotImplemented

    def __truediv__(self, other: "LaurentQSeries") -> "LaurentQSeries":
        return qs_div_unit(self, other)

    def __eq__(self, other):
        if not isinstance(other, LaurentQSeries):
            return NotImplemented
        return self.order == other.order and self._coeffs == other._coeffs

    def __hash__(self):
        return hash((self.order, self._coeffs))

    def dump(self) -> str:
        """One line per nonzero coefficient: "q^e: <Laurent polynomial>" """
        return "\n".join(f"q^{e}: {p}" for e, p in enumerate(self._coeffs) if p)

    def __repr__(self):
        return f"LaurentQSeries(order={self.order}, nonzero={sum(1 for p in self._coeffs if p)})"


def _check_orders(A: LaurentQSeries, B: LaurentQSeries) -> None:
    if A.order != B.order:
        raise OrderMismatchError(f"truncation orders differ: {A.order} != {B.order}")


def qs_mul(A: LaurentQSeries, B: LaurentQSeries) -> LaurentQSeries:
    """Cauchy product mod q^N"""
    _check_orders(A, B)
    N = A.order
    rows = [dict() for _ in range(N)]
    if A.is_z_free or B.is_z_free:
        scalar, other = (A, B) if A.is_z_free else (B, A)
        for i, c in enumerate(scalar.q_coefficients()):
            if not c:
                continue
            for j in range(N - i):
                src = other._coeffs[j]._terms
                if src:
                    _accumulate(rows[i + j], src, c)
        return LaurentQSeries._from_raw(N, rows)
    for i, a in enumerate(A._coeffs):
        if not a:
            continue
        for j in range(N - i):
            b = B._coeffs[j]
            if b:
                _accumulate(rows[i + j], _poly_mul(a._terms, b._terms))
    return LaurentQSeries._from_raw(N, rows)


def qs_div_unit(A: LaurentQSeries, B: LaurentQSeries) -> LaurentQSeries:
    """
    Exact quotient A/B mod q^N

    Args:
        A (LaurentQSeries): dividend
        B (LaurentQSeries): divisor, q^0 coefficient a monomial c*z^j

    Returns:
        LaurentQSeries: C with qs_mul(C, B) == A

    Raises:
        NonUnitError: q^0 coefficient of B is zero or has several terms
        InexactDivisionError: some coefficient is not divisible by c
    """
    _check_orders(A, B)
    lead = B._coeffs[0]
    if not lead.is_monomial:
        raise NonUnitError(f"q^0 coefficient {lead} is not a Laurent monomial")
    (lead_z, lead_c), = lead._terms.items()
    N = A.order
    out: List[dict] = []
    for i in range(N):
        acc = dict(A._coeffs[i]._terms)
        for j in range(1, i + 1):
            bj = B._coeffs[j]._terms
            prev = out[i - j]
            if bj and prev:
                _accumulate(acc, _poly_mul(bj, prev), -1)
        row = {}
        for e, c in acc.items():
            if not c:
                continue
            quotient, rem = divmod(c, lead_c)
            if rem:
                raise InexactDivisionError(f"coefficient {c} at q^{i} z^{e} not divisible by {lead_c}")
            row[e - lead_z] = quotient
        out.append(row)
    return LaurentQSeries._from_raw(N, out)


@dataclass(frozen=True)
class Monomial:
    """coeff * z^z_exp * q^q_exp, the argument y of (y; q^b)_n"""
    coeff: int
    z_exp: int
    q_exp: int


Z = Monomial(1, 1, 0)


def q_power(e: int, sign: int = 1) -> Monomial:
    return Monomial(sign, 0, e)


def pochhammer(y: Monomial | tuple, base_exp: int, n: int, N: int) -> LaurentQSeries:
    """
    (y; q^b)_n = prod_{k<n} (1 - y q^{bk}) mod q^N

    Args:
        y (Monomial | tuple): (coeff, z_exp, q_exp) of the first factor
        base_exp (int): b >= 1
        n (int): number of factors
        N (int): truncation order

    Returns:
        LaurentQSeries: the product, cached per argument tuple
    """
    if not isinstance(y, Monomial):
        y = Monomial(*y)
    if n < 0:
        raise ValueError("pochhammer length must be >= 0")
    if base_exp < 1:
        raise ValueError("pochhammer base exponent must be >= 1")
    if y.q_exp < 0:
        raise ValueError("pochhammer argument must have a nonnegative q exponent")
    return _pochhammer(y, base_exp, n, N)


@lru_cache(maxsize=8192)
def _pochhammer(y: Monomial, base_exp: int, n: int, N: int) -> LaurentQSeries:
    if n == 0:
        return LaurentQSeries.one(N)
    prev = _pochhammer(y, base_exp, n - 1, N)
    return prev - prev.shift(y.q_exp + base_exp * (n - 1), y.z_exp, y.coeff)


@lru_cache(maxsize=8192)
def _inv_pochhammer(y: Monomial, base_exp: int, n: int, N: int) -> LaurentQSeries:
    return qs_div_unit(LaurentQSeries.one(N), _pochhammer(y, base_exp, n, N))


def inv_qpoch(b: int, n: int, N: int) -> LaurentQSeries:
    """1/(q^b; q^b)_n mod q^N"""
    return _inv_pochhammer(q_power(b), b, n, N)


class _TermCache:
    """Write-once map shared across threads"""

    def __init__(self):
        self._lock = threading.Lock()
        self._values: dict = {}

    def get(self, key, compute: Callable[[], LaurentQSeries]) -> LaurentQSeries:
        with self._lock:
            if key in self._values:
                return self._values[key]
        value = compute()
        with self._lock:
            return self._values.setdefault(key, value)

    def clear(self) -> None:
        with self._lock:
            self._values.clear()


_beta_cache = _TermCache()


# ---------------------------------------------------------------------------
# Bailey pairs

@dataclass(frozen=True)
class BaileyPair:
    """
    Bailey pair relative to (a, Q) with Q = q^base and a = q^a_exp

    alpha_term(n, N) and beta_term(n, N) return the n-th terms mod q^N.
    """
    id: str
    alpha_term: Callable[[int, int], LaurentQSeries] = field(compare=False)
    beta_term: Callable[[int, int], LaurentQSeries] = field(compare=False)
    base: int = 1
    a_exp: int = 1

    def alpha(self, n: int, N: int) -> LaurentQSeries:
        return self.alpha_term(n, N)

    def beta(self, n: int, N: int) -> LaurentQSeries:
        return self.beta_term(n, N)


def _seed_beta(base: int, n: int, N: int) -> LaurentQSeries:
    def compute():
        num = qs_mul(pochhammer(Z, base, n + 1, N), pochhammer(Monomial(1, -1, base), base, n, N))
        return qs_mul(num, inv_qpoch(base, 2 * n + 1, N))
    return _beta_cache.get(("seed", base, n, N), compute)


def seed_pair(base: int = 1) -> BaileyPair:
    """
    Seed pair relative to (Q, Q), Q = q^base

    alpha_n = (-z)^{-n} Q^{n(n+1)/2} (1 - z^{2n+1}) / (1 - Q)
    beta_n  = (z; Q)_{n+1} (Q/z; Q)_n / (Q; Q)_{2n+1}
    """
    if base < 1:
        raise ValueError("seed pair base must be >= 1")

    def alpha(n: int, N: int) -> LaurentQSeries:
        e = base * n * (n + 1) // 2
        sign = -1 if n % 2 else 1
        num = LaurentQSeries.from_terms(N, {(e, -n): sign, (e, n + 1): -sign})
        return qs_mul(num, inv_qpoch(base, 1, N))

    def beta(n: int, N: int) -> LaurentQSeries:
        return _seed_beta(base, n, N)

    label = "seed" if base == 1 else f"seed[q^{base}]"
    return BaileyPair(label, alpha, beta, base=base, a_exp=base)


def _descending_tuples(n: int, k: int):
    # n = r_0 >= r_1 >= ... >= r_k >= 0
    for combo in combinations_with_replacement(range(n + 1), k):
        yield (n,) + tuple(sorted(combo, reverse=True))


def _tuple_sum(n: int, k: int, N: int, level_weight, inner) -> LaurentQSeries:
    """Sum over descending tuples of prod level_weight(i, r_{i-1}, r_i) * inner(r_k)"""
    grouped: Dict[int, LaurentQSeries] = {}
    for rs in _descending_tuples(n, k):
        w = LaurentQSeries.one(N)
        for i in range(1, k + 1):
            w = qs_mul(w, level_weight(i, rs[i - 1], rs[i], N))
            if w.is_zero:
                break
        if w.is_zero:
            continue
        last = rs[-1]
        grouped[last] = grouped[last] + w if last in grouped else w
    total = LaurentQSeries.zero(N)
    for r in sorted(grouped):
        total = total + qs_mul(grouped[r], inner(r, N))
    return total


def chain_apply(chain: str, pair: BaileyPair, k: int) -> BaileyPair:
    """
    Iterate a Bailey chain k times

    S1: alpha'_n = a^{kn} Q^{kn^2} alpha_n
    S2: alpha'_n = a^{kn/2} Q^{kn^2/2} alpha_n, needs a*Q a square power of q
    D1: alpha'_n(a, Q) = alpha_n(a^{2^k}, Q^{2^k}); the input pair must be
        relative to (a^{2^k}, Q^{2^k}) and the output is relative to (a, Q)

    beta'_n is the nested sum over n >= r_1 >= ... >= r_k >= 0, enumerated
    tuple by tuple.
    """
    chain = chain.upper()
    if chain not in CHAINS:
        raise UnknownVariantError(f"unknown chain {chain!r}; expected one of {CHAINS}")
    if k < 0:
        raise ValueError("chain length must be >= 0")
    if k == 0:
        return pair
    b, a = pair.base, pair.a_exp
    label = f"{chain}^{k}({pair.id})"

    if chain == "S1":
        def level(i, m, r, N):
            return inv_qpoch(b, m - r, N).shift(a * r + b * r * r)

        def alpha(n, N):
            return pair.alpha(n, N).shift(k * (a * n + b * n * n))

        def beta(n, N):
            return _tuple_sum(n, k, N, level, pair.beta)

        return BaileyPair(label, alpha, beta, base=b, a_exp=a)

    if chain == "S2":
        if (a + b) % 2:
            raise ValueError("S2 needs a*Q to be an even power of q")
        h = (a + b) // 2
        lift = q_power(h, -1)

        def level(i, m, r, N):
            return inv_qpoch(b, m - r, N).shift((a * r + b * r * r) // 2)

        def inner(r, N):
            return qs_mul(pochhammer(lift, b, r, N), pair.beta(r, N))

        def alpha(n, N):
            return pair.alpha(n, N).shift(k * (a * n + b * n * n) // 2)

        def beta(n, N):
            return qs_mul(_inv_pochhammer(lift, b, n, N), _tuple_sum(n, k, N, level, inner))

        return BaileyPair(label, alpha, beta, base=b, a_exp=a)

    step = 1 << k
    if b % step or a % step:
        raise ValueError(f"D1^{k} needs a pair relative to powers of q divisible by {step}")
    nb, na = b // step, a // step

    def level(i, m, r, N):
        bi, ai = nb << (i - 1), na << (i - 1)
        w = qs_mul(pochhammer(q_power(ai + bi, -1), bi, 2 * r, N), inv_qpoch(2 * bi, m - r, N))
        return w.shift(bi * (m - r))

    def beta(n, N):
        return _tuple_sum(n, k, N, level, pair.beta)

    return BaileyPair(label, pair.alpha_term, beta, base=nb, a_exp=na)


# ---------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class Mismatch:
    """First differing coefficient between two series"""
    q_exp: int
    z_exp: int
    lhs: int
    rhs: int
    n: Optional[int] = None

    def to_dict(self) -> dict:
        out = {"q_exp": self.q_exp, "z_exp": self.z_exp, "lhs": self.lhs, "rhs": self.rhs}
        if self.n is not None:
            out = {"n": self.n, **out}
        return out


def first_difference(A: LaurentQSeries, B: LaurentQSeries) -> Optional[Mismatch]:
    _check_orders(A, B)
    for q_exp, (a, b) in enumerate(zip(A, B)):
        if a == b:
            continue
        for z_exp in sorted(set(a._terms) | set(b._terms)):
            if a.coefficient(z_exp) != b.coefficient(z_exp):
                return Mismatch(q_exp, z_exp, a.coefficient(z_exp), b.coefficient(z_exp))
    return None


@dataclass(frozen=True)
class BaileyCheckReport:
    pair_id: str
    n_max: int
    order: int
    passed: bool
    mismatch: Optional[Mismatch] = None


@dataclass(frozen=True)
class IdentityReport:
    family: str
    k: int
    order: int
    variant: str
    passed: bool
    mismatch: Optional[Mismatch] = None


def bailey_check(pair: BaileyPair, n_max: int, N: int) -> BaileyCheckReport:
    """
    Check beta_n = sum_j alpha_j / ((Q;Q)_{n-j} (aQ;Q)_{n+j}) mod q^N for n <= n_max

    Returns:
        BaileyCheckReport: PASS or the first failing (n, q_exp, z_exp)
    """
    b, a = pair.base, pair.a_exp
    if a + b < 1:
        raise ValueError("aQ must have positive q-order")
    alphas = [pair.alpha(j, N) for j in range(n_max + 1)]
    for n in range(n_max + 1):
        rhs = LaurentQSeries.zero(N)
        for j in range(n + 1):
            denom_inv = qs_mul(inv_qpoch(b, n - j, N), _inv_pochhammer(q_power(a + b), b, n + j, N))
            rhs = rhs + qs_mul(alphas[j], denom_inv)
        miss = first_difference(pair.beta(n, N), rhs)
        if miss is not None:
            located = Mismatch(miss.q_exp, miss.z_exp, miss.lhs, miss.rhs, n=n)
            logger.info("Bailey relation for %s fails at n=%s q^%s z^%s", pair.id, n, miss.q_exp, miss.z_exp)
            return BaileyCheckReport(pair.id, n_max, N, False, located)
    logger.info("Bailey relation for %s holds for n <= %s mod q^%s", pair.id, n_max, N)
    return BaileyCheckReport(pair.id, n_max, N, True)


# ---------------------------------------------------------------------------
# multi-sum identities (a = q)

def _check_family(family: str) -> str:
    family = family.upper()
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return family


def outer_bound(N: int) -> int:
    """Largest outer index whose weight q^{n(n+1)/2} can reach below q^N"""
    return math.ceil(math.sqrt(2 * N)) + 1


def _inner_term(family: str, k: int, r: int, N: int) -> LaurentQSeries:
    def compute():
        if family == "A":
            return _seed_beta(1, r, N)
        if family == "B":
            return _seed_beta(1 << k, r, N)
        # (z)_{r+1} (q/z)_r / ((q)_r (q;q^2)_{r+1})
        num = qs_mul(pochhammer(Z, 1, r + 1, N), pochhammer(Monomial(1, -1, 1), 1, r, N))
        den = qs_mul(pochhammer(q_power(1), 1, r, N), pochhammer(q_power(1), 2, r + 1, N))
        return qs_div_unit(num, den)
    return _beta_cache.get((family, k, r, N), compute)


def _level_weight(family: str, j: int, m: int, r: int, N: int) -> LaurentQSeries:
    d = m - r
    if family == "A":
        return inv_qpoch(1, d, N).shift(r * r + r)
    if family == "C":
        return inv_qpoch(1, d, N).shift(r * (r + 1) // 2)
    lo = 1 << (j - 1)
    w = qs_mul(pochhammer(q_power(2 * lo, -1), lo, 2 * r, N), inv_qpoch(2 * lo, d, N))
    return w.shift(lo * d)


def _outer_weight(family: str, n: int, N: int, variant: Optional[str]) -> LaurentQSeries:
    sign = -1 if n % 2 else 1
    if family == "B" and variant == "beta2":
        return pochhammer(q_power(2), 2, n, N).shift(n * (n + 1), coeff=sign)
    w = pochhammer(q_power(1), 1, n, N).shift(n * (n + 1) // 2, coeff=sign)
    if family == "C":
        w = qs_mul(w, _inv_pochhammer(q_power(1, -1), 1, n, N))
    return w


def multisum_lhs(family: str, k: int, N: int, variant: Optional[str] = None) -> LaurentQSeries:
    """
    Left side sum_n (outer weight) * (family multi-sum) mod q^N

    The nested sum is evaluated level by level: G_k(r) is the innermost
    term and G_{j-1}(m) = sum_{r<=m} w_j(m, r) G_j(r).

    Args:
        family (str): A, B or C
        k (int): chain length >= 1
        N (int): truncation order
        variant (str | None): 'beta2' switches family B to outer base q^2

    Returns:
        LaurentQSeries: the left side
    """
    family = _check_family(family)
    if k < 1:
        raise ValueError("k must be >= 1")
    n_max = outer_bound(N)
    level = [_inner_term(family, k, r, N) for r in range(n_max + 1)]
    for j in range(k, 0, -1):
        nxt = []
        for m in range(n_max + 1):
            acc = LaurentQSeries.zero(N)
            for r in range(m + 1):
                if level[r].is_zero:
                    continue
                w = _level_weight(family, j, m, r, N)
                if not w.is_zero:
                    acc = acc + qs_mul(w, level[r])
            nxt.append(acc)
        level = nxt
    total = LaurentQSeries.zero(N)
    for n in range(n_max + 1):
        if n * (n + 1) // 2 >= N:
            break
        total = total + qs_mul(_outer_weight(family, n, N, variant), level[n])
    logger.debug("multisum_lhs(%s, k=%s, N=%s) summed n <= %s", family, k, N, n_max)
    return total


def bailey_lemma(pair: BaileyPair, N: int) -> Tuple[LaurentQSeries, LaurentQSeries]:
    """
    Both sides of the Bailey lemma at a = q with rho_1 = q, rho_2 -> infinity:

        sum (q)_n (-1)^n q^{n(n+1)/2} beta_n = (1 - q) sum (-1)^n q^{n(n+1)/2} alpha_n
    """
    if pair.base != 1 or pair.a_exp != 1:
        raise ValueError(f"pair {pair.id} is not relative to (q, q)")
    lhs = LaurentQSeries.zero(N)
    rhs = LaurentQSeries.zero(N)
    for n in range(outer_bound(N) + 1):
        e = n * (n + 1) // 2
        if e >= N:
            break
        sign = -1 if n % 2 else 1
        lhs = lhs + qs_mul(pochhammer(q_power(1), 1, n, N).shift(e, coeff=sign), pair.beta(n, N))
        rhs = rhs + pair.alpha(n, N).shift(e, coeff=sign)
    return lhs, qs_mul(pochhammer(q_power(1), 1, 1, N), rhs)


def theta_exponent(family: str, k: int, n: int) -> int:
    family = _check_family(family)
    if family == "A":
        return (k + 1) * n * (n + 1)
    if family == "B":
        return ((1 << k) + 1) * n * (n + 1) // 2
    return (k + 2) * n * (n + 1) // 2


def theta_rhs(family: str, k: int, N: int) -> LaurentQSeries:
    """sum_n (z^{-n} - z^{n+1}) q^{e_n} over e_n < N"""
    family = _check_family(family)
    terms: Dict[Tuple[int, int], int] = {}
    n = 0
    while True:
        e = theta_exponent(family, k, n)
        if e >= N:
            break
        terms[(e, -n)] = terms.get((e, -n), 0) + 1
        terms[(e, n + 1)] = terms.get((e, n + 1), 0) - 1
        n += 1
    return LaurentQSeries.from_terms(N, terms)


def variant_rhs(family: str, k: int, N: int, variant: str) -> LaurentQSeries:
    family = _check_family(family)
    if variant not in VARIANTS[family]:
        raise UnknownVariantError(f"variant {variant!r} not registered for family {family}; have {VARIANTS[family]}")
    rhs = theta_rhs(family, k, N)
    if variant == "beta1":
        # (1 - q) / (1 - q^{2^k})
        factor = qs_mul(pochhammer(q_power(1), 1, 1, N), inv_qpoch(1 << k, 1, N))
        rhs = qs_mul(factor, rhs)
    return rhs


def verify_identity(family: str, k: int, N: int, variant: str = "proof") -> IdentityReport:
    """
    Compare multisum_lhs with the variant's right side mod q^N

    Raises:
        UnknownVariantError: variant not registered for the family
    """
    family = _check_family(family)
    rhs = variant_rhs(family, k, N, variant)
    lhs = multisum_lhs(family, k, N, variant=variant)
    miss = first_difference(lhs, rhs)
    report = IdentityReport(family, k, N, variant, miss is None, miss)
    if miss is None:
        logger.info("identity %s k=%s variant=%s holds mod q^%s", family, k, variant, N)
    else:
        logger.info("identity %s k=%s variant=%s fails at q^%s z^%s", family, k, variant, miss.q_exp, miss.z_exp)
    return report


def verify_variants(family: str, k: int, N: int) -> Tuple[List[IdentityReport], Optional[str]]:
    """
    Run every registered variant of a family

    Returns:
        tuple: (reports in registry order, the single passing variant or None)
    """
    family = _check_family(family)
    reports = [verify_identity(family, k, N, v) for v in VARIANTS[family]]
    winners = [r.variant for r in reports if r.passed]
    if len(winners) != 1:
        logger.warning("family %s k=%s: %s variants pass, no unique winner", family, k, len(winners))
        return reports, None
    return reports, winners[0]


def clear_caches() -> None:
    _beta_cache.clear()
    _pochhammer.cache_clear()
    _inv_pochhammer.cache_clear()
