"""
Direct evaluation module for the q-series verification suite
Handles high-precision evaluation of the left-hand sides: the multi-sums
A/B/C, their theta-difference forms, the character partial theta, the
alternating theta of the Ono-Lovejoy form and F_k itself
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from exact_arith import CharacterSpec
from hp_real import HReal, PrecisionContext, resolve_precision, to_hreal
from q_formal import FAMILIES, UnknownVariantError

logger = logging.getLogger(__name__)

TAIL_RUN = 10
TAIL_EXTRA_DIGITS = 10
MULTISUM_GUARD = 60
MIN_MULTISUM_T = Fraction(1, 16)
# lower bound on w t^2; the cancellation digits grow like 1/(w t^2)
MIN_MULTISUM_WT2 = Fraction(1, 256)
MAX_MULTISUM_K = 2
MAX_TERMS = 10 ** 6

THETA_DIFF_VARIANTS = {"A": ("proof",), "B": ("beta0", "beta1"), "C": ("proof",)}
MULTISUM_VARIANTS = ("proof", "statement")


class CostGuardError(ValueError):
    """Raised when a nested multi-sum would be too expensive to evaluate directly"""


def _check_positive(**values) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ValueError(f"{name} must be > 0")


def _family(family: str) -> str:
    family = family.upper()
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return family


def theta_scale(family: str, k: int) -> Fraction:
    """Gaussian scale c in e^{-c w n^2 t^2}: k+1, (2^k+1)/2 or (k+2)/2"""
    family = _family(family)
    if family == "A":
        return Fraction(k + 1)
    if family == "B":
        return Fraction((1 << k) + 1, 2)
    return Fraction(k + 2, 2)


def _tail_sum(term: Callable[[int], HReal], bound: Callable[[int], HReal], eps: HReal,
              start: int = 1, peak: float = 0, tail_run: int = TAIL_RUN) -> Tuple[HReal, int]:
    """
    Sum term(n) for n = start, start+1, ... in order

    Stops once tail_run consecutive indices past the peak have bound(n) < eps.
    Returns the sum and the last index included.
    """
    total = 0
    below = 0
    n = start
    while n - start < MAX_TERMS:
        total += term(n)
        if n >= peak and bound(n) < eps:
            below += 1
            if below >= tail_run:
                return total, n
        else:
            below = 0
        n += 1
    raise RuntimeError(f"series did not reach its tail within {MAX_TERMS} terms")


def _tail_eps(p: PrecisionContext):
    return p.ctx.mpf(10) ** (-(p.digits + TAIL_EXTRA_DIGITS))


def eval_theta_diff(family: str, k: int, t, v, w, precision: PrecisionContext | int | None = None,
                    variant: Optional[str] = None, tail_run: int = TAIL_RUN) -> HReal:
    """
    Theta difference S = sum_{n>=1} 2 sinh(nvt) e^{-c w n^2 t^2}

    Family B takes variant 'beta0' (the printed theta form, the default) or
    'beta1', which returns (1-q)/(1-q^{2^k}) (1 + S) - 1 with q = e^{-wt^2},
    the value of the B multi-sum.

    Args:
        family (str): A, B or C
        k (int): chain length
        t, v, w: reals with t > 0, w > 0
        precision: PrecisionContext or digit count
        variant (str | None): see above
        tail_run (int): consecutive negligible terms before stopping

    Returns:
        HReal: the value, relative error <= 10^{-P+5}
    """
    family = _family(family)
    allowed = THETA_DIFF_VARIANTS[family]
    variant = variant or allowed[0]
    if variant not in allowed:
        raise UnknownVariantError(f"theta difference variant {variant!r} not available for family {family}")
    p = resolve_precision(precision)
    ctx = p.ctx
    t, v, w = to_hreal(t, p), to_hreal(v, p), to_hreal(w, p)
    _check_positive(t=t, w=w)
    c = to_hreal(theta_scale(family, k), p)
    a = c * w * t * t
    b = v * t
    peak = abs(b) / (2 * a)
    s, last = _tail_sum(
        lambda n: ctx.exp(n * b - a * n * n) - ctx.exp(-n * b - a * n * n),
        lambda n: ctx.exp(abs(b) * n - a * n * n),
        _tail_eps(p), peak=peak, tail_run=tail_run,
    )
    logger.debug("theta difference %s k=%s summed to n=%s", family, k, last)
    if variant == "beta1":
        x = w * t * t
        factor = ctx.expm1(-x) / ctx.expm1(-(1 << k) * x)
        return factor * (1 + s) - 1
    return s


def multisum_z(family: str, k: int, t, v, w, precision: PrecisionContext | int | None = None,
               variant: str = "proof") -> HReal:
    """
    z substituted into the multi-sum

    proof:     A e^{-vt-wt^2(k+1)}, B e^{-vt-wt^2(2^k+1)/2}, C e^{-vt-wt^2(k+2)/2}
    statement: A as proof, B e^{-vt-wt^2(2^k+1)}, C e^{-vt-wt^2(k+1)/2}
    """
    family = _family(family)
    if variant not in MULTISUM_VARIANTS:
        raise UnknownVariantError(f"multi-sum variant {variant!r}; expected one of {MULTISUM_VARIANTS}")
    p = resolve_precision(precision)
    t, v, w = to_hreal(t, p), to_hreal(v, p), to_hreal(w, p)
    if variant == "proof" or family == "A":
        c = theta_scale(family, k)
    elif family == "B":
        c = Fraction((1 << k) + 1)
    else:
        c = Fraction(k + 1, 2)
    return p.ctx.exp(-v * t - to_hreal(c, p) * w * t * t)


def _prefix_poch(ctx, x, base, n: int) -> List:
    """[(x; base)_0, ..., (x; base)_n]"""
    out = [ctx.mpf(1)]
    term = x
    for _ in range(n):
        out.append(out[-1] * (1 - term))
        term *= base
    return out


def eval_multisum(family: str, k: int, t, v, w, precision: PrecisionContext | int | None = None,
                  variant: str = "proof") -> HReal:
    """
    Nested multi-sum with q = e^{-wt^2} and z from multisum_z, minus 1

    Evaluated level by level with extra guard digits, since the inner
    terms grow like 1/(q;q)_infinity before cancelling.

    Raises:
        CostGuardError: t < 1/16, w t^2 < 1/256 or k > 2
    """
    family = _family(family)
    p = resolve_precision(precision)
    t_val, w_val = to_hreal(t, p), to_hreal(w, p)
    _check_positive(t=t_val, w=w_val)
    if t_val < to_hreal(MIN_MULTISUM_T, p) or k > MAX_MULTISUM_K:
        raise CostGuardError(f"multi-sum evaluation needs t >= {MIN_MULTISUM_T} and k <= {MAX_MULTISUM_K}")
    if w_val * t_val * t_val < to_hreal(MIN_MULTISUM_WT2, p):
        raise CostGuardError(f"multi-sum evaluation needs w t^2 >= {MIN_MULTISUM_WT2}")
    if k < 1:
        raise ValueError("k must be >= 1")
    x = float(w_val * t_val * t_val)
    cancellation = math.ceil(math.pi ** 2 / (6 * x * math.log(10)))
    wp = PrecisionContext(p.digits + MULTISUM_GUARD + cancellation, p.guard)
    ctx = wp.ctx
    z = multisum_z(family, k, t, v, w, wp, variant)
    q = ctx.exp(-to_hreal(w, wp) * to_hreal(t, wp) ** 2)

    eps = _tail_eps(p)
    n_max = 0
    while q ** (n_max * (n_max + 1) // 2) >= eps:
        n_max += 1
    n_max += TAIL_RUN
    logger.debug("multi-sum %s k=%s: outer n <= %s at %s digits", family, k, n_max, wp.working_digits)

    if family == "B":
        Q = q ** (1 << k)
        inner_base = Q
    else:
        inner_base = q
    zp = _prefix_poch(ctx, z, inner_base, n_max + 1)
    qzp = _prefix_poch(ctx, inner_base / z, inner_base, n_max)
    if family == "C":
        qp = _prefix_poch(ctx, q, q, n_max)
        q_odd = _prefix_poch(ctx, q, q * q, n_max + 1)
        inner = [zp[r + 1] * qzp[r] / (qp[r] * q_odd[r + 1]) for r in range(n_max + 1)]
    else:
        bp = _prefix_poch(ctx, inner_base, inner_base, 2 * n_max + 1)
        inner = [zp[r + 1] * qzp[r] / bp[2 * r + 1] for r in range(n_max + 1)]

    qp = _prefix_poch(ctx, q, q, n_max)
    level = inner
    for j in range(k, 0, -1):
        if family == "B":
            lo = 1 << (j - 1)
            q_lo = q ** lo
            lift = _prefix_poch(ctx, -(q ** (2 * lo)), q_lo, 2 * n_max)
            den = _prefix_poch(ctx, q ** (2 * lo), q ** (2 * lo), n_max)

            def weight(m, r):
                return lift[2 * r] * q_lo ** (m - r) / den[m - r]
        elif family == "A":
            def weight(m, r):
                return q ** (r * r + r) / qp[m - r]
        else:
            def weight(m, r):
                return q ** (r * (r + 1) // 2) / qp[m - r]
        level = [ctx.fsum(weight(m, r) * level[r] for r in range(m + 1)) for m in range(n_max + 1)]

    if family == "C":
        neg_qp = _prefix_poch(ctx, -q, q, n_max)
    total = ctx.mpf(0)
    for n in range(n_max + 1):
        outer = qp[n] * q ** (n * (n + 1) // 2)
        if n % 2:
            outer = -outer
        if family == "C":
            outer /= neg_qp[n]
        total += outer * level[n]
    return to_hreal(total - 1, p)


def eval_theta_chi(d: int | CharacterSpec, t, v, w, precision: PrecisionContext | int | None = None,
                   order: str = "ascending", tail_run: int = TAIL_RUN) -> HReal:
    """
    sum_{n>=1} chi(n) e^{-w n^2 t^2 - v n t}

    Args:
        d (int | CharacterSpec): fundamental discriminant of chi
        order (str): 'ascending' or 'residue' (class by class mod f over the
            same index range)

    Returns:
        HReal: the sum
    """
    chi = d if isinstance(d, CharacterSpec) else CharacterSpec(d)
    p = resolve_precision(precision)
    ctx = p.ctx
    t, v, w = to_hreal(t, p), to_hreal(v, p), to_hreal(w, p)
    _check_positive(t=t, w=w)
    a = w * t * t
    b = v * t

    def term(n):
        c = chi(n)
        return c * ctx.exp(-a * n * n - b * n) if c else 0

    total, last = _tail_sum(term, lambda n: ctx.exp(abs(b) * n - a * n * n), _tail_eps(p),
                            peak=abs(b) / (2 * a), tail_run=tail_run)
    if order == "ascending":
        return total
    if order != "residue":
        raise ValueError(f"unknown summation order {order!r}")
    f = chi.modulus
    total = ctx.mpf(0)
    for r in range(1, f + 1):
        if chi(r):
            total += ctx.fsum(term(n) for n in range(r, last + 1, f))
    return total


@dataclass(frozen=True)
class OLEvaluation:
    value: HReal
    terms: int
    remainder_bound: HReal


def eval_theta_OL_detailed(l: int, m: int, k: int, t, precision: PrecisionContext | int | None = None) -> OLEvaluation:
    """sum_{j>=0} (-1)^j e^{-(k-1)(lj+m)^2 t} with the alternating remainder bound"""
    if k < 2:
        raise ValueError("Ono-Lovejoy form needs k >= 2")
    if l <= 0 or not 0 < m < l:
        raise ValueError(f"need 0 < m < l, got l={l}, m={m}")
    p = resolve_precision(precision)
    ctx = p.ctx
    t = to_hreal(t, p)
    _check_positive(t=t)
    eps = _tail_eps(p)
    total = ctx.mpf(0)
    j = 0
    while True:
        mag = ctx.exp(-(k - 1) * (l * j + m) ** 2 * t)
        if mag < eps:
            return OLEvaluation(total, j, mag)
        total += -mag if j % 2 else mag
        j += 1


def eval_theta_OL(l: int, m: int, k: int, t, precision: PrecisionContext | int | None = None) -> HReal:
    """e^{-(k-1)m^2 t} F_k(e^{-lmt}, e^{-l^2 t}) as an alternating sum"""
    return eval_theta_OL_detailed(l, m, k, t, precision).value


def eval_theta_fk(k: int, t, v, w, precision: PrecisionContext | int | None = None,
                  tail_run: int = TAIL_RUN) -> HReal:
    """F_k(e^{-vt}, e^{-wt^2}) - 1 = sum_{n>=1} (-1)^n e^{-2(k-1)vnt - (k-1)wn^2t^2}"""
    if k < 2:
        raise ValueError("F_k needs k >= 2")
    p = resolve_precision(precision)
    ctx = p.ctx
    t, v, w = to_hreal(t, p), to_hreal(v, p), to_hreal(w, p)
    _check_positive(t=t, w=w)
    a = (k - 1) * w * t * t
    b = 2 * (k - 1) * v * t

    def term(n):
        value = ctx.exp(-b * n - a * n * n)
        return -value if n % 2 else value

    total, _ = _tail_sum(term, lambda n: ctx.exp(abs(b) * n - a * n * n), _tail_eps(p),
                         peak=abs(b) / (2 * a), tail_run=tail_run)
    return total


# ---------------------------------------------------------------------------
# requests

TARGETS = ("multisumA", "multisumB", "multisumC", "thetaDiff", "thetaChi", "thetaOL", "thetaFk")


@dataclass(frozen=True)
class EvalRequest:
    """One left-hand-side evaluation; t <= 1/2, w > 0"""
    target: str
    t: Fraction
    v: Fraction = Fraction(0)
    w: Fraction = Fraction(1)
    k: int = 1
    family: str = "A"
    d: Optional[int] = None
    l: Optional[int] = None
    m: Optional[int] = None
    variant: Optional[str] = None
    digits: Optional[int] = None

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}; expected one of {TARGETS}")
        if not 0 < self.t <= Fraction(1, 2):
            raise ValueError("requests live in the asymptotic regime 0 < t <= 1/2")
        if self.target != "thetaOL" and not self.w > 0:
            raise ValueError("w must be > 0")


def evaluate(request: EvalRequest) -> HReal:
    p = resolve_precision(request.digits)
    r = request
    if r.target.startswith("multisum"):
        return eval_multisum(r.target[-1], r.k, r.t, r.v, r.w, p, r.variant or "proof")
    if r.target == "thetaDiff":
        return eval_theta_diff(r.family, r.k, r.t, r.v, r.w, p, r.variant)
    if r.target == "thetaChi":
        return eval_theta_chi(r.d, r.t, r.v, r.w, p)
    if r.target == "thetaOL":
        return eval_theta_OL(r.l, r.m, r.k, r.t, p)
    return eval_theta_fk(r.k, r.t, r.v, r.w, p)


def default_workers() -> int:
    return max(1, int(os.environ.get("QSERIES_WORKERS", "1")))


def evaluate_batch(requests: Sequence[EvalRequest], workers: Optional[int] = None) -> List[HReal]:
    """Evaluate requests, possibly concurrently; results come back in request order"""
    workers = workers or default_workers()
    if workers == 1 or len(requests) <= 1:
        return [evaluate(r) for r in requests]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(evaluate, requests))
