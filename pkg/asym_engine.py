"""
Asymptotic expansion module for the q-series verification suite
Handles truncated small-t expansions for every target, their evaluation,
empirical remainder slopes on t-grids, and arbitration between variants
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from exact_arith import CharacterSpec, base_change_series, lm_value, l_chi_neg, zeta_neg
from hp_real import (
    HReal, PrecisionContext, hp_erf, hp_exp, hp_pi, pcf_D, pcf_Dm1, resolve_precision, to_hreal,
)
from q_formal import UnknownVariantError
from series_eval import EvalRequest, evaluate_batch, theta_scale

logger = logging.getLogger(__name__)

TARGETS = ("T11", "T12", "T13", "T14", "F14", "OL")

# first entry is the default variant
EXPANSION_VARIANTS: Dict[str, Tuple[str, ...]] = {
    "T11": ("proof",),
    "T12": ("proof-beta1", "proof", "statement"),
    "T13": ("proof", "statement"),
    "T14": ("proof",),
    "F14": ("corrected", "printed"),
    "OL": ("proof",),
}

KINDS = ("erf-residue", "zeta-Dn", "Lchi-Dn", "OL-term", "Fk-term", "base-change")

MAX_ORDER = 30
SLOPE_TOLERANCE = 0.25
ARBITRATION_MISS = 1.0
SLOPE_DIGITS = 60
NOISE_DIGITS = 10
DEFAULT_GRID_EXPONENTS = (4, 10)
OL_GRID_EXPONENTS = (8, 13)
# highest power kept when the caller gives no order
DEFAULT_ORDER = {"T11": 5, "T12": 5, "T13": 5, "T14": 4, "F14": 3, "OL": 3}
_THETA_TARGETS = {"T11": "A", "T12": "B", "T13": "C"}


class PrecisionStarvationError(RuntimeError):
    """Raised when a remainder sinks below the numerical noise floor"""


@dataclass(frozen=True)
class ExpansionTerm:
    power: int
    coeff: HReal
    kind: str
    exact_part: Optional[Fraction] = None


@dataclass(frozen=True)
class ExpansionSpec:
    """A truncated expansion sum coeff * t^power plus the first omitted power"""
    target: str
    params: Dict[str, Fraction]
    variant: str
    order: int
    terms: Tuple[ExpansionTerm, ...]
    next_power: int
    precision: PrecisionContext = field(default_factory=PrecisionContext)

    @property
    def powers(self) -> List[int]:
        return [term.power for term in self.terms]

    def term_at(self, power: int) -> Optional[ExpansionTerm]:
        for term in self.terms:
            if term.power == power:
                return term
        return None

    @property
    def is_zero(self) -> bool:
        return all(term.coeff == 0 for term in self.terms)


def power_grid(first: int, last: int) -> List[Fraction]:
    """[2^-first, ..., 2^-last]"""
    if last < first:
        raise ValueError("grid must run from the larger t to the smaller")
    return [Fraction(1, 2 ** e) for e in range(first, last + 1)]


def default_grid(target: str) -> List[Fraction]:
    exps = OL_GRID_EXPONENTS if target.upper() == "OL" else DEFAULT_GRID_EXPONENTS
    return power_grid(*exps)


def _check_target(target: str) -> str:
    target = target.upper()
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")
    return target


def _check_variant(target: str, variant: Optional[str]) -> str:
    allowed = EXPANSION_VARIANTS[target]
    variant = variant or allowed[0]
    if variant not in allowed:
        raise UnknownVariantError(f"variant {variant!r} not registered for {target}; have {allowed}")
    return variant


def _fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def _normalize_params(target: str, params: Dict) -> Dict:
    params = dict(params)
    if target in ("T11", "T12", "T13", "F14"):
        out = {"k": int(params.get("k", 1 if target != "F14" else 2)),
               "v": _fraction(params.get("v", 0)), "w": _fraction(params.get("w", 1))}
        if out["k"] < (2 if target == "F14" else 1):
            raise ValueError(f"{target} needs k >= {2 if target == 'F14' else 1}")
    elif target == "T14":
        if "d" not in params:
            raise ValueError("T14 needs a discriminant d")
        out = {"d": int(params["d"]), "v": _fraction(params.get("v", 0)), "w": _fraction(params.get("w", 1))}
        CharacterSpec(out["d"])
    else:
        if "l" not in params or "m" not in params:
            raise ValueError("OL needs both l and m")
        out = {"l": int(params["l"]), "m": int(params["m"]), "k": int(params.get("k", 2))}
        if out["k"] < 2 or not 0 < out["m"] < out["l"]:
            raise ValueError("OL needs k >= 2 and 0 < m < l")
    if "w" in out and out["w"] <= 0:
        raise ValueError("w must be > 0")
    return out


# ---------------------------------------------------------------------------
# theta-difference residues

def two_sum_coefficient(c, v, w, n: int, precision: PrecisionContext | int | None = None) -> HReal:
    """
    (2cw)^{n/2}/n! (-1)^n zeta(-n) e^{v^2/(8cw)} (D_n(-x) - D_n(x)), x = v/sqrt(2cw)

    The literal two-sum form before parity collapse.
    """
    p = resolve_precision(precision)
    ctx = p.ctx
    c, v, w = to_hreal(c, p), to_hreal(v, p), to_hreal(w, p)
    two_cw = 2 * c * w
    x = v / ctx.sqrt(two_cw)
    pref = hp_exp(v * v / (4 * two_cw), p)
    zeta = to_hreal(zeta_neg(n), p)
    sign = -1 if n % 2 else 1
    return two_cw ** (ctx.mpf(n) / 2) / factorial(n) * sign * zeta * pref * (pcf_D(n, -x, p) - pcf_D(n, x, p))


def _theta_erf_residue(c, v, w, p: PrecisionContext) -> HReal:
    # (2cw)^{-1/2} e^{v^2/(8cw)} (D_{-1}(-x) - D_{-1}(x))
    ctx = p.ctx
    two_cw = 2 * c * w
    x = v / ctx.sqrt(two_cw)
    return hp_exp(v * v / (4 * two_cw), p) * (pcf_Dm1(-x, p) - pcf_Dm1(x, p)) / ctx.sqrt(two_cw)


def _odd_sum_terms(two_cw: HReal, prefactor: HReal, x: HReal, M: int, p: PrecisionContext) -> List[ExpansionTerm]:
    ctx = p.ctx
    out = []
    for n in range(1, M + 1, 2):
        z = zeta_neg(n)
        coeff = 2 * two_cw ** (ctx.mpf(n) / 2) / factorial(n) * to_hreal(z, p) * prefactor * pcf_D(n, x, p)
        out.append(ExpansionTerm(n, coeff, "zeta-Dn", z))
    return out


def _theta_terms(target: str, params: Dict, variant: str, M: int, p: PrecisionContext) -> List[ExpansionTerm]:
    ctx = p.ctx
    k = params["k"]
    v, w = to_hreal(params["v"], p), to_hreal(params["w"], p)
    family = _THETA_TARGETS[target]
    c = to_hreal(theta_scale(family, k), p)
    two_cw = 2 * c * w
    x = v / ctx.sqrt(two_cw)

    if variant == "statement" and target == "T12":
        c_stmt = to_hreal((1 << k) + 1, p)
        erf_coeff = 2 * ctx.sqrt(hp_pi(p) / (4 * c_stmt * w)) * hp_exp(v * v / (4 * c_stmt * w), p) \
            * hp_erf(v / (2 * ctx.sqrt(c_stmt * w)), p)
        prefactor = hp_exp(v * v / (4 * (k + 1) * w), p)
    elif variant == "statement" and target == "T13":
        c_stmt = to_hreal(k + 2, p)
        erf_coeff = 2 * ctx.sqrt(hp_pi(p) / (2 * c_stmt * w)) * hp_exp(v * v / (2 * c_stmt * w), p) \
            * hp_erf(v / (2 * ctx.sqrt(c_stmt * w)), p)
        prefactor = hp_exp(v * v / (4 * two_cw), p)
    else:
        erf_coeff = _theta_erf_residue(c, v, w, p)
        prefactor = hp_exp(v * v / (4 * two_cw), p)

    terms = [ExpansionTerm(-1, erf_coeff, "erf-residue")]
    if variant != "proof-beta1":
        return terms + _odd_sum_terms(two_cw, prefactor, x, M, p)

    # (1-q)/(1-q^{2^k}) (1 + S) - 1 with q = e^{-wt^2}: the factor is a series in w t^2
    s_terms = {term.power: term.coeff for term in terms + _odd_sum_terms(two_cw, prefactor, x, M, p)}
    phi = base_change_series(1 << k, M // 2 + 2)
    out = []
    for power in range(-1, M + 1):
        if power % 2 == 0:
            j = power // 2
            exact = phi[j] - (1 if j == 0 else 0)
            if exact:
                out.append(ExpansionTerm(power, to_hreal(exact, p) * w ** j, "base-change", exact))
            continue
        coeff = ctx.mpf(0)
        for j in range((power + 1) // 2 + 1):
            s = s_terms.get(power - 2 * j)
            if s is not None and phi[j]:
                coeff += to_hreal(phi[j], p) * w ** j * s
        out.append(ExpansionTerm(power, coeff, "erf-residue" if power == -1 else "zeta-Dn"))
    return out


def _t14_terms(params: Dict, M: int, p: PrecisionContext) -> List[ExpansionTerm]:
    ctx = p.ctx
    chi = CharacterSpec(params["d"])
    v, w = to_hreal(params["v"], p), to_hreal(params["w"], p)
    x = v / ctx.sqrt(2 * w)
    prefactor = hp_exp(v * v / (8 * w), p)
    out = []
    for n in range(0, M + 1):
        if _nonzero_power("T14", params, "proof", n):
            L = l_chi_neg(chi, n)
            sign = -1 if n % 2 else 1
            coeff = (2 * w) ** (ctx.mpf(n) / 2) * sign / factorial(n) * to_hreal(L, p) * prefactor * pcf_D(n, x, p)
            out.append(ExpansionTerm(n, coeff, "Lchi-Dn", L))
    return out


def _f14_terms(params: Dict, variant: str, M: int, p: PrecisionContext) -> List[ExpansionTerm]:
    ctx = p.ctx
    k = params["k"]
    v, w = to_hreal(params["v"], p), to_hreal(params["w"], p)
    a = 2 * w * (k - 1)
    X = 2 * (k - 1) * v / ctx.sqrt(a)
    prefactor = hp_exp(v * v * (k - 1) / (2 * w), p)
    flip = -1 if variant == "corrected" else 1
    out = []
    for n in range(0, M + 1):
        if _nonzero_power("F14", params, variant, n):
            exact = flip * (1 - 2 ** (1 + n)) * zeta_neg(n)
            sign = -1 if n % 2 else 1
            coeff = prefactor * a ** (ctx.mpf(n) / 2) / factorial(n) * sign * to_hreal(exact, p) * pcf_D(n, X, p)
            out.append(ExpansionTerm(n, coeff, "Fk-term", exact))
    return out


def _ol_terms(params: Dict, M: int, p: PrecisionContext) -> List[ExpansionTerm]:
    l, m, k = params["l"], params["m"], params["k"]
    out = []
    for n in range(0, M + 1):
        L = lm_value(l, m, n)
        if L:
            exact = L * Fraction(1 - k) ** n / factorial(n)
            out.append(ExpansionTerm(n, to_hreal(exact, p), "OL-term", L))
    return out


def _nonzero_power(target: str, params: Dict, variant: str, power: int) -> bool:
    """Structural vanishing rules: D_n parity, trivial zeta zeros, character parity"""
    if target in _THETA_TARGETS:
        if power == -1 or power % 2:
            return power >= -1
        if variant != "proof-beta1":
            return False
        j = power // 2
        phi = base_change_series(1 << params["k"], j + 1)
        return (phi[j] - (1 if j == 0 else 0)) != 0
    if power < 0:
        return False
    if target == "T14":
        return (power % 2 == 0) != CharacterSpec(params["d"]).is_even
    if target == "F14":
        return power == 0 or power % 2 == 1
    return lm_value(params["l"], params["m"], power) != 0


def _next_power(target: str, params: Dict, variant: str, M: int) -> int:
    for power in range(M + 1, M + 1 + 4 * MAX_ORDER):
        if _nonzero_power(target, params, variant, power):
            return power
    raise ValueError(f"no nonzero term of {target} beyond t^{M} within search range")


def build_expansion(target: str, params: Dict, M: int, precision: PrecisionContext | int | None = None,
                    variant: Optional[str] = None) -> ExpansionSpec:
    """
    Truncated expansion of a target up to t^M

    Args:
        target (str): T11, T12, T13, T14, F14 or OL
        params (dict): k, v, w (T11-T13, F14); d, v, w (T14); l, m, k (OL)
        M (int): highest power kept, M <= 30
        precision: PrecisionContext or digit count
        variant (str | None): registered variant, default the first one

    Returns:
        ExpansionSpec: sorted terms and the first omitted nonzero power
    """
    target = _check_target(target)
    variant = _check_variant(target, variant)
    if M > MAX_ORDER or M < -1:
        raise ValueError(f"order must be in -1..{MAX_ORDER}")
    params = _normalize_params(target, params)
    p = resolve_precision(precision)
    if target in _THETA_TARGETS:
        terms = _theta_terms(target, params, variant, M, p)
    elif target == "T14":
        terms = _t14_terms(params, M, p)
    elif target == "F14":
        terms = _f14_terms(params, variant, M, p)
    else:
        terms = _ol_terms(params, M, p)
    terms = tuple(sorted((t for t in terms if t.power <= M), key=lambda t: t.power))
    spec = ExpansionSpec(target, params, variant, M, terms, _next_power(target, params, variant, M), p)
    logger.debug("built %s/%s to order %s: powers %s, next %s", target, variant, M, spec.powers, spec.next_power)
    return spec


def eval_truncation(spec: ExpansionSpec, t) -> HReal:
    """S_M(t) = sum coeff * t^power"""
    p = spec.precision
    t = to_hreal(t, p)
    total = p.ctx.mpf(0)
    for term in spec.terms:
        total += term.coeff * t ** term.power
    return total


# ---------------------------------------------------------------------------
# remainder slopes

def lhs_request(target: str, params: Dict, t, digits: int, lhs_variant: Optional[str] = None) -> EvalRequest:
    """The direct evaluation matching a target's left side"""
    target = _check_target(target)
    params = _normalize_params(target, params)
    t = _fraction(t)
    if target in _THETA_TARGETS:
        family = _THETA_TARGETS[target]
        variant = lhs_variant or ("beta1" if family == "B" else None)
        return EvalRequest("thetaDiff", t, params["v"], params["w"], k=params["k"], family=family,
                           variant=variant, digits=digits)
    if target == "T14":
        return EvalRequest("thetaChi", t, params["v"], params["w"], d=params["d"], digits=digits)
    if target == "F14":
        return EvalRequest("thetaFk", t, params["v"], params["w"], k=params["k"], digits=digits)
    return EvalRequest("thetaOL", t, k=params["k"], l=params["l"], m=params["m"], digits=digits)


@dataclass(frozen=True)
class SlopePoint:
    t: Fraction
    lhs: HReal
    truncation: HReal
    remainder: HReal


@dataclass(frozen=True)
class SlopeReport:
    target: str
    params: Dict
    variant: str
    order: int
    digits: int
    points: Tuple[SlopePoint, ...]
    slope: Optional[float]
    expected: int
    passed: bool
    degenerate: bool = False

    @property
    def outcome(self) -> str:
        if self.degenerate:
            return "PASS-degenerate"
        return "PASS" if self.passed else "FAIL"

    @property
    def miss(self) -> float:
        return math.inf if self.slope is None else abs(self.slope - self.expected)


def _check_grid(grid: Sequence) -> List[Fraction]:
    grid = [_fraction(t) for t in grid]
    if len(grid) < 5:
        raise ValueError("slope fit needs at least 5 grid points")
    if any(t <= 0 or t > Fraction(1, 8) for t in grid):
        raise ValueError("grid points must lie in (0, 1/8]")
    ratios = {b / a for a, b in zip(grid, grid[1:])}
    if len(ratios) != 1 or ratios == {1}:
        raise ValueError("grid must be geometric")
    return grid


def remainder_slope(target: str, params: Dict, M: int, grid: Optional[Sequence] = None,
                    precision: PrecisionContext | int | None = None, variant: Optional[str] = None,
                    lhs_variant: Optional[str] = None, workers: Optional[int] = None) -> SlopeReport:
    """
    Least-squares slope of log |LHS - S_M| against log t

    Passes when the slope is within 0.25 of the first omitted nonzero power.

    Raises:
        PrecisionStarvationError: a remainder is below 10^{-P+10}
    """
    target = _check_target(target)
    grid = _check_grid(grid if grid is not None else default_grid(target))
    p = resolve_precision(precision if precision is not None else SLOPE_DIGITS)
    spec = build_expansion(target, params, M, p, variant)
    requests = [lhs_request(target, spec.params, t, p.digits, lhs_variant) for t in grid]
    lhs_values = evaluate_batch(requests, workers)

    points = []
    for t, lhs in zip(grid, lhs_values):
        lhs = to_hreal(lhs, p)
        s = eval_truncation(spec, t)
        points.append(SlopePoint(t, lhs, s, abs(lhs - s)))

    if spec.is_zero and all(pt.remainder == 0 for pt in points):
        logger.info("%s/%s degenerate: left side and all coefficients vanish", target, spec.variant)
        return SlopeReport(target, spec.params, spec.variant, M, p.digits, tuple(points), None,
                           spec.next_power, True, degenerate=True)

    floor = p.ctx.mpf(10) ** (-(p.digits - NOISE_DIGITS))
    smallest = min(pt.remainder for pt in points)
    if smallest <= floor:
        raise PrecisionStarvationError(
            f"{target}/{spec.variant}: remainder {p.ctx.nstr(smallest, 5)} below noise floor 1e-{p.digits - NOISE_DIGITS}")

    log_t = np.array([math.log(pt.t.numerator) - math.log(pt.t.denominator) for pt in points])
    log_r = np.array([float(p.ctx.log(pt.remainder)) for pt in points])
    slope = float(np.polyfit(log_t, log_r, 1)[0])
    passed = abs(slope - spec.next_power) <= SLOPE_TOLERANCE
    logger.info("%s/%s order %s: slope %.4f, expected %s, %s", target, spec.variant, M, slope,
                spec.next_power, "pass" if passed else "miss")
    return SlopeReport(target, spec.params, spec.variant, M, p.digits, tuple(points), slope, spec.next_power, passed)


@dataclass(frozen=True)
class ArbitrationReport:
    target: str
    params: Dict
    reports: Tuple[SlopeReport, ...]
    winner: Optional[str]
    margin: Optional[float]

    @property
    def outcome(self) -> str:
        return "PASS" if self.winner else "INCONCLUSIVE"


def arbitrate(target: str, params: Dict, grid: Optional[Sequence] = None,
              precision: PrecisionContext | int | None = None, variants: Optional[Sequence[str]] = None,
              M: Optional[int] = None, lhs_variant: Optional[str] = None,
              workers: Optional[int] = None) -> ArbitrationReport:
    """
    Run remainder_slope under each variant against the same left side

    The winner matches its expected power within 0.25 while every other
    variant misses by at least 1.0; otherwise the result is inconclusive.
    """
    target = _check_target(target)
    variants = list(variants or EXPANSION_VARIANTS[target])
    if len(variants) < 2:
        raise ValueError(f"arbitration needs at least two variants, got {variants}")
    M = M if M is not None else DEFAULT_ORDER[target]
    reports = tuple(remainder_slope(target, params, M, grid, precision, v, lhs_variant, workers) for v in variants)
    passing = [r for r in reports if r.passed]
    winner = margin = None
    if len(passing) == 1:
        others = [r.miss for r in reports if r is not passing[0]]
        if all(miss >= ARBITRATION_MISS for miss in others):
            winner = passing[0].variant
            margin = min(others)
    if winner is None:
        logger.warning("%s arbitration inconclusive: slopes %s", target,
                       {r.variant: r.slope for r in reports})
    else:
        logger.info("%s arbitration: %s wins by %.3f", target, winner, margin)
    return ArbitrationReport(target, reports[0].params, reports, winner, margin)
