from fractions import Fraction

import pytest

from asym_engine import (
    DEFAULT_ORDER,
    EXPANSION_VARIANTS,
    TARGETS,
    PrecisionStarvationError,
    arbitrate,
    build_expansion,
    default_grid,
    eval_truncation,
    power_grid,
    remainder_slope,
    two_sum_coefficient,
)
from exact_arith import NotFundamentalError
from hp_real import PrecisionContext, to_hreal
from q_formal import UnknownVariantError

P = PrecisionContext(50)


def close(a, b, digits=40):
    return abs(a - b) <= P.ctx.mpf(10) ** (-digits)


def test_power_grid():
    assert power_grid(4, 6) == [Fraction(1, 16), Fraction(1, 32), Fraction(1, 64)]
    assert default_grid("ol")[0] == Fraction(1, 256)
    assert len(default_grid("T14")) == 7
    with pytest.raises(ValueError):
        power_grid(6, 4)


def test_t11_powers():
    spec = build_expansion("T11", {"k": 1, "v": Fraction(1, 2), "w": 1}, 5, P)
    assert spec.powers == [-1, 1, 3, 5]
    assert spec.next_power == 7
    assert spec.term_at(-1).kind == "erf-residue"
    assert spec.term_at(3).exact_part == Fraction(1, 120)


def test_t14_parity_of_powers():
    odd = build_expansion("T14", {"d": -4, "v": 1, "w": 1}, 6, P)
    assert odd.powers == [0, 2, 4, 6]
    assert odd.next_power == 8
    even = build_expansion("T14", {"d": 5, "v": 1, "w": 1}, 3, P)
    assert even.powers == [1, 3]
    assert even.next_power == 5


def test_t14_constant_term():
    # L(0, chi_{-4}) e^{v^2/8w} D_0(v/sqrt(2w)) = 1/2 for every v
    spec = build_expansion("T14", {"d": -4, "v": Fraction(3, 2), "w": 2}, 0, P)
    assert close(spec.term_at(0).coeff, to_hreal(Fraction(1, 2), P))


def test_f14_constant_term_sign():
    corrected = build_expansion("F14", {"k": 2, "v": Fraction(1, 2), "w": 1}, 3, P, "corrected")
    printed = build_expansion("F14", {"k": 2, "v": Fraction(1, 2), "w": 1}, 3, P, "printed")
    assert close(corrected.term_at(0).coeff, to_hreal(Fraction(-1, 2), P))
    assert close(printed.term_at(0).coeff, to_hreal(Fraction(1, 2), P))
    assert corrected.powers == [0, 1, 3]
    assert corrected.next_power == 5


def test_ol_terms_are_exact():
    spec = build_expansion("OL", {"l": 3, "m": 1, "k": 2}, 3, P)
    assert [term.exact_part for term in spec.terms] == [Fraction(1, 2), -1, 11, -301]
    assert close(spec.term_at(2).coeff, to_hreal(Fraction(11, 2), P))
    assert spec.next_power == 4


def test_two_sum_coefficient_collapses_by_parity():
    for n in (2, 4, 6):
        assert two_sum_coefficient(2, Fraction(1, 2), 1, n, P) == 0
    spec = build_expansion("T11", {"k": 1, "v": Fraction(1, 2), "w": 1}, 5, P)
    for n in (1, 3, 5):
        assert close(two_sum_coefficient(2, Fraction(1, 2), 1, n, P), spec.term_at(n).coeff)


def test_t12_base_change_variant_has_even_powers():
    spec = build_expansion("T12", {"k": 1, "v": Fraction(1, 2), "w": 1}, 5, P, "proof-beta1")
    # phi = 1/2, 1/4, 0, -1/48 for 2^k = 2
    assert spec.term_at(0).exact_part == Fraction(-1, 2)
    assert spec.term_at(2).exact_part == Fraction(1, 4)
    assert spec.term_at(4) is None
    assert spec.next_power == 6


def test_zero_shift_is_degenerate():
    spec = build_expansion("T11", {"k": 1, "v": 0, "w": 1}, 5, P)
    assert spec.is_zero
    assert eval_truncation(spec, Fraction(1, 8)) == 0
    report = remainder_slope("T11", {"k": 1, "v": 0, "w": 1}, 5, precision=P)
    assert report.degenerate and report.outcome == "PASS-degenerate"


def test_every_target_has_a_default_order():
    assert set(DEFAULT_ORDER) == set(TARGETS)
    assert DEFAULT_ORDER["T14"] == 4
    assert DEFAULT_ORDER["OL"] == 3


def test_build_expansion_errors():
    with pytest.raises(ValueError):
        build_expansion("T11", {"k": 1, "v": 1}, 31, P)
    with pytest.raises(ValueError):
        build_expansion("T99", {}, 3, P)
    with pytest.raises(UnknownVariantError):
        build_expansion("T11", {"k": 1, "v": 1}, 3, P, "statement")
    with pytest.raises(NotFundamentalError):
        build_expansion("T14", {"d": 7, "v": 1}, 3, P)
    with pytest.raises(ValueError):
        build_expansion("OL", {"l": 2, "m": 1, "k": 1}, 3, P)
    with pytest.raises(ValueError):
        build_expansion("F14", {"k": 1, "v": 1}, 3, P)
    with pytest.raises(ValueError):
        build_expansion("OL", {"m": 1, "k": 2}, 3, P)
    with pytest.raises(ValueError):
        build_expansion("OL", {"l": 3}, 3, P)


@pytest.mark.parametrize("grid", [
    power_grid(4, 7),
    power_grid(2, 8),
    [Fraction(1, 16), Fraction(1, 32), Fraction(1, 48), Fraction(1, 64), Fraction(1, 128)],
])
def test_grid_validation(grid):
    with pytest.raises(ValueError):
        remainder_slope("T14", {"d": -4, "v": 1, "w": 1}, 4, grid=grid, precision=P)


def test_precision_starvation():
    with pytest.raises(PrecisionStarvationError):
        remainder_slope("T14", {"d": -4, "v": 1, "w": 1}, 20, precision=PrecisionContext(30))


@pytest.mark.slow
def test_t11_slope():
    report = remainder_slope("T11", {"k": 1, "v": Fraction(1, 2), "w": 1}, 5)
    assert report.expected == 7
    assert report.passed, report.slope


@pytest.mark.slow
def test_t14_odd_character_slope():
    report = remainder_slope("T14", {"d": -4, "v": 1, "w": 1}, 4, grid=power_grid(4, 9))
    assert report.expected == 6
    assert abs(report.slope - 6) <= 0.25


@pytest.mark.slow
def test_t14_even_character_slope():
    report = remainder_slope("T14", {"d": 5, "v": 1, "w": 1}, 3)
    assert report.expected == 5
    assert report.passed, report.slope


@pytest.mark.slow
def test_ol_slope():
    report = remainder_slope("OL", {"l": 3, "m": 1, "k": 2}, 3)
    assert report.expected == 4
    assert report.passed, report.slope


@pytest.mark.slow
def test_slope_is_thread_count_independent():
    params = {"d": -4, "v": 1, "w": 1}
    serial = remainder_slope("T14", params, 4, workers=1)
    threaded = remainder_slope("T14", params, 4, workers=4)
    assert serial.slope == threaded.slope
    assert [pt.remainder for pt in serial.points] == [pt.remainder for pt in threaded.points]


@pytest.mark.slow
def test_slope_is_stable_when_largest_t_is_dropped():
    params = {"d": -4, "v": 1, "w": 1}
    full = remainder_slope("T14", params, 4, grid=power_grid(4, 10))
    trimmed = remainder_slope("T14", params, 4, grid=power_grid(5, 10))
    assert abs(full.slope - trimmed.slope) <= 0.05


@pytest.mark.slow
def test_f14_sign_arbitration():
    report = arbitrate("F14", {"k": 2, "v": Fraction(1, 2), "w": 1})
    assert report.winner == "corrected"
    assert report.outcome == "PASS"


@pytest.mark.slow
def test_t13_arbitration():
    report = arbitrate("T13", {"k": 1, "v": Fraction(1, 2), "w": 1})
    assert report.winner == "proof"
    assert report.margin >= 1.0


@pytest.mark.slow
def test_t12_arbitration_follows_base_change():
    report = arbitrate("T12", {"k": 1, "v": Fraction(1, 2), "w": 1})
    assert report.winner == "proof-beta1"
    assert [r.variant for r in report.reports] == list(EXPANSION_VARIANTS["T12"])


@pytest.mark.slow
def test_t12_arbitration_against_unit_base_left_side():
    # with the beta0 left side the unmodified expansion is the one that holds
    report = arbitrate("T12", {"k": 1, "v": Fraction(1, 2), "w": 1}, variants=["proof", "statement"],
                       lhs_variant="beta0")
    assert report.winner == "proof"
    assert report.margin >= 1.0


def test_arbitration_needs_two_variants():
    with pytest.raises(ValueError):
        arbitrate("T11", {"k": 1, "v": 1})
