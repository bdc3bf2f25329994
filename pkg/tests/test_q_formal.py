import pytest

from q_formal import (
    VARIANTS,
    BaileyPair,
    InexactDivisionError,
    LaurentPoly,
    LaurentQSeries,
    Monomial,
    NonUnitError,
    OrderMismatchError,
    UnknownVariantError,
    Z,
    bailey_check,
    bailey_lemma,
    chain_apply,
    clear_caches,
    first_difference,
    inv_qpoch,
    multisum_lhs,
    pochhammer,
    q_power,
    qs_div_unit,
    qs_mul,
    seed_pair,
    theta_rhs,
    variant_rhs,
    verify_identity,
    verify_variants,
)

PARTITIONS = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176, 231, 297, 385, 490]
PENTAGONAL = [1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1, 0, 0, -1, 0, 0, 0, 0]


def random_series(rng, N, z_span=2):
    terms = {}
    for q_exp in range(N):
        for z_exp in range(-z_span, z_span + 1):
            if rng.random() < 0.4:
                terms[(q_exp, z_exp)] = rng.randint(-5, 5)
    return LaurentQSeries.from_terms(N, terms)


def test_laurent_poly_arithmetic():
    one_minus_z = LaurentPoly({0: 1, 1: -1})
    assert str(one_minus_z) == "1 - z"
    assert str(one_minus_z * one_minus_z) == "1 - 2*z + z^2"
    assert one_minus_z - one_minus_z == LaurentPoly()
    assert str(LaurentPoly({-1: 1, 2: -3})) == "z^-1 - 3*z^2"
    assert LaurentPoly.monomial(4) == 4
    assert LaurentPoly({-2: 1, 3: 1}).exponent_range() == (-2, 3)


def test_series_ring_axioms(rng):
    N = 12
    for _ in range(1000):
        a, b, c = (random_series(rng, N) for _ in range(3))
        assert qs_mul(a, b) == qs_mul(b, a)
        assert qs_mul(a, b + c) == qs_mul(a, b) + qs_mul(a, c)
        assert qs_mul(qs_mul(a, b), c) == qs_mul(a, qs_mul(b, c))
        assert a - a == LaurentQSeries.zero(N)


def test_division_inverts_multiplication(rng):
    N = 12
    for _ in range(1000):
        a = random_series(rng, N)
        b = random_series(rng, N).shift(1) + LaurentQSeries.monomial(N, 1, z_exp=rng.randint(-2, 2))
        assert qs_div_unit(qs_mul(a, b), b) == a
        assert qs_mul(a / b, b) == a


def test_division_errors():
    N = 6
    two_terms = LaurentQSeries.from_terms(N, {(0, 0): 1, (0, 1): 1})
    with pytest.raises(NonUnitError):
        qs_div_unit(LaurentQSeries.one(N), two_terms)
    with pytest.raises(NonUnitError):
        qs_div_unit(LaurentQSeries.one(N), LaurentQSeries.monomial(N, 1, q_exp=1))
    with pytest.raises(InexactDivisionError):
        qs_div_unit(LaurentQSeries.one(N), LaurentQSeries.monomial(N, 2))
    with pytest.raises(OrderMismatchError):
        LaurentQSeries.one(5) + LaurentQSeries.one(6)


def test_euler_pentagonal():
    N = len(PENTAGONAL)
    assert pochhammer(q_power(1), 1, N, N).q_coefficients() == PENTAGONAL


def test_partition_numbers():
    N = len(PARTITIONS)
    assert inv_qpoch(1, N, N).q_coefficients() == PARTITIONS


def test_pochhammer_in_z():
    # (z; q)_2 = 1 - z - zq + z^2 q
    expected = LaurentQSeries.from_terms(5, {(0, 0): 1, (0, 1): -1, (1, 1): -1, (1, 2): 1})
    assert pochhammer(Z, 1, 2, 5) == expected
    assert pochhammer((1, 1, 0), 1, 2, 5) == expected
    assert pochhammer(Monomial(1, 0, 3), 1, 0, 5) == LaurentQSeries.one(5)
    with pytest.raises(ValueError):
        pochhammer(Z, 0, 2, 5)


def test_shift_drops_beyond_order():
    s = LaurentQSeries.monomial(4, 3, z_exp=1, q_exp=2)
    assert s.shift(1, z_exp=-1, coeff=-1) == LaurentQSeries.monomial(4, -3, q_exp=3)
    assert s.shift(2).is_zero


def test_dump():
    s = LaurentQSeries.from_terms(3, {(0, 0): 1, (0, 1): -1, (2, -1): 2})
    assert s.dump() == "q^0: 1 - z\nq^2: 2*z^-1"


def test_first_difference_locates_lowest_order():
    a = LaurentQSeries.from_terms(6, {(2, 1): 1, (4, 0): 3})
    b = LaurentQSeries.from_terms(6, {(2, 1): 1, (4, 0): 2, (5, 0): 1})
    miss = first_difference(a, b)
    assert (miss.q_exp, miss.z_exp, miss.lhs, miss.rhs) == (4, 0, 3, 2)
    assert first_difference(a, a) is None


def test_seed_pair_satisfies_bailey_relation():
    report = bailey_check(seed_pair(), n_max=8, N=25)
    assert report.passed and report.mismatch is None


def test_seed_pair_at_base_two():
    assert bailey_check(seed_pair(base=2), n_max=6, N=25).passed


@pytest.mark.parametrize("chain", ["S1", "S2"])
@pytest.mark.parametrize("k", [1, 2])
def test_chain_outputs_are_bailey_pairs(chain, k):
    pair = chain_apply(chain, seed_pair(), k)
    assert bailey_check(pair, n_max=8, N=25).passed


def test_d1_chain_output_is_bailey_pair():
    pair = chain_apply("D1", seed_pair(base=2), 1)
    assert (pair.base, pair.a_exp) == (1, 1)
    assert bailey_check(pair, n_max=6, N=20).passed


def test_chain_errors():
    with pytest.raises(UnknownVariantError):
        chain_apply("S3", seed_pair(), 1)
    with pytest.raises(ValueError):
        chain_apply("D1", seed_pair(), 1)
    assert chain_apply("S1", seed_pair(), 0) is not None


def test_broken_pair_is_located():
    seed = seed_pair()
    broken = BaileyPair("broken", lambda n, N: seed.alpha(n, N) * 2, seed.beta_term)
    report = bailey_check(broken, n_max=3, N=10)
    assert not report.passed
    assert report.mismatch.n == 0


def test_sign_flip_at_one_index_is_located():
    seed = seed_pair()
    flipped = BaileyPair("flipped", lambda n, N: seed.alpha(n, N) * (-1 if n == 2 else 1), seed.beta_term)
    report = bailey_check(flipped, n_max=4, N=10)
    assert not report.passed
    assert report.mismatch.n == 2


def test_s1_steps_compose():
    N = 20
    twice = chain_apply("S1", chain_apply("S1", seed_pair(), 1), 1)
    once = chain_apply("S1", seed_pair(), 2)
    for n in range(7):
        assert twice.alpha(n, N) == once.alpha(n, N)
        assert twice.beta(n, N) == once.beta(n, N)


@pytest.mark.parametrize("k", [1, 2])
def test_s1_chain_matches_family_a_multisum(k):
    N = 18
    lhs, rhs = bailey_lemma(chain_apply("S1", seed_pair(), k), N)
    assert lhs == multisum_lhs("A", k, N)
    assert rhs == theta_rhs("A", k, N)


@pytest.mark.parametrize("k", [1, 2])
def test_s2_chain_matches_family_c_multisum(k):
    N = 18
    lhs, rhs = bailey_lemma(chain_apply("S2", seed_pair(), k), N)
    assert lhs == multisum_lhs("C", k, N)
    assert rhs == theta_rhs("C", k, N)


def test_d1_chain_matches_family_b_multisum():
    N = 18
    lhs, rhs = bailey_lemma(chain_apply("D1", seed_pair(base=2), 1), N)
    assert lhs == multisum_lhs("B", 1, N)
    assert rhs == variant_rhs("B", 1, N, "beta1")


def test_theta_rhs_terms():
    rhs = theta_rhs("A", 1, 5)
    # n = 0: 1 - z; n = 1: (z^-1 - z^2) q^4
    assert rhs == LaurentQSeries.from_terms(5, {(0, 0): 1, (0, 1): -1, (4, -1): 1, (4, 2): -1})


@pytest.mark.parametrize("family", ["A", "C"])
@pytest.mark.parametrize("k", [1, 2])
def test_identity_holds(family, k):
    report = verify_identity(family, k, 30)
    assert report.passed, report.mismatch


@pytest.mark.slow
@pytest.mark.parametrize("family", ["A", "C"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_identity_holds_to_order_40(family, k):
    assert verify_identity(family, k, 40).passed


@pytest.mark.parametrize("k", [1, 2])
def test_family_b_arbitration(k):
    reports, winner = verify_variants("B", k, 30)
    assert winner == "beta1"
    by_variant = {r.variant: r for r in reports}
    assert set(by_variant) == set(VARIANTS["B"])
    assert by_variant["beta0"].mismatch.q_exp == 1
    assert not by_variant["beta2"].passed


def test_beta2_first_failure_for_k1():
    report = verify_identity("B", 1, 30, "beta2")
    assert report.mismatch.q_exp == 3


def test_unknown_variant():
    with pytest.raises(UnknownVariantError):
        verify_identity("A", 1, 10, "beta1")
    with pytest.raises(ValueError):
        verify_identity("D", 1, 10)


def test_clear_caches_keeps_results():
    before = multisum_lhs("A", 1, 12)
    clear_caches()
    assert multisum_lhs("A", 1, 12) == before
