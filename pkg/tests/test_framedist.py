import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfaloha.framedist import (
    DomainError,
    ExactPmf,
    backlog_expansion_check,
    backlog_pmf,
    mean_backlog,
    mean_successes,
    moments,
    property_reports,
    success_counts,
    success_pmf,
    success_pmf_exact,
    success_pmf_oracle,
    success_pmf_shifted,
    var_successes,
)
from dfaloha.numeric import EXACT, float_mode
from tests.oracles import brute_pmf


def as_fractions(pmf, n):
    return [Fraction(int(pmf[i].numerator), int(pmf[i].denominator)) for i in range(n + 1)]


@pytest.mark.parametrize("n,r", [(n, r) for n in range(1, 7) for r in range(1, 7) if r**n <= 50_000])
def test_exact_matches_brute_enumeration(n, r):
    assert as_fractions(success_pmf_exact(n, r), n) == brute_pmf(n, r)


def test_hand_values_small_frames():
    # two tags, two slots: both alone with prob 1/2, otherwise collide
    assert success_pmf_exact(2, 2).as_dict() == {0: Fraction(1, 2), 2: Fraction(1, 2)}
    # three tags in three slots: 6 permutations give 3 successes, 18 give 1
    p = success_pmf_exact(3, 3)
    assert p.as_dict() == {0: Fraction(3, 27), 1: Fraction(18, 27), 3: Fraction(6, 27)}
    assert p[2] == 0
    assert success_pmf_exact(1, 1).as_dict() == {1: 1}
    assert success_pmf_exact(0, 5).as_dict() == {0: 1}
    assert success_pmf_exact(4, 1).as_dict() == {0: 1}


def test_oracles_agree_with_each_other():
    for n in range(1, 8):
        for r in range(1, 8):
            a = success_pmf_oracle(n, r, method="enumerate")
            b = success_pmf_oracle(n, r, method="dp")
            assert a == b
            if r**n <= 2_000_000:
                assert success_pmf_oracle(n, r, method="brute") == a


def test_oracle_rejects_large_instances():
    with pytest.raises(Exception):
        success_pmf_oracle(13, 13, method="enumerate")
    with pytest.raises(ValueError):
        success_pmf_oracle(3, 3, method="nope")


def test_shift_step_reproduces_closed_form():
    prev = success_pmf_exact(0, 1)
    for k in range(1, 30):
        prev = success_pmf_shifted(k, k + 1, prev)
        assert prev == success_pmf_exact(k, k + 1)


def test_shift_step_off_diagonal():
    for n, r in [(5, 3), (7, 9), (12, 20)]:
        assert success_pmf_shifted(n, r, success_pmf_exact(n - 1, r - 1)) == success_pmf_exact(n, r)


def test_shift_step_rejects_bad_inputs():
    with pytest.raises(DomainError):
        success_pmf_shifted(3, 1, success_pmf_exact(2, 1))
    with pytest.raises(DomainError):
        success_pmf_shifted(3, 4, success_pmf_exact(5, 5))


@pytest.mark.parametrize("n,r", [(-1, 3), (3, 0), (2, -4)])
def test_domain_errors(n, r):
    with pytest.raises(DomainError):
        success_pmf_exact(n, r)


def test_cached_counts_match_closed_form():
    for n, r in [(40, 40), (41, 45), (100, 99), (150, 300)]:
        counts = success_counts(n, r)
        p = success_pmf_exact(n, r)
        assert all(p[s] * r**n == c for s, c in enumerate(counts))


def test_float_mode_is_rounded_exact():
    mode = float_mode(256)
    n, r = 300, 300
    exact = success_pmf(n, r)
    approx = success_pmf(n, r, mode)
    with mode.context():
        worst = max(abs(approx[i] - exact[i]) for i in range(n + 1))
    assert worst < 2.0**-250


def test_mean_and_variance_closed_forms():
    # S_{n,r} = n (1 - 1/r)^(n-1), and a small hand variance
    assert mean_successes(3, 3) == Fraction(4, 3)
    assert mean_successes(4, 4) == 4 * Fraction(27, 64)
    assert var_successes(2, 2) == 1
    assert var_successes(1, 1) == 0
    assert var_successes(3, 3) == Fraction(18 + 54, 27) - Fraction(16, 9)
    m = moments(5, 7)
    assert m.mean_successes + m.mean_backlog == 5
    assert mean_backlog(5, 7) == m.mean_backlog


def test_variance_formula_matches_pmf():
    for n in range(1, 25):
        for r in range(1, 25):
            assert var_successes(n, r) == success_pmf_exact(n, r).variance()


def test_backlog_pmf_is_reflection():
    p = success_pmf(6, 5)
    q = backlog_pmf(6, 5)
    assert all(q[6 - i] == p[i] for i in range(7))
    assert q.mean() == mean_backlog(6, 5)


def test_property_reports_pass():
    for rep in property_reports(60):
        assert rep.all_pass, (rep.name, rep.failures[:3])


def test_variance_properties_fail_at_one_tag():
    reps = {rep.name: rep for rep in property_reports(10)}
    assert reps["A6_normalized_variance"].info["n1_value"] == 0
    assert reps["A7_variance_step"].info["n1_increment"] == 1
    # and 1 exceeds 1/e - 1/e^2, so the rows start at n = 2 on purpose
    assert 1 > math.exp(-1) - math.exp(-2)


def test_throughput_literal_reading_is_false():
    # the mean success count keeps growing with r; per-slot throughput peaks at r = n
    assert mean_successes(3, 4) > mean_successes(3, 3)
    assert mean_successes(3, 4) / 4 < mean_successes(3, 3) / 3


def test_backlog_expansion_residual():
    rep = backlog_expansion_check(200)
    assert rep.all_pass
    assert rep.info["n_e_xi_decreasing"]


def test_pmf_container_rejects_bad_weights():
    with pytest.raises(ValueError):
        ExactPmf.from_dense([Fraction(1, 2), Fraction(1, 3)])
    with pytest.raises(ValueError):
        ExactPmf.from_dense([Fraction(3, 2), Fraction(-1, 2)])
    sub = ExactPmf.from_dense([Fraction(1, 2)], normalized=False)
    assert sub.total() == Fraction(1, 2)


def test_pmf_trimming_and_tail():
    p = ExactPmf.from_dense([0, 0, Fraction(1, 4), 0, Fraction(3, 4), 0])
    assert p.support_min == 2 and p.support_max == 4
    assert p.tail(3) == Fraction(3, 4)
    assert p.mean() == Fraction(7, 2)
    assert p.reversed(4).as_dict() == {0: Fraction(3, 4), 2: Fraction(1, 4)}


# -- properties ---------------------------------------------------------------

nr = st.tuples(st.integers(0, 60), st.integers(1, 60))


@settings(max_examples=60, deadline=None)
@given(nr)
def test_pmf_sums_to_one_with_valid_support(pair):
    n, r = pair
    p = success_pmf(n, r)
    assert p.total() == 1
    assert p.support_min >= 0
    assert p.support_max <= min(n, r)
    assert all(w >= 0 for w in p.weights)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60))
def test_exactly_one_collision_is_impossible(n, r):
    # n-1 successes would leave a single tag colliding with nobody
    assert success_pmf(n, r)[n - 1] == 0


@settings(max_examples=40, deadline=None)
@given(nr)
def test_mean_matches_closed_form(pair):
    n, r = pair
    assert success_pmf(n, r).mean() == mean_successes(n, r)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40))
def test_full_success_probability(n, r):
    # all tags succeed iff they land in distinct slots
    expected = Fraction(math.perm(r, n), r**n) if n <= r else 0
    assert success_pmf(n, r)[n] == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40))
def test_more_slots_never_lower_mean_for_fixed_tags(n):
    means = [mean_successes(n, r) for r in range(1, 2 * n)]
    assert all(a <= b for a, b in zip(means, means[1:]))


def test_exact_mode_object_is_default():
    assert success_pmf(4, 4) == success_pmf(4, 4, EXACT) == success_pmf_exact(4, 4)
