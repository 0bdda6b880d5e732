from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dfaloha.framedist import ExactPmf, backlog_pmf
from dfaloha.numeric import float_mode
from dfaloha.orders import (
    DegenerateSupportError,
    LemmaViolation,
    PreconditionError,
    alpha_dist,
    alpha_monotone_prefix,
    beta_dist,
    check_alpha,
    check_ibar,
    check_shift_beta,
    check_shift_gamma,
    check_shift_nr,
    check_shift_nrp,
    check_theorem3_induction,
    check_theorem6_signs,
    delta_l2c,
    eta2_difference,
    gamma_decay,
    gamma_dist,
    gamma_star_dist,
    ibar,
    j_mean_bound,
    lemma1_weighted_sum,
    likelihood_ratio_check,
    likelihood_ratio_sweep,
    pi_nn_bound,
    shifted_right,
    solve_pi_nn_recurrence,
)
from dfaloha.policy import error_series, ip_length
from tests.oracles import brute_pmf, reference_lengths


def pmf(mapping):
    return ExactPmf.from_dict({k: Fraction(v) for k, v in mapping.items()})


def brute_backlog(n, r):
    p = brute_pmf(n, r)
    return {i: p[n - i] for i in range(n + 1)}


# -- single crossing ----------------------------------------------------------


def test_simple_right_shift():
    a = pmf({0: "1/2", 1: "1/2"})
    b = pmf({1: "1/2", 2: "1/2"})
    w = shifted_right(a, b)
    assert w.verified
    # the tie at 1 belongs to the leading run
    assert w.crossing_index == 1
    assert w.ties == (1,)
    assert w.counterexample is None
    assert not shifted_right(b, a).verified


def test_double_crossing_is_rejected():
    a = pmf({0: "1/2", 1: "0", 2: "1/2"})
    b = pmf({0: "1/4", 1: "1/2", 2: "1/4"})
    w = shifted_right(a, b)
    assert not w.verified
    assert w.counterexample == 2


def test_equal_pmfs_and_ties():
    a = pmf({1: "1/3", 2: "1/3", 3: "1/3"})
    w = shifted_right(a, a)
    assert w.verified
    assert w.crossing_index == 1
    assert w.ties == (1, 2, 3)
    b = pmf({1: "1/3", 2: "1/6", 3: "1/2"})
    w = shifted_right(a, b)
    assert w.verified and w.crossing_index == 2 and w.ties == (1,)


def test_weighted_sum_lemma():
    a = pmf({0: "1/2", 1: "1/2"})
    b = pmf({1: "1/2", 2: "1/2"})
    assert lemma1_weighted_sum(a, b, lambda i: i * i) == Fraction(2)
    assert lemma1_weighted_sum(a, b, [0, 0, 0]) == 0
    with pytest.raises(PreconditionError):
        lemma1_weighted_sum(a, b, lambda i: -i)
    with pytest.raises(PreconditionError):
        lemma1_weighted_sum(b, a, lambda i: i)
    with pytest.raises(TypeError):
        lemma1_weighted_sum(a, b, 3)


def test_float_noise_is_not_a_certificate():
    mode = float_mode(64)
    with mode.context():
        a = backlog_pmf(30, 30, mode)
        w = shifted_right(a, a)
    assert w.verified and not w.uncertain


# -- auxiliary distributions ---------------------------------------------------


def test_gamma_three():
    assert gamma_dist(3).as_dict() == {2: Fraction(4, 5), 3: Fraction(1, 5)}


def test_gamma_star_three_is_sub_probability():
    g = gamma_star_dist(3)
    assert g.as_dict() == {2: Fraction(9, 10)}
    assert g.total() == Fraction(9, 10)
    assert not g.normalized


def test_gamma_matches_oracle():
    for n in range(2, 6):
        pi = brute_backlog(n, n)
        R = sum(i * w for i, w in pi.items())
        expected = {i: pi[i] * i / R for i in range(1, n + 1) if pi[i]}
        assert gamma_dist(n).as_dict() == expected


def test_alpha_three():
    a = alpha_dist(3)
    assert a.weights.as_dict() == {1: Fraction(37, 141), 2: Fraction(37, 141), 3: Fraction(67, 141)}
    assert a.normalizer == Fraction(47, 96)
    assert a.mean == Fraction(104, 47)


def test_alpha_matches_oracle():
    for n in range(2, 6):
        p, q = brute_backlog(n, n), brute_backlog(n + 1, n + 1)
        Rp = sum(i * w for i, w in p.items())
        Rq = sum(i * w for i, w in q.items())
        norm = Rq - Rp - q[n + 1]
        tail = lambda d, i: sum(w for j, w in d.items() if j >= i)
        expected = {i: (tail(q, i) - tail(p, i)) / norm for i in range(1, n + 1)}
        assert alpha_dist(n).weights.as_dict() == {i: w for i, w in expected.items() if w}


def test_beta_four_four():
    beta = beta_dist(4, 4, ip_length(3))
    assert beta.as_dict() == {2: Fraction(32, 49), 3: Fraction(17, 49)}
    pi = brute_backlog(4, 4)
    L = reference_lengths(3, lambda n: n)
    raw = {i: pi[i] * L[i] for i in (2, 3)}
    total = sum(raw.values())
    assert beta.as_dict() == {i: w / total for i, w in raw.items()}


def test_beta_example_pair():
    t = ip_length(4)
    assert shifted_right(beta_dist(5, 6, t), beta_dist(5, 5, t)).verified


def test_beta_degenerate_support():
    t = ip_length(5)
    with pytest.raises(DegenerateSupportError):
        beta_dist(2, 2, t)
    with pytest.raises(DegenerateSupportError):
        beta_dist(3, 1, t)
    with pytest.raises(ValueError):
        beta_dist(9, 9, t)


def test_ibar_values():
    assert ibar(1) == 1
    assert ibar(2) == Fraction(5, 3)
    assert check_ibar(500).all_pass


def test_alpha_prefix():
    for n in (2, 3, 10, 40):
        rep = alpha_monotone_prefix(n)
        assert rep.all_pass
        assert (n, 1) in rep.excluded
    a = alpha_dist(10)
    assert a[1] == a[2]


# -- sweeps -------------------------------------------------------------------


def test_shift_certificates_exact():
    assert check_shift_nr(40).all_pass
    assert check_shift_nrp(40).all_pass
    assert check_shift_gamma(40).all_pass
    assert check_shift_beta(ip_length(25)).all_pass


def test_shift_certificates_float():
    mode = float_mode(256)
    for rep in (check_shift_nr(120, mode=mode), check_shift_nrp(120, mode=mode), check_shift_gamma(120, mode=mode)):
        assert rep.all_pass, rep.failures[:3]


def test_shift_nrp_covers_offsets():
    rep = check_shift_nrp(10)
    keys = {row.key for row in rep.rows}
    assert (2, 2) in keys and (2, 5) in keys and (10, 8) in keys and (10, 13) in keys
    assert (2, 1) not in keys


def test_alpha_sweep_exact():
    rep = check_alpha(80)
    assert rep.all_pass
    assert len(rep.tagged("unit_sum")) == 79


def test_likelihood_ratio():
    rep = likelihood_ratio_sweep(80)
    assert rep.all_pass
    assert (5, 0) in rep.excluded
    assert likelihood_ratio_check(5).all_pass


def test_pi_nn_bound_small():
    rep = pi_nn_bound(80)
    assert rep.all_pass, rep.failures[:3]
    assert rep.tag_pass("anchor") and rep.tag_pass("rec_pi_n")
    assert abs(float(rep.info["pi14"]) - 1.285e-3) < 5e-7
    assert abs(float(rep.info["pi15"]) - 8.106e-4) < 5e-8


def test_pi_nn_recurrence_roots():
    (r1, r2), _ = solve_pi_nn_recurrence(1.285e-3, 8.106e-4)
    assert abs(float(r1) - 0.91596) < 1e-5
    assert abs(float(r2) + 0.41596) < 1e-5


def test_j_mean_bound():
    rep = j_mean_bound((2, 80))
    assert rep.all_pass
    assert rep.n_range == (50, 80)
    assert set(rep.info["below_range"]) == set(range(2, 50))


def test_gamma_decay_lemma_rows_pass():
    rep = gamma_decay(2, (2, 60))
    assert rep.tag_pass("decreasing")
    assert rep.tag_pass("halving")


def test_gamma_literal_envelope_fails():
    rep = gamma_decay(3, (2, 60))
    assert not rep.tag_pass("envelope")
    assert rep.info["envelope_ratio_max_fail"] > Fraction(107, 100)


def test_theorem6_signs():
    t = ip_length(30)
    assert check_theorem6_signs(t, range(5, 30)).all_pass
    assert eta2_difference(10, 2, t) < 0
    assert 0 < delta_l2c(10, 1, t) < 1
    with pytest.raises(ValueError):
        eta2_difference(5, 4, t)


def test_theorem3_induction_side_conditions():
    series = error_series(ip_length(500, mode=float_mode(256)))
    rep = check_theorem3_induction(series)
    assert rep.all_pass, rep.failures[:3]
    assert rep.tag_pass("base_sum") and rep.tag_pass("C_n") and rep.tag_pass("J_above_n0")


def test_alpha_normaliser_guard():
    with pytest.raises(ValueError):
        alpha_dist(1)
    assert issubclass(LemmaViolation, AssertionError)


# -- properties ---------------------------------------------------------------

weights = st.lists(st.integers(0, 20), min_size=2, max_size=8).filter(lambda xs: sum(xs) > 0)


def to_pmf(xs):
    total = sum(xs)
    return ExactPmf.from_dense([Fraction(x, total) for x in xs])


@settings(max_examples=200, deadline=None)
@given(weights, weights, st.lists(st.integers(0, 5), min_size=8, max_size=8))
def test_certificate_implies_weighted_sum(xa, xb, steps):
    a, b = to_pmf(xa), to_pmf(xb)
    assume(shifted_right(a, b).verified)
    f = [sum(steps[: k + 1]) for k in range(8)]
    assert lemma1_weighted_sum(a, b, f) >= 0


@settings(max_examples=200, deadline=None)
@given(weights, weights)
def test_certificate_implies_mean_order(xa, xb):
    a, b = to_pmf(xa), to_pmf(xb)
    if shifted_right(a, b).verified:
        assert b.mean() >= a.mean()


@settings(max_examples=200, deadline=None)
@given(weights, weights)
def test_reflection_swaps_roles(xa, xb):
    a, b = to_pmf(xa), to_pmf(xb)
    n = 10
    if shifted_right(a, b).verified:
        assert shifted_right(b.reversed(n), a.reversed(n)).verified


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 120))
def test_likelihood_ratio_each_level(n):
    assert likelihood_ratio_check(n).all_pass


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 120))
def test_alpha_is_pmf(n):
    a = alpha_dist(n)
    assert a.weights.total() == 1
    assert min(a.weights.weights) >= 0
    assert a.normalizer > 0
