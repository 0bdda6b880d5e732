"""Acceptance criteria 1-10, each at its stated range and tolerance.

Every test records its outcome; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import time

import gmpy2
import pytest
from gmpy2 import mpfr

from dfaloha.checks import run_checks
from dfaloha.framedist import (
    occupancy_dp_counts,
    success_pmf_exact,
    success_pmf_oracle,
    var_successes,
)
from dfaloha.numeric import float_mode
from dfaloha.orders import backlog_stay, check_ibar, j_mean_bound, pi_nn_bound
from dfaloha.policy import (
    N0,
    N1,
    check_asymptote,
    check_corollary1,
    check_corollary2,
    check_efficiency_monotone,
    check_mode_agreement,
    check_theorem3,
    check_theorem4,
    error_series,
    ip_length,
    optimal_search,
    zeta_4dp,
)
from dfaloha.sim import SimConfig, empirical_success_pmf, simulate_ip

N_TOP = 2000
BITS = 256


@pytest.fixture(scope="module")
def float_table():
    return ip_length(N_TOP, mode=float_mode(BITS))


@pytest.fixture(scope="module")
def series(float_table):
    return error_series(float_table)


def _fails(rep, k=5):
    keys = [row.key for row in rep.failures[:k]]
    return f"{len(rep.failures)} failing, first {keys}" if keys else ""


def test_criterion_01_oracles(criteria):
    t0 = time.perf_counter()
    enum_ok = all(
        success_pmf_exact(n, r) == success_pmf_oracle(n, r, method="enumerate")
        for n in range(1, 11)
        for r in range(1, 11)
    )
    dp_ok = True
    for n in range(1, 41):
        dp = occupancy_dp_counts(n, 40)
        for r in range(1, 41):
            p = success_pmf_exact(n, r)
            dp_ok &= all(p[s] * r**n == c for s, c in enumerate(dp[r]))
    dt = time.perf_counter() - t0
    criteria.record(1, "enumeration n,r<=10", enum_ok)
    criteria.record(1, "occupancy DP n,r<=40", dp_ok)
    criteria.record(1, "runtime<60s", dt < 60, f"{dt:.1f}s")
    assert enum_ok and dp_ok and dt < 60


def test_criterion_02_known_values(criteria):
    L = ip_length(3).L
    exact_ok = L[1] == 1 and L[2] == 4 and L[3] == gmpy2.mpq(51, 8)
    pi14, pi15 = mpfr(backlog_stay(14)), mpfr(backlog_stay(15))
    ok14 = abs(pi14 - mpfr("1.285e-3")) <= mpfr("5e-7")
    ok15 = abs(pi15 - mpfr("8.106e-4")) <= mpfr("5e-8")
    criteria.record(2, "L(1..3)", exact_ok, f"L(3)={L[3]}")
    criteria.record(2, "pi_14(14)", ok14, f"{float(pi14):.6e}")
    criteria.record(2, "pi_15(15)", ok15, f"{float(pi15):.6e}")
    assert exact_ok and ok14 and ok15


@pytest.mark.slow
def test_criterion_03_optimality(criteria):
    t0 = time.perf_counter()
    table = optimal_search(200, scan_factor=3, strict=False)
    dt = time.perf_counter() - t0
    argmin_ok = all(table.argmin_r[n] == n for n in range(2, 201))
    gap_ok = all(table.gap[n] > 0 for n in range(2, 201))
    tail_ok = table.info["tail_closed"]
    min_gap = min(table.gap[2:])
    criteria.record(3, "argmin r=n for 2<=n<=200", argmin_ok and not table.info["violations"])
    criteria.record(3, "positive gap", gap_ok, f"min gap {float(min_gap):.3e}")
    criteria.record(3, "tail r>3n closed", tail_ok)
    criteria.record(3, "runtime<10min", dt < 600, f"{dt:.0f}s")
    assert argmin_ok and gap_ok and tail_ok and dt < 600


def test_criterion_04_efficiency(criteria, float_table):
    rep = check_efficiency_monotone(float_table)
    agree = check_mode_agreement(ip_length(300), ip_length(300, mode=float_mode(BITS)), digits=60)
    criteria.record(4, "n/L decreasing and L<ne, n<=2000", rep.all_pass, _fails(rep))
    criteria.record(4, "exact/float 60 digits, n<=300", agree.all_pass, _fails(agree))
    assert rep.all_pass and agree.all_pass


def test_criterion_05_theorem3(criteria, series):
    rep = check_theorem3(series)
    base = rep.segment_pass("base_window")
    ok = rep.all_pass and base and rep.n_range == (N0, N_TOP)
    criteria.record(5, f"Delta eps bound {N0}..{N_TOP}", ok, f"base window [{N0},{N1}) {'ok' if base else 'failed'}")
    assert ok


def test_criterion_05_corollary1(criteria, series):
    rep = check_corollary1(series)
    criteria.record(5, "eps increasing 2..2000", rep.all_pass, _fails(rep))
    assert rep.all_pass


def test_criterion_05_corollary2(criteria, series):
    rep = check_corollary2(series)
    H = float(rep.info["H"])
    criteria.record(5, "eps > 0.4562 + 1.08 ln(n-1)", rep.all_pass, f"{_fails(rep)}; implied constant {H:.7f}")
    ok = rep.all_pass
    assert ok, f"lower bound fails at {[r.key for r in rep.failures]}"


def test_criterion_06_theorem4(criteria, series):
    rep = check_theorem4(series)
    tight = rep.tightest
    printed = zeta_4dp()
    ok = rep.all_pass and printed == "1.0900" and tight.key == 2 and abs(float(tight.margin) - 0.009) < 5e-4
    criteria.record(6, "upper bound 2..2000", rep.all_pass, _fails(rep))
    criteria.record(6, "zeta prints 1.0900", printed == "1.0900", printed)
    criteria.record(6, "tightest at n=2", tight.key == 2, f"margin {float(tight.margin):.7f}")
    assert ok


@pytest.mark.slow
def test_criterion_07_lemma_suite(criteria):
    report = run_checks("shift_nr,shift_nrp,shift_gamma,shift_beta,alpha,likelihood_ratio", n_max=200)
    for res in report.results:
        rep = res.report
        lo, hi = rep.n_range
        criteria.record(7, f"{rep.name} {lo}..{hi}", rep.all_pass, _fails(rep))
    ibar = check_ibar(500)
    pinn = pi_nn_bound(500)
    jrep = j_mean_bound((2, 500))
    bound_rows = pinn.tagged("bound")
    ub_rows = pinn.tagged("ub_pi_n2")
    criteria.record(7, "ibar brackets 2..500", ibar.all_pass and ibar.n_range == (2, 500), _fails(ibar))
    criteria.record(7, "pi_n(n) bound 17..500", pinn.tag_pass("bound") and bound_rows[0].key[0] == 17 and bound_rows[-1].key[0] == 500)
    criteria.record(7, "ub_pi_n2 49..500", pinn.tag_pass("ub_pi_n2") and ub_rows[0].key[0] == 49 and ub_rows[-1].key[0] == 500)
    criteria.record(7, "J_n bound 50..500", jrep.all_pass and jrep.n_range == (50, 500), _fails(jrep))
    assert report.overall_pass
    assert ibar.all_pass and pinn.all_pass and jrep.all_pass


def test_criterion_08_variance(criteria):
    ok = all(var_successes(n, r) == success_pmf_exact(n, r).variance() for n in range(1, 41) for r in range(1, 41))
    criteria.record(8, "variance formula 1<=n,r<=40", ok)
    assert ok


def test_criterion_09_simulation(criteria):
    t0 = time.perf_counter()
    trials = 10**6
    all_ok = True
    for n in (2, 3, 5, 10, 50, 100):
        out = simulate_ip(SimConfig(n, trials=trials, seed=20240 + n, workers=2))
        exact = float(ip_length(n).L[n])
        z = (out.mean - exact) / out.se
        ok = out.within(exact, k=3)
        all_ok &= ok
        criteria.record(9, f"mean IP n={n}", ok, f"z={z:+.2f}")
    for n, r in ((3, 3), (10, 10)):
        emp = empirical_success_pmf(n, r, trials, seed=7, workers=2)
        ok = emp.tv_distance < 0.005 and emp.impossible_hits == 0
        all_ok &= ok
        criteria.record(9, f"one-frame pmf ({n},{r})", ok, f"TV={emp.tv_distance:.2e}")
    a = simulate_ip(SimConfig(10, trials=trials, seed=99, workers=1))
    b = simulate_ip(SimConfig(10, trials=trials, seed=99, workers=2))
    same = bool((a.slot_counts == b.slot_counts).all())
    dt = time.perf_counter() - t0
    criteria.record(9, "deterministic across workers", same)
    criteria.record(9, "runtime<5min", dt < 300, f"{dt:.0f}s")
    assert all_ok and same and dt < 300


def test_criterion_10_asymptote(criteria, series):
    rep = check_asymptote(series)
    grid = rep.info["grid"]
    ok = rep.all_pass and grid[-1] == N_TOP
    criteria.record(10, "log-grid trend and envelopes", ok, f"ratio at {N_TOP}: {float(rep.info['ratio_last']):.4f}")
    assert ok
