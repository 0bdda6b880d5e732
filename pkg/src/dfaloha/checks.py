"""Named verification checks and the aggregated report."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property

from . import __version__
from . import orders, policy
from .framedist import (
    ENUMERATION_CAP,
    backlog_expansion_check,
    occupancy_dp_counts,
    property_reports,
    success_pmf_exact,
    success_pmf_oracle,
    var_successes,
)
from .numeric import EXACT, Mode, float_mode, json_value, zeta_const
from .report import BoundReport

EXACT_CAP = 200
BETA_EXACT_CAP = 60
SEARCH_CAP = 200
ORACLE_DP_CAP = 40
VARIANCE_CAP = 40
EQUIVALENCE_CAP = 60
AGREEMENT_CAP = 300
PI_NN_CAP = 500


class UnknownCheck(KeyError):
    pass


class _Context:
    """Lazily built tables shared by the checks of one run."""

    def __init__(self, n_max: int, mode: Mode):
        self.n_max = n_max
        self.mode = mode

    @cached_property
    def table(self) -> policy.LengthTable:
        return policy.ip_length(self.n_max, mode=self.mode)

    @cached_property
    def series(self) -> policy.ErrorSeries:
        return policy.error_series(self.table)

    @cached_property
    def float_table(self) -> policy.LengthTable:
        if not self.mode.exact:
            return self.table
        return policy.ip_length(self.n_max, mode=float_mode())

    def beta_tables(self):
        """(table, n_hi) pairs: exact up to BETA_EXACT_CAP, float beyond."""
        if not self.mode.exact:
            return [(self.table, self.n_max)]
        lo = min(self.n_max, BETA_EXACT_CAP)
        out = [(policy.ip_length(lo), lo)]
        if self.n_max > lo:
            out.append((self.float_table, self.n_max))
        return out

    @property
    def order_mode(self) -> Mode:
        return self.mode


def _oracle(ctx: _Context):
    rep = BoundReport("pmf_oracle", strict=False)
    top = min(ctx.n_max, ENUMERATION_CAP - 2)
    for n in range(1, top + 1):
        for r in range(1, top + 1):
            a, b = success_pmf_exact(n, r), success_pmf_oracle(n, r, method="enumerate")
            rep.add_flag((n, r, "enumerate"), a == b)
    top = min(ctx.n_max, ORACLE_DP_CAP)
    for n in range(1, top + 1):
        dp = occupancy_dp_counts(n, top)
        for r in range(1, top + 1):
            a = success_pmf_exact(n, r)
            denom = r**n
            ok = all(a[s] * denom == c for s, c in enumerate(dp[r]))
            rep.add_flag((n, r, "dp"), ok)
    return [rep]


def _variance(ctx: _Context):
    rep = BoundReport("variance_formula", strict=False)
    top = min(ctx.n_max, VARIANCE_CAP)
    for n in range(1, top + 1):
        for r in range(1, top + 1):
            v = var_successes(n, r)
            w = success_pmf_exact(n, r).variance()
            rep.add_flag((n, r), v == w, v, w)
    return [rep]


def _theorem6(ctx: _Context):
    top = min(ctx.n_max, SEARCH_CAP)
    if top < 2:
        return [BoundReport("theorem6_optimal_search")]
    table = policy.optimal_search(top, mode=ctx.mode, strict=False)
    rep = BoundReport("theorem6_optimal_search")
    for n in range(2, top + 1):
        rep.add_flag((n, "argmin"), table.argmin_r[n] == n, table.argmin_r[n], n)
        rep.add((n, "gap"), 0, table.gap[n])
    rep.add_flag((top, "tail_closed"), table.info["tail_closed"])
    rep.add_flag((top, "spot_checks"), table.info["spot_pass"])
    rep.info.update(scan_factor=table.info["scan_factor"], spot_factors=table.info["spot_factors"])
    return [rep]


def _theorem6_signs(ctx: _Context):
    merged = BoundReport("theorem6_signs")
    lo = 5
    for table, hi in ctx.beta_tables():
        part = orders.check_theorem6_signs(table, range(lo, min(hi, table.n_max + 1)))
        merged.rows.extend(part.rows)
        lo = hi
    return [merged]


def _shift_beta(ctx: _Context):
    merged = BoundReport("shift_beta")
    lo = 4
    for table, hi in ctx.beta_tables():
        part = orders.check_shift_beta(table, min(hi, table.n_max + 1))
        merged.rows.extend(row for row in part.rows if row.key[0] >= lo)
        lo = hi + 1
    return [merged]


def _order_top(ctx: _Context, cap: int = EXACT_CAP) -> int:
    return min(ctx.n_max, cap) if ctx.mode.exact else ctx.n_max


REGISTRY = {
    "pmf_oracle": _oracle,
    "variance_formula": _variance,
    "moment_properties": lambda c: property_reports(min(c.n_max, 100)),
    "backlog_expansion": lambda c: [backlog_expansion_check(max(c.n_max, 2), bits=c.mode.precision)],
    "recursion_equivalence": lambda c: [policy.check_recursion_equivalence(policy.ip_length(min(c.n_max, EQUIVALENCE_CAP)))],
    "exact_float_agreement": lambda c: [
        policy.check_mode_agreement(
            policy.ip_length(min(c.n_max, AGREEMENT_CAP)),
            policy.ip_length(min(c.n_max, AGREEMENT_CAP), mode=float_mode()),
        )
    ],
    "theorem2": lambda c: [policy.check_efficiency_monotone(c.table)],
    "efficiency_limit": lambda c: [policy.check_efficiency_limit(c.table)],
    "corollary1": lambda c: [policy.check_corollary1(c.series)],
    "theorem3": lambda c: [policy.check_theorem3(c.series)],
    "theorem3_induction": lambda c: [orders.check_theorem3_induction(c.series)],
    "corollary2": lambda c: [policy.check_corollary2(c.series)],
    "theorem4": lambda c: [policy.check_theorem4(c.series)],
    "theorem5": lambda c: [policy.check_asymptote(c.series)],
    "theorem6": _theorem6,
    "theorem6_signs": _theorem6_signs,
    "shift_nr": lambda c: [orders.check_shift_nr(_order_top(c), mode=c.order_mode)],
    "shift_nrp": lambda c: [orders.check_shift_nrp(_order_top(c), mode=c.order_mode)],
    "shift_gamma": lambda c: [orders.check_shift_gamma(_order_top(c), mode=c.order_mode)],
    "shift_beta": _shift_beta,
    "alpha": lambda c: [orders.check_alpha(_order_top(c), mode=c.order_mode)],
    "ibar": lambda c: [orders.check_ibar(max(c.n_max, 2))],
    "alpha_prefix": lambda c: [orders.alpha_monotone_prefix(n) for n in sorted({2, 10, min(c.n_max, 100)})],
    "likelihood_ratio": lambda c: [orders.likelihood_ratio_sweep(_order_top(c), mode=c.order_mode)],
    "pi_nn_bound": lambda c: [orders.pi_nn_bound(max(_order_top(c, PI_NN_CAP), 16), mode=c.order_mode)],
    "j_mean_bound": lambda c: [orders.j_mean_bound((2, max(_order_top(c, PI_NN_CAP), 2)), mode=c.order_mode)],
    "gamma_decay": lambda c: [_gamma_limit(i, c.n_max) for i in (2, 3, 5)],
    "gamma_envelope": lambda c: [_gamma_envelope(i, c.n_max) for i in (2, 3, 5)],
}


def _gamma_limit(i: int, n_max: int) -> BoundReport:
    full = orders.gamma_decay(i, (2, max(n_max, 5 * i)))
    rep = BoundReport(f"gamma_decay_i{i}")
    rep.rows = [row for row in full.rows if "envelope" not in row.key]
    rep.excluded = full.excluded
    rep.info["gamma_last"] = full.info["gamma_last"]
    return rep


def _gamma_envelope(i: int, n_max: int) -> BoundReport:
    full = orders.gamma_decay(i, (2, max(n_max, 5 * i)))
    rep = BoundReport(f"gamma_envelope_i{i}")
    rep.rows = full.tagged("envelope")
    rep.info["envelope_ratio_max_fail"] = full.info["envelope_ratio_max_fail"]
    return rep


def constants() -> dict:
    import gmpy2

    with gmpy2.context(gmpy2.get_context(), precision=128):
        zeta = zeta_const()
    return {
        "lambda": policy.LAMBDA,
        "n0": policy.N0,
        "n1": policy.N1,
        "corollary2_const": policy.COR2_CONST,
        "K": policy.K_UPPER,
        "zeta": json_value(zeta),
        "zeta_4dp": policy.zeta_4dp(),
        "pi_nn_coefficients": list(orders.PI_NN_COEF),
        "pi_nn_bases": list(orders.PI_NN_BASE),
        "pi_nn_recurrence": list(orders.PI_NN_RECURRENCE),
        "gamma_envelope": orders.GAMMA_ENVELOPE,
        "gamma_ratio_cap": json_value(orders.GAMMA_RATIO_CAP),
        "scan_factor": policy.SCAN_FACTOR,
    }


@dataclass
class CheckResult:
    report: BoundReport
    seconds: float

    def summary(self) -> dict:
        rep = self.report
        rng = rep.n_range
        return {
            "name": rep.name,
            "range": list(rng) if rng else None,
            "pass": rep.all_pass,
            "skipped": not rep.rows,
            "rows": len(rep.rows),
            "rows_failed": len(rep.failures),
            "margin_min": json_value(rep.margin_min),
            "timing": round(self.seconds, 3),
            "failures": [
                {"key": _key(row.key), "margin": json_value(row.margin), "note": row.note}
                for row in rep.failures[:20]
            ],
        }


def _key(key):
    return list(key) if isinstance(key, tuple) else key


@dataclass
class VerificationReport:
    config: dict
    results: list[CheckResult] = field(default_factory=list)
    version: str = __version__

    @property
    def overall_pass(self) -> bool:
        return all(r.report.all_pass for r in self.results)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "constants": constants(),
            "checks": [r.summary() for r in self.results],
            "overall_pass": self.overall_pass,
        }

    def lines(self) -> list[str]:
        out = [str(r.report) for r in self.results]
        out.append(f"overall: {'PASS' if self.overall_pass else 'FAIL'}")
        return out


def resolve(selection) -> list[str]:
    if selection in (None, "all") or selection == ["all"]:
        return sorted(REGISTRY)
    if isinstance(selection, str):
        selection = [s.strip() for s in selection.split(",") if s.strip()]
    unknown = [s for s in selection if s not in REGISTRY]
    if unknown:
        raise UnknownCheck(f"unknown checks: {', '.join(unknown)}")
    return sorted(set(selection))


def run_checks(selection="all", n_max: int = 300, mode: Mode = EXACT) -> VerificationReport:
    """Run the selected checks, ordered by report name then key."""
    names = resolve(selection)
    mode = Mode.parse(mode)
    ctx = _Context(n_max, mode)
    report = VerificationReport({"checks": names, "n_max": n_max, "mode": str(mode)})
    for name in names:
        t0 = time.perf_counter()
        produced = REGISTRY[name](ctx)
        dt = time.perf_counter() - t0
        for rep in produced:
            report.results.append(CheckResult(rep, dt / len(produced)))
    report.results.sort(key=lambda r: r.report.name)
    return report
