"""Expected identification-period lengths under frame-length policies.

The identification period (IP) for ``n`` tags is the number of slots spent
until every tag has had a singleton slot. With frame length ``r`` at backlog
``n`` its mean satisfies

    L(n) = (r + sum_{i=1}^{n-1} pi_{n,r}(i) L(i)) / (1 - pi_{n,r}(n))

where ``pi_{n,r}`` is the backlog distribution after one frame. Exact mode
keeps all ``L(i)`` over one shared integer denominator so that a level costs
integer multiply-adds instead of rational normalisations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .framedist import (
    DomainError,
    backlog_pmf,
    count_levels,
    iter_diagonal_counts,
    success_counts,
    success_pmf,
)
from .numeric import EXACT, Mode, zeta_const
from .report import BoundReport

LAMBDA = 1.08
N0 = 221
N1 = 442
COR2_CONST = 0.4562
K_UPPER = 1.19
SCAN_FACTOR = 3


class DivergenceError(ArithmeticError):
    """The policy leaves a level where no frame can ever produce a success."""

    def __init__(self, n: int, r: int):
        super().__init__(f"frame length r={r} at backlog n={n} never yields a success; the IP diverges")
        self.n = n
        self.r = r


class OptimalityViolation(AssertionError):
    def __init__(self, n: int, r: int, value, reference, note: str = ""):
        msg = f"level n={n}: r={r} gives L={float(value):.12g} vs r=n L={float(reference):.12g}"
        super().__init__(msg + (f" ({note})" if note else ""))
        self.n = n
        self.r = r
        self.value = value
        self.reference = reference


@dataclass(frozen=True)
class FramePolicy:
    """Frame length as a function of the current backlog.

    ``kind`` is one of ``backlog-equal``, ``fixed``, ``offset`` or ``table``.
    """

    kind: str = "backlog-equal"
    value: int = 0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("backlog-equal", "fixed", "offset", "table"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "fixed" and self.value < 1:
            raise ValueError("fixed frame length must be >= 1")
        if self.kind == "table":
            for backlog, r in self.table:
                if r < 1:
                    raise ValueError(f"table frame length {r} at backlog {backlog} is < 1")

    @classmethod
    def backlog_equal(cls) -> FramePolicy:
        return cls("backlog-equal")

    @classmethod
    def fixed(cls, r: int) -> FramePolicy:
        return cls("fixed", r)

    @classmethod
    def offset(cls, k: int) -> FramePolicy:
        return cls("offset", k)

    @classmethod
    def from_table(cls, mapping) -> FramePolicy:
        return cls("table", table=tuple(sorted(dict(mapping).items())))

    @classmethod
    def read_table(cls, path) -> FramePolicy:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["backlog", "frame_length"]:
                raise ValueError(f"{path}: header must be 'backlog,frame_length'")
            mapping = {}
            for row in reader:
                if not row or not "".join(row).strip():
                    continue
                mapping[int(row[0])] = int(row[1])
        return cls.from_table(mapping)

    @classmethod
    def parse(cls, text: str) -> FramePolicy:
        if text == "backlog-equal":
            return cls.backlog_equal()
        kind, _, arg = text.partition(":")
        if kind == "fixed":
            return cls.fixed(int(arg))
        if kind == "offset":
            return cls.offset(int(arg))
        if kind == "table":
            return cls.read_table(Path(arg))
        raise ValueError(f"unknown policy {text!r}")

    @property
    def diagonal(self) -> int | None:
        """``r - n`` when constant along the policy, else None."""
        if self.kind == "backlog-equal":
            return 0
        if self.kind == "offset":
            return self.value
        return None

    def frame_length(self, n: int) -> int:
        if self.kind == "backlog-equal":
            r = n
        elif self.kind == "fixed":
            r = self.value
        elif self.kind == "offset":
            r = n + self.value
        else:
            lookup = dict(self.table)
            if n not in lookup:
                raise KeyError(f"policy table has no entry for backlog {n}")
            r = lookup[n]
        if r < 1:
            raise DomainError(f"policy prescribes frame length {r} at backlog {n}")
        return r

    def __str__(self) -> str:
        if self.kind == "backlog-equal":
            return self.kind
        if self.kind == "table":
            return "table"
        return f"{self.kind}:{self.value}"


@dataclass
class LengthTable:
    """Mean IP lengths ``L[0..n_max]`` and the frame lengths that produced them."""

    policy: FramePolicy
    L: tuple
    mode: Mode
    frame_lengths: tuple
    argmin_r: tuple | None = None
    runner_up_r: tuple | None = None
    gap: tuple | None = None
    info: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return len(self.L) - 1

    def efficiency(self, n: int):
        return n / self.L[n]


@dataclass
class ErrorSeries:
    """Gap to the linear asymptote, ``eps[n] = n e - L(n)``, and its increments.

    Both tuples are indexed by n (entry 0 is 0); ``delta[1] = eps[1]``.
    """

    epsilon: tuple
    delta: tuple
    precision: int

    @property
    def n_max(self) -> int:
        return len(self.epsilon) - 1


class _Levels:
    """Sealed L(0..n-1) plus evaluation of candidate frames at level n."""

    def __init__(self, mode: Mode):
        self.mode = mode
        if mode.exact:
            self.D = mpz(1)
            self.A = [mpz(0)]
        else:
            self.L = [mpfr(0)]

    def candidate(self, n: int, r: int, counts):
        """Return a comparable candidate, or None if the frame never succeeds."""
        total = mpz(r) ** n
        den = total - counts[0]
        if den == 0:
            return None
        if self.mode.exact:
            A = self.A
            num = r * total * self.D
            for s in range(1, min(n, len(counts))):
                c = counts[s]
                if c:
                    num += c * A[n - s]
            return num, den
        L = self.L
        acc = mpfr(r * total)
        for s in range(1, min(n, len(counts))):
            c = counts[s]
            if c:
                acc += c * L[n - s]
        return acc / den

    def less(self, a, b) -> bool:
        if self.mode.exact:
            return a[0] * b[1] < b[0] * a[1]
        return a < b

    def value(self, cand):
        if self.mode.exact:
            return mpq(cand[0], self.D * cand[1])
        return cand

    def push(self, cand) -> None:
        if self.mode.exact:
            num, den = cand
            self.D *= den
            self.A = [a * den for a in self.A]
            self.A.append(num)
        else:
            self.L.append(cand)


def _policy_counts(policy: FramePolicy, n_max: int):
    off = policy.diagonal
    if off is not None:
        for n, r, counts in iter_diagonal_counts(off, n_max, n_min=1):
            yield n, r, counts
        return
    for n in range(1, n_max + 1):
        r = policy.frame_length(n)
        yield n, r, success_counts(n, r)


def ip_length(n_max: int, policy: FramePolicy | None = None, mode: Mode = EXACT) -> LengthTable:
    """Mean IP length for every backlog ``0..n_max`` under ``policy``.

    Raises :class:`DivergenceError` at the first level whose frame cannot
    produce a success (e.g. ``r = 1`` with ``n >= 2``).
    """
    policy = policy or FramePolicy.backlog_equal()
    mode = Mode.parse(mode)
    if policy.diagonal is not None and policy.diagonal < 0:
        # frame lengths below 1 would be prescribed at small n
        for n in range(1, min(n_max, 1 - policy.diagonal) + 1):
            policy.frame_length(n)
    with mode.context():
        levels = _Levels(mode)
        L = [mode.convert(0)]
        rs = [0]
        for n, r, counts in _policy_counts(policy, n_max):
            cand = levels.candidate(n, r, counts)
            if cand is None:
                raise DivergenceError(n, r)
            L.append(levels.value(cand))
            levels.push(cand)
            rs.append(r)
    return LengthTable(policy, tuple(L), mode, tuple(rs))


def ip_length_one_level(n: int, r: int, continuation: LengthTable):
    """Mean IP length when the first frame has ``r`` slots and later frames
    follow ``continuation`` (which must cover backlogs below ``n``)."""
    if continuation.n_max < n - 1:
        raise ValueError(f"continuation covers backlogs up to {continuation.n_max}, need {n - 1}")
    mode = continuation.mode
    with mode.context():
        pi = backlog_pmf(n, r, mode)
        stay = pi[n]
        if stay == 1:
            raise DivergenceError(n, r)
        acc = mode.convert(r)
        for i in range(1, n):
            w = pi[i]
            if w:
                acc += w * continuation.L[i]
        return acc / (1 - stay)


def optimal_search(
    n_max: int,
    scan_factor: int = SCAN_FACTOR,
    mode: Mode = EXACT,
    spot_factors: tuple = (4, 8),
    strict: bool = True,
) -> LengthTable:
    """Exhaustive per-level search over frame lengths ``1..scan_factor*n``.

    Each level is evaluated with the already-optimised continuation. The
    minimiser must be ``r = n`` at every level, with a strictly positive gap
    to the runner-up; otherwise :class:`OptimalityViolation` is raised (when
    ``strict``) or recorded in ``info["violations"]``.

    Frame lengths above the scan are covered by a tail bound: any frame of
    length ``r`` costs at least ``r`` slots, so ``r > L_o(n)`` cannot win;
    ``info["tail_closed"]`` records ``L_o(n) < scan_factor*n + 1`` per level.
    Divergent frames (``r = 1`` with ``n >= 2``) are treated as +inf.
    """
    if n_max < 2:
        raise ValueError("optimal_search needs n_max >= 2")
    mode = Mode.parse(mode)
    width = (scan_factor - 1) * n_max
    argmin = [0, 1]
    runner = [None, None]
    gaps = [None, None]
    violations = []
    tail_closed = True
    spot_pass = True
    with mode.context():
        levels = _Levels(mode)
        L = [mode.convert(0)]
        for n, level in count_levels(n_max, lambda k: max(1, width + k)):
            if n == 0:
                continue
            if n == 1:
                cand = levels.candidate(1, 1, level[1])
                L.append(levels.value(cand))
                levels.push(cand)
                continue
            scored = []
            for r in range(1, scan_factor * n + 1):
                cand = levels.candidate(n, r, level[r])
                if cand is not None:
                    scored.append((r, cand))
            best_r, best = scored[0]
            for r, cand in scored[1:]:
                if levels.less(cand, best):
                    best_r, best = r, cand
            second_r, second = None, None
            for r, cand in scored:
                if r == best_r:
                    continue
                if second is None or levels.less(cand, second):
                    second_r, second = r, cand
            best_val = levels.value(best)
            second_val = levels.value(second)
            gap = second_val - best_val
            if best_r != n or not gap > 0:
                note = "tie with runner-up" if not gap > 0 else ""
                err = OptimalityViolation(n, best_r, best_val, levels.value(dict(scored)[n]), note)
                if strict:
                    raise err
                violations.append(err)
            for f in spot_factors:
                r = f * n
                cand = levels.candidate(n, r, _spot_counts(n, r))
                if not levels.less(best, cand):
                    spot_pass = False
                    err = OptimalityViolation(n, r, levels.value(cand), best_val, "spot check")
                    if strict:
                        raise err
                    violations.append(err)
            if not best_val < scan_factor * n + 1:
                tail_closed = False
            levels.push(best)
            L.append(best_val)
            argmin.append(best_r)
            runner.append(second_r)
            gaps.append(gap)
    info = {
        "scan_factor": scan_factor,
        "spot_factors": tuple(spot_factors),
        "tail_closed": tail_closed,
        "spot_pass": spot_pass,
        "violations": violations,
    }
    return LengthTable(
        FramePolicy.backlog_equal(),
        tuple(L),
        mode,
        tuple(range(n_max + 1)),
        argmin_r=tuple(argmin),
        runner_up_r=tuple(runner),
        gap=tuple(gaps),
        info=info,
    )


def _spot_counts(n: int, r: int):
    # walk the diagonal without filling the shared cache
    counts = None
    for _, _, counts in iter_diagonal_counts(r - n, n, n_min=n):
        pass
    return counts


# -- gap to the linear asymptote --------------------------------------------


def error_series(table: LengthTable, bits: int | None = None) -> ErrorSeries:
    """``eps(n) = n e - L(n)`` for a backlog-equal table."""
    if table.policy.kind != "backlog-equal":
        raise ValueError("error_series expects a backlog-equal table")
    prec = bits or table.mode.precision
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        e = gmpy2.exp(1)
        eps = [mpfr(0)] + [n * e - mpfr(table.L[n]) for n in range(1, table.n_max + 1)]
        delta = [mpfr(0)] + [eps[1]] + [eps[n] - eps[n - 1] for n in range(2, table.n_max + 1)]
    return ErrorSeries(tuple(eps), tuple(delta), prec)


def _ctx(series: ErrorSeries):
    return gmpy2.context(gmpy2.get_context(), precision=series.precision)


def check_efficiency_monotone(table: LengthTable) -> BoundReport:
    """n/L(n) strictly decreasing and L(n) < n e."""
    rep = BoundReport("theorem2_efficiency")
    with table.mode.context():
        e = gmpy2.exp(1)
        for n in range(1, table.n_max + 1):
            rep.add((n, "below_ne"), table.L[n], n * e)
            if n < table.n_max:
                rep.add((n, "decreasing"), (n + 1) / table.L[n + 1], n / table.L[n])
    return rep


def _log_grid(lo: int, hi: int, per_decade: int = 6) -> list[int]:
    pts = {lo, hi}
    k = 0
    while True:
        x = int(round(10 ** (k / per_decade)))
        if x > hi:
            break
        if x >= lo:
            pts.add(x)
        k += 1
    return sorted(pts)


def check_efficiency_limit(table: LengthTable, probes=(10, 100, 1000)) -> BoundReport:
    """n/L(n) - 1/e is positive and shrinking across the probes.

    ``info["scale_ratio"]`` compares the excess with ``zeta ln n / (n e^2)``,
    its predicted size when ``eps(n) ~ zeta ln n``.
    """
    probes = [n for n in probes if n <= table.n_max]
    rep = BoundReport("efficiency_limit")
    with table.mode.context():
        ie = gmpy2.exp(-1)
        zeta = zeta_const()
        prev = None
        for n in probes:
            excess = n / table.L[n] - ie
            rep.add((n, "positive"), 0, excess)
            if prev is not None:
                rep.add((n, "shrinking"), excess, prev)
            rep.info.setdefault("excess", {})[n] = excess
            rep.info.setdefault("scale_ratio", {})[n] = excess / (zeta * gmpy2.log(n) * ie * ie / n)
            prev = excess
    return rep


def check_corollary1(series: ErrorSeries, n_min: int = 2) -> BoundReport:
    """eps(n) increasing for n >= 2, i.e. Delta eps(n+1) > 0."""
    return BoundReport.from_pairs(
        "corollary1_eps_increasing",
        ((n, series.epsilon[n - 1], series.epsilon[n]) for n in range(n_min + 1, series.n_max + 1)),
    )


def check_theorem3(series: ErrorSeries, lam=LAMBDA, n0: int = N0, n1: int = N1) -> BoundReport:
    """Delta eps(n) > lam / (n - 2) for n0 <= n <= n_max.

    Segment ``base_window`` is [n0, n1), the range confirmed numerically in
    the induction; ``inductive`` is [n1, n_max].
    """
    rep = BoundReport("theorem3_delta_eps")
    with _ctx(series):
        lam = mpfr(lam)
        for n in range(n0, series.n_max + 1):
            rep.add(n, lam / (n - 2), series.delta[n])
    rep.segments = {"base_window": (n0, n1 - 1), "inductive": (n1, series.n_max)}
    rep.info.update(n0=n0, n1=n1)
    return rep


def check_corollary2(series: ErrorSeries, const=COR2_CONST, lam=LAMBDA, n0: int = N0) -> BoundReport:
    """eps(n) > const + lam ln(n - 1) for n >= n0."""
    rep = BoundReport("corollary2_lower")
    with _ctx(series):
        c, lam_ = mpfr(const), mpfr(lam)
        for n in range(n0, series.n_max + 1):
            rep.add(n, c + lam_ * gmpy2.log(n - 1), series.epsilon[n])
        if series.n_max >= n0:
            rep.info["H"] = series.epsilon[n0] - lam_ * gmpy2.log(n0 - 1)
    rep.info.update(const=const, lam=lam, n0=n0)
    return rep


def zeta_4dp() -> str:
    """zeta truncated (not rounded) to four decimals."""
    with gmpy2.context(gmpy2.get_context(), precision=128):
        z = zeta_const()
        return f"{math.floor(z * 10**4) / 10**4:.4f}"


def upper_envelope(n, K=K_UPPER):
    return zeta_const() * gmpy2.log(n) - mpfr(1) / n + mpfr(K)


def lower_envelope(n, const=COR2_CONST, lam=LAMBDA):
    return mpfr(const) + mpfr(lam) * gmpy2.log(n - 1)


def check_theorem4(series: ErrorSeries, K=K_UPPER) -> BoundReport:
    """eps(n) < zeta ln n - 1/n + K for n >= 2."""
    rep = BoundReport("theorem4_upper")
    with _ctx(series):
        for n in range(2, series.n_max + 1):
            rep.add(n, series.epsilon[n], upper_envelope(n, K))
        rep.info["zeta"] = zeta_const()
    rep.info.update(K=K, zeta_4dp=zeta_4dp())
    tight = rep.tightest
    if tight is not None:
        rep.info["tightest_n"] = tight.key
    return rep


def asymptote_rows(series: ErrorSeries, grid=None) -> list[dict]:
    """Per grid point: eps, zeta ln n, their ratio and both envelopes."""
    grid = grid or _log_grid(2, series.n_max)
    rows = []
    with _ctx(series):
        zeta = zeta_const()
        for n in grid:
            if n < 2 or n > series.n_max:
                continue
            zl = zeta * gmpy2.log(n)
            rows.append(
                {
                    "n": n,
                    "epsilon": series.epsilon[n],
                    "zeta_ln_n": zl,
                    "ratio": series.epsilon[n] / zl,
                    "lower_envelope": lower_envelope(n) if n >= N0 else None,
                    "upper_envelope": upper_envelope(n),
                }
            )
    return rows


def check_asymptote(series: ErrorSeries, grid=None) -> BoundReport:
    """eps(n) / (zeta ln n) approaches 1 monotonically along a log grid,
    bracketed by both envelopes at every grid point."""
    rep = BoundReport("theorem5_asymptote")
    rows = asymptote_rows(series, grid)
    prev = None
    for row in rows:
        n = row["n"]
        rep.add((n, "upper"), row["epsilon"], row["upper_envelope"])
        if row["lower_envelope"] is not None:
            rep.add((n, "lower"), row["lower_envelope"], row["epsilon"])
        dist = abs(row["ratio"] - 1)
        if prev is not None:
            rep.add((n, "approach"), dist, prev)
        prev = dist
    if rows:
        rep.info["ratio_last"] = rows[-1]["ratio"]
        rep.info["grid"] = [row["n"] for row in rows]
    return rep


def check_recursion_equivalence(table: LengthTable) -> BoundReport:
    """The unsolved recursion (L on both sides) holds for the solved table.

    ``L(n) = r + sum_{s=0}^{m} p_{n,r}(s) L(n - s)`` with
    ``m = min(n - 2, r - 1)``; exact tables must satisfy it with equality.
    """
    rep = BoundReport("recursion_equivalence", strict=False)
    with table.mode.context():
        for n in range(2, table.n_max + 1):
            r = table.frame_lengths[n]
            p = success_pmf(n, r, table.mode)
            m = min(n - 2, r - 1)
            rhs = r + sum(p[s] * table.L[n - s] for s in range(0, m + 1))
            diff = abs(rhs - table.L[n])
            tol = 0 if table.mode.exact else table.L[n] * mpfr(2) ** (-(table.mode.bits - 16))
            rep.add(n, diff, tol)
    return rep


def check_mode_agreement(exact: LengthTable, approx: LengthTable, digits: int = 60) -> BoundReport:
    """Relative difference between an exact and a float table below 10**-digits."""
    rep = BoundReport("exact_float_agreement")
    n_max = min(exact.n_max, approx.n_max)
    with approx.mode.context():
        tol = mpfr(10) ** (-digits)
        for n in range(1, n_max + 1):
            rel = abs(mpfr(exact.L[n]) - approx.L[n]) / mpfr(exact.L[n])
            rep.add(n, rel, tol)
    return rep
