"""Success and backlog distributions of a single Aloha frame.

``n`` tags each pick one of ``r`` slots uniformly at random; a slot holding
exactly one tag is a success. Everything here is a pure function of
``(n, r)``.

Internally the distribution is carried as integer *counts*: ``counts[s]`` is
the number of the ``r**n`` equally likely slot assignments that produce
``s`` successes. The diagonal shift

    counts(n, r)[s + 1] = counts(n - 1, r - 1)[s] * n * r / (s + 1)

is exact in integers, so both arithmetic modes start from exact counts and
only the float mode rounds afterwards.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .numeric import EXACT, Mode
from .report import BoundReport


class DomainError(ValueError):
    """Arguments outside the domain of a formula."""


class NormalizationError(ArithmeticError):
    """A complement probability came out negative beyond tolerance."""


class OracleSizeError(RuntimeError):
    """Requested oracle instance exceeds its size cap."""


ENUMERATION_CAP = 12
DP_CAP = 60


@dataclass(frozen=True)
class ExactPmf:
    """Probability mass function on a contiguous integer support.

    ``weights[k]`` is the mass at ``support_min + k``. Leading and trailing
    zeros are trimmed by the constructors, interior zeros are kept.
    ``normalized=False`` marks a sub-probability vector (no unit-sum check).
    """

    support_min: int
    weights: tuple
    mode: Mode = EXACT
    normalized: bool = True

    def __post_init__(self):
        if not self.weights:
            raise ValueError("empty pmf")
        tol = self.tolerance
        for w in self.weights:
            if w < -tol:
                raise ValueError(f"negative weight {w}")
        if self.normalized:
            total = sum(self.weights)
            if self.mode.exact:
                if total != 1:
                    raise ValueError(f"weights sum to {total}, not 1")
            elif abs(total - 1) > tol:
                raise ValueError(f"weights sum to {total}, off by more than {tol}")

    @property
    def tolerance(self):
        if self.mode.exact:
            return 0
        return mpfr(2) ** (-(self.mode.bits // 2))

    @classmethod
    def from_dense(cls, values, mode: Mode = EXACT, offset: int = 0, normalized: bool = True):
        values = list(values)
        lo = 0
        while lo < len(values) - 1 and values[lo] == 0:
            lo += 1
        hi = len(values)
        while hi > lo + 1 and values[hi - 1] == 0:
            hi -= 1
        return cls(offset + lo, tuple(values[lo:hi]), mode, normalized)

    @classmethod
    def from_dict(cls, mapping, mode: Mode = EXACT, normalized: bool = True):
        lo, hi = min(mapping), max(mapping)
        zero = mode.convert(0)
        dense = [mapping.get(i, zero) for i in range(lo, hi + 1)]
        return cls.from_dense(dense, mode, lo, normalized)

    @property
    def support_max(self) -> int:
        return self.support_min + len(self.weights) - 1

    @property
    def support(self) -> range:
        return range(self.support_min, self.support_max + 1)

    def __getitem__(self, i: int):
        k = i - self.support_min
        if 0 <= k < len(self.weights):
            return self.weights[k]
        return self.mode.convert(0)

    def items(self):
        return zip(self.support, self.weights)

    def as_dict(self) -> dict:
        return {i: w for i, w in self.items() if w != 0}

    def dense(self, lo: int, hi: int) -> list:
        return [self[i] for i in range(lo, hi + 1)]

    def total(self):
        return sum(self.weights)

    def mean(self):
        return sum(i * w for i, w in self.items())

    def variance(self):
        m = self.mean()
        return sum(i * i * w for i, w in self.items()) - m * m

    def tail(self, i: int):
        """P(X >= i)."""
        return sum(w for j, w in self.items() if j >= i)

    def reversed(self, n: int) -> ExactPmf:
        """Distribution of ``n - X``."""
        return ExactPmf(n - self.support_max, tuple(reversed(self.weights)), self.mode, self.normalized)

    def tv_distance(self, other: ExactPmf):
        lo = min(self.support_min, other.support_min)
        hi = max(self.support_max, other.support_max)
        return sum(abs(self[i] - other[i]) for i in range(lo, hi + 1)) / 2


@dataclass(frozen=True)
class MomentSet:
    n: int
    r: int
    mean_successes: object
    mean_backlog: object
    var_successes: object


# -- integer count engine ---------------------------------------------------


def _base_counts(n: int, r: int) -> list:
    """Counts on the diagonal boundary: no tags, or a single-slot frame."""
    if n == 0:
        return [mpz(1)]
    if r != 1:
        raise DomainError("base counts exist only for n = 0 or r = 1")
    counts = [mpz(0)] * (n + 1)
    counts[1 if n == 1 else 0] = mpz(1)
    return counts


def _shift_counts(prev: list, n: int, r: int) -> list:
    nr = n * r
    counts = [mpz(0)] * (n + 1)
    total = mpz(0)
    for s, v in enumerate(prev):
        if v:
            x = v * nr // (s + 1)
            counts[s + 1] = x
            total += x
    counts[0] = mpz(r) ** n - total
    return counts


def _diagonal_start(offset: int) -> tuple[int, int]:
    return (0, offset) if offset >= 1 else (1 - offset, 1)


def iter_diagonal_counts(offset: int, n_max: int, n_min: int = 0) -> Iterator[tuple[int, int, list]]:
    """Yield ``(n, r, counts)`` along ``r = n + offset`` up to ``n_max``."""
    n, r = _diagonal_start(offset)
    counts = _base_counts(n, r)
    while n <= n_max:
        if n >= n_min:
            yield n, r, counts
        n, r = n + 1, r + 1
        counts = _shift_counts(counts, n, r)


_COUNT_CACHE: dict[tuple[int, int], list] = {}
_COUNT_CACHE_N = 320


def success_counts(n: int, r: int) -> list:
    """Integer counts of successes over the ``r**n`` slot assignments."""
    _check_nr(n, r)
    key = (n, r)
    hit = _COUNT_CACHE.get(key)
    if hit is not None:
        return hit
    # walk down the diagonal to the nearest cached point or the boundary
    path = []
    m, q = n, r
    while True:
        if (m, q) in _COUNT_CACHE:
            counts = _COUNT_CACHE[(m, q)]
            break
        if m == 0 or q == 1:
            counts = _base_counts(m, q)
            break
        path.append((m, q))
        m, q = m - 1, q - 1
    if m <= _COUNT_CACHE_N:
        _COUNT_CACHE[(m, q)] = counts
    for m, q in reversed(path):
        counts = _shift_counts(counts, m, q)
        if m <= _COUNT_CACHE_N:
            _COUNT_CACHE[(m, q)] = counts
    return counts


def count_levels(n_max: int, r_top) -> Iterator[tuple[int, dict]]:
    """Yield ``(n, {r: counts})`` for n = 0..n_max.

    Level ``n`` holds every ``r`` in ``1..r_top(n)``; ``r_top`` must satisfy
    ``r_top(n) <= r_top(n - 1) + 1`` so each level derives from the previous.
    """
    prev: dict = {}
    for n in range(n_max + 1):
        level = {}
        for r in range(1, r_top(n) + 1):
            if n == 0 or r == 1:
                level[r] = _base_counts(n, r)
            else:
                level[r] = _shift_counts(prev[r - 1], n, r)
        yield n, level
        prev = level


def counts_to_pmf(counts, n: int, r: int, mode: Mode = EXACT, normalized: bool = True) -> ExactPmf:
    denom = mpz(r) ** n
    if mode.exact:
        return ExactPmf.from_dense([mpq(c, denom) for c in counts], mode)
    with mode.context():
        d = mpfr(denom)
        return ExactPmf.from_dense([mpfr(c) / d for c in counts], mode)


def _check_nr(n: int, r: int) -> None:
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if r < 1:
        raise DomainError(f"frame length must be >= 1, got {r}")


# -- public distribution API ------------------------------------------------


def x_term(n: int, r: int, k: int):
    """Inclusion-exclusion term: expected number of k-sets of singleton slots.

    Equals C(r, k) * n!/(n-k)! * (1/r)**k * ((r-k)/r)**(n-k).
    """
    _check_nr(n, r)
    if k < 0 or k > min(n, r):
        raise DomainError(f"k={k} outside 0..min(n, r)={min(n, r)}")
    return mpq(_x_numerator(n, r, k), mpz(r) ** n)


def _x_numerator(n: int, r: int, k: int):
    return math.comb(r, k) * math.perm(n, k) * mpz(r - k) ** (n - k)


def success_pmf_exact(n: int, r: int) -> ExactPmf:
    """Success distribution from the alternating inclusion-exclusion sum."""
    _check_nr(n, r)
    m = min(n, r)
    xs = [_x_numerator(n, r, k) for k in range(m + 1)]
    numer = []
    for i in range(m + 1):
        acc = mpz(0)
        for k in range(i, m + 1):
            term = math.comb(k, i) * xs[k]
            acc += -term if (k + i) & 1 else term
        numer.append(acc)
    denom = mpz(r) ** n
    return ExactPmf.from_dense([mpq(a, denom) for a in numer])


def success_pmf_shifted(n: int, r: int, prev: ExactPmf) -> ExactPmf:
    """One step of the diagonal shift: pmf(n, r) from pmf(n - 1, r - 1).

    Mass at ``i + 1`` is ``prev[i] * n / (i + 1) * ((r - 1) / r)**(n - 1)``;
    mass at 0 is the complement. In float mode the complement loses about
    ``log2(n / e)`` bits per chained step, so long float chains are unstable;
    :func:`success_pmf` avoids them.
    """
    _check_nr(n, r)
    if n < 1 or r < 2:
        raise DomainError("shift needs n >= 1 and r >= 2")
    if prev.support_min < 0 or prev.support_max > n - 1:
        raise DomainError(f"prev support {prev.support_min}..{prev.support_max} is not that of n-1={n - 1} tags")
    mode = prev.mode
    with mode.context():
        if mode.exact:
            factor = n * mpq(r - 1, r) ** (n - 1)
        else:
            factor = n * (mpfr(r - 1) / r) ** (n - 1)
        out = [mode.convert(0)] * (n + 1)
        for i, w in prev.items():
            out[i + 1] = w * factor / (i + 1)
        p0 = 1 - sum(out[1:])
        if p0 < 0:
            if mode.exact or -p0 > prev.tolerance:
                raise NormalizationError(f"complement mass {p0} < 0 at (n={n}, r={r})")
            p0 = mode.convert(0)
        out[0] = p0
    return ExactPmf.from_dense(out, mode)


@lru_cache(maxsize=4096)
def success_pmf(n: int, r: int, mode: Mode = EXACT) -> ExactPmf:
    """Success distribution in the requested mode (exact counts, then rounded)."""
    return counts_to_pmf(success_counts(n, r), n, r, mode)


def backlog_pmf(n: int, r: int, mode: Mode = EXACT) -> ExactPmf:
    """Distribution of the number of tags left after one frame."""
    return success_pmf(n, r, mode).reversed(n)


# -- independent oracles ----------------------------------------------------


def _enumerate_assignments(n: int, r: int) -> list:
    """Literal enumeration of all r**n assignments (tiny cases only)."""
    counts = [0] * (n + 1)
    for assignment in itertools.product(range(r), repeat=n):
        occ = [0] * r
        for slot in assignment:
            occ[slot] += 1
        counts[occ.count(1)] += 1
    return counts


def _compositions(n: int, parts: int) -> Iterator[tuple]:
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def _enumerate_occupancies(n: int, r: int) -> list:
    """Enumerate occupancy vectors, each weighted by its number of assignments."""
    fact = [math.factorial(k) for k in range(n + 1)]
    counts = [0] * (n + 1)
    for occ in _compositions(n, r):
        ways = fact[n]
        singles = 0
        for c in occ:
            ways //= fact[c]
            singles += c == 1
        counts[singles] += ways
    return counts


def occupancy_dp_counts(n: int, r_max: int) -> dict[int, list]:
    """Slot-by-slot DP over (tags placed, singletons so far).

    Returns ``{r: counts}`` for every frame length ``1..r_max``: after ``j``
    slots, the states that placed all ``n`` tags give the distribution for
    ``r = j``.
    """
    binom = [[math.comb(a, c) for c in range(a + 1)] for a in range(n + 1)]
    dp = {(0, 0): 1}
    out = {}
    for j in range(1, r_max + 1):
        nxt: dict = {}
        for (t, s), ways in dp.items():
            left = n - t
            row = binom[left]
            for c in range(left + 1):
                key = (t + c, s + (c == 1))
                nxt[key] = nxt.get(key, 0) + ways * row[c]
        dp = nxt
        counts = [0] * (n + 1)
        for (t, s), ways in dp.items():
            if t == n:
                counts[s] += ways
        out[j] = counts
    return out


def success_pmf_oracle(n: int, r: int, method: str = "auto") -> ExactPmf:
    """Success pmf by a route that never touches the closed form or the shift.

    ``method`` is ``"enumerate"`` (occupancy-vector enumeration, n, r <= 12),
    ``"dp"`` (slot-sequential DP, n, r <= 60) or ``"auto"``.
    """
    _check_nr(n, r)
    if method == "auto":
        method = "enumerate" if max(n, r) <= ENUMERATION_CAP else "dp"
    if method == "enumerate":
        if max(n, r) > ENUMERATION_CAP:
            raise OracleSizeError(f"enumeration capped at n, r <= {ENUMERATION_CAP}")
        counts = _enumerate_occupancies(n, r) if n else [1]
    elif method == "brute":
        if r**n > 2_000_000:
            raise OracleSizeError("brute force limited to r**n <= 2e6")
        counts = _enumerate_assignments(n, r)
    elif method == "dp":
        if max(n, r) > DP_CAP:
            raise OracleSizeError(f"occupancy DP capped at n, r <= {DP_CAP}")
        counts = occupancy_dp_counts(n, r)[r]
    else:
        raise ValueError(f"unknown oracle method {method!r}")
    denom = r**n
    return ExactPmf.from_dense([mpq(c, denom) for c in counts])


# -- moments ----------------------------------------------------------------


def mean_successes(n: int, r: int):
    """Expected successes: n (1 - 1/r)**(n - 1)."""
    _check_nr(n, r)
    if n == 0:
        return mpq(0)
    return n * mpq(r - 1, r) ** (n - 1)


def mean_backlog(n: int, r: int):
    return n - mean_successes(n, r)


def var_successes(n: int, r: int):
    """Variance of the success count from the pairwise slot covariance."""
    _check_nr(n, r)
    s = mean_successes(n, r)
    if s == 0:
        return mpq(0)
    s_pair = mean_successes(n - 1, r - 1) if n >= 2 else mpq(0)
    return s + s * s_pair - s * s


def moments(n: int, r: int) -> MomentSet:
    s = mean_successes(n, r)
    return MomentSet(n, r, s, n - s, var_successes(n, r))


# -- properties of the moments ----------------------------------------------


def backlog_ratio(n: int):
    """R_n / n under r = n."""
    return mean_backlog(n, n) / n


def backlog_deficit(n: int):
    """(1 - 1/e) - R_n / n, in mpfr."""
    return 1 - gmpy2.exp(-1) - backlog_ratio(n)


def backlog_step_excess(n: int):
    """(R_{n+1} - R_n) - (1 - 1/e), in mpfr; the increment's excess."""
    return mean_backlog(n + 1, n + 1) - mean_backlog(n, n) - (1 - gmpy2.exp(-1))


def backlog_expansion(n):
    """Four-term large-n expansion of R_n / n."""
    ie = gmpy2.exp(-1)
    n = mpfr(n)
    return 1 - ie - ie / (2 * n) - 7 * ie / (24 * n**2) - 3 * ie / (16 * n**3)


def backlog_expansion_check(n_max: int, n_min: int = 2, bound=1, bits: int | None = None) -> BoundReport:
    """Residual of the expansion, scaled by n**4, stays below ``bound``.

    ``info`` also carries the deficit ``n e xi_n`` series endpoints used by
    the upper-bound argument (decreasing toward 1/2).
    """
    mode = Mode(bits) if bits else Mode.parse("float")
    rep = BoundReport("backlog_expansion")
    with mode.context():
        e = gmpy2.exp(1)
        scaled_prev = None
        deficit_monotone = True
        for n in range(n_min, n_max + 1):
            resid = abs(mpfr(backlog_ratio(n)) - backlog_expansion(n))
            rep.add(n, resid * mpfr(n) ** 4, mpfr(bound))
            scaled = n * e * backlog_deficit(n)
            if scaled_prev is not None and not scaled < scaled_prev:
                deficit_monotone = False
            scaled_prev = scaled
        rep.info["n_e_xi_decreasing"] = deficit_monotone
        rep.info["n_e_xi_last"] = scaled_prev
    return rep


def property_reports(n_max: int, r_span: int = 2) -> list[BoundReport]:
    """Moment properties of one frame, checked in exact/high-precision arithmetic.

    Returned reports, in order: per-slot throughput S_{n,r}/r maximized
    uniquely at r = n, S_n/n decreasing and
    above 1/e, S_n - S_{n+1} < 1 - 1/e, Var[S_n]/n decreasing and above
    1/e - 1/e**2, Var increments below 1/e - 1/e**2, R_n/n increasing,
    R_{n+1} - R_n decreasing, R_{n,n} - R_{n,n+1} < 1/e.

    Both variance properties fail at n = 1 (Var[S_1] = 0, Var[S_2] = 1), so
    their rows start at n = 2; the n = 1 values are kept in ``info``.
    """
    with Mode.parse("float").context():
        ie = gmpy2.exp(-1)
        v_lim = ie - ie * ie
        S = [mean_successes(n, n) if n else mpq(0) for n in range(n_max + 2)]
        V = [var_successes(n, n) if n else mpq(0) for n in range(n_max + 2)]
        R = [n - S[n] for n in range(n_max + 2)]

        # per-slot throughput S_{n,r}/r; S_{n,r} itself grows toward n with r
        a2 = BoundReport("A2_throughput_max_at_r_eq_n")
        for n in range(2, n_max + 1):
            best = max(mean_successes(n, r) / r for r in range(1, r_span * n + 1) if r != n)
            a2.add(n, best, S[n] / n)

        a3 = BoundReport("A3_normalized_mean")
        for n in range(1, n_max + 1):
            a3.add((n, "above"), ie, S[n] / n)
            if n < n_max:
                a3.add((n, "decreasing"), S[n + 1] / (n + 1), S[n] / n)

        a4 = BoundReport.from_pairs(
            "A4_mean_step", ((n, S[n] - S[n + 1], 1 - ie) for n in range(1, n_max + 1))
        )

        a6 = BoundReport("A6_normalized_variance")
        for n in range(2, n_max + 1):
            a6.add((n, "above"), v_lim, V[n] / n)
            if n < n_max:
                a6.add((n, "decreasing"), V[n + 1] / (n + 1), V[n] / n)
        a6.info["n1_value"] = V[1]

        a7 = BoundReport.from_pairs(
            "A7_variance_step",
            ((n, V[n + 1] - V[n], v_lim) for n in range(2, n_max + 1)),
            strict=False,
        )
        a7.info["n1_increment"] = V[2] - V[1]

        b1 = BoundReport.from_pairs(
            "B1_backlog_ratio_increasing",
            ((n, R[n] / n, R[n + 1] / (n + 1)) for n in range(1, n_max)),
        )
        b2 = BoundReport.from_pairs(
            "B2_backlog_step_decreasing",
            ((n, R[n + 2] - R[n + 1], R[n + 1] - R[n]) for n in range(1, n_max)),
        )
        b3 = BoundReport.from_pairs(
            "B3_backlog_frame_gap",
            ((n, R[n] - mean_backlog(n, n + 1), ie) for n in range(1, n_max + 1)),
        )
    return [a2, a3, a4, a6, a7, b1, b2, b3]
