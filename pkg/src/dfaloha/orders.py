"""Single-crossing orderings and the auxiliary distributions built on them.

Throughout, ``pi_n`` is the backlog distribution of a frame with ``r = n``
and ``R_n`` its mean. A pmf ``b`` is *shifted right* of ``a`` when
``a(i) >= b(i)`` up to some index ``i0`` and ``a(i) <= b(i)`` after it.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr, mpq

from .framedist import ExactPmf, backlog_pmf, counts_to_pmf, iter_diagonal_counts
from .numeric import EXACT, Mode
from .policy import LAMBDA, N0, N1, ErrorSeries, LengthTable
from .report import BoundReport

PI_NN_COEF = (3.47e-3, 59.79)
PI_NN_BASE = (0.9157, 0.4157)
PI_NN_RECURRENCE = (0.5, 0.381)
PI_NN_ANCHORS = {14: (1.285e-3, 5e-7), 15: (8.106e-4, 5e-8)}
GAMMA_ENVELOPE = 0.4
GAMMA_RATIO_CAP = mpq(5, 4)


class PreconditionError(ValueError):
    pass


class LemmaViolation(AssertionError):
    pass


class DegenerateSupportError(ValueError):
    pass


@dataclass(frozen=True)
class ShiftWitness:
    """Certificate (or counterexample) for ``pmf_b`` shifted right of ``pmf_a``.

    ``crossing_index`` is the largest index of the leading run where
    ``pmf_a >= pmf_b``; equal pmfs use the leftmost support index.
    ``counterexample`` is the first index that breaks the single crossing.
    """

    crossing_index: int
    pmf_a: ExactPmf
    pmf_b: ExactPmf
    verified: bool
    counterexample: int | None = None
    ties: tuple = ()
    uncertain: tuple = ()


def shifted_right(pmf_a: ExactPmf, pmf_b: ExactPmf) -> ShiftWitness:
    """Single-crossing test on the union support (missing indices count as 0).

    With float pmfs, a difference smaller than the working precision can
    resolve is listed in ``uncertain`` and the witness is not verified.
    """
    lo = min(pmf_a.support_min, pmf_b.support_min)
    hi = max(pmf_a.support_max, pmf_b.support_max)
    diff = [(i, pmf_a[i] - pmf_b[i]) for i in range(lo, hi + 1)]
    ties = tuple(i for i, d in diff if d == 0)
    uncertain = ()
    bits = pmf_a.mode.bits or pmf_b.mode.bits
    if bits:
        rel = mpfr(2) ** (16 - bits)
        uncertain = tuple(
            i for i, d in diff if d != 0 and abs(d) <= rel * max(abs(pmf_a[i]), abs(pmf_b[i]))
        )
    first_neg = next((i for i, d in diff if d < 0), None)
    if first_neg is None:
        return ShiftWitness(lo, pmf_a, pmf_b, not uncertain, None, ties, uncertain)
    bad = next((i for i, d in diff if i > first_neg and d > 0), None)
    ok = bad is None and not uncertain
    return ShiftWitness(first_neg - 1, pmf_a, pmf_b, ok, bad, ties, uncertain)


def _as_callable(f) -> Callable[[int], object]:
    if callable(f):
        return f
    if isinstance(f, (Mapping, Sequence)):
        return lambda i: f[i]
    raise TypeError("f must be callable, a mapping or a sequence")


def lemma1_weighted_sum(pmf_a: ExactPmf, pmf_b: ExactPmf, f):
    """``sum_i (pmf_b(i) - pmf_a(i)) f(i)``, which must be >= 0.

    Requires ``f`` non-decreasing on the union support and ``pmf_b``
    shifted right of ``pmf_a``.
    """
    f = _as_callable(f)
    lo = min(pmf_a.support_min, pmf_b.support_min)
    hi = max(pmf_a.support_max, pmf_b.support_max)
    values = [f(i) for i in range(lo, hi + 1)]
    for k in range(1, len(values)):
        if values[k] < values[k - 1]:
            raise PreconditionError(f"f decreases between {lo + k - 1} and {lo + k}")
    witness = shifted_right(pmf_a, pmf_b)
    if not witness.verified:
        raise PreconditionError(f"second pmf is not shifted right (breaks at {witness.counterexample})")
    total = sum((pmf_b[i] - pmf_a[i]) * v for i, v in zip(range(lo, hi + 1), values))
    if total < 0:
        raise LemmaViolation(f"weighted sum {total} is negative")
    return total


# -- sweeps along r = n + offset ---------------------------------------------


def _backlog_sweep(offset: int, n_max: int, n_min: int = 0, mode: Mode = EXACT):
    for n, r, counts in iter_diagonal_counts(offset, n_max, n_min):
        yield n, r, counts_to_pmf(counts, n, r, mode).reversed(n)


# -- gamma -------------------------------------------------------------------


def _gamma_from(pi: ExactPmf, n: int) -> ExactPmf:
    R = pi.mean()
    return ExactPmf.from_dict({i: pi[i] * i / R for i in range(1, n + 1)}, pi.mode)


def gamma_dist(n: int, mode: Mode = EXACT) -> ExactPmf:
    """Size-biased backlog distribution ``pi_n(i) i / R_n`` (support 2..n)."""
    if n < 2:
        raise ValueError("gamma is defined for n >= 2")
    with mode.context():
        return _gamma_from(backlog_pmf(n, n, mode), n)


def gamma_star_dist(n: int, mode: Mode = EXACT) -> ExactPmf:
    """``gamma_n / (1 - pi_n(n))`` restricted to ``i <= n - 1``.

    This is a sub-probability vector: its mass is
    ``(1 - n pi_n(n) / R_n) / (1 - pi_n(n))`` (9/10 at n = 3).
    """
    if n < 3:
        raise ValueError("gamma* is defined for n >= 3")
    with mode.context():
        pi = backlog_pmf(n, n, mode)
        g = _gamma_from(pi, n)
        scale = 1 - pi[n]
        return ExactPmf.from_dict({i: g[i] / scale for i in range(1, n)}, mode, normalized=False)


def gamma_decay(
    i: int,
    n_range: tuple[int, int],
    k_max: int = 6,
    envelope=GAMMA_ENVELOPE,
    ratio_cap=GAMMA_RATIO_CAP,
) -> BoundReport:
    """Decay of ``gamma_n(i)`` and ``pi_n(i)`` for fixed ``i`` as n grows.

    Only levels with ``(n + 1) / (n + 1 - i) <= ratio_cap`` are sampled.
    Row tags:

    * ``decreasing``: gamma_{n+1}(i) < gamma_n(i)
    * ``halving``: pi_{n+k}(i) < pi_n(i) (ratio / 2)**k, the product bound
    * ``envelope``: pi_{n+k}(i) < pi_n(i) envelope**k

    ``info["envelope_ratio_max_fail"]`` is the largest ratio at which the
    ``envelope`` rows fail (None if they never fail).
    """
    if i < 2:
        raise ValueError("i must be >= 2")
    lo, hi = n_range
    rep = BoundReport(f"gamma_decay_i{i}")
    pis = {}
    gammas = {}
    for n, _, pi in _backlog_sweep(0, hi + k_max + 1, max(lo, i)):
        pis[n] = pi[i]
        gammas[n] = pi[i] * i / pi.mean()
    env = mpq(envelope) if not isinstance(envelope, float) else mpq(str(envelope))
    worst = None
    for n in range(max(lo, i), hi + 1):
        ratio = mpq(n + 1, n + 1 - i)
        if ratio > ratio_cap:
            rep.excluded.append(n)
            continue
        rep.add((n, "decreasing"), gammas[n + 1], gammas[n])
        for k in range(1, k_max + 1):
            rep.add((n, k, "halving"), pis[n + k], pis[n] * (ratio / 2) ** k)
            row = rep.add((n, k, "envelope"), pis[n + k], pis[n] * env**k)
            if not row.passed and (worst is None or ratio > worst):
                worst = ratio
    rep.info["gamma_last"] = gammas[hi]
    rep.info["envelope_ratio_max_fail"] = worst
    return rep


# -- alpha and J -------------------------------------------------------------


@dataclass(frozen=True)
class AlphaDist:
    n: int
    weights: ExactPmf
    normalizer: object
    mean: object

    def __getitem__(self, i: int):
        return self.weights[i]


def _alpha_from(n: int, pi_n: ExactPmf, pi_n1: ExactPmf) -> AlphaDist:
    mode = pi_n.mode
    R_n, R_n1 = pi_n.mean(), pi_n1.mean()
    norm = R_n1 - R_n - pi_n1[n + 1]
    if not norm > 0:
        raise LemmaViolation(f"alpha normaliser {norm} is not positive at n={n}")
    # running tails P(X >= i) for i = n+1 down to 1
    t_n1 = pi_n1[n + 1]
    t_n = mode.convert(0)
    vals = [None] * (n + 1)
    for i in range(n, 0, -1):
        t_n1 += pi_n1[i]
        t_n += pi_n[i]
        vals[i] = (t_n1 - t_n) / norm
    weights = ExactPmf.from_dense(vals[1:], mode, offset=1)
    return AlphaDist(n, weights, norm, weights.mean())


def alpha_dist(n: int, mode: Mode = EXACT) -> AlphaDist:
    """``alpha_n(i) = (P(R_{n+1} >= i) - P(R_n >= i)) / (R_{n+1} - R_n - pi_{n+1}(n+1))``.

    Construction validates nonnegativity and unit sum (exactly in exact mode).
    """
    if n < 2:
        raise ValueError("alpha is defined for n >= 2")
    with mode.context():
        return _alpha_from(n, backlog_pmf(n, n, mode), backlog_pmf(n + 1, n + 1, mode))


def alpha_sweep(n_max: int, n_min: int = 2, mode: Mode = EXACT):
    """Yield ``alpha_dist(n)`` for n_min..n_max reusing one diagonal walk."""
    prev = None
    with mode.context():
        for n, _, pi in _backlog_sweep(0, n_max + 1, n_min, mode):
            if prev is not None:
                yield _alpha_from(n - 1, prev, pi)
            prev = pi


def check_alpha(n_max: int, n_min: int = 2, mode: Mode = EXACT) -> BoundReport:
    """Unit sum, nonnegativity, positive normaliser and pi_{n+1}(n+1) < 1 - 1/e."""
    rep = BoundReport("alpha_pmf", strict=False)
    with mode.context():
        cap = 1 - gmpy2.exp(-1)
        for a in alpha_sweep(n_max, n_min, mode):
            n = a.n
            w = a.weights
            total = w.total()
            if mode.exact:
                rep.add_flag((n, "unit_sum"), total == 1, total, 1)
            else:
                rep.add((n, "unit_sum"), abs(total - 1), w.tolerance)
            rep.add((n, "nonnegative"), 0, min(w.weights))
            rep.add_flag((n, "normalizer"), a.normalizer > 0, 0, a.normalizer)
            stay = backlog_stay(n + 1, mode)
            rep.add_flag((n, "stay_below"), stay < cap, stay, cap)
    return rep


def backlog_stay(n: int, mode: Mode = EXACT):
    """pi_n(n): probability that a frame with r = n resolves nothing."""
    return backlog_pmf(n, n, mode)[n]


def ibar(n: int):
    """Crossing point ``(n + 1)(1 - (n / (n + 1))**n)`` as an exact rational."""
    return (n + 1) * (1 - mpq(n, n + 1) ** n)


def check_ibar(n_max: int, n_min: int = 2) -> BoundReport:
    """(n + 1)/2 < ibar(n) < (n + 1)(1 - 1/e)."""
    rep = BoundReport("ibar_brackets")
    with gmpy2.context(gmpy2.get_context(), precision=Mode.parse("float").precision):
        top = 1 - gmpy2.exp(-1)
        for n in range(n_min, n_max + 1):
            x = ibar(n)
            rep.add((n, "low"), mpq(n + 1, 2), x)
            rep.add((n, "high"), mpfr(x), (n + 1) * top)
        rep.info["ibar_ratio_last"] = mpfr(ibar(n_max)) / (n_max + 1)
    return rep


def alpha_monotone_prefix(n: int, alpha: AlphaDist | None = None) -> BoundReport:
    """alpha_n strictly increasing on integer steps below ibar(n), plus the brackets.

    ``alpha_n(1) = alpha_n(2)`` always (a frame never leaves exactly one tag
    out of the full backlog, so both tails agree), so the step from 1 to 2
    is excluded and listed in ``excluded``.
    """
    alpha = alpha or alpha_dist(n)
    rep = check_ibar(n, n)
    rep.name = "alpha_monotone_prefix"
    top = ibar(n)
    rep.excluded.append((n, 1))
    i = 2
    while i < top and i + 1 <= n:
        rep.add((n, i, "increasing"), alpha[i], alpha[i + 1])
        i += 1
    rep.info["ibar"] = top
    return rep


def j_mean_bound(n_range: tuple[int, int], mode: Mode = EXACT, n_assert: int = 50) -> BoundReport:
    """J_n < (n + 1)(1 - 1/e) + 1/e for n >= n_assert.

    Smaller n are evaluated but only recorded in ``info["below_range"]``.
    """
    lo, hi = n_range
    rep = BoundReport("j_mean_bound")
    below = {}
    with mode.context():
        ie = gmpy2.exp(-1)
        for a in alpha_sweep(hi, max(2, lo), mode):
            n = a.n
            bound = (n + 1) * (1 - ie) + ie
            if n >= n_assert:
                rep.add(n, a.mean, bound)
            else:
                below[n] = bound - a.mean
            rep.info["J_over_n1_last"] = a.mean / (n + 1)
    rep.info["below_range"] = below
    return rep


# -- likelihood ratio --------------------------------------------------------


def likelihood_ratio_check(
    n: int, pi_n: ExactPmf | None = None, pi_n1: ExactPmf | None = None, mode: Mode = EXACT
) -> BoundReport:
    """pi_{n+1}(i+1)/pi_{n+1}(i) > pi_n(i+1)/pi_n(i) over defined ratios.

    Cross-multiplied to avoid division. Indices with a zero denominator are
    excluded, and so is ``i = 0``, where both numerators vanish and the
    ratios are both 0. With float pmfs a row whose margin is below the
    rounding level fails as unresolved.
    """
    pi_n = pi_n or backlog_pmf(n, n, mode)
    pi_n1 = pi_n1 or backlog_pmf(n + 1, n + 1, mode)
    bits = pi_n.mode.bits
    rel = mpfr(2) ** (16 - bits) if bits else None
    rep = BoundReport("likelihood_ratio")
    for i in range(0, n + 1):
        if pi_n[i] == 0 or pi_n1[i] == 0:
            rep.excluded.append((n, i))
            continue
        if pi_n[i + 1] == 0 and pi_n1[i + 1] == 0:
            rep.excluded.append((n, i))
            continue
        lhs, rhs = pi_n[i + 1] * pi_n1[i], pi_n1[i + 1] * pi_n[i]
        if rel is not None and abs(rhs - lhs) <= rel * max(abs(lhs), abs(rhs)):
            rep.add_flag((n, i), False, lhs, rhs, "unresolved at working precision")
        else:
            rep.add((n, i), lhs, rhs)
    return rep


def likelihood_ratio_sweep(n_max: int, n_min: int = 2, mode: Mode = EXACT) -> BoundReport:
    rep = BoundReport("likelihood_ratio")
    prev = None
    with mode.context():
        for n, _, pi in _backlog_sweep(0, n_max + 1, n_min, mode):
            if prev is not None:
                part = likelihood_ratio_check(n - 1, prev, pi)
                rep.rows.extend(part.rows)
                rep.excluded.extend(part.excluded)
            prev = pi
    return rep


# -- pi_n(n) bound ----------------------------------------------------------


def pi_nn_envelope(n):
    (c1, c2), (b1, b2) = PI_NN_COEF, PI_NN_BASE
    return mpfr(c1) * mpfr(b1) ** n + mpfr(c2) * mpfr(b2) ** n


def solve_pi_nn_recurrence(x14, x15, a=PI_NN_RECURRENCE[0], b=PI_NN_RECURRENCE[1]):
    """Closed form of ``x_{n+1} = a x_n + b x_{n-1}`` from x_14 and x_15.

    Returns ``(roots, coefficients)`` with ``x_n = c1 rho1**n + c2 rho2**n``.
    """
    a, b = mpfr(a), mpfr(b)
    disc = gmpy2.sqrt(a * a + 4 * b)
    rho1, rho2 = (a + disc) / 2, (a - disc) / 2
    # c1 rho1^14 + c2 rho2^14 = x14 ; c1 rho1^15 + c2 rho2^15 = x15
    det = rho1**14 * rho2**15 - rho2**14 * rho1**15
    c1 = (mpfr(x14) * rho2**15 - mpfr(x15) * rho2**14) / det
    c2 = (rho1**14 * mpfr(x15) - rho1**15 * mpfr(x14)) / det
    return (rho1, rho2), (c1, c2)


def pi_nn_bound(n_max: int = 500, mode: Mode = EXACT) -> BoundReport:
    """pi_n(n) against the two-exponential envelope and related checks.

    Row tags: ``anchor`` (printed initial conditions at n = 14, 15),
    ``bound`` (16 < n <= n_max), ``ub_pi_n2``
    (R_{n+1} - R_n - (1 - 1/e) > pi_{n+1}(n+1) for 49 <= n <= n_max) and
    ``rec_pi_n`` (pi_n(n-1) = pi_{n-1}(n-1) S_n, exact).
    """
    rep = BoundReport("pi_nn_bound")
    prec = mode.precision
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        ie = gmpy2.exp(-1)
        stay = {}
        means = {}
        prev = None
        for n, _, pi in _backlog_sweep(0, n_max + 1, 1, mode):
            stay[n] = pi[n]
            means[n] = pi.mean()
            if prev is not None and n >= 2:
                s_n = n - means[n]
                lhs, rhs = pi[n - 1], prev[n - 1] * s_n
                if mode.exact:
                    rep.add_flag((n, "rec_pi_n"), lhs == rhs, lhs, rhs)
                else:
                    rep.add((n, "rec_pi_n"), abs(lhs - rhs), abs(lhs) * mpfr(2) ** (16 - prec))
            prev = pi
        for n, (value, tol) in PI_NN_ANCHORS.items():
            rep.add((n, "anchor"), abs(mpfr(stay[n]) - mpfr(value)), mpfr(tol))
        for n in range(17, n_max + 1):
            rep.add((n, "bound"), stay[n], pi_nn_envelope(n))
        for n in range(49, n_max + 1):
            rep.add((n, "ub_pi_n2"), stay[n + 1], means[n + 1] - means[n] - (1 - ie))
        roots, coefs = solve_pi_nn_recurrence(stay[14], stay[15])
        rep.info.update(
            roots=roots,
            coefficients=coefs,
            envelope_coefficients=PI_NN_COEF,
            envelope_bases=PI_NN_BASE,
            pi14=stay[14],
            pi15=stay[15],
        )
    return rep


# -- beta and the optimality sign checks -------------------------------------


def beta_dist(n: int, r: int, lengths: LengthTable) -> ExactPmf:
    """Length-weighted backlog distribution on 2..n-1."""
    if lengths.n_max < n - 1:
        raise ValueError(f"lengths cover backlogs up to {lengths.n_max}, need {n - 1}")
    mode = lengths.mode
    with mode.context():
        pi = backlog_pmf(n, r, mode)
        raw = {i: pi[i] * lengths.L[i] for i in range(2, n)}
        total = sum(raw.values()) if raw else 0
        if not raw or total == 0:
            raise DegenerateSupportError(f"pi_{{{n},{r}}} has no mass on 2..{n - 1}")
        return ExactPmf.from_dict({i: w / total for i, w in raw.items()}, mode)


def _frame_offsets(n: int, lo: int = -2, hi: int = 3) -> list[int]:
    return [r for r in range(n + lo, n + hi + 1) if r >= 2]


def _certificates(name: str, pairs, mode: Mode = EXACT) -> BoundReport:
    rep = BoundReport(name)
    with mode.context():
        _collect(rep, pairs)
    return rep


def _collect(rep: BoundReport, pairs) -> None:
    for key, a, b in pairs:
        w = shifted_right(a, b)
        note = ""
        if w.counterexample is not None:
            note = f"breaks at {w.counterexample}"
        elif w.uncertain:
            note = f"unresolved at {w.uncertain}"
        rep.add_flag(key, w.verified, w.crossing_index, None, note)


def check_shift_nr(n_max: int = 200, offsets=(-1, 1, 2, 5), mode: Mode = EXACT) -> BoundReport:
    """pi_{n+1,r+1} shifted right of pi_{n,r}: every n = r and sampled r = n + offset."""

    def pairs():
        for off in (0, *offsets):
            prev = None
            for n, r, pi in _backlog_sweep(off, n_max + 1, 2, mode):
                if prev is not None and r - 1 >= 2:
                    yield (n - 1, r - 1), prev, pi
                prev = pi

    return _certificates("shift_nr", pairs(), mode)


def check_shift_nrp(n_max: int = 200, lo: int = -2, hi: int = 3, mode: Mode = EXACT) -> BoundReport:
    """pi_{n,r} shifted right of pi_{n,r+1} for r in n+lo..n+hi, r >= 2."""
    walks = {off: iter(_backlog_sweep(off, n_max, 2, mode)) for off in range(lo, hi + 2)}
    current = {off: next(w, None) for off, w in walks.items()}

    def pairs():
        for n in range(2, n_max + 1):
            row = {}
            for off, item in current.items():
                while item is not None and item[0] < n:
                    item = next(walks[off], None)
                current[off] = item
                if item is not None and item[0] == n:
                    row[item[1]] = item[2]
            for r in _frame_offsets(n, lo, hi):
                if r in row and r + 1 in row:
                    yield (n, r), row[r + 1], row[r]

    return _certificates("shift_nrp", pairs(), mode)


def check_shift_gamma(n_max: int = 200, n_min: int = 2, mode: Mode = EXACT) -> BoundReport:
    """gamma*_{n+1} shifted right of gamma_n."""

    def pairs():
        prev = None
        for n, _, pi in _backlog_sweep(0, n_max + 1, n_min, mode):
            if prev is not None:
                g = _gamma_from(prev, n - 1)
                g_star = ExactPmf.from_dict(
                    {i: w / (1 - pi[n]) for i, w in _gamma_from(pi, n).items() if i < n},
                    mode,
                    normalized=False,
                )
                yield n - 1, g, g_star
            prev = pi

    return _certificates("shift_gamma", pairs(), mode)


def check_shift_beta(lengths: LengthTable, n_max: int | None = None, lo: int = -2, hi: int = 3) -> BoundReport:
    """beta_{n,r} shifted right of beta_{n,r+1} for r in n+lo..n+hi, n >= 4."""
    n_max = n_max or lengths.n_max + 1

    def pairs():
        for n in range(4, n_max + 1):
            for r in _frame_offsets(n, lo, hi):
                yield (n, r), beta_dist(n, r + 1, lengths), beta_dist(n, r, lengths)

    return _certificates("shift_beta", pairs(), lengths.mode)


def eta2_difference(n: int, k: int, lengths: LengthTable):
    """sum_i (beta_{n,n-k}(i) - beta_{n,n}(i)) eta(i), eta(i) = i / L(i)."""
    if not 1 <= k <= n - 2:
        raise ValueError("k must be in 1..n-2")
    b_short = beta_dist(n, n - k, lengths)
    b_eq = beta_dist(n, n, lengths)
    return sum((b_short[i] - b_eq[i]) * i / lengths.L[i] for i in range(2, n))


def delta_l2c(n: int, k: int, lengths: LengthTable):
    """sum_{i=2}^{n-1} (pi_{n,n}(i) - pi_{n,n+k}(i)) L(i)."""
    mode = lengths.mode
    a = backlog_pmf(n, n, mode)
    c = backlog_pmf(n, n + k, mode)
    return sum((a[i] - c[i]) * lengths.L[i] for i in range(2, n))


def check_theorem6_signs(lengths: LengthTable, n_values, k_values=(1, 2, 3)) -> BoundReport:
    """Shorter frames lower eta_2; longer frames save fewer than k slots later.

    Both comparisons vanish for n <= 4, where the weights live on one index.
    """
    rep = BoundReport("theorem6_signs")
    with lengths.mode.context():
        for n in n_values:
            for k in k_values:
                if k <= n - 2:
                    rep.add((n, k, "eta2"), eta2_difference(n, k, lengths), 0)
                rep.add((n, k, "dl2c"), delta_l2c(n, k, lengths), k)
    return rep


def convex_g(x, lam=LAMBDA, n0: int = N0):
    """lam / (x - 2) from n0 on, continued linearly below n0 so g stays convex."""
    lam = mpfr(lam)
    if x >= n0:
        return lam / (x - 2)
    return lam / mpfr(n0 - 2) ** 2 * (2 * n0 - 2 - x)


def check_theorem3_induction(
    series: ErrorSeries, lam=LAMBDA, n0: int = N0, n1: int = N1, n_max: int | None = None
) -> BoundReport:
    """Side conditions used when extending the Delta-eps bound past n1.

    Tags:

    * ``base_sum``: sum_{i=1}^{n1-1} (Delta eps(i) - g(i)) > 0, with g from
      :func:`convex_g`
    * ``C_n``: sum_{i=1}^{n1-1} (Delta eps(i) - g(i)) alpha_n(i) > 0 and
      ``J_above_n0``: J_n > n0, both for n1 <= n <= n_max
    * ``closing``: z_{n+1} e / (1 - pi_{n+1}(n+1)) <
      lam/(n - 1/(1 - 1/e)) - lam/(n - 1) for 2 <= n < n_max
    """
    n_max = min(n_max or series.n_max, series.n_max)
    rep = BoundReport("theorem3_induction")
    mode = Mode(series.precision)
    with mode.context():
        lam_ = mpfr(lam)
        e = gmpy2.exp(1)
        c = 1 / (1 - 1 / e)
        have_base = series.n_max >= n1 - 1
        if have_base:
            excess = [None] + [series.delta[i] - convex_g(i, lam, n0) for i in range(1, n1)]
            rep.add((n0, "base_sum"), 0, sum(excess[1:]))
        stay = {}
        means = {}
        for n, _, pi in _backlog_sweep(0, n_max + 1, 2, mode):
            stay[n] = pi[n]
            means[n] = pi.mean()
        for n in range(2, n_max):
            z = means[n + 1] - means[n] - (1 - 1 / e)
            rep.add((n, "closing"), z * e / (1 - stay[n + 1]), lam_ / (n - c) - lam_ / (n - 1))
        if have_base and n_max >= n1:
            for a in alpha_sweep(n_max, n1, mode):
                cn = sum(excess[i] * a[i] for i in range(1, n1))
                rep.add((a.n, "C_n"), 0, cn)
                rep.add((a.n, "J_above_n0"), mpfr(n0), a.mean)
    return rep
