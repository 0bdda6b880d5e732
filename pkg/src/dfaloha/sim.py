"""Monte Carlo simulation of DF-Aloha identification periods.

Trials are grouped into fixed-size blocks. Block ``b`` draws from a Philox
stream keyed by ``(seed, b)``, so results depend only on the configuration
and never on how blocks are spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from scipy import stats

from .framedist import success_pmf
from .policy import FramePolicy

DEFAULT_MAX_SLOTS = 10**6
DEFAULT_BLOCK = 16384
Z99 = NormalDist().inv_cdf(0.995)


class CapExceeded(RuntimeError):
    """A trial would run past ``max_slots`` (or can provably never finish)."""

    def __init__(self, trial: int, slots: int, backlog: int, max_slots: int, stuck: bool = False):
        why = "frame can never produce a success" if stuck else "slot cap reached"
        super().__init__(f"trial {trial}: {why} at backlog {backlog} after {slots} slots (max_slots={max_slots})")
        self.trial = trial
        self.slots = slots
        self.backlog = backlog
        self.stuck = stuck


@dataclass(frozen=True)
class SimConfig:
    n: int
    policy: FramePolicy = field(default_factory=FramePolicy.backlog_equal)
    trials: int = 1
    seed: int = 0
    max_slots: int = DEFAULT_MAX_SLOTS
    workers: int = 1
    block_size: int = DEFAULT_BLOCK
    keep_traces: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_slots < self.n:
            raise ValueError("max_slots must be >= n")
        if self.workers < 1 or self.block_size < 1:
            raise ValueError("workers and block_size must be >= 1")

    @property
    def n_blocks(self) -> int:
        return -(-self.trials // self.block_size)


@dataclass
class SimOutcome:
    config: SimConfig
    slot_counts: np.ndarray
    traces: list | None
    mean: float
    variance: float
    se: float
    half_width: float

    @classmethod
    def from_counts(cls, config: SimConfig, counts: np.ndarray, traces=None) -> SimOutcome:
        mean = float(counts.mean())
        var = float(counts.var(ddof=1)) if counts.size > 1 else 0.0
        se = math.sqrt(var / counts.size)
        return cls(config, counts, traces, mean, var, se, Z99 * se)

    def within(self, value, k: float = 3.0) -> bool:
        """True when ``value`` lies within ``k`` standard errors of the mean."""
        return abs(self.mean - float(value)) <= k * self.se


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _frame_lengths(policy: FramePolicy, backlog: np.ndarray) -> np.ndarray:
    if policy.kind == "backlog-equal":
        return backlog.copy()
    if policy.kind == "fixed":
        return np.full_like(backlog, policy.value)
    if policy.kind == "offset":
        r = backlog + policy.value
        if (r < 1).any():
            raise ValueError(f"policy {policy} prescribes a frame length below 1")
        return r
    return np.array([policy.frame_length(int(b)) for b in backlog], dtype=np.int64)


def _one_frame(rng: np.random.Generator, backlog: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Successes of one frame for each row (backlog tags over r slots)."""
    tags_row = np.repeat(np.arange(backlog.size), backlog)
    slot = rng.integers(0, np.repeat(r, backlog))
    base = np.concatenate(([0], np.cumsum(r)[:-1]))
    occ = np.bincount(base[tags_row] + slot, minlength=int(r.sum()))
    single = (occ == 1).astype(np.int64)
    return np.add.reduceat(single, base) if backlog.size else single[:0]


def _simulate_block(config: SimConfig, block: int):
    start = block * config.block_size
    size = min(config.block_size, config.trials - start)
    rng = block_rng(config.seed, block)
    backlog = np.full(size, config.n, dtype=np.int64)
    slots = np.zeros(size, dtype=np.int64)
    traces = [[] for _ in range(size)] if config.keep_traces else None
    active = np.flatnonzero(backlog > 0)
    while active.size:
        b = backlog[active]
        r = _frame_lengths(config.policy, b)
        stuck = (r == 1) & (b >= 2)
        if stuck.any():
            k = int(np.flatnonzero(stuck)[0])
            idx = int(active[k])
            raise CapExceeded(start + idx, int(slots[idx]), int(b[k]), config.max_slots, stuck=True)
        over = slots[active] + r > config.max_slots
        if over.any():
            k = int(np.flatnonzero(over)[0])
            idx = int(active[k])
            raise CapExceeded(start + idx, int(slots[idx]), int(b[k]), config.max_slots)
        succ = _one_frame(rng, b, r)
        backlog[active] = b - succ
        slots[active] += r
        if traces is not None:
            for j, idx in enumerate(active):
                traces[idx].append((int(r[j]), int(succ[j]), int(backlog[idx])))
        active = active[backlog[active] > 0]
    return slots, traces


def _run_blocks(fn, config: SimConfig, *args):
    blocks = range(config.n_blocks)
    if config.workers == 1 or config.n_blocks == 1:
        return [fn(config, b, *args) for b in blocks]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(fn, config, b, *args) for b in blocks]
        return [f.result() for f in futures]


def simulate_ip(config: SimConfig) -> SimOutcome:
    """Run ``config.trials`` identification periods and aggregate slot counts."""
    parts = _run_blocks(_simulate_block, config)
    counts = np.concatenate([p[0] for p in parts])
    traces = None
    if config.keep_traces:
        traces = [t for p in parts for t in p[1]]
    return SimOutcome.from_counts(config, counts, traces)


@dataclass(frozen=True)
class EfficiencyEstimate:
    value: float
    se: float
    half_width: float
    outcome: SimOutcome


def efficiency_estimate(config: SimConfig) -> EfficiencyEstimate:
    """n / mean slot count; the standard error follows by the delta method."""
    out = simulate_ip(config)
    eta = config.n / out.mean
    se = config.n * out.se / out.mean**2
    return EfficiencyEstimate(eta, se, Z99 * se, out)


# -- one-frame histograms ----------------------------------------------------


@dataclass(frozen=True)
class EmpiricalPmf:
    n: int
    r: int
    trials: int
    counts: np.ndarray
    tv_distance: float
    chi2: float
    dof: int
    p_value: float
    impossible_hits: int = 0

    @property
    def pmf(self) -> np.ndarray:
        return self.counts / self.trials


def _frame_block(config: SimConfig, block: int, r: int) -> np.ndarray:
    start = block * config.block_size
    size = min(config.block_size, config.trials - start)
    rng = block_rng(config.seed, block)
    backlog = np.full(size, config.n, dtype=np.int64)
    succ = _one_frame(rng, backlog, np.full(size, r, dtype=np.int64))
    return np.bincount(succ, minlength=config.n + 1)


def _pooled_chi2(observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Chi-square over adjacent bins merged until each expects >= min_expected."""
    obs_bins, exp_bins = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_bins:
            obs_bins[-1] += o_acc
            exp_bins[-1] += e_acc
        else:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
    obs = np.array(obs_bins)
    exp = np.array(exp_bins)
    dof = max(len(obs) - 1, 0)
    if dof == 0:
        return 0.0, 0, 1.0
    stat = float(((obs - exp) ** 2 / exp).sum())
    return stat, dof, float(stats.chi2.sf(stat, dof))


def empirical_success_pmf(n: int, r: int, trials: int, seed: int = 0, block_size: int = DEFAULT_BLOCK, workers: int = 1) -> EmpiricalPmf:
    """Histogram of one-frame successes against the exact distribution.

    Bins the exact pmf gives zero mass are dropped from the chi-square; any
    hit there is counted in ``impossible_hits`` and forces ``p_value = 0``.
    """
    config = SimConfig(n, FramePolicy.fixed(r), trials, seed, max(n, 1), workers, block_size)
    parts = _run_blocks(_frame_block, config, r)
    counts = np.sum(parts, axis=0)[: n + 1]
    exact = np.array([float(success_pmf(n, r)[s]) for s in range(n + 1)])
    tv = 0.5 * float(np.abs(counts / trials - exact).sum())
    possible = exact > 0
    impossible = int(counts[~possible].sum())
    chi2, dof, p = _pooled_chi2(counts[possible], trials * exact[possible])
    if impossible:
        p = 0.0
    return EmpiricalPmf(n, r, trials, counts, tv, chi2, dof, p, impossible)
