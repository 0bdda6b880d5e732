"""Per-index inequality reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable


@dataclass(frozen=True)
class BoundRow:
    """One evaluated instance of an inequality ``lhs < rhs`` (or ``<=``).

    ``key`` is usually the population size n, or a tuple such as ``(n, i)``
    when an inequality is indexed twice. ``margin`` is ``rhs - lhs`` for
    numeric checks and ``None`` for certificate-style rows.
    """

    key: Any
    lhs: Any
    rhs: Any
    margin: Any
    passed: bool
    note: str = ""


@dataclass
class BoundReport:
    name: str
    rows: list[BoundRow] = field(default_factory=list)
    strict: bool = True
    segments: dict[str, tuple[int, int]] = field(default_factory=dict)
    excluded: list[Any] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_pairs(
        cls,
        name: str,
        items: Iterable[tuple[Any, Any, Any]],
        strict: bool = True,
        **kwargs,
    ) -> BoundReport:
        """Build from ``(key, lhs, rhs)`` triples for the claim ``lhs < rhs``."""
        report = cls(name=name, strict=strict, **kwargs)
        for key, lhs, rhs in items:
            report.add(key, lhs, rhs)
        return report

    def add(self, key, lhs, rhs, note: str = "") -> BoundRow:
        margin = rhs - lhs
        passed = bool(margin > 0) if self.strict else bool(margin >= 0)
        row = BoundRow(key, lhs, rhs, margin, passed, note)
        self.rows.append(row)
        return row

    def add_flag(self, key, passed: bool, lhs=None, rhs=None, note: str = "") -> BoundRow:
        row = BoundRow(key, lhs, rhs, None, bool(passed), note)
        self.rows.append(row)
        return row

    @property
    def all_pass(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def failures(self) -> list[BoundRow]:
        return [row for row in self.rows if not row.passed]

    @property
    def n_range(self) -> tuple[Any, Any] | None:
        if not self.rows:
            return None
        keys = [_first(row.key) for row in self.rows]
        return min(keys), max(keys)

    @property
    def margin_min(self):
        margins = [row.margin for row in self.rows if row.margin is not None]
        return min(margins) if margins else None

    @property
    def tightest(self) -> BoundRow | None:
        rows = [row for row in self.rows if row.margin is not None]
        return min(rows, key=lambda row: row.margin) if rows else None

    def tagged(self, tag) -> list[BoundRow]:
        """Rows whose tuple key contains ``tag``."""
        return [row for row in self.rows if isinstance(row.key, tuple) and tag in row.key]

    def tag_pass(self, tag) -> bool:
        return all(row.passed for row in self.tagged(tag))

    def segment_pass(self, segment: str) -> bool:
        lo, hi = self.segments[segment]
        return all(row.passed for row in self.rows if lo <= _first(row.key) <= hi)

    def __str__(self) -> str:
        # nothing in range (e.g. n_max below the first asserted n)
        status = "SKIP" if not self.rows else "PASS" if self.all_pass else "FAIL"
        rng = self.n_range
        span = f"{rng[0]}..{rng[1]}" if rng else "empty"
        margin = self.margin_min
        tail = "" if margin is None else f" margin_min={float(margin):.6g}"
        return f"{status} {self.name} [{span}] rows={len(self.rows)} failed={len(self.failures)}{tail}"


def _first(key):
    return key[0] if isinstance(key, tuple) else key
