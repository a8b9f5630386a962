"""The six temporal ownership laws, checked over a finite history of chain snapshots.

Snapshot ``t`` of a history is the chain as it stood at tick ``t``. "Always"
laws are checked at every snapshot, "next time" laws at every consecutive
pair. Each checker returns a ``LawReport``; an empty violation list means
the law holds over the whole history.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .ledger import Chain, MintRecord

LAW_NAMES = {
    1: "every existing asset has an owner",
    2: "every existing asset has at most one owner",
    3: "a non-existing asset has no owner",
    4: "the set of existing assets never shrinks",
    5: "the number of ownership records never shrinks",
    6: "each asset's owner list only grows by extension",
}


@dataclass
class LawReport:
    law: int
    violations: list[tuple[int, str]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        return [f"tick={t} law={self.law} {desc}" for t, desc in self.violations]


@dataclass
class _Summary:
    """Everything the laws read from one snapshot, gathered in a single pass."""

    mints: dict[str, tuple[int, ...]] = field(default_factory=dict)
    owners: dict[str, tuple[str, ...]] = field(default_factory=dict)
    # (asset, time) -> agents named by tokens carrying that time
    claims: dict[tuple[str, int], frozenset[str]] = field(default_factory=dict)
    records: set[tuple[str, str, int]] = field(default_factory=set)

    def extend(self, blocks: Iterable) -> None:
        for block in blocks:
            if isinstance(block.payload, MintRecord):
                tok = block.payload.token
                self.mints[tok.asset] = self.mints.get(tok.asset, ()) + (tok.time,)
            if block.has_token and block.token is not None:
                agent, asset, t = block.token.decode()
                self.owners[asset] = self.owners.get(asset, ()) + (agent,)
                self.claims[asset, t] = self.claims.get((asset, t), frozenset()) | {agent}
                self.records.add((agent, asset, t))

    def copy(self) -> "_Summary":
        return _Summary(dict(self.mints), dict(self.owners), dict(self.claims), set(self.records))

    def existing(self, t: int) -> set[str]:
        return {a for a, times in self.mints.items() if min(times) <= t}

    def owner(self, asset: str):
        owners = self.owners.get(asset)
        return owners[-1] if owners else None

    def record_count(self, t: int) -> int:
        return sum(1 for r in self.records if r[2] <= t)


class History:
    """Ordered chain snapshots, index = tick."""

    def __init__(self, snapshots: Iterable[Chain]):
        self.snapshots: tuple[Chain, ...] = tuple(snapshots)

    @classmethod
    def from_heights(cls, chain: Chain, heights: Sequence[int]) -> "History":
        """Snapshots of ``chain`` truncated to ``heights[t]`` blocks at tick ``t``."""
        return cls(chain.prefix(h) for h in heights)

    @classmethod
    def from_chain(cls, chain: Chain) -> "History":
        """One snapshot per tick up to the chain tip, holding blocks with time <= tick."""
        heights = []
        last = chain.last_time
        h = 0
        for t in range(last + 1):
            while h < len(chain) and chain[h].time <= t:
                h += 1
            heights.append(h)
        return cls.from_heights(chain, heights)

    def __len__(self) -> int:
        return len(self.snapshots)

    @cached_property
    def summaries(self) -> list[_Summary]:
        out: list[_Summary] = []
        prev_chain = None
        for snap in self.snapshots:
            blocks = snap.blocks
            if prev_chain is not None and len(blocks) >= len(prev_chain) and \
                    blocks[:len(prev_chain)] == prev_chain:
                summary = out[-1].copy()
                summary.extend(blocks[len(prev_chain):])
            else:
                summary = _Summary()
                summary.extend(blocks)
            out.append(summary)
            prev_chain = blocks
        return out


def _history(h) -> History:
    return h if isinstance(h, History) else History(h)


def check_owner_exists(h) -> LawReport:
    report = LawReport(1)
    for t, s in enumerate(_history(h).summaries):
        for asset in sorted(s.existing(t)):
            if s.owner(asset) is None:
                report.violations.append((t, f"existing asset {asset} has no owner"))
    return report


def check_owner_unique(h) -> LawReport:
    report = LawReport(2)
    for t, s in enumerate(_history(h).summaries):
        for asset in sorted(s.existing(t)):
            if len(s.mints[asset]) > 1:
                report.violations.append((t, f"asset {asset} minted {len(s.mints[asset])} times"))
        for (asset, u), agents in sorted(s.claims.items()):
            if u <= t and len(agents) > 1:
                report.violations.append(
                    (t, f"asset {asset} owned by {sorted(agents)} at time {u}"))
    return report


def check_nonexistent_unowned(h) -> LawReport:
    report = LawReport(3)
    for t, s in enumerate(_history(h).summaries):
        existing = s.existing(t)
        for asset in sorted(s.owners):
            if asset not in existing:
                report.violations.append(
                    (t, f"non-existing asset {asset} owned by {s.owner(asset)}"))
    return report


def check_assets_monotone(h) -> LawReport:
    report = LawReport(4)
    summaries = _history(h).summaries
    for t in range(len(summaries) - 1):
        lost = summaries[t].existing(t) - summaries[t + 1].existing(t + 1)
        if lost:
            report.violations.append((t, f"assets {sorted(lost)} cease to exist at tick {t + 1}"))
    return report


def check_owns_size_monotone(h) -> LawReport:
    report = LawReport(5)
    summaries = _history(h).summaries
    for t in range(len(summaries) - 1):
        now, nxt = summaries[t].record_count(t), summaries[t + 1].record_count(t + 1)
        if nxt < now:
            report.violations.append((t, f"ownership records shrink from {now} to {nxt}"))
    return report


def check_owner_prefix(h) -> LawReport:
    report = LawReport(6)
    summaries = _history(h).summaries
    for t in range(len(summaries) - 1):
        cur, nxt = summaries[t].owners, summaries[t + 1].owners
        for asset in sorted(cur):
            before, after = cur[asset], nxt.get(asset, ())
            if after[:len(before)] != before:
                report.violations.append(
                    (t, f"owners of {asset} {before} are not a prefix of {after}"))
    return report


CHECKERS = {
    1: check_owner_exists,
    2: check_owner_unique,
    3: check_nonexistent_unowned,
    4: check_assets_monotone,
    5: check_owns_size_monotone,
    6: check_owner_prefix,
}


def check_all(h, laws: Iterable[int] = range(1, 7)) -> list[LawReport]:
    hist = _history(h)
    return [CHECKERS[n](hist) for n in laws]
