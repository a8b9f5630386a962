"""Depth-2 syntactic knowledge engine.

Each agent holds a set of facts it knows, stored already closed under

* veracity: knowing ``K_y g`` means knowing ``g``;
* positive introspection: knowing an atom ``g`` means knowing ``K_x g``.

Facts never exceed depth 2 (``K_x K_y atom``). A statement that would be
deeper is weakened by dropping its innermost knowledge operator, which is
sound because ``K_y g`` implies ``g``.

Every stored fact is stamped with the clock value at which it was learnt so
that "did x know f by time t" can be answered after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Union

MAX_DEPTH = 2


class EpistemicError(Exception):
    pass


class DepthExceeded(EpistemicError):
    pass


class NotTrue(EpistemicError):
    """Observation of an atom that is false in the world."""


class SenderIgnorant(EpistemicError):
    """An honest sender can only send what it knows."""


class PreconditionFailed(EpistemicError):
    pass


@dataclass(frozen=True)
class Atom:
    kind: str
    payload: str = ""
    depth = 0

    def __str__(self) -> str:
        return f"{self.kind}({self.payload})" if self.payload else self.kind


@dataclass(frozen=True)
class Knows:
    agent: str
    fact: "Fact"
    depth: int = field(init=False, compare=False, repr=False)
    _hash: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        depth = 1 + self.fact.depth
        if depth > MAX_DEPTH:
            raise DepthExceeded(f"K_{self.agent} over a depth-{self.fact.depth} fact")
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "_hash", hash((self.agent, self.fact)))

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return f"K[{self.agent}]({self.fact})"


Fact = Union[Atom, Knows]


@lru_cache(maxsize=1 << 16)
def K(agent: str, fact: Fact) -> Knows:
    """Interned ``Knows``; the engine builds the same statements over and over."""
    return Knows(agent, fact)


def weaken(f: Fact, limit: int) -> Fact:
    """Drop innermost knowledge operators until ``f`` has depth <= limit."""
    if f.depth <= limit:
        return f
    if limit == 0:
        return weaken(f.fact, 0)
    return K(f.agent, weaken(f.fact, limit - 1))


def base_atom(f: Fact) -> Atom:
    while isinstance(f, Knows):
        f = f.fact
    return f


class KnowledgeBase:
    """World truths plus what each agent knows.

    The module-level functions treat a knowledge base as a value that events
    update; they mutate ``kb`` in place and return it. Use ``copy`` to keep
    an earlier state.
    """

    def __init__(self):
        self.world: set[Atom] = set()
        self.facts: dict[str, dict[Fact, int]] = {}
        self.clock = 0

    def copy(self) -> "KnowledgeBase":
        kb = KnowledgeBase()
        kb.world = set(self.world)
        kb.facts = {x: dict(fs) for x, fs in self.facts.items()}
        kb.clock = self.clock
        return kb

    def agents(self) -> list[str]:
        return sorted(self.facts)

    def _learn(self, x: str, f: Fact) -> None:
        known = self.facts.setdefault(x, {})
        if f in known:
            return
        known[f] = self.clock
        if isinstance(f, Knows):
            self._learn(x, f.fact)
        elif f.depth == 0:
            self._learn(x, K(x, f))

    def since(self, x: str, f: Fact) -> Optional[int]:
        """Clock value at which ``x`` first knew ``f``, or None."""
        return self.facts.get(x, {}).get(f)

    def true(self, f: Fact) -> bool:
        if isinstance(f, Atom):
            return f in self.world
        return self.since(f.agent, f.fact) is not None

    def dump(self) -> str:
        """Stable per-agent listing of known facts."""
        lines = ["world:"] + [f"  {a}" for a in sorted(map(str, self.world))]
        for x in self.agents():
            lines.append(f"{x}:")
            lines += [f"  {f}" for f in sorted(map(str, self.facts[x]))]
        return "\n".join(lines)


def _check_query(f: Fact) -> None:
    if f.depth + 1 > MAX_DEPTH:
        raise DepthExceeded(f"K_x over {f} exceeds depth {MAX_DEPTH}")


def assert_world(kb: KnowledgeBase, atom: Atom) -> KnowledgeBase:
    kb.world.add(atom)
    return kb


def observe(kb: KnowledgeBase, x: str, atom: Atom) -> KnowledgeBase:
    if atom not in kb.world:
        raise NotTrue(f"{x} cannot observe false {atom}")
    kb._learn(x, atom)
    return kb


def knows(kb: KnowledgeBase, x: str, f: Fact, at: Optional[int] = None) -> bool:
    """Whether ``x`` knows ``f`` (by clock ``at`` when given)."""
    _check_query(f)
    since = kb.since(x, f)
    return since is not None and (at is None or since <= at)


def communicate(kb: KnowledgeBase, sender: str, receivers: Iterable[str], f: Fact,
                acknowledged: bool = True) -> KnowledgeBase:
    """Authenticated message ``f`` from ``sender`` to each receiver.

    Each receiver learns ``f`` and that the sender knows it. When the channel
    is ``acknowledged`` (reliable, synchronous) the sender also learns that
    each receiver now knows ``f``.
    """
    _check_query(f)
    if kb.since(sender, f) is None:
        raise SenderIgnorant(f"{sender} does not know {f}")
    # K_r K_s f weakened to depth 2 is K_r K_s atom(f), likewise for the ack
    atom = base_atom(f)
    for r in sorted(set(receivers)):
        kb._learn(r, f)
        kb._learn(r, K(sender, atom))
        if acknowledged and r != sender:
            kb._learn(sender, K(r, atom))
    return kb


def infer(kb: KnowledgeBase, x: str, premises: Iterable[Fact], conclusion: Fact) -> KnowledgeBase:
    """``x`` derives ``conclusion`` from premises it already knows.

    The caller is responsible for the rule being valid; the engine only
    enforces that the premises are known and the conclusion is true.
    """
    _check_query(conclusion)
    for p in premises:
        _check_query(p)
        if kb.since(x, p) is None:
            raise PreconditionFailed(f"{x} does not know premise {p}")
    if not kb.true(conclusion):
        raise NotTrue(f"{conclusion} is false")
    kb._learn(x, conclusion)
    return kb


def publish(kb: KnowledgeBase, group: Iterable[str], atom: Atom,
            premise: Optional[Atom] = None) -> KnowledgeBase:
    """Simultaneous public announcement of a true atom to ``group``.

    Afterwards the atom is publicly certified in ``group``. With ``premise``,
    the announcement is only accepted if the premise is already publicly
    certified in the group (e.g. honesty of all nodes).
    """
    group = sorted(set(group))
    if premise is not None and not publicly_certified(kb, group, premise):
        raise PreconditionFailed(f"{premise} is not publicly certified in {group}")
    if atom not in kb.world:
        raise NotTrue(f"cannot publish false {atom}")
    for x in group:
        kb._learn(x, atom)
        for y in group:
            kb._learn(x, K(y, atom))
    return kb


def publicly_certified(kb: KnowledgeBase, group: Iterable[str], f: Fact,
                       at: Optional[int] = None) -> bool:
    return pc_gaps(kb, group, f, at, first_only=True) == []


def pc_gaps(kb: KnowledgeBase, group: Iterable[str], f: Fact, at: Optional[int] = None,
            first_only: bool = False) -> list[tuple[str, str]]:
    """Pairs ``(x, y)`` of ``group`` for which ``K_x K_y f`` does not hold."""
    if f.depth != 0:
        raise DepthExceeded("public certification is defined for atomic facts")
    group = sorted(set(group))
    gaps = []
    for x in group:
        known = kb.facts.get(x, {})
        for y in group:
            since = known.get(K(y, f))
            if since is None or (at is not None and since > at):
                gaps.append((x, y))
                if first_only:
                    return gaps
    return gaps


def extend_pc(kb: KnowledgeBase, group: Iterable[str], x: str, via: str, f: Fact,
              send_certificate: bool = True, announce: bool = True,
              strict: bool = True) -> KnowledgeBase:
    """Extend public certification of ``f`` from ``group`` to ``group + {x}``.

    ``via`` (a member of the group) first tells ``x`` that every member knows
    ``f``, then tells the group that ``x`` knows ``f``. The two flags drop
    either message for fault injection. With ``strict=False`` the
    certification precondition is not enforced and ``via`` only relays what
    it actually knows.
    """
    group = sorted(set(group))
    if via not in group:
        raise PreconditionFailed(f"{via} is not in the certified group")
    if x in group:
        raise PreconditionFailed(f"{x} is already in the group")
    if strict and not publicly_certified(kb, group, f):
        raise PreconditionFailed(f"{f} is not publicly certified in {group}")
    if send_certificate:
        for w in group:
            claim = K(w, f)
            if strict or kb.since(via, claim) is not None:
                communicate(kb, via, [x], claim)
    claim = K(x, f)
    if announce and kb.since(via, claim) is not None:
        communicate(kb, via, group, claim)
    return kb
