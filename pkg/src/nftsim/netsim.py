"""Deterministic tick-by-tick simulation of an honest node network with e-wallets.

Each tick the oldest pending request is applied to the chain (at most one
block per tick). A block carrying a token is broadcast to every node, which
makes the token publicly certified among the nodes, and each wallet owner is
then brought into the certified group through its home node using the two
messages of the PC extension protocol. ``verify_theorem1`` checks the result.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from . import epistemic as ep
from . import laws
from .ledger import Chain, dump_block, dumps_record, parse_block
from .transactions import (
    Deposit,
    Mint,
    Standard,
    Transfer,
    TransferRoyalty,
    TxError,
    TxRequest,
    Withdraw,
    apply,
    deposit,
    genesis,
    request_from_record,
    request_to_record,
)

HONESTY = ep.Atom("net-honest", "all nodes are honest and run the chain software")


class BadConfig(ValueError):
    pass


class BadSchedule(ValueError):
    pass


def token_atom(token) -> ep.Atom:
    return ep.Atom("token", token.hex())


@dataclass(frozen=True)
class Faults:
    """Test-only hooks: wallet owners whose PC-extension messages are dropped."""

    suppress_announce: frozenset = frozenset()
    suppress_certificate: frozenset = frozenset()

    def __bool__(self) -> bool:
        return bool(self.suppress_announce or self.suppress_certificate)


@dataclass(frozen=True)
class Config:
    agents: tuple[str, ...]
    nodes: tuple[str, ...]
    wallets: dict  # owner -> home node
    deposits: dict = field(default_factory=dict)
    seed: int = 0
    block_reward: int = 0
    royalty_rate: Fraction = Fraction(1, 10)
    faults: Faults = Faults()

    def to_record(self) -> dict:
        return {
            "agents": list(self.agents),
            "nodes": list(self.nodes),
            "wallets": dict(sorted(self.wallets.items())),
            "deposits": dict(sorted(self.deposits.items())),
            "seed": self.seed,
            "block_reward": self.block_reward,
            "royalty_rate": f"{self.royalty_rate.numerator}/{self.royalty_rate.denominator}",
            "faults": {
                "suppress_announce": sorted(self.faults.suppress_announce),
                "suppress_certificate": sorted(self.faults.suppress_certificate),
            },
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Config":
        try:
            faults = rec.get("faults") or {}
            return cls(
                agents=tuple(rec.get("agents", ())),
                nodes=tuple(rec.get("nodes", ())),
                wallets=dict(rec.get("wallets", {})),
                deposits=dict(rec.get("deposits", {})),
                seed=int(rec.get("seed", 0)),
                block_reward=int(rec.get("block_reward", 0)),
                royalty_rate=Fraction(rec.get("royalty_rate", "1/10")),
                faults=Faults(frozenset(faults.get("suppress_announce", ())),
                              frozenset(faults.get("suppress_certificate", ()))),
            )
        except (TypeError, ValueError, AttributeError) as exc:
            raise BadConfig(f"bad config record: {exc}") from exc


@dataclass
class TraceEvent:
    tick: int
    kind: str
    detail: dict
    digest: str = ""

    def to_record(self) -> dict:
        return {"record": "event", "tick": self.tick, "kind": self.kind,
                "detail": self.detail, "digest": self.digest}


@dataclass
class SimState:
    config: Config
    tick: int
    chain: Chain
    node_chains: dict
    kb: ep.KnowledgeBase
    pending: deque = field(default_factory=deque)
    events: list = field(default_factory=list)
    # heights[t] = chain height at the start of tick t
    heights: list = field(default_factory=list)
    submitted: list = field(default_factory=list)

    @property
    def all_agents(self) -> list[str]:
        return sorted(set(self.config.nodes) | set(self.config.agents))

    @property
    def rng_seed(self) -> int:
        return self.config.seed

    def digest(self) -> str:
        return self.events[-1].digest if self.events else hashlib.sha256(b"genesis").hexdigest()


def init(agents: Iterable[str] = (), nodes: Iterable[str] = (), wallets: Optional[dict] = None,
         deposits: Optional[dict] = None, seed: int = 0, *, block_reward: int = 0,
         royalty_rate=Fraction(1, 10), faults: Faults = Faults()) -> SimState:
    config = Config(tuple(agents), tuple(nodes), dict(wallets or {}), dict(deposits or {}),
                    seed, block_reward, Fraction(royalty_rate), faults)
    return init_from_config(config)


def init_from_config(config: Config) -> SimState:
    agents, nodes = config.agents, config.nodes
    for name, group in (("agent", agents), ("node", nodes)):
        if len(set(group)) != len(group):
            raise BadConfig(f"duplicate {name} ids")
        if any(not isinstance(a, str) or not a for a in group):
            raise BadConfig(f"{name} ids must be non-empty strings")
    if set(agents) & set(nodes):
        raise BadConfig(f"ids used for both agents and nodes: {sorted(set(agents) & set(nodes))}")
    for owner, home in config.wallets.items():
        if owner not in agents:
            raise BadConfig(f"wallet for unknown agent {owner!r}")
        if home not in nodes:
            raise BadConfig(f"wallet of {owner!r} connects to unknown node {home!r}")
    missing = [a for a in agents if a not in config.wallets]
    if missing:
        raise BadConfig(f"agents without a wallet: {missing}")
    for who, amount in config.deposits.items():
        if who not in agents and who not in nodes:
            raise BadConfig(f"deposit for unknown agent {who!r}")
        if not isinstance(amount, int) or amount < 0:
            raise BadConfig(f"deposit for {who!r} must be a non-negative integer")
    if config.block_reward < 0:
        raise BadConfig("block reward must be non-negative")
    if not 0 <= config.royalty_rate <= 1:
        raise BadConfig("royalty rate must lie in [0, 1]")

    kb = ep.KnowledgeBase()
    ep.assert_world(kb, HONESTY)
    ep.publish(kb, nodes, HONESTY)
    chain = genesis(config.deposits)
    return SimState(config, 0, chain, {n: chain for n in nodes}, kb, heights=[chain.height])


def submit(sim: SimState, request: TxRequest) -> SimState:
    sim.pending.append((sim.tick, request))
    sim.submitted.append((sim.tick, request))
    return sim


def _record_event(sim: SimState, kind: str, detail: dict) -> None:
    event = TraceEvent(sim.tick, kind, detail)
    h = hashlib.sha256(sim.digest().encode())
    h.update(dumps_record(event.to_record()).encode())
    if sim.chain.height:
        h.update(dumps_record(dump_block(sim.chain[-1])).encode())
    h.update(str(sum(len(fs) for fs in sim.kb.facts.values())).encode())
    event.digest = h.hexdigest()
    sim.events.append(event)


def _certify_token(sim: SimState, token) -> None:
    """Broadcast a token block and extend its certification to every wallet owner."""
    kb, cfg = sim.kb, sim.config
    atom = token_atom(token)
    ep.assert_world(kb, atom)
    group = set(cfg.nodes)
    if group:
        ep.publish(kb, group, atom, premise=HONESTY)
    for x in sorted(cfg.wallets):
        faulty = x in cfg.faults.suppress_announce or x in cfg.faults.suppress_certificate
        ep.extend_pc(kb, group, x, cfg.wallets[x], atom,
                     send_certificate=x not in cfg.faults.suppress_certificate,
                     announce=x not in cfg.faults.suppress_announce,
                     strict=not cfg.faults)
        if faulty:
            _record_event(sim, "fault", {"wallet": x, "token": token.hex()})
        group.add(x)


def tick(sim: SimState) -> SimState:
    cfg = sim.config
    t = sim.tick
    sim.kb.clock = t + 1
    producer = cfg.nodes[(cfg.seed + t) % len(cfg.nodes)] if cfg.nodes else None
    if sim.pending:
        submitted_at, req = sim.pending.popleft()
        rec = request_to_record(req)
        try:
            chain = apply(sim.chain, req, t)
        except TxError as err:
            _record_event(sim, "rejected", {"request": rec, "code": err.code, "producer": producer})
        else:
            sim.chain = chain
            for n in cfg.nodes:
                sim.node_chains[n] = chain
            block = chain[-1]
            if block.token is not None:
                _certify_token(sim, block.token)
            _record_event(sim, "applied", {"request": rec, "height": block.height,
                                           "producer": producer})
    elif cfg.block_reward and producer is not None:
        sim.chain = deposit(sim.chain, producer, cfg.block_reward, t)
        for n in cfg.nodes:
            sim.node_chains[n] = sim.chain
        _record_event(sim, "reward", {"producer": producer, "amount": cfg.block_reward})
    else:
        _record_event(sim, "idle", {"producer": producer})
    sim.tick = t + 1
    sim.heights.append(sim.chain.height)
    return sim


@dataclass
class Trace:
    sim: SimState
    schedule: list
    start_tick: int = 0

    @property
    def events(self) -> list[TraceEvent]:
        return self.sim.events

    @property
    def chain(self) -> Chain:
        return self.sim.chain

    def history(self) -> laws.History:
        return laws.History.from_heights(self.sim.chain, self.sim.heights)

    def digest(self) -> str:
        return self.sim.digest()


def run(sim: SimState, schedule: Sequence[tuple[int, TxRequest]], ticks: Optional[int] = None) -> Trace:
    """Feed ``schedule`` into ``sim`` and tick until it is drained.

    With ``ticks`` the run lasts exactly that many ticks instead.
    """
    schedule = list(schedule)
    times = [t for t, _ in schedule]
    if times != sorted(times):
        raise BadSchedule("schedule is not sorted by tick")
    if times and times[0] < sim.tick:
        raise BadSchedule(f"schedule starts at tick {times[0]}, simulation is at {sim.tick}")
    start = sim.tick
    queue = deque(schedule)
    while True:
        if ticks is not None:
            if sim.tick >= start + ticks:
                break
        elif not queue and not sim.pending:
            break
        while queue and queue[0][0] <= sim.tick:
            submit(sim, queue.popleft()[1])
        tick(sim)
    return Trace(sim, schedule, start)


@dataclass
class CertificationReport:
    ok: bool
    lines: list[str]
    missing: list[tuple[str, str, str]]  # (token hex, knower, known)

    def __bool__(self) -> bool:
        return self.ok


def verify_theorem1(trace: Trace) -> CertificationReport:
    """Check the fundamental ownership laws and per-token public certification.

    For every token on the final chain, every ordered pair ``(v, x)`` of agents
    must satisfy ``K_v K_x token`` from the token's time onward. Knowledge only
    grows, so checking at the token's time covers all later ticks.
    """
    lines: list[str] = []
    missing: list[tuple[str, str, str]] = []
    hist = trace.history()
    for report in laws.check_all(hist, (1, 2, 3)):
        lines += report.lines()
    sim = trace.sim
    agents = sim.all_agents
    for block in sim.chain.token_blocks():
        atom = token_atom(block.token)
        for v, x in ep.pc_gaps(sim.kb, agents, atom, at=block.time):
            missing.append((block.token.hex(), v, x))
            lines.append(f"tick={block.time} token={block.token.hex()} "
                         f"missing K[{v}]K[{x}] (agent {v} does not know that {x} knows it)")
    for n, c in sim.node_chains.items():
        if c != sim.chain:
            lines.append(f"node {n} holds a diverging chain")
    return CertificationReport(not lines, lines, missing)


# -- random workloads ---------------------------------------------------------

def random_config(rng: random.Random, seed: int = 0, faults: Faults = Faults()) -> Config:
    n_agents = rng.randint(3, 6)
    n_nodes = rng.randint(2, 4)
    agents = tuple(f"a{i}" for i in range(n_agents))
    nodes = tuple(f"n{i}" for i in range(n_nodes))
    wallets = {a: rng.choice(nodes) for a in agents}
    deposits = {a: rng.randint(0, 100) for a in agents}
    return Config(agents, nodes, wallets, deposits, seed, 0, Fraction(rng.randint(0, 20), 100), faults)


def random_schedule(rng: random.Random, config: Config, n_ops: int) -> list[tuple[int, TxRequest]]:
    """Random requests, guided by a naive shadow of ownership so that many succeed."""
    agents = list(config.agents)
    assets = [f"asset{i}" for i in range(len(agents) + 2)]
    shadow: dict[str, str] = {}
    schedule: list[tuple[int, TxRequest]] = []
    t = 0
    for i in range(n_ops):
        t += rng.choice((0, 0, 1, 1, 1, 2))
        roll = rng.random()
        if i == 0 or roll < 0.2:
            asset = rng.choice(assets) if shadow else assets[0]
            orig = rng.choice(agents)
            shadow.setdefault(asset, orig)
            req: TxRequest = Mint(orig, asset)
        elif roll < 0.35:
            req = Deposit(rng.choice(agents), rng.randint(0, 80))
        elif roll < 0.5:
            req = Standard(rng.choice(agents), rng.choice(agents), rng.randint(0, 40))
        elif roll < 0.55:
            req = Withdraw(rng.choice(agents), rng.randint(0, 30))
        else:
            if shadow and rng.random() < 0.85:
                asset = rng.choice(sorted(shadow))
                old = shadow[asset]
            else:
                asset, old = rng.choice(assets), rng.choice(agents)
            new = rng.choice(agents)
            cost = rng.randint(0, 50)
            if roll < 0.78:
                req = Transfer(old, new, asset, cost)
            else:
                req = TransferRoyalty(old, new, asset, cost, Fraction(rng.randint(0, 100), 100))
            shadow[asset] = new
        schedule.append((t, req))
    return schedule


def generate(seed: int, max_ops: int = 100, faults: Optional[Faults] = None) -> tuple[Config, list]:
    """Reproducible random (config, schedule) pair for ``seed``.

    With ``faults=None`` the run is fault-free; pass ``Faults`` to inject.
    """
    rng = random.Random(seed)
    config = random_config(rng, seed, faults or Faults())
    schedule = random_schedule(rng, config, rng.randint(1, max_ops))
    return config, schedule


def simulate(config: Config, schedule: Sequence[tuple[int, TxRequest]],
             ticks: Optional[int] = None) -> Trace:
    return run(init_from_config(config), schedule, ticks)


# -- persistence --------------------------------------------------------------

def trace_lines(trace: Trace) -> list[str]:
    out = [dumps_record({"record": "header", "config": trace.sim.config.to_record(),
                         "start_tick": trace.start_tick, "ticks": trace.sim.tick - trace.start_tick})]
    for t, req in trace.schedule:
        out.append(dumps_record({"record": "request", "tick": t, **request_to_record(req)}))
    for event in trace.events:
        out.append(dumps_record(event.to_record()))
    for block in trace.chain:
        out.append(dumps_record({"record": "block", **dump_block(block)}))
    return out


def save_trace(trace: Trace, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in trace_lines(trace):
            fh.write(line + "\n")


@dataclass
class StoredTrace:
    config: Config
    schedule: list
    ticks: int
    events: list
    blocks: list

    def chain(self) -> Chain:
        return Chain(self.blocks)


def load_trace(path: Union[str, Path]) -> StoredTrace:
    header = None
    schedule, events, blocks = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                kind = rec.pop("record")
            except (json.JSONDecodeError, KeyError, AttributeError) as exc:
                raise BadSchedule(f"line {lineno}: not a trace record") from exc
            if kind == "header":
                header = rec
            elif kind == "request":
                schedule.append((rec["tick"], request_from_record(rec)))
            elif kind == "event":
                events.append(TraceEvent(rec["tick"], rec["kind"], rec["detail"], rec["digest"]))
            elif kind == "block":
                blocks.append(parse_block(rec))
            else:
                raise BadSchedule(f"line {lineno}: unknown record {kind!r}")
    if header is None:
        raise BadSchedule("trace has no header")
    return StoredTrace(Config.from_record(header["config"]), schedule, header["ticks"], events, blocks)


def replay(stored: StoredTrace) -> Trace:
    """Re-run a stored trace from its config and schedule."""
    return simulate(stored.config, stored.schedule, stored.ticks)


def load_schedule(path: Union[str, Path]) -> list[tuple[int, TxRequest]]:
    schedule = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                schedule.append((int(rec["tick"]), request_from_record(rec)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise BadSchedule(f"line {lineno}: {exc}") from exc
    return schedule


def load_config(path: Union[str, Path]) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            rec = json.load(fh)
    except json.JSONDecodeError as exc:
        raise BadConfig(f"{path}: {exc}") from exc
    return Config.from_record(rec)
