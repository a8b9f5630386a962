"""Serving legal notice: five service methods as knowledge-event scenarios.

Each method is played out as a sequence of events on a knowledge base, and
the four service properties are then read back by querying it:

    a  recipient knows the method carries the court's authority
    b  court knows the recipient has been served
    c  recipient knows the court knows that
    d  court knows the service was private: nobody but the recipient
       (and the court) learns of it

Method ``epsilon`` (NFT to an e-wallet) runs the real network simulation;
nothing in its row is hard-coded.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import epistemic as ep
from . import netsim
from .transactions import Mint, Transfer


class Method(enum.Enum):
    ALPHA = "alpha"      # officer of the court, in person
    BETA = "beta"        # registered post
    GAMMA = "gamma"      # e-mail
    DELTA = "delta"      # newspaper publication
    EPSILON = "epsilon"  # NFT to an e-wallet

    @property
    def symbol(self) -> str:
        return {"alpha": "α", "beta": "β", "gamma": "γ", "delta": "δ", "epsilon": "ε"}[self.value]


class BadScenario(ValueError):
    pass


@dataclass(frozen=True)
class NoticeScenario:
    method: Method
    court: str = "cc"
    recipient: str = "rr"
    population: tuple[str, ...] = ("cc", "rr", "p1", "p2")
    notice: str = "nn"
    email_delivered: bool = True
    # epsilon only: extra requests run alongside the service, and a hook that
    # drops the PC-extension messages of every wallet
    background: tuple = ()
    suppress_pc_extension: bool = False

    def validate(self) -> None:
        if self.court == self.recipient:
            raise BadScenario("court and recipient must differ")
        if self.court not in self.population or self.recipient not in self.population:
            raise BadScenario("court and recipient must belong to the population")
        if len(set(self.population)) != len(self.population):
            raise BadScenario("duplicate population members")
        if not self.notice:
            raise BadScenario("notice id must be non-empty")

    # the statements the properties talk about
    @property
    def phi0(self) -> ep.Atom:
        return ep.Atom("phi0", f"{self.court} has authority")

    @property
    def phi1(self) -> ep.Atom:
        return ep.Atom("phi1", f"notice = {self.notice}")

    @property
    def phi2(self) -> ep.Atom:
        return ep.Atom("phi2", f"the serving method has the authority of {self.court}")

    @property
    def phi3(self) -> ep.Atom:
        return ep.Atom("phi3", f"{self.recipient} has been served with {self.notice}")

    @property
    def private(self) -> ep.Atom:
        return ep.Atom("private", f"{self.notice} reaches only {self.recipient}")


@dataclass
class PropertyProfile:
    a: bool
    b: bool
    c: bool
    d: bool
    warnings: tuple[str, ...] = ()

    def row(self) -> tuple[bool, bool, bool, bool]:
        return (self.a, self.b, self.c, self.d)


@dataclass
class NoticeTrace:
    scenario: NoticeScenario
    kb: ep.KnowledgeBase
    events: list[str] = field(default_factory=list)
    sim: Optional[netsim.Trace] = None
    warnings: tuple[str, ...] = ()

    @classmethod
    def empty(cls, scenario: NoticeScenario) -> "NoticeTrace":
        return cls(scenario, ep.KnowledgeBase())


class _Log:
    """Thin recorder around the engine calls so each trace lists its events."""

    def __init__(self, kb: ep.KnowledgeBase):
        self.kb = kb
        self.events: list[str] = []

    def fact(self, atom):
        ep.assert_world(self.kb, atom)
        self.events.append(f"world {atom}")

    def observe(self, x, atom):
        ep.observe(self.kb, x, atom)
        self.events.append(f"{x} observes {atom}")

    def send(self, sender, receivers, f, acknowledged=True):
        ep.communicate(self.kb, sender, receivers, f, acknowledged)
        ack = "acknowledged" if acknowledged else "unacknowledged"
        self.events.append(f"{sender} -> {sorted(receivers)} {ack}: {f}")

    def publish(self, group, atom):
        ep.publish(self.kb, group, atom)
        self.events.append(f"publish to {sorted(group)}: {atom}")

    def infer(self, x, premises, conclusion) -> bool:
        try:
            ep.infer(self.kb, x, premises, conclusion)
        except ep.EpistemicError:
            self.events.append(f"{x} cannot infer {conclusion}")
            return False
        self.events.append(f"{x} infers {conclusion}")
        return True


def _setup(log: _Log, s: NoticeScenario) -> None:
    # a working court system: its authority is publicly certified
    log.fact(s.phi0)
    log.publish(s.population, s.phi0)
    log.fact(s.phi1)
    log.observe(s.court, s.phi1)


def _serve_alpha(log: _Log, s: NoticeScenario) -> None:
    cc, rr = s.court, s.recipient
    # the officer acts for the court and shows a credential signed by it
    log.fact(s.phi2)
    log.observe(cc, s.phi2)
    log.send(cc, [rr], s.phi2)
    log.send(cc, [rr], s.phi1)
    # hand-over in person, witnessed by both and mutually acknowledged
    log.fact(s.phi3)
    log.observe(cc, s.phi3)
    log.observe(rr, s.phi3)
    log.send(cc, [rr], s.phi3)
    log.fact(s.private)
    log.observe(cc, s.private)


def _serve_beta(log: _Log, s: NoticeScenario) -> None:
    cc, rr = s.court, s.recipient
    post = ep.Atom("registered-post", "the registered post system is reliable")
    log.fact(post)
    log.publish(s.population, post)
    # delivery reveals the sender
    log.fact(s.phi2)
    log.observe(rr, s.phi2)
    log.send(cc, [rr], s.phi1)
    log.fact(s.phi3)
    log.observe(rr, s.phi3)
    # signed receipt goes on record with the court
    log.send(rr, [cc], s.phi3)
    log.fact(s.private)
    log.observe(cc, s.private)


def _serve_gamma(log: _Log, s: NoticeScenario) -> None:
    cc, rr = s.court, s.recipient
    # signed by the court and encrypted to the recipient: only rr can read it
    log.fact(s.private)
    log.observe(cc, s.private)
    if not s.email_delivered:
        log.events.append("mail delayed in transit")
    log.send(cc, [rr], s.phi1, acknowledged=False)
    log.fact(s.phi2)
    log.observe(rr, s.phi2)
    log.fact(s.phi3)
    log.observe(rr, s.phi3)
    # no receipt ever reaches the court


def _serve_delta(log: _Log, s: NoticeScenario) -> None:
    log.fact(ep.Atom("publication", s.notice))
    log.events.append("notice printed; no one is addressed")


EPSILON_QUALIFICATION = (
    "served on the e-wallet: the human holder(s) of the wallet key are not identified"
)


def _serve_epsilon(s: NoticeScenario) -> NoticeTrace:
    cc, rr = s.court, s.recipient
    nodes = ("node0", "node1")
    agents = tuple(s.population)
    wallets = {a: nodes[i % len(nodes)] for i, a in enumerate(agents)}
    faults = netsim.Faults(frozenset(agents), frozenset(agents)) if s.suppress_pc_extension else netsim.Faults()
    sim = netsim.init(agents, nodes, wallets, faults=faults)
    log = _Log(sim.kb)
    _setup(log, s)
    schedule = sorted([(0, Mint(cc, s.notice)), (1, Transfer(cc, rr, s.notice, 0))]
                      + list(s.background), key=lambda item: item[0])
    trace = netsim.run(sim, schedule)
    log.events += [f"tick {e.tick}: {e.kind} {e.detail}" for e in trace.events]

    tokens = [b.token for b in trace.chain.token_blocks() if b.token.asset == s.notice]
    if len(tokens) < 2 or tokens[0].agent != cc or tokens[-1].agent != rr:
        raise BadScenario(f"notice {s.notice} did not reach {rr} through the chain")
    minted = netsim.token_atom(tokens[0])
    delivered = netsim.token_atom(tokens[-1])

    # only the wallet of rr can decrypt the notice the token carries
    log.infer(rr, [delivered], s.phi1)
    log.fact(s.phi2)
    log.infer(rr, [s.phi0, minted], s.phi2)
    log.fact(s.phi3)
    log.infer(cc, [delivered, s.phi1], s.phi3)
    log.infer(rr, [delivered, s.phi1], s.phi3)
    log.infer(rr, [ep.Knows(cc, delivered), ep.Knows(cc, minted)], ep.Knows(cc, s.phi3))
    log.fact(s.private)
    log.observe(cc, s.private)
    return NoticeTrace(s, sim.kb, log.events, trace, (EPSILON_QUALIFICATION,))


_SERVERS: dict[Method, Callable[[_Log, NoticeScenario], None]] = {
    Method.ALPHA: _serve_alpha,
    Method.BETA: _serve_beta,
    Method.GAMMA: _serve_gamma,
    Method.DELTA: _serve_delta,
}


def serve(scenario: NoticeScenario) -> NoticeTrace:
    scenario.validate()
    if scenario.method is Method.EPSILON:
        return _serve_epsilon(scenario)
    if scenario.background or scenario.suppress_pc_extension:
        raise BadScenario("background traffic and fault hooks apply to epsilon only")
    log = _Log(ep.KnowledgeBase())
    _setup(log, scenario)
    _SERVERS[scenario.method](log, scenario)
    return NoticeTrace(scenario, log.kb, log.events)


def evaluate_properties(trace: NoticeTrace, scenario: Optional[NoticeScenario] = None) -> PropertyProfile:
    s = scenario or trace.scenario
    kb = trace.kb
    cc, rr = s.court, s.recipient
    a = ep.knows(kb, rr, s.phi2)
    b = ep.knows(kb, cc, s.phi3)
    c = ep.knows(kb, rr, ep.Knows(cc, s.phi3))
    # exhaustive over everyone the engine has heard of, not a sample
    everyone = set(s.population) | set(kb.agents())
    others_ignorant = all(not ep.knows(kb, x, s.phi3) for x in everyone - {rr, cc})
    d = others_ignorant and ep.knows(kb, cc, s.private)
    return PropertyProfile(a, b, c, d, trace.warnings)


def default_scenario(method: Method) -> NoticeScenario:
    return NoticeScenario(method)


def method_table(scenario_factory: Callable[[Method], NoticeScenario] = default_scenario
                 ) -> dict[Method, PropertyProfile]:
    return {m: evaluate_properties(serve(scenario_factory(m))) for m in Method}


def format_table(table: dict[Method, PropertyProfile]) -> str:
    lines = ["method  (a) (b) (c) (d)"]
    for m in Method:
        row = table[m]
        marks = "   ".join("✓" if v else "✗" for v in row.row())
        lines.append(f"{m.symbol:<7} {marks}")
    return "\n".join(lines)


def format_profile(method: Method, profile: PropertyProfile) -> str:
    out = [f"{m}: {'✓' if v else '✗'}" for m, v in zip("abcd", profile.row())]
    text = f"{method.symbol} ({method.value})  " + "  ".join(out)
    for w in profile.warnings:
        text += f"\n  note: {w}"
    return text
