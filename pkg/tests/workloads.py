"""Random reachable knowledge bases and small fixed epistemic scenarios."""

import itertools
import random

from nftsim import epistemic as ep

AGENTS = tuple(f"x{i}" for i in range(5))
ATOMS = tuple(ep.Atom("p", str(i)) for i in range(3))
FALSE_ATOM = ep.Atom("q", "never true")


def random_kb(rng: random.Random, steps: int = 25, on_step=None) -> ep.KnowledgeBase:
    """Apply random legal events to a fresh knowledge base.

    ``on_step(kb)`` is called after every event.
    """
    kb = ep.KnowledgeBase()
    for a in ATOMS:
        ep.assert_world(kb, a)
    for i in range(steps):
        kb.clock = i
        roll = rng.random()
        atom = rng.choice(ATOMS)
        if roll < 0.3:
            ep.observe(kb, rng.choice(AGENTS), atom)
        elif roll < 0.6:
            sender = rng.choice(AGENTS)
            known = sorted(kb.facts.get(sender, {}), key=str)
            if known:
                f = rng.choice(known)
                if f.depth < 2:
                    receivers = rng.sample(AGENTS, rng.randint(1, 3))
                    ep.communicate(kb, sender, receivers, f, acknowledged=rng.random() < 0.5)
        elif roll < 0.8:
            ep.publish(kb, rng.sample(AGENTS, rng.randint(1, 4)), atom)
        else:
            groups = [set(g) for g in subsets(AGENTS) if 0 < len(g) < len(AGENTS)
                      and ep.publicly_certified(kb, g, atom)]
            if groups:
                group = rng.choice(sorted(groups, key=sorted))
                x = rng.choice(sorted(set(AGENTS) - group))
                ep.extend_pc(kb, group, x, rng.choice(sorted(group)), atom)
        if on_step is not None:
            on_step(kb)
    return kb


def subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def extended_pair_kb(send_certificate=True, announce=True):
    """Two nodes sharing a publicly certified atom, extended to a third agent."""
    f = ep.Atom("fact", "phi")
    kb = ep.KnowledgeBase()
    ep.assert_world(kb, f)
    ep.publish(kb, ["n1", "n2"], f)
    ep.extend_pc(kb, ["n1", "n2"], "x", "n1", f, send_certificate=send_certificate,
                 announce=announce, strict=False)
    return kb, f
