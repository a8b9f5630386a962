"""Deliberately broken histories, one per ownership law.

Each builder takes a clean simulator trace and returns a ``History`` that
violates the law it is named after. Other laws may fire as collateral.
"""

from nftsim import netsim
from nftsim.laws import History
from nftsim.ledger import Block, Chain, MintRecord, StandardTx, TransferRecord, encode_token


def base_trace(seed=None):
    """A clean trace with one never-transferred asset and one asset sold twice."""
    seeds = [seed] if seed is not None else range(500)
    for s in seeds:
        config, schedule = netsim.generate(s)
        trace = netsim.simulate(config, schedule)
        chain = trace.chain
        counts = {}
        for b in chain.token_blocks():
            counts.setdefault(b.token.asset, []).append(b.token.agent)
        untouched = [a for a, owners in counts.items() if len(owners) == 1]
        sold = [a for a, owners in counts.items() if len(owners) >= 3 and owners[0] != owners[1]]
        if untouched and sold:
            return trace, untouched[0], sold[0]
    raise LookupError("no suitable seed")


def _rebuild(blocks):
    return Chain(Block(h, b.payload, b.has_token) for h, b in enumerate(blocks))


def _index(chain, pred):
    return next(h for h, b in enumerate(chain.blocks) if pred(b))


def _split_history(old, new, heights, h):
    """Snapshots switch from ``old`` to ``new`` one tick after block ``h`` appears.

    One extra tick is appended so that the switch always happens.
    """
    heights = list(heights) + [heights[-1]]
    cut = min(_tick_of_height(heights, h) + 1, len(heights) - 1)
    return History([(old if t < cut else new).prefix(n) for t, n in enumerate(heights)])


def _tick_of_height(heights, h):
    """First tick whose snapshot contains block ``h``."""
    return next(t for t, n in enumerate(heights) if n > h)


def drop_token_flag(trace, asset):
    """Law 1: the header of the asset's mint block no longer advertises a token."""
    chain = trace.chain
    h = _index(chain, lambda b: isinstance(b.payload, MintRecord) and b.token.asset == asset)
    blocks = list(chain.blocks)
    blocks[h] = Block(h, blocks[h].payload, has_token=False)
    return History.from_heights(Chain(blocks), trace.sim.heights)


def double_mint(trace, asset):
    """Law 2: a second mint of an existing asset by someone else."""
    chain = trace.chain
    first = next(b.token for b in chain.token_blocks() if b.token.asset == asset)
    t = chain.last_time + 1
    forged = chain.append(MintRecord(encode_token(first.agent + "-rival", asset, t)))
    return History.from_chain(forged)


def ghost_transfer(trace):
    """Law 3: a transfer token for an asset that was never minted."""
    chain = trace.chain
    t = chain.last_time + 1
    tok = encode_token("nobody", "ghost-asset", t)
    forged = chain.append(TransferRecord(tok, (StandardTx("nobody", "nobody", 0, t),)))
    return History.from_chain(forged)


def rollback(trace, asset):
    """Law 4: one snapshot reverts to a chain from before the asset's mint."""
    chain, heights = trace.chain, trace.sim.heights
    h = _index(chain, lambda b: isinstance(b.payload, MintRecord) and b.token.asset == asset)
    snaps = [chain.prefix(n) for n in heights]
    snaps.append(chain.prefix(h))  # the tick after the tip forgets the mint
    return History(snaps)


def erase_transfer(trace, asset):
    """Law 5: a transfer block is rewritten as a plain payment in later snapshots."""
    chain, heights = trace.chain, trace.sim.heights
    h = _index(chain, lambda b: isinstance(b.payload, TransferRecord) and b.token.asset == asset)
    blocks = list(chain.blocks)
    blocks[h] = Block(h, blocks[h].payload.txs[0])
    return _split_history(chain, _rebuild(blocks), heights, h)


def swap_owners(trace, asset):
    """Law 6: two token blocks of one asset trade places in later snapshots."""
    chain, heights = trace.chain, trace.sim.heights
    hs = [h for h, b in enumerate(chain.blocks) if b.token is not None and b.token.asset == asset]
    i, j = hs[0], hs[1]
    blocks = list(chain.blocks)
    blocks[i], blocks[j] = blocks[j], blocks[i]
    return _split_history(chain, _rebuild(blocks), heights, j)


def all_mutants(trace, untouched, sold):
    return {
        1: drop_token_flag(trace, untouched),
        2: double_mint(trace, untouched),
        3: ghost_transfer(trace),
        4: rollback(trace, untouched),
        5: erase_transfer(trace, sold),
        6: swap_owners(trace, sold),
    }
