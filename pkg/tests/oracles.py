"""Brute-force reference computations, independent of the package's indexes.

Everything here rescans raw block payloads; nothing calls the ledger queries.
"""

from nftsim.ledger import MintRecord, StandardTx, TransferRecord, decode_token


def payments(blocks):
    for block in blocks:
        p = block.payload
        if isinstance(p, StandardTx):
            yield p
        elif isinstance(p, TransferRecord):
            yield from p.txs


def tokens(blocks):
    for block in blocks:
        p = block.payload
        if isinstance(p, (MintRecord, TransferRecord)):
            yield decode_token(p.token.bits), isinstance(p, MintRecord)


def scan_balance(blocks, agent):
    sales = sum(tx.cost for tx in payments(blocks) if tx.seller == agent)
    purchases = sum(tx.cost for tx in payments(blocks) if tx.buyer == agent)
    return sales - purchases


def scan_owner_list(blocks, asset):
    return [a for (a, x, _), _ in tokens(blocks) if x == asset]


def scan_existing(blocks, t):
    return {x for (_, x, u), is_mint in tokens(blocks) if is_mint and u <= t}


def scan_owner_at(blocks, asset, t):
    """Owns(., asset, t): the agent named by the latest token for asset with time <= t."""
    owner = None
    for (a, x, u), _ in tokens(blocks):
        if x == asset and u <= t:
            owner = a
    return owner


def scan_agents(blocks):
    out = set()
    for tx in payments(blocks):
        out.update(p for p in (tx.buyer, tx.seller) if p is not None)
    for (a, _, _), _ in tokens(blocks):
        out.add(a)
    return out


def scan_assets(blocks):
    return {x for (_, x, _), _ in tokens(blocks)}


def pc_by_pairs(kb, group, atom):
    """K_x K_y atom for every ordered pair, read straight from the fact tables."""
    from nftsim.epistemic import Knows

    return all(Knows(y, atom) in kb.facts.get(x, {}) for x in group for y in group)
