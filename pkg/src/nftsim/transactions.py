"""State transitions on the chain: mint, standard payment, transfer, royalty transfer.

Every operation takes the chain and the current tick ``t`` and either returns
a new chain with exactly one appended block stamped ``t + 1`` or raises
``TxError``. The input chain is never modified.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .ledger import (
    Chain,
    MintRecord,
    StandardTx,
    TransferRecord,
    balance,
    current_owner,
    encode_token,
    existing_assets,
    originator,
)

ALREADY_OWNED = "AlreadyOwned"
NOT_OWNER = "NotOwner"
INSUFFICIENT_FUNDS = "InsufficientFunds"
UNKNOWN_ASSET = "UnknownAsset"


class TxError(Exception):
    """A rejected request. ``code`` is one of the module-level error codes."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


def _check_time(chain: Chain, t: int) -> None:
    if t < 0:
        raise ValueError(f"negative tick {t}")
    if chain.height and t < chain.last_time:
        raise ValueError(f"tick {t} precedes the chain tip (time {chain.last_time})")


def _check_cost(c: int) -> None:
    if not isinstance(c, int) or isinstance(c, bool) or c < 0:
        raise ValueError(f"cost must be a non-negative integer, got {c!r}")


def royalty_amount(c: int, rate) -> int:
    """floor(c * rate) for a rational ``rate`` in [0, 1]."""
    rate = Fraction(rate)
    if not 0 <= rate <= 1:
        raise ValueError(f"royalty rate {rate} outside [0, 1]")
    return (c * rate.numerator) // rate.denominator


def genesis(deposits: Optional[dict[str, int]] = None) -> Chain:
    """Chain of time-0 deposit blocks, one per agent, in sorted agent order."""
    chain = Chain()
    for agent in sorted(deposits or {}):
        amount = deposits[agent]
        _check_cost(amount)
        if amount:
            chain = chain.append(StandardTx(None, agent, amount, 0))
    return chain


def deposit(chain: Chain, u: str, c: int, t: int) -> Chain:
    """Credit ``u`` with ``c`` from outside the chain. Always accepted."""
    _check_time(chain, t)
    _check_cost(c)
    return chain.append(StandardTx(None, u, c, t + 1))


def withdraw(chain: Chain, u: str, c: int, t: int) -> Chain:
    _check_time(chain, t)
    _check_cost(c)
    if balance(chain, u) < c:
        raise TxError(INSUFFICIENT_FUNDS, f"{u} holds {balance(chain, u)}, needs {c}")
    return chain.append(StandardTx(u, None, c, t + 1))


def mint(chain: Chain, orig: str, asset: str, t: int) -> Chain:
    _check_time(chain, t)
    # no agent has owned the asset at any u <= t
    if asset in existing_assets(chain) or current_owner(chain, asset) is not None:
        raise TxError(ALREADY_OWNED, f"{asset} is already owned")
    return chain.append(MintRecord(encode_token(orig, asset, t + 1)))


def standard_tx(chain: Chain, b: str, s: str, c: int, t: int) -> Chain:
    _check_time(chain, t)
    _check_cost(c)
    if balance(chain, b) < c:
        raise TxError(INSUFFICIENT_FUNDS, f"{b} holds {balance(chain, b)}, needs {c}")
    return chain.append(StandardTx(b, s, c, t + 1))


def _transfer_precondition(chain: Chain, old: str, new: str, asset: str, c: int) -> None:
    owner = current_owner(chain, asset)
    if owner is None or owner != old:
        raise TxError(NOT_OWNER, f"{old} does not own {asset} (owner: {owner})")
    if balance(chain, new) < c:
        raise TxError(INSUFFICIENT_FUNDS, f"{new} holds {balance(chain, new)}, needs {c}")


def ownership_tx(chain: Chain, old: str, new: str, asset: str, c: int, t: int) -> Chain:
    _check_time(chain, t)
    _check_cost(c)
    _transfer_precondition(chain, old, new, asset, c)
    token = encode_token(new, asset, t + 1)
    return chain.append(TransferRecord(token, (StandardTx(new, old, c, t + 1),)))


def ownership_tx_royalty(chain: Chain, old: str, new: str, asset: str, c: int, rate, t: int) -> Chain:
    """Transfer with a royalty leg to the asset's originator.

    The royalty is ``floor(c * rate)``; ``old`` receives the remainder. Legs
    are stored as (old-leg, originator-leg).
    """
    _check_time(chain, t)
    _check_cost(c)
    royalty = royalty_amount(c, rate)
    _transfer_precondition(chain, old, new, asset, c)
    orig = originator(chain, asset)
    token = encode_token(new, asset, t + 1)
    legs = (StandardTx(new, old, c - royalty, t + 1), StandardTx(new, orig, royalty, t + 1))
    return chain.append(TransferRecord(token, legs))


# -- requests -----------------------------------------------------------------

@dataclass(frozen=True)
class Mint:
    orig: str
    asset: str


@dataclass(frozen=True)
class Standard:
    buyer: str
    seller: str
    cost: int


@dataclass(frozen=True)
class Transfer:
    old: str
    new: str
    asset: str
    cost: int


@dataclass(frozen=True)
class TransferRoyalty:
    old: str
    new: str
    asset: str
    cost: int
    rate: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rate", Fraction(self.rate))
        if not 0 <= self.rate <= 1:
            raise ValueError(f"royalty rate {self.rate} outside [0, 1]")


@dataclass(frozen=True)
class Deposit:
    agent: str
    amount: int


@dataclass(frozen=True)
class Withdraw:
    agent: str
    amount: int


TxRequest = Union[Mint, Standard, Transfer, TransferRoyalty, Deposit, Withdraw]

_KINDS = {
    "mint": Mint,
    "standard": Standard,
    "transfer": Transfer,
    "transfer_royalty": TransferRoyalty,
    "deposit": Deposit,
    "withdraw": Withdraw,
}
_NAMES = {cls: name for name, cls in _KINDS.items()}


def apply(chain: Chain, req: TxRequest, t: int) -> Chain:
    """Dispatch ``req`` to its operation at tick ``t``."""
    if isinstance(req, Mint):
        return mint(chain, req.orig, req.asset, t)
    if isinstance(req, Standard):
        return standard_tx(chain, req.buyer, req.seller, req.cost, t)
    if isinstance(req, Transfer):
        return ownership_tx(chain, req.old, req.new, req.asset, req.cost, t)
    if isinstance(req, TransferRoyalty):
        return ownership_tx_royalty(chain, req.old, req.new, req.asset, req.cost, req.rate, t)
    if isinstance(req, Deposit):
        return deposit(chain, req.agent, req.amount, t)
    if isinstance(req, Withdraw):
        return withdraw(chain, req.agent, req.amount, t)
    raise TypeError(f"not a request: {req!r}")


def request_to_record(req: TxRequest) -> dict:
    rec = {"kind": _NAMES[type(req)]}
    for name, value in vars(req).items():
        rec[name] = f"{value.numerator}/{value.denominator}" if isinstance(value, Fraction) else value
    return rec


def request_from_record(rec: dict) -> TxRequest:
    rec = dict(rec)
    try:
        cls = _KINDS[rec.pop("kind")]
    except KeyError as exc:
        raise ValueError(f"unknown request kind in {rec!r}") from exc
    rec.pop("tick", None)
    if cls is TransferRoyalty:
        rec["rate"] = Fraction(rec["rate"])
    return cls(**rec)


# -- validation ---------------------------------------------------------------

def validate_chain(chain: Chain) -> list[tuple[int, str]]:
    """Replay ``chain`` from genesis and re-check every block's precondition.

    Returns ``(height, reason)`` for each block that would have been
    rejected. Royalty legs are accepted in either order.
    """
    problems: list[tuple[int, str]] = []
    prefix = Chain()
    last_time = 0
    for block in chain:
        p = block.payload
        h = block.height
        if block.time < last_time:
            problems.append((h, f"time {block.time} precedes {last_time}"))
        if block.has_token != (not isinstance(p, StandardTx)):
            problems.append((h, "header token flag disagrees with payload"))
        if isinstance(p, StandardTx):
            if p.time == 0 and p.buyer is not None:
                problems.append((h, "only deposits may appear at time 0"))
            elif p.time > 0 and p.time == last_time:
                problems.append((h, "second block in one tick"))
            if p.buyer is not None and balance(prefix, p.buyer) < p.cost:
                problems.append((h, f"{p.buyer} cannot afford {p.cost}"))
        elif isinstance(p, MintRecord):
            agent, asset, t = p.token.decode()
            if p.time == last_time and h:
                problems.append((h, "second block in one tick"))
            if asset in existing_assets(prefix) or current_owner(prefix, asset) is not None:
                problems.append((h, f"{asset} minted while owned"))
        else:
            new, asset, t = p.token.decode()
            if p.time == last_time and h:
                problems.append((h, "second block in one tick"))
            old = current_owner(prefix, asset)
            orig = originator(prefix, asset)
            if old is None:
                problems.append((h, f"transfer of unowned {asset}"))
            total = sum(tx.cost for tx in p.txs)
            if any(tx.buyer != new or tx.time != t for tx in p.txs):
                problems.append((h, "payment legs do not match the token"))
            if balance(prefix, new) < total:
                problems.append((h, f"{new} cannot afford {total}"))
            sellers = [tx.seller for tx in p.txs]
            if old is not None:
                if len(sellers) == 1 and sellers != [old]:
                    problems.append((h, f"payment goes to {sellers[0]}, not owner {old}"))
                if len(sellers) == 2 and sellers not in ([old, orig], [orig, old]):
                    problems.append((h, f"royalty legs pay {sellers}, expected {old} and {orig}"))
            if len(sellers) not in (1, 2):
                problems.append((h, f"{len(sellers)} payment legs"))
        last_time = max(last_time, block.time)
        prefix = prefix.append(p)
    return problems
